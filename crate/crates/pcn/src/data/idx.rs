//! IDX tensor files (the MNIST/FashionMNIST on-disk format).
//!
//! Big-endian magic, dimension sizes, then the raw u8 payload:
//! `0x00000803` for count × rows × cols image tensors, `0x00000801` for
//! label vectors.

use std::path::Path;

use sha2::{Digest, Sha256};

use super::Dataset;
use crate::numerics::Matrix;
use crate::{PcnError, Result};

const MAGIC_IMAGES: u32 = 0x0000_0803;
const MAGIC_LABELS: u32 = 0x0000_0801;

/// A parsed IDX file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdxTensor {
    Images { count: usize, rows: usize, cols: usize, pixels: Vec<u8> },
    Labels { labels: Vec<u8> },
}

/// Parse IDX bytes. Errors carry the byte offset where parsing failed.
pub fn parse_idx(bytes: &[u8]) -> Result<IdxTensor> {
    let magic = read_be(bytes, 0, "magic")?;
    match magic {
        MAGIC_IMAGES => {
            let count = read_be(bytes, 4, "image count")? as usize;
            let rows = read_be(bytes, 8, "row count")? as usize;
            let cols = read_be(bytes, 12, "column count")? as usize;
            let want = count
                .checked_mul(rows)
                .and_then(|v| v.checked_mul(cols))
                .ok_or_else(|| PcnError::Format {
                    offset: 4,
                    what: "image dimensions overflow".into(),
                })?;
            let payload = &bytes[16.min(bytes.len())..];
            if payload.len() != want {
                return Err(PcnError::Format {
                    offset: 16 + payload.len().min(want) as u64,
                    what: format!(
                        "image payload has {} bytes, header promises {want}",
                        payload.len()
                    ),
                });
            }
            Ok(IdxTensor::Images { count, rows, cols, pixels: payload.to_vec() })
        }
        MAGIC_LABELS => {
            let count = read_be(bytes, 4, "label count")? as usize;
            let payload = &bytes[8.min(bytes.len())..];
            if payload.len() != count {
                return Err(PcnError::Format {
                    offset: 8 + payload.len().min(count) as u64,
                    what: format!("label payload has {} bytes, header promises {count}", payload.len()),
                });
            }
            Ok(IdxTensor::Labels { labels: payload.to_vec() })
        }
        other => Err(PcnError::Format {
            offset: 0,
            what: format!("unrecognized IDX magic {other:#010x}"),
        }),
    }
}

/// Serialize a tensor back to IDX bytes; `parse_idx(serialize_idx(t)) == t`.
pub fn serialize_idx(tensor: &IdxTensor) -> Vec<u8> {
    match tensor {
        IdxTensor::Images { count, rows, cols, pixels } => {
            debug_assert_eq!(pixels.len(), count * rows * cols);
            let mut out = Vec::with_capacity(16 + pixels.len());
            out.extend_from_slice(&MAGIC_IMAGES.to_be_bytes());
            out.extend_from_slice(&(*count as u32).to_be_bytes());
            out.extend_from_slice(&(*rows as u32).to_be_bytes());
            out.extend_from_slice(&(*cols as u32).to_be_bytes());
            out.extend_from_slice(pixels);
            out
        }
        IdxTensor::Labels { labels } => {
            let mut out = Vec::with_capacity(8 + labels.len());
            out.extend_from_slice(&MAGIC_LABELS.to_be_bytes());
            out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
            out.extend_from_slice(labels);
            out
        }
    }
}

fn read_be(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    if bytes.len() < offset + 4 {
        return Err(PcnError::Format {
            offset: bytes.len() as u64,
            what: format!("truncated while reading {what}"),
        });
    }
    Ok(u32::from_be_bytes(bytes[offset..offset + 4].try_into().unwrap()))
}

/// Load an image/label IDX file pair as a classification dataset with
/// pixels scaled to `[0, 1]` and a sha256-based source checksum.
pub fn load_idx_classification(
    name: impl Into<String>,
    images_path: &Path,
    labels_path: &Path,
    classes: usize,
) -> Result<Dataset> {
    let image_bytes = std::fs::read(images_path)?;
    let label_bytes = std::fs::read(labels_path)?;
    let images = parse_idx(&image_bytes)?;
    let labels = parse_idx(&label_bytes)?;
    let (count, rows, cols, pixels) = match images {
        IdxTensor::Images { count, rows, cols, pixels } => (count, rows, cols, pixels),
        IdxTensor::Labels { .. } => {
            return Err(PcnError::Format {
                offset: 0,
                what: format!("{} holds labels, expected images", images_path.display()),
            })
        }
    };
    let label_values = match labels {
        IdxTensor::Labels { labels } => labels,
        IdxTensor::Images { .. } => {
            return Err(PcnError::Format {
                offset: 0,
                what: format!("{} holds images, expected labels", labels_path.display()),
            })
        }
    };
    if label_values.len() != count {
        return Err(PcnError::ShapeMismatch(format!(
            "{count} images but {} labels",
            label_values.len()
        )));
    }
    // Transpose sample-major pixels into a features × samples matrix.
    let feat = rows * cols;
    let mut data = vec![0.0f64; feat * count];
    for s in 0..count {
        let img = &pixels[s * feat..(s + 1) * feat];
        for (p, &v) in img.iter().enumerate() {
            data[p * count + s] = v as f64 / 255.0;
        }
    }
    let inputs = Matrix::from_vec(feat, count, data)?;
    let checksum = format!("sha256:{},{}", hex_sha256(&image_bytes), hex_sha256(&label_bytes));
    Dataset::new_classification(
        name,
        inputs,
        label_values.into_iter().map(usize::from).collect(),
        classes,
        Some((rows, cols)),
        checksum,
    )
}

/// Load the canonical `train-*`/`t10k-*` file quartet from a directory.
/// Returns (train, test).
pub fn load_image_dir(dir: &Path, name: &str, classes: usize) -> Result<(Dataset, Dataset)> {
    let train = load_idx_classification(
        format!("{name}-train"),
        &dir.join("train-images-idx3-ubyte"),
        &dir.join("train-labels-idx1-ubyte"),
        classes,
    )?;
    let test = load_idx_classification(
        format!("{name}-test"),
        &dir.join("t10k-images-idx3-ubyte"),
        &dir.join("t10k-labels-idx1-ubyte"),
        classes,
    )?;
    Ok((train, test))
}

fn hex_sha256(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idx_round_trips() {
        let images = IdxTensor::Images {
            count: 2,
            rows: 2,
            cols: 3,
            pixels: vec![0, 50, 100, 150, 200, 250, 1, 2, 3, 4, 5, 6],
        };
        assert_eq!(parse_idx(&serialize_idx(&images)).unwrap(), images);
        let labels = IdxTensor::Labels { labels: vec![7, 1, 9] };
        assert_eq!(parse_idx(&serialize_idx(&labels)).unwrap(), labels);
    }

    #[test]
    fn bad_magic_fails_at_offset_zero() {
        match parse_idx(&[0, 0, 9, 9, 0, 0, 0, 0]) {
            Err(PcnError::Format { offset: 0, .. }) => {}
            other => panic!("expected bad magic, got {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_reports_position() {
        let mut bytes = serialize_idx(&IdxTensor::Labels { labels: vec![1, 2, 3] });
        bytes.pop();
        match parse_idx(&bytes) {
            Err(PcnError::Format { offset, what }) => {
                assert!(offset >= 8, "offset {offset}: {what}");
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn header_payload_mismatch_is_rejected() {
        let good = serialize_idx(&IdxTensor::Images {
            count: 1,
            rows: 2,
            cols: 2,
            pixels: vec![9; 4],
        });
        let mut bad = good;
        bad.extend_from_slice(&[1, 2]);
        assert!(matches!(parse_idx(&bad), Err(PcnError::Format { .. })));
    }
}
