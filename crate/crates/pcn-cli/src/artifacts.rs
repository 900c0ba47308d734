//! Deterministic artifact files.
//!
//! Every file starts with comment lines carrying the tool version, the
//! configuration hash, and (when the file belongs to one grid cell) the
//! seed, so any artifact can be traced back to the exact run that produced
//! it. Two formats share those headers: `.csv` with a comma-separated
//! header row, and `.dat` with space-separated columns for direct use in
//! gnuplot (`plot "file.dat" using 1:2`). Values are written with Rust's
//! shortest-round-trip float formatting, which is deterministic, so a rerun
//! with identical inputs produces byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::Result;

/// Provenance stamped into every artifact.
#[derive(Debug, Clone, Copy)]
pub struct Meta<'a> {
    /// SHA-256 of the resolved configuration.
    pub config_hash: &'a str,
    /// The cell's seed; `None` for files aggregating over the whole grid.
    pub seed: Option<u64>,
}

impl<'a> Meta<'a> {
    fn header(&self, comment: &str) -> String {
        let mut lines = String::new();
        lines.push_str(&format!("{comment} pcn {}\n", pcn::VERSION));
        lines.push_str(&format!("{comment} config {}\n", self.config_hash));
        if let Some(seed) = self.seed {
            lines.push_str(&format!("{comment} seed {seed}\n"));
        }
        lines
    }
}

/// A float as its shortest round-trip decimal form.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Write a CSV: provenance comments, one header row, then the rows.
pub fn write_csv(path: &Path, meta: Meta, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    debug_assert!(rows.iter().all(|r| r.len() == columns.len()));
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(meta.header("#").as_bytes())?;
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Write a gnuplot data file: provenance comments, a commented column
/// list, then space-separated rows. Empty cells are written as `nan` so
/// column positions stay aligned.
pub fn write_dat(path: &Path, meta: Meta, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    debug_assert!(rows.iter().all(|r| r.len() == columns.len()));
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(meta.header("#").as_bytes())?;
    writeln!(out, "# {}", columns.join(" "))?;
    for row in rows {
        let cells: Vec<&str> =
            row.iter().map(|c| if c.is_empty() { "nan" } else { c.as_str() }).collect();
        writeln!(out, "{}", cells.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_embeds_version_hash_and_seed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let meta = Meta { config_hash: "abc123", seed: Some(7) };
        write_csv(&path, meta, &["x", "y"], &[vec!["1".into(), "0.5".into()]]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(&format!("# pcn {}\n# config abc123\n# seed 7\n", pcn::VERSION)));
        assert!(text.ends_with("x,y\n1,0.5\n"));
    }

    #[test]
    fn grid_level_files_omit_the_seed_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.dat");
        let meta = Meta { config_hash: "abc123", seed: None };
        write_dat(&path, meta, &["a", "b"], &[vec!["1".into(), "".into()]]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.contains("seed"));
        assert!(text.contains("# a b\n1 nan\n"));
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let meta = Meta { config_hash: "h", seed: Some(1) };
        let rows = vec![vec![fmt_f64(0.1 + 0.2), fmt_f64(1.0 / 3.0)]];
        write_csv(&a, meta, &["p", "q"], &rows).unwrap();
        write_csv(&b, meta, &["p", "q"], &rows).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}
