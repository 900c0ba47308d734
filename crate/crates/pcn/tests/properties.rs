//! Property tests for the library's structural invariants, plus a few
//! definitional equalities between the schedules.

use proptest::prelude::*;

use pcn::data::{parse_idx, serialize_idx, synthetic_classification, Dataset, IdxTensor};
use pcn::engine::Engine;
use pcn::metrics::{accuracy, ada_ece, PredictionBatch};
use pcn::model::{Mode, NetworkState, PcNetwork};
use pcn::numerics::{init_weights, Activation, InitScheme, Matrix, Rng};
use pcn::schedules::{
    inference_step, ipc_update, pc_update, train, Algorithm, ScheduleConfig, TrainOptions,
};

fn fresh_net(dims: &[usize], seed: u64) -> PcNetwork {
    let mut rng = Rng::new(seed);
    PcNetwork::new(dims, Activation::Tanh, &mut rng, InitScheme::UniformFanIn).unwrap()
}

proptest! {
    #[test]
    fn one_hot_targets_have_exactly_one_unit_entry_per_column(
        labels in prop::collection::vec(0usize..7, 1..40),
        extra_classes in 0usize..3,
    ) {
        let classes = labels.iter().max().unwrap() + 1 + extra_classes;
        let n = labels.len();
        let inputs = Matrix::from_vec(2, n, vec![0.25; 2 * n]).unwrap();
        let data =
            Dataset::new_classification("prop", inputs, labels.clone(), classes, None, "prop")
                .unwrap();
        let targets = data.targets().unwrap();
        prop_assert_eq!(targets.shape(), (classes, n));
        for j in 0..n {
            let col = targets.col(j);
            let ones = col.iter().filter(|&&v| v == 1.0).count();
            let zeros = col.iter().filter(|&&v| v == 0.0).count();
            prop_assert_eq!(ones, 1);
            prop_assert_eq!(zeros, classes - 1);
            prop_assert_eq!(col[labels[j]], 1.0);
        }
    }

    #[test]
    fn idx_image_files_round_trip(
        rows in 1usize..6,
        cols in 1usize..6,
        count in 1usize..5,
        seed in any::<u64>(),
    ) {
        let mut rng = Rng::new(seed);
        let pixels: Vec<u8> = (0..count * rows * cols).map(|_| rng.next_u64() as u8).collect();
        let tensor = IdxTensor::Images { count, rows, cols, pixels };
        let parsed = parse_idx(&serialize_idx(&tensor)).unwrap();
        prop_assert_eq!(parsed, tensor);
    }

    #[test]
    fn idx_label_files_round_trip(labels in prop::collection::vec(any::<u8>(), 1..50)) {
        let tensor = IdxTensor::Labels { labels };
        let parsed = parse_idx(&serialize_idx(&tensor)).unwrap();
        prop_assert_eq!(parsed, tensor);
    }

    #[test]
    fn shuffle_is_a_permutation(items in prop::collection::vec(any::<u32>(), 0..60), seed in any::<u64>()) {
        let mut shuffled = items.clone();
        Rng::new(seed).shuffle(&mut shuffled);
        let mut a = items;
        let mut b = shuffled;
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn fan_in_initialization_respects_its_bound(
        rows in 1usize..9,
        cols in 1usize..9,
        seed in any::<u64>(),
    ) {
        let mut rng = Rng::new(seed);
        let w = init_weights(rows, cols, &mut rng, InitScheme::UniformFanIn);
        let bound = 1.0 / (cols as f64).sqrt();
        for &v in w.as_slice() {
            prop_assert!(v.abs() <= bound, "{v} exceeds {bound}");
        }
    }

    #[test]
    fn energy_is_nonnegative_on_arbitrary_states(seed in any::<u64>(), depth in 1usize..5) {
        let mut rng = Rng::new(seed);
        let dims: Vec<usize> = (0..=depth).map(|_| 1 + (rng.next_u64() % 6) as usize).collect();
        let batch = 1 + (rng.next_u64() % 3) as usize;
        let net = fresh_net(&dims, seed ^ 1);
        let values: Vec<Matrix> = dims
            .iter()
            .map(|&d| {
                Matrix::from_vec(d, batch, (0..d * batch).map(|_| rng.uniform(-2.0, 2.0)).collect())
                    .unwrap()
            })
            .collect();
        let state = NetworkState::from_values(&net, values, vec![false; depth + 1]).unwrap();
        prop_assert!(state.energy() >= 0.0);
    }

    #[test]
    fn no_schedule_moves_a_clamped_layer(
        seed in any::<u64>(),
        gamma in 0.05f64..1.0,
        alpha in 0.001f64..0.2,
        algorithm in prop::sample::select(vec![Algorithm::Pc, Algorithm::Ipc]),
    ) {
        let dims = [3usize, 5, 4];
        let net = fresh_net(&dims, seed);
        let data = synthetic_classification(&dims, 4, seed ^ 2).unwrap();
        let mut state = NetworkState::feedforward_init(&net, data.inputs()).unwrap();
        state.clamp_output(&net, data.targets().unwrap()).unwrap();
        let bottom = state.value(0).clone();
        let top = state.value(state.layer_count() - 1).clone();

        let mut cfg = ScheduleConfig::for_algorithm(algorithm);
        cfg.gamma = gamma;
        cfg.alpha = alpha;
        cfg.t_steps = 3;
        let mut engine = Engine::serial();
        let (_, after) = match algorithm {
            Algorithm::Pc => pc_update(&mut engine, &net, &state, &cfg).unwrap(),
            _ => ipc_update(&mut engine, &net, &state, &cfg).unwrap(),
        };
        prop_assert_eq!(after.value(0), &bottom);
        prop_assert_eq!(after.value(after.layer_count() - 1), &top);
        prop_assert!(after.is_clamped(0));
        prop_assert!(after.is_clamped(after.layer_count() - 1));
    }

    #[test]
    fn accuracy_and_calibration_stay_in_the_unit_interval(
        seed in any::<u64>(),
        classes in 2usize..6,
        n in 8usize..40,
    ) {
        let mut rng = Rng::new(seed);
        let scores = Matrix::from_vec(
            classes,
            n,
            (0..classes * n).map(|_| rng.uniform(-3.0, 3.0)).collect(),
        )
        .unwrap();
        let labels: Vec<usize> = (0..n).map(|_| (rng.next_u64() % classes as u64) as usize).collect();
        let batch = PredictionBatch::new(scores, labels).unwrap();
        let acc = accuracy(&batch);
        prop_assert!((0.0..=1.0).contains(&acc));
        let report = ada_ece(&batch, 4).unwrap();
        prop_assert!((0.0..=1.0).contains(&report.ada_ece), "{}", report.ada_ece);
    }
}

#[test]
fn classic_update_with_zero_rate_is_pure_inference() {
    let dims = [3usize, 6, 5, 4];
    let net = fresh_net(&dims, 41);
    let data = synthetic_classification(&dims, 5, 41).unwrap();
    let mut state = NetworkState::feedforward_init(&net, data.inputs()).unwrap();
    state.clamp_output(&net, data.targets().unwrap()).unwrap();

    let mut cfg = ScheduleConfig::for_algorithm(Algorithm::Pc);
    cfg.alpha = 0.0;
    cfg.t_steps = 5;
    let mut engine = Engine::serial();
    let (updated_net, updated_state) = pc_update(&mut engine, &net, &state, &cfg).unwrap();

    for l in 0..net.depth() {
        assert_eq!(updated_net.weight(l), net.weight(l), "weight {l} moved at rate 0");
    }
    let mut reference = state;
    for _ in 0..cfg.t_steps {
        reference = inference_step(&net, &reference, cfg.gamma).unwrap();
    }
    for l in 0..reference.layer_count() {
        assert_eq!(updated_state.value(l), reference.value(l), "values {l}");
        assert_eq!(updated_state.error(l), reference.error(l), "errors {l}");
    }
}

#[test]
fn incremental_update_is_the_identity_at_a_stationary_point() {
    // A feedforward state without output clamping has zero error at every
    // layer: the energy is at its global minimum and nothing may move.
    let dims = [3usize, 6, 5, 4];
    let net = fresh_net(&dims, 42);
    let data = synthetic_classification(&dims, 5, 42).unwrap();
    let state = NetworkState::feedforward_init(&net, data.inputs()).unwrap();
    assert_eq!(state.energy(), 0.0);

    let cfg = ScheduleConfig::for_algorithm(Algorithm::Ipc);
    let mut engine = Engine::serial();
    let (updated_net, updated_state) = ipc_update(&mut engine, &net, &state, &cfg).unwrap();
    for l in 0..net.depth() {
        assert_eq!(updated_net.weight(l), net.weight(l), "weight {l}");
    }
    for l in 0..state.layer_count() {
        assert_eq!(updated_state.value(l), state.value(l), "values {l}");
    }
}

#[test]
fn generative_training_reconstructs_the_teacher_energy_floor() {
    // The synthetic teacher generated the data, so its energy on the
    // teacher values is exactly zero; a student trained full-batch should
    // push energy well below its starting point.
    let gen = pcn::data::synthetic_generative(&[6, 5, 4], 10, 43).unwrap();
    assert_eq!(gen.teacher_state().unwrap().energy(), 0.0);

    let student = fresh_net(&[6, 5, 4], 44);
    let mut cfg = ScheduleConfig::for_algorithm(Algorithm::Ipc);
    cfg.gamma = 0.1;
    cfg.alpha = 0.05;
    cfg.total_steps = 400;
    let mut engine = Engine::serial();
    let opts = TrainOptions { record_energy: true, plateau: None, ..TrainOptions::default() };
    let report = train(&mut engine, &student, &gen.data, &cfg, Mode::Generative, &opts).unwrap();
    assert!(report.diverged.is_none());
    let first = report.energy_trace[0];
    let last = *report.energy_trace.last().unwrap();
    assert!(
        last < 0.05 * first,
        "energy {first} only reached {last} after {} updates",
        report.updates
    );
}
