use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::rnneq::{InputTensor, ParamLayout};
use crate::signalchain::{Alphabet, AlphabetKind, ChannelConfig};

fn toy_shape(dims: &[usize], phases: usize, m: usize) -> RnnShape {
    RnnShape {
        dims: dims.to_vec(),
        l_y: dims[0],
        l_ic: 0,
        obs_dims: 1,
        n_os: 1,
        stages: phases,
        stage: 1,
        alphabet_size: m,
    }
}

fn random_batch(shape: &RnnShape, steps: usize, items: usize, seed: u64) -> Vec<Sequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = shape.phases();
    (0..items)
        .map(|_| Sequence {
            inputs: InputTensor {
                width: shape.dims[0],
                phases: p,
                t_start: 1,
                count: steps / p,
                data: (0..steps * shape.dims[0]).map(|_| rng.gen_range(-1.5..1.5)).collect(),
            },
            labels: (0..steps / p).map(|_| rng.gen_range(0..shape.alphabet_size)).collect(),
        })
        .collect()
}

fn encoding(m: usize) -> InputEncoding {
    InputEncoding::identity(1, &Alphabet::new(AlphabetKind::BipolarAsk, m).unwrap())
}

/// Max over parameters of |g - fd| / max(|g|, |fd|, 1e-6).
fn max_fd_error(shape: &RnnShape, params: &[f64], batch: &[Sequence]) -> f64 {
    let (_, grad) = backward(shape, params, batch).unwrap();
    let h = 1e-5;
    let mut p = params.to_vec();
    let mut worst: f64 = 0.0;
    for k in 0..params.len() {
        p[k] = params[k] + h;
        let up = loss(shape, &p, batch).unwrap().bits;
        p[k] = params[k] - h;
        let down = loss(shape, &p, batch).unwrap().bits;
        p[k] = params[k];
        let fd = (up - down) / (2.0 * h);
        let g = grad.values[k];
        worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-6));
    }
    worst
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..3 {
        let shape = toy_shape(&[6, 8], 2, 4);
        let model = RnnModel::random(shape.clone(), encoding(4), seed).unwrap();
        let batch = random_batch(&shape, 8, 2, 100 + seed);
        let err = max_fd_error(&shape, &model.params, &batch);
        assert!(err < 1e-4, "seed {seed}: {err}");
    }
}

#[test]
fn duplicated_item_has_the_same_gradient() {
    let shape = toy_shape(&[4, 6, 4], 3, 2);
    let model = RnnModel::random(shape.clone(), encoding(2), 1).unwrap();
    let one = random_batch(&shape, 9, 1, 2);
    let two = vec![one[0].clone(), one[0].clone()];
    let (l1, g1) = backward(&shape, &model.params, &one).unwrap();
    let (l2, g2) = backward(&shape, &model.params, &two).unwrap();
    assert!((l1.bits - l2.bits).abs() < 1e-14);
    for (a, b) in g1.values.iter().zip(&g2.values) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn zero_model_output_bias_gradient() {
    let shape = toy_shape(&[3, 4], 1, 4);
    let model = RnnModel::zeros(shape.clone(), encoding(4)).unwrap();
    let batch = random_batch(&shape, 6, 3, 7);
    let (value, grad) = backward(&shape, &model.params, &batch).unwrap();
    assert!((value.bits - 2.0).abs() < 1e-15);
    let layout = ParamLayout::new(&shape);
    let total: usize = batch.iter().map(|s| s.labels.len()).sum();
    for a in 0..4 {
        let hits = batch.iter().flat_map(|s| &s.labels).filter(|&&l| l == a).count();
        let expect = (0.25 - hits as f64 / total as f64) / std::f64::consts::LN_2;
        assert!((grad.values[layout.b_out + a] - expect).abs() < 1e-14);
    }
}

#[test]
fn loss_edge_cases() {
    let shape = toy_shape(&[2, 2], 1, 2);
    let mut model = RnnModel::zeros(shape.clone(), encoding(2)).unwrap();
    let mut batch = random_batch(&shape, 4, 2, 3);
    for s in &mut batch {
        s.labels.fill(1);
    }
    assert!((loss(&shape, &model.params, &batch).unwrap().bits - 1.0).abs() < 1e-15);
    let b_out = model.layout().b_out;
    model.params[b_out + 1] = 50.0;
    let near = loss(&shape, &model.params, &batch).unwrap();
    assert!(near.bits >= 0.0 && near.bits < 1e-20);
    model.params[b_out + 1] = -100.0;
    let clamped = loss(&shape, &model.params, &batch).unwrap();
    assert_eq!(clamped.clamps, 8);
    assert!((clamped.bits - 1e30f64.log2()).abs() < 1e-9);
    batch[0].labels[0] = 5;
    assert!(loss(&shape, &model.params, &batch).is_err());
}

fn memoryless(db: f64) -> DiscreteChannel {
    DiscreteChannel::new(ChannelConfig::memoryless(AlphabetKind::BipolarAsk, 2).with_tx_power_db(db)).unwrap()
}

/// H(V|Y) of equiprobable ±a in unit-variance Gaussian noise, by quadrature.
fn binary_conditional_entropy(a: f64) -> f64 {
    let steps = 20_000;
    let (lo, hi) = (-12.0, 12.0);
    let dx = (hi - lo) / steps as f64;
    (0..=steps)
        .map(|i| {
            let n = lo + i as f64 * dx;
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            let pdf = (-0.5 * n * n).exp() / (2.0 * std::f64::consts::PI).sqrt();
            w * pdf * (1.0 + (-2.0 * a * (a + n)).exp()).log2()
        })
        .sum::<f64>()
        * dx
}

fn memoryless_shape() -> RnnShape {
    RnnShape {
        dims: vec![1, 8],
        l_y: 1,
        l_ic: 0,
        obs_dims: 1,
        n_os: 1,
        stages: 1,
        stage: 1,
        alphabet_size: 2,
    }
}

#[test]
fn memoryless_training_reaches_conditional_entropy() {
    let chan = memoryless(0.0);
    let cfg = TrainConfig {
        seed: 4,
        ..TrainConfig::new(1e-2, 800, 32, 16)
    };
    let (_, log) = train_stage(&chan, &memoryless_shape(), &cfg).unwrap();
    let target = binary_conditional_entropy(chan.amplitude());
    let tail = log.tail_loss(200);
    assert!((tail - target).abs() < 0.02, "loss {tail} vs H(V|Y) {target}");
    // soft trend: the early median is above the late median
    let median = |rows: &[TrainLogRow]| {
        let mut v: Vec<f64> = rows.iter().map(|r| r.loss_bits).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    assert!(median(&log.rows[..80]) > median(&log.rows[720..]));
}

#[test]
fn zero_iterations_keep_the_initialization() {
    let chan = memoryless(0.0);
    let shape = memoryless_shape();
    let init = RnnModel::random(shape.clone(), encoding(2), 9).unwrap();
    let cfg = TrainConfig::new(1e-2, 0, 8, 16);
    let (model, log) = train_stage_from(&chan, &shape, &cfg, Some(init.clone())).unwrap();
    assert_eq!(model.params, init.params);
    assert!(log.rows.is_empty());
}

#[test]
fn same_seed_same_log() {
    let chan = memoryless(2.0);
    let cfg = TrainConfig {
        seed: 11,
        ..TrainConfig::new(5e-3, 20, 12, 8)
    };
    let a = train_stage(&chan, &memoryless_shape(), &cfg).unwrap();
    let b = train_stage(&chan, &memoryless_shape(), &cfg).unwrap();
    assert_eq!(a.1.to_csv(), b.1.to_csv());
    assert_eq!(a.0.params, b.0.params);
    assert!(a.1.to_csv().starts_with("iter,loss_bits,grad_norm,wall_ms\n0,"));
}

#[test]
fn warm_start_handling() {
    let dir = tempfile::tempdir().unwrap();
    let chan = memoryless(0.0);
    let shape = memoryless_shape();
    let missing = TrainConfig {
        warm_start: Some(dir.path().join("absent")),
        ..TrainConfig::new(1e-2, 2, 4, 8)
    };
    let (_, log) = train_stage(&chan, &shape, &missing).unwrap();
    assert!(log.warm_start.is_none());

    let other = RnnShape {
        dims: vec![1, 4],
        ..shape.clone()
    };
    let wrong = RnnModel::random(other, encoding(2), 1).unwrap();
    assert!(matches!(
        train_stage_from(&chan, &shape, &missing, Some(wrong)),
        Err(Error::Shape(_))
    ));

    let stem = dir.path().join("prev");
    let prev = RnnModel::random(shape.clone(), encoding(2), 2).unwrap();
    crate::rnneq::save_model(&prev, &stem, serde_json::Value::Null).unwrap();
    let cfg = TrainConfig {
        warm_start: Some(stem.clone()),
        ..TrainConfig::new(1e-2, 2, 4, 8)
    };
    let (_, log) = train_stage(&chan, &shape, &cfg).unwrap();
    assert_eq!(log.warm_start, Some(stem));
}

#[test]
fn config_validation() {
    // the M = 4 row of the reference parameter table, stage 1 of S = 2
    let full = TrainConfig::new(5e-4, 20_000, 128, 64);
    assert!(full.validate(2).is_ok());
    assert!(TrainConfig::new(5e-4, 10, 128, 63).validate(2).is_err());
    assert!(TrainConfig::new(0.0, 10, 128, 64).validate(1).is_err());
    assert!(TrainConfig::new(1e-3, 10, 0, 64).validate(1).is_err());
}

#[test]
fn parameter_paths() {
    let shape = toy_shape(&[3, 4, 2], 2, 2);
    let layout = ParamLayout::new(&shape);
    assert_eq!(parameter_path(&shape, layout.b_out), "b_out[0]");
    assert_eq!(parameter_path(&shape, 0), "layer 1 fwd phase 1 W_in");
    let c = layout.cell(1, crate::rnneq::Direction::Backward, 1);
    assert_eq!(parameter_path(&shape, c.b_state), "layer 2 bwd phase 2 b_state");
}
