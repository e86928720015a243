use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use super::*;

fn impulse_channel(nl: Nonlinearity, n_sim: usize) -> DiscreteChannel {
    let mut taps = vec![0.0; 2 * n_sim + 1];
    taps[n_sim] = 1.0;
    let cfg = ChannelConfig {
        n_os: n_sim,
        n_sim,
        pulse: PulseSpec::Custom { taps },
        pulse_norm: PulseNorm::None,
        nonlinearity: nl,
        noise_variance: 0.0,
        ..ChannelConfig::memoryless(AlphabetKind::BipolarAsk, 4)
    };
    DiscreteChannel::new(cfg).unwrap()
}

#[test]
fn square_law_examples() {
    let sl = Nonlinearity::SquareLaw;
    assert_eq!(apply_nonlinearity(Complex64::new(3.0, 0.0), &sl), Complex64::new(9.0, 0.0));
    assert_eq!(apply_nonlinearity(Complex64::new(1.0, 1.0), &sl).re, 2.0);
}

#[test]
fn rapp_hard_limiter_limit() {
    let z = Complex64::from_polar(2.0, 0.7);
    for kind in [
        Nonlinearity::Rapp { p: f64::INFINITY, x_sat: 1.0 },
        Nonlinearity::Rapp { p: 1e4, x_sat: 1.0 },
    ] {
        let out = apply_nonlinearity(z, &kind);
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(out.arg(), 0.7, epsilon = 1e-12);
    }
    // small signals pass nearly unchanged
    let small = Complex64::new(0.01, -0.02);
    let out = apply_nonlinearity(small, &Nonlinearity::rapp_default());
    assert_abs_diff_eq!((out - small).norm(), 0.0, epsilon = 1e-12);
}

#[test]
fn identity_impulse_channel_reproduces_symbols() {
    let chan = impulse_channel(Nonlinearity::Identity, 1);
    let amp = chan.amplitude();
    let block = chan.simulate_block(&[0, 1, 2, 3], 1).unwrap();
    let expected: Vec<f64> = [-3.0, -1.0, 1.0, 3.0].iter().map(|a| a * amp).collect();
    assert_eq!(block.y, expected);
}

#[test]
fn square_law_impulse_channel() {
    let mut cfg = impulse_channel(Nonlinearity::SquareLaw, 1).config().clone();
    cfg.tx_power_db = 10.0 * 5f64.log10(); // amplitude 1 for 4-ASK
    let chan = DiscreteChannel::new(cfg).unwrap();
    assert_abs_diff_eq!(chan.amplitude(), 1.0, epsilon = 1e-12);
    let block = chan.simulate_block(&[0], 3).unwrap();
    assert_abs_diff_eq!(block.y[0], 9.0, epsilon = 1e-12);
}

#[test]
fn observation_count_is_n_os_times_n() {
    let chan = DiscreteChannel::new(ChannelConfig::toy_dispersive(AlphabetKind::BipolarAsk, 4)).unwrap();
    let block = chan.draw_block(37, 5).unwrap();
    assert_eq!(block.y.len(), 2 * 37);
    assert_eq!(chan.total_memory(), 3);
}

#[test]
fn transmit_power_examples() {
    let cfg = ChannelConfig {
        pulse: PulseSpec::Sinc { taps: 41 },
        ..ChannelConfig::toy_dispersive(AlphabetKind::BipolarAsk, 4)
    };
    let chan = DiscreteChannel::new(cfg).unwrap();
    assert_eq!(chan.transmit_power(&vec![0.0; 10]).unwrap(), 0.0);
    assert!(chan.transmit_power(&[]).is_err());
    // 4-ASK levels, unit-energy pulse: E[A^2] = (1 + 9) / 2
    let block = chan.draw_block(20_000, 11).unwrap();
    let levels = chan.alphabet().levels(&block.x);
    let p = chan.transmit_power(&levels).unwrap();
    assert!((p - 5.0).abs() < 0.15, "power {p}");
    // unit-variance symbols
    let unit: Vec<f64> = levels.iter().map(|a| a / 5f64.sqrt()).collect();
    let p1 = chan.transmit_power(&unit).unwrap();
    assert!((p1 - 1.0).abs() < 0.03, "power {p1}");
    // configured P_tx is realized by the amplitude scale
    let scaled: Vec<f64> = levels.iter().map(|a| a * chan.amplitude()).collect();
    assert!((chan.transmit_power(&scaled).unwrap() - chan.tx_power()).abs() < 0.03);
}

#[test]
fn differential_precoding_examples() {
    let ask = Alphabet::ask(4).unwrap();
    // indices: 0 -> -3, 1 -> -1, 2 -> +1, 3 -> +3
    let data = [2, 3, 1, 0];
    let sent = differential_precode(&data, &ask);
    let signs: Vec<bool> = sent.iter().map(|&i| ask.level(i) > 0.0).collect();
    assert_eq!(signs, vec![true, true, false, true]);
    // magnitudes pass through
    let mags: Vec<f64> = sent.iter().map(|&i| ask.level(i).abs()).collect();
    assert_eq!(mags, vec![1.0, 3.0, 1.0, 3.0]);
    assert_eq!(differential_precode(&[2, 3, 3, 2], &ask), vec![2, 3, 3, 2]);
    let pam = Alphabet::pam(4).unwrap();
    assert_eq!(differential_precode(&[0, 1, 2, 3], &pam), vec![0, 1, 2, 3]);
}

#[test]
fn differential_roundtrip_exhaustive() {
    let ask = Alphabet::ask(2).unwrap();
    for len in 1..=8 {
        for bits in 0u32..(1 << len) {
            let x: Vec<usize> = (0..len).map(|k| ((bits >> k) & 1) as usize).collect();
            assert_eq!(differential_decode(&differential_precode(&x, &ask), &ask), x);
        }
    }
}

/// Continuous-time reference: `X(t) = sum_k a x_k sinc(B(t - k T))` evaluated
/// directly (truncated to the same support), then squared.
#[test]
fn discrete_model_matches_continuous_reference_for_square_law() {
    let taps = 41;
    let cfg = ChannelConfig {
        pulse: PulseSpec::Sinc { taps },
        pulse_norm: PulseNorm::None,
        fiber: None,
        noise_variance: 0.0,
        ..ChannelConfig::toy_dispersive(AlphabetKind::BipolarAsk, 4)
    };
    let chan = DiscreteChannel::new(cfg).unwrap();
    let block = chan.draw_block(60, 9).unwrap();
    let levels = chan.alphabet().levels(&block.x);
    let amp = chan.amplitude();
    let half_support = (taps / 2) as f64 / 2.0; // in symbol periods
    for (k, &y) in block.y.iter().enumerate() {
        let t = k as f64 / 2.0; // in symbol periods
        let x: f64 = levels
            .iter()
            .enumerate()
            .filter(|(j, _)| (t - *j as f64).abs() <= half_support)
            .map(|(j, a)| amp * a * sinc(t - j as f64))
            .sum();
        assert!((y - x * x).abs() < 1e-10, "sample {k}: {y} vs {}", x * x);
    }
}

#[test]
fn guard_zeros_decouple_blocks() {
    let chan = DiscreteChannel::new(ChannelConfig::short_reach(AlphabetKind::BipolarAsk, 4)).unwrap();
    let a = chan.alphabet().levels(&chan.draw_block(50, 1).unwrap().x);
    let b = chan.alphabet().levels(&chan.draw_block(30, 2).unwrap().x);
    let guard = chan.guard_symbols();
    let mut joined = a.clone();
    joined.extend(std::iter::repeat(0.0).take(2 * guard));
    joined.extend(&b);
    let ya = chan.noiseless(&a);
    let yb = chan.noiseless(&b);
    let yj = chan.noiseless(&joined);
    assert_eq!(&yj[..ya.len()], ya.as_slice());
    assert_eq!(&yj[yj.len() - yb.len()..], yb.as_slice());
}

#[test]
fn slot_outputs_match_full_simulation() {
    let mut cfgs = vec![ChannelConfig::toy_dispersive(AlphabetKind::BipolarAsk, 4)];
    let mut with_rx = ChannelConfig::toy_dispersive(AlphabetKind::UnipolarPam, 4);
    with_rx.n_sim = 4;
    with_rx.pulse = PulseSpec::Sinc { taps: 13 };
    with_rx.receiver = ReceiverSpec::Brickwall { bandwidth: 2.0, taps: 5 };
    cfgs.push(with_rx);
    let mut rapp = ChannelConfig::toy_dispersive(AlphabetKind::BipolarAsk, 4);
    rapp.nonlinearity = Nonlinearity::rapp_default();
    rapp.noise = NoiseKind::CircularComplex;
    cfgs.push(rapp);
    for cfg in cfgs {
        let chan = DiscreteChannel::new(cfg).unwrap();
        let k = chan.total_memory();
        let (pre, post) = DiscreteChannel::context_split(k);
        let levels = chan.alphabet().levels(&chan.draw_block(k + 1, 4).unwrap().x);
        let full = chan.noiseless(&levels);
        let mut out = vec![0.0; chan.slot_width()];
        let mut muls = 0;
        chan.slot_outputs(&levels, pre, &mut out, &mut muls);
        assert_eq!(muls, chan.slot_eval_multiplications(pre + post + 1));
        for i in 0..chan.n_os() {
            let s = full[pre * chan.n_os() + i];
            if chan.dims() == 2 {
                assert_abs_diff_eq!(out[2 * i], s.re, epsilon = 1e-12);
                assert_abs_diff_eq!(out[2 * i + 1], s.im, epsilon = 1e-12);
            } else {
                assert_abs_diff_eq!(out[i], s.re, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn filtered_noise_has_configured_variance() {
    let mut cfg = ChannelConfig::toy_dispersive(AlphabetKind::BipolarAsk, 4);
    cfg.n_sim = 4;
    cfg.pulse = PulseSpec::Sinc { taps: 13 };
    cfg.receiver = ReceiverSpec::Brickwall { bandwidth: 2.0, taps: 31 };
    let chan = DiscreteChannel::new(cfg).unwrap();
    assert!(!chan.uses_direct_noise());
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let noise = chan.sample_noise(200_000, &mut rng);
    let var = noise.iter().map(|v| v.re * v.re).sum::<f64>() / noise.len() as f64;
    assert!((var - 1.0).abs() < 0.02, "variance {var}");
}

#[test]
fn config_errors() {
    let mut cfg = ChannelConfig::short_reach(AlphabetKind::BipolarAsk, 4);
    cfg.n_os = 3;
    assert!(matches!(DiscreteChannel::new(cfg), Err(crate::Error::Config(_))));
    let mut cfg = ChannelConfig::short_reach(AlphabetKind::BipolarAsk, 4);
    cfg.n_sim = 1;
    cfg.n_os = 1;
    assert!(DiscreteChannel::new(cfg).is_err());
    let mut cfg = ChannelConfig::short_reach(AlphabetKind::BipolarAsk, 4);
    cfg.nonlinearity = Nonlinearity::Identity;
    // dispersed field is complex: real noise would drop the quadrature
    assert!(DiscreteChannel::new(cfg).is_err());
}

#[test]
fn simulate_rejects_bad_input() {
    let chan = impulse_channel(Nonlinearity::Identity, 1);
    assert!(chan.simulate_block(&[], 0).is_err());
    assert!(chan.simulate_block(&[7], 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_alphabet_gives_finite_blocks(m in 1usize..=6, ask in any::<bool>(), seed in any::<u64>()) {
        let kind = if ask { AlphabetKind::BipolarAsk } else { AlphabetKind::UnipolarPam };
        let chan = DiscreteChannel::new(ChannelConfig::toy_dispersive(kind, 1 << m).with_tx_power_db(10.0)).unwrap();
        let block = chan.draw_block(24, seed).unwrap();
        prop_assert_eq!(block.y.len(), 48);
        prop_assert!(block.y.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn precoding_roundtrip(m in 1usize..=6, data in proptest::collection::vec(0usize..64, 1..64)) {
        let ask = Alphabet::ask(1 << m).unwrap();
        let x: Vec<usize> = data.iter().map(|d| d % ask.size()).collect();
        prop_assert_eq!(differential_decode(&differential_precode(&x, &ask), &ask), x);
    }
}
