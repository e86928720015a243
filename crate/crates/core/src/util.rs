//! Small numeric helpers shared across modules.

/// `ln(e^a + e^b)` without overflow; `-inf` is the identity.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln sum e^v`; `-inf` for an empty or all-`-inf` slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Deterministic per-item seed from a base seed (splitmix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sample mean and its jackknife standard error.
///
/// For the mean the leave-one-out estimate reduces to `s / sqrt(n)`; it is
/// computed from the pseudo-values anyway so that the estimator is explicit.
pub fn mean_and_jackknife_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let total: f64 = values.iter().sum();
    let mean = total / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let loo: Vec<f64> = values.iter().map(|v| (total - v) / (n - 1) as f64).collect();
    let loo_mean = loo.iter().sum::<f64>() / n as f64;
    let var = (n - 1) as f64 / n as f64 * loo.iter().map(|m| (m - loo_mean).powi(2)).sum::<f64>();
    (mean, var.sqrt())
}

/// Binary-reflected Gray code.
#[inline]
pub fn gray_encode(i: usize) -> usize {
    i ^ (i >> 1)
}

#[inline]
pub fn gray_decode(mut g: usize) -> usize {
    let mut i = g;
    while g > 0 {
        g >>= 1;
        i ^= g;
    }
    i
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_matches_direct() {
        for (a, b) in [(0.0, 0.0), (-3.0, 2.0), (700.0, 699.0), (-1e3, -1e3 + 1.0)] {
            let direct = log_sum_exp(&[a, b]);
            assert!((log_add_exp(a, b) - direct).abs() < 1e-12);
        }
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 1.5), 1.5);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn jackknife_of_mean_is_classical_stderr() {
        let v = [1.0, 4.0, 2.0, 8.0, 5.0];
        let (m, se) = mean_and_jackknife_stderr(&v);
        let s2 = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 4.0;
        assert!((se - (s2 / 5.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gray_roundtrip_and_adjacency() {
        for i in 0..64 {
            assert_eq!(gray_decode(gray_encode(i)), i);
            if i > 0 {
                assert_eq!((gray_encode(i) ^ gray_encode(i - 1)).count_ones(), 1);
            }
        }
    }
}
