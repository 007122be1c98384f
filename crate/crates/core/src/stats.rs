//! Small statistical helpers: Poisson weights, integer-shape Gamma tails and
//! the Kolmogorov-Smirnov test.

use statrs::function::gamma::ln_gamma;

/// Poisson probability mass `e^{−μ} μ^k / k!`, evaluated in log space.
pub fn poisson_pmf(k: usize, mu: f64) -> f64 {
    if mu <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    (kf * mu.ln() - mu - ln_gamma(kf + 1.0)).exp()
}

/// Upper tails `Q(n, x) = e^{−x} Σ_{m<n} x^m/m!` of Gamma(n, 1) for
/// `n = 1..=out.len()`, written into `out[n−1]`.
pub fn gamma_tails_integer(x: f64, out: &mut [f64]) {
    let mut term = (-x).exp();
    let mut acc = 0.0;
    for (m, slot) in out.iter_mut().enumerate() {
        acc += term;
        *slot = acc.min(1.0);
        term *= x / (m as f64 + 1.0);
    }
}

/// Upper tail of Gamma(n, 1) at `x` for integer shape `n >= 1`.
pub fn gamma_tail_integer(n: usize, x: f64) -> f64 {
    let mut out = vec![0.0; n.max(1)];
    gamma_tails_integer(x, &mut out);
    out[n.max(1) - 1]
}

/// Outcome of a one-sample Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
    pub samples: usize,
}

/// Asymptotic Kolmogorov distribution tail with the small-sample correction
/// of Stephens.
pub fn kolmogorov_p_value(n: usize, d: f64) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Tests `samples` against the continuous distribution function `cdf`.
/// The slice is sorted in place.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> KsReport {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / nf).max((i as f64 + 1.0) / nf - f);
    }
    KsReport {
        statistic: d,
        p_value: kolmogorov_p_value(n, d),
        samples: n,
    }
}

/// Sample mean and unbiased variance.
pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::function::gamma::gamma_ur;

    #[test]
    fn poisson_weights_sum_to_one() {
        for mu in [0.0, 0.3, 5.0, 282.7] {
            let s: f64 = (0..1000).map(|k| poisson_pmf(k, mu)).sum();
            assert_relative_eq!(s, 1.0, epsilon = 1e-12);
        }
        assert_relative_eq!(
            poisson_pmf(2, 3.0),
            4.5 * (-3.0f64).exp(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn integer_gamma_tails_match_incomplete_gamma() {
        let mut out = [0.0; 10];
        for x in [0.01, 0.7, 3.0, 12.0, 40.0] {
            gamma_tails_integer(x, &mut out);
            for (k, &v) in out.iter().enumerate() {
                assert_relative_eq!(
                    v,
                    gamma_ur((k + 1) as f64, x),
                    max_relative = 1e-10,
                    epsilon = 1e-300
                );
            }
        }
        assert_relative_eq!(gamma_tail_integer(1, 2.0), (-2.0f64).exp());
    }

    #[test]
    fn ks_accepts_uniform_and_rejects_shifted() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut xs: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        let good = ks_test(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!(good.p_value > 0.01, "{good:?}");
        let bad = ks_test(&mut xs, |x| (x * 1.05).clamp(0.0, 1.0));
        assert!(bad.p_value < 1e-6, "{bad:?}");
    }

    #[test]
    fn kolmogorov_tail_known_value() {
        // P(K > 1.36) ≈ 0.049 in the large-sample limit.
        let p = kolmogorov_p_value(1_000_000, 1.36 / 1000.0);
        assert!((p - 0.0494).abs() < 2e-3, "{p}");
    }

    #[test]
    fn moments_helper() {
        let (m, v) = mean_and_variance(&[1.0, 2.0, 3.0, 4.0]);
        assert_relative_eq!(m, 2.5);
        assert_relative_eq!(v, 5.0 / 3.0);
    }
}
