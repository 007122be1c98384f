//! Popularity profiles and cache placement policies.

use rand::Rng;

use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// File request probabilities, most popular first.
#[derive(Debug, Clone, PartialEq)]
pub struct Popularity<T> {
    q: Vec<T>,
    gamma: Option<T>,
}

fn sum_tolerance<T: Scalar>(n: usize) -> T {
    T::lit(1e-12).max(T::epsilon() * T::from_usize_lossy(8 * n.max(1)))
}

impl<T: Scalar> Popularity<T> {
    /// Zipf law `q_i ∝ i^{−γ}`.
    pub fn zipf(n: usize, gamma: T) -> Result<Self> {
        if n == 0 {
            return domain("library must hold at least one file");
        }
        if !(gamma >= T::zero()) || !gamma.is_finite() {
            return domain(format!("skewness must be nonnegative, got {gamma}"));
        }
        let raw: Vec<T> = (1..=n)
            .map(|i| T::from_usize_lossy(i).powf(-gamma))
            .collect();
        // Sum smallest terms first.
        let total = raw.iter().rev().fold(T::zero(), |acc, &v| acc + v);
        Ok(Self {
            q: raw.into_iter().map(|v| v / total).collect(),
            gamma: Some(gamma),
        })
    }

    /// Uniform popularity over `n` files.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::zipf(n, T::zero())
    }

    /// Explicit probabilities; must be nonnegative, nonincreasing and sum to one.
    pub fn from_probabilities(q: Vec<T>) -> Result<Self> {
        if q.is_empty() {
            return domain("library must hold at least one file");
        }
        if q.iter().any(|&v| !(v >= T::zero()) || !v.is_finite()) {
            return domain("request probabilities must be finite and nonnegative");
        }
        if q.windows(2).any(|w| w[1] > w[0]) {
            return domain("request probabilities must be sorted most popular first");
        }
        let total = q.iter().fold(T::zero(), |acc, &v| acc + v);
        if (total - T::one()).abs() > sum_tolerance::<T>(q.len()) {
            return domain(format!("request probabilities sum to {total}, not 1"));
        }
        Ok(Self { q, gamma: None })
    }

    pub fn probabilities(&self) -> &[T] {
        &self.q
    }

    pub fn gamma(&self) -> Option<T> {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

/// Per-file cache probabilities with a memory budget of `n_c` files.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement<T> {
    p: Vec<T>,
    n_c: usize,
}

impl<T: Scalar> Placement<T> {
    pub fn new(p: Vec<T>, n_c: usize) -> Result<Self> {
        if p.iter().any(|&v| !(v >= T::zero() && v <= T::one())) {
            return domain("cache probabilities must lie in [0, 1]");
        }
        let total = p.iter().fold(T::zero(), |acc, &v| acc + v);
        let slack = T::lit(1e-9).max(T::epsilon() * T::from_usize_lossy(8 * p.len().max(1)));
        if total > T::from_usize_lossy(n_c) + slack {
            return domain(format!(
                "cache probabilities sum to {total}, above the budget {n_c}"
            ));
        }
        Ok(Self { p, n_c })
    }

    /// Cache the `n_c` most popular files with certainty.
    pub fn most_popular(profile: &Popularity<T>, n_c: usize) -> Result<Self> {
        let n = profile.len();
        if n_c > n {
            return domain(format!("memory size {n_c} exceeds library size {n}"));
        }
        let p = (0..n)
            .map(|i| if i < n_c { T::one() } else { T::zero() })
            .collect();
        Self::new(p, n_c)
    }

    pub fn probabilities(&self) -> &[T] {
        &self.p
    }

    pub fn budget(&self) -> usize {
        self.n_c
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn total(&self) -> T {
        self.p.iter().fold(T::zero(), |acc, &v| acc + v)
    }

    /// Files held by one RU: each file independently with its probability.
    pub fn sample_cache_contents<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut flags = vec![false; self.p.len()];
        self.fill_cache_flags(rng, &mut flags);
        (0..flags.len()).filter(|&i| flags[i]).collect()
    }

    /// Allocation-free form of [`Self::sample_cache_contents`]: `flags[i]`
    /// is set when file `i` is cached. Consumes the same random draws.
    pub fn fill_cache_flags<R: Rng + ?Sized>(&self, rng: &mut R, flags: &mut [bool]) {
        for (f, &pi) in flags.iter_mut().zip(&self.p) {
            *f = rng.random::<f64>() < pi.as_f64();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    #[test]
    fn zipf_small_cases() {
        let z = Popularity::<f64>::zipf(4, 0.0).unwrap();
        assert_eq!(z.probabilities(), &[0.25; 4]);
        let z = Popularity::<f64>::zipf(2, 1.0).unwrap();
        assert_relative_eq!(z.probabilities()[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(z.probabilities()[1], 1.0 / 3.0, epsilon = 1e-15);
        assert!(Popularity::<f64>::zipf(0, 1.0).is_err());
        assert!(Popularity::<f64>::zipf(3, -0.1).is_err());
    }

    #[test]
    fn zipf_matches_compensated_sum() {
        let (n, g) = (20, 0.7);
        let terms: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-g)).collect();
        let (mut hi, mut lo) = (0.0, 0.0);
        for &t in &terms {
            let (s, e) = two_sum(hi, t);
            hi = s;
            lo += e;
        }
        let total = hi + lo;
        let z = Popularity::<f64>::zipf(n, g).unwrap();
        for (a, t) in z.probabilities().iter().zip(&terms) {
            assert!((a - t / total).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn zipf_is_valid(n in 1usize..200, g in 0.0f64..3.0) {
            let z = Popularity::<f64>::zipf(n, g).unwrap();
            let q = z.probabilities();
            prop_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(q.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!(q.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn explicit_profile_validation() {
        assert!(Popularity::<f64>::from_probabilities(vec![0.5, 0.5]).is_ok());
        assert!(Popularity::<f64>::from_probabilities(vec![0.4, 0.6]).is_err());
        assert!(Popularity::<f64>::from_probabilities(vec![0.5, 0.4]).is_err());
        assert!(Popularity::<f64>::from_probabilities(vec![]).is_err());
    }

    #[test]
    fn most_popular() {
        let z = Popularity::<f64>::zipf(5, 0.7).unwrap();
        let p = Placement::most_popular(&z, 2).unwrap();
        assert_eq!(p.probabilities(), &[1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.total(), 2.0);
        assert_eq!(Placement::most_popular(&z, 0).unwrap().total(), 0.0);
        assert_eq!(
            Placement::most_popular(&z, 5).unwrap().probabilities(),
            &[1.0; 5]
        );
        assert!(Placement::most_popular(&z, 6).is_err());
    }

    #[test]
    fn placement_validation() {
        assert!(Placement::<f64>::new(vec![0.5, 1.2], 2).is_err());
        assert!(Placement::<f64>::new(vec![0.9, 0.9], 1).is_err());
        assert!(Placement::<f64>::new(vec![0.5, 0.5], 1).is_ok());
    }

    #[test]
    fn sampling_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let all = Placement::<f64>::new(vec![1.0; 6], 6).unwrap();
        assert_eq!(all.sample_cache_contents(&mut rng), vec![0, 1, 2, 3, 4, 5]);
        let none = Placement::<f64>::new(vec![0.0; 6], 6).unwrap();
        assert!(none.sample_cache_contents(&mut rng).is_empty());
    }

    #[test]
    fn sampling_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = vec![0.9, 0.5, 0.25, 0.05];
        let pol = Placement::<f64>::new(p.clone(), 2).unwrap();
        let draws = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            for i in pol.sample_cache_contents(&mut rng) {
                counts[i] += 1;
            }
        }
        for (c, pi) in counts.iter().zip(&p) {
            let freq = *c as f64 / draws as f64;
            let sd = (pi * (1.0 - pi) / draws as f64).sqrt();
            assert!((freq - pi).abs() < 3.0 * sd, "{freq} vs {pi}");
        }
    }

    #[test]
    fn single_precision_profile() {
        let z = Popularity::<f32>::zipf(20, 0.7).unwrap();
        let s: f32 = z.probabilities().iter().sum();
        assert!((s - 1.0).abs() < 1e-5);
    }
}
