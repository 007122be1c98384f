//! Cache placement: maximise the approximate network hit probability of a
//! user at the cloud centre under the memory budget `Σ p_i ≤ N_c`.
//!
//! Both objectives are sums of concave one-dimensional terms `q_i·F(p_i)`,
//! so the Hessian is diagonal. Closest selection is solved by alternating a
//! projected (diagonally scaled) gradient ascent on the Lagrangian in `p`
//! with a bracketing update of the multiplier. Best selection has the closed
//! form `p_i = clamp((v + ln q_i)/C)` with `v` found by bisection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::content::{Placement, Popularity};
use crate::error::{domain, Error, Result};
use crate::hitprob::{ApproxKernel, HitModel};
use crate::interference::RadioParams;
use crate::quadrature::bisect;
use crate::CloudGeometry;

/// An objective `Σ_i q_i·F_i(p_i)` with concave terms.
pub trait SeparableObjective: Sync {
    fn len(&self) -> usize;

    /// `q_i·F_i(p)` and its first two derivatives.
    fn term(&self, i: usize, p: f64) -> [f64; 3];

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn value(&self, p: &[f64]) -> f64 {
        p.iter()
            .enumerate()
            .map(|(i, &pi)| self.term(i, pi)[0])
            .sum()
    }

    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .enumerate()
            .map(|(i, &pi)| self.term(i, pi)[1])
            .collect()
    }
}

/// Approximate closest-selection network hit at the cloud centre.
#[derive(Debug, Clone)]
pub struct ClosestObjective {
    q: Vec<f64>,
    kernel: ApproxKernel,
}

impl ClosestObjective {
    pub fn new(
        profile: &Popularity<f64>,
        params: RadioParams,
        geom: CloudGeometry,
    ) -> Result<Self> {
        Self::from_model(profile, &HitModel::new(params, geom.at_distance(0.0)?)?)
    }

    /// Objective of an existing model; it must describe a user at the centre.
    pub fn from_model(profile: &Popularity<f64>, model: &HitModel) -> Result<Self> {
        if model.geometry().x_norm != 0.0 {
            return domain("placement is designed for a user at the cloud centre");
        }
        Ok(Self {
            q: profile.probabilities().to_vec(),
            kernel: model.approx_kernel(),
        })
    }
}

impl SeparableObjective for ClosestObjective {
    fn len(&self) -> usize {
        self.q.len()
    }

    fn term(&self, i: usize, p: f64) -> [f64; 3] {
        self.kernel.closest(p).map(|v| self.q[i] * v)
    }
}

/// Approximate best-selection network hit at the cloud centre,
/// `Σ_i q_i·(1 − e^{−C·p_i})`.
#[derive(Debug, Clone)]
pub struct BestObjective {
    q: Vec<f64>,
    rate: f64,
}

impl BestObjective {
    pub fn new(
        profile: &Popularity<f64>,
        params: RadioParams,
        geom: CloudGeometry,
    ) -> Result<Self> {
        Self::from_model(profile, &HitModel::new(params, geom.at_distance(0.0)?)?)
    }

    /// Objective of an existing model; it must describe a user at the centre.
    pub fn from_model(profile: &Popularity<f64>, model: &HitModel) -> Result<Self> {
        if model.geometry().x_norm != 0.0 {
            return domain("placement is designed for a user at the cloud centre");
        }
        Ok(Self::with_rate(profile, model.approx_kernel().best_rate()))
    }

    pub fn with_rate(profile: &Popularity<f64>, rate: f64) -> Self {
        Self {
            q: profile.probabilities().to_vec(),
            rate,
        }
    }

    /// The constant `C`.
    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl SeparableObjective for BestObjective {
    fn len(&self) -> usize {
        self.q.len()
    }

    fn term(&self, i: usize, p: f64) -> [f64; 3] {
        let (c, q) = (self.rate, self.q[i]);
        let e = (-c * p).exp();
        [q * (1.0 - e), q * c * e, -q * c * c * e]
    }
}

/// Stopping rule of the iterative solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    /// Bound on the projected gradient and on `|Σ p_i − N_c|`.
    pub tol: f64,
    /// Cap on primal iterations summed over all multiplier updates.
    pub max_iterations: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iterations: 100_000,
        }
    }
}

/// Outcome of a placement optimisation.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerReport {
    pub policy: Placement<f64>,
    /// Objective at the returned policy.
    pub objective: f64,
    pub iterations: usize,
    /// `max_i |clamp(p_i + ∂_i L) − p_i|` with the returned multiplier.
    pub kkt_residual: f64,
    /// `N_c − Σ p_i`.
    pub constraint_slack: f64,
    /// Budget multiplier `μ` (for best selection, `μ = C·e^{−v}`).
    pub multiplier: f64,
}

/// Projected-gradient measure of the Lagrangian `Σ q_i F_i(p_i) − μ(Σ p_i − N_c)`.
pub fn kkt_residual(obj: &dyn SeparableObjective, p: &[f64], mu: f64) -> f64 {
    p.iter()
        .enumerate()
        .map(|(i, &pi)| ((pi + obj.term(i, pi)[1] - mu).clamp(0.0, 1.0) - pi).abs())
        .fold(0.0, f64::max)
}

fn report(
    obj: &dyn SeparableObjective,
    p: Vec<f64>,
    n_c: usize,
    mu: f64,
    iterations: usize,
) -> Result<OptimizerReport> {
    let objective = obj.value(&p);
    let kkt = kkt_residual(obj, &p, mu);
    let total: f64 = p.iter().sum();
    Ok(OptimizerReport {
        policy: Placement::new(p, n_c)?,
        objective,
        iterations,
        kkt_residual: kkt,
        constraint_slack: n_c as f64 - total,
        multiplier: mu,
    })
}

fn check_budget(n: usize, n_c: usize) -> Result<()> {
    if n == 0 {
        return domain("library must hold at least one file");
    }
    if n_c == 0 {
        return domain("memory size must be positive");
    }
    Ok(())
}

/// Maximises the Lagrangian in `p` for a fixed multiplier, starting from `p`.
///
/// Each step moves along the projected, curvature-scaled gradient and
/// backtracks until the Lagrangian increases enough (Armijo rule).
fn maximise_lagrangian(
    obj: &dyn SeparableObjective,
    mu: f64,
    p: &mut [f64],
    settings: &OptimizerSettings,
    iterations: &mut usize,
) -> Result<f64> {
    let n = p.len();
    let lagrangian = |p: &[f64]| obj.value(p) - mu * p.iter().sum::<f64>();
    let mut dir = vec![0.0; n];
    let mut trial = vec![0.0; n];
    loop {
        let mut residual: f64 = 0.0;
        let mut step: f64 = 0.0;
        let mut slope = 0.0;
        for i in 0..n {
            let t = obj.term(i, p[i]);
            let g = t[1] - mu;
            residual = residual.max(((p[i] + g).clamp(0.0, 1.0) - p[i]).abs());
            let curvature = (-t[2]).max(1e-12 * g.abs().max(1.0));
            dir[i] = (p[i] + g / curvature).clamp(0.0, 1.0) - p[i];
            step = step.max(dir[i].abs());
            slope += g * dir[i];
        }
        // A small gradient alone does not pin p where the curvature is
        // small, so the scaled step must be small as well.
        if residual <= settings.tol && step <= 0.1 * settings.tol / n as f64 {
            return Ok(residual);
        }
        *iterations += 1;
        if *iterations > settings.max_iterations {
            return Err(Error::IterationLimit {
                iterations: *iterations,
                residual,
                best: p.to_vec(),
            });
        }
        let base = lagrangian(p);
        if slope <= 1e-13 * base.abs().max(1e-300) {
            // The predicted gain is below the resolution of the Lagrangian:
            // the Newton step is trusted without a line search.
            for i in 0..n {
                p[i] = (p[i] + dir[i]).clamp(0.0, 1.0);
            }
            continue;
        }
        let mut tau = 1.0;
        loop {
            for i in 0..n {
                trial[i] = p[i] + tau * dir[i];
            }
            let gain = lagrangian(&trial) - base;
            if gain >= 1e-4 * tau * slope || tau < 1e-12 {
                break;
            }
            tau *= 0.5;
        }
        if tau < 1e-12 {
            // No ascent left at working precision.
            return Ok(residual);
        }
        p.copy_from_slice(&trial);
    }
}

/// Maximises a separable concave objective under `Σ p_i ≤ N_c`, `p ∈ [0,1]^N`.
pub fn solve_separable(
    obj: &dyn SeparableObjective,
    n_c: usize,
    settings: &OptimizerSettings,
) -> Result<OptimizerReport> {
    let n = obj.len();
    check_budget(n, n_c)?;
    if n_c >= n {
        return report(obj, vec![1.0; n], n_c, 0.0, 0);
    }
    let mut iterations = 0;
    let budget = n_c as f64;
    let mut p = vec![budget / n as f64; n];
    // Budget slack at μ = 0 happens only with non-increasing terms.
    maximise_lagrangian(obj, 0.0, &mut p, settings, &mut iterations)?;
    if p.iter().sum::<f64>() <= budget + settings.tol {
        return report(obj, p, n_c, 0.0, iterations);
    }
    // At μ above every marginal gain at p = 0 nothing is cached.
    let mut hi = (0..n).map(|i| obj.term(i, 0.0)[1]).fold(0.0, f64::max) * (1.0 + 1e-9) + 1e-300;
    let mut lo = 0.0;
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..200 {
        mu = 0.5 * (lo + hi);
        maximise_lagrangian(obj, mu, &mut p, settings, &mut iterations)?;
        let excess = p.iter().sum::<f64>() - budget;
        if excess.abs() <= settings.tol {
            break;
        }
        if excess > 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let r = report(obj, p, n_c, mu, iterations)?;
    if r.constraint_slack.abs() > settings.tol.max(1e-12 * budget) * 10.0 {
        return Err(Error::IterationLimit {
            iterations: r.iterations,
            residual: r.constraint_slack.abs(),
            best: r.policy.probabilities().to_vec(),
        });
    }
    Ok(r)
}

/// Placement maximising the approximate closest-selection hit at the centre.
pub fn solve_problem1(
    profile: &Popularity<f64>,
    n_c: usize,
    params: RadioParams,
    geom: CloudGeometry,
    settings: &OptimizerSettings,
) -> Result<OptimizerReport> {
    let obj = ClosestObjective::new(profile, params, geom)?;
    solve_separable(&obj, n_c, settings)
}

/// Placement maximising the approximate best-selection hit at the centre,
/// in closed form.
pub fn solve_problem2(
    profile: &Popularity<f64>,
    n_c: usize,
    params: RadioParams,
    geom: CloudGeometry,
    settings: &OptimizerSettings,
) -> Result<OptimizerReport> {
    let obj = BestObjective::new(profile, params, geom)?;
    solve_best_closed_form(&obj, n_c, settings)
}

/// `p_i(v) = clamp((v + ln q_i)/C)` with `v` set by the budget.
pub fn solve_best_closed_form(
    obj: &BestObjective,
    n_c: usize,
    settings: &OptimizerSettings,
) -> Result<OptimizerReport> {
    let n = obj.len();
    check_budget(n, n_c)?;
    if n_c >= n {
        return report(obj, vec![1.0; n], n_c, 0.0, 0);
    }
    let c = obj.rate;
    if !(c > 0.0) || !c.is_finite() {
        return domain(format!(
            "best-selection rate must be positive and finite, got {c}"
        ));
    }
    let logs: Vec<f64> = obj.q.iter().map(|q| q.ln()).collect();
    let positive = obj.q.iter().filter(|&&q| q > 0.0).count();
    let budget = n_c as f64;
    let at = |v: f64| -> Vec<f64> { logs.iter().map(|l| ((v + l) / c).clamp(0.0, 1.0)).collect() };
    let excess = |v: f64| at(v).iter().sum::<f64>() - budget;
    if positive <= n_c {
        // Every requested file fits; spread the rest over unrequested files.
        let spare = (budget - positive as f64) / (n - positive) as f64;
        let p = obj
            .q
            .iter()
            .map(|&q| if q > 0.0 { 1.0 } else { spare })
            .collect();
        return report(obj, p, n_c, 0.0, 0);
    }
    let q_max = obj.q.iter().copied().fold(0.0, f64::max);
    let q_min = obj
        .q
        .iter()
        .copied()
        .filter(|&q| q > 0.0)
        .fold(f64::INFINITY, f64::min);
    // Σp(v) rises from 0 at v = −ln q_max to `positive` at v = C − ln q_min.
    let (lo, hi) = (-q_max.ln(), c - q_min.ln());
    let mut v = bisect(excess, lo, hi, 0.1 * settings.tol)?;
    // Σp is piecewise linear in v: solve exactly on the final active set.
    let p = at(v);
    let ones = p.iter().filter(|&&x| x >= 1.0).count() as f64;
    let interior: Vec<usize> = (0..n).filter(|&i| p[i] > 0.0 && p[i] < 1.0).collect();
    if !interior.is_empty() {
        let refined = (c * (budget - ones) - interior.iter().map(|&i| logs[i]).sum::<f64>())
            / interior.len() as f64;
        let q = at(refined);
        let same = (0..n).all(|i| (q[i] > 0.0 && q[i] < 1.0) == (p[i] > 0.0 && p[i] < 1.0));
        if same && excess(refined).abs() <= excess(v).abs() {
            v = refined;
        }
    }
    report(obj, at(v), n_c, c * (-v).exp(), 0)
}

/// Largest per-coordinate second difference of an objective over random
/// feasible placements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcavityReport {
    pub max_second_difference: f64,
    /// Largest relative gap between the numerical and the analytic second
    /// derivative.
    pub max_relative_mismatch: f64,
    pub policies: usize,
}

/// Checks concavity numerically with central second differences of step `h`
/// at `samples` random placements satisfying the budget.
pub fn check_concavity(
    obj: &dyn SeparableObjective,
    n_c: usize,
    samples: usize,
    h: f64,
    seed: u64,
) -> Result<ConcavityReport> {
    let n = obj.len();
    check_budget(n, n_c)?;
    if !(h > 0.0 && h < 0.25) || n as f64 * h > n_c as f64 {
        return domain(format!("step {h} too large for the budget"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut mismatch: f64 = 0.0;
    for _ in 0..samples {
        let mut p: Vec<f64> = (0..n).map(|_| rng.random_range(h..1.0 - h)).collect();
        let over: f64 = p.iter().map(|x| x - h).sum();
        let room = n_c as f64 - n as f64 * h;
        if over > room {
            let s = room / over;
            p.iter_mut().for_each(|x| *x = h + s * (*x - h));
        }
        let base = obj.value(&p);
        for i in 0..n {
            let keep = p[i];
            p[i] = keep + h;
            let up = obj.value(&p);
            p[i] = keep - h;
            let down = obj.value(&p);
            p[i] = keep;
            let second = (up - 2.0 * base + down) / (h * h);
            worst = worst.max(second);
            let exact = obj.term(i, keep)[2];
            mismatch = mismatch.max((second - exact).abs() / exact.abs().max(1e-3));
        }
    }
    Ok(ConcavityReport {
        max_second_difference: worst,
        max_relative_mismatch: mismatch,
        policies: samples,
    })
}

/// Interior-gap check of the best-selection solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapDiagnostic {
    NoInteriorPairs,
    /// Largest `|p_i − p_j − ln(q_i/q_j)/C|` over interior pairs.
    MaxDeviation {
        deviation: f64,
        pairs: usize,
    },
}

pub fn policy_gap_diagnostic(
    policy: &Placement<f64>,
    profile: &Popularity<f64>,
    rate: f64,
) -> Result<GapDiagnostic> {
    if policy.len() != profile.len() {
        return domain("placement and popularity lengths differ");
    }
    let p = policy.probabilities();
    let q = profile.probabilities();
    let interior: Vec<usize> = (0..p.len())
        .filter(|&i| p[i] > 1e-12 && p[i] < 1.0 - 1e-12)
        .collect();
    if interior.len() < 2 {
        return Ok(GapDiagnostic::NoInteriorPairs);
    }
    let mut deviation: f64 = 0.0;
    let mut pairs = 0;
    for (a, &i) in interior.iter().enumerate() {
        for &j in &interior[a + 1..] {
            deviation = deviation.max((p[i] - p[j] - (q[i] / q[j]).ln() / rate).abs());
            pairs += 1;
        }
    }
    Ok(GapDiagnostic::MaxDeviation { deviation, pairs })
}

/// Brute-force maximum over the budget face `Σ p_i = N_c` on a grid of
/// spacing `1/steps`. Intended as an oracle for a handful of files.
pub fn grid_search(
    obj: &dyn SeparableObjective,
    n_c: usize,
    steps: usize,
) -> Result<(Vec<f64>, f64)> {
    let n = obj.len();
    check_budget(n, n_c)?;
    if n > 4 {
        return domain("grid search is limited to four files");
    }
    // Tabulate each term on the grid once.
    let table: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..=steps)
                .map(|k| obj.term(i, k as f64 / steps as f64)[0])
                .collect()
        })
        .collect();
    let total = (n_c * steps) as isize;
    let mut best = (vec![0usize; n], f64::NEG_INFINITY);
    let mut idx = vec![0usize; n];
    fn walk(
        i: usize,
        left: isize,
        idx: &mut [usize],
        table: &[Vec<f64>],
        steps: usize,
        acc: f64,
        best: &mut (Vec<usize>, f64),
    ) {
        let n = idx.len();
        if i == n - 1 {
            if left < 0 || left as usize > steps {
                return;
            }
            idx[i] = left as usize;
            let v = acc + table[i][idx[i]];
            if v > best.1 {
                *best = (idx.to_vec(), v);
            }
            return;
        }
        for k in 0..=steps.min(left.max(0) as usize) {
            idx[i] = k;
            walk(
                i + 1,
                left - k as isize,
                idx,
                table,
                steps,
                acc + table[i][k],
                best,
            );
        }
    }
    walk(0, total, &mut idx, &table, steps, 0.0, &mut best);
    if best.1 == f64::NEG_INFINITY {
        return domain("budget face is empty");
    }
    Ok((
        best.0.iter().map(|&k| k as f64 / steps as f64).collect(),
        best.1,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geom() -> CloudGeometry {
        CloudGeometry::new(30.0, 2.0, 10.0).unwrap()
    }

    #[test]
    fn closed_form_uniform_popularity() {
        let z = Popularity::uniform(20).unwrap();
        let obj = BestObjective::with_rate(&z, 3.0);
        let r = solve_best_closed_form(&obj, 7, &OptimizerSettings::default()).unwrap();
        for &p in r.policy.probabilities() {
            assert!((p - 0.35).abs() < 1e-12);
        }
    }

    #[test]
    fn full_budget_caches_everything() {
        let z = Popularity::zipf(5, 0.7).unwrap();
        let obj = BestObjective::with_rate(&z, 3.0);
        let r = solve_best_closed_form(&obj, 5, &OptimizerSettings::default()).unwrap();
        assert_eq!(r.policy.probabilities(), &[1.0; 5]);
        let r = solve_separable(&obj, 6, &OptimizerSettings::default()).unwrap();
        assert_eq!(r.policy.probabilities(), &[1.0; 5]);
        assert!(solve_separable(&obj, 0, &OptimizerSettings::default()).is_err());
    }

    #[test]
    fn closed_form_matches_iterative_solver() {
        let z = Popularity::zipf(20, 0.7).unwrap();
        for rate in [0.5, 3.0, 40.0] {
            let obj = BestObjective::with_rate(&z, rate);
            let a = solve_best_closed_form(&obj, 10, &OptimizerSettings::default()).unwrap();
            let b = solve_separable(&obj, 10, &OptimizerSettings::default()).unwrap();
            assert_relative_eq!(a.objective, b.objective, epsilon = 1e-9);
            for (x, y) in a
                .policy
                .probabilities()
                .iter()
                .zip(b.policy.probabilities())
            {
                assert!((x - y).abs() < 1e-6, "{rate}: {x} vs {y}");
            }
            assert!(a.constraint_slack.abs() < 1e-9);
            assert!(a.kkt_residual < 1e-9, "{}", a.kkt_residual);
        }
    }

    #[test]
    fn large_rate_tends_to_uniform() {
        let z = Popularity::zipf(20, 0.7).unwrap();
        let obj = BestObjective::with_rate(&z, 1e6);
        let r = solve_best_closed_form(&obj, 10, &OptimizerSettings::default()).unwrap();
        for &p in r.policy.probabilities() {
            assert!((p - 0.5).abs() < 1e-5);
        }
    }

    #[test]
    fn gap_formula_holds_for_closed_form() {
        let z = Popularity::zipf(20, 0.7).unwrap();
        let obj = BestObjective::with_rate(&z, 4.0);
        let r = solve_best_closed_form(&obj, 10, &OptimizerSettings::default()).unwrap();
        match policy_gap_diagnostic(&r.policy, &z, 4.0).unwrap() {
            GapDiagnostic::MaxDeviation { deviation, pairs } => {
                assert!(pairs > 0);
                assert!(deviation < 1e-12);
            }
            GapDiagnostic::NoInteriorPairs => panic!("expected interior coordinates"),
        }
        let ones = Placement::new(vec![1.0, 1.0, 0.0], 2).unwrap();
        let z3 = Popularity::zipf(3, 0.7).unwrap();
        assert_eq!(
            policy_gap_diagnostic(&ones, &z3, 4.0).unwrap(),
            GapDiagnostic::NoInteriorPairs
        );
        let flat = Placement::new(vec![0.5, 0.5], 1).unwrap();
        let z2 = Popularity::uniform(2).unwrap();
        assert_eq!(
            policy_gap_diagnostic(&flat, &z2, 4.0).unwrap(),
            GapDiagnostic::MaxDeviation {
                deviation: 0.0,
                pairs: 1
            }
        );
    }

    #[test]
    fn closest_solution_is_stationary() {
        let z = Popularity::zipf(20, 0.7).unwrap();
        let settings = OptimizerSettings::default();
        let r = solve_problem1(&z, 10, RadioParams::reference(), geom(), &settings).unwrap();
        assert!(r.kkt_residual <= settings.tol, "{}", r.kkt_residual);
        assert!(r.constraint_slack.abs() <= settings.tol * 10.0);
        let p = r.policy.probabilities();
        assert!(p.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        // beats caching the most popular files
        let obj = ClosestObjective::new(&z, RadioParams::reference(), geom()).unwrap();
        let popular = Placement::most_popular(&z, 10).unwrap();
        assert!(r.objective >= obj.value(popular.probabilities()));
    }

    #[test]
    fn uniform_popularity_both_problems() {
        let z = Popularity::uniform(20).unwrap();
        let s = OptimizerSettings::default();
        for r in [
            solve_problem1(&z, 10, RadioParams::reference(), geom(), &s).unwrap(),
            solve_problem2(&z, 10, RadioParams::reference(), geom(), &s).unwrap(),
        ] {
            for &p in r.policy.probabilities() {
                assert!((p - 0.5).abs() < 1e-9, "{p}");
            }
        }
    }

    #[test]
    fn grid_oracle_small_library() {
        let z = Popularity::zipf(3, 0.7).unwrap();
        let obj = BestObjective::with_rate(&z, 2.0);
        let (p, v) = grid_search(&obj, 1, 200).unwrap();
        assert_relative_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let r = solve_best_closed_form(&obj, 1, &OptimizerSettings::default()).unwrap();
        assert!(r.objective >= v - 1e-12);
        assert!(r.objective - v < 1e-3);
    }

    #[test]
    fn concavity_of_best_objective() {
        let z = Popularity::zipf(20, 0.7).unwrap();
        let obj = BestObjective::with_rate(&z, 3.0);
        let rep = check_concavity(&obj, 10, 5, 1e-4, 1).unwrap();
        assert!(rep.max_second_difference <= 1e-6);
        assert!(rep.max_relative_mismatch < 1e-3);
    }
}
