//! Monte Carlo ground truth: samples the clustered network around a user at
//! the origin, applies the transmission and selection rules, and estimates
//! hit probabilities and interference statistics.
//!
//! Trials are split into fixed blocks of [`BLOCK_TRIALS`]. Block `b` draws from
//! its own ChaCha8 stream `(seed, b)`, and block results are reduced in block
//! order. Estimates therefore depend only on `(configuration, seed, trials)`,
//! whatever the thread count.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::content::{Placement, Popularity};
use crate::error::{domain, Result};
use crate::hitprob::Strategy;
use crate::interference::RadioParams;
use crate::stats::{gamma_tail_integer, ks_test, poisson_pmf, KsReport};
use crate::CloudGeometry;

/// Trials per independent random substream.
pub const BLOCK_TRIALS: usize = 2048;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// A probability estimate with its 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorResult {
    pub estimate: f64,
    pub half_width: f64,
    pub trials: usize,
    pub seed: u64,
}

impl EstimatorResult {
    fn binomial(hits: u64, trials: usize, seed: u64) -> Self {
        let p = hits as f64 / trials as f64;
        Self {
            estimate: p,
            half_width: Z95 * (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
            seed,
        }
    }

    /// Whether `value` lies inside the confidence interval.
    pub fn covers(&self, value: f64) -> bool {
        (value - self.estimate).abs() <= self.half_width
    }

    /// Whether `value` lies within `k` standard errors.
    pub fn within_sigmas(&self, value: f64, k: f64) -> bool {
        (value - self.estimate).abs() <= k * self.half_width / Z95
    }
}

/// Per-file and network hit estimates for one strategy and threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct HitEstimate {
    pub per_file: Vec<EstimatorResult>,
    /// Estimate of `Σ_i q_i·P_i^hit`. Its interval comes from the sample
    /// variance of the per-trial weighted hit indicator, which accounts for
    /// the correlation between files sharing a realization.
    pub network: EstimatorResult,
}

/// One draw of the network seen from a user at the origin.
#[derive(Debug, Clone, Default)]
pub struct NetworkRealization {
    /// Centre of the user's cloud.
    pub centre: [f64; 2],
    /// RUs of the user's cloud.
    pub ru_positions: Vec<[f64; 2]>,
    /// Distances of those RUs to the user.
    pub ru_distances: Vec<f64>,
    /// Effective channel gain of each RU towards the user.
    pub ru_gains: Vec<f64>,
    /// Cache flags, row-major: `cached[j·files + i]` when RU `j` holds file `i`.
    pub cached: Vec<bool>,
    pub files: usize,
    /// Number of active RUs in the user's cloud, `min{M, RU count}`.
    pub active: usize,
    /// Centres of interfering clouds inside the window.
    pub interferer_centres: Vec<[f64; 2]>,
    /// RUs of each interfering cloud outside the guard disk.
    pub interferer_eligible: Vec<usize>,
    /// `interferer_offsets[c]..interferer_offsets[c + 1]` indexes the active
    /// RUs of cloud `c`.
    pub interferer_offsets: Vec<usize>,
    pub active_positions: Vec<[f64; 2]>,
    pub active_gains: Vec<f64>,
    /// Aggregate interference power, including the far-field mean.
    pub interference: f64,
}

impl NetworkRealization {
    fn clear(&mut self) {
        self.ru_positions.clear();
        self.ru_distances.clear();
        self.ru_gains.clear();
        self.cached.clear();
        self.interferer_centres.clear();
        self.interferer_eligible.clear();
        self.interferer_offsets.clear();
        self.active_positions.clear();
        self.active_gains.clear();
        self.interference = 0.0;
    }

    pub fn ru_count(&self) -> usize {
        self.ru_distances.len()
    }

    pub fn is_cached(&self, ru: usize, file: usize) -> bool {
        self.cached[ru * self.files + file]
    }
}

/// Draws Gamma(shape, 1) variates, with the unit-shape case sampled directly.
#[derive(Debug, Clone, Copy)]
enum GainLaw {
    Exponential,
    Gamma(Gamma<f64>),
}

impl GainLaw {
    fn new(shape: usize) -> Self {
        if shape == 1 {
            GainLaw::Exponential
        } else {
            GainLaw::Gamma(Gamma::new(shape as f64, 1.0).expect("positive shape"))
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            GainLaw::Exponential => Exp1.sample(rng),
            GainLaw::Gamma(g) => g.sample(rng),
        }
    }
}

fn poisson_count<R: Rng + ?Sized>(law: &Option<Poisson<f64>>, rng: &mut R) -> usize {
    law.as_ref().map_or(0, |p| p.sample(rng) as usize)
}

/// Uniform point in a disk, by rejection from the enclosing square.
fn uniform_in_disk<R: Rng + ?Sized>(rng: &mut R, cx: f64, cy: f64, radius: f64) -> [f64; 2] {
    loop {
        let u = 2.0 * rng.random::<f64>() - 1.0;
        let v = 2.0 * rng.random::<f64>() - 1.0;
        if u * u + v * v <= 1.0 {
            return [cx + radius * u, cy + radius * v];
        }
    }
}

/// `r2^{−α/2}`, avoiding `powf` when `α` is a multiple of one half.
#[derive(Debug, Clone, Copy)]
enum PathLoss {
    Half(i32),
    General(f64),
}

impl PathLoss {
    fn new(alpha: f64) -> Self {
        let twice = 2.0 * alpha;
        if twice.fract() == 0.0 && twice <= 40.0 {
            PathLoss::Half(twice as i32)
        } else {
            PathLoss::General(-0.5 * alpha)
        }
    }

    fn of_squared(self, r2: f64) -> f64 {
        match self {
            // r2^{−k/4}: k/4 = (k div 4) + remainder quarters
            PathLoss::Half(k) => {
                let whole = r2.powi(k / 4);
                let rest = match k % 4 {
                    0 => 1.0,
                    2 => r2.sqrt(),
                    1 => r2.sqrt().sqrt(),
                    _ => r2.sqrt() * r2.sqrt().sqrt(),
                };
                1.0 / (whole * rest)
            }
            PathLoss::General(e) => r2.powf(e),
        }
    }
}

fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

/// Sampler for one parameter set and one user position.
#[derive(Debug, Clone)]
pub struct Simulator {
    params: RadioParams,
    geom: CloudGeometry,
    window: f64,
    far_field: f64,
    ru_law: Option<Poisson<f64>>,
    parent_law: Option<Poisson<f64>>,
}

impl Simulator {
    /// Sampler with the default parent window `40·D + d_g`.
    pub fn new(params: RadioParams, geom: CloudGeometry) -> Result<Self> {
        params.validate()?;
        if geom.x_norm > geom.d {
            return domain(format!(
                "user at distance {} lies outside the cloud of radius {}",
                geom.x_norm, geom.d
            ));
        }
        Self::build(params, geom, 40.0 * geom.d + geom.d_g)
    }

    /// Replaces the parent window radius; it must exceed `D + d_g`.
    pub fn with_window(self, window: f64) -> Result<Self> {
        if !(window > self.geom.d + self.geom.d_g) || !window.is_finite() {
            return domain(format!("window radius {window} must exceed D + d_g"));
        }
        Self::build(self.params, self.geom, window)
    }

    fn build(params: RadioParams, geom: CloudGeometry, window: f64) -> Result<Self> {
        let law = |mean: f64| {
            if mean > 0.0 {
                Poisson::new(mean)
                    .map(Some)
                    .map_err(|e| crate::Error::Domain(e.to_string()))
            } else {
                Ok(None)
            }
        };
        let ru_mean = params.lambda * geom.cloud_area();
        let mut sim = Self {
            params,
            geom,
            window,
            far_field: 0.0,
            ru_law: law(ru_mean)?,
            parent_law: law(params.lambda_p * PI * window * window)?,
        };
        sim.far_field = sim.far_field_mean();
        Ok(sim)
    }

    pub fn params(&self) -> &RadioParams {
        &self.params
    }

    pub fn geometry(&self) -> &CloudGeometry {
        &self.geom
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    /// Mean interference from clouds beyond the window, added to every draw.
    ///
    /// A cloud at distance `x ≫ D` contributes on average
    /// `E[min{M, K}]·P·x^{−α}(1 + α²D²/(8x²))`, the second term being the
    /// spread of its RUs over the disk.
    pub fn far_field(&self) -> f64 {
        self.far_field
    }

    fn far_field_mean(&self) -> f64 {
        let p = &self.params;
        let mean = p.lambda * self.geom.cloud_area();
        let mut below = 0.0;
        let mut partial = 0.0;
        for k in 0..p.m {
            let w = poisson_pmf(k, mean);
            below += w;
            partial += k as f64 * w;
        }
        let active = partial + p.m as f64 * (1.0 - below).max(0.0);
        let (a, r, d) = (p.alpha_o, self.window, self.geom.d);
        let radial = r.powf(2.0 - a) / (a - 2.0) + a * d * d / 8.0 * r.powf(-a);
        2.0 * PI * p.lambda_p * active * p.p_tx * radial
    }

    /// Upper bound on the interference beyond the window,
    /// `M·P·λ_p·2π ∫_{R_w}^∞ (x − D)^{−α} x dx`.
    pub fn far_field_bound(&self) -> f64 {
        let p = &self.params;
        let (a, r, d) = (p.alpha_o, self.window, self.geom.d);
        let u = r - d;
        // ∫_u^∞ t^{−α}(t + D) dt
        let radial = u.powf(2.0 - a) / (a - 2.0) + d * u.powf(1.0 - a) / (a - 1.0);
        2.0 * PI * p.lambda_p * p.m as f64 * p.p_tx * radial
    }

    /// Draws a full realization.
    pub fn sample_realization<R: Rng + ?Sized>(
        &self,
        policy: &Placement<f64>,
        rng: &mut R,
    ) -> NetworkRealization {
        let mut real = NetworkRealization::default();
        self.sample_into(policy, rng, &mut real);
        real
    }

    /// Draws a realization into a reusable buffer.
    pub fn sample_into<R: Rng + ?Sized>(
        &self,
        policy: &Placement<f64>,
        rng: &mut R,
        real: &mut NetworkRealization,
    ) {
        real.clear();
        let (d, m) = (self.geom.d, self.params.m);
        let cx = self.geom.x_norm;
        real.centre = [cx, 0.0];
        let k = poisson_count(&self.ru_law, rng);
        for _ in 0..k {
            let pos = uniform_in_disk(rng, cx, 0.0, d);
            real.ru_positions.push(pos);
            real.ru_distances.push(pos[0].hypot(pos[1]));
        }
        real.active = k.min(m);
        let gains = GainLaw::new(m - real.active.max(1) + 1);
        for _ in 0..k {
            real.ru_gains.push(gains.sample(rng));
        }
        real.files = policy.len();
        real.cached.resize(k * real.files, false);
        for row in real.cached.chunks_mut(real.files.max(1)) {
            policy.fill_cache_flags(rng, row);
        }
        self.sample_interferers(rng, real);
    }

    /// Samples the interfering clouds and sets `real.interference`.
    fn sample_interferers<R: Rng + ?Sized>(&self, rng: &mut R, real: &mut NetworkRealization) {
        let (d, d_g, m) = (self.geom.d, self.geom.d_g, self.params.m);
        let (p_tx, loss) = (self.params.p_tx, PathLoss::new(self.params.alpha_o));
        let mut scratch: Vec<[f64; 2]> = Vec::new();
        let clouds = poisson_count(&self.parent_law, rng);
        real.interferer_offsets.push(0);
        for _ in 0..clouds {
            let c = uniform_in_disk(rng, 0.0, 0.0, self.window);
            real.interferer_centres.push(c);
            let count = poisson_count(&self.ru_law, rng);
            if c[0].hypot(c[1]) < d + d_g {
                // The cloud reaches into the guard disk: only RUs outside it
                // may transmit; pick the active ones uniformly among those.
                scratch.clear();
                for _ in 0..count {
                    let y = uniform_in_disk(rng, c[0], c[1], d);
                    if y[0].hypot(y[1]) >= d_g {
                        scratch.push(y);
                    }
                }
                real.interferer_eligible.push(scratch.len());
                let chosen = scratch.len().min(m);
                for i in 0..chosen {
                    let j = rng.random_range(i..scratch.len());
                    scratch.swap(i, j);
                }
                real.active_positions.extend_from_slice(&scratch[..chosen]);
            } else {
                // Every RU is eligible, and a uniform subset of i.i.d. uniform
                // points is itself i.i.d. uniform.
                real.interferer_eligible.push(count);
                for _ in 0..count.min(m) {
                    let y = uniform_in_disk(rng, c[0], c[1], d);
                    real.active_positions.push(y);
                }
            }
            real.interferer_offsets.push(real.active_positions.len());
        }
        let mut total = 0.0;
        for y in &real.active_positions {
            let g: f64 = Exp1.sample(rng);
            real.active_gains.push(g);
            total += p_tx * g * loss.of_squared(y[0] * y[0] + y[1] * y[1]);
        }
        real.interference = total + self.far_field;
    }

    /// Received signal power from the RU serving `file`, if any RU caches it.
    pub fn signal(
        &self,
        real: &NetworkRealization,
        file: usize,
        strategy: Strategy,
    ) -> Option<f64> {
        let (p_tx, alpha) = (self.params.p_tx, self.params.alpha_i);
        let candidates = (0..real.ru_count()).filter(|&j| real.is_cached(j, file));
        match strategy {
            Strategy::Closest => candidates
                .min_by(|&a, &b| real.ru_distances[a].total_cmp(&real.ru_distances[b]))
                .map(|j| p_tx * real.ru_gains[j] * real.ru_distances[j].powf(-alpha)),
            Strategy::Best => candidates
                .map(|j| p_tx * real.ru_gains[j] * real.ru_distances[j].powf(-alpha))
                .max_by(|a, b| a.total_cmp(b)),
        }
    }

    /// SINR of the request for `file`; `None` when no RU caches it.
    pub fn sinr(&self, real: &NetworkRealization, file: usize, strategy: Strategy) -> Option<f64> {
        self.signal(real, file, strategy)
            .map(|s| s / (self.params.sigma2 + real.interference))
    }

    /// Whether the request for `file` is served above the threshold.
    pub fn simulate_hit(&self, real: &NetworkRealization, file: usize, strategy: Strategy) -> bool {
        self.sinr(real, file, strategy)
            .is_some_and(|s| s > self.params.beta)
    }

    /// Hit estimates at the configured threshold.
    pub fn estimate_hit(
        &self,
        profile: &Popularity<f64>,
        policy: &Placement<f64>,
        strategy: Strategy,
        trials: usize,
        seed: u64,
    ) -> Result<HitEstimate> {
        let mut all = self.estimate_hits(profile, policy, &[self.params.beta], trials, seed)?;
        let [closest, best] = all.pop().expect("one threshold");
        Ok(match strategy {
            Strategy::Closest => closest,
            Strategy::Best => best,
        })
    }

    /// Hit estimates for several thresholds and both strategies from the same
    /// realizations; the result is indexed `[threshold][closest, best]`.
    pub fn estimate_hits(
        &self,
        profile: &Popularity<f64>,
        policy: &Placement<f64>,
        betas: &[f64],
        trials: usize,
        seed: u64,
    ) -> Result<Vec<[HitEstimate; 2]>> {
        if trials == 0 {
            return domain("at least one trial is required");
        }
        if profile.len() != policy.len() {
            return domain(format!(
                "popularity has {} files but the placement has {}",
                profile.len(),
                policy.len()
            ));
        }
        if betas.iter().any(|b| !(*b > 0.0)) {
            return domain("SINR thresholds must be positive");
        }
        let files = policy.len();
        let q = profile.probabilities();
        let cells = betas.len() * 2;
        let blocks = trials.div_ceil(BLOCK_TRIALS);
        let partials: Vec<Tally> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = block_rng(seed, b);
                let n = BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS);
                let mut tally = Tally::new(cells, files);
                let mut real = NetworkRealization::default();
                let mut z = vec![0.0; cells];
                for _ in 0..n {
                    self.sample_into(policy, &mut rng, &mut real);
                    let noise = self.params.sigma2 + real.interference;
                    z.iter_mut().for_each(|v| *v = 0.0);
                    for (s, strategy) in [Strategy::Closest, Strategy::Best].into_iter().enumerate()
                    {
                        for i in 0..files {
                            let Some(sig) = self.signal(&real, i, strategy) else {
                                continue;
                            };
                            let ratio = sig / noise;
                            for (bi, &beta) in betas.iter().enumerate() {
                                if ratio > beta {
                                    let cell = bi * 2 + s;
                                    tally.hits[cell * files + i] += 1;
                                    z[cell] += q[i];
                                }
                            }
                        }
                    }
                    for (c, &v) in z.iter().enumerate() {
                        tally.z[c] += v;
                        tally.z2[c] += v * v;
                    }
                }
                tally
            })
            .collect();
        let mut total = Tally::new(cells, files);
        for t in &partials {
            total.absorb(t);
        }
        let nf = trials as f64;
        let estimate = |cell: usize| {
            let per_file = (0..files)
                .map(|i| EstimatorResult::binomial(total.hits[cell * files + i], trials, seed))
                .collect();
            let mean = total.z[cell] / nf;
            let var = if trials > 1 {
                ((total.z2[cell] - nf * mean * mean) / (nf - 1.0)).max(0.0)
            } else {
                0.0
            };
            HitEstimate {
                per_file,
                network: EstimatorResult {
                    estimate: mean,
                    half_width: Z95 * (var / nf).sqrt(),
                    trials,
                    seed,
                },
            }
        };
        Ok((0..betas.len())
            .map(|bi| [estimate(bi * 2), estimate(bi * 2 + 1)])
            .collect())
    }

    /// Independent draws of the out-of-cloud interference power.
    pub fn sample_interference(&self, trials: usize, seed: u64) -> Vec<f64> {
        let blocks = trials.div_ceil(BLOCK_TRIALS);
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = block_rng(seed, b);
                let n = BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS);
                let mut real = NetworkRealization::default();
                (0..n)
                    .map(|_| {
                        real.clear();
                        self.sample_interferers(&mut rng, &mut real);
                        real.interference
                    })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
            .concat()
    }

    /// Draws of the strongest received power `max_j P·g_j·‖y_j‖^{−α_i}` over
    /// `k` RUs uniform in the cloud, with `g_j ~ Gamma(M − l + 1, 1)`.
    pub fn sample_max_power(
        &self,
        l: usize,
        k: usize,
        samples: usize,
        seed: u64,
    ) -> Result<Vec<f64>> {
        if k == 0 {
            return domain("maximum over an empty set of RUs");
        }
        if l > self.params.m {
            return domain(format!(
                "active count {l} exceeds antenna count {}",
                self.params.m
            ));
        }
        let gains = GainLaw::new(self.params.m - l + 1);
        let (p_tx, alpha, d, cx) = (
            self.params.p_tx,
            self.params.alpha_i,
            self.geom.d,
            self.geom.x_norm,
        );
        let blocks = samples.div_ceil(BLOCK_TRIALS);
        Ok((0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = block_rng(seed, b);
                let n = BLOCK_TRIALS.min(samples - b * BLOCK_TRIALS);
                (0..n)
                    .map(|_| {
                        (0..k)
                            .map(|_| {
                                let y = uniform_in_disk(&mut rng, cx, 0.0, d);
                                p_tx * gains.sample(&mut rng) * y[0].hypot(y[1]).powf(-alpha)
                            })
                            .fold(0.0, f64::max)
                    })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
            .concat())
    }
}

#[derive(Debug, Clone)]
struct Tally {
    hits: Vec<u64>,
    z: Vec<f64>,
    z2: Vec<f64>,
}

impl Tally {
    fn new(cells: usize, files: usize) -> Self {
        Self {
            hits: vec![0; cells * files],
            z: vec![0.0; cells],
            z2: vec![0.0; cells],
        }
    }

    fn absorb(&mut self, other: &Tally) {
        self.hits
            .iter_mut()
            .zip(&other.hits)
            .for_each(|(a, b)| *a += b);
        self.z.iter_mut().zip(&other.z).for_each(|(a, b)| *a += b);
        self.z2.iter_mut().zip(&other.z2).for_each(|(a, b)| *a += b);
    }
}

/// Zero-forcing gain check: draws `M`-antenna Rayleigh channels for the
/// intended user and `l − 1` nulled users, projects the intended channel onto
/// the orthogonal complement of the others, and tests the resulting gain
/// `|hᴴv|²` against Gamma(M − l + 1, 1).
pub fn validate_zf_gain(m: usize, l: usize, trials: usize, seed: u64) -> Result<KsReport> {
    if l == 0 || l > m {
        return domain(format!("need 1 <= l <= M, got l = {l}, M = {m}"));
    }
    if trials == 0 {
        return domain("at least one trial is required");
    }
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    let mut gains: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let n = BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS);
            let draw = |rng: &mut ChaCha8Rng| -> Vec<Complex64> {
                (0..m)
                    .map(|_| {
                        let re: f64 = StandardNormal.sample(rng);
                        let im: f64 = StandardNormal.sample(rng);
                        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                    })
                    .collect()
            };
            (0..n)
                .map(|_| {
                    let h = draw(&mut rng);
                    // Orthonormal basis of the nulled users' channels.
                    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(l - 1);
                    for _ in 1..l {
                        let mut u = draw(&mut rng);
                        for q in &basis {
                            let c: Complex64 = q.iter().zip(&u).map(|(a, b)| a.conj() * b).sum();
                            u.iter_mut().zip(q).for_each(|(x, qi)| *x -= c * qi);
                        }
                        let norm = u.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                        u.iter_mut().for_each(|x| *x /= norm);
                        basis.push(u);
                    }
                    let mut r = h.clone();
                    for q in &basis {
                        let c: Complex64 = q.iter().zip(&r).map(|(a, b)| a.conj() * b).sum();
                        r.iter_mut().zip(q).for_each(|(x, qi)| *x -= c * qi);
                    }
                    let norm = r.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                    // Beamformer matched to the projected channel.
                    let gain: Complex64 = h.iter().zip(&r).map(|(a, b)| a.conj() * b / norm).sum();
                    gain.norm_sqr()
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat();
    let shape = m - l + 1;
    Ok(ks_test(&mut gains, |x| 1.0 - gamma_tail_integer(shape, x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_sim(x: f64) -> Simulator {
        Simulator::new(
            RadioParams::reference(),
            CloudGeometry::new(30.0, 2.0, x).unwrap(),
        )
        .unwrap()
    }

    fn popular() -> (Popularity<f64>, Placement<f64>) {
        let z = Popularity::zipf(20, 0.7).unwrap();
        let p = Placement::most_popular(&z, 10).unwrap();
        (z, p)
    }

    #[test]
    fn no_parents_no_interference() {
        let params = RadioParams {
            lambda_p: 0.0,
            ..RadioParams::reference()
        };
        let sim = Simulator::new(params, CloudGeometry::new(30.0, 2.0, 10.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (_, pol) = popular();
        for _ in 0..20 {
            let r = sim.sample_realization(&pol, &mut rng);
            assert!(r.interferer_centres.is_empty());
            assert_eq!(r.interference, 0.0);
        }
    }

    #[test]
    fn ru_count_is_poisson() {
        let sim = reference_sim(10.0);
        let (_, pol) = popular();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 10_000;
        let mut real = NetworkRealization::default();
        let mut sum = 0.0;
        for _ in 0..n {
            sim.sample_into(&pol, &mut rng, &mut real);
            sum += real.ru_count() as f64;
        }
        let mean = 0.1 * PI * 900.0;
        let sd = (mean / n as f64).sqrt();
        assert!((sum / n as f64 - mean).abs() < 3.0 * sd);
    }

    #[test]
    fn realization_invariants() {
        let sim = reference_sim(0.0);
        let (_, pol) = popular();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let r = sim.sample_realization(&pol, &mut rng);
            for p in &r.ru_positions {
                assert!((p[0] - r.centre[0]).hypot(p[1] - r.centre[1]) <= 30.0);
            }
            for y in &r.active_positions {
                assert!(y[0].hypot(y[1]) >= 2.0);
            }
            assert_eq!(r.active, r.ru_count().min(10));
            for c in 0..r.interferer_centres.len() {
                let active = r.interferer_offsets[c + 1] - r.interferer_offsets[c];
                assert_eq!(active, r.interferer_eligible[c].min(10));
                let centre = r.interferer_centres[c];
                for y in &r.active_positions[r.interferer_offsets[c]..r.interferer_offsets[c + 1]] {
                    assert!((y[0] - centre[0]).hypot(y[1] - centre[1]) <= 30.0 + 1e-9);
                }
            }
        }
    }

    #[test]
    fn guard_clouds_are_sampled() {
        // A tiny window packed with clouds forces guard-disk overlaps.
        let params = RadioParams {
            lambda_p: 1e-2,
            ..RadioParams::reference()
        };
        let sim = Simulator::new(params, CloudGeometry::new(30.0, 2.0, 0.0).unwrap())
            .unwrap()
            .with_window(40.0)
            .unwrap();
        let (_, pol) = popular();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let r = sim.sample_realization(&pol, &mut rng);
        assert!(!r.interferer_centres.is_empty());
        assert!(r.active_positions.iter().all(|y| y[0].hypot(y[1]) >= 2.0));
    }

    #[test]
    fn noiseless_isolated_cloud_always_serves_cached_files() {
        let params = RadioParams {
            sigma2: 0.0,
            lambda_p: 0.0,
            beta: 1e6,
            ..RadioParams::reference()
        };
        let sim = Simulator::new(params, CloudGeometry::new(30.0, 2.0, 10.0).unwrap()).unwrap();
        let (_, pol) = popular();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let r = sim.sample_realization(&pol, &mut rng);
            for i in 0..20 {
                let cached = (0..r.ru_count()).any(|j| r.is_cached(j, i));
                for s in [Strategy::Closest, Strategy::Best] {
                    assert_eq!(sim.simulate_hit(&r, i, s), cached);
                }
            }
        }
    }

    #[test]
    fn best_selection_never_loses_to_closest() {
        let sim = reference_sim(10.0);
        let z = Popularity::zipf(20, 0.7).unwrap();
        let pol = Placement::new(vec![0.5; 20], 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let r = sim.sample_realization(&pol, &mut rng);
            for i in 0..z.len() {
                let c = sim.signal(&r, i, Strategy::Closest);
                let b = sim.signal(&r, i, Strategy::Best);
                assert_eq!(c.is_some(), b.is_some());
                if let (Some(c), Some(b)) = (c, b) {
                    assert!(b >= c);
                }
            }
        }
    }

    #[test]
    fn single_trial_is_binary() {
        let sim = reference_sim(10.0);
        let (z, pol) = popular();
        let est = sim.estimate_hit(&z, &pol, Strategy::Best, 1, 9).unwrap();
        for f in &est.per_file {
            assert!(f.estimate == 0.0 || f.estimate == 1.0);
        }
        assert!(sim.estimate_hit(&z, &pol, Strategy::Best, 0, 9).is_err());
    }

    #[test]
    fn interval_shrinks_with_trials() {
        let sim = reference_sim(10.0);
        let z = Popularity::zipf(20, 0.7).unwrap();
        let pol = Placement::new(vec![0.5; 20], 10).unwrap();
        let a = sim
            .estimate_hit(&z, &pol, Strategy::Closest, 4000, 10)
            .unwrap();
        let b = sim
            .estimate_hit(&z, &pol, Strategy::Closest, 8000, 11)
            .unwrap();
        let ratio = a.per_file[0].half_width / b.per_file[0].half_width;
        assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.2, "{ratio}");
        let ratio = a.network.half_width / b.network.half_width;
        assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn estimates_do_not_depend_on_thread_count() {
        let sim = reference_sim(10.0);
        let (z, pol) = popular();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sim.estimate_hits(&z, &pol, &[1.0, 10.0], 5000, 42).unwrap())
        };
        assert_eq!(run(1), run(3));
        let again = sim.estimate_hits(&z, &pol, &[1.0, 10.0], 5000, 42).unwrap();
        assert_eq!(run(2), again);
        let other = sim.estimate_hits(&z, &pol, &[1.0, 10.0], 5000, 43).unwrap();
        assert_ne!(again, other);
    }

    #[test]
    fn path_loss_shortcut_matches_powf() {
        for alpha in [2.0, 2.25, 2.5, 2.75, 3.0, 3.5, 4.0, 5.5, 3.1] {
            let loss = PathLoss::new(alpha);
            for r2 in [0.3, 4.0, 1234.5] {
                let want = f64::powf(r2, -alpha / 2.0);
                assert!(
                    (loss.of_squared(r2) / want - 1.0).abs() < 1e-14,
                    "{alpha} {r2}"
                );
            }
        }
    }

    #[test]
    fn far_field_is_small_and_bounded() {
        let sim = reference_sim(10.0);
        assert!(sim.far_field() > 0.0);
        assert!(sim.far_field() < sim.far_field_bound());
        assert!(sim.far_field() < 0.01 * sim.params().sigma2);
    }

    #[test]
    fn zf_gain_limits() {
        for (m, l) in [(4, 1), (4, 4)] {
            let r = validate_zf_gain(m, l, 20_000, 12).unwrap();
            assert!(r.p_value > 0.01, "{m} {l}: {r:?}");
        }
        assert!(validate_zf_gain(4, 5, 10, 1).is_err());
        assert!(validate_zf_gain(4, 0, 10, 1).is_err());
    }
}
