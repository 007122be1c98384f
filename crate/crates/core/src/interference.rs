//! Laplace transform of the out-of-cloud interference, its derivatives and
//! moments, the two-moment Gamma surrogate and a Gil-Pelaez density.
//!
//! Interfering clouds form a Poisson process of centres with intensity
//! `λ_p`. A cloud centred at distance `x` holds a Poisson(λ·G(x)) number of RUs
//! outside the guard disk, of which `min(M, ·)` transmit. Active RUs are
//! uniform over the part of the cloud outside the guard disk and reach the
//! user with Rayleigh fading and path-loss exponent `α_o`. The probability
//! generating functional of the parent process gives
//!
//! `L(s) = exp(−2πλ_p ∫ (1 − E[Q(s,x)^n]) x dx)`,
//! `Q(s,x) = E_y[1/(1 + sP y^{−α_o})]`,
//!
//! where the distance law of `y` is the cloud's distance density restricted to
//! `y ≥ d_g` and renormalised.
//!
//! Evaluation uses a fixed node set built once per parameter set: composite
//! Gauss-Legendre panels split at every kink of the integrand in `x`, a
//! power-law map of the tail, and per-cloud inner nodes over the distance
//! density. The same nodes serve real, complex and imaginary arguments, so
//! derivatives by contour integration and the characteristic function are
//! consistent with the real transform. An adaptive reference evaluation is
//! kept for validation.

use std::f64::consts::{LN_10, PI};
use std::sync::OnceLock;

use num_complex::Complex64;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{domain, Error, Result};
use crate::geometry::{distance_pdf_raw, guard_excluded_area_raw};
use crate::quadrature::{
    integrate_semi_infinite, integrate_with_breakpoints, GaussLegendre, QuadSpec,
};
use crate::stats::poisson_pmf;
use crate::CloudGeometry;

/// Radio and density parameters, all in linear units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// Transmit power `P`.
    pub p_tx: f64,
    /// Path-loss exponent inside the user's cloud.
    pub alpha_i: f64,
    /// Path-loss exponent from other clouds.
    pub alpha_o: f64,
    /// Noise power.
    pub sigma2: f64,
    /// SINR threshold.
    pub beta: f64,
    /// RU intensity inside a cloud, per m².
    pub lambda: f64,
    /// Cloud-centre intensity, per m².
    pub lambda_p: f64,
    /// Antennas per RU.
    pub m: usize,
}

impl RadioParams {
    /// The reference parameter set used throughout the evaluation.
    pub fn reference() -> Self {
        Self {
            p_tx: 1.0,
            alpha_i: 2.5,
            alpha_o: 3.0,
            sigma2: 1e-3,
            beta: 10.0,
            lambda: 0.1,
            lambda_p: 1e-4,
            m: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.p_tx > 0.0 && self.p_tx.is_finite()) {
            problems.push(format!(
                "transmit power must be positive, got {}",
                self.p_tx
            ));
        }
        if !(self.alpha_o > 2.0 && self.alpha_o.is_finite()) {
            problems.push(format!(
                "out-of-cloud exponent must exceed 2, got {}",
                self.alpha_o
            ));
        }
        if !(self.alpha_i > 0.0 && self.alpha_i < self.alpha_o) {
            problems.push(format!(
                "in-cloud exponent must lie in (0, alpha_o = {}), got {}",
                self.alpha_o, self.alpha_i
            ));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            problems.push(format!(
                "noise power must be nonnegative, got {}",
                self.sigma2
            ));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            problems.push(format!(
                "SINR threshold must be positive, got {}",
                self.beta
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            problems.push(format!(
                "RU intensity must be nonnegative, got {}",
                self.lambda
            ));
        }
        if !(self.lambda_p >= 0.0 && self.lambda_p.is_finite()) {
            problems.push(format!(
                "cloud intensity must be nonnegative, got {}",
                self.lambda_p
            ));
        }
        if self.m == 0 {
            problems.push("antenna count must be at least 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// Node counts of the fixed evaluation rule and tolerances of the derivative
/// and reference routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LtSettings {
    /// Nodes per finite outer panel.
    pub panel_nodes: usize,
    /// Number of geometric panels of the mapped tail.
    pub tail_panels: usize,
    /// Nodes per tail panel.
    pub tail_nodes: usize,
    /// Nodes over the part of a cloud closer than its lens region.
    pub uniform_nodes: usize,
    /// Nodes over the lens region of a cloud.
    pub lens_nodes: usize,
    /// Nodes on the differentiation contour (even).
    pub contour_nodes: usize,
    /// Absolute tolerance on the scaled derivatives `s^m/m!·|d^m/ds^m|`.
    pub derivative_tol: f64,
    /// Relative tolerance of the adaptive reference evaluation.
    pub reference_rel_tol: f64,
}

impl Default for LtSettings {
    fn default() -> Self {
        Self {
            panel_nodes: 32,
            tail_panels: 24,
            tail_nodes: 12,
            uniform_nodes: 16,
            lens_nodes: 24,
            contour_nodes: 64,
            derivative_tol: 1e-8,
            reference_rel_tol: 1e-9,
        }
    }
}

/// Arithmetic shared by real and complex transform arguments.
trait LtArg:
    Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Mul<f64, Output = Self>
    + From<f64>
{
}

impl LtArg for f64 {}
impl LtArg for Complex64 {}

/// Laplace transform of the out-of-cloud interference.
#[derive(Debug, Clone)]
pub struct InterferenceLt {
    params: RadioParams,
    d: f64,
    d_g: f64,
    settings: LtSettings,
    /// `2πλ_p·x·dx` per outer node.
    outer_w: Vec<f64>,
    /// Active-count law `P(n = j)`, `j = 0..=M`, per outer node.
    mix: Vec<f64>,
    inner_start: Vec<usize>,
    /// `P·y^{−α_o}` per inner node.
    inner_c: Vec<f64>,
    /// Normalised distance weights per inner node.
    inner_w: Vec<f64>,
    mean: f64,
    second_moment: f64,
    survival: OnceLock<SurvivalTable>,
}

/// Scaled derivatives `t_m = (−s)^m/m!·d^m/ds^m[e^{−sσ²}L(s)]`, `m = 0..=M`.
///
/// Each `t_m` equals `E[(sX)^m e^{−sX}/m!]` with `X = I + σ²`, so it lies in
/// `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledDerivatives {
    pub s: f64,
    pub terms: Vec<f64>,
    pub error: f64,
}

impl ScaledDerivatives {
    /// Signed derivative `d^m/ds^m[e^{−sσ²}L(s)]`.
    pub fn derivative(&self, m: usize) -> f64 {
        let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * self.terms[m] * (ln_gamma(m as f64 + 1.0) - m as f64 * self.s.ln()).exp()
    }
}

fn dedup_sorted(mut v: Vec<f64>, tol: f64) -> Vec<f64> {
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup_by(|a, b| (*a - *b).abs() <= tol);
    v
}

impl InterferenceLt {
    pub fn new(params: RadioParams, geom: &CloudGeometry) -> Result<Self> {
        Self::with_settings(params, geom, LtSettings::default())
    }

    pub fn with_settings(
        params: RadioParams,
        geom: &CloudGeometry,
        settings: LtSettings,
    ) -> Result<Self> {
        params.validate()?;
        if settings.contour_nodes < 8 || !settings.contour_nodes.is_multiple_of(4) {
            return domain("contour node count must be a multiple of 4, at least 8");
        }
        let mut lt = Self {
            params,
            d: geom.d,
            d_g: geom.d_g,
            settings,
            outer_w: Vec::new(),
            mix: Vec::new(),
            inner_start: vec![0],
            inner_c: Vec::new(),
            inner_w: Vec::new(),
            mean: 0.0,
            second_moment: 0.0,
            survival: OnceLock::new(),
        };
        if params.lambda_p > 0.0 && params.lambda > 0.0 {
            lt.build_nodes();
        }
        lt.compute_moments();
        Ok(lt)
    }

    pub fn params(&self) -> &RadioParams {
        &self.params
    }

    pub fn cloud_radius(&self) -> f64 {
        self.d
    }

    pub fn guard_radius(&self) -> f64 {
        self.d_g
    }

    pub fn settings(&self) -> &LtSettings {
        &self.settings
    }

    /// Smallest centre distance at which a cloud has RUs outside the guard disk.
    fn x_min(&self) -> f64 {
        (self.d_g - self.d).max(0.0)
    }

    /// Where the tail map starts: beyond it the guard disk no longer cuts the cloud.
    fn tail_start(&self) -> f64 {
        self.d + self.d_g
    }

    /// Kinks of the outer integrand on the finite part of the range.
    fn outer_breakpoints(&self) -> Vec<f64> {
        let (d, g) = (self.d, self.d_g);
        let lo = self.x_min();
        let hi = self.tail_start();
        let pts = [lo, d - g, (d - g).abs(), d, hi]
            .into_iter()
            .filter(|&x| x >= lo && x <= hi)
            .collect();
        dedup_sorted(pts, 1e-12 * d)
    }

    /// Pieces of the distance range `[max(d_g, ·), D + x]` on which the
    /// density has a single formula: `(lo, hi, is_lens)`.
    fn inner_pieces(&self, x: f64) -> Vec<(f64, f64, bool)> {
        let (d, g) = (self.d, self.d_g);
        let mut pieces = Vec::with_capacity(2);
        let lens_lo = (d - x).abs();
        if x < d && d - x > g {
            pieces.push((g, d - x, false));
        }
        let lo = lens_lo.max(g);
        if d + x > lo && x > 0.0 {
            pieces.push((lo, d + x, true));
        }
        pieces
    }

    fn build_nodes(&mut self) {
        let s = self.settings;
        let panel = GaussLegendre::<f64>::new(s.panel_nodes);
        let tail = GaussLegendre::<f64>::new(s.tail_nodes);
        let uniform = GaussLegendre::<f64>::new(s.uniform_nodes);
        let lens = GaussLegendre::<f64>::new(s.lens_nodes);
        let scale = 2.0 * PI * self.params.lambda_p;

        let mut outer: Vec<(f64, f64)> = Vec::new();
        for w in self.outer_breakpoints().windows(2) {
            outer.extend(panel.cos_mapped(w[0], w[1]));
        }
        // Tail: x = a·u^{−κ}, κ = 1/(α_o − 2); the far-field integrand is flat in u.
        let a = self.tail_start().max(1e-9 * self.d);
        let kappa = 1.0 / (self.params.alpha_o - 2.0);
        let map = |(u, w): (f64, f64)| (a * u.powf(-kappa), w * a * kappa * u.powf(-kappa - 1.0));
        outer.extend(tail.cos_mapped(0.5, 1.0).map(map));
        for k in 1..s.tail_panels {
            let hi = 0.5f64.powi(k as i32);
            outer.extend(tail.on_interval(0.5 * hi, hi).map(map));
        }
        outer.extend(
            tail.on_interval(0.0, 0.5f64.powi(s.tail_panels as i32))
                .map(map),
        );

        let m = self.params.m;
        let area = PI * self.d * self.d;
        for (x, wx) in outer {
            let g_area = guard_excluded_area_raw(self.d, self.d_g, x);
            if !(g_area > 0.0) || !(wx > 0.0) || !x.is_finite() {
                continue;
            }
            let start = self.inner_c.len();
            let mut total = 0.0;
            for (lo, hi, is_lens) in self.inner_pieces(x) {
                let nodes: Vec<(f64, f64)> = if is_lens {
                    lens.cos_mapped(lo, hi).collect()
                } else if lo > 0.0 {
                    // y = lo·(hi/lo)^t, dy = y·ln(hi/lo)·dt
                    let ratio = (hi / lo).ln();
                    uniform
                        .on_interval(0.0, 1.0)
                        .map(|(t, w)| {
                            let y = lo * (ratio * t).exp();
                            (y, w * y * ratio)
                        })
                        .collect()
                } else {
                    uniform.on_interval(lo, hi).collect()
                };
                for (y, w) in nodes {
                    let wf = w * distance_pdf_raw(self.d, x, y);
                    if wf > 0.0 {
                        self.inner_c
                            .push(self.params.p_tx * y.powf(-self.params.alpha_o));
                        self.inner_w.push(wf);
                        total += wf;
                    }
                }
            }
            if !(total > 0.0) {
                self.inner_c.truncate(start);
                self.inner_w.truncate(start);
                continue;
            }
            for w in &mut self.inner_w[start..] {
                *w /= total;
            }
            self.inner_start.push(self.inner_c.len());
            self.outer_w.push(scale * x * wx);

            let mu = self.params.lambda * g_area.min(area);
            let mut below = 0.0;
            for j in 0..m {
                let pj = poisson_pmf(j, mu);
                self.mix.push(pj);
                below += pj;
            }
            self.mix.push((1.0 - below).max(0.0));
        }
    }

    /// `Σ_a W_a (1 − E[Q_a(z)^n])`, accumulated as `1 − Q^{j+1} = (1 − Q^j) + Q^j(1 − Q)`
    /// so that small arguments lose no precision.
    fn exponent<Z: LtArg>(&self, z: Z) -> Z {
        let one = Z::from(1.0);
        let zero = Z::from(0.0);
        let m = self.params.m;
        let mut psi = zero;
        for (a, &wa) in self.outer_w.iter().enumerate() {
            let (s0, s1) = (self.inner_start[a], self.inner_start[a + 1]);
            let mut u = zero;
            for (&c, &w) in self.inner_c[s0..s1].iter().zip(&self.inner_w[s0..s1]) {
                let zc = z * c;
                u = u + zc / (one + zc) * w;
            }
            let q = one - u;
            let mix = &self.mix[a * (m + 1)..(a + 1) * (m + 1)];
            let mut miss = zero; // 1 − Q^j
            let mut qj = one; // Q^j
            let mut acc = zero;
            for &pj in &mix[1..] {
                miss = miss + qj * u;
                qj = qj * q;
                if pj != 0.0 {
                    acc = acc + miss * pj;
                }
            }
            psi = psi + acc * wa;
        }
        psi
    }

    /// `L(s)` for real `s ≥ 0`.
    pub fn eval(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 1.0;
        }
        (-self.exponent(s)).exp()
    }

    /// `L(z)` for complex `z` with `Re z ≥ 0`.
    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        (-self.exponent(z)).exp()
    }

    /// `−ln L(s)`.
    pub fn log_eval(&self, s: f64) -> f64 {
        if s == 0.0 {
            0.0
        } else {
            -self.exponent(s)
        }
    }

    /// `1 − E[Q(s,x)^n]` by adaptive quadrature, for any centre distance `x`.
    ///
    /// `1 − Q` is integrated directly so that distant clouds, where it is
    /// tiny, keep full relative accuracy.
    pub fn inner_miss(&self, s: f64, x: f64) -> Result<f64> {
        if x < self.x_min() {
            return domain(format!("cloud at distance {x} lies inside the guard disk"));
        }
        let g_area = guard_excluded_area_raw(self.d, self.d_g, x);
        if !(g_area > 0.0) || self.params.lambda == 0.0 || s == 0.0 {
            return Ok(0.0);
        }
        let spec = QuadSpec::new(self.settings.reference_rel_tol, 1e-300);
        let p = self.params;
        let (mut mass, mut u) = (0.0, 0.0);
        for (lo, hi, _) in self.inner_pieces(x) {
            let pdf = |y: f64| distance_pdf_raw(self.d, x, y);
            mass += integrate_with_breakpoints(pdf, &[lo, hi], &spec)?.value;
            let frac = |y: f64| {
                let sc = s * p.p_tx * y.powf(-p.alpha_o);
                pdf(y) * sc / (1.0 + sc)
            };
            u += integrate_with_breakpoints(frac, &[lo, hi], &spec)?.value;
        }
        if !(mass > 0.0) {
            return Ok(0.0);
        }
        u /= mass;
        let q = 1.0 - u;
        let mu = p.lambda * g_area;
        let (mut below, mut miss, mut qj, mut acc) = (0.0, 0.0, 1.0, 0.0);
        for j in 1..=p.m {
            miss += qj * u;
            qj *= q;
            let pj = if j < p.m {
                let v = poisson_pmf(j, mu);
                below += v;
                v
            } else {
                (1.0 - below - poisson_pmf(0, mu)).max(0.0)
            };
            acc += pj * miss;
        }
        Ok(acc)
    }

    /// `E[Q(s,x)^n]` by adaptive quadrature.
    pub fn inner_expectation(&self, s: f64, x: f64) -> Result<f64> {
        Ok(1.0 - self.inner_miss(s, x)?)
    }

    /// Inner expectation for a cloud whose centre lies inside the cloud radius.
    pub fn inner_near(&self, s: f64, x: f64) -> Result<f64> {
        if !(x >= 0.0 && x < self.d.max(self.d_g - self.d)) {
            return domain(format!(
                "near-cloud branch needs x < {}, got {x}",
                self.d.max(self.d_g - self.d)
            ));
        }
        self.inner_expectation(s, x)
    }

    /// Inner expectation for a cloud whose centre lies beyond the cloud radius.
    pub fn inner_far(&self, s: f64, x: f64) -> Result<f64> {
        if !(x >= self.d.max(self.d_g - self.d)) {
            return domain(format!(
                "far-cloud branch needs x >= {}, got {x}",
                self.d.max(self.d_g - self.d)
            ));
        }
        self.inner_expectation(s, x)
    }

    /// `L(s)` by nested adaptive quadrature. Slow; used to validate [`Self::eval`].
    pub fn eval_reference(&self, s: f64) -> Result<f64> {
        if s == 0.0 || self.params.lambda_p == 0.0 || self.params.lambda == 0.0 {
            return Ok(1.0);
        }
        let spec = QuadSpec::new(self.settings.reference_rel_tol, 1e-300);
        let scale = 2.0 * PI * self.params.lambda_p;
        let integrand = |x: f64| -> f64 {
            match self.inner_miss(s, x) {
                Ok(v) => scale * x * v,
                Err(_) => f64::NAN,
            }
        };
        let near = integrate_with_breakpoints(integrand, &self.outer_breakpoints(), &spec)?;
        let a = self.tail_start();
        let far = integrate_semi_infinite(integrand, a, a.max(1.0), &spec)?;
        Ok((-(near.value + far.value)).exp())
    }

    /// `e^{−zσ²}L(z)` on the differentiation contour.
    fn shifted(&self, z: Complex64) -> Complex64 {
        (-(z * self.params.sigma2) - self.exponent(z)).exp()
    }

    fn contour_terms(&self, s: f64, nodes: usize, max_order: usize) -> (Vec<f64>, Vec<f64>) {
        // Circle of radius s/2 about s; values at conjugate nodes are conjugate.
        let rho = 0.5 * s;
        let half = nodes / 2;
        let mut g = Vec::with_capacity(half + 1);
        for k in 0..=half {
            let theta = 2.0 * PI * k as f64 / nodes as f64;
            let z = Complex64::new(s + rho * theta.cos(), rho * theta.sin());
            g.push(self.shifted(z));
        }
        let at = |k: usize| if k <= half { g[k] } else { g[nodes - k].conj() };
        let coeffs = |step: usize| -> Vec<f64> {
            let count = nodes / step;
            (0..=max_order)
                .map(|m| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..count {
                        let k = j * step;
                        let phase = -2.0 * PI * (m * k % nodes) as f64 / nodes as f64;
                        acc += at(k) * Complex64::from_polar(1.0, phase);
                    }
                    // (−s)^m/m!·g^{(m)}(s) = (−s/ρ)^m·(Taylor coefficient·ρ^m) = (−2)^m·mean
                    (-2.0f64).powi(m as i32) * acc.re / count as f64
                })
                .collect()
        };
        (coeffs(1), coeffs(2))
    }

    /// Scaled derivatives of `e^{−sσ²}L(s)` of orders `0..=max_order` at `s > 0`.
    ///
    /// Cauchy's formula on a circle of radius `s/2` with the trapezoidal rule;
    /// the error estimate compares against the rule on every other node. If
    /// that fails the tolerance the contour is refined, and as a last resort
    /// Richardson-extrapolated central differences are tried.
    pub fn scaled_derivatives(&self, s: f64, max_order: usize) -> Result<ScaledDerivatives> {
        if !(s > 0.0 && s.is_finite()) {
            return domain(format!(
                "derivatives need a positive finite argument, got {s}"
            ));
        }
        let tol = self.settings.derivative_tol;
        let mut best: Option<ScaledDerivatives> = None;
        for nodes in [self.settings.contour_nodes, 4 * self.settings.contour_nodes] {
            let (full, coarse) = self.contour_terms(s, nodes, max_order);
            let error = full
                .iter()
                .zip(&coarse)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let terms = full.into_iter().map(|t| t.max(0.0)).collect();
            let cand = ScaledDerivatives { s, terms, error };
            if error <= tol {
                return Ok(cand);
            }
            if best.as_ref().is_none_or(|b| cand.error < b.error) {
                best = Some(cand);
            }
        }
        if let Ok(fd) = self.finite_difference_terms(s, max_order) {
            if fd.error <= tol {
                return Ok(fd);
            }
            if best.as_ref().is_none_or(|b| fd.error < b.error) {
                best = Some(fd);
            }
        }
        let achieved = best.map(|b| b.error).unwrap_or(f64::INFINITY);
        Err(Error::Numerical {
            what: format!("derivatives of the interference transform at s = {s:e}"),
            achieved,
            requested: tol,
        })
    }

    /// Central-difference fallback with one Richardson step.
    fn finite_difference_terms(&self, s: f64, max_order: usize) -> Result<ScaledDerivatives> {
        let g = |z: f64| (-z * self.params.sigma2).exp() * self.eval(z);
        let diff = |h: f64, m: usize| -> f64 {
            // m-th central difference, nodes s + (m/2 − k)h
            let mut acc = 0.0;
            let mut binom = 1.0;
            for k in 0..=m {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * binom * g(s + (m as f64 / 2.0 - k as f64) * h);
                binom = binom * (m - k) as f64 / (k + 1) as f64;
            }
            acc / h.powi(m as i32)
        };
        let mut terms = Vec::with_capacity(max_order + 1);
        let mut error: f64 = 0.0;
        for m in 0..=max_order {
            if m == 0 {
                terms.push(g(s));
                continue;
            }
            let h = s / (4.0 * m as f64);
            let d1 = diff(h, m);
            let d2 = diff(h / 2.0, m);
            let rich = (4.0 * d2 - d1) / 3.0;
            let scale = (m as f64 * s.ln() - ln_gamma(m as f64 + 1.0)).exp();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            terms.push((sign * rich * scale).max(0.0));
            error = error.max(((rich - d2) * scale).abs());
        }
        Ok(ScaledDerivatives { s, terms, error })
    }

    /// Signed derivative `d^m/ds^m[e^{−sσ²}L(s)]` at `s > 0`.
    pub fn derivative(&self, m: usize, s: f64) -> Result<f64> {
        if m > self.params.m {
            return domain(format!("derivative order {m} exceeds the antenna count"));
        }
        if m == 0 {
            return Ok((-s * self.params.sigma2).exp() * self.eval(s));
        }
        Ok(self.scaled_derivatives(s, m)?.derivative(m))
    }

    fn compute_moments(&mut self) {
        let m = self.params.m;
        let (mut e1, mut extra) = (0.0, 0.0);
        for (a, &wa) in self.outer_w.iter().enumerate() {
            let (s0, s1) = (self.inner_start[a], self.inner_start[a + 1]);
            let (mut m1, mut m2) = (0.0, 0.0);
            for (&c, &w) in self.inner_c[s0..s1].iter().zip(&self.inner_w[s0..s1]) {
                m1 += w * c;
                m2 += w * c * c;
            }
            let mix = &self.mix[a * (m + 1)..(a + 1) * (m + 1)];
            let (mut en, mut enn) = (0.0, 0.0);
            for (j, &pj) in mix.iter().enumerate() {
                let jf = j as f64;
                en += pj * jf;
                enn += pj * jf * (jf - 1.0);
            }
            e1 += wa * en * m1;
            // Exponential fading doubles the second moment of each received power.
            extra += wa * (enn * m1 * m1 + 2.0 * en * m2);
        }
        self.mean = e1;
        self.second_moment = e1 * e1 + extra;
    }

    /// `(E[I], E[I²])`, read off the expansion of `L` at zero.
    pub fn moments(&self) -> (f64, f64) {
        (self.mean, self.second_moment)
    }

    /// Gamma law with the first two moments of the interference.
    pub fn gamma_fit(&self) -> Result<GammaSurrogate> {
        GammaSurrogate::from_moments(self.mean, self.second_moment)
    }

    /// `P(I > γ)` by numerical inversion of `(1 − L(s))/s` with the Euler
    /// algorithm of Abate and Whitt: a trapezoidal rule on the Bromwich line
    /// accelerated by binomial averaging of the partial sums.
    pub fn survival(&self, gamma: f64) -> f64 {
        if gamma <= 0.0 {
            return if self.mean > 0.0 { 1.0 } else { 0.0 };
        }
        if !(self.mean > 0.0) {
            return 0.0;
        }
        let weights = euler_weights();
        let n = EULER_TERMS;
        let base = n as f64 * LN_10 / 3.0;
        let mut acc = 0.0;
        for (k, &eta) in weights.iter().enumerate() {
            let z = Complex64::new(base, PI * k as f64) / gamma;
            let psi = self.exponent(z);
            // 1 − e^{−Ψ}, with a series where Ψ is small
            let one_minus = if psi.norm() < 1e-3 {
                psi * (1.0 - psi * (0.5 - psi * (1.0 / 6.0 - psi / 24.0)))
            } else {
                1.0 - (-psi).exp()
            };
            acc += eta * (one_minus / z).re;
        }
        (10f64.powf(n as f64 / 3.0) / gamma * acc).clamp(0.0, 1.0)
    }

    /// Nodes `γ_j` and weights `w_j·P(I > γ_j)` for
    /// `E[G(I)] = G(0) + ∫ G'(γ) P(I > γ) dγ`, cached on first use.
    pub fn survival_table(&self) -> &SurvivalTable {
        self.survival.get_or_init(|| SurvivalTable::new(self))
    }

    /// Density of the interference by Gil-Pelaez inversion, tabulated for
    /// arguments up to `gamma_max`.
    pub fn gil_pelaez(&self, gamma_max: f64) -> Result<GilPelaez> {
        GilPelaez::new(self, gamma_max)
    }
}

/// Number of Euler terms; `2·EULER_TERMS + 1` transform evaluations per point.
const EULER_TERMS: usize = 16;

fn euler_weights() -> &'static [f64] {
    static W: OnceLock<Vec<f64>> = OnceLock::new();
    W.get_or_init(|| {
        let m = EULER_TERMS;
        let mut xi = vec![1.0; 2 * m + 1];
        xi[0] = 0.5;
        let tail = 0.5f64.powi(m as i32);
        xi[2 * m] = tail;
        let mut binom = 1.0;
        for k in 1..m {
            binom = binom * (m - k + 1) as f64 / k as f64;
            xi[2 * m - k] = xi[2 * m - k + 1] + tail * binom;
        }
        xi.iter()
            .enumerate()
            .map(|(k, &x)| if k % 2 == 0 { x } else { -x })
            .collect()
    })
}

/// Integration rule against the interference survival function.
#[derive(Debug, Clone)]
pub struct SurvivalTable {
    /// Interference values.
    pub nodes: Vec<f64>,
    /// Quadrature weight times `P(I > γ)` at each node.
    pub weights: Vec<f64>,
}

impl SurvivalTable {
    fn new(lt: &InterferenceLt) -> Self {
        let mean = lt.mean;
        if !(mean > 0.0) {
            return Self {
                nodes: Vec::new(),
                weights: Vec::new(),
            };
        }
        // Extend the range until the survival function is negligible.
        let mut top = 4.0 * mean;
        while lt.survival(top) > 1e-12 && top < 1e6 * mean {
            top *= 2.0;
        }
        let rule = GaussLegendre::<f64>::new(16);
        let mut edges = vec![0.0];
        let mut e = mean * 0.5f64.powi(20);
        while e < top {
            edges.push(e);
            e *= 2.0;
        }
        edges.push(top);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for p in edges.windows(2) {
            for (g, w) in rule.on_interval(p[0], p[1]) {
                nodes.push(g);
                weights.push(w * lt.survival(g));
            }
        }
        Self { nodes, weights }
    }

    /// `E[G(I)]` from `G(0)` and the derivative of `G` on the nodes.
    pub fn expectation(&self, g0: f64, dg: impl Fn(f64) -> f64) -> f64 {
        g0 + self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * dg(x))
            .sum::<f64>()
    }
}

/// Gamma distribution matched to the first two interference moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSurrogate {
    pub tau: f64,
    pub zeta: f64,
}

impl GammaSurrogate {
    pub fn from_moments(mean: f64, second_moment: f64) -> Result<Self> {
        let var = second_moment - mean * mean;
        if !(mean > 0.0) || !(var > 1e-14 * mean * mean) || !var.is_finite() {
            return domain(format!(
                "degenerate interference moments (mean {mean:e}, second moment {second_moment:e})"
            ));
        }
        Ok(Self {
            tau: mean * mean / var,
            zeta: var / mean,
        })
    }

    pub fn mean(&self) -> f64 {
        self.tau * self.zeta
    }

    pub fn second_moment(&self) -> f64 {
        self.tau * (self.tau + 1.0) * self.zeta * self.zeta
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        ((self.tau - 1.0) * x.ln() - x / self.zeta - ln_gamma(self.tau) - self.tau * self.zeta.ln())
            .exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            gamma_lr(self.tau, x / self.zeta)
        }
    }

    /// Nodes and weights for `E[h(X)]`, `X ~ Gamma(τ, ζ)`.
    ///
    /// With `w = (x/ζ)^τ` the expectation becomes
    /// `∫ h(ζ w^{1/τ}) e^{−w^{1/τ}} dw / Γ(τ+1)`, which has no endpoint
    /// singularity for any shape. Geometric panels resolve the cusp of the
    /// weight at zero.
    pub fn expectation_nodes(&self, nodes_per_panel: usize) -> Vec<(f64, f64)> {
        let rule = GaussLegendre::<f64>::new(nodes_per_panel);
        let w_max = 40f64.powf(self.tau);
        let norm = (-ln_gamma(self.tau + 1.0)).exp();
        // The first panel carries mass of about its width times `norm`.
        let first = 1e-17 / norm;
        let mut panels = vec![0.0];
        let mut edge = first.min(w_max);
        while edge < w_max {
            panels.push(edge);
            edge *= 4.0;
        }
        panels.push(w_max);
        let mut out = Vec::with_capacity(panels.len() * nodes_per_panel);
        for p in panels.windows(2) {
            for (w, wt) in rule.on_interval(p[0], p[1]) {
                let u = w.powf(1.0 / self.tau);
                out.push((self.zeta * u, wt * (-u).exp() * norm));
            }
        }
        out
    }
}

/// Interference density from the characteristic function,
/// `f(γ) = (1/π) ∫_0^∞ Re{e^{−iγω} L(−iω)} dω`.
#[derive(Debug, Clone)]
pub struct GilPelaez {
    omega: Vec<f64>,
    weight: Vec<f64>,
    phi: Vec<Complex64>,
    gamma_max: f64,
    /// Size of the characteristic function where the table stops.
    pub truncation: f64,
}

impl GilPelaez {
    fn new(lt: &InterferenceLt, gamma_max: f64) -> Result<Self> {
        let (mean, _) = lt.moments();
        if !(mean > 0.0) {
            return domain("interference is identically zero");
        }
        if !(gamma_max > 0.0) {
            return domain("density range must be positive");
        }
        // Panels short enough to resolve e^{−iγω} for γ up to gamma_max.
        let width = PI / (gamma_max + mean);
        let rule = GaussLegendre::<f64>::new(16);
        let (mut omega, mut weight, mut phi) = (Vec::new(), Vec::new(), Vec::new());
        let mut lo = 0.0;
        let mut truncation = 1.0;
        let max_panels = 2_000_000;
        for _ in 0..max_panels {
            let hi = lo + width;
            let mut peak: f64 = 0.0;
            for (w, wt) in rule.on_interval(lo, hi) {
                let v = lt.eval_complex(Complex64::new(0.0, -w));
                peak = peak.max(v.norm());
                omega.push(w);
                weight.push(wt);
                phi.push(v);
            }
            lo = hi;
            truncation = peak;
            if peak < 1e-10 {
                return Ok(Self {
                    omega,
                    weight,
                    phi,
                    gamma_max,
                    truncation,
                });
            }
        }
        Err(Error::Numerical {
            what: "characteristic function of the interference does not decay".into(),
            achieved: truncation,
            requested: 1e-10,
        })
    }

    pub fn pdf(&self, gamma: f64) -> f64 {
        debug_assert!(gamma <= self.gamma_max * (1.0 + 1e-12));
        let mut acc = 0.0;
        for ((&w, &wt), &v) in self.omega.iter().zip(&self.weight).zip(&self.phi) {
            acc += wt * (Complex64::from_polar(1.0, -gamma * w) * v).re;
        }
        acc / PI
    }

    pub fn gamma_max(&self) -> f64 {
        self.gamma_max
    }
}
