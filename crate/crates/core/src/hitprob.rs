//! Conditional and network hit probabilities for the closest and best
//! selection strategies, exact and approximate.
//!
//! Cache counts in the user's cloud are Poisson: `μ₁ = λpπD²` RUs hold the
//! requested file and `μ₀ = λ(1−p)πD²` do not. With `l = min(M, n)` active RUs
//! the zero-forcing gain of the serving RU is Gamma(M−l+1, 1). The infinite
//! Poisson sums over cache counts are resummed in closed form: every count
//! combination with at least `M` RUs shares the saturated gain law, so only
//! the finitely many combinations with fewer than `M` RUs need explicit terms.
//! No truncation is involved.
//!
//! All integrals over the serving distance use one fixed composite
//! Gauss-Legendre grid per model; the file-independent parts of the integrands
//! are tabulated on it once, so evaluating many cache probabilities is cheap.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::content::{Placement, Popularity};
use crate::error::{domain, Error, Result};
use crate::geometry::{distance_cdf_raw, distance_pdf_raw};
use crate::interference::{InterferenceLt, RadioParams};
use crate::quadrature::{integrate_with_breakpoints, GaussLegendre, QuadSpec};
use crate::stats::{gamma_tail_integer, gamma_tails_integer, poisson_pmf};
use crate::CloudGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Closest,
    Best,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    Approximate,
}

/// Interference law used inside the exact best-selection expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterferenceLaw {
    /// Two-moment Gamma fit.
    GammaSurrogate,
    /// Density from numerical inversion of the characteristic function.
    GilPelaez,
    /// Survival function from numerical inversion of the Laplace transform.
    #[default]
    LaplaceInversion,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Closest => "closest",
            Strategy::Best => "best",
        })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Approximate => "approx",
        })
    }
}

/// Typical active-RU count assumed by the approximations and the matching
/// Alzer constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveL {
    pub l: usize,
    pub eta: f64,
}

impl EffectiveL {
    /// `L = min(M, ⌊λπD²⌋)`, raised to 1 when clouds hold fewer than one RU
    /// on average, and `η = ((M−L+1)!)^{−1/(M−L+1)}`.
    pub fn new(params: &RadioParams, d: f64) -> Self {
        let mean = params.lambda * PI * d * d;
        let floor = if mean.is_finite() {
            mean.floor().max(0.0) as usize
        } else {
            params.m
        };
        let l = floor.min(params.m).max(1);
        let n = (params.m - l + 1) as f64;
        let eta = (-ln_gamma(n + 1.0) / n).exp();
        Self { l, eta }
    }

    /// Number of terms of the alternating sum, `M − L + 1`.
    pub fn order(&self, m: usize) -> usize {
        m - self.l + 1
    }
}

/// Binomial coefficient as a float.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    (ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0))
        .exp()
        .round()
}

/// Alternating-sum weight of the approximations at scaled argument `u = βr^{α_i}/P`:
/// `Σ_m (−1)^{m+1} C(n,m) e^{−ηmuσ²} L(ηmu)`.
pub(crate) fn alzer_weight(lt: &InterferenceLt, eff: &EffectiveL, u: f64) -> f64 {
    let p = lt.params();
    let n = eff.order(p.m);
    let mut acc = 0.0;
    for m in 1..=n {
        let s = eff.eta * m as f64 * u;
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        acc += sign * binomial(n, m) * (-s * p.sigma2).exp() * lt.eval(s);
    }
    acc
}

/// Fixed integration grid over the distance from the user to a cloud point,
/// with the distance density and distribution tabulated.
#[derive(Debug, Clone)]
pub struct DistanceGrid {
    pub r: Vec<f64>,
    pub w: Vec<f64>,
    pub pdf: Vec<f64>,
    pub cdf: Vec<f64>,
}

impl DistanceGrid {
    /// Panels double from 0.25 m outwards, which resolves the nearest-point
    /// law at any density, and split at the kinks of the distance density.
    pub fn new(geom: &CloudGeometry, nodes_per_panel: usize) -> Self {
        let (d, x) = (geom.d, geom.x_norm);
        let hi = d + x;
        let mut pts = vec![0.0, hi];
        if x > 0.0 {
            pts.push((d - x).abs());
        }
        let mut edge = 0.25;
        while edge < hi {
            pts.push(edge);
            edge *= 2.0;
        }
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * hi);
        let rule = GaussLegendre::<f64>::new(nodes_per_panel);
        let mut grid = Self {
            r: Vec::new(),
            w: Vec::new(),
            pdf: Vec::new(),
            cdf: Vec::new(),
        };
        for p in pts.windows(2) {
            for (r, w) in rule.cos_mapped(p[0], p[1]) {
                grid.r.push(r);
                grid.w.push(w);
                grid.pdf.push(distance_pdf_raw(d, x, r));
                grid.cdf.push(distance_cdf_raw(d, x, r));
            }
        }
        grid
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

/// The approximations as explicit functions of the cache probability `p`.
///
/// With `a = λπD²`, node weights `ω_j = w_j·f(r_j)·w_A(r_j)` and distribution
/// values `F_j`, closest selection gives `Σ_j ω_j·a·p·e^{−a·p·F_j}` and best
/// selection `1 − e^{−a·p·Σ_j ω_j}`.
#[derive(Debug, Clone)]
pub struct ApproxKernel {
    pub weight: Vec<f64>,
    pub cdf: Vec<f64>,
    pub cloud_mean: f64,
}

impl ApproxKernel {
    /// Closest-selection approximation and its first two derivatives in `p`.
    pub fn closest(&self, p: f64) -> [f64; 3] {
        let a = self.cloud_mean;
        let mut out = [0.0; 3];
        for (&w, &c) in self.weight.iter().zip(&self.cdf) {
            let e = w * a * (-a * p * c).exp();
            out[0] += e * p;
            out[1] += e * (1.0 - a * p * c);
            out[2] += e * a * c * (a * p * c - 2.0);
        }
        out
    }

    /// The constant `C = a·Σ_j ω_j` of the best-selection approximation.
    pub fn best_rate(&self) -> f64 {
        self.cloud_mean * self.weight.iter().sum::<f64>()
    }

    /// Best-selection approximation and its first two derivatives in `p`.
    pub fn best(&self, p: f64) -> [f64; 3] {
        let c = self.best_rate();
        let e = (-c * p).exp();
        [1.0 - e, c * e, -c * c * e]
    }
}

/// Closest-exact table: `h_l(r) = Σ_{m=0}^{M−l} t_m(βr^{α_i}/P)` for `l = 1..=M`,
/// stored row-major with `M` entries per distance node.
#[derive(Debug)]
struct ClosestTable {
    h: Vec<f64>,
    derivative_error: f64,
}

/// Best-exact table: `c_l(γ)` for `l = 1..=M` per interference node, the
/// probability that one caching RU clears the threshold under interference γ.
#[derive(Debug)]
///
/// With `by_parts` the first row is `γ = 0` and the remaining weights multiply
/// the derivative of the integrand, `E[G(I)] = G(0) + ∫ G'(γ) P(I > γ) dγ`;
/// `dc` then holds `∂c_l/∂γ`.
struct BestTable {
    weights: Vec<f64>,
    c: Vec<f64>,
    dc: Vec<f64>,
    by_parts: bool,
}

/// Everything needed to evaluate hit probabilities for one parameter set and
/// one user position.
#[derive(Debug)]
pub struct HitModel {
    params: RadioParams,
    geom: CloudGeometry,
    lt: Arc<InterferenceLt>,
    law: InterferenceLaw,
    eff: EffectiveL,
    grid: DistanceGrid,
    closest: OnceLock<ClosestTable>,
    best: OnceLock<BestTable>,
    alzer: OnceLock<Vec<f64>>,
}

/// Nodes per panel of the distance grid.
const GRID_NODES: usize = 20;

fn lt_compatible(lt: &InterferenceLt, b: &RadioParams, geom: &CloudGeometry) -> bool {
    let a = lt.params();
    a.p_tx == b.p_tx
        && a.alpha_o == b.alpha_o
        && a.sigma2 == b.sigma2
        && a.lambda == b.lambda
        && a.lambda_p == b.lambda_p
        && a.m == b.m
        && lt.cloud_radius() == geom.d
        && lt.guard_radius() == geom.d_g
}

impl HitModel {
    /// Builds the interference transform as well.
    pub fn new(params: RadioParams, geom: CloudGeometry) -> Result<Self> {
        let lt = Arc::new(InterferenceLt::new(params, &geom)?);
        Self::with_lt(lt, params, geom)
    }

    /// Reuses an interference transform. Only the threshold, the in-cloud
    /// exponent and the user position may differ from the parameters it was
    /// built with.
    pub fn with_lt(
        lt: Arc<InterferenceLt>,
        params: RadioParams,
        geom: CloudGeometry,
    ) -> Result<Self> {
        params.validate()?;
        if !lt_compatible(&lt, &params, &geom) {
            return Err(Error::Config(
                "interference transform was built for different radio parameters".into(),
            ));
        }
        if geom.x_norm > geom.d {
            return domain(format!(
                "user at distance {} lies outside its cloud of radius {}",
                geom.x_norm, geom.d
            ));
        }
        Ok(Self {
            eff: EffectiveL::new(&params, geom.d),
            grid: DistanceGrid::new(&geom, GRID_NODES),
            params,
            geom,
            lt,
            law: InterferenceLaw::default(),
            closest: OnceLock::new(),
            best: OnceLock::new(),
            alzer: OnceLock::new(),
        })
    }

    pub fn with_law(mut self, law: InterferenceLaw) -> Self {
        self.law = law;
        self.best = OnceLock::new();
        self
    }

    pub fn params(&self) -> &RadioParams {
        &self.params
    }

    pub fn geometry(&self) -> &CloudGeometry {
        &self.geom
    }

    pub fn lt(&self) -> &Arc<InterferenceLt> {
        &self.lt
    }

    pub fn effective_l(&self) -> EffectiveL {
        self.eff
    }

    /// Mean RU count of a cloud, `λπD²`.
    pub fn cloud_mean(&self) -> f64 {
        self.params.lambda * PI * self.geom.d * self.geom.d
    }

    /// Cache-independent part of both approximations.
    pub fn approx_kernel(&self) -> ApproxKernel {
        let w = self.alzer_table();
        ApproxKernel {
            weight: (0..self.grid.len())
                .map(|j| self.grid.w[j] * self.grid.pdf[j] * w[j])
                .collect(),
            cdf: self.grid.cdf.clone(),
            cloud_mean: self.cloud_mean(),
        }
    }

    fn scaled(&self, r: f64) -> f64 {
        self.params.beta * r.powf(self.params.alpha_i) / self.params.p_tx
    }

    fn closest_table(&self) -> Result<&ClosestTable> {
        if let Some(t) = self.closest.get() {
            return Ok(t);
        }
        let m = self.params.m;
        let rows: Vec<Result<(Vec<f64>, f64)>> = self
            .grid
            .r
            .par_iter()
            .map(|&r| {
                let d = self.lt.scaled_derivatives(self.scaled(r), m)?;
                // h_l = Σ_{j=0}^{M−l} t_j, l = 1..=M
                let mut prefix = Vec::with_capacity(m);
                let mut acc = 0.0;
                for &t in &d.terms[..m] {
                    acc += t;
                    prefix.push(acc.min(1.0));
                }
                prefix.reverse();
                Ok((prefix, d.error))
            })
            .collect();
        let mut h = Vec::with_capacity(self.grid.len() * m);
        let mut derivative_error: f64 = 0.0;
        for row in rows {
            let (vals, err) = row?;
            h.extend(vals);
            derivative_error = derivative_error.max(err);
        }
        let _ = self.closest.set(ClosestTable {
            h,
            derivative_error,
        });
        Ok(self.closest.get().expect("table just stored"))
    }

    /// Largest error estimate of the tabulated transform derivatives.
    pub fn derivative_error(&self) -> Result<f64> {
        Ok(self.closest_table()?.derivative_error)
    }

    fn interference_nodes(&self) -> Result<Vec<(f64, f64)>> {
        let (mean, _) = self.lt.moments();
        if !(mean > 0.0) {
            // No interfering clouds: a point mass at zero.
            return Ok(vec![(0.0, 1.0)]);
        }
        match self.law {
            InterferenceLaw::GammaSurrogate => Ok(self.lt.gamma_fit()?.expectation_nodes(16)),
            InterferenceLaw::LaplaceInversion => {
                let table = self.lt.survival_table();
                let mut nodes = vec![(0.0, 1.0)];
                nodes.extend(
                    table
                        .nodes
                        .iter()
                        .copied()
                        .zip(table.weights.iter().copied()),
                );
                Ok(nodes)
            }
            InterferenceLaw::GilPelaez => {
                let fit = self.lt.gamma_fit()?;
                let sd = (fit.tau).sqrt() * fit.zeta;
                let gamma_max = mean + 40.0 * sd;
                let gp = self.lt.gil_pelaez(gamma_max)?;
                let rule = GaussLegendre::<f64>::new(16);
                let panels = 400;
                let width = gamma_max / panels as f64;
                let mut nodes = Vec::with_capacity(panels * 16 + 1);
                let mut mass = 0.0;
                for k in 0..panels {
                    for (g, w) in rule.on_interval(k as f64 * width, (k + 1) as f64 * width) {
                        let wt = w * gp.pdf(g).max(0.0);
                        mass += wt;
                        nodes.push((g, wt));
                    }
                }
                // Whatever mass lies beyond the table is placed at its end.
                nodes.push((gamma_max, (1.0 - mass).max(0.0)));
                Ok(nodes)
            }
        }
    }

    fn best_table(&self) -> Result<&BestTable> {
        if let Some(t) = self.best.get() {
            return Ok(t);
        }
        let m = self.params.m;
        let nodes = self.interference_nodes()?;
        let by_parts = self.law == InterferenceLaw::LaplaceInversion && nodes.len() > 1;
        let rows: Vec<(Vec<f64>, Vec<f64>)> = nodes
            .par_iter()
            .map(|&(gamma, _)| {
                let mut c = vec![0.0; m];
                let mut dc = vec![0.0; m];
                let mut tails = vec![0.0; m];
                let mut dens = vec![0.0; m];
                for k in 0..self.grid.len() {
                    let scale = self.scaled(self.grid.r[k]);
                    let x = scale * (gamma + self.params.sigma2);
                    gamma_tails_integer(x, &mut tails);
                    let wf = self.grid.w[k] * self.grid.pdf[k];
                    if by_parts {
                        // Gamma(n) densities at x, n = 1..=M
                        dens[0] = (-x).exp();
                        for n in 1..m {
                            dens[n] = dens[n - 1] * x / n as f64;
                        }
                    }
                    // c_l uses shape M − l + 1, i.e. tails[M − l]
                    for l in 1..=m {
                        c[l - 1] += wf * tails[m - l];
                        if by_parts {
                            dc[l - 1] -= wf * dens[m - l] * scale;
                        }
                    }
                }
                c.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
                (c, dc)
            })
            .collect();
        let mut c = Vec::with_capacity(rows.len() * m);
        let mut dc = Vec::with_capacity(rows.len() * m);
        for (ci, di) in rows {
            c.extend(ci);
            dc.extend(di);
        }
        let table = BestTable {
            weights: nodes.iter().map(|&(_, w)| w).collect(),
            c,
            dc,
            by_parts,
        };
        let _ = self.best.set(table);
        Ok(self.best.get().expect("table just stored"))
    }

    fn alzer_table(&self) -> &[f64] {
        self.alzer.get_or_init(|| {
            self.grid
                .r
                .iter()
                .map(|&r| alzer_weight(&self.lt, &self.eff, self.scaled(r)))
                .collect()
        })
    }

    fn check_p(p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return domain(format!("cache probability {p} outside [0, 1]"));
        }
        Ok(())
    }

    /// Exact hit probability of a file cached with probability `p`, closest selection.
    pub fn closest_exact(&self, p: f64) -> Result<f64> {
        Self::check_p(p)?;
        if p == 0.0 || self.params.lambda == 0.0 {
            return Ok(0.0);
        }
        let table = self.closest_table()?;
        let m = self.params.m;
        let mu1 = self.cloud_mean() * p;
        let mu0 = self.cloud_mean() * (1.0 - p);
        let pk: Vec<f64> = (0..m).map(|k| poisson_pmf(k, mu1)).collect();
        let pt: Vec<f64> = (0..m).map(|t| poisson_pmf(t, mu0)).collect();
        let mut total = 0.0;
        for j in 0..self.grid.len() {
            let (f, cdf) = (self.grid.pdf[j], self.grid.cdf[j]);
            if f == 0.0 {
                continue;
            }
            let h = &table.h[j * m..(j + 1) * m];
            let h_sat = h[m - 1];
            let mut g = mu1 * f * (-mu1 * cdf).exp() * h_sat;
            let tail = 1.0 - cdf;
            for k in 1..m {
                let order_density = k as f64 * f * tail.powi(k as i32 - 1);
                let mut inner = 0.0;
                for t in 0..m - k {
                    inner += pt[t] * (h[k + t - 1] - h_sat);
                }
                g += pk[k] * order_density * inner;
            }
            total += self.grid.w[j] * g;
        }
        Ok(total.clamp(0.0, 1.0))
    }

    /// Approximate hit probability, closest selection.
    pub fn closest_approx(&self, p: f64) -> Result<f64> {
        Self::check_p(p)?;
        if p == 0.0 {
            return Ok(0.0);
        }
        let w = self.alzer_table();
        let mu1 = self.cloud_mean() * p;
        let total: f64 = (0..self.grid.len())
            .map(|j| {
                self.grid.w[j] * mu1 * self.grid.pdf[j] * (-mu1 * self.grid.cdf[j]).exp() * w[j]
            })
            .sum();
        Ok(total.clamp(0.0, 1.0))
    }

    /// Exact hit probability, best selection.
    pub fn best_exact(&self, p: f64) -> Result<f64> {
        Self::check_p(p)?;
        if p == 0.0 || self.params.lambda == 0.0 {
            return Ok(0.0);
        }
        let table = self.best_table()?;
        let m = self.params.m;
        let mu1 = self.cloud_mean() * p;
        let mu0 = self.cloud_mean() * (1.0 - p);
        let pk: Vec<f64> = (0..m).map(|k| poisson_pmf(k, mu1)).collect();
        let pt: Vec<f64> = (0..m).map(|t| poisson_pmf(t, mu0)).collect();
        // Miss probability given interference γ, and its γ-derivative.
        let miss_at = |a: usize| {
            let c = &table.c[a * m..(a + 1) * m];
            let c_sat = c[m - 1];
            let mut v = (-mu1 * c_sat).exp();
            for k in 1..m {
                let sat = (1.0 - c_sat).powi(k as i32);
                let mut inner = 0.0;
                for t in 0..m - k {
                    inner += pt[t] * ((1.0 - c[k + t - 1]).powi(k as i32) - sat);
                }
                v += pk[k] * inner;
            }
            v
        };
        let miss_slope = |a: usize| {
            let c = &table.c[a * m..(a + 1) * m];
            let dc = &table.dc[a * m..(a + 1) * m];
            let (c_sat, dc_sat) = (c[m - 1], dc[m - 1]);
            let mut v = -mu1 * dc_sat * (-mu1 * c_sat).exp();
            for k in 1..m {
                let kf = k as f64;
                let sat = kf * (1.0 - c_sat).powi(k as i32 - 1) * dc_sat;
                let mut inner = 0.0;
                for t in 0..m - k {
                    let l = k + t - 1;
                    inner += pt[t] * (sat - kf * (1.0 - c[l]).powi(k as i32 - 1) * dc[l]);
                }
                v += pk[k] * inner;
            }
            v
        };
        let miss = if table.by_parts {
            miss_at(0)
                + (1..table.weights.len())
                    .map(|a| table.weights[a] * miss_slope(a))
                    .sum::<f64>()
        } else {
            table
                .weights
                .iter()
                .enumerate()
                .map(|(a, &wa)| wa * miss_at(a))
                .sum::<f64>()
        };
        Ok((1.0 - miss).clamp(0.0, 1.0))
    }

    /// Approximate hit probability, best selection.
    pub fn best_approx(&self, p: f64) -> Result<f64> {
        Self::check_p(p)?;
        if p == 0.0 {
            return Ok(0.0);
        }
        let w = self.alzer_table();
        let integral: f64 = (0..self.grid.len())
            .map(|j| self.grid.w[j] * self.grid.pdf[j] * w[j])
            .sum();
        Ok((1.0 - (-self.cloud_mean() * p * integral).exp()).clamp(0.0, 1.0))
    }

    /// Conditional hit probability of a file cached with probability `p`.
    pub fn conditional(&self, p: f64, strategy: Strategy, method: Method) -> Result<f64> {
        match (strategy, method) {
            (Strategy::Closest, Method::Exact) => self.closest_exact(p),
            (Strategy::Closest, Method::Approximate) => self.closest_approx(p),
            (Strategy::Best, Method::Exact) => self.best_exact(p),
            (Strategy::Best, Method::Approximate) => self.best_approx(p),
        }
    }

    /// Per-file conditional hit probabilities under a placement.
    pub fn per_file(
        &self,
        policy: &Placement<f64>,
        strategy: Strategy,
        method: Method,
    ) -> Result<Vec<f64>> {
        policy
            .probabilities()
            .iter()
            .map(|&p| self.conditional(p, strategy, method))
            .collect()
    }

    /// Network hit probability `Σ_i q_i·P_i^hit`.
    pub fn network(
        &self,
        profile: &Popularity<f64>,
        policy: &Placement<f64>,
        strategy: Strategy,
        method: Method,
    ) -> Result<f64> {
        if profile.len() != policy.len() {
            return domain(format!(
                "popularity has {} files but the placement has {}",
                profile.len(),
                policy.len()
            ));
        }
        let hits = self.per_file(policy, strategy, method)?;
        let total: f64 = profile
            .probabilities()
            .iter()
            .zip(&hits)
            .map(|(q, h)| q * h)
            .sum();
        Ok(total.clamp(0.0, 1.0))
    }

    /// Distribution function of the strongest received power among `k` RUs
    /// when `l` RUs are active: `(1 − ∫ Q(M−l+1, x y^{α_i}/P) f(y) dy)^k`.
    pub fn max_power_cdf(&self, x: f64, l: usize, k: usize) -> Result<f64> {
        if k == 0 {
            return domain("maximum over an empty set of RUs");
        }
        if l > self.params.m {
            return domain(format!(
                "active count {l} exceeds antenna count {}",
                self.params.m
            ));
        }
        if x <= 0.0 {
            return Ok(0.0);
        }
        let shape = self.params.m - l + 1;
        let (d, xo) = (self.geom.d, self.geom.x_norm);
        let p = self.params;
        let spec = QuadSpec::new(1e-10, 1e-14);
        let r = integrate_with_breakpoints(
            |y: f64| {
                gamma_tail_integer(shape, x * y.powf(p.alpha_i) / p.p_tx)
                    * distance_pdf_raw(d, xo, y)
            },
            &self.geom.breakpoints(),
            &spec,
        )?;
        Ok((1.0 - r.value).clamp(0.0, 1.0).powi(k as i32))
    }
}
