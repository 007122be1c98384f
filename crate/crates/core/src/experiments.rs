//! Parameter sweeps over the evaluation curves, and their CSV form.
//!
//! Every sweep point re-designs the placement for a user at the cloud centre
//! with that point's parameters, then evaluates it at the configured user
//! distance. Rows always come out in grid order, and the `runtime_ms` column
//! stays zero unless timings are requested, so reruns with the same seed give
//! byte-identical files.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{db_to_linear, NetworkConfig};
use crate::content::{Placement, Popularity};
use crate::error::{Error, Result};
use crate::geometry::DiskLayout;
use crate::hitprob::{HitModel, Method, Strategy};
use crate::interference::InterferenceLt;
use crate::optimizer::{
    check_concavity, solve_best_closed_form, solve_separable, BestObjective, ClosestObjective,
    OptimizerSettings,
};
use crate::simulator::{validate_zf_gain, Simulator};
use crate::stats::ks_test;

/// Quantity varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVariable {
    /// SINR threshold in dB.
    BetaDb,
    /// User distance from the cloud centre.
    Distance,
    /// Cache memory size.
    Memory,
    /// Zipf skewness.
    Skewness,
    /// Antennas per RU.
    Antennas,
    /// In-cloud path-loss exponent, with the out-of-cloud one half a unit above.
    Alpha,
}

impl SweepVariable {
    pub const ALL: [SweepVariable; 6] = [
        SweepVariable::BetaDb,
        SweepVariable::Distance,
        SweepVariable::Memory,
        SweepVariable::Skewness,
        SweepVariable::Antennas,
        SweepVariable::Alpha,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::BetaDb => "beta_dB",
            SweepVariable::Distance => "d",
            SweepVariable::Memory => "N_c",
            SweepVariable::Skewness => "gamma",
            SweepVariable::Antennas => "M",
            SweepVariable::Alpha => "alpha",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, SweepVariable::Memory | SweepVariable::Antennas)
    }

    /// The configuration with this variable set to `value`.
    pub fn apply(self, cfg: &NetworkConfig, value: f64) -> Result<NetworkConfig> {
        if !value.is_finite() || (self.is_integer() && (value.fract() != 0.0 || value < 0.0)) {
            return Err(Error::Config(format!(
                "invalid {} value {value}",
                self.name()
            )));
        }
        let mut out = *cfg;
        match self {
            SweepVariable::BetaDb => out.params.beta = db_to_linear(value),
            SweepVariable::Distance => out.geom.x_norm = value,
            SweepVariable::Memory => out.memory = value as usize,
            SweepVariable::Skewness => out.zipf = value,
            SweepVariable::Antennas => out.params.m = value as usize,
            SweepVariable::Alpha => {
                out.params.alpha_i = value;
                out.params.alpha_o = value + 0.5;
            }
        }
        out.validate()?;
        Ok(out)
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sweep variable `{s}`")))
    }
}

/// How a hit probability is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvalMethod {
    Exact,
    Approx,
    MonteCarlo,
}

impl fmt::Display for EvalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMethod::Exact => "exact",
            EvalMethod::Approx => "approx",
            EvalMethod::MonteCarlo => "mc",
        })
    }
}

impl FromStr for EvalMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(EvalMethod::Exact),
            "approx" => Ok(EvalMethod::Approx),
            "mc" => Ok(EvalMethod::MonteCarlo),
            _ => Err(Error::Config(format!(
                "unknown method `{s}` (exact, approx, mc)"
            ))),
        }
    }
}

/// Which placement is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    /// The optimised placement for the strategy in use.
    Optimized,
    /// The `N_c` most popular files everywhere.
    MostPopular,
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Optimized => "optimized",
            PolicyKind::MostPopular => "most-popular",
        })
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimized" => Ok(PolicyKind::Optimized),
            "most-popular" => Ok(PolicyKind::MostPopular),
            _ => Err(Error::Config(format!(
                "unknown policy `{s}` (optimized, most-popular)"
            ))),
        }
    }
}

pub fn parse_strategy(s: &str) -> Result<Strategy> {
    match s {
        "closest" => Ok(Strategy::Closest),
        "best" => Ok(Strategy::Best),
        _ => Err(Error::Config(format!(
            "unknown strategy `{s}` (closest, best)"
        ))),
    }
}

/// A sweep: one variable over a grid, and what to evaluate at each point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub methods: Vec<EvalMethod>,
    pub policies: Vec<PolicyKind>,
    /// Monte Carlo trials per point and strategy.
    pub trials: usize,
    pub seed: u64,
    /// Fill the `runtime_ms` column; this makes the output nondeterministic.
    pub timings: bool,
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n)
        .map(|k| ((lo + k as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

impl SweepSpec {
    /// Preset for evaluation figure `n` (2 to 7).
    pub fn figure(n: u32) -> Result<Self> {
        let both = vec![Strategy::Closest, Strategy::Best];
        let base = |variable, values| Self {
            variable,
            values,
            strategies: both.clone(),
            methods: vec![EvalMethod::Exact, EvalMethod::Approx],
            policies: vec![PolicyKind::Optimized],
            trials: 0,
            seed: 1,
            timings: false,
        };
        let spec = match n {
            2 => Self {
                methods: vec![
                    EvalMethod::Exact,
                    EvalMethod::Approx,
                    EvalMethod::MonteCarlo,
                ],
                trials: 100_000,
                ..base(SweepVariable::BetaDb, grid(-5.0, 25.0, 2.5))
            },
            3 => Self {
                policies: vec![PolicyKind::Optimized, PolicyKind::MostPopular],
                ..base(SweepVariable::Distance, grid(0.0, 30.0, 5.0))
            },
            4 => Self {
                policies: vec![PolicyKind::Optimized, PolicyKind::MostPopular],
                ..base(SweepVariable::Memory, grid(1.0, 20.0, 1.0))
            },
            5 => Self {
                policies: vec![PolicyKind::Optimized, PolicyKind::MostPopular],
                ..base(SweepVariable::Skewness, grid(0.0, 1.4, 0.35))
            },
            6 => base(SweepVariable::Antennas, grid(2.0, 10.0, 2.0)),
            7 => base(SweepVariable::Alpha, grid(2.0, 5.0, 0.25)),
            _ => {
                return Err(Error::Config(format!(
                    "no preset for figure {n}; choose 2 to 7"
                )))
            }
        };
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.values.is_empty() {
            problems.push("sweep grid is empty".to_string());
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            problems.push("sweep grid must be strictly increasing".to_string());
        }
        if self.strategies.is_empty() || self.methods.is_empty() || self.policies.is_empty() {
            problems.push("strategies, methods and policies must be nonempty".to_string());
        }
        if self.methods.contains(&EvalMethod::MonteCarlo) && self.trials == 0 {
            problems.push("Monte Carlo rows need at least one trial".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub variable: String,
    pub value: f64,
    pub strategy: String,
    pub method: String,
    pub policy: String,
    pub hit: f64,
    pub ci_halfwidth: f64,
    pub runtime_ms: f64,
    pub seed: u64,
}

/// Rows of a sweep, plus the messages of points that failed. Failed rows
/// carry NaN in the `hit` and `ci_halfwidth` columns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub errors: Vec<String>,
}

/// Placements designed at the cloud centre for one parameter set.
#[derive(Debug, Clone)]
pub struct DesignedPolicies {
    pub closest: Placement<f64>,
    pub best: Placement<f64>,
    pub most_popular: Placement<f64>,
}

impl DesignedPolicies {
    pub fn get(&self, kind: PolicyKind, strategy: Strategy) -> &Placement<f64> {
        match (kind, strategy) {
            (PolicyKind::MostPopular, _) => &self.most_popular,
            (PolicyKind::Optimized, Strategy::Closest) => &self.closest,
            (PolicyKind::Optimized, Strategy::Best) => &self.best,
        }
    }
}

/// Optimises both placements for `cfg`, sharing its interference transform.
pub fn design_policies(cfg: &NetworkConfig, lt: Arc<InterferenceLt>) -> Result<DesignedPolicies> {
    let profile = cfg.popularity()?;
    let centre = HitModel::with_lt(lt, cfg.params, cfg.geom.at_distance(0.0)?)?;
    let settings = OptimizerSettings::default();
    let closest = solve_separable(
        &ClosestObjective::from_model(&profile, &centre)?,
        cfg.memory,
        &settings,
    )?;
    let best = solve_best_closed_form(
        &BestObjective::from_model(&profile, &centre)?,
        cfg.memory,
        &settings,
    )?;
    Ok(DesignedPolicies {
        closest: closest.policy,
        best: best.policy,
        most_popular: Placement::most_popular(&profile, cfg.memory)?,
    })
}

/// Seed of sweep point `index`, so that points draw independent streams.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

struct PointSetup {
    profile: Popularity<f64>,
    model: HitModel,
    policies: DesignedPolicies,
    sim: Option<Simulator>,
}

fn setup_point(cfg: &NetworkConfig, monte_carlo: bool) -> Result<PointSetup> {
    let lt = Arc::new(InterferenceLt::new(cfg.params, &cfg.geom)?);
    let policies = design_policies(cfg, lt.clone())?;
    let model = HitModel::with_lt(lt, cfg.params, cfg.geom)?.with_law(cfg.law);
    let sim = if monte_carlo {
        Some(Simulator::new(cfg.params, cfg.geom)?)
    } else {
        None
    };
    Ok(PointSetup {
        profile: cfg.popularity()?,
        model,
        policies,
        sim,
    })
}

/// Evaluates every requested row at one grid point.
pub fn evaluate_point(cfg: &NetworkConfig, spec: &SweepSpec, index: usize) -> SweepOutcome {
    let value = spec.values[index];
    let seed = point_seed(spec.seed, index);
    let mut out = SweepOutcome::default();
    let mut row = |strategy: Strategy,
                   method: EvalMethod,
                   policy: PolicyKind,
                   res: Result<(f64, f64)>,
                   ms: f64| {
        let (hit, ci) = match res {
            Ok(v) => v,
            Err(e) => {
                out.errors.push(format!(
                    "{}={value} {strategy} {method} {policy}: {e}",
                    spec.variable
                ));
                (f64::NAN, f64::NAN)
            }
        };
        out.rows.push(SweepRow {
            variable: spec.variable.name().to_string(),
            value,
            strategy: strategy.to_string(),
            method: method.to_string(),
            policy: policy.to_string(),
            hit,
            ci_halfwidth: ci,
            runtime_ms: if spec.timings { ms } else { 0.0 },
            seed,
        });
    };
    let start = Instant::now();
    let setup = spec
        .variable
        .apply(cfg, value)
        .and_then(|c| setup_point(&c, spec.methods.contains(&EvalMethod::MonteCarlo)));
    let setup_ms = start.elapsed().as_secs_f64() * 1e3;
    for &strategy in &spec.strategies {
        for &policy in &spec.policies {
            for &method in &spec.methods {
                let t = Instant::now();
                let res = match &setup {
                    Err(e) => Err(Error::Config(e.to_string())),
                    Ok(s) => {
                        let placement = s.policies.get(policy, strategy);
                        match method {
                            EvalMethod::Exact => s
                                .model
                                .network(&s.profile, placement, strategy, Method::Exact)
                                .map(|h| (h, 0.0)),
                            EvalMethod::Approx => s
                                .model
                                .network(&s.profile, placement, strategy, Method::Approximate)
                                .map(|h| (h, 0.0)),
                            EvalMethod::MonteCarlo => s
                                .sim
                                .as_ref()
                                .expect("simulator built when requested")
                                .estimate_hit(&s.profile, placement, strategy, spec.trials, seed)
                                .map(|e| (e.network.estimate, e.network.half_width)),
                        }
                    }
                };
                row(
                    strategy,
                    method,
                    policy,
                    res,
                    setup_ms + t.elapsed().as_secs_f64() * 1e3,
                );
            }
        }
    }
    out
}

/// Runs a sweep; points are evaluated in parallel and reported in grid order.
pub fn run_sweep(cfg: &NetworkConfig, spec: &SweepSpec) -> Result<SweepOutcome> {
    cfg.validate()?;
    spec.validate()?;
    let parts: Vec<SweepOutcome> = (0..spec.values.len())
        .into_par_iter()
        .map(|i| evaluate_point(cfg, spec, i))
        .collect();
    let mut out = SweepOutcome::default();
    for p in parts {
        out.rows.extend(p.rows);
        out.errors.extend(p.errors);
    }
    Ok(out)
}

/// Writes rows as CSV with a header, in the fixed column order.
pub fn write_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record([
        "variable",
        "value",
        "strategy",
        "method",
        "policy",
        "hit",
        "ci_halfwidth",
        "runtime_ms",
        "seed",
    ])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    write_csv(rows, std::fs::File::create(path)?)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize()
        .collect::<std::result::Result<Vec<SweepRow>, _>>()?)
}

/// Outcome of one check of the validation suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Quick oracle checks of the analysis against simulation and closed forms
/// at one configuration.
pub fn validation_suite(cfg: &NetworkConfig, trials: usize, seed: u64) -> Result<Vec<Check>> {
    cfg.validate()?;
    let trials = trials.max(100);
    let mut out = Vec::new();
    let (d, d_g) = (cfg.geom.d, cfg.geom.d_g);

    // Distance densities integrate to one.
    let mut worst: f64 = 0.0;
    for x in [0.0, 0.5 * d, cfg.geom.x_norm, d] {
        let g = DiskLayout::new(d, d_g, x)?;
        let r = crate::quadrature::integrate_with_breakpoints(
            |y: f64| g.distance_pdf(y),
            &g.breakpoints(),
            &crate::quadrature::QuadSpec::new(1e-12, 1e-14),
        )?;
        worst = worst.max((r.value - 1.0).abs());
    }
    out.push(check(
        "distance density normalisation",
        worst < 1e-8,
        format!("max |mass − 1| = {worst:.2e}"),
    ));

    // Interference transform against simulated interference.
    let lt = Arc::new(InterferenceLt::new(cfg.params, &cfg.geom)?);
    let sim = Simulator::new(cfg.params, cfg.geom)?;
    let samples = sim.sample_interference(trials, seed);
    let n = samples.len() as f64;
    let mut z_max: f64 = 0.0;
    for s in [1e1, 1e2, 1e3, 1e4] {
        let v: Vec<f64> = samples.iter().map(|x| (-s * x).exp()).collect();
        let (m, var) = crate::stats::mean_and_variance(&v);
        z_max = z_max.max((lt.eval(s) - m).abs() / (var / n).sqrt().max(1e-300));
    }
    out.push(check(
        "interference transform vs simulation",
        z_max < 2.576,
        format!("max |z| = {z_max:.2} over 4 arguments"),
    ));

    // Network hit: exact analysis against simulation.
    let policies = design_policies(cfg, lt.clone())?;
    let profile = cfg.popularity()?;
    let model = HitModel::with_lt(lt.clone(), cfg.params, cfg.geom)?.with_law(cfg.law);
    for strategy in [Strategy::Closest, Strategy::Best] {
        let pol = policies.get(PolicyKind::Optimized, strategy);
        let exact = model.network(&profile, pol, strategy, Method::Exact)?;
        let est = sim.estimate_hit(&profile, pol, strategy, trials, seed)?;
        out.push(check(
            &format!("{strategy} exact hit vs simulation"),
            est.network.within_sigmas(exact, 3.0),
            format!(
                "exact {exact:.4}, simulated {:.4} ± {:.4}",
                est.network.estimate, est.network.half_width
            ),
        ));
    }

    // Zero-forcing gain law.
    let m = cfg.params.m;
    for l in [1, m.div_ceil(2), m] {
        let r = validate_zf_gain(m, l, trials, seed)?;
        out.push(check(
            &format!("zero-forcing gain law (M = {m}, l = {l})"),
            r.p_value > 0.01,
            format!("KS p = {:.3}", r.p_value),
        ));
    }

    // Strongest received power among two RUs.
    let k = 2;
    let mut draws = sim.sample_max_power(m, k, trials, seed)?;
    let table = MaxPowerTable::new(&model, m, k, &draws)?;
    let r = ks_test(&mut draws, |x| table.cdf(x));
    out.push(check(
        "strongest-power distribution",
        r.p_value > 0.01,
        format!("KS p = {:.3}", r.p_value),
    ));

    // Placement: uniform popularity gives a uniform placement.
    let uniform = Popularity::uniform(cfg.files)?;
    let centre = HitModel::with_lt(lt, cfg.params, cfg.geom.at_distance(0.0)?)?;
    let settings = OptimizerSettings::default();
    let target = cfg.memory as f64 / cfg.files as f64;
    let a = solve_separable(
        &ClosestObjective::from_model(&uniform, &centre)?,
        cfg.memory,
        &settings,
    )?;
    let b = solve_best_closed_form(
        &BestObjective::from_model(&uniform, &centre)?,
        cfg.memory,
        &settings,
    )?;
    let dev = a
        .policy
        .probabilities()
        .iter()
        .chain(b.policy.probabilities())
        .map(|p| (p - target).abs())
        .fold(0.0, f64::max);
    out.push(check(
        "uniform popularity placement",
        dev < 1e-9,
        format!("max deviation {dev:.1e}"),
    ));

    // Concavity of both objectives.
    let h = 1e-4;
    let c1 = check_concavity(
        &ClosestObjective::from_model(&profile, &centre)?,
        cfg.memory,
        20,
        h,
        seed,
    )?;
    let c2 = check_concavity(
        &BestObjective::from_model(&profile, &centre)?,
        cfg.memory,
        20,
        h,
        seed,
    )?;
    let worst = c1.max_second_difference.max(c2.max_second_difference);
    out.push(check(
        "objective concavity",
        worst <= 1e-6,
        format!("max second difference {worst:.2e}"),
    ));
    Ok(out)
}

/// The strongest-power distribution function tabulated on a logarithmic grid
/// spanning a set of samples, for goodness-of-fit tests.
#[derive(Debug, Clone)]
pub struct MaxPowerTable {
    log_x: Vec<f64>,
    cdf: Vec<f64>,
}

impl MaxPowerTable {
    pub fn new(model: &HitModel, l: usize, k: usize, samples: &[f64]) -> Result<Self> {
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(0.0, f64::max);
        if !(lo > 0.0) || !hi.is_finite() {
            return Err(Error::Domain("samples must be positive and finite".into()));
        }
        let (a, b) = (lo.ln() - 0.1, hi.ln() + 0.1);
        let nodes = 4000;
        let log_x: Vec<f64> = (0..=nodes)
            .map(|i| a + (b - a) * i as f64 / nodes as f64)
            .collect();
        let cdf = log_x
            .par_iter()
            .map(|&t| model.max_power_cdf(t.exp(), l, k))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { log_x, cdf })
    }

    /// Monotone cubic (Fritsch–Carlson) interpolation in `ln x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let t = x.ln();
        let n = self.log_x.len();
        if t <= self.log_x[0] {
            return self.cdf[0];
        }
        if t >= self.log_x[n - 1] {
            return self.cdf[n - 1];
        }
        let h = self.log_x[1] - self.log_x[0];
        let i = (((t - self.log_x[0]) / h) as usize).min(n - 2);
        let slope = |j: usize| (self.cdf[j + 1] - self.cdf[j]) / h;
        let tangent = |j: usize| {
            if j == 0 || j == n - 1 {
                return slope(j.min(n - 2));
            }
            let (a, b) = (slope(j - 1), slope(j));
            if a * b <= 0.0 {
                0.0
            } else {
                2.0 * a * b / (a + b)
            }
        };
        let s = (t - self.log_x[i]) / h;
        let (y0, y1) = (self.cdf[i], self.cdf[i + 1]);
        let (m0, m1) = (tangent(i) * h, tangent(i + 1) * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1
    }
}
