//! Seeded experiment driver.
//!
//! A [`TrialConfig`] names an algorithm, an instance recipe and parameters.
//! [`run_batch`] builds the instances, certifies each one against the exact
//! oracles in [`crate::reference`], runs the trials and aggregates rates and
//! query counts. Every random choice flows from `base_seed`, so a config always
//! produces the same report.

use std::io::Write;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::freespace::{compute_beta, ExplicitMatrix, FreeSpaceOracle, OracleError};
use crate::geometry::{
    curve_length, dist, edge_length_range, gen_straight_curve, make_far_pair, perturb_within, straightness,
    subsample, Curve, GeometryError,
};
use crate::reference::{
    brute_permeable, count_barriers, discrete_frechet, discrete_hausdorff, exact_locality, layer_count,
    locality_census, min_cost_coupling, min_cost_diagonal_restricted, min_cost_path, min_cost_path_between,
    PathRule,
};
use crate::testers::{
    approx_frechet_tester, continuous_frechet_tester, frechet_tester1, frechet_tester2, hausdorff_tester,
    reduced_frechet_tester_on, Answer, ContinuousMode, ContinuousParams, ReducedMode, Tester1Params, TesterError,
    Verdict, Witness,
};

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959963984540054;

/// Attempts per instance before a recipe is declared unverifiable.
pub const MAX_ATTEMPTS: u64 = 64;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("instance {instance} failed certification after {attempts} attempts: {reason}")]
    RecipeVerificationFailed {
        instance: usize,
        attempts: u64,
        reason: String,
    },
    #[error(transparent)]
    Tester(#[from] TesterError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Frechet1,
    Frechet2,
    Hausdorff,
    Approx,
    Reduced,
    Continuous,
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| format!("unknown algorithm {s:?}"))
    }
}

/// Tester parameters shared by all algorithms; each one reads what it needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub delta: f64,
    pub eps: f64,
    /// Locality for `frechet1`/`approx` (defaults to the instance's exact
    /// locality, rounded up); straightness for `reduced`/`continuous`, where
    /// `None` selects the oblivious tester.
    pub t: Option<usize>,
    pub eps_prime: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Overrides the barrier-probe count parameter of `frechet1`.
    pub k: Option<f64>,
    /// Overrides the interval oversampling constant of `frechet1`.
    pub c: Option<u32>,
}

impl Params {
    pub fn new(delta: f64, eps: f64) -> Self {
        Params {
            delta,
            eps,
            t: None,
            eps_prime: 0.5,
            alpha: 1.0,
            gamma: 1.0,
            k: None,
            c: None,
        }
    }

    pub fn with_t(mut self, t: usize) -> Self {
        self.t = Some(t);
        self
    }
}

/// A translated block that should make the pair far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarBlock {
    pub eps: f64,
    pub margin: f64,
}

/// How instances are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// `P` is a bounded-turn walk, `Q` a perturbation of `P` within `radius`,
    /// optionally with a translated block.
    CurvePair {
        n: usize,
        dim: usize,
        edge_min: f64,
        edge_max: f64,
        max_turn_deg: f64,
        radius: f64,
        far: Option<FarBlock>,
    },
    /// Zeros exactly at `|i - j| <= width`.
    Banded { n: usize, width: usize },
    /// A width-1 band plus `outliers` extra zeros at `(i, i + offset)`.
    BandedOutliers { n: usize, outliers: usize, offset: usize },
}

impl Generator {
    pub fn n(&self) -> usize {
        match *self {
            Generator::CurvePair { n, .. } | Generator::Banded { n, .. } | Generator::BandedOutliers { n, .. } => n,
        }
    }

    pub fn with_n(&self, new_n: usize) -> Self {
        let mut g = self.clone();
        match &mut g {
            Generator::CurvePair { n, .. } | Generator::Banded { n, .. } | Generator::BandedOutliers { n, .. } => {
                *n = new_n
            }
        }
        g
    }
}

/// A reference predicate an instance must satisfy before it is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Certificate {
    /// A cost-zero coupling exists.
    CostZero,
    /// Every coupling costs more than `eps * n`.
    Far { eps: f64 },
    /// No barrier column or row.
    NoBarriers,
    /// At least `ceil(eps (n + m))` barrier columns and rows in total.
    MinBarriers { eps: f64 },
    /// Exact locality at most `t`.
    LocalityAtMost { t: f64 },
}

impl Certificate {
    fn check(&self, m: &ExplicitMatrix, cache: &mut Option<f64>) -> Result<(), String> {
        let n = m.n_cols();
        match *self {
            Certificate::CostZero => {
                let c = min_cost_coupling(m);
                (c == 0).then_some(()).ok_or(format!("min-cost coupling {c} > 0"))
            }
            Certificate::Far { eps } => {
                let c = min_cost_coupling(m);
                (c as f64 > eps * n as f64)
                    .then_some(())
                    .ok_or(format!("min-cost coupling {c} <= {}", eps * n as f64))
            }
            Certificate::NoBarriers => {
                let b = count_barriers(m);
                (b == (0, 0)).then_some(()).ok_or(format!("barriers {b:?}"))
            }
            Certificate::MinBarriers { eps } => {
                let (bc, br) = count_barriers(m);
                let need = (eps * (m.n_cols() + m.n_rows()) as f64).ceil() as usize;
                (bc + br >= need)
                    .then_some(())
                    .ok_or(format!("{} barriers < {need}", bc + br))
            }
            Certificate::LocalityAtMost { t } => {
                let l = *cache.get_or_insert_with(|| exact_locality(m));
                (l <= t).then_some(()).ok_or(format!("locality {l} > {t}"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecipe {
    pub generator: Generator,
    pub certify: Vec<Certificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub algorithm: Algorithm,
    pub recipe: InstanceRecipe,
    pub params: Params,
    pub trials: usize,
    /// Distinct instances; trial `i` uses instance `i % instances`.
    pub instances: usize,
    pub base_seed: u64,
    pub parallel: bool,
    /// Wall-clock timing makes reports differ between runs, so it is opt-in.
    pub record_wall_time: bool,
}

impl TrialConfig {
    pub fn new(algorithm: Algorithm, recipe: InstanceRecipe, params: Params, trials: usize, base_seed: u64) -> Self {
        TrialConfig {
            algorithm,
            recipe,
            params,
            trials,
            instances: 1,
            base_seed,
            parallel: false,
            record_wall_time: false,
        }
    }
}

/// Reads `SEED` from the environment, falling back to `default`.
pub fn seed_from_env(default: u64) -> u64 {
    std::env::var("SEED").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(default)
}

/// Generator seeded with `seed` on stream `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

const TRIAL_STREAM: u64 = 0;
const INSTANCE_STREAM: u64 = 1 << 32;

/// A certified instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub matrix: Arc<ExplicitMatrix>,
    pub curves: Option<(Curve, Curve)>,
    /// Generation attempts used (1 if the first draw passed).
    pub attempts: u64,
    locality: OnceLock<f64>,
}

impl Instance {
    pub fn new(matrix: ExplicitMatrix, curves: Option<(Curve, Curve)>) -> Self {
        Instance {
            matrix: Arc::new(matrix),
            curves,
            attempts: 1,
            locality: OnceLock::new(),
        }
    }

    /// Exact locality of the matrix, computed once.
    pub fn locality(&self) -> f64 {
        *self.locality.get_or_init(|| exact_locality(&self.matrix))
    }
}

fn draw(generator: &Generator, delta: f64, rng: &mut ChaCha8Rng) -> Result<(ExplicitMatrix, Option<(Curve, Curve)>), HarnessError> {
    Ok(match *generator {
        Generator::CurvePair {
            n,
            dim,
            edge_min,
            edge_max,
            max_turn_deg,
            radius,
            far,
        } => {
            let p = gen_straight_curve(n, dim, (edge_min, edge_max), max_turn_deg.to_radians(), rng)?;
            let mut q = perturb_within(&p, radius, rng)?;
            if let Some(FarBlock { eps, margin }) = far {
                q = make_far_pair(&q, eps, delta, margin, rng)?;
            }
            (ExplicitMatrix::from_curves(&p, &q, delta)?, Some((p, q)))
        }
        Generator::Banded { n, width } => {
            let band = (1..=n).flat_map(|i| (i.saturating_sub(width).max(1)..=(i + width).min(n)).map(move |j| (i, j)));
            (ExplicitMatrix::from_zeros(n, n, band)?, None)
        }
        Generator::BandedOutliers { n, outliers, offset } => {
            if offset >= n {
                return Err(HarnessError::BadConfig(format!("offset {offset} must be < n = {n}")));
            }
            let picks = sample(rng, n - offset, outliers.min(n - offset));
            let band = (1..=n).flat_map(|i| (i.saturating_sub(1).max(1)..=(i + 1).min(n)).map(move |j| (i, j)));
            let extra = picks.into_iter().map(|k| (k + 1, k + 1 + offset));
            (ExplicitMatrix::from_zeros(n, n, band.chain(extra))?, None)
        }
    })
}

/// Draws instance `index` of a recipe, regenerating with the next sub-seed until it certifies.
pub fn build_instance(recipe: &InstanceRecipe, delta: f64, base_seed: u64, index: usize) -> Result<Instance, HarnessError> {
    let mut last = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = stream_rng(base_seed.wrapping_add(index as u64), INSTANCE_STREAM + attempt);
        let (matrix, curves) = draw(&recipe.generator, delta, &mut rng)?;
        let mut locality = None;
        match recipe.certify.iter().try_for_each(|c| c.check(&matrix, &mut locality)) {
            Ok(()) => {
                return Ok(Instance {
                    matrix: Arc::new(matrix),
                    curves,
                    attempts: attempt + 1,
                    locality: locality.map(OnceLock::from).unwrap_or_default(),
                })
            }
            Err(reason) => last = reason,
        }
    }
    Err(HarnessError::RecipeVerificationFailed {
        instance: index,
        attempts: MAX_ATTEMPTS,
        reason: last,
    })
}

/// Re-checks a "no" witness against the matrix it refers to.
///
/// `t` is needed only for locality witnesses.
pub fn verify_witness(m: &ExplicitMatrix, w: &Witness, t: Option<f64>) -> bool {
    match *w {
        Witness::CornerOne { i, j } => i <= m.n_cols() && j <= m.n_rows() && !m.is_zero(i, j),
        Witness::Barrier { axis, index } => index >= 1 && index <= m.extent(axis) && m.slice(axis, index).is_empty(),
        Witness::ImpermeableBlock { axis, lo, hi } => brute_permeable(m, axis, lo, hi) == Ok(false),
        Witness::SecondOrderFailure { axis, index } => {
            t.is_some_and(|t| locality_census(m, t).second_order_failures.contains(&(axis, index)))
        }
        Witness::PairFailure { axis, first, second } => t.is_some_and(|t| {
            locality_census(m, t)
                .pair_failures
                .iter()
                .any(|f| f.axis == axis && f.first == first && f.second == second)
        }),
    }
}

/// One trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub instance: usize,
    pub answer: Answer,
    pub witness: Option<Witness>,
    /// Whether the witness re-verified; absent for "yes".
    pub witness_sound: Option<bool>,
    pub queries_used: u64,
    pub diagnostics: crate::testers::Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuerySummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub p90: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: usize,
    pub yes: usize,
    pub no: usize,
    pub yes_rate: f64,
    pub no_rate: f64,
    /// Wilson 95% lower bound on the "no" rate.
    pub wilson_lb: f64,
    pub queries: QuerySummary,
    pub unsound_witnesses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub config: TrialConfig,
    pub records: Vec<TrialRecord>,
    pub aggregate: Aggregate,
}

/// Wilson score interval lower bound for `k` successes out of `n`.
pub fn wilson_lower_bound(k: usize, n: usize, z: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - spread) / (1.0 + z2 / n)).max(0.0)
}

/// Linear-interpolation quantile of sorted data, `q` in `[0, 1]`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

pub fn summarize_queries(values: impl IntoIterator<Item = u64>) -> QuerySummary {
    let mut v: Vec<f64> = values.into_iter().map(|q| q as f64).collect();
    v.sort_by(f64::total_cmp);
    QuerySummary {
        min: quantile(&v, 0.0),
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        p90: quantile(&v, 0.9),
        max: quantile(&v, 1.0),
    }
}

fn aggregate(records: &[TrialRecord]) -> Aggregate {
    let trials = records.len();
    let no = records.iter().filter(|r| r.answer == Answer::No).count();
    let rate = |k: usize| if trials == 0 { 0.0 } else { k as f64 / trials as f64 };
    Aggregate {
        trials,
        yes: trials - no,
        no,
        yes_rate: rate(trials - no),
        no_rate: rate(no),
        wilson_lb: wilson_lower_bound(no, trials, WILSON_Z),
        queries: summarize_queries(records.iter().map(|r| r.queries_used)),
        unsound_witnesses: records.iter().filter(|r| r.witness_sound == Some(false)).count(),
    }
}

fn resolve_t(params: &Params, inst: &Instance) -> usize {
    params.t.unwrap_or_else(|| (inst.locality().ceil() as usize).max(1))
}

/// Runs one tester on an instance and checks any witness it returns.
pub fn run_trial(
    algorithm: Algorithm,
    params: &Params,
    inst: &Instance,
    oracle: &FreeSpaceOracle,
    rng: &mut ChaCha8Rng,
) -> Result<(Verdict, Option<bool>), HarnessError> {
    let eps = params.eps;
    let verdict = match algorithm {
        Algorithm::Frechet1 => {
            let mut tp = Tester1Params::new(resolve_t(params, inst), eps);
            if let Some(k) = params.k {
                tp.k = k;
            }
            if let Some(c) = params.c {
                tp.c = c;
            }
            frechet_tester1(oracle, &tp, rng)?
        }
        Algorithm::Frechet2 => frechet_tester2(oracle, eps, rng)?,
        Algorithm::Hausdorff => hausdorff_tester(oracle, eps, rng)?,
        Algorithm::Approx => approx_frechet_tester(oracle, eps, resolve_t(params, inst), rng)?,
        Algorithm::Reduced => {
            let mode = match params.t {
                Some(t) => ReducedMode::KnownT { t, gamma: params.gamma },
                None => ReducedMode::Oblivious,
            };
            reduced_frechet_tester_on(oracle, params.delta, eps, params.eps_prime, params.alpha, mode, rng)?
        }
        Algorithm::Continuous => {
            let (p, q) = inst
                .curves
                .as_ref()
                .ok_or_else(|| HarnessError::BadConfig("continuous tester needs a curve recipe".into()))?;
            let mode = match params.t {
                Some(t) => ContinuousMode::KnownT { t },
                None => ContinuousMode::Oblivious,
            };
            continuous_frechet_tester(p, q, params.delta, eps, params.eps_prime, mode, rng)?
        }
    };
    let sound = match &verdict.witness {
        None => None,
        Some(w) => Some(match algorithm {
            Algorithm::Reduced => {
                let beta = compute_beta(params.eps_prime, params.delta, params.alpha)?;
                verify_witness(&inst.matrix.reduced(beta)?, w, None)
            }
            Algorithm::Continuous => {
                let (p, q) = inst.curves.as_ref().expect("checked above");
                let cp = ContinuousParams::new(params.delta, eps, params.eps_prime);
                let (pa, qa) = (subsample(p, cp.step)?, subsample(q, cp.step)?);
                verify_witness(&ExplicitMatrix::from_curves(&pa, &qa, cp.delta_prime)?, w, None)
            }
            _ => verify_witness(&inst.matrix, w, None),
        }),
    };
    Ok((verdict, sound))
}

/// Builds and certifies every instance, then runs `trials` seeded trials.
///
/// Trial `i` draws from seed `base_seed + i`.
pub fn run_batch(cfg: &TrialConfig) -> Result<TrialReport, HarnessError> {
    if cfg.instances == 0 {
        return Err(HarnessError::BadConfig("instances must be >= 1".into()));
    }
    let count = cfg.instances.min(cfg.trials.max(1));
    let instances: Vec<Instance> = (0..count)
        .map(|k| build_instance(&cfg.recipe, cfg.params.delta, cfg.base_seed, k))
        .collect::<Result<_, _>>()?;
    let one = |i: usize| -> Result<TrialRecord, HarnessError> {
        let seed = cfg.base_seed.wrapping_add(i as u64);
        let k = i % count;
        let oracle = FreeSpaceOracle::from_shared(Arc::clone(&instances[k].matrix));
        let mut rng = stream_rng(seed, TRIAL_STREAM);
        let start = Instant::now();
        let (v, witness_sound) = run_trial(cfg.algorithm, &cfg.params, &instances[k], &oracle, &mut rng)?;
        let wall_time_ms = cfg.record_wall_time.then(|| start.elapsed().as_secs_f64() * 1e3);
        Ok(TrialRecord {
            seed,
            instance: k,
            answer: v.answer,
            witness: v.witness,
            witness_sound,
            queries_used: v.queries_used,
            diagnostics: v.diagnostics,
            wall_time_ms,
        })
    };
    let mut records: Vec<TrialRecord> = if cfg.parallel {
        (0..cfg.trials).into_par_iter().map(one).collect::<Result<_, _>>()?
    } else {
        (0..cfg.trials).map(one).collect::<Result<_, _>>()?
    };
    records.sort_by_key(|r| r.seed);
    let aggregate = aggregate(&records);
    Ok(TrialReport {
        config: cfg.clone(),
        records,
        aggregate,
    })
}

/// One trial per line, then the aggregate as a final line.
pub fn write_report_jsonl<W: Write>(report: &TrialReport, mut w: W) -> Result<(), HarnessError> {
    for r in &report.records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    serde_json::to_writer(&mut w, &serde_json::json!({ "aggregate": report.aggregate, "config": report.config }))?;
    writeln!(w)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    N,
    T,
    Eps,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "n" => Ok(SweepAxis::N),
            "t" => Ok(SweepAxis::T),
            "eps" => Ok(SweepAxis::Eps),
            _ => Err(format!("unknown sweep axis {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub median_q: f64,
    pub p90_q: f64,
    pub no_rate: f64,
    pub wilson_lb: f64,
    /// Median queries over the algorithm's asymptotic bound.
    pub fitted_ratio: f64,
}

/// Asymptotic query bound the fitted ratio divides by.
///
/// `frechet1`: `(t/eps) log2(t/eps)`. `frechet2`:
/// `(t^3 + t^2 log2 n) max(1, log2 log2 max(t, 4)) / eps`.
/// `hausdorff`: `1/eps`. `approx`: `t/eps`. Others: 1.
pub fn complexity_model(algorithm: Algorithm, t: f64, eps: f64, n: usize) -> f64 {
    match algorithm {
        Algorithm::Frechet1 => {
            let x = t / eps;
            x * x.log2().max(1.0)
        }
        Algorithm::Frechet2 => {
            let ln = (n as f64).log2();
            (t.powi(3) + t * t * ln) * t.max(4.0).log2().log2().max(1.0) / eps
        }
        Algorithm::Hausdorff => 1.0 / eps,
        Algorithm::Approx => t / eps,
        _ => 1.0,
    }
}

/// Runs one batch per value of `axis` and tabulates the query counts.
pub fn sweep_queries(cfg: &TrialConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>, HarnessError> {
    values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            match axis {
                SweepAxis::N => c.recipe.generator = cfg.recipe.generator.with_n(v as usize),
                SweepAxis::T => c.params.t = Some(v as usize),
                SweepAxis::Eps => c.params.eps = v,
            }
            let rep = run_batch(&c)?;
            let t = match (c.algorithm, c.params.t) {
                (Algorithm::Frechet2, _) | (_, None) => {
                    let mut ts: Vec<f64> = rep
                        .records
                        .iter()
                        .filter_map(|r| r.diagnostics.estimated_t.or(r.diagnostics.t))
                        .map(|t| t as f64)
                        .collect();
                    ts.sort_by(f64::total_cmp);
                    if ts.is_empty() {
                        1.0
                    } else {
                        quantile(&ts, 0.5)
                    }
                }
                (_, Some(t)) => t as f64,
            };
            let a = &rep.aggregate;
            let model = complexity_model(c.algorithm, t, c.params.eps, c.recipe.generator.n());
            Ok(SweepRow {
                axis_value: v,
                median_q: a.queries.median,
                p90_q: a.queries.p90,
                no_rate: a.no_rate,
                wilson_lb: a.wilson_lb,
                fitted_ratio: a.queries.median / model,
            })
        })
        .collect()
}

/// CSV with columns `axis_value, median_q, p90_q, no_rate, wilson_lb`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<(), HarnessError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["axis_value", "median_q", "p90_q", "no_rate", "wilson_lb"])?;
    for r in rows {
        wr.write_record([
            r.axis_value.to_string(),
            r.median_q.to_string(),
            r.p90_q.to_string(),
            r.no_rate.to_string(),
            r.wilson_lb.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Names of the structural checks [`verify_suite`] runs, in order.
pub const SUITE_CHECKS: [&str; 7] = [
    "box_of_ones",
    "layers_bracket_zero_count",
    "diagonal_restricted_within_three_times_coupling",
    "straightness_bounds_locality",
    "hausdorff_iff_no_barriers",
    "reduction_sandwich",
    "hausdorff_bounds_frechet",
];

/// Number of structural invariants the suite is expected to cover.
pub const INVARIANT_COUNT: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub instances: usize,
    /// Instances discarded because a precondition did not hold.
    pub skipped: usize,
    pub counterexamples: Vec<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }
}

const MAX_REPORTED: usize = 5;

struct Tally {
    name: &'static str,
    instances: usize,
    skipped: usize,
    counterexamples: Vec<String>,
    failures: usize,
}

impl Tally {
    fn new(name: &'static str, instances: usize) -> Self {
        Tally {
            name,
            instances,
            skipped: 0,
            counterexamples: Vec::new(),
            failures: 0,
        }
    }

    fn fail(&mut self, msg: impl FnOnce() -> String) {
        self.failures += 1;
        if self.counterexamples.len() < MAX_REPORTED {
            self.counterexamples.push(msg());
        }
    }

    fn finish(mut self) -> CheckOutcome {
        if self.failures > self.counterexamples.len() {
            let more = self.failures - self.counterexamples.len();
            self.counterexamples.push(format!("... and {more} more"));
        }
        CheckOutcome {
            name: self.name.to_owned(),
            instances: self.instances,
            skipped: self.skipped,
            counterexamples: self.counterexamples,
        }
    }
}

fn random_matrix(n: usize, m: usize, p: f64, rng: &mut impl Rng) -> ExplicitMatrix {
    ExplicitMatrix::from_fn(n, m, |_, _| rng.random::<f64>() < p).expect("nonempty")
}

fn with_zero_corners(m: &ExplicitMatrix) -> ExplicitMatrix {
    let (n, r) = (m.n_cols(), m.n_rows());
    ExplicitMatrix::from_zeros(n, r, m.zeros().chain([(1, 1), (n, r)])).expect("in range")
}

/// Gaps of a min-cost diagonal-restricted path between consecutive zeros enclose only ones.
pub fn check_box_of_ones(seed: u64, instances: usize) -> CheckOutcome {
    let mut rng = stream_rng(seed, 101);
    let mut tally = Tally::new(SUITE_CHECKS[0], instances);
    for _ in 0..instances {
        let p = rng.random_range(0.15..0.6);
        let m = random_matrix(10, 10, p, &mut rng);
        let (_, path) = min_cost_path(&m, PathRule::DiagonalRestricted);
        let zeros: Vec<(usize, usize)> = path.steps.iter().copied().filter(|&(i, j)| m.is_zero(i, j)).collect();
        for w in zeros.windows(2) {
            let ((i, j), (i2, j2)) = (w[0], w[1]);
            if i2 - i + j2 - j <= 2 && (i2 - i).max(j2 - j) <= 1 {
                // No one-entry between the two zeros on the path.
                continue;
            }
            let stray = (i..=i2)
                .flat_map(|k| (j..=j2).map(move |l| (k, l)))
                .find(|&e| e != (i, j) && e != (i2, j2) && m.is_zero(e.0, e.1));
            if let Some(e) = stray {
                tally.fail(|| format!("zero {e:?} inside box {:?}-{:?} of path {:?}\n{m}", (i, j), (i2, j2), path.steps));
            }
        }
    }
    tally.finish()
}

/// `z <= L <= 2z` for the zero count `z` of a min-cost path under `rule` and the layer count `L`.
///
/// The paths must be diagonal-restricted for the bound to hold; the rule is a
/// parameter so that the check can be shown to catch an unrestricted path.
pub fn check_layer_bounds_with(seed: u64, instances: usize, rule: PathRule) -> CheckOutcome {
    let mut rng = stream_rng(seed, 102);
    let mut tally = Tally::new(SUITE_CHECKS[1], instances);
    for k in 0..instances {
        let p = rng.random_range(0.2..0.7);
        let (m, from, to) = if k % 2 == 0 {
            let m = with_zero_corners(&random_matrix(6, 6, p, &mut rng));
            (m, (1, 1), (6, 6))
        } else {
            let m = random_matrix(8, 8, p, &mut rng);
            let zs: Vec<_> = m.zeros().collect();
            let pairs: Vec<_> = zs
                .iter()
                .flat_map(|&a| zs.iter().map(move |&b| (a, b)))
                .filter(|(a, b)| a.0 <= b.0 && a.1 <= b.1)
                .collect();
            if pairs.is_empty() {
                tally.skipped += 1;
                continue;
            }
            let (a, b) = pairs[rng.random_range(0..pairs.len())];
            (m, a, b)
        };
        let (_, path) = min_cost_path_between(&m, from, to, rule).expect("valid rectangle");
        let z = path.zeros(&m);
        let l = layer_count(&m, from, to).expect("zero corners");
        if !(z <= l && l <= 2 * z) {
            tally.fail(|| {
                format!(
                    "{}x{} matrix, rect {from:?}-{to:?}: z = {z}, L = {l}, path {:?}\n{m}",
                    m.n_cols(),
                    m.n_rows(),
                    path.steps
                )
            });
        }
    }
    tally.finish()
}

pub fn check_layer_bounds(seed: u64, instances: usize) -> CheckOutcome {
    check_layer_bounds_with(seed, instances, PathRule::DiagonalRestricted)
}

/// `C <= C_dr <= 3 C` for the unrestricted and diagonal-restricted minimum costs.
pub fn check_restricted_factor(seed: u64, instances: usize) -> CheckOutcome {
    let mut rng = stream_rng(seed, 103);
    let mut tally = Tally::new(SUITE_CHECKS[2], instances);
    for _ in 0..instances {
        let (n, r) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let p = rng.random_range(0.0..0.8);
        let m = random_matrix(n, r, p, &mut rng);
        let (c, dr) = (min_cost_coupling(&m), min_cost_diagonal_restricted(&m));
        if !(c <= dr && dr <= 3 * c) {
            tally.fail(|| format!("coupling {c}, restricted {dr}\n{m}"));
        }
    }
    tally.finish()
}

fn curve_alpha(p: &Curve, q: &Curve, delta: f64) -> Option<f64> {
    let (a_lo, a_hi) = edge_length_range(p).ok()?;
    let (b_lo, b_hi) = edge_length_range(q).ok()?;
    let (lo, hi) = (a_lo.min(b_lo), a_hi.max(b_hi));
    (lo > 0.0).then(|| (hi / delta).max(delta / lo).max(1.0))
}

/// Exact locality of `M_δ` is at most `α² κ` for κ-straight curves with edges in `[δ/α, αδ]`.
pub fn check_straightness_locality(seed: u64, instances: usize) -> CheckOutcome {
    let mut rng = stream_rng(seed, 104);
    let mut tally = Tally::new(SUITE_CHECKS[3], instances);
    for _ in 0..instances {
        let n = rng.random_range(2..=120);
        let m = rng.random_range(2..=120);
        let turn = rng.random_range(0.0..70.0f64).to_radians();
        let delta = rng.random_range(0.5..2.0);
        let p = gen_straight_curve(n, 2, (0.5, 1.5), turn, &mut rng).expect("valid");
        let q0 = gen_straight_curve(m, 2, (0.5, 1.5), turn, &mut rng).expect("valid");
        let q = if rng.random_bool(0.5) && n == m {
            perturb_within(&p, delta * rng.random_range(0.2..1.5), &mut rng).expect("valid")
        } else {
            q0
        };
        let (Ok(kp), Ok(kq), Some(alpha)) = (straightness(&p), straightness(&q), curve_alpha(&p, &q, delta)) else {
            tally.skipped += 1;
            continue;
        };
        let kappa = kp.max(kq);
        let mx = ExplicitMatrix::from_curves(&p, &q, delta).expect("same dimension");
        let t = exact_locality(&mx);
        let bound = alpha * alpha * kappa;
        if t > bound * (1.0 + 1e-12) {
            tally.fail(|| format!("n={n} m={m} delta={delta}: locality {t} > alpha^2 kappa = {bound} (alpha {alpha}, kappa {kappa})"));
        }
    }
    tally.finish()
}

/// `d_H <= δ` exactly when `M_δ` has no barrier.
pub fn check_hausdorff_barriers(seed: u64, instances: usize) -> CheckOutcome {
    let mut rng = stream_rng(seed, 105);
    let mut tally = Tally::new(SUITE_CHECKS[4], instances);
    for _ in 0..instances {
        let n = rng.random_range(1..=30);
        let m = rng.random_range(1..=30);
        let pts = |k: usize, rng: &mut ChaCha8Rng| {
            Curve::from_rows((0..k).map(|_| vec![rng.random_range(0.0..5.0), rng.random_range(0.0..5.0)]).collect())
                .expect("valid")
        };
        let (p, q) = (pts(n, &mut rng), pts(m, &mut rng));
        let dh = discrete_hausdorff(&p, &q).expect("same dimension");
        // Probe around the critical value, including the value itself.
        let delta = match rng.random_range(0..3) {
            0 => dh,
            1 => dh * rng.random_range(0.5..1.0),
            _ => dh * rng.random_range(1.0..1.5),
        };
        let mx = ExplicitMatrix::from_curves(&p, &q, delta).expect("same dimension");
        let barrier_free = count_barriers(&mx) == (0, 0);
        if (dh <= delta) != barrier_free {
            tally.fail(|| format!("d_H = {dh}, delta = {delta}, barriers {:?}", count_barriers(&mx)));
        }
    }
    tally.finish()
}

/// A cost-zero path in the β-reduced `M_δ` implies `d_dF <= (1+ε')δ`; its absence implies `d_dF > (1-ε')δ`.
pub fn check_reduction_sandwich(seed: u64, instances: usize) -> CheckOutcome {
    let mut rng = stream_rng(seed, 106);
    let mut tally = Tally::new(SUITE_CHECKS[5], instances);
    for _ in 0..instances {
        let n = rng.random_range(8..=100);
        let (alpha, gamma) = (1.0, 2.0);
        let delta = rng.random_range(1.0..12.0);
        let eps_prime = rng.random_range(0.1..0.9);
        let turn = rng.random_range(0.0..40.0f64).to_radians();
        // Edges of P in [0.7, 0.8] and a jitter of 0.05 keep Q's edges in [α/γ, α].
        let p = gen_straight_curve(n, 2, (0.7 * alpha, 0.8 * alpha), turn, &mut rng).expect("valid");
        let q = if rng.random_bool(0.8) {
            // A translate at distance close to δ, so d_dF lands near the threshold.
            let r = delta * rng.random_range(0.6..1.4);
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            let moved: Vec<f64> = p
                .vertices()
                .flat_map(|v| [v[0] + r * phi.cos(), v[1] + r * phi.sin()])
                .collect();
            perturb_within(&Curve::from_flat(2, moved).expect("valid"), 0.05 * alpha, &mut rng).expect("valid")
        } else {
            gen_straight_curve(n, 2, (0.6 * alpha, 0.9 * alpha), turn, &mut rng).expect("valid")
        };
        let (q_lo, q_hi) = edge_length_range(&q).expect("n >= 2");
        if q_hi > alpha || q_lo < alpha / gamma {
            tally.skipped += 1;
            continue;
        }
        let beta = compute_beta(eps_prime, delta, alpha).expect("positive");
        if beta > n {
            tally.skipped += 1;
            continue;
        }
        let reduced = ExplicitMatrix::from_curves(&p, &q, delta)
            .expect("same dimension")
            .reduced(beta)
            .expect("beta <= n");
        let c = min_cost_coupling(&reduced);
        let df = discrete_frechet(&p, &q).expect("same dimension");
        let ok = if c == 0 {
            df <= (1.0 + eps_prime) * delta
        } else {
            df > (1.0 - eps_prime) * delta
        };
        if !ok {
            tally.fail(|| format!("n={n} delta={delta} eps'={eps_prime} beta={beta}: reduced cost {c}, d_dF {df}"));
        }
    }
    tally.finish()
}

/// `d_dF <= (1.5κ + 2.5) d_H` when edges and endpoint distances are at most `d_H`.
pub fn check_hausdorff_frechet(seed: u64, instances: usize) -> CheckOutcome {
    let mut rng = stream_rng(seed, 107);
    let mut tally = Tally::new(SUITE_CHECKS[6], instances);
    for _ in 0..instances {
        let n = rng.random_range(2..=60);
        let turn = rng.random_range(0.0..60.0f64).to_radians();
        let p = gen_straight_curve(n, 2, (0.05, 0.3), turn, &mut rng).expect("valid");
        let r = rng.random_range(0.3..1.0);
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let moved = Curve::from_flat(
            2,
            p.vertices().flat_map(|v| [v[0] + r * phi.cos(), v[1] + r * phi.sin()]).collect(),
        )
        .expect("valid");
        let q = match rng.random_range(0..3) {
            0 => perturb_within(&moved, 0.05, &mut rng).expect("valid"),
            // Resampled at a different arc-length step, so the vertex counts differ.
            1 => subsample(&moved, rng.random_range(0.05..r).min(curve_length(&moved))).expect("valid"),
            // An independent walk from a nearby start.
            _ => {
                let m = rng.random_range(2..=60);
                let raw = gen_straight_curve(m, 2, (0.05, 0.3), turn, &mut rng).expect("valid");
                let shift: Vec<f64> = p.vertex(0).iter().map(|x| x + rng.random_range(-0.3..0.3)).collect();
                Curve::from_flat(2, raw.vertices().flat_map(|v| v.iter().zip(&shift).map(|(a, b)| a + b)).collect())
                    .expect("valid")
            }
        };
        let m = q.len();
        let dh = discrete_hausdorff(&p, &q).expect("same dimension");
        let (_, ep) = edge_length_range(&p).expect("n >= 2");
        let (_, eq) = edge_length_range(&q).expect("m >= 2");
        let ends = dist(p.vertex(0), q.vertex(0)).max(dist(p.vertex(p.len() - 1), q.vertex(q.len() - 1)));
        if ep.max(eq) > dh || ends > dh {
            tally.skipped += 1;
            continue;
        }
        let (Ok(kp), Ok(kq)) = (straightness(&p), straightness(&q)) else {
            tally.skipped += 1;
            continue;
        };
        let kappa = kp.max(kq);
        let df = discrete_frechet(&p, &q).expect("same dimension");
        let bound = (1.5 * kappa + 2.5) * dh;
        if df > bound * (1.0 + 1e-12) {
            tally.fail(|| format!("n={n} m={m}: d_dF {df} > (1.5 kappa + 2.5) d_H = {bound} (kappa {kappa}, d_H {dh})"));
        }
    }
    tally.finish()
}

/// Runs every structural check with `instances` random instances each.
pub fn verify_suite(seed: u64, instances: usize) -> SuiteReport {
    let checks = vec![
        check_box_of_ones(seed, instances),
        check_layer_bounds(seed, instances),
        check_restricted_factor(seed, instances),
        check_straightness_locality(seed, instances),
        check_hausdorff_barriers(seed, instances),
        check_reduction_sandwich(seed, instances),
        check_hausdorff_frechet(seed, instances),
    ];
    SuiteReport { seed, checks }
}

/// Curve length helper shared with the CLI.
pub fn lengths_match(p: &Curve, q: &Curve) -> bool {
    let (a, b) = (curve_length(p), curve_length(q));
    (a - b).abs() <= 1e-9 * a.max(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn banded(n: usize, width: usize) -> InstanceRecipe {
        InstanceRecipe {
            generator: Generator::Banded { n, width },
            certify: vec![Certificate::CostZero],
        }
    }

    #[test]
    fn wilson_reference_values() {
        assert_eq!(wilson_lower_bound(0, 10, WILSON_Z), 0.0);
        // 80 of 100 at 95%: 0.7112 to four places.
        assert!((wilson_lower_bound(80, 100, WILSON_Z) - 0.7112).abs() < 5e-5);
        assert!((wilson_lower_bound(400, 400, WILSON_Z) - 0.990491).abs() < 1e-5);
        assert_eq!(wilson_lower_bound(0, 0, WILSON_Z), 0.0);
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&[7.0], 0.9), 7.0);
    }

    #[test]
    fn yes_recipe_is_always_accepted() {
        let cfg = TrialConfig::new(Algorithm::Frechet1, banded(64, 1), Params::new(1.0, 0.5), 30, 7);
        let rep = run_batch(&cfg).unwrap();
        assert_eq!(rep.aggregate.yes_rate, 1.0);
        assert_eq!(rep.records.len(), 30);
        assert_eq!(rep.records[3].seed, 10);
    }

    #[test]
    fn reports_are_byte_identical() {
        let mut cfg = TrialConfig::new(Algorithm::Hausdorff, banded(50, 2), Params::new(1.0, 0.3), 20, 3);
        cfg.parallel = true;
        let (mut a, mut b) = (Vec::new(), Vec::new());
        let par = run_batch(&cfg).unwrap();
        write_report_jsonl(&par, &mut a).unwrap();
        write_report_jsonl(&run_batch(&cfg).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        assert_eq!(String::from_utf8(a).unwrap().lines().count(), 21);
        cfg.parallel = false;
        assert_eq!(run_batch(&cfg).unwrap().records, par.records);
    }

    #[test]
    fn unverifiable_recipe_is_rejected() {
        let recipe = InstanceRecipe {
            generator: Generator::Banded { n: 10, width: 1 },
            certify: vec![Certificate::Far { eps: 0.1 }],
        };
        let cfg = TrialConfig::new(Algorithm::Frechet1, recipe, Params::new(1.0, 0.5), 5, 0);
        assert!(matches!(run_batch(&cfg), Err(HarnessError::RecipeVerificationFailed { .. })));
    }

    #[test]
    fn far_curve_recipe_certifies() {
        let recipe = InstanceRecipe {
            generator: Generator::CurvePair {
                n: 200,
                dim: 2,
                edge_min: 1.0,
                edge_max: 1.0,
                max_turn_deg: 3.0,
                radius: 0.15,
                far: Some(FarBlock { eps: 0.2, margin: 4.0 }),
            },
            certify: vec![Certificate::Far { eps: 0.2 }],
        };
        let inst = build_instance(&recipe, 1.2, 5, 0).unwrap();
        assert!(min_cost_coupling(&inst.matrix) as f64 > 40.0);
        let cfg = TrialConfig::new(Algorithm::Frechet1, recipe, Params::new(1.2, 0.2), 20, 5);
        let rep = run_batch(&cfg).unwrap();
        assert_eq!(rep.aggregate.unsound_witnesses, 0);
        assert!(rep.aggregate.no_rate > 0.5);
    }

    #[test]
    fn outlier_band_has_predicted_locality() {
        for (offset, t) in [(7, 4.0), (15, 8.0)] {
            let recipe = InstanceRecipe {
                generator: Generator::BandedOutliers {
                    n: 200,
                    outliers: 5,
                    offset,
                },
                certify: vec![],
            };
            assert_eq!(build_instance(&recipe, 1.0, 0, 0).unwrap().locality(), t);
        }
        let b = build_instance(&banded(50, 4), 1.0, 0, 0).unwrap();
        assert_eq!(b.locality(), 4.0);
    }

    #[test]
    fn hausdorff_sweep_has_exact_counts() {
        let cfg = TrialConfig::new(Algorithm::Hausdorff, banded(40, 1), Params::new(1.0, 0.3), 10, 1);
        let rows = sweep_queries(&cfg, SweepAxis::Eps, &[0.1, 0.3, 0.5]).unwrap();
        let counts: Vec<f64> = rows.iter().map(|r| r.median_q).collect();
        assert_eq!(counts, vec![40.0, 14.0, 8.0]);
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("axis_value,median_q,p90_q,no_rate,wilson_lb\n0.1,40,40,0,0\n"));
    }

    #[test]
    fn witness_verification() {
        let m = ExplicitMatrix::from_zeros(4, 4, [(1, 1), (1, 2), (4, 3), (4, 4)]).unwrap();
        assert!(verify_witness(&m, &Witness::Barrier { axis: crate::freespace::Axis::Columns, index: 2 }, None));
        assert!(!verify_witness(&m, &Witness::Barrier { axis: crate::freespace::Axis::Columns, index: 1 }, None));
        assert!(verify_witness(
            &m,
            &Witness::ImpermeableBlock { axis: crate::freespace::Axis::Columns, lo: 1, hi: 4 },
            None
        ));
        assert!(verify_witness(&m, &Witness::CornerOne { i: 2, j: 2 }, None));
        assert!(!verify_witness(&m, &Witness::CornerOne { i: 1, j: 1 }, None));
    }

    #[test]
    fn suite_passes_and_has_documented_size() {
        let rep = verify_suite(2024, 60);
        assert_eq!(rep.checks.len(), INVARIANT_COUNT);
        assert_eq!(rep.checks.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), SUITE_CHECKS);
        for c in &rep.checks {
            assert!(c.passed(), "{}: {:?}", c.name, c.counterexamples);
            assert!(c.skipped * 2 < c.instances, "{} skipped {} of {}", c.name, c.skipped, c.instances);
        }
    }

    #[test]
    fn unrestricted_paths_break_the_layer_bound() {
        let out = check_layer_bounds_with(2024, 400, PathRule::Unrestricted);
        assert!(!out.passed());
        assert!(out.counterexamples[0].starts_with("6x6 matrix"));
    }
}
