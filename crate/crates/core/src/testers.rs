//! Randomized testers that see the free space matrix only through queries.
//!
//! Every tester returns a [`Verdict`]. A "no" always carries a witness that
//! can be re-checked against the matrix, so "no" answers are never wrong; only
//! "yes" answers on far instances can be mistaken.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::freespace::{compute_beta, reduce, Axis, FreeSpaceOracle, OracleError, QueryOracle};
use crate::geometry::{curve_length, subsample, Curve, GeometryError};
use crate::reference::extremes_pass;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TesterError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("oracle must be square, got {n_cols} columns and {n_rows} rows")]
    NonSquare { n_cols: usize, n_rows: usize },
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error("no interval can be sampled (K = {big_k}, n = {n})")]
    DegenerateRange { big_k: i64, n: usize },
    #[error("subsampled curves differ in length: {p} vs {q} vertices")]
    LengthMismatch { p: usize, q: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
}

/// Evidence backing a "no".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Entry `(i, j)` is a one although every coupling path must visit it.
    CornerOne { i: usize, j: usize },
    /// An all-ones column or row.
    Barrier { axis: Axis, index: usize },
    /// Slices `lo..=hi` admit no cost-zero path from the first to the last.
    ImpermeableBlock { axis: Axis, lo: usize, hi: usize },
    /// Slice `index` fails second-order `t`-locality.
    SecondOrderFailure { axis: Axis, index: usize },
    /// Slices `first` and `second` fail `t`-locality.
    PairFailure { axis: Axis, first: usize, second: usize },
}

/// Parameter trace of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<u32>,
    /// `K = ceil(eps n / (32 t)) - 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub big_k: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intervals: Option<usize>,
    /// The interval sample was empty and the whole range was scanned instead.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exhaustive_fallback: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimated_t: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate_queries: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_reduced: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_second: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_prime: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsampled_len: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub answer: Answer,
    pub witness: Option<Witness>,
    pub queries_used: u64,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

impl Verdict {
    fn yes(queries_used: u64, diagnostics: Diagnostics) -> Self {
        Verdict {
            answer: Answer::Yes,
            witness: None,
            queries_used,
            diagnostics,
        }
    }

    fn no(w: Witness, queries_used: u64, diagnostics: Diagnostics) -> Self {
        Verdict {
            answer: Answer::No,
            witness: Some(w),
            queries_used,
            diagnostics,
        }
    }

    pub fn is_yes(&self) -> bool {
        self.answer == Answer::Yes
    }
}

/// `ceil(x)`, except that values within a relative `1e-9` of an integer round to it.
///
/// Parameters like `3 / 0.3` land a hair above an integer in floating point;
/// a plain ceiling would then add a spurious unit.
pub fn ceil_robust(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

fn ceil_count(x: f64) -> usize {
    let c = ceil_robust(x);
    if c <= 0.0 {
        0
    } else {
        c as usize
    }
}

fn require_square<O: QueryOracle + ?Sized>(o: &O) -> Result<usize, TesterError> {
    if o.is_square() {
        Ok(o.n_cols())
    } else {
        Err(TesterError::NonSquare {
            n_cols: o.n_cols(),
            n_rows: o.n_rows(),
        })
    }
}

fn check_eps(eps: f64, hi: f64) -> Result<(), TesterError> {
    if eps > 0.0 && eps < hi {
        Ok(())
    } else {
        Err(TesterError::BadParam(format!("eps {eps} must lie in (0, {hi})")))
    }
}

/// Parameters of the known-`t` Fréchet tester.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tester1Params {
    pub t: usize,
    pub eps: f64,
    /// Number of barrier probes is `ceil(k)`.
    pub k: f64,
    pub c: u32,
}

impl Tester1Params {
    /// Defaults `k = 24 t / eps`, `c = 4`.
    pub fn new(t: usize, eps: f64) -> Self {
        Tester1Params {
            t,
            eps,
            k: 24.0 * t as f64 / eps,
            c: 4,
        }
    }

    pub fn validate(&self) -> Result<(), TesterError> {
        if self.t == 0 {
            return Err(TesterError::BadParam("t must be >= 1".into()));
        }
        check_eps(self.eps, 2.0)?;
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(TesterError::BadParam(format!("k {} must be finite and >= 0", self.k)));
        }
        if self.c == 0 {
            return Err(TesterError::BadParam("c must be >= 1".into()));
        }
        Ok(())
    }

    /// `K = ceil(eps n / (32 t)) - 1`; may be zero or negative.
    pub fn big_k(&self, n: usize) -> i64 {
        ceil_robust(self.eps * n as f64 / (32.0 * self.t as f64)) as i64 - 1
    }

    /// `ell = ceil(128 t / eps)`.
    pub fn ell(&self) -> usize {
        ceil_count(128.0 * self.t as f64 / self.eps)
    }
}

/// Closed index ranges `[lo, hi]` with `1 <= lo <= hi <= n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalSet {
    pub intervals: Vec<(usize, usize)>,
}

impl IntervalSet {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Sum of `hi - lo` over all intervals.
    pub fn total_length(&self) -> usize {
        self.intervals.iter().map(|(lo, hi)| hi - lo).sum()
    }
}

/// Multi-scale interval sample over `[1, n]`.
///
/// Level `i = 0..=floor(log2 ell)` uses width `w = 2^(i+1)`, draws
/// `ceil(4 c n / (w K))` distinct `j` from `[0, floor(n/w) - 2]` (all of them
/// when the request exceeds that range) and emits `[max(1, j w), (j + 2) w]`.
/// Fails with [`TesterError::DegenerateRange`] when `K <= 0` or every level is empty.
pub fn sample_intervals<R: Rng + ?Sized>(
    n: usize,
    big_k: i64,
    ell: usize,
    c: u32,
    rng: &mut R,
) -> Result<IntervalSet, TesterError> {
    if n == 0 || c == 0 || ell == 0 {
        return Err(TesterError::BadParam(format!(
            "sample_intervals needs n, c, ell >= 1 (got {n}, {c}, {ell})"
        )));
    }
    if big_k <= 0 {
        return Err(TesterError::DegenerateRange { big_k, n });
    }
    let top = ell.ilog2();
    let mut intervals = Vec::new();
    for i in 0..=top {
        let Some(w) = 1usize.checked_shl(i + 1).filter(|&w| w <= n) else {
            break;
        };
        let population = (n / w).saturating_sub(1);
        if population == 0 {
            continue;
        }
        let want = ceil_count(4.0 * c as f64 * n as f64 / (w as f64 * big_k as f64));
        let mut js = if want >= population {
            (0..population).collect()
        } else {
            sample(rng, population, want).into_vec()
        };
        js.sort_unstable();
        intervals.extend(js.into_iter().map(|j| ((j * w).max(1), ((j + 2) * w).min(n))));
    }
    if intervals.is_empty() {
        return Err(TesterError::DegenerateRange { big_k, n });
    }
    Ok(IntervalSet { intervals })
}

/// One query: whether slice `i` has no zeros.
pub fn is_barrier<O: QueryOracle + ?Sized>(o: &O, axis: Axis, i: usize) -> Result<bool, TesterError> {
    Ok(o.query(axis, i)?.is_barrier())
}

/// Whether a cost-zero path crosses slices `lo..=hi`, from a zero of `lo` to a zero of `hi`.
///
/// Queries every slice of the block exactly once and sweeps the zero lists,
/// keeping only the reachable zeros of the previous slice. A zero at position
/// `p` is reachable if the previous slice reached `p` or `p - 1`, or if `p - 1`
/// is a reachable zero of the same slice.
pub fn permeable<O: QueryOracle + ?Sized>(o: &O, axis: Axis, lo: usize, hi: usize) -> Result<bool, TesterError> {
    let extent = o.extent(axis);
    if lo == 0 || lo > hi || hi > extent {
        return Err(OracleError::IndexOutOfRange {
            axis,
            index: if lo == 0 || lo > hi { lo } else { hi },
            extent,
        }
        .into());
    }
    let mut reach: Vec<usize> = o.query(axis, lo)?.to_vec();
    let mut next = Vec::new();
    for s in lo + 1..=hi {
        let zeros = o.query(axis, s)?;
        next.clear();
        let mut k = 0;
        for &p in zeros.iter() {
            while k < reach.len() && reach[k] + 1 < p {
                k += 1;
            }
            let from_prev = reach[k..].iter().take(2).any(|&r| r == p || r + 1 == p);
            let from_below = next.last() == Some(&(p.wrapping_sub(1)));
            if from_prev || from_below {
                next.push(p);
            }
        }
        std::mem::swap(&mut reach, &mut next);
    }
    Ok(!reach.is_empty())
}

/// Fréchet tester for matrices with known locality `t`.
///
/// Checks both corners, probes `ceil(k)` uniform row/column pairs for
/// barriers, then tests every sampled interval for permeability as a column
/// block and as a row block. With `K <= 0` the intervals are replaced by the
/// full range `[1, n]`.
pub fn frechet_tester1<O: QueryOracle + ?Sized, R: Rng + ?Sized>(
    o: &O,
    p: &Tester1Params,
    rng: &mut R,
) -> Result<Verdict, TesterError> {
    p.validate()?;
    let n = require_square(o)?;
    let start = o.query_count();
    let used = || o.query_count() - start;
    let big_k = p.big_k(n);
    let ell = p.ell();
    let mut diag = Diagnostics {
        t: Some(p.t),
        eps: Some(p.eps),
        k: Some(p.k),
        c: Some(p.c),
        big_k: Some(big_k),
        ell: Some(ell),
        ..Diagnostics::default()
    };

    for corner in [1, n] {
        if !o.query_column(corner)?.contains(corner) {
            return Ok(Verdict::no(Witness::CornerOne { i: corner, j: corner }, used(), diag));
        }
    }

    for _ in 0..ceil_count(p.k) {
        let j = rng.random_range(1..=n);
        for axis in [Axis::Rows, Axis::Columns] {
            if is_barrier(o, axis, j)? {
                return Ok(Verdict::no(Witness::Barrier { axis, index: j }, used(), diag));
            }
        }
    }

    let set = match sample_intervals(n, big_k, ell, p.c, rng) {
        Ok(set) => {
            diag.exhaustive_fallback = Some(false);
            set
        }
        Err(TesterError::DegenerateRange { .. }) => {
            diag.exhaustive_fallback = Some(true);
            IntervalSet {
                intervals: vec![(1, n)],
            }
        }
        Err(e) => return Err(e),
    };
    diag.intervals = Some(set.len());
    for &(lo, hi) in &set.intervals {
        for axis in [Axis::Columns, Axis::Rows] {
            if !permeable(o, axis, lo, hi)? {
                return Ok(Verdict::no(Witness::ImpermeableBlock { axis, lo, hi }, used(), diag));
            }
        }
    }
    Ok(Verdict::yes(used(), diag))
}

fn extremes<O: QueryOracle + ?Sized>(o: &O, axis: Axis, i: usize) -> Result<Option<(usize, usize)>, TesterError> {
    let z = o.query(axis, i)?;
    Ok(z.low().zip(z.high()))
}

/// Two queries: whether columns `i1` and `i2` pass `t`-locality.
pub fn columns_pass<O: QueryOracle + ?Sized>(o: &O, i1: usize, i2: usize, t: f64) -> Result<bool, TesterError> {
    slices_pass(o, Axis::Columns, i1, i2, t)
}

/// Two queries: whether rows `j1` and `j2` pass `t`-locality.
pub fn rows_pass<O: QueryOracle + ?Sized>(o: &O, j1: usize, j2: usize, t: f64) -> Result<bool, TesterError> {
    slices_pass(o, Axis::Rows, j1, j2, t)
}

fn slices_pass<O: QueryOracle + ?Sized>(o: &O, axis: Axis, a: usize, b: usize, t: f64) -> Result<bool, TesterError> {
    let (ea, eb) = (extremes(o, axis, a)?, extremes(o, axis, b)?);
    Ok(extremes_pass(ea, eb, a.abs_diff(b), t))
}

/// Whether slice `i` passes second-order `t`-locality.
///
/// Queries the slice, then the crossing slice at each of its zeros; stops at
/// the first spread exceeding `2t`.
pub fn second_order_passes<O: QueryOracle + ?Sized>(o: &O, axis: Axis, i: usize, t: f64) -> Result<bool, TesterError> {
    let limit = 2.0 * t;
    let zeros = o.query(axis, i)?;
    if zeros.spread().is_some_and(|s| s as f64 > limit) {
        return Ok(false);
    }
    for &p in zeros.iter() {
        if o.query(axis.other(), p)?.spread().is_some_and(|s| s as f64 > limit) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Proper ancestors of `key` in the balanced search tree over `[1, n]` whose
/// subtree `[lo, hi]` has root `floor((lo + hi) / 2)`; the root is `ceil(n / 2)`.
pub fn bst_ancestors(n: usize, key: usize) -> Vec<usize> {
    let (mut lo, mut hi) = (1, n);
    let mut path = Vec::new();
    while lo <= hi {
        let mid = (lo + hi) / 2;
        if mid == key {
            break;
        }
        path.push(mid);
        if key < mid {
            hi = mid - 1;
        } else {
            lo = mid + 1;
        }
    }
    path
}

/// Number of iterations of [`locality_tester`]: `ceil(3 / sigma) + 2`.
pub fn locality_iterations(sigma: f64) -> usize {
    ceil_count(3.0 / sigma) + 2
}

/// Locality tester: "no" only on matrices that are not `t`-local.
///
/// The first iteration checks index 1, the second index `n`, the rest a
/// uniform index in `[2, n-1]`. Each iteration checks second-order locality of
/// column and row `i`, then `t`-locality of `i` against its tree ancestors.
pub fn locality_tester<O: QueryOracle + ?Sized, R: Rng + ?Sized>(
    o: &O,
    sigma: f64,
    t: usize,
    rng: &mut R,
) -> Result<Verdict, TesterError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(TesterError::BadParam(format!("sigma {sigma} must be positive")));
    }
    if t == 0 {
        return Err(TesterError::BadParam("t must be >= 1".into()));
    }
    let n = require_square(o)?;
    let start = o.query_count();
    let used = || o.query_count() - start;
    let tf = t as f64;
    let diag = Diagnostics {
        t: Some(t),
        ..Diagnostics::default()
    };
    for it in 0..locality_iterations(sigma) {
        let i = match it {
            0 => 1,
            1 => n,
            _ if n <= 2 => rng.random_range(1..=n),
            _ => rng.random_range(2..n),
        };
        for axis in [Axis::Columns, Axis::Rows] {
            if !second_order_passes(o, axis, i, tf)? {
                return Ok(Verdict::no(Witness::SecondOrderFailure { axis, index: i }, used(), diag));
            }
        }
        for j in bst_ancestors(n, i) {
            for axis in [Axis::Columns, Axis::Rows] {
                if !slices_pass(o, axis, i, j, tf)? {
                    let (first, second) = (i.min(j), i.max(j));
                    return Ok(Verdict::no(Witness::PairFailure { axis, first, second }, used(), diag));
                }
            }
        }
    }
    Ok(Verdict::yes(used(), diag))
}

/// Result of [`estimate_locality`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalityEstimate {
    /// A power of two, at least 4.
    pub t: usize,
    pub rounds: u32,
    pub queries_used: u64,
}

/// Repetitions of the locality tester in round `i`: `max(2, ceil(2 (1 + log2 i)))`.
pub fn estimate_repetitions(round: u32) -> usize {
    ceil_count(2.0 * (1.0 + (round as f64).log2())).max(2)
}

/// Doubling search for the locality.
///
/// Round `i` runs the locality tester with `t = 2^i` and
/// `sigma = zeta / 2^(2(i+1))` the prescribed number of times; when all
/// runs say "yes" it returns `2^(i+1)`.
pub fn estimate_locality<O: QueryOracle + ?Sized, R: Rng + ?Sized>(
    o: &O,
    zeta: f64,
    rng: &mut R,
) -> Result<LocalityEstimate, TesterError> {
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(TesterError::BadParam(format!("zeta {zeta} must be positive")));
    }
    require_square(o)?;
    let start = o.query_count();
    for round in 1u32.. {
        let t = 1usize
            .checked_shl(round)
            .ok_or_else(|| TesterError::BadParam("locality estimate overflowed".into()))?;
        let sigma = zeta / 4f64.powi(round as i32 + 1);
        let mut all_yes = true;
        for _ in 0..estimate_repetitions(round) {
            if !locality_tester(o, sigma, t, rng)?.is_yes() {
                all_yes = false;
                break;
            }
        }
        if all_yes {
            return Ok(LocalityEstimate {
                t: 2 * t,
                rounds: round,
                queries_used: o.query_count() - start,
            });
        }
    }
    unreachable!("round counter exhausted")
}

/// Fréchet tester without a locality bound: estimates `t` with
/// `zeta = eps / 1600`, then runs [`frechet_tester1`] with `eps / 3`,
/// `k = 4800 t^2 / eps` and `c = 2`.
pub fn frechet_tester2<O: QueryOracle + ?Sized, R: Rng + ?Sized>(
    o: &O,
    eps: f64,
    rng: &mut R,
) -> Result<Verdict, TesterError> {
    check_eps(eps, 2.0)?;
    require_square(o)?;
    let start = o.query_count();
    let est = estimate_locality(o, eps / 1600.0, rng)?;
    let params = tester2_params(est.t, eps);
    let mut v = frechet_tester1(o, &params, rng)?;
    v.queries_used = o.query_count() - start;
    v.diagnostics.estimated_t = Some(est.t);
    v.diagnostics.estimate_queries = Some(est.queries_used);
    Ok(v)
}

/// Inner parameters [`frechet_tester2`] uses for an estimated `t`.
pub fn tester2_params(t: usize, eps: f64) -> Tester1Params {
    Tester1Params {
        t,
        eps: eps / 3.0,
        k: 4800.0 * (t * t) as f64 / eps,
        c: 2,
    }
}

/// Hausdorff tester: `ceil(2/eps)` uniform columns and as many uniform rows,
/// sampled with replacement. All samples are queried; the first barrier seen
/// becomes the witness.
pub fn hausdorff_tester<O: QueryOracle + ?Sized, R: Rng + ?Sized>(
    o: &O,
    eps: f64,
    rng: &mut R,
) -> Result<Verdict, TesterError> {
    check_eps(eps, 1.0)?;
    let s = ceil_count(2.0 / eps);
    let start = o.query_count();
    let mut witness = None;
    for axis in [Axis::Columns, Axis::Rows] {
        let extent = o.extent(axis);
        for _ in 0..s {
            let i = rng.random_range(1..=extent);
            if is_barrier(o, axis, i)? && witness.is_none() {
                witness = Some(Witness::Barrier { axis, index: i });
            }
        }
    }
    let diag = Diagnostics {
        eps: Some(eps),
        samples: Some(s),
        ..Diagnostics::default()
    };
    let used = o.query_count() - start;
    Ok(match witness {
        Some(w) => Verdict::no(w, used, diag),
        None => Verdict::yes(used, diag),
    })
}

/// Approximate Fréchet tester via the Hausdorff tester at `eps / (8 t)`.
///
/// The caller vouches for the geometric preconditions; they are not checked.
pub fn approx_frechet_tester<O: QueryOracle + ?Sized, R: Rng + ?Sized>(
    o: &O,
    eps: f64,
    t: usize,
    rng: &mut R,
) -> Result<Verdict, TesterError> {
    if t == 0 {
        return Err(TesterError::BadParam("t must be >= 1".into()));
    }
    let inner = eps / (8.0 * t as f64);
    if !(eps > 0.0 && inner < 1.0) {
        return Err(TesterError::BadParam(format!("eps {eps} must lie in (0, {})", 8 * t)));
    }
    let mut v = hausdorff_tester(o, inner, rng)?;
    v.diagnostics.t = Some(t);
    Ok(v)
}

/// How the discrete tester behind an adapter learns the locality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ReducedMode {
    /// Known locality `t` of the full matrix and edge-length ratio `gamma`.
    KnownT { t: usize, gamma: f64 },
    Oblivious,
}

/// Locality assumed for the reduced matrix: `ceil(4 gamma t / eps')`, or `t` itself when `beta = 1`.
pub fn reduced_locality(t: usize, gamma: f64, eps_prime: f64, beta: usize) -> usize {
    if beta == 1 {
        t
    } else {
        ceil_count(4.0 * gamma * t as f64 / eps_prime).max(1)
    }
}

/// `(1 + eps')`-approximate tester on the `beta`-reduced matrix of a curve oracle.
///
/// Witness indices refer to the reduced matrix.
pub fn reduced_frechet_tester_on<O: QueryOracle + ?Sized, R: Rng + ?Sized>(
    o: &O,
    delta: f64,
    eps: f64,
    eps_prime: f64,
    alpha: f64,
    mode: ReducedMode,
    rng: &mut R,
) -> Result<Verdict, TesterError> {
    let beta = compute_beta(eps_prime, delta, alpha)?;
    let view = reduce(o, beta)?;
    let mut v = match mode {
        ReducedMode::KnownT { t, gamma } => {
            if !(gamma >= 1.0 && gamma.is_finite()) {
                return Err(TesterError::BadParam(format!("gamma {gamma} must be >= 1")));
            }
            let tr = reduced_locality(t, gamma, eps_prime, beta);
            let mut v = frechet_tester1(&view, &Tester1Params::new(tr, eps), rng)?;
            v.diagnostics.t_reduced = Some(tr);
            v
        }
        ReducedMode::Oblivious => frechet_tester2(&view, eps, rng)?,
    };
    v.diagnostics.beta = Some(beta);
    Ok(v)
}

/// [`reduced_frechet_tester_on`] over the δ-free space oracle of `(p, q)`.
#[allow(clippy::too_many_arguments)]
pub fn reduced_frechet_tester<R: Rng + ?Sized>(
    p: &Curve,
    q: &Curve,
    delta: f64,
    eps: f64,
    eps_prime: f64,
    alpha: f64,
    mode: ReducedMode,
    rng: &mut R,
) -> Result<Verdict, TesterError> {
    let o = FreeSpaceOracle::from_curves(p.clone(), q.clone(), delta)?;
    reduced_frechet_tester_on(&o, delta, eps, eps_prime, alpha, mode, rng)
}

/// Discrete tester used behind the continuous adapter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ContinuousMode {
    KnownT { t: usize },
    Oblivious,
}

/// Derived quantities of the continuous adapter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousParams {
    /// `eps'' = eps' / 4`.
    pub eps_second: f64,
    /// `a = eps'' delta`.
    pub step: f64,
    /// `delta' = (1 + 2 eps'') delta`.
    pub delta_prime: f64,
    /// Farness handed to the discrete tester, `eps / 12`.
    pub eps_discrete: f64,
}

impl ContinuousParams {
    pub fn new(delta: f64, eps: f64, eps_prime: f64) -> Self {
        let eps_second = eps_prime / 4.0;
        ContinuousParams {
            eps_second,
            step: eps_second * delta,
            delta_prime: (1.0 + 2.0 * eps_second) * delta,
            eps_discrete: eps / 12.0,
        }
    }
}

/// Continuous Fréchet tester: subsample both curves at arc-length step
/// `a = eps'' delta` and run a discrete tester on the `delta'`-free space
/// matrix of the subsampled curves.
///
/// Requires `len(P)` and `len(Q)` to agree within a relative `1e-9`.
/// Witness indices refer to the subsampled curves.
pub fn continuous_frechet_tester<R: Rng + ?Sized>(
    p: &Curve,
    q: &Curve,
    delta: f64,
    eps: f64,
    eps_prime: f64,
    mode: ContinuousMode,
    rng: &mut R,
) -> Result<Verdict, TesterError> {
    check_eps(eps, 1.0)?;
    if !(eps_prime > 0.0 && eps_prime.is_finite() && delta > 0.0 && delta.is_finite()) {
        return Err(TesterError::BadParam(format!(
            "eps' {eps_prime} and delta {delta} must be positive"
        )));
    }
    let (lp, lq) = (curve_length(p), curve_length(q));
    if (lp - lq).abs() > 1e-9 * lp.max(lq) {
        return Err(TesterError::BadParam(format!("curve lengths differ: {lp} vs {lq}")));
    }
    let cp = ContinuousParams::new(delta, eps, eps_prime);
    let (pa, qa) = (subsample(p, cp.step)?, subsample(q, cp.step)?);
    if pa.len() != qa.len() {
        return Err(TesterError::LengthMismatch {
            p: pa.len(),
            q: qa.len(),
        });
    }
    let n = pa.len();
    let o = FreeSpaceOracle::from_curves(pa, qa, cp.delta_prime)?;
    let mut v = match mode {
        ContinuousMode::KnownT { t } => frechet_tester1(&o, &Tester1Params::new(t, cp.eps_discrete), rng)?,
        ContinuousMode::Oblivious => frechet_tester2(&o, cp.eps_discrete, rng)?,
    };
    v.diagnostics.eps_second = Some(cp.eps_second);
    v.diagnostics.step = Some(cp.step);
    v.diagnostics.delta_prime = Some(cp.delta_prime);
    v.diagnostics.subsampled_len = Some(n);
    Ok(v)
}

/// Upper bound on the queries of one [`frechet_tester1`] run given its intervals.
pub fn tester1_query_bound(k: f64, intervals: &IntervalSet) -> u64 {
    2 + 2 * ceil_count(k) as u64 + intervals.intervals.iter().map(|(lo, hi)| 2 * (hi - lo + 1) as u64).sum::<u64>()
}

/// Upper bound on the queries of one [`locality_tester`] run:
/// `(ceil(3/sigma) + 2) (2 (2t + 2) + 4 ceil(log2 n))`.
pub fn locality_query_bound(sigma: f64, t: usize, n: usize) -> u64 {
    let log = if n <= 1 { 0 } else { (n - 1).ilog2() as u64 + 1 };
    locality_iterations(sigma) as u64 * (2 * (2 * t as u64 + 2) + 4 * log)
}
