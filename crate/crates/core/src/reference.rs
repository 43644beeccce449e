//! Exact, exhaustive oracles over fully materialized matrices and curves.
//!
//! Everything here reads the whole input. These functions are the ground truth
//! the sublinear testers and the structural properties are checked against.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::freespace::{Axis, ExplicitMatrix};
use crate::geometry::{dist, Curve};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReferenceError {
    #[error("{axis} index {index} outside 1..={extent}")]
    IndexOutOfRange {
        axis: Axis,
        index: usize,
        extent: usize,
    },
    #[error("rectangle corners {from:?} and {to:?} must be zero entries with from <= to")]
    NotZeroCorners {
        from: (usize, usize),
        to: (usize, usize),
    },
    #[error("curve dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// Monotone lattice path of `(column, row)` tuples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingPath {
    pub steps: Vec<(usize, usize)>,
}

impl CouplingPath {
    /// Number of one-entries visited.
    pub fn cost(&self, m: &ExplicitMatrix) -> usize {
        self.steps.iter().filter(|&&(i, j)| !m.is_zero(i, j)).count()
    }

    /// Number of zero-entries visited.
    pub fn zeros(&self, m: &ExplicitMatrix) -> usize {
        self.steps.len() - self.cost(m)
    }

    /// Whether every step is one of right, up, diagonal.
    pub fn is_monotone(&self) -> bool {
        !self.steps.is_empty()
            && self.steps.windows(2).all(|w| {
                let (di, dj) = (w[1].0.wrapping_sub(w[0].0), w[1].1.wrapping_sub(w[0].1));
                matches!((di, dj), (1, 0) | (0, 1) | (1, 1))
            })
    }

    /// Monotone, and every diagonal step joins two zero-entries.
    pub fn is_diagonal_restricted(&self, m: &ExplicitMatrix) -> bool {
        self.is_monotone()
            && self.steps.windows(2).all(|w| {
                let diagonal = w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1;
                !diagonal || (m.is_zero(w[0].0, w[0].1) && m.is_zero(w[1].0, w[1].1))
            })
    }
}

/// Which diagonal steps a lattice path may take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathRule {
    /// Any diagonal step.
    Unrestricted,
    /// Diagonal steps only between two zero-entries.
    DiagonalRestricted,
}

/// Min over couplings of the max vertex distance along the coupling.
pub fn discrete_frechet(p: &Curve, q: &Curve) -> Result<f64, ReferenceError> {
    if p.dim() != q.dim() {
        return Err(ReferenceError::DimensionMismatch(p.dim(), q.dim()));
    }
    let m = q.len();
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![0.0; m];
    for i in 0..p.len() {
        let pi = p.vertex(i);
        for j in 0..m {
            let d = dist(pi, q.vertex(j));
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => cur[j - 1],
                (_, 0) => prev[0],
                _ => prev[j].min(cur[j - 1]).min(prev[j - 1]),
            };
            cur[j] = d.max(best);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

fn directed_hausdorff(p: &Curve, q: &Curve) -> f64 {
    p.vertices()
        .map(|u| q.vertices().map(|v| dist(u, v)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between the vertex sets.
pub fn discrete_hausdorff(p: &Curve, q: &Curve) -> Result<f64, ReferenceError> {
    if p.dim() != q.dim() {
        return Err(ReferenceError::DimensionMismatch(p.dim(), q.dim()));
    }
    Ok(directed_hausdorff(p, q).max(directed_hausdorff(q, p)))
}

fn fill_mask(m: &ExplicitMatrix, i: usize, mask: &mut [bool]) {
    mask.iter_mut().for_each(|b| *b = false);
    for &j in m.column(i) {
        mask[j] = true;
    }
}

/// Cost-only DP in O(m) memory.
fn min_cost_full(m: &ExplicitMatrix, rule: PathRule) -> usize {
    let rows = m.n_rows();
    let mut prev_mask = vec![false; rows + 1];
    let mut mask = vec![false; rows + 1];
    let mut prev = vec![usize::MAX; rows + 1];
    let mut cur = vec![usize::MAX; rows + 1];
    for i in 1..=m.n_cols() {
        fill_mask(m, i, &mut mask);
        for j in 1..=rows {
            let w = usize::from(!mask[j]);
            let mut best = if i == 1 && j == 1 { 0 } else { usize::MAX };
            if i > 1 {
                best = best.min(prev[j]);
            }
            if j > 1 {
                best = best.min(cur[j - 1]);
            }
            if i > 1 && j > 1 && (rule == PathRule::Unrestricted || (mask[j] && prev_mask[j - 1])) {
                best = best.min(prev[j - 1]);
            }
            cur[j] = best + w;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut prev_mask, &mut mask);
    }
    prev[rows]
}

/// Min cost and a witness path from `from` to `to` inside their bounding box.
///
/// Reconstruction prefers a diagonal predecessor, then the left (a right step),
/// then the one below (an up step).
pub fn min_cost_path_between(
    m: &ExplicitMatrix,
    from: (usize, usize),
    to: (usize, usize),
    rule: PathRule,
) -> Result<(usize, CouplingPath), ReferenceError> {
    for (axis, idx) in [(Axis::Columns, from.0), (Axis::Columns, to.0), (Axis::Rows, from.1), (Axis::Rows, to.1)] {
        let extent = m.extent(axis);
        if idx == 0 || idx > extent {
            return Err(ReferenceError::IndexOutOfRange {
                axis,
                index: idx,
                extent,
            });
        }
    }
    if from.0 > to.0 || from.1 > to.1 {
        return Err(ReferenceError::NotZeroCorners { from, to });
    }
    let (w, h) = (to.0 - from.0 + 1, to.1 - from.1 + 1);
    let zero = |x: usize, y: usize| m.is_zero(from.0 + x, from.1 + y);
    let mut cost = vec![usize::MAX; w * h];
    let at = |x: usize, y: usize| x * h + y;
    for x in 0..w {
        for y in 0..h {
            let mut best = if x == 0 && y == 0 { 0 } else { usize::MAX };
            if x > 0 {
                best = best.min(cost[at(x - 1, y)]);
            }
            if y > 0 {
                best = best.min(cost[at(x, y - 1)]);
            }
            if x > 0 && y > 0 && diagonal_allowed(rule, zero(x - 1, y - 1), zero(x, y)) {
                best = best.min(cost[at(x - 1, y - 1)]);
            }
            cost[at(x, y)] = best + usize::from(!zero(x, y));
        }
    }
    let mut steps = vec![(w - 1, h - 1)];
    let (mut x, mut y) = (w - 1, h - 1);
    while (x, y) != (0, 0) {
        let need = cost[at(x, y)] - usize::from(!zero(x, y));
        if x > 0 && y > 0 && diagonal_allowed(rule, zero(x - 1, y - 1), zero(x, y)) && cost[at(x - 1, y - 1)] == need {
            x -= 1;
            y -= 1;
        } else if x > 0 && cost[at(x - 1, y)] == need {
            x -= 1;
        } else {
            y -= 1;
        }
        steps.push((x, y));
    }
    steps.reverse();
    let path = CouplingPath {
        steps: steps.into_iter().map(|(x, y)| (from.0 + x, from.1 + y)).collect(),
    };
    Ok((cost[at(w - 1, h - 1)], path))
}

fn diagonal_allowed(rule: PathRule, a_zero: bool, b_zero: bool) -> bool {
    rule == PathRule::Unrestricted || (a_zero && b_zero)
}

/// Minimum number of one-entries on a coupling path from `(1,1)` to `(n,m)`.
pub fn min_cost_coupling(m: &ExplicitMatrix) -> usize {
    min_cost_full(m, PathRule::Unrestricted)
}

/// As [`min_cost_coupling`], restricted to diagonal steps between zeros.
pub fn min_cost_diagonal_restricted(m: &ExplicitMatrix) -> usize {
    min_cost_full(m, PathRule::DiagonalRestricted)
}

/// Min-cost full path under `rule`, with its witness.
pub fn min_cost_path(m: &ExplicitMatrix, rule: PathRule) -> (usize, CouplingPath) {
    min_cost_path_between(m, (1, 1), (m.n_cols(), m.n_rows()), rule).expect("corners are in range")
}

/// Per-slice `(low, high)` zero extremes, `None` for barriers; index 0 unused.
fn extremes(m: &ExplicitMatrix, axis: Axis) -> Vec<Option<(usize, usize)>> {
    std::iter::once(None)
        .chain((1..=m.extent(axis)).map(|i| {
            let s = m.slice(axis, i);
            Some((*s.first()?, *s.last()?))
        }))
        .collect()
}

/// Largest `|Δ|` between a zero of slice `a` and one of slice `b` along the slice direction.
#[inline]
fn pair_spread(a: (usize, usize), b: (usize, usize)) -> usize {
    (b.1 as isize - a.0 as isize).max(a.1 as isize - b.0 as isize).unsigned_abs()
}

/// Smallest `t` for which the matrix is `t`-local; 0 for a matrix without zeros.
///
/// Evaluated over slice pairs via zero extremes, which gives the same maximum as
/// scanning all zero pairs.
pub fn exact_locality(m: &ExplicitMatrix) -> f64 {
    let mut t: f64 = 0.0;
    for axis in [Axis::Columns, Axis::Rows] {
        let ext = extremes(m, axis);
        let nonempty: Vec<(usize, (usize, usize))> =
            ext.iter().enumerate().filter_map(|(i, e)| Some((i, (*e)?))).collect();
        for (a, &(i1, e1)) in nonempty.iter().enumerate() {
            for &(i2, e2) in &nonempty[a..] {
                let ratio = pair_spread(e1, e2) as f64 / (2 + i2 - i1) as f64;
                t = t.max(ratio);
            }
        }
    }
    t
}

/// A pair of slices failing `t`-locality, with a violating pair of zeros.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairFailure {
    pub axis: Axis,
    pub first: usize,
    pub second: usize,
    pub witness: ((usize, usize), (usize, usize)),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityCensus {
    pub t: f64,
    pub t_min: f64,
    pub pair_failures: Vec<PairFailure>,
    pub second_order_failures: Vec<(Axis, usize)>,
}

fn as_entry(axis: Axis, slice: usize, pos: usize) -> (usize, usize) {
    match axis {
        Axis::Columns => (slice, pos),
        Axis::Rows => (pos, slice),
    }
}

/// Whether slices `a <= b` pass `t`-locality given their zero extremes.
pub(crate) fn extremes_pass(a: Option<(usize, usize)>, b: Option<(usize, usize)>, gap: usize, t: f64) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => pair_spread(a, b) as f64 <= t * (2 + gap) as f64,
        _ => true,
    }
}

/// Exhaustive scan of all slice pairs (including a slice with itself) and all
/// single slices for `t`-locality and second-order `t`-locality failures.
pub fn locality_census(m: &ExplicitMatrix, t: f64) -> LocalityCensus {
    let mut pair_failures = Vec::new();
    let mut second_order_failures = Vec::new();
    for axis in [Axis::Columns, Axis::Rows] {
        let ext = extremes(m, axis);
        let n = m.extent(axis);
        for i1 in 1..=n {
            for i2 in i1..=n {
                if !extremes_pass(ext[i1], ext[i2], i2 - i1, t) {
                    let (a, b) = (ext[i1].unwrap(), ext[i2].unwrap());
                    let (p1, p2) = if b.1 as isize - a.0 as isize >= a.1 as isize - b.0 as isize {
                        (a.0, b.1)
                    } else {
                        (a.1, b.0)
                    };
                    pair_failures.push(PairFailure {
                        axis,
                        first: i1,
                        second: i2,
                        witness: (as_entry(axis, i1, p1), as_entry(axis, i2, p2)),
                    });
                }
            }
        }
        let cross = extremes(m, axis.other());
        let spread_ok = |e: Option<(usize, usize)>| e.is_none_or(|(lo, hi)| (hi - lo) as f64 <= 2.0 * t);
        for i in 1..=n {
            let ok = spread_ok(ext[i]) && m.slice(axis, i).iter().all(|&j| spread_ok(cross[j]));
            if !ok {
                second_order_failures.push((axis, i));
            }
        }
    }
    LocalityCensus {
        t,
        t_min: exact_locality(m),
        pair_failures,
        second_order_failures,
    }
}

fn check_block(m: &ExplicitMatrix, axis: Axis, lo: usize, hi: usize) -> Result<(), ReferenceError> {
    let extent = m.extent(axis);
    for index in [lo, hi] {
        if index == 0 || index > extent {
            return Err(ReferenceError::IndexOutOfRange { axis, index, extent });
        }
    }
    if lo > hi {
        return Err(ReferenceError::IndexOutOfRange {
            axis,
            index: lo,
            extent: hi,
        });
    }
    Ok(())
}

/// Breadth-first search over the zero-entry DAG of slices `lo..=hi`.
///
/// True iff some zero of slice `hi` is reachable from some zero of slice `lo`
/// through zeros only, using right, up and diagonal steps.
pub fn brute_permeable(m: &ExplicitMatrix, axis: Axis, lo: usize, hi: usize) -> Result<bool, ReferenceError> {
    check_block(m, axis, lo, hi)?;
    let zeros: HashSet<(usize, usize)> = (lo..=hi)
        .flat_map(|s| m.slice(axis, s).iter().map(move |&p| (s, p)))
        .collect();
    let mut seen: HashSet<(usize, usize)> = m.slice(axis, lo).iter().map(|&p| (lo, p)).collect();
    let mut stack: Vec<(usize, usize)> = seen.iter().copied().collect();
    while let Some((s, p)) = stack.pop() {
        if s == hi {
            return Ok(true);
        }
        for next in [(s + 1, p), (s, p + 1), (s + 1, p + 1)] {
            if zeros.contains(&next) && seen.insert(next) {
                stack.push(next);
            }
        }
    }
    Ok(false)
}

/// `(all-ones columns, all-ones rows)`.
pub fn count_barriers(m: &ExplicitMatrix) -> (usize, usize) {
    let count = |axis| (1..=m.extent(axis)).filter(|&i| m.slice(axis, i).is_empty()).count();
    (count(Axis::Columns), count(Axis::Rows))
}

/// Zeros of the rectangle `from..=to` labelled with their layer (1-based).
///
/// Layer 1 holds the zeros that dominate no other zero of the rectangle; each
/// further layer is peeled the same way from what remains. `(a, b)` dominates
/// `(c, d)` when `a >= c`, `b >= d` and the two differ.
pub fn layer_labels(
    m: &ExplicitMatrix,
    from: (usize, usize),
    to: (usize, usize),
) -> Result<Vec<((usize, usize), usize)>, ReferenceError> {
    let in_range = |(i, j): (usize, usize)| (1..=m.n_cols()).contains(&i) && (1..=m.n_rows()).contains(&j);
    if !(in_range(from) && in_range(to) && from.0 <= to.0 && from.1 <= to.1 && m.is_zero(from.0, from.1) && m.is_zero(to.0, to.1)) {
        return Err(ReferenceError::NotZeroCorners { from, to });
    }
    let mut remaining: Vec<(usize, usize)> = (from.0..=to.0)
        .flat_map(|i| {
            m.column(i)
                .iter()
                .filter(|&&j| (from.1..=to.1).contains(&j))
                .map(move |&j| (i, j))
        })
        .collect();
    let dominates = |a: (usize, usize), b: (usize, usize)| a != b && a.0 >= b.0 && a.1 >= b.1;
    let mut labels = Vec::with_capacity(remaining.len());
    let mut layer = 0;
    while !remaining.is_empty() {
        layer += 1;
        let (minimal, rest): (Vec<_>, Vec<_>) = remaining
            .iter()
            .partition(|&&a| !remaining.iter().any(|&b| dominates(a, b)));
        labels.extend(minimal.into_iter().map(|e| (e, layer)));
        remaining = rest;
    }
    Ok(labels)
}

/// Number of layers in the rectangle spanned by two zero-entries.
pub fn layer_count(m: &ExplicitMatrix, from: (usize, usize), to: (usize, usize)) -> Result<usize, ReferenceError> {
    Ok(layer_labels(m, from, to)?.iter().map(|&(_, l)| l).max().unwrap_or(0))
}

/// A witness set certifying strong `(t, ζ)`-locality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongWitness {
    pub t: f64,
    /// Ignored slices, in removal order.
    pub ignored: Vec<(Axis, usize)>,
    /// `|ignored| / n`.
    pub zeta: f64,
}

impl StrongWitness {
    pub fn keeps(&self, axis: Axis, i: usize) -> bool {
        !self.ignored.contains(&(axis, i))
    }
}

/// Greedy sufficient certificate for strong `(t, ζ)`-locality.
///
/// Every slice failing second-order `t`-locality is ignored. The remaining
/// pairwise failures are then resolved by repeatedly ignoring the slice that
/// takes part in the most unresolved failures (ties: columns before rows, lower
/// index first). Returns `None` if column or row `1` or `n` would be ignored.
pub fn greedy_strong_witness(m: &ExplicitMatrix, t: f64) -> Option<StrongWitness> {
    let census = locality_census(m, t);
    let mut ignored: Vec<(Axis, usize)> = census.second_order_failures.clone();
    let mut out: HashSet<(Axis, usize)> = ignored.iter().copied().collect();
    let mut open: Vec<&PairFailure> = census
        .pair_failures
        .iter()
        .filter(|f| !out.contains(&(f.axis, f.first)) && !out.contains(&(f.axis, f.second)))
        .collect();
    while !open.is_empty() {
        let mut counts: std::collections::BTreeMap<(u8, usize), usize> = Default::default();
        for f in &open {
            let tag = u8::from(f.axis == Axis::Rows);
            *counts.entry((tag, f.first)).or_default() += 1;
            if f.second != f.first {
                *counts.entry((tag, f.second)).or_default() += 1;
            }
        }
        let (&(tag, idx), _) = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .expect("open failures are nonempty");
        let axis = if tag == 0 { Axis::Columns } else { Axis::Rows };
        ignored.push((axis, idx));
        out.insert((axis, idx));
        open.retain(|f| !(f.axis == axis && (f.first == idx || f.second == idx)));
    }
    let required = [
        (Axis::Columns, 1),
        (Axis::Columns, m.n_cols()),
        (Axis::Rows, 1),
        (Axis::Rows, m.n_rows()),
    ];
    if required.iter().any(|r| out.contains(r)) {
        return None;
    }
    let n = m.n_cols().max(m.n_rows());
    Some(StrongWitness {
        t,
        zeta: ignored.len() as f64 / n as f64,
        ignored,
    })
}
