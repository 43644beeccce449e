//! Polygonal curves in Euclidean space.
//!
//! A [`Curve`] is an ordered vertex sequence stored as one flat coordinate
//! buffer. Vertex indices in this module are 0-based; the free space matrix
//! and the testers use 1-based indices (vertex `p_i` is column `i + 1`).
//!
//! Besides the measured quantities (length, straightness, edge lengths) this
//! module holds the subsampling step used by the continuous adapter and the
//! random instance generators used by the harness.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("curve must have at least {min} vertices, got {got}")]
    TooShort { min: usize, got: usize },
    #[error("point {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("vertices {i} and {j} coincide; straightness is undefined")]
    CoincidentVertices { i: usize, j: usize },
    #[error("subsampling step {step} must lie in (0, {length}]")]
    BadStep { step: f64, length: f64 },
    #[error("invalid parameter: {0}")]
    BadParam(String),
}

/// A single point of `R^d` with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, GeometryError> {
        if coords.is_empty() {
            return Err(GeometryError::ZeroDimension);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite { index: 0 });
        }
        Ok(Point(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Euclidean distance between two coordinate slices of equal length.
#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Ordered vertex sequence, all vertices of the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    dim: usize,
    coords: Vec<f64>,
}

impl Curve {
    pub fn new(points: Vec<Point>) -> Result<Self, GeometryError> {
        let first = points.first().ok_or(GeometryError::TooShort { min: 1, got: 0 })?;
        let dim = first.dim();
        let mut coords = Vec::with_capacity(dim * points.len());
        for (index, p) in points.iter().enumerate() {
            if p.dim() != dim {
                return Err(GeometryError::DimensionMismatch {
                    index,
                    expected: dim,
                    got: p.dim(),
                });
            }
            coords.extend_from_slice(p.coords());
        }
        Ok(Curve { dim, coords })
    }

    /// Builds a curve from a flat buffer of `dim`-tuples.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self, GeometryError> {
        if dim == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        if coords.is_empty() {
            return Err(GeometryError::TooShort { min: 1, got: 0 });
        }
        if coords.len() % dim != 0 {
            return Err(GeometryError::DimensionMismatch {
                index: coords.len() / dim,
                expected: dim,
                got: coords.len() % dim,
            });
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite { index: pos / dim });
        }
        Ok(Curve { dim, coords })
    }

    /// Builds a curve from nested coordinate vectors, e.g. `vec![vec![0.0, 0.0], vec![1.0, 0.0]]`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        Curve::new(rows.into_iter().map(Point).collect()).and_then(|c| {
            if let Some(pos) = c.coords.iter().position(|x| !x.is_finite()) {
                return Err(GeometryError::NonFinite { index: pos / c.dim });
            }
            if c.dim == 0 {
                return Err(GeometryError::ZeroDimension);
            }
            Ok(c)
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.vertices().map(<[f64]>::to_vec).collect()
    }

    fn edge_lengths(&self) -> impl Iterator<Item = f64> + '_ {
        (1..self.len()).map(move |i| dist(self.vertex(i - 1), self.vertex(i)))
    }

    /// Arc-length prefix sums: entry `i` is the length of the subcurve from vertex 0 to vertex `i`.
    pub fn prefix_lengths(&self) -> Vec<f64> {
        let mut acc = 0.0;
        std::iter::once(0.0)
            .chain(self.edge_lengths().map(|e| {
                acc += e;
                acc
            }))
            .collect()
    }

    pub fn stats(&self) -> Result<CurveStats, GeometryError> {
        let (edge_min, edge_max) = edge_length_range(self)?;
        Ok(CurveStats {
            arc_length: curve_length(self),
            straightness: straightness(self)?,
            edge_min,
            edge_max,
        })
    }
}

/// Measured properties of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveStats {
    pub arc_length: f64,
    pub straightness: f64,
    pub edge_min: f64,
    pub edge_max: f64,
}

/// Sum of consecutive vertex distances; zero for a single vertex.
pub fn curve_length(p: &Curve) -> f64 {
    p.edge_lengths().sum()
}

/// Smallest `kappa` with `len(P[i..=j]) <= kappa * d(p_i, p_j)` for all `i < j`.
///
/// Exhaustive over all vertex pairs, O(n^2).
pub fn straightness(p: &Curve) -> Result<f64, GeometryError> {
    let n = p.len();
    if n < 2 {
        return Err(GeometryError::TooShort { min: 2, got: n });
    }
    let prefix = p.prefix_lengths();
    let mut kappa: f64 = 1.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = dist(p.vertex(i), p.vertex(j));
            if d == 0.0 {
                return Err(GeometryError::CoincidentVertices { i, j });
            }
            kappa = kappa.max((prefix[j] - prefix[i]) / d);
        }
    }
    Ok(kappa)
}

/// `(min, max)` over consecutive-vertex distances. Degenerate edges are reported as 0.
pub fn edge_length_range(p: &Curve) -> Result<(f64, f64), GeometryError> {
    if p.len() < 2 {
        return Err(GeometryError::TooShort { min: 2, got: p.len() });
    }
    Ok(p.edge_lengths()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), e| (lo.min(e), hi.max(e))))
}

/// Resamples `p` at arc-lengths `0, a, 2a, ...`, ending at the final vertex.
///
/// The result has exactly `floor(len(P) / a)` edges; every edge spans arc-length
/// `a` except the last, which spans a length in `[a, 2a)`.
pub fn subsample(p: &Curve, a: f64) -> Result<Curve, GeometryError> {
    let length = curve_length(p);
    if !(a > 0.0 && a <= length) {
        return Err(GeometryError::BadStep { step: a, length });
    }
    let edges = (length / a).floor() as usize;
    let prefix = p.prefix_lengths();
    let dim = p.dim();
    let mut coords = Vec::with_capacity((edges + 1) * dim);
    let mut seg = 0;
    for k in 0..edges {
        let s = k as f64 * a;
        while seg + 2 < prefix.len() && prefix[seg + 1] <= s {
            seg += 1;
        }
        let (a0, a1) = (prefix[seg], prefix[seg + 1]);
        let (u, v) = (p.vertex(seg), p.vertex(seg + 1));
        if a1 > a0 {
            let lambda = ((s - a0) / (a1 - a0)).clamp(0.0, 1.0);
            coords.extend(u.iter().zip(v).map(|(x, y)| x + lambda * (y - x)));
        } else {
            coords.extend_from_slice(u);
        }
    }
    coords.extend_from_slice(p.vertex(p.len() - 1));
    Curve::from_flat(dim, coords)
}

/// Aspect ratio of the vertex set of `p` and `q` relative to `delta`:
/// largest pairwise distance over `min(delta, smallest pairwise distance)`.
pub fn aspect_ratio(p: &Curve, q: &Curve, delta: f64) -> f64 {
    let all: Vec<&[f64]> = p.vertices().chain(q.vertices()).collect();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for (x, u) in all.iter().enumerate() {
        for v in &all[x + 1..] {
            let d = dist(u, v);
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    hi / lo.min(delta)
}

fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Random unit vector orthogonal to the unit vector `dir` (requires `dim >= 2`).
fn random_orthogonal<R: Rng + ?Sized>(dir: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let mut v = random_unit(dir.len(), rng);
        let proj: f64 = v.iter().zip(dir).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(dir).for_each(|(a, b)| *a -= proj * b);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Bounded-turn random walk with `n` vertices and edge lengths drawn uniformly from `edge_range`.
///
/// Each step rotates the heading by an angle uniform in `[-max_turn, max_turn]` (radians).
/// The straightness of the result is not controlled; measure it with [`straightness`].
pub fn gen_straight_curve<R: Rng + ?Sized>(
    n: usize,
    dim: usize,
    edge_range: (f64, f64),
    max_turn: f64,
    rng: &mut R,
) -> Result<Curve, GeometryError> {
    let (lo, hi) = edge_range;
    if n < 2 {
        return Err(GeometryError::TooShort { min: 2, got: n });
    }
    if dim == 0 {
        return Err(GeometryError::ZeroDimension);
    }
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(GeometryError::BadParam(format!(
            "edge range ({lo}, {hi}) must satisfy 0 < min <= max"
        )));
    }
    if !(max_turn >= 0.0 && max_turn.is_finite()) {
        return Err(GeometryError::BadParam(format!("max turn {max_turn} must be >= 0")));
    }
    let mut heading = random_unit(dim, rng);
    let mut pos = vec![0.0; dim];
    let mut coords = Vec::with_capacity(n * dim);
    coords.extend_from_slice(&pos);
    for step in 1..n {
        if step > 1 && dim >= 2 && max_turn > 0.0 {
            let theta = rng.random_range(-max_turn..=max_turn);
            let ortho = random_orthogonal(&heading, rng);
            let (s, c) = theta.sin_cos();
            heading = heading
                .iter()
                .zip(&ortho)
                .map(|(h, o)| c * h + s * o)
                .collect();
            let norm = heading.iter().map(|x| x * x).sum::<f64>().sqrt();
            heading.iter_mut().for_each(|x| *x /= norm);
        }
        let len = if lo == hi { lo } else { rng.random_range(lo..=hi) };
        pos.iter_mut().zip(&heading).for_each(|(x, h)| *x += len * h);
        coords.extend_from_slice(&pos);
    }
    Curve::from_flat(dim, coords)
}

/// Moves every vertex of `p` by a random offset of length at most `r`.
///
/// The identity coupling certifies `d_dF(P, Q) <= r` for the output.
pub fn perturb_within<R: Rng + ?Sized>(
    p: &Curve,
    r: f64,
    rng: &mut R,
) -> Result<Curve, GeometryError> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(GeometryError::BadParam(format!("radius {r} must be >= 0")));
    }
    if r == 0.0 {
        return Ok(p.clone());
    }
    let dim = p.dim();
    let mut coords = Vec::with_capacity(p.flat().len());
    for v in p.vertices() {
        let dir = random_unit(dim, rng);
        let mut radius = r * rng.random::<f64>().powf(1.0 / dim as f64);
        loop {
            let q: Vec<f64> = v.iter().zip(&dir).map(|(x, d)| x + radius * d).collect();
            if dist(v, &q) <= r {
                coords.extend(q);
                break;
            }
            radius *= 0.5;
        }
    }
    Curve::from_flat(dim, coords)
}

const FAR_DIRECTION_CANDIDATES: usize = 8;

/// Copies `p` and translates a random contiguous block of `ceil(2 * eps * n)` vertices
/// by a vector of length `delta * margin`.
///
/// The translation direction is the best of a few random candidates, scored by
/// how far the moved vertices end up from every vertex of `p`. The output is not
/// certified far; callers check it against the reference oracle.
pub fn make_far_pair<R: Rng + ?Sized>(
    p: &Curve,
    eps: f64,
    delta: f64,
    margin: f64,
    rng: &mut R,
) -> Result<Curve, GeometryError> {
    if !(eps > 0.0 && eps < 2.0) {
        return Err(GeometryError::BadParam(format!("eps {eps} must lie in (0, 2)")));
    }
    if !(delta > 0.0 && margin > 0.0) {
        return Err(GeometryError::BadParam(format!(
            "delta {delta} and margin {margin} must be positive"
        )));
    }
    let n = p.len();
    let block = ((2.0 * eps * n as f64).ceil() as usize).clamp(1, n);
    let start = rng.random_range(0..=n - block);
    let shift = delta * margin;
    let dim = p.dim();

    // Score candidates on a bounded subset of the block to keep generation cheap.
    let probe: Vec<usize> = if block > 64 {
        let mut idx = sample(rng, block, 64).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|k| start + k).collect()
    } else {
        (start..start + block).collect()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..FAR_DIRECTION_CANDIDATES {
        let dir = random_unit(dim, rng);
        let score = probe
            .iter()
            .map(|&k| {
                let moved: Vec<f64> = p.vertex(k).iter().zip(&dir).map(|(x, d)| x + shift * d).collect();
                p.vertices().map(|v| dist(v, &moved)).fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, dir));
        }
    }
    let (_, dir) = best.expect("at least one candidate direction");
    let mut coords = p.flat().to_vec();
    for k in start..start + block {
        coords[k * dim..(k + 1) * dim]
            .iter_mut()
            .zip(&dir)
            .for_each(|(x, d)| *x += shift * d);
    }
    Curve::from_flat(dim, coords)
}
