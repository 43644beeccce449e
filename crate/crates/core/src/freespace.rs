//! Query-counted access to the δ-free space matrix.
//!
//! Entry `(i, j)` relates vertex `p_i` (column `i`) to `q_j` (row `j`) and is
//! zero iff `d(p_i, q_j) <= δ`. All indices here are 1-based. A query returns
//! the sorted list of zero positions in one column or row and costs exactly one
//! unit on the oracle's counter; testers never see the matrix any other way.

use std::borrow::Cow;
use std::fmt;
use std::ops::Deref;
use std::cell::Cell;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{dist, Curve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Columns,
    Rows,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::Columns => Axis::Rows,
            Axis::Rows => Axis::Columns,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Columns => "column",
            Axis::Rows => "row",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{axis} index {index} outside 1..={extent}")]
    IndexOutOfRange {
        axis: Axis,
        index: usize,
        extent: usize,
    },
    #[error("invalid parameter: {0}")]
    BadParam(String),
}

/// Sorted, duplicate-free 1-based zero positions of one column or row.
///
/// Explicit backends hand out borrowed slices; computed backends own their data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroList<'a>(Cow<'a, [usize]>);

impl<'a> ZeroList<'a> {
    pub fn borrowed(indices: &'a [usize]) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        ZeroList(Cow::Borrowed(indices))
    }

    pub fn owned(indices: Vec<usize>) -> ZeroList<'static> {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        ZeroList(Cow::Owned(indices))
    }

    /// Only a barrier slice has no zeros.
    pub fn is_barrier(&self) -> bool {
        self.0.is_empty()
    }

    pub fn low(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn high(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// `high - low`, or `None` for a barrier.
    pub fn spread(&self) -> Option<usize> {
        Some(self.high()? - self.low()?)
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0.into_owned()
    }
}

impl Deref for ZeroList<'_> {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.0
    }
}

/// Row/column access to a 0/1 matrix with query accounting.
pub trait QueryOracle {
    fn n_cols(&self) -> usize;
    fn n_rows(&self) -> usize;
    /// One query: zero positions of column `i` (axis `Columns`) or row `i` (axis `Rows`).
    fn query(&self, axis: Axis, i: usize) -> Result<ZeroList<'_>, OracleError>;
    /// Number of queries answered so far.
    fn query_count(&self) -> u64;

    fn query_column(&self, i: usize) -> Result<ZeroList<'_>, OracleError> {
        self.query(Axis::Columns, i)
    }

    fn query_row(&self, j: usize) -> Result<ZeroList<'_>, OracleError> {
        self.query(Axis::Rows, j)
    }

    fn extent(&self, axis: Axis) -> usize {
        match axis {
            Axis::Columns => self.n_cols(),
            Axis::Rows => self.n_rows(),
        }
    }

    fn is_square(&self) -> bool {
        self.n_cols() == self.n_rows()
    }
}

fn check_index(axis: Axis, index: usize, extent: usize) -> Result<(), OracleError> {
    if index == 0 || index > extent {
        Err(OracleError::IndexOutOfRange {
            axis,
            index,
            extent,
        })
    } else {
        Ok(())
    }
}

/// Fully materialized matrix stored as zero lists per column and per row.
///
/// Memory is proportional to the number of zeros, so sparse matrices with
/// hundreds of thousands of slices are cheap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitMatrix {
    n_cols: usize,
    n_rows: usize,
    col_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    row_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl ExplicitMatrix {
    /// Matrix whose zeros are exactly `zeros` (1-based `(column, row)` pairs, any order, duplicates ignored).
    pub fn from_zeros(
        n_cols: usize,
        n_rows: usize,
        zeros: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, OracleError> {
        if n_cols == 0 || n_rows == 0 {
            return Err(OracleError::BadParam(format!(
                "matrix must be at least 1x1, got {n_cols}x{n_rows}"
            )));
        }
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n_cols];
        for (i, j) in zeros {
            check_index(Axis::Columns, i, n_cols)?;
            check_index(Axis::Rows, j, n_rows)?;
            cols[i - 1].push(j);
        }
        for c in &mut cols {
            c.sort_unstable();
            c.dedup();
        }
        Ok(Self::from_sorted_columns(n_rows, cols))
    }

    /// Builds from a predicate `is_zero(i, j)` evaluated on every entry.
    pub fn from_fn(n_cols: usize, n_rows: usize, mut is_zero: impl FnMut(usize, usize) -> bool) -> Result<Self, OracleError> {
        if n_cols == 0 || n_rows == 0 {
            return Err(OracleError::BadParam(format!(
                "matrix must be at least 1x1, got {n_cols}x{n_rows}"
            )));
        }
        let cols = (1..=n_cols)
            .map(|i| (1..=n_rows).filter(|&j| is_zero(i, j)).collect())
            .collect();
        Ok(Self::from_sorted_columns(n_rows, cols))
    }

    /// Builds from dense 0/1 data in column-major order: `columns[i-1][j-1]` is entry `(i, j)`.
    pub fn from_columns(columns: &[Vec<u8>]) -> Result<Self, OracleError> {
        let n_rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n_rows) {
            return Err(OracleError::BadParam("ragged column data".into()));
        }
        if let Some(v) = columns.iter().flatten().find(|&&v| v > 1) {
            return Err(OracleError::BadParam(format!("entry {v} is not 0 or 1")));
        }
        Self::from_fn(columns.len(), n_rows, |i, j| columns[i - 1][j - 1] == 0)
    }

    pub fn all_ones(n_cols: usize, n_rows: usize) -> Result<Self, OracleError> {
        Self::from_zeros(n_cols, n_rows, std::iter::empty())
    }

    pub fn all_zeros(n_cols: usize, n_rows: usize) -> Result<Self, OracleError> {
        Self::from_fn(n_cols, n_rows, |_, _| true)
    }

    /// The δ-free space matrix of `(p, q)`, with the same comparison the curve backend uses.
    pub fn from_curves(p: &Curve, q: &Curve, delta: f64) -> Result<Self, OracleError> {
        validate_curves(p, q, delta)?;
        let cols = (0..p.len())
            .map(|i| curve_column(p, q, delta, i + 1))
            .collect();
        Ok(Self::from_sorted_columns(q.len(), cols))
    }

    fn from_sorted_columns(n_rows: usize, cols: Vec<Vec<usize>>) -> Self {
        let n_cols = cols.len();
        let mut col_ptr = Vec::with_capacity(n_cols + 1);
        let mut col_idx = Vec::with_capacity(cols.iter().map(Vec::len).sum());
        let mut row_counts = vec![0usize; n_rows + 1];
        col_ptr.push(0);
        for c in &cols {
            col_idx.extend_from_slice(c);
            col_ptr.push(col_idx.len());
            for &j in c {
                row_counts[j] += 1;
            }
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        row_ptr.push(0);
        for j in 1..=n_rows {
            row_ptr.push(row_ptr[j - 1] + row_counts[j]);
        }
        let mut fill = row_ptr.clone();
        let mut row_idx = vec![0; col_idx.len()];
        // Columns are visited in increasing order, so each row list comes out sorted.
        for (i, c) in cols.iter().enumerate() {
            for &j in c {
                row_idx[fill[j - 1]] = i + 1;
                fill[j - 1] += 1;
            }
        }
        ExplicitMatrix {
            n_cols,
            n_rows,
            col_ptr,
            col_idx,
            row_ptr,
            row_idx,
        }
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn extent(&self, axis: Axis) -> usize {
        match axis {
            Axis::Columns => self.n_cols,
            Axis::Rows => self.n_rows,
        }
    }

    /// Zero positions of column `i`; panics if out of range.
    pub fn column(&self, i: usize) -> &[usize] {
        &self.col_idx[self.col_ptr[i - 1]..self.col_ptr[i]]
    }

    /// Zero positions of row `j`; panics if out of range.
    pub fn row(&self, j: usize) -> &[usize] {
        &self.row_idx[self.row_ptr[j - 1]..self.row_ptr[j]]
    }

    pub fn slice(&self, axis: Axis, i: usize) -> &[usize] {
        match axis {
            Axis::Columns => self.column(i),
            Axis::Rows => self.row(i),
        }
    }

    pub fn is_zero(&self, i: usize, j: usize) -> bool {
        self.column(i).binary_search(&j).is_ok()
    }

    /// 0 or 1.
    pub fn entry(&self, i: usize, j: usize) -> u8 {
        u8::from(!self.is_zero(i, j))
    }

    pub fn zero_count(&self) -> usize {
        self.col_idx.len()
    }

    /// All zeros as `(column, row)`, column-major.
    pub fn zeros(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..=self.n_cols).flat_map(move |i| self.column(i).iter().map(move |&j| (i, j)))
    }

    /// Dense column-major 0/1 data, the inverse of [`ExplicitMatrix::from_columns`].
    pub fn to_columns(&self) -> Vec<Vec<u8>> {
        (1..=self.n_cols)
            .map(|i| {
                let mut col = vec![1u8; self.n_rows];
                for &j in self.column(i) {
                    col[j - 1] = 0;
                }
                col
            })
            .collect()
    }

    /// Sub-matrix `R[i, j] = M[iβ, jβ]` for `i <= n_cols/β`, `j <= n_rows/β`.
    pub fn reduced(&self, beta: usize) -> Result<Self, OracleError> {
        let (mc, mr) = reduced_extents(self.n_cols, self.n_rows, beta)?;
        let cols = (1..=mc)
            .map(|i| reduce_list(self.column(i * beta), beta, mr))
            .collect();
        Ok(Self::from_sorted_columns(mr, cols))
    }

    pub fn transpose(&self) -> Self {
        ExplicitMatrix {
            n_cols: self.n_rows,
            n_rows: self.n_cols,
            col_ptr: self.row_ptr.clone(),
            col_idx: self.row_idx.clone(),
            row_ptr: self.col_ptr.clone(),
            row_idx: self.col_idx.clone(),
        }
    }
}

impl fmt::Display for ExplicitMatrix {
    /// One line per column `i`, character `j` is entry `(i, j)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for col in self.to_columns() {
            let line: String = col.iter().map(|&v| if v == 0 { '0' } else { '1' }).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

fn validate_curves(p: &Curve, q: &Curve, delta: f64) -> Result<(), OracleError> {
    if p.dim() != q.dim() {
        return Err(OracleError::BadParam(format!(
            "curve dimensions differ: {} vs {}",
            p.dim(),
            q.dim()
        )));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(OracleError::BadParam(format!("delta {delta} must be finite and >= 0")));
    }
    Ok(())
}

fn curve_column(p: &Curve, q: &Curve, delta: f64, i: usize) -> Vec<usize> {
    let pi = p.vertex(i - 1);
    q.vertices()
        .enumerate()
        .filter(|(_, qj)| dist(pi, qj) <= delta)
        .map(|(j, _)| j + 1)
        .collect()
}

fn curve_row(p: &Curve, q: &Curve, delta: f64, j: usize) -> Vec<usize> {
    let qj = q.vertex(j - 1);
    p.vertices()
        .enumerate()
        .filter(|(_, pi)| dist(pi, qj) <= delta)
        .map(|(i, _)| i + 1)
        .collect()
}

#[derive(Debug)]
enum Backend {
    Curves { p: Curve, q: Curve, delta: f64 },
    Explicit(Arc<ExplicitMatrix>),
}

/// The query oracle testers run against.
///
/// The backend is shared through an `Arc`. Each handle counts its own queries
/// and is meant for one thread; [`FreeSpaceOracle::fresh`] makes another
/// handle on the same matrix with a zeroed counter.
#[derive(Debug)]
pub struct FreeSpaceOracle {
    backend: Arc<Backend>,
    n_cols: usize,
    n_rows: usize,
    count: Cell<u64>,
}

impl FreeSpaceOracle {
    /// Oracle computing each query by a linear scan over the other curve.
    pub fn from_curves(p: Curve, q: Curve, delta: f64) -> Result<Self, OracleError> {
        validate_curves(&p, &q, delta)?;
        let (n_cols, n_rows) = (p.len(), q.len());
        Ok(Self::with_backend(Backend::Curves { p, q, delta }, n_cols, n_rows))
    }

    pub fn from_matrix(m: ExplicitMatrix) -> Self {
        Self::from_shared(Arc::new(m))
    }

    /// Oracle over a matrix that other handles may share.
    pub fn from_shared(m: Arc<ExplicitMatrix>) -> Self {
        let (n_cols, n_rows) = (m.n_cols(), m.n_rows());
        Self::with_backend(Backend::Explicit(m), n_cols, n_rows)
    }

    fn with_backend(backend: Backend, n_cols: usize, n_rows: usize) -> Self {
        FreeSpaceOracle {
            backend: Arc::new(backend),
            n_cols,
            n_rows,
            count: Cell::new(0),
        }
    }

    /// Another handle on the same matrix with a counter starting at zero.
    pub fn fresh(&self) -> Self {
        FreeSpaceOracle {
            backend: Arc::clone(&self.backend),
            n_cols: self.n_cols,
            n_rows: self.n_rows,
            count: Cell::new(0),
        }
    }

    /// Copy of the whole matrix. Does not touch the query counter.
    pub fn materialize(&self) -> ExplicitMatrix {
        match &*self.backend {
            Backend::Curves { p, q, delta } => {
                ExplicitMatrix::from_curves(p, q, *delta).expect("validated at construction")
            }
            Backend::Explicit(m) => (**m).clone(),
        }
    }

    /// Swaps a curve backend for its materialized matrix; the counter is kept.
    pub fn into_explicit(self) -> Self {
        let m = self.materialize();
        let o = Self::from_matrix(m);
        o.count.set(self.count.get());
        o
    }

    pub fn curves(&self) -> Option<(&Curve, &Curve, f64)> {
        match &*self.backend {
            Backend::Curves { p, q, delta } => Some((p, q, *delta)),
            Backend::Explicit(_) => None,
        }
    }

    pub fn reset_count(&self) {
        self.count.set(0);
    }
}

impl QueryOracle for FreeSpaceOracle {
    fn n_cols(&self) -> usize {
        self.n_cols
    }

    fn n_rows(&self) -> usize {
        self.n_rows
    }

    fn query(&self, axis: Axis, i: usize) -> Result<ZeroList<'_>, OracleError> {
        check_index(axis, i, self.extent(axis))?;
        self.count.set(self.count.get() + 1);
        Ok(match (&*self.backend, axis) {
            (Backend::Explicit(m), _) => ZeroList::borrowed(m.slice(axis, i)),
            (Backend::Curves { p, q, delta }, Axis::Columns) => ZeroList::owned(curve_column(p, q, *delta, i)),
            (Backend::Curves { p, q, delta }, Axis::Rows) => ZeroList::owned(curve_row(p, q, *delta, i)),
        })
    }

    fn query_count(&self) -> u64 {
        self.count.get()
    }
}

/// `max(1, floor(eps' * delta / (2 * alpha)))`.
pub fn compute_beta(eps_prime: f64, delta: f64, alpha: f64) -> Result<usize, OracleError> {
    for (name, v) in [("eps_prime", eps_prime), ("delta", delta), ("alpha", alpha)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(OracleError::BadParam(format!("{name} = {v} must be positive")));
        }
    }
    let raw = (eps_prime * delta / (2.0 * alpha)).floor();
    Ok(if raw >= 1.0 { raw as usize } else { 1 })
}

fn reduced_extents(n_cols: usize, n_rows: usize, beta: usize) -> Result<(usize, usize), OracleError> {
    if beta == 0 || beta > n_cols.min(n_rows) {
        return Err(OracleError::BadParam(format!(
            "beta {beta} must lie in 1..={}",
            n_cols.min(n_rows)
        )));
    }
    Ok((n_cols / beta, n_rows / beta))
}

fn reduce_list(list: &[usize], beta: usize, limit: usize) -> Vec<usize> {
    list.iter()
        .filter(|&&j| j % beta == 0 && j / beta <= limit)
        .map(|&j| j / beta)
        .collect()
}

/// View `R[i, j] = M[iβ, jβ]` over another oracle.
///
/// Each reduced query is exactly one query on the inner oracle, so the
/// reported count is the inner count.
#[derive(Debug)]
pub struct ReducedOracle<'a, O: QueryOracle + ?Sized> {
    inner: &'a O,
    beta: usize,
    m_cols: usize,
    m_rows: usize,
}

impl<'a, O: QueryOracle + ?Sized> ReducedOracle<'a, O> {
    pub fn new(inner: &'a O, beta: usize) -> Result<Self, OracleError> {
        let (m_cols, m_rows) = reduced_extents(inner.n_cols(), inner.n_rows(), beta)?;
        Ok(ReducedOracle {
            inner,
            beta,
            m_cols,
            m_rows,
        })
    }

    pub fn beta(&self) -> usize {
        self.beta
    }
}

/// Shorthand for [`ReducedOracle::new`].
pub fn reduce<O: QueryOracle + ?Sized>(o: &O, beta: usize) -> Result<ReducedOracle<'_, O>, OracleError> {
    ReducedOracle::new(o, beta)
}

impl<O: QueryOracle + ?Sized> QueryOracle for ReducedOracle<'_, O> {
    fn n_cols(&self) -> usize {
        self.m_cols
    }

    fn n_rows(&self) -> usize {
        self.m_rows
    }

    fn query(&self, axis: Axis, i: usize) -> Result<ZeroList<'_>, OracleError> {
        check_index(axis, i, self.extent(axis))?;
        let inner = self.inner.query(axis, i * self.beta)?;
        if self.beta == 1 {
            return Ok(inner);
        }
        let limit = self.extent(axis.other());
        Ok(ZeroList::owned(reduce_list(&inner, self.beta, limit)))
    }

    fn query_count(&self) -> u64 {
        self.inner.query_count()
    }
}
