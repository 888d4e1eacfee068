//! Dense matrices over the extended nonnegative reals under the min-max
//! product, their powers, and the fixpoint those powers reach.
//!
//! For a dissimilarity matrix `A` the powers descend entrywise,
//! `E ≥ A ≥ A² ≥ …`, and settle on an ultrametric matrix `A*` after
//! `m(A)` steps. [`stabilize`] finds `m(A)` and `A*`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result, ValidationError};
use crate::value::ExtValue;

/// A dense row-major `rows × cols` matrix of [`ExtValue`]s.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<ExtValue>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<ExtValue>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: ExtValue) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<ExtValue>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(ValidationError::Ragged {
                    row: i,
                    expected: cols,
                    found: row.len(),
                }
                .into());
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds a matrix from plain floats; `f64::INFINITY` maps to infinity.
    pub fn from_f64_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let mut out = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let mut r = Vec::with_capacity(row.as_ref().len());
            for (j, &v) in row.as_ref().iter().enumerate() {
                let x = ExtValue::new(v).ok_or(if v.is_nan() {
                    ValidationError::NotANumber { row: i, col: j }
                } else {
                    ValidationError::Negative { row: i, col: j }
                })?;
                r.push(x);
            }
            out.push(r);
        }
        Matrix::from_rows(out)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> ExtValue {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: ExtValue) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[ExtValue] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[ExtValue] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<ExtValue>> {
        self.data.chunks(self.cols.max(1)).map(<[_]>::to_vec).collect()
    }

    /// Number of positions at which `self` and `other` differ.
    pub fn count_differences(&self, other: &Matrix) -> usize {
        self.data
            .iter()
            .zip(&other.data)
            .filter(|(a, b)| a != b)
            .count()
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.data.chunks(self.cols.max(1)))
            .finish()
    }
}

/// The identity of the min-max product: zero diagonal, infinity elsewhere.
pub fn identity(n: usize) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("identity order must be at least 1".into()));
    }
    let mut e = Matrix::filled(n, n, ExtValue::INFINITY);
    for i in 0..n {
        e.set(i, i, ExtValue::ZERO);
    }
    Ok(e)
}

fn check_product_dims(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch {
            left_rows: a.rows,
            left_cols: a.cols,
            right_rows: b.rows,
            right_cols: b.cols,
        });
    }
    Ok(())
}

/// One output row: `out[j] = min_k max(a_row[k], b[k][j])`.
#[inline]
fn product_row(a_row: &[ExtValue], b: &Matrix, out: &mut [ExtValue]) {
    out.fill(ExtValue::INFINITY);
    for (k, &aik) in a_row.iter().enumerate() {
        if aik.is_infinite() {
            continue;
        }
        for (c, &bkj) in out.iter_mut().zip(b.row(k)) {
            *c = (*c).min(aik.max(bkj));
        }
    }
}

/// The min-max product `c[i][j] = min_k max(a[i][k], b[k][j])`.
///
/// Every entry of the result is an entry of `a` or of `b` (or infinity when
/// the inner dimension is zero), so no rounding ever happens.
pub fn minmax_product(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_product_dims(a, b)?;
    let mut c = Matrix::filled(a.rows, b.cols, ExtValue::INFINITY);
    if b.cols > 0 {
        for (i, out) in c.data.chunks_mut(b.cols).enumerate() {
            product_row(a.row(i), b, out);
        }
    }
    Ok(c)
}

/// Row-parallel [`minmax_product`]. Output rows are independent, so the
/// result is bitwise identical to the serial product for any thread count.
pub fn minmax_product_par(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_product_dims(a, b)?;
    let mut c = Matrix::filled(a.rows, b.cols, ExtValue::INFINITY);
    if b.cols > 0 {
        c.data
            .par_chunks_mut(b.cols)
            .enumerate()
            .for_each(|(i, out)| product_row(a.row(i), b, out));
    }
    Ok(c)
}

/// Entrywise order: `a[i][j] ≤ b[i][j]` everywhere.
pub fn matrix_leq(a: &Matrix, b: &Matrix) -> Result<bool> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(Error::DimensionMismatch {
            left_rows: a.rows,
            left_cols: a.cols,
            right_rows: b.rows,
            right_cols: b.cols,
        });
    }
    Ok(a.data.iter().zip(&b.data).all(|(x, y)| x <= y))
}

/// A square, symmetric, zero-diagonal matrix with positive off-diagonal
/// entries (infinity allowed): the matrix of a dissimilarity space.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DissimMatrix(Matrix);

impl DissimMatrix {
    pub fn new(m: Matrix) -> Result<Self, ValidationError> {
        if m.rows == 0 {
            return Err(ValidationError::Empty);
        }
        if m.rows != m.cols {
            return Err(ValidationError::NotSquare {
                rows: m.rows,
                cols: m.cols,
            });
        }
        let n = m.rows;
        for i in 0..n {
            if !m.get(i, i).is_zero() {
                return Err(ValidationError::NonzeroDiagonal { index: i });
            }
            for j in i + 1..n {
                if m.get(i, j) != m.get(j, i) {
                    return Err(ValidationError::Asymmetric { row: i, col: j });
                }
                if m.get(i, j).is_zero() {
                    return Err(ValidationError::NotDefinite { row: i, col: j });
                }
            }
        }
        Ok(DissimMatrix(m))
    }

    pub fn from_rows(rows: Vec<Vec<ExtValue>>) -> Result<Self> {
        Ok(DissimMatrix::new(Matrix::from_rows(rows)?)?)
    }

    pub fn from_f64_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Ok(DissimMatrix::new(Matrix::from_f64_rows(rows)?)?)
    }

    /// Callers guarantee the invariants (or, for the zero ultrametric,
    /// knowingly relax definiteness).
    pub(crate) fn from_matrix_unchecked(m: Matrix) -> Self {
        debug_assert_eq!(m.rows, m.cols);
        DissimMatrix(m)
    }

    /// Number of points.
    #[inline]
    pub fn order(&self) -> usize {
        self.0.rows
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> ExtValue {
        self.0.get(i, j)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Off-diagonal entries of the upper triangle, row by row.
    pub fn upper_triangle(&self) -> impl Iterator<Item = ExtValue> + '_ {
        let n = self.order();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| self.get(i, j)))
    }

    /// Sorted distinct off-diagonal values.
    pub fn distinct_values(&self) -> Vec<ExtValue> {
        let mut v: Vec<ExtValue> = self.upper_triangle().collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

impl fmt::Debug for DissimMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.0, f)
    }
}

impl AsRef<Matrix> for DissimMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.0
    }
}

/// Whether products run on the calling thread or across the rayon pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Serial,
    Parallel,
}

impl Execution {
    fn product(self, a: &Matrix, b: &Matrix) -> Matrix {
        let r = match self {
            Execution::Serial => minmax_product(a, b),
            Execution::Parallel => minmax_product_par(a, b),
        };
        // Square operands of equal order.
        r.expect("square operands of equal order")
    }
}

/// The `k`-th min-max power by binary exponentiation. `k = 0` gives the
/// identity, which is itself a valid dissimilarity matrix.
pub fn power(a: &DissimMatrix, k: u64) -> DissimMatrix {
    power_with(a, k, Execution::Serial)
}

pub fn power_with(a: &DissimMatrix, k: u64, exec: Execution) -> DissimMatrix {
    let n = a.order();
    let mut acc: Option<Matrix> = None;
    let mut base = a.0.clone();
    let mut k = k;
    while k > 0 {
        if k & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(p) => exec.product(&p, &base),
            });
        }
        k >>= 1;
        if k > 0 {
            base = exec.product(&base, &base);
        }
    }
    let m = acc.unwrap_or_else(|| identity(n).expect("order is at least 1"));
    DissimMatrix::from_matrix_unchecked(m)
}

/// How [`stabilize`] searches for the fixpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Multiply by `A` until nothing changes: `m` products, `O(m n³)`.
    Linear,
    /// Square until nothing changes, then binary-search the exact power.
    #[default]
    Doubling,
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "linear" => Ok(Strategy::Linear),
            "doubling" => Ok(Strategy::Doubling),
            other => Err(format!("unknown strategy {other:?} (expected linear or doubling)")),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Linear => "linear",
            Strategy::Doubling => "doubling",
        })
    }
}

/// An exact ratio `numerator / denominator` of positive integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub numerator: u64,
    pub denominator: u64,
}

impl Ratio {
    pub fn to_f64(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizationResult {
    /// `A* = A^m`, an ultrametric matrix.
    pub star: DissimMatrix,
    /// Least `m ≥ 1` with `A^m = A^(m+1)`.
    pub m: usize,
    /// `n / m`.
    pub ultrametricity: Ratio,
    /// Entries changed by each multiplication `A^k → A^(k+1)`, for
    /// `k = 1..=m`; the last element is always 0. Only the linear strategy
    /// records it.
    pub power_trace: Option<Vec<usize>>,
}

/// Finds the stabilization power `m(A)` and the fixpoint `A*`.
///
/// Both strategies return the same `m` and `star`; equality of powers is
/// tested exactly.
pub fn stabilize(a: &DissimMatrix, strategy: Strategy) -> StabilizationResult {
    stabilize_with(a, strategy, Execution::Serial)
}

pub fn stabilize_with(a: &DissimMatrix, strategy: Strategy, exec: Execution) -> StabilizationResult {
    let (star, m, trace) = match strategy {
        Strategy::Linear => {
            let (star, m, trace) = stabilize_linear(&a.0, exec);
            (star, m, Some(trace))
        }
        Strategy::Doubling => {
            let (star, m) = stabilize_doubling(&a.0, exec);
            (star, m, None)
        }
    };
    let n = a.order();
    debug_assert!(m <= n.saturating_sub(1).max(1));
    StabilizationResult {
        star: DissimMatrix::from_matrix_unchecked(star),
        m,
        ultrametricity: Ratio {
            numerator: n as u64,
            denominator: m as u64,
        },
        power_trace: trace,
    }
}

fn stabilize_linear(a: &Matrix, exec: Execution) -> (Matrix, usize, Vec<usize>) {
    let mut current = a.clone();
    let mut m = 1;
    let mut trace = Vec::new();
    loop {
        let next = exec.product(&current, a);
        let changed = next.count_differences(&current);
        trace.push(changed);
        if changed == 0 {
            return (current, m, trace);
        }
        current = next;
        m += 1;
    }
}

fn stabilize_doubling(a: &Matrix, exec: Execution) -> (Matrix, usize) {
    let n = a.rows;
    // squares[i] = A^(2^i)
    let mut squares = vec![a.clone()];
    loop {
        let last = squares.last().expect("nonempty");
        let sq = exec.product(last, last);
        if &sq == last {
            break;
        }
        squares.push(sq);
    }
    // m ≤ n - 1 bounds the number of useful squarings by ⌈log2 n⌉ + 1.
    debug_assert!(squares.len() <= (usize::BITS - n.leading_zeros()) as usize + 1);

    let star = squares.pop().expect("nonempty");
    if squares.is_empty() {
        return (star, 1);
    }
    // Now A = squares[0] ≠ A*. Grow the largest exponent e with A^e ≠ A*;
    // powers descend monotonically, so that predicate holds exactly for
    // e < m and the answer is e + 1.
    let mut e = 1usize;
    let mut p = a.clone();
    for (i, sq) in squares.iter().enumerate().rev() {
        let candidate = exec.product(&p, sq);
        if candidate != star {
            p = candidate;
            e += 1 << i;
        }
    }
    (star, e + 1)
}
