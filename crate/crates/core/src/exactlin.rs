//! Dense linear algebra over the rationals.
//!
//! Every decision procedure in the crate (derivations, cocycle classes,
//! splittings, isomorphism checks) reduces to rank, kernel and affine solve
//! computations on [`RationalMatrix`] values. Arithmetic is exact; entries are
//! [`BigRational`] values kept in lowest terms by `num-rational`.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar.
pub type Q = BigRational;

/// Rational scalar from a small integer.
pub fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

/// Rational scalar `num/den`.
pub fn qf(num: i64, den: i64) -> Q {
    Q::new(num.into(), den.into())
}

pub fn zero_vec(n: usize) -> Vec<Q> {
    vec![Q::zero(); n]
}

pub fn unit_vec(n: usize, i: usize) -> Vec<Q> {
    let mut v = zero_vec(n);
    v[i] = Q::one();
    v
}

pub fn is_zero_vec(v: &[Q]) -> bool {
    v.iter().all(Zero::is_zero)
}

pub fn vec_add(a: &[Q], b: &[Q]) -> Vec<Q> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vec_sub(a: &[Q], b: &[Q]) -> Vec<Q> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vec_scale(s: &Q, v: &[Q]) -> Vec<Q> {
    v.iter().map(|x| s * x).collect()
}

/// `acc += s * v`
pub fn axpy(acc: &mut [Q], s: &Q, v: &[Q]) {
    if s.is_zero() {
        return;
    }
    for (a, x) in acc.iter_mut().zip(v) {
        if !x.is_zero() {
            *a += s * x;
        }
    }
}

/// Formats a vector as `[a, b, c]` with rationals printed as `p/q`.
pub fn fmt_vec(v: &[Q]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

/// A dense `rows × cols` matrix of exact rationals, stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RationalMatrix {}x{} ", self.rows, self.cols)?;
        let rows: Vec<String> = (0..self.rows).map(|r| fmt_vec(self.row(r))).collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

impl Index<(usize, usize)> for RationalMatrix {
    type Output = Q;
    fn index(&self, (r, c): (usize, usize)) -> &Q {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Q {
        &mut self.data[r * self.cols + c]
    }
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    /// Builds a matrix from row vectors. All rows must have length `cols`.
    pub fn from_rows(cols: usize, rows: Vec<Vec<Q>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {i} has length {} but matrix has {cols} columns",
                    r.len()
                )));
            }
            data.extend(r);
        }
        Ok(Self { rows: n, cols, data })
    }

    /// Builds a matrix whose columns are the given vectors, each of length `rows`.
    pub fn from_columns(rows: usize, columns: &[Vec<Q>]) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::Dimension(format!(
                    "column {j} has length {} but matrix has {rows} rows",
                    c.len()
                )));
            }
            for (i, x) in c.iter().enumerate() {
                m[(i, j)] = x.clone();
            }
        }
        Ok(m)
    }

    /// Integer convenience constructor, mainly for tests and fixtures.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let data = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.len(), cols, "ragged integer matrix");
                r.iter().map(|&x| q(x))
            })
            .collect();
        Self { rows: rows.len(), cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[Q] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Q> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn set_column(&mut self, c: usize, v: &[Q]) {
        assert_eq!(v.len(), self.rows);
        for (r, x) in v.iter().enumerate() {
            self[(r, c)] = x.clone();
        }
    }

    pub fn columns(&self) -> Vec<Vec<Q>> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)].clone();
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(v.len(), self.cols, "matrix-vector dimension mismatch");
        let mut out = zero_vec(self.rows);
        for (c, x) in v.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (r, o) in out.iter_mut().enumerate() {
                let m = &self[(r, c)];
                if !m.is_zero() {
                    *o += m * x;
                }
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let b = &other[(k, c)];
                    if !b.is_zero() {
                        out[(r, c)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// `self += s·other`.
    pub fn add_scaled(&mut self, s: &Q, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            if !b.is_zero() {
                *a += s * b;
            }
        }
    }

    pub fn scale(&self, s: &Q) -> Self {
        let data = self.data.iter().map(|a| a * s).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// `self * other - other * self`
    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// Entries in row-major order; the vectorisation used for linear systems
    /// whose unknowns are matrices.
    pub fn to_vec(&self) -> Vec<Q> {
        self.data.clone()
    }

    pub fn data(&self) -> &[Q] {
        &self.data
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Q>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    /// Stacks the rows of `other` under `self`.
    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        Self { rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        let mut m = Self::zeros(self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(r, c)] = self[(r, c)].clone();
            }
            for c in 0..other.cols {
                m[(r, self.cols + c)] = other[(r, c)].clone();
            }
        }
        m
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Reduced row echelon form together with the pivot columns.
    ///
    /// The RREF of a matrix is unique, so the result is canonical regardless
    /// of pivot choice.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.rref_in_place(self.cols);
        (m, pivots)
    }

    /// Row-reduces in place, choosing pivots only among the first
    /// `pivot_cols` columns. Returns the pivot columns.
    fn rref_in_place(&mut self, pivot_cols: usize) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..pivot_cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| !self[(r, col)].is_zero()) else {
                continue;
            };
            self.swap_rows(row, p);
            let inv = self[(row, col)].recip();
            for c in col..self.cols {
                let v = &self[(row, c)] * &inv;
                self[(row, c)] = v;
            }
            let pivot_row: Vec<Q> = self.row(row).to_vec();
            for r in 0..self.rows {
                if r == row {
                    continue;
                }
                let factor = self[(r, col)].clone();
                if factor.is_zero() {
                    continue;
                }
                for c in col..self.cols {
                    if !pivot_row[c].is_zero() {
                        let v = &self[(r, c)] - &factor * &pivot_row[c];
                        self[(r, c)] = v;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    /// Inverse of a square matrix, or `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut aug = self.hstack(&Self::identity(n));
        let pivots = aug.rref_in_place(n);
        if pivots.len() < n {
            return None;
        }
        let mut inv = Self::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                inv[(r, c)] = aug[(r, n + c)].clone();
            }
        }
        Some(inv)
    }
}

/// Exact rank over ℚ.
pub fn rank(m: &RationalMatrix) -> usize {
    m.rref().1.len()
}

/// Basis of the null space in canonical form: the rows of the reduced echelon
/// form of the kernel, ordered by pivot position.
pub fn kernel(m: &RationalMatrix) -> Vec<Vec<Q>> {
    let (r, pivots) = m.rref();
    kernel_from_rref(&r, &pivots, m.cols())
}

fn kernel_from_rref(r: &RationalMatrix, pivots: &[usize], n: usize) -> Vec<Vec<Q>> {
    let mut is_pivot = vec![false; n];
    for &p in pivots {
        is_pivot[p] = true;
    }
    let raw: Vec<Vec<Q>> = (0..n)
        .filter(|&j| !is_pivot[j])
        .map(|free| {
            let mut v = unit_vec(n, free);
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -r[(row, free)].clone();
            }
            v
        })
        .collect();
    canonical_basis(n, &raw)
}

/// Canonical basis (nonzero RREF rows) of the span of `vectors` in ℚ^n.
pub fn canonical_basis(n: usize, vectors: &[Vec<Q>]) -> Vec<Vec<Q>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let m = RationalMatrix::from_rows(n, vectors.to_vec()).expect("vectors of equal length");
    let (r, pivots) = m.rref();
    (0..pivots.len()).map(|i| r.row(i).to_vec()).collect()
}

/// A particular solution of `Mx = b` and a basis of the solutions of `Mx = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSolution {
    pub particular: Vec<Q>,
    pub kernel: Vec<Vec<Q>>,
}

/// Solves `Mx = b` exactly. Returns `Ok(None)` when the system is
/// inconsistent. The particular solution sets every free variable to zero.
pub fn solve_affine(m: &RationalMatrix, b: &[Q]) -> Result<Option<AffineSolution>> {
    if b.len() != m.rows() {
        return Err(Error::Dimension(format!(
            "right-hand side has length {} but matrix has {} rows",
            b.len(),
            m.rows()
        )));
    }
    let n = m.cols();
    let col = RationalMatrix::from_columns(m.rows(), &[b.to_vec()])?;
    let mut aug = m.hstack(&col);
    let pivots = aug.rref_in_place(n);
    for r in pivots.len()..aug.rows() {
        if !aug[(r, n)].is_zero() {
            return Ok(None);
        }
    }
    let mut particular = zero_vec(n);
    for (row, &p) in pivots.iter().enumerate() {
        particular[p] = aug[(row, n)].clone();
    }
    Ok(Some(AffineSolution { particular, kernel: kernel_from_rref(&aug, &pivots, n) }))
}

/// A subspace of ℚ^n held in reduced echelon form. Supports membership,
/// reduction modulo the subspace and canonical quotient coordinates
/// (the non-pivot coordinates of the reduced vector).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<Vec<Q>>,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn span(ambient: usize, vectors: &[Vec<Q>]) -> Self {
        let basis = canonical_basis(ambient, vectors);
        let pivots = basis
            .iter()
            .map(|v| v.iter().position(|x| !x.is_zero()).expect("nonzero echelon row"))
            .collect();
        Self { ambient, basis, pivots }
    }

    pub fn zero(ambient: usize) -> Self {
        Self { ambient, basis: Vec::new(), pivots: Vec::new() }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Q>] {
        &self.basis
    }

    /// `v` minus its echelon reduction against the subspace basis.
    pub fn reduce(&self, v: &[Q]) -> Vec<Q> {
        let mut out = v.to_vec();
        for (b, &p) in self.basis.iter().zip(&self.pivots) {
            let c = out[p].clone();
            if !c.is_zero() {
                axpy(&mut out, &(-c), b);
            }
        }
        out
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        is_zero_vec(&self.reduce(v))
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        other.basis.iter().all(|v| self.contains(v))
    }

    /// Coordinates of a vector in this subspace's echelon basis, or `None`
    /// when the vector is outside.
    pub fn echelon_coords(&self, v: &[Q]) -> Option<Vec<Q>> {
        if !self.contains(v) {
            return None;
        }
        Some(self.pivots.iter().map(|&p| v[p].clone()).collect())
    }

    /// Indices of the ambient coordinates spanning the canonical complement.
    pub fn complement_indices(&self) -> Vec<usize> {
        (0..self.ambient).filter(|j| !self.pivots.contains(j)).collect()
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut all = self.basis.clone();
        all.extend(other.basis.iter().cloned());
        Subspace::span(self.ambient, &all)
    }
}

/// Canonical projection ℚ^n → ℚ^n / S with coordinates taken at the
/// complement indices of `S`, plus the matching lift.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientMap {
    sub: Subspace,
    complement: Vec<usize>,
}

impl QuotientMap {
    pub fn new(sub: Subspace) -> Self {
        let complement = sub.complement_indices();
        Self { sub, complement }
    }

    pub fn subspace(&self) -> &Subspace {
        &self.sub
    }

    pub fn dim(&self) -> usize {
        self.complement.len()
    }

    pub fn complement(&self) -> &[usize] {
        &self.complement
    }

    pub fn project(&self, v: &[Q]) -> Vec<Q> {
        let r = self.sub.reduce(v);
        self.complement.iter().map(|&j| r[j].clone()).collect()
    }

    /// Representative of a quotient vector supported on the complement indices.
    pub fn lift(&self, w: &[Q]) -> Vec<Q> {
        let mut v = zero_vec(self.sub.ambient);
        for (&j, x) in self.complement.iter().zip(w) {
            v[j] = x.clone();
        }
        v
    }

    /// Matrix of the projection, `dim × ambient`.
    pub fn matrix(&self) -> RationalMatrix {
        let n = self.sub.ambient;
        let cols: Vec<Vec<Q>> = (0..n).map(|j| self.project(&unit_vec(n, j))).collect();
        RationalMatrix::from_columns(self.dim(), &cols).expect("consistent dims")
    }
}

/// Coordinates with respect to a fixed linearly independent family, computed
/// through a precomputed left inverse.
#[derive(Clone, Debug)]
pub struct Coordinates {
    ambient: usize,
    rank: usize,
    // rows 0..rank: left inverse; rows rank..: annihilator of the span
    transform: RationalMatrix,
}

impl Coordinates {
    /// Fails when the family is linearly dependent.
    pub fn new(ambient: usize, family: &[Vec<Q>]) -> Result<Self> {
        let r = family.len();
        let b = RationalMatrix::from_columns(ambient, family)?;
        let mut aug = b.hstack(&RationalMatrix::identity(ambient));
        let pivots = aug.rref_in_place(r);
        if pivots.len() < r {
            return Err(Error::Structure("family is linearly dependent".into()));
        }
        let mut transform = RationalMatrix::zeros(ambient, ambient);
        for row in 0..ambient {
            for c in 0..ambient {
                transform[(row, c)] = aug[(row, r + c)].clone();
            }
        }
        Ok(Self { ambient, rank: r, transform })
    }

    pub fn len(&self) -> usize {
        self.rank
    }

    pub fn is_empty(&self) -> bool {
        self.rank == 0
    }

    /// Coordinates of `v`, or `None` when `v` is outside the span.
    pub fn coords(&self, v: &[Q]) -> Option<Vec<Q>> {
        assert_eq!(v.len(), self.ambient);
        let t = self.transform.mul_vec(v);
        if !is_zero_vec(&t[self.rank..]) {
            return None;
        }
        Some(t[..self.rank].to_vec())
    }
}
