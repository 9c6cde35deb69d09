//! Dense vectors and matrices over a generic [`Scalar`], with exact
//! Gaussian elimination (solve, rank, nullspace) used throughout the
//! polyhedral layer at the rational instantiation.

use crate::error::ConeError;
use crate::scalar::{Rat, Scalar};
use num_integer::Integer;
use num_traits::{Signed, Zero};
use std::ops::{Add, Index, IndexMut, Neg, Sub};

#[derive(Clone, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub struct Vector<T> {
    coords: Vec<T>,
}

/// Exact rational vector, the ambient-point carrier.
pub type QVec = Vector<Rat>;
/// Float vector used by the sampling oracles.
pub type FVec = Vector<f64>;

impl<T: Scalar> Vector<T> {
    pub fn new(coords: Vec<T>) -> Self {
        Vector { coords }
    }

    pub fn zeros(dim: usize) -> Self {
        Vector { coords: vec![T::zero(); dim] }
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut v = Self::zeros(dim);
        v[axis] = T::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.coords.iter()
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
    }

    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn scale(&self, s: &T) -> Self {
        Vector::new(self.coords.iter().map(|c| c.clone() * s.clone()).collect())
    }

    /// Concatenates two vectors (product-space embedding).
    pub fn concat(&self, other: &Self) -> Self {
        let mut c = self.coords.clone();
        c.extend(other.coords.iter().cloned());
        Vector::new(c)
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Vector::new(self.coords[range].to_vec())
    }

    pub fn push(&self, last: T) -> Self {
        let mut c = self.coords.clone();
        c.push(last);
        Vector::new(c)
    }

    pub fn map_to_f64(&self) -> FVec {
        Vector::new(self.coords.iter().map(|c| c.to_f64()).collect())
    }
}

impl QVec {
    pub fn from_ints(coords: &[i64]) -> Self {
        Vector::new(coords.iter().map(|&c| crate::scalar::int(c)).collect())
    }

    /// Canonical positive rescaling to a primitive integer vector.
    ///
    /// Only positive scaling is applied, so the ray direction is preserved.
    pub fn canonical_ray(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let lcm = self
            .coords
            .iter()
            .fold(num_bigint::BigInt::from(1), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<num_bigint::BigInt> =
            self.coords.iter().map(|c| c.numer() * &lcm / c.denom()).collect();
        let gcd = ints
            .iter()
            .fold(num_bigint::BigInt::zero(), |acc, c| acc.gcd(&c.abs()));
        Vector::new(
            ints.into_iter()
                .map(|i| Rat::from_integer(i / &gcd))
                .collect(),
        )
    }
}

impl<T: Scalar> Index<usize> for Vector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.coords[i]
    }
}

impl<T: Scalar> IndexMut<usize> for Vector<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.coords[i]
    }
}

impl<T: Scalar> Add for &Vector<T> {
    type Output = Vector<T>;
    fn add(self, rhs: &Vector<T>) -> Vector<T> {
        Vector::new(
            self.coords
                .iter()
                .zip(&rhs.coords)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        )
    }
}

impl<T: Scalar> Sub for &Vector<T> {
    type Output = Vector<T>;
    fn sub(self, rhs: &Vector<T>) -> Vector<T> {
        Vector::new(
            self.coords
                .iter()
                .zip(&rhs.coords)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        )
    }
}

impl<T: Scalar> Neg for &Vector<T> {
    type Output = Vector<T>;
    fn neg(self) -> Vector<T> {
        Vector::new(self.coords.iter().map(|a| -a.clone()).collect())
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Matrix<T> {
    rows: Vec<Vector<T>>,
    cols: usize,
}

pub type QMat = Matrix<Rat>;

impl<T: Scalar> Matrix<T> {
    pub fn from_rows(rows: Vec<Vector<T>>, cols: usize) -> Self {
        debug_assert!(rows.iter().all(|r| r.dim() == cols));
        Matrix { rows, cols }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_rows((0..n).map(|i| Vector::unit(n, i)).collect(), n)
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &Vector<T> {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vector<T>] {
        &self.rows
    }

    pub fn mul_vec(&self, v: &Vector<T>) -> Vector<T> {
        Vector::new(self.rows.iter().map(|r| r.dot(v)).collect())
    }

    pub fn transpose(&self) -> Self {
        let mut out = vec![Vector::zeros(self.nrows()); self.cols];
        for (i, r) in self.rows.iter().enumerate() {
            for j in 0..self.cols {
                out[j][i] = r[j].clone();
            }
        }
        Matrix::from_rows(out, self.nrows())
    }

    /// Row-reduces a copy and returns (rank, reduced rows, pivot columns).
    fn row_echelon(&self) -> (usize, Vec<Vector<T>>, Vec<usize>) {
        let mut rows = self.rows.clone();
        let m = rows.len();
        let n = self.cols;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..n {
            let Some(p) = (r..m).find(|&i| !rows[i][c].is_zero()) else {
                continue;
            };
            rows.swap(r, p);
            let inv_piv = T::one() / rows[r][c].clone();
            for j in 0..n {
                rows[r][j] = rows[r][j].clone() * inv_piv.clone();
            }
            for i in 0..m {
                if i != r && !rows[i][c].is_zero() {
                    let f = rows[i][c].clone();
                    for j in 0..n {
                        let delta = f.clone() * rows[r][j].clone();
                        rows[i][j] = rows[i][j].clone() - delta;
                    }
                }
            }
            pivots.push(c);
            r += 1;
            if r == m {
                break;
            }
        }
        (r, rows, pivots)
    }

    pub fn rank(&self) -> usize {
        self.row_echelon().0
    }

    /// Basis of the right nullspace `{x : Ax = 0}`.
    pub fn nullspace(&self) -> Vec<Vector<T>> {
        let n = self.cols;
        let (_, rows, pivots) = self.row_echelon();
        let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Vec::new();
        for &f in &free {
            let mut v = Vector::zeros(n);
            v[f] = T::one();
            for (pi, &pc) in pivots.iter().enumerate() {
                v[pc] = -rows[pi][f].clone();
            }
            basis.push(v);
        }
        basis
    }

    /// Solves `Ax = b` exactly. Returns `None` when inconsistent; when the
    /// system is underdetermined an arbitrary particular solution is returned.
    pub fn solve(&self, b: &Vector<T>) -> Option<Vector<T>> {
        let n = self.cols;
        let aug_cols = n + 1;
        let aug = Matrix::from_rows(
            self.rows
                .iter()
                .zip(b.iter())
                .map(|(r, bi)| r.push(bi.clone()))
                .collect(),
            aug_cols,
        );
        let (_, rows, pivots) = aug.row_echelon();
        if pivots.contains(&n) {
            return None; // pivot in the constants column
        }
        let mut x = Vector::zeros(n);
        for (pi, &pc) in pivots.iter().enumerate() {
            x[pc] = rows[pi][n].clone();
        }
        Some(x)
    }
}

/// Checks that all vectors share dimension `dim`.
pub fn check_dims<T: Scalar>(vecs: &[Vector<T>], dim: usize) -> Result<(), ConeError> {
    for v in vecs {
        if v.dim() != dim {
            return Err(ConeError::DimensionMismatch {
                expected: dim,
                got: v.dim(),
            });
        }
    }
    Ok(())
}
