//! Polyhedra `{x : Ax <= b}` with exact membership, emptiness, and
//! Euclidean projection.
//!
//! Projection enumerates candidate active sets (faces) and minimizes over
//! their affine hulls, which is exponential in the constraint count; the
//! constructor caps rows at [`MAX_PROJECT_ROWS`] so this stays desk-scale.

use crate::error::{ConeError, Result};
use crate::linalg::{QMat, QVec, Vector};
use crate::scalar::Rat;
use crate::simplex::{LpBuilder, LpOutcome};

/// Face enumeration visits every subset of constraints; beyond this row
/// count an exact QP would be needed instead.
pub const MAX_PROJECT_ROWS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polyhedron {
    rows: Vec<QVec>,
    rhs: Vec<Rat>,
    dim: usize,
}

impl Polyhedron {
    pub fn new(rows: Vec<QVec>, rhs: Vec<Rat>, dim: usize) -> Result<Self> {
        if rows.len() != rhs.len() {
            return Err(ConeError::Malformed(format!(
                "{} constraint rows but {} right-hand sides",
                rows.len(),
                rhs.len()
            )));
        }
        crate::linalg::check_dims(&rows, dim)?;
        Ok(Polyhedron { rows, rhs, dim })
    }

    pub fn whole_space(dim: usize) -> Self {
        Polyhedron { rows: Vec::new(), rhs: Vec::new(), dim }
    }

    /// `{x : <a,x> <= b}`.
    pub fn halfspace(a: QVec, b: Rat) -> Self {
        let dim = a.dim();
        Polyhedron { rows: vec![a], rhs: vec![b], dim }
    }

    /// Homogeneous polyhedron from cone inequalities.
    pub fn from_cone_rows(rows: Vec<QVec>, dim: usize) -> Result<Self> {
        let rhs = vec![Rat::from_integer(0.into()); rows.len()];
        Polyhedron::new(rows, rhs, dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[QVec] {
        &self.rows
    }

    pub fn rhs(&self) -> &[Rat] {
        &self.rhs
    }

    pub fn n_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn member(&self, x: &QVec) -> Result<bool> {
        if x.dim() != self.dim {
            return Err(ConeError::DimensionMismatch { expected: self.dim, got: x.dim() });
        }
        Ok(self
            .rows
            .iter()
            .zip(&self.rhs)
            .all(|(a, b)| a.dot(x) <= *b))
    }

    /// Indices of constraints active (tight) at `x`.
    pub fn active_rows(&self, x: &QVec) -> Result<Vec<usize>> {
        if !self.member(x)? {
            return Err(ConeError::NotAMember);
        }
        Ok(self
            .rows
            .iter()
            .zip(&self.rhs)
            .enumerate()
            .filter(|(_, (a, b))| a.dot(x) == **b)
            .map(|(i, _)| i)
            .collect())
    }

    pub fn is_empty(&self) -> bool {
        let mut lp = LpBuilder::new(self.dim);
        for (a, b) in self.rows.iter().zip(&self.rhs) {
            lp.leq(a.clone(), b.clone());
        }
        matches!(lp.solve(), LpOutcome::Infeasible)
    }

    /// Intersection (concatenated constraints).
    pub fn intersect(&self, other: &Polyhedron) -> Result<Polyhedron> {
        if other.dim != self.dim {
            return Err(ConeError::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        let mut rhs = self.rhs.clone();
        rhs.extend(other.rhs.iter().cloned());
        Polyhedron::new(rows, rhs, self.dim)
    }

    /// Exact Euclidean projection of `x` onto the polyhedron.
    ///
    /// Enumerates candidate active sets: for each subset of constraints,
    /// projects onto the affine hull of the corresponding face and keeps the
    /// nearest feasible candidate. The true projection's active set appears
    /// among the subsets, so the minimum is exact.
    pub fn project(&self, x: &QVec) -> Result<QVec> {
        if x.dim() != self.dim {
            return Err(ConeError::DimensionMismatch { expected: self.dim, got: x.dim() });
        }
        if self.member(x)? {
            return Ok(x.clone());
        }
        let m = self.rows.len();
        if m > MAX_PROJECT_ROWS {
            return Err(ConeError::Unsupported(format!(
                "projection face enumeration capped at {MAX_PROJECT_ROWS} constraints, got {m}"
            )));
        }
        let mut best: Option<(Rat, QVec)> = None;
        for mask in 1u32..(1u32 << m) {
            let subset: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
            let Some(p) = self.project_affine(x, &subset) else { continue };
            if !self.member(&p)? {
                continue;
            }
            let d = (&p - x).norm_sq();
            match &best {
                Some((bd, _)) if *bd <= d => {}
                _ => best = Some((d, p)),
            }
        }
        best.map(|(_, p)| p)
            .ok_or_else(|| ConeError::InfeasibleSet("projection onto empty polyhedron".into()))
    }

    /// Projects `x` onto `{y : A_S y = b_S}`; `None` when that affine set is
    /// empty. Solves `(A_S A_S^T) lambda = b_S - A_S x`, `y = x + A_S^T lambda`.
    fn project_affine(&self, x: &QVec, subset: &[usize]) -> Option<QVec> {
        let a_rows: Vec<QVec> = subset.iter().map(|&i| self.rows[i].clone()).collect();
        let b: QVec = Vector::new(subset.iter().map(|&i| self.rhs[i].clone()).collect());
        let a = QMat::from_rows(a_rows.clone(), self.dim);
        let gram = QMat::from_rows(
            a_rows.iter().map(|r| a.mul_vec(r)).collect(),
            subset.len(),
        );
        let rhs = &b - &a.mul_vec(x);
        let lambda = gram.solve(&rhs)?;
        let mut y = x.clone();
        for (l, row) in lambda.iter().zip(&a_rows) {
            y = &y + &row.scale(l);
        }
        // Guard against a consistent Gram solve for an inconsistent system.
        if a.mul_vec(&y) == b {
            Some(y)
        } else {
            None
        }
    }

    /// Exact squared distance to the polyhedron.
    pub fn distance_sq(&self, x: &QVec) -> Result<Rat> {
        let p = self.project(x)?;
        Ok((&p - x).norm_sq())
    }

    /// A feasible point, if any.
    pub fn feasible_point(&self) -> Option<QVec> {
        let mut lp = LpBuilder::new(self.dim);
        for (a, b) in self.rows.iter().zip(&self.rhs) {
            lp.leq(a.clone(), b.clone());
        }
        match lp.solve() {
            LpOutcome::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }

    /// Does `x` lie in the topological interior (all constraints strict)?
    pub fn strict_member(&self, x: &QVec) -> Result<bool> {
        if x.dim() != self.dim {
            return Err(ConeError::DimensionMismatch { expected: self.dim, got: x.dim() });
        }
        Ok(self
            .rows
            .iter()
            .zip(&self.rhs)
            .all(|(a, b)| a.dot(x) < *b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn halfplane_sum() -> Polyhedron {
        // x1 + x2 <= 0
        Polyhedron::halfspace(QVec::from_ints(&[1, 1]), int(0))
    }

    #[test]
    fn member_projection_identity() {
        let p = halfplane_sum();
        let x = QVec::from_ints(&[-1, 0]);
        assert_eq!(p.project(&x).unwrap(), x);
    }

    #[test]
    fn halfspace_projection_closed_form() {
        let p = halfplane_sum();
        let x = QVec::from_ints(&[1, 1]);
        let proj = p.project(&x).unwrap();
        // closed form: x - (<a,x> - b) a / |a|^2
        let a = QVec::from_ints(&[1, 1]);
        let expected = &x - &a.scale(&((a.dot(&x) - int(0)) / a.norm_sq()));
        assert_eq!(proj, expected);
        assert_eq!(proj, QVec::from_ints(&[0, 0]));
    }

    #[test]
    fn upper_halfplane_projection() {
        // R x R+ = {-x2 <= 0}
        let p = Polyhedron::halfspace(QVec::from_ints(&[0, -1]), int(0));
        assert_eq!(
            p.project(&QVec::from_ints(&[0, -1])).unwrap(),
            QVec::from_ints(&[0, 0])
        );
        assert_eq!(p.distance_sq(&QVec::new(vec![int(0), int(-3)])).unwrap(), int(9));
    }

    #[test]
    fn corner_projection_distance() {
        // {x1 <= 0, x2 <= 0}, x = (1,1) -> distance^2 = 2
        let p = Polyhedron::new(
            vec![QVec::from_ints(&[1, 0]), QVec::from_ints(&[0, 1])],
            vec![int(0), int(0)],
            2,
        )
        .unwrap();
        assert_eq!(p.distance_sq(&QVec::from_ints(&[1, 1])).unwrap(), int(2));
        assert_eq!(p.project(&QVec::from_ints(&[1, 1])).unwrap(), QVec::from_ints(&[0, 0]));
    }

    #[test]
    fn projection_onto_slab_vertex() {
        // 0 <= x1 <= 1, x2 <= 0; project (3, 2) -> (1, 0)
        let p = Polyhedron::new(
            vec![
                QVec::from_ints(&[-1, 0]),
                QVec::from_ints(&[1, 0]),
                QVec::from_ints(&[0, 1]),
            ],
            vec![int(0), int(1), int(0)],
            2,
        )
        .unwrap();
        assert_eq!(p.project(&QVec::from_ints(&[3, 2])).unwrap(), QVec::from_ints(&[1, 0]));
        assert_eq!(p.distance_sq(&QVec::from_ints(&[3, 2])).unwrap(), int(8));
    }

    #[test]
    fn empty_polyhedron_detected() {
        // x1 <= -1, -x1 <= 0
        let p = Polyhedron::new(
            vec![QVec::from_ints(&[1]), QVec::from_ints(&[-1])],
            vec![int(-1), int(0)],
            1,
        )
        .unwrap();
        assert!(p.is_empty());
        assert!(matches!(
            p.project(&QVec::from_ints(&[5])),
            Err(ConeError::InfeasibleSet(_))
        ));
    }

    #[test]
    fn projection_nonexpansive_sample() {
        let p = Polyhedron::new(
            vec![QVec::from_ints(&[1, 1]), QVec::from_ints(&[-1, 2])],
            vec![int(0), int(1)],
            2,
        )
        .unwrap();
        let x = QVec::new(vec![rat(3, 2), int(2)]);
        let y = QVec::new(vec![int(1), rat(-1, 2)]);
        let px = p.project(&x).unwrap();
        let py = p.project(&y).unwrap();
        assert!((&px - &py).norm_sq() <= (&x - &y).norm_sq());
        // idempotence
        assert_eq!(p.project(&px).unwrap(), px);
    }

    #[test]
    fn active_rows_at_vertex() {
        let p = Polyhedron::new(
            vec![QVec::from_ints(&[1, 0]), QVec::from_ints(&[0, 1])],
            vec![int(0), int(0)],
            2,
        )
        .unwrap();
        assert_eq!(p.active_rows(&QVec::from_ints(&[0, 0])).unwrap(), vec![0, 1]);
        assert_eq!(p.active_rows(&QVec::from_ints(&[-1, 0])).unwrap(), vec![1]);
    }
}
