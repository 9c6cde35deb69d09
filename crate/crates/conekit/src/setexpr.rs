//! The representable set algebra: every variant denotes a closed subset of
//! R^n with exact rational membership.
//!
//! Distances are exact on polyhedral variants (via face-enumeration
//! projection) and approximate elsewhere, using a feasible-point pattern
//! search whose iterates stay certified members; approximate values are
//! always labeled as such.

use crate::atom::ConcreteAtom;
use crate::error::{ConeError, Result};
use crate::linalg::{QMat, QVec, Vector};
use crate::polyhedron::Polyhedron;
use crate::scalar::{rat, Rat};
use num_traits::Zero;

#[derive(Clone, Debug)]
pub enum SetExpr {
    Poly(Polyhedron),
    /// `{x : phi(x) <= 0}`.
    LevelSet(ConcreteAtom),
    /// `{(x, t) : t >= phi(x)}` in dimension `n + 1`.
    Epigraph(ConcreteAtom),
    /// Closure of the complement of the interior of a polyhedron.
    ComplementOfOpenConvex(Polyhedron),
    /// `{x : Mx + offset in inner}`.
    AffinePreimage {
        map: QMat,
        offset: QVec,
        inner: Box<SetExpr>,
        surjective: bool,
    },
    FiniteUnion(Vec<SetExpr>),
    /// An instantiated truncation of a countable intersection.
    TruncatedIntersection(Vec<SetExpr>),
}

impl SetExpr {
    pub fn affine_preimage(map: QMat, offset: QVec, inner: SetExpr) -> Result<SetExpr> {
        if map.nrows() != inner.dim() {
            return Err(ConeError::DimensionMismatch {
                expected: inner.dim(),
                got: map.nrows(),
            });
        }
        let surjective = map.transpose().nullspace().is_empty();
        Ok(SetExpr::AffinePreimage {
            map,
            offset,
            inner: Box::new(inner),
            surjective,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            SetExpr::Poly(p) => p.dim(),
            SetExpr::LevelSet(a) => a.n,
            SetExpr::Epigraph(a) => a.n + 1,
            SetExpr::ComplementOfOpenConvex(p) => p.dim(),
            SetExpr::AffinePreimage { map, .. } => map.ncols(),
            SetExpr::FiniteUnion(members) | SetExpr::TruncatedIntersection(members) => {
                members.first().map(|m| m.dim()).unwrap_or(0)
            }
        }
    }

    pub fn member(&self, x: &QVec) -> Result<bool> {
        if x.dim() != self.dim() {
            return Err(ConeError::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        match self {
            SetExpr::Poly(p) => p.member(x),
            SetExpr::LevelSet(a) => Ok(!num_traits::Signed::is_positive(&a.value(x)?)),
            SetExpr::Epigraph(a) => {
                let y = x.slice(0..a.n);
                Ok(x[a.n] >= a.value(&y)?)
            }
            SetExpr::ComplementOfOpenConvex(p) => Ok(!p.strict_member(x)?),
            SetExpr::AffinePreimage { map, offset, inner, .. } => {
                inner.member(&(&map.mul_vec(x) + offset))
            }
            SetExpr::FiniteUnion(members) => {
                for m in members {
                    if m.member(x)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            SetExpr::TruncatedIntersection(members) => {
                for m in members {
                    if !m.member(x)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Is the set convex by structure? (Sound, not complete.)
    pub fn is_convex(&self) -> bool {
        match self {
            SetExpr::Poly(_) => true,
            SetExpr::LevelSet(a) | SetExpr::Epigraph(a) => a.convex,
            // a halfspace's open complement closes to the other halfspace
            SetExpr::ComplementOfOpenConvex(p) => p.n_constraints() <= 1,
            SetExpr::AffinePreimage { inner, .. } => inner.is_convex(),
            SetExpr::FiniteUnion(members) => {
                members.len() == 1 && members[0].is_convex()
            }
            SetExpr::TruncatedIntersection(members) => {
                members.iter().all(|m| m.is_convex())
            }
        }
    }

    /// All variants made purely of polyhedra (distance and normal-cone
    /// enumeration are exact there).
    pub fn is_polyhedral(&self) -> bool {
        match self {
            SetExpr::Poly(_) | SetExpr::ComplementOfOpenConvex(_) => true,
            SetExpr::LevelSet(a) | SetExpr::Epigraph(a) => {
                a.pieces.iter().all(|p| !p.is_quadratic())
            }
            SetExpr::AffinePreimage { inner, .. } => inner.is_polyhedral(),
            SetExpr::FiniteUnion(members) | SetExpr::TruncatedIntersection(members) => {
                members.iter().all(|m| m.is_polyhedral())
            }
        }
    }

    /// Squared Euclidean distance. Exact (`DistResult::exact` set) for
    /// polyhedra and finite unions of polyhedra; otherwise an upper bound
    /// from a member-certified pattern search started at `anchor`.
    pub fn distance_sq(&self, x: &QVec, anchor: Option<&QVec>) -> Result<DistResult> {
        if self.member(x)? {
            return Ok(DistResult::exact(Rat::zero()));
        }
        if let Some(polys) = self.as_polyhedra() {
            let mut best: Option<Rat> = None;
            for p in polys {
                if p.is_empty() {
                    continue;
                }
                let d = p.distance_sq(x)?;
                match &best {
                    Some(b) if *b <= d => {}
                    _ => best = Some(d),
                }
            }
            return best
                .map(DistResult::exact)
                .ok_or_else(|| ConeError::InfeasibleSet("distance to empty set".into()));
        }
        let start = anchor
            .cloned()
            .ok_or_else(|| {
                ConeError::Unsupported(
                    "approximate distance needs a feasible anchor point".into(),
                )
            })?;
        if !self.member(&start)? {
            return Err(ConeError::HypothesisViolation(
                "distance anchor is not a member of the set".into(),
            ));
        }
        Ok(DistResult::approx(self.pattern_search_sq(x, start)?))
    }

    /// Decomposes into an explicit list of polyhedra when possible.
    fn as_polyhedra(&self) -> Option<Vec<Polyhedron>> {
        match self {
            SetExpr::Poly(p) => Some(vec![p.clone()]),
            SetExpr::FiniteUnion(members) => {
                let mut out = Vec::new();
                for m in members {
                    out.extend(m.as_polyhedra()?);
                }
                Some(out)
            }
            SetExpr::TruncatedIntersection(members) => {
                // products of per-member polyhedra lists
                let mut acc: Vec<Polyhedron> = vec![Polyhedron::whole_space(self.dim())];
                for m in members {
                    let parts = m.as_polyhedra()?;
                    let mut next = Vec::new();
                    for a in &acc {
                        for p in &parts {
                            next.push(a.intersect(p).ok()?);
                        }
                    }
                    acc = next;
                }
                Some(acc)
            }
            _ => None,
        }
    }

    /// Pattern search over rational grid steps; every accepted iterate is an
    /// exact member, so the result is a certified upper bound on dist^2.
    fn pattern_search_sq(&self, x: &QVec, start: QVec) -> Result<Rat> {
        let n = self.dim();
        let mut p = start;
        let mut best = (&p - x).norm_sq();
        let mut h = rat(1, 1);
        let min_h = rat(1, 1 << 20);
        // axis moves plus pairwise diagonals: diagonals are what lets the
        // search leave a corner of a curved boundary (e.g. the bottom of a
        // parabola) where no single-axis step is feasible and improving
        let mut moves: Vec<QVec> = Vec::new();
        for axis in 0..n {
            for sign in [1i64, -1] {
                moves.push(Vector::unit(n, axis).scale(&crate::scalar::int(sign)));
            }
        }
        for a in 0..n {
            for b in (a + 1)..n {
                for (sa, sb) in [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)] {
                    let mut m = Vector::zeros(n);
                    m[a] = crate::scalar::int(sa);
                    m[b] = crate::scalar::int(sb);
                    moves.push(m);
                }
            }
        }
        while h >= min_h {
            let mut improved = false;
            for m in &moves {
                let cand = &p + &m.scale(&h);
                if self.member(&cand)? {
                    let d = (&cand - x).norm_sq();
                    if d < best {
                        best = d;
                        p = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                h = h * rat(1, 2);
            }
        }
        Ok(best)
    }
}

/// A distance value with its exactness marker.
#[derive(Clone, Debug, PartialEq)]
pub struct DistResult {
    pub value_sq: Rat,
    pub exact: bool,
}

impl DistResult {
    fn exact(value_sq: Rat) -> Self {
        DistResult { value_sq, exact: true }
    }

    fn approx(value_sq: Rat) -> Self {
        DistResult { value_sq, exact: false }
    }

    pub fn value(&self) -> f64 {
        crate::scalar::Scalar::to_f64(&self.value_sq).sqrt()
    }
}

/// `{x : <a,x> <= 0}` as a set expression.
pub fn halfspace_set(a: QVec) -> SetExpr {
    SetExpr::Poly(Polyhedron::halfspace(a, Rat::zero()))
}

/// The parabola-bounded set `{(u, t) : t >= c u^2}` as an epigraph.
pub fn parabola_epigraph(c: Rat) -> SetExpr {
    use crate::indexpoly::{IndexPoly, IndexVec};
    let atom = crate::atom::AtomFn {
        n: 1,
        pieces: vec![crate::atom::PieceTemplate {
            region: Vec::new(),
            quad: vec![IndexVec::new(vec![IndexPoly::constant(c)])],
            lin: IndexVec::new(vec![IndexPoly::zero()]),
            cst: IndexPoly::zero(),
        }],
        convex: true,
        concave: false,
    };
    SetExpr::Epigraph(atom.instantiate(1).expect("constant atom"))
}

/// The mirrored set `{(u, t) : t <= -c u^2}` (hypograph of a concave cap),
/// encoded as the epigraph of `c u^2` in `-t`: an affine preimage.
pub fn parabola_hypograph(c: Rat) -> SetExpr {
    let flip = QMat::from_rows(
        vec![QVec::from_ints(&[1, 0]), QVec::from_ints(&[0, -1])],
        2,
    );
    SetExpr::affine_preimage(flip, Vector::zeros(2), parabola_epigraph(c))
        .expect("dimensions agree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;

    #[test]
    fn parabola_membership() {
        let s = parabola_epigraph(int(1)); // t >= u^2
        assert!(s.member(&QVec::from_ints(&[1, 1])).unwrap()); // boundary
        assert!(s.member(&QVec::from_ints(&[1, 2])).unwrap());
        assert!(!s.member(&QVec::from_ints(&[2, 1])).unwrap());
        assert!(!s.is_polyhedral());
        assert!(s.is_convex());
    }

    #[test]
    fn mirrored_parabola_membership() {
        let s = parabola_hypograph(int(1)); // t <= -u^2
        assert!(s.member(&QVec::from_ints(&[0, 0])).unwrap());
        assert!(s.member(&QVec::from_ints(&[1, -1])).unwrap());
        assert!(!s.member(&QVec::from_ints(&[1, 0])).unwrap());
    }

    #[test]
    fn union_and_intersection_membership() {
        let upper = halfspace_set(QVec::from_ints(&[0, -1])); // x2 >= 0
        let lower = halfspace_set(QVec::from_ints(&[0, 1])); // x2 <= 0
        let union = SetExpr::FiniteUnion(vec![upper.clone(), lower.clone()]);
        assert!(union.member(&QVec::from_ints(&[7, 3])).unwrap());
        let inter = SetExpr::TruncatedIntersection(vec![upper, lower]);
        assert!(inter.member(&QVec::from_ints(&[7, 0])).unwrap());
        assert!(!inter.member(&QVec::from_ints(&[7, 1])).unwrap());
    }

    #[test]
    fn complement_of_open_halfplane() {
        // interior of {x1 <= 0} is {x1 < 0}; complement closure = {x1 >= 0}
        let p = Polyhedron::halfspace(QVec::from_ints(&[1, 0]), int(0));
        let s = SetExpr::ComplementOfOpenConvex(p);
        assert!(s.member(&QVec::from_ints(&[0, 5])).unwrap());
        assert!(s.member(&QVec::from_ints(&[2, 0])).unwrap());
        assert!(!s.member(&QVec::from_ints(&[-1, 0])).unwrap());
        assert!(s.is_convex());
    }

    #[test]
    fn exact_distances() {
        let quadrant = SetExpr::Poly(
            Polyhedron::new(
                vec![QVec::from_ints(&[1, 0]), QVec::from_ints(&[0, 1])],
                vec![int(0), int(0)],
                2,
            )
            .unwrap(),
        );
        let d = quadrant.distance_sq(&QVec::from_ints(&[1, 1]), None).unwrap();
        assert!(d.exact);
        assert_eq!(d.value_sq, int(2));
        // R x R+ distance from (0,-3) is 3
        let upper = halfspace_set(QVec::from_ints(&[0, -1]));
        let d = upper.distance_sq(&QVec::from_ints(&[0, -3]), None).unwrap();
        assert_eq!(d.value_sq, int(9));
    }

    #[test]
    fn union_distance_takes_minimum() {
        let left = SetExpr::Poly(Polyhedron::halfspace(QVec::from_ints(&[1, 0]), int(-4)));
        let below = SetExpr::Poly(Polyhedron::halfspace(QVec::from_ints(&[0, 1]), int(-1)));
        let s = SetExpr::FiniteUnion(vec![left, below]);
        let d = s.distance_sq(&QVec::from_ints(&[0, 0]), None).unwrap();
        assert!(d.exact);
        assert_eq!(d.value_sq, int(1));
    }

    #[test]
    fn approximate_distance_bounds_parabola() {
        // dist((0,-1); epi u^2): true value is 1 (projection to origin... to (0,0))
        let s = parabola_epigraph(int(1));
        let d = s
            .distance_sq(&QVec::from_ints(&[0, -1]), Some(&QVec::from_ints(&[0, 0])))
            .unwrap();
        assert!(!d.exact);
        assert_eq!(d.value_sq, int(1)); // pattern search finds the exact vertex here
    }

    #[test]
    fn affine_preimage_surjectivity_flag() {
        let wide = QMat::from_rows(vec![QVec::from_ints(&[1, 0])], 2);
        let s = SetExpr::affine_preimage(
            wide,
            Vector::zeros(1),
            halfspace_set(QVec::from_ints(&[1])),
        )
        .unwrap();
        match &s {
            SetExpr::AffinePreimage { surjective, .. } => assert!(*surjective),
            _ => unreachable!(),
        }
        assert!(s.member(&QVec::from_ints(&[-1, 7])).unwrap());
        assert!(!s.member(&QVec::from_ints(&[1, 0])).unwrap());
    }
}
