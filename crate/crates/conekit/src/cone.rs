//! Exact convex polyhedral cones with paired generator/inequality
//! representations, plus finite unions ([`ConeRep`]) for the nonconvex
//! tangent/normal cones.
//!
//! Conversion between the two representations is a double-description pass
//! with lexicographic insertion order and canonical primitive-integer ray
//! scaling, so outputs are deterministic.

use crate::error::{ConeError, Result};
use crate::linalg::{check_dims, QMat, QVec, Vector};
use crate::simplex::conic_combination;
use num_traits::Signed;

/// A closed convex polyhedral cone containing the origin.
///
/// `gens` is the V-representation (conic hull of rays; empty = `{0}`),
/// `ineqs` the H-representation (`{x : <a,x> <= 0}` per row; empty = whole
/// space). Either may be absent until [`ConvexPolyCone::dd_convert`] runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvexPolyCone {
    dim: usize,
    gens: Option<Vec<QVec>>,
    ineqs: Option<Vec<QVec>>,
    pub exact: bool,
}

impl ConvexPolyCone {
    pub fn from_rays(dim: usize, rays: Vec<QVec>) -> Result<Self> {
        check_dims(&rays, dim)?;
        Ok(ConvexPolyCone { dim, gens: Some(rays), ineqs: None, exact: true })
    }

    pub fn from_ineqs(dim: usize, rows: Vec<QVec>) -> Result<Self> {
        check_dims(&rows, dim)?;
        Ok(ConvexPolyCone { dim, gens: None, ineqs: Some(rows), exact: true })
    }

    pub fn whole_space(dim: usize) -> Self {
        ConvexPolyCone { dim, gens: None, ineqs: Some(Vec::new()), exact: true }
    }

    pub fn origin(dim: usize) -> Self {
        ConvexPolyCone { dim, gens: Some(Vec::new()), ineqs: None, exact: true }
    }

    pub fn ray(dir: QVec) -> Self {
        let dim = dir.dim();
        ConvexPolyCone { dim, gens: Some(vec![dir]), ineqs: None, exact: true }
    }

    /// Halfspace `{x : <a,x> <= 0}`.
    pub fn halfspace(a: QVec) -> Self {
        let dim = a.dim();
        ConvexPolyCone { dim, gens: None, ineqs: Some(vec![a]), exact: true }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn synced(&self) -> bool {
        self.gens.is_some() && self.ineqs.is_some()
    }

    /// Populates both representations, canonicalized and redundancy-free.
    pub fn dd_convert(&self) -> Result<Self> {
        let (gens, ineqs) = match (&self.gens, &self.ineqs) {
            (Some(g), _) => {
                let g = canonical_rays(g);
                // V -> H: the facet normals of C are the extreme rays of its
                // polar, and the polar's H-rep is exactly C's generators.
                let ineqs = canonical_rays(&dd_h_to_v(self.dim, &g));
                // Re-derive generators from the inequalities so both sides are
                // canonical even if the input rays were redundant.
                let g = canonical_rays(&dd_h_to_v(self.dim, &ineqs));
                (g, ineqs)
            }
            (None, Some(h)) => {
                let h = canonical_rays(h);
                let gens = canonical_rays(&dd_h_to_v(self.dim, &h));
                (gens, h)
            }
            (None, None) => {
                return Err(ConeError::Malformed("cone with no representation".into()))
            }
        };
        Ok(ConvexPolyCone {
            dim: self.dim,
            gens: Some(gens),
            ineqs: Some(ineqs),
            exact: self.exact,
        })
    }

    pub fn generators(&self) -> Result<Vec<QVec>> {
        match &self.gens {
            Some(g) => Ok(g.clone()),
            None => Ok(self.dd_convert()?.gens.unwrap()),
        }
    }

    pub fn inequalities(&self) -> Result<Vec<QVec>> {
        match &self.ineqs {
            Some(h) => Ok(h.clone()),
            None => Ok(self.dd_convert()?.ineqs.unwrap()),
        }
    }

    pub fn member(&self, v: &QVec) -> Result<bool> {
        if v.dim() != self.dim {
            return Err(ConeError::DimensionMismatch { expected: self.dim, got: v.dim() });
        }
        if let Some(h) = &self.ineqs {
            return Ok(h.iter().all(|a| !a.dot(v).is_positive()));
        }
        let g = self.gens.as_ref().unwrap();
        Ok(conic_combination(g, v).is_some())
    }

    pub fn contains(&self, other: &ConvexPolyCone) -> Result<bool> {
        for g in other.generators()? {
            if !self.member(&g)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn equal(&self, other: &ConvexPolyCone) -> Result<bool> {
        Ok(self.contains(other)? && other.contains(self)?)
    }

    /// `{x* : <x*,v> <= 0 for all v in C}`; swaps the two representations.
    pub fn polar(&self) -> Result<ConvexPolyCone> {
        let c = if self.synced() { self.clone() } else { self.dd_convert()? };
        Ok(ConvexPolyCone {
            dim: self.dim,
            gens: c.ineqs,
            ineqs: c.gens,
            exact: self.exact,
        }
        .dd_convert()?)
    }

    /// True iff `C ∩ -C = {0}`, i.e. the inequality matrix has full rank.
    pub fn is_pointed(&self) -> Result<bool> {
        let h = self.inequalities()?;
        if self.dim == 0 {
            return Ok(true);
        }
        let mat = QMat::from_rows(h.clone(), self.dim);
        Ok(mat.rank() == self.dim)
    }

    pub fn is_origin_only(&self) -> Result<bool> {
        Ok(self.generators()?.is_empty())
    }

    pub fn is_whole_space(&self) -> Result<bool> {
        Ok(self.inequalities()?.is_empty())
    }

    /// Intersection of convex cones (concatenated H-reps).
    pub fn intersect(cones: &[ConvexPolyCone]) -> Result<ConvexPolyCone> {
        let dim = cones
            .first()
            .map(|c| c.dim)
            .ok_or_else(|| ConeError::Malformed("empty intersection list".into()))?;
        let mut rows = Vec::new();
        let mut exact = true;
        for c in cones {
            if c.dim != dim {
                return Err(ConeError::DimensionMismatch { expected: dim, got: c.dim });
            }
            rows.extend(c.inequalities()?);
            exact &= c.exact;
        }
        let mut out = ConvexPolyCone::from_ineqs(dim, rows)?.dd_convert()?;
        out.exact = exact;
        Ok(out)
    }

    /// Product cone `C x D` in the concatenated space.
    pub fn product(&self, other: &ConvexPolyCone) -> Result<ConvexPolyCone> {
        let n = self.dim;
        let m = other.dim;
        let mut rows: Vec<QVec> = Vec::new();
        for a in self.inequalities()? {
            rows.push(a.concat(&Vector::zeros(m)));
        }
        for a in other.inequalities()? {
            rows.push(Vector::zeros(n).concat(&a));
        }
        ConvexPolyCone::from_ineqs(n + m, rows)?.dd_convert()
    }

    pub fn negate(&self) -> Result<ConvexPolyCone> {
        let gens = self.generators()?.iter().map(|g| -g).collect();
        ConvexPolyCone::from_rays(self.dim, gens)?.dd_convert()
    }
}

/// Conic hull of the union of all generators (= Minkowski sum of the cones).
pub fn conic_sum(cones: &[ConvexPolyCone]) -> Result<ConvexPolyCone> {
    if cones.is_empty() {
        return Ok(ConvexPolyCone::origin(0));
    }
    let dim = cones[0].dim();
    let mut gens = Vec::new();
    let mut exact = true;
    for c in cones {
        if c.dim() != dim {
            return Err(ConeError::DimensionMismatch { expected: dim, got: c.dim() });
        }
        gens.extend(c.generators()?);
        exact &= c.exact;
    }
    let mut out = ConvexPolyCone::from_rays(dim, gens)?.dd_convert()?;
    out.exact = exact;
    Ok(out)
}

/// Conic hull of an explicit generator list.
pub fn cone_of(dim: usize, gens: Vec<QVec>) -> Result<ConvexPolyCone> {
    ConvexPolyCone::from_rays(dim, gens)?.dd_convert()
}

/// Double description, H to V: extreme rays of `{x : <a_j,x> <= 0}`.
///
/// Starts from `±e_1..±e_n` (spanning the whole space) and inserts
/// inequalities in lexicographic order, pruning redundant rays after each
/// insertion.
fn dd_h_to_v(dim: usize, ineqs: &[QVec]) -> Vec<QVec> {
    let mut rows: Vec<QVec> = ineqs.to_vec();
    rows.sort();
    rows.dedup();

    let mut rays: Vec<QVec> = Vec::new();
    for i in 0..dim {
        rays.push(QVec::unit(dim, i));
        rays.push(-&QVec::unit(dim, i));
    }
    for a in &rows {
        let mut neg = Vec::new();
        let mut zero = Vec::new();
        let mut pos = Vec::new();
        for r in &rays {
            let d = a.dot(r);
            if d.is_positive() {
                pos.push((r.clone(), d));
            } else if d.is_negative() {
                neg.push((r.clone(), d));
            } else {
                zero.push(r.clone());
            }
        }
        let mut next: Vec<QVec> = zero;
        next.extend(neg.iter().map(|(r, _)| r.clone()));
        for (p, dp) in &pos {
            for (q, dq) in &neg {
                // <a, dp*q - dq*p> = 0, both coefficients positive
                let w = &q.scale(dp) - &p.scale(dq);
                if !w.is_zero() {
                    next.push(w.canonical_ray());
                }
            }
        }
        rays = prune_redundant_rays(&dedup_rays(next));
    }
    rays
}

fn dedup_rays(rays: Vec<QVec>) -> Vec<QVec> {
    let mut out: Vec<QVec> = rays.into_iter().map(|r| r.canonical_ray()).collect();
    out.retain(|r| !r.is_zero());
    out.sort();
    out.dedup();
    out
}

fn prune_redundant_rays(rays: &[QVec]) -> Vec<QVec> {
    let mut kept: Vec<QVec> = rays.to_vec();
    let mut i = 0;
    while i < kept.len() {
        let candidate = kept[i].clone();
        let others: Vec<QVec> = kept
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, r)| r.clone())
            .collect();
        if conic_combination(&others, &candidate).is_some() {
            kept.remove(i);
        } else {
            i += 1;
        }
    }
    kept
}

/// Canonicalizes a ray (or inequality-normal) list: primitive integer
/// scaling, dedup, lexicographic sort, redundancy elimination.
fn canonical_rays(rays: &[QVec]) -> Vec<QVec> {
    prune_redundant_rays(&dedup_rays(rays.to_vec()))
}

/// A finite union of convex polyhedral cones; the carrier for the generally
/// nonconvex tangent and limiting normal cones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeRep {
    pub pieces: Vec<ConvexPolyCone>,
    pub exact: bool,
}

impl ConeRep {
    pub fn from_pieces(pieces: Vec<ConvexPolyCone>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(ConeError::Malformed("ConeRep needs at least one piece".into()));
        }
        let exact = pieces.iter().all(|p| p.exact);
        let mut rep = ConeRep { pieces, exact };
        rep.canonicalize()?;
        Ok(rep)
    }

    pub fn convex(cone: ConvexPolyCone) -> Self {
        let exact = cone.exact;
        ConeRep { pieces: vec![cone], exact }
    }

    pub fn whole_space(dim: usize) -> Self {
        ConeRep::convex(ConvexPolyCone::whole_space(dim))
    }

    pub fn origin(dim: usize) -> Self {
        ConeRep::convex(ConvexPolyCone::origin(dim))
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    /// Syncs all pieces, drops pieces contained in another, sorts for
    /// deterministic serialization.
    fn canonicalize(&mut self) -> Result<()> {
        let mut pieces: Vec<ConvexPolyCone> = Vec::new();
        for p in &self.pieces {
            pieces.push(p.dd_convert()?);
        }
        let mut i = 0;
        while pieces.len() > 1 && i < pieces.len() {
            let absorbed = pieces
                .iter()
                .enumerate()
                .any(|(j, q)| j != i && q.contains(&pieces[i]).unwrap_or(false)
                    && !(j > i && pieces[i].contains(q).unwrap_or(false)));
            if absorbed {
                pieces.remove(i);
            } else {
                i += 1;
            }
        }
        pieces.sort_by(|a, b| {
            a.generators()
                .unwrap_or_default()
                .cmp(&b.generators().unwrap_or_default())
        });
        self.pieces = pieces;
        Ok(())
    }

    pub fn member(&self, v: &QVec) -> Result<bool> {
        for p in &self.pieces {
            if p.member(v)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// All generators across pieces (canonicalized, deduped).
    pub fn all_generators(&self) -> Result<Vec<QVec>> {
        let mut gens = Vec::new();
        for p in &self.pieces {
            gens.extend(p.generators()?);
        }
        Ok(dedup_rays(gens))
    }

    /// Polar of the union = intersection of the piece polars (always convex).
    pub fn polar(&self) -> Result<ConvexPolyCone> {
        let polars: Vec<ConvexPolyCone> =
            self.pieces.iter().map(|p| p.polar()).collect::<Result<_>>()?;
        let mut out = ConvexPolyCone::intersect(&polars)?;
        out.exact = self.exact;
        Ok(out)
    }

    /// Set containment of unions.
    ///
    /// Sound fast path: every piece of `self` inside a single piece of
    /// `other`. Fallback: generators and pairwise generator sums of each
    /// piece all belong to `other`.
    pub fn subset_of(&self, other: &ConeRep) -> Result<bool> {
        'pieces: for p in &self.pieces {
            for q in &other.pieces {
                if q.contains(p)? {
                    continue 'pieces;
                }
            }
            let gens = p.generators()?;
            for g in &gens {
                if !other.member(g)? {
                    return Ok(false);
                }
            }
            for (i, g) in gens.iter().enumerate() {
                for h in gens.iter().skip(i + 1) {
                    if !other.member(&(g + h))? {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    pub fn equal(&self, other: &ConeRep) -> Result<bool> {
        Ok(self.subset_of(other)? && other.subset_of(self)?)
    }

    pub fn is_origin_only(&self) -> Result<bool> {
        for p in &self.pieces {
            if !p.is_origin_only()? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Pairwise intersection with a convex cone.
    pub fn intersect_convex(&self, c: &ConvexPolyCone) -> Result<ConeRep> {
        let pieces: Vec<ConvexPolyCone> = self
            .pieces
            .iter()
            .map(|p| ConvexPolyCone::intersect(&[p.clone(), c.clone()]))
            .collect::<Result<_>>()?;
        ConeRep::from_pieces(pieces)
    }

    /// Union-of-pieces intersection of two ConeReps.
    pub fn intersect(&self, other: &ConeRep) -> Result<ConeRep> {
        let mut pieces = Vec::new();
        for p in &self.pieces {
            for q in &other.pieces {
                pieces.push(ConvexPolyCone::intersect(&[p.clone(), q.clone()])?);
            }
        }
        ConeRep::from_pieces(pieces)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::QVec;

    fn rays(v: &[&[i64]]) -> Vec<QVec> {
        v.iter().map(|r| QVec::from_ints(r)).collect()
    }

    #[test]
    fn orthant_v_to_h() {
        let c = ConvexPolyCone::from_rays(2, rays(&[&[1, 0], &[0, 1]]))
            .unwrap()
            .dd_convert()
            .unwrap();
        let h = c.inequalities().unwrap();
        assert_eq!(h, rays(&[&[-1, 0], &[0, -1]]));
    }

    #[test]
    fn whole_plane_has_no_inequalities() {
        let c = ConvexPolyCone::from_rays(2, rays(&[&[1, 0], &[-1, 0], &[0, 1], &[0, -1]]))
            .unwrap()
            .dd_convert()
            .unwrap();
        assert!(c.inequalities().unwrap().is_empty());
    }

    #[test]
    fn wedge_v_to_h() {
        // cone{(1,0),(1,1)} -> {-x2 <= 0, x2 - x1 <= 0}
        let c = ConvexPolyCone::from_rays(2, rays(&[&[1, 0], &[1, 1]]))
            .unwrap()
            .dd_convert()
            .unwrap();
        let mut h = c.inequalities().unwrap();
        h.sort();
        assert_eq!(h, rays(&[&[-1, 1], &[0, -1]]));
        // membership sampling oracle over a rational grid in [-2,2]^2
        for i in -20..=20 {
            for j in -20..=20 {
                let p = QVec::new(vec![crate::scalar::rat(i, 10), crate::scalar::rat(j, 10)]);
                let in_h = c.member(&p).unwrap();
                let in_cone = j >= 0 && i >= j; // x2 >= 0 and x1 >= x2
                assert_eq!(in_h, in_cone, "mismatch at ({i},{j})/10");
            }
        }
    }

    #[test]
    fn polar_of_halfspace_is_normal_ray() {
        // R x R+ = {x: -x2 <= 0}; polar = ray(0,-1)
        let c = ConvexPolyCone::halfspace(QVec::from_ints(&[0, -1]));
        let p = c.polar().unwrap();
        assert_eq!(p.generators().unwrap(), rays(&[&[0, -1]]));
    }

    #[test]
    fn polar_of_whole_space_is_origin() {
        let c = ConvexPolyCone::whole_space(3);
        assert!(c.polar().unwrap().is_origin_only().unwrap());
    }

    #[test]
    fn polar_of_wedge() {
        let c = cone_of(2, rays(&[&[1, 0], &[1, 1]])).unwrap();
        let p = c.polar().unwrap();
        let expected = cone_of(2, rays(&[&[0, -1], &[-1, 1]])).unwrap();
        assert!(p.equal(&expected).unwrap());
        // brute-force <x*, v> <= 0 both ways
        for g in p.generators().unwrap() {
            for v in c.generators().unwrap() {
                assert!(!g.dot(&v).is_positive());
            }
        }
    }

    #[test]
    fn conic_sum_redundancy() {
        let pieces = [
            ConvexPolyCone::ray(QVec::from_ints(&[1, 0])),
            ConvexPolyCone::ray(QVec::from_ints(&[1, 1])),
            ConvexPolyCone::ray(QVec::from_ints(&[1, 2])),
        ];
        let s = conic_sum(&pieces).unwrap();
        assert_eq!(s.generators().unwrap(), rays(&[&[1, 0], &[1, 2]]));
    }

    #[test]
    fn conic_sum_of_axes() {
        let a = ConvexPolyCone::ray(QVec::from_ints(&[0, -1]));
        let b = ConvexPolyCone::ray(QVec::from_ints(&[-1, 0]));
        let s = conic_sum(&[a, b]).unwrap();
        let expected = cone_of(2, rays(&[&[-1, 0], &[0, -1]])).unwrap();
        assert!(s.equal(&expected).unwrap());
    }

    #[test]
    fn pointedness() {
        assert!(cone_of(2, rays(&[&[1, 0], &[1, 1]])).unwrap().is_pointed().unwrap());
        // halfspace R x R+ is not pointed
        assert!(!ConvexPolyCone::halfspace(QVec::from_ints(&[0, -1]))
            .is_pointed()
            .unwrap());
    }

    #[test]
    fn cone_equal_redundant_generator() {
        let a = cone_of(2, rays(&[&[1, 0], &[0, 1]])).unwrap();
        let b = cone_of(2, rays(&[&[0, 1], &[1, 0], &[1, 1]])).unwrap();
        assert!(ConeRep::convex(a).equal(&ConeRep::convex(b)).unwrap());
    }

    #[test]
    fn union_membership_and_polar() {
        // cross = (R x {0}) U ({0} x R)
        let x_axis = cone_of(2, rays(&[&[1, 0], &[-1, 0]])).unwrap();
        let y_axis = cone_of(2, rays(&[&[0, 1], &[0, -1]])).unwrap();
        let cross = ConeRep::from_pieces(vec![x_axis, y_axis]).unwrap();
        assert!(cross.member(&QVec::from_ints(&[5, 0])).unwrap());
        assert!(!cross.member(&QVec::from_ints(&[1, 1])).unwrap());
        assert!(cross.polar().unwrap().is_origin_only().unwrap());
    }

    #[test]
    fn origin_cone_h_rep_pins_origin() {
        let c = ConvexPolyCone::origin(2).dd_convert().unwrap();
        assert!(c.member(&QVec::from_ints(&[0, 0])).unwrap());
        assert!(!c.member(&QVec::from_ints(&[0, 1])).unwrap());
    }
}
