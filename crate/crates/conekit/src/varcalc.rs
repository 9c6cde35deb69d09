//! Tangent cones, Fréchet and limiting normal cones, and coderivatives over
//! the set algebra.
//!
//! Tangent cones of epigraphs and level sets come from piecewise closed
//! forms (gradients of the active pieces); tangent cones of finite
//! intersections start from the intersection of member tangent cones and
//! prune unattainable generators with an exact second-order feasibility
//! test. Limiting normal cones are exact on convex sets and on finite
//! unions of polyhedra (local face-structure enumeration); everything else
//! is delegated to the sampling oracles and flagged approximate.

use crate::atom::ConcreteAtom;
use crate::cone::{cone_of, ConeRep, ConvexPolyCone};
use crate::error::{ConeError, Result};
use crate::linalg::{QMat, QVec, Vector};
use crate::polyhedron::Polyhedron;
use crate::setexpr::SetExpr;
use crate::simplex::{LpBuilder, LpOutcome};
use num_traits::{Signed, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    FaceEnumeration,
    Sampled,
}

#[derive(Clone, Debug)]
pub struct ConeResult {
    pub cone: ConeRep,
    pub exact: bool,
    pub method: Method,
}

impl ConeResult {
    fn exact(cone: ConeRep, method: Method) -> Self {
        ConeResult { cone, exact: true, method }
    }

    fn approx(cone: ConeRep, method: Method) -> Self {
        ConeResult { cone, exact: false, method }
    }
}

/// An active smooth constraint `<grad, v> + v^T quad v <= 0` describing a
/// set locally around the reference point (v = x - x_bar).
#[derive(Clone, Debug)]
pub struct QuadConstraint {
    pub grad: QVec,
    pub quad: QMat,
}

/// Bouligand-Severi contingent cone `T(x_bar; S)`.
pub fn tangent_cone(s: &SetExpr, x: &QVec) -> Result<ConeResult> {
    if !s.member(x)? {
        return Err(ConeError::NotAMember);
    }
    let n = s.dim();
    match s {
        SetExpr::Poly(p) => {
            let rows: Vec<QVec> = p
                .active_rows(x)?
                .into_iter()
                .map(|i| p.rows()[i].clone())
                .collect();
            Ok(ConeResult::exact(
                ConeRep::convex(ConvexPolyCone::from_ineqs(n, rows)?.dd_convert()?),
                Method::ClosedForm,
            ))
        }
        SetExpr::Epigraph(atom) => tangent_epigraph(atom, x),
        SetExpr::LevelSet(atom) => tangent_levelset(atom, x),
        SetExpr::ComplementOfOpenConvex(_) => {
            let polys = union_of_polyhedra(s).expect("complement is a finite union");
            tangent_of_union(&polys, x)
        }
        SetExpr::AffinePreimage { map, offset, inner, surjective } => {
            let inner_pt = &map.mul_vec(x) + offset;
            let inner_res = tangent_cone(inner, &inner_pt)?;
            let mut pieces = Vec::new();
            for piece in &inner_res.cone.pieces {
                let rows: Vec<QVec> = piece
                    .inequalities()?
                    .iter()
                    .map(|a| map.transpose().mul_vec(a))
                    .collect();
                pieces.push(ConvexPolyCone::from_ineqs(n, rows)?.dd_convert()?);
            }
            let cone = ConeRep::from_pieces(pieces)?;
            if *surjective && inner_res.exact {
                Ok(ConeResult::exact(cone, inner_res.method))
            } else {
                Ok(ConeResult::approx(cone, inner_res.method))
            }
        }
        SetExpr::FiniteUnion(members) => {
            let mut pieces = Vec::new();
            let mut exact = true;
            for m in members {
                if m.member(x)? {
                    let r = tangent_cone(m, x)?;
                    exact &= r.exact;
                    pieces.extend(r.cone.pieces);
                }
            }
            let cone = ConeRep::from_pieces(pieces)?;
            Ok(ConeResult { cone, exact, method: Method::ClosedForm })
        }
        SetExpr::TruncatedIntersection(members) => tangent_intersection(members, x),
    }
}

/// Fréchet (regular) normal cone: the polar of the tangent cone.
pub fn frechet_normal_cone(s: &SetExpr, x: &QVec) -> Result<ConeResult> {
    let t = tangent_cone(s, x)?;
    let polar = t.cone.polar()?;
    Ok(ConeResult {
        cone: ConeRep::convex(polar),
        exact: t.exact,
        method: t.method,
    })
}

/// Limiting (basic) normal cone.
///
/// Exact for convex expressions (where it coincides with the Fréchet cone)
/// and for finite unions of polyhedra (enumeration of nearby face strata).
/// Returns an error for anything else; callers fall back to the sampling
/// oracle and must label the result approximate.
pub fn limiting_normal_cone(s: &SetExpr, x: &QVec) -> Result<ConeResult> {
    if !s.member(x)? {
        return Err(ConeError::NotAMember);
    }
    if s.is_convex() {
        let f = frechet_normal_cone(s, x)?;
        if f.exact {
            return Ok(f);
        }
    }
    if let Some(polys) = union_of_polyhedra(s) {
        return limiting_normal_of_union(&polys, x);
    }
    Err(ConeError::Unsupported(
        "limiting normal cone has no exact form for this expression; use the sampling oracle"
            .into(),
    ))
}

/// Coderivative slice `D*F(x,y)(y*) = {x* : (x*, -y*) in N((x,y); gph F)}`,
/// returned as an explicit union of polyhedra in the domain space.
pub fn coderivative(
    graph: &SetExpr,
    point: &QVec,
    domain_dim: usize,
    y_star: &QVec,
) -> Result<Vec<Polyhedron>> {
    let total = graph.dim();
    let m = total - domain_dim;
    if y_star.dim() != m {
        return Err(ConeError::DimensionMismatch { expected: m, got: y_star.dim() });
    }
    let normal = limiting_normal_cone(graph, point)?;
    let mut slices = Vec::new();
    for piece in &normal.cone.pieces {
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for a in piece.inequalities()? {
            let ax = a.slice(0..domain_dim);
            let ay = a.slice(domain_dim..total);
            // a_x . x* + a_y . (-y*) <= 0
            rows.push(ax);
            rhs.push(ay.dot(y_star));
        }
        let p = Polyhedron::new(rows, rhs, domain_dim)?;
        if !p.is_empty() {
            slices.push(p);
        }
    }
    Ok(slices)
}

fn tangent_epigraph(atom: &ConcreteAtom, x: &QVec) -> Result<ConeResult> {
    let n = atom.n;
    let y = x.slice(0..n);
    let t = x[n].clone();
    let val = atom.value(&y)?;
    if t > val {
        // interior of the epigraph (atoms are continuous)
        return Ok(ConeResult::exact(ConeRep::whole_space(n + 1), Method::ClosedForm));
    }
    let mut pieces = Vec::new();
    for p in atom.active_pieces(&y)? {
        // piece-set {(u,s): u in region, s >= p(u)}; tangent rows are the
        // active region rows (zero-extended) plus (grad, -1).
        let mut rows: Vec<QVec> = p
            .region
            .active_rows(&y)?
            .into_iter()
            .map(|i| p.region.rows()[i].push(num_traits::Zero::zero()))
            .collect();
        rows.push(p.gradient(&y).push(crate::scalar::int(-1)));
        pieces.push(ConvexPolyCone::from_ineqs(n + 1, rows)?.dd_convert()?);
    }
    Ok(ConeResult::exact(ConeRep::from_pieces(pieces)?, Method::ClosedForm))
}

fn tangent_levelset(atom: &ConcreteAtom, x: &QVec) -> Result<ConeResult> {
    let n = atom.n;
    let val = atom.value(x)?;
    if val.is_negative() {
        return Ok(ConeResult::exact(ConeRep::whole_space(n), Method::ClosedForm));
    }
    let mut pieces = Vec::new();
    let mut exact = true;
    for p in atom.active_pieces(x)? {
        let region_rows: Vec<QVec> = p
            .region
            .active_rows(x)?
            .into_iter()
            .map(|i| p.region.rows()[i].clone())
            .collect();
        let g = p.gradient(x);
        let mut rows = region_rows.clone();
        if !g.is_zero() {
            rows.push(g.clone());
            // the halfspace form is exact when a correction direction
            // exists: <g,w> < 0 with all active region rows nonpositive
            if !p.is_quadratic() || region_rows.is_empty() {
                // affine constraint, or smooth point of the region: exact
            } else {
                let mut lp = LpBuilder::new(n + 1);
                for a in &region_rows {
                    lp.leq(a.push(num_traits::Zero::zero()), num_traits::Zero::zero());
                }
                lp.leq(g.push(crate::scalar::int(1)), num_traits::Zero::zero());
                lp.minimize(QVec::unit(n + 1, n).scale(&crate::scalar::int(-1)));
                match lp.solve() {
                    LpOutcome::Unbounded => {}
                    LpOutcome::Optimal { objective, .. } if objective.is_negative() => {}
                    _ => exact = false,
                }
            }
        } else {
            let sym = symmetrize(&p.quad);
            if sym.rows().iter().all(|r| r.is_zero()) {
                // constant piece: whole region cone
            } else if is_diag_nonneg(&sym) {
                // d^T Q d <= 0 with Q PSD forces Qd = 0
                for r in sym.rows() {
                    if !r.is_zero() {
                        rows.push(r.clone());
                        rows.push(-r);
                    }
                }
            } else if is_diag_nonpos(&sym) {
                // d^T Q d <= 0 holds everywhere
            } else {
                exact = false; // indefinite: region cone is an overestimate
            }
        }
        pieces.push(ConvexPolyCone::from_ineqs(n, rows)?.dd_convert()?);
    }
    let cone = ConeRep::from_pieces(pieces)?;
    Ok(ConeResult { cone, exact, method: Method::ClosedForm })
}

fn tangent_of_union(polys: &[Polyhedron], x: &QVec) -> Result<ConeResult> {
    let n = polys[0].dim();
    let mut pieces = Vec::new();
    for p in polys {
        if p.member(x)? {
            let rows: Vec<QVec> = p
                .active_rows(x)?
                .into_iter()
                .map(|i| p.rows()[i].clone())
                .collect();
            pieces.push(ConvexPolyCone::from_ineqs(n, rows)?.dd_convert()?);
        }
    }
    Ok(ConeResult::exact(ConeRep::from_pieces(pieces)?, Method::ClosedForm))
}

fn tangent_intersection(members: &[SetExpr], x: &QVec) -> Result<ConeResult> {
    if members.is_empty() {
        return Ok(ConeResult::exact(
            ConeRep::whole_space(x.dim()),
            Method::ClosedForm,
        ));
    }
    // Fully polyhedral intersections are exact via the active-row cones of
    // the product cells.
    let inter = SetExpr::TruncatedIntersection(members.to_vec());
    if let Some(cells) = union_of_polyhedra(&inter) {
        let live: Vec<Polyhedron> = cells
            .into_iter()
            .filter(|c| c.member(x).unwrap_or(false))
            .collect();
        if !live.is_empty() {
            return tangent_of_union(&live, x);
        }
    }

    // General case: start from the intersection of member tangent cones and
    // prune generators that fail second-order attainability.
    let mut member_exact = true;
    let mut cone: Option<ConeRep> = None;
    for m in members {
        let r = tangent_cone(m, x)?;
        member_exact &= r.exact;
        cone = Some(match cone {
            None => r.cone,
            Some(c) => c.intersect(&r.cone)?,
        });
    }
    let c = cone.unwrap();

    let mut constraints = Vec::new();
    let mut have_constraints = true;
    for m in members {
        match local_constraints(m, x)? {
            Some(mut list) => constraints.append(&mut list),
            None => {
                have_constraints = false;
                break;
            }
        }
    }
    if !have_constraints || !member_exact {
        return Ok(ConeResult::approx(c, Method::ClosedForm));
    }

    let all_convex = members.iter().all(|m| m.is_convex());
    let mut pieces = Vec::new();
    let mut exact = true;
    for piece in &c.pieces {
        let gens = piece.generators()?;
        let verdicts: Vec<Attain> = gens
            .iter()
            .map(|g| attainable(&constraints, g))
            .collect::<Result<_>>()?;
        let all_yes = verdicts.iter().all(|v| *v == Attain::Yes);
        if all_yes && (all_convex || gens.len() <= 1) {
            pieces.push(piece.clone());
            continue;
        }
        let survivors: Vec<QVec> = gens
            .iter()
            .zip(&verdicts)
            .filter(|(_, v)| **v == Attain::Yes)
            .map(|(g, _)| g.clone())
            .collect();
        let dim_le_1 = piece_dim(piece)? <= 1;
        if dim_le_1 && !verdicts.contains(&Attain::Ambiguous) {
            // every candidate ray was decided individually
            pieces.push(cone_of(x.dim(), survivors)?);
        } else {
            // keep the (sound) overestimate, flagged inexact
            pieces.push(piece.clone());
            exact = false;
        }
    }
    let cone = ConeRep::from_pieces(pieces)?;
    Ok(ConeResult { cone, exact, method: Method::ClosedForm })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Attain {
    Yes,
    No,
    Ambiguous,
}

/// Second-order attainability of direction `g` against active quadratic
/// constraints: look for `w` with `<grad_j, w> <= -g^T Q_j g - s` for all
/// constraints tight along `g`, maximizing the slack `s`.
///
/// `s > 0` (or an unbounded LP) certifies a quadratic arc inside the set;
/// infeasibility of `s >= 0` refutes every arc (a Farkas combination of the
/// constraints is strictly positive along any curve with direction `g`).
fn attainable(constraints: &[QuadConstraint], g: &QVec) -> Result<Attain> {
    let n = g.dim();
    let mut tight: Vec<(&QuadConstraint, crate::scalar::Rat)> = Vec::new();
    for c in constraints {
        let first = c.grad.dot(g);
        if first.is_positive() {
            return Ok(Attain::No); // outside a member tangent cone
        }
        if first.is_zero() {
            let q = g.dot(&c.quad.mul_vec(g));
            tight.push((c, q));
        }
    }
    if tight.is_empty() {
        return Ok(Attain::Yes);
    }
    let all_affine = tight
        .iter()
        .all(|(c, _)| c.quad.rows().iter().all(|r| r.is_zero()));
    if all_affine {
        return Ok(Attain::Yes);
    }
    // variables (w, s), maximize s
    let mut lp = LpBuilder::new(n + 1);
    for (c, q) in &tight {
        lp.leq(c.grad.push(crate::scalar::int(1)), -q.clone());
    }
    lp.minimize(QVec::unit(n + 1, n).scale(&crate::scalar::int(-1)));
    Ok(match lp.solve() {
        LpOutcome::Unbounded => Attain::Yes,
        LpOutcome::Optimal { objective, .. } => {
            if objective.is_negative() {
                Attain::Yes // s* = -objective > 0
            } else if objective.is_zero() {
                Attain::Ambiguous
            } else {
                Attain::No
            }
        }
        LpOutcome::Infeasible => Attain::No,
    })
}

fn piece_dim(piece: &ConvexPolyCone) -> Result<usize> {
    let gens = piece.generators()?;
    if gens.is_empty() {
        return Ok(0);
    }
    Ok(QMat::from_rows(gens.clone(), piece.dim()).rank())
}

/// Local description of a set as an intersection of active smooth quadratic
/// constraints at `x`; `None` when no such description is available (then
/// intersection pruning is skipped).
pub fn local_constraints(s: &SetExpr, x: &QVec) -> Result<Option<Vec<QuadConstraint>>> {
    match s {
        SetExpr::Poly(p) => Ok(Some(
            p.active_rows(x)?
                .into_iter()
                .map(|i| QuadConstraint {
                    grad: p.rows()[i].clone(),
                    quad: zero_mat(p.dim()),
                })
                .collect(),
        )),
        SetExpr::Epigraph(atom) => {
            let n = atom.n;
            let y = x.slice(0..n);
            if x[n] > atom.value(&y)? {
                return Ok(Some(Vec::new()));
            }
            let active = atom.active_pieces(&y)?;
            if active.len() > 1 && !atom.convex {
                return Ok(None);
            }
            let mut out = Vec::new();
            for p in &active {
                if active.len() == 1 && !p.region.active_rows(&y)?.is_empty() {
                    // region boundary active at a single piece: the
                    // epigraph is not an intersection of smooth constraints
                    return Ok(None);
                }
                // phi_p(u) - s <= 0
                let mut quad = zero_mat(n + 1);
                for (r, row) in p.quad.rows().iter().enumerate() {
                    for c in 0..n {
                        quad_set(&mut quad, r, c, row[c].clone());
                    }
                }
                out.push(QuadConstraint {
                    grad: p.gradient(&y).push(crate::scalar::int(-1)),
                    quad,
                });
            }
            Ok(Some(out))
        }
        SetExpr::LevelSet(atom) => {
            let val = atom.value(x)?;
            if val.is_negative() {
                return Ok(Some(Vec::new()));
            }
            let active = atom.active_pieces(x)?;
            if active.len() > 1 && !atom.convex {
                return Ok(None);
            }
            let mut out = Vec::new();
            for p in &active {
                if !p.region.active_rows(x)?.is_empty() && active.len() == 1 {
                    return Ok(None);
                }
                out.push(QuadConstraint { grad: p.gradient(x), quad: p.quad.clone() });
            }
            Ok(Some(out))
        }
        SetExpr::AffinePreimage { map, offset, inner, .. } => {
            let inner_pt = &map.mul_vec(x) + offset;
            let Some(inner_cs) = local_constraints(inner, &inner_pt)? else {
                return Ok(None);
            };
            let mt = map.transpose();
            Ok(Some(
                inner_cs
                    .into_iter()
                    .map(|c| QuadConstraint {
                        grad: mt.mul_vec(&c.grad),
                        // M^T Q M
                        quad: {
                            let qm = mat_mul(&c.quad, map);
                            mat_mul(&mt, &qm)
                        },
                    })
                    .collect(),
            ))
        }
        SetExpr::TruncatedIntersection(members) => {
            let mut out = Vec::new();
            for m in members {
                match local_constraints(m, x)? {
                    Some(mut list) => out.append(&mut list),
                    None => return Ok(None),
                }
            }
            Ok(Some(out))
        }
        SetExpr::FiniteUnion(members) => {
            let containing: Vec<&SetExpr> =
                members.iter().filter(|m| m.member(x).unwrap_or(false)).collect();
            if containing.len() == 1 {
                local_constraints(containing[0], x)
            } else {
                Ok(None)
            }
        }
        SetExpr::ComplementOfOpenConvex(_) => Ok(None),
    }
}

/// Decomposes a set expression into an explicit finite union of polyhedra
/// when its structure allows it.
pub fn union_of_polyhedra(s: &SetExpr) -> Option<Vec<Polyhedron>> {
    match s {
        SetExpr::Poly(p) => Some(vec![p.clone()]),
        SetExpr::ComplementOfOpenConvex(p) => {
            // complement of {all rows strict} = union of reversed halfspaces
            Some(
                p.rows()
                    .iter()
                    .zip(p.rhs())
                    .map(|(a, b)| Polyhedron::halfspace(-a, -b.clone()))
                    .collect(),
            )
        }
        SetExpr::Epigraph(atom) => {
            // piecewise-affine epigraph: each piece is a polyhedron
            if atom.pieces.iter().any(|p| p.is_quadratic()) {
                return None;
            }
            let n = atom.n;
            let mut out = Vec::new();
            for p in &atom.pieces {
                let mut rows: Vec<QVec> = p
                    .region
                    .rows()
                    .iter()
                    .map(|r| r.push(num_traits::Zero::zero()))
                    .collect();
                let mut rhs = p.region.rhs().to_vec();
                rows.push(p.lin.push(crate::scalar::int(-1)));
                rhs.push(-p.cst.clone());
                out.push(Polyhedron::new(rows, rhs, n + 1).ok()?);
            }
            Some(out)
        }
        SetExpr::LevelSet(atom) => {
            if atom.pieces.iter().any(|p| p.is_quadratic()) {
                return None;
            }
            let n = atom.n;
            let mut out = Vec::new();
            for p in &atom.pieces {
                let mut rows = p.region.rows().to_vec();
                let mut rhs = p.region.rhs().to_vec();
                rows.push(p.lin.clone());
                rhs.push(-p.cst.clone());
                out.push(Polyhedron::new(rows, rhs, n).ok()?);
            }
            Some(out)
        }
        SetExpr::FiniteUnion(members) => {
            let mut out = Vec::new();
            for m in members {
                out.extend(union_of_polyhedra(m)?);
            }
            Some(out)
        }
        SetExpr::TruncatedIntersection(members) => {
            let mut acc = vec![Polyhedron::whole_space(s.dim())];
            for m in members {
                let parts = union_of_polyhedra(m)?;
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
        SetExpr::AffinePreimage { .. } => None,
    }
}

/// Limiting normal cone of a finite union of polyhedra at `x`, by
/// enumerating the face strata that accumulate at `x`.
///
/// A stratum is determined by the subset `kappa` of polyhedra containing a
/// nearby point `y` and, within each, the subset of `x`-active rows that
/// stay tight at `y`. The Fréchet normal cone is constant on each stratum
/// (the intersection over `kappa` of the conic hulls of tight rows), and
/// the limiting cone is the union over strata reachable arbitrarily close
/// to `x`, decided by an exact strict-feasibility LP in the direction space.
fn limiting_normal_of_union(polys: &[Polyhedron], x: &QVec) -> Result<ConeResult> {
    let n = polys[0].dim();
    let containing: Vec<usize> = polys
        .iter()
        .enumerate()
        .filter(|(_, p)| p.member(x).unwrap_or(false))
        .map(|(i, _)| i)
        .collect();
    if containing.is_empty() {
        return Err(ConeError::NotAMember);
    }
    let active: Vec<Vec<QVec>> = containing
        .iter()
        .map(|&i| {
            Ok(polys[i]
                .active_rows(x)?
                .into_iter()
                .map(|j| polys[i].rows()[j].clone())
                .collect())
        })
        .collect::<Result<_>>()?;

    let m = containing.len();
    let mut pieces: Vec<ConvexPolyCone> = Vec::new();
    // kappa ranges over nonempty subsets of the containing polyhedra
    for kappa_mask in 1u32..(1u32 << m) {
        let kappa: Vec<usize> = (0..m).filter(|k| kappa_mask & (1 << k) != 0).collect();
        let excluded: Vec<usize> = (0..m).filter(|k| kappa_mask & (1 << k) == 0).collect();
        // interior members (no active rows) cannot be excluded near x
        if excluded.iter().any(|&k| active[k].is_empty()) {
            continue;
        }
        // choices of tight-row subsets for kappa members
        let subset_counts: Vec<u32> =
            kappa.iter().map(|&k| 1u32 << active[k].len()).collect();
        let mut subset_choice = vec![0u32; kappa.len()];
        loop {
            // choices of a violated row for each excluded member
            let viol_counts: Vec<usize> =
                excluded.iter().map(|&k| active[k].len()).collect();
            let mut viol_choice = vec![0usize; excluded.len()];
            loop {
                if stratum_reachable(
                    n,
                    &kappa,
                    &subset_choice,
                    &excluded,
                    &viol_choice,
                    &active,
                )? {
                    let mut cones = Vec::new();
                    for (ki, &k) in kappa.iter().enumerate() {
                        let tight: Vec<QVec> = active[k]
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| subset_choice[ki] & (1 << j) != 0)
                            .map(|(_, a)| a.clone())
                            .collect();
                        cones.push(cone_of(n, tight)?);
                    }
                    pieces.push(ConvexPolyCone::intersect(&cones)?);
                }
                // advance violated-row choices
                let mut c = 0;
                loop {
                    if c == excluded.len() {
                        break;
                    }
                    viol_choice[c] += 1;
                    if viol_choice[c] < viol_counts[c] {
                        break;
                    }
                    viol_choice[c] = 0;
                    c += 1;
                }
                if excluded.is_empty() || c == excluded.len() {
                    break;
                }
            }
            // advance tight-subset choices
            let mut c = 0;
            loop {
                if c == kappa.len() {
                    break;
                }
                subset_choice[c] += 1;
                if subset_choice[c] < subset_counts[c] {
                    break;
                }
                subset_choice[c] = 0;
                c += 1;
            }
            if c == kappa.len() {
                break;
            }
        }
    }
    Ok(ConeResult::exact(
        ConeRep::from_pieces(pieces)?,
        Method::FaceEnumeration,
    ))
}

/// Is there a direction `d` realizing the stratum: tight rows equal to
/// zero, other active rows strictly negative, and for each excluded member
/// its chosen row strictly positive?
fn stratum_reachable(
    n: usize,
    kappa: &[usize],
    subset_choice: &[u32],
    excluded: &[usize],
    viol_choice: &[usize],
    active: &[Vec<QVec>],
) -> Result<bool> {
    let one = crate::scalar::int(1);
    let mut lp = LpBuilder::new(n);
    let mut nontrivial = false;
    for (ki, &k) in kappa.iter().enumerate() {
        for (j, a) in active[k].iter().enumerate() {
            if subset_choice[ki] & (1 << j) != 0 {
                lp.eq(a.clone(), num_traits::Zero::zero());
            } else {
                lp.leq(a.clone(), -one.clone());
                nontrivial = true;
            }
        }
    }
    for (ei, &k) in excluded.iter().enumerate() {
        let a = &active[k][viol_choice[ei]];
        lp.leq(-a, -one.clone());
        nontrivial = true;
    }
    if !nontrivial {
        return Ok(true); // the stratum contains x itself
    }
    Ok(matches!(lp.solve(), LpOutcome::Optimal { .. }))
}

fn zero_mat(n: usize) -> QMat {
    QMat::from_rows(vec![Vector::zeros(n); n], n)
}

fn quad_set(m: &mut QMat, r: usize, c: usize, v: crate::scalar::Rat) {
    let mut rows = m.rows().to_vec();
    rows[r][c] = v;
    *m = QMat::from_rows(rows, m.ncols());
}

fn mat_mul(a: &QMat, b: &QMat) -> QMat {
    let bt = b.transpose();
    QMat::from_rows(
        a.rows()
            .iter()
            .map(|ar| Vector::new(bt.rows().iter().map(|bc| ar.dot(bc)).collect()))
            .collect(),
        b.ncols(),
    )
}

fn symmetrize(q: &QMat) -> QMat {
    let t = q.transpose();
    QMat::from_rows(
        q.rows().iter().zip(t.rows()).map(|(a, b)| a + b).collect(),
        q.ncols(),
    )
}

fn is_diag_nonneg(m: &QMat) -> bool {
    m.rows().iter().enumerate().all(|(i, r)| {
        (0..m.ncols()).all(|j| if i == j { !r[j].is_negative() } else { r[j].is_zero() })
    })
}

fn is_diag_nonpos(m: &QMat) -> bool {
    m.rows().iter().enumerate().all(|(i, r)| {
        (0..m.ncols()).all(|j| if i == j { !r[j].is_positive() } else { r[j].is_zero() })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;
    use crate::setexpr::{halfspace_set, parabola_epigraph, parabola_hypograph};

    fn origin2() -> QVec {
        QVec::from_ints(&[0, 0])
    }

    fn upper_halfplane_cone() -> ConeRep {
        ConeRep::convex(ConvexPolyCone::halfspace(QVec::from_ints(&[0, -1])).dd_convert().unwrap())
    }

    #[test]
    fn tangent_of_parabola_epigraph_is_upper_halfplane() {
        let s = parabola_epigraph(int(1));
        let t = tangent_cone(&s, &origin2()).unwrap();
        assert!(t.exact);
        assert!(t.cone.equal(&upper_halfplane_cone()).unwrap());
    }

    #[test]
    fn tangent_of_mirrored_parabola_is_lower_halfplane() {
        let s = parabola_hypograph(int(1));
        let t = tangent_cone(&s, &origin2()).unwrap();
        assert!(t.exact);
        let lower = ConeRep::convex(
            ConvexPolyCone::halfspace(QVec::from_ints(&[0, 1])).dd_convert().unwrap(),
        );
        assert!(t.cone.equal(&lower).unwrap());
    }

    #[test]
    fn tangent_of_parabola_pair_intersection_is_origin() {
        let inter = SetExpr::TruncatedIntersection(vec![
            parabola_epigraph(int(1)),
            parabola_hypograph(int(1)),
        ]);
        let t = tangent_cone(&inter, &origin2()).unwrap();
        assert!(t.exact, "second-order pruning should certify this case");
        assert!(t.cone.is_origin_only().unwrap());
    }

    #[test]
    fn intersection_of_tangents_differs_from_tangent_of_intersection() {
        let t1 = tangent_cone(&parabola_epigraph(int(1)), &origin2()).unwrap();
        let t2 = tangent_cone(&parabola_hypograph(int(1)), &origin2()).unwrap();
        let inter = t1.cone.intersect(&t2.cone).unwrap();
        // x-axis
        assert!(inter.member(&QVec::from_ints(&[1, 0])).unwrap());
        assert!(inter.member(&QVec::from_ints(&[-1, 0])).unwrap());
        assert!(!inter.member(&QVec::from_ints(&[0, 1])).unwrap());
    }

    #[test]
    fn frechet_cone_of_halfspace_is_normal_ray() {
        let s = halfspace_set(QVec::from_ints(&[1, 1]));
        let f = frechet_normal_cone(&s, &origin2()).unwrap();
        let expected = ConeRep::convex(ConvexPolyCone::ray(QVec::from_ints(&[1, 1])));
        assert!(f.cone.equal(&expected).unwrap());
    }

    #[test]
    fn frechet_cone_of_singleton_intersection_is_plane() {
        let inter = SetExpr::TruncatedIntersection(vec![
            parabola_epigraph(int(1)),
            parabola_hypograph(int(1)),
        ]);
        let f = frechet_normal_cone(&inter, &origin2()).unwrap();
        assert!(f.cone.equal(&ConeRep::whole_space(2)).unwrap());
    }

    #[test]
    fn limiting_cone_of_convex_set_equals_frechet() {
        let s = parabola_epigraph(int(1));
        let l = limiting_normal_cone(&s, &origin2()).unwrap();
        assert!(l.exact);
        let expected = ConeRep::convex(ConvexPolyCone::ray(QVec::from_ints(&[0, -1])));
        assert!(l.cone.equal(&expected).unwrap());
    }

    #[test]
    fn limiting_cone_of_axis_cross() {
        // FiniteUnion(R x {0}, {0} x R) at the origin: the limiting normal
        // cone is the whole cross again.
        let x_axis = Polyhedron::new(
            vec![QVec::from_ints(&[0, 1]), QVec::from_ints(&[0, -1])],
            vec![int(0), int(0)],
            2,
        )
        .unwrap();
        let y_axis = Polyhedron::new(
            vec![QVec::from_ints(&[1, 0]), QVec::from_ints(&[-1, 0])],
            vec![int(0), int(0)],
            2,
        )
        .unwrap();
        let s = SetExpr::FiniteUnion(vec![SetExpr::Poly(x_axis), SetExpr::Poly(y_axis)]);
        let l = limiting_normal_cone(&s, &origin2()).unwrap();
        assert!(l.exact);
        assert_eq!(l.method, Method::FaceEnumeration);
        assert!(l.cone.member(&QVec::from_ints(&[3, 0])).unwrap());
        assert!(l.cone.member(&QVec::from_ints(&[0, -2])).unwrap());
        assert!(!l.cone.member(&QVec::from_ints(&[1, 1])).unwrap());
    }

    #[test]
    fn limiting_cone_of_complement_halfplane() {
        // S = closure of complement of {x1 < 0} = {x1 >= 0}
        let p = Polyhedron::halfspace(QVec::from_ints(&[1, 0]), int(0));
        let s = SetExpr::ComplementOfOpenConvex(p);
        let l = limiting_normal_cone(&s, &origin2()).unwrap();
        let expected = ConeRep::convex(ConvexPolyCone::ray(QVec::from_ints(&[-1, 0])));
        assert!(l.cone.equal(&expected).unwrap());
    }

    #[test]
    fn limiting_cone_of_union_of_halfplanes() {
        // S = {x2 >= 0} U {x2 <= 0} = R^2: normal cone {0}
        let s = SetExpr::FiniteUnion(vec![
            halfspace_set(QVec::from_ints(&[0, -1])),
            halfspace_set(QVec::from_ints(&[0, 1])),
        ]);
        let l = limiting_normal_cone(&s, &origin2()).unwrap();
        assert!(l.cone.is_origin_only().unwrap());
    }

    #[test]
    fn coderivative_of_abs_graph() {
        // F(x) = {y : y >= |x|}; gph F = epi |.| is polyhedral and convex
        let atom = crate::atom::max_of_two_affine(
            QVec::from_ints(&[1]),
            int(0),
            QVec::from_ints(&[-1]),
            int(0),
        );
        let graph = SetExpr::Epigraph(atom.instantiate(1).unwrap());
        // D*F(0,0)(1) = {x* : |x*| <= 1}
        let slices = coderivative(&graph, &origin2(), 1, &QVec::from_ints(&[1])).unwrap();
        let member = |v: i64, d: i64| {
            slices.iter().any(|p| {
                p.member(&QVec::new(vec![crate::scalar::rat(v, d)])).unwrap()
            })
        };
        assert!(member(1, 1));
        assert!(member(-1, 1));
        assert!(member(1, 2));
        assert!(!member(3, 2));
        assert!(!member(-2, 1));
        // y* = 0 on this Lipschitz-like graph gives {0}
        let zero_slices =
            coderivative(&graph, &origin2(), 1, &QVec::from_ints(&[0])).unwrap();
        for p in &zero_slices {
            assert!(p.member(&QVec::from_ints(&[0])).unwrap());
            assert!(!p.member(&QVec::from_ints(&[1])).unwrap());
            assert!(!p.member(&QVec::from_ints(&[-1])).unwrap());
        }
    }

    #[test]
    fn coderivative_of_linear_map() {
        // f(x) = 2x: graph {(x,y): y = 2x}; D*f(y*) = {2 y*}
        let graph = SetExpr::Poly(
            Polyhedron::new(
                vec![QVec::from_ints(&[2, -1]), QVec::from_ints(&[-2, 1])],
                vec![int(0), int(0)],
                2,
            )
            .unwrap(),
        );
        let slices = coderivative(&graph, &origin2(), 1, &QVec::from_ints(&[3])).unwrap();
        assert!(slices.iter().any(|p| p.member(&QVec::from_ints(&[6])).unwrap()));
        assert!(!slices.iter().any(|p| p.member(&QVec::from_ints(&[5])).unwrap()));
    }

    #[test]
    fn tangent_cone_domain_error() {
        let s = parabola_epigraph(int(1));
        assert!(matches!(
            tangent_cone(&s, &QVec::from_ints(&[1, 0])),
            Err(ConeError::NotAMember)
        ));
    }

    #[test]
    fn affine_preimage_tangent_via_inverse_image() {
        // S = {x : x1 + x2 <= 0 in inner space via identity-like map}
        let map = QMat::from_rows(
            vec![QVec::from_ints(&[1, 0]), QVec::from_ints(&[1, 1])],
            2,
        );
        let s = SetExpr::affine_preimage(
            map,
            Vector::zeros(2),
            halfspace_set(QVec::from_ints(&[0, 1])),
        )
        .unwrap();
        // membership: (Mx)_2 = x1 + x2 <= 0
        let t = tangent_cone(&s, &origin2()).unwrap();
        assert!(t.exact);
        let expected = ConeRep::convex(
            ConvexPolyCone::halfspace(QVec::from_ints(&[1, 1])).dd_convert().unwrap(),
        );
        assert!(t.cone.equal(&expected).unwrap());
    }
}
