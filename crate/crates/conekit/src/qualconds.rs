//! Qualification conditions for countable constraint systems.
//!
//! Four engines cover the whole menu:
//! * multiplier feasibility — a vanishing convex combination of normal-cone
//!   or subdifferential generators refutes the condition (NQC, its conic
//!   variant, SQC);
//! * strict slack — an exact interior/strict-membership point certifies NQC
//!   sufficiently (`interior_point_nqc`);
//! * hull closedness — symbolic accumulation directions of generator curves
//!   are tested for exact membership in the scanned conic hull (NCC, SCC);
//! * dual-epigraph closedness — conjugate values on a rational dual grid,
//!   fitted to index polynomials per grid point, yield the accumulation
//!   directions of `cone ⋃ epi φ_i*` (FMCQ, and CQC with the objective
//!   epigraph added).
//!
//! Refutations are exact at every truncation tested: multipliers are
//! re-verified in rational arithmetic and limit directions are checked
//! against the deepest scanned hull (non-membership there implies
//! non-membership at every shallower truncation, since the hull only grows).
//! Affirmative verdicts say how far they reach: full symbolic certificates
//! over all indices, finite-family exhaustion, or stagnation semi-decisions.

use crate::atom::{AtomFn, ConcreteAtom, ConjVal, Flavor, PieceTemplate};
use crate::chip::{
    grid_directions, interior_point, polyhedral_hull_certified, positive_for_all_indices,
    row_residual, symbolic_limit_normals, Holds,
};
use crate::cone::ConvexPolyCone;
use crate::error::{ConeError, Result};
use crate::family::{FamilyTemplate, IndexedFamily, TruncationPolicy};
use crate::indexpoly::{IndexPoly, IndexVec};
use crate::linalg::{QMat, QVec, Vector};
use crate::scalar::{int, rat, Rat};
use crate::simplex::{conic_combination, LpBuilder, LpOutcome};
use crate::varcalc::limiting_normal_cone;
use num_traits::{Signed, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    Nqc,
    ConicNqc,
    InteriorPoint,
    Ncc,
    Scc,
    Sqc,
    Fmcq,
    Cqc,
}

impl Condition {
    pub fn label(&self) -> &'static str {
        match self {
            Condition::Nqc => "NQC",
            Condition::ConicNqc => "conicQC",
            Condition::InteriorPoint => "interior-point",
            Condition::Ncc => "NCC",
            Condition::Scc => "SCC",
            Condition::Sqc => "SQC",
            Condition::Fmcq => "FMCQ",
            Condition::Cqc => "CQC",
        }
    }
}

#[derive(Clone, Debug)]
pub struct QCVerdict {
    pub condition: Condition,
    pub holds: Holds,
    /// A limit direction (closedness refutations) or a certified strict
    /// point (interior-point certificates).
    pub witness: Option<QVec>,
    /// Exact vanishing convex combination `(generator, weight)` with
    /// positive weights summing to one, for multiplier refutations.
    pub multipliers: Option<Vec<(QVec, Rat)>>,
    pub k_used: i64,
    pub exact: bool,
    pub method: String,
}

impl QCVerdict {
    fn new(condition: Condition, holds: Holds, k_used: i64, method: &str) -> Self {
        QCVerdict {
            condition,
            holds,
            witness: None,
            multipliers: None,
            k_used,
            exact: true,
            method: method.into(),
        }
    }

    fn with_witness(mut self, w: QVec) -> Self {
        self.witness = Some(w);
        self
    }

    fn with_multipliers(mut self, m: Vec<(QVec, Rat)>) -> Self {
        self.multipliers = Some(m);
        self
    }

    fn inexact(mut self) -> Self {
        self.exact = false;
        self
    }
}

// ---------------------------------------------------------------------------
// Shared exact feasibility machinery

/// Convex combination of `gens` that sums to zero: weights `mu >= 0` with
/// `sum mu = 1` and `sum mu_g g = 0`, found by an exact LP on the generators
/// augmented with a normalization coordinate.
fn vanishing_combination(gens: &[QVec]) -> Option<Vec<Rat>> {
    let dim = gens.first()?.dim();
    let aug: Vec<QVec> = gens.iter().map(|g| g.push(int(1))).collect();
    let target = Vector::zeros(dim).push(int(1));
    conic_combination(&aug, &target)
}

/// Re-verifies a vanishing combination in exact arithmetic and packs the
/// strictly positive weights.
fn verified_multipliers(gens: &[QVec], mu: &[Rat]) -> Option<Vec<(QVec, Rat)>> {
    if gens.len() != mu.len() {
        return None;
    }
    let mut sum = Vector::zeros(gens[0].dim());
    let mut total = Rat::zero();
    for (g, m) in gens.iter().zip(mu) {
        if m.is_negative() {
            return None;
        }
        sum = &sum + &g.scale(m);
        total = total + m.clone();
    }
    if !sum.is_zero() || total != int(1) {
        return None;
    }
    Some(
        gens.iter()
            .zip(mu)
            .filter(|(_, m)| m.is_positive())
            .map(|(g, m)| (g.clone(), m.clone()))
            .collect(),
    )
}

/// A functional `c` with `<c, g> >= 1` for every listed vector; its
/// existence makes any vanishing convex combination of the `gens`
/// impossible.
fn separating_functional(gens: &[QVec]) -> Option<QVec> {
    let n = gens.first()?.dim();
    let mut lp = LpBuilder::new(n);
    for g in gens {
        lp.leq(-g, int(-1));
    }
    lp.minimize(Vector::zeros(n));
    match lp.solve() {
        LpOutcome::Optimal { x, .. } => Some(x),
        _ => None,
    }
}

/// `<c, v(i)>` as a polynomial in the index.
fn dot_curve(c: &QVec, v: &IndexVec) -> IndexPoly {
    let mut acc = IndexPoly::zero();
    for (j, p) in v.coords.iter().enumerate() {
        acc = &acc + &(p * &IndexPoly::constant(c[j].clone()));
    }
    acc
}

pub(crate) fn push_ray(gens: &mut Vec<QVec>, g: QVec) -> bool {
    let g = g.canonical_ray();
    if g.is_zero() || gens.contains(&g) {
        return false;
    }
    gens.push(g);
    true
}

// ---------------------------------------------------------------------------
// Normal-cone generator collection

struct NormalGens {
    gens: Vec<QVec>,
    exact: bool,
    stagnated: bool,
    k_used: i64,
}

fn collect_normal_gens(f: &IndexedFamily, x: &QVec) -> Result<NormalGens> {
    let window = f.policy.window.max(1);
    let k_cap = f.effective_k(f.policy.k_init.max(8) + 24);
    let mut gens: Vec<QVec> = Vec::new();
    let mut exact = true;
    let mut last_growth = 0i64;
    for i in 1..=k_cap {
        let n = limiting_normal_cone(&f.instantiate(i)?, x)?;
        exact &= n.exact;
        let mut grew = false;
        for g in n.cone.all_generators()? {
            grew |= push_ray(&mut gens, g);
        }
        if grew {
            last_growth = i;
        }
    }
    let stagnated =
        f.support_len().is_some() || (k_cap > window && k_cap - last_growth >= window);
    Ok(NormalGens { gens, exact, stagnated, k_used: k_cap })
}

// ---------------------------------------------------------------------------
// NQC and its conic variant

/// Normal qualification condition: no vanishing convex combination of
/// member normal-cone generators at `x`.
pub fn nqc_check(f: &IndexedFamily, x: &QVec) -> Result<QCVerdict> {
    if !f.instantiate(1)?.member(x)? {
        return Err(ConeError::NotAMember);
    }
    let ng = match collect_normal_gens(f, x) {
        Ok(v) => v,
        Err(ConeError::Unsupported(m)) => {
            return Ok(QCVerdict::new(
                Condition::Nqc,
                Holds::InconclusiveAtK,
                0,
                &format!("member normal cone unavailable: {m}"),
            )
            .inexact())
        }
        Err(e) => return Err(e),
    };
    if !ng.exact {
        return Ok(QCVerdict::new(
            Condition::Nqc,
            Holds::InconclusiveAtK,
            ng.k_used,
            "a member normal cone was only computed approximately",
        )
        .inexact());
    }
    if ng.gens.is_empty() {
        return Ok(QCVerdict::new(
            Condition::Nqc,
            Holds::Yes,
            ng.k_used,
            "every member normal cone is trivial at the reference point",
        ));
    }
    if let Some(mu) = vanishing_combination(&ng.gens) {
        if verified_multipliers(&ng.gens, &mu).is_some() {
            return Ok(QCVerdict::new(
                Condition::Nqc,
                Holds::No,
                ng.k_used,
                "exact vanishing convex combination of member normals",
            )
            .with_multipliers(pack_pairs(&ng.gens, &mu)));
        }
    }
    if f.support_len().is_some() {
        return Ok(QCVerdict::new(
            Condition::Nqc,
            Holds::Yes,
            ng.k_used,
            "multiplier system exactly infeasible on the full finite family",
        ));
    }
    // Symbolic certificate: every template row is active for all indices or
    // strictly slack for all indices, and a single functional is certified
    // positive against every active row curve (hence against every member
    // normal of every index).
    if polyhedral_hull_certified(f, x)? {
        let mut lp_targets = ng.gens.clone();
        for d in symbolic_limit_normals(f, x)? {
            push_ray(&mut lp_targets, d);
        }
        if let Some(c) = separating_functional(&lp_targets) {
            let FamilyTemplate::Polyhedral { rows } = &f.template else { unreachable!() };
            let certified = rows
                .iter()
                .filter(|(av, bv)| row_residual(av, bv, x).is_zero())
                .all(|(av, _)| positive_for_all_indices(&dot_curve(&c, av)));
            if certified {
                return Ok(QCVerdict::new(
                    Condition::Nqc,
                    Holds::Yes,
                    ng.k_used,
                    "separating functional certified against every index",
                ));
            }
        }
    }
    if ng.stagnated {
        return Ok(QCVerdict::new(
            Condition::Nqc,
            Holds::Yes,
            ng.k_used,
            "generator set stagnated; infeasibility certified up to the scanned \
             truncation (semi-decision beyond it)",
        ));
    }
    Ok(QCVerdict::new(
        Condition::Nqc,
        Holds::InconclusiveAtK,
        ng.k_used,
        "multiplier system infeasible at the scanned truncation but the \
         generator set kept growing",
    ))
}

fn pack_pairs(gens: &[QVec], mu: &[Rat]) -> Vec<(QVec, Rat)> {
    gens.iter()
        .zip(mu)
        .filter(|(_, m)| m.is_positive())
        .map(|(g, m)| (g.clone(), m.clone()))
        .collect()
}

/// NQC on an explicitly given list of convex cones (e.g. already-computed
/// normal cones): exact in both directions since the data is complete.
pub fn conic_nqc_check(cones: &[ConvexPolyCone]) -> Result<QCVerdict> {
    let mut gens: Vec<QVec> = Vec::new();
    for c in cones {
        for g in c.generators()? {
            push_ray(&mut gens, g);
        }
    }
    let k = cones.len() as i64;
    if gens.is_empty() {
        return Ok(QCVerdict::new(Condition::ConicNqc, Holds::Yes, k, "all cones are trivial"));
    }
    if let Some(mu) = vanishing_combination(&gens) {
        let pairs = pack_pairs(&gens, &mu);
        return Ok(QCVerdict::new(
            Condition::ConicNqc,
            Holds::No,
            k,
            "exact vanishing convex combination of cone generators",
        )
        .with_multipliers(pairs));
    }
    Ok(QCVerdict::new(
        Condition::ConicNqc,
        Holds::Yes,
        k,
        "multiplier system exactly infeasible on the given cones",
    ))
}

/// Sufficient interior-point test for NQC: a point lying in one member and
/// strictly inside all the others. Success certifies NQC; failure of the
/// search proves nothing.
pub fn interior_point_nqc(f: &IndexedFamily, x: &QVec) -> Result<QCVerdict> {
    if !f.instantiate(1)?.member(x)? {
        return Err(ConeError::NotAMember);
    }
    let n = f.dim()?;
    let mut candidates = vec![x.clone()];
    for d in grid_directions(n) {
        for r in [int(1), rat(1, 2), rat(1, 8)] {
            candidates.push(x + &d.scale(&r));
        }
    }
    // Infinite polyhedral templates: certify strict slack of a candidate in
    // every row for every index symbolically.
    if f.support_len().is_none() {
        if let FamilyTemplate::Polyhedral { rows } = &f.template {
            for w in &candidates {
                if rows
                    .iter()
                    .all(|(av, bv)| positive_for_all_indices(&row_residual(av, bv, w)))
                {
                    return Ok(QCVerdict::new(
                        Condition::InteriorPoint,
                        Holds::Yes,
                        f.policy.k_init,
                        "strict template slack certified for every index",
                    )
                    .with_witness(w.clone()));
                }
            }
        }
    }
    let k = f.effective_k(f.policy.k_init.max(4));
    let covers_family = f.support_len().map(|len| len <= k).unwrap_or(false);
    let mut scanned_hit = false;
    'cand: for w in &candidates {
        for i0 in 1..=k {
            if !f.instantiate(i0)?.member(w)? {
                continue;
            }
            let mut strict = true;
            for j in 1..=k {
                if j != i0 && !interior_point(&f.instantiate(j)?, w)? {
                    strict = false;
                    break;
                }
            }
            if strict {
                if covers_family {
                    return Ok(QCVerdict::new(
                        Condition::InteriorPoint,
                        Holds::Yes,
                        k,
                        "exact membership in one member and certified interior of \
                         all others",
                    )
                    .with_witness(w.clone()));
                }
                scanned_hit = true;
                break 'cand;
            }
        }
    }
    let method = if scanned_hit {
        "interior only verified for the scanned indices of an infinite family"
    } else {
        "no candidate point was interior to the other members (sufficient test \
         only)"
    };
    Ok(QCVerdict::new(Condition::InteriorPoint, Holds::InconclusiveAtK, k, method))
}

// ---------------------------------------------------------------------------
// NCC: closedness of the conic hull of the member normals

/// Normal closedness condition: is `cone(⋃ N(x; Ω_i))` closed?
pub fn ncc_check(f: &IndexedFamily, x: &QVec) -> Result<QCVerdict> {
    if !f.instantiate(1)?.member(x)? {
        return Err(ConeError::NotAMember);
    }
    let ng = match collect_normal_gens(f, x) {
        Ok(v) => v,
        Err(ConeError::Unsupported(m)) => {
            return Ok(QCVerdict::new(
                Condition::Ncc,
                Holds::InconclusiveAtK,
                0,
                &format!("member normal cone unavailable: {m}"),
            )
            .inexact())
        }
        Err(e) => return Err(e),
    };
    if !ng.exact {
        return Ok(QCVerdict::new(
            Condition::Ncc,
            Holds::InconclusiveAtK,
            ng.k_used,
            "a member normal cone was only computed approximately",
        )
        .inexact());
    }
    for d in symbolic_limit_normals(f, x)? {
        if conic_combination(&ng.gens, &d).is_none() {
            return Ok(QCVerdict::new(
                Condition::Ncc,
                Holds::No,
                ng.k_used,
                "accumulation direction of the normal curves lies outside the \
                 conic hull at the deepest scanned truncation (hence at every \
                 shallower one)",
            )
            .with_witness(d));
        }
    }
    if f.support_len().is_some() {
        return Ok(QCVerdict::new(
            Condition::Ncc,
            Holds::Yes,
            ng.k_used,
            "finitely generated conic hull is closed",
        ));
    }
    if polyhedral_hull_certified(f, x)? {
        // affine rows satisfy a(i) = a(K) + (i-K) q, so the hull over all
        // indices stays inside cone(scanned rays, limit rays); with every
        // limit ray already in the scanned hull the two coincide and the
        // hull is a closed polyhedral cone
        return Ok(QCVerdict::new(
            Condition::Ncc,
            Holds::Yes,
            ng.k_used,
            "template hull certified: every limit ray lies in the scanned hull",
        ));
    }
    if ng.stagnated {
        return Ok(QCVerdict::new(
            Condition::Ncc,
            Holds::Yes,
            ng.k_used,
            "generator set stagnated to a polyhedral hull (semi-decision beyond \
             the scanned truncation)",
        ));
    }
    Ok(QCVerdict::new(
        Condition::Ncc,
        Holds::InconclusiveAtK,
        ng.k_used,
        "no accumulation direction escaped, but the generator set kept growing",
    ))
}

// ---------------------------------------------------------------------------
// Inequality families and their subdifferential conditions

/// A countable system of inequality constraints `phi(x) <= 0`: each atom is
/// one indexed template; index-constant atoms contribute a single member.
#[derive(Clone, Debug)]
pub struct FunFamily {
    pub atoms: Vec<AtomFn>,
    pub policy: TruncationPolicy,
}

impl FunFamily {
    pub fn new(atoms: Vec<AtomFn>) -> Self {
        FunFamily { atoms, policy: TruncationPolicy::default() }
    }

    /// True when the system has finitely many distinct members.
    pub fn finite(&self) -> bool {
        self.atoms.iter().all(|a| a.is_constant_in_index())
    }

    pub(crate) fn scan_depth(&self) -> i64 {
        self.policy.k_init.max(8) + self.policy.window.max(1) + 8
    }

    pub(crate) fn dim(&self) -> Result<usize> {
        let n = self
            .atoms
            .first()
            .map(|a| a.n)
            .ok_or_else(|| ConeError::Malformed("empty constraint family".into()))?;
        for a in &self.atoms {
            if a.n != n {
                return Err(ConeError::DimensionMismatch { expected: n, got: a.n });
            }
        }
        Ok(n)
    }
}

struct SubdiffGens {
    gens: Vec<QVec>,
    stagnated: bool,
    k_used: i64,
    any_active: bool,
    /// Index of an active instance whose subdifferential contains zero
    /// (which by itself yields a nontrivial vanishing multiplier).
    zero_subgradient: Option<i64>,
}

fn collect_active_subdiff(fam: &FunFamily, x: &QVec) -> Result<SubdiffGens> {
    fam.dim()?;
    let depth_max = fam.scan_depth();
    let mut gens: Vec<QVec> = Vec::new();
    let mut last_growth = 0i64;
    let mut any_active = false;
    let mut zero_subgradient = None;
    let mut k_used = 1i64;
    for atom in &fam.atoms {
        let depth = if atom.is_constant_in_index() { 1 } else { depth_max };
        k_used = k_used.max(depth);
        for i in 1..=depth {
            let c = atom.instantiate(i)?;
            let v = c.value(x)?;
            if v.is_positive() {
                return Err(ConeError::HypothesisViolation(format!(
                    "reference point violates constraint instance i = {i}"
                )));
            }
            if !v.is_zero() {
                continue;
            }
            any_active = true;
            let sub = c.subdifferential(x, Flavor::Basic)?;
            let mut grew = false;
            for p in sub.points {
                if p.is_zero() {
                    zero_subgradient.get_or_insert(i);
                    continue;
                }
                grew |= push_ray(&mut gens, p);
            }
            if grew {
                last_growth = i;
            }
        }
    }
    let window = fam.policy.window.max(1);
    let stagnated = fam.finite() || (depth_max - last_growth) >= window;
    Ok(SubdiffGens { gens, stagnated, k_used, any_active, zero_subgradient })
}

pub(crate) struct CurveInfo {
    pub(crate) curves: Vec<IndexVec>,
    /// Every active piece of every indexed atom is active for all indices
    /// (value curve identically zero) or certified strictly inactive for all
    /// indices, with index-independent piece regions.
    pub(crate) fully_templated: bool,
}

pub(crate) fn active_gradient_curves(fam: &FunFamily, x: &QVec) -> Result<CurveInfo> {
    let mut curves = Vec::new();
    let mut fully_templated = true;
    for atom in &fam.atoms {
        if atom.is_constant_in_index() {
            continue; // single member, fully covered by the direct scan
        }
        for p in &atom.pieces {
            if !p.region.iter().all(|(a, b)| a.is_constant() && b.is_constant()) {
                fully_templated = false;
                continue;
            }
            let mut contains = true;
            for (a, b) in &p.region {
                if a.eval(1)?.dot(x) > b.eval(1)? {
                    contains = false;
                    break;
                }
            }
            if !contains {
                continue;
            }
            let v = piece_value_curve(p, x);
            if v.is_zero() {
                curves.push(piece_gradient_curve(p, x));
            } else if !positive_for_all_indices(&(-&v)) {
                // active at some indices only; not captured symbolically
                fully_templated = false;
            }
        }
    }
    Ok(CurveInfo { curves, fully_templated })
}

/// `phi_i(x)` for a fixed `x` as a polynomial in the index.
fn piece_value_curve(p: &PieceTemplate, x: &QVec) -> IndexPoly {
    let mut acc = p.cst.clone();
    for (j, l) in p.lin.coords.iter().enumerate() {
        acc = &acc + &(l * &IndexPoly::constant(x[j].clone()));
    }
    for (r, row) in p.quad.iter().enumerate() {
        for (c, q) in row.coords.iter().enumerate() {
            acc = &acc + &(q * &IndexPoly::constant(x[r].clone() * x[c].clone()));
        }
    }
    acc
}

/// `grad phi_i(x) = (Q(i) + Q(i)^T) x + lin(i)` coordinate-wise in the index.
fn piece_gradient_curve(p: &PieceTemplate, x: &QVec) -> IndexVec {
    let n = p.lin.dim();
    let mut coords = Vec::with_capacity(n);
    for j in 0..n {
        let mut acc = p.lin.coords[j].clone();
        for k in 0..n {
            let q_jk = &p.quad[j].coords[k];
            let q_kj = &p.quad[k].coords[j];
            acc = &acc + &(&(q_jk + q_kj) * &IndexPoly::constant(x[k].clone()));
        }
        coords.push(acc);
    }
    IndexVec::new(coords)
}

/// Subdifferential closedness condition: is the cone of active-constraint
/// subgradients (with complementary-slack multipliers) closed?
pub fn scc_check(fam: &FunFamily, x: &QVec) -> Result<QCVerdict> {
    let sg = collect_active_subdiff(fam, x)?;
    if !sg.any_active {
        return Ok(QCVerdict::new(
            Condition::Scc,
            Holds::Yes,
            sg.k_used,
            "no active members at the reference point",
        ));
    }
    if sg.gens.is_empty() {
        return Ok(QCVerdict::new(
            Condition::Scc,
            Holds::Yes,
            sg.k_used,
            "only zero subgradients: the hull is the origin",
        ));
    }
    let info = active_gradient_curves(fam, x)?;
    let mut candidates: Vec<QVec> = Vec::new();
    for c in &info.curves {
        if let Some(d) = c.limit_direction() {
            if !candidates.contains(&d) {
                candidates.push(d);
            }
        }
    }
    for d in &candidates {
        if conic_combination(&sg.gens, d).is_none() {
            return Ok(QCVerdict::new(
                Condition::Scc,
                Holds::No,
                sg.k_used,
                "accumulation direction of the active gradients lies outside the \
                 conic hull at the deepest scanned truncation",
            )
            .with_witness(d.clone()));
        }
    }
    if fam.finite() {
        return Ok(QCVerdict::new(
            Condition::Scc,
            Holds::Yes,
            sg.k_used,
            "finitely generated hull on the full finite family",
        ));
    }
    if info.fully_templated && info.curves.iter().all(|c| c.is_constant()) {
        return Ok(QCVerdict::new(
            Condition::Scc,
            Holds::Yes,
            sg.k_used,
            "index-constant active gradients: the hull is finitely generated",
        ));
    }
    if sg.stagnated {
        return Ok(QCVerdict::new(
            Condition::Scc,
            Holds::Yes,
            sg.k_used,
            "subgradient set stagnated to a polyhedral hull (semi-decision \
             beyond the scanned truncation)",
        ));
    }
    Ok(QCVerdict::new(
        Condition::Scc,
        Holds::InconclusiveAtK,
        sg.k_used,
        "no accumulation direction escaped, but the subgradient set kept growing",
    ))
}

/// Subdifferential qualification condition: no vanishing convex combination
/// of active-constraint subgradients. Requires local Lipschitz continuity of
/// the scanned instances.
pub fn sqc_check(fam: &FunFamily, x: &QVec) -> Result<QCVerdict> {
    let depth_max = fam.scan_depth();
    for atom in &fam.atoms {
        let depth = if atom.is_constant_in_index() { 1 } else { depth_max };
        for i in 1..=depth {
            if !atom.instantiate(i)?.lipschitz_near(x) {
                return Err(ConeError::Unsupported(
                    "constraint family is not locally Lipschitz at the reference \
                     point"
                        .into(),
                ));
            }
        }
    }
    let sg = collect_active_subdiff(fam, x)?;
    if let Some(i) = sg.zero_subgradient {
        let n = fam.dim()?;
        return Ok(QCVerdict::new(
            Condition::Sqc,
            Holds::No,
            sg.k_used,
            &format!("zero subgradient of active instance i = {i} vanishes on its own"),
        )
        .with_multipliers(vec![(Vector::zeros(n), int(1))]));
    }
    if !sg.any_active || sg.gens.is_empty() {
        return Ok(QCVerdict::new(
            Condition::Sqc,
            Holds::Yes,
            sg.k_used,
            "no active members at the reference point",
        ));
    }
    if let Some(mu) = vanishing_combination(&sg.gens) {
        let pairs = pack_pairs(&sg.gens, &mu);
        if verified_multipliers(&sg.gens, &mu).is_some() {
            return Ok(QCVerdict::new(
                Condition::Sqc,
                Holds::No,
                sg.k_used,
                "exact vanishing convex combination of active subgradients",
            )
            .with_multipliers(pairs));
        }
    }
    if fam.finite() {
        return Ok(QCVerdict::new(
            Condition::Sqc,
            Holds::Yes,
            sg.k_used,
            "multiplier system exactly infeasible on the full finite family",
        ));
    }
    let info = active_gradient_curves(fam, x)?;
    if info.fully_templated {
        let mut lp_targets = sg.gens.clone();
        for c in &info.curves {
            if let Some(d) = c.limit_direction() {
                push_ray(&mut lp_targets, d);
            }
        }
        if let Some(c) = separating_functional(&lp_targets) {
            if info.curves.iter().all(|cu| positive_for_all_indices(&dot_curve(&c, cu))) {
                return Ok(QCVerdict::new(
                    Condition::Sqc,
                    Holds::Yes,
                    sg.k_used,
                    "separating functional certified against every index",
                ));
            }
        }
    }
    if sg.stagnated {
        return Ok(QCVerdict::new(
            Condition::Sqc,
            Holds::Yes,
            sg.k_used,
            "subgradient set stagnated; infeasibility certified up to the \
             scanned truncation (semi-decision beyond it)",
        ));
    }
    Ok(QCVerdict::new(
        Condition::Sqc,
        Holds::InconclusiveAtK,
        sg.k_used,
        "multiplier system infeasible at the scanned truncation but the \
         subgradient set kept growing",
    ))
}

// ---------------------------------------------------------------------------
// FMCQ / CQC: closedness of the conjugate-epigraph cone

const CONJUGATE_SCAN_DEPTH: i64 = 12;

struct DualData {
    /// Sampled points of `⋃_i epi phi_i*` lifted to `R^n x R`.
    gens: Vec<QVec>,
    /// Symbolic accumulation directions of the per-grid-point curves.
    candidates: Vec<QVec>,
    k_used: i64,
}

fn dual_epigraph_data(fam: &FunFamily) -> Result<DualData> {
    let n = fam.dim()?;
    if !fam.atoms.iter().all(|a| a.convex) {
        return Err(ConeError::HypothesisViolation(
            "dual epigraph closedness requires convex constraint functions".into(),
        ));
    }
    let grid = dual_grid(n);
    let mut gens: Vec<QVec> = Vec::new();
    let mut candidates: Vec<QVec> = Vec::new();
    let mut k_used = 1i64;
    for atom in &fam.atoms {
        let depth = if atom.is_constant_in_index() { 1 } else { CONJUGATE_SCAN_DEPTH };
        k_used = k_used.max(depth);
        for lam in &grid {
            let mut vals: Vec<(i64, Rat)> = Vec::new();
            let mut finite_all = true;
            for i in 1..=depth {
                match atom.instantiate(i)?.conjugate_value(lam) {
                    Ok(ConjVal::Finite(v)) => {
                        // the epigraph point and a second point recording the
                        // vertical (epigraph) direction above it
                        push_ray(&mut gens, lam.push(v.clone()));
                        push_ray(&mut gens, lam.push(v.clone() + int(1)));
                        vals.push((i, v));
                    }
                    Ok(ConjVal::PlusInfinity) => finite_all = false,
                    Err(ConeError::Unsupported(_)) => finite_all = false,
                    Err(e) => return Err(e),
                }
            }
            if depth > 1 && finite_all {
                if let Some(p) = fit_index_poly(&vals) {
                    let coords: Vec<IndexPoly> = lam
                        .iter()
                        .map(|c| IndexPoly::constant(c.clone()))
                        .chain(std::iter::once(p))
                        .collect();
                    if let Some(d) = IndexVec::new(coords).limit_direction() {
                        if !candidates.contains(&d) {
                            candidates.push(d);
                        }
                    }
                }
            }
        }
    }
    Ok(DualData { gens, candidates, k_used })
}

fn dual_grid(n: usize) -> Vec<QVec> {
    let mut out = Vec::new();
    for d in grid_directions(n) {
        for s in [rat(1, 2), int(1), int(2)] {
            let v = d.scale(&s);
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}

/// Fits an index polynomial through exact sample values, trying exponent
/// ladders of increasing richness and verifying against the held-out
/// samples.
fn fit_index_poly(samples: &[(i64, Rat)]) -> Option<IndexPoly> {
    let ladders: [&[i64]; 5] =
        [&[0], &[-1, 0], &[-2, -1, 0], &[-1, 0, 1], &[-2, -1, 0, 1, 2]];
    'ladder: for exps in ladders {
        let m = exps.len();
        if samples.len() < m + 2 {
            continue;
        }
        let rows: Vec<QVec> = samples[..m]
            .iter()
            .map(|(i, _)| {
                Vector::new(
                    exps.iter()
                        .map(|&e| IndexPoly::monomial(e, int(1)).eval(*i).unwrap())
                        .collect(),
                )
            })
            .collect();
        let b = Vector::new(samples[..m].iter().map(|(_, v)| v.clone()).collect());
        let Some(coefs) = QMat::from_rows(rows, m).solve(&b) else {
            continue;
        };
        let mut p = IndexPoly::zero();
        for (&e, c) in exps.iter().zip(coefs.iter()) {
            p = &p + &IndexPoly::monomial(e, c.clone());
        }
        for (i, v) in samples {
            if p.eval(*i).ok()? != *v {
                continue 'ladder;
            }
        }
        return Some(p);
    }
    None
}

fn fam_affine_finite(fam: &FunFamily) -> bool {
    fam.finite()
        && fam.atoms.iter().all(|a| {
            a.pieces
                .iter()
                .all(|p| p.quad.iter().all(|r| r.coords.iter().all(|q| q.is_zero())))
        })
}

/// Farkas-Minkowski-type qualification: is `cone(⋃_i epi phi_i*)` closed?
pub fn fmcq_check(fam: &FunFamily) -> Result<QCVerdict> {
    let data = dual_epigraph_data(fam)?;
    for d in &data.candidates {
        if conic_combination(&data.gens, d).is_none() {
            return Ok(QCVerdict::new(
                Condition::Fmcq,
                Holds::No,
                data.k_used,
                "accumulation direction of the conjugate-epigraph curves lies \
                 outside the sampled dual cone at every truncation tested",
            )
            .with_witness(d.clone()));
        }
    }
    if fam_affine_finite(fam) {
        return Ok(QCVerdict::new(
            Condition::Fmcq,
            Holds::Yes,
            data.k_used,
            "finitely many affine constraints: the dual cone is polyhedral",
        ));
    }
    Ok(QCVerdict::new(
        Condition::Fmcq,
        Holds::InconclusiveAtK,
        data.k_used,
        "closedness not certified beyond the sampled dual grid",
    ))
}

/// Closedness qualification for a program `min phi` over the constraint
/// system: the dual cone of the constraints with `epi phi*` added.
pub fn cqc_check(objective: &ConcreteAtom, fam: &FunFamily) -> Result<QCVerdict> {
    let base = fmcq_check(fam)?;
    if base.holds == Holds::Yes {
        return Ok(QCVerdict::new(
            Condition::Cqc,
            Holds::Yes,
            base.k_used,
            "implied: the constraint dual cone is polyhedral and absorbing the \
             objective epigraph preserves closedness",
        ));
    }
    let mut data = dual_epigraph_data(fam)?;
    let n = fam.dim()?;
    if objective.n != n {
        return Err(ConeError::DimensionMismatch { expected: n, got: objective.n });
    }
    for lam in dual_grid(n) {
        match objective.conjugate_value(&lam) {
            Ok(ConjVal::Finite(v)) => {
                push_ray(&mut data.gens, lam.push(v.clone()));
                push_ray(&mut data.gens, lam.push(v + int(1)));
            }
            Ok(ConjVal::PlusInfinity) | Err(ConeError::Unsupported(_)) => {}
            Err(e) => return Err(e),
        }
    }
    for d in &data.candidates {
        if conic_combination(&data.gens, d).is_none() {
            return Ok(QCVerdict::new(
                Condition::Cqc,
                Holds::No,
                data.k_used,
                "accumulation direction of the conjugate-epigraph curves stays \
                 outside the sampled dual cone even with the objective epigraph \
                 added",
            )
            .with_witness(d.clone()));
        }
    }
    Ok(QCVerdict::new(
        Condition::Cqc,
        Holds::InconclusiveAtK,
        data.k_used,
        "closedness not certified beyond the sampled dual grid",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chip::{chip_check, ChipScope};
    use crate::family::halfspace_family;
    use crate::setexpr::{halfspace_set, parabola_epigraph, parabola_hypograph};

    fn origin2() -> QVec {
        Vector::zeros(2)
    }

    /// The linear system `phi_i(x) = x1 + i x2` as an inequality family.
    fn linear_atoms() -> FunFamily {
        let zero_quad = vec![IndexVec::new(vec![IndexPoly::zero(); 2]); 2];
        FunFamily::new(vec![AtomFn {
            n: 2,
            pieces: vec![PieceTemplate {
                region: Vec::new(),
                quad: zero_quad,
                lin: IndexVec::parse(&["1".into(), "i".into()]).unwrap(),
                cst: IndexPoly::zero(),
            }],
            convex: true,
            concave: true,
        }])
    }

    /// `phi_i(x) = i x1^2 - x2` for `x1 <= 0`, `-x2` for `x1 >= 0`; the level
    /// sets `{phi_i <= 0}` are exactly the epigraphs of the 1-D steepening
    /// parabolas.
    fn steepening_atoms() -> FunFamily {
        let pieces = vec![
            PieceTemplate {
                region: vec![(
                    IndexVec::parse(&["1".into(), "0".into()]).unwrap(),
                    IndexPoly::zero(),
                )],
                quad: vec![
                    IndexVec::parse(&["i".into(), "0".into()]).unwrap(),
                    IndexVec::parse(&["0".into(), "0".into()]).unwrap(),
                ],
                lin: IndexVec::parse(&["0".into(), "-1".into()]).unwrap(),
                cst: IndexPoly::zero(),
            },
            PieceTemplate {
                region: vec![(
                    IndexVec::parse(&["-1".into(), "0".into()]).unwrap(),
                    IndexPoly::zero(),
                )],
                quad: vec![
                    IndexVec::parse(&["0".into(), "0".into()]).unwrap(),
                    IndexVec::parse(&["0".into(), "0".into()]).unwrap(),
                ],
                lin: IndexVec::parse(&["0".into(), "-1".into()]).unwrap(),
                cst: IndexPoly::zero(),
            },
        ];
        FunFamily::new(vec![AtomFn { n: 2, pieces, convex: true, concave: false }])
    }

    /// Epigraph family of `phi_i(u) = i u^2 (u < 0), 0 (u >= 0)` — the same
    /// sets as the level sets of `steepening_atoms`.
    fn steepening_sets() -> IndexedFamily {
        let atom = AtomFn {
            n: 1,
            pieces: vec![
                PieceTemplate {
                    region: vec![(IndexVec::parse(&["1".into()]).unwrap(), IndexPoly::zero())],
                    quad: vec![IndexVec::parse(&["i".into()]).unwrap()],
                    lin: IndexVec::parse(&["0".into()]).unwrap(),
                    cst: IndexPoly::zero(),
                },
                PieceTemplate {
                    region: vec![(IndexVec::parse(&["-1".into()]).unwrap(), IndexPoly::zero())],
                    quad: vec![IndexVec::new(vec![IndexPoly::zero()])],
                    lin: IndexVec::parse(&["0".into()]).unwrap(),
                    cst: IndexPoly::zero(),
                },
            ],
            convex: true,
            concave: false,
        };
        IndexedFamily::new(FamilyTemplate::Epigraph(atom))
    }

    #[test]
    fn antipodal_halfspaces_fail_nqc_with_verified_multipliers() {
        let a = QVec::from_ints(&[1, 2]);
        let f = IndexedFamily::new(FamilyTemplate::List(vec![
            halfspace_set(a.clone()),
            halfspace_set(-&a),
        ]));
        let v = nqc_check(&f, &origin2()).unwrap();
        assert_eq!(v.holds, Holds::No);
        let mult = v.multipliers.unwrap();
        assert_eq!(mult.len(), 2);
        let mut sum = Vector::zeros(2);
        let mut total = Rat::zero();
        for (g, m) in &mult {
            assert!(m.is_positive());
            sum = &sum + &g.scale(m);
            total = total + m.clone();
        }
        assert!(sum.is_zero());
        assert_eq!(total, int(1));
    }

    #[test]
    fn orthant_pair_nqc_and_interior_point() {
        let f = IndexedFamily::new(FamilyTemplate::List(vec![
            halfspace_set(QVec::from_ints(&[1, 0])),
            halfspace_set(QVec::from_ints(&[0, 1])),
        ]));
        let nqc = nqc_check(&f, &origin2()).unwrap();
        assert_eq!(nqc.holds, Holds::Yes);
        let ip = interior_point_nqc(&f, &origin2()).unwrap();
        assert_eq!(ip.holds, Holds::Yes);
        let w = ip.witness.unwrap();
        assert!(w[0].is_negative() || w[1].is_negative());
        // sufficiency invariant: a successful interior point never coexists
        // with a multiplier refutation
        assert_ne!(nqc.holds, Holds::No);
    }

    #[test]
    fn steep_halfspace_family_certified_nqc() {
        let f = halfspace_family(IndexVec::parse(&["1".into(), "i".into()]).unwrap());
        let v = nqc_check(&f, &origin2()).unwrap();
        assert_eq!(v.holds, Holds::Yes);
        assert!(v.method.contains("certified"), "{}", v.method);
    }

    #[test]
    fn interior_point_template_certificate() {
        let f = halfspace_family(IndexVec::parse(&["1".into(), "i".into()]).unwrap());
        let v = interior_point_nqc(&f, &origin2()).unwrap();
        assert_eq!(v.holds, Holds::Yes);
        let w = v.witness.unwrap();
        // strict slack must hold at deep indices too
        assert!(w[0].is_negative());
        assert!(f.instantiate(1000).unwrap().member(&w).unwrap());
    }

    #[test]
    fn kissing_parabolas_interior_point_inconclusive() {
        let f = IndexedFamily::new(FamilyTemplate::List(vec![
            parabola_epigraph(int(1)),
            parabola_hypograph(int(1)),
        ]));
        let v = interior_point_nqc(&f, &origin2()).unwrap();
        assert_eq!(v.holds, Holds::InconclusiveAtK);
    }

    #[test]
    fn conic_variant_detects_antipodal_rays() {
        let up = ConvexPolyCone::ray(QVec::from_ints(&[0, 1]));
        let down = ConvexPolyCone::ray(QVec::from_ints(&[0, -1]));
        let v = conic_nqc_check(&[up.clone(), down]).unwrap();
        assert_eq!(v.holds, Holds::No);
        let right = ConvexPolyCone::ray(QVec::from_ints(&[1, 0]));
        let v2 = conic_nqc_check(&[up, right]).unwrap();
        assert_eq!(v2.holds, Holds::Yes);
    }

    #[test]
    fn finite_polyhedral_normals_are_closed() {
        let f = IndexedFamily::new(FamilyTemplate::List(vec![
            halfspace_set(QVec::from_ints(&[1, 0])),
            halfspace_set(QVec::from_ints(&[0, 1])),
        ]));
        let v = ncc_check(&f, &origin2()).unwrap();
        assert_eq!(v.holds, Holds::Yes);
    }

    #[test]
    fn rotating_halfspace_normals_are_not_closed() {
        let f = halfspace_family(IndexVec::parse(&["1".into(), "i".into()]).unwrap());
        let v = ncc_check(&f, &origin2()).unwrap();
        assert_eq!(v.holds, Holds::No);
        assert_eq!(v.witness.unwrap(), QVec::from_ints(&[0, 1]));
    }

    #[test]
    fn independence_of_tangential_and_subdifferential_verdicts() {
        let x = origin2();
        // linear system: tangential identity holds (conic family), but the
        // gradient directions accumulate outside their hull
        let lin_sets = halfspace_family(IndexVec::parse(&["1".into(), "i".into()]).unwrap());
        let lin_chip = chip_check(&lin_sets, &x, ChipScope::Limit).unwrap();
        assert_eq!(lin_chip.holds, Holds::Yes);
        let lin_scc = scc_check(&linear_atoms(), &x).unwrap();
        assert_eq!(lin_scc.holds, Holds::No);
        assert_eq!(lin_scc.witness.unwrap(), QVec::from_ints(&[0, 1]));
        // steepening system: constant gradients keep the hull closed, yet
        // the countable intersection loses tangent directions in the limit
        // while every finite truncation is fine
        let steep_scc = scc_check(&steepening_atoms(), &x).unwrap();
        assert_eq!(steep_scc.holds, Holds::Yes);
        let steep_sets = steepening_sets();
        let limit = chip_check(&steep_sets, &Vector::zeros(2), ChipScope::Limit).unwrap();
        assert_eq!(limit.holds, Holds::No);
        let trunc =
            chip_check(&steep_sets, &Vector::zeros(2), ChipScope::Truncations).unwrap();
        assert_eq!(trunc.holds, Holds::Yes);
    }

    #[test]
    fn opposite_affine_constraints_fail_sqc() {
        let a = QVec::from_ints(&[2, -1]);
        let fam = FunFamily::new(vec![
            AtomFn::affine(a.clone(), int(0)),
            AtomFn::affine(-&a, int(0)),
        ]);
        let v = sqc_check(&fam, &origin2()).unwrap();
        assert_eq!(v.holds, Holds::No);
        let mult = v.multipliers.unwrap();
        let mut sum = Vector::zeros(2);
        for (g, m) in &mult {
            sum = &sum + &g.scale(m);
        }
        assert!(sum.is_zero());
    }

    #[test]
    fn inactive_constraints_pass_sqc_vacuously() {
        let fam = FunFamily::new(vec![AtomFn::affine(QVec::from_ints(&[1, 0]), int(-1))]);
        let v = sqc_check(&fam, &origin2()).unwrap();
        assert_eq!(v.holds, Holds::Yes);
        assert!(v.method.contains("active"));
    }

    #[test]
    fn steepening_system_passes_sqc_symbolically() {
        let v = sqc_check(&steepening_atoms(), &origin2()).unwrap();
        assert_eq!(v.holds, Holds::Yes);
        assert!(v.method.contains("certified"), "{}", v.method);
    }

    #[test]
    fn infeasible_reference_point_is_a_hypothesis_violation() {
        let fam = linear_atoms();
        let err = scc_check(&fam, &QVec::from_ints(&[1, 1])).unwrap_err();
        assert!(matches!(err, ConeError::HypothesisViolation(_)));
    }

    #[test]
    fn affine_finite_family_satisfies_fmcq_and_cqc() {
        let fam = FunFamily::new(vec![
            AtomFn::affine(QVec::from_ints(&[1, 0]), int(0)),
            AtomFn::affine(QVec::from_ints(&[0, 1]), int(0)),
        ]);
        let fmcq = fmcq_check(&fam).unwrap();
        assert_eq!(fmcq.holds, Holds::Yes);
        // implication: FMCQ yes forces CQC yes regardless of the objective
        let objective = AtomFn::affine(QVec::from_ints(&[1, 1]), int(0))
            .instantiate(1)
            .unwrap();
        let cqc = cqc_check(&objective, &fam).unwrap();
        assert_eq!(cqc.holds, Holds::Yes);
    }

    #[test]
    fn steepening_system_fails_fmcq_and_cqc() {
        let fam = steepening_atoms();
        let fmcq = fmcq_check(&fam).unwrap();
        assert_eq!(fmcq.holds, Holds::No);
        // conjugates live on lambda_2 = -1 with values lambda_1^2 / (4i); the
        // curves flatten onto (lambda_1, -1, 0), which no finite conic
        // combination of sampled epigraph points can reach
        let w = fmcq.witness.unwrap();
        assert_eq!(w[1], int(-1));
        assert!(w[0].is_negative());
        assert!(w[2].is_zero());
        let objective = AtomFn::affine(QVec::from_ints(&[0, 1]), int(0))
            .instantiate(1)
            .unwrap();
        let cqc = cqc_check(&objective, &fam).unwrap();
        assert_eq!(cqc.holds, Holds::No);
        assert!(cqc.witness.is_some());
    }

    #[test]
    fn conjugate_curve_fitting_recovers_laurent_values() {
        let samples: Vec<(i64, Rat)> =
            (1..=10).map(|i| (i, rat(1, 4 * i) + int(2))).collect();
        let p = fit_index_poly(&samples).unwrap();
        assert_eq!(p.coeff(0), int(2));
        assert_eq!(p.coeff(-1), rat(1, 4));
        assert_eq!(p.eval(12).unwrap(), rat(1, 48) + int(2));
    }
}
