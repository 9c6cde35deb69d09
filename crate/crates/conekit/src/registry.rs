//! Built-in example registry: a fixed catalogue of worked instances with
//! stored expected verdicts. `run-all` recomputes every instance and
//! compares against the stored expectations, which makes the registry a
//! self-contained regression suite for the whole verdict pipeline.

use crate::atom::AtomFn;
use crate::certify::{
    extremal_certificate, pareto_check, pareto_necessary_cond, ExtremalOutcome,
    ParetoNotion, ParetoOutcome, ParetoProblem,
};
use crate::chip::{chip_check, ChipScope, Holds};
use crate::cone::{ConeRep, ConvexPolyCone};
use crate::error::{ConeError, Result};
use crate::family::{halfspace_family, FamilyTemplate, IndexedFamily};
use crate::indexpoly::{IndexPoly, IndexVec};
use crate::linalg::{QVec, Vector};
use crate::qualconds::{cqc_check, fmcq_check, scc_check, sqc_check, FunFamily};
use crate::scalar::{rat, Rat};
use crate::setexpr::{parabola_epigraph, parabola_hypograph, SetExpr};
use crate::varcalc::{coderivative, tangent_cone};
use num_traits::Zero;

/// One comparison of a recomputed verdict against its stored expectation.
#[derive(Clone, Debug)]
pub struct Check {
    pub label: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(label: &str, pass: bool, detail: impl Into<String>) -> Self {
        Check { label: label.into(), pass, detail: detail.into() }
    }
}

#[derive(Clone, Copy)]
pub struct RegistryEntry {
    pub id: &'static str,
    pub title: &'static str,
    /// Human-readable description of the instance data.
    pub template: &'static str,
    pub run: fn() -> Result<Vec<Check>>,
}

pub fn entries() -> Vec<RegistryEntry> {
    vec![
        RegistryEntry {
            id: "ex3.4i",
            title: "two parabolas meeting at a point",
            template: "Omega_1 = {x2 >= x1^2}, Omega_2 = {x2 <= -x1^2}; base point 0",
            run: run_parabola_pair,
        },
        RegistryEntry {
            id: "ex3.4ii",
            title: "one-sided steepening parabolas",
            template: "Omega_i = epi phi_i with phi_i(x) := i x^2 if x < 0, \
                       0 if x >= 0; base point 0",
            run: run_one_sided_parabolas,
        },
        RegistryEntry {
            id: "cor3.3",
            title: "linear countable constraint fan",
            template: "Omega = {<(1, i-1), x> <= 0, i in N}; base point 0",
            run: run_halfplane_fan,
        },
        RegistryEntry {
            id: "ex4.8i-lin",
            title: "linear inequality family with non-closed subgradient cone",
            template: "phi_i(x) = x1 + i x2; base point 0",
            run: run_linear_fan,
        },
        RegistryEntry {
            id: "ex4.8i-quad",
            title: "full steepening parabolas as inequality constraints",
            template: "phi_i(x) = i x1^2 - x2; base point 0",
            run: run_full_parabolas,
        },
        RegistryEntry {
            id: "ex4.8ii",
            title: "one-sided steepening inequality constraints",
            template: "phi_i(x) = i x1^2 - x2 if x1 < 0, -x2 if x1 >= 0; \
                       objective -x2; base point 0",
            run: run_steepening_constraints,
        },
        RegistryEntry {
            id: "extremal-quadrants",
            title: "four halfplanes meeting only at the origin",
            template: "Lambda_1 = {x2 >= 0}, Lambda_2 = {x2 <= 0}, \
                       Lambda_3 = {x1 >= 0}, Lambda_4 = {x1 <= 0}",
            run: run_quadrant_extremal,
        },
        RegistryEntry {
            id: "pareto-absgraph",
            title: "graph of the absolute value as a Pareto instance",
            template: "gph F = epi |x|, ordering cone R_+, no constraints; \
                       base point (0, 0)",
            run: run_abs_graph_pareto,
        },
    ]
}

pub fn entry(id: &str) -> Option<RegistryEntry> {
    entries().into_iter().find(|e| e.id == id)
}

pub fn run_entry(id: &str) -> Result<Vec<Check>> {
    let e = entry(id)
        .ok_or_else(|| ConeError::Malformed(format!("unknown registry entry `{id}`")))?;
    (e.run)()
}

/// Runs every entry and returns `(id, checks)` pairs ordered by entry name.
pub fn run_all() -> Result<Vec<(String, Vec<Check>)>> {
    let mut out: Vec<(String, Vec<Check>)> = Vec::new();
    for e in entries() {
        out.push((e.id.to_string(), (e.run)()?));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

pub fn mismatches(results: &[(String, Vec<Check>)]) -> usize {
    results.iter().flat_map(|(_, cs)| cs).filter(|c| !c.pass).count()
}

// ---------------------------------------------------------------------------
// Instance builders (shared with the integration suites)

fn v(coords: &[i64]) -> QVec {
    Vector::from_ints(coords)
}

fn iv(coords: &[&str]) -> IndexVec {
    IndexVec::parse(&coords.iter().map(|s| s.to_string()).collect::<Vec<_>>())
        .expect("static index template")
}

/// `Omega_1 = {x2 >= x1^2}`, `Omega_2 = {x2 <= -x1^2}` as a two-set family.
pub fn parabola_pair_family() -> IndexedFamily {
    IndexedFamily::new(FamilyTemplate::List(vec![
        parabola_epigraph(rat(1, 1)),
        parabola_hypograph(rat(1, 1)),
    ]))
}

/// One-sided parabola atom `phi_i(x) = i x^2` for `x <= 0`, `0` for `x >= 0`.
fn one_sided_parabola_atom() -> AtomFn {
    AtomFn {
        n: 1,
        pieces: vec![
            crate::atom::PieceTemplate {
                region: vec![(iv(&["1"]), IndexPoly::zero())],
                quad: vec![iv(&["i"])],
                lin: iv(&["0"]),
                cst: IndexPoly::zero(),
            },
            crate::atom::PieceTemplate {
                region: vec![(iv(&["-1"]), IndexPoly::zero())],
                quad: vec![iv(&["0"])],
                lin: iv(&["0"]),
                cst: IndexPoly::zero(),
            },
        ],
        convex: true,
        concave: false,
    }
}

/// Epigraphs of the one-sided steepening parabolas.
pub fn one_sided_parabola_family() -> IndexedFamily {
    IndexedFamily::new(FamilyTemplate::Epigraph(one_sided_parabola_atom()))
}

/// The halfspace fan `{<(1, i-1), x> <= 0}`.
pub fn halfplane_fan_family() -> IndexedFamily {
    halfspace_family(iv(&["1", "i-1"]))
}

/// `phi_i(x) = x1 + i x2` as an inequality family.
pub fn linear_fan_funfamily() -> FunFamily {
    FunFamily::new(vec![AtomFn {
        n: 2,
        pieces: vec![crate::atom::PieceTemplate {
            region: Vec::new(),
            quad: vec![iv(&["0", "0"]), iv(&["0", "0"])],
            lin: iv(&["1", "i"]),
            cst: IndexPoly::zero(),
        }],
        convex: true,
        concave: true,
    }])
}

/// `phi_i(x) = i x1^2 - x2` as an inequality family.
pub fn full_parabola_funfamily() -> FunFamily {
    FunFamily::new(vec![AtomFn {
        n: 2,
        pieces: vec![crate::atom::PieceTemplate {
            region: Vec::new(),
            quad: vec![iv(&["i", "0"]), iv(&["0", "0"])],
            lin: iv(&["0", "-1"]),
            cst: IndexPoly::zero(),
        }],
        convex: true,
        concave: false,
    }])
}

/// Epigraphs of the full steepening parabolas `i x1^2`.
pub fn full_parabola_family() -> IndexedFamily {
    IndexedFamily::new(FamilyTemplate::Epigraph(AtomFn {
        n: 1,
        pieces: vec![crate::atom::PieceTemplate {
            region: Vec::new(),
            quad: vec![iv(&["i"])],
            lin: iv(&["0"]),
            cst: IndexPoly::zero(),
        }],
        convex: true,
        concave: false,
    }))
}

/// `phi_i(x) = i x1^2 - x2` for `x1 <= 0`, `-x2` for `x1 >= 0`.
pub fn steepening_funfamily() -> FunFamily {
    FunFamily::new(vec![AtomFn {
        n: 2,
        pieces: vec![
            crate::atom::PieceTemplate {
                region: vec![(iv(&["1", "0"]), IndexPoly::zero())],
                quad: vec![iv(&["i", "0"]), iv(&["0", "0"])],
                lin: iv(&["0", "-1"]),
                cst: IndexPoly::zero(),
            },
            crate::atom::PieceTemplate {
                region: vec![(iv(&["-1", "0"]), IndexPoly::zero())],
                quad: vec![iv(&["0", "0"]), iv(&["0", "0"])],
                lin: iv(&["0", "-1"]),
                cst: IndexPoly::zero(),
            },
        ],
        convex: true,
        concave: false,
    }])
}

/// Level-set family of [`steepening_funfamily`].
pub fn steepening_level_family() -> IndexedFamily {
    IndexedFamily::new(FamilyTemplate::LevelSet(
        steepening_funfamily().atoms[0].clone(),
    ))
}

/// Four halfplanes whose intersection is the origin.
pub fn quadrant_cones() -> Vec<ConvexPolyCone> {
    vec![
        ConvexPolyCone::halfspace(v(&[0, -1])),
        ConvexPolyCone::halfspace(v(&[0, 1])),
        ConvexPolyCone::halfspace(v(&[-1, 0])),
        ConvexPolyCone::halfspace(v(&[1, 0])),
    ]
}

/// The absolute-value graph as an unconstrained Pareto instance.
pub fn abs_graph_pareto() -> ParetoProblem {
    let abs = AtomFn {
        n: 1,
        pieces: vec![
            crate::atom::PieceTemplate {
                region: vec![(iv(&["1"]), IndexPoly::zero())],
                quad: vec![iv(&["0"])],
                lin: iv(&["-1"]),
                cst: IndexPoly::zero(),
            },
            crate::atom::PieceTemplate {
                region: vec![(iv(&["-1"]), IndexPoly::zero())],
                quad: vec![iv(&["0"])],
                lin: iv(&["1"]),
                cst: IndexPoly::zero(),
            },
        ],
        convex: true,
        concave: false,
    };
    ParetoProblem {
        graph: SetExpr::Epigraph(abs.instantiate(1).expect("static atom")),
        domain_dim: 1,
        theta: ConvexPolyCone::ray(v(&[1])),
        constraints: None,
    }
}

/// Geometric families with base points, for the cross-checking suites.
pub fn geometric_families() -> Vec<(&'static str, IndexedFamily, QVec)> {
    vec![
        ("ex3.4i", parabola_pair_family(), Vector::zeros(2)),
        ("ex3.4ii", one_sided_parabola_family(), Vector::zeros(2)),
        ("cor3.3", halfplane_fan_family(), Vector::zeros(2)),
        ("ex4.8i-quad", full_parabola_family(), Vector::zeros(2)),
        ("ex4.8ii", steepening_level_family(), Vector::zeros(2)),
    ]
}

// ---------------------------------------------------------------------------
// Expected-verdict runners

fn upper_halfplane() -> Result<ConeRep> {
    Ok(ConeRep::from_pieces(vec![ConvexPolyCone::halfspace(v(&[0, -1]))])?)
}

fn lower_halfplane() -> Result<ConeRep> {
    Ok(ConeRep::from_pieces(vec![ConvexPolyCone::halfspace(v(&[0, 1]))])?)
}

fn first_quadrant() -> Result<ConvexPolyCone> {
    ConvexPolyCone::from_rays(2, vec![v(&[1, 0]), v(&[0, 1])])
}

fn cone_check(label: &str, got: &ConeRep, want: &ConeRep) -> Result<Check> {
    let pass = got.equal(want)?;
    Ok(Check::new(label, pass, format!("computed {} generators", got.pieces.len())))
}

fn run_parabola_pair() -> Result<Vec<Check>> {
    let fam = parabola_pair_family();
    let x = Vector::zeros(2);
    let mut checks = Vec::new();
    let t1 = tangent_cone(&fam.instantiate(1)?, &x)?;
    checks.push(cone_check("tangent of the upper parabola is R x R+", &t1.cone, &upper_halfplane()?)?);
    let t2 = tangent_cone(&fam.instantiate(2)?, &x)?;
    checks.push(cone_check("tangent of the lower parabola is R x R-", &t2.cone, &lower_halfplane()?)?);
    let inter = fam.truncated_intersection(2)?;
    let ti = tangent_cone(&inter, &x)?;
    checks.push(Check::new(
        "tangent of the intersection is the origin",
        ti.cone.is_origin_only()?,
        format!("{:?}", ti.method),
    ));
    let chip = chip_check(&fam, &x, ChipScope::Truncations)?;
    let horiz = chip
        .witness
        .as_ref()
        .map(|w| w.dim() == 2 && w[1].is_zero() && !w[0].is_zero())
        .unwrap_or(false);
    checks.push(Check::new(
        "chip fails with a horizontal witness direction",
        chip.holds == Holds::No && horiz,
        chip.method,
    ));
    Ok(checks)
}

fn run_one_sided_parabolas() -> Result<Vec<Check>> {
    let fam = one_sided_parabola_family();
    let x = Vector::zeros(2);
    let mut checks = Vec::new();
    let mut tangents_ok = true;
    for i in 1..=8 {
        let t = tangent_cone(&fam.instantiate(i)?, &x)?;
        tangents_ok &= t.cone.equal(&upper_halfplane()?)?;
    }
    checks.push(Check::new(
        "every member tangent is R x R+",
        tangents_ok,
        "checked i = 1..8",
    ));
    let chip = chip_check(&fam, &x, ChipScope::Limit)?;
    checks.push(Check::new(
        "chip fails for the countable intersection",
        chip.holds == Holds::No,
        chip.method,
    ));
    Ok(checks)
}

fn run_halfplane_fan() -> Result<Vec<Check>> {
    let fam = halfplane_fan_family();
    let x = Vector::zeros(2);
    let mut checks = Vec::new();
    let mut gens: Vec<QVec> = (1..=64)
        .map(|i| v(&[1, i - 1]))
        .collect();
    gens.push(v(&[0, 1]));
    let hull = ConvexPolyCone::from_rays(2, gens)?;
    checks.push(Check::new(
        "normal hull with its accumulation ray is the first quadrant",
        hull.equal(&first_quadrant()?)?,
        "scanned i = 1..64 plus the limit ray (0, 1)",
    ));
    let chip = chip_check(&fam, &x, ChipScope::Truncations)?;
    checks.push(Check::new(
        "chip holds at every truncation",
        chip.holds == Holds::Yes,
        chip.method,
    ));
    Ok(checks)
}

fn run_linear_fan() -> Result<Vec<Check>> {
    let fam = linear_fan_funfamily();
    let x = Vector::zeros(2);
    let mut checks = Vec::new();
    let chip = chip_check(&halfspace_family(iv(&["1", "i"])), &x, ChipScope::Truncations)?;
    checks.push(Check::new("chip holds", chip.holds == Holds::Yes, chip.method));
    let scc = scc_check(&fam, &x)?;
    let vertical = scc
        .witness
        .as_ref()
        .map(|w| w.dim() == 2 && w[0].is_zero() && !w[1].is_zero())
        .unwrap_or(false);
    checks.push(Check::new(
        "scc fails with the vertical escape direction",
        scc.holds == Holds::No && vertical,
        scc.method,
    ));
    Ok(checks)
}

fn run_full_parabolas() -> Result<Vec<Check>> {
    let fam = full_parabola_funfamily();
    let x = Vector::zeros(2);
    let mut checks = Vec::new();
    let chip = chip_check(&full_parabola_family(), &x, ChipScope::Limit)?;
    checks.push(Check::new(
        "chip fails for the countable intersection",
        chip.holds == Holds::No,
        chip.method,
    ));
    let scc = scc_check(&fam, &x)?;
    checks.push(Check::new("scc holds", scc.holds == Holds::Yes, scc.method));
    Ok(checks)
}

fn run_steepening_constraints() -> Result<Vec<Check>> {
    let fam = steepening_funfamily();
    let x = Vector::zeros(2);
    let mut checks = Vec::new();
    let chip = chip_check(&steepening_level_family(), &x, ChipScope::Truncations)?;
    checks.push(Check::new("chip holds", chip.holds == Holds::Yes, chip.method));
    let scc = scc_check(&fam, &x)?;
    checks.push(Check::new("scc holds", scc.holds == Holds::Yes, scc.method));
    let sqc = sqc_check(&fam, &x)?;
    checks.push(Check::new("sqc holds", sqc.holds == Holds::Yes, sqc.method));
    let fmcq = fmcq_check(&fam)?;
    checks.push(Check::new("fmcq fails", fmcq.holds == Holds::No, fmcq.method));
    let objective = AtomFn::affine(v(&[0, -1]), Rat::zero()).instantiate(1)?;
    let cqc = cqc_check(&objective, &fam)?;
    checks.push(Check::new("cqc fails", cqc.holds == Holds::No, cqc.method));
    Ok(checks)
}

fn run_quadrant_extremal() -> Result<Vec<Check>> {
    let cones = quadrant_cones();
    let mut checks = Vec::new();
    match extremal_certificate(&cones)? {
        ExtremalOutcome::Certificate(cert) => {
            checks.push(Check::new(
                "certificate re-verifies",
                cert.verify(&cones)?,
                format!("k_used = {}", cert.k_used),
            ));
            checks.push(Check::new(
                "normals match the stored pair",
                cert.normals[0] == v(&[0, -1])
                    && cert.normals[1] == v(&[0, 2])
                    && cert.normals[2].is_zero()
                    && cert.normals[3].is_zero(),
                format!("scale_sq = {}", cert.scale_sq),
            ));
            checks.push(Check::new(
                "normalization constant is 2/3",
                cert.scale_sq == rat(2, 3),
                String::new(),
            ));
            checks.push(Check::new(
                "a bounded shift witness exists",
                cert.shifts.is_some(),
                String::new(),
            ));
        }
        ExtremalOutcome::NotFound { diagnostic, .. } => {
            checks.push(Check::new("certificate found", false, diagnostic));
        }
    }
    Ok(checks)
}

fn run_abs_graph_pareto() -> Result<Vec<Check>> {
    let p = abs_graph_pareto();
    let xy = Vector::zeros(2);
    let mut checks = Vec::new();
    for (notion, label) in [
        (ParetoNotion::TangentialGraphical, "tangentially minimal"),
        (ParetoNotion::Graphical, "graphically minimal"),
        (ParetoNotion::FullyLocalized, "fully localized minimal"),
    ] {
        let verdict = pareto_check(&p, &xy, notion)?;
        checks.push(Check::new(label, verdict.holds && verdict.exact, verdict.method));
    }
    let zero_slices = coderivative(&p.graph, &xy, 1, &Vector::zeros(1))?;
    let trivial = zero_slices.iter().try_fold(true, |acc, s| -> Result<bool> {
        Ok(acc && s.member(&v(&[0]))? && !s.member(&v(&[1]))? && !s.member(&v(&[-1]))?)
    })?;
    checks.push(Check::new(
        "coderivative at the zero direction is trivial",
        trivial,
        format!("{} slice(s)", zero_slices.len()),
    ));
    match pareto_necessary_cond(&p, &xy)? {
        ParetoOutcome::Certificate(cert) => {
            checks.push(Check::new(
                "necessary condition certificate with y* = 1 and zero residual",
                cert.y_star == v(&[1])
                    && cert.residual.is_zero()
                    && cert.decomposition.is_empty()
                    && cert.verify(&p, &xy)?,
                cert.method,
            ));
        }
        ParetoOutcome::NotFound { diagnostic, .. } => {
            checks.push(Check::new("necessary condition certificate", false, diagnostic));
        }
    }
    Ok(checks)
}
