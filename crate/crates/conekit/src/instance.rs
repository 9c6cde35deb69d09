//! Versioned JSON instance documents: named atoms, sets, families, cones,
//! and problems, resolved into the in-memory types the verdict layer
//! consumes. Rational literals are strings of the form `p/q` (or `p`);
//! index-dependent entries are template strings over `i`.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::atom::{AtomFn, ConcreteAtom, PieceTemplate};
use crate::certify::{ParetoProblem, SipConstraints, SipMode};
use crate::cone::ConvexPolyCone;
use crate::error::{ConeError, Result};
use crate::family::{FamilyTemplate, IndexedFamily, TruncationPolicy};
use crate::indexpoly::{IndexPoly, IndexVec};
use crate::linalg::{QMat, QVec, Vector};
use crate::polyhedron::Polyhedron;
use crate::qualconds::FunFamily;
use crate::scalar::Rat;
use crate::setexpr::SetExpr;

pub const SCHEMA: &str = "conekit-instance/1";

fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let parts: Vec<&str> = s.split('/').collect();
    let bad = || ConeError::Malformed(format!("rational literal `{s}` must be p or p/q"));
    match parts.as_slice() {
        [p] => p.parse::<Rat>().map_err(|_| bad()),
        [p, q] => {
            let num = p.trim().parse::<num_bigint::BigInt>().map_err(|_| bad())?;
            let den = q.trim().parse::<num_bigint::BigInt>().map_err(|_| bad())?;
            if den == num_bigint::BigInt::from(0) {
                return Err(bad());
            }
            Ok(Rat::new(num, den))
        }
        _ => Err(bad()),
    }
}

fn parse_qvec(coords: &[String]) -> Result<QVec> {
    Ok(Vector::new(
        coords.iter().map(|c| parse_rat(c)).collect::<Result<Vec<_>>>()?,
    ))
}

fn parse_poly_row(p: &str) -> Result<IndexPoly> {
    IndexPoly::parse(p)
}

fn parse_index_vec(coords: &[String]) -> Result<IndexVec> {
    IndexVec::parse(coords)
}

// ---------------------------------------------------------------------------
// Raw document shapes

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub schema: String,
    #[serde(default)]
    pub atoms: BTreeMap<String, AtomDoc>,
    #[serde(default)]
    pub sets: BTreeMap<String, SetDoc>,
    #[serde(default)]
    pub families: BTreeMap<String, FamilyDoc>,
    #[serde(default)]
    pub fun_families: BTreeMap<String, FunFamilyDoc>,
    #[serde(default)]
    pub cones: BTreeMap<String, ConeDoc>,
    #[serde(default)]
    pub cone_systems: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub problems: BTreeMap<String, ProblemDoc>,
    #[serde(default)]
    pub base_point: Option<Vec<String>>,
    #[serde(default)]
    pub truncation: Option<PolicyDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyDoc {
    pub k_init: Option<i64>,
    pub k_max: Option<i64>,
    pub window: Option<i64>,
}

impl PolicyDoc {
    fn apply(&self, mut p: TruncationPolicy) -> TruncationPolicy {
        if let Some(k) = self.k_init {
            p.k_init = k;
        }
        if let Some(k) = self.k_max {
            p.k_max = k;
        }
        if let Some(w) = self.window {
            p.window = w;
        }
        p
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomDoc {
    pub n: usize,
    #[serde(default)]
    pub convex: bool,
    #[serde(default)]
    pub concave: bool,
    pub pieces: Vec<PieceDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceDoc {
    /// Region rows `<coeffs(i), x> <= rhs(i)`; template strings over `i`.
    #[serde(default)]
    pub region: Vec<RowDoc>,
    pub quad: Vec<Vec<String>>,
    pub lin: Vec<String>,
    #[serde(default = "zero_literal")]
    pub cst: String,
}

fn zero_literal() -> String {
    "0".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowDoc {
    pub coeffs: Vec<String>,
    #[serde(default = "zero_literal")]
    pub rhs: String,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetDoc {
    Poly { rows: Vec<Vec<String>>, rhs: Vec<String> },
    Halfspace { normal: Vec<String>, rhs: String },
    LevelSet { atom: String, #[serde(default = "one")] index: i64 },
    Epigraph { atom: String, #[serde(default = "one")] index: i64 },
    ComplementOfOpenConvex { rows: Vec<Vec<String>>, rhs: Vec<String> },
    Union { members: Vec<String> },
    Intersection { members: Vec<String> },
}

fn one() -> i64 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDoc {
    pub template: FamilyTemplateDoc,
    #[serde(default)]
    pub policy: Option<PolicyDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTemplateDoc {
    Polyhedral { rows: Vec<RowDoc> },
    Epigraph { atom: String },
    LevelSet { atom: String },
    Constant { set: String },
    List { sets: Vec<String> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunFamilyDoc {
    pub atoms: Vec<String>,
    #[serde(default)]
    pub policy: Option<PolicyDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeDoc {
    Rays(Vec<Vec<String>>),
    Ineqs { dim: usize, rows: Vec<Vec<String>> },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemDoc {
    Sip {
        /// Atom name for the objective; instantiated at `objective_index`.
        objective: String,
        #[serde(default = "one")]
        objective_index: i64,
        constraints: SipConstraintDoc,
        mode: String,
    },
    Pareto {
        graph: String,
        domain_dim: usize,
        theta: String,
        #[serde(default)]
        constraints: Option<String>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SipConstraintDoc {
    Inequality { fun_family: String },
    Geometric { family: String },
    Operator { rows: Vec<Vec<String>>, offset: Vec<String>, targets: String },
}

// ---------------------------------------------------------------------------
// Resolved instance

#[derive(Debug)]
pub enum Problem {
    Sip { objective: ConcreteAtom, constraints: SipConstraints, mode: SipMode },
    Pareto(ParetoProblem),
}

#[derive(Debug)]
pub struct Instance {
    pub atoms: BTreeMap<String, AtomFn>,
    pub sets: BTreeMap<String, SetExpr>,
    pub families: BTreeMap<String, IndexedFamily>,
    pub fun_families: BTreeMap<String, FunFamily>,
    pub cones: BTreeMap<String, ConvexPolyCone>,
    pub cone_systems: BTreeMap<String, Vec<ConvexPolyCone>>,
    pub problems: BTreeMap<String, Problem>,
    pub base_point: Option<QVec>,
}

impl Instance {
    pub fn from_str(text: &str) -> Result<Instance> {
        let doc: InstanceDoc = serde_json::from_str(text)
            .map_err(|e| ConeError::Malformed(format!("instance parse error: {e}")))?;
        resolve(doc)
    }

    pub fn load(path: &std::path::Path) -> Result<Instance> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConeError::Malformed(format!("cannot read {}: {e}", path.display()))
        })?;
        Instance::from_str(&text)
    }

    pub fn base_point(&self) -> Result<QVec> {
        self.base_point
            .clone()
            .ok_or_else(|| ConeError::Malformed("instance declares no base point".into()))
    }

    /// Applies a truncation depth override to every family policy.
    pub fn override_truncate(&mut self, k: i64) {
        for f in self.families.values_mut() {
            f.policy.k_init = k;
        }
        for f in self.fun_families.values_mut() {
            f.policy.k_init = k;
        }
        for p in self.problems.values_mut() {
            match p {
                Problem::Sip { constraints, .. } => match constraints {
                    SipConstraints::Geometric(f) => f.policy.k_init = k,
                    SipConstraints::Operator { targets, .. } => targets.policy.k_init = k,
                    SipConstraints::Inequality(f) => f.policy.k_init = k,
                },
                Problem::Pareto(p) => {
                    if let Some(f) = &mut p.constraints {
                        f.policy.k_init = k;
                    }
                }
            }
        }
    }

    /// Applies a hard cap on the truncation depth to every family policy.
    pub fn override_k_max(&mut self, k: i64) {
        for f in self.families.values_mut() {
            f.policy.k_max = k;
        }
        for f in self.fun_families.values_mut() {
            f.policy.k_max = k;
        }
        for p in self.problems.values_mut() {
            match p {
                Problem::Sip { constraints, .. } => match constraints {
                    SipConstraints::Geometric(f) => f.policy.k_max = k,
                    SipConstraints::Operator { targets, .. } => targets.policy.k_max = k,
                    SipConstraints::Inequality(f) => f.policy.k_max = k,
                },
                Problem::Pareto(p) => {
                    if let Some(f) = &mut p.constraints {
                        f.policy.k_max = k;
                    }
                }
            }
        }
    }
}

fn missing(kind: &str, name: &str) -> ConeError {
    ConeError::Malformed(format!("unresolved reference: {kind} `{name}`"))
}

fn resolve_atom(doc: &AtomDoc) -> Result<AtomFn> {
    let mut pieces = Vec::new();
    for p in &doc.pieces {
        if p.lin.len() != doc.n {
            return Err(ConeError::DimensionMismatch {
                expected: doc.n,
                got: p.lin.len(),
            });
        }
        let mut region = Vec::new();
        for r in &p.region {
            region.push((parse_index_vec(&r.coeffs)?, parse_poly_row(&r.rhs)?));
        }
        let quad = p
            .quad
            .iter()
            .map(|row| parse_index_vec(row))
            .collect::<Result<Vec<_>>>()?;
        pieces.push(PieceTemplate {
            region,
            quad,
            lin: parse_index_vec(&p.lin)?,
            cst: parse_poly_row(&p.cst)?,
        });
    }
    Ok(AtomFn { n: doc.n, pieces, convex: doc.convex, concave: doc.concave })
}

fn resolve_poly(rows: &[Vec<String>], rhs: &[String]) -> Result<Polyhedron> {
    if rows.len() != rhs.len() {
        return Err(ConeError::Malformed("rows and rhs lengths differ".into()));
    }
    let dim = rows.first().map(|r| r.len()).unwrap_or(0);
    let rows = rows.iter().map(|r| parse_qvec(r)).collect::<Result<Vec<_>>>()?;
    let rhs = rhs.iter().map(|b| parse_rat(b)).collect::<Result<Vec<_>>>()?;
    Polyhedron::new(rows, rhs, dim)
}

fn resolve_set(
    doc: &SetDoc,
    atoms: &BTreeMap<String, AtomFn>,
    resolved: &BTreeMap<String, SetExpr>,
) -> Result<SetExpr> {
    let instantiate = |name: &str, index: i64| -> Result<ConcreteAtom> {
        atoms.get(name).ok_or_else(|| missing("atom", name))?.instantiate(index)
    };
    let members = |names: &[String]| -> Result<Vec<SetExpr>> {
        names
            .iter()
            .map(|n| resolved.get(n).cloned().ok_or_else(|| missing("set", n)))
            .collect()
    };
    Ok(match doc {
        SetDoc::Poly { rows, rhs } => SetExpr::Poly(resolve_poly(rows, rhs)?),
        SetDoc::Halfspace { normal, rhs } => {
            SetExpr::Poly(Polyhedron::halfspace(parse_qvec(normal)?, parse_rat(rhs)?))
        }
        SetDoc::LevelSet { atom, index } => SetExpr::LevelSet(instantiate(atom, *index)?),
        SetDoc::Epigraph { atom, index } => SetExpr::Epigraph(instantiate(atom, *index)?),
        SetDoc::ComplementOfOpenConvex { rows, rhs } => {
            SetExpr::ComplementOfOpenConvex(resolve_poly(rows, rhs)?)
        }
        SetDoc::Union { members: names } => SetExpr::FiniteUnion(members(names)?),
        SetDoc::Intersection { members: names } => {
            SetExpr::TruncatedIntersection(members(names)?)
        }
    })
}

fn resolve(doc: InstanceDoc) -> Result<Instance> {
    if doc.schema != SCHEMA {
        return Err(ConeError::Malformed(format!(
            "unsupported schema `{}` (expected `{SCHEMA}`)",
            doc.schema
        )));
    }
    let base_policy = doc
        .truncation
        .as_ref()
        .map(|p| p.apply(TruncationPolicy::default()))
        .unwrap_or_default();

    let mut atoms = BTreeMap::new();
    for (name, a) in &doc.atoms {
        atoms.insert(name.clone(), resolve_atom(a)?);
    }

    // sets may reference earlier sets (unions/intersections); resolve in a
    // fixed-point loop so declaration order does not matter
    let mut sets: BTreeMap<String, SetExpr> = BTreeMap::new();
    let mut pending: Vec<(&String, &SetDoc)> = doc.sets.iter().collect();
    loop {
        let before = pending.len();
        let mut next = Vec::new();
        for (name, sd) in pending {
            match resolve_set(sd, &atoms, &sets) {
                Ok(s) => {
                    sets.insert(name.clone(), s);
                }
                Err(ConeError::Malformed(msg)) if msg.contains("unresolved reference") => {
                    next.push((name, sd));
                }
                Err(e) => return Err(e),
            }
        }
        if next.is_empty() {
            break;
        }
        if next.len() == before {
            // no progress: surface the underlying unresolved reference
            return Err(resolve_set(next[0].1, &atoms, &sets).unwrap_err());
        }
        pending = next;
    }

    let mut families = BTreeMap::new();
    for (name, fd) in &doc.families {
        let template = match &fd.template {
            FamilyTemplateDoc::Polyhedral { rows } => FamilyTemplate::Polyhedral {
                rows: rows
                    .iter()
                    .map(|r| Ok((parse_index_vec(&r.coeffs)?, parse_poly_row(&r.rhs)?)))
                    .collect::<Result<Vec<_>>>()?,
            },
            FamilyTemplateDoc::Epigraph { atom } => FamilyTemplate::Epigraph(
                atoms.get(atom).ok_or_else(|| missing("atom", atom))?.clone(),
            ),
            FamilyTemplateDoc::LevelSet { atom } => FamilyTemplate::LevelSet(
                atoms.get(atom).ok_or_else(|| missing("atom", atom))?.clone(),
            ),
            FamilyTemplateDoc::Constant { set } => FamilyTemplate::Constant(Box::new(
                sets.get(set).ok_or_else(|| missing("set", set))?.clone(),
            )),
            FamilyTemplateDoc::List { sets: names } => FamilyTemplate::List(
                names
                    .iter()
                    .map(|n| sets.get(n).cloned().ok_or_else(|| missing("set", n)))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        let policy = fd
            .policy
            .as_ref()
            .map(|p| p.apply(base_policy))
            .unwrap_or(base_policy);
        families.insert(
            name.clone(),
            IndexedFamily::new(template).with_policy(policy),
        );
    }

    let mut fun_families = BTreeMap::new();
    for (name, fd) in &doc.fun_families {
        let fam_atoms = fd
            .atoms
            .iter()
            .map(|n| atoms.get(n).cloned().ok_or_else(|| missing("atom", n)))
            .collect::<Result<Vec<_>>>()?;
        let mut fam = FunFamily::new(fam_atoms);
        fam.policy = fd
            .policy
            .as_ref()
            .map(|p| p.apply(base_policy))
            .unwrap_or(base_policy);
        fun_families.insert(name.clone(), fam);
    }

    let mut cones = BTreeMap::new();
    for (name, cd) in &doc.cones {
        let cone = match cd {
            ConeDoc::Rays(rays) => {
                let rays = rays.iter().map(|r| parse_qvec(r)).collect::<Result<Vec<_>>>()?;
                let dim = rays
                    .first()
                    .map(|r| r.dim())
                    .ok_or_else(|| ConeError::Malformed("cone with no rays".into()))?;
                ConvexPolyCone::from_rays(dim, rays)?
            }
            ConeDoc::Ineqs { dim, rows } => {
                let rows = rows.iter().map(|r| parse_qvec(r)).collect::<Result<Vec<_>>>()?;
                ConvexPolyCone::from_ineqs(*dim, rows)?
            }
        };
        cones.insert(name.clone(), cone);
    }

    let mut cone_systems = BTreeMap::new();
    for (name, names) in &doc.cone_systems {
        let system = names
            .iter()
            .map(|n| cones.get(n).cloned().ok_or_else(|| missing("cone", n)))
            .collect::<Result<Vec<_>>>()?;
        cone_systems.insert(name.clone(), system);
    }

    let mut problems = BTreeMap::new();
    for (name, pd) in &doc.problems {
        let problem = match pd {
            ProblemDoc::Sip { objective, objective_index, constraints, mode } => {
                let objective = atoms
                    .get(objective)
                    .ok_or_else(|| missing("atom", objective))?
                    .instantiate(*objective_index)?;
                let constraints = match constraints {
                    SipConstraintDoc::Inequality { fun_family } => {
                        SipConstraints::Inequality(
                            fun_families
                                .get(fun_family)
                                .cloned()
                                .ok_or_else(|| missing("fun_family", fun_family))?,
                        )
                    }
                    SipConstraintDoc::Geometric { family } => SipConstraints::Geometric(
                        families
                            .get(family)
                            .cloned()
                            .ok_or_else(|| missing("family", family))?,
                    ),
                    SipConstraintDoc::Operator { rows, offset, targets } => {
                        let rows =
                            rows.iter().map(|r| parse_qvec(r)).collect::<Result<Vec<_>>>()?;
                        let ncols = rows
                            .first()
                            .map(|r| r.dim())
                            .ok_or_else(|| ConeError::Malformed("empty operator".into()))?;
                        SipConstraints::Operator {
                            map: QMat::from_rows(rows, ncols),
                            offset: parse_qvec(offset)?,
                            targets: families
                                .get(targets)
                                .cloned()
                                .ok_or_else(|| missing("family", targets))?,
                        }
                    }
                };
                let mode = match mode.as_str() {
                    "lower" => SipMode::Lower,
                    "upper" => SipMode::Upper,
                    other => {
                        return Err(ConeError::Malformed(format!(
                            "sip mode `{other}` must be lower or upper"
                        )))
                    }
                };
                Problem::Sip { objective, constraints, mode }
            }
            ProblemDoc::Pareto { graph, domain_dim, theta, constraints } => {
                Problem::Pareto(ParetoProblem {
                    graph: sets
                        .get(graph)
                        .cloned()
                        .ok_or_else(|| missing("set", graph))?,
                    domain_dim: *domain_dim,
                    theta: cones
                        .get(theta)
                        .cloned()
                        .ok_or_else(|| missing("cone", theta))?,
                    constraints: match constraints {
                        None => None,
                        Some(f) => Some(
                            families
                                .get(f)
                                .cloned()
                                .ok_or_else(|| missing("family", f))?,
                        ),
                    },
                })
            }
        };
        problems.insert(name.clone(), problem);
    }

    let base_point = match &doc.base_point {
        None => None,
        Some(coords) => Some(parse_qvec(coords)?),
    };

    Ok(Instance {
        atoms,
        sets,
        families,
        fun_families,
        cones,
        cone_systems,
        problems,
        base_point,
    })
}
