//! Command-line front end: instance ingestion, verdict commands, the
//! built-in example registry, and deterministic report emission.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use conekit::certify::{
    extremal_certificate, pareto_check, pareto_necessary_cond, sip_certify,
    ExtremalOutcome, ParetoNotion, ParetoOutcome, SipVerdict,
};
use conekit::chip::{chip_check, ChipScope};
use conekit::error::{ConeError, Result};
use conekit::instance::{Instance, Problem};
use conekit::linalg::{QVec, Vector};
use conekit::qualconds::{
    cqc_check, fmcq_check, interior_point_nqc, ncc_check, nqc_check, scc_check,
    sqc_check,
};
use conekit::registry;
use conekit::report::{
    chip_value, extremal_value, kkt_value, pareto_cert_value, qc_value, rat_value,
    vec_value, Report, Status,
};
use conekit::varcalc::{frechet_normal_cone, limiting_normal_cone, tangent_cone};

#[derive(Parser)]
#[command(name = "conekit", version, about = "Exact cone calculus and certificate-producing optimality checkers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Path to a JSON instance document.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Override the truncation depth used by every family.
    #[arg(long)]
    truncate: Option<i64>,
    /// Numeric tolerance for sampled estimators (recorded in the report).
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for sampled estimators.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit the report as JSON.
    #[arg(long, conflicts_with = "text")]
    json: bool,
    /// Emit the report as plain text (default).
    #[arg(long)]
    text: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Tangent,
    Frechet,
    Limiting,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Limit,
    Truncations,
}

#[derive(Clone, Copy, ValueEnum)]
enum NotionArg {
    FullyLocalized,
    Graphical,
    TangentialGraphical,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegistryAction {
    List,
    Show,
    RunAll,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute a tangent, regular normal, or limiting normal cone.
    Cone {
        #[command(flatten)]
        common: Common,
        /// Name of the set in the instance document.
        #[arg(long)]
        set: String,
        #[arg(long, value_enum)]
        which: Which,
        /// Reference point as comma-separated rationals (default: base point).
        #[arg(long)]
        point: Option<String>,
    },
    /// Check the conical hull intersection property of a family.
    Chip {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        family: String,
        #[arg(long, value_enum, default_value = "truncations")]
        scope: ScopeArg,
    },
    /// Check qualification conditions by name.
    Qualify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated: chip,nqc,ncc,interior,scc,sqc,fmcq,cqc.
        #[arg(long)]
        conditions: String,
        /// Geometric family (chip, nqc, ncc, interior).
        #[arg(long)]
        family: Option<String>,
        /// Inequality family (scc, sqc, fmcq, cqc).
        #[arg(long)]
        fun_family: Option<String>,
        /// Objective atom name (cqc only).
        #[arg(long)]
        objective: Option<String>,
    },
    /// Certify first-order necessary optimality conditions for a problem.
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        problem: String,
    },
    /// Produce a weighted extremality certificate for a cone system.
    Extremal {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        system: String,
    },
    /// Decide Pareto minimality notions for a multiobjective problem.
    Pareto {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        problem: String,
        /// Restrict to one notion (default: all three).
        #[arg(long, value_enum)]
        notion: Option<NotionArg>,
    },
    /// Inspect or regression-run the built-in example registry.
    Registry {
        #[command(flatten)]
        common: Common,
        #[arg(value_enum)]
        action: RegistryAction,
        /// Entry id (show only).
        id: Option<String>,
    },
}

fn load_instance(common: &Common) -> Result<Instance> {
    let path = common
        .instance
        .as_ref()
        .ok_or_else(|| ConeError::Malformed("--instance is required".into()))?;
    let mut inst = Instance::load(path)?;
    if let Some(k) = common.truncate {
        inst.override_truncate(k);
    }
    if let Ok(v) = std::env::var("CONEKIT_KMAX") {
        let k: i64 = v.parse().map_err(|_| {
            ConeError::Malformed(format!("CONEKIT_KMAX=`{v}` is not an integer"))
        })?;
        inst.override_k_max(k);
    }
    Ok(inst)
}

fn parse_point(text: &str) -> Result<QVec> {
    let coords: Vec<String> = text.split(',').map(|c| c.trim().to_string()).collect();
    let mut out = Vec::new();
    for c in &coords {
        let r = match c.split('/').collect::<Vec<_>>().as_slice() {
            [p] => p
                .parse()
                .map_err(|_| ConeError::Malformed(format!("bad coordinate `{c}`")))?,
            _ => {
                let parts: Vec<&str> = c.split('/').collect();
                let num = parts[0].parse::<num_bigint::BigInt>().map_err(|_| {
                    ConeError::Malformed(format!("bad coordinate `{c}`"))
                })?;
                let den = parts[1].parse::<num_bigint::BigInt>().map_err(|_| {
                    ConeError::Malformed(format!("bad coordinate `{c}`"))
                })?;
                conekit::scalar::Rat::new(num, den)
            }
        };
        out.push(r);
    }
    Ok(Vector::new(out))
}

fn run(cli: Cli) -> Result<Report> {
    match cli.cmd {
        Cmd::Cone { common, set, which, point } => {
            let inst = load_instance(&common)?;
            let s = inst
                .sets
                .get(&set)
                .ok_or_else(|| ConeError::Malformed(format!("unknown set `{set}`")))?;
            let x = match &point {
                Some(p) => parse_point(p)?,
                None => inst.base_point()?,
            };
            let (label, result) = match which {
                Which::Tangent => ("tangent cone", tangent_cone(s, &x)?),
                Which::Frechet => ("regular normal cone", frechet_normal_cone(s, &x)?),
                Which::Limiting => ("limiting normal cone", limiting_normal_cone(s, &x)?),
            };
            let mut report = Report::new("cone", common.seed);
            let gens: Vec<Value> =
                result.cone.all_generators()?.iter().map(vec_value).collect();
            let ineqs: Vec<Value> = if result.cone.pieces.len() == 1 {
                result.cone.pieces[0].inequalities()?.iter().map(vec_value).collect()
            } else {
                Vec::new()
            };
            report.push(
                &format!("{label} of `{set}`"),
                "computed",
                result.exact,
                json!({
                    "generators": gens,
                    "inequalities": ineqs,
                    "convex_pieces": result.cone.pieces.len(),
                    "method": format!("{:?}", result.method),
                }),
            );
            Ok(report)
        }
        Cmd::Chip { common, family, scope } => {
            let inst = load_instance(&common)?;
            let f = inst.families.get(&family).ok_or_else(|| {
                ConeError::Malformed(format!("unknown family `{family}`"))
            })?;
            let x = inst.base_point()?;
            let scope = match scope {
                ScopeArg::Limit => ChipScope::Limit,
                ScopeArg::Truncations => ChipScope::Truncations,
            };
            let verdict = chip_check(f, &x, scope)?;
            let mut report = Report::new("chip", common.seed);
            report.push_holds(
                &format!("chip for `{family}`"),
                verdict.holds,
                true,
                chip_value(&verdict),
            );
            Ok(report)
        }
        Cmd::Qualify { common, conditions, family, fun_family, objective } => {
            let inst = load_instance(&common)?;
            let x = inst.base_point()?;
            let mut report = Report::new("qualify", common.seed);
            let geo = |name: &Option<String>| -> Result<&conekit::family::IndexedFamily> {
                let n = name.as_ref().ok_or_else(|| {
                    ConeError::Malformed("this condition needs --family".into())
                })?;
                inst.families
                    .get(n)
                    .ok_or_else(|| ConeError::Malformed(format!("unknown family `{n}`")))
            };
            let ineq = |name: &Option<String>| -> Result<&conekit::qualconds::FunFamily> {
                let n = name.as_ref().ok_or_else(|| {
                    ConeError::Malformed("this condition needs --fun-family".into())
                })?;
                inst.fun_families
                    .get(n)
                    .ok_or_else(|| ConeError::Malformed(format!("unknown fun_family `{n}`")))
            };
            for cond in conditions.split(',').map(str::trim) {
                match cond {
                    "chip" => {
                        let v = chip_check(geo(&family)?, &x, ChipScope::Truncations)?;
                        report.push_holds("chip", v.holds, true, chip_value(&v));
                    }
                    "nqc" => {
                        let v = nqc_check(geo(&family)?, &x)?;
                        report.push_holds("nqc", v.holds, v.exact, qc_value(&v));
                    }
                    "ncc" => {
                        let v = ncc_check(geo(&family)?, &x)?;
                        report.push_holds("ncc", v.holds, v.exact, qc_value(&v));
                    }
                    "interior" => {
                        let v = interior_point_nqc(geo(&family)?, &x)?;
                        report.push_holds("interior", v.holds, v.exact, qc_value(&v));
                    }
                    "scc" => {
                        let v = scc_check(ineq(&fun_family)?, &x)?;
                        report.push_holds("scc", v.holds, v.exact, qc_value(&v));
                    }
                    "sqc" => {
                        let v = sqc_check(ineq(&fun_family)?, &x)?;
                        report.push_holds("sqc", v.holds, v.exact, qc_value(&v));
                    }
                    "fmcq" => {
                        let v = fmcq_check(ineq(&fun_family)?)?;
                        report.push_holds("fmcq", v.holds, v.exact, qc_value(&v));
                    }
                    "cqc" => {
                        let name = objective.as_ref().ok_or_else(|| {
                            ConeError::Malformed("cqc needs --objective".into())
                        })?;
                        let atom = inst.atoms.get(name).ok_or_else(|| {
                            ConeError::Malformed(format!("unknown atom `{name}`"))
                        })?;
                        let v = cqc_check(&atom.instantiate(1)?, ineq(&fun_family)?)?;
                        report.push_holds("cqc", v.holds, v.exact, qc_value(&v));
                    }
                    other => {
                        return Err(ConeError::Malformed(format!(
                            "unknown condition `{other}`"
                        )))
                    }
                }
            }
            Ok(report)
        }
        Cmd::Certify { common, problem } => {
            let inst = load_instance(&common)?;
            let p = inst.problems.get(&problem).ok_or_else(|| {
                ConeError::Malformed(format!("unknown problem `{problem}`"))
            })?;
            let mut report = Report::new("certify", common.seed);
            match p {
                Problem::Sip { objective, constraints, mode } => {
                    let x = inst.base_point()?;
                    match sip_certify(objective, constraints, &x, *mode)? {
                        SipVerdict::Certified(cert) => {
                            report.push(
                                &format!("necessary condition for `{problem}`"),
                                "certified",
                                cert.exact,
                                kkt_value(&cert),
                            );
                        }
                        SipVerdict::ConditionViolated {
                            gradient,
                            residual,
                            qualifications,
                            k_used,
                            exact,
                            ..
                        } => {
                            report.push(
                                &format!("necessary condition for `{problem}`"),
                                "condition-violated",
                                exact,
                                json!({
                                    "gradient": vec_value(&gradient),
                                    "residual": rat_value(&residual),
                                    "qualifications": qualifications
                                        .iter()
                                        .map(qc_value)
                                        .collect::<Vec<_>>(),
                                    "k_used": k_used,
                                }),
                            );
                            if !exact {
                                report.mark_inconclusive();
                            }
                        }
                    }
                }
                Problem::Pareto(pp) => {
                    let xy = inst.base_point()?;
                    match pareto_necessary_cond(pp, &xy)? {
                        ParetoOutcome::Certificate(cert) => {
                            report.push(
                                &format!("necessary condition for `{problem}`"),
                                "certified",
                                cert.exact,
                                pareto_cert_value(&cert),
                            );
                        }
                        ParetoOutcome::NotFound { k_used, diagnostic } => {
                            report.push(
                                &format!("necessary condition for `{problem}`"),
                                "not-found",
                                true,
                                json!({"k_used": k_used, "diagnostic": diagnostic}),
                            );
                            report.mark_inconclusive();
                        }
                    }
                }
            }
            Ok(report)
        }
        Cmd::Extremal { common, system } => {
            let inst = load_instance(&common)?;
            let cones = inst.cone_systems.get(&system).ok_or_else(|| {
                ConeError::Malformed(format!("unknown cone system `{system}`"))
            })?;
            let mut report = Report::new("extremal", common.seed);
            match extremal_certificate(cones)? {
                ExtremalOutcome::Certificate(cert) => {
                    report.push(
                        &format!("extremal certificate for `{system}`"),
                        "certified",
                        true,
                        extremal_value(&cert),
                    );
                }
                ExtremalOutcome::NotFound { k_used, diagnostic } => {
                    report.push(
                        &format!("extremal certificate for `{system}`"),
                        "not-found",
                        true,
                        json!({"k_used": k_used, "diagnostic": diagnostic}),
                    );
                    report.mark_inconclusive();
                }
            }
            Ok(report)
        }
        Cmd::Pareto { common, problem, notion } => {
            let inst = load_instance(&common)?;
            let p = inst.problems.get(&problem).ok_or_else(|| {
                ConeError::Malformed(format!("unknown problem `{problem}`"))
            })?;
            let Problem::Pareto(pp) = p else {
                return Err(ConeError::Malformed(format!(
                    "problem `{problem}` is not a pareto problem"
                )));
            };
            let xy = inst.base_point()?;
            let notions: Vec<(ParetoNotion, &str)> = match notion {
                Some(NotionArg::FullyLocalized) => {
                    vec![(ParetoNotion::FullyLocalized, "fully-localized")]
                }
                Some(NotionArg::Graphical) => vec![(ParetoNotion::Graphical, "graphical")],
                Some(NotionArg::TangentialGraphical) => {
                    vec![(ParetoNotion::TangentialGraphical, "tangential-graphical")]
                }
                None => vec![
                    (ParetoNotion::FullyLocalized, "fully-localized"),
                    (ParetoNotion::Graphical, "graphical"),
                    (ParetoNotion::TangentialGraphical, "tangential-graphical"),
                ],
            };
            let mut report = Report::new("pareto", common.seed);
            for (n, label) in notions {
                let v = pareto_check(pp, &xy, n)?;
                report.push(
                    label,
                    if v.holds { "yes" } else { "no" },
                    v.exact,
                    json!({
                        "witness": v.witness.as_ref().map(vec_value),
                        "method": v.method,
                    }),
                );
                if !v.exact {
                    report.mark_inconclusive();
                }
            }
            Ok(report)
        }
        Cmd::Registry { common, action, id } => {
            let mut report = Report::new("registry", common.seed);
            match action {
                RegistryAction::List => {
                    for e in registry::entries() {
                        report.push(e.id, "available", true, json!({"title": e.title}));
                    }
                }
                RegistryAction::Show => {
                    let id = id.ok_or_else(|| {
                        ConeError::Malformed("show needs an entry id".into())
                    })?;
                    let e = registry::entry(&id).ok_or_else(|| {
                        ConeError::Malformed(format!("unknown registry entry `{id}`"))
                    })?;
                    report.push(
                        e.id,
                        "shown",
                        true,
                        json!({"title": e.title, "template": e.template}),
                    );
                }
                RegistryAction::RunAll => {
                    let results = registry::run_all()?;
                    let mismatches = registry::mismatches(&results);
                    for (id, checks) in &results {
                        for c in checks {
                            report.push(
                                &format!("{id}: {}", c.label),
                                if c.pass { "pass" } else { "MISMATCH" },
                                true,
                                Value::Null,
                            );
                        }
                    }
                    if mismatches > 0 {
                        report.status = Status::Error;
                    }
                }
            }
            Ok(report)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = match &cli.cmd {
        Cmd::Cone { common, .. }
        | Cmd::Chip { common, .. }
        | Cmd::Qualify { common, .. }
        | Cmd::Certify { common, .. }
        | Cmd::Extremal { common, .. }
        | Cmd::Pareto { common, .. }
        | Cmd::Registry { common, .. } => common.json,
    };
    match run(cli) {
        Ok(report) => {
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
