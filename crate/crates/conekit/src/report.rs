//! Report assembly for the command-line front end. Reports serialize
//! deterministically for a fixed instance and seed: no wall-clock data is
//! embedded, map keys are sorted, and every numeric field is an exact
//! rational object (`{"num": ..., "den": ...}`) or is explicitly labeled
//! approximate.

use serde::Serialize;
use serde_json::{json, Value};

use crate::certify::{ExtremalCertificate, KKTCertificate, ParetoCertificate};
use crate::chip::{ChipVerdict, Holds};
use crate::linalg::QVec;
use crate::qualconds::QCVerdict;
use crate::scalar::Rat;

pub const TOOL: &str = concat!("conekit ", env!("CARGO_PKG_VERSION"));
pub const SCHEMA: &str = "conekit-report/1";

/// Exact rational rendered as a numerator/denominator pair. Using an
/// object (never a bare float) makes unlabeled approximate values
/// grep-able: any JSON number outside an `"approx"` field is a bug.
pub fn rat_value(r: &Rat) -> Value {
    json!({ "num": r.numer().to_string(), "den": r.denom().to_string(), "exact": true })
}

pub fn vec_value(v: &QVec) -> Value {
    Value::Array(v.coords().iter().map(rat_value).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// Every requested verdict resolved (including definite "no"s).
    Resolved,
    /// At least one verdict is a truncation-bounded semi-decision.
    Inconclusive,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportItem {
    pub label: String,
    pub verdict: String,
    pub exact: bool,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub data: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: String,
    pub schema: String,
    pub command: String,
    pub seed: u64,
    pub items: Vec<ReportItem>,
    pub exact_items: usize,
    pub approximate_items: usize,
    pub status: Status,
}

impl Report {
    pub fn new(command: &str, seed: u64) -> Self {
        Report {
            tool: TOOL.into(),
            schema: SCHEMA.into(),
            command: command.into(),
            seed,
            items: Vec::new(),
            exact_items: 0,
            approximate_items: 0,
            status: Status::Resolved,
        }
    }

    pub fn push(&mut self, label: &str, verdict: &str, exact: bool, data: Value) {
        if exact {
            self.exact_items += 1;
        } else {
            self.approximate_items += 1;
        }
        self.items.push(ReportItem {
            label: label.into(),
            verdict: verdict.into(),
            exact,
            data,
        });
    }

    pub fn mark_inconclusive(&mut self) {
        if self.status == Status::Resolved {
            self.status = Status::Inconclusive;
        }
    }

    pub fn push_holds(&mut self, label: &str, holds: Holds, exact: bool, data: Value) {
        if holds == Holds::InconclusiveAtK {
            self.mark_inconclusive();
        }
        self.push(label, holds.label(), exact, data);
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Resolved => 0,
            Status::Inconclusive => 2,
            Status::Error => 1,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{} — {}\n", self.tool, self.command));
        for item in &self.items {
            let marker = if item.exact { "exact" } else { "approx" };
            out.push_str(&format!("  {:<48} {} [{}]\n", item.label, item.verdict, marker));
            if !item.data.is_null() {
                out.push_str(&format!("      {}\n", compact(&item.data)));
            }
        }
        out.push_str(&format!(
            "status: {:?} ({} exact, {} approximate)\n",
            self.status, self.exact_items, self.approximate_items
        ));
        out
    }
}

fn compact(v: &Value) -> String {
    serde_json::to_string(v).expect("report serialization")
}

// ---------------------------------------------------------------------------
// Verdict/certificate serializers

pub fn qc_value(v: &QCVerdict) -> Value {
    json!({
        "condition": format!("{:?}", v.condition),
        "holds": v.holds.label(),
        "k_used": v.k_used,
        "exact": v.exact,
        "witness": v.witness.as_ref().map(vec_value),
        "multipliers": v.multipliers.as_ref().map(|ms| {
            Value::Array(
                ms.iter()
                    .map(|(g, w)| json!({"generator": vec_value(g), "weight": rat_value(w)}))
                    .collect(),
            )
        }),
        "method": v.method,
    })
}

pub fn chip_value(v: &ChipVerdict) -> Value {
    json!({
        "holds": v.holds.label(),
        "k_used": v.k_used,
        "witness": v.witness.as_ref().map(vec_value),
        "method": v.method,
    })
}

pub fn kkt_value(c: &KKTCertificate) -> Value {
    json!({
        "kind": "kkt",
        "indexSet": c.index_set,
        "multipliers": Value::Array(c.multipliers.iter().map(rat_value).collect()),
        "normals": Value::Array(c.normals.iter().map(vec_value).collect()),
        "gradient": vec_value(&c.gradient),
        "residual": rat_value(&c.residual),
        "closureUsed": c.closure_used,
        "qualifications": Value::Array(c.qualifications.iter().map(qc_value).collect()),
        "chip": c.chip.as_ref().map(chip_value),
        "k_used": c.k_used,
        "exact": c.exact,
        "method": c.method,
    })
}

pub fn extremal_value(c: &ExtremalCertificate) -> Value {
    json!({
        "kind": "extremal",
        "normals": Value::Array(c.normals.iter().map(vec_value).collect()),
        "scale_sq": rat_value(&c.scale_sq),
        "shifts": c.shifts.as_ref().map(|s| {
            Value::Array(s.iter().map(vec_value).collect())
        }),
        "k_used": c.k_used,
        "exact": true,
    })
}

pub fn pareto_cert_value(c: &ParetoCertificate) -> Value {
    json!({
        "kind": "pareto",
        "yStar": vec_value(&c.y_star),
        "xStar": vec_value(&c.x_star),
        "decomposition": Value::Array(
            c.decomposition
                .iter()
                .map(|(i, part)| json!({"index": i, "normal": vec_value(part)}))
                .collect()
        ),
        "residual": rat_value(&c.residual),
        "k_used": c.k_used,
        "exact": c.exact,
        "method": c.method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vector;
    use crate::scalar::rat;

    #[test]
    fn reports_are_deterministic() {
        let build = || {
            let mut r = Report::new("demo", 7);
            r.push("alpha", "yes", true, rat_value(&rat(1, 3)));
            r.push("beta", "no", false, Value::Null);
            r.to_json()
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn rationals_never_serialize_as_bare_floats() {
        let v = vec_value(&Vector::new(vec![rat(1, 2), rat(-7, 3)]));
        let s = serde_json::to_string(&v).unwrap();
        assert!(!s.contains('.'));
        assert!(s.contains("\"num\""));
    }

    #[test]
    fn inconclusive_items_drive_the_exit_code() {
        let mut r = Report::new("demo", 0);
        r.push_holds("gamma", Holds::No, true, Value::Null);
        assert_eq!(r.exit_code(), 0);
        r.push_holds("delta", Holds::InconclusiveAtK, true, Value::Null);
        assert_eq!(r.exit_code(), 2);
    }
}
