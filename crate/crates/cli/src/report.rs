//! Check records and their JSON, markdown and CSV renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::checks::Check;
use crate::config::Cell;

/// Acceptance bound on one residual.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Above(f64),
}

impl Bound {
    pub fn holds(self, x: f64) -> bool {
        match self {
            Bound::AtMost(t) => x <= t,
            Bound::AtLeast(t) => x >= t,
            Bound::Above(t) => x > t,
        }
    }

    fn describe(self) -> String {
        match self {
            Bound::AtMost(t) => format!("<= {t:e}"),
            Bound::AtLeast(t) => format!(">= {t:e}"),
            Bound::Above(t) => format!("> {t:e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Params {
    pub m: usize,
    pub k: usize,
    /// Absent for checks that cover a whole `(family, m, k)` cell.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Expected {
    pub value: Value,
    pub provenance: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub check: Check,
    pub family: String,
    pub params: Params,
    pub residuals: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, Bound>,
    /// Yes/no comparisons between measured and expected values.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub agreements: BTreeMap<String, bool>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub measured: Value,
    pub expected: Expected,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Record {
    pub fn new(check: Check, cell: Cell, radius: Option<f64>, expected: Value, provenance: &'static str) -> Self {
        Self {
            check,
            family: cell.family.name().to_string(),
            params: Params { m: cell.m, k: cell.k, radius },
            residuals: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            agreements: BTreeMap::new(),
            measured: Value::Null,
            expected: Expected { value: expected, provenance },
            pass: true,
            error: None,
        }
    }

    pub fn residual(&mut self, name: &str, value: f64, bound: Bound) -> &mut Self {
        self.residuals.insert(name.to_string(), value);
        self.tolerances.insert(name.to_string(), bound);
        self.pass &= value.is_finite() && bound.holds(value);
        self
    }

    pub fn agree(&mut self, name: &str, holds: bool) -> &mut Self {
        self.agreements.insert(name.to_string(), holds);
        self.pass &= holds;
        self
    }

    pub fn measured(&mut self, value: Value) -> &mut Self {
        self.measured = value;
        self
    }

    pub fn fail_with(&mut self, error: String) -> &mut Self {
        self.error = Some(error);
        self.pass = false;
        self
    }

    fn radius_text(&self) -> String {
        self.params.radius.map(|r| r.to_string()).unwrap_or_default()
    }
}

/// A check that did not apply to a grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Skipped {
    pub check: Check,
    pub family: String,
    pub params: Params,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
    pub skipped: Vec<Skipped>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub fd_step: f64,
    pub richardson_levels: usize,
    pub samples: usize,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub meta: Meta,
    pub records: Vec<Record>,
    pub summary: Summary,
}

impl Report {
    pub fn new(meta: Meta, records: Vec<Record>, skipped: Vec<Skipped>) -> Self {
        let passed = records.iter().filter(|r| r.pass).count();
        let summary = Summary {
            total: records.len(),
            passed,
            failed: records.len() - passed,
            pass: passed == records.len(),
            skipped,
        };
        Self { meta, records, summary }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} {} report\n", self.meta.tool, self.meta.command);
        let _ = writeln!(
            s,
            "seed {}, fd step {:e}, {} samples per point\n",
            self.meta.seed, self.meta.fd_step, self.meta.samples
        );
        s.push_str("| check | family | m | k | radius | pass | residuals |\n");
        s.push_str("|---|---|---|---|---|---|---|\n");
        for r in &self.records {
            let mut cells: Vec<String> = r
                .residuals
                .iter()
                .map(|(name, v)| format!("{name} {v:.2e} ({})", r.tolerances[name].describe()))
                .collect();
            cells.extend(r.agreements.iter().map(|(name, ok)| format!("{name} {}", if *ok { "yes" } else { "no" })));
            if let Some(e) = &r.error {
                cells.push(format!("error: {e}"));
            }
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} |",
                r.check,
                r.family,
                r.params.m,
                r.params.k,
                r.radius_text(),
                if r.pass { "pass" } else { "FAIL" },
                cells.join("; ")
            );
        }
        let _ = writeln!(
            s,
            "\n{} of {} records pass, {} skipped.",
            self.summary.passed,
            self.summary.total,
            self.summary.skipped.len()
        );
        s
    }

    /// One row per residual or agreement.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["check", "family", "m", "k", "radius", "quantity", "value", "bound", "pass"])?;
        for r in &self.records {
            let head = [r.check.to_string(), r.family.clone(), r.params.m.to_string(), r.params.k.to_string(), r.radius_text()];
            for (name, v) in &r.residuals {
                let ok = r.tolerances[name].holds(*v);
                w.write_record(head.iter().cloned().chain([
                    name.clone(),
                    v.to_string(),
                    r.tolerances[name].describe(),
                    ok.to_string(),
                ]))?;
            }
            for (name, ok) in &r.agreements {
                w.write_record(head.iter().cloned().chain([name.clone(), ok.to_string(), "true".into(), ok.to_string()]))?;
            }
            if let Some(e) = &r.error {
                w.write_record(head.iter().cloned().chain(["error".into(), e.clone(), String::new(), "false".into()]))?;
            }
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
