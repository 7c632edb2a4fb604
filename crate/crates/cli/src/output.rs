//! Records CSV, JSON summary and solution dump.

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use semilinear::{Action, FeFunction, IterationRecord, Mesh};

use crate::CliError;

pub const CSV_HEADER: [&str; 9] =
    ["iter", "action", "dofs", "k_n", "delta_omega", "eta_total", "estimate_total", "true_error", "efficiency"];

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn optional(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

pub fn write_records<W: Write>(writer: W, records: &[IterationRecord]) -> Result<(), CliError> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(CSV_HEADER)?;
    for r in records {
        csv.write_record([
            r.iter.to_string(),
            r.action.as_str().to_string(),
            r.dofs.to_string(),
            optional(r.step),
            float(r.delta_omega),
            float(r.eta_total),
            float(r.estimate_total),
            optional(r.true_error),
            optional(r.efficiency),
        ])?;
    }
    csv.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<IterationRecord>, CliError> {
    let mut csv = csv::Reader::from_reader(reader);
    if csv.headers()?.iter().ne(CSV_HEADER) {
        return Err(CliError::Records { line: 1, message: "unexpected header".into() });
    }
    let mut records = Vec::new();
    for (i, row) in csv.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |message: String| CliError::Records { line, message };
        if row.len() != CSV_HEADER.len() {
            return Err(bad(format!("expected {} fields, got {}", CSV_HEADER.len(), row.len())));
        }
        let parse = |k: usize| -> Result<f64, CliError> {
            row[k].parse().map_err(|_| bad(format!("{}: cannot parse {:?}", CSV_HEADER[k], &row[k])))
        };
        let maybe = |k: usize| -> Result<Option<f64>, CliError> {
            if row[k].is_empty() { Ok(None) } else { parse(k).map(Some) }
        };
        let count = |k: usize| -> Result<usize, CliError> {
            row[k].parse().map_err(|_| bad(format!("{}: cannot parse {:?}", CSV_HEADER[k], &row[k])))
        };
        let action = match &row[1] {
            "NEWTON" => Action::Newton,
            "REFINE" => Action::Refine,
            other => return Err(bad(format!("unknown action {other:?}"))),
        };
        records.push(IterationRecord {
            iter: count(0)?,
            action,
            dofs: count(2)?,
            step: maybe(3)?,
            delta_omega: parse(4)?,
            eta_total: parse(5)?,
            estimate_total: parse(6)?,
            true_error: maybe(7)?,
            efficiency: maybe(8)?,
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub epsilon: f64,
    pub strategy: String,
    /// `tolerance`, `dof budget`, `iteration budget` or `solver failure`.
    pub termination: String,
    pub final_estimate: Option<f64>,
    pub final_dofs: Option<usize>,
    pub records: usize,
    pub newton_steps: usize,
    pub refinements: usize,
    pub linear_solves: Option<usize>,
    pub error: Option<String>,
}

impl RunSummary {
    pub fn count(records: &[IterationRecord], action: Action) -> usize {
        records.iter().filter(|r| r.action == action).count()
    }
}

/// Header `# generation G dofs D`, then one `x [y] value` line per node.
/// Interval nodes are listed left to right.
pub fn solution_dump(mesh: &Mesh, u: &FeFunction) -> Result<String, CliError> {
    u.check(mesh)?;
    let mut order: Vec<usize> = (0..mesh.num_nodes()).collect();
    if mesh.dim() == 1 {
        order.sort_by(|&a, &b| mesh.node(a)[0].total_cmp(&mesh.node(b)[0]));
    }
    let mut out = format!("# generation {} dofs {}\n", mesh.generation(), mesh.num_free());
    for i in order {
        let p = mesh.node(i);
        let v = u.values()[i];
        let _ = match mesh.dim() {
            1 => writeln!(out, "{:.16e} {:.16e}", p[0], v),
            _ => writeln!(out, "{:.16e} {:.16e} {:.16e}", p[0], p[1], v),
        };
    }
    Ok(out)
}
