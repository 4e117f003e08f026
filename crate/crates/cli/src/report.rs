use std::fs;
use std::io::{self, Write};
use std::path::Path;

use hesort::CostReport;

use crate::input::fmt_num;
use crate::CliError;

pub const HEADER: [&str; 15] = [
    "task",
    "N",
    "mode",
    "cmp_degree",
    "ind_degree",
    "rotations",
    "critical_rotations",
    "ctct_mults",
    "ctpt_mults",
    "cmp_evals",
    "ind_evals",
    "levels_consumed",
    "avg_err",
    "max_err",
    "wall_ms",
];

#[derive(Debug, Clone)]
pub struct CostRow {
    pub task: String,
    pub n: usize,
    pub mode: String,
    pub cmp_degree: usize,
    pub ind_degree: usize,
    pub cost: CostReport,
    pub avg_err: f64,
    pub max_err: f64,
    pub wall_ms: u128,
}

impl CostRow {
    fn record(&self) -> Vec<String> {
        let c = &self.cost;
        vec![
            self.task.clone(),
            self.n.to_string(),
            self.mode.clone(),
            self.cmp_degree.to_string(),
            self.ind_degree.to_string(),
            c.rotations.to_string(),
            c.critical_rotations.to_string(),
            c.ctct_mults.to_string(),
            c.ctpt_mults.to_string(),
            c.cmp_evals.to_string(),
            c.ind_evals.to_string(),
            c.levels_consumed.to_string(),
            format!("{:.6e}", self.avg_err),
            format!("{:.6e}", self.max_err),
            self.wall_ms.to_string(),
        ]
    }
}

/// CSV text: `#` comment lines, the header, then one line per row.
pub fn render(comments: &[String], rows: &[CostRow]) -> Result<String, CliError> {
    let mut out = String::new();
    for c in comments {
        out.push_str(c);
        out.push('\n');
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.record()).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    Ok(out)
}

pub fn values_line(values: &[f64]) -> String {
    let mut s = values.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

/// Writes `text` to `path`, or to the given stream when no path is set.
pub fn emit(path: Option<&Path>, text: &str, fallback: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => fallback
            .write_all(text.as_bytes())
            .map_err(|e: io::Error| CliError::Io(e.to_string())),
    }
}
