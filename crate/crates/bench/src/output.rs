//! CSV and JSON-lines writers.

use std::io::Write;

use crate::error::Result;
use crate::scan::ScanRow;

pub const CSV_VERSION: &str = "# vqe-bench scan rows v1";

pub const CSV_COLUMNS: [&str; 13] = [
    "molecule",
    "basis",
    "label",
    "r",
    "method",
    "eps",
    "energy",
    "e_fci",
    "abs_err",
    "n_params",
    "n_iterations",
    "wall_time",
    "status",
];

fn fmt_f(x: f64) -> String {
    format!("{x:.12e}")
}

/// Writes rows as CSV under a version comment; `wall_time` is optional so
/// reruns can be compared byte for byte.
pub fn write_csv<W: Write>(rows: &[ScanRow], mut out: W, with_wall_time: bool) -> Result<()> {
    writeln!(out, "{CSV_VERSION}").map_err(|source| crate::BenchError::Io {
        path: "<csv>".into(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(out);
    let cols: Vec<&str> = CSV_COLUMNS.iter().copied().filter(|c| with_wall_time || *c != "wall_time").collect();
    w.write_record(&cols)?;
    for r in rows {
        let mut rec = vec![
            r.molecule.clone(),
            r.basis.clone(),
            r.label.clone(),
            format!("{}", r.r),
            r.method.clone(),
            r.eps.map(|e| format!("{e:e}")).unwrap_or_default(),
            fmt_f(r.energy),
            fmt_f(r.e_fci),
            fmt_f(r.abs_err),
            r.n_params.to_string(),
            r.n_iterations.to_string(),
        ];
        if with_wall_time {
            rec.push(format!("{:.3}", r.wall_time));
        }
        rec.push(r.status.clone());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| crate::BenchError::Io {
        path: "<csv>".into(),
        source,
    })?;
    Ok(())
}

pub fn csv_string(rows: &[ScanRow], with_wall_time: bool) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf, with_wall_time)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

pub fn json_lines(rows: &[ScanRow]) -> Result<String> {
    let mut s = String::new();
    for r in rows {
        s.push_str(&serde_json::to_string(r)?);
        s.push('\n');
    }
    Ok(s)
}
