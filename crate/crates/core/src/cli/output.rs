//! CSV writers. Reals are written with 17 significant digits so that they
//! parse back to the same `f64`.

use std::io::Write;
use std::path::Path;

use crate::diagnostics::ReplicateSummary;
use crate::trace::{Trace, TraceRow};

pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn trace_header(dim: usize) -> Vec<String> {
    let mut h = vec!["iter".to_string()];
    h.extend((1..=dim).map(|i| format!("x_{i}")));
    h.extend(["log_pi", "stage1_accept", "stage2_accept", "expensive_eval"].map(String::from));
    h
}

pub fn write_trace<W: Write>(trace: &Trace, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_header(trace.dim))?;
    let mut rec = Vec::with_capacity(trace.dim + 5);
    for r in &trace.rows {
        rec.clear();
        rec.push(r.iter.to_string());
        rec.extend(r.x.iter().map(|&v| fmt_real(v)));
        rec.push(fmt_real(r.log_pi));
        rec.extend(
            [r.stage1_accept, r.stage2_accept, r.expensive_eval].map(|b| flag(b).to_string()),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv(trace: &Trace, path: &Path) -> csv::Result<()> {
    write_trace(trace, std::fs::File::create(path)?)
}

/// Parses a file written by [`write_trace_csv`].
pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let width = r.headers().map_err(|e| e.to_string())?.len();
    if width < 5 {
        return Err(format!("trace header has {width} columns, need at least 5"));
    }
    let dim = width - 5;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let num = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|e| format!("column {i}: {e}"))
        };
        let bit = |i: usize| match &rec[i] {
            "0" => Ok(false),
            "1" => Ok(true),
            s => Err(format!("column {i}: `{s}` is not 0/1")),
        };
        rows.push(TraceRow {
            iter: rec[0].parse().map_err(|e| format!("iter: {e}"))?,
            x: (1..=dim).map(num).collect::<Result<_, _>>()?,
            log_pi: num(dim + 1)?,
            stage1_accept: bit(dim + 2)?,
            stage2_accept: bit(dim + 3)?,
            expensive_eval: bit(dim + 4)?,
        });
    }
    Ok(rows)
}

/// `n, mean, sd`, one row per chain length.
pub fn write_replicate_summary_csv(rows: &[ReplicateSummary], path: &Path) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "mean", "sd"])?;
    for r in rows {
        w.write_record([r.n.to_string(), fmt_real(r.mean), fmt_real(r.sd)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdpmRow {
    pub projection: String,
    pub edpm_a: f64,
    pub edpm_b: f64,
    pub redpm: f64,
}

/// `projection, edpm_a, edpm_b, redpm`.
pub fn write_edpm_summary_csv(rows: &[EdpmRow], path: &Path) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["projection", "edpm_a", "edpm_b", "redpm"])?;
    for r in rows {
        w.write_record([
            r.projection.clone(),
            fmt_real(r.edpm_a),
            fmt_real(r.edpm_b),
            fmt_real(r.redpm),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Run totals as `kernel, steps, …, wall_minutes`, one row per trace.
pub fn write_run_stats_csv(traces: &[&Trace], path: &Path) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "kernel",
        "steps",
        "retained",
        "stage1_accepts",
        "stage2_accepts",
        "expensive_evals",
        "cheap_evals",
        "eval_failures",
        "wall_minutes",
    ])?;
    for t in traces {
        let c = &t.counters;
        w.write_record([
            t.kernel.to_string(),
            c.steps.to_string(),
            t.len().to_string(),
            c.stage1_accepts.to_string(),
            c.stage2_accepts.to_string(),
            c.expensive_evals.to_string(),
            c.cheap_evals.to_string(),
            c.eval_failures.to_string(),
            fmt_real(t.wall_minutes()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
