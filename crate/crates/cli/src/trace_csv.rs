//! `trace.csv`: one row per oracle evaluation,
//! columns `iter, kl, a_0..a_{n-1}, freq_0..freq_{n-1}`.

use std::io::{Read, Write};

use dist_align::SolverTrace;

use crate::error::CliError;

/// Shortest decimal that round-trips `x` rounded to 9 significant digits.
pub fn sig9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

pub fn header(n: usize) -> Vec<String> {
    let mut h = vec!["iter".to_string(), "kl".to_string()];
    h.extend((0..n).map(|i| format!("a_{i}")));
    h.extend((0..n).map(|i| format!("freq_{i}")));
    h
}

pub fn write_trace<W: Write>(out: W, n: usize, trace: &SolverTrace<f64>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header(n)).map_err(io)?;
    for r in trace.records() {
        let mut row = vec![r.iteration.to_string(), sig9(r.kl)];
        row.extend(r.a.as_slice().iter().map(|&v| sig9(v)));
        row.extend(r.sbar.probs().iter().map(|&v| sig9(v)));
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub kl: f64,
    pub a: Vec<f64>,
    pub freq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub n: usize,
    pub rows: Vec<TraceRow>,
}

impl TraceTable {
    /// Parses a trace file; the header must match [`header`] exactly and at
    /// least one row must follow.
    pub fn read<R: Read>(input: R) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_reader(input);
        let head: Vec<String> = r
            .headers()
            .map_err(|e| CliError::Trace(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if head.is_empty() || head.iter().all(|h| h.is_empty()) {
            return Err(CliError::Trace("empty trace file".into()));
        }
        if head.len() < 6 || !head.len().is_multiple_of(2) {
            return Err(CliError::Trace(format!("unexpected header with {} columns", head.len())));
        }
        let n = (head.len() - 2) / 2;
        if head != header(n) {
            return Err(CliError::Trace(format!("unexpected header {}", head.join(","))));
        }
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| CliError::Trace(e.to_string()))?;
            let num = |i: usize| -> Result<f64, CliError> {
                rec[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| CliError::Trace(format!("row {}: column {}: {e}", line + 1, head[i])))
            };
            let iter = rec[0]
                .trim()
                .parse::<usize>()
                .map_err(|e| CliError::Trace(format!("row {}: iter: {e}", line + 1)))?;
            rows.push(TraceRow {
                iter,
                kl: num(1)?,
                a: (2..2 + n).map(num).collect::<Result<_, _>>()?,
                freq: (2 + n..2 + 2 * n).map(num).collect::<Result<_, _>>()?,
            });
        }
        if rows.is_empty() {
            return Err(CliError::Trace("trace has a header but no rows".into()));
        }
        Ok(Self { n, rows })
    }

    /// Rows grouped by `iter` in order of first appearance, with frequencies
    /// and loss averaged over each group.
    pub fn per_iteration(&self) -> Vec<TraceRow> {
        let mut out: Vec<(TraceRow, usize)> = Vec::new();
        for row in &self.rows {
            match out.last_mut() {
                Some((acc, count)) if acc.iter == row.iter => {
                    acc.kl += row.kl;
                    acc.freq.iter_mut().zip(&row.freq).for_each(|(s, f)| *s += f);
                    *count += 1;
                }
                _ => out.push((row.clone(), 1)),
            }
        }
        out.into_iter()
            .map(|(mut acc, count)| {
                let c = count as f64;
                acc.kl /= c;
                acc.freq.iter_mut().for_each(|f| *f /= c);
                acc
            })
            .collect()
    }
}
