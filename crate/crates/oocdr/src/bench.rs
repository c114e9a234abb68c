//! Runtime measurement across reference sizes: fit seconds, per-point
//! OOS seconds, and totals per size, emitted as CSV rows that
//! [`timing_model_check`] can consume.

use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::io::stream_batches;
use crate::method::Method;
use crate::numeric::{linear_fit, LinearFit};
use crate::project::fit_reference;

/// One benchmark sweep: the method is fitted at each reference size and
/// a bounded number of OOS points is transformed to measure per-point
/// cost without projecting the whole file.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub n_batch: usize,
    pub seed: u64,
    pub m: usize,
    /// Upper bound on OOS points measured per size; `None` projects all
    /// remaining rows.
    pub oos_sample: Option<u64>,
}

/// Default batch sizes: 100,000 points per batch, 1,000 for MDS whose
/// per-point cost is two orders of magnitude higher.
pub fn default_batch_size(method: &Method) -> usize {
    match method {
        Method::Mds(_) => 1_000,
        _ => 100_000,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method_id: String,
    pub n_ref: usize,
    pub n_batch: usize,
    /// Reference sampling plus fit, i.e. building the reference
    /// projection.
    pub fit_seconds: f64,
    pub oos_points: u64,
    /// Batch read plus transform time over the measured points.
    pub oos_seconds_total: f64,
    pub oos_seconds_per_point: f64,
    pub total_seconds: f64,
}

pub const CSV_HEADER: &str =
    "method,n_ref,n_batch,fit_seconds,oos_points,oos_seconds_total,oos_seconds_per_point,total_seconds";

impl BenchRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.method_id,
            self.n_ref,
            self.n_batch,
            self.fit_seconds,
            self.oos_points,
            self.oos_seconds_total,
            self.oos_seconds_per_point,
            self.total_seconds
        )
    }

    pub fn parse_csv(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::validation(format!(
                "bench CSV row has {} fields, expected 8: {line:?}",
                fields.len()
            )));
        }
        let bad = |what: &str| Error::validation(format!("bench CSV: bad {what}: {line:?}"));
        Ok(BenchRow {
            method_id: fields[0].to_string(),
            n_ref: fields[1].parse().map_err(|_| bad("n_ref"))?,
            n_batch: fields[2].parse().map_err(|_| bad("n_batch"))?,
            fit_seconds: fields[3].parse().map_err(|_| bad("fit_seconds"))?,
            oos_points: fields[4].parse().map_err(|_| bad("oos_points"))?,
            oos_seconds_total: fields[5].parse().map_err(|_| bad("oos_seconds_total"))?,
            oos_seconds_per_point: fields[6]
                .parse()
                .map_err(|_| bad("oos_seconds_per_point"))?,
            total_seconds: fields[7].parse().map_err(|_| bad("total_seconds"))?,
        })
    }
}

pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

pub fn rows_from_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(header) if header.trim() == CSV_HEADER => {}
        other => {
            return Err(Error::validation(format!(
                "bench CSV header mismatch: {other:?}"
            )))
        }
    }
    lines.map(BenchRow::parse_csv).collect()
}

/// Measure one method over every configured reference size.
pub fn run_bench(
    path: impl AsRef<Path>,
    method: &Method,
    config: &BenchConfig,
) -> Result<Vec<BenchRow>> {
    if config.sizes.len() < 2 {
        return Err(Error::validation(
            "bench requires at least 2 reference sizes",
        ));
    }
    if config.n_batch < 1 {
        return Err(Error::validation("--batch-size must be >= 1"));
    }
    let mut rows = Vec::with_capacity(config.sizes.len());
    for &n_ref in &config.sizes {
        let size_start = Instant::now();
        let reference = fit_reference(&path, method, n_ref, config.m, config.seed)?;
        let fit_seconds = size_start.elapsed().as_secs_f64();
        let mut oos_points = 0u64;
        let mut oos_seconds_total = 0.0f64;
        let mut stream = stream_batches(&path, config.n_batch, &reference.indices)?;
        loop {
            if let Some(cap) = config.oos_sample {
                if oos_points >= cap {
                    break;
                }
            }
            let batch_start = Instant::now();
            let Some(batch) = stream.next() else {
                break;
            };
            let batch = batch?;
            reference.model.transform(&batch.data)?;
            oos_seconds_total += batch_start.elapsed().as_secs_f64();
            oos_points += batch.data.n_rows() as u64;
        }
        rows.push(BenchRow {
            method_id: method.id().to_string(),
            n_ref,
            n_batch: config.n_batch,
            fit_seconds,
            oos_points,
            oos_seconds_total,
            oos_seconds_per_point: if oos_points == 0 {
                0.0
            } else {
                oos_seconds_total / oos_points as f64
            },
            total_seconds: size_start.elapsed().as_secs_f64(),
        });
    }
    Ok(rows)
}

/// Decomposition of measured totals plus the per-point scaling fit.
#[derive(Debug, Clone)]
pub struct TimingReport {
    pub method_id: String,
    /// Per size: (n_ref, relative gap between total and fit + OOS sum).
    pub accounting: Vec<(usize, f64)>,
    /// Least squares of per-point OOS seconds against n_ref.
    pub per_point_fit: Option<LinearFit>,
    /// Max over min per-point OOS seconds across sizes.
    pub per_point_ratio: f64,
}

impl TimingReport {
    pub fn to_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for (n_ref, gap) in &self.accounting {
            lines.push(format!(
                "accounting n_ref={n_ref} relative_gap={gap:.6}"
            ));
        }
        if let Some(fit) = &self.per_point_fit {
            lines.push(format!(
                "per_point_linear slope={} intercept={} r_squared={}",
                fit.slope, fit.intercept, fit.r_squared
            ));
        }
        lines.push(format!("per_point_ratio={}", self.per_point_ratio));
        lines
    }
}

/// Check the runtime model over a sweep of one method: the accounting
/// identity total = fit + OOS time per size, and how per-point OOS time
/// scales with the reference size.
pub fn timing_model_check(rows: &[BenchRow]) -> Result<TimingReport> {
    if rows.len() < 3 {
        return Err(Error::validation(
            "timing model check requires at least 3 measured reference sizes",
        ));
    }
    let method_id = rows[0].method_id.clone();
    if rows.iter().any(|r| r.method_id != method_id) {
        return Err(Error::validation(
            "timing model check requires rows from a single method",
        ));
    }
    let mut accounting = Vec::with_capacity(rows.len());
    for row in rows {
        let parts = row.fit_seconds + row.oos_seconds_total;
        let gap = (row.total_seconds - parts).abs() / row.total_seconds.max(1e-12);
        accounting.push((row.n_ref, gap));
    }
    let measured: Vec<&BenchRow> = rows.iter().filter(|r| r.oos_points > 0).collect();
    let xs: Vec<f64> = measured.iter().map(|r| r.n_ref as f64).collect();
    let ys: Vec<f64> = measured.iter().map(|r| r.oos_seconds_per_point).collect();
    let per_point_fit = linear_fit(&xs, &ys);
    let per_point_ratio = match (
        ys.iter().cloned().fold(f64::INFINITY, f64::min),
        ys.iter().cloned().fold(0.0f64, f64::max),
    ) {
        (min, max) if min > 0.0 => max / min,
        _ => f64::INFINITY,
    };
    Ok(TimingReport {
        method_id,
        accounting,
        per_point_fit,
        per_point_ratio,
    })
}
