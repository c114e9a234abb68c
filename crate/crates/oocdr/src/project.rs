//! End-to-end projection: sample a reference set, fit once, stream the
//! remaining rows in batches, and transform each batch against the
//! frozen model. Output rows are aligned to the original file order and
//! tagged with provenance, so the result is independent of how the
//! out-of-sample rows were batched.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::io::{read_header, read_matrix, sample_reference, stream_batches, DataMatrix};
use crate::method::{beta_hash, FittedModel, Method};

/// Provenance label of a reference row. OOS rows carry their batch id.
pub const PROVENANCE_REFERENCE: i32 = -1;

/// The fitted reference model plus where its rows came from.
pub struct ReferenceModel {
    pub model: FittedModel,
    /// Sorted original row indices of the reference set.
    pub indices: Vec<u64>,
    pub fit_seconds: f64,
}

/// A complete projection of one dataset.
#[derive(Debug)]
pub struct ProjectionResult {
    /// Row-major rows x m coordinates, aligned to original row order.
    pub coordinates: Vec<f32>,
    /// Per row: `PROVENANCE_REFERENCE` or the OOS batch id.
    pub provenance: Vec<i32>,
    pub m: usize,
    pub method_id: &'static str,
    pub n_ref: usize,
    pub n_batch: usize,
    pub seed: u64,
    pub fit_seconds: f64,
    pub batch_seconds: Vec<f64>,
    pub total_seconds: f64,
    /// OOS points whose affinity rows hit the underflow clamp.
    pub degenerate_points: u64,
}

impl ProjectionResult {
    pub fn n_rows(&self) -> usize {
        self.provenance.len()
    }

    pub fn mean_batch_seconds(&self) -> f64 {
        if self.batch_seconds.is_empty() {
            0.0
        } else {
            self.batch_seconds.iter().sum::<f64>() / self.batch_seconds.len() as f64
        }
    }

    /// The projection as a labeled matrix, provenance in the labels.
    pub fn to_matrix(&self) -> Result<DataMatrix> {
        DataMatrix::from_rows(
            self.coordinates.clone(),
            self.m,
            Some(self.provenance.clone()),
        )
    }
}

/// Fit the method on a seeded random reference sample of the file.
pub fn fit_reference(
    path: impl AsRef<Path>,
    method: &Method,
    n_ref: usize,
    m: usize,
    seed: u64,
) -> Result<ReferenceModel> {
    let (x_a, indices) = sample_reference(&path, n_ref as u64, seed)?;
    let start = Instant::now();
    let model = method.fit(&x_a, m, seed)?;
    Ok(ReferenceModel {
        model,
        indices,
        fit_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Project a whole file: fit on n_ref sampled rows, then stream and
/// transform the rest in batches of n_batch. Holds one reference set
/// and one batch in memory at a time.
pub fn project(
    path: impl AsRef<Path>,
    method: &Method,
    n_ref: usize,
    n_batch: usize,
    seed: u64,
    m: usize,
) -> Result<ProjectionResult> {
    let run_start = Instant::now();
    let header = read_header(&path)?;
    let rows = header.rows as usize;
    if n_ref < 1 || n_ref > rows {
        return Err(Error::validation(format!(
            "--ref-size must be in 1..={rows} for this dataset, got {n_ref}"
        )));
    }
    if n_batch < 1 {
        return Err(Error::validation("--batch-size must be >= 1"));
    }
    let reference = fit_reference(&path, method, n_ref, m, seed)?;
    let hash_before = beta_hash(&reference.model);

    let mut coordinates = vec![0.0f32; rows * m];
    let mut provenance = vec![0i32; rows];
    let ref_coords = reference.model.reference_coords();
    for (slot, &row) in reference.indices.iter().enumerate() {
        let row = row as usize;
        coordinates[row * m..(row + 1) * m]
            .copy_from_slice(&ref_coords[slot * m..(slot + 1) * m]);
        provenance[row] = PROVENANCE_REFERENCE;
    }

    let mut batch_seconds = Vec::new();
    let mut degenerate_points = 0u64;
    for batch in stream_batches(&path, n_batch, &reference.indices)? {
        let batch = batch?;
        let start = Instant::now();
        let out = reference.model.transform(&batch.data)?;
        batch_seconds.push(start.elapsed().as_secs_f64());
        degenerate_points += out.degenerate_points;
        for (slot, &row) in batch.indices.iter().enumerate() {
            let row = row as usize;
            coordinates[row * m..(row + 1) * m]
                .copy_from_slice(&out.coords[slot * m..(slot + 1) * m]);
            provenance[row] = batch.batch_id as i32;
        }
    }
    if beta_hash(&reference.model) != hash_before {
        return Err(Error::validation(
            "internal invariant violated: frozen parameters changed during transform",
        ));
    }
    Ok(ProjectionResult {
        coordinates,
        provenance,
        m,
        method_id: reference.model.method_id(),
        n_ref,
        n_batch,
        seed,
        fit_seconds: reference.fit_seconds,
        batch_seconds,
        total_seconds: run_start.elapsed().as_secs_f64(),
        degenerate_points,
    })
}

/// Run metadata stored next to a projection file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMeta {
    pub method_id: String,
    pub rows: u64,
    pub m: usize,
    pub n_ref: usize,
    pub n_batch: usize,
    pub seed: u64,
    pub fit_seconds: f64,
    pub batch_seconds: Vec<f64>,
    pub total_seconds: f64,
    pub degenerate_points: u64,
}

impl ProjectionMeta {
    fn from_result(result: &ProjectionResult) -> Self {
        ProjectionMeta {
            method_id: result.method_id.to_string(),
            rows: result.n_rows() as u64,
            m: result.m,
            n_ref: result.n_ref,
            n_batch: result.n_batch,
            seed: result.seed,
            fit_seconds: result.fit_seconds,
            batch_seconds: result.batch_seconds.clone(),
            total_seconds: result.total_seconds,
            degenerate_points: result.degenerate_points,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method={}", self.method_id);
        let _ = writeln!(out, "rows={}", self.rows);
        let _ = writeln!(out, "dims={}", self.m);
        let _ = writeln!(out, "ref_size={}", self.n_ref);
        let _ = writeln!(out, "batch_size={}", self.n_batch);
        let _ = writeln!(out, "seed={}", self.seed);
        let _ = writeln!(out, "fit_seconds={}", self.fit_seconds);
        let batches: Vec<String> = self
            .batch_seconds
            .iter()
            .map(|s| s.to_string())
            .collect();
        let _ = writeln!(out, "batch_seconds={}", batches.join(","));
        let _ = writeln!(out, "total_seconds={}", self.total_seconds);
        let _ = writeln!(out, "degenerate_points={}", self.degenerate_points);
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut method_id = None;
        let mut rows = None;
        let mut m = None;
        let mut n_ref = None;
        let mut n_batch = None;
        let mut seed = None;
        let mut fit_seconds = None;
        let mut batch_seconds = None;
        let mut total_seconds = None;
        let mut degenerate_points = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::validation(format!(
                    "metadata line {} has no '=': {line:?}",
                    lineno + 1
                ))
            })?;
            let bad = |what: &str| {
                Error::validation(format!(
                    "metadata line {}: bad {what}: {value:?}",
                    lineno + 1
                ))
            };
            match key {
                "method" => method_id = Some(value.to_string()),
                "rows" => rows = Some(value.parse().map_err(|_| bad("row count"))?),
                "dims" => m = Some(value.parse().map_err(|_| bad("dims"))?),
                "ref_size" => n_ref = Some(value.parse().map_err(|_| bad("ref size"))?),
                "batch_size" => {
                    n_batch = Some(value.parse().map_err(|_| bad("batch size"))?)
                }
                "seed" => seed = Some(value.parse().map_err(|_| bad("seed"))?),
                "fit_seconds" => {
                    fit_seconds = Some(value.parse().map_err(|_| bad("fit seconds"))?)
                }
                "batch_seconds" => {
                    let parsed: std::result::Result<Vec<f64>, _> = if value.is_empty() {
                        Ok(Vec::new())
                    } else {
                        value.split(',').map(str::parse).collect()
                    };
                    batch_seconds = Some(parsed.map_err(|_| bad("batch seconds"))?);
                }
                "total_seconds" => {
                    total_seconds = Some(value.parse().map_err(|_| bad("total seconds"))?)
                }
                "degenerate_points" => {
                    degenerate_points =
                        Some(value.parse().map_err(|_| bad("degenerate count"))?)
                }
                other => {
                    return Err(Error::validation(format!(
                        "metadata line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        let missing = |what: &str| Error::validation(format!("metadata missing {what}"));
        Ok(ProjectionMeta {
            method_id: method_id.ok_or_else(|| missing("method"))?,
            rows: rows.ok_or_else(|| missing("rows"))?,
            m: m.ok_or_else(|| missing("dims"))?,
            n_ref: n_ref.ok_or_else(|| missing("ref_size"))?,
            n_batch: n_batch.ok_or_else(|| missing("batch_size"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            fit_seconds: fit_seconds.ok_or_else(|| missing("fit_seconds"))?,
            batch_seconds: batch_seconds.ok_or_else(|| missing("batch_seconds"))?,
            total_seconds: total_seconds.ok_or_else(|| missing("total_seconds"))?,
            degenerate_points: degenerate_points
                .ok_or_else(|| missing("degenerate_points"))?,
        })
    }
}

/// Path of the metadata sidecar belonging to a projection file.
pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta");
    path.with_file_name(name)
}

/// Write the projection as a labeled matrix file with the provenance
/// in the label column, plus a `key=value` metadata sidecar.
pub fn write_projection(result: &ProjectionResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let matrix = result.to_matrix()?;
    crate::io::write_matrix(path, &matrix)?;
    let meta = ProjectionMeta::from_result(result);
    let sidecar = sidecar_path(path);
    std::fs::write(&sidecar, meta.to_text())
        .map_err(|e| Error::io(&sidecar, e))?;
    Ok(())
}

/// Read back a projection file and its sidecar.
pub fn read_projection(path: impl AsRef<Path>) -> Result<(DataMatrix, ProjectionMeta)> {
    let path = path.as_ref();
    let matrix = read_matrix(path)?;
    if matrix.labels().is_none() {
        return Err(Error::format(path, "projection file has no provenance labels"));
    }
    let sidecar = sidecar_path(path);
    let text = std::fs::read_to_string(&sidecar)
        .map_err(|e| Error::io(&sidecar, e))?;
    let meta = ProjectionMeta::parse(&text)?;
    Ok((matrix, meta))
}
