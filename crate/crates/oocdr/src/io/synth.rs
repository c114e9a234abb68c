//! Synthetic isotropic Gaussian blob generation.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

use super::{DataMatrix, MatrixHeader, MatrixWriter};

/// Parameters of a synthetic blob dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    /// Total number of points.
    pub n: u64,
    /// Dimensionality.
    pub d: u32,
    /// Number of Gaussian clusters.
    pub k_clusters: u32,
    /// Isotropic standard deviation of each cluster.
    pub cluster_std: f64,
    /// RNG seed; the full draw sequence is fixed, so outputs are stable.
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.k_clusters == 0 {
            return Err(Error::validation("k_clusters must be >= 1"));
        }
        if self.n < self.k_clusters as u64 {
            return Err(Error::validation(format!(
                "n {} must be >= k_clusters {}",
                self.n, self.k_clusters
            )));
        }
        if self.d == 0 {
            return Err(Error::validation("d must be >= 1"));
        }
        if !(self.cluster_std > 0.0) {
            return Err(Error::validation("cluster_std must be > 0"));
        }
        Ok(())
    }
}

/// Draw the cluster centers, uniform over [-10,10]^d.
fn centers(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut centers = Vec::with_capacity((spec.k_clusters * spec.d) as usize);
    for _ in 0..spec.k_clusters * spec.d {
        centers.push(rng.gen_range(-10.0..=10.0));
    }
    centers
}

fn point(spec: &SyntheticSpec, centers: &[f64], i: u64, rng: &mut ChaCha8Rng, out: &mut Vec<f32>) {
    let d = spec.d as usize;
    let cluster = (i % spec.k_clusters as u64) as usize;
    let center = &centers[cluster * d..(cluster + 1) * d];
    out.clear();
    for &c in center {
        let z: f64 = rng.sample(StandardNormal);
        out.push((c + spec.cluster_std * z) as f32);
    }
}

/// Generate blobs in memory. Points are assigned to clusters round-robin
/// (point i belongs to cluster i mod k) and labels carry the cluster
/// index.
pub fn generate_blobs(spec: &SyntheticSpec) -> Result<DataMatrix> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers = centers(spec, &mut rng);
    let d = spec.d as usize;
    let mut data = Vec::with_capacity(spec.n as usize * d);
    let mut labels = Vec::with_capacity(spec.n as usize);
    let mut row = Vec::with_capacity(d);
    for i in 0..spec.n {
        point(spec, &centers, i, &mut rng, &mut row);
        data.extend_from_slice(&row);
        labels.push((i % spec.k_clusters as u64) as i32);
    }
    DataMatrix::from_rows(data, d, Some(labels))
}

/// Generate blobs row by row straight to a matrix file, never holding
/// more than one row. Identical draw sequence to [`generate_blobs`], so
/// for the same spec the produced file matches the in-memory variant
/// byte for byte.
pub fn generate_blobs_to_file(spec: &SyntheticSpec, path: impl AsRef<Path>) -> Result<MatrixHeader> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers = centers(spec, &mut rng);
    let mut writer = MatrixWriter::create(path, spec.d, true)?;
    let mut row = Vec::with_capacity(spec.d as usize);
    for i in 0..spec.n {
        point(spec, &centers, i, &mut rng, &mut row);
        writer.write_row(&row, Some((i % spec.k_clusters as u64) as i32))?;
    }
    writer.finish()
}
