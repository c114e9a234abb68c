//! The DR-method contract and its three backends.
//!
//! A method is fitted once on the reference set X_a, producing reference
//! coordinates Y_a and frozen parameters (beta). Batches of remaining
//! points are then mapped one point at a time against that frozen state:
//! `transform` never mutates the model, and each point's reduction over
//! the reference set runs in fixed ascending order, which makes the
//! output bit-identical for any batch size, batch order, or worker
//! count.

mod jacobi;
pub mod mds;
pub mod pca;
pub mod tsne;

pub use mds::{MdsModel, MdsOosInit, MdsParams};
pub use pca::{PcaModel, PcaParams};
pub use tsne::{TsneModel, TsneParams};

use crate::error::{Error, Result};
use crate::io::DataMatrix;

/// Default cap on any single n_ref x n_ref scratch matrix, in bytes.
/// Methods that need quadratic state (MDS, t-SNE) refuse to fit above
/// it instead of thrashing the machine.
pub const DEFAULT_MEMORY_CAP_BYTES: u64 = 4 * (1 << 30);

/// Reject a fit whose quadratic scratch space would exceed the cap.
/// `matrices` counts how many n x n f32 buffers the method holds at
/// once.
pub(crate) fn check_memory_cap(
    n_ref: usize,
    matrices: u64,
    cap_bytes: u64,
    method: &str,
) -> Result<()> {
    let need = (n_ref as u64) * (n_ref as u64) * 4 * matrices;
    if need > cap_bytes {
        return Err(Error::capacity(format!(
            "{method} with n_ref={n_ref} needs {need} bytes of pairwise state, \
             above the {cap_bytes}-byte cap; use a smaller --ref-size or raise --memory-cap"
        )));
    }
    Ok(())
}

/// Method selection plus hyperparameters.
#[derive(Debug, Clone)]
pub enum Method {
    Pca(PcaParams),
    Mds(MdsParams),
    Tsne(TsneParams),
}

impl Method {
    pub fn id(&self) -> &'static str {
        match self {
            Method::Pca(_) => "pca",
            Method::Mds(_) => "mds",
            Method::Tsne(_) => "tsne",
        }
    }

    /// Fit on the reference set, producing Y_a and the frozen model.
    /// `m` is the output dimensionality, `seed` drives every random
    /// initialization.
    pub fn fit(&self, x_a: &DataMatrix, m: usize, seed: u64) -> Result<FittedModel> {
        if m < 1 {
            return Err(Error::validation("output dimensionality must be >= 1"));
        }
        match self {
            Method::Pca(p) => Ok(FittedModel::Pca(pca::fit(x_a, m, p)?)),
            Method::Mds(p) => Ok(FittedModel::Mds(mds::fit(x_a, m, seed, p)?)),
            Method::Tsne(p) => Ok(FittedModel::Tsne(tsne::fit(x_a, m, seed, p)?)),
        }
    }
}

/// Per-batch transform output. `degenerate_points` counts OOS points
/// whose affinities needed the underflow clamp (t-SNE only).
#[derive(Debug, Clone)]
pub struct TransformOutput {
    pub coords: Vec<f32>,
    pub degenerate_points: u64,
}

/// A fitted reference model: frozen beta plus the reference coordinates.
#[derive(Debug, Clone)]
pub enum FittedModel {
    Pca(PcaModel),
    Mds(MdsModel),
    Tsne(TsneModel),
}

impl FittedModel {
    pub fn method_id(&self) -> &'static str {
        match self {
            FittedModel::Pca(_) => "pca",
            FittedModel::Mds(_) => "mds",
            FittedModel::Tsne(_) => "tsne",
        }
    }

    pub fn output_dims(&self) -> usize {
        match self {
            FittedModel::Pca(m) => m.output_dims(),
            FittedModel::Mds(m) => m.output_dims(),
            FittedModel::Tsne(m) => m.output_dims(),
        }
    }

    pub fn n_ref(&self) -> usize {
        match self {
            FittedModel::Pca(m) => m.n_ref(),
            FittedModel::Mds(m) => m.n_ref(),
            FittedModel::Tsne(m) => m.n_ref(),
        }
    }

    /// Reference coordinates Y_a, row-major n_ref x m, as stored in
    /// projections.
    pub fn reference_coords(&self) -> Vec<f32> {
        match self {
            FittedModel::Pca(m) => m.reference_coords(),
            FittedModel::Mds(m) => m.reference_coords(),
            FittedModel::Tsne(m) => m.reference_coords(),
        }
    }

    /// Map a batch of out-of-sample rows. Pure in the model; points are
    /// mutually invisible.
    pub fn transform(&self, batch: &DataMatrix) -> Result<TransformOutput> {
        match self {
            FittedModel::Pca(m) => Ok(TransformOutput {
                coords: m.transform(batch)?,
                degenerate_points: 0,
            }),
            FittedModel::Mds(m) => Ok(TransformOutput {
                coords: m.transform(batch)?,
                degenerate_points: 0,
            }),
            FittedModel::Tsne(m) => {
                let (coords, degenerate_points) = m.transform(batch)?;
                Ok(TransformOutput {
                    coords,
                    degenerate_points,
                })
            }
        }
    }

    /// Canonical byte serialization of beta, used by the frozen-beta
    /// hash check and for debugging. Little-endian floats with a method
    /// tag.
    pub fn beta_bytes(&self) -> Vec<u8> {
        match self {
            FittedModel::Pca(m) => m.beta_bytes(),
            FittedModel::Mds(m) => m.beta_bytes(),
            FittedModel::Tsne(m) => m.beta_bytes(),
        }
    }
}

/// FNV-1a over the serialized beta; cheap, dependency-free, and good
/// enough to detect any mutation of frozen parameters.
pub fn beta_hash(model: &FittedModel) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in model.beta_bytes() {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

pub(crate) fn push_f64_slice(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub(crate) fn push_f32_slice(out: &mut Vec<u8>, values: &[f32]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}
