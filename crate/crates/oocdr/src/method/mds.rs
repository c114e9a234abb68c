//! Metric MDS backend.
//!
//! Fit runs full-gradient descent on raw stress over the reference set
//! with a fixed step size and iteration count; beta is the discrete
//! mapping X_a -> Y_a itself. Transform performs single scaling: each
//! OOS point descends its own single-point stress against the frozen
//! reference coordinates, so points never interact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::DataMatrix;
use crate::numeric::sqdist_f32;

use super::check_memory_cap;

/// Initialization of an OOS point's descent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MdsOosInit {
    /// Start at the low-dimensional position of the nearest reference
    /// neighbor in high-dimensional space.
    #[default]
    NearestNeighbor,
    /// Start at the centroid of all reference coordinates.
    Mean,
}

#[derive(Debug, Clone)]
pub struct MdsParams {
    /// Gradient step size eta.
    pub step_size: f64,
    /// Fit iterations T.
    pub iterations: usize,
    /// Descent iterations per OOS point.
    pub oos_iterations: usize,
    /// Distance floor for low-dimensional denominators.
    pub epsilon: f64,
    pub init: MdsOosInit,
    /// Cap on the n_ref^2 distance matrix.
    pub memory_cap_bytes: u64,
}

impl Default for MdsParams {
    fn default() -> Self {
        MdsParams {
            step_size: 1e-4,
            iterations: 500,
            oos_iterations: 500,
            epsilon: 1e-9,
            init: MdsOosInit::default(),
            memory_cap_bytes: super::DEFAULT_MEMORY_CAP_BYTES,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MdsModel {
    /// Reference rows in the high-dimensional space.
    x_a: DataMatrix,
    /// Reference coordinates, row-major n_ref x m, full precision.
    y_a: Vec<f64>,
    m: usize,
    params: MdsParams,
}

/// Raw stress sum over unordered pairs, sum (d_ij - |y_i - y_j|)^2.
pub fn raw_stress(dists: &[f32], y: &[f64], n: usize, m: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let r = low_dist(y, i, j, m);
            let d = dists[i * n + j] as f64 - r;
            s += d * d;
        }
    }
    s
}

fn low_dist(y: &[f64], i: usize, j: usize, m: usize) -> f64 {
    let mut s = 0.0;
    for c in 0..m {
        let d = y[i * m + c] - y[j * m + c];
        s += d * d;
    }
    s.sqrt()
}

/// Gradient-descent fit. The pairwise high-dimensional distances are
/// computed once; every iteration evaluates the full per-point deltas
/// from the current Y and applies them simultaneously.
pub fn fit(x_a: &DataMatrix, m: usize, seed: u64, params: &MdsParams) -> Result<MdsModel> {
    let n = x_a.n_rows();
    if n < 2 {
        return Err(Error::validation("mds requires n_ref >= 2"));
    }
    if params.step_size <= 0.0 || params.epsilon <= 0.0 || params.iterations < 1 {
        return Err(Error::validation(
            "mds requires step_size > 0, epsilon > 0, iterations >= 1",
        ));
    }
    check_memory_cap(n, 1, params.memory_cap_bytes, "mds")?;
    let mut dists = vec![0.0f32; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = sqdist_f32(x_a.row(i), x_a.row(j)).sqrt() as f32;
            dists[i * n + j] = d;
            dists[j * n + i] = d;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y: Vec<f64> = (0..n * m)
        .map(|_| 1e-2 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let eta = params.step_size;
    let eps = params.epsilon;
    let mut deltas = vec![0.0f64; n * m];
    for _ in 0..params.iterations {
        for (i, delta) in deltas.chunks_mut(m).enumerate() {
            delta.fill(0.0);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let r = low_dist(&y, i, j, m);
                let coef = 1.0 - dists[i * n + j] as f64 / r.max(eps);
                for c in 0..m {
                    delta[c] += coef * (y[i * m + c] - y[j * m + c]);
                }
            }
        }
        for (yv, dv) in y.iter_mut().zip(&deltas) {
            *yv -= eta * dv;
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation(
            "mds fit diverged to non-finite coordinates; lower --step-size",
        ));
    }
    Ok(MdsModel {
        x_a: x_a.clone(),
        y_a: y,
        m,
        params: params.clone(),
    })
}

/// Single-point raw stress of an OOS point against the fixed reference:
/// sum_i (d_i - |y' - y_i|)^2.
pub fn single_point_stress(y_prime: &[f64], y_a: &[f64], m: usize, dists: &[f64]) -> f64 {
    let n = y_a.len() / m;
    let mut s = 0.0;
    for i in 0..n {
        let mut r2 = 0.0;
        for c in 0..m {
            let d = y_prime[c] - y_a[i * m + c];
            r2 += d * d;
        }
        let d = dists[i] - r2.sqrt();
        s += d * d;
    }
    s
}

/// The single-scaling delta,
/// sum_i (1 - d_i / max(|y' - y_i|, eps)) (y' - y_i), summed over the
/// reference in ascending order. Half the true gradient of
/// [`single_point_stress`]; the positive scale difference is absorbed by
/// the step size.
pub fn single_point_gradient(
    y_prime: &[f64],
    y_a: &[f64],
    m: usize,
    dists: &[f64],
    epsilon: f64,
) -> Vec<f64> {
    let n = y_a.len() / m;
    let mut delta = vec![0.0f64; m];
    for i in 0..n {
        let mut r2 = 0.0;
        for c in 0..m {
            let d = y_prime[c] - y_a[i * m + c];
            r2 += d * d;
        }
        let coef = 1.0 - dists[i] / r2.sqrt().max(epsilon);
        for c in 0..m {
            delta[c] += coef * (y_prime[c] - y_a[i * m + c]);
        }
    }
    delta
}

impl MdsModel {
    pub fn output_dims(&self) -> usize {
        self.m
    }

    pub fn n_ref(&self) -> usize {
        self.y_a.len() / self.m
    }

    pub fn reference_coords(&self) -> Vec<f32> {
        self.y_a.iter().map(|&v| v as f32).collect()
    }

    pub fn reference_coords_f64(&self) -> &[f64] {
        &self.y_a
    }

    pub fn params(&self) -> &MdsParams {
        &self.params
    }

    /// Single scaling of every batch row independently; parallel over
    /// rows, each row's reduction over the reference fixed ascending.
    pub fn transform(&self, batch: &DataMatrix) -> Result<Vec<f32>> {
        if batch.dims() != self.x_a.dims() {
            return Err(Error::validation(format!(
                "batch has {} dims, model expects {}",
                batch.dims(),
                self.x_a.dims()
            )));
        }
        let rows: Vec<Vec<f32>> = (0..batch.n_rows())
            .into_par_iter()
            .map(|r| {
                let y = self.transform_point(batch.row(r));
                y.into_iter().map(|v| v as f32).collect()
            })
            .collect();
        Ok(rows.into_iter().flatten().collect())
    }

    /// Full-precision single-point transform, exposed for numeric tests.
    pub fn transform_point(&self, x_prime: &[f32]) -> Vec<f64> {
        let n = self.n_ref();
        let m = self.m;
        let dists: Vec<f64> = (0..n)
            .map(|i| sqdist_f32(x_prime, self.x_a.row(i)).sqrt())
            .collect();
        let mut y_prime = self.initial_position(&dists);
        for _ in 0..self.params.oos_iterations {
            let delta = single_point_gradient(
                &y_prime,
                &self.y_a,
                m,
                &dists,
                self.params.epsilon,
            );
            for c in 0..m {
                y_prime[c] -= self.params.step_size * delta[c];
            }
        }
        y_prime
    }

    fn initial_position(&self, dists: &[f64]) -> Vec<f64> {
        let m = self.m;
        match self.params.init {
            MdsOosInit::NearestNeighbor => {
                let mut best = 0usize;
                for (i, d) in dists.iter().enumerate() {
                    if *d < dists[best] {
                        best = i;
                    }
                }
                self.y_a[best * m..(best + 1) * m].to_vec()
            }
            MdsOosInit::Mean => {
                let n = self.n_ref() as f64;
                let mut mean = vec![0.0f64; m];
                for row in self.y_a.chunks_exact(m) {
                    for (acc, v) in mean.iter_mut().zip(row) {
                        *acc += v;
                    }
                }
                mean.iter_mut().for_each(|v| *v /= n);
                mean
            }
        }
    }

    pub fn beta_bytes(&self) -> Vec<u8> {
        let mut out = b"mds\0".to_vec();
        out.extend_from_slice(&(self.x_a.dims() as u32).to_le_bytes());
        out.extend_from_slice(&(self.m as u32).to_le_bytes());
        super::push_f32_slice(&mut out, self.x_a.data());
        super::push_f64_slice(&mut out, &self.y_a);
        out.extend_from_slice(&self.params.step_size.to_le_bytes());
        out.extend_from_slice(&self.params.epsilon.to_le_bytes());
        out
    }
}
