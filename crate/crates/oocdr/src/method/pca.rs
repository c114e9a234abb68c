//! PCA backend. Fit learns the reference mean and the top-m eigenvectors
//! of the reference covariance; transform is the centered linear map
//! (x - mean) V, so OOS cost per point is O(d m) regardless of n_ref.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::DataMatrix;

use super::jacobi;

/// PCA has no stochastic hyperparameters; the struct exists to keep the
/// method contract uniform.
#[derive(Debug, Clone, Copy, Default)]
pub struct PcaParams {}

#[derive(Debug, Clone)]
pub struct PcaModel {
    /// Column means of the reference set, length d.
    mean: Vec<f64>,
    /// Row-major d x m; column j is the j-th principal axis.
    components: Vec<f64>,
    /// Top-m eigenvalues of the reference covariance, descending,
    /// clamped at 0.
    eigenvalues: Vec<f64>,
    /// Reference coordinates, row-major n_ref x m.
    y_a: Vec<f32>,
    d: usize,
    m: usize,
}

/// Covariance eigendecomposition fit.
///
/// C = Xc^T Xc / (n_ref - 1) with Xc the centered reference rows; the
/// cyclic Jacobi solver diagonalizes C; the sign of each component is
/// normalized so its largest-magnitude entry is positive, removing the
/// eigenvector sign ambiguity.
pub fn fit(x_a: &DataMatrix, m: usize, _params: &PcaParams) -> Result<PcaModel> {
    let n = x_a.n_rows();
    let d = x_a.dims();
    if n < 2 {
        return Err(Error::validation("pca requires n_ref >= 2"));
    }
    if m > d {
        return Err(Error::validation(format!(
            "output dimensionality {m} exceeds input dimensionality {d}"
        )));
    }
    let mut mean = vec![0.0f64; d];
    for row in x_a.rows_iter() {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += *v as f64;
        }
    }
    for acc in &mut mean {
        *acc /= n as f64;
    }
    let mut cov = vec![0.0f64; d * d];
    let mut centered = vec![0.0f64; d];
    for row in x_a.rows_iter() {
        for (c, (v, mu)) in centered.iter_mut().zip(row.iter().zip(&mean)) {
            *c = *v as f64 - mu;
        }
        for i in 0..d {
            let ci = centered[i];
            for j in i..d {
                cov[i * d + j] += ci * centered[j];
            }
        }
    }
    let norm = 1.0 / (n as f64 - 1.0);
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] * norm;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    let eig = jacobi::eigh(&cov, d)?;
    let mut components = vec![0.0f64; d * m];
    let mut eigenvalues = Vec::with_capacity(m);
    for col in 0..m {
        eigenvalues.push(eig.values[col].max(0.0));
        // Sign convention: the entry of largest absolute value is
        // positive; ties resolve to the lowest row.
        let mut pivot = 0;
        let mut best = 0.0f64;
        for row in 0..d {
            let v = eig.vectors[row * d + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        let flip = if eig.vectors[pivot * d + col] < 0.0 {
            -1.0
        } else {
            1.0
        };
        for row in 0..d {
            components[row * m + col] = flip * eig.vectors[row * d + col];
        }
    }
    let mut model = PcaModel {
        mean,
        components,
        eigenvalues,
        y_a: Vec::new(),
        d,
        m,
    };
    model.y_a = model.transform(x_a)?;
    model.validate()?;
    Ok(model)
}

impl PcaModel {
    pub fn output_dims(&self) -> usize {
        self.m
    }

    pub fn n_ref(&self) -> usize {
        self.y_a.len() / self.m
    }

    pub fn reference_coords(&self) -> Vec<f32> {
        self.y_a.clone()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Row-major d x m principal axes.
    pub fn components(&self) -> &[f64] {
        &self.components
    }

    /// Y_b = (X_b - mean) V. Row-wise independent; the inner k loop runs
    /// in fixed ascending order so results are reproducible bitwise.
    pub fn transform(&self, batch: &DataMatrix) -> Result<Vec<f32>> {
        Ok(self
            .transform_f64(batch)?
            .into_iter()
            .map(|v| v as f32)
            .collect())
    }

    /// Same map at full precision, for numeric checks.
    pub fn transform_f64(&self, batch: &DataMatrix) -> Result<Vec<f64>> {
        if batch.dims() != self.d {
            return Err(Error::validation(format!(
                "batch has {} dims, model expects {}",
                batch.dims(),
                self.d
            )));
        }
        let m = self.m;
        let rows: Vec<Vec<f64>> = (0..batch.n_rows())
            .into_par_iter()
            .map(|r| {
                let row = batch.row(r);
                let mut out = vec![0.0f64; m];
                for j in 0..m {
                    let mut acc = 0.0f64;
                    for k in 0..self.d {
                        acc += (row[k] as f64 - self.mean[k]) * self.components[k * m + j];
                    }
                    out[j] = acc;
                }
                out
            })
            .collect();
        Ok(rows.into_iter().flatten().collect())
    }

    fn validate(&self) -> Result<()> {
        let (d, m) = (self.d, self.m);
        for i in 0..m {
            for j in 0..m {
                let dot: f64 = (0..d)
                    .map(|k| self.components[k * m + i] * self.components[k * m + j])
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-8 {
                    return Err(Error::validation(format!(
                        "principal axes lost orthonormality: |V^T V - I| = {:.3e} at ({i},{j})",
                        (dot - want).abs()
                    )));
                }
            }
        }
        if self.eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::validation("eigenvalues not sorted descending"));
        }
        if self.y_a.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite reference coordinates"));
        }
        Ok(())
    }

    pub fn beta_bytes(&self) -> Vec<u8> {
        let mut out = b"pca\0".to_vec();
        out.extend_from_slice(&(self.d as u32).to_le_bytes());
        out.extend_from_slice(&(self.m as u32).to_le_bytes());
        super::push_f64_slice(&mut out, &self.mean);
        super::push_f64_slice(&mut out, &self.eigenvalues);
        super::push_f64_slice(&mut out, &self.components);
        out
    }
}
