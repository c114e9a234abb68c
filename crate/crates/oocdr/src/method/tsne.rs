//! Exact t-SNE backend.
//!
//! Fit calibrates one bandwidth per reference point to a target
//! perplexity, symmetrizes the conditional affinities, and minimizes
//! KL(P || Q) with the exact quadratic gradient. Transform maps each
//! OOS point alone: a fresh bandwidth is bisected for the point, its
//! low-dimensional position starts at the mean of its nearest reference
//! neighbors' coordinates, and descent runs against the frozen Y_a.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::DataMatrix;
use crate::metrics::pairwise::neighbor_key;
use crate::numeric::sqdist_f32;

use super::check_memory_cap;

/// Precision bracket for the perplexity bisection. The search is
/// geometric because the bracket spans 24 decades.
const BETA_LO: f64 = 1e-12;
const BETA_HI: f64 = 1e12;
/// Tolerance on log-perplexity and the step budget of one bisection.
const LOG_PERP_TOL: f64 = 1e-5;
const MAX_BISECT_STEPS: usize = 64;
/// Exponent floor: exp arguments below this are clamped so affinity
/// rows stay renormalizable instead of underflowing to all zeros.
const EXP_FLOOR: f64 = -700.0;

#[derive(Debug, Clone)]
pub struct TsneParams {
    pub perplexity: f64,
    /// Fit iterations T.
    pub iterations: usize,
    /// Early exaggeration factor and how many leading iterations use it.
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    /// Momentum schedule: early value, switch iteration, late value.
    pub momentum_early: f64,
    pub momentum_late: f64,
    pub momentum_switch: usize,
    /// Descent iterations per OOS point.
    pub oos_iterations: usize,
    /// Neighbor count for the informed OOS initialization.
    pub k_init: usize,
    pub memory_cap_bytes: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            perplexity: 30.0,
            iterations: 750,
            exaggeration: 12.0,
            exaggeration_iters: 250,
            momentum_early: 0.5,
            momentum_late: 0.8,
            momentum_switch: 250,
            oos_iterations: 100,
            k_init: 25,
            memory_cap_bytes: super::DEFAULT_MEMORY_CAP_BYTES,
        }
    }
}

/// Outcome of one perplexity bisection.
#[derive(Debug, Clone, Copy)]
pub struct RowCalibration {
    /// Chosen precision; the bandwidth is sigma = sqrt(1 / (2 beta)).
    pub beta: f64,
    /// Achieved log-perplexity at `beta`.
    pub log_perplexity: f64,
    /// True when the target was unreachable inside the bracket or the
    /// step budget ran out.
    pub clipped: bool,
    /// True when every exponent hit the underflow clamp, leaving a
    /// uniform (meaningless) affinity row.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct TsneModel {
    x_a: DataMatrix,
    /// Reference coordinates, row-major n_ref x m, full precision.
    y_a: Vec<f64>,
    /// Per-reference precision beta_i from the fit calibration.
    betas: Vec<f64>,
    /// Rows whose fit calibration was clipped or degenerate.
    clipped_rows: u64,
    m: usize,
    params: TsneParams,
}

/// Normalized affinities for one row. `skip` excludes the self entry
/// during fit. Writes p into `out` and returns the log-perplexity.
fn eval_row(d2: &[f64], skip: Option<usize>, beta: f64, out: &mut [f64]) -> f64 {
    let mut sum = 0.0;
    // H = ln(sum) - sum_j w_j * arg_j / sum, written with the clamped
    // arguments so the identity holds exactly as computed.
    let mut weighted_arg = 0.0;
    for (j, &d) in d2.iter().enumerate() {
        if skip == Some(j) {
            out[j] = 0.0;
            continue;
        }
        let arg = (-beta * d).max(EXP_FLOOR);
        let w = arg.exp();
        out[j] = w;
        sum += w;
        weighted_arg += w * arg;
    }
    for v in out.iter_mut() {
        *v /= sum;
    }
    sum.ln() - weighted_arg / sum
}

/// Geometric bisection of the precision to the target perplexity.
/// Leaves the final normalized affinities in `out`.
pub fn calibrate_row(
    d2: &[f64],
    skip: Option<usize>,
    perplexity: f64,
    out: &mut [f64],
) -> RowCalibration {
    let target = perplexity.ln();
    let min_d2 = d2
        .iter()
        .enumerate()
        .filter(|(j, _)| skip != Some(*j))
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    // Even the nearest entry underflows when beta * min_d2 passes the
    // floor; the row is then uniform noise.
    let degenerate_at = |beta: f64| beta * min_d2 >= -EXP_FLOOR;
    let done = |beta: f64, h: f64, clipped: bool| RowCalibration {
        beta,
        log_perplexity: h,
        clipped,
        degenerate: degenerate_at(beta),
    };
    // Perplexity decreases as beta grows until the exponent clamp
    // flattens the row to uniform, so only the low end is a valid
    // bracket test; an unreachable target on the high side surfaces as
    // a failed convergence check below.
    let mut lo = BETA_LO;
    let mut hi = BETA_HI;
    let h_lo = eval_row(d2, skip, lo, out);
    if h_lo <= target - LOG_PERP_TOL {
        return done(lo, h_lo, true);
    }
    let mut beta = (lo * hi).sqrt();
    let mut h = eval_row(d2, skip, beta, out);
    let mut steps = 1;
    while (h - target).abs() > LOG_PERP_TOL && steps < MAX_BISECT_STEPS {
        if h > target {
            lo = beta;
        } else {
            hi = beta;
        }
        beta = (lo * hi).sqrt();
        h = eval_row(d2, skip, beta, out);
        steps += 1;
    }
    done(beta, h, (h - target).abs() > LOG_PERP_TOL)
}

/// Symmetrized affinity matrix P for the reference set, plus the
/// per-row calibration outcomes. P is row-major n x n, f32, sums to 1.
pub fn fit_affinities(
    x_a: &DataMatrix,
    perplexity: f64,
) -> Result<(Vec<f32>, Vec<RowCalibration>)> {
    let n = x_a.n_rows();
    let mut p = vec![0.0f32; n * n];
    let calibrations: Vec<RowCalibration> = p
        .par_chunks_mut(n)
        .enumerate()
        .map_init(
            || (vec![0.0f64; n], vec![0.0f64; n]),
            |scratch, (i, p_row)| {
                let (d2, row) = scratch;
                for j in 0..n {
                    d2[j] = sqdist_f32(x_a.row(i), x_a.row(j));
                }
                let cal = calibrate_row(d2, Some(i), perplexity, row);
                for j in 0..n {
                    p_row[j] = row[j] as f32;
                }
                cal
            },
        )
        .collect();
    // P = (p_{j|i} + p_{i|j}) / (2n), symmetrized in place.
    let scale = 1.0 / (2.0 * n as f64);
    for i in 0..n {
        for j in i + 1..n {
            let v = ((p[i * n + j] as f64 + p[j * n + i] as f64) * scale) as f32;
            p[i * n + j] = v;
            p[j * n + i] = v;
        }
        p[i * n + i] = 0.0;
    }
    let total: f64 = p.iter().map(|&v| v as f64).sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::validation(format!(
            "affinity matrix sums to {total}, expected 1; input degenerate"
        )));
    }
    Ok((p, calibrations))
}

/// KL(P || Q) at the embedding `y`, skipping zero P entries.
pub fn kl_divergence(p: &[f32], y: &[f64], n: usize, m: usize) -> f64 {
    let mut z = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            z += 2.0 / (1.0 + low_sqdist(y, i, j, m));
        }
    }
    let mut kl = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            let pij = p[i * n + j] as f64;
            if pij <= 0.0 {
                continue;
            }
            let q = 1.0 / (1.0 + low_sqdist(y, i, j, m)) / z;
            kl += pij * (pij / q).ln();
        }
    }
    kl
}

/// Exact KL gradient, 4 sum_j (P_ij - Q_ij) w_ij (y_i - y_j) per point.
pub fn kl_gradient(p: &[f32], y: &[f64], n: usize, m: usize) -> Vec<f64> {
    let mut w = vec![0.0f64; n * n];
    let mut z = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let wij = 1.0 / (1.0 + low_sqdist(y, i, j, m));
            w[i * n + j] = wij;
            w[j * n + i] = wij;
            z += 2.0 * wij;
        }
    }
    let mut grad = vec![0.0f64; n * m];
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            let wij = w[i * n + j];
            let coef = 4.0 * (p[i * n + j] as f64 - wij / z) * wij;
            for c in 0..m {
                grad[i * m + c] += coef * (y[i * m + c] - y[j * m + c]);
            }
        }
    }
    grad
}

fn low_sqdist(y: &[f64], i: usize, j: usize, m: usize) -> f64 {
    let mut s = 0.0;
    for c in 0..m {
        let d = y[i * m + c] - y[j * m + c];
        s += d * d;
    }
    s
}

pub fn fit(x_a: &DataMatrix, m: usize, seed: u64, params: &TsneParams) -> Result<TsneModel> {
    let n = x_a.n_rows();
    if params.perplexity < 1.0 || !params.perplexity.is_finite() {
        return Err(Error::validation("perplexity must be finite and >= 1"));
    }
    if (n as f64) < 3.0 * params.perplexity {
        return Err(Error::validation(format!(
            "tsne requires n_ref >= 3 * perplexity; got n_ref={n}, perplexity={}",
            params.perplexity
        )));
    }
    if params.iterations < 1 || params.k_init < 1 {
        return Err(Error::validation(
            "tsne requires iterations >= 1 and k_init >= 1",
        ));
    }
    // Two quadratic buffers live at once: P and the w_ij scratch.
    check_memory_cap(n, 2, params.memory_cap_bytes, "tsne")?;
    let (p, calibrations) = fit_affinities(x_a, params.perplexity)?;
    let clipped_rows = calibrations
        .iter()
        .filter(|c| c.clipped || c.degenerate)
        .count() as u64;
    let betas: Vec<f64> = calibrations.iter().map(|c| c.beta).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y: Vec<f64> = (0..n * m)
        .map(|_| 1e-4 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let lr = (n as f64 / 12.0).max(50.0);
    let mut w = vec![0.0f32; n * n];
    let mut vel = vec![0.0f64; n * m];
    let mut grad = vec![0.0f64; m];
    for iter in 0..params.iterations {
        let ex = if iter < params.exaggeration_iters {
            params.exaggeration
        } else {
            1.0
        };
        let mu = if iter < params.momentum_switch {
            params.momentum_early
        } else {
            params.momentum_late
        };
        let mut z = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                let wij = (1.0 / (1.0 + low_sqdist(&y, i, j, m))) as f32;
                w[i * n + j] = wij;
                w[j * n + i] = wij;
                z += 2.0 * wij as f64;
            }
        }
        for i in 0..n {
            grad.fill(0.0);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let wij = w[i * n + j] as f64;
                let coef = 4.0 * (ex * p[i * n + j] as f64 - wij / z) * wij;
                for c in 0..m {
                    grad[c] += coef * (y[i * m + c] - y[j * m + c]);
                }
            }
            for c in 0..m {
                vel[i * m + c] = mu * vel[i * m + c] - lr * grad[c];
            }
        }
        for (yv, v) in y.iter_mut().zip(&vel) {
            *yv += v;
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation(
            "tsne fit diverged to non-finite coordinates",
        ));
    }
    Ok(TsneModel {
        x_a: x_a.clone(),
        y_a: y,
        betas,
        clipped_rows,
        m,
        params: params.clone(),
    })
}

impl TsneModel {
    pub fn output_dims(&self) -> usize {
        self.m
    }

    pub fn n_ref(&self) -> usize {
        self.betas.len()
    }

    pub fn reference_coords(&self) -> Vec<f32> {
        self.y_a.iter().map(|&v| v as f32).collect()
    }

    pub fn reference_coords_f64(&self) -> &[f64] {
        &self.y_a
    }

    /// Calibrated bandwidths sigma_i = sqrt(1 / (2 beta_i)).
    pub fn sigmas(&self) -> Vec<f64> {
        self.betas.iter().map(|&b| (1.0 / (2.0 * b)).sqrt()).collect()
    }

    /// Reference rows whose calibration hit the bracket or underflow
    /// limits during fit.
    pub fn clipped_rows(&self) -> u64 {
        self.clipped_rows
    }

    pub fn params(&self) -> &TsneParams {
        &self.params
    }

    /// Conditional affinities of one OOS point over the reference set,
    /// with a freshly bisected bandwidth.
    pub fn oos_affinities(&self, x_prime: &[f32]) -> (Vec<f64>, RowCalibration) {
        let n = self.n_ref();
        let d2: Vec<f64> = (0..n)
            .map(|i| sqdist_f32(x_prime, self.x_a.row(i)))
            .collect();
        let mut p = vec![0.0f64; n];
        let cal = calibrate_row(&d2, None, self.params.perplexity, &mut p);
        (p, cal)
    }

    /// Informed initialization: mean Y_a position of the k_init nearest
    /// reference neighbors in high-dimensional space, ties by row index.
    pub fn oos_initial_position(&self, x_prime: &[f32]) -> Vec<f64> {
        let n = self.n_ref();
        let m = self.m;
        let mut keys: Vec<_> = (0..n)
            .map(|i| neighbor_key(sqdist_f32(x_prime, self.x_a.row(i)), i))
            .collect();
        keys.sort_unstable();
        let k = self.params.k_init.min(n);
        let mut init = vec![0.0f64; m];
        for &(_, idx) in &keys[..k] {
            let row = &self.y_a[idx as usize * m..(idx as usize + 1) * m];
            for (acc, v) in init.iter_mut().zip(row) {
                *acc += v;
            }
        }
        init.iter_mut().for_each(|v| *v /= k as f64);
        init
    }

    /// Full-precision single-point transform. Returns the final
    /// position and the point's calibration outcome.
    ///
    /// The descent starts from the base rate 0.1 * n_ref * max(p') with
    /// momentum, but every step must not increase KL(p' || q'): a step
    /// that does is rejected, the velocity reset, and the rate halved,
    /// while accepted steps grow the rate back. A plain constant-rate
    /// momentum loop can sling a point into the flat far field of the
    /// student-t kernel and strand it there; the monotone rule makes
    /// the KL-descent guarantee structural instead of probabilistic.
    pub fn transform_point(&self, x_prime: &[f32]) -> (Vec<f64>, RowCalibration) {
        let (p, cal) = self.oos_affinities(x_prime);
        let mut y = self.oos_initial_position(x_prime);
        let max_p = p.iter().cloned().fold(0.0f64, f64::max);
        let base_lr = 0.1 * self.n_ref() as f64 * max_p;
        let mu = self.params.momentum_late;
        let m = self.m;
        let mut lr = base_lr;
        let mut vel = vec![0.0f64; m];
        let mut grad = vec![0.0f64; m];
        let mut y_next = vec![0.0f64; m];
        let mut f_cur = oos_objective(&p, &y, &self.y_a, m);
        for _ in 0..self.params.oos_iterations {
            oos_gradient(&p, &y, &self.y_a, m, &mut grad);
            for c in 0..m {
                vel[c] = mu * vel[c] - lr * grad[c];
                y_next[c] = y[c] + vel[c];
            }
            let f_next = oos_objective(&p, &y_next, &self.y_a, m);
            if f_next <= f_cur {
                y.copy_from_slice(&y_next);
                f_cur = f_next;
                lr = (lr * 1.1).min(base_lr * 10.0);
            } else {
                vel.fill(0.0);
                lr = (lr * 0.5).max(base_lr * 1e-3);
            }
        }
        (y, cal)
    }

    /// Map a batch; parallel over rows, reductions fixed ascending.
    /// Returns the coordinates and the count of degenerate points.
    pub fn transform(&self, batch: &DataMatrix) -> Result<(Vec<f32>, u64)> {
        if batch.dims() != self.x_a.dims() {
            return Err(Error::validation(format!(
                "batch has {} dims, model expects {}",
                batch.dims(),
                self.x_a.dims()
            )));
        }
        let m = self.m;
        let rows: Vec<(Vec<f32>, bool)> = (0..batch.n_rows())
            .into_par_iter()
            .map(|r| {
                let (y, cal) = self.transform_point(batch.row(r));
                let coords: Vec<f32> = y.iter().map(|&v| v as f32).collect();
                debug_assert_eq!(coords.len(), m);
                (coords, cal.degenerate)
            })
            .collect();
        let degenerate = rows.iter().filter(|(_, d)| *d).count() as u64;
        let mut coords = Vec::with_capacity(batch.n_rows() * m);
        for (row, _) in rows {
            coords.extend(row);
        }
        Ok((coords, degenerate))
    }

    pub fn beta_bytes(&self) -> Vec<u8> {
        let mut out = b"tsne".to_vec();
        out.extend_from_slice(&(self.x_a.dims() as u32).to_le_bytes());
        out.extend_from_slice(&(self.m as u32).to_le_bytes());
        super::push_f32_slice(&mut out, self.x_a.data());
        super::push_f64_slice(&mut out, &self.y_a);
        super::push_f64_slice(&mut out, &self.betas);
        out.extend_from_slice(&self.params.perplexity.to_le_bytes());
        out
    }
}

/// KL gradient of one OOS point against the frozen reference,
/// 2 sum_j (p'_j - q'_j) w_j (y' - y_j), reference order ascending.
pub fn oos_gradient(p: &[f64], y_prime: &[f64], y_a: &[f64], m: usize, grad: &mut [f64]) {
    let n = p.len();
    let mut z = 0.0f64;
    for i in 0..n {
        let mut r2 = 0.0;
        for c in 0..m {
            let d = y_prime[c] - y_a[i * m + c];
            r2 += d * d;
        }
        z += 1.0 / (1.0 + r2);
    }
    grad.fill(0.0);
    for i in 0..n {
        let mut r2 = 0.0;
        for c in 0..m {
            let d = y_prime[c] - y_a[i * m + c];
            r2 += d * d;
        }
        let w = 1.0 / (1.0 + r2);
        let coef = 2.0 * (p[i] - w / z) * w;
        for c in 0..m {
            grad[c] += coef * (y_prime[c] - y_a[i * m + c]);
        }
    }
}

/// KL(p' || q') up to the constant sum p ln p term: ln Z - sum p ln w.
/// Used for step acceptance, where only differences matter.
fn oos_objective(p: &[f64], y_prime: &[f64], y_a: &[f64], m: usize) -> f64 {
    let n = p.len();
    let mut z = 0.0f64;
    let mut s = 0.0f64;
    for i in 0..n {
        let mut r2 = 0.0;
        for c in 0..m {
            let d = y_prime[c] - y_a[i * m + c];
            r2 += d * d;
        }
        let w = 1.0 / (1.0 + r2);
        z += w;
        if p[i] > 0.0 {
            s += p[i] * w.ln();
        }
    }
    z.ln() - s
}

/// KL(p' || q') for one OOS point, skipping zero p' entries.
pub fn oos_kl(p: &[f64], y_prime: &[f64], y_a: &[f64], m: usize) -> f64 {
    let n = p.len();
    let mut z = 0.0f64;
    let mut w = vec![0.0f64; n];
    for i in 0..n {
        let mut r2 = 0.0;
        for c in 0..m {
            let d = y_prime[c] - y_a[i * m + c];
            r2 += d * d;
        }
        w[i] = 1.0 / (1.0 + r2);
        z += w[i];
    }
    let mut kl = 0.0f64;
    for i in 0..n {
        if p[i] <= 0.0 {
            continue;
        }
        kl += p[i] * (p[i] / (w[i] / z)).ln();
    }
    kl
}
