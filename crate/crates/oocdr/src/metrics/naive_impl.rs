//! Full-matrix oracle implementations of the four metrics.
//!
//! These materialize the complete pairwise distance vectors and rank
//! matrices and therefore cost O(n^2) memory. They exist to check the
//! block-wise implementations, so they share only the distance function
//! and the tie-break rule with them, not the accumulation strategy.

use crate::error::{Error, Result};
use crate::io::DataMatrix;
use crate::numeric::sqdist_f32;

fn check(x: &DataMatrix, y: &DataMatrix) -> Result<usize> {
    if x.n_rows() != y.n_rows() {
        return Err(Error::validation("row count mismatch"));
    }
    if x.n_rows() < 2 {
        return Err(Error::validation("metrics require at least 2 rows"));
    }
    Ok(x.n_rows())
}

fn pair_distance_vectors(x: &DataMatrix, y: &DataMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = x.n_rows();
    let mut dh = Vec::with_capacity(n * (n - 1) / 2);
    let mut dl = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dh.push(sqdist_f32(x.row(i), x.row(j)).sqrt());
            dl.push(sqdist_f32(y.row(i), y.row(j)).sqrt());
        }
    }
    (dh, dl)
}

/// All other rows ordered by (distance from `i`, row index) ascending.
fn ordered_neighbors(m: &DataMatrix, i: usize) -> Vec<usize> {
    let n = m.n_rows();
    let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
    order.sort_by_key(|&j| (sqdist_f32(m.row(i), m.row(j)).to_bits(), j));
    order
}

pub fn stress_naive(x: &DataMatrix, y: &DataMatrix) -> Result<f64> {
    check(x, y)?;
    let (dh, dl) = pair_distance_vectors(x, y);
    let num: f64 = dh
        .iter()
        .zip(&dl)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let den: f64 = dh.iter().map(|a| a * a).sum();
    if den <= 0.0 {
        return Err(Error::validation("stress undefined: zero denominator"));
    }
    Ok((num / den).sqrt())
}

pub fn pearson_naive(x: &DataMatrix, y: &DataMatrix) -> Result<f64> {
    check(x, y)?;
    let (dh, dl) = pair_distance_vectors(x, y);
    let n = dh.len() as f64;
    let mean_a: f64 = dh.iter().sum::<f64>() / n;
    let mean_b: f64 = dl.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (a, b) in dh.iter().zip(&dl) {
        cov += (a - mean_a) * (b - mean_b);
        var_a += (a - mean_a) * (a - mean_a);
        var_b += (b - mean_b) * (b - mean_b);
    }
    if var_a <= 0.0 || var_b <= 0.0 {
        return Err(Error::validation("pearson undefined: zero variance"));
    }
    Ok(cov / (var_a * var_b).sqrt())
}

pub fn knn_precision_naive(x: &DataMatrix, y: &DataMatrix, k: usize) -> Result<f64> {
    let n = check(x, y)?;
    if k < 1 || k >= n {
        return Err(Error::validation("knn precision requires 1 <= k < n"));
    }
    let mut overlap = 0usize;
    for i in 0..n {
        let kx: Vec<usize> = ordered_neighbors(x, i)[..k].to_vec();
        let ky = &ordered_neighbors(y, i)[..k];
        overlap += ky.iter().filter(|j| kx.contains(j)).count();
    }
    Ok(overlap as f64 / (k * n) as f64)
}

pub fn trustworthiness_naive(x: &DataMatrix, y: &DataMatrix, k: usize) -> Result<f64> {
    let n = check(x, y)?;
    if k < 1 || 2 * k >= n {
        return Err(Error::validation("trustworthiness requires 1 <= k < n/2"));
    }
    let mut penalty = 0u64;
    for i in 0..n {
        let order_x = ordered_neighbors(x, i);
        let rank_of = |j: usize| 1 + order_x.iter().position(|&l| l == j).unwrap() as u64;
        let knn_x = &order_x[..k];
        for &j in &ordered_neighbors(y, i)[..k] {
            if !knn_x.contains(&j) {
                penalty += rank_of(j) - k as u64;
            }
        }
    }
    let norm = 2.0 / (n as f64 * k as f64 * (2.0 * n as f64 - 3.0 * k as f64 - 1.0));
    Ok(1.0 - norm * penalty as f64)
}
