//! Block-wise projection quality metrics.
//!
//! Four measures of how faithfully a low-dimensional projection Y
//! preserves the structure of its high-dimensional source X: normalized
//! stress, Pearson correlation of paired distances, k-nearest-neighbor
//! precision, and trustworthiness. All of them run over row-block tiles
//! with compensated summation, so memory never grows with n^2 and the
//! value is independent of block size to within 1e-10 relative. The
//! [`naive`] module holds full-matrix oracles used to validate the tiled
//! implementations.

mod naive_impl;
pub(crate) mod pairwise;

pub mod naive {
    //! Full-matrix reference implementations, O(n^2) memory.
    //!
    //! Deliberately written along a different path than the block-wise
    //! versions (materialized distance vectors, full sorts, two-pass
    //! moments) so agreement between the two is meaningful evidence.
    pub use super::naive_impl::{
        knn_precision_naive, pearson_naive, stress_naive, trustworthiness_naive,
    };
}

use std::time::Instant;

use crate::error::{Error, Result};
use crate::io::DataMatrix;
use crate::numeric::{sqdist_f32, KahanSum};

use pairwise::{fold_pair_distances, knn_lists, neighbor_key, NeighborKey};

/// Normalized Kruskal stress,
/// sqrt(sum (d_ij - e_ij)^2 / sum d_ij^2) over all pairs, where d is the
/// high-dimensional and e the low-dimensional Euclidean distance. 0 is
/// ideal; the measure is scale-dependent.
pub fn stress(x: &DataMatrix, y: &DataMatrix, block: usize) -> Result<f64> {
    check_aligned(x, y)?;
    #[derive(Clone)]
    struct S {
        num: KahanSum,
        den: KahanSum,
    }
    let s = fold_pair_distances(
        x,
        y,
        block,
        || S {
            num: KahanSum::new(),
            den: KahanSum::new(),
        },
        |s, dh, dl| {
            let r = dh - dl;
            s.num.add(r * r);
            s.den.add(dh * dh);
        },
        |mut a, b| {
            a.num.add(b.num.value());
            a.den.add(b.den.value());
            a
        },
    );
    let den = s.den.value();
    if den <= 0.0 {
        return Err(Error::validation(
            "stress undefined: all high-dimensional points are identical",
        ));
    }
    Ok((s.num.value() / den).sqrt())
}

/// Pearson correlation coefficient between the flattened high- and
/// low-dimensional pairwise distance vectors. 1 is best.
pub fn pearson_distance_correlation(x: &DataMatrix, y: &DataMatrix, block: usize) -> Result<f64> {
    check_aligned(x, y)?;
    #[derive(Clone)]
    struct S {
        n: u64,
        a: KahanSum,
        b: KahanSum,
        aa: KahanSum,
        bb: KahanSum,
        ab: KahanSum,
    }
    let s = fold_pair_distances(
        x,
        y,
        block,
        || S {
            n: 0,
            a: KahanSum::new(),
            b: KahanSum::new(),
            aa: KahanSum::new(),
            bb: KahanSum::new(),
            ab: KahanSum::new(),
        },
        |s, dh, dl| {
            s.n += 1;
            s.a.add(dh);
            s.b.add(dl);
            s.aa.add(dh * dh);
            s.bb.add(dl * dl);
            s.ab.add(dh * dl);
        },
        |mut x, y| {
            x.n += y.n;
            x.a.add(y.a.value());
            x.b.add(y.b.value());
            x.aa.add(y.aa.value());
            x.bb.add(y.bb.value());
            x.ab.add(y.ab.value());
            x
        },
    );
    let n = s.n as f64;
    let var_a = s.aa.value() - s.a.value() * s.a.value() / n;
    let var_b = s.bb.value() - s.b.value() * s.b.value() / n;
    if var_a <= 0.0 || var_b <= 0.0 {
        return Err(Error::validation(
            "pearson undefined: a distance vector has zero variance",
        ));
    }
    let cov = s.ab.value() - s.a.value() * s.b.value() / n;
    Ok(cov / (var_a * var_b).sqrt())
}

/// Mean overlap between each point's k nearest neighbors in X and in Y,
/// in [0,1]. Ties break at the lower row index.
pub fn knn_precision(x: &DataMatrix, y: &DataMatrix, k: usize, block: usize) -> Result<f64> {
    check_aligned(x, y)?;
    let n = x.n_rows();
    if k < 1 || k >= n {
        return Err(Error::validation(format!(
            "knn precision requires 1 <= k < n, got k={k}, n={n}"
        )));
    }
    let kx = knn_lists(x, k, block);
    let ky = knn_lists(y, k, block);
    let mut overlap: u64 = 0;
    let mut ix: Vec<u32> = Vec::with_capacity(k);
    let mut iy: Vec<u32> = Vec::with_capacity(k);
    for i in 0..n {
        ix.clear();
        ix.extend(kx[i].iter().map(|&(_, j)| j));
        ix.sort_unstable();
        iy.clear();
        iy.extend(ky[i].iter().map(|&(_, j)| j));
        iy.sort_unstable();
        let (mut a, mut b) = (0, 0);
        while a < ix.len() && b < iy.len() {
            match ix[a].cmp(&iy[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    overlap += 1;
                    a += 1;
                    b += 1;
                }
            }
        }
    }
    Ok(overlap as f64 / (k as f64 * n as f64))
}

/// Trustworthiness: 1 - 2/(nk(2n-3k-1)) sum_i sum_{j in U_k(i)} (r(i,j) - k),
/// where U_k(i) are the k nearest neighbors of i in Y that are not among
/// its k nearest in X, and r(i,j) is j's 1-based rank in the ordering of
/// all other points by distance from i in X. In [0,1], higher is better.
pub fn trustworthiness(x: &DataMatrix, y: &DataMatrix, k: usize, block: usize) -> Result<f64> {
    check_aligned(x, y)?;
    let n = x.n_rows();
    if k < 1 || 2 * k >= n {
        return Err(Error::validation(format!(
            "trustworthiness requires 1 <= k < n/2, got k={k}, n={n}"
        )));
    }
    let kx = knn_lists(x, k, block);
    let ky = knn_lists(y, k, block);
    // Intruders per row: Y-neighbors absent from the X-neighborhood,
    // carrying their X-space ordering key, sorted ascending.
    let intruders: Vec<Vec<NeighborKey>> = (0..n)
        .map(|i| {
            let x_set: Vec<u32> = {
                let mut v: Vec<u32> = kx[i].iter().map(|&(_, j)| j).collect();
                v.sort_unstable();
                v
            };
            let mut v: Vec<NeighborKey> = ky[i]
                .iter()
                .filter(|&&(_, j)| x_set.binary_search(&j).is_err())
                .map(|&(_, j)| neighbor_key(sqdist_f32(x.row(i), x.row(j as usize)), j as usize))
                .collect();
            v.sort_unstable();
            v
        })
        .collect();
    // Rank of each intruder = 1 + number of other points with a smaller
    // key, counted in one more pass over rows: bucket[b] counts points
    // falling between intruder b-1 and b, prefix sums give the counts.
    // Penalties are integers, so the parallel sum is exact.
    use rayon::prelude::*;
    let penalty: u64 = intruders
        .par_iter()
        .enumerate()
        .map(|(i, row_intruders)| {
            if row_intruders.is_empty() {
                return 0u64;
            }
            let mut buckets = vec![0u64; row_intruders.len() + 1];
            let row_i = x.row(i);
            for l in 0..n {
                if l == i {
                    continue;
                }
                let key = neighbor_key(sqdist_f32(row_i, x.row(l)), l);
                let ub = row_intruders.partition_point(|&t| t <= key);
                buckets[ub] += 1;
            }
            let mut closer: u64 = 0;
            let mut penalty: u64 = 0;
            for (t, _) in row_intruders.iter().enumerate() {
                closer += buckets[t];
                let rank = 1 + closer;
                debug_assert!(rank > k as u64, "an intruder must rank past k");
                penalty += rank - k as u64;
            }
            penalty
        })
        .sum();
    let norm = 2.0 / (n as f64 * k as f64 * (2.0 * n as f64 - 3.0 * k as f64 - 1.0));
    Ok(1.0 - norm * penalty as f64)
}

fn check_aligned(x: &DataMatrix, y: &DataMatrix) -> Result<()> {
    if x.n_rows() != y.n_rows() {
        return Err(Error::validation(format!(
            "row count mismatch: {} high-dimensional vs {} projected",
            x.n_rows(),
            y.n_rows()
        )));
    }
    if x.n_rows() < 2 {
        return Err(Error::validation("metrics require at least 2 rows"));
    }
    Ok(())
}

/// Which metrics to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MetricKind {
    Stress,
    Pearson,
    KnnPrecision,
    Trustworthiness,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::Stress,
        MetricKind::Pearson,
        MetricKind::KnnPrecision,
        MetricKind::Trustworthiness,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Stress => "stress",
            MetricKind::Pearson => "pearson",
            MetricKind::KnnPrecision => "knn_precision",
            MetricKind::Trustworthiness => "trustworthiness",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "stress" => Ok(MetricKind::Stress),
            "pearson" => Ok(MetricKind::Pearson),
            "knn" | "knn_precision" => Ok(MetricKind::KnnPrecision),
            "trust" | "trustworthiness" => Ok(MetricKind::Trustworthiness),
            other => Err(Error::validation(format!(
                "unknown metric {other:?} (expected stress, pearson, knn, trust)"
            ))),
        }
    }
}

/// Parameters shared by an evaluation run.
#[derive(Debug, Clone)]
pub struct MetricParams {
    /// Neighborhood size for knn precision and trustworthiness.
    pub k: usize,
    /// Rows per distance block.
    pub block: usize,
    /// Metrics to compute, in this order.
    pub metrics: Vec<MetricKind>,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams {
            k: 100,
            block: 1024,
            metrics: MetricKind::ALL.to_vec(),
        }
    }
}

/// Row subset an evaluation runs over, chosen via the projection's
/// provenance column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    All,
    Reference,
    Oos,
}

impl Scope {
    pub fn tag(&self) -> &'static str {
        match self {
            Scope::All => "whole-projection",
            Scope::Reference => "reference-only",
            Scope::Oos => "oos-only",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" | "whole" => Ok(Scope::All),
            "reference" | "ref" => Ok(Scope::Reference),
            "oos" => Ok(Scope::Oos),
            other => Err(Error::validation(format!(
                "unknown scope {other:?} (expected all, reference, oos)"
            ))),
        }
    }
}

/// One computed metric with its wall time.
#[derive(Debug, Clone)]
pub struct MetricValue {
    pub kind: MetricKind,
    pub value: f64,
    pub seconds: f64,
}

/// Result of [`evaluate`].
#[derive(Debug, Clone)]
pub struct MetricReport {
    pub values: Vec<MetricValue>,
    pub k: usize,
    pub block: usize,
    pub n_evaluated: usize,
    pub scope: Scope,
}

impl MetricReport {
    /// Line-oriented `metric=value` rendering.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "scope={} n={} k={} block={}\n",
            self.scope.tag(),
            self.n_evaluated,
            self.k,
            self.block
        ));
        for v in &self.values {
            out.push_str(&format!("{}={:.12}\n", v.kind.name(), v.value));
            out.push_str(&format!("{}_seconds={:.6}\n", v.kind.name(), v.seconds));
        }
        out
    }

    pub const CSV_HEADER: &'static str = "scope,n,k,block,metric,value,seconds";

    /// One CSV row per metric, for sweep aggregation.
    pub fn to_csv_rows(&self) -> String {
        self.values
            .iter()
            .map(|v| {
                format!(
                    "{},{},{},{},{},{:.12},{:.6}\n",
                    self.scope.tag(),
                    self.n_evaluated,
                    self.k,
                    self.block,
                    v.kind.name(),
                    v.value,
                    v.seconds
                )
            })
            .collect()
    }
}

/// Run the selected metrics over aligned high-dimensional rows `x` and
/// projected rows `y`, restricted to `scope` via `provenance` (the
/// projection's provenance column; reference rows are negative). Pass
/// `None` for provenance only with [`Scope::All`].
pub fn evaluate(
    x: &DataMatrix,
    y: &DataMatrix,
    provenance: Option<&[i32]>,
    params: &MetricParams,
    scope: Scope,
) -> Result<MetricReport> {
    if x.n_rows() != y.n_rows() {
        return Err(Error::validation(format!(
            "row count mismatch: dataset has {}, projection has {}",
            x.n_rows(),
            y.n_rows()
        )));
    }
    let (xs, ys) = match scope {
        Scope::All => (x.clone(), y.clone()),
        _ => {
            let prov = provenance.ok_or_else(|| {
                Error::validation(format!(
                    "scope {} requires a provenance column",
                    scope.tag()
                ))
            })?;
            if prov.len() != x.n_rows() {
                return Err(Error::validation(
                    "provenance length does not match row count",
                ));
            }
            let keep: Vec<usize> = prov
                .iter()
                .enumerate()
                .filter(|(_, &p)| match scope {
                    Scope::Reference => p < 0,
                    Scope::Oos => p >= 0,
                    Scope::All => unreachable!(),
                })
                .map(|(i, _)| i)
                .collect();
            if keep.is_empty() {
                return Err(Error::validation(format!(
                    "scope {} selects no rows",
                    scope.tag()
                )));
            }
            (gather(x, &keep)?, gather(y, &keep)?)
        }
    };
    let mut values = Vec::with_capacity(params.metrics.len());
    for &kind in &params.metrics {
        let started = Instant::now();
        let value = match kind {
            MetricKind::Stress => stress(&xs, &ys, params.block)?,
            MetricKind::Pearson => pearson_distance_correlation(&xs, &ys, params.block)?,
            MetricKind::KnnPrecision => knn_precision(&xs, &ys, params.k, params.block)?,
            MetricKind::Trustworthiness => trustworthiness(&xs, &ys, params.k, params.block)?,
        };
        values.push(MetricValue {
            kind,
            value,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok(MetricReport {
        values,
        k: params.k,
        block: params.block,
        n_evaluated: xs.n_rows(),
        scope,
    })
}

fn gather(m: &DataMatrix, keep: &[usize]) -> Result<DataMatrix> {
    let mut data = Vec::with_capacity(keep.len() * m.dims());
    for &i in keep {
        data.extend_from_slice(m.row(i));
    }
    let labels = m
        .labels()
        .map(|l| keep.iter().map(|&i| l[i]).collect::<Vec<i32>>());
    DataMatrix::from_rows(data, m.dims(), labels)
}
