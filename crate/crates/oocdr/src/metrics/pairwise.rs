//! Tiled pairwise passes shared by the block-wise metrics.
//!
//! Nothing here ever materializes an n x n matrix. Pair distances are
//! produced tile by tile and consumed immediately; per-tile partial
//! results are merged in a fixed order so the outcome is independent of
//! worker count.

use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::io::DataMatrix;
use crate::numeric::sqdist_f32;

/// Starts of consecutive row blocks of width `block`.
pub(crate) fn block_starts(n: usize, block: usize) -> Vec<usize> {
    (0..n).step_by(block.max(1)).collect()
}

/// Fold a statistic over the high/low distance of every unordered pair.
///
/// The fold visits each pair {i,j}, i < j, exactly once and receives
/// (d_high, d_low). Tiles are i-block x j-block with j-block >= i-block;
/// each tile folds into a fresh statistic, tiles of one i-block merge in
/// ascending j order, i-blocks merge in ascending order. Workers may
/// process i-blocks in parallel without affecting the result.
pub(crate) fn fold_pair_distances<S, Make, Fold, Merge>(
    x: &DataMatrix,
    y: &DataMatrix,
    block: usize,
    make: Make,
    fold: Fold,
    merge: Merge,
) -> S
where
    S: Send,
    Make: Fn() -> S + Sync,
    Fold: Fn(&mut S, f64, f64) + Sync,
    Merge: Fn(S, S) -> S + Sync,
{
    let n = x.n_rows();
    let block = block.max(1);
    let partials: Vec<S> = block_starts(n, block)
        .par_iter()
        .map(|&bi| {
            let i_end = (bi + block).min(n);
            let mut acc = make();
            for bj in block_starts(n, block).into_iter().filter(|&bj| bj >= bi) {
                let j_end = (bj + block).min(n);
                let mut tile = make();
                for i in bi..i_end {
                    let j_lo = bj.max(i + 1);
                    for j in j_lo..j_end {
                        let dh = sqdist_f32(x.row(i), x.row(j)).sqrt();
                        let dl = sqdist_f32(y.row(i), y.row(j)).sqrt();
                        fold(&mut tile, dh, dl);
                    }
                }
                acc = merge(acc, tile);
            }
            acc
        })
        .collect();
    partials
        .into_iter()
        .reduce(|a, b| merge(a, b))
        .unwrap_or_else(make)
}

/// Neighbor candidate ordered by (squared distance bits, row index).
///
/// Squared distances are non-negative, so their IEEE-754 bit patterns
/// order exactly like the values; the index component makes every key
/// distinct and fixes tie-breaking at ascending row index.
pub(crate) type NeighborKey = (u64, u32);

pub(crate) fn neighbor_key(sqdist: f64, index: usize) -> NeighborKey {
    (sqdist.to_bits(), index as u32)
}

/// Exact k-nearest-neighbor lists for every row, tie-broken by ascending
/// row index, each sorted nearest first.
///
/// Rows are processed in i-blocks holding one bounded max-heap of size k
/// per row, so memory is O(block * k) plus the input.
pub(crate) fn knn_lists(data: &DataMatrix, k: usize, block: usize) -> Vec<Vec<NeighborKey>> {
    let n = data.n_rows();
    assert!(k >= 1 && k < n);
    let block = block.max(1);
    let per_block: Vec<Vec<Vec<NeighborKey>>> = block_starts(n, block)
        .par_iter()
        .map(|&bi| {
            let i_end = (bi + block).min(n);
            let mut heaps: Vec<BinaryHeap<NeighborKey>> =
                (bi..i_end).map(|_| BinaryHeap::with_capacity(k + 1)).collect();
            for j in 0..n {
                let row_j = data.row(j);
                for i in bi..i_end {
                    if i == j {
                        continue;
                    }
                    let key = neighbor_key(sqdist_f32(data.row(i), row_j), j);
                    let heap = &mut heaps[i - bi];
                    if heap.len() < k {
                        heap.push(key);
                    } else if key < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(key);
                    }
                }
            }
            heaps.into_iter().map(|h| h.into_sorted_vec()).collect()
        })
        .collect();
    let lists: Vec<Vec<NeighborKey>> = per_block.into_iter().flatten().collect();
    debug_assert_eq!(lists.len(), n);
    for l in &lists {
        debug_assert!(l.windows(2).all(|w| w[0] < w[1]));
    }
    lists
}
