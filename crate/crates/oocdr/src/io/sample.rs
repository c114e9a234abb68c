//! Uniform without-replacement reference sampling.

use std::fs::File;
use std::io::{BufReader, Seek, SeekFrom};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{read_f32_vec, read_i32_vec, read_header, DataMatrix};

/// Choose `n_ref` of `rows` indices uniformly without replacement.
///
/// Algorithm L reservoir sampling over the index stream 0..rows, so the
/// cost is O(n_ref (1 + log(rows/n_ref))) regardless of file size. The
/// result is sorted ascending.
pub(crate) fn reservoir_indices(rows: u64, n_ref: u64, rng: &mut impl Rng) -> Vec<u64> {
    assert!(n_ref >= 1 && n_ref <= rows);
    let mut reservoir: Vec<u64> = (0..n_ref).collect();
    let k = n_ref as f64;
    // (0,1] samples keep every logarithm finite.
    let mut w = (f64::ln(1.0 - rng.gen::<f64>()) / k).exp();
    let mut i = n_ref - 1;
    loop {
        let skip = f64::ln(1.0 - rng.gen::<f64>()) / f64::ln(1.0 - w);
        if !skip.is_finite() || skip >= (rows - i) as f64 {
            break;
        }
        i += skip as u64 + 1;
        if i >= rows {
            break;
        }
        let slot = rng.gen_range(0..n_ref) as usize;
        reservoir[slot] = i;
        w *= (f64::ln(1.0 - rng.gen::<f64>()) / k).exp();
    }
    reservoir.sort_unstable();
    reservoir
}

/// Sample `n_ref` distinct rows from the matrix at `path`, deterministic
/// per seed.
///
/// Returns the gathered rows (labels included when present) plus the
/// sorted index set. The file is touched in a single forward pass per
/// region, so memory stays at O(n_ref * dims).
pub fn sample_reference(
    path: impl AsRef<Path>,
    n_ref: u64,
    seed: u64,
) -> Result<(DataMatrix, Vec<u64>)> {
    let path = path.as_ref();
    let header = read_header(path)?;
    if n_ref == 0 {
        return Err(Error::validation("n_ref must be >= 1"));
    }
    if n_ref > header.rows {
        return Err(Error::validation(format!(
            "n_ref {} exceeds available rows {}",
            n_ref, header.rows
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = reservoir_indices(header.rows, n_ref, &mut rng);

    let dims = header.dims as usize;
    let mut reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut data = Vec::with_capacity(indices.len() * dims);
    let mut run_start = 0;
    while run_start < indices.len() {
        let mut run_end = run_start + 1;
        while run_end < indices.len() && indices[run_end] == indices[run_end - 1] + 1 {
            run_end += 1;
        }
        reader
            .seek(SeekFrom::Start(header.row_offset_bytes(indices[run_start])))
            .map_err(|e| Error::io(path, e))?;
        data.extend(read_f32_vec(
            &mut reader,
            (run_end - run_start) * dims,
            path,
        )?);
        run_start = run_end;
    }
    let labels = if header.has_labels {
        let mut labels = Vec::with_capacity(indices.len());
        let mut run_start = 0;
        while run_start < indices.len() {
            let mut run_end = run_start + 1;
            while run_end < indices.len() && indices[run_end] == indices[run_end - 1] + 1 {
                run_end += 1;
            }
            reader
                .seek(SeekFrom::Start(
                    header.label_offset_bytes(indices[run_start]),
                ))
                .map_err(|e| Error::io(path, e))?;
            labels.extend(read_i32_vec(&mut reader, run_end - run_start, path)?);
            run_start = run_end;
        }
        Some(labels)
    } else {
        None
    };
    let matrix = DataMatrix::from_rows(data, dims, labels)
        .map_err(|e| Error::format(path, e.to_string()))?
        .with_row_offset(indices[0]);
    Ok((matrix, indices))
}
