//! Pull-based batch iteration over an on-disk matrix with an exclusion set.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::{read_f32_vec, read_i32_vec, read_header, DataMatrix, MatrixHeader};

/// One batch pulled from a [`BatchStream`].
#[derive(Debug, Clone)]
pub struct StreamedBatch {
    /// Row data (and labels when the source carries them).
    pub data: DataMatrix,
    /// Original row indices within the source file, ascending.
    pub indices: Vec<u64>,
    /// Zero-based position of this batch in the stream.
    pub batch_id: usize,
}

/// Sequential iterator over fixed-size batches of the rows of a matrix
/// file that are not in the exclusion set.
///
/// Invariants: yielded batches concatenate to exactly the non-excluded
/// rows in ascending order, every batch has `n_batch` rows except
/// possibly the last, and a pull allocates O(n_batch * dims).
pub struct BatchStream {
    path: PathBuf,
    payload: BufReader<File>,
    payload_pos: u64,
    labels: Option<BufReader<File>>,
    labels_pos: u64,
    header: MatrixHeader,
    n_batch: usize,
    exclusion: Vec<u64>,
    cursor: u64,
    excl_ptr: usize,
    batch_id: usize,
    failed: bool,
}

/// Open `path` and iterate its rows minus `exclusion` in batches of
/// `n_batch`. The exclusion slice may be unsorted and may contain
/// duplicates; indices past the last row are rejected.
pub fn stream_batches(
    path: impl AsRef<Path>,
    n_batch: usize,
    exclusion: &[u64],
) -> Result<BatchStream> {
    let path = path.as_ref().to_path_buf();
    if n_batch == 0 {
        return Err(Error::validation("n_batch must be >= 1"));
    }
    let header = read_header(&path)?;
    let mut exclusion = exclusion.to_vec();
    exclusion.sort_unstable();
    exclusion.dedup();
    if let Some(&bad) = exclusion.iter().find(|&&i| i >= header.rows) {
        return Err(Error::validation(format!(
            "exclusion index {bad} out of range for {} rows",
            header.rows
        )));
    }
    let payload = BufReader::new(File::open(&path).map_err(|e| Error::io(&path, e))?);
    let labels = if header.has_labels {
        Some(BufReader::new(
            File::open(&path).map_err(|e| Error::io(&path, e))?,
        ))
    } else {
        None
    };
    Ok(BatchStream {
        path,
        payload,
        payload_pos: 0,
        labels,
        labels_pos: 0,
        header,
        n_batch,
        exclusion,
        cursor: 0,
        excl_ptr: 0,
        batch_id: 0,
        failed: false,
    })
}

impl BatchStream {
    pub fn header(&self) -> MatrixHeader {
        self.header
    }

    /// Number of rows the stream will yield in total.
    pub fn remaining_rows_total(&self) -> u64 {
        self.header.rows - self.exclusion.len() as u64
    }

    /// Number of batches the stream will yield in total.
    pub fn n_batches(&self) -> u64 {
        self.remaining_rows_total().div_ceil(self.n_batch as u64)
    }

    /// Collect the next up-to-n_batch included row indices, advancing the
    /// cursor past them.
    fn next_indices(&mut self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.n_batch.min(4096));
        while out.len() < self.n_batch && self.cursor < self.header.rows {
            if self.excl_ptr < self.exclusion.len() && self.exclusion[self.excl_ptr] == self.cursor
            {
                self.excl_ptr += 1;
            } else {
                out.push(self.cursor);
            }
            self.cursor += 1;
        }
        out
    }

    fn read_batch(&mut self, indices: &[u64]) -> Result<StreamedBatch> {
        let dims = self.header.dims as usize;
        let mut data = Vec::with_capacity(indices.len() * dims);
        let mut labels = self
            .labels
            .is_some()
            .then(|| Vec::with_capacity(indices.len()));
        // Contiguous index runs become single reads. Hops between runs
        // use relative seeks so small gaps stay inside the read buffer
        // instead of flushing it and paying a syscall per run.
        let mut run_start = 0;
        while run_start < indices.len() {
            let mut run_end = run_start + 1;
            while run_end < indices.len() && indices[run_end] == indices[run_end - 1] + 1 {
                run_end += 1;
            }
            let first = indices[run_start];
            let count = run_end - run_start;
            let target = self.header.row_offset_bytes(first);
            self.payload
                .seek_relative(target as i64 - self.payload_pos as i64)
                .map_err(|e| Error::io(&self.path, e))?;
            data.extend(read_f32_vec(&mut self.payload, count * dims, &self.path)?);
            self.payload_pos = target + (count * dims * 4) as u64;
            if let (Some(reader), Some(buf)) = (self.labels.as_mut(), labels.as_mut()) {
                let target = self.header.label_offset_bytes(first);
                reader
                    .seek_relative(target as i64 - self.labels_pos as i64)
                    .map_err(|e| Error::io(&self.path, e))?;
                buf.extend(read_i32_vec(reader, count, &self.path)?);
                self.labels_pos = target + (count * 4) as u64;
            }
            run_start = run_end;
        }
        let matrix = DataMatrix::from_rows(data, dims, labels)
            .map_err(|e| Error::format(&self.path, e.to_string()))?
            .with_row_offset(indices[0]);
        let batch = StreamedBatch {
            data: matrix,
            indices: indices.to_vec(),
            batch_id: self.batch_id,
        };
        self.batch_id += 1;
        Ok(batch)
    }
}

impl Iterator for BatchStream {
    type Item = Result<StreamedBatch>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let indices = self.next_indices();
        if indices.is_empty() {
            return None;
        }
        match self.read_batch(&indices) {
            Ok(batch) => Some(Ok(batch)),
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}
