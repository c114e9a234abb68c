//! On-disk matrix format, streaming batch reads, reference sampling and
//! synthetic data generation.
//!
//! The file layout is fixed little-endian:
//!
//! ```text
//! offset  size  field
//! 0       8     magic "OOCDR1\0\0"
//! 8       8     rows   (u64)
//! 16      4     dims   (u32)
//! 20      1     has_labels (0 or 1)
//! 21      3     padding (zero)
//! 24      -     payload: rows * dims f32, row-major
//! ...     -     labels: rows * i32, only when has_labels = 1
//! ```
//!
//! Rows are addressable in O(1), so block reads never touch more than the
//! requested range. No operation in this module holds more than one
//! reference set plus one batch in memory.

mod csv;
mod sample;
mod stream;
mod synth;

pub use csv::import_csv;
pub use sample::sample_reference;
pub use stream::{stream_batches, BatchStream, StreamedBatch};
pub use synth::{generate_blobs, generate_blobs_to_file, SyntheticSpec};

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Magic tag opening every matrix file.
pub const MAGIC: [u8; 8] = *b"OOCDR1\0\0";

/// Fixed byte length of the on-disk header.
pub const HEADER_LEN: u64 = 24;

/// Parsed header of a matrix file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixHeader {
    pub rows: u64,
    pub dims: u32,
    pub has_labels: bool,
}

impl MatrixHeader {
    /// Total byte length a conforming file must have.
    pub fn expected_file_len(&self) -> u64 {
        HEADER_LEN
            + self.rows * self.dims as u64 * 4
            + if self.has_labels { self.rows * 4 } else { 0 }
    }

    /// Byte offset of the first payload element of `row`.
    pub(crate) fn row_offset_bytes(&self, row: u64) -> u64 {
        HEADER_LEN + row * self.dims as u64 * 4
    }

    /// Byte offset of the label of `row`.
    pub(crate) fn label_offset_bytes(&self, row: u64) -> u64 {
        HEADER_LEN + self.rows * self.dims as u64 * 4 + row * 4
    }

    fn encode(&self) -> [u8; HEADER_LEN as usize] {
        let mut buf = [0u8; HEADER_LEN as usize];
        buf[0..8].copy_from_slice(&MAGIC);
        buf[8..16].copy_from_slice(&self.rows.to_le_bytes());
        buf[16..20].copy_from_slice(&self.dims.to_le_bytes());
        buf[20] = self.has_labels as u8;
        buf
    }

    fn decode(path: &Path, buf: &[u8; HEADER_LEN as usize]) -> Result<Self> {
        if buf[0..8] != MAGIC {
            return Err(Error::format(path, "bad magic, not a matrix file"));
        }
        let rows = u64::from_le_bytes(buf[8..16].try_into().unwrap());
        let dims = u32::from_le_bytes(buf[16..20].try_into().unwrap());
        let has_labels = match buf[20] {
            0 => false,
            1 => true,
            other => {
                return Err(Error::format(path, format!("invalid label flag {other}")));
            }
        };
        if rows == 0 || dims == 0 {
            return Err(Error::format(
                path,
                format!("header requires rows >= 1 and dims >= 1, got rows={rows} dims={dims}"),
            ));
        }
        Ok(MatrixHeader {
            rows,
            dims,
            has_labels,
        })
    }
}

/// Read and validate the header of a matrix file, including the byte-length
/// invariant.
pub fn read_header(path: impl AsRef<Path>) -> Result<MatrixHeader> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = [0u8; HEADER_LEN as usize];
    file.read_exact(&mut buf)
        .map_err(|e| Error::format(path, format!("truncated header: {e}")))?;
    let header = MatrixHeader::decode(path, &buf)?;
    let actual = file
        .metadata()
        .map_err(|e| Error::io(path, e))?
        .len();
    let expected = header.expected_file_len();
    if actual != expected {
        return Err(Error::format(
            path,
            format!("file length {actual} does not match header ({expected} expected)"),
        ));
    }
    Ok(header)
}

/// Dense row-major block of `n x d` points, the unit of streaming.
///
/// Every element is finite; non-finite values are rejected at ingestion so
/// downstream distance and gradient code never sees them. `row_offset` is
/// the index of the first row within the source file (0 for matrices built
/// in memory).
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    data: Vec<f32>,
    labels: Option<Vec<i32>>,
    dims: usize,
    row_offset: u64,
}

impl DataMatrix {
    /// Build a matrix from row-major data, validating shape and finiteness.
    pub fn from_rows(data: Vec<f32>, dims: usize, labels: Option<Vec<i32>>) -> Result<Self> {
        if dims == 0 {
            return Err(Error::validation("dims must be >= 1"));
        }
        if data.len() % dims != 0 {
            return Err(Error::validation(format!(
                "data length {} is not a multiple of dims {}",
                data.len(),
                dims
            )));
        }
        let rows = data.len() / dims;
        if let Some((idx, _)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::validation(format!(
                "non-finite element at ({},{})",
                idx / dims,
                idx % dims
            )));
        }
        if let Some(ref l) = labels {
            if l.len() != rows {
                return Err(Error::validation(format!(
                    "labels length {} does not match row count {}",
                    l.len(),
                    rows
                )));
            }
        }
        Ok(DataMatrix {
            data,
            labels,
            dims,
            row_offset: 0,
        })
    }

    pub(crate) fn with_row_offset(mut self, offset: u64) -> Self {
        self.row_offset = offset;
        self
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.dims
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn labels(&self) -> Option<&[i32]> {
        self.labels.as_deref()
    }

    pub fn row_offset(&self) -> u64 {
        self.row_offset
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dims)
    }
}

/// Streaming writer for the matrix format.
///
/// Rows are validated and written as they arrive, labels are buffered
/// (4 bytes per row) because they live after the payload. The header is
/// written last via a seek, so the row count never has to be known up
/// front.
pub struct MatrixWriter {
    path: PathBuf,
    out: BufWriter<File>,
    dims: u32,
    rows: u64,
    labels: Option<Vec<i32>>,
}

impl MatrixWriter {
    pub fn create(path: impl AsRef<Path>, dims: u32, with_labels: bool) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if dims == 0 {
            return Err(Error::validation("dims must be >= 1"));
        }
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        // Placeholder header, patched in finish().
        out.write_all(&[0u8; HEADER_LEN as usize])
            .map_err(|e| Error::io(&path, e))?;
        Ok(MatrixWriter {
            path,
            out,
            dims,
            rows: 0,
            labels: if with_labels { Some(Vec::new()) } else { None },
        })
    }

    pub fn write_row(&mut self, row: &[f32], label: Option<i32>) -> Result<()> {
        if row.len() != self.dims as usize {
            return Err(Error::validation(format!(
                "row {} has width {}, expected {}",
                self.rows,
                row.len(),
                self.dims
            )));
        }
        for (col, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::validation(format!(
                    "non-finite element at ({},{})",
                    self.rows, col
                )));
            }
            self.out
                .write_all(&v.to_le_bytes())
                .map_err(|e| Error::io(&self.path, e))?;
        }
        match (&mut self.labels, label) {
            (Some(buf), Some(l)) => buf.push(l),
            (None, None) => {}
            (Some(_), None) => {
                return Err(Error::validation(format!(
                    "row {} is missing a label",
                    self.rows
                )))
            }
            (None, Some(_)) => {
                return Err(Error::validation(format!(
                    "row {} carries a label but the writer was opened without labels",
                    self.rows
                )))
            }
        }
        self.rows += 1;
        Ok(())
    }

    /// Flush labels, patch the header and sync the row count.
    pub fn finish(mut self) -> Result<MatrixHeader> {
        use std::io::{Seek, SeekFrom};
        if self.rows == 0 {
            return Err(Error::validation("matrix files require at least one row"));
        }
        if let Some(labels) = &self.labels {
            for l in labels {
                self.out
                    .write_all(&l.to_le_bytes())
                    .map_err(|e| Error::io(&self.path, e))?;
            }
        }
        let header = MatrixHeader {
            rows: self.rows,
            dims: self.dims,
            has_labels: self.labels.is_some(),
        };
        self.out
            .seek(SeekFrom::Start(0))
            .map_err(|e| Error::io(&self.path, e))?;
        self.out
            .write_all(&header.encode())
            .map_err(|e| Error::io(&self.path, e))?;
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(header)
    }
}

/// Write a whole in-memory matrix to `path`.
pub fn write_matrix(path: impl AsRef<Path>, matrix: &DataMatrix) -> Result<MatrixHeader> {
    let mut writer = MatrixWriter::create(&path, matrix.dims() as u32, matrix.labels().is_some())?;
    for (i, row) in matrix.rows_iter().enumerate() {
        writer.write_row(row, matrix.labels().map(|l| l[i]))?;
    }
    writer.finish()
}

/// Read a whole matrix file into memory. Intended for desk-scale files;
/// larger-than-memory data goes through [`stream_batches`].
pub fn read_matrix(path: impl AsRef<Path>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let header = read_header(path)?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut skip = [0u8; HEADER_LEN as usize];
    reader.read_exact(&mut skip).map_err(|e| Error::io(path, e))?;
    let n_elems = (header.rows * header.dims as u64) as usize;
    let data = read_f32_vec(&mut reader, n_elems, path)?;
    let labels = if header.has_labels {
        Some(read_i32_vec(&mut reader, header.rows as usize, path)?)
    } else {
        None
    };
    if let Some((idx, _)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::format(
            path,
            format!(
                "non-finite element at ({},{})",
                idx / header.dims as usize,
                idx % header.dims as usize
            ),
        ));
    }
    Ok(DataMatrix {
        data,
        labels,
        dims: header.dims as usize,
        row_offset: 0,
    })
}

pub(crate) fn read_f32_vec(
    reader: &mut impl Read,
    count: usize,
    path: &Path,
) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; count * 4];
    reader
        .read_exact(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub(crate) fn read_i32_vec(
    reader: &mut impl Read,
    count: usize,
    path: &Path,
) -> Result<Vec<i32>> {
    let mut bytes = vec![0u8; count * 4];
    reader
        .read_exact(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn header_size_arithmetic() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.oocdr");
        let m = DataMatrix::from_rows(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 2, None).unwrap();
        let header = write_matrix(&path, &m).unwrap();
        assert_eq!(header.rows, 3);
        assert_eq!(header.dims, 2);
        let len = std::fs::metadata(&path).unwrap().len();
        assert_eq!(len, HEADER_LEN + 24);
    }

    #[test]
    fn round_trip_identity() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.oocdr");
        let m = DataMatrix::from_rows(
            vec![1.5, -2.25, 3.0, 4.125, 0.0, -0.5],
            3,
            Some(vec![7, -1]),
        )
        .unwrap();
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(back.data(), m.data());
        assert_eq!(back.labels(), m.labels());
        assert_eq!(back.dims(), 3);
    }

    #[test]
    fn non_finite_rejected_with_position() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.oocdr");
        let mut w = MatrixWriter::create(&path, 2, false).unwrap();
        w.write_row(&[1.0, 2.0], None).unwrap();
        let err = w.write_row(&[f32::NAN, 0.0], None).unwrap_err();
        assert!(err.to_string().contains("non-finite element at (1,0)"));

        let err = DataMatrix::from_rows(vec![0.0, f32::INFINITY], 2, None).unwrap_err();
        assert!(err.to_string().contains("non-finite element at (0,1)"));
    }

    #[test]
    fn inconsistent_row_width_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.oocdr");
        let mut w = MatrixWriter::create(&path, 3, false).unwrap();
        let err = w.write_row(&[1.0, 2.0], None).unwrap_err();
        assert!(err.to_string().contains("width 2, expected 3"));
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bogus");
        std::fs::write(&path, b"NOTMAGIC________________").unwrap();
        let err = read_header(&path).unwrap_err();
        assert!(err.to_string().contains("bad magic"));
    }

    #[test]
    fn truncated_payload_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.oocdr");
        let m = DataMatrix::from_rows(vec![1.0; 8], 2, None).unwrap();
        write_matrix(&path, &m).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        let err = read_header(&path).unwrap_err();
        assert!(err.to_string().contains("does not match header"));
    }

    #[test]
    fn empty_matrix_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.oocdr");
        let w = MatrixWriter::create(&path, 2, false).unwrap();
        assert!(w.finish().is_err());
    }
}
