//! The functional-data grid file (FGRD).
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic   4 bytes  "FGRD"
//! version u32      currently 1
//! d       u32      domain dimension
//! sizes   u32 * d  points per axis
//! n       u64      subject count
//! flags   u8       bit 0: truth block present
//! data    n * N f64, subject-major, grid lattice order
//! truth   N f64 when flagged
//! ```

use std::fs;
use std::path::Path;

use ndarray::Array2;
use rdnn::error::{Error, Result};
use rdnn::grid::GridSpec;
use rdnn::sim::FunctionalSample;

const MAGIC: &[u8; 4] = b"FGRD";
const VERSION: u32 = 1;

/// Encodes a sample into FGRD bytes.
pub fn to_bytes(sample: &FunctionalSample) -> Vec<u8> {
    let grid = &sample.grid;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    for &m in grid.axis_sizes() {
        out.extend_from_slice(&(m as u32).to_le_bytes());
    }
    out.extend_from_slice(&(sample.n_subjects() as u64).to_le_bytes());
    let flags: u8 = u8::from(sample.truth.is_some());
    out.push(flags);
    for &v in sample.responses.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(truth) = &sample.truth {
        for &v in truth {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Decodes a sample from FGRD bytes. The generation record is not stored in
/// the file, so `meta` comes back empty.
pub fn from_bytes(bytes: &[u8]) -> Result<FunctionalSample> {
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        if *pos + n > bytes.len() {
            return Err(Error::Format("truncated grid file".into()));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    let magic = take(&mut pos, 4)?;
    if magic != MAGIC {
        return Err(Error::Format("bad magic; not a grid file".into()));
    }
    let version = read_u32(take(&mut pos, 4)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported grid file version {version}")));
    }
    let d = read_u32(take(&mut pos, 4)?) as usize;
    if d == 0 || d > 16 {
        return Err(Error::Format(format!("implausible dimension {d}")));
    }
    let mut sizes = Vec::with_capacity(d);
    for _ in 0..d {
        sizes.push(read_u32(take(&mut pos, 4)?) as usize);
    }
    let n = u64::from_le_bytes(take(&mut pos, 8)?.try_into().expect("8 bytes")) as usize;
    let flags = take(&mut pos, 1)?[0];
    if flags > 1 {
        return Err(Error::Format(format!("unknown flags {flags:#x}")));
    }
    let grid = GridSpec::rectangular(&sizes)?;
    let n_points = grid.n_points();
    let mut responses = Vec::with_capacity(n * n_points);
    for _ in 0..n * n_points {
        responses.push(read_f64(take(&mut pos, 8)?));
    }
    let truth = if flags & 1 == 1 {
        let mut t = Vec::with_capacity(n_points);
        for _ in 0..n_points {
            t.push(read_f64(take(&mut pos, 8)?));
        }
        Some(t)
    } else {
        None
    };
    if pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes in grid file", bytes.len() - pos)));
    }
    Ok(FunctionalSample {
        grid,
        responses: Array2::from_shape_vec((n, n_points), responses)
            .map_err(|e| Error::Format(e.to_string()))?,
        truth,
        meta: None,
    })
}

fn read_u32(b: &[u8]) -> u32 {
    u32::from_le_bytes(b.try_into().expect("4 bytes"))
}

fn read_f64(b: &[u8]) -> f64 {
    f64::from_le_bytes(b.try_into().expect("8 bytes"))
}

/// Writes bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp-write");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes a sample to disk.
pub fn write_gridfile(sample: &FunctionalSample, path: &Path) -> Result<()> {
    write_atomic(path, &to_bytes(sample))
}

/// Reads a sample from disk.
pub fn read_gridfile(path: &Path) -> Result<FunctionalSample> {
    let bytes = fs::read(path)?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rdnn::grid::make_grid;
    use rdnn::sim::{simulate, MeanSpec, NoiseSpec};

    #[test]
    fn round_trip_is_bit_exact() {
        let grid = make_grid(2, 6).unwrap();
        let sample = simulate(&grid, &MeanSpec::TwoD, &NoiseSpec::standard(), 7, 3).unwrap();
        let bytes = to_bytes(&sample);
        let back = from_bytes(&bytes).unwrap();
        assert_eq!(back.responses, sample.responses);
        assert_eq!(back.truth, sample.truth);
        assert_eq!(back.grid, sample.grid);
        assert_eq!(to_bytes(&back), bytes);
    }

    #[test]
    fn truthless_files_round_trip() {
        let grid = make_grid(3, 3).unwrap();
        let mut sample = simulate(&grid, &MeanSpec::ThreeD, &NoiseSpec::standard(), 2, 1).unwrap();
        sample.truth = None;
        let bytes = to_bytes(&sample);
        let back = from_bytes(&bytes).unwrap();
        assert!(back.truth.is_none());
        assert_eq!(back.responses, sample.responses);
    }

    #[test]
    fn corrupted_files_are_rejected() {
        let grid = make_grid(2, 3).unwrap();
        let sample = simulate(&grid, &MeanSpec::TwoD, &NoiseSpec::standard(), 2, 1).unwrap();
        let mut bytes = to_bytes(&sample);
        bytes[1] = b'X';
        assert!(from_bytes(&bytes).is_err());
        let ok = to_bytes(&sample);
        assert!(from_bytes(&ok[..ok.len() - 1]).is_err());
    }
}
