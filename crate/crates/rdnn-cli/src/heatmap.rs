//! Grayscale heatmap emission as binary PGM (P5).
//!
//! Values are linearly min-max scaled to 0..255; a constant surface maps to
//! mid-gray 128. Rows follow the first grid axis, columns the second (the
//! fast axis of the lattice order).

use rdnn::error::{Error, Result};

/// Renders `values` (row-major `height x width`) as P5 bytes.
pub fn to_pgm(values: &[f64], width: usize, height: usize) -> Result<Vec<u8>> {
    if values.len() != width * height {
        return Err(Error::Dimension(format!(
            "{} values for a {width}x{height} image",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("heatmap values must be finite".into()));
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    if max == min {
        out.extend(std::iter::repeat_n(128u8, values.len()));
    } else {
        let span = max - min;
        out.extend(values.iter().map(|&v| ((v - min) / span * 255.0).round() as u8));
    }
    Ok(out)
}

/// Parses P5 bytes back into dimensions and pixels.
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let header_end = bytes
        .windows(1)
        .enumerate()
        .filter(|(_, w)| w[0] == b'\n')
        .map(|(i, _)| i)
        .nth(2)
        .ok_or_else(|| Error::Format("missing P5 header".into()))?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| Error::Format("non-utf8 P5 header".into()))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("P5") {
        return Err(Error::Format("not a P5 file".into()));
    }
    let width: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("bad width".into()))?;
    let height: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("bad height".into()))?;
    let maxval: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("bad maxval".into()))?;
    if maxval != 255 {
        return Err(Error::Format(format!("unsupported maxval {maxval}")));
    }
    let pixels = bytes[header_end + 1..].to_vec();
    if pixels.len() != width * height {
        return Err(Error::Format(format!(
            "{} pixels for declared {width}x{height}",
            pixels.len()
        )));
    }
    Ok((width, height, pixels))
}
