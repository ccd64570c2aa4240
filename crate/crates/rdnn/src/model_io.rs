//! Network parameter serialization.
//!
//! Binary layout (all integers and floats little-endian):
//!
//! ```text
//! magic   4 bytes  "RDNN"
//! version u32      currently 1
//! ndims   u32      number of layer sizes (L + 2)
//! dims    u32 * ndims
//! layers  for l = 0..=L: W_l row-major f64, then u_l f64
//! ```
//!
//! The text alternative is a JSON document carrying the same fields; Rust's
//! shortest-round-trip float printing keeps it lossless.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NetworkParams;

const MAGIC: &[u8; 4] = b"RDNN";
const VERSION: u32 = 1;

/// Encodes parameters in the binary layout.
pub fn to_binary(params: &NetworkParams) -> Vec<u8> {
    let dims = params.dims();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for l in 0..dims.len() - 1 {
        for &v in params.weights()[l].iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &v in params.shifts()[l].iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Decodes parameters from the binary layout.
pub fn from_binary(bytes: &[u8]) -> Result<NetworkParams> {
    let mut cursor = Cursor { bytes, pos: 0 };
    let magic = cursor.take(4)?;
    if magic != MAGIC {
        return Err(Error::Format("bad magic; not a network parameter file".into()));
    }
    let version = cursor.read_u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let ndims = cursor.read_u32()? as usize;
    if ndims < 2 {
        return Err(Error::Format("network needs at least two layer sizes".into()));
    }
    let mut dims = Vec::with_capacity(ndims);
    for _ in 0..ndims {
        dims.push(cursor.read_u32()? as usize);
    }
    let mut weights = Vec::with_capacity(ndims - 1);
    let mut shifts = Vec::with_capacity(ndims - 1);
    for l in 0..ndims - 1 {
        let (rows, cols) = (dims[l + 1], dims[l]);
        let mut w = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            w.push(cursor.read_f64()?);
        }
        weights.push(Array2::from_shape_vec((rows, cols), w).expect("shape"));
        let mut u = Vec::with_capacity(rows);
        for _ in 0..rows {
            u.push(cursor.read_f64()?);
        }
        shifts.push(Array1::from_vec(u));
    }
    if cursor.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after parameters",
            bytes.len() - cursor.pos
        )));
    }
    NetworkParams::from_parts(dims, weights, shifts)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format("truncated parameter file".into()));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn read_u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn read_f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        Ok(f64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]))
    }
}

#[derive(Serialize, Deserialize)]
struct TextModel {
    format: String,
    version: u32,
    dims: Vec<usize>,
    layers: Vec<TextLayer>,
}

#[derive(Serialize, Deserialize)]
struct TextLayer {
    weights: Vec<Vec<f64>>,
    shifts: Vec<f64>,
}

/// Encodes parameters as a lossless JSON document.
pub fn to_text(params: &NetworkParams) -> String {
    let dims = params.dims().to_vec();
    let layers = (0..dims.len() - 1)
        .map(|l| TextLayer {
            weights: params.weights()[l]
                .rows()
                .into_iter()
                .map(|r| r.to_vec())
                .collect(),
            shifts: params.shifts()[l].to_vec(),
        })
        .collect();
    let doc = TextModel {
        format: "rdnn-text".into(),
        version: VERSION,
        dims,
        layers,
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

/// Decodes parameters from the JSON document.
pub fn from_text(text: &str) -> Result<NetworkParams> {
    let doc: TextModel =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("bad text model: {e}")))?;
    if doc.format != "rdnn-text" || doc.version != VERSION {
        return Err(Error::Format("unsupported text model format".into()));
    }
    let dims = doc.dims;
    if doc.layers.len() + 1 != dims.len() {
        return Err(Error::Format("layer count does not match dims".into()));
    }
    let mut weights = Vec::with_capacity(doc.layers.len());
    let mut shifts = Vec::with_capacity(doc.layers.len());
    for (l, layer) in doc.layers.into_iter().enumerate() {
        let (rows, cols) = (dims[l + 1], dims[l]);
        let mut flat = Vec::with_capacity(rows * cols);
        if layer.weights.len() != rows {
            return Err(Error::Format(format!("layer {l} has wrong row count")));
        }
        for row in layer.weights {
            if row.len() != cols {
                return Err(Error::Format(format!("layer {l} has a wrong-length row")));
            }
            flat.extend(row);
        }
        weights.push(Array2::from_shape_vec((rows, cols), flat).expect("shape"));
        shifts.push(Array1::from_vec(layer.shifts));
    }
    NetworkParams::from_parts(dims, weights, shifts)
}
