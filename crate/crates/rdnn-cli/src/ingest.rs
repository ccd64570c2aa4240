//! Ingestion of externally gridded data.
//!
//! Two source layouts are accepted:
//!
//! - a directory of per-subject CSV files, each row `x1,...,xd,value`, all
//!   subjects on one common rectangular lattice (files are taken in filename
//!   order);
//! - a raw little-endian f64 stack (subject-major, lattice order) described
//!   by a JSON sidecar `<input>.json` with `axis_sizes` and `n`.
//!
//! Source coordinates are only used to order the lattice; the output grid is
//! normalized to `j/m` per axis on `(0,1]`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use rdnn::error::{Error, Result};
use rdnn::grid::GridSpec;
use rdnn::sim::FunctionalSample;
use serde::Deserialize;

/// Sidecar header of a raw float stack.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawHeader {
    pub axis_sizes: Vec<usize>,
    pub n: usize,
}

/// Ingests a directory of CSVs or a raw stack with a sidecar.
pub fn ingest(input: &Path) -> Result<FunctionalSample> {
    if input.is_dir() {
        ingest_csv_dir(input)
    } else {
        ingest_raw(input)
    }
}

fn ingest_raw(input: &Path) -> Result<FunctionalSample> {
    let sidecar = {
        let mut name = input.file_name().unwrap_or_default().to_os_string();
        name.push(".json");
        input.with_file_name(name)
    };
    let header: RawHeader = serde_json::from_str(&fs::read_to_string(&sidecar)?)
        .map_err(|e| Error::Format(format!("bad sidecar {}: {e}", sidecar.display())))?;
    if header.n == 0 || header.axis_sizes.is_empty() || header.axis_sizes.contains(&0) {
        return Err(Error::Format("sidecar sizes must be positive".into()));
    }
    let grid = GridSpec::rectangular(&header.axis_sizes)?;
    let n_points = grid.n_points();
    let bytes = fs::read(input)?;
    let expected = header.n * n_points * 8;
    if bytes.len() != expected {
        return Err(Error::Inconsistent(format!(
            "raw stack has {} bytes, sidecar implies {expected}",
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(FunctionalSample {
        grid,
        responses: Array2::from_shape_vec((header.n, n_points), values)
            .map_err(|e| Error::Format(e.to_string()))?,
        truth: None,
        meta: None,
    })
}

fn ingest_csv_dir(dir: &Path) -> Result<FunctionalSample> {
    let mut files: Vec<_> = fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().map(|e| e == "csv").unwrap_or(false))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Invalid(format!("no .csv files in {}", dir.display())));
    }

    let mut subjects: Vec<Vec<(Vec<f64>, f64)>> = Vec::with_capacity(files.len());
    for path in &files {
        subjects.push(parse_csv(path)?);
    }

    let d = subjects[0]
        .first()
        .map(|(coords, _)| coords.len())
        .ok_or_else(|| Error::Inconsistent("empty subject file".into()))?;

    // Axis values of the shared lattice, from the first subject.
    let mut axes: Vec<Vec<f64>> = vec![Vec::new(); d];
    for (coords, _) in &subjects[0] {
        if coords.len() != d {
            return Err(Error::Inconsistent("mixed coordinate dimensions".into()));
        }
        for (k, &c) in coords.iter().enumerate() {
            if !axes[k].contains(&c) {
                axes[k].push(c);
            }
        }
    }
    for axis in &mut axes {
        axis.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    }
    let sizes: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let n_points: usize = sizes.iter().product();

    let grid = GridSpec::rectangular(&sizes)?;
    let mut responses = Array2::zeros((subjects.len(), n_points));
    for (i, rows) in subjects.iter().enumerate() {
        if rows.len() != n_points {
            return Err(Error::Inconsistent(format!(
                "{}: {} rows, lattice has {n_points} points",
                files[i].display(),
                rows.len()
            )));
        }
        let mut seen: BTreeMap<usize, f64> = BTreeMap::new();
        for (coords, value) in rows {
            if coords.len() != d {
                return Err(Error::Inconsistent(format!(
                    "{}: mixed coordinate dimensions",
                    files[i].display()
                )));
            }
            let mut flat = 0usize;
            for (k, &c) in coords.iter().enumerate() {
                let idx = axes[k]
                    .iter()
                    .position(|&v| v == c)
                    .ok_or_else(|| {
                        Error::Inconsistent(format!(
                            "{}: coordinate {c} not on the shared lattice",
                            files[i].display()
                        ))
                    })?;
                flat = flat * sizes[k] + idx;
            }
            if seen.insert(flat, *value).is_some() {
                return Err(Error::Inconsistent(format!(
                    "{}: duplicate lattice point",
                    files[i].display()
                )));
            }
        }
        for (flat, value) in seen {
            responses[[i, flat]] = value;
        }
    }

    Ok(FunctionalSample {
        grid,
        responses,
        truth: None,
        meta: None,
    })
}

fn parse_csv(path: &Path) -> Result<Vec<(Vec<f64>, f64)>> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            return Err(Error::Format(format!("{}:{}: expected x1,...,xd,value", path.display(), ln + 1)));
        }
        let mut nums = Vec::with_capacity(fields.len());
        for f in &fields {
            nums.push(f.trim().parse::<f64>().map_err(|_| {
                Error::Format(format!("{}:{}: bad number {f:?}", path.display(), ln + 1))
            })?);
        }
        let value = nums.pop().expect("at least two fields");
        rows.push((nums, value));
    }
    Ok(rows)
}
