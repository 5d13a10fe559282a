//! Binary checkpoint format.
//!
//! Layout: `HFGN` magic, format version (`u32` LE), header length (`u64`
//! LE), UTF-8 JSON header, then every tensor as `f64` LE in header order.

use super::{Checkpoint, TrainConfig};
use crate::dataset::{DatasetStats, LabelingSetup};
use crate::error::{Error, Result};
use crate::geometry::GridSpec;
use crate::hydro::{HydroEnv, QuadratureSpec};
use crate::nn::{MlpParams, MlpSpec};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"HFGN";
pub const CHECKPOINT_VERSION: u32 = 1;
const PREAMBLE: usize = 16;

#[derive(Serialize, Deserialize)]
struct GridJson {
    x_stations: Vec<f64>,
    z_stations: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LabelingJson {
    g: f64,
    rho: f64,
    nu: f64,
    n_theta: usize,
    theta_max: f64,
    refinement_factor: usize,
    convergence_tol: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RngJson {
    seed: u64,
    /// Decimal `u128`.
    word_pos: String,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    len: usize,
    /// Byte offset from the start of the tensor blob.
    offset: u64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: TrainConfig,
    g_spec: MlpSpec,
    d_spec: MlpSpec,
    stats: DatasetStats,
    grid: GridJson,
    length: f64,
    labeling: LabelingJson,
    iteration: u64,
    rng: RngJson,
    tensors: Vec<TensorEntry>,
}

fn tensor_entries(prefix: &str, p: &MlpParams<f64>, offset: &mut u64, out: &mut Vec<TensorEntry>) {
    for (l, layer) in p.layers.iter().enumerate() {
        for (kind, len) in [("w", layer.w.data().len()), ("b", layer.b.len())] {
            out.push(TensorEntry { name: format!("{prefix}.{l}.{kind}"), len, offset: *offset });
            *offset += 8 * len as u64;
        }
    }
}

/// Serializes a checkpoint.
pub fn write_checkpoint<W: Write>(out: &mut W, c: &Checkpoint) -> Result<()> {
    for (name, p) in [("generator", &c.g), ("critic", &c.d)] {
        p.check()?;
        if !p.is_finite() {
            return Err(Error::Numerical(format!("{name} parameters are not finite")));
        }
    }
    let mut tensors = Vec::new();
    let mut offset = 0;
    tensor_entries("g", &c.g, &mut offset, &mut tensors);
    tensor_entries("d", &c.d, &mut offset, &mut tensors);
    let q = &c.labeling.quadrature;
    let header = Header {
        config: c.config.clone(),
        g_spec: c.g.spec.clone(),
        d_spec: c.d.spec.clone(),
        stats: c.stats.clone(),
        grid: GridJson { x_stations: c.grid.x_stations().to_vec(), z_stations: c.grid.z_stations().to_vec() },
        length: c.length,
        labeling: LabelingJson {
            g: c.labeling.env.g,
            rho: c.labeling.env.rho,
            nu: c.labeling.env.nu,
            n_theta: q.n_theta,
            theta_max: q.theta_max,
            refinement_factor: q.refinement_factor,
            convergence_tol: q.convergence_tol,
        },
        iteration: c.iteration,
        rng: RngJson { seed: c.rng_seed, word_pos: c.rng_word_pos.to_string() },
        tensors,
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Format(format!("header encoding: {e}")))?;
    out.write_all(MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    for p in [&c.g, &c.d] {
        for t in p.tensors() {
            for v in t {
                out.write_all(&v.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Parses a checkpoint written by [`write_checkpoint`].
pub fn read_checkpoint<R: Read>(input: &mut R) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    parse(&bytes)
}

fn parse(bytes: &[u8]) -> Result<Checkpoint> {
    let fmt = |m: String| Error::Format(m);
    if bytes.len() < PREAMBLE {
        return Err(fmt(format!("truncated checkpoint: expected at least {PREAMBLE} bytes, found {}", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(fmt(format!("bad magic at byte 0: expected {:?}, found {:?}", MAGIC, &bytes[..4])));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(fmt(format!("unsupported checkpoint version {version} at byte 4 (expected {CHECKPOINT_VERSION})")));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let blob_start = (PREAMBLE as u64).checked_add(hlen).filter(|&e| e <= bytes.len() as u64).ok_or_else(|| {
        fmt(format!(
            "truncated checkpoint: header declares {hlen} bytes at byte {PREAMBLE}, only {} available",
            bytes.len() - PREAMBLE
        ))
    })? as usize;
    let header: Header = serde_json::from_slice(&bytes[PREAMBLE..blob_start])
        .map_err(|e| fmt(format!("invalid header JSON at byte {}: {e}", PREAMBLE + e.column().saturating_sub(1))))?;

    let blob = &bytes[blob_start..];
    let expected: u64 = header.tensors.iter().map(|t| 8 * t.len as u64).sum();
    if blob.len() as u64 != expected {
        return Err(fmt(format!(
            "tensor data at byte {blob_start}: expected {expected} bytes, found {}",
            blob.len()
        )));
    }
    let mut values = Vec::with_capacity(header.tensors.len());
    for t in &header.tensors {
        let start = t.offset as usize;
        let end = start + 8 * t.len;
        if end > blob.len() {
            return Err(fmt(format!("tensor {} extends past the end of the data", t.name)));
        }
        let v: Vec<f64> =
            blob[start..end].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        if let Some(k) = v.iter().position(|x| !x.is_finite()) {
            return Err(fmt(format!("non-finite value in tensor {} at byte {}", t.name, blob_start + start + 8 * k)));
        }
        values.push(v);
    }
    let n_g = 2 * header.g_spec.n_layers();
    if values.len() != n_g + 2 * header.d_spec.n_layers() {
        return Err(fmt(format!("header lists {} tensors, specs need {}", values.len(), n_g + 2 * header.d_spec.n_layers())));
    }
    let d_vals = values.split_off(n_g);
    let g = MlpParams::from_flat_tensors(&header.g_spec, values)?;
    let d = MlpParams::from_flat_tensors(&header.d_spec, d_vals)?;
    let grid = GridSpec::new(header.grid.x_stations, header.grid.z_stations)?;
    let l = header.labeling;
    let rng_word_pos =
        header.rng.word_pos.parse().map_err(|_| fmt(format!("bad RNG word position {:?}", header.rng.word_pos)))?;
    Ok(Checkpoint {
        config: header.config,
        g,
        d,
        stats: header.stats,
        grid,
        length: header.length,
        labeling: LabelingSetup {
            env: HydroEnv { g: l.g, rho: l.rho, nu: l.nu },
            quadrature: QuadratureSpec {
                n_theta: l.n_theta,
                theta_max: l.theta_max,
                refinement_factor: l.refinement_factor,
                convergence_tol: l.convergence_tol,
            },
        },
        iteration: header.iteration,
        rng_seed: header.rng.seed,
        rng_word_pos,
    })
}

pub fn save_checkpoint(path: &Path, c: &Checkpoint) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, c)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let f = File::open(path).map_err(|e| Error::Format(format!("cannot open {}: {e}", path.display())))?;
    read_checkpoint(&mut BufReader::new(f))
}
