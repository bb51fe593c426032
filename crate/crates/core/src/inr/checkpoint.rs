//! Binary model container.
//!
//! ```text
//! "GEOINR01"
//! u16 length + encoding fingerprint (UTF-8)
//! u8 task (0 binary, 1 regression)
//! u32 hidden_dim, u32 n_layers
//! f64 omega0, f64 target_shift, f64 target_scale
//! u32 layer count, then (u32 in, u32 out) per layer
//! f64 parameters: per layer, weight row-major then bias
//! ```
//!
//! All integers and floats are little-endian.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::model::{Layer, SirenModel};
use crate::error::{Error, Result};
use crate::geodata::TaskKind;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"GEOINR01";

pub fn to_checkpoint_bytes(model: &SirenModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + model.n_params() * 8);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    let fp = model.spec_fingerprint.as_bytes();
    out.extend_from_slice(&(fp.len() as u16).to_le_bytes());
    out.extend_from_slice(fp);
    out.push(match model.task {
        TaskKind::BinaryClassification => 0,
        TaskKind::Regression => 1,
    });
    out.extend_from_slice(&(model.hidden_dim as u32).to_le_bytes());
    out.extend_from_slice(&(model.n_layers as u32).to_le_bytes());
    for v in [model.omega0, model.target_shift, model.target_scale] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(model.layers.len() as u32).to_le_bytes());
    for l in &model.layers {
        out.extend_from_slice(&(l.input_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(l.output_dim() as u32).to_le_bytes());
    }
    for s in model.param_slices() {
        for p in s {
            out.extend_from_slice(&p.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, field: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::format("checkpoint", format!("truncated while reading {field} at byte {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, field: &str) -> Result<u8> {
        Ok(self.take(1, field)?[0])
    }

    fn u16(&mut self, field: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, field)?.try_into().expect("two bytes")))
    }

    fn u32(&mut self, field: &str) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4, field)?.try_into().expect("four bytes")) as usize)
    }

    fn f64(&mut self, field: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, field)?.try_into().expect("eight bytes")))
    }
}

pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<SirenModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::format("checkpoint", "bad magic, expected GEOINR01"));
    }
    let fp_len = r.u16("fingerprint length")? as usize;
    let spec_fingerprint = String::from_utf8(r.take(fp_len, "fingerprint")?.to_vec())
        .map_err(|_| Error::format("checkpoint", "fingerprint is not UTF-8"))?;
    let task = match r.u8("task")? {
        0 => TaskKind::BinaryClassification,
        1 => TaskKind::Regression,
        other => return Err(Error::format("checkpoint", format!("unknown task code {other}"))),
    };
    let hidden_dim = r.u32("hidden_dim")?;
    let n_layers = r.u32("n_layers")?;
    let omega0 = r.f64("omega0")?;
    let target_shift = r.f64("target_shift")?;
    let target_scale = r.f64("target_scale")?;
    let n = r.u32("layer count")?;
    if n != n_layers + 1 {
        return Err(Error::format("checkpoint", format!("{n} layers stored for {n_layers} hidden layers")));
    }
    let mut shapes: Vec<(usize, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        let shape = (r.u32("layer shape")?, r.u32("layer shape")?);
        if i > 0 && shape.0 != shapes[i - 1].1 {
            return Err(Error::format("checkpoint", format!("layer {i} input {} does not chain from {}", shape.0, shapes[i - 1].1)));
        }
        shapes.push(shape);
    }
    if shapes.last().map(|s| s.1) != Some(1) {
        return Err(Error::format("checkpoint", "output layer must have width 1"));
    }
    let mut layers = Vec::with_capacity(n);
    for (i, &(input, output)) in shapes.iter().enumerate() {
        let mut read = |count: usize| -> Result<Vec<f64>> {
            let raw = r.take(count * 8, &format!("layer {i} parameters"))?;
            Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes"))).collect())
        };
        let weight = Array2::from_shape_vec((input, output), read(input * output)?).expect("length checked");
        let bias = Array1::from(read(output)?);
        layers.push(Layer { weight, bias });
    }
    if r.pos != bytes.len() {
        return Err(Error::format("checkpoint", format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(SirenModel { layers, omega0, hidden_dim, n_layers, task, target_shift, target_scale, spec_fingerprint })
}

pub fn save_checkpoint(model: &SirenModel, path: &Path) -> Result<()> {
    fs::write(path, to_checkpoint_bytes(model))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<SirenModel> {
    let bytes = fs::read(path).map_err(|e| Error::Load { path: path.to_path_buf(), reason: e.to_string() })?;
    from_checkpoint_bytes(&bytes).map_err(|e| Error::Load { path: path.to_path_buf(), reason: e.to_string() })
}
