//! Model checkpoints.
//!
//! Layout (all little-endian):
//!   magic "SMLYCKPT", version u16,
//!   d_x u32, d_e u32, hidden count u32 + widths u32 each,
//!   activation u8, init_scale f32, seed u64,
//!   taxonomy digest (32 bytes),
//!   head flag u8 (+ head activation u8 when present),
//!   tensor count u32, then the tensors in the shared tensor format:
//!   embedder weight/bias pairs first, head weight and bias last.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

use super::transfer::{HeadActivation, TransferHead};
use super::{Activation, EmbedderParams, ModelConfig};

const MAGIC: &[u8; 8] = b"SMLYCKPT";
const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model_cfg: ModelConfig,
    pub taxonomy_digest: [u8; 32],
    pub params: EmbedderParams,
    pub head: Option<TransferHead>,
}

pub fn write_checkpoint<W: Write>(w: &mut W, ckpt: &Checkpoint) -> Result<()> {
    let cfg = &ckpt.model_cfg;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let dim = |v: usize| -> Result<[u8; 4]> {
        u32::try_from(v)
            .map(|d| d.to_le_bytes())
            .map_err(|_| Error::Parse(format!("dimension {v} exceeds u32")))
    };
    w.write_all(&dim(cfg.d_x)?)?;
    w.write_all(&dim(cfg.d_e)?)?;
    w.write_all(&dim(cfg.hidden.len())?)?;
    for &h in &cfg.hidden {
        w.write_all(&dim(h)?)?;
    }
    w.write_all(&[cfg.activation.code()])?;
    w.write_all(&cfg.init_scale.to_le_bytes())?;
    w.write_all(&cfg.seed.to_le_bytes())?;
    w.write_all(&ckpt.taxonomy_digest)?;
    match &ckpt.head {
        Some(head) => w.write_all(&[1, head.activation.code()])?,
        None => w.write_all(&[0])?,
    }
    let mut tensors = ckpt.params.to_tensors();
    if let Some(head) = &ckpt.head {
        tensors.push(head.w.clone());
        tensors.push(head.b.clone());
    }
    w.write_all(&dim(tensors.len())?)?;
    for t in &tensors {
        t.write_to(w)?;
    }
    Ok(())
}

fn read_bytes<R: Read, const N: usize>(r: &mut R, what: &str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Parse(format!("truncated checkpoint: {what}")))?;
    Ok(buf)
}

pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<Checkpoint> {
    let magic: [u8; 8] = read_bytes(r, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Parse(format!("bad checkpoint magic {magic:?}")));
    }
    let version = u16::from_le_bytes(read_bytes(r, "version")?);
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported checkpoint version {version}")));
    }
    let read_dim = |r: &mut R, what: &str| -> Result<usize> {
        Ok(u32::from_le_bytes(read_bytes(r, what)?) as usize)
    };
    let d_x = read_dim(r, "d_x")?;
    let d_e = read_dim(r, "d_e")?;
    let hidden_len = read_dim(r, "hidden count")?;
    if hidden_len > 1024 {
        return Err(Error::Parse(format!("implausible hidden layer count {hidden_len}")));
    }
    let mut hidden = Vec::with_capacity(hidden_len);
    for _ in 0..hidden_len {
        hidden.push(read_dim(r, "hidden width")?);
    }
    let activation = Activation::from_code(read_bytes::<R, 1>(r, "activation")?[0])?;
    let init_scale = f32::from_le_bytes(read_bytes(r, "init_scale")?);
    let seed = u64::from_le_bytes(read_bytes(r, "seed")?);
    let taxonomy_digest: [u8; 32] = read_bytes(r, "taxonomy digest")?;
    let head_flag = read_bytes::<R, 1>(r, "head flag")?[0];
    let head_activation = match head_flag {
        0 => None,
        1 => Some(HeadActivation::from_code(read_bytes::<R, 1>(r, "head activation")?[0])?),
        other => return Err(Error::Parse(format!("bad head flag {other}"))),
    };
    let tensor_count = read_dim(r, "tensor count")?;

    let model_cfg = ModelConfig {
        d_x,
        d_e,
        hidden,
        activation,
        init_scale,
        seed,
    };
    let layer_count = model_cfg.layer_dims().len();
    let expected = 2 * layer_count + if head_activation.is_some() { 2 } else { 0 };
    if tensor_count != expected {
        return Err(Error::Parse(format!(
            "checkpoint holds {tensor_count} tensors, architecture needs {expected}"
        )));
    }
    let mut tensors = Vec::with_capacity(tensor_count);
    for _ in 0..tensor_count {
        tensors.push(Tensor::read_from(r)?);
    }
    let head = match head_activation {
        Some(activation) => {
            let b = tensors.pop().unwrap();
            let w = tensors.pop().unwrap();
            if w.rank() != 2 || w.cols() != d_e || b.rank() != 1 || b.len() != w.rows() {
                return Err(Error::Shape(format!(
                    "head shapes {:?} / {:?} do not fit embedding dim {d_e}",
                    w.shape(),
                    b.shape()
                )));
            }
            Some(TransferHead { w, b, activation })
        }
        None => None,
    };
    let params = EmbedderParams::from_tensors(tensors)?;
    for (layer, (fan_in, fan_out)) in params.layers.iter().zip(model_cfg.layer_dims()) {
        if layer.w.cols() != fan_in || layer.w.rows() != fan_out {
            return Err(Error::Shape(format!(
                "layer shape {:?} does not match configured architecture",
                layer.w.shape()
            )));
        }
    }
    Ok(Checkpoint {
        model_cfg,
        taxonomy_digest,
        params,
        head,
    })
}

pub fn save_checkpoint<P: AsRef<Path>>(path: P, ckpt: &Checkpoint) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, ckpt)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Load a checkpoint, verifying it was trained against the expected
/// taxonomy when a digest is supplied.
pub fn load_checkpoint<P: AsRef<Path>>(
    path: P,
    expected_taxonomy: Option<&[u8; 32]>,
) -> Result<Checkpoint> {
    let bytes = fs::read(&path)?;
    let ckpt = read_checkpoint(&mut std::io::Cursor::new(bytes))?;
    if let Some(want) = expected_taxonomy {
        if &ckpt.taxonomy_digest != want {
            return Err(Error::Compatibility(
                "checkpoint was trained against a different taxonomy".into(),
            ));
        }
    }
    Ok(ckpt)
}
