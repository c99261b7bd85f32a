//! Model checkpoint format (little-endian):
//!
//! ```text
//! magic "MInet1" | u32 n_channels | u32 in_samples
//! u32 n_layers, then per layer: u32 rank, rank × u32 output dims (rank 0 for dropout)
//! u32 n_tensors, then per tensor: u32 rank, rank × u32 dims, f32 values
//! ```
//!
//! Tensors appear in declaration order (see [`super::model::param`]).

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{infer_shapes, Model, ModelSpec, NetError, Scalar, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 6] = b"MInet1";

fn io(e: std::io::Error) -> NetError {
    NetError::Checkpoint(e.to_string())
}

pub fn write_checkpoint<T: Scalar, W: Write>(model: &Model<T>, mut w: W) -> Result<(), NetError> {
    let spec = model.spec();
    w.write_all(CHECKPOINT_MAGIC).map_err(io)?;
    w.write_u32::<LittleEndian>(spec.n_channels as u32).map_err(io)?;
    w.write_u32::<LittleEndian>(spec.in_samples as u32).map_err(io)?;
    let layers = infer_shapes(&spec)?;
    w.write_u32::<LittleEndian>(layers.len() as u32).map_err(io)?;
    for layer in &layers {
        let dims = layer.output.as_deref().unwrap_or(&[]);
        w.write_u32::<LittleEndian>(dims.len() as u32).map_err(io)?;
        for &d in dims {
            w.write_u32::<LittleEndian>(d as u32).map_err(io)?;
        }
    }
    w.write_u32::<LittleEndian>(model.params().len() as u32).map_err(io)?;
    for t in model.params() {
        w.write_u32::<LittleEndian>(t.shape().len() as u32).map_err(io)?;
        for &d in t.shape() {
            w.write_u32::<LittleEndian>(d as u32).map_err(io)?;
        }
        for v in t.data() {
            w.write_f32::<LittleEndian>(v.to_f32().unwrap_or(f32::NAN)).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

fn read_dims<R: Read>(r: &mut R) -> Result<Vec<usize>, NetError> {
    let rank = r.read_u32::<LittleEndian>().map_err(io)? as usize;
    if rank > 8 {
        return Err(NetError::Checkpoint(format!("implausible rank {rank}")));
    }
    (0..rank).map(|_| Ok(r.read_u32::<LittleEndian>().map_err(io)? as usize)).collect()
}

pub fn read_checkpoint<T: Scalar, R: Read>(mut r: R) -> Result<Model<T>, NetError> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(NetError::Checkpoint("bad magic".into()));
    }
    let n_channels = r.read_u32::<LittleEndian>().map_err(io)? as usize;
    let in_samples = r.read_u32::<LittleEndian>().map_err(io)? as usize;
    let spec = ModelSpec::new(n_channels, in_samples)?;

    let layers = infer_shapes(&spec)?;
    let n_layers = r.read_u32::<LittleEndian>().map_err(io)? as usize;
    if n_layers != layers.len() {
        return Err(NetError::Checkpoint(format!("{n_layers} layers recorded, expected {}", layers.len())));
    }
    for layer in &layers {
        let dims = read_dims(&mut r)?;
        if dims != layer.output.clone().unwrap_or_default() {
            return Err(NetError::Checkpoint(format!("layer {} shape echo differs", layer.layer)));
        }
    }

    let mut model = Model::<T>::zeros(spec)?;
    let n_tensors = r.read_u32::<LittleEndian>().map_err(io)? as usize;
    if n_tensors != model.params().len() {
        return Err(NetError::Checkpoint(format!("{n_tensors} tensors, expected {}", model.params().len())));
    }
    for t in model.params_mut().iter_mut() {
        let dims = read_dims(&mut r)?;
        if dims != t.shape() {
            return Err(NetError::Checkpoint(format!("tensor shape {dims:?}, expected {:?}", t.shape())));
        }
        let mut raw = vec![0f32; t.len()];
        r.read_f32_into::<LittleEndian>(&mut raw).map_err(io)?;
        let values: Vec<T> = raw.iter().map(|&v| T::from_f32(v).unwrap_or_else(T::nan)).collect();
        *t = Tensor::from_vec(&dims, values)?;
    }
    if !model.all_finite() {
        return Err(NetError::Checkpoint("non-finite parameter".into()));
    }
    Ok(model)
}
