//! Binary probe files.
//!
//! Layout (little-endian): magic `JPRB`, u32 version, u8 kind
//! (0 structural, 1 perceptron), u32 rank, u32 dim, then `rank * dim` f64
//! values of `B` in row-major order. Nothing may follow.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::{ProbeError, ProbeKind, ProbeParams};

pub const JPRB_MAGIC: &[u8; 4] = b"JPRB";
const JPRB_VERSION: u32 = 1;

pub fn write_params<W: Write>(params: &ProbeParams, mut out: W) -> Result<(), ProbeError> {
    out.write_all(JPRB_MAGIC)?;
    out.write_all(&JPRB_VERSION.to_le_bytes())?;
    out.write_all(&[match params.kind {
        ProbeKind::Structural => 0u8,
        ProbeKind::Perceptron => 1u8,
    }])?;
    out.write_all(&(params.rank() as u32).to_le_bytes())?;
    out.write_all(&(params.dim() as u32).to_le_bytes())?;
    let mut payload = Vec::with_capacity(params.b.len() * 8);
    for v in params.b.iter() {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&payload)?;
    out.flush()?;
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], offset: &mut usize, what: &str) -> Result<(), ProbeError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => ProbeError::Format(format!("truncated {what} at byte {offset}")),
        _ => ProbeError::Io(e),
    })?;
    *offset += buf.len();
    Ok(())
}

fn read_u32<R: Read>(r: &mut R, offset: &mut usize, what: &str) -> Result<u32, ProbeError> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, offset, what)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_params<R: Read>(mut input: R) -> Result<ProbeParams, ProbeError> {
    let mut offset = 0usize;
    let mut magic = [0u8; 4];
    read_exact(&mut input, &mut magic, &mut offset, "magic")?;
    if &magic != JPRB_MAGIC {
        return Err(ProbeError::Format("bad magic at byte 0".into()));
    }
    let version = read_u32(&mut input, &mut offset, "version")?;
    if version != JPRB_VERSION {
        return Err(ProbeError::Format(format!("unsupported version {version} at byte 4")));
    }
    let mut kind = [0u8; 1];
    read_exact(&mut input, &mut kind, &mut offset, "kind")?;
    let kind = match kind[0] {
        0 => ProbeKind::Structural,
        1 => ProbeKind::Perceptron,
        other => return Err(ProbeError::Format(format!("unknown kind byte {other} at byte 8"))),
    };
    let rank = read_u32(&mut input, &mut offset, "rank")? as usize;
    let dim = read_u32(&mut input, &mut offset, "dim")? as usize;
    if rank == 0 || rank > dim {
        return Err(ProbeError::Format(format!("rank {rank} outside [1, {dim}]")));
    }
    let mut values = Vec::with_capacity(rank * dim);
    let mut b = [0u8; 8];
    for _ in 0..rank * dim {
        let at = offset;
        read_exact(&mut input, &mut b, &mut offset, "matrix")?;
        let v = f64::from_le_bytes(b);
        if !v.is_finite() {
            return Err(ProbeError::Format(format!("non-finite value at byte {at}")));
        }
        values.push(v);
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(ProbeError::Format(format!("trailing bytes after byte {offset}")));
    }
    let b = Array2::from_shape_vec((rank, dim), values).expect("shape matches length");
    ProbeParams::new(kind, b)
}

pub fn write_params_file(params: &ProbeParams, path: impl AsRef<Path>) -> Result<(), ProbeError> {
    write_params(params, BufWriter::new(File::create(path)?))
}

pub fn read_params_file(path: impl AsRef<Path>) -> Result<ProbeParams, ProbeError> {
    read_params(BufReader::new(File::open(path)?))
}
