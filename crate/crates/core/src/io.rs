//! Binary tensor and mask files, and CSV reports.
//!
//! Binary layout: 8-byte magic `MRTENSR1`, little-endian `u32` rank, `rank`
//! `u32` dimensions, a `u8` flag, then the payload. For tensors the flag is 1
//! for complex data (interleaved re/im `f64`) and 0 for real `f64`. Masks use
//! flag 2 and one byte per entry.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::SamplingMask;
use crate::tensor::Tensor;
use num_complex::Complex64;

pub const MAGIC: &[u8; 8] = b"MRTENSR1";
const MAX_RANK: usize = 8;
const FLAG_REAL: u8 = 0;
const FLAG_COMPLEX: u8 = 1;
const FLAG_MASK: u8 = 2;

fn encode_header(shape: &[usize], flag: u8) -> Vec<u8> {
    let mut out = Vec::with_capacity(13 + 4 * shape.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
    for &d in shape {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.push(flag);
    out
}

struct Header {
    shape: Vec<usize>,
    flag: u8,
    payload_start: usize,
}

fn take(bytes: &[u8], at: usize, len: usize) -> Result<&[u8]> {
    bytes.get(at..at + len).ok_or(Error::Truncated {
        expected: at + len,
        found: bytes.len(),
    })
}

fn decode_header(bytes: &[u8]) -> Result<Header> {
    if take(bytes, 0, 8)? != MAGIC {
        return Err(Error::Format("unknown magic".into()));
    }
    let rank = u32::from_le_bytes(take(bytes, 8, 4)?.try_into().unwrap()) as usize;
    if rank == 0 || rank > MAX_RANK {
        return Err(Error::Format(format!("unsupported rank {rank}")));
    }
    let shape = (0..rank)
        .map(|k| Ok(u32::from_le_bytes(take(bytes, 12 + 4 * k, 4)?.try_into().unwrap()) as usize))
        .collect::<Result<Vec<_>>>()?;
    let flag = take(bytes, 12 + 4 * rank, 1)?[0];
    Ok(Header {
        shape,
        flag,
        payload_start: 13 + 4 * rank,
    })
}

fn payload<'a>(bytes: &'a [u8], header: &Header, unit: usize) -> Result<&'a [u8]> {
    let n: usize = header.shape.iter().product();
    let expected = n * unit;
    let found = bytes.len() - header.payload_start;
    if found < expected {
        return Err(Error::Truncated { expected, found });
    }
    if found > expected {
        return Err(Error::Format(format!("{} trailing bytes after payload", found - expected)));
    }
    Ok(&bytes[header.payload_start..])
}

pub fn encode_tensor(t: &Tensor) -> Vec<u8> {
    let flag = if t.is_complex() { FLAG_COMPLEX } else { FLAG_REAL };
    let mut out = encode_header(t.shape(), flag);
    out.extend_from_slice(&t.payload_bytes());
    out
}

pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor> {
    let header = decode_header(bytes)?;
    let f64s = |data: &[u8]| -> Vec<f64> {
        data.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    };
    match header.flag {
        FLAG_REAL => Tensor::real(&header.shape, f64s(payload(bytes, &header, 8)?)),
        FLAG_COMPLEX => {
            let v = f64s(payload(bytes, &header, 16)?);
            Tensor::complex(
                &header.shape,
                v.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect(),
            )
        }
        FLAG_MASK => Err(Error::Format("file holds a mask, not a tensor".into())),
        other => Err(Error::Format(format!("unknown storage flag {other}"))),
    }
}

pub fn write_tensor(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    Ok(fs::write(path, encode_tensor(t))?)
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    decode_tensor(&fs::read(path)?)
}

pub fn encode_mask(mask: &SamplingMask) -> Vec<u8> {
    let mut out = encode_header(mask.shape(), FLAG_MASK);
    out.extend(mask.entries().iter().map(|&b| b as u8));
    out
}

pub fn decode_mask(bytes: &[u8]) -> Result<SamplingMask> {
    let header = decode_header(bytes)?;
    if header.flag != FLAG_MASK {
        return Err(Error::Format("file holds a tensor, not a mask".into()));
    }
    let entries = payload(bytes, &header, 1)?
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::Format(format!("mask byte {other} is not 0 or 1"))),
        })
        .collect::<Result<Vec<_>>>()?;
    match header.shape[..] {
        [_, _] => SamplingMask::new(&header.shape, entries),
        _ => Err(Error::Format(format!("mask must be 2-D, got {:?}", header.shape))),
    }
}

pub fn write_mask(path: impl AsRef<Path>, mask: &SamplingMask) -> Result<()> {
    Ok(fs::write(path, encode_mask(mask))?)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<SamplingMask> {
    decode_mask(&fs::read(path)?)
}

/// Writes rows with a header line; `None` fields become empty cells.
pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?)
}
