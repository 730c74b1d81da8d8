//! Flat binary checkpoint format.
//!
//! Layout: magic `A2CR`, one version byte, then per-parameter records of
//! name length (u32 LE), name bytes, rank (u32 LE), dims (u32 LE each),
//! data (f32 LE each). Round-trips bit-exactly.

use std::io::{Read, Write};
use std::path::Path;

use super::{ParamSet, Tensor};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"A2CR";
const VERSION: u8 = 1;

pub fn save_checkpoint(params: &ParamSet, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION])?;
    for p in params.iter() {
        let name = p.name.as_bytes();
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name)?;
        let shape = p.tensor.shape();
        w.write_all(&(shape.len() as u32).to_le_bytes())?;
        for &d in shape {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &v in p.tensor.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ParamSet> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::format("checkpoint", "truncated magic"))?;
    if &magic != MAGIC {
        return Err(Error::format("checkpoint", "bad magic"));
    }
    let mut ver = [0u8; 1];
    r.read_exact(&mut ver)?;
    if ver[0] != VERSION {
        return Err(Error::format(
            "checkpoint",
            format!("unsupported version {}", ver[0]),
        ));
    }
    let mut params = ParamSet::new();
    loop {
        let mut len4 = [0u8; 4];
        match r.read_exact(&mut len4) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        let name_len = u32::from_le_bytes(len4) as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| Error::format("checkpoint", "parameter name is not UTF-8"))?;
        r.read_exact(&mut len4)?;
        let rank = u32::from_le_bytes(len4) as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            r.read_exact(&mut len4)?;
            shape.push(u32::from_le_bytes(len4) as usize);
        }
        let n: usize = shape.iter().product();
        let mut data = vec![0.0f32; n];
        for v in data.iter_mut() {
            r.read_exact(&mut len4)?;
            *v = f32::from_le_bytes(len4);
        }
        params.add(name, Tensor::new(shape, data)?);
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut ps = ParamSet::new();
        ps.add(
            "trunk.conv1.kernel",
            Tensor::new(vec![2, 1, 2, 2], vec![0.5, -1.25, 3.0e-7, f32::MIN_POSITIVE, 1e30, -0.0, 7.0, 42.0]).unwrap(),
        );
        ps.add("policy.out.bias", Tensor::from_vec(vec![0.1, -0.2, 0.3]));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        save_checkpoint(&ps, &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.len(), ps.len());
        for (a, b) in ps.iter().zip(loaded.iter()) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.tensor.shape(), b.tensor.shape());
            let bits_a: Vec<u32> = a.tensor.data().iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u32> = b.tensor.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
        }
    }

    #[test]
    fn rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.ckpt");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
