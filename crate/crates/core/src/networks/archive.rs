//! Binary key → tensor archive.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic   8 bytes  "DBSDEPAR"
//! version u32      1
//! count   u32
//! count × entry:
//!   name_len u32, name (UTF-8 bytes)
//!   rank     u32, dims (rank × u64)
//!   values   (Π dims) × f64
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

use super::NamedTensors;

const MAGIC: &[u8; 8] = b"DBSDEPAR";
const VERSION: u32 = 1;

pub fn write_archive_to<W: Write>(mut w: W, entries: &[(String, Tensor)]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(entries.len() as u32).to_le_bytes())?;
    for (name, t) in entries {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.rank() as u32).to_le_bytes())?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_archive_from<R: Read>(mut r: R) -> Result<NamedTensors> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Archive("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Archive(format!("unsupported version {version}")));
    }
    let count = read_u32(&mut r)?;
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|e| Error::Archive(e.to_string()))?;
        let rank = read_u32(&mut r)? as usize;
        let shape = (0..rank)
            .map(|_| read_u64(&mut r).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut b = [0u8; 8];
        for _ in 0..n {
            r.read_exact(&mut b)?;
            data.push(f64::from_le_bytes(b));
        }
        out.push((name, Tensor::new(shape, data)?));
    }
    Ok(out)
}

pub fn write_archive(path: &Path, entries: &[(String, Tensor)]) -> Result<()> {
    write_archive_to(BufWriter::new(File::create(path)?), entries)
}

pub fn read_archive(path: &Path) -> Result<NamedTensors> {
    read_archive_from(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::{init_xnet, NetworkConfig, XNetParams};
    use crate::sampler::RngState;
    use proptest::prelude::*;

    #[test]
    fn xnet_parameters_survive_a_file_round_trip() {
        let p = init_xnet(&NetworkConfig::default(), 4, 3, &mut RngState::new(1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.bin");
        write_archive(&path, &p.clone().into_named()).unwrap();
        let back = XNetParams::from_named(&read_archive(&path).unwrap()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn header_is_little_endian() {
        let mut buf = Vec::new();
        write_archive_to(&mut buf, &[("c".into(), Tensor::scalar(1.0))]).unwrap();
        assert_eq!(&buf[..8], b"DBSDEPAR");
        assert_eq!(&buf[8..12], &[1, 0, 0, 0]);
        assert_eq!(&buf[12..16], &[1, 0, 0, 0]);
        assert_eq!(&buf[buf.len() - 8..], &1.0f64.to_le_bytes());
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(read_archive_from(&b"NOTANARCHIVE...."[..]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(values in proptest::collection::vec(-1e6f64..1e6, 0..40), name in "[a-z]{1,8}") {
            let t = Tensor::vector(values);
            let mut buf = Vec::new();
            write_archive_to(&mut buf, &[(name.clone(), t.clone())]).unwrap();
            let back = read_archive_from(buf.as_slice()).unwrap();
            prop_assert_eq!(back, vec![(name, t)]);
        }
    }
}
