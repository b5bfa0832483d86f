//! Binary TT file format, all little-endian:
//! `"TTPAR1"`, `u64 N`, `u64 dims[N]`, `u64 ranks[N+1]`, then each core's
//! entries as raw `f64` in storage order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tt::core::TTCore;
use crate::tt::random::check_rank_chain;
use crate::tt::tensor::TTTensor;

pub const MAGIC: &[u8; 6] = b"TTPAR1";

/// Upper bound on the order accepted when reading.
const MAX_ORDER: u64 = 1 << 20;

pub fn write_tt<W: Write>(t: &TTTensor, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(t.order() as u64).to_le_bytes())?;
    for d in t.dims() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for r in t.ranks() {
        w.write_all(&(r as u64).to_le_bytes())?;
    }
    for c in t.cores() {
        for x in c.data() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("file ends before the declared contents".into())
    } else {
        Error::Io(e)
    }
}

fn to_usize(x: u64, what: &str) -> Result<usize> {
    usize::try_from(x).map_err(|_| Error::Format(format!("{what} {x} does not fit in memory")))
}

pub fn read_tt<R: Read>(mut r: R) -> Result<TTTensor> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a TT file (bad magic)".into()));
    }
    let n = read_u64(&mut r)?;
    if n == 0 || n > MAX_ORDER {
        return Err(Error::Format(format!("implausible order {n}")));
    }
    let n = n as usize;
    let dims = (0..n).map(|_| read_u64(&mut r).and_then(|x| to_usize(x, "mode size"))).collect::<Result<Vec<_>>>()?;
    let ranks = (0..=n).map(|_| read_u64(&mut r).and_then(|x| to_usize(x, "rank"))).collect::<Result<Vec<_>>>()?;
    check_rank_chain(&dims, &ranks).map_err(|e| Error::Format(e.to_string()))?;
    let mut cores = Vec::with_capacity(n);
    for k in 0..n {
        let len = ranks[k]
            .checked_mul(dims[k])
            .and_then(|x| x.checked_mul(ranks[k + 1]))
            .ok_or_else(|| Error::Format(format!("core {k} size overflows")))?;
        let mut data = Vec::new();
        let mut buf = [0u8; 8];
        for _ in 0..len {
            r.read_exact(&mut buf).map_err(truncated)?;
            data.push(f64::from_le_bytes(buf));
        }
        cores.push(TTCore::new(ranks[k], dims[k], ranks[k + 1], data)?);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after the last core".into()));
    }
    TTTensor::new(cores)
}

pub fn save(t: &TTTensor, path: impl AsRef<Path>) -> Result<()> {
    write_tt(t, BufWriter::new(File::create(path)?))
}

pub fn load(path: impl AsRef<Path>) -> Result<TTTensor> {
    read_tt(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tt::random::random_tt;

    #[test]
    fn bitwise_round_trip() {
        let t = random_tt(&[3, 4, 2], &[1, 2, 3, 1], 5).unwrap();
        let mut buf = Vec::new();
        write_tt(&t, &mut buf).unwrap();
        assert_eq!(buf.len(), 6 + 8 + 3 * 8 + 4 * 8 + 8 * t.storage());
        let back = read_tt(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        let bits = |t: &TTTensor| -> Vec<u64> {
            t.cores().iter().flat_map(|c| c.data().iter().map(|x| x.to_bits())).collect()
        };
        assert_eq!(bits(&back), bits(&t));
    }

    #[test]
    fn header_layout() {
        let t = random_tt(&[2], &[1, 1], 0).unwrap();
        let mut buf = Vec::new();
        write_tt(&t, &mut buf).unwrap();
        assert_eq!(&buf[..6], b"TTPAR1");
        assert_eq!(u64::from_le_bytes(buf[6..14].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(buf[14..22].try_into().unwrap()), 2);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let t = random_tt(&[3, 4], &[1, 2, 1], 1).unwrap();
        let mut buf = Vec::new();
        write_tt(&t, &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_tt(bad.as_slice()), Err(Error::Format(_))));
        assert!(matches!(read_tt(&buf[..buf.len() - 3]), Err(Error::Format(_))));
        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(read_tt(long.as_slice()), Err(Error::Format(_))));
    }
}
