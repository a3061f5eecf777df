//! Binary field dumps.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic   8 bytes  "NKSNAP01"
//! n       u32
//! cells   u64
//! h       f64
//! dt      f64
//! count   u64
//! count rows of (t, u[0..cells], v[0..cells]) as f64
//! ```

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"NKSNAP01";

/// Both fields at one time level, indexed by cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub n: u32,
    pub cells: u64,
    pub h: f64,
    pub dt: f64,
    pub count: u64,
}

pub fn write_snapshots<W: Write>(
    mut w: W,
    n: u32,
    h: f64,
    dt: f64,
    snaps: &[Snapshot],
) -> io::Result<()> {
    let cells = snaps.first().map_or(0, |s| s.u.len());
    if snaps
        .iter()
        .any(|s| s.u.len() != cells || s.v.len() != cells)
    {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "snapshots have mismatched lengths",
        ));
    }
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&(cells as u64).to_le_bytes())?;
    w.write_all(&h.to_le_bytes())?;
    w.write_all(&dt.to_le_bytes())?;
    w.write_all(&(snaps.len() as u64).to_le_bytes())?;
    for s in snaps {
        w.write_all(&s.t.to_le_bytes())?;
        for x in s.u.iter().chain(&s.v) {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

pub fn read_snapshots<R: Read>(mut r: R) -> io::Result<(SnapshotHeader, Vec<Snapshot>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "not a snapshot file",
        ));
    }
    let mut nb = [0u8; 4];
    r.read_exact(&mut nb)?;
    let header = SnapshotHeader {
        n: u32::from_le_bytes(nb),
        cells: read_u64(&mut r)?,
        h: read_f64(&mut r)?,
        dt: read_f64(&mut r)?,
        count: read_u64(&mut r)?,
    };
    let cells = header.cells as usize;
    let mut snaps = Vec::with_capacity(header.count as usize);
    for _ in 0..header.count {
        let t = read_f64(&mut r)?;
        let u = (0..cells)
            .map(|_| read_f64(&mut r))
            .collect::<io::Result<Vec<_>>>()?;
        let v = (0..cells)
            .map(|_| read_f64(&mut r))
            .collect::<io::Result<Vec<_>>>()?;
        snaps.push(Snapshot { t, u, v });
    }
    Ok((header, snaps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let snaps = vec![
            Snapshot {
                t: 0.0,
                u: vec![1.0, 2.0],
                v: vec![3.0, 4.0],
            },
            Snapshot {
                t: 0.5,
                u: vec![-1.0, 0.25],
                v: vec![0.0, 1e300],
            },
        ];
        let mut buf = Vec::new();
        write_snapshots(&mut buf, 3, 0.1, 0.05, &snaps).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 8 * 4 + 2 * 8 * 5);
        let (h, back) = read_snapshots(buf.as_slice()).unwrap();
        assert_eq!((h.n, h.cells, h.count), (3, 2, 2));
        assert_eq!(back, snaps);
        assert!(read_snapshots(&b"garbage!"[..]).is_err());
    }
}
