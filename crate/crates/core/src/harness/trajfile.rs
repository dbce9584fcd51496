//! Binary trajectory files.
//!
//! Layout, all little-endian: the magic bytes `HMDT1`, then `d: u64`,
//! `n: u64` (number of steps, so `n + 1` points) and `dt: f64`, followed by
//! the `(n + 1) d` samples as row-major `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sde::Trajectory;

const MAGIC: &[u8; 5] = b"HMDT1";

pub fn write_trajectory<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(traj.dim() as u64).to_le_bytes())?;
    out.write_all(&(traj.n_steps() as u64).to_le_bytes())?;
    out.write_all(&traj.dt().to_le_bytes())?;
    for v in traj.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trajectory<R: Read>(mut input: R) -> Result<Trajectory> {
    let mut magic = [0u8; 5];
    input
        .read_exact(&mut magic)
        .map_err(|_| Error::Format("missing header".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let mut word = [0u8; 8];
    let mut next = |what: &str| -> Result<[u8; 8]> {
        input
            .read_exact(&mut word)
            .map_err(|_| Error::Format(format!("truncated header ({what})")))?;
        Ok(word)
    };
    let d = u64::from_le_bytes(next("d")?) as usize;
    let n = u64::from_le_bytes(next("n")?) as usize;
    let dt = f64::from_le_bytes(next("dt")?);
    let count = n
        .checked_add(1)
        .and_then(|p| p.checked_mul(d))
        .ok_or_else(|| Error::Format("header sizes overflow".into()))?;
    let mut values = Vec::with_capacity(count.min(1 << 28));
    let mut buf = vec![0u8; 8 * 8192];
    while values.len() < count {
        let take = (count - values.len()).min(8192);
        input
            .read_exact(&mut buf[..8 * take])
            .map_err(|_| Error::Format(format!("expected {count} samples, file ended early")))?;
        values.extend(
            buf[..8 * take]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap())),
        );
    }
    if input.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Format("trailing bytes after the samples".into()));
    }
    Trajectory::new(d, dt, values)
}

pub fn save(traj: &Trajectory, path: &Path) -> Result<()> {
    write_trajectory(traj, BufWriter::new(File::create(path)?))
}

pub fn load(path: &Path) -> Result<Trajectory> {
    read_trajectory(BufReader::new(File::open(path)?))
}

/// Writes `t, x_1, ..., x_d` rows for inspection.
pub fn export_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=traj.dim()).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(traj.dim() + 1);
    for k in 0..traj.len() {
        row.clear();
        row.push(format!("{:.16e}", traj.time(k)));
        row.extend(traj.point(k).iter().map(|v| format!("{v:.16e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
