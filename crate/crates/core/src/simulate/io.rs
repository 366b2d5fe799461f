//! Trajectory import and export.
//!
//! CSV: header `t,x_1,…,x_d`, one row per observation.
//!
//! Binary (little-endian):
//!
//! | offset | type      | field                  |
//! |--------|-----------|------------------------|
//! | 0      | `[u8; 4]` | magic `SDTR`           |
//! | 4      | `u32`     | format version (1)     |
//! | 8      | `u64`     | `n` (increments)       |
//! | 16     | `u64`     | `d`                    |
//! | 24     | `f64`     | `Δₙ`                   |
//! | 32     | `u64`     | seed                   |
//! | 40     | `f64`     | `(n+1)·d` states, row-major |

use std::io::{Read, Write};

use super::Trajectory;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SDTR";
const VERSION: u32 = 1;

pub fn write_csv<W: Write>(traj: &Trajectory, w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let d = traj.d();
    let mut header = Vec::with_capacity(d + 1);
    header.push("t".to_string());
    header.extend((1..=d).map(|k| format!("x_{k}")));
    wtr.write_record(&header)?;
    let mut row = Vec::with_capacity(d + 1);
    for i in 0..=traj.n() {
        row.clear();
        row.push((i as f64 * traj.delta_n()).to_string());
        row.extend(traj.state(i).iter().map(|v| v.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a CSV trajectory; the step is recovered from the first two times.
pub fn read_csv<R: Read>(r: R, seed: u64) -> Result<Trajectory> {
    let mut rdr = csv::Reader::from_reader(r);
    let d = rdr.headers()?.len().saturating_sub(1);
    if d == 0 {
        return Err(Error::InvalidInput("CSV needs a time column and at least one state".into()));
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("bad number {s:?}: {e}")))
        };
        times.push(parse(&rec[0])?);
        for k in 1..=d {
            states.push(parse(&rec[k])?);
        }
    }
    if times.len() < 2 {
        return Err(Error::InvalidInput("CSV needs at least two observations".into()));
    }
    let delta_n = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    Trajectory::new(states, d, delta_n, seed)
}

pub fn write_binary<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(traj.n() as u64).to_le_bytes())?;
    w.write_all(&(traj.d() as u64).to_le_bytes())?;
    w.write_all(&traj.delta_n().to_le_bytes())?;
    w.write_all(&traj.seed().to_le_bytes())?;
    for v in traj.states() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Trajectory> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidInput("not a trajectory file".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Error::InvalidInput(format!("unsupported format version {version}")));
    }
    let mut next_u64 = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let n = next_u64(&mut r)? as usize;
    let d = next_u64(&mut r)? as usize;
    let delta_n = f64::from_bits(next_u64(&mut r)?);
    let seed = next_u64(&mut r)?;
    let len = (n + 1)
        .checked_mul(d)
        .ok_or_else(|| Error::InvalidInput("header dimensions overflow".into()))?;
    let mut states = Vec::with_capacity(len);
    for _ in 0..len {
        states.push(f64::from_bits(next_u64(&mut r)?));
    }
    Trajectory::new(states, d, delta_n, seed)
}
