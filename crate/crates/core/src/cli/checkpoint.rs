//! Binary checkpoints.
//!
//! Layout, all little-endian: magic `PEQC`, version (u32), `nx ny nz` (u32),
//! then `h f0 nu_h nu_z kappa_h eps time` (f64), then the physical samples
//! of `v1`, `v2`, `T` (f64, z fastest, then y, then x).

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fields::{Params, State};
use crate::grid::{Field3, Grid};

pub const MAGIC: &[u8; 4] = b"PEQC";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 3 * 4 + 7 * 8;

pub fn encode(s: &State, p: &Params) -> Vec<u8> {
    let g = s.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 3 * g.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for n in g.dims() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for x in [p.h, p.f0, p.nu_h, p.nu_z, p.kappa_h, p.eps, s.time] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    for f in [&s.v1, &s.v2, &s.t] {
        for x in f.values().iter() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Format("checkpoint truncated".into()))?;
        self.pos = end;
        Ok(chunk.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn decode(bytes: &[u8]) -> Result<(State, Params)> {
    let mut r = Reader { bytes, pos: 0 };
    if &r.take::<4>()? != MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let (nx, ny, nz) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    let mut head = [0.0; 7];
    for x in head.iter_mut() {
        *x = r.f64()?;
    }
    let [h, f0, nu_h, nu_z, kappa_h, eps, time] = head;
    let n = nx
        .checked_mul(ny)
        .and_then(|v| v.checked_mul(nz))
        .ok_or_else(|| Error::Format("checkpoint sizes overflow".into()))?;
    let expected = n.checked_mul(24).and_then(|v| v.checked_add(HEADER_LEN));
    if expected != Some(bytes.len()) {
        return Err(Error::Format(format!(
            "checkpoint declares {nx}x{ny}x{nz} but holds {} payload bytes",
            bytes.len().saturating_sub(HEADER_LEN)
        )));
    }
    let grid = Grid::new(nx, ny, nz, h).map_err(|e| Error::Format(e.to_string()))?;
    let mut field = || -> Result<Field3> {
        let values = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        Field3::from_physical(&grid, values)
    };
    let (v1, v2, t) = (field()?, field()?, field()?);
    let params = Params { h, f0, nu_h, nu_z, kappa_h, eps };
    Ok((State::new(v1, v2, t, time)?, params))
}

pub fn write(path: &Path, s: &State, p: &Params) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(s, p))?;
    f.sync_all()?;
    Ok(())
}

pub fn read(path: &Path) -> Result<(State, Params)> {
    decode(&fs::read(path)?)
}
