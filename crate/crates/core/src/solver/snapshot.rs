//! Binary snapshot files.
//!
//! Layout (all little-endian):
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `NSBHSNAP` |
//! | 4 | `u32` format version (1) |
//! | 4 + 4 | `u32` `Nh`, `Nv` |
//! | 8 × 3 | `f64` `Lh`, `Lv`, `t` |
//! | 4 | `u32` component count (4: `u¹, u², u³, ρ`) |
//! | 16 × 4·Nh²·Nv | `(re, im)` `f64` pairs, component-major, each component in FFT index order with `k₃` fastest |

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array3;
use num_complex::Complex64;

use super::State;
use crate::error::{Error, Result};
use crate::grid::{AnisoGrid, SpectralField, VectorField};

pub const MAGIC: &[u8; 8] = b"NSBHSNAP";
pub const VERSION: u32 = 1;

pub fn write_snapshot(w: &mut impl Write, s: &State) -> Result<()> {
    let g = s.grid();
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(g.nh as u32)?;
    w.write_u32::<LittleEndian>(g.nv as u32)?;
    w.write_f64::<LittleEndian>(g.lh)?;
    w.write_f64::<LittleEndian>(g.lv)?;
    w.write_f64::<LittleEndian>(s.t)?;
    w.write_u32::<LittleEndian>(4)?;
    for f in s.u.comps().iter().chain(std::iter::once(&s.rho)) {
        for c in f.coeffs().iter() {
            w.write_f64::<LittleEndian>(c.re)?;
            w.write_f64::<LittleEndian>(c.im)?;
        }
    }
    Ok(())
}

pub fn read_snapshot(r: &mut impl Read) -> Result<State> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Invalid("not a snapshot file (bad magic)".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Invalid(format!("unsupported snapshot version {version}")));
    }
    let nh = r.read_u32::<LittleEndian>()? as usize;
    let nv = r.read_u32::<LittleEndian>()? as usize;
    let lh = r.read_f64::<LittleEndian>()?;
    let lv = r.read_f64::<LittleEndian>()?;
    let t = r.read_f64::<LittleEndian>()?;
    let g = AnisoGrid::new(nh, nv, lh, lv)?;
    let n = r.read_u32::<LittleEndian>()?;
    if n != 4 {
        return Err(Error::Invalid(format!("expected 4 components, found {n}")));
    }
    let mut read_field = || -> Result<SpectralField> {
        let mut data = Vec::with_capacity(g.len());
        for _ in 0..g.len() {
            let re = r.read_f64::<LittleEndian>()?;
            let im = r.read_f64::<LittleEndian>()?;
            data.push(Complex64::new(re, im));
        }
        let a = Array3::from_shape_vec(g.shape(), data).map_err(|e| Error::Invalid(e.to_string()))?;
        SpectralField::from_coeffs(g, a)
    };
    let u = [read_field()?, read_field()?, read_field()?];
    let rho = read_field()?;
    let u = VectorField::new(u)?;
    let u = if u.divergence_residual() <= 1e-10 { u.mark_divergence_free(1e-10)? } else { u };
    Ok(State { t, u, rho })
}

pub fn save(path: &std::path::Path, s: &State) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_snapshot(&mut f, s)?;
    f.flush()?;
    Ok(())
}

pub fn load(path: &std::path::Path) -> Result<State> {
    read_snapshot(&mut std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{member_rng, random_scalar, random_vector, SpectrumProfile};

    #[test]
    fn round_trip_and_layout() {
        let g = AnisoGrid::new(8, 16, 1.5, 0.5).unwrap();
        let mut rng = member_rng(1, 1);
        let s = State {
            t: 0.375,
            u: random_vector(g, SpectrumProfile::White, true, &mut rng),
            rho: random_scalar(g, SpectrumProfile::White, &mut rng),
        };
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &s).unwrap();
        assert_eq!(buf.len(), 8 + 4 * 3 + 8 * 3 + 4 + 16 * 4 * g.len());
        assert_eq!(&buf[..8], MAGIC);
        let back = read_snapshot(&mut buf.as_slice()).unwrap();
        assert_eq!(back, s);
        buf[0] = b'X';
        assert!(read_snapshot(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.bin");
        let s = State::zeros(AnisoGrid::unit(8, 8).unwrap());
        save(&p, &s).unwrap();
        assert_eq!(load(&p).unwrap(), s);
    }
}
