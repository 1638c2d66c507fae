use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::harmonic::Fiber;
use crate::rep::RepSpec;

use super::{FourierField, ScalarField};

const MAGIC: &[u8; 4] = b"SFLD";
const VERSION: u16 = 1;

/// Contents of an SFLD file.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldFile {
    Scalar(ScalarField),
    Fourier(FourierField),
}

impl FieldFile {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let (shape, cell, origin, channels, desc, data) = match self {
            FieldFile::Scalar(f) => (f.shape(), f.cell_size(), f.origin(), f.channels(), None, f.data()),
            FieldFile::Fourier(f) => (f.shape(), f.cell_size(), f.origin(), f.stride(), Some(f.fiber()), f.data()),
        };
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[shape.len() as u8])?;
        w.write_all(&(channels as u32).to_le_bytes())?;
        for &s in shape {
            w.write_all(&(s as u32).to_le_bytes())?;
        }
        w.write_all(&cell.to_le_bytes())?;
        for o in origin {
            w.write_all(&o.to_le_bytes())?;
        }
        let desc = desc.map(|f| serde_json::to_vec(&f.rep().to_json())).transpose()?.unwrap_or_default();
        w.write_all(&(desc.len() as u32).to_le_bytes())?;
        w.write_all(&desc)?;
        for v in data {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not an SFLD file".into()));
        }
        let version = u16::from_le_bytes(read_n(&mut r)?);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported SFLD version {version}")));
        }
        let [dim] = read_n::<1>(&mut r)?;
        let dim = dim as usize;
        if !(2..=3).contains(&dim) {
            return Err(Error::Format(format!("bad dimension {dim}")));
        }
        let channels = u32::from_le_bytes(read_n(&mut r)?) as usize;
        let shape: Vec<usize> =
            (0..dim).map(|_| Ok(u32::from_le_bytes(read_n(&mut r)?) as usize)).collect::<Result<_>>()?;
        let cell = f64::from_le_bytes(read_n(&mut r)?);
        let origin: Vec<f64> = (0..dim).map(|_| Ok(f64::from_le_bytes(read_n(&mut r)?))).collect::<Result<_>>()?;
        let desc_len = u32::from_le_bytes(read_n(&mut r)?) as usize;
        let mut desc = vec![0u8; desc_len];
        r.read_exact(&mut desc)?;
        let count = shape
            .iter()
            .product::<usize>()
            .checked_mul(channels)
            .ok_or_else(|| Error::Format("field too large".into()))?;
        let mut raw = vec![0u8; count * 4];
        r.read_exact(&mut raw)?;
        let data: Vec<f64> = raw.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64).collect();
        let scalar = ScalarField::new(&shape, cell, &origin, channels, data)?;
        if desc.is_empty() {
            return Ok(FieldFile::Scalar(scalar));
        }
        let rep = RepSpec::from_json(&serde_json::from_slice(&desc)?)?;
        let fiber = Fiber::from_rep(&rep)
            .ok_or_else(|| Error::Format(format!("fiber descriptor is not a Fourier layout: {}", rep.to_json())))?;
        Ok(FieldFile::Fourier(FourierField::from_scalar(scalar, fiber)?))
    }
}

fn read_n<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn write_field(path: impl AsRef<Path>, field: &FieldFile) -> Result<()> {
    field.write_to(BufWriter::new(File::create(path)?))
}

pub fn read_field(path: impl AsRef<Path>) -> Result<FieldFile> {
    FieldFile::read_from(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_round_trip() {
        let f = ScalarField::new(&[2, 3], 0.25, &[1.0, -1.0], 2, (0..12).map(|i| i as f64 * 0.5).collect()).unwrap();
        let mut buf = Vec::new();
        FieldFile::Scalar(f.clone()).write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"SFLD");
        assert_eq!(FieldFile::read_from(buf.as_slice()).unwrap(), FieldFile::Scalar(f));
    }

    #[test]
    fn fourier_round_trip() {
        let fiber = Fiber::So3 { lmax: 1 };
        let data: Vec<f64> = (0..2 * 2 * 2 * 10).map(|i| i as f64).collect();
        let f = FourierField::new(&[2, 2, 2], 0.01, &[0.0; 3], fiber, 1, data).unwrap();
        let f = FourierField::from_scalar(f.as_scalar(), fiber).unwrap();
        let mut buf = Vec::new();
        FieldFile::Fourier(f.clone()).write_to(&mut buf).unwrap();
        assert_eq!(FieldFile::read_from(buf.as_slice()).unwrap(), FieldFile::Fourier(f));
    }

    #[test]
    fn rejects_garbage() {
        assert!(FieldFile::read_from(&b"NOPE"[..]).is_err());
        assert!(FieldFile::read_from(&b"SF"[..]).is_err());
    }
}
