//! MPGF/MPGM binary grid containers.
//!
//! Layout, all little-endian: magic (4 bytes, "MPGF" for functions, "MPGM"
//! for measures), version u32 = 1, ndim u32, extent u64 per axis, cell_width
//! f64, then row-major f64 cell values.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{DiscreteMeasure, GridFunction};

pub const MAGIC_FUNCTION: [u8; 4] = *b"MPGF";
pub const MAGIC_MEASURE: [u8; 4] = *b"MPGM";
pub const VERSION: u32 = 1;

fn write_header(
    w: &mut impl Write,
    magic: [u8; 4],
    shape: &[usize],
    cell_width: f64,
) -> Result<()> {
    w.write_all(&magic)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(shape.len() as u32).to_le_bytes())?;
    for &e in shape {
        w.write_all(&(e as u64).to_le_bytes())?;
    }
    w.write_all(&cell_width.to_le_bytes())?;
    Ok(())
}

fn write_values(w: &mut impl Write, values: &[f64]) -> Result<()> {
    for &v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated grid file: {e}")))?;
    Ok(buf)
}

fn read_header(r: &mut impl Read, magic: [u8; 4]) -> Result<(Vec<usize>, f64)> {
    let got: [u8; 4] = read_exact(r)?;
    if got != magic {
        return Err(Error::Format(format!(
            "bad magic {:02x?}, expected {:02x?}",
            got, magic
        )));
    }
    let version = u32::from_le_bytes(read_exact(r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let ndim = u32::from_le_bytes(read_exact(r)?) as usize;
    if ndim == 0 || ndim > 8 {
        return Err(Error::Format(format!("unsupported ndim {ndim}")));
    }
    let mut shape = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        let e = u64::from_le_bytes(read_exact(r)?);
        shape.push(e as usize);
    }
    let cell_width = f64::from_le_bytes(read_exact(r)?);
    Ok((shape, cell_width))
}

fn read_values(r: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        values.push(f64::from_le_bytes(read_exact(r)?));
    }
    Ok(values)
}

pub fn write_function(w: &mut impl Write, u: &GridFunction) -> Result<()> {
    write_header(w, MAGIC_FUNCTION, u.shape(), u.cell_width())?;
    write_values(w, u.values())
}

pub fn read_function(r: &mut impl Read) -> Result<GridFunction> {
    let (shape, h) = read_header(r, MAGIC_FUNCTION)?;
    let count = shape.iter().product();
    let values = read_values(r, count)?;
    GridFunction::new(shape, h, values)
}

pub fn write_measure(w: &mut impl Write, mu: &DiscreteMeasure) -> Result<()> {
    write_header(w, MAGIC_MEASURE, mu.shape(), mu.cell_width())?;
    write_values(w, mu.masses())
}

pub fn read_measure(r: &mut impl Read) -> Result<DiscreteMeasure> {
    let (shape, h) = read_header(r, MAGIC_MEASURE)?;
    let count = shape.iter().product();
    let masses = read_values(r, count)?;
    DiscreteMeasure::new(shape, h, masses)
}

/// Serialize to an in-memory buffer; used for deterministic-output checks.
pub fn function_to_bytes(u: &GridFunction) -> Vec<u8> {
    let mut buf = Vec::new();
    write_function(&mut buf, u).expect("in-memory write cannot fail");
    buf
}

pub fn measure_to_bytes(mu: &DiscreteMeasure) -> Vec<u8> {
    let mut buf = Vec::new();
    write_measure(&mut buf, mu).expect("in-memory write cannot fail");
    buf
}

/// Write a file atomically: temp file in the target directory, then rename.
pub fn write_file_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = dir.to_path_buf();
    let stem = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    tmp.push(format!(".{stem}.tmp.{}", std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_function(path: &Path) -> Result<GridFunction> {
    let bytes = std::fs::read(path)?;
    read_function(&mut bytes.as_slice())
}

pub fn load_measure(path: &Path) -> Result<DiscreteMeasure> {
    let bytes = std::fs::read(path)?;
    read_measure(&mut bytes.as_slice())
}

pub fn save_function(path: &Path, u: &GridFunction) -> Result<()> {
    write_file_atomic(path, &function_to_bytes(u))
}

pub fn save_measure(path: &Path, mu: &DiscreteMeasure) -> Result<()> {
    write_file_atomic(path, &measure_to_bytes(mu))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn function_roundtrip_and_layout() {
        let u = GridFunction::new(vec![2, 3], 0.5, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let bytes = function_to_bytes(&u);
        assert_eq!(&bytes[0..4], &[0x4D, 0x50, 0x47, 0x46]);
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[20..28].try_into().unwrap()), 3);
        assert_eq!(f64::from_le_bytes(bytes[28..36].try_into().unwrap()), 0.5);
        assert_eq!(bytes.len(), 36 + 6 * 8);
        let back = read_function(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn measure_roundtrip() {
        let mu = DiscreteMeasure::dirac(vec![4], 1.0, &[1]).unwrap();
        let bytes = measure_to_bytes(&mu);
        assert_eq!(&bytes[0..4], b"MPGM");
        let back = read_measure(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, mu);
    }

    #[test]
    fn magic_mismatch_rejected() {
        let u = GridFunction::constant(vec![2], 1.0, 1.0).unwrap();
        let bytes = function_to_bytes(&u);
        assert!(matches!(
            read_measure(&mut bytes.as_slice()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn truncated_rejected() {
        let u = GridFunction::constant(vec![4], 1.0, 2.0).unwrap();
        let bytes = function_to_bytes(&u);
        assert!(read_function(&mut bytes[..bytes.len() - 3].as_ref()).is_err());
    }
}
