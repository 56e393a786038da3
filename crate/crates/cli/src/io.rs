//! Binary field and density files.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! magic      4 bytes   "CSF1" (velocity field) or "CSD1" (scalar density)
//! n          u32
//! box_length f64
//! origin     3 x f64
//! n_time     u32
//! t_end      f64
//! has_p      u8        always 0 for densities
//! steady     u8
//! payload    f64 samples in (t, z, y, x, component) order,
//!            then the pressure block (t, z, y, x) when has_p = 1
//! ```

use std::fs;
use std::path::Path;

use cascade_core::{Grid3, ScalarDensity, TimeAxis, VectorField3};

pub const FIELD_MAGIC: &[u8; 4] = b"CSF1";
pub const DENSITY_MAGIC: &[u8; 4] = b"CSD1";
pub const HEADER_LEN: usize = 4 + 4 + 8 + 24 + 4 + 8 + 1 + 1;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic {0:?}")]
    Magic([u8; 4]),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("payload shorter than header claims ({got} of {want} bytes)")]
    Truncated { got: usize, want: usize },
    #[error("{0} trailing bytes after the payload")]
    Trailing(usize),
    #[error(transparent)]
    Invalid(#[from] cascade_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

struct Header {
    magic: [u8; 4],
    grid: Grid3,
    times: TimeAxis,
    has_pressure: bool,
}

fn put_header(out: &mut Vec<u8>, magic: &[u8; 4], grid: &Grid3, times: &TimeAxis, has_pressure: bool) {
    out.extend_from_slice(magic);
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    out.extend_from_slice(&grid.box_length().to_le_bytes());
    for o in grid.origin() {
        out.extend_from_slice(&o.to_le_bytes());
    }
    out.extend_from_slice(&(times.n_samples() as u32).to_le_bytes());
    out.extend_from_slice(&times.t_end().to_le_bytes());
    out.push(has_pressure as u8);
    out.push(times.is_steady() as u8);
}

fn put_samples(out: &mut Vec<u8>, values: &[f64]) {
    out.reserve(8 * values.len());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], FormatError> {
        let end = self.pos + N;
        if end > self.buf.len() {
            return Err(FormatError::Header(format!("file ends inside the header ({} bytes)", self.buf.len())));
        }
        let mut a = [0u8; N];
        a.copy_from_slice(&self.buf[self.pos..end]);
        self.pos = end;
        Ok(a)
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take::<1>()?[0])
    }
}

fn read_header(r: &mut Reader) -> Result<Header, FormatError> {
    let magic = r.take::<4>()?;
    if &magic != FIELD_MAGIC && &magic != DENSITY_MAGIC {
        return Err(FormatError::Magic(magic));
    }
    let n = r.u32()? as usize;
    let box_length = r.f64()?;
    let origin = [r.f64()?, r.f64()?, r.f64()?];
    let n_time = r.u32()? as usize;
    let t_end = r.f64()?;
    let has_pressure = match r.u8()? {
        0 => false,
        1 => true,
        b => return Err(FormatError::Header(format!("has_pressure flag {b}"))),
    };
    let steady = match r.u8()? {
        0 => false,
        1 => true,
        b => return Err(FormatError::Header(format!("steady flag {b}"))),
    };
    if n == 0 {
        return Err(FormatError::Header("n = 0".into()));
    }
    if steady != (n_time == 1) {
        return Err(FormatError::Header(format!("steady flag {steady} with n_time = {n_time}")));
    }
    let grid = Grid3::with_origin(n, box_length, origin)?;
    let times = TimeAxis::new(t_end, n_time)?;
    Ok(Header { magic, grid, times, has_pressure })
}

fn read_samples(r: &mut Reader, count: usize) -> Result<Vec<f64>, FormatError> {
    let want = HEADER_LEN + 8 * count;
    if r.buf.len() < want {
        return Err(FormatError::Truncated { got: r.buf.len(), want });
    }
    let out = r.buf[r.pos..want].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    r.pos = want;
    Ok(out)
}

pub fn field_to_bytes(field: &VectorField3) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    put_header(&mut out, FIELD_MAGIC, field.grid(), field.times(), field.pressure().is_some());
    put_samples(&mut out, field.velocity());
    if let Some(p) = field.pressure() {
        put_samples(&mut out, p);
    }
    out
}

pub fn field_from_bytes(buf: &[u8]) -> Result<VectorField3, FormatError> {
    let mut r = Reader { buf, pos: 0 };
    let h = read_header(&mut r)?;
    if &h.magic != FIELD_MAGIC {
        return Err(FormatError::Magic(h.magic));
    }
    let m = h.grid.len() * h.times.n_samples();
    let total = if h.has_pressure { 4 * m } else { 3 * m };
    let mut all = read_samples(&mut r, total)?;
    if buf.len() > r.pos {
        return Err(FormatError::Trailing(buf.len() - r.pos));
    }
    let p = h.has_pressure.then(|| all.split_off(3 * m));
    Ok(VectorField3::new(h.grid, h.times, all, p)?)
}

pub fn density_to_bytes(d: &ScalarDensity) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    put_header(&mut out, DENSITY_MAGIC, d.grid(), d.times(), false);
    put_samples(&mut out, d.values());
    out
}

pub fn density_from_bytes(buf: &[u8]) -> Result<ScalarDensity, FormatError> {
    let mut r = Reader { buf, pos: 0 };
    let h = read_header(&mut r)?;
    if &h.magic != DENSITY_MAGIC {
        return Err(FormatError::Magic(h.magic));
    }
    if h.has_pressure {
        return Err(FormatError::Header("density file with a pressure block".into()));
    }
    let values = read_samples(&mut r, h.grid.len() * h.times.n_samples())?;
    if buf.len() > r.pos {
        return Err(FormatError::Trailing(buf.len() - r.pos));
    }
    Ok(ScalarDensity::new(h.grid, h.times, values)?)
}

pub fn write_field(field: &VectorField3, path: &Path) -> Result<(), FormatError> {
    Ok(fs::write(path, field_to_bytes(field))?)
}

pub fn read_field(path: &Path) -> Result<VectorField3, FormatError> {
    field_from_bytes(&fs::read(path)?)
}

pub fn write_density(d: &ScalarDensity, path: &Path) -> Result<(), FormatError> {
    Ok(fs::write(path, density_to_bytes(d))?)
}

pub fn read_density(path: &Path) -> Result<ScalarDensity, FormatError> {
    density_from_bytes(&fs::read(path)?)
}

/// Reads the magic of a file without loading the payload.
pub fn sniff(path: &Path) -> Result<[u8; 4], FormatError> {
    use std::io::Read;
    let mut m = [0u8; 4];
    fs::File::open(path)?.read_exact(&mut m)?;
    Ok(m)
}
