//! On-disk container: raw little-endian data plus a text sidecar header.
//!
//! Complex grids are written as interleaved `(re, im)` pairs, coil-major then
//! row-major, to `<name>.bin`; the sidecar `<name>.hdr` holds `key = value`
//! lines in a fixed order:
//!
//! ```text
//! kind = kspace
//! coils = 4
//! height = 128
//! width = 128
//! dtype = cf32
//! layout = coil-major,row-major,interleaved
//! ```
//!
//! `dtype` is `cf32` (32-bit floats, the default for data artifacts) or
//! `cf64` (64-bit, lossless for in-memory values). Masks use a separate
//! layout: one byte per phase-encode column (0 or 1) with a header listing
//! `height`, `width`, `R`, `acs_width`, `kind` and `seed`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;

use crate::acquisition::{MultiCoilKSpace, SensitivitySet};
use crate::error::{Error, Result};
use crate::sampling::{MaskKind, SamplingMask};
use crate::tensor::{ComplexImage, KSpaceGrid, RealImage, Shape};

pub const LAYOUT: &str = "coil-major,row-major,interleaved";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DType {
    #[default]
    Cf32,
    Cf64,
}

impl DType {
    fn bytes_per_sample(self) -> usize {
        match self {
            DType::Cf32 => 8,
            DType::Cf64 => 16,
        }
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DType::Cf32 => "cf32",
            DType::Cf64 => "cf64",
        })
    }
}

impl FromStr for DType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cf32" => Ok(DType::Cf32),
            "cf64" => Ok(DType::Cf64),
            other => Err(Error::Config(format!("unknown dtype `{other}`"))),
        }
    }
}

/// Sidecar metadata of a complex container.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub kind: String,
    pub coils: usize,
    pub shape: Shape,
    pub dtype: DType,
}

impl Header {
    fn render(&self) -> String {
        format!(
            "kind = {}\ncoils = {}\nheight = {}\nwidth = {}\ndtype = {}\nlayout = {}\n",
            self.kind, self.coils, self.shape.height, self.shape.width, self.dtype, LAYOUT
        )
    }
}

/// Sidecar path for a data file: `foo.bin` -> `foo.hdr`.
pub fn header_path(data: &Path) -> PathBuf {
    data.with_extension("hdr")
}

/// Data path for a container stem: `dir/gt` -> `dir/gt.bin`.
pub fn data_path(stem: &Path) -> PathBuf {
    stem.with_extension("bin")
}

/// Parses `key = value` lines, skipping blanks and `#` comments, keeping order.
pub fn parse_key_values(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::format(path, format!("line {}: expected `key = value`", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn lookup<'a>(kv: &'a [(String, String)], key: &str, path: &Path) -> Result<&'a str> {
    kv.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::format(path, format!("missing `{key}`")))
}

fn lookup_parse<T: FromStr>(kv: &[(String, String)], key: &str, path: &Path) -> Result<T> {
    let raw = lookup(kv, key, path)?;
    raw.parse()
        .map_err(|_| Error::format(path, format!("bad value `{raw}` for `{key}`")))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `grids` (each `shape.len()` samples) to `path` and its sidecar.
pub fn write_complex(path: &Path, kind: &str, shape: Shape, dtype: DType, grids: &[&[Complex64]]) -> Result<()> {
    let mut bytes = Vec::with_capacity(grids.len() * shape.len() * dtype.bytes_per_sample());
    for g in grids {
        if g.len() != shape.len() {
            return Err(Error::DataLength {
                expected: shape.len(),
                found: g.len(),
            });
        }
        for v in *g {
            match dtype {
                DType::Cf32 => {
                    bytes.extend_from_slice(&(v.re as f32).to_le_bytes());
                    bytes.extend_from_slice(&(v.im as f32).to_le_bytes());
                }
                DType::Cf64 => {
                    bytes.extend_from_slice(&v.re.to_le_bytes());
                    bytes.extend_from_slice(&v.im.to_le_bytes());
                }
            }
        }
    }
    let header = Header {
        kind: kind.to_string(),
        coils: grids.len(),
        shape,
        dtype,
    };
    write_file(path, &bytes)?;
    write_file(&header_path(path), header.render().as_bytes())
}

pub fn read_header(path: &Path) -> Result<Header> {
    let hpath = header_path(path);
    let kv = parse_key_values(&read_text(&hpath)?, &hpath)?;
    let layout = lookup(&kv, "layout", &hpath)?;
    if layout != LAYOUT {
        return Err(Error::format(&hpath, format!("unsupported layout `{layout}`")));
    }
    Ok(Header {
        kind: lookup(&kv, "kind", &hpath)?.to_string(),
        coils: lookup_parse(&kv, "coils", &hpath)?,
        shape: Shape::new(
            lookup_parse(&kv, "height", &hpath)?,
            lookup_parse(&kv, "width", &hpath)?,
        ),
        dtype: lookup(&kv, "dtype", &hpath)?
            .parse()
            .map_err(|_| Error::format(&hpath, "bad dtype"))?,
    })
}

/// Reads a complex container, returning its header and one buffer per coil.
pub fn read_complex(path: &Path) -> Result<(Header, Vec<Vec<Complex64>>)> {
    let header = read_header(path)?;
    let bytes = read_file(path)?;
    let n = header.shape.len();
    let expected = header.coils * n * header.dtype.bytes_per_sample();
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            format!("expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    let values: Vec<Complex64> = match header.dtype {
        DType::Cf32 => bytes
            .chunks_exact(8)
            .map(|b| {
                Complex64::new(
                    f32::from_le_bytes(b[0..4].try_into().unwrap()) as f64,
                    f32::from_le_bytes(b[4..8].try_into().unwrap()) as f64,
                )
            })
            .collect(),
        DType::Cf64 => bytes
            .chunks_exact(16)
            .map(|b| {
                Complex64::new(
                    f64::from_le_bytes(b[0..8].try_into().unwrap()),
                    f64::from_le_bytes(b[8..16].try_into().unwrap()),
                )
            })
            .collect(),
    };
    let grids = if n == 0 {
        vec![Vec::new(); header.coils]
    } else {
        values.chunks_exact(n).map(<[Complex64]>::to_vec).collect()
    };
    Ok((header, grids))
}

fn expect_kind(header: &Header, path: &Path, kinds: &[&str]) -> Result<()> {
    if !kinds.contains(&header.kind.as_str()) {
        return Err(Error::format(
            path,
            format!("expected kind {kinds:?}, found `{}`", header.kind),
        ));
    }
    Ok(())
}

pub fn write_image(path: &Path, kind: &str, img: &ComplexImage, dtype: DType) -> Result<()> {
    write_complex(path, kind, img.shape(), dtype, &[img.data()])
}

/// Reads a single-coil image container of any image kind.
pub fn read_image(path: &Path) -> Result<ComplexImage> {
    let (header, mut grids) = read_complex(path)?;
    if header.coils != 1 {
        return Err(Error::format(path, format!("expected 1 coil, found {}", header.coils)));
    }
    ComplexImage::from_vec(header.shape.height, header.shape.width, grids.remove(0))
}

pub fn write_real(path: &Path, kind: &str, img: &RealImage, dtype: DType) -> Result<()> {
    write_image(path, kind, &img.to_complex(), dtype)
}

pub fn write_kspace(path: &Path, y: &MultiCoilKSpace, dtype: DType) -> Result<()> {
    let grids: Vec<&[Complex64]> = y.coils().iter().map(|k| k.data()).collect();
    write_complex(path, "kspace", y.shape(), dtype, &grids)
}

pub fn read_kspace(path: &Path) -> Result<MultiCoilKSpace> {
    let (header, grids) = read_complex(path)?;
    expect_kind(&header, path, &["kspace"])?;
    let s = header.shape;
    MultiCoilKSpace::new(
        grids
            .into_iter()
            .map(|g| KSpaceGrid::from_vec(s.height, s.width, g))
            .collect::<Result<_>>()?,
    )
}

pub fn write_sens(path: &Path, sens: &SensitivitySet, dtype: DType) -> Result<()> {
    let grids: Vec<&[Complex64]> = sens.maps().iter().map(|m| m.data()).collect();
    write_complex(path, "sens", sens.shape(), dtype, &grids)
}

/// Loads stored maps as-is; the support is wherever a map is nonzero.
pub fn read_sens(path: &Path) -> Result<SensitivitySet> {
    let (header, grids) = read_complex(path)?;
    expect_kind(&header, path, &["sens"])?;
    let s = header.shape;
    SensitivitySet::raw(
        grids
            .into_iter()
            .map(|g| ComplexImage::from_vec(s.height, s.width, g))
            .collect::<Result<_>>()?,
    )
}

pub fn write_mask(path: &Path, mask: &SamplingMask) -> Result<()> {
    let bytes: Vec<u8> = mask.lines().iter().map(|&s| s as u8).collect();
    let header = format!(
        "height = {}\nwidth = {}\nR = {}\nacs_width = {}\nkind = {}\nseed = {}\n",
        mask.height(),
        mask.width(),
        mask.acceleration(),
        mask.acs_width(),
        mask.kind(),
        mask.seed()
    );
    write_file(path, &bytes)?;
    write_file(&header_path(path), header.as_bytes())
}

pub fn read_mask(path: &Path) -> Result<SamplingMask> {
    let hpath = header_path(path);
    let kv = parse_key_values(&read_text(&hpath)?, &hpath)?;
    let height: usize = lookup_parse(&kv, "height", &hpath)?;
    let width: usize = lookup_parse(&kv, "width", &hpath)?;
    let acceleration: f64 = lookup_parse(&kv, "R", &hpath)?;
    let acs_width: usize = lookup_parse(&kv, "acs_width", &hpath)?;
    let kind: MaskKind = lookup(&kv, "kind", &hpath)?
        .parse()
        .map_err(|_| Error::format(&hpath, "bad mask kind"))?;
    let seed: u64 = lookup_parse(&kv, "seed", &hpath)?;
    let bytes = read_file(path)?;
    if bytes.len() != width {
        return Err(Error::format(
            path,
            format!("expected {width} line flags, found {}", bytes.len()),
        ));
    }
    let lines = bytes
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::format(path, format!("line flag {other} is not 0/1"))),
        })
        .collect::<Result<Vec<_>>>()?;
    SamplingMask::from_lines(height, lines, acs_width, acceleration, kind, seed)
        .map_err(|e| Error::format(path, e.to_string()))
}
