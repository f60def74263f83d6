//! Synthetic ground truth: phantoms, smooth coil profiles and full
//! simulated acquisitions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acquisition::{forward, MultiCoilKSpace, SensitivitySet};
use crate::error::{Error, Result};
use crate::sampling::{MaskProtocol, Organ, SamplingMask};
use crate::tensor::ComplexImage;

pub const MIN_PHANTOM_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    SheppLogan,
    ResolutionBars,
    SmoothBlobs,
}

impl PhantomKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhantomKind::SheppLogan => "shepp_logan",
            PhantomKind::ResolutionBars => "resolution_bars",
            PhantomKind::SmoothBlobs => "smooth_blobs",
        }
    }
}

impl fmt::Display for PhantomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shepp_logan" => Ok(PhantomKind::SheppLogan),
            "resolution_bars" => Ok(PhantomKind::ResolutionBars),
            "smooth_blobs" => Ok(PhantomKind::SmoothBlobs),
            other => Err(Error::Config(format!("unknown phantom kind `{other}`"))),
        }
    }
}

/// Normalized coordinates in `[-1, 1]`, `y` pointing up.
fn coords(r: usize, c: usize, h: usize, w: usize) -> (f64, f64) {
    (
        2.0 * (c as f64 + 0.5) / w as f64 - 1.0,
        1.0 - 2.0 * (r as f64 + 0.5) / h as f64,
    )
}

// Modified Shepp-Logan: (intensity, semi-axis a, semi-axis b, x0, y0, angle in degrees).
const SHEPP_LOGAN: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
    [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
    [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
    [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
    [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
    [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
    [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
    [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
    [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
];

fn shepp_logan(h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let (x, y) = coords(r, c, h, w);
            let mut v = 0.0;
            for [amp, a, b, x0, y0, deg] in SHEPP_LOGAN {
                let (s, co) = deg.to_radians().sin_cos();
                let (dx, dy) = (x - x0, y - y0);
                let u = dx * co + dy * s;
                let t = -dx * s + dy * co;
                if (u / a).powi(2) + (t / b).powi(2) <= 1.0 {
                    v += amp;
                }
            }
            out[r * w + c] = v.clamp(0.0, 1.0);
        }
    }
    out
}

/// One group of three equal-width vertical bars.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BarGroup {
    pub bar_width: usize,
    /// First column of each bar; bars are separated by `bar_width` columns.
    pub starts: [usize; 3],
}

/// Bar groups of widths 1, 2, 3, ... placed left to right from column 2
/// while they fit; bars span rows `[h/4, 3h/4)`.
pub fn bar_layout(width: usize) -> Vec<BarGroup> {
    let mut groups = Vec::new();
    let mut cursor = 2;
    for bw in 1.. {
        if cursor + 5 * bw + 2 > width {
            break;
        }
        groups.push(BarGroup {
            bar_width: bw,
            starts: [cursor, cursor + 2 * bw, cursor + 4 * bw],
        });
        cursor += 5 * bw + bw.max(2);
    }
    groups
}

fn resolution_bars(h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for g in bar_layout(w) {
        for start in g.starts {
            for r in h / 4..3 * h / 4 {
                for c in start..start + g.bar_width {
                    out[r * w + c] = 1.0;
                }
            }
        }
    }
    out
}

fn smooth_blobs(h: usize, w: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blobs: Vec<[f64; 4]> = (0..6)
        .map(|_| {
            [
                rng.gen_range(-0.6..0.6),
                rng.gen_range(-0.6..0.6),
                rng.gen_range(0.1..0.3),
                rng.gen_range(0.3..1.0),
            ]
        })
        .collect();
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let (x, y) = coords(r, c, h, w);
            out[r * w + c] = blobs
                .iter()
                .map(|&[cx, cy, s, a]| a * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * s * s)).exp())
                .sum();
        }
    }
    let peak = out.iter().cloned().fold(0.0, f64::max);
    out.iter_mut().for_each(|v| *v /= peak);
    out
}

/// Real phantom in `[0, 1]` as a complex image, with an optional smooth
/// linear phase ramp.
pub fn make_phantom(
    height: usize,
    width: usize,
    kind: PhantomKind,
    phase_ramp: bool,
    seed: u64,
) -> Result<ComplexImage> {
    if height < MIN_PHANTOM_SIZE || width < MIN_PHANTOM_SIZE {
        return Err(Error::Config(format!(
            "phantoms need at least {MIN_PHANTOM_SIZE}x{MIN_PHANTOM_SIZE} pixels, got {height}x{width}"
        )));
    }
    let values = match kind {
        PhantomKind::SheppLogan => shepp_logan(height, width),
        PhantomKind::ResolutionBars => resolution_bars(height, width),
        PhantomKind::SmoothBlobs => smooth_blobs(height, width, seed),
    };
    Ok(ComplexImage::from_fn(height, width, |r, c| {
        let v = values[r * width + c];
        if phase_ramp {
            let (x, y) = coords(r, c, height, width);
            Complex64::from_polar(v, PI * (0.5 * x + 0.25 * y))
        } else {
            Complex64::new(v, 0.0)
        }
    }))
}

/// Smooth complex receive profiles: Gaussian bumps centered at equiangular
/// positions around the field of view, each with its own linear phase.
///
/// A single coil gets a broad, nearly constant profile.
pub fn make_coil_profiles(height: usize, width: usize, n_coils: usize, seed: u64) -> Result<Vec<ComplexImage>> {
    if n_coils == 0 {
        return Err(Error::Config("at least one coil is required".into()));
    }
    if height == 0 || width == 0 {
        return Err(Error::InvalidDimension { height, width });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profiles = (0..n_coils)
        .map(|l| {
            let angle = 2.0 * PI * l as f64 / n_coils as f64 + rng.gen_range(-0.1..0.1);
            let phase0 = rng.gen_range(-PI..PI);
            let (cx, cy) = (0.7 * angle.cos(), 0.7 * angle.sin());
            let (base, sigma) = if n_coils == 1 { (1.0, 1.0) } else { (0.05, 0.6) };
            ComplexImage::from_fn(height, width, |r, c| {
                let (x, y) = coords(r, c, height, width);
                let d2 = (x - cx).powi(2) + (y - cy).powi(2);
                let mag = base + (-d2 / (2.0 * sigma * sigma)).exp();
                let phase = phase0 + 0.25 * PI * (x * angle.cos() + y * angle.sin());
                Complex64::from_polar(mag, phase)
            })
        })
        .collect();
    Ok(profiles)
}

/// Everything needed to generate one simulated acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseSpec {
    pub phantom: PhantomKind,
    pub height: usize,
    pub width: usize,
    pub phase_ramp: bool,
    pub coils: usize,
    pub mask: MaskProtocol,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl CaseSpec {
    /// Protocol preset for `organ` on a square `size` grid with 4 coils and
    /// no noise (see [`Organ::protocol_for`] for the ACS width). Brain uses Shepp-Logan, knee resolution bars and cardiac
    /// smooth blobs.
    pub fn preset(organ: Organ, size: usize, seed: u64) -> Self {
        let phantom = match organ {
            Organ::Brain => PhantomKind::SheppLogan,
            Organ::Knee => PhantomKind::ResolutionBars,
            Organ::Cardiac => PhantomKind::SmoothBlobs,
        };
        Self {
            phantom,
            height: size,
            width: size,
            phase_ramp: false,
            coils: 4,
            mask: organ.protocol_for(size),
            noise_sigma: 0.0,
            seed,
        }
    }

    // Independent streams for each random component.
    fn sub_seed(&self, stream: u64) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stream)
    }
}

/// A simulated acquisition and its ground truth.
#[derive(Debug, Clone)]
pub struct Case {
    pub gt: ComplexImage,
    pub sens: SensitivitySet,
    pub mask: SamplingMask,
    pub kspace: MultiCoilKSpace,
}

pub fn simulate_case(spec: &CaseSpec) -> Result<Case> {
    let gt = make_phantom(spec.height, spec.width, spec.phantom, spec.phase_ramp, spec.sub_seed(0))?;
    let profiles = make_coil_profiles(spec.height, spec.width, spec.coils, spec.sub_seed(1))?;
    let sens = SensitivitySet::normalized(profiles)?;
    let mask = spec.mask.build(spec.height, spec.width, spec.sub_seed(2))?;
    let kspace = forward(&gt, &sens, &mask, spec.noise_sigma, spec.sub_seed(3))?;
    Ok(Case { gt, sens, mask, kspace })
}
