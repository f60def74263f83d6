//! Multi-coil acquisition model `y_l = U F S_l x + n_l`.
//!
//! Measured data are held on the full grid with unsampled positions set to
//! zero, i.e. what is stored is `U^H y_l`. Noise is only ever added on
//! sampled positions.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::sampling::SamplingMask;
use crate::tensor::{fft2c, ifft2c, ComplexImage, KSpaceGrid, RealImage, Shape};

/// Pixels whose coil RSS falls below this fraction of the peak RSS are
/// outside the sensitivity support.
pub const SUPPORT_THRESHOLD: f64 = 1e-3;

/// Per-coil k-space data sharing one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiCoilKSpace {
    coils: Vec<KSpaceGrid>,
}

impl MultiCoilKSpace {
    pub fn new(coils: Vec<KSpaceGrid>) -> Result<Self> {
        let first = coils
            .first()
            .ok_or_else(|| Error::Config("multi-coil data needs at least one coil".into()))?
            .shape();
        for c in &coils[1..] {
            first.expect(c.shape(), "coil k-space")?;
        }
        Ok(Self { coils })
    }

    pub fn num_coils(&self) -> usize {
        self.coils.len()
    }

    pub fn shape(&self) -> Shape {
        self.coils[0].shape()
    }

    pub fn coils(&self) -> &[KSpaceGrid] {
        &self.coils
    }

    pub fn coil(&self, l: usize) -> &KSpaceGrid {
        &self.coils[l]
    }

    pub fn into_coils(self) -> Vec<KSpaceGrid> {
        self.coils
    }

    pub fn l2_norm(&self) -> f64 {
        self.coils.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            coils: self.coils.iter().map(|c| c.scale(factor)).collect(),
        }
    }

    pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
        if self.num_coils() != other.num_coils() {
            return Err(Error::Config(format!(
                "coil count mismatch: {} vs {}",
                self.num_coils(),
                other.num_coils()
            )));
        }
        self.coils
            .iter()
            .zip(&other.coils)
            .map(|(a, b)| a.inner_product(b))
            .sum()
    }
}

/// Coil sensitivity maps `{S_l}` with their support region.
///
/// Sets built with [`SensitivitySet::normalized`] satisfy
/// `sum_l |S_l|^2 = 1` on the support and are exactly zero outside it.
/// [`SensitivitySet::raw`] keeps maps as given, for operator work with
/// arbitrary sensitivities.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivitySet {
    maps: Vec<ComplexImage>,
    support: Vec<bool>,
    normalized: bool,
}

fn check_coils(maps: &[ComplexImage]) -> Result<Shape> {
    let shape = maps
        .first()
        .ok_or_else(|| Error::Config("sensitivity set needs at least one coil".into()))?
        .shape();
    for m in &maps[1..] {
        shape.expect(m.shape(), "sensitivity map")?;
    }
    Ok(shape)
}

impl SensitivitySet {
    /// Normalizes `maps` by their root-sum-of-squares.
    ///
    /// The support is where RSS exceeds [`SUPPORT_THRESHOLD`] times its
    /// peak; maps are zeroed elsewhere.
    pub fn normalized(maps: Vec<ComplexImage>) -> Result<Self> {
        let shape = check_coils(&maps)?;
        let rss = rss_combine(&maps)?;
        let peak = rss.data().iter().cloned().fold(0.0, f64::max);
        if peak <= 0.0 || !peak.is_finite() {
            return Err(Error::Estimation("sensitivity maps are identically zero".into()));
        }
        let support: Vec<bool> = rss.data().iter().map(|&v| v > SUPPORT_THRESHOLD * peak).collect();
        let maps = maps
            .into_iter()
            .map(|m| {
                let data = m
                    .data()
                    .iter()
                    .zip(rss.data())
                    .zip(&support)
                    .map(|((&v, &r), &inside)| if inside { v / r } else { Complex64::new(0.0, 0.0) })
                    .collect();
                ComplexImage::from_vec(shape.height, shape.width, data)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            maps,
            support,
            normalized: true,
        })
    }

    /// Maps used verbatim; the support is wherever any coil is nonzero.
    pub fn raw(maps: Vec<ComplexImage>) -> Result<Self> {
        let shape = check_coils(&maps)?;
        let support = (0..shape.len())
            .map(|i| maps.iter().any(|m| m.data()[i] != Complex64::new(0.0, 0.0)))
            .collect();
        Ok(Self {
            maps,
            support,
            normalized: false,
        })
    }

    /// A single coil of ones: `S = I`.
    pub fn identity(height: usize, width: usize) -> Self {
        Self {
            maps: vec![ComplexImage::from_fn(height, width, |_, _| Complex64::new(1.0, 0.0))],
            support: vec![true; height * width],
            normalized: true,
        }
    }

    pub fn num_coils(&self) -> usize {
        self.maps.len()
    }

    pub fn shape(&self) -> Shape {
        self.maps[0].shape()
    }

    pub fn maps(&self) -> &[ComplexImage] {
        &self.maps
    }

    pub fn map(&self, l: usize) -> &ComplexImage {
        &self.maps[l]
    }

    pub fn support(&self) -> &[bool] {
        &self.support
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Per-pixel `sum_l |S_l|^2`.
    pub fn energy(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.shape().len()];
        for m in &self.maps {
            for (o, v) in out.iter_mut().zip(m.data()) {
                *o += v.norm_sqr();
            }
        }
        out
    }

    /// `S_l x`.
    pub fn apply(&self, l: usize, x: &ComplexImage) -> Result<ComplexImage> {
        self.maps[l].mul(x)
    }

    /// `sum_l S_l^H m_l`.
    pub fn combine(&self, images: &[ComplexImage]) -> Result<ComplexImage> {
        if images.len() != self.maps.len() {
            return Err(Error::Config(format!(
                "expected {} coil images, got {}",
                self.maps.len(),
                images.len()
            )));
        }
        let shape = self.shape();
        let mut acc = ComplexImage::zeros(shape.height, shape.width);
        for (s, m) in self.maps.iter().zip(images) {
            shape.expect(m.shape(), "coil image")?;
            for ((a, sv), mv) in acc.data_mut().iter_mut().zip(s.data()).zip(m.data()) {
                *a += sv.conj() * mv;
            }
        }
        Ok(acc)
    }

    /// Zeroes `img` outside the support.
    pub fn restrict(&self, img: &ComplexImage) -> Result<ComplexImage> {
        self.shape().expect(img.shape(), "support restriction")?;
        let data = img
            .data()
            .iter()
            .zip(&self.support)
            .map(|(&v, &s)| if s { v } else { Complex64::new(0.0, 0.0) })
            .collect();
        ComplexImage::from_vec(img.height(), img.width(), data)
    }
}

fn check_operands(shape: Shape, sens: &SensitivitySet, mask: &SamplingMask) -> Result<()> {
    sens.shape().expect(shape, "image vs sensitivities")?;
    sens.shape().expect(mask.shape(), "sensitivities vs mask")
}

/// Noiseless per-coil spectra `U^H U F S_l x`.
pub fn forward_noiseless(x: &ComplexImage, sens: &SensitivitySet, mask: &SamplingMask) -> Result<MultiCoilKSpace> {
    check_operands(x.shape(), sens, mask)?;
    let coils = (0..sens.num_coils())
        .map(|l| {
            let mut k = fft2c(&sens.apply(l, x)?)?;
            mask.apply_in_place(&mut k)?;
            Ok(k)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiCoilKSpace::new(coils)
}

/// Simulated measurement: masked spectra plus i.i.d. complex Gaussian noise
/// (std `noise_sigma` per real component) on sampled positions.
pub fn forward(
    x: &ComplexImage,
    sens: &SensitivitySet,
    mask: &SamplingMask,
    noise_sigma: f64,
    seed: u64,
) -> Result<MultiCoilKSpace> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::Config(format!(
            "noise sigma must be finite and >= 0, got {noise_sigma}"
        )));
    }
    let clean = forward_noiseless(x, sens, mask)?;
    if noise_sigma == 0.0 {
        return Ok(clean);
    }
    let normal = Normal::new(0.0, noise_sigma).expect("valid sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = mask.width();
    let coils = clean
        .into_coils()
        .into_iter()
        .map(|mut k| {
            for (i, v) in k.data_mut().iter_mut().enumerate() {
                if mask.lines()[i % w] {
                    *v += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
                }
            }
            k
        })
        .collect();
    MultiCoilKSpace::new(coils)
}

/// Adjoint of [`forward_noiseless`]: `sum_l S_l^H F^H U^H U y_l`.
pub fn adjoint(y: &MultiCoilKSpace, sens: &SensitivitySet, mask: &SamplingMask) -> Result<ComplexImage> {
    check_operands(y.shape(), sens, mask)?;
    let images = y
        .coils()
        .iter()
        .map(|k| ifft2c(&mask.apply(k)?))
        .collect::<Result<Vec<_>>>()?;
    sens.combine(&images)
}

/// Coil-combined zero-filled image `x^(0) = sum_l S_l^H F^H y_l`.
pub fn zero_filled(y: &MultiCoilKSpace, sens: &SensitivitySet) -> Result<ComplexImage> {
    sens.shape().expect(y.shape(), "k-space vs sensitivities")?;
    let images = y.coils().iter().map(ifft2c).collect::<Result<Vec<_>>>()?;
    sens.combine(&images)
}

/// Per-coil inverse transforms of the stored data.
pub fn coil_images(y: &MultiCoilKSpace) -> Result<Vec<ComplexImage>> {
    y.coils().iter().map(ifft2c).collect()
}

/// Root-sum-of-squares combination `sqrt(sum_l |img_l|^2)`.
pub fn rss_combine(images: &[ComplexImage]) -> Result<RealImage> {
    let shape = check_coils(images)?;
    let mut acc = vec![0.0; shape.len()];
    for img in images {
        for (a, v) in acc.iter_mut().zip(img.data()) {
            *a += v.norm_sqr();
        }
    }
    RealImage::from_vec(shape.height, shape.width, acc.into_iter().map(f64::sqrt).collect())
}
