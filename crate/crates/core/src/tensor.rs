//! Complex 2D grids and the centered unitary 2D Fourier transform.
//!
//! Both [`ComplexImage`] and [`KSpaceGrid`] store samples row-major. The
//! transform pair [`fft2c`] / [`ifft2c`] is normalized by `1/sqrt(H*W)` in
//! both directions and keeps the DC bin at `(H/2, W/2)` (integer division),
//! so `ifft2c` is simultaneously the inverse and the adjoint of `fft2c`.

use std::cell::RefCell;
use std::ops::{Index, IndexMut};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Grid dimensions, `height` rows by `width` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub fn new(height: usize, width: usize) -> Self {
        Self { height, width }
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn check_nonzero(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::InvalidDimension {
                height: self.height,
                width: self.width,
            });
        }
        Ok(())
    }

    pub(crate) fn expect(&self, other: Shape, what: &'static str) -> Result<()> {
        if *self != other {
            return Err(Error::ShapeMismatch {
                what,
                expected: *self,
                found: other,
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.height, self.width)
    }
}

macro_rules! complex_grid {
    ($name:ident) => {
        impl $name {
            pub fn zeros(height: usize, width: usize) -> Self {
                Self::from_fn(height, width, |_, _| Complex64::new(0.0, 0.0))
            }

            pub fn from_vec(height: usize, width: usize, data: Vec<Complex64>) -> Result<Self> {
                let shape = Shape::new(height, width);
                if data.len() != shape.len() {
                    return Err(Error::DataLength {
                        expected: shape.len(),
                        found: data.len(),
                    });
                }
                Ok(Self { shape, data })
            }

            pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
                let mut data = Vec::with_capacity(height * width);
                for r in 0..height {
                    for c in 0..width {
                        data.push(f(r, c));
                    }
                }
                Self {
                    shape: Shape::new(height, width),
                    data,
                }
            }

            pub fn shape(&self) -> Shape {
                self.shape
            }

            pub fn height(&self) -> usize {
                self.shape.height
            }

            pub fn width(&self) -> usize {
                self.shape.width
            }

            pub fn data(&self) -> &[Complex64] {
                &self.data
            }

            pub fn data_mut(&mut self) -> &mut [Complex64] {
                &mut self.data
            }

            pub fn into_data(self) -> Vec<Complex64> {
                self.data
            }

            pub fn is_finite(&self) -> bool {
                self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
            }

            /// Elementwise sum.
            pub fn add(&self, other: &Self) -> Result<Self> {
                self.zip_with(other, |a, b| a + b)
            }

            /// Elementwise difference `self - other`.
            pub fn sub(&self, other: &Self) -> Result<Self> {
                self.zip_with(other, |a, b| a - b)
            }

            /// Hadamard product.
            pub fn mul(&self, other: &Self) -> Result<Self> {
                self.zip_with(other, |a, b| a * b)
            }

            /// `conj(self) * other`, elementwise.
            pub fn conj_mul(&self, other: &Self) -> Result<Self> {
                self.zip_with(other, |a, b| a.conj() * b)
            }

            pub fn scale(&self, factor: Complex64) -> Self {
                self.map(|v| v * factor)
            }

            pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
                Self {
                    shape: self.shape,
                    data: self.data.iter().map(|&v| f(v)).collect(),
                }
            }

            pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
                self.shape.expect(other.shape, stringify!($name))?;
                Ok(Self {
                    shape: self.shape,
                    data: self
                        .data
                        .iter()
                        .zip(&other.data)
                        .map(|(&a, &b)| f(a, b))
                        .collect(),
                })
            }

            pub fn norm_sqr(&self) -> f64 {
                self.data.iter().map(|v| v.norm_sqr()).sum()
            }

            pub fn l2_norm(&self) -> f64 {
                self.norm_sqr().sqrt()
            }

            /// `<self, other> = sum conj(self_i) * other_i`.
            pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
                self.shape.expect(other.shape, stringify!($name))?;
                Ok(self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum())
            }
        }

        impl Index<(usize, usize)> for $name {
            type Output = Complex64;
            fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
                &self.data[r * self.shape.width + c]
            }
        }

        impl IndexMut<(usize, usize)> for $name {
            fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
                &mut self.data[r * self.shape.width + c]
            }
        }
    };
}

/// Image-domain complex samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    shape: Shape,
    data: Vec<Complex64>,
}

/// Centered k-space samples (DC at `(H/2, W/2)`).
#[derive(Debug, Clone, PartialEq)]
pub struct KSpaceGrid {
    shape: Shape,
    data: Vec<Complex64>,
}

complex_grid!(ComplexImage);
complex_grid!(KSpaceGrid);

impl ComplexImage {
    pub fn from_real(height: usize, width: usize, values: &[f64]) -> Result<Self> {
        Self::from_vec(height, width, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn magnitude(&self) -> RealImage {
        RealImage {
            shape: self.shape,
            data: self.data.iter().map(|v| v.norm()).collect(),
        }
    }
}

impl KSpaceGrid {
    /// k-space grids are always stored DC-centered.
    pub fn centered(&self) -> bool {
        true
    }
}

/// Real-valued image, used for magnitudes and metric inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RealImage {
    shape: Shape,
    data: Vec<f64>,
}

impl RealImage {
    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        let shape = Shape::new(height, width);
        if data.len() != shape.len() {
            return Err(Error::DataLength {
                expected: shape.len(),
                found: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.shape.width + c]
    }

    pub fn to_complex(&self) -> ComplexImage {
        ComplexImage {
            shape: self.shape,
            data: self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(height: usize, width: usize, inverse: bool) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            (p.plan_fft_inverse(height), p.plan_fft_inverse(width))
        } else {
            (p.plan_fft_forward(height), p.plan_fft_forward(width))
        }
    })
}

/// Centered, unitary 2D DFT of `data` (shape `shape`), returning a new buffer.
///
/// `out = fftshift(fft2(ifftshift(in))) / sqrt(H*W)`; the inverse direction
/// uses the conjugate kernel with the same normalization.
fn centered_transform(shape: Shape, data: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let (h, w) = (shape.height, shape.width);
    let (col_fft, row_fft) = plans(h, w, inverse);
    let (ch, cw) = (h / 2, w / 2);

    // ifftshift on the way in: buf[m] = in[(m + c) mod n].
    let mut buf = vec![Complex64::new(0.0, 0.0); h * w];
    for r in 0..h {
        let src_r = (r + ch) % h;
        for c in 0..w {
            buf[r * w + c] = data[src_r * w + (c + cw) % w];
        }
    }

    row_fft.process(&mut buf);

    let mut col = vec![Complex64::new(0.0, 0.0); h];
    for c in 0..w {
        for r in 0..h {
            col[r] = buf[r * w + c];
        }
        col_fft.process(&mut col);
        for r in 0..h {
            buf[r * w + c] = col[r];
        }
    }

    // fftshift on the way out: out[(m + c) mod n] = buf[m].
    let norm = 1.0 / (shape.len() as f64).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); h * w];
    for r in 0..h {
        let dst_r = (r + ch) % h;
        for c in 0..w {
            out[dst_r * w + (c + cw) % w] = buf[r * w + c] * norm;
        }
    }
    out
}

/// Centered unitary forward transform.
pub fn fft2c(img: &ComplexImage) -> Result<KSpaceGrid> {
    img.shape.check_nonzero()?;
    Ok(KSpaceGrid {
        shape: img.shape,
        data: centered_transform(img.shape, &img.data, false),
    })
}

/// Centered unitary inverse transform; also the adjoint of [`fft2c`].
pub fn ifft2c(ksp: &KSpaceGrid) -> Result<ComplexImage> {
    ksp.shape.check_nonzero()?;
    Ok(ComplexImage {
        shape: ksp.shape,
        data: centered_transform(ksp.shape, &ksp.data, true),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_image, rel_err};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_image_maps_to_center_bin() {
        let img = ComplexImage::from_fn(4, 4, |_, _| c(1.0, 0.0));
        let k = fft2c(&img).unwrap();
        for r in 0..4 {
            for cc in 0..4 {
                let v = k[(r, cc)];
                if (r, cc) == (2, 2) {
                    assert!((v - c(4.0, 0.0)).norm() < 1e-12);
                } else {
                    assert!(v.norm() < 1e-12, "bin ({r},{cc}) = {v}");
                }
            }
        }
    }

    #[test]
    fn center_delta_inverts_to_ones() {
        for (h, w) in [(4, 4), (5, 7), (6, 3)] {
            let mut k = KSpaceGrid::zeros(h, w);
            k[(h / 2, w / 2)] = c(((h * w) as f64).sqrt(), 0.0);
            let img = ifft2c(&k).unwrap();
            for v in img.data() {
                assert!((v - c(1.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_dimension_is_rejected() {
        let img = ComplexImage::zeros(0, 4);
        assert!(matches!(fft2c(&img), Err(Error::InvalidDimension { .. })));
        let k = KSpaceGrid::zeros(3, 0);
        assert!(matches!(ifft2c(&k), Err(Error::InvalidDimension { .. })));
    }

    #[test]
    fn round_trip_and_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_image(&mut rng, 16, 16);
        let k = fft2c(&x).unwrap();
        assert!((k.l2_norm() - x.l2_norm()).abs() <= 1e-12 * x.l2_norm());
        let back = ifft2c(&k).unwrap();
        assert!(rel_err(back.data(), x.data()) <= 1e-12);
    }

    #[test]
    fn elementwise_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_image(&mut rng, 8, 8);
        assert_eq!(x.scale(c(0.0, 0.0)).l2_norm(), 0.0);
        assert_eq!(ComplexImage::zeros(8, 8).l2_norm(), 0.0);
        let ip = x.inner_product(&x).unwrap();
        let n2 = x.l2_norm().powi(2);
        assert!((ip.re - n2).abs() <= 1e-12 * n2 && ip.im.abs() <= 1e-12 * n2);

        let y = random_image(&mut rng, 8, 8);
        let xy = x.inner_product(&y).unwrap();
        let yx = y.inner_product(&x).unwrap();
        assert!((xy - yx.conj()).norm() <= 1e-12 * xy.norm());
        let cm = x.conj_mul(&y).unwrap();
        let sum: Complex64 = cm.data().iter().sum();
        assert!((sum - xy).norm() <= 1e-12 * xy.norm());
        let d = x.add(&y).unwrap().sub(&y).unwrap();
        assert!(rel_err(d.data(), x.data()) < 1e-14);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let a = ComplexImage::zeros(4, 4);
        let b = ComplexImage::zeros(4, 5);
        assert!(matches!(a.add(&b), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(a.inner_product(&b), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(
            ComplexImage::from_vec(2, 2, vec![c(0.0, 0.0); 3]),
            Err(Error::DataLength { .. })
        ));
    }
}
