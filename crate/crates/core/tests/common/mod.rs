//! Dense reference operators shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use pcsmri::metrics::{SSIM_K1, SSIM_K2};
use pcsmri::{ComplexImage, RealImage, SensitivitySet};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Matrix = Vec<Vec<Complex64>>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

pub fn random_image(rng: &mut ChaCha8Rng, h: usize, w: usize) -> ComplexImage {
    ComplexImage::from_vec(h, w, random_vec(rng, h * w)).unwrap()
}

/// Unnormalized random maps with no zero pixels.
pub fn random_sens(rng: &mut ChaCha8Rng, h: usize, w: usize, coils: usize) -> SensitivitySet {
    let maps = (0..coils)
        .map(|_| random_image(rng, h, w).map(|v| v + c(0.1, 0.0)))
        .collect();
    SensitivitySet::raw(maps).unwrap()
}

/// 1D centered unitary DFT: `F[k][n] = exp(-2 pi i (k-h)(n-h)/N) / sqrt(N)`
/// with `h = floor(N/2)`.
pub fn centered_dft(n: usize) -> Matrix {
    let h = (n / 2) as f64;
    let s = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            (0..n)
                .map(|m| {
                    let phase = -2.0 * PI * (k as f64 - h) * (m as f64 - h) / n as f64;
                    Complex64::from_polar(s, phase)
                })
                .collect()
        })
        .collect()
}

/// 2D transform on row-major vectors: the Kronecker product of the 1D ones.
pub fn centered_dft2(h: usize, w: usize) -> Matrix {
    let (fh, fw) = (centered_dft(h), centered_dft(w));
    let n = h * w;
    let mut out = vec![vec![c(0.0, 0.0); n]; n];
    for k1 in 0..h {
        for k2 in 0..w {
            for r in 0..h {
                for col in 0..w {
                    out[k1 * w + k2][r * w + col] = fh[k1][r] * fw[k2][col];
                }
            }
        }
    }
    out
}

pub fn adjoint(a: &Matrix) -> Matrix {
    let (rows, cols) = (a.len(), a[0].len());
    (0..cols).map(|j| (0..rows).map(|i| a[i][j].conj()).collect()).collect()
}

pub fn matvec(a: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![c(0.0, 0.0); m]; n];
    for i in 0..n {
        for l in 0..k {
            let v = a[i][l];
            for j in 0..m {
                out[i][j] += v * b[l][j];
            }
        }
    }
    out
}

pub fn diag(d: &[Complex64]) -> Matrix {
    let n = d.len();
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { d[i] } else { c(0.0, 0.0) }).collect())
        .collect()
}

/// Gaussian elimination with partial pivoting.
pub fn solve(mut a: Matrix, mut b: Vec<Complex64>) -> Vec<Complex64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        assert!(p.norm() > 1e-300, "singular system");
        for row in col + 1..n {
            let f = a[row][col] / p;
            if f == c(0.0, 0.0) {
                continue;
            }
            for j in col..n {
                let v = a[col][j];
                a[row][j] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![c(0.0, 0.0); n];
    for i in (0..n).rev() {
        let s: Complex64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

pub fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Sampling diagonal `U^H U` for column flags on a `h x w` grid.
pub fn sampling_diag(lines: &[bool], h: usize) -> Vec<Complex64> {
    let w = lines.len();
    (0..h * w)
        .map(|i| if lines[i % w] { c(1.0, 0.0) } else { c(0.0, 0.0) })
        .collect()
}

/// SSIM with explicit 2D Gaussian weights evaluated per window.
pub fn ssim_definitional(x: &RealImage, y: &RealImage, region: Option<&[bool]>) -> f64 {
    let (h, w) = (x.height(), x.width());
    let size = 11usize;
    let half = 5isize;
    let sigma = 1.5f64;
    let mut weights = vec![0.0; size * size];
    for a in 0..size {
        for b in 0..size {
            let (dy, dx) = (a as f64 - half as f64, b as f64 - half as f64);
            weights[a * size + b] = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|v| *v /= total);

    let sel = |i: usize| region.map_or(true, |r| r[i]);
    let vals: Vec<f64> = (0..h * w).filter(|&i| sel(i)).map(|i| y.data()[i]).collect();
    let range = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
    let c1 = (SSIM_K1 * range).powi(2);
    let c2 = (SSIM_K2 * range).powi(2);

    let mut sum = 0.0;
    let mut count = 0.0;
    for r in 5..h - 5 {
        for c in 5..w - 5 {
            if !sel(r * w + c) {
                continue;
            }
            let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for a in 0..size {
                for b in 0..size {
                    let i = (r + a - 5) * w + (c + b - 5);
                    let g = weights[a * size + b];
                    mx += g * x.data()[i];
                    my += g * y.data()[i];
                }
            }
            for a in 0..size {
                for b in 0..size {
                    let i = (r + a - 5) * w + (c + b - 5);
                    let g = weights[a * size + b];
                    let (dx, dy) = (x.data()[i] - mx, y.data()[i] - my);
                    sxx += g * dx * dx;
                    syy += g * dy * dy;
                    sxy += g * dx * dy;
                }
            }
            sum += ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
            count += 1.0;
        }
    }
    sum / count
}
