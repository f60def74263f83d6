//! Filtering step: `argmin_z (beta/2)||z - x||^2 + lambda R(z)`.
//!
//! Analytic priors have exact proximal maps. Total variation is solved
//! approximately by a fast projected gradient iteration on its dual. The
//! external prior hands the image to a separate process through the file
//! container, so any denoiser (learned or otherwise) can be plugged in.

use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::container::{read_image, write_image, DType};
use crate::error::{Error, Result};
use crate::tensor::ComplexImage;

pub const DEFAULT_TV_ITERATIONS: usize = 50;
pub const DEFAULT_TV_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_EXTERNAL_TIMEOUT: Duration = Duration::from_secs(60);

/// Regularizer selection and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorSpec {
    /// `R(z) = ||z||^2`.
    Tikhonov,
    /// `R(z) = sum_i |z_i|`.
    SoftThresholdImage,
    /// `R(z) = sum |d|` over single-level orthonormal Haar detail coefficients.
    SoftThresholdHaar,
    /// Isotropic total variation with forward differences.
    TotalVariation {
        max_iterations: usize,
        tolerance: f64,
    },
    External(ExternalDenoiser),
}

impl PriorSpec {
    pub fn total_variation() -> Self {
        PriorSpec::TotalVariation {
            max_iterations: DEFAULT_TV_ITERATIONS,
            tolerance: DEFAULT_TV_TOLERANCE,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PriorSpec::Tikhonov => "tikhonov",
            PriorSpec::SoftThresholdImage => "soft_threshold_image",
            PriorSpec::SoftThresholdHaar => "soft_threshold_haar",
            PriorSpec::TotalVariation { .. } => "total_variation",
            PriorSpec::External(_) => "external",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PriorSpec::TotalVariation {
                max_iterations,
                tolerance,
            } => {
                if *max_iterations == 0 {
                    return Err(Error::Config("TV needs at least one inner iteration".into()));
                }
                if !(tolerance.is_finite() && *tolerance >= 0.0) {
                    return Err(Error::Config(format!("bad TV tolerance {tolerance}")));
                }
                Ok(())
            }
            PriorSpec::External(ext) => {
                if ext.command.is_empty() {
                    return Err(Error::Config("external prior needs a command".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `R(z)`, or `None` when the prior has no closed-form value.
    pub fn value(&self, z: &ComplexImage) -> Option<f64> {
        match self {
            PriorSpec::Tikhonov => Some(z.norm_sqr()),
            PriorSpec::SoftThresholdImage => Some(z.data().iter().map(|v| v.norm()).sum()),
            PriorSpec::SoftThresholdHaar => {
                let coeffs = haar_forward(z);
                Some(
                    coeffs
                        .data()
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| is_detail(z.height(), z.width(), i))
                        .map(|(_, v)| v.norm())
                        .sum(),
                )
            }
            PriorSpec::TotalVariation { .. } => Some(total_variation(z)),
            PriorSpec::External(_) => None,
        }
    }

    /// Whether the proximal map is computed exactly.
    pub fn is_exact(&self) -> bool {
        matches!(
            self,
            PriorSpec::Tikhonov | PriorSpec::SoftThresholdImage | PriorSpec::SoftThresholdHaar
        )
    }
}

/// A denoiser run as a child process.
///
/// The process is invoked as `command... <input.bin> <output.bin> <beta>
/// <lambda>` and must write a single-coil image container to the output
/// path and exit with status 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalDenoiser {
    pub command: Vec<String>,
    pub exchange_dir: PathBuf,
    pub timeout: Duration,
}

impl ExternalDenoiser {
    pub fn new(command: Vec<String>, exchange_dir: impl Into<PathBuf>) -> Self {
        Self {
            command,
            exchange_dir: exchange_dir.into(),
            timeout: DEFAULT_EXTERNAL_TIMEOUT,
        }
    }

    fn run(&self, x: &ComplexImage, beta: f64, lambda: f64) -> Result<ComplexImage> {
        let fail = |msg: String| Error::PriorExecution(msg);
        std::fs::create_dir_all(&self.exchange_dir)
            .map_err(|e| fail(format!("{}: {e}", self.exchange_dir.display())))?;
        let input = self.exchange_dir.join("prior_input.bin");
        let output = self.exchange_dir.join("prior_output.bin");
        let _ = std::fs::remove_file(&output);
        write_image(&input, "image", x, DType::Cf64)?;

        let (program, args) = self.command.split_first().ok_or_else(|| fail("empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .arg(&input)
            .arg(&output)
            .arg(beta.to_string())
            .arg(lambda.to_string())
            .stdin(Stdio::null())
            .spawn()
            .map_err(|e| fail(format!("cannot start `{program}`: {e}")))?;

        let started = Instant::now();
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) if started.elapsed() >= self.timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(fail(format!("`{program}` timed out after {:?}", self.timeout)));
                }
                Ok(None) => std::thread::sleep(Duration::from_millis(2)),
                Err(e) => return Err(fail(format!("waiting for `{program}`: {e}"))),
            }
        };
        if !status.success() {
            return Err(fail(format!("`{program}` exited with {status}")));
        }
        let z = read_image(&output).map_err(|e| fail(format!("reading denoiser output: {e}")))?;
        if z.shape() != x.shape() {
            return Err(fail(format!(
                "denoiser returned a {} image for a {} input",
                z.shape(),
                x.shape()
            )));
        }
        if !z.is_finite() {
            return Err(fail("denoiser output contains non-finite values".into()));
        }
        Ok(z)
    }
}

/// Outcome of one filtering step.
#[derive(Debug, Clone)]
pub struct ProxOutput {
    pub image: ComplexImage,
    /// False when an iterative inner solver hit its budget before its
    /// tolerance.
    pub converged: bool,
    pub inner_iterations: usize,
}

/// Solves the filtering subproblem for `prior` at penalty `beta` and weight
/// `lambda`.
pub fn prox_filter(x: &ComplexImage, prior: &PriorSpec, beta: f64, lambda: f64) -> Result<ProxOutput> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Config(format!("beta must be > 0, got {beta}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!("lambda must be >= 0, got {lambda}")));
    }
    let exact = |image| ProxOutput {
        image,
        converged: true,
        inner_iterations: 0,
    };
    let threshold = lambda / beta;
    match prior {
        PriorSpec::Tikhonov => Ok(exact(x.scale(Complex64::new(beta / (beta + 2.0 * lambda), 0.0)))),
        PriorSpec::SoftThresholdImage => Ok(exact(x.map(|v| shrink(v, threshold)))),
        PriorSpec::SoftThresholdHaar => {
            let mut coeffs = haar_forward(x);
            let (h, w) = (x.height(), x.width());
            for (i, v) in coeffs.data_mut().iter_mut().enumerate() {
                if is_detail(h, w, i) {
                    *v = shrink(*v, threshold);
                }
            }
            Ok(exact(haar_inverse(&coeffs)))
        }
        PriorSpec::TotalVariation {
            max_iterations,
            tolerance,
        } => Ok(tv_denoise(x, threshold, *max_iterations, *tolerance)),
        PriorSpec::External(ext) => Ok(exact(ext.run(x, beta, lambda)?)),
    }
}

/// Complex soft shrinkage: magnitude reduced by `t`, phase kept.
#[inline]
pub fn shrink(v: Complex64, t: f64) -> Complex64 {
    let mag = v.norm();
    if mag <= t {
        Complex64::new(0.0, 0.0)
    } else {
        v * ((mag - t) / mag)
    }
}

// Haar coefficients are stored in place: each 2x2 block (2i, 2j) holds
// [LL, LH; HL, HH]. A trailing odd row or column passes through unchanged
// and counts as approximation.

fn is_detail(h: usize, w: usize, i: usize) -> bool {
    let (r, c) = (i / w, i % w);
    r < h - h % 2 && c < w - w % 2 && (r % 2 == 1 || c % 2 == 1)
}

fn haar_blocks(img: &ComplexImage) -> ComplexImage {
    let mut out = img.clone();
    let (h, w) = (img.height(), img.width());
    for r in (0..h - h % 2).step_by(2) {
        for c in (0..w - w % 2).step_by(2) {
            let a = img[(r, c)];
            let b = img[(r, c + 1)];
            let d = img[(r + 1, c)];
            let e = img[(r + 1, c + 1)];
            out[(r, c)] = (a + b + d + e) * 0.5;
            out[(r, c + 1)] = (a - b + d - e) * 0.5;
            out[(r + 1, c)] = (a + b - d - e) * 0.5;
            out[(r + 1, c + 1)] = (a - b - d + e) * 0.5;
        }
    }
    out
}

/// Single-level orthonormal 2D Haar analysis.
pub fn haar_forward(img: &ComplexImage) -> ComplexImage {
    haar_blocks(img)
}

/// Inverse of [`haar_forward`]; the block transform is its own inverse.
pub fn haar_inverse(coeffs: &ComplexImage) -> ComplexImage {
    haar_blocks(coeffs)
}

/// Forward differences with a zero difference past the last row/column.
fn gradient(z: &[Complex64], h: usize, w: usize, gx: &mut [Complex64], gy: &mut [Complex64]) {
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            gx[i] = if c + 1 < w {
                z[i + 1] - z[i]
            } else {
                Complex64::new(0.0, 0.0)
            };
            gy[i] = if r + 1 < h {
                z[i + w] - z[i]
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
    }
}

/// Negative adjoint of [`gradient`].
fn divergence(px: &[Complex64], py: &[Complex64], h: usize, w: usize, out: &mut [Complex64]) {
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let mut d = Complex64::new(0.0, 0.0);
            if c + 1 < w {
                d += px[i];
            }
            if c > 0 {
                d -= px[i - 1];
            }
            if r + 1 < h {
                d += py[i];
            }
            if r > 0 {
                d -= py[i - w];
            }
            out[i] = d;
        }
    }
}

/// Isotropic TV: `sum_i sqrt(|dx_i|^2 + |dy_i|^2)`.
pub fn total_variation(z: &ComplexImage) -> f64 {
    let (h, w) = (z.height(), z.width());
    let n = h * w;
    let mut gx = vec![Complex64::new(0.0, 0.0); n];
    let mut gy = gx.clone();
    gradient(z.data(), h, w, &mut gx, &mut gy);
    gx.iter()
        .zip(&gy)
        .map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).sqrt())
        .sum()
}

/// `argmin_z 0.5||z - b||^2 + theta TV(z)` by fast gradient projection on
/// the dual field `p`, with `z = b + theta div p` and `|p_i| <= 1` coupling
/// both directions and both real components.
///
/// Stops when the relative dual change drops below `tolerance`.
pub fn tv_denoise(b: &ComplexImage, theta: f64, max_iterations: usize, tolerance: f64) -> ProxOutput {
    if theta == 0.0 {
        return ProxOutput {
            image: b.clone(),
            converged: true,
            inner_iterations: 0,
        };
    }
    let (h, w) = (b.height(), b.width());
    let n = h * w;
    let zero = Complex64::new(0.0, 0.0);
    let step = 1.0 / (8.0 * theta);
    let (mut px, mut py) = (vec![zero; n], vec![zero; n]);
    let (mut qx, mut qy) = (vec![zero; n], vec![zero; n]);
    let (mut gx, mut gy) = (vec![zero; n], vec![zero; n]);
    let mut div = vec![zero; n];
    let mut z = vec![zero; n];
    let mut t = 1.0f64;
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..max_iterations {
        iterations = it + 1;
        divergence(&qx, &qy, h, w, &mut div);
        for i in 0..n {
            z[i] = b.data()[i] + div[i] * theta;
        }
        gradient(&z, h, w, &mut gx, &mut gy);

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        let mut change = 0.0;
        let mut size = 0.0;
        for i in 0..n {
            let mut ax = qx[i] + gx[i] * step;
            let mut ay = qy[i] + gy[i] * step;
            let mag = (ax.norm_sqr() + ay.norm_sqr()).sqrt();
            if mag > 1.0 {
                ax /= mag;
                ay /= mag;
            }
            change += (ax - px[i]).norm_sqr() + (ay - py[i]).norm_sqr();
            size += ax.norm_sqr() + ay.norm_sqr();
            qx[i] = ax + (ax - px[i]) * momentum;
            qy[i] = ay + (ay - py[i]) * momentum;
            px[i] = ax;
            py[i] = ay;
        }
        t = t_next;
        if size == 0.0 || (change / size).sqrt() <= tolerance {
            converged = true;
            break;
        }
    }

    divergence(&px, &py, h, w, &mut div);
    let data = (0..n).map(|i| b.data()[i] + div[i] * theta).collect();
    ProxOutput {
        image: ComplexImage::from_vec(h, w, data).expect("tv output size"),
        converged,
        inner_iterations: iterations,
    }
}
