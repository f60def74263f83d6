//! Coil sensitivity estimation from the fully sampled k-space center.
//!
//! Each coil's central `acs_size x acs_size` block is (optionally) Hann
//! apodized and transformed back to a low-resolution coil image `L_l`. The
//! maps are `L_l / RSS(L)` on the support and zero elsewhere. This low-pass
//! estimator stands in for eigenvector-based calibration and yields one map
//! per coil.

use num_complex::Complex64;

use crate::acquisition::{MultiCoilKSpace, SensitivitySet};
use crate::error::{Error, Result};
use crate::sampling::{acs_start, SamplingMask};
use crate::tensor::{ifft2c, KSpaceGrid};

/// Row and column range of the centered calibration block.
fn block(height: usize, width: usize, acs_size: usize) -> (usize, usize) {
    (acs_start(height, acs_size), acs_start(width, acs_size))
}

fn check_block(y: &MultiCoilKSpace, mask: &SamplingMask, acs_size: usize) -> Result<()> {
    let shape = y.shape();
    mask.shape().expect(shape, "k-space vs mask")?;
    if acs_size == 0 || acs_size > shape.height.min(shape.width) {
        return Err(Error::Config(format!(
            "calibration size {acs_size} does not fit a {shape} grid"
        )));
    }
    let (_, c0) = block(shape.height, shape.width, acs_size);
    if !mask.covers(c0, acs_size) {
        return Err(Error::Protocol(format!(
            "central {acs_size} columns are not fully sampled"
        )));
    }
    Ok(())
}

/// Keeps only the central `acs_size x acs_size` block of every coil.
pub fn extract_acs(y: &MultiCoilKSpace, mask: &SamplingMask, acs_size: usize) -> Result<MultiCoilKSpace> {
    check_block(y, mask, acs_size)?;
    let shape = y.shape();
    let (r0, c0) = block(shape.height, shape.width, acs_size);
    let coils = y
        .coils()
        .iter()
        .map(|k| {
            KSpaceGrid::from_fn(shape.height, shape.width, |r, c| {
                if (r0..r0 + acs_size).contains(&r) && (c0..c0 + acs_size).contains(&c) {
                    k[(r, c)]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    MultiCoilKSpace::new(coils)
}

/// Symmetric Hann taper of length `n` with nonzero end points.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * (i + 1) as f64 / (n + 1) as f64).cos()))
        .collect()
}

/// Low-resolution sensitivity estimate from the calibration block.
pub fn estimate_maps(
    y: &MultiCoilKSpace,
    mask: &SamplingMask,
    acs_size: usize,
    apodize: bool,
) -> Result<SensitivitySet> {
    let acs = extract_acs(y, mask, acs_size)?;
    let shape = y.shape();
    let (r0, c0) = block(shape.height, shape.width, acs_size);
    let taper = if apodize { hann(acs_size) } else { vec![1.0; acs_size] };

    let mut low_res = Vec::with_capacity(acs.num_coils());
    for k in acs.coils() {
        let mut k = k.clone();
        if apodize {
            for r in 0..acs_size {
                for c in 0..acs_size {
                    k[(r0 + r, c0 + c)] *= taper[r] * taper[c];
                }
            }
        }
        low_res.push(ifft2c(&k)?);
    }
    if low_res.iter().all(|l| l.norm_sqr() == 0.0) {
        return Err(Error::Estimation("calibration block is all zero".into()));
    }
    SensitivitySet::normalized(low_res)
}
