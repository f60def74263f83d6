//! Random fixtures and dense reference operators shared by unit tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acquisition::SensitivitySet;
use crate::tensor::{ComplexImage, KSpaceGrid};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sample(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_image(rng: &mut ChaCha8Rng, h: usize, w: usize) -> ComplexImage {
    ComplexImage::from_fn(h, w, |_, _| sample(rng))
}

pub fn random_kspace(rng: &mut ChaCha8Rng, h: usize, w: usize) -> KSpaceGrid {
    KSpaceGrid::from_fn(h, w, |_, _| sample(rng))
}

pub fn random_maps(rng: &mut ChaCha8Rng, coils: usize, h: usize, w: usize) -> Vec<ComplexImage> {
    (0..coils).map(|_| random_image(rng, h, w)).collect()
}

pub fn random_sens(rng: &mut ChaCha8Rng, coils: usize, h: usize, w: usize) -> SensitivitySet {
    SensitivitySet::raw(random_maps(rng, coils, h, w)).unwrap()
}

/// `||a - b|| / ||b||` (absolute when `b` is zero).
pub fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}
