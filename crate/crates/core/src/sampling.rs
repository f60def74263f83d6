//! 1D Cartesian undersampling masks.
//!
//! Phase encoding runs along grid columns: a mask selects whole columns of
//! k-space, and every row (frequency-encode sample) of a selected column is
//! kept. The autocalibration (ACS) band is the `acs_width` contiguous columns
//! centered on the DC column `width / 2`.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{KSpaceGrid, RealImage, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskKind {
    Random,
    Equispaced,
    /// Loaded or hand-built selection with no generating rule.
    Custom,
}

impl MaskKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MaskKind::Random => "random",
            MaskKind::Equispaced => "equispaced",
            MaskKind::Custom => "custom",
        }
    }
}

impl fmt::Display for MaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(MaskKind::Random),
            "equispaced" => Ok(MaskKind::Equispaced),
            "custom" => Ok(MaskKind::Custom),
            other => Err(Error::Config(format!("unknown mask kind `{other}`"))),
        }
    }
}

/// Column selection realizing the sampling operator `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingMask {
    height: usize,
    width: usize,
    line_selected: Vec<bool>,
    acs_width: usize,
    acceleration: f64,
    kind: MaskKind,
    seed: u64,
}

/// First column of the centered ACS band.
pub fn acs_start(width: usize, acs_width: usize) -> usize {
    (width / 2).saturating_sub(acs_width / 2)
}

fn validate(height: usize, width: usize, acceleration: f64, acs_width: usize) -> Result<usize> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidDimension { height, width });
    }
    if !(acceleration.is_finite() && acceleration >= 1.0) {
        return Err(Error::Config(format!(
            "acceleration must be a finite value >= 1, got {acceleration}"
        )));
    }
    let budget = (width as f64 / acceleration).round() as usize;
    if acs_width > budget {
        return Err(Error::Config(format!(
            "ACS width {acs_width} exceeds the line budget round({width}/{acceleration}) = {budget}"
        )));
    }
    Ok(budget)
}

fn acs_lines(width: usize, acs_width: usize) -> Vec<bool> {
    let mut lines = vec![false; width];
    let start = acs_start(width, acs_width);
    for l in &mut lines[start..start + acs_width] {
        *l = true;
    }
    lines
}

/// Random 1D Cartesian mask: the ACS band plus `round(width/R) - acs_width`
/// further columns drawn uniformly without replacement.
///
/// ACS columns count toward the budget, so exactly `round(width/R)` columns
/// are selected.
pub fn make_random_mask(
    height: usize,
    width: usize,
    acceleration: f64,
    acs_width: usize,
    seed: u64,
) -> Result<SamplingMask> {
    let budget = validate(height, width, acceleration, acs_width)?;
    let mut lines = acs_lines(width, acs_width);
    let free: Vec<usize> = (0..width).filter(|&c| !lines[c]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in index::sample(&mut rng, free.len(), budget - acs_width) {
        lines[free[i]] = true;
    }
    Ok(SamplingMask {
        height,
        width,
        line_selected: lines,
        acs_width,
        acceleration,
        kind: MaskKind::Random,
        seed,
    })
}

fn integer_stride(acceleration: f64) -> Result<usize> {
    if acceleration.fract() != 0.0 {
        return Err(Error::Config(format!(
            "equispaced masks need an integer acceleration, got {acceleration}"
        )));
    }
    Ok(acceleration as usize)
}

/// Number of admissible offsets for an equispaced pattern.
///
/// Offsets are drawn from `[0, R)`, narrowed when `width` is not a multiple
/// of `R` so that the stride pattern always holds `ceil(width/R)` columns.
fn offset_range(width: usize, stride: usize) -> usize {
    let lines = width.div_ceil(stride);
    stride.min(width - (lines - 1) * stride)
}

/// Equispaced mask: every `R`-th column from a random offset, with the ACS
/// band overlaid.
///
/// The overlay can push the realized sampling ratio slightly above `1/R`.
pub fn make_equispaced_mask(
    height: usize,
    width: usize,
    acceleration: f64,
    acs_width: usize,
    seed: u64,
) -> Result<SamplingMask> {
    validate(height, width, acceleration, acs_width)?;
    let stride = integer_stride(acceleration)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = rng.gen_range(0..offset_range(width, stride));
    let mut mask = make_equispaced_mask_with_offset(height, width, acceleration, acs_width, offset)?;
    mask.seed = seed;
    Ok(mask)
}

/// Equispaced mask with an explicit stride offset in `[0, R)`.
pub fn make_equispaced_mask_with_offset(
    height: usize,
    width: usize,
    acceleration: f64,
    acs_width: usize,
    offset: usize,
) -> Result<SamplingMask> {
    validate(height, width, acceleration, acs_width)?;
    let stride = integer_stride(acceleration)?;
    if offset >= stride {
        return Err(Error::Config(format!("offset {offset} outside [0, {stride})")));
    }
    let mut lines = acs_lines(width, acs_width);
    for c in (offset..width).step_by(stride) {
        lines[c] = true;
    }
    Ok(SamplingMask {
        height,
        width,
        line_selected: lines,
        acs_width,
        acceleration,
        kind: MaskKind::Equispaced,
        seed: 0,
    })
}

impl SamplingMask {
    /// Builds a mask from explicit column flags; the ACS band must be
    /// selected.
    pub fn from_lines(
        height: usize,
        line_selected: Vec<bool>,
        acs_width: usize,
        acceleration: f64,
        kind: MaskKind,
        seed: u64,
    ) -> Result<Self> {
        let width = line_selected.len();
        if height == 0 || width == 0 {
            return Err(Error::InvalidDimension { height, width });
        }
        if acs_width > width {
            return Err(Error::Config(format!(
                "ACS width {acs_width} exceeds grid width {width}"
            )));
        }
        let start = acs_start(width, acs_width);
        if !line_selected[start..start + acs_width].iter().all(|&s| s) {
            return Err(Error::Config("ACS band is not fully selected".into()));
        }
        Ok(Self {
            height,
            width,
            line_selected,
            acs_width,
            acceleration,
            kind,
            seed,
        })
    }

    /// All columns selected (`U` is the identity).
    pub fn full(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            line_selected: vec![true; width],
            acs_width: 0,
            acceleration: 1.0,
            kind: MaskKind::Custom,
            seed: 0,
        }
    }

    pub fn shape(&self) -> Shape {
        Shape::new(self.height, self.width)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn lines(&self) -> &[bool] {
        &self.line_selected
    }

    pub fn acs_width(&self) -> usize {
        self.acs_width
    }

    pub fn acceleration(&self) -> f64 {
        self.acceleration
    }

    pub fn kind(&self) -> MaskKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn selected_count(&self) -> usize {
        self.line_selected.iter().filter(|&&s| s).count()
    }

    pub fn sampling_ratio(&self) -> f64 {
        self.selected_count() as f64 / self.width as f64
    }

    #[inline]
    pub fn is_sampled(&self, _row: usize, col: usize) -> bool {
        self.line_selected[col]
    }

    /// The 0/1 diagonal of `U^H U` laid out on the grid.
    pub fn diagonal(&self) -> RealImage {
        let data = (0..self.height)
            .flat_map(|_| self.line_selected.iter().map(|&s| if s { 1.0 } else { 0.0 }))
            .collect();
        RealImage::from_vec(self.height, self.width, data).expect("mask grid size")
    }

    /// Whether every column in `[start, start + len)` is selected.
    pub fn covers(&self, start: usize, len: usize) -> bool {
        start + len <= self.width && self.line_selected[start..start + len].iter().all(|&s| s)
    }

    /// Columns kept, the rest zeroed: `U^H U k`.
    pub fn apply(&self, ksp: &KSpaceGrid) -> Result<KSpaceGrid> {
        let mut out = ksp.clone();
        self.apply_in_place(&mut out)?;
        Ok(out)
    }

    pub fn apply_in_place(&self, ksp: &mut KSpaceGrid) -> Result<()> {
        self.shape().expect(ksp.shape(), "sampling mask")?;
        let w = self.width;
        for row in ksp.data_mut().chunks_exact_mut(w) {
            for (v, &keep) in row.iter_mut().zip(&self.line_selected) {
                if !keep {
                    *v = num_complex::Complex64::new(0.0, 0.0);
                }
            }
        }
        Ok(())
    }
}

/// `U^H U` applied to `ksp`.
pub fn apply_mask(ksp: &KSpaceGrid, mask: &SamplingMask) -> Result<KSpaceGrid> {
    mask.apply(ksp)
}

/// Named acquisition protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Organ {
    Brain,
    Knee,
    Cardiac,
}

impl Organ {
    pub const ALL: [Organ; 3] = [Organ::Brain, Organ::Knee, Organ::Cardiac];

    pub fn as_str(&self) -> &'static str {
        match self {
            Organ::Brain => "brain",
            Organ::Knee => "knee",
            Organ::Cardiac => "cardiac",
        }
    }

    /// Brain: equispaced R=4; knee: random R=6; cardiac: random R=8. All
    /// with a 24-column ACS band.
    ///
    /// The cardiac entry uses random Cartesian sampling as a stand-in for a
    /// vendor-specific clinical pattern.
    pub fn protocol(&self) -> MaskProtocol {
        let (kind, acceleration) = match self {
            Organ::Brain => (MaskKind::Equispaced, 4.0),
            Organ::Knee => (MaskKind::Random, 6.0),
            Organ::Cardiac => (MaskKind::Random, 8.0),
        };
        MaskProtocol {
            kind,
            acceleration,
            acs_width: 24,
        }
    }
}

impl Organ {
    /// The protocol adapted to a grid `width` columns wide.
    ///
    /// When 24 ACS columns exceed the line budget `round(width/R)` (small
    /// desk-scale grids), the band shrinks to half the budget.
    pub fn protocol_for(&self, width: usize) -> MaskProtocol {
        self.protocol().fitted(width)
    }
}

impl fmt::Display for Organ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Organ {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brain" => Ok(Organ::Brain),
            "knee" => Ok(Organ::Knee),
            "cardiac" => Ok(Organ::Cardiac),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }
}

/// Recipe for a generated mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskProtocol {
    pub kind: MaskKind,
    pub acceleration: f64,
    pub acs_width: usize,
}

impl MaskProtocol {
    /// Shrinks the ACS band to half the line budget `round(width/R)` when
    /// it does not fit in the budget.
    pub fn fitted(mut self, width: usize) -> Self {
        let budget = (width as f64 / self.acceleration).round() as usize;
        if self.acs_width > budget {
            self.acs_width = budget / 2;
        }
        self
    }

    pub fn build(&self, height: usize, width: usize, seed: u64) -> Result<SamplingMask> {
        match self.kind {
            MaskKind::Random => make_random_mask(height, width, self.acceleration, self.acs_width, seed),
            MaskKind::Equispaced => make_equispaced_mask(height, width, self.acceleration, self.acs_width, seed),
            MaskKind::Custom => Err(Error::Config("custom masks cannot be generated from a protocol".into())),
        }
    }
}
