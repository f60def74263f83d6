//! Half-quadratic-splitting reconstruction.
//!
//! The splitting objective is
//!
//! ```text
//! J(x, z, m) = 1/2 sum_l ||U F m_l - y_l||^2 + lambda R(z)
//!            + alpha/2 sum_l ||m_l - S_l x||^2 + beta/2 ||z - x||^2
//! ```
//!
//! and every iteration minimizes it blockwise: `z` (filtering) and `m`
//! (data consistency) both from the previous `x`, then `x` from the new `z`
//! and `m`. The data-consistency step is an elementwise blend in k-space
//! because `U^H U` is diagonal there; the image update is a per-pixel
//! division because every `S_l` is diagonal.

use num_complex::Complex64;

use crate::acquisition::{zero_filled, MultiCoilKSpace, SensitivitySet};
use crate::error::{Error, Result};
use crate::prior::{prox_filter, PriorSpec};
use crate::sampling::SamplingMask;
use crate::tensor::{fft2c, ifft2c, ComplexImage, RealImage};

/// Penalties for one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageParams {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
}

impl StageParams {
    pub fn new(alpha: f64, beta: f64, lambda: f64) -> Result<Self> {
        let p = Self { alpha, beta, lambda };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Soft-consistency weight `v`: 1 applies the exact data-consistency
/// update, 0 leaves the current spectrum untouched.
#[derive(Debug, Clone, PartialEq)]
pub enum ConsistencyWeight {
    Scalar(f64),
    /// One weight per k-space bin.
    Map(RealImage),
}

impl ConsistencyWeight {
    fn validate(&self) -> Result<()> {
        let ok = |v: f64| (0.0..=1.0).contains(&v);
        let valid = match self {
            ConsistencyWeight::Scalar(v) => ok(*v),
            ConsistencyWeight::Map(m) => m.data().iter().all(|&v| ok(v)),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::Config("consistency weight must lie in [0, 1]".into()))
        }
    }

    #[inline]
    fn at(&self, i: usize) -> f64 {
        match self {
            ConsistencyWeight::Scalar(v) => *v,
            ConsistencyWeight::Map(m) => m.data()[i],
        }
    }
}

/// Validated solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    params: StageParams,
    iterations: usize,
    prior: PriorSpec,
    consistency: ConsistencyWeight,
    schedule: Option<Vec<StageParams>>,
    record_history: bool,
}

impl SolverConfig {
    pub const DEFAULT_ITERATIONS: usize = 3;

    pub fn new(params: StageParams, iterations: usize, prior: PriorSpec) -> Result<Self> {
        params.validate()?;
        if iterations == 0 {
            return Err(Error::Config("at least one iteration is required".into()));
        }
        prior.validate()?;
        Ok(Self {
            params,
            iterations,
            prior,
            consistency: ConsistencyWeight::Scalar(1.0),
            schedule: None,
            record_history: false,
        })
    }

    pub fn with_consistency(mut self, weight: ConsistencyWeight) -> Result<Self> {
        weight.validate()?;
        self.consistency = weight;
        Ok(self)
    }

    /// Per-iteration penalties; must list exactly one entry per iteration.
    pub fn with_schedule(mut self, schedule: Vec<StageParams>) -> Result<Self> {
        if schedule.len() != self.iterations {
            return Err(Error::Config(format!(
                "schedule has {} stages for {} iterations",
                schedule.len(),
                self.iterations
            )));
        }
        for p in &schedule {
            p.validate()?;
        }
        self.schedule = Some(schedule);
        Ok(self)
    }

    pub fn with_history(mut self, record: bool) -> Self {
        self.record_history = record;
        self
    }

    pub fn params(&self) -> StageParams {
        self.params
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn consistency(&self) -> &ConsistencyWeight {
        &self.consistency
    }

    pub fn schedule(&self) -> Option<&[StageParams]> {
        self.schedule.as_deref()
    }

    pub fn record_history(&self) -> bool {
        self.record_history
    }

    /// Penalties of iteration `t` (1-based); `t = 0` gives the first stage.
    pub fn stage(&self, t: usize) -> StageParams {
        match &self.schedule {
            Some(s) => s[t.saturating_sub(1).min(s.len() - 1)],
            None => self.params,
        }
    }
}

/// Iterate snapshot kept when history recording is on.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub iteration: usize,
    pub x: ComplexImage,
    pub z: ComplexImage,
}

/// Iterates and diagnostics of one solve.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: ComplexImage,
    pub z: ComplexImage,
    pub m: Vec<ComplexImage>,
    /// Completed iterations.
    pub iteration: usize,
    /// Objective after initialization and after each iteration.
    pub objective_history: Vec<f64>,
    /// False when the prior has no evaluable `R` and the objective omits
    /// `lambda R(z)`.
    pub prior_term_included: bool,
    /// Iterations whose inner TV solve stopped on its budget.
    pub unconverged_filter_steps: Vec<usize>,
    pub snapshots: Vec<Snapshot>,
}

/// Value of the splitting objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub value: f64,
    pub prior_included: bool,
}

/// Evaluates the splitting objective at `(x, z, m)`.
#[allow(clippy::too_many_arguments)]
pub fn objective(
    x: &ComplexImage,
    z: &ComplexImage,
    m: &[ComplexImage],
    y: &MultiCoilKSpace,
    sens: &SensitivitySet,
    mask: &SamplingMask,
    params: StageParams,
    prior: &PriorSpec,
) -> Result<Objective> {
    if m.len() != sens.num_coils() || y.num_coils() != sens.num_coils() {
        return Err(Error::Config("coil counts disagree".into()));
    }
    let mut fidelity = 0.0;
    let mut coupling = 0.0;
    for (l, m_l) in m.iter().enumerate() {
        let mut k = fft2c(m_l)?;
        mask.apply_in_place(&mut k)?;
        fidelity += k.sub(y.coil(l))?.norm_sqr();
        coupling += m_l.sub(&sens.apply(l, x)?)?.norm_sqr();
    }
    let proximity = z.sub(x)?.norm_sqr();
    let reg = prior.value(z);
    let value = 0.5 * fidelity
        + reg.map_or(0.0, |r| params.lambda * r)
        + 0.5 * params.alpha * coupling
        + 0.5 * params.beta * proximity;
    Ok(Objective {
        value,
        prior_included: reg.is_some(),
    })
}

/// Data-consistency step: per coil, the minimizer of
/// `1/2||U F m - y||^2 + alpha/2 ||m - S_l x||^2`, optionally blended by
/// `weight` on sampled bins.
pub fn dc_update(
    x_prev: &ComplexImage,
    y: &MultiCoilKSpace,
    sens: &SensitivitySet,
    mask: &SamplingMask,
    alpha: f64,
    weight: &ConsistencyWeight,
) -> Result<Vec<ComplexImage>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("alpha must be > 0, got {alpha}")));
    }
    weight.validate()?;
    if let ConsistencyWeight::Map(m) = weight {
        m.shape().expect(y.shape(), "consistency map")?;
    }
    sens.shape().expect(x_prev.shape(), "image vs sensitivities")?;
    sens.shape().expect(y.shape(), "k-space vs sensitivities")?;
    mask.shape().expect(y.shape(), "k-space vs mask")?;
    if y.num_coils() != sens.num_coils() {
        return Err(Error::Config("coil counts disagree".into()));
    }

    let w = mask.width();
    let inv = 1.0 / (1.0 + alpha);
    (0..sens.num_coils())
        .map(|l| {
            let mut k = fft2c(&sens.apply(l, x_prev)?)?;
            let measured = y.coil(l).data();
            for (i, bin) in k.data_mut().iter_mut().enumerate() {
                if mask.lines()[i % w] {
                    let consistent = (measured[i] + *bin * alpha) * inv;
                    let v = weight.at(i);
                    *bin = consistent * v + *bin * (1.0 - v);
                }
            }
            ifft2c(&k)
        })
        .collect()
}

/// Image update: per pixel
/// `x = (beta z + alpha sum_l conj(S_l) m_l) / (beta + alpha sum_l |S_l|^2)`.
pub fn x_update(
    z: &ComplexImage,
    m: &[ComplexImage],
    sens: &SensitivitySet,
    alpha: f64,
    beta: f64,
) -> Result<ComplexImage> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::Config("alpha and beta must be > 0".into()));
    }
    sens.shape().expect(z.shape(), "image vs sensitivities")?;
    let combined = sens.combine(m)?;
    let energy = sens.energy();
    let data = z
        .data()
        .iter()
        .zip(combined.data())
        .zip(&energy)
        .map(|((&zi, &ci), &e)| (zi * beta + ci * alpha) / (beta + alpha * e))
        .collect();
    ComplexImage::from_vec(z.height(), z.width(), data)
}

fn ensure_finite(img: &ComplexImage, step: &'static str, iteration: usize) -> Result<()> {
    if img.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence { step, iteration })
    }
}

/// Solver bound to one acquisition.
pub struct HqsSolver<'a> {
    y: &'a MultiCoilKSpace,
    sens: &'a SensitivitySet,
    mask: &'a SamplingMask,
    config: &'a SolverConfig,
}

impl<'a> HqsSolver<'a> {
    pub fn new(
        y: &'a MultiCoilKSpace,
        sens: &'a SensitivitySet,
        mask: &'a SamplingMask,
        config: &'a SolverConfig,
    ) -> Result<Self> {
        sens.shape().expect(y.shape(), "k-space vs sensitivities")?;
        mask.shape().expect(y.shape(), "k-space vs mask")?;
        if y.num_coils() != sens.num_coils() {
            return Err(Error::Config(format!(
                "{} coils of data but {} sensitivity maps",
                y.num_coils(),
                sens.num_coils()
            )));
        }
        if mask.selected_count() == 0 {
            return Err(Error::Protocol("sampling mask selects no lines".into()));
        }
        if let ConsistencyWeight::Map(m) = config.consistency() {
            m.shape().expect(y.shape(), "consistency map")?;
        }
        Ok(Self { y, sens, mask, config })
    }

    fn objective(&self, x: &ComplexImage, z: &ComplexImage, m: &[ComplexImage], t: usize) -> Result<Objective> {
        objective(
            x,
            z,
            m,
            self.y,
            self.sens,
            self.mask,
            self.config.stage(t),
            self.config.prior(),
        )
    }

    /// State at `x = z = x^(0)` (zero-filled) and `m_l = S_l x^(0)`.
    pub fn init(&self) -> Result<SolverState> {
        let x = zero_filled(self.y, self.sens)?;
        ensure_finite(&x, "initialization", 0)?;
        self.state_from(x)
    }

    /// State starting from an arbitrary image.
    pub fn state_from(&self, x: ComplexImage) -> Result<SolverState> {
        let m = (0..self.sens.num_coils())
            .map(|l| self.sens.apply(l, &x))
            .collect::<Result<Vec<_>>>()?;
        let z = x.clone();
        let obj = self.objective(&x, &z, &m, 0)?;
        let snapshots = if self.config.record_history() {
            vec![Snapshot {
                iteration: 0,
                x: x.clone(),
                z: z.clone(),
            }]
        } else {
            Vec::new()
        };
        Ok(SolverState {
            x,
            z,
            m,
            iteration: 0,
            objective_history: vec![obj.value],
            prior_term_included: obj.prior_included,
            unconverged_filter_steps: Vec::new(),
            snapshots,
        })
    }

    /// One filtering / data-consistency / image-update pass.
    pub fn step(&self, state: &mut SolverState) -> Result<()> {
        let t = state.iteration + 1;
        let p = self.config.stage(t);
        let prior = self.config.prior();

        let prox = prox_filter(&state.x, prior, p.beta, p.lambda)?;
        ensure_finite(&prox.image, "filtering", t)?;
        if !prox.converged {
            state.unconverged_filter_steps.push(t);
        }
        let mut z = prox.image;
        if !prior.is_exact() {
            // Inexact inner solves keep the previous z unless they improve
            // the filtering subproblem, so the outer objective cannot rise.
            if let (Some(r_new), Some(r_old)) = (prior.value(&z), prior.value(&state.z)) {
                let phi = |zz: &ComplexImage, r: f64| -> Result<f64> {
                    Ok(0.5 * p.beta * zz.sub(&state.x)?.norm_sqr() + p.lambda * r)
                };
                if phi(&z, r_new)? > phi(&state.z, r_old)? {
                    z = state.z.clone();
                }
            }
        }

        let m = dc_update(
            &state.x,
            self.y,
            self.sens,
            self.mask,
            p.alpha,
            self.config.consistency(),
        )?;
        for m_l in &m {
            ensure_finite(m_l, "data-consistency", t)?;
        }

        let x = x_update(&z, &m, self.sens, p.alpha, p.beta)?;
        ensure_finite(&x, "image-update", t)?;

        let obj = self.objective(&x, &z, &m, t)?;
        if !obj.value.is_finite() {
            return Err(Error::Divergence {
                step: "objective",
                iteration: t,
            });
        }
        if self.config.record_history() {
            state.snapshots.push(Snapshot {
                iteration: t,
                x: x.clone(),
                z: z.clone(),
            });
        }
        state.x = x;
        state.z = z;
        state.m = m;
        state.iteration = t;
        state.objective_history.push(obj.value);
        Ok(())
    }

    /// Runs all configured iterations from the zero-filled image.
    ///
    /// The returned image is the final iterate restricted to the
    /// sensitivity support; the state keeps the unrestricted iterate.
    pub fn run(&self) -> Result<(ComplexImage, SolverState)> {
        let mut state = self.init()?;
        for _ in 0..self.config.iterations() {
            self.step(&mut state)?;
        }
        let image = self.sens.restrict(&state.x)?;
        Ok((image, state))
    }
}

/// Reconstructs an image from multi-coil data.
pub fn solve(
    y: &MultiCoilKSpace,
    sens: &SensitivitySet,
    mask: &SamplingMask,
    config: &SolverConfig,
) -> Result<(ComplexImage, SolverState)> {
    HqsSolver::new(y, sens, mask, config)?.run()
}

/// `(F^H U^H U F + alpha I) m` for one coil, used to check the
/// data-consistency optimality condition.
pub fn dc_normal_operator(m: &ComplexImage, mask: &SamplingMask, alpha: f64) -> Result<ComplexImage> {
    let mut k = fft2c(m)?;
    mask.apply_in_place(&mut k)?;
    ifft2c(&k)?.add(&m.scale(Complex64::new(alpha, 0.0)))
}
