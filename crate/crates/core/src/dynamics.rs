//! Fixed-step RK4 propagation of the master equation and the integrated sink
//! population objective.
//!
//! The density matrix is stored channel-major: channel 0 holds ρ itself and
//! channel `k + 1` holds ∂ρ/∂p_k. This is the structure-of-arrays layout of a
//! matrix of [`DiffScalar`] entries, which lets the tangent channels reuse the
//! value kernels. The objective is integrated as an extra state component so
//! that it and its gradient stay at RK4 order.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    add_anti_hermitian_part, add_product, BasisMap, BoundModel, Dissipator, DualHamiltonian, ModelConfig,
};
use crate::scalar::{DiffComplex, DiffScalar};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A population this large means the step size is outside RK4's stability region.
const POPULATION_BOUND: f64 = 1e3;

/// Relative agreement between step `dt` and `dt / 2` required for convergence.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-5;

/// Vector-space operations the RK4 stepper needs.
pub trait OdeState: Clone {
    /// `self = base + alpha * dir`
    fn assign_axpy(&mut self, base: &Self, alpha: f64, dir: &Self);
    /// `self += alpha * x`
    fn axpy(&mut self, alpha: f64, x: &Self);
    fn is_finite(&self) -> bool;
}

/// Classical fourth-order Runge–Kutta with reusable stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4<S> {
    k1: S,
    k2: S,
    k3: S,
    k4: S,
    stage: S,
}

impl<S: OdeState> Rk4<S> {
    pub fn new(template: &S) -> Self {
        Self {
            k1: template.clone(),
            k2: template.clone(),
            k3: template.clone(),
            k4: template.clone(),
            stage: template.clone(),
        }
    }

    /// Advance `y` from `t` to `t + dt`. `f(t, y, out)` must overwrite `out`.
    pub fn step<F>(&mut self, mut f: F, t: f64, y: &mut S, dt: f64)
    where
        F: FnMut(f64, &S, &mut S),
    {
        let half = 0.5 * dt;
        f(t, y, &mut self.k1);
        self.stage.assign_axpy(y, half, &self.k1);
        f(t + half, &self.stage, &mut self.k2);
        self.stage.assign_axpy(y, half, &self.k2);
        f(t + half, &self.stage, &mut self.k3);
        self.stage.assign_axpy(y, dt, &self.k3);
        f(t + dt, &self.stage, &mut self.k4);
        y.axpy(dt / 6.0, &self.k1);
        y.axpy(dt / 3.0, &self.k2);
        y.axpy(dt / 3.0, &self.k3);
        y.axpy(dt / 6.0, &self.k4);
    }
}

/// Time grid of a run: `t_end / dt` steps, a record every `record_stride` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
}

impl TrajectoryConfig {
    pub const DEFAULT_RECORD_STRIDE: usize = 100;

    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            record_stride: Self::DEFAULT_RECORD_STRIDE,
        }
    }

    pub fn with_stride(mut self, record_stride: usize) -> Self {
        self.record_stride = record_stride;
        self
    }

    pub fn n_steps(&self) -> Result<usize> {
        if self.record_stride == 0 {
            return Err(Error::config("record_stride", "must be positive"));
        }
        step_count(self.dt, self.t_end)
    }
}

/// Number of steps of size `dt` covering `[0, t_end]` exactly.
pub fn step_count(dt: f64, t_end: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::config("dt", format!("must be positive and finite, got {dt}")));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::config(
            "t_end",
            format!("must be non-negative and finite, got {t_end}"),
        ));
    }
    let n = (t_end / dt).round();
    if (n * dt - t_end).abs() > 1e-12 * t_end.max(1.0) {
        return Err(Error::config(
            "dt",
            format!("t_end = {t_end} is not an integer multiple of dt = {dt}"),
        ));
    }
    Ok(n as usize)
}

/// Density matrix with tangent channels, row-major per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zeros(dim: usize, width: usize) -> Self {
        Self {
            dim,
            width,
            data: vec![ZERO; (width + 1) * dim * dim],
        }
    }

    /// `|index⟩⟨index|` with zero tangents.
    pub fn pure(dim: usize, index: usize, width: usize) -> Self {
        let mut rho = Self::zeros(dim, width);
        rho.data[index * dim + index] = Complex64::new(1.0, 0.0);
        rho
    }

    /// Photon in the radiation mode, everything else in its ground state.
    pub fn initial(basis: BasisMap, width: usize) -> Self {
        Self::pure(basis.dim(), BasisMap::RADIATION, width)
    }

    pub fn from_matrix(value: &DMatrix<Complex64>, width: usize) -> Self {
        let dim = value.nrows();
        let mut rho = Self::zeros(dim, width);
        for i in 0..dim {
            for j in 0..dim {
                rho.data[i * dim + j] = value[(i, j)];
            }
        }
        rho
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Same value, tangent channels resized to `width` and zeroed.
    pub fn with_width(&self, width: usize) -> Self {
        let mut out = Self::zeros(self.dim, width);
        let n = self.dim * self.dim;
        out.data[..n].copy_from_slice(&self.data[..n]);
        out
    }

    fn channel(&self, c: usize) -> &[Complex64] {
        let n = self.dim * self.dim;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn value(&self) -> DMatrix<Complex64> {
        let d = self.dim;
        DMatrix::from_fn(d, d, |i, j| self.data[i * d + j])
    }

    pub fn entry(&self, i: usize, j: usize) -> DiffComplex {
        let d = self.dim;
        let idx = i * d + j;
        let re = (0..self.width).map(|k| self.data[(k + 1) * d * d + idx].re).collect();
        let im = (0..self.width).map(|k| self.data[(k + 1) * d * d + idx].im).collect();
        DiffComplex::new(
            DiffScalar::with_tangents(self.data[idx].re, re),
            DiffScalar::with_tangents(self.data[idx].im, im),
        )
    }

    pub fn population(&self, i: usize) -> f64 {
        self.data[i * self.dim + i].re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.population(i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.population(i)).sum()
    }

    /// `max |ρ − ρ†|` over the value channel.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let diff = self.data[i * d + j] - self.data[j * d + i].conj();
                worst = worst.max(diff.norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part of the value channel.
    pub fn min_eigenvalue(&self) -> f64 {
        let v = self.value();
        let herm = (&v + v.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Density matrix plus the running integral of the sink population.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState {
    pub rho: DensityMatrix,
    /// `∫ p_sink dt` (index 0) and its tangents.
    pub accumulator: Vec<f64>,
}

impl AugmentedState {
    pub fn new(rho: DensityMatrix) -> Self {
        let accumulator = vec![0.0; rho.width + 1];
        Self { rho, accumulator }
    }

    pub fn integral(&self) -> DiffScalar {
        DiffScalar::with_tangents(self.accumulator[0], self.accumulator[1..].to_vec())
    }
}

impl OdeState for AugmentedState {
    fn assign_axpy(&mut self, base: &Self, alpha: f64, dir: &Self) {
        for ((o, b), d) in self.rho.data.iter_mut().zip(&base.rho.data).zip(&dir.rho.data) {
            *o = b + d * alpha;
        }
        for ((o, b), d) in self.accumulator.iter_mut().zip(&base.accumulator).zip(&dir.accumulator) {
            *o = b + alpha * d;
        }
    }

    fn axpy(&mut self, alpha: f64, x: &Self) {
        for (o, d) in self.rho.data.iter_mut().zip(&x.rho.data) {
            *o += d * alpha;
        }
        for (o, d) in self.accumulator.iter_mut().zip(&x.accumulator) {
            *o += alpha * d;
        }
    }

    fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.accumulator.iter().all(|a| a.is_finite())
    }
}

/// Evaluates the (differentiated) master equation for one bound model.
pub struct Propagator {
    model: BoundModel,
    dissipator: Dissipator,
    ham: DualHamiltonian,
    scratch: Vec<Complex64>,
}

impl Propagator {
    pub fn new(model: BoundModel) -> Self {
        let dissipator = model.dissipator();
        let ham = DualHamiltonian::new(model.dim(), model.width);
        let scratch = vec![ZERO; model.dim() * model.dim()];
        Self {
            model,
            dissipator,
            ham,
            scratch,
        }
    }

    pub fn model(&self) -> &BoundModel {
        &self.model
    }

    /// Overwrite `out` with the time derivative of `state` at `t`.
    ///
    /// Every channel of a physical state is Hermitian, which the commutator
    /// kernel relies on.
    pub fn rhs(&mut self, t: f64, state: &AugmentedState, out: &mut AugmentedState) {
        let dim = self.model.dim();
        let n = dim * dim;
        let sink = self.model.basis.sink() * dim + self.model.basis.sink();
        self.ham.fill(&self.model, t);
        out.rho.data.fill(ZERO);
        let value = state.rho.channel(0);
        for c in 0..=self.model.width {
            let src = &state.rho.data[c * n..(c + 1) * n];
            let dst = &mut out.rho.data[c * n..(c + 1) * n];
            self.scratch.fill(ZERO);
            add_product(&self.ham.value, src, &mut self.scratch, dim);
            if c > 0 {
                // product rule: -i [∂H/∂p, ρ]
                add_product(&self.ham.tangents[c - 1], value, &mut self.scratch, dim);
            }
            add_anti_hermitian_part(&self.scratch, dst, dim);
            self.dissipator.apply(src, dst);
            out.accumulator[c] = src[sink].re;
        }
    }

    pub fn step(&mut self, rk: &mut Rk4<AugmentedState>, t: f64, state: &mut AugmentedState, dt: f64) -> Result<()> {
        rk.step(|t, y, out| self.rhs(t, y, out), t, state, dt);
        // RK4 keeps the trace exactly even when unstable, so bound the populations too
        let dim = state.rho.dim();
        let bounded = (0..dim).all(|i| state.rho.data[i * dim + i].re.abs() <= POPULATION_BOUND);
        if bounded && state.is_finite() {
            Ok(())
        } else {
            Err(Error::IntegrationDiverged { t: t + dt })
        }
    }

    /// Integrate from `t = 0` for `n_steps`, calling `observe(step, state)`
    /// before the first step and after each step.
    pub fn integrate<F>(&mut self, state: &mut AugmentedState, dt: f64, n_steps: usize, mut observe: F) -> Result<()>
    where
        F: FnMut(usize, &AugmentedState),
    {
        if state.rho.dim != self.model.dim() || state.rho.width != self.model.width {
            return Err(Error::config(
                "initial",
                format!(
                    "state has dim {} width {}, model needs dim {} width {}",
                    state.rho.dim,
                    state.rho.width,
                    self.model.dim(),
                    self.model.width
                ),
            ));
        }
        let mut rk = Rk4::new(state);
        observe(0, state);
        for k in 0..n_steps {
            self.step(&mut rk, k as f64 * dt, state, dt)?;
            observe(k + 1, state);
        }
        Ok(())
    }
}

/// One RK4 step of the augmented system for a value-level config.
pub fn rk4_step(config: &ModelConfig, t: f64, state: &AugmentedState, dt: f64) -> Result<AugmentedState> {
    config.validate()?;
    let mut prop = Propagator::new(BoundModel::constant(config));
    let mut next = state.clone();
    if next.rho.width != 0 {
        next = AugmentedState {
            rho: next.rho.with_width(0),
            accumulator: vec![next.accumulator[0]],
        };
    }
    let mut rk = Rk4::new(&next);
    prop.step(&mut rk, t, &mut next, dt)?;
    Ok(next)
}

/// Recorded populations along a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub basis: BasisMap,
    pub times: Vec<f64>,
    /// Diagonal of ρ at each recorded time, in basis order.
    pub populations: Vec<Vec<f64>>,
    pub trace: Vec<f64>,
    /// `∫₀ᵗ p_sink` at each recorded time, from the augmented state.
    pub sink_integral: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Worst-case invariant violations seen at the recorded times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            max_trace_error: 0.0,
            max_hermiticity_error: 0.0,
            min_eigenvalue: f64::INFINITY,
        }
    }
}

impl Trajectory {
    fn new(basis: BasisMap) -> Self {
        Self {
            basis,
            times: Vec::new(),
            populations: Vec::new(),
            trace: Vec::new(),
            sink_integral: Vec::new(),
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn p_sink(&self) -> Vec<f64> {
        let s = self.basis.sink();
        self.populations.iter().map(|p| p[s]).collect()
    }

    pub fn final_sink_integral(&self) -> f64 {
        self.sink_integral.last().copied().unwrap_or(0.0)
    }

    fn record(&mut self, t: f64, state: &AugmentedState, check_positivity: bool) {
        let rho = &state.rho;
        self.times.push(t);
        self.populations.push(rho.populations());
        let tr = rho.trace();
        self.trace.push(tr);
        self.sink_integral.push(state.accumulator[0]);
        let d = &mut self.diagnostics;
        d.max_trace_error = d.max_trace_error.max((tr - 1.0).abs());
        d.max_hermiticity_error = d.max_hermiticity_error.max(rho.hermiticity_error());
        if check_positivity {
            d.min_eigenvalue = d.min_eigenvalue.min(rho.min_eigenvalue());
        }
    }

    /// Largest drop of p_sink between consecutive records (0 if monotone).
    pub fn max_sink_decrease(&self) -> f64 {
        self.p_sink().windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }

    /// Trapezoidal integral of the recorded p_sink.
    pub fn trapezoid_sink_integral(&self) -> f64 {
        let p = self.p_sink();
        self.times
            .windows(2)
            .zip(p.windows(2))
            .map(|(t, p)| 0.5 * (t[1] - t[0]) * (p[0] + p[1]))
            .sum()
    }
}

/// Number of records at which the smallest eigenvalue of ρ is checked.
const POSITIVITY_SAMPLES: usize = 100;

/// Evolve `initial` under `config`, recording every `record_stride` steps and
/// at the final time.
pub fn evolve(config: &ModelConfig, traj: &TrajectoryConfig, initial: &DensityMatrix) -> Result<Trajectory> {
    config.validate()?;
    let n_steps = traj.n_steps()?;
    let basis = config.basis();
    if initial.dim() != basis.dim() {
        return Err(Error::config(
            "initial",
            format!("expected dimension {}, got {}", basis.dim(), initial.dim()),
        ));
    }
    let mut prop = Propagator::new(BoundModel::constant(config));
    let mut state = AugmentedState::new(initial.with_width(0));
    let mut out = Trajectory::new(basis);
    let stride = traj.record_stride;
    let n_records = n_steps / stride + 1;
    let positivity_every = n_records.div_ceil(POSITIVITY_SAMPLES).max(1);
    let mut recorded = 0usize;
    prop.integrate(&mut state, traj.dt, n_steps, |k, s| {
        if k % stride == 0 || k == n_steps {
            let check = recorded.is_multiple_of(positivity_every) || k == n_steps;
            out.record(k as f64 * traj.dt, s, check);
            recorded += 1;
        }
    })?;
    Ok(out)
}

/// `I_P(T_L) = ∫₀^{T_L} p_sink dt` with tangents w.r.t. the parameters
/// seeded in `model`, starting from the photon state.
pub fn objective_ip(model: &BoundModel, t_l: f64, dt: f64) -> Result<DiffScalar> {
    let initial = DensityMatrix::initial(model.basis, model.width);
    objective_ip_from(model, &initial, t_l, dt)
}

pub fn objective_ip_from(model: &BoundModel, initial: &DensityMatrix, t_l: f64, dt: f64) -> Result<DiffScalar> {
    let n_steps = step_count(dt, t_l)?;
    let mut prop = Propagator::new(model.clone());
    let mut state = AugmentedState::new(initial.with_width(model.width));
    prop.integrate(&mut state, dt, n_steps, |_, _| {})?;
    Ok(state.integral())
}

/// Value-only `I_P(T_L)` for a config.
pub fn integrated_sink(config: &ModelConfig, t_l: f64, dt: f64) -> Result<f64> {
    config.validate()?;
    Ok(objective_ip(&BoundModel::constant(config), t_l, dt)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    pub dt: f64,
    pub coarse: f64,
    pub fine: f64,
    pub rel_diff: f64,
    pub converged: bool,
}

/// Compare `I_P(T_L)` at `dt` and `dt / 2`.
pub fn dt_convergence(config: &ModelConfig, t_l: f64, dt: f64) -> Result<ConvergenceReport> {
    let coarse = integrated_sink(config, t_l, dt)?;
    let fine = integrated_sink(config, t_l, 0.5 * dt)?;
    let scale = coarse.abs().max(fine.abs());
    let rel_diff = if scale == 0.0 {
        0.0
    } else {
        (coarse - fine).abs() / scale
    };
    Ok(ConvergenceReport {
        dt,
        coarse,
        fine,
        rel_diff,
        converged: rel_diff.is_finite() && rel_diff < CONVERGENCE_TOLERANCE,
    })
}
