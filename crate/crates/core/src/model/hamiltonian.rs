use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{BasisMap, DrivingSpec, ModelConfig};
use crate::error::{Error, Result};
use crate::scalar::DiffScalar;

/// Driving whose base and term parameters may carry tangents.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundDriving {
    pub base: DiffScalar,
    /// `[amplitude, frequency, phase]` per harmonic.
    pub terms: Vec<[DiffScalar; 3]>,
}

impl BoundDriving {
    pub fn constant(spec: &DrivingSpec) -> Self {
        Self {
            base: spec.base.into(),
            terms: spec
                .terms
                .iter()
                .map(|t| [t.amplitude.into(), t.frequency.into(), t.phase.into()])
                .collect(),
        }
    }

    /// Value at `t`; adds the parameter derivatives into `tangents`.
    pub fn accumulate(&self, t: f64, tangents: &mut [f64]) -> f64 {
        let mut value = self.base.value;
        for (k, d) in tangents.iter_mut().enumerate() {
            *d += self.base.tangent(k);
        }
        for [amplitude, frequency, phase] in &self.terms {
            let (s, c) = (frequency.value * t + phase.value).sin_cos();
            let a = amplitude.value;
            value += a * s;
            for (k, d) in tangents.iter_mut().enumerate() {
                *d += amplitude.tangent(k) * s + a * c * (t * frequency.tangent(k) + phase.tangent(k));
            }
        }
        value
    }

    pub fn value(&self, t: f64) -> DiffScalar {
        let mut out = self.base.clone();
        for [amplitude, frequency, phase] in &self.terms {
            let arg = &frequency.scale(t) + phase;
            out += &(amplitude * &arg.sin());
        }
        out
    }
}

/// Model with every tunable parameter promoted to a [`DiffScalar`].
///
/// Fields that a strategy does not optimise hold constants, so the same
/// assembly code serves value-only and differentiated runs.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundModel {
    pub basis: BasisMap,
    pub omega_r: f64,
    pub antenna: BoundDriving,
    /// ε_N(t); its base stands in for the last entry of `site_energies`.
    pub site_n: BoundDriving,
    pub lambda_ar: DiffScalar,
    pub lambda_a1: DiffScalar,
    /// ε_1 … ε_{N-1}; the last site is driven by `site_n`.
    pub site_energies: Vec<DiffScalar>,
    /// Nonzero network couplings `(i, j, V_ij)`, zero-based sites, `i < j`.
    pub couplings: Vec<(usize, usize, f64)>,
    pub dephasing: f64,
    pub sink_rate: f64,
    /// Number of seeded parameters (0 for value-only runs).
    pub width: usize,
}

impl BoundModel {
    pub fn constant(config: &ModelConfig) -> Self {
        let n = config.n_sites();
        Self {
            basis: config.basis(),
            omega_r: config.omega_r,
            antenna: BoundDriving::constant(&config.antenna_driving),
            site_n: BoundDriving::constant(&config.site_n_driving),
            lambda_ar: config.lambda_ar.into(),
            lambda_a1: config.lambda_a1.into(),
            site_energies: config.network.site_energies[..n - 1]
                .iter()
                .map(|&e| e.into())
                .collect(),
            couplings: config.network.coupled_pairs(),
            dephasing: config.dephasing,
            sink_rate: config.sink_rate,
            width: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn dissipator(&self) -> Dissipator {
        Dissipator::new(self.basis, self.dephasing, self.sink_rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamEntry {
    pub row: usize,
    pub col: usize,
    pub h: f64,
}

/// Sparse real-symmetric Hamiltonian and its parameter derivatives.
///
/// Each list holds every nonzero element explicitly (both triangles).
#[derive(Debug, Clone, Default)]
pub struct DualHamiltonian {
    pub dim: usize,
    pub value: Vec<HamEntry>,
    pub tangents: Vec<Vec<HamEntry>>,
    w_tan: Vec<f64>,
    e_tan: Vec<f64>,
}

impl DualHamiltonian {
    pub fn new(dim: usize, width: usize) -> Self {
        Self {
            dim,
            value: Vec::new(),
            tangents: vec![Vec::new(); width],
            w_tan: Vec::new(),
            e_tan: Vec::new(),
        }
    }

    fn clear(&mut self) {
        self.value.clear();
        self.tangents.iter_mut().for_each(Vec::clear);
    }

    fn push(&mut self, row: usize, col: usize, value: f64, tangent: impl Fn(usize) -> f64) {
        fn put(list: &mut Vec<HamEntry>, row: usize, col: usize, h: f64) {
            if h != 0.0 {
                list.push(HamEntry { row, col, h });
                if row != col {
                    list.push(HamEntry { row: col, col: row, h });
                }
            }
        }
        put(&mut self.value, row, col, value);
        for (k, list) in self.tangents.iter_mut().enumerate() {
            put(list, row, col, tangent(k));
        }
    }

    fn push_scalar(&mut self, row: usize, col: usize, h: &DiffScalar) {
        self.push(row, col, h.value, |k| h.tangent(k));
    }

    /// Assemble H(t) for `model`.
    pub fn fill(&mut self, model: &BoundModel, t: f64) {
        let width = model.width;
        debug_assert_eq!(self.tangents.len(), width);
        self.clear();
        let basis = model.basis;
        let mut w_tan = std::mem::take(&mut self.w_tan);
        let mut e_tan = std::mem::take(&mut self.e_tan);
        w_tan.clear();
        w_tan.resize(width, 0.0);
        e_tan.clear();
        e_tan.resize(width, 0.0);
        let w = model.antenna.accumulate(t, &mut w_tan);
        let eps_n = model.site_n.accumulate(t, &mut e_tan);

        self.push(BasisMap::RADIATION, BasisMap::RADIATION, model.omega_r - w, |k| {
            -w_tan[k]
        });
        self.push(BasisMap::ANTENNA, BasisMap::ANTENNA, w, |k| w_tan[k]);
        for (j, eps) in model.site_energies.iter().enumerate() {
            let idx = basis.site(j + 1);
            self.push(idx, idx, eps.value - w, |k| eps.tangent(k) - w_tan[k]);
        }
        let last = basis.last_site();
        self.push(last, last, eps_n - w, |k| e_tan[k] - w_tan[k]);
        self.push(basis.sink(), basis.sink(), -w, |k| -w_tan[k]);

        self.push_scalar(BasisMap::RADIATION, BasisMap::ANTENNA, &model.lambda_ar);
        self.push_scalar(BasisMap::ANTENNA, basis.site(1), &model.lambda_a1);
        for &(i, j, v) in &model.couplings {
            self.push(basis.site(i + 1), basis.site(j + 1), v, |_| 0.0);
        }
        self.w_tan = w_tan;
        self.e_tan = e_tan;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for e in &self.value {
            m[(e.row, e.col)] += e.h;
        }
        m
    }
}

/// `out += -i [H, rho]` for row-major `dim × dim` slices.
#[inline]
pub(crate) fn add_commutator(entries: &[HamEntry], rho: &[Complex64], out: &mut [Complex64], dim: usize) {
    for &HamEntry { row: a, col: c, h } in entries {
        // (H rho)[a, x] += h rho[c, x]
        let src = &rho[c * dim..(c + 1) * dim];
        let dst = &mut out[a * dim..(a + 1) * dim];
        for (o, r) in dst.iter_mut().zip(src) {
            // -i h r
            o.re += h * r.im;
            o.im -= h * r.re;
        }
        // (rho H)[x, c] += rho[x, a] h
        for x in 0..dim {
            let r = rho[x * dim + a];
            let o = &mut out[x * dim + c];
            o.re -= h * r.im;
            o.im += h * r.re;
        }
    }
}

/// `out += -i (M - M†)` with `M = Σ H rho` accumulated in `scratch`.
///
/// Equals `-i [H, rho]` when `rho` is Hermitian, at half the cost of the
/// general kernel. The result is Hermitian bit for bit.
#[inline]
pub(crate) fn add_product(entries: &[HamEntry], rho: &[Complex64], scratch: &mut [Complex64], dim: usize) {
    for &HamEntry { row: a, col: c, h } in entries {
        let src = &rho[c * dim..(c + 1) * dim];
        let dst = &mut scratch[a * dim..(a + 1) * dim];
        for (o, r) in dst.iter_mut().zip(src) {
            *o += r * h;
        }
    }
}

#[inline]
pub(crate) fn add_anti_hermitian_part(scratch: &[Complex64], out: &mut [Complex64], dim: usize) {
    for a in 0..dim {
        for b in a..dim {
            let d = scratch[a * dim + b] - scratch[b * dim + a].conj();
            // -i d
            let v = Complex64::new(d.im, -d.re);
            out[a * dim + b] += v;
            if a != b {
                out[b * dim + a] += v.conj();
            }
        }
    }
}

/// Dephasing of the network sites plus the one-way transfer from site N to
/// the sink, both in standard Lindblad form. With diagonal projectors and a
/// single rank-one jump both reduce to element-wise decay plus one inflow term.
#[derive(Debug, Clone)]
pub struct Dissipator {
    dim: usize,
    /// Decay rate of each element, row-major.
    decay: Vec<f64>,
    last_site: usize,
    sink: usize,
    sink_rate: f64,
}

impl Dissipator {
    pub fn new(basis: BasisMap, dephasing: f64, sink_rate: f64) -> Self {
        let dim = basis.dim();
        let site = |i: usize| if basis.is_site(i) { 1.0 } else { 0.0 };
        let at_n = |i: usize| if i == basis.last_site() { 1.0 } else { 0.0 };
        let mut decay = vec![0.0; dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                // P ρ P restores the diagonal of each dephased site
                let dephase = if a == b {
                    0.0
                } else {
                    0.5 * dephasing * (site(a) + site(b))
                };
                decay[a * dim + b] = dephase + 0.5 * sink_rate * (at_n(a) + at_n(b));
            }
        }
        Self {
            dim,
            decay,
            last_site: basis.last_site(),
            sink: basis.sink(),
            sink_rate,
        }
    }

    #[inline]
    pub(crate) fn apply(&self, rho: &[Complex64], out: &mut [Complex64]) {
        for ((o, r), g) in out.iter_mut().zip(rho).zip(&self.decay) {
            *o -= r * *g;
        }
        let n = self.last_site;
        out[self.sink * self.dim + self.sink] += rho[n * self.dim + n] * self.sink_rate;
    }
}

/// Value-only Hamiltonian H(t), a real symmetric `(N+3) × (N+3)` matrix.
pub fn hamiltonian(config: &ModelConfig, t: f64) -> Result<DMatrix<f64>> {
    config.validate()?;
    if !t.is_finite() {
        return Err(Error::config("t", "time must be finite"));
    }
    let model = BoundModel::constant(config);
    let mut ham = DualHamiltonian::new(model.dim(), 0);
    ham.fill(&model, t);
    Ok(ham.to_dense())
}

/// Value-only right-hand side of the master equation, dρ/dt at time `t`.
pub fn lindblad_rhs(config: &ModelConfig, t: f64, rho: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    config.validate()?;
    let model = BoundModel::constant(config);
    let dim = model.dim();
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::config(
            "rho",
            format!(
                "expected {dim}x{dim} density matrix, got {}x{}",
                rho.nrows(),
                rho.ncols()
            ),
        ));
    }
    let mut ham = DualHamiltonian::new(dim, 0);
    ham.fill(&model, t);
    let flat: Vec<Complex64> = (0..dim * dim).map(|k| rho[(k / dim, k % dim)]).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    add_commutator(&ham.value, &flat, &mut out, dim);
    model.dissipator().apply(&flat, &mut out);
    Ok(DMatrix::from_fn(dim, dim, |i, j| out[i * dim + j]))
}
