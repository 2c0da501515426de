//! Brute-force reference simulator on the full tensor-product space
//! radiation ⊗ antenna ⊗ network-with-vacuum ⊗ sink.
//!
//! Nothing here is shared with the reduced propagator except the RK4 stepper:
//! the Hamiltonian is assembled from ladder operators and every dissipator is
//! applied through its jump operator. Values only, no tangents.

use num_complex::Complex64;

use crate::dynamics::{step_count, Diagnostics, OdeState, Rk4, Trajectory, TrajectoryConfig};
use crate::error::{Error, Result};
use crate::model::ModelConfig;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default ceiling on the full-space dimension.
pub const DEFAULT_DIMENSION_CAP: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct FullSpaceConfig {
    pub model: ModelConfig,
    /// Oscillator levels kept, `|0⟩ … |n_max − 1⟩`.
    pub n_max: usize,
    pub dimension_cap: usize,
}

impl FullSpaceConfig {
    pub fn new(model: ModelConfig, n_max: usize) -> Self {
        Self {
            model,
            n_max,
            dimension_cap: DEFAULT_DIMENSION_CAP,
        }
    }

    pub fn dim(&self) -> usize {
        self.n_max * 2 * (self.model.n_sites() + 1) * 2
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n_max < 2 {
            return Err(Error::config("n_max", "oscillator truncation needs at least 2 levels"));
        }
        if self.dim() > self.dimension_cap {
            return Err(Error::DimensionOverflow {
                dimension: self.dim(),
                cap: self.dimension_cap,
            });
        }
        Ok(())
    }
}

/// Product-basis index of |n⟩_r ⊗ |a⟩_a ⊗ |ν⟩_net ⊗ |s⟩_s, with `a`, `s` in
/// {0 = ground, 1 = excited} and `ν = 0` the network vacuum.
#[derive(Debug, Clone, Copy)]
struct Layout {
    n_max: usize,
    n_net: usize,
}

impl Layout {
    fn dim(&self) -> usize {
        self.n_max * 2 * self.n_net * 2
    }

    fn index(&self, n: usize, a: usize, nu: usize, s: usize) -> usize {
        ((n * 2 + a) * self.n_net + nu) * 2 + s
    }

    fn states(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> + '_ {
        let (n_max, n_net) = (self.n_max, self.n_net);
        (0..n_max).flat_map(move |n| {
            (0..2).flat_map(move |a| (0..n_net).flat_map(move |nu| (0..2).map(move |s| (n, a, nu, s))))
        })
    }

    /// Single-excitation states in reduced-basis order.
    fn reduced_indices(&self) -> Vec<usize> {
        let mut out = vec![self.index(1, 0, 0, 0), self.index(0, 1, 0, 0)];
        out.extend((1..self.n_net).map(|j| self.index(0, 0, j, 0)));
        out.push(self.index(0, 0, 0, 1));
        out
    }
}

type Sparse = Vec<(usize, usize, f64)>;

/// Lindblad term for one jump operator `L`, with `L†L` precomputed.
#[derive(Debug, Clone)]
struct Jump {
    op: Sparse,
    op_dag_op: Sparse,
}

impl Jump {
    fn new(op: Sparse) -> Self {
        let mut op_dag_op = Vec::new();
        for &(x1, a, l1) in &op {
            for &(x2, b, l2) in &op {
                if x1 == x2 {
                    op_dag_op.push((a, b, l1 * l2));
                }
            }
        }
        Self { op, op_dag_op }
    }

    /// out += L ρ L† − ½ {L†L, ρ}
    fn apply(&self, rho: &[Complex64], out: &mut [Complex64], dim: usize) {
        for &(x, a, l1) in &self.op {
            for &(y, b, l2) in &self.op {
                out[x * dim + y] += rho[a * dim + b] * (l1 * l2);
            }
        }
        for &(a, b, k) in &self.op_dag_op {
            for y in 0..dim {
                out[a * dim + y] -= rho[b * dim + y] * (0.5 * k);
                out[y * dim + b] -= rho[y * dim + a] * (0.5 * k);
            }
        }
    }
}

struct FullGenerator {
    layout: Layout,
    model: ModelConfig,
    /// Time-independent part of H, both triangles.
    static_h: Sparse,
    jumps: Vec<Jump>,
}

impl FullGenerator {
    fn new(cfg: &FullSpaceConfig) -> Self {
        let model = cfg.model.clone();
        let n_sites = model.n_sites();
        let layout = Layout {
            n_max: cfg.n_max,
            n_net: n_sites + 1,
        };
        let mut static_h = Vec::new();
        let mut hop = |x: usize, y: usize, v: f64| {
            if v != 0.0 {
                static_h.push((x, y, v));
                static_h.push((y, x, v));
            }
        };
        for (n, a, nu, s) in layout.states() {
            let here = layout.index(n, a, nu, s);
            // λ_ar |e⟩⟨g| ⊗ a
            if a == 0 && n > 0 {
                hop(layout.index(n - 1, 1, nu, s), here, model.lambda_ar * (n as f64).sqrt());
            }
            // λ_a1 |e_a, 0⟩⟨g_a, 1|
            if a == 0 && nu == 1 {
                hop(layout.index(n, 1, 0, s), here, model.lambda_a1);
            }
            if nu > 0 {
                for mu in (nu + 1)..layout.n_net {
                    let v = model.network.couplings[(nu - 1, mu - 1)];
                    hop(layout.index(n, a, mu, s), here, v);
                }
            }
        }

        let mut jumps = Vec::new();
        let root_dephasing = model.dephasing.sqrt();
        for j in 1..layout.n_net {
            let op = layout
                .states()
                .filter(|&(_, _, nu, _)| nu == j)
                .map(|(n, a, nu, s)| {
                    let x = layout.index(n, a, nu, s);
                    (x, x, root_dephasing)
                })
                .collect();
            jumps.push(Jump::new(op));
        }
        // |e_s, 0⟩⟨g_s, N| on every radiation/antenna configuration
        let root_sink = model.sink_rate.sqrt();
        let mut sink = Vec::new();
        for n in 0..layout.n_max {
            for a in 0..2 {
                sink.push((layout.index(n, a, 0, 1), layout.index(n, a, n_sites, 0), root_sink));
            }
        }
        jumps.push(Jump::new(sink));

        Self {
            layout,
            model,
            static_h,
            jumps,
        }
    }

    fn diagonal_energy(&self, t: f64, (n, a, nu, _s): (usize, usize, usize, usize)) -> f64 {
        let omega_a = self.model.antenna_driving.value(t);
        let n_sites = self.model.n_sites();
        let network = match nu {
            0 => 0.0,
            j if j == n_sites => self.model.site_n_driving.value(t),
            j => self.model.network.site_energies[j - 1],
        };
        let antenna = if a == 1 { omega_a } else { -omega_a };
        self.model.omega_r * n as f64 + antenna + network
    }

    fn rhs(&self, t: f64, rho: &[Complex64], out: &mut [Complex64]) {
        let dim = self.layout.dim();
        out.fill(ZERO);
        let minus_i = Complex64::new(0.0, -1.0);
        let mut commutator = |x: usize, y: usize, h: f64| {
            // -i (H ρ - ρ H) contribution of the entry H[x, y] = h
            for c in 0..dim {
                out[x * dim + c] += minus_i * h * rho[y * dim + c];
                out[c * dim + y] -= minus_i * h * rho[c * dim + x];
            }
        };
        for (x, state) in self.layout.states().enumerate() {
            commutator(x, x, self.diagonal_energy(t, state));
        }
        for &(x, y, h) in &self.static_h {
            commutator(x, y, h);
        }
        for jump in &self.jumps {
            jump.apply(rho, out, dim);
        }
    }
}

#[derive(Debug, Clone)]
struct FullState {
    rho: Vec<Complex64>,
    integral: f64,
}

impl OdeState for FullState {
    fn assign_axpy(&mut self, base: &Self, alpha: f64, dir: &Self) {
        for ((o, b), d) in self.rho.iter_mut().zip(&base.rho).zip(&dir.rho) {
            *o = b + d * alpha;
        }
        self.integral = base.integral + alpha * dir.integral;
    }

    fn axpy(&mut self, alpha: f64, x: &Self) {
        for (o, v) in self.rho.iter_mut().zip(&x.rho) {
            *o += v * alpha;
        }
        self.integral += alpha * x.integral;
    }

    fn is_finite(&self) -> bool {
        self.integral.is_finite() && self.rho.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Full-space run projected onto the single-excitation states.
#[derive(Debug, Clone, PartialEq)]
pub struct FullSpaceTrajectory {
    /// Reduced-basis populations; `trace` holds the full-space trace.
    pub trajectory: Trajectory,
    /// Population outside the single-excitation sector at each record.
    pub leakage: Vec<f64>,
}

impl FullSpaceTrajectory {
    pub fn max_leakage(&self) -> f64 {
        self.leakage.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
    }
}

/// Evolve the photon-in-the-mode initial state on the full space.
pub fn full_space_evolve(cfg: &FullSpaceConfig, traj: &TrajectoryConfig) -> Result<FullSpaceTrajectory> {
    cfg.validate()?;
    let n_steps = step_count(traj.dt, traj.t_end)?;
    if traj.record_stride == 0 {
        return Err(Error::config("record_stride", "must be positive"));
    }
    let generator = FullGenerator::new(cfg);
    let layout = generator.layout;
    let dim = layout.dim();
    let reduced = layout.reduced_indices();
    let sink = layout.index(0, 0, 0, 1);

    let mut state = FullState {
        rho: vec![ZERO; dim * dim],
        integral: 0.0,
    };
    let start = layout.index(1, 0, 0, 0);
    state.rho[start * dim + start] = Complex64::new(1.0, 0.0);

    let mut out = FullSpaceTrajectory {
        trajectory: Trajectory {
            basis: cfg.model.basis(),
            times: Vec::new(),
            populations: Vec::new(),
            trace: Vec::new(),
            sink_integral: Vec::new(),
            diagnostics: Diagnostics::default(),
        },
        leakage: Vec::new(),
    };
    let mut record = |t: f64, s: &FullState| {
        let tr: f64 = (0..dim).map(|i| s.rho[i * dim + i].re).sum();
        let pops: Vec<f64> = reduced.iter().map(|&i| s.rho[i * dim + i].re).collect();
        let mut herm = 0.0f64;
        for a in 0..dim {
            for b in a..dim {
                herm = herm.max((s.rho[a * dim + b] - s.rho[b * dim + a].conj()).norm());
            }
        }
        let tj = &mut out.trajectory;
        tj.diagnostics.max_trace_error = tj.diagnostics.max_trace_error.max((tr - 1.0).abs());
        tj.diagnostics.max_hermiticity_error = tj.diagnostics.max_hermiticity_error.max(herm);
        out.leakage.push(tr - pops.iter().sum::<f64>());
        tj.times.push(t);
        tj.populations.push(pops);
        tj.trace.push(tr);
        tj.sink_integral.push(s.integral);
    };

    record(0.0, &state);
    let mut rk = Rk4::new(&state);
    let f = |t: f64, y: &FullState, dy: &mut FullState| {
        generator.rhs(t, &y.rho, &mut dy.rho);
        dy.integral = y.rho[sink * dim + sink].re;
    };
    for k in 1..=n_steps {
        let t = (k - 1) as f64 * traj.dt;
        rk.step(f, t, &mut state, traj.dt);
        if !state.is_finite() {
            return Err(Error::IntegrationDiverged { t: t + traj.dt });
        }
        if k % traj.record_stride == 0 || k == n_steps {
            record(k as f64 * traj.dt, &state);
        }
    }
    Ok(out)
}

/// Largest absolute difference between two population records on the same grid.
pub fn max_population_difference(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.times.len() != b.times.len() || a.times.iter().zip(&b.times).any(|(x, y)| (x - y).abs() > 1e-12) {
        return Err(Error::config("trajectory", "records are on different time grids"));
    }
    let mut worst = 0.0f64;
    for (pa, pb) in a.populations.iter().zip(&b.populations) {
        if pa.len() != pb.len() {
            return Err(Error::config("trajectory", "population vectors differ in length"));
        }
        for (x, y) in pa.iter().zip(pb) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_network, NetworkKind};

    fn nn4() -> ModelConfig {
        ModelConfig::new(builtin_network(NetworkKind::Nn, 4).unwrap(), 0.264)
    }

    #[test]
    fn dimension_formula() {
        assert_eq!(FullSpaceConfig::new(nn4(), 2).dim(), 40);
        assert_eq!(FullSpaceConfig::new(nn4(), 3).dim(), 60);
    }

    #[test]
    fn reduced_indices_are_distinct_single_excitation_states() {
        let layout = Layout { n_max: 3, n_net: 5 };
        let idx = layout.reduced_indices();
        assert_eq!(idx.len(), 7);
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 7);
        assert_eq!(layout.states().count(), layout.dim());
        for (k, (n, a, nu, s)) in layout.states().enumerate() {
            assert_eq!(layout.index(n, a, nu, s), k);
        }
    }

    #[test]
    fn truncation_and_cap_are_checked() {
        assert!(matches!(
            FullSpaceConfig::new(nn4(), 1).validate(),
            Err(Error::Config { field, .. }) if field == "n_max"
        ));
        let mut cfg = FullSpaceConfig::new(nn4(), 4);
        cfg.dimension_cap = 64;
        assert_eq!(cfg.validate(), Err(Error::DimensionOverflow { dimension: 80, cap: 64 }));
    }

    #[test]
    fn frozen_without_couplings_or_rates() {
        let mut model = nn4();
        model.lambda_ar = 0.0;
        model.lambda_a1 = 0.0;
        model.dephasing = 0.0;
        model.sink_rate = 0.0;
        model.network.couplings.fill(0.0);
        let out = full_space_evolve(&FullSpaceConfig::new(model, 2), &TrajectoryConfig::new(0.01, 2.0)).unwrap();
        for p in &out.trajectory.populations {
            assert_eq!(p[0], 1.0);
            assert!(p[1..].iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn jump_term_is_trace_preserving() {
        let dim = 3;
        let jump = Jump::new(vec![(0, 2, 0.7), (1, 1, 0.2)]);
        let rho: Vec<Complex64> = (0..9)
            .map(|k| Complex64::new(k as f64 * 0.1, (k % 4) as f64 * 0.05))
            .collect();
        let mut out = vec![ZERO; 9];
        jump.apply(&rho, &mut out, dim);
        let tr: Complex64 = (0..dim).map(|i| out[i * dim + i]).sum();
        assert!(tr.norm() < 1e-15);
    }
}
