//! Physical model: radiation mode, antenna qubit, transport network and sink,
//! restricted to the single-excitation sector.

mod hamiltonian;
mod network;

pub(crate) use hamiltonian::{add_anti_hermitian_part, add_product};
pub use hamiltonian::{hamiltonian, lindblad_rhs, BoundDriving, BoundModel, Dissipator, DualHamiltonian, HamEntry};
pub use network::{builtin_network, NetworkKind, NetworkSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bare antenna frequency; all energies are measured in this unit.
pub const OMEGA_A: f64 = 1.0;
pub const DEFAULT_LAMBDA_AR: f64 = 1.0;
pub const DEFAULT_LAMBDA_A1: f64 = 1.0;
pub const DEFAULT_DEPHASING: f64 = 0.1;
pub const DEFAULT_SINK_RATE: f64 = 0.05;
/// Radiation frequency that maximises the integrated sink population of the
/// undriven four-site chain.
pub const RESONANT_OMEGA_R: f64 = 0.264;
pub const OFF_RESONANT_OMEGA_R: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivingTerm {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl DrivingTerm {
    pub fn new(amplitude: f64, frequency: f64, phase: f64) -> Self {
        Self {
            amplitude,
            frequency,
            phase,
        }
    }
}

/// `base + Σ amplitude · sin(frequency · t + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingSpec {
    pub base: f64,
    #[serde(default)]
    pub terms: Vec<DrivingTerm>,
}

impl DrivingSpec {
    pub fn constant(base: f64) -> Self {
        Self {
            base,
            terms: Vec::new(),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.base
            + self
                .terms
                .iter()
                .map(|term| term.amplitude * (term.frequency * t + term.phase).sin())
                .sum::<f64>()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    fn validate(&self, field: &str) -> Result<()> {
        if !self.base.is_finite() {
            return Err(Error::config(format!("{field}.base"), "must be finite"));
        }
        for (i, term) in self.terms.iter().enumerate() {
            if ![term.amplitude, term.frequency, term.phase]
                .iter()
                .all(|x| x.is_finite())
            {
                return Err(Error::config(format!("{field}.terms[{i}]"), "must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub omega_r: f64,
    /// Antenna Bohr frequency ω_a(t).
    pub antenna_driving: DrivingSpec,
    /// Energy of the last network site ε_N(t).
    pub site_n_driving: DrivingSpec,
    pub lambda_ar: f64,
    pub lambda_a1: f64,
    /// Local dephasing rate λ_N.
    pub dephasing: f64,
    /// Transfer rate λ_sN from site N into the sink.
    pub sink_rate: f64,
    pub network: NetworkSpec,
}

impl ModelConfig {
    /// Undriven model with the reference rates.
    pub fn new(network: NetworkSpec, omega_r: f64) -> Self {
        let eps_n = *network.site_energies.last().expect("validated network is non-empty");
        Self {
            omega_r,
            antenna_driving: DrivingSpec::constant(OMEGA_A),
            site_n_driving: DrivingSpec::constant(eps_n),
            lambda_ar: DEFAULT_LAMBDA_AR,
            lambda_a1: DEFAULT_LAMBDA_A1,
            dephasing: DEFAULT_DEPHASING,
            sink_rate: DEFAULT_SINK_RATE,
            network,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.network.n_sites()
    }

    pub fn basis(&self) -> BasisMap {
        BasisMap::new(self.n_sites())
    }

    /// Replace the network, keeping ε_N(t) anchored to the new last-site energy.
    pub fn with_network(mut self, network: NetworkSpec) -> Self {
        self.site_n_driving.base = *network.site_energies.last().expect("non-empty network");
        self.network = network;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        for (name, v) in [
            ("omega_r", self.omega_r),
            ("lambda_ar", self.lambda_ar),
            ("lambda_a1", self.lambda_a1),
        ] {
            if !v.is_finite() {
                return Err(Error::config(name, "must be finite"));
            }
        }
        for (name, v) in [("lambda_n", self.dephasing), ("lambda_sn", self.sink_rate)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(
                    name,
                    format!("rate must be finite and non-negative, got {v}"),
                ));
            }
        }
        self.antenna_driving.validate("antenna_driving")?;
        self.site_n_driving.validate("site_n_driving")?;
        let eps_n = self.network.site_energies[self.n_sites() - 1];
        if self.site_n_driving.base != eps_n {
            return Err(Error::config(
                "site_n_driving.base",
                format!(
                    "must equal the last site energy {eps_n}, got {}",
                    self.site_n_driving.base
                ),
            ));
        }
        Ok(())
    }
}

/// Index layout of the single-excitation basis, dimension `N + 3`:
/// photon, excited antenna, network sites `1..=N`, excited sink.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisMap {
    n_sites: usize,
}

impl BasisMap {
    pub const RADIATION: usize = 0;
    pub const ANTENNA: usize = 1;

    pub fn new(n_sites: usize) -> Self {
        Self { n_sites }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.n_sites + 3
    }

    /// Basis index of network site `j` (one-based, `1..=N`).
    pub fn site(&self, j: usize) -> usize {
        debug_assert!((1..=self.n_sites).contains(&j));
        1 + j
    }

    pub fn last_site(&self) -> usize {
        self.site(self.n_sites)
    }

    pub fn sink(&self) -> usize {
        self.n_sites + 2
    }

    pub fn is_site(&self, index: usize) -> bool {
        (2..=self.n_sites + 1).contains(&index)
    }

    pub fn label(&self, index: usize) -> String {
        match index {
            Self::RADIATION => "p_rad".into(),
            Self::ANTENNA => "p_ant".into(),
            i if self.is_site(i) => format!("p_site_{}", i - 1),
            i if i == self.sink() => "p_sink".into(),
            i => panic!("index {i} outside basis of dimension {}", self.dim()),
        }
    }
}
