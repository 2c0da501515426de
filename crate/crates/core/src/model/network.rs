use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Site energies and symmetric hopping matrix of the transport network,
/// in units of the bare antenna frequency. The vacuum site is not stored here.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub label: String,
    pub site_energies: Vec<f64>,
    /// N×N, symmetric with zero diagonal.
    pub couplings: DMatrix<f64>,
}

impl NetworkSpec {
    pub fn new(label: impl Into<String>, site_energies: Vec<f64>, couplings: DMatrix<f64>) -> Result<Self> {
        let spec = Self {
            label: label.into(),
            site_energies,
            couplings,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn n_sites(&self) -> usize {
        self.site_energies.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites();
        if n == 0 {
            return Err(Error::config(
                "network.site_energies",
                "network needs at least one site",
            ));
        }
        if self.couplings.nrows() != n || self.couplings.ncols() != n {
            return Err(Error::config(
                "network.couplings",
                format!(
                    "expected {n}x{n} matrix, got {}x{}",
                    self.couplings.nrows(),
                    self.couplings.ncols()
                ),
            ));
        }
        if let Some(e) = self.site_energies.iter().find(|e| !e.is_finite()) {
            return Err(Error::config("network.site_energies", format!("non-finite energy {e}")));
        }
        for i in 0..n {
            if self.couplings[(i, i)] != 0.0 {
                return Err(Error::config(
                    "network.couplings",
                    format!("diagonal entry ({i}, {i}) must be zero; put site energies in site_energies"),
                ));
            }
            for j in (i + 1)..n {
                let (a, b) = (self.couplings[(i, j)], self.couplings[(j, i)]);
                if !a.is_finite() || a != b {
                    return Err(Error::config(
                        "network.couplings",
                        format!("entries ({i}, {j}) = {a} and ({j}, {i}) = {b} must be finite and equal"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Multiply every energy and coupling by `factor` (unit conversion).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            label: self.label.clone(),
            site_energies: self.site_energies.iter().map(|e| e * factor).collect(),
            couplings: &self.couplings * factor,
        }
    }

    /// Largest absolute energy or coupling.
    pub fn energy_span(&self) -> f64 {
        self.site_energies
            .iter()
            .chain(self.couplings.iter())
            .fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    /// Nonzero couplings with `i < j` (zero-based site indices).
    pub fn coupled_pairs(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n_sites();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.couplings[(i, j)];
                if v != 0.0 {
                    pairs.push((i, j, v));
                }
            }
        }
        pairs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkKind {
    /// Open chain with nearest-neighbour hopping.
    Nn,
    /// Eight sites, site 2 coupled to every other site.
    Star,
    /// Seven-site Fenna–Matthews–Olson complex.
    Fmo,
}

impl fmt::Display for NetworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NetworkKind::Nn => "nn",
            NetworkKind::Star => "star",
            NetworkKind::Fmo => "fmo",
        })
    }
}

impl FromStr for NetworkKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nn" => Ok(NetworkKind::Nn),
            "star" => Ok(NetworkKind::Star),
            "fmo" => Ok(NetworkKind::Fmo),
            other => Err(Error::config("network.kind", format!("unknown network kind '{other}'"))),
        }
    }
}

const UNIFORM_SITE_ENERGY: f64 = 0.5;
const STAR_HUB: usize = 1;

#[rustfmt::skip]
const FMO_HAMILTONIAN: [[f64; 7]; 7] = [
    [  65.7, -104.1,    5.1,   -4.3,    4.7,  -15.1,   -7.8],
    [-104.1,  -11.1,   32.6,    7.1,    5.4,    8.3,    0.8],
    [   5.1,   32.6,  -56.1,  -46.8,    1.0,   -8.1,    5.1],
    [  -4.3,    7.1,  -46.8,  -36.2,  -70.7,  -14.7,  -61.5],
    [   4.7,    5.4,    1.0,  -70.7,  -30.6,   89.7,   -2.5],
    [ -15.1,    8.3,   -8.1,  -14.7,   89.7,   55.7,   32.7],
    [  -7.8,    0.8,    5.1,  -61.5,   -2.5,   32.7,    4.2],
];

/// One of the reference networks.
pub fn builtin_network(kind: NetworkKind, n_sites: usize) -> Result<NetworkSpec> {
    match kind {
        NetworkKind::Nn => {
            if n_sites < 2 {
                return Err(Error::config("network.n_sites", "nn network needs at least 2 sites"));
            }
            let couplings = DMatrix::from_fn(n_sites, n_sites, |i, j| if i.abs_diff(j) == 1 { 1.0 } else { 0.0 });
            NetworkSpec::new(format!("nn{n_sites}"), vec![UNIFORM_SITE_ENERGY; n_sites], couplings)
        }
        NetworkKind::Star => {
            if n_sites != 8 {
                return Err(Error::config(
                    "network.n_sites",
                    format!("star network is defined for 8 sites, got {n_sites}"),
                ));
            }
            let couplings = DMatrix::from_fn(n_sites, n_sites, |i, j| {
                if i != j && (i == STAR_HUB || j == STAR_HUB) {
                    1.0
                } else {
                    0.0
                }
            });
            NetworkSpec::new("star8", vec![UNIFORM_SITE_ENERGY; n_sites], couplings)
        }
        NetworkKind::Fmo => {
            if n_sites != 7 {
                return Err(Error::config(
                    "network.n_sites",
                    format!("fmo network is defined for 7 sites, got {n_sites}"),
                ));
            }
            let energies = (0..7).map(|i| FMO_HAMILTONIAN[i][i]).collect();
            let couplings = DMatrix::from_fn(7, 7, |i, j| if i == j { 0.0 } else { FMO_HAMILTONIAN[i][j] });
            NetworkSpec::new("fmo7", energies, couplings)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nn_chain() {
        let net = builtin_network(NetworkKind::Nn, 4).unwrap();
        assert_eq!(net.site_energies, vec![0.5; 4]);
        for i in 0..4usize {
            for j in 0..4usize {
                let expected = if i.abs_diff(j) == 1 { 1.0 } else { 0.0 };
                assert_eq!(net.couplings[(i, j)], expected);
            }
        }
        assert_eq!(net.coupled_pairs().len(), 3);
    }

    #[test]
    fn star_hub_is_site_two() {
        let net = builtin_network(NetworkKind::Star, 8).unwrap();
        assert_eq!(net.site_energies, vec![0.5; 8]);
        for j in 0..8 {
            if j != 1 {
                assert_eq!(net.couplings[(1, j)], 1.0);
            }
        }
        assert_eq!(net.couplings[(0, 1)], 1.0);
        for i in 0..8 {
            for j in 0..8 {
                if i != 1 && j != 1 {
                    assert_eq!(net.couplings[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn fmo_entries() {
        let net = builtin_network(NetworkKind::Fmo, 7).unwrap();
        assert_eq!(net.site_energies[0], 65.7);
        assert_eq!(net.couplings[(0, 1)], -104.1);
        assert_eq!(net.couplings[(4, 5)], 89.7);
        assert_eq!(net.site_energies[6], 4.2);
        assert_eq!(net.couplings[(6, 6)], 0.0);
    }

    #[test]
    fn unsupported_sizes_name_the_field() {
        for (kind, n) in [(NetworkKind::Nn, 1), (NetworkKind::Star, 4), (NetworkKind::Fmo, 8)] {
            match builtin_network(kind, n) {
                Err(Error::Config { field, .. }) => assert_eq!(field, "network.n_sites"),
                other => panic!("expected config error, got {other:?}"),
            }
        }
    }

    #[test]
    fn rejects_asymmetric_couplings() {
        let mut v = DMatrix::zeros(2, 2);
        v[(0, 1)] = 1.0;
        assert!(NetworkSpec::new("bad", vec![0.0, 0.0], v).is_err());
        let mut d = DMatrix::zeros(2, 2);
        d[(1, 1)] = 0.3;
        assert!(NetworkSpec::new("bad", vec![0.0, 0.0], d).is_err());
        assert!(NetworkSpec::new("empty", vec![], DMatrix::zeros(0, 0)).is_err());
    }

    #[test]
    fn kind_parses_case_insensitively() {
        assert_eq!("FMO".parse::<NetworkKind>().unwrap(), NetworkKind::Fmo);
        assert!("ring".parse::<NetworkKind>().is_err());
    }
}
