//! Chain geometry, power-law couplings and the single-excitation Hamiltonian.
//!
//! Sites are 1-based throughout, matching the usual labelling of a chain of
//! `N` spins. The Hamiltonian is
//!
//! ```text
//! H = sum_{i<j} J_ij (S_i . S_j - 3 S^z_i S^z_j),   J_ij = C / (a |i - j|)^nu
//! ```
//!
//! summed over unordered pairs, with `C = 2 a^nu E_nn` so that the
//! nearest-neighbour hopping element `<i|H|i+1>` equals `E_nn`.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// One experiment instance: geometry, coupling exponent, removed sites and
/// the sender/receiver pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub n_sites: usize,
    pub nu: f64,
    /// Sites whose couplings are switched off. Must lie in `[2, N-1]`.
    pub holes: BTreeSet<usize>,
    pub sender: usize,
    pub receiver: usize,
    pub lattice_spacing: f64,
    /// Nearest-neighbour hopping element, the unit of energy.
    pub nn_energy: f64,
}

impl ChainSpec {
    /// A complete chain with sender at site 1 and receiver at site `N`.
    pub fn new(n_sites: usize, nu: f64) -> Result<Self> {
        let spec = ChainSpec {
            n_sites,
            nu,
            holes: BTreeSet::new(),
            sender: 1,
            receiver: n_sites,
            lattice_spacing: 1.0,
            nn_energy: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The double-hole chain: sites 2 and `N-1` removed.
    pub fn double_hole(n_sites: usize, nu: f64) -> Result<Self> {
        if n_sites < 5 {
            return Err(Error::invalid(
                "n_sites",
                format!("double-hole chain needs N >= 5, got {n_sites}"),
            ));
        }
        Self::new(n_sites, nu)?.with_holes([2, n_sites - 1])
    }

    pub fn with_holes(mut self, holes: impl IntoIterator<Item = usize>) -> Result<Self> {
        self.holes = holes.into_iter().collect();
        self.validate()?;
        Ok(self)
    }

    pub fn with_endpoints(mut self, sender: usize, receiver: usize) -> Result<Self> {
        self.sender = sender;
        self.receiver = receiver;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites;
        if n < 2 {
            return Err(Error::invalid("n_sites", format!("need N >= 2, got {n}")));
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::invalid("nu", format!("exponent must be positive, got {}", self.nu)));
        }
        if !(self.lattice_spacing.is_finite() && self.lattice_spacing > 0.0) {
            return Err(Error::invalid(
                "lattice_spacing",
                format!("must be positive, got {}", self.lattice_spacing),
            ));
        }
        if !(self.nn_energy.is_finite() && self.nn_energy > 0.0) {
            return Err(Error::invalid(
                "nn_energy",
                format!("must be positive, got {}", self.nn_energy),
            ));
        }
        for (field, site) in [("sender", self.sender), ("receiver", self.receiver)] {
            if !(1..=n).contains(&site) {
                return Err(Error::invalid(field, format!("site {site} outside [1, {n}]")));
            }
            if self.holes.contains(&site) {
                return Err(Error::invalid(field, format!("site {site} is a hole")));
            }
        }
        if self.sender == self.receiver {
            return Err(Error::invalid("receiver", "must differ from sender"));
        }
        if let Some(&h) = self.holes.iter().find(|&&h| h < 2 || h + 1 > n) {
            return Err(Error::invalid("holes", format!("hole {h} outside [2, {}]", n - 1)));
        }
        Ok(())
    }

    /// `C = 2 a^nu E_nn`.
    pub fn coupling_constant(&self) -> f64 {
        2.0 * self.lattice_spacing.powf(self.nu) * self.nn_energy
    }

    /// Occupied sites in ascending order.
    pub fn occupied_sites(&self) -> Vec<usize> {
        (1..=self.n_sites).filter(|s| !self.holes.contains(s)).collect()
    }

    /// Sender-receiver separation in lattice units.
    pub fn distance(&self) -> usize {
        self.sender.abs_diff(self.receiver)
    }

    pub fn mirror(&self, site: usize) -> usize {
        self.n_sites + 1 - site
    }

    /// True when holes and endpoints are invariant under `i -> N + 1 - i`.
    pub fn is_mirror_symmetric(&self) -> bool {
        self.mirror(self.sender) == self.receiver
            && self.holes.iter().all(|&h| self.holes.contains(&self.mirror(h)))
    }
}

/// Symmetric table of pair couplings `J_ij`, zero on the diagonal and on every
/// row or column belonging to a hole.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTable {
    n_sites: usize,
    values: DMatrix<f64>,
}

impl CouplingTable {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Coupling between 1-based sites `i` and `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i - 1, j - 1)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Ground-state energy with every spin down, `-(1/2) sum_{k<l} J_kl`.
    pub fn ground_energy(&self) -> f64 {
        let n = self.n_sites;
        let mut sum = 0.0;
        for k in 0..n {
            for l in k + 1..n {
                sum += self.values[(k, l)];
            }
        }
        -0.5 * sum
    }

    /// `sum_{k != i} J_ik` for 1-based `i`.
    ///
    /// Accumulated by increasing distance, left and right partners added as
    /// a pair, so mirror-image sites get bit-identical sums.
    pub fn row_sum(&self, i: usize) -> f64 {
        let i = i - 1;
        let n = self.n_sites;
        let mut sum = 0.0;
        for d in 1..n {
            let left = if i >= d { self.values[(i, i - d)] } else { 0.0 };
            let right = if i + d < n { self.values[(i, i + d)] } else { 0.0 };
            sum += left + right;
        }
        sum
    }
}

pub fn build_couplings(spec: &ChainSpec) -> Result<CouplingTable> {
    spec.validate()?;
    let n = spec.n_sites;
    let c = spec.coupling_constant();
    let a = spec.lattice_spacing;
    let mut values = DMatrix::zeros(n, n);
    for i in 1..=n {
        if spec.holes.contains(&i) {
            continue;
        }
        for j in i + 1..=n {
            if spec.holes.contains(&j) {
                continue;
            }
            let j_ij = c / (a * (j - i) as f64).powf(spec.nu);
            values[(i - 1, j - 1)] = j_ij;
            values[(j - 1, i - 1)] = j_ij;
        }
    }
    Ok(CouplingTable { n_sites: n, values })
}

/// Real symmetric Hamiltonian block together with the chain site each row
/// stands for.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    pub entries: DMatrix<f64>,
    pub basis_sites: Vec<usize>,
}

impl HamiltonianMatrix {
    /// Wraps a matrix whose rows map to sites `1..=dim`.
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        let sites = (1..=entries.nrows()).collect();
        Self::with_sites(entries, sites)
    }

    pub fn with_sites(entries: DMatrix<f64>, basis_sites: Vec<usize>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::invalid(
                "hamiltonian",
                format!("need a non-empty square matrix, got {}x{}", entries.nrows(), entries.ncols()),
            ));
        }
        if basis_sites.len() != entries.nrows() {
            return Err(Error::invalid(
                "basis_sites",
                format!("{} sites for a {}-dim matrix", basis_sites.len(), entries.nrows()),
            ));
        }
        Ok(HamiltonianMatrix { entries, basis_sites })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Row index of a 1-based chain site.
    pub fn index_of(&self, site: usize) -> Option<usize> {
        self.basis_sites.iter().position(|&s| s == site)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.entries.diagonal().iter().copied().collect()
    }

    /// Diagonal with its minimum subtracted, so the lowest on-site energy is 0.
    pub fn shifted_diagonal(&self) -> Vec<f64> {
        let d = self.diagonal();
        let min = d.iter().copied().fold(f64::INFINITY, f64::min);
        d.into_iter().map(|x| x - min).collect()
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }
}

fn assemble(table: &CouplingTable, sites: &[usize]) -> HamiltonianMatrix {
    let dim = sites.len();
    let e_ground = table.ground_energy();
    let mut h = DMatrix::zeros(dim, dim);
    for (a, &i) in sites.iter().enumerate() {
        h[(a, a)] = e_ground + table.row_sum(i);
        for (b, &j) in sites.iter().enumerate().skip(a + 1) {
            let hop = 0.5 * table.get(i, j);
            h[(a, b)] = hop;
            h[(b, a)] = hop;
        }
    }
    HamiltonianMatrix { entries: h, basis_sites: sites.to_vec() }
}

/// Hamiltonian in the one-flipped-spin basis `|j>`, hole sites dropped.
///
/// Off-diagonal `H_ij = J_ij / 2`; diagonal `H_ii = E_g + sum_{k != i} J_ik`.
pub fn build_single_excitation_hamiltonian(spec: &ChainSpec) -> Result<HamiltonianMatrix> {
    let table = build_couplings(spec)?;
    Ok(assemble(&table, &spec.occupied_sites()))
}

/// Same as [`build_single_excitation_hamiltonian`] but keeps the decoupled
/// hole rows, giving an `N x N` matrix.
pub fn build_single_excitation_with_hole_rows(spec: &ChainSpec) -> Result<HamiltonianMatrix> {
    let table = build_couplings(spec)?;
    let all: Vec<usize> = (1..=spec.n_sites).collect();
    Ok(assemble(&table, &all))
}
