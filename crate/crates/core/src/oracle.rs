//! Brute-force Hamiltonian on the full `2^N` spin Hilbert space.
//!
//! Built from explicit spin-1/2 operators, independently of the
//! single-excitation formulas in [`crate::chain`], and used to check them.
//! Basis state bits: bit `i - 1` set means site `i` is spin up (excited).

use nalgebra::DMatrix;

use crate::chain::{build_couplings, build_single_excitation_hamiltonian, ChainSpec, HamiltonianMatrix};
use crate::error::{Error, Result};

pub const MAX_ORACLE_SITES: usize = 12;

type Op2 = [[f64; 2]; 2];

// Index 0 = down, 1 = up. S^y is complex; i S^y is real and
// S^y (x) S^y = -(i S^y) (x) (i S^y).
const SX: Op2 = [[0.0, 0.5], [0.5, 0.0]];
const ISY: Op2 = [[0.0, 0.5], [-0.5, 0.0]];
const SZ: Op2 = [[-0.5, 0.0], [0.0, 0.5]];

/// Dense real Hamiltonian on all `2^N` spin configurations.
#[derive(Debug, Clone)]
pub struct FullSpaceHamiltonian {
    pub n_sites: usize,
    pub entries: DMatrix<f64>,
}

fn bit(state: usize, site0: usize) -> usize {
    (state >> site0) & 1
}

/// Adds `coef * (A_i (x) B_j)` acting on sites `i`, `j` (0-based) to `h`.
fn add_pair_operator(h: &mut DMatrix<f64>, n: usize, i: usize, j: usize, a: &Op2, b: &Op2, coef: f64) {
    let mask = !((1usize << i) | (1usize << j));
    for col in 0..(1usize << n) {
        let (ci, cj) = (bit(col, i), bit(col, j));
        for ri in 0..2 {
            let ai = a[ri][ci];
            if ai == 0.0 {
                continue;
            }
            for rj in 0..2 {
                let bj = b[rj][cj];
                if bj == 0.0 {
                    continue;
                }
                let row = (col & mask) | (ri << i) | (rj << j);
                h[(row, col)] += coef * ai * bj;
            }
        }
    }
}

/// `H = sum_{i<j} J_ij (S_i . S_j - 3 S^z_i S^z_j)` on the full space.
pub fn build_full_space_hamiltonian(spec: &ChainSpec) -> Result<FullSpaceHamiltonian> {
    let n = spec.n_sites;
    if n > MAX_ORACLE_SITES {
        return Err(Error::TooLarge { n, max: MAX_ORACLE_SITES });
    }
    let table = build_couplings(spec)?;
    let dim = 1usize << n;
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..n {
        for j in i + 1..n {
            let coupling = table.get(i + 1, j + 1);
            if coupling == 0.0 {
                continue;
            }
            add_pair_operator(&mut h, n, i, j, &SX, &SX, coupling);
            add_pair_operator(&mut h, n, i, j, &ISY, &ISY, -coupling);
            add_pair_operator(&mut h, n, i, j, &SZ, &SZ, -2.0 * coupling);
        }
    }
    Ok(FullSpaceHamiltonian { n_sites: n, entries: h })
}

impl FullSpaceHamiltonian {
    /// Total magnetization `M = sum_i S^z_i` of a basis state.
    pub fn magnetization(&self, state: usize) -> f64 {
        state.count_ones() as f64 - 0.5 * self.n_sites as f64
    }

    /// Largest entry of `[H, M]`; zero when `H` conserves magnetization.
    pub fn magnetization_commutator_norm(&self) -> f64 {
        let dim = self.entries.nrows();
        let mut worst = 0.0f64;
        for col in 0..dim {
            let m_col = self.magnetization(col);
            for row in 0..dim {
                let v = self.entries[(row, col)] * (m_col - self.magnetization(row));
                worst = worst.max(v.abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries == self.entries.transpose()
    }
}

/// Extracts the one-flipped-spin block, restricted to the occupied sites of
/// `spec`, after checking that the whole single-excitation sector is exactly
/// decoupled from every other sector.
pub fn project_to_single_excitation(
    full: &FullSpaceHamiltonian,
    spec: &ChainSpec,
) -> Result<HamiltonianMatrix> {
    let n = full.n_sites;
    if n != spec.n_sites {
        return Err(Error::invalid(
            "n_sites",
            format!("full-space matrix has {n} sites, spec has {}", spec.n_sites),
        ));
    }
    let dim = 1usize << n;
    for site0 in 0..n {
        let col = 1usize << site0;
        for row in 0..dim {
            if row.count_ones() == 1 {
                continue;
            }
            for (r, c) in [(row, col), (col, row)] {
                let v = full.entries[(r, c)];
                if v != 0.0 {
                    return Err(Error::Inconsistent {
                        row: r,
                        col: c,
                        detail: format!("single-excitation sector leaks into other sectors ({v:e})"),
                    });
                }
            }
        }
    }
    let sites = spec.occupied_sites();
    let block = DMatrix::from_fn(sites.len(), sites.len(), |a, b| {
        full.entries[(1usize << (sites[a] - 1), 1usize << (sites[b] - 1))]
    });
    HamiltonianMatrix::with_sites(block, sites)
}

/// Outcome of comparing the direct builder against the full-space oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    /// Constant diagonal offset removed before comparing (mean difference).
    pub shift: f64,
    pub max_deviation: f64,
    /// Matrix position of `max_deviation`.
    pub worst: (usize, usize),
    pub dim: usize,
}

impl OracleComparison {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_deviation <= tol
    }
}

/// Compares two single-excitation matrices after aligning them by one global
/// diagonal shift.
pub fn compare_up_to_shift(direct: &HamiltonianMatrix, oracle: &HamiltonianMatrix) -> Result<OracleComparison> {
    if direct.basis_sites != oracle.basis_sites {
        return Err(Error::invalid("basis_sites", "direct and oracle bases differ"));
    }
    let dim = direct.dim();
    let shift = (0..dim)
        .map(|k| oracle.entries[(k, k)] - direct.entries[(k, k)])
        .sum::<f64>()
        / dim as f64;
    let mut max_deviation = 0.0f64;
    let mut worst = (0, 0);
    for r in 0..dim {
        for c in 0..dim {
            let expected = direct.entries[(r, c)] + if r == c { shift } else { 0.0 };
            let dev = (oracle.entries[(r, c)] - expected).abs();
            if dev > max_deviation {
                max_deviation = dev;
                worst = (r, c);
            }
        }
    }
    Ok(OracleComparison { shift, max_deviation, worst, dim })
}

/// Builds both routes for `spec` and compares them.
pub fn oracle_check(spec: &ChainSpec) -> Result<OracleComparison> {
    let full = build_full_space_hamiltonian(spec)?;
    let block = project_to_single_excitation(&full, spec)?;
    let direct = build_single_excitation_hamiltonian(spec)?;
    compare_up_to_shift(&direct, &block)
}
