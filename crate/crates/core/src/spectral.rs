//! Eigendecomposition of the single-excitation Hamiltonian and the
//! sender/receiver projections derived from it.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::chain::HamiltonianMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 10_000;
/// Eigen-residual target relative to the matrix norm.
const RESIDUAL_TOL: f64 = 1e-10;
const ORTHO_TOL: f64 = 1e-10;
/// Normalization sums of a projection set.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Ascending eigenvalues with orthonormal eigenvectors stored as columns.
///
/// Each eigenvector is signed so that its largest-magnitude component is
/// positive (first such component on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub basis_sites: Vec<usize>,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn index_of(&self, site: usize) -> Option<usize> {
        self.basis_sites.iter().position(|&s| s == site)
    }

    pub(crate) fn require_site(&self, field: &'static str, site: usize) -> Result<usize> {
        self.index_of(site)
            .ok_or_else(|| Error::invalid(field, format!("site {site} is not in the basis")))
    }

    /// `<i|lambda_j>` for 0-based eigenvector `j` and 1-based site `i`.
    pub fn component(&self, j: usize, site: usize) -> Option<f64> {
        self.index_of(site).map(|row| self.eigenvectors[(row, j)])
    }

    /// `V diag(E) V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, c)] * self.eigenvalues[c]);
        &scaled * v.transpose()
    }

    /// Same vectors with every eigenvalue moved by `offset`.
    pub fn shifted(&self, offset: f64) -> SpectralData {
        SpectralData {
            eigenvalues: self.eigenvalues.iter().map(|e| e + offset).collect(),
            ..self.clone()
        }
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Dense symmetric eigendecomposition with deterministic ordering and signs.
///
/// The matrix is centred on its mean diagonal before solving so the absolute
/// eigenvalue error scales with the spectral width, not with the (large)
/// ground-state offset.
pub fn eigendecompose(h: &HamiltonianMatrix) -> Result<SpectralData> {
    let dim = h.dim();
    let offset = h.trace() / dim as f64;
    let mut centred = h.entries.clone();
    for k in 0..dim {
        centred[(k, k)] -= offset;
    }
    let (values, raw) = if is_persymmetric(&centred) {
        solve_by_parity(&centred)?
    } else {
        solve_dense(centred.clone())?
    };

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut vectors = DMatrix::zeros(dim, dim);
    let mut centred_values = Vec::with_capacity(dim);
    for (col, &src) in order.iter().enumerate() {
        let mut v = raw.column(src).clone_owned();
        let mut lead = 0;
        for i in 1..dim {
            if v[i].abs() > v[lead].abs() {
                lead = i;
            }
        }
        if v[lead] < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(col, &v);
        centred_values.push(values[src]);
    }

    // Verify the solver against its own contract.
    let norm = max_abs(&centred).max(f64::MIN_POSITIVE);
    for (j, &e) in centred_values.iter().enumerate() {
        let v = vectors.column(j);
        let residual = (&centred * v - v * e).amax();
        if residual > RESIDUAL_TOL * norm.max(1.0) {
            return Err(Error::NoConvergence { dim, iterations: MAX_SWEEPS });
        }
    }
    let gram = vectors.transpose() * &vectors;
    for r in 0..dim {
        for c in 0..dim {
            let target = if r == c { 1.0 } else { 0.0 };
            if (gram[(r, c)] - target).abs() > ORTHO_TOL {
                return Err(Error::Inconsistent {
                    row: r,
                    col: c,
                    detail: format!("eigenvectors not orthonormal (gram {:e})", gram[(r, c)]),
                });
            }
        }
    }

    Ok(SpectralData {
        eigenvalues: centred_values.into_iter().map(|e| e + offset).collect(),
        eigenvectors: vectors,
        basis_sites: h.basis_sites.clone(),
    })
}

fn solve_dense(m: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let dim = m.nrows();
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::NoConvergence { dim, iterations: MAX_SWEEPS })?;
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

/// `m[i][j] == m[d-1-i][d-1-j]` bit for bit (mirror-symmetric chains).
fn is_persymmetric(m: &DMatrix<f64>) -> bool {
    let d = m.nrows();
    (0..d).all(|i| (0..d).all(|j| m[(i, j)] == m[(d - 1 - i, d - 1 - j)]))
}

/// Solves the even and odd blocks separately, so every eigenvector has exact
/// mirror parity even when an even/odd pair is nearly degenerate (end modes
/// of long chains split by far less than the solver's mixing tolerance).
fn solve_by_parity(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let d = m.nrows();
    let half = d / 2;
    let mid = (d % 2 == 1).then_some(half);
    let even_dim = half + mid.map_or(0, |_| 1);
    let r2 = std::f64::consts::SQRT_2;

    let mut even = DMatrix::zeros(even_dim, even_dim);
    let mut odd = DMatrix::zeros(half, half);
    for i in 0..half {
        for j in 0..half {
            even[(i, j)] = m[(i, j)] + m[(i, d - 1 - j)];
            odd[(i, j)] = m[(i, j)] - m[(i, d - 1 - j)];
        }
        if let Some(c) = mid {
            even[(i, half)] = r2 * m[(i, c)];
            even[(half, i)] = r2 * m[(c, i)];
        }
    }
    if let Some(c) = mid {
        even[(half, half)] = m[(c, c)];
    }

    let mut values = Vec::with_capacity(d);
    let mut vectors = DMatrix::zeros(d, d);
    let (ev, eu) = solve_dense(even)?;
    for (k, &e) in ev.iter().enumerate() {
        for i in 0..half {
            let x = eu[(i, k)] / r2;
            vectors[(i, k)] = x;
            vectors[(d - 1 - i, k)] = x;
        }
        if let Some(c) = mid {
            vectors[(c, k)] = eu[(half, k)];
        }
        values.push(e);
    }
    if half > 0 {
        let (ov, ou) = solve_dense(odd)?;
        for (k, &e) in ov.iter().enumerate() {
            let col = even_dim + k;
            for i in 0..half {
                let x = ou[(i, k)] / r2;
                vectors[(i, col)] = x;
                vectors[(d - 1 - i, col)] = -x;
            }
            values.push(e);
        }
    }
    Ok((values, vectors))
}

/// Per-eigenvector overlaps with the sender and receiver states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub sigma_abs: f64,
    /// 0 or pi for a real Hamiltonian.
    pub sigma_phase: f64,
    pub rho_abs: f64,
    pub rho_phase: f64,
    /// Weight of the eigenvector outside the sender and receiver sites.
    pub gamma_sq: f64,
}

impl Projection {
    /// Signed `<lambda|s>`.
    pub fn sigma(&self) -> f64 {
        self.sigma_abs * self.sigma_phase.cos()
    }

    /// Signed `<lambda|r>`.
    pub fn rho(&self) -> f64 {
        self.rho_abs * self.rho_phase.cos()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    pub sender: usize,
    pub receiver: usize,
    pub entries: Vec<Projection>,
}

impl ProjectionSet {
    pub fn sigma_sq_sum(&self) -> f64 {
        self.entries.iter().map(|p| p.sigma_abs * p.sigma_abs).sum()
    }

    pub fn rho_sq_sum(&self) -> f64 {
        self.entries.iter().map(|p| p.rho_abs * p.rho_abs).sum()
    }

    /// Largest deviation of `|sigma_j|^2 + |rho_j|^2 + |gamma_j|^2` from 1.
    pub fn per_vector_defect(&self) -> f64 {
        self.entries
            .iter()
            .map(|p| (p.sigma_abs * p.sigma_abs + p.rho_abs * p.rho_abs + p.gamma_sq - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Time-independent part of `|f(t)|^2`, `sum_j |sigma_j|^2 |rho_j|^2`.
    pub fn f_m(&self) -> f64 {
        self.entries
            .iter()
            .map(|p| p.sigma_abs * p.sigma_abs * p.rho_abs * p.rho_abs)
            .sum()
    }

    /// Largest violation of the three normalization identities.
    pub fn normalization_defect(&self) -> f64 {
        (self.sigma_sq_sum() - 1.0)
            .abs()
            .max((self.rho_sq_sum() - 1.0).abs())
            .max(self.per_vector_defect())
    }
}

fn phase_of(x: f64) -> f64 {
    if x < 0.0 {
        PI
    } else {
        0.0
    }
}

/// Projections of every eigenvector on `|sender>` and `|receiver>`.
///
/// Fails with [`Error::Inconsistent`] if the normalization sums drift past
/// [`NORMALIZATION_TOL`].
pub fn projections(sd: &SpectralData, sender: usize, receiver: usize) -> Result<ProjectionSet> {
    let s = sd.require_site("sender", sender)?;
    let r = sd.require_site("receiver", receiver)?;
    if s == r {
        return Err(Error::invalid("receiver", "must differ from sender"));
    }
    let dim = sd.dim();
    let entries = (0..dim)
        .map(|j| {
            let col = sd.eigenvectors.column(j);
            let gamma_sq = (0..dim)
                .filter(|&i| i != s && i != r)
                .map(|i| col[i] * col[i])
                .sum();
            Projection {
                sigma_abs: col[s].abs(),
                sigma_phase: phase_of(col[s]),
                rho_abs: col[r].abs(),
                rho_phase: phase_of(col[r]),
                gamma_sq,
            }
        })
        .collect();
    let set = ProjectionSet { sender, receiver, entries };
    let defect = set.normalization_defect();
    if defect > NORMALIZATION_TOL {
        return Err(Error::Inconsistent {
            row: s,
            col: r,
            detail: format!("projection normalization off by {defect:e}"),
        });
    }
    Ok(set)
}

/// `E_2 - E_1`.
pub fn gap_delta12(sd: &SpectralData) -> Result<f64> {
    if sd.dim() < 2 {
        return Err(Error::invalid("dim", format!("gap needs dim >= 2, got {}", sd.dim())));
    }
    Ok(sd.eigenvalues[1] - sd.eigenvalues[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_single_excitation_hamiltonian, ChainSpec};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn decompose(spec: &ChainSpec) -> SpectralData {
        eigendecompose(&build_single_excitation_hamiltonian(spec).unwrap()).unwrap()
    }

    #[test]
    fn two_by_two_analytic() {
        let d = -3.7;
        let h = HamiltonianMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[d, 1.0, 1.0, d])).unwrap();
        let sd = eigendecompose(&h).unwrap();
        assert!((sd.eigenvalues[0] - (d - 1.0)).abs() < 1e-14);
        assert!((sd.eigenvalues[1] - (d + 1.0)).abs() < 1e-14);
        // Tie in magnitude: first component is the lead, so it is positive.
        let v0 = sd.eigenvectors.column(0);
        let v1 = sd.eigenvectors.column(1);
        assert!((v0[0] - FRAC_1_SQRT_2).abs() < 1e-14 && (v0[1] + FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((v1[0] - FRAC_1_SQRT_2).abs() < 1e-14 && (v1[1] - FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((gap_delta12(&sd).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn identity_is_fully_degenerate() {
        let h = HamiltonianMatrix::from_matrix(DMatrix::identity(4, 4)).unwrap();
        let sd = eigendecompose(&h).unwrap();
        assert!(sd.eigenvalues.iter().all(|&e| (e - 1.0).abs() < 1e-15));
        for j in 0..4 {
            let col = sd.eigenvectors.column(j);
            let lead = col.iamax();
            assert!(col[lead] > 0.0);
        }
        assert_eq!(gap_delta12(&sd).unwrap(), 0.0);
    }

    #[test]
    fn decomposition_is_deterministic() {
        let spec = ChainSpec::double_hole(40, 3.0).unwrap();
        assert_eq!(decompose(&spec), decompose(&spec));
    }

    #[test]
    fn reconstruction_and_trace() {
        let spec = ChainSpec::new(30, 2.0).unwrap().with_holes([4, 27]).unwrap();
        let h = build_single_excitation_hamiltonian(&spec).unwrap();
        let sd = eigendecompose(&h).unwrap();
        let diff = (sd.reconstruct() - &h.entries).amax();
        assert!(diff <= 1e-9, "{diff}");
        let sum: f64 = sd.eigenvalues.iter().sum();
        assert!((sum - h.trace()).abs() <= 1e-9);
        assert!(sd.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn lowest_pair_localizes_on_the_ends() {
        let sd = decompose(&ChainSpec::new(10, 3.0).unwrap());
        for j in 0..2 {
            let col = sd.eigenvectors.column(j);
            let ends = col[0] * col[0] + col[9] * col[9];
            assert!(ends > 0.5, "j={j}: end weight {ends}");
            for i in 1..9 {
                assert!(col[i].abs() < col[0].abs());
            }
        }
    }

    #[test]
    fn two_spin_projections_are_ideal() {
        let spec = ChainSpec::new(4, 3.0).unwrap().with_holes([2, 3]).unwrap();
        let ps = projections(&decompose(&spec), 1, 4).unwrap();
        for p in &ps.entries {
            assert!((p.sigma_abs.powi(2) - 0.5).abs() < 1e-14);
            assert!((p.rho_abs.powi(2) - 0.5).abs() < 1e-14);
            assert!(p.gamma_sq.abs() < 1e-14);
        }
        assert!((ps.f_m() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn holes_reduce_channel_opacity() {
        let full = projections(&decompose(&ChainSpec::new(10, 3.0).unwrap()), 1, 10).unwrap();
        let dh = projections(&decompose(&ChainSpec::double_hole(10, 3.0).unwrap()), 1, 10).unwrap();
        for j in 0..2 {
            assert!(dh.entries[j].gamma_sq < full.entries[j].gamma_sq);
        }
    }

    #[test]
    fn mirror_chain_has_equal_end_projections_and_definite_parity() {
        for n in 4..=20 {
            for spec in [ChainSpec::new(n, 3.0).unwrap(), ChainSpec::new(n, 1.0).unwrap()] {
                let sd = decompose(&spec);
                let ps = projections(&sd, 1, n).unwrap();
                for p in &ps.entries {
                    assert!((p.sigma_abs - p.rho_abs).abs() < 1e-9, "n={n}");
                }
                let d = sd.dim();
                for j in 0..d {
                    let col = sd.eigenvectors.column(j);
                    let parity = if (col[0] - col[d - 1]).abs() < 1e-9 { 1.0 } else { -1.0 };
                    for i in 0..d {
                        assert!((col[i] - parity * col[d - 1 - i]).abs() < 1e-9, "n={n} j={j}");
                    }
                }
            }
        }
    }

    #[test]
    fn phases_are_zero_or_pi() {
        let sd = decompose(&ChainSpec::new(12, 2.0).unwrap().with_endpoints(2, 11).unwrap());
        let ps = projections(&sd, 2, 11).unwrap();
        for (j, p) in ps.entries.iter().enumerate() {
            assert!(p.sigma_phase == 0.0 || p.sigma_phase == PI);
            assert!(p.rho_phase == 0.0 || p.rho_phase == PI);
            assert_eq!(p.sigma(), sd.component(j, 2).unwrap());
            assert_eq!(p.rho(), sd.component(j, 11).unwrap());
        }
    }

    #[test]
    fn projection_errors() {
        let sd = decompose(&ChainSpec::double_hole(8, 3.0).unwrap());
        assert!(matches!(projections(&sd, 2, 8), Err(Error::Invalid { field: "sender", .. })));
        assert!(matches!(projections(&sd, 1, 9), Err(Error::Invalid { field: "receiver", .. })));
        let one = HamiltonianMatrix::from_matrix(DMatrix::from_element(1, 1, 2.0)).unwrap();
        assert!(gap_delta12(&eigendecompose(&one).unwrap()).is_err());
    }

    #[test]
    fn gap_of_fifty_site_chain_is_frozen() {
        let sd = decompose(&ChainSpec::new(50, 3.0).unwrap());
        let gap = gap_delta12(&sd).unwrap();
        assert!(gap > 0.0);
        // The gap is ~5e-6 against a bandwidth of ~10, so double precision
        // resolves it only to a few 1e-15 absolute.
        assert!((gap - GAP_N50_NU3).abs() <= 1e-8 * GAP_N50_NU3, "{gap:.17e}");
    }

    #[test]
    fn gap_agrees_with_full_space_route() {
        let spec = ChainSpec::new(10, 3.0).unwrap();
        let block = crate::oracle::project_to_single_excitation(
            &crate::oracle::build_full_space_hamiltonian(&spec).unwrap(),
            &spec,
        )
        .unwrap();
        let via_oracle = gap_delta12(&eigendecompose(&block).unwrap()).unwrap();
        let direct = gap_delta12(&decompose(&spec)).unwrap();
        assert!((via_oracle - direct).abs() <= 1e-12, "{via_oracle} vs {direct}");
        assert!((direct - 8.180_683_621_044_48e-4).abs() <= 1e-12);
    }

    // 40-digit reference eigensolve of the same matrix.
    const GAP_N50_NU3: f64 = 5.242_990_786_646_930e-6;
}
