//! Chain-level experiments: fidelity traces, size sweeps, eigenvector and
//! on-site energy dumps, for complete and double-hole chains.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;

use crate::chain::{build_single_excitation_hamiltonian, ChainSpec};
use crate::error::{Error, Result};
use crate::spectral::{eigendecompose, gap_delta12, projections, SpectralData};
use crate::transfer::{fidelity_trace, find_transfer_event, Channel, FidelityTrace, PeakSearch, TransferReport};

pub const DEFAULT_WINDOW_FACTOR: f64 = 3.0;

/// Which sites are removed from an `N`-site chain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    Complete,
    /// Sites 2 and `N-1` removed.
    DoubleHole,
    Custom(BTreeSet<usize>),
}

impl Variant {
    pub fn label(&self) -> &'static str {
        match self {
            Variant::Complete => "complete",
            Variant::DoubleHole => "dh",
            Variant::Custom(_) => "custom",
        }
    }

    pub fn spec(&self, n_sites: usize, nu: f64) -> Result<ChainSpec> {
        match self {
            Variant::Complete => ChainSpec::new(n_sites, nu),
            Variant::DoubleHole => ChainSpec::double_hole(n_sites, nu),
            Variant::Custom(holes) => ChainSpec::new(n_sites, nu)?.with_holes(holes.iter().copied()),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Short identifier for a chain, e.g. `n=50,nu=3,holes=2;49`.
pub fn spec_id(spec: &ChainSpec) -> String {
    let holes: Vec<String> = spec.holes.iter().map(|h| h.to_string()).collect();
    format!(
        "n={},nu={},holes={},s={},r={}",
        spec.n_sites,
        spec.nu,
        holes.join(";"),
        spec.sender,
        spec.receiver
    )
}

fn decompose(spec: &ChainSpec) -> Result<SpectralData> {
    eigendecompose(&build_single_excitation_hamiltonian(spec)?)
}

/// Fidelity on `samples` evenly spaced times in `[0, t_max]`.
pub fn run_fidelity_trace(spec: &ChainSpec, t_max: f64, samples: usize) -> Result<FidelityTrace> {
    if samples < 2 {
        return Err(Error::invalid("samples", format!("need >= 2, got {samples}")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::invalid("t_max", format!("must be positive, got {t_max}")));
    }
    let sd = decompose(spec)?;
    let ps = projections(&sd, spec.sender, spec.receiver)?;
    let last = (samples - 1) as f64;
    let times = (0..samples).map(|k| t_max * k as f64 / last).collect();
    fidelity_trace(&sd, &ps, times, spec_id(spec))
}

/// Everything one sweep row reports about a chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainMetrics {
    pub report: TransferReport,
    pub delta12: f64,
    pub f_m: f64,
    pub gamma1_sq: f64,
    pub gamma2_sq: f64,
}

/// Transfer event over `[0, window_factor * t_ideal]` plus spectral summary.
pub fn analyze(spec: &ChainSpec, window_factor: f64, search: &PeakSearch) -> Result<ChainMetrics> {
    if !(window_factor > 0.0 && window_factor.is_finite()) {
        return Err(Error::invalid("window_factor", format!("must be positive, got {window_factor}")));
    }
    let sd = decompose(spec)?;
    let ps = projections(&sd, spec.sender, spec.receiver)?;
    let channel = Channel::of(spec);
    let window = window_factor * channel.t_ideal()?;
    let report = find_transfer_event(&sd, &channel, window, search)?;
    Ok(ChainMetrics {
        report,
        delta12: gap_delta12(&sd)?,
        f_m: ps.f_m(),
        gamma1_sq: ps.entries[0].gamma_sq,
        gamma2_sq: ps.entries[1].gamma_sq,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRequest {
    pub n_values: Vec<usize>,
    pub nu: f64,
    pub variants: Vec<Variant>,
    pub window_factor: f64,
    pub coarse_steps: usize,
}

impl SweepRequest {
    pub fn new(n_values: Vec<usize>, nu: f64, variants: Vec<Variant>) -> Self {
        SweepRequest {
            n_values,
            nu,
            variants,
            window_factor: DEFAULT_WINDOW_FACTOR,
            coarse_steps: PeakSearch::default().coarse_steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(Error::invalid("n_values", "empty"));
        }
        if self.variants.is_empty() {
            return Err(Error::invalid("variant", "no variant requested"));
        }
        if self.variants.contains(&Variant::DoubleHole) {
            if let Some(&n) = self.n_values.iter().find(|&&n| n < 5) {
                return Err(Error::invalid("n_values", format!("double-hole chain needs N >= 5, got {n}")));
            }
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n < 2) {
            return Err(Error::invalid("n_values", format!("need N >= 2, got {n}")));
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::invalid("nu", format!("exponent must be positive, got {}", self.nu)));
        }
        if !(self.window_factor.is_finite() && self.window_factor > 0.0) {
            return Err(Error::invalid("window_factor", format!("must be positive, got {}", self.window_factor)));
        }
        if self.coarse_steps < 1000 {
            return Err(Error::invalid("coarse_steps", format!("need >= 1000, got {}", self.coarse_steps)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub variant: Variant,
    pub outcome: Result<ChainMetrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub nu: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn get(&self, n: usize, variant: &Variant) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.n == n && &r.variant == variant)
    }
}

/// Runs every `(N, variant)` pair independently and in parallel. Failed rows
/// keep their error; rows come back sorted by `(N, variant)`.
pub fn run_sweep(req: &SweepRequest) -> Result<SweepResult> {
    req.validate()?;
    let search = PeakSearch::with_steps(req.coarse_steps);
    let mut jobs: Vec<(usize, Variant)> = Vec::new();
    for &n in &req.n_values {
        for v in &req.variants {
            if !jobs.contains(&(n, v.clone())) {
                jobs.push((n, v.clone()));
            }
        }
    }
    jobs.sort();
    let rows = jobs
        .into_par_iter()
        .map(|(n, variant)| {
            let outcome = variant
                .spec(n, req.nu)
                .and_then(|spec| analyze(&spec, req.window_factor, &search));
            SweepRow { n, variant, outcome }
        })
        .collect();
    Ok(SweepResult { nu: req.nu, rows })
}

/// Eigenvector components `<lambda_j|i>` for every chain site; `None` on holes.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvectorTable {
    /// 1-based eigenvector indices (ascending energy).
    pub j_list: Vec<usize>,
    pub rows: Vec<(usize, Vec<Option<f64>>)>,
}

pub fn dump_eigenvector_components(spec: &ChainSpec, j_list: &[usize]) -> Result<EigenvectorTable> {
    let sd = decompose(spec)?;
    if j_list.is_empty() {
        return Err(Error::invalid("j", "no eigenvector requested"));
    }
    if let Some(&j) = j_list.iter().find(|&&j| j < 1 || j > sd.dim()) {
        return Err(Error::invalid("j", format!("eigenvector {j} outside [1, {}]", sd.dim())));
    }
    let rows = (1..=spec.n_sites)
        .map(|site| (site, j_list.iter().map(|&j| sd.component(j - 1, site)).collect()))
        .collect();
    Ok(EigenvectorTable { j_list: j_list.to_vec(), rows })
}

/// `H_ii` for each occupied site; with `shifted`, the minimum is moved to 0.
pub fn dump_onsite_energies(spec: &ChainSpec, shifted: bool) -> Result<Vec<(usize, f64)>> {
    let h = build_single_excitation_hamiltonian(spec)?;
    let diag = if shifted { h.shifted_diagonal() } else { h.diagonal() };
    Ok(h.basis_sites.iter().copied().zip(diag).collect())
}
