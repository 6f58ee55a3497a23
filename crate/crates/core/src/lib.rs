//! Qubit transfer through finite ferromagnetic spin chains with power-law
//! long-range coupling.
//!
//! The single-excitation Hamiltonian is built in [`chain`], checked against a
//! brute-force `2^N` construction in [`oracle`], diagonalized in
//! [`spectral`], and evolved in [`transfer`]. [`experiments`] runs the
//! chain-level studies and [`csv`] serializes them.

pub mod chain;
pub mod csv;
pub mod error;
pub mod experiments;
pub mod oracle;
pub mod spectral;
pub mod transfer;

pub use chain::{
    build_couplings, build_single_excitation_hamiltonian, build_single_excitation_with_hole_rows, ChainSpec,
    CouplingTable, HamiltonianMatrix,
};
pub use error::{Error, Result};
pub use experiments::{
    analyze, dump_eigenvector_components, dump_onsite_energies, run_fidelity_trace, run_sweep, ChainMetrics,
    EigenvectorTable, SweepRequest, SweepResult, SweepRow, Variant, DEFAULT_WINDOW_FACTOR,
};
pub use oracle::{
    build_full_space_hamiltonian, oracle_check, project_to_single_excitation, FullSpaceHamiltonian,
    OracleComparison, MAX_ORACLE_SITES,
};
pub use spectral::{eigendecompose, gap_delta12, projections, Projection, ProjectionSet, SpectralData};
pub use transfer::{
    decompose_fm_ft, estimate_transfer_time, fidelity, find_transfer_event, ideal_transfer_time,
    propagator_amplitude, Channel, FidelityTrace, PeakSearch, Propagator, TransferReport,
};
