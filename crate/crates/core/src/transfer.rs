//! Propagator, fidelity and transfer-time measurements.
//!
//! Everything is evaluated from the spectral form
//! `f(t) = sum_j exp(-i E_j t) <r|lambda_j><lambda_j|s>` (hbar = 1), so the
//! cost per time sample is `O(dim)` and large times lose no accuracy to
//! repeated matrix products.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::spectral::{gap_delta12, ProjectionSet, SpectralData};

/// Slack allowed above `|f| = 1` before it is treated as a bug upstream.
pub const AMPLITUDE_SLACK: f64 = 1e-12;
/// Smallest spectral gap accepted by [`estimate_transfer_time`].
pub const DEGENERACY_GAP: f64 = 1e-13;
/// Transfer probabilities below this count as no transfer at all.
pub const FLAT_FLOOR: f64 = 1e-6;

/// `<r| exp(-iHt) |s>`.
pub fn propagator_amplitude(sd: &SpectralData, sender: usize, receiver: usize, t: f64) -> Result<Complex64> {
    let s = sd.require_site("sender", sender)?;
    let r = sd.require_site("receiver", receiver)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("time must be finite and >= 0, got {t}")));
    }
    // exp(-i E_j t) = exp(-i E_1 t) exp(-i (E_j - E_1) t); the split keeps the
    // large ground-state offset out of the relative phases.
    let base = sd.eigenvalues[0];
    let v = &sd.eigenvectors;
    let sum: Complex64 = sd
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(j, &e)| Complex64::from_polar(v[(r, j)] * v[(s, j)], -(e - base) * t))
        .sum();
    Ok(sum * Complex64::from_polar(1.0, -base * t))
}

/// Precomputed sender-to-receiver propagator for fast repeated evaluation.
///
/// Energies are stored relative to the lowest one; this only changes the
/// global phase of `f(t)`, never `|f(t)|`.
#[derive(Debug, Clone)]
pub struct Propagator {
    energies: Vec<f64>,
    weights: Vec<f64>,
}

impl Propagator {
    pub fn new(sd: &SpectralData, sender: usize, receiver: usize) -> Result<Self> {
        let s = sd.require_site("sender", sender)?;
        let r = sd.require_site("receiver", receiver)?;
        let base = sd.eigenvalues[0];
        let v = &sd.eigenvectors;
        let (energies, weights) = sd
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(j, &e)| (e - base, v[(r, j)] * v[(s, j)]))
            .unzip();
        Ok(Propagator { energies, weights })
    }

    /// `|f(t)|^2`.
    pub fn probability(&self, t: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (&e, &w) in self.energies.iter().zip(&self.weights) {
            let (sin, cos) = (e * t).sin_cos();
            re += w * cos;
            im -= w * sin;
        }
        re * re + im * im
    }

    pub fn magnitude(&self, t: f64) -> f64 {
        self.probability(t).sqrt()
    }
}

/// Bloch-sphere averaged fidelity, `|f|^2/6 + |f|/3 + 1/2`.
///
/// Values in `(1, 1 + AMPLITUDE_SLACK]` are clamped to 1.
pub fn fidelity(f_abs: f64) -> Result<f64> {
    if !(0.0..=1.0 + AMPLITUDE_SLACK).contains(&f_abs) {
        return Err(Error::AmplitudeRange(f_abs));
    }
    let f = f_abs.min(1.0);
    Ok(f * f / 6.0 + f / 3.0 + 0.5)
}

/// Splits `|f(t)|^2` into its time-independent part `f_m` and the
/// oscillating remainder `f_t`.
pub fn decompose_fm_ft(ps: &ProjectionSet, eigenvalues: &[f64], t: f64) -> Result<(f64, f64)> {
    if ps.entries.len() != eigenvalues.len() {
        return Err(Error::invalid(
            "eigenvalues",
            format!("{} eigenvalues for {} projections", eigenvalues.len(), ps.entries.len()),
        ));
    }
    let f_m = ps.f_m();
    let p = &ps.entries;
    let mut f_t = 0.0;
    for k in 0..p.len() {
        let ak = p[k].sigma_abs * p[k].rho_abs;
        if ak == 0.0 {
            continue;
        }
        for l in k + 1..p.len() {
            let al = p[l].sigma_abs * p[l].rho_abs;
            let delta = eigenvalues[k] - eigenvalues[l];
            let xi = p[k].sigma_phase - p[l].sigma_phase - p[k].rho_phase + p[l].rho_phase;
            f_t += ak * al * (delta * t + xi).cos();
        }
    }
    Ok((f_m, 2.0 * f_t))
}

/// `(pi/2) d^nu`, the two-spin transfer time over `d` lattice units.
pub fn ideal_transfer_time(distance: usize, nu: f64) -> Result<f64> {
    if distance < 1 {
        return Err(Error::invalid("distance", "must be at least one lattice unit"));
    }
    Ok(FRAC_PI_2 * (distance as f64).powf(nu))
}

/// `pi / Delta_12`.
pub fn estimate_transfer_time(sd: &SpectralData) -> Result<f64> {
    let gap = gap_delta12(sd)?;
    if gap <= DEGENERACY_GAP {
        return Err(Error::Degenerate { gap });
    }
    Ok(PI / gap)
}

/// Sender, receiver and the chain parameters needed for the ideal time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub sender: usize,
    pub receiver: usize,
    pub nu: f64,
    pub nn_energy: f64,
}

impl Channel {
    pub fn of(spec: &ChainSpec) -> Self {
        Channel { sender: spec.sender, receiver: spec.receiver, nu: spec.nu, nn_energy: spec.nn_energy }
    }

    /// Ideal two-spin time in the chain's energy unit.
    pub fn t_ideal(&self) -> Result<f64> {
        Ok(ideal_transfer_time(self.sender.abs_diff(self.receiver), self.nu)? / self.nn_energy)
    }
}

/// How [`find_transfer_event`] scans a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakSearch {
    /// Number of coarse intervals across the window.
    pub coarse_steps: usize,
    /// A lobe counts as the transfer event once its ripple-averaged height
    /// reaches this fraction of the highest lobe in the window.
    pub threshold: f64,
    /// Width of the moving average, as a fraction of the window.
    pub smoothing: f64,
    /// Relative time tolerance of the golden-section refinement.
    pub rel_tol: f64,
}

impl Default for PeakSearch {
    fn default() -> Self {
        PeakSearch { coarse_steps: 20_000, threshold: 0.98, smoothing: 1.0 / 30.0, rel_tol: 1e-6 }
    }
}

impl PeakSearch {
    pub fn with_steps(coarse_steps: usize) -> Self {
        PeakSearch { coarse_steps, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.coarse_steps < 1000 {
            return Err(Error::invalid("coarse_steps", format!("need >= 1000, got {}", self.coarse_steps)));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::invalid("threshold", format!("must lie in (0, 1], got {}", self.threshold)));
        }
        if !(self.smoothing >= 0.0 && self.smoothing < 1.0) {
            return Err(Error::invalid("smoothing", format!("must lie in [0, 1), got {}", self.smoothing)));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("rel_tol", "must be positive"));
        }
        Ok(())
    }
}

/// Measured first transfer event together with the reference times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferReport {
    pub t_ideal: f64,
    pub t_estimate: f64,
    pub t_measured: f64,
    /// Peak `|f|^2`.
    pub f_max: f64,
    pub fidelity_max: f64,
    pub ratio_ideal_over_measured: f64,
}

/// Maximizes `g` on `[a, b]` by golden-section search.
fn golden_max(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > tol {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, g(t))
}

/// Centred moving average with half-width `hw` samples, truncated at the ends.
fn moving_average(p: &[f64], hw: usize) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(p.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &x in p {
        acc += x;
        prefix.push(acc);
    }
    let last = p.len() - 1;
    (0..p.len())
        .map(|k| {
            let lo = k.saturating_sub(hw);
            let hi = (k + hw).min(last);
            (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
        })
        .collect()
}

/// Locates the first transfer event of `|f(t)|^2` in `[0, window]`.
///
/// 1. Sample `|f|^2` on a uniform coarse grid.
/// 2. Average out the fast ripple with a moving window of
///    `search.smoothing * window`.
/// 3. Take the first averaged local maximum (dominant within its own
///    averaging neighbourhood) reaching `search.threshold` times the highest
///    averaged value.
/// 4. Pick the highest raw sample near it and refine by golden-section
///    search between its grid neighbours.
pub fn find_transfer_event(
    sd: &SpectralData,
    channel: &Channel,
    window: f64,
    search: &PeakSearch,
) -> Result<TransferReport> {
    search.validate()?;
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::invalid("window", format!("must be positive, got {window}")));
    }
    let prop = Propagator::new(sd, channel.sender, channel.receiver)?;
    let t_ideal = channel.t_ideal()?;
    let t_estimate = estimate_transfer_time(sd)?;

    let steps = search.coarse_steps;
    let dt = window / steps as f64;
    let raw: Vec<f64> = (0..=steps).into_par_iter().map(|k| prop.probability(k as f64 * dt)).collect();
    let raw_max = raw.iter().copied().fold(0.0, f64::max);
    if raw_max < FLAT_FLOOR {
        return Err(Error::FlatChannel { peak: raw_max, floor: FLAT_FLOOR });
    }

    let hw = ((search.smoothing * steps as f64 / 2.0).round() as usize).max(1);
    let smooth = moving_average(&raw, hw);
    let smooth_max = smooth.iter().copied().fold(0.0, f64::max);
    let neighbourhood = |k: usize| k.saturating_sub(hw)..=(k + hw).min(steps);
    let lobe = (0..=steps)
        .find(|&k| {
            smooth[k] >= search.threshold * smooth_max
                && neighbourhood(k).all(|i| smooth[i] <= smooth[k])
        })
        .expect("the global maximum of the averaged trace always qualifies");

    let mut peak = lobe;
    for i in neighbourhood(lobe) {
        if raw[i] > raw[peak] {
            peak = i;
        }
    }
    let lo = peak.saturating_sub(1) as f64 * dt;
    let hi = (peak + 1).min(steps) as f64 * dt;
    let tol = search.rel_tol * (peak as f64 * dt).max(dt);
    let (t_refined, p_refined) = golden_max(|t| prop.probability(t), lo, hi, tol);
    let (t_measured, f_max) = if p_refined >= raw[peak] {
        (t_refined, p_refined)
    } else {
        (peak as f64 * dt, raw[peak])
    };
    if t_measured <= 0.0 {
        return Err(Error::FlatChannel { peak: f_max, floor: FLAT_FLOOR });
    }
    let f_max = f_max.min(1.0);
    Ok(TransferReport {
        t_ideal,
        t_estimate,
        t_measured,
        f_max,
        fidelity_max: fidelity(f_max.sqrt())?,
        ratio_ideal_over_measured: t_ideal / t_measured,
    })
}

/// Sampled `|f(t)|` and fidelity on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityTrace {
    pub times: Vec<f64>,
    pub f_abs: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub f_m: f64,
    pub spec_id: String,
}

impl FidelityTrace {
    pub fn max_fidelity(&self) -> f64 {
        self.fidelity.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Time of the largest fidelity sample (first on ties).
    pub fn argmax_time(&self) -> f64 {
        let mut best = 0;
        for (k, &f) in self.fidelity.iter().enumerate() {
            if f > self.fidelity[best] {
                best = k;
            }
        }
        self.times[best]
    }
}

/// Evaluates the trace on the given times; samples run in parallel but are
/// assembled in input order.
pub fn fidelity_trace(
    sd: &SpectralData,
    ps: &ProjectionSet,
    times: Vec<f64>,
    spec_id: impl Into<String>,
) -> Result<FidelityTrace> {
    let prop = Propagator::new(sd, ps.sender, ps.receiver)?;
    let f_abs: Vec<f64> = times.par_iter().map(|&t| prop.magnitude(t)).collect();
    let fidelity = f_abs.iter().map(|&f| fidelity(f)).collect::<Result<Vec<_>>>()?;
    Ok(FidelityTrace { times, f_abs: f_abs.iter().map(|f| f.min(1.0)).collect(), fidelity, f_m: ps.f_m(), spec_id: spec_id.into() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_single_excitation_hamiltonian, ChainSpec, HamiltonianMatrix};
    use crate::spectral::{eigendecompose, projections};
    use nalgebra::DMatrix;

    fn two_spin(d: usize, nu: f64) -> (ChainSpec, SpectralData) {
        let spec = ChainSpec::new(d + 1, nu).unwrap();
        let spec = if d > 1 { spec.with_holes(2..=d).unwrap() } else { spec };
        let sd = eigendecompose(&build_single_excitation_hamiltonian(&spec).unwrap()).unwrap();
        (spec, sd)
    }

    #[test]
    fn amplitude_at_time_zero() {
        let spec = ChainSpec::new(7, 2.0).unwrap();
        let sd = eigendecompose(&build_single_excitation_hamiltonian(&spec).unwrap()).unwrap();
        assert!(propagator_amplitude(&sd, 1, 7, 0.0).unwrap().norm() < 1e-15);
        assert!((propagator_amplitude(&sd, 3, 3, 0.0).unwrap() - 1.0).norm() < 1e-14);
        assert!(propagator_amplitude(&sd, 1, 8, 1.0).is_err());
        assert!(propagator_amplitude(&sd, 1, 7, -1.0).is_err());
    }

    #[test]
    fn two_spin_probability_is_sine_squared() {
        let (_, sd) = two_spin(3, 3.0);
        let gap = 2.0 / 27.0;
        for k in 0..50 {
            let t = 7.3 * k as f64;
            let f = propagator_amplitude(&sd, 1, 4, t).unwrap();
            assert!((f.norm_sqr() - (gap * t / 2.0).sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn fidelity_values() {
        assert_eq!(fidelity(0.0).unwrap(), 0.5);
        assert_eq!(fidelity(1.0).unwrap(), 1.0);
        assert!((fidelity(0.5).unwrap() - 17.0 / 24.0).abs() < 1e-15);
        assert_eq!(fidelity(1.0 + 5e-13).unwrap(), 1.0);
        assert!(matches!(fidelity(1.0 + 1e-9), Err(Error::AmplitudeRange(_))));
        assert!(fidelity(-1e-3).is_err());
    }

    #[test]
    fn ideal_two_spin_mean_is_half() {
        let (_, sd) = two_spin(1, 3.0);
        let ps = projections(&sd, 1, 2).unwrap();
        let (f_m, f_t) = decompose_fm_ft(&ps, &sd.eigenvalues, 0.0).unwrap();
        assert!((f_m - 0.5).abs() < 1e-15);
        // At t = 0 nothing has arrived: f_t = -f_m.
        assert!((f_m + f_t).abs() < 1e-15);
    }

    #[test]
    fn transfer_times() {
        assert!((ideal_transfer_time(1, 3.0).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((ideal_transfer_time(9, 1.0).unwrap() - 4.5 * PI).abs() < 1e-13);
        let t49 = ideal_transfer_time(49, 3.0).unwrap();
        assert!((t49 - FRAC_PI_2 * 117_649.0).abs() < 1e-9);
        assert!((t49 - 1.848e5).abs() < 0.001e5);
        assert!(ideal_transfer_time(0, 3.0).is_err());
        for d in [1usize, 5, 49] {
            let (_, sd) = two_spin(d, 3.0);
            let est = estimate_transfer_time(&sd).unwrap();
            let id = ideal_transfer_time(d, 3.0).unwrap();
            assert!((est - id).abs() <= 1e-9 * id, "d={d}");
        }
    }

    #[test]
    fn degenerate_gap_is_rejected() {
        let sd = eigendecompose(&HamiltonianMatrix::from_matrix(DMatrix::identity(3, 3)).unwrap()).unwrap();
        assert!(matches!(estimate_transfer_time(&sd), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn two_spin_event_is_exact() {
        let (spec, sd) = two_spin(1, 3.0);
        let report = find_transfer_event(&sd, &Channel::of(&spec), 2.0 * PI, &PeakSearch::with_steps(1000)).unwrap();
        assert!((report.t_measured - FRAC_PI_2).abs() <= 1e-6 * FRAC_PI_2, "{report:?}");
        assert!((report.f_max - 1.0).abs() <= 1e-9);
        assert!((report.fidelity_max - 1.0).abs() <= 1e-9);
        assert!((report.ratio_ideal_over_measured - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn search_parameters_are_checked() {
        let (spec, sd) = two_spin(1, 3.0);
        let ch = Channel::of(&spec);
        assert!(find_transfer_event(&sd, &ch, 10.0, &PeakSearch::with_steps(999)).is_err());
        assert!(find_transfer_event(&sd, &ch, 0.0, &PeakSearch::default()).is_err());
        let bad = PeakSearch { threshold: 1.5, ..PeakSearch::default() };
        assert!(find_transfer_event(&sd, &ch, 10.0, &bad).is_err());
    }

    #[test]
    fn flat_channel_is_reported() {
        // Sender and receiver in disconnected blocks never exchange.
        let m = DMatrix::from_row_slice(4, 4, &[
            0.0, 1.0, 0.0, 0.0,
            1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.5, 0.3,
            0.0, 0.0, 0.3, 0.1,
        ]);
        let sd = eigendecompose(&HamiltonianMatrix::from_matrix(m).unwrap()).unwrap();
        let ch = Channel { sender: 1, receiver: 4, nu: 3.0, nn_energy: 1.0 };
        let err = find_transfer_event(&sd, &ch, 100.0, &PeakSearch::default()).unwrap_err();
        assert!(matches!(err, Error::FlatChannel { .. }), "{err:?}");
    }

    #[test]
    fn golden_section_finds_parabola_top() {
        let (t, g) = golden_max(|x| 3.0 - (x - 1.234).powi(2), 0.0, 5.0, 1e-9);
        assert!((t - 1.234).abs() < 1e-7);
        assert!((g - 3.0).abs() < 1e-15);
    }

    #[test]
    fn moving_average_truncates_at_edges() {
        let s = moving_average(&[1.0, 2.0, 3.0, 4.0], 1);
        assert_eq!(s, vec![1.5, 2.0, 3.0, 3.5]);
    }

    #[test]
    fn trace_matches_two_spin_formula() {
        let (spec, sd) = two_spin(1, 3.0);
        let ps = projections(&sd, spec.sender, spec.receiver).unwrap();
        let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
        let trace = fidelity_trace(&sd, &ps, times, "two-spin").unwrap();
        for (&t, &f) in trace.times.iter().zip(&trace.fidelity) {
            let a = t.sin().abs();
            assert!((f - (a * a / 6.0 + a / 3.0 + 0.5)).abs() < 1e-9);
        }
        assert!((trace.f_m - 0.5).abs() < 1e-15);
    }
}
