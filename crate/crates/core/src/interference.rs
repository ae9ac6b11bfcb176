//! Generalized Hong-Ou-Mandel analysis for `n` single photons in an `n`-mode
//! Fourier interferometer: the zero-transmission rule, violation ratios,
//! distribution fidelity and the pairwise-correlation witness.

use serde::Serialize;

use crate::circuits::fourier_matrix;
use crate::error::{invalid, Result};
use crate::fock::{transition_amplitude, OutputDistribution};
use crate::state::OccupationState;

/// Amplitudes below this modulus count as exactly suppressed.
pub const ZERO_AMPLITUDE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuppressionVerdict {
    pub state: OccupationState,
    pub suppressed: bool,
    /// `sum_j j * s_j mod n`, modes 0-indexed.
    pub weighted_sum: usize,
}

fn check_symmetric(n: usize, state: &OccupationState) -> Result<()> {
    if state.modes() != n || state.total() != n {
        return Err(invalid(format!(
            "the zero-transmission rule covers n photons in n modes; got {} photons in {} modes for n = {n}",
            state.total(),
            state.modes()
        )));
    }
    Ok(())
}

/// Zero-transmission rule for input `(1, ..., 1)` into `F_n`: the output is
/// suppressed when `sum_j j * s_j` is not a multiple of `n`.
pub fn suppression_predicate(n: usize, state: &OccupationState) -> Result<SuppressionVerdict> {
    check_symmetric(n, state)?;
    let weighted_sum = state
        .counts()
        .iter()
        .enumerate()
        .map(|(j, &s)| (j * s) % n)
        .sum::<usize>()
        % n;
    Ok(SuppressionVerdict {
        state: state.clone(),
        suppressed: weighted_sum != 0,
        weighted_sum,
    })
}

/// Ground truth: `|<state| F_n |1,...,1>| < ZERO_AMPLITUDE_TOL`.
pub fn permanent_zero_test(n: usize, state: &OccupationState) -> Result<bool> {
    check_symmetric(n, state)?;
    let f = fourier_matrix(n)?;
    let amp = transition_amplitude(&f, &OccupationState::ones(n), state)?;
    Ok(amp.norm() < ZERO_AMPLITUDE_TOL)
}

/// Probability mass on the states the zero-transmission rule suppresses; for
/// sampled distributions this is `N_s / N_t`.
pub fn violation_ratio(dist: &OutputDistribution, n: usize) -> Result<f64> {
    if dist.photons() != n || dist.modes() != n {
        return Err(invalid(format!(
            "violation ratio needs {n} photons in {n} modes, got {} in {}",
            dist.photons(),
            dist.modes()
        )));
    }
    let mut mass = 0.0;
    for (s, p) in dist.iter() {
        if suppression_predicate(n, s)?.suppressed {
            mass += p;
        }
    }
    Ok(mass)
}

/// `sum_i sqrt(p_i q_i)`.
pub fn bhattacharyya_fidelity(p: &OutputDistribution, q: &OutputDistribution) -> Result<f64> {
    if !p.same_space(q) {
        return Err(invalid(
            "fidelity needs distributions over the same state space",
        ));
    }
    let f: f64 = p
        .probabilities()
        .iter()
        .zip(q.probabilities())
        .map(|(a, b)| (a.max(0.0) * b.max(0.0)).sqrt())
        .sum();
    Ok(f.min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessReport {
    pub g_bar: f64,
    pub classical_bound: f64,
    pub violated: bool,
}

/// `G_n = 2/(n(n-1)) sum_{i<j} <s_i s_j>`, with the expectation over `dist`.
/// Distinguishable photons give exactly `1 - 1/n`; lower values certify
/// nonclassical input light.
pub fn pair_correlation_witness(dist: &OutputDistribution) -> Result<WitnessReport> {
    let n = dist.photons();
    if n < 2 {
        return Err(invalid(format!(
            "witness needs at least 2 photons, got {n}"
        )));
    }
    if dist.modes() != n {
        return Err(invalid(format!(
            "witness is defined for n photons in n modes, got {n} photons in {} modes",
            dist.modes()
        )));
    }
    let mut correlator = 0.0;
    for (s, p) in dist.iter() {
        let c = s.counts();
        let mut pairs = 0usize;
        for i in 0..n {
            for j in i + 1..n {
                pairs += c[i] * c[j];
            }
        }
        correlator += p * pairs as f64;
    }
    let g_bar = 2.0 * correlator / (n * (n - 1)) as f64;
    let classical_bound = 1.0 - 1.0 / n as f64;
    Ok(WitnessReport {
        g_bar,
        classical_bound,
        violated: g_bar < classical_bound,
    })
}
