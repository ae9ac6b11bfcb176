//! Finite-count synthetic experiments and their analysis.
//!
//! All randomness comes from ChaCha20 (`rand_chacha`), seeded with
//! `seed_from_u64(seed)`; independent trials use stream `trial` of the same
//! key, so results depend only on `(inputs, seed, trial)`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{OutputDistribution, ParticleModel};
use crate::metrology::{
    coincidence_probability, coincidence_with_slope, optimal_operating_point, PhaseDistribution,
    SensitivityReport,
};

/// Generator for `(seed, trial)`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub phi: f64,
    pub counts: u64,
    /// Expected counts at the fringe maximum (`A`).
    pub expected_max: f64,
}

/// Expected counts `(V (2p - 1) + 1)/2 * A`.
pub fn expected_counts(p: f64, amplitude: f64, visibility: f64) -> f64 {
    (visibility * (2.0 * p - 1.0) + 1.0) / 2.0 * amplitude
}

fn check_fringe_params(amplitude: f64, visibility: f64) -> Result<()> {
    if !(amplitude > 0.0) || !amplitude.is_finite() {
        return Err(invalid(format!(
            "expected max counts must be positive, got {amplitude}"
        )));
    }
    if !(0.0..=1.0).contains(&visibility) {
        return Err(invalid(format!("visibility {visibility} outside [0, 1]")));
    }
    Ok(())
}

/// One Poisson draw per grid point.
pub fn synthesize_counts(
    n: usize,
    f: &PhaseDistribution,
    phi_grid: &[f64],
    amplitude: f64,
    visibility: f64,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    synthesize_counts_trial(n, f, phi_grid, amplitude, visibility, seed, 0)
}

pub fn synthesize_counts_trial(
    n: usize,
    f: &PhaseDistribution,
    phi_grid: &[f64],
    amplitude: f64,
    visibility: f64,
    seed: u64,
    trial: u64,
) -> Result<Vec<CountRecord>> {
    check_fringe_params(amplitude, visibility)?;
    if phi_grid.is_empty() {
        return Err(invalid("phase grid is empty"));
    }
    let mut rng = trial_rng(seed, trial);
    phi_grid
        .iter()
        .map(|&phi| {
            let p = coincidence_probability(n, f, phi)?;
            let mean = expected_counts(p, amplitude, visibility);
            let counts = if mean > 0.0 {
                let dist =
                    Poisson::new(mean).map_err(|e| invalid(format!("Poisson mean {mean}: {e}")))?;
                dist.sample(&mut rng) as u64
            } else {
                0
            };
            Ok(CountRecord {
                phi,
                counts,
                expected_max: amplitude,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWeighting {
    /// Ordinary least squares; parameter covariance scaled by the residual variance.
    #[default]
    Unweighted,
    /// Weights `1 / max(counts, 1)`; covariance from the Poisson variances.
    InverseVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringeFit {
    pub amplitude: f64,
    /// Effective visibility clamped to `[0, 1]`.
    pub visibility: f64,
    /// Estimate before clamping.
    pub raw_visibility: f64,
    pub sigma_visibility: f64,
    /// Sum of squared (weighted) residuals.
    pub residual: f64,
    pub offset: f64,
    pub slope: f64,
    pub points: usize,
}

pub fn fit_fringe(records: &[CountRecord], n: usize, f: &PhaseDistribution) -> Result<FringeFit> {
    fit_fringe_with(records, n, f, FitWeighting::Unweighted)
}

/// Fits `Counts = c1 p(phi) + c0` with `p` the ideal coincidence fringe, then
/// `A = c1 + 2 c0` and `V = c1 / A`.
pub fn fit_fringe_with(
    records: &[CountRecord],
    n: usize,
    f: &PhaseDistribution,
    weighting: FitWeighting,
) -> Result<FringeFit> {
    let mut phis: Vec<f64> = records.iter().map(|r| r.phi).collect();
    phis.sort_by(f64::total_cmp);
    phis.dedup();
    if records.len() < 3 || phis.len() < 3 {
        return Err(invalid(
            "fringe fit needs at least 3 records at 3 distinct phases",
        ));
    }
    let xs = records
        .iter()
        .map(|r| coincidence_probability(n, f, r.phi))
        .collect::<Result<Vec<f64>>>()?;
    let ys: Vec<f64> = records.iter().map(|r| r.counts as f64).collect();
    let ws: Vec<f64> = match weighting {
        FitWeighting::Unweighted => vec![1.0; records.len()],
        FitWeighting::InverseVariance => ys.iter().map(|&y| 1.0 / y.max(1.0)).collect(),
    };

    let (mut sw, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&x, &y), &w) in xs.iter().zip(&ys).zip(&ws) {
        sw += w;
        sx += w * x;
        sxx += w * x * x;
        sy += w * y;
        sxy += w * x * y;
    }
    let det = sw * sxx - sx * sx;
    let x_spread = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - xs.iter().copied().fold(f64::INFINITY, f64::min);
    if x_spread < 1e-12 || det.abs() <= 1e-14 * sw * sxx {
        return Err(Error::DegenerateFit(
            "theoretical fringe is constant over the grid".into(),
        ));
    }
    let slope = (sw * sxy - sx * sy) / det;
    let offset = (sxx * sy - sx * sxy) / det;
    let residual: f64 = xs
        .iter()
        .zip(&ys)
        .zip(&ws)
        .map(|((&x, &y), &w)| w * (y - slope * x - offset).powi(2))
        .sum();

    // (X^T W X)^{-1} = [[sw, -sx], [-sx, sxx]] / det for parameters (c1, c0)
    let scale = match weighting {
        FitWeighting::Unweighted => residual / (records.len() - 2).max(1) as f64,
        FitWeighting::InverseVariance => 1.0,
    };
    let var_c1 = scale * sw / det;
    let var_c0 = scale * sxx / det;
    let cov = -scale * sx / det;

    let amplitude = slope + 2.0 * offset;
    if amplitude.abs() < f64::MIN_POSITIVE {
        return Err(Error::DegenerateFit("fitted amplitude is zero".into()));
    }
    let raw_visibility = slope / amplitude;
    // dV/dc1 = 2 c0 / A^2, dV/dc0 = -2 c1 / A^2
    let g1 = 2.0 * offset / (amplitude * amplitude);
    let g0 = -2.0 * slope / (amplitude * amplitude);
    let var_v = g1 * g1 * var_c1 + g0 * g0 * var_c0 + 2.0 * g1 * g0 * cov;

    Ok(FringeFit {
        amplitude,
        visibility: raw_visibility.clamp(0.0, 1.0),
        raw_visibility,
        sigma_visibility: var_v.max(0.0).sqrt(),
        residual,
        offset,
        slope,
        points: records.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatedSensitivity {
    pub report: SensitivityReport,
    pub sigma_delta_phi: f64,
}

/// `dphi = 1/sqrt(FI(V))` at the best phase for the fitted `V`, with
/// `sigma(dphi) = |d dphi / dV| sigma_V` and
/// `d dphi / dV = -1 / (2 |p'| V^2 sqrt(1 - V^2 (2p-1)^2))`.
pub fn estimate_sensitivity(
    fit: &FringeFit,
    n: usize,
    f: &PhaseDistribution,
) -> Result<EstimatedSensitivity> {
    let v = fit.visibility;
    if v <= 0.0 {
        return Err(invalid(
            "fitted visibility is zero; Fisher information vanishes",
        ));
    }
    let op = optimal_operating_point(n, f, v)?;
    let report = SensitivityReport::from_operating_point(n, v, op);
    let sigma_delta_phi = if fit.sigma_visibility == 0.0 {
        0.0
    } else {
        let (p, dp) = coincidence_with_slope(n, f, op.phi)?;
        let c = 2.0 * p - 1.0;
        let root = (1.0 - v * v * c * c).max(0.0).sqrt();
        fit.sigma_visibility / (2.0 * dp.abs() * v * v * root)
    };
    Ok(EstimatedSensitivity {
        report,
        sigma_delta_phi,
    })
}

/// Finite-sample estimate of a distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledDistribution {
    pub empirical: OutputDistribution,
    pub counts: Vec<u64>,
    pub shots: u64,
}

/// Multinomial sample of `shots` events, drawn state by state as conditional
/// binomials in canonical order.
pub fn sample_distribution(
    dist: &OutputDistribution,
    shots: u64,
    seed: u64,
) -> Result<SampledDistribution> {
    sample_distribution_trial(dist, shots, seed, 0)
}

pub fn sample_distribution_trial(
    dist: &OutputDistribution,
    shots: u64,
    seed: u64,
    trial: u64,
) -> Result<SampledDistribution> {
    if shots == 0 {
        return Err(invalid("need at least one shot"));
    }
    let mut rng = trial_rng(seed, trial);
    let probs = dist.probabilities();
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    let last_nonzero = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let p = p.max(0.0);
        if i == last_nonzero {
            counts[i] = remaining;
            break;
        }
        if p == 0.0 {
            continue;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = Binomial::new(remaining, q)
            .map_err(|e| invalid(format!("binomial({remaining}, {q}): {e}")))?
            .sample(&mut rng);
        counts[i] = k;
        remaining -= k;
        mass -= p;
    }
    let empirical_probs = counts.iter().map(|&c| c as f64 / shots as f64).collect();
    let empirical = OutputDistribution::from_parts(
        ParticleModel::Empirical { shots },
        dist.photons(),
        dist.modes(),
        dist.states().to_vec(),
        empirical_probs,
    )?;
    Ok(SampledDistribution {
        empirical,
        counts,
        shots,
    })
}

/// `sum |p - q| / 2`.
pub fn total_variation(p: &OutputDistribution, q: &OutputDistribution) -> Result<f64> {
    if !p.same_space(q) {
        return Err(invalid(
            "total variation needs distributions over the same state space",
        ));
    }
    Ok(0.5
        * p.probabilities()
            .iter()
            .zip(q.probabilities())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// Outcome of repeated synthesize-and-fit trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageStudy {
    pub trials: usize,
    pub within_two_sigma: f64,
    pub within_three_sigma: f64,
    pub mean_visibility: f64,
}

/// Runs `trials` independent synthesize-and-fit rounds (trial `t` uses stream
/// `t` of `seed`) and reports how often `|V_hat - V|` falls inside 2 and 3
/// standard errors.
pub fn coverage_study(
    n: usize,
    f: &PhaseDistribution,
    phi_grid: &[f64],
    amplitude: f64,
    visibility: f64,
    seed: u64,
    trials: usize,
    weighting: FitWeighting,
) -> Result<CoverageStudy> {
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let fits = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let records = synthesize_counts_trial(n, f, phi_grid, amplitude, visibility, seed, t)?;
            fit_fringe_with(&records, n, f, weighting)
        })
        .collect::<Result<Vec<_>>>()?;
    let within = |k: f64| {
        fits.iter()
            .filter(|fit| (fit.raw_visibility - visibility).abs() <= k * fit.sigma_visibility)
            .count() as f64
            / trials as f64
    };
    Ok(CoverageStudy {
        trials,
        within_two_sigma: within(2.0),
        within_three_sigma: within(3.0),
        mean_visibility: fits.iter().map(|f| f.raw_visibility).sum::<f64>() / trials as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::fourier_matrix;
    use crate::fock::quantum_distribution;
    use crate::metrology::phase_grid;
    use crate::state::OccupationState;
    use std::f64::consts::PI;

    fn noiseless(
        n: usize,
        f: &PhaseDistribution,
        grid: &[f64],
        a: f64,
        v: f64,
    ) -> Vec<CountRecord> {
        // fractional "counts" are not representable, so scale up and keep integers exact
        grid.iter()
            .map(|&phi| {
                let p = coincidence_probability(n, f, phi).unwrap();
                CountRecord {
                    phi,
                    counts: expected_counts(p, a, v).round() as u64,
                    expected_max: a,
                }
            })
            .collect()
    }

    #[test]
    fn synthetic_means() {
        let f = PhaseDistribution::delta(2);
        assert_eq!(expected_counts(1.0, 1000.0, 1.0), 1000.0);
        assert_eq!(expected_counts(0.3, 1000.0, 0.0), 500.0);
        let recs = synthesize_counts(2, &f, &[0.0], 1e6, 1.0, 7).unwrap();
        assert!((recs[0].counts as f64 - 1e6).abs() < 5.0 * 1e3);
        let flat = synthesize_counts(2, &f, &[0.0, 1.0, 2.0], 1e6, 0.0, 7).unwrap();
        for r in flat {
            assert!((r.counts as f64 - 5e5).abs() < 5.0 * 5e5f64.sqrt());
        }
    }

    #[test]
    fn synthesis_is_deterministic() {
        let f = PhaseDistribution::delta(3);
        let grid = phase_grid(0.0, 2.0 * PI, 20).unwrap();
        let a = synthesize_counts(3, &f, &grid, 1000.0, 0.9, 42).unwrap();
        let b = synthesize_counts(3, &f, &grid, 1000.0, 0.9, 42).unwrap();
        let c = synthesize_counts(3, &f, &grid, 1000.0, 0.9, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(synthesize_counts(3, &f, &grid, 0.0, 0.9, 1).is_err());
        assert!(synthesize_counts(3, &f, &grid, 10.0, 1.2, 1).is_err());
    }

    #[test]
    fn noiseless_fit_recovers_parameters() {
        // A = 2e12 keeps rounding to integer counts below 1e-9 relative
        let a = 2e12;
        for n in 2..=4 {
            for f in [PhaseDistribution::linear(n), PhaseDistribution::delta(n)] {
                let grid = phase_grid(0.05, 2.0 * PI, 40).unwrap();
                for v in [0.0, 0.3, 0.7, 1.0] {
                    let fit = fit_fringe(&noiseless(n, &f, &grid, a, v), n, &f).unwrap();
                    assert!((fit.amplitude - a).abs() / a < 1e-9, "n={n} v={v}: {fit:?}");
                    assert!((fit.visibility - v).abs() < 1e-9, "n={n} v={v}: {fit:?}");
                }
            }
        }
    }

    #[test]
    fn fit_rejects_bad_inputs() {
        let f = PhaseDistribution::delta(2);
        let recs = noiseless(2, &f, &[0.1, 0.2], 100.0, 1.0);
        assert!(fit_fringe(&recs, 2, &f).is_err());
        let same = noiseless(2, &f, &[0.1, 0.1, 0.1, 0.2], 100.0, 1.0);
        assert!(fit_fringe(&same, 2, &f).is_err());
        // linear n = 3 fringe at phi = 0, 2pi/3, 4pi/3 is constant (p = 1)
        let lin = PhaseDistribution::linear(3);
        let flat = noiseless(3, &lin, &[0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0], 100.0, 1.0);
        assert!(matches!(
            fit_fringe(&flat, 3, &lin),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn clamping_keeps_raw_value() {
        let f = PhaseDistribution::delta(2);
        let grid = phase_grid(0.0, PI, 30).unwrap();
        // inverted fringe: negative visibility
        let recs: Vec<_> = grid
            .iter()
            .map(|&phi| {
                let p = coincidence_probability(2, &f, phi).unwrap();
                CountRecord {
                    phi,
                    counts: (1000.0 - 500.0 * p).round() as u64,
                    expected_max: 1000.0,
                }
            })
            .collect();
        let fit = fit_fringe(&recs, 2, &f).unwrap();
        assert!(fit.raw_visibility < 0.0);
        assert_eq!(fit.visibility, 0.0);
    }

    #[test]
    fn sensitivity_from_perfect_fit() {
        let f = PhaseDistribution::delta(2);
        let grid = phase_grid(0.05, PI, 30).unwrap();
        let fit = fit_fringe(&noiseless(2, &f, &grid, 1e6, 1.0), 2, &f).unwrap();
        let est = estimate_sensitivity(&fit, 2, &f).unwrap();
        assert!((est.report.delta_phi - 0.5).abs() < 1e-6);
        // integer rounding of the counts leaves a tiny residual
        assert!(est.sigma_delta_phi < 1e-6);
        let exact = FringeFit {
            visibility: 1.0,
            raw_visibility: 1.0,
            sigma_visibility: 0.0,
            ..fit
        };
        let est = estimate_sensitivity(&exact, 2, &f).unwrap();
        assert!((est.report.delta_phi - 0.5).abs() < 1e-9);
        assert_eq!(est.sigma_delta_phi, 0.0);
    }

    #[test]
    fn sensitivity_error_bar_matches_finite_difference() {
        let n = 3;
        let f = PhaseDistribution::delta(n);
        let v = 0.9;
        let sigma = 0.01;
        let fit = FringeFit {
            amplitude: 1.0,
            visibility: v,
            raw_visibility: v,
            sigma_visibility: sigma,
            residual: 0.0,
            offset: 0.0,
            slope: 0.0,
            points: 3,
        };
        let est = estimate_sensitivity(&fit, n, &f).unwrap();
        let h = 1e-4;
        let up = optimal_operating_point(n, &f, v + h).unwrap().delta_phi;
        let down = optimal_operating_point(n, &f, v - h).unwrap().delta_phi;
        let numeric = ((up - down) / (2.0 * h)).abs() * sigma;
        assert!(
            (est.sigma_delta_phi - numeric).abs() / numeric < 1e-3,
            "{} vs {numeric}",
            est.sigma_delta_phi
        );
    }

    #[test]
    fn sampling_basics() {
        let d =
            quantum_distribution(&fourier_matrix(3).unwrap(), &OccupationState::ones(3)).unwrap();
        let one = sample_distribution(&d, 1, 9).unwrap();
        assert_eq!(one.counts.iter().sum::<u64>(), 1);
        assert_eq!(one.counts.iter().filter(|&&c| c == 1).count(), 1);
        let a = sample_distribution(&d, 1000, 9).unwrap();
        let b = sample_distribution(&d, 1000, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts.iter().sum::<u64>(), 1000);
        // suppressed outputs are never sampled
        for (s, &c) in d.states().iter().zip(&a.counts) {
            if d.probability(s) == 0.0 {
                assert_eq!(c, 0);
            }
        }
        assert!(sample_distribution(&d, 0, 9).is_err());
        assert!(matches!(
            a.empirical.model(),
            ParticleModel::Empirical { shots: 1000 }
        ));
    }
}
