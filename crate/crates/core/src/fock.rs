//! Evolution of Fock states through linear-optical unitaries.
//!
//! Amplitudes follow the permanent formula
//! `<T|U|S> = perm(U[T, S]) / sqrt(prod s_j! prod t_k!)`, where `U[T, S]`
//! repeats row `k` of `U` `t_k` times and column `j` `s_j` times.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::permanent::{permanent_capped, DEFAULT_PERMANENT_CAP};
use crate::state::{enumerate_output_states_capped, OccupationState, DEFAULT_STATE_CAP};
use crate::unitary::UnitaryMatrix;

/// Resource guards applied by the distribution builders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_states: u128,
    pub max_permanent_order: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_states: DEFAULT_STATE_CAP,
            max_permanent_order: DEFAULT_PERMANENT_CAP,
        }
    }
}

/// How the photons are modelled when building a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParticleModel {
    /// Fully indistinguishable bosons.
    Quantum,
    /// Distinguishable photons, each routed independently.
    Classical,
    /// `x * quantum + (1 - x) * classical`.
    Mixture { indistinguishability: f64 },
    /// Relative frequencies from a finite sample.
    Empirical { shots: u64 },
}

/// Probabilities over every output occupation, in canonical (lexicographically
/// descending) state order.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputDistribution {
    model: ParticleModel,
    photons: usize,
    modes: usize,
    states: Vec<OccupationState>,
    probs: Vec<f64>,
}

/// Normalization tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-9;

impl OutputDistribution {
    pub fn from_parts(
        model: ParticleModel,
        photons: usize,
        modes: usize,
        states: Vec<OccupationState>,
        probs: Vec<f64>,
    ) -> Result<Self> {
        if states.len() != probs.len() {
            return Err(invalid("state and probability lists differ in length"));
        }
        for s in &states {
            if s.modes() != modes || s.total() != photons {
                return Err(invalid(format!(
                    "state {s} is not a configuration of {photons} photons in {modes} modes"
                )));
            }
        }
        if states.windows(2).any(|w| w[0] <= w[1]) {
            return Err(invalid("states must be strictly descending"));
        }
        if let Some(p) = probs
            .iter()
            .find(|p| !p.is_finite() || **p < -NORMALIZATION_TOL || **p > 1.0 + NORMALIZATION_TOL)
        {
            return Err(invalid(format!("probability {p} outside [0, 1]")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self {
            model,
            photons,
            modes,
            states,
            probs,
        })
    }

    pub fn model(&self) -> ParticleModel {
        self.model
    }

    pub fn photons(&self) -> usize {
        self.photons
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[OccupationState] {
        &self.states
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OccupationState, f64)> {
        self.states.iter().zip(self.probs.iter().copied())
    }

    pub fn index_of(&self, state: &OccupationState) -> Option<usize> {
        self.states.binary_search_by(|s| state.cmp(s)).ok()
    }

    /// Probability of `state`; zero if it is outside the state space.
    pub fn probability(&self, state: &OccupationState) -> f64 {
        self.index_of(state).map_or(0.0, |i| self.probs[i])
    }

    /// True when both distributions are over the same ordered state list.
    pub fn same_space(&self, other: &OutputDistribution) -> bool {
        self.photons == other.photons && self.modes == other.modes && self.states == other.states
    }

    /// Moves the photons of output mode `j` to mode `sigma[j]` in every state,
    /// keeping canonical order.
    pub fn relabeled(&self, sigma: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.modes];
        if sigma.len() != self.modes
            || !sigma
                .iter()
                .all(|&t| t < self.modes && !std::mem::replace(&mut seen[t], true))
        {
            return Err(invalid(format!(
                "{sigma:?} is not a permutation of {} modes",
                self.modes
            )));
        }
        let mut pairs: Vec<(OccupationState, f64)> =
            self.iter().map(|(s, p)| (s.permuted(sigma), p)).collect();
        pairs.sort_by(|a, b| b.0.cmp(&a.0));
        let (states, probs) = pairs.into_iter().unzip();
        Ok(Self {
            model: self.model,
            photons: self.photons,
            modes: self.modes,
            states,
            probs,
        })
    }
}

fn check_pair(u: &UnitaryMatrix, input: &OccupationState, output: &OccupationState) -> Result<()> {
    for s in [input, output] {
        if s.modes() != u.dim() {
            return Err(Error::DimensionMismatch {
                expected: u.dim(),
                actual: s.modes(),
            });
        }
    }
    if input.total() != output.total() {
        return Err(Error::PhotonNumberMismatch {
            input: input.total(),
            output: output.total(),
        });
    }
    Ok(())
}

/// `U[T, S]` with row `a` for the `a`-th input photon and column `b` for the
/// `b`-th output photon.
fn transfer_submatrix<T: Copy>(
    full: &Array2<T>,
    input_photons: &[usize],
    output_photons: &[usize],
) -> Array2<T> {
    Array2::from_shape_fn((input_photons.len(), output_photons.len()), |(a, b)| {
        full[(output_photons[b], input_photons[a])]
    })
}

pub fn transition_amplitude(
    u: &UnitaryMatrix,
    input: &OccupationState,
    output: &OccupationState,
) -> Result<Complex64> {
    transition_amplitude_with(u, input, output, Limits::default())
}

pub fn transition_amplitude_with(
    u: &UnitaryMatrix,
    input: &OccupationState,
    output: &OccupationState,
    limits: Limits,
) -> Result<Complex64> {
    check_pair(u, input, output)?;
    let sub = transfer_submatrix(u.entries(), &input.photon_modes(), &output.photon_modes());
    let perm = permanent_capped(sub.view(), limits.max_permanent_order)?;
    Ok(perm / (input.factorial_product() * output.factorial_product()).sqrt())
}

fn build_distribution<F>(
    u: &UnitaryMatrix,
    input: &OccupationState,
    model: ParticleModel,
    limits: Limits,
    entry: F,
) -> Result<OutputDistribution>
where
    F: Fn(&OccupationState) -> Result<f64> + Sync,
{
    if input.modes() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            actual: input.modes(),
        });
    }
    let n = input.total();
    if n > limits.max_permanent_order {
        return Err(Error::ResourceLimit {
            what: "photon number",
            requested: n as u128,
            cap: limits.max_permanent_order as u128,
        });
    }
    let states = enumerate_output_states_capped(n, u.dim(), limits.max_states)?;
    // each entry is computed independently, so the parallel map is bit-identical
    // to a sequential one
    let probs = states
        .par_iter()
        .map(&entry)
        .collect::<Result<Vec<f64>>>()?;
    OutputDistribution::from_parts(model, n, u.dim(), states, probs)
}

/// Indistinguishable-photon output distribution `|<T|U|S>|^2`.
pub fn quantum_distribution(
    u: &UnitaryMatrix,
    input: &OccupationState,
) -> Result<OutputDistribution> {
    quantum_distribution_with(u, input, Limits::default())
}

pub fn quantum_distribution_with(
    u: &UnitaryMatrix,
    input: &OccupationState,
    limits: Limits,
) -> Result<OutputDistribution> {
    build_distribution(u, input, ParticleModel::Quantum, limits, |out| {
        transition_amplitude_with(u, input, out, limits).map(|a| a.norm_sqr())
    })
}

/// Distinguishable-photon distribution `perm(|U|^2[T, S]) / prod t_k!`.
pub fn classical_distribution(
    u: &UnitaryMatrix,
    input: &OccupationState,
) -> Result<OutputDistribution> {
    classical_distribution_with(u, input, Limits::default())
}

pub fn classical_distribution_with(
    u: &UnitaryMatrix,
    input: &OccupationState,
    limits: Limits,
) -> Result<OutputDistribution> {
    let weights = u.modulus_squared();
    let in_photons = input.photon_modes();
    build_distribution(u, input, ParticleModel::Classical, limits, |out| {
        let sub = transfer_submatrix(&weights, &in_photons, &out.photon_modes());
        let perm = permanent_capped(sub.view(), limits.max_permanent_order)?;
        // input photons are labelled; only slot orderings within an output mode repeat
        Ok(perm / out.factorial_product())
    })
}

/// Convex combination `x * quantum + (1 - x) * classical`.
pub fn mixture_distribution(
    quantum: &OutputDistribution,
    classical: &OutputDistribution,
    x: f64,
) -> Result<OutputDistribution> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(format!("mixing weight {x} outside [0, 1]")));
    }
    if quantum.model() != ParticleModel::Quantum || classical.model() != ParticleModel::Classical {
        return Err(invalid(
            "mixture needs a quantum and a classical distribution",
        ));
    }
    if !quantum.same_space(classical) {
        return Err(invalid("distributions are over different state spaces"));
    }
    // exact endpoints: x = 1 and x = 0 reproduce the inputs bit for bit
    let probs = if x == 1.0 {
        quantum.probs.clone()
    } else if x == 0.0 {
        classical.probs.clone()
    } else {
        quantum
            .probs
            .iter()
            .zip(&classical.probs)
            .map(|(q, c)| x * q + (1.0 - x) * c)
            .collect()
    };
    OutputDistribution::from_parts(
        ParticleModel::Mixture {
            indistinguishability: x,
        },
        quantum.photons,
        quantum.modes,
        quantum.states.clone(),
        probs,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::fourier_matrix;

    fn st(v: &[usize]) -> OccupationState {
        OccupationState::new(v.to_vec()).unwrap()
    }

    #[test]
    fn hom_amplitudes_and_sign() {
        let f2 = fourier_matrix(2).unwrap();
        let a20 = transition_amplitude(&f2, &st(&[1, 1]), &st(&[2, 0])).unwrap();
        let a02 = transition_amplitude(&f2, &st(&[1, 1]), &st(&[0, 2])).unwrap();
        let a11 = transition_amplitude(&f2, &st(&[1, 1]), &st(&[1, 1])).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((a20 - Complex64::new(r, 0.0)).norm() < 1e-12);
        assert!((a02 + Complex64::new(r, 0.0)).norm() < 1e-12);
        assert!(a11.norm() < 1e-12);
    }

    #[test]
    fn identity_evolution() {
        let id = UnitaryMatrix::identity(3);
        let s = st(&[2, 0, 1]);
        let a = transition_amplitude(&id, &s, &s).unwrap();
        assert!((a - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        let d = quantum_distribution(&id, &st(&[1, 0, 1])).unwrap();
        assert_eq!(d.probability(&st(&[1, 0, 1])), 1.0);
        assert_eq!(d.iter().filter(|(_, p)| *p > 0.0).count(), 1);
    }

    #[test]
    fn f4_2020_amplitude() {
        let f4 = fourier_matrix(4).unwrap();
        let a = transition_amplitude(&f4, &OccupationState::ones(4), &st(&[2, 0, 2, 0])).unwrap();
        assert!((a.norm() - 0.25).abs() < 1e-12);
        assert!((a - Complex64::new(-0.25, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn f3_suppressed_amplitude() {
        let f3 = fourier_matrix(3).unwrap();
        let a = transition_amplitude(&f3, &OccupationState::ones(3), &st(&[2, 1, 0])).unwrap();
        assert!(a.norm() < 1e-12);
    }

    #[test]
    fn amplitude_errors() {
        let f3 = fourier_matrix(3).unwrap();
        assert!(matches!(
            transition_amplitude(&f3, &st(&[1, 1, 1]), &st(&[2, 0, 0])),
            Err(Error::PhotonNumberMismatch {
                input: 3,
                output: 2
            })
        ));
        assert!(matches!(
            transition_amplitude(&f3, &st(&[1, 1]), &st(&[2, 0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn f3_quantum_distribution() {
        let d =
            quantum_distribution(&fourier_matrix(3).unwrap(), &OccupationState::ones(3)).unwrap();
        assert_eq!(d.len(), 10);
        for (s, p) in d.iter() {
            let expected = match s.counts() {
                [3, 0, 0] | [0, 3, 0] | [0, 0, 3] => 2.0 / 9.0,
                [1, 1, 1] => 1.0 / 3.0,
                _ => 0.0,
            };
            assert!((p - expected).abs() < 1e-12, "{s}: {p}");
        }
    }

    #[test]
    fn f2_classical_distribution() {
        let d = classical_distribution(&fourier_matrix(2).unwrap(), &st(&[1, 1])).unwrap();
        for (p, e) in d.probabilities().iter().zip([0.25, 0.5, 0.25]) {
            assert!((p - e).abs() < 1e-15);
        }
        assert_eq!(d.model(), ParticleModel::Classical);
    }

    #[test]
    fn classical_identity_is_deterministic() {
        let d = classical_distribution(&UnitaryMatrix::identity(3), &st(&[0, 2, 1])).unwrap();
        assert!((d.probability(&st(&[0, 2, 1])) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mixture_endpoints_and_midpoint() {
        let f2 = fourier_matrix(2).unwrap();
        let q = quantum_distribution(&f2, &st(&[1, 1])).unwrap();
        let c = classical_distribution(&f2, &st(&[1, 1])).unwrap();
        assert_eq!(
            mixture_distribution(&q, &c, 1.0).unwrap().probabilities(),
            q.probabilities()
        );
        assert_eq!(
            mixture_distribution(&q, &c, 0.0).unwrap().probabilities(),
            c.probabilities()
        );
        let half = mixture_distribution(&q, &c, 0.5).unwrap();
        assert!((half.probability(&st(&[1, 1])) - 0.25).abs() < 1e-15);
        assert!(mixture_distribution(&q, &c, 1.5).is_err());
        assert!(mixture_distribution(&q, &c, -0.1).is_err());
        assert!(mixture_distribution(&c, &q, 0.5).is_err());
    }

    #[test]
    fn resource_guard_propagates() {
        let limits = Limits {
            max_states: 5,
            max_permanent_order: 20,
        };
        let f3 = fourier_matrix(3).unwrap();
        assert!(matches!(
            quantum_distribution_with(&f3, &OccupationState::ones(3), limits),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn relabeling_moves_mass_with_modes() {
        let u = UnitaryMatrix::identity(3);
        let d = quantum_distribution(&u, &st(&[2, 1, 0])).unwrap();
        let r = d.relabeled(&[2, 0, 1]).unwrap();
        assert_eq!(r.probability(&st(&[1, 0, 2])), 1.0);
        assert_eq!(r.len(), d.len());
        assert!(r.states().windows(2).all(|w| w[0] > w[1]));
        assert!(d.relabeled(&[0, 0, 1]).is_err());
        assert!(d.relabeled(&[0, 1]).is_err());
    }

    #[test]
    fn from_parts_validates() {
        let states = vec![st(&[1, 0]), st(&[0, 1])];
        assert!(OutputDistribution::from_parts(
            ParticleModel::Quantum,
            1,
            2,
            states.clone(),
            vec![0.5, 0.4]
        )
        .is_err());
        assert!(OutputDistribution::from_parts(
            ParticleModel::Quantum,
            1,
            2,
            states.clone(),
            vec![1.5, -0.5]
        )
        .is_err());
        let rev: Vec<_> = states.iter().rev().cloned().collect();
        assert!(
            OutputDistribution::from_parts(ParticleModel::Quantum, 1, 2, rev, vec![0.5, 0.5])
                .is_err()
        );
        assert!(OutputDistribution::from_parts(
            ParticleModel::Quantum,
            1,
            2,
            states,
            vec![0.5, 0.5]
        )
        .is_ok());
    }
}
