//! Fourier interferometers built from optical elements over path and
//! polarization modes.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fock::quantum_distribution;
use crate::state::OccupationState;
use crate::unitary::UnitaryMatrix;

/// `F[j, k] = exp(+2 pi i j k / n) / sqrt(n)`, 0-indexed.
///
/// The `+` sign reproduces the relative signs of the generalized HOM output
/// states, e.g. `|11> -> (|20> - |02>)/sqrt 2`.
pub fn fourier_matrix(n: usize) -> Result<UnitaryMatrix> {
    if n == 0 {
        return Err(invalid("Fourier matrix needs at least one mode"));
    }
    let norm = 1.0 / (n as f64).sqrt();
    let m = Array2::from_shape_fn((n, n), |(j, k)| {
        // reduce j*k mod n first so large products keep full phase precision
        let angle = 2.0 * PI * ((j * k) % n) as f64 / n as f64;
        Complex64::from_polar(norm, angle)
    });
    Ok(UnitaryMatrix::from_trusted(m))
}

/// `H(theta) = [[1, e^{i theta}], [1, -e^{i theta}]] / sqrt 2`.
pub fn hadamard_phase_block(theta: f64) -> UnitaryMatrix {
    let e = Complex64::from_polar(FRAC_1_SQRT_2, theta);
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    UnitaryMatrix::from_trusted(ndarray::array![[s, e], [s, -e]])
}

/// Mode routing of the interleaved-to-blocked shuffle: interleaved index
/// `2p` (H of path p) goes to `p`, `2p + 1` (V of path p) goes to `d + p`.
pub fn shuffle_routing(paths: usize) -> Vec<usize> {
    (0..2 * paths)
        .map(|j| if j % 2 == 0 { j / 2 } else { paths + j / 2 })
        .collect()
}

/// `P` with `P (H1, V1, ..., Hd, Vd)^T = (H1, ..., Hd, V1, ..., Vd)^T`.
pub fn shuffle_permutation(paths: usize) -> Result<UnitaryMatrix> {
    if paths == 0 {
        return Err(invalid("shuffle needs at least one path"));
    }
    UnitaryMatrix::permutation(&shuffle_routing(paths))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Polarization {
    H,
    V,
}

/// Bijection between mode indices and (path, polarization) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModeLabeling {
    modes: Vec<(usize, Polarization)>,
}

impl ModeLabeling {
    /// `(H1, V1, H2, V2, ..., Hd, Vd)`.
    pub fn interleaved(paths: usize) -> Self {
        let modes = (0..paths)
            .flat_map(|p| [(p, Polarization::H), (p, Polarization::V)])
            .collect();
        Self { modes }
    }

    pub fn custom(modes: Vec<(usize, Polarization)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for m in &modes {
            if !seen.insert(*m) {
                return Err(invalid(format!("mode {m:?} listed twice")));
            }
        }
        Ok(Self { modes })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn label(&self, index: usize) -> Option<(usize, Polarization)> {
        self.modes.get(index).copied()
    }

    pub fn index_of(&self, path: usize, pol: Polarization) -> Option<usize> {
        self.modes.iter().position(|&m| m == (path, pol))
    }

    fn path_pair(&self, path: usize) -> Result<(usize, usize)> {
        match (
            self.index_of(path, Polarization::H),
            self.index_of(path, Polarization::V),
        ) {
            (Some(h), Some(v)) => Ok((h, v)),
            _ => Err(invalid(format!("path {path} lacks an H or V mode"))),
        }
    }
}

/// Jones matrix of a half-wave plate with fast axis at `angle` from H.
pub fn half_wave_plate(angle: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (2.0 * angle).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(-c, 0.0)],
    ]
}

/// Jones matrix of a quarter-wave plate with fast axis at `angle` from H.
pub fn quarter_wave_plate(angle: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = angle.sin_cos();
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    // R(-a) diag(1, i) R(a)
    [
        [one * c * c + i * s * s, (one - i) * c * s],
        [(one - i) * c * s, one * s * s + i * c * c],
    ]
}

/// A single optical component. Mode indices refer to the circuit's full mode set.
#[derive(Debug, Clone, PartialEq)]
pub enum CircuitElement {
    /// Non-polarizing beam splitter acting identically on each mode pair
    /// (one pair per polarization for polarized paths).
    Nbs {
        pairs: Vec<(usize, usize)>,
        reflectivity: f64,
    },
    /// Polarization-dependent beam splitter. `v_pair = None` leaves the
    /// vertical channel untouched (unit action, no reflection phase).
    Pdbs {
        h_pair: (usize, usize),
        v_pair: Option<(usize, usize)>,
        reflectivity_h: f64,
        reflectivity_v: f64,
    },
    /// Jones matrix on the `(h, v)` modes of one path.
    WavePlate {
        h: usize,
        v: usize,
        jones: [[Complex64; 2]; 2],
    },
    PhaseShift {
        mode: usize,
        theta: f64,
    },
    /// Routes mode `j` to `routing[j]`.
    Permutation {
        routing: Vec<usize>,
    },
    /// Arbitrary unitary on a subset of modes.
    Block {
        label: String,
        modes: Vec<usize>,
        unitary: UnitaryMatrix,
    },
}

/// `[[sqrt r, sqrt(1-r)], [sqrt(1-r), -sqrt r]]`; `r = 1/2` is the Hadamard.
pub fn beam_splitter(reflectivity: f64) -> Result<UnitaryMatrix> {
    if !(0.0..=1.0).contains(&reflectivity) {
        return Err(invalid(format!(
            "reflectivity {reflectivity} outside [0, 1]"
        )));
    }
    let r = Complex64::new(reflectivity.sqrt(), 0.0);
    let t = Complex64::new((1.0 - reflectivity).sqrt(), 0.0);
    Ok(UnitaryMatrix::from_trusted(ndarray::array![
        [r, t],
        [t, -r]
    ]))
}

impl CircuitElement {
    /// Wave plate on a path of `labeling`.
    pub fn wave_plate(
        labeling: &ModeLabeling,
        path: usize,
        jones: [[Complex64; 2]; 2],
    ) -> Result<Self> {
        let (h, v) = labeling.path_pair(path)?;
        Ok(Self::WavePlate { h, v, jones })
    }

    /// Non-polarizing beam splitter between two paths of `labeling`,
    /// mixing H with H and V with V.
    pub fn path_nbs(
        labeling: &ModeLabeling,
        p: usize,
        q: usize,
        reflectivity: f64,
    ) -> Result<Self> {
        let mut pairs = Vec::new();
        for pol in [Polarization::H, Polarization::V] {
            match (labeling.index_of(p, pol), labeling.index_of(q, pol)) {
                (Some(a), Some(b)) => pairs.push((a, b)),
                (None, None) => {}
                _ => {
                    return Err(invalid(format!(
                        "paths {p} and {q} differ in {pol:?} modes"
                    )))
                }
            }
        }
        Ok(Self::Nbs {
            pairs,
            reflectivity,
        })
    }

    /// Full `dim`-mode unitary of this element.
    pub fn expand(&self, dim: usize) -> Result<UnitaryMatrix> {
        match self {
            Self::Nbs {
                pairs,
                reflectivity,
            } => {
                let bs = beam_splitter(*reflectivity)?;
                let mut u = UnitaryMatrix::identity(dim);
                check_disjoint(pairs.iter().flat_map(|&(a, b)| [a, b]), dim)?;
                for &(a, b) in pairs {
                    u = UnitaryMatrix::embed(&bs, &[a, b], dim)?.mul(&u)?;
                }
                Ok(u)
            }
            Self::Pdbs {
                h_pair,
                v_pair,
                reflectivity_h,
                reflectivity_v,
            } => {
                let mut touched = vec![h_pair.0, h_pair.1];
                if let Some((a, b)) = v_pair {
                    touched.extend([*a, *b]);
                }
                check_disjoint(touched.into_iter(), dim)?;
                let mut u = UnitaryMatrix::embed(
                    &beam_splitter(*reflectivity_h)?,
                    &[h_pair.0, h_pair.1],
                    dim,
                )?;
                match v_pair {
                    Some((a, b)) => {
                        let v =
                            UnitaryMatrix::embed(&beam_splitter(*reflectivity_v)?, &[*a, *b], dim)?;
                        u = v.mul(&u)?;
                    }
                    None => beam_splitter(*reflectivity_v).map(|_| ())?,
                }
                Ok(u)
            }
            Self::WavePlate { h, v, jones } => {
                let j = UnitaryMatrix::new(ndarray::array![
                    [jones[0][0], jones[0][1]],
                    [jones[1][0], jones[1][1]]
                ])?;
                UnitaryMatrix::embed(&j, &[*h, *v], dim)
            }
            Self::PhaseShift { mode, theta } => {
                if *mode >= dim {
                    return Err(invalid(format!("mode {mode} outside {dim} modes")));
                }
                let mut m = Array2::eye(dim);
                m[(*mode, *mode)] = Complex64::from_polar(1.0, *theta);
                Ok(UnitaryMatrix::from_trusted(m))
            }
            Self::Permutation { routing } => {
                if routing.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        actual: routing.len(),
                    });
                }
                UnitaryMatrix::permutation(routing)
            }
            Self::Block { modes, unitary, .. } => UnitaryMatrix::embed(unitary, modes, dim),
        }
    }

    /// Short human-readable tag.
    pub fn describe(&self) -> String {
        match self {
            Self::Nbs {
                pairs,
                reflectivity,
            } => format!("NBS(r={reflectivity}) on {pairs:?}"),
            Self::Pdbs {
                h_pair,
                v_pair,
                reflectivity_h,
                reflectivity_v,
            } => format!("PDBS(rH={reflectivity_h}, rV={reflectivity_v}) H{h_pair:?} V{v_pair:?}"),
            Self::WavePlate { h, v, .. } => format!("wave plate on ({h},{v})"),
            Self::PhaseShift { mode, theta } => format!("phase {theta} on {mode}"),
            Self::Permutation { routing } => format!("permutation {routing:?}"),
            Self::Block { label, modes, .. } => format!("{label} on {modes:?}"),
        }
    }
}

fn check_disjoint(modes: impl Iterator<Item = usize>, dim: usize) -> Result<()> {
    let mut seen = vec![false; dim];
    for m in modes {
        if m >= dim || seen[m] {
            return Err(invalid(format!("mode {m} repeated or outside {dim} modes")));
        }
        seen[m] = true;
    }
    Ok(())
}

/// Ordered list of elements; the first element acts first.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    modes: usize,
    elements: Vec<CircuitElement>,
}

impl Circuit {
    pub fn new(modes: usize) -> Self {
        Self {
            modes,
            elements: Vec::new(),
        }
    }

    pub fn push(&mut self, element: CircuitElement) -> &mut Self {
        self.elements.push(element);
        self
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn elements(&self) -> &[CircuitElement] {
        &self.elements
    }

    pub fn compose(&self) -> Result<UnitaryMatrix> {
        compose(self)
    }
}

/// Ordered matrix product `E_k ... E_2 E_1`.
pub fn compose(circuit: &Circuit) -> Result<UnitaryMatrix> {
    if circuit.modes == 0 {
        return Err(invalid("circuit has no modes"));
    }
    circuit
        .elements
        .iter()
        .try_fold(UnitaryMatrix::identity(circuit.modes), |acc, e| {
            e.expand(circuit.modes)?.mul(&acc)
        })
}

/// Circuit composing to `F_{2d}` over `d` polarized paths.
///
/// Stages, in order: shuffle to blocked order `(H.., V..)`; `F_d` on the H
/// block and on the V block; unshuffle back to path order; on path `k` the
/// wave plate `H(k pi / d)`; final shuffle so output `k` and `k + d` carry the
/// two arms of butterfly `k`. Input modes are read in interleaved order.
pub fn butterfly_factorization(paths: usize) -> Result<Circuit> {
    if paths == 0 {
        return Err(invalid("butterfly factorization needs at least one path"));
    }
    let d = paths;
    let labeling = ModeLabeling::interleaved(d);
    let shuffle = shuffle_routing(d);
    let mut unshuffle = vec![0; 2 * d];
    for (j, &s) in shuffle.iter().enumerate() {
        unshuffle[s] = j;
    }
    let fd = fourier_matrix(d)?;

    let mut c = Circuit::new(2 * d);
    c.push(CircuitElement::Permutation {
        routing: shuffle.clone(),
    });
    c.push(CircuitElement::Block {
        label: format!("F{d} (H block)"),
        modes: (0..d).collect(),
        unitary: fd.clone(),
    });
    c.push(CircuitElement::Block {
        label: format!("F{d} (V block)"),
        modes: (d..2 * d).collect(),
        unitary: fd,
    });
    c.push(CircuitElement::Permutation { routing: unshuffle });
    for k in 0..d {
        let h = hadamard_phase_block(k as f64 * PI / d as f64);
        let e = h.entries();
        let jones = [[e[(0, 0)], e[(0, 1)]], [e[(1, 0)], e[(1, 1)]]];
        c.push(CircuitElement::wave_plate(&labeling, k, jones)?);
    }
    c.push(CircuitElement::Permutation { routing: shuffle });
    Ok(c)
}

/// Element-level circuits of the two-, three- and four-mode bulk-optics
/// Fourier interferometers.
///
/// * n = 2: one 50/50 NBS between two paths.
/// * n = 3: modes `(H1, V1, H2)`; HWP at 22.5 deg on path 1, PDBS with
///   reflectivity 1/3 for H (the V mode has no partner and passes unchanged),
///   then QWP + HWP (`HS`) on path 1.
/// * n = 4: modes `(H1, V1, H2, V2)`; 50/50 NBS, HWP at 22.5 deg on path 1,
///   QWP at 0 then HWP at 22.5 deg on path 2.
pub fn paper_circuit(n: usize) -> Result<Circuit> {
    let hwp = half_wave_plate(PI / 8.0);
    let qwp = quarter_wave_plate(0.0);
    match n {
        2 => {
            let mut c = Circuit::new(2);
            c.push(CircuitElement::Nbs {
                pairs: vec![(0, 1)],
                reflectivity: 0.5,
            });
            Ok(c)
        }
        3 => {
            let labeling = ModeLabeling::custom(vec![
                (0, Polarization::H),
                (0, Polarization::V),
                (1, Polarization::H),
            ])?;
            let h1 = labeling.index_of(0, Polarization::H).unwrap();
            let h2 = labeling.index_of(1, Polarization::H).unwrap();
            let mut c = Circuit::new(3);
            c.push(CircuitElement::wave_plate(&labeling, 0, hwp)?);
            c.push(CircuitElement::Pdbs {
                h_pair: (h1, h2),
                v_pair: None,
                reflectivity_h: 1.0 / 3.0,
                reflectivity_v: 1.0,
            });
            c.push(CircuitElement::wave_plate(&labeling, 0, qwp)?);
            c.push(CircuitElement::wave_plate(&labeling, 0, hwp)?);
            Ok(c)
        }
        4 => {
            let labeling = ModeLabeling::interleaved(2);
            let mut c = Circuit::new(4);
            c.push(CircuitElement::path_nbs(&labeling, 0, 1, 0.5)?);
            c.push(CircuitElement::wave_plate(&labeling, 0, hwp)?);
            c.push(CircuitElement::wave_plate(&labeling, 1, qwp)?);
            c.push(CircuitElement::wave_plate(&labeling, 1, hwp)?);
            Ok(c)
        }
        _ => Err(Error::Unsupported(format!(
            "no bulk-optics circuit for {n} modes (supported: 2, 3, 4)"
        ))),
    }
}

/// Tolerance on `|U_jk| = 1/sqrt n`.
pub const MODULUS_TOL: f64 = 1e-6;
/// Per-state tolerance when comparing single-photon-per-mode distributions.
pub const DISTRIBUTION_TOL: f64 = 1e-9;
/// Largest mode count for the permutation search.
pub const MAX_EQUIVALENCE_MODES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusFailure {
    pub row: usize,
    pub col: usize,
    pub modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateMismatch {
    pub state: String,
    pub probability: f64,
    pub reference: f64,
}

/// Outcome of [`is_fourier_equivalent`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub modes: usize,
    pub equivalent: bool,
    pub uniform_modulus: bool,
    pub modulus_failures: Vec<ModulusFailure>,
    pub distribution_match: bool,
    /// Output relabeling `sigma` with `P_U(T) = P_F(sigma(T))`, when found.
    pub output_permutation: Option<Vec<usize>>,
    /// Mismatches under the identity relabeling, reported when no permutation works.
    pub distribution_mismatches: Vec<StateMismatch>,
}

const MAX_REPORTED_MISMATCHES: usize = 32;

/// Checks that `u` behaves as an `n`-mode Fourier interferometer: every
/// `|U_jk| = 1/sqrt n`, and one photon per input mode gives the same output
/// distribution as `F_n` up to relabeling the output modes.
pub fn is_fourier_equivalent(u: &UnitaryMatrix) -> Result<EquivalenceReport> {
    let n = u.dim();
    if n > MAX_EQUIVALENCE_MODES {
        return Err(Error::ResourceLimit {
            what: "modes for equivalence check",
            requested: n as u128,
            cap: MAX_EQUIVALENCE_MODES as u128,
        });
    }
    let target = 1.0 / (n as f64).sqrt();
    let mut modulus_failures = Vec::new();
    for ((row, col), z) in u.entries().indexed_iter() {
        if (z.norm() - target).abs() > MODULUS_TOL {
            modulus_failures.push(ModulusFailure {
                row,
                col,
                modulus: z.norm(),
            });
        }
    }

    let input = OccupationState::ones(n);
    let mine = quantum_distribution(u, &input)?;
    let reference = quantum_distribution(&fourier_matrix(n)?, &input)?;
    let output_permutation =
        find_output_permutation(mine.probabilities(), &reference, mine.states());

    let distribution_mismatches = if output_permutation.is_some() {
        Vec::new()
    } else {
        mine.iter()
            .filter_map(|(s, p)| {
                let q = reference.probability(s);
                ((p - q).abs() > DISTRIBUTION_TOL).then(|| StateMismatch {
                    state: s.label(),
                    probability: p,
                    reference: q,
                })
            })
            .take(MAX_REPORTED_MISMATCHES)
            .collect()
    };

    let uniform_modulus = modulus_failures.is_empty();
    let distribution_match = output_permutation.is_some();
    Ok(EquivalenceReport {
        modes: n,
        equivalent: uniform_modulus && distribution_match,
        uniform_modulus,
        modulus_failures,
        distribution_match,
        output_permutation,
        distribution_mismatches,
    })
}

/// Backtracking search for `sigma`; after fixing `sigma(0..=k)` every state
/// supported on modes `0..=k` is checked, which prunes most branches early.
fn find_output_permutation(
    probs: &[f64],
    reference: &crate::fock::OutputDistribution,
    states: &[OccupationState],
) -> Option<Vec<usize>> {
    let n = reference.modes();
    let mut by_last_mode: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, s) in states.iter().enumerate() {
        let last = s.counts().iter().rposition(|&c| c > 0).unwrap_or(0);
        by_last_mode[last].push(i);
    }
    let mut sigma = vec![usize::MAX; n];
    let mut used = vec![false; n];
    if search(
        0,
        &mut sigma,
        &mut used,
        &by_last_mode,
        probs,
        reference,
        states,
    ) {
        Some(sigma)
    } else {
        None
    }
}

fn search(
    depth: usize,
    sigma: &mut [usize],
    used: &mut [bool],
    groups: &[Vec<usize>],
    probs: &[f64],
    reference: &crate::fock::OutputDistribution,
    states: &[OccupationState],
) -> bool {
    let n = sigma.len();
    if depth == n {
        return true;
    }
    for target in 0..n {
        if used[target] {
            continue;
        }
        sigma[depth] = target;
        used[target] = true;
        let consistent = groups[depth].iter().all(|&i| {
            let s = &states[i];
            // only modes 0..=depth are occupied, so the partial sigma suffices
            let mut mapped = vec![0; n];
            for (j, &c) in s.counts().iter().enumerate().take(depth + 1) {
                mapped[sigma[j]] = c;
            }
            let mapped = OccupationState::new(mapped).expect("non-empty");
            (probs[i] - reference.probability(&mapped)).abs() <= DISTRIBUTION_TOL
        });
        if consistent && search(depth + 1, sigma, used, groups, probs, reference, states) {
            return true;
        }
        used[target] = false;
        sigma[depth] = usize::MAX;
    }
    false
}
