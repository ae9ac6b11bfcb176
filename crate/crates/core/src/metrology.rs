//! Multimode Mach-Zehnder phase estimation: `F_n^dagger diag(e^{i f_j phi}) F_n`
//! fed with one photon per mode, read out on the all-ones coincidence.
//!
//! The Fisher information uses the two-outcome fringe model
//! `Counts = (V (2p - 1) + 1)/2 * A`, so
//! `FI = 4 V^2 (dp/dphi)^2 / (1 - V^2 (2p - 1)^2)` and `dphi = 1/sqrt(FI)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::fourier_matrix;
use crate::error::{invalid, Error, Result};
use crate::permanent::permanent;
use crate::unitary::UnitaryMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    Linear,
    Delta,
    NormalizedLinear,
    NormalizedDelta,
    Custom,
}

impl FromStr for PhaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "delta" => Ok(Self::Delta),
            "normalized_linear" | "normalized-linear" => Ok(Self::NormalizedLinear),
            "normalized_delta" | "normalized-delta" => Ok(Self::NormalizedDelta),
            "custom" => Ok(Self::Custom),
            _ => Err(invalid(format!("unknown phase distribution {s:?}"))),
        }
    }
}

impl fmt::Display for PhaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Linear => "linear",
            Self::Delta => "delta",
            Self::NormalizedLinear => "normalized_linear",
            Self::NormalizedDelta => "normalized_delta",
            Self::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Per-mode phase multipliers: mode `j` acquires phase `f_j * phi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDistribution {
    kind: PhaseKind,
    weights: Vec<f64>,
}

impl PhaseDistribution {
    /// `f_j = j - 1` (1-indexed).
    pub fn linear(n: usize) -> Self {
        Self {
            kind: PhaseKind::Linear,
            weights: (0..n).map(|j| j as f64).collect(),
        }
    }

    /// `f_j = delta_{j,1}`.
    pub fn delta(n: usize) -> Self {
        let mut weights = vec![0.0; n];
        if n > 0 {
            weights[0] = 1.0;
        }
        Self {
            kind: PhaseKind::Delta,
            weights,
        }
    }

    /// Linear weights rescaled so `sum f_j = 1`.
    pub fn normalized_linear(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("normalized linear phases need at least 2 modes"));
        }
        let total = (n * (n - 1) / 2) as f64;
        Ok(Self {
            kind: PhaseKind::NormalizedLinear,
            weights: (0..n).map(|j| j as f64 / total).collect(),
        })
    }

    /// The delta distribution already sums to one.
    pub fn normalized_delta(n: usize) -> Self {
        Self {
            kind: PhaseKind::NormalizedDelta,
            ..Self::delta(n)
        }
    }

    pub fn custom(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite()) {
            return Err(invalid("custom phase weights must be finite and non-empty"));
        }
        Ok(Self {
            kind: PhaseKind::Custom,
            weights,
        })
    }

    pub fn of_kind(kind: PhaseKind, n: usize) -> Result<Self> {
        match kind {
            PhaseKind::Linear => Ok(Self::linear(n)),
            PhaseKind::Delta => Ok(Self::delta(n)),
            PhaseKind::NormalizedLinear => Self::normalized_linear(n),
            PhaseKind::NormalizedDelta => Ok(Self::normalized_delta(n)),
            PhaseKind::Custom => Err(invalid("custom phase distributions need explicit weights")),
        }
    }

    pub fn kind(&self) -> PhaseKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Period of the fringe in `phi`, used as the search window for the
    /// optimal operating point. Custom weights default to `2 pi`.
    pub fn period(&self) -> f64 {
        match self.kind {
            PhaseKind::NormalizedLinear => {
                let n = self.weights.len();
                2.0 * PI * (n * (n - 1) / 2) as f64
            }
            _ => 2.0 * PI,
        }
    }
}

fn check_len(n: usize, f: &PhaseDistribution) -> Result<()> {
    if n == 0 {
        return Err(invalid("interferometer needs at least one mode"));
    }
    if f.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: f.len(),
        });
    }
    Ok(())
}

fn diag(v: Array1<Complex64>) -> Array2<Complex64> {
    Array2::from_diag(&v)
}

/// `F_n^dagger diag(e^{i f_j phi}) F_n`.
pub fn mzi_unitary(n: usize, f: &PhaseDistribution, phi: f64) -> Result<UnitaryMatrix> {
    check_len(n, f)?;
    let fourier = fourier_matrix(n)?;
    let phases = diag(Array1::from_iter(
        f.weights
            .iter()
            .map(|&w| Complex64::from_polar(1.0, w * phi)),
    ));
    let m = fourier
        .adjoint()
        .entries()
        .dot(&phases)
        .dot(fourier.entries());
    UnitaryMatrix::with_tolerance(m, 1e-10)
}

/// `d/dphi` of [`mzi_unitary`].
fn mzi_derivative(n: usize, f: &PhaseDistribution, phi: f64) -> Result<Array2<Complex64>> {
    let fourier = fourier_matrix(n)?;
    let phases =
        diag(Array1::from_iter(f.weights.iter().map(|&w| {
            Complex64::new(0.0, w) * Complex64::from_polar(1.0, w * phi)
        })));
    Ok(fourier
        .adjoint()
        .entries()
        .dot(&phases)
        .dot(fourier.entries()))
}

/// Probability of one photon in every output mode.
pub fn coincidence_probability(n: usize, f: &PhaseDistribution, phi: f64) -> Result<f64> {
    let u = mzi_unitary(n, f, phi)?;
    Ok(permanent(u.entries().view())?.norm_sqr().min(1.0))
}

/// Coincidence probability for distinguishable photons, `perm(|U|^2)`.
pub fn classical_coincidence_probability(n: usize, f: &PhaseDistribution, phi: f64) -> Result<f64> {
    let u = mzi_unitary(n, f, phi)?;
    permanent(u.modulus_squared().view())
}

/// Exact `dp/dphi`: the permanent is linear in each row, so
/// `d perm(U) = sum_r perm(U with row r replaced by U'_r)` and
/// `dp = 2 Re(conj(perm U) d perm U)`.
pub fn coincidence_slope(n: usize, f: &PhaseDistribution, phi: f64) -> Result<f64> {
    let (_, dp) = coincidence_with_slope(n, f, phi)?;
    Ok(dp)
}

/// `(p, dp/dphi)` in one pass.
pub fn coincidence_with_slope(n: usize, f: &PhaseDistribution, phi: f64) -> Result<(f64, f64)> {
    let u = mzi_unitary(n, f, phi)?;
    let du = mzi_derivative(n, f, phi)?;
    let perm = permanent(u.entries().view())?;
    let mut dperm = Complex64::new(0.0, 0.0);
    let mut work = u.entries().clone();
    for r in 0..n {
        work.row_mut(r).assign(&du.row(r));
        dperm += permanent(work.view())?;
        work.row_mut(r).assign(&u.entries().row(r));
    }
    let p = perm.norm_sqr().min(1.0);
    Ok((p, 2.0 * (perm.conj() * dperm).re))
}

/// Finite-difference step for [`coincidence_slope_numeric`].
pub const FD_STEP: f64 = 1e-6;

/// Central difference with one Richardson step: `(4 D(h/2) - D(h)) / 3`.
pub fn coincidence_slope_numeric(n: usize, f: &PhaseDistribution, phi: f64) -> Result<f64> {
    let central = |h: f64| -> Result<f64> {
        Ok(
            (coincidence_probability(n, f, phi + h)? - coincidence_probability(n, f, phi - h)?)
                / (2.0 * h),
        )
    };
    let coarse = central(FD_STEP)?;
    let fine = central(FD_STEP / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringePoint {
    pub phi: f64,
    pub p: f64,
}

/// Coincidence probability on each grid point, in grid order.
pub fn fringe_scan(n: usize, f: &PhaseDistribution, phi_grid: &[f64]) -> Result<Vec<FringePoint>> {
    check_len(n, f)?;
    if phi_grid.is_empty() {
        return Err(invalid("phase grid is empty"));
    }
    phi_grid
        .par_iter()
        .map(|&phi| coincidence_probability(n, f, phi).map(|p| FringePoint { phi, p }))
        .collect()
}

/// `points` equally spaced phases on `[start, stop)`.
pub fn phase_grid(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 || !(stop > start) {
        return Err(invalid(format!(
            "phase grid needs points > 0 and stop > start, got {points} points on [{start}, {stop})"
        )));
    }
    let step = (stop - start) / points as f64;
    Ok((0..points).map(|k| start + k as f64 * step).collect())
}

/// Local extrema of a sampled curve, counting the first sample (a fringe
/// starting at its maximum) as one; plateaus count once.
pub fn count_extrema(values: &[f64]) -> usize {
    if values.len() < 2 {
        return values.len();
    }
    let mut count = 1;
    let mut last_sign = 0i8;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        let sign = if d > 1e-12 {
            1
        } else if d < -1e-12 {
            -1
        } else {
            0
        };
        if sign != 0 {
            if last_sign != 0 && sign != last_sign {
                count += 1;
            }
            last_sign = sign;
        }
    }
    count
}

/// Oscillations on `[0, pi)`: half the number of extrema.
pub fn oscillations_per_half_cycle(n: usize, f: &PhaseDistribution, points: usize) -> Result<f64> {
    let grid = phase_grid(0.0, PI, points)?;
    let values: Vec<f64> = fringe_scan(n, f, &grid)?.iter().map(|pt| pt.p).collect();
    Ok(count_extrema(&values) as f64 / 2.0)
}

/// `(max - min) / (max + min)` of a sampled curve.
pub fn contrast_visibility(values: &[f64]) -> Option<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    (!values.is_empty() && max + min > 0.0).then(|| (max - min) / (max + min))
}

/// `4 V^2 (dp/dphi)^2 / (1 - V^2 (2p - 1)^2)`.
pub fn fisher_information(p: f64, dp_dphi: f64, visibility: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("probability {p} outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&visibility) {
        return Err(invalid(format!("visibility {visibility} outside [0, 1]")));
    }
    // 1 - V^2 (2p-1)^2 = (1 - V + 2Vp)(1 - V + 2V(1-p)), free of cancellation near p = 0
    let dark = 1.0 - visibility;
    let denominator = (dark + 2.0 * visibility * p) * (dark + 2.0 * visibility * (1.0 - p));
    if denominator <= 0.0 {
        return Err(Error::SaturatedFringe { denominator });
    }
    Ok(4.0 * visibility * visibility * dp_dphi * dp_dphi / denominator)
}

/// Cramer-Rao bound `1 / sqrt(FI)`.
pub fn phase_uncertainty(fisher_info: f64) -> Result<f64> {
    if !(fisher_info > 0.0) {
        return Err(invalid(format!(
            "Fisher information must be positive, got {fisher_info}"
        )));
    }
    Ok(1.0 / fisher_info.sqrt())
}

/// Ideal delta-scheme sensitivity `sqrt(n / (8 (n - 1)))`.
pub fn ideal_delta_sensitivity(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(invalid(format!("need at least 2 photons, got {n}")));
    }
    Ok((n as f64 / (8.0 * (n - 1) as f64)).sqrt())
}

pub fn shot_noise_limit(n: usize) -> f64 {
    1.0 / (n as f64).sqrt()
}

pub fn heisenberg_limit(n: usize) -> f64 {
    1.0 / n as f64
}

/// Grid spacing of the operating-point search.
pub const SEARCH_GRID_STEP: f64 = 1e-3;
/// Golden-section refinement stops at this bracket width.
pub const SEARCH_REFINE_TOL: f64 = 1e-8;
/// The search window is `[SEARCH_EDGE, period - SEARCH_EDGE]`; at `phi = 0`
/// the ideal fringe is saturated and FI is a 0/0 limit.
pub const SEARCH_EDGE: f64 = 1e-5;

/// `p` and `dp/dphi` cached on the search grid; independent of `V`, so one
/// table serves a whole visibility bisection.
#[derive(Debug, Clone)]
pub struct FringeTable {
    n: usize,
    f: PhaseDistribution,
    phis: Vec<f64>,
    p: Vec<f64>,
    dp: Vec<f64>,
}

/// Best operating point for a given visibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub phi: f64,
    pub fisher_info: f64,
    pub delta_phi: f64,
}

impl FringeTable {
    pub fn new(n: usize, f: &PhaseDistribution) -> Result<Self> {
        check_len(n, f)?;
        let lo = SEARCH_EDGE;
        let hi = f.period() - SEARCH_EDGE;
        let steps = ((hi - lo) / SEARCH_GRID_STEP).floor() as usize;
        let phis: Vec<f64> = (0..=steps)
            .map(|k| lo + k as f64 * SEARCH_GRID_STEP)
            .collect();
        let values = phis
            .par_iter()
            .map(|&phi| coincidence_with_slope(n, f, phi))
            .collect::<Result<Vec<_>>>()?;
        let (p, dp) = values.into_iter().unzip();
        Ok(Self {
            n,
            f: f.clone(),
            phis,
            p,
            dp,
        })
    }

    fn fi_at(&self, phi: f64, visibility: f64) -> f64 {
        coincidence_with_slope(self.n, &self.f, phi)
            .ok()
            .and_then(|(p, dp)| fisher_information(p, dp, visibility).ok())
            .unwrap_or(0.0)
    }

    /// Maximizes FI over `phi`: grid scan, then golden-section refinement
    /// inside the neighbouring grid cells.
    pub fn optimum(&self, visibility: f64) -> Result<OperatingPoint> {
        let mut best: Option<(usize, f64)> = None;
        for (i, (&p, &dp)) in self.p.iter().zip(&self.dp).enumerate() {
            if let Ok(fi) = fisher_information(p, dp, visibility) {
                if best.is_none_or(|(_, b)| fi > b) {
                    best = Some((i, fi));
                }
            }
        }
        let (i, grid_fi) =
            best.ok_or_else(|| invalid("no phase with finite Fisher information"))?;
        let a = self.phis[i.saturating_sub(1)];
        let b = self.phis[(i + 1).min(self.phis.len() - 1)];
        let (phi, fi) = golden_section_max(|x| self.fi_at(x, visibility), a, b, SEARCH_REFINE_TOL);
        let (phi, fi) = if fi >= grid_fi {
            (phi, fi)
        } else {
            (self.phis[i], grid_fi)
        };
        Ok(OperatingPoint {
            phi,
            fisher_info: fi,
            delta_phi: phase_uncertainty(fi)?,
        })
    }
}

fn golden_section_max(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > tol {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - ratio * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + ratio * (b - a);
            gd = g(d);
        }
    }
    let x = 0.5 * (a + b);
    let gx = g(x);
    [(x, gx), (c, gc), (d, gd)]
        .into_iter()
        .fold((x, gx), |acc, cand| if cand.1 > acc.1 { cand } else { acc })
}

/// Best operating point of the `n`-mode interferometer at visibility `V`.
pub fn optimal_operating_point(
    n: usize,
    f: &PhaseDistribution,
    visibility: f64,
) -> Result<OperatingPoint> {
    FringeTable::new(n, f)?.optimum(visibility)
}

/// Bisection steps on `V`; `2^-40` is far below any reported digit.
const BISECTION_STEPS: usize = 40;

/// Smallest visibility whose best FI exceeds `n` (beats the shot-noise limit),
/// for the delta scheme.
pub fn visibility_threshold(n: usize) -> Result<f64> {
    visibility_threshold_for(n, &PhaseDistribution::delta(n))
}

pub fn visibility_threshold_for(n: usize, f: &PhaseDistribution) -> Result<f64> {
    if n < 2 {
        return Err(invalid(format!("need at least 2 photons, got {n}")));
    }
    let table = FringeTable::new(n, f)?;
    threshold_from_table(&table, n)
}

fn threshold_from_table(table: &FringeTable, n: usize) -> Result<f64> {
    let target = n as f64;
    let beats = |v: f64| table.optimum(v).map(|op| op.fisher_info > target);
    if !beats(1.0)? {
        // cannot beat the SNL even with a perfect fringe
        return Ok(f64::INFINITY);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if beats(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub n: usize,
    pub visibility: f64,
    pub phi_star: f64,
    pub fisher_info: f64,
    pub delta_phi: f64,
    pub snl: f64,
    pub hl: f64,
    pub beats_snl: bool,
}

impl SensitivityReport {
    pub fn from_operating_point(n: usize, visibility: f64, op: OperatingPoint) -> Self {
        let snl = shot_noise_limit(n);
        Self {
            n,
            visibility,
            phi_star: op.phi,
            fisher_info: op.fisher_info,
            delta_phi: op.delta_phi,
            snl,
            hl: heisenberg_limit(n),
            beats_snl: op.delta_phi < snl,
        }
    }
}

/// Best `dphi` over the operating point for visibility `V`, with the SNL and
/// HL reference lines.
pub fn sensitivity_report(
    n: usize,
    f: &PhaseDistribution,
    visibility: f64,
) -> Result<SensitivityReport> {
    if n < 1 {
        return Err(invalid("need at least one photon"));
    }
    let op = optimal_operating_point(n, f, visibility)?;
    Ok(SensitivityReport::from_operating_point(n, visibility, op))
}

/// One row of the sensitivity table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub n: usize,
    /// `sqrt(n / (8 (n - 1)))`; only meaningful for the delta scheme.
    pub delta_phi_formula: f64,
    /// Best `dphi` at `V = 1`.
    pub delta_phi_ideal: f64,
    pub report: SensitivityReport,
    pub threshold: f64,
    /// Ideal sensitivity no better than the SNL.
    pub beyond_crossover: bool,
}

pub fn sensitivity_table(
    max_n: usize,
    f_kind: PhaseKind,
    visibility: f64,
) -> Result<Vec<SensitivityRow>> {
    if max_n < 2 {
        return Err(invalid(format!(
            "max photon number must be at least 2, got {max_n}"
        )));
    }
    (2..=max_n)
        .map(|n| {
            let f = PhaseDistribution::of_kind(f_kind, n)?;
            let table = FringeTable::new(n, &f)?;
            let ideal = table.optimum(1.0)?;
            let report =
                SensitivityReport::from_operating_point(n, visibility, table.optimum(visibility)?);
            Ok(SensitivityRow {
                n,
                delta_phi_formula: ideal_delta_sensitivity(n)?,
                delta_phi_ideal: ideal.delta_phi,
                report,
                threshold: threshold_from_table(&table, n)?,
                beyond_crossover: ideal.delta_phi >= shot_noise_limit(n),
            })
        })
        .collect()
}

/// Normalized linear vs delta fringes on a common grid, with the quantities
/// that decide which one senses better near the origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedComparison {
    pub n: usize,
    pub phis: Vec<f64>,
    pub p_delta: Vec<f64>,
    pub p_normalized_linear: Vec<f64>,
    /// `|dp/dphi|` at `phi = slope_probe`.
    pub slope_probe: f64,
    pub slope_delta: f64,
    pub slope_normalized_linear: f64,
    /// Best FI at `V = 1` within `(0, slope_window]`.
    pub fisher_delta: f64,
    pub fisher_normalized_linear: f64,
}

pub fn normalized_comparison(
    n: usize,
    phi_grid: &[f64],
    slope_probe: f64,
) -> Result<NormalizedComparison> {
    let delta = PhaseDistribution::normalized_delta(n);
    let lin = PhaseDistribution::normalized_linear(n)?;
    let p_delta = fringe_scan(n, &delta, phi_grid)?
        .iter()
        .map(|p| p.p)
        .collect();
    let p_lin = fringe_scan(n, &lin, phi_grid)?
        .iter()
        .map(|p| p.p)
        .collect();
    let fi_near_origin = |f: &PhaseDistribution| -> Result<f64> {
        let (p, dp) = coincidence_with_slope(n, f, slope_probe)?;
        fisher_information(p, dp, 1.0)
    };
    Ok(NormalizedComparison {
        n,
        phis: phi_grid.to_vec(),
        p_delta,
        p_normalized_linear: p_lin,
        slope_probe,
        slope_delta: coincidence_slope(n, &delta, slope_probe)?.abs(),
        slope_normalized_linear: coincidence_slope(n, &lin, slope_probe)?.abs(),
        fisher_delta: fi_near_origin(&delta)?,
        fisher_normalized_linear: fi_near_origin(&lin)?,
    })
}
