//! Acceptance criteria, one line per criterion.
//!
//! Runs without the libtest harness so every PASS/FAIL line is printed, not
//! just the failures. Exits non-zero when any criterion fails.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use ndarray::Array2;
use num_complex::Complex64;
use qftsim::circuits::{butterfly_factorization, fourier_matrix};
use qftsim::emulator::{
    coverage_study, estimate_sensitivity, expected_counts, fit_fringe, synthesize_counts,
    CountRecord, FitWeighting,
};
use qftsim::fock::{classical_distribution, quantum_distribution};
use qftsim::interference::{
    pair_correlation_witness, permanent_zero_test, suppression_predicate, violation_ratio,
};
use qftsim::metrology::{
    coincidence_probability, heisenberg_limit, ideal_delta_sensitivity,
    oscillations_per_half_cycle, phase_grid, sensitivity_report, shot_noise_limit,
    visibility_threshold, FringeTable, PhaseDistribution,
};
use qftsim::permanent::{permanent, permanent_by_permutations};
use qftsim::state::{enumerate_output_states, OccupationState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Collects individual checks for one criterion.
#[derive(Default)]
struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn within_time(&mut self, elapsed: Duration, limit_s: f64) {
        self.check(
            elapsed.as_secs_f64() < limit_s,
            format!("runtime {:.2}s exceeds {limit_s}s", elapsed.as_secs_f64()),
        );
    }
}

fn generalized_hom_distributions(c: &mut Checks) {
    let start = Instant::now();
    let expected: [(usize, Vec<(Vec<usize>, f64)>); 3] = [
        (2, vec![(vec![2, 0], 0.5), (vec![0, 2], 0.5)]),
        (
            3,
            vec![
                (vec![3, 0, 0], 2.0 / 9.0),
                (vec![0, 3, 0], 2.0 / 9.0),
                (vec![0, 0, 3], 2.0 / 9.0),
                (vec![1, 1, 1], 1.0 / 3.0),
            ],
        ),
        (
            4,
            vec![
                (vec![4, 0, 0, 0], 6.0 / 64.0),
                (vec![0, 4, 0, 0], 6.0 / 64.0),
                (vec![0, 0, 4, 0], 6.0 / 64.0),
                (vec![0, 0, 0, 4], 6.0 / 64.0),
                (vec![1, 2, 1, 0], 1.0 / 8.0),
                (vec![0, 1, 2, 1], 1.0 / 8.0),
                (vec![1, 0, 1, 2], 1.0 / 8.0),
                (vec![2, 1, 0, 1], 1.0 / 8.0),
                (vec![2, 0, 2, 0], 1.0 / 16.0),
                (vec![0, 2, 0, 2], 1.0 / 16.0),
            ],
        ),
    ];
    for (n, support) in expected {
        let d =
            quantum_distribution(&fourier_matrix(n).unwrap(), &OccupationState::ones(n)).unwrap();
        let mut worst = 0.0f64;
        for (s, p) in d.iter() {
            let target = support
                .iter()
                .find(|(t, _)| t.as_slice() == s.counts())
                .map_or(0.0, |(_, q)| *q);
            worst = worst.max((p - target).abs());
        }
        c.check(worst <= 1e-10, format!("n={n}: max deviation {worst:e}"));
        c.note(format!("n={n} max dev {worst:.1e}"));
    }
    c.within_time(start.elapsed(), 1.0);
}

fn ideal_phase_sensitivity_table(c: &mut Checks) {
    let start = Instant::now();
    let rows = [
        (2usize, 0.500, 0.707, 0.500),
        (3, 0.433, 0.577, 0.333),
        (4, 0.408, 0.500, 0.250),
    ];
    for (n, dphi, snl, hl) in rows {
        let table = FringeTable::new(n, &PhaseDistribution::delta(n)).unwrap();
        let best = table.optimum(1.0).unwrap().delta_phi;
        c.check(
            (best - dphi).abs() <= 5e-4,
            format!("n={n}: dphi {best} vs {dphi}"),
        );
        c.check(
            shot_noise_limit(n) == 1.0 / (n as f64).sqrt(),
            format!("n={n}: SNL not 1/sqrt(n)"),
        );
        c.check(
            heisenberg_limit(n) == 1.0 / n as f64,
            format!("n={n}: HL not 1/n"),
        );
        c.check(
            (shot_noise_limit(n) - snl).abs() <= 5e-4,
            format!("n={n}: SNL {} vs {snl}", shot_noise_limit(n)),
        );
        c.check(
            (heisenberg_limit(n) - hl).abs() <= 5e-4,
            format!("n={n}: HL {} vs {hl}", heisenberg_limit(n)),
        );
        let formula = ideal_delta_sensitivity(n).unwrap();
        c.check(
            (formula - best).abs() <= 5e-4,
            format!("n={n}: formula {formula} vs optimum {best}"),
        );
        c.note(format!("n={n} dphi {best:.4}"));
    }
    c.within_time(start.elapsed(), 5.0);
}

fn visibility_thresholds(c: &mut Checks) {
    let start = Instant::now();
    for (n, target) in [(2usize, 0.708), (3, 0.826), (4, 0.923)] {
        let v = visibility_threshold(n).unwrap();
        c.check(
            (v - target).abs() <= 2e-3,
            format!("n={n}: threshold {v} vs {target}"),
        );
        c.note(format!("n={n} V* {v:.5}"));
    }
    c.within_time(start.elapsed(), 10.0);
}

fn classical_violation_ratios(c: &mut Checks) {
    for (n, target) in [(2usize, 0.5), (3, 2.0 / 3.0), (4, 0.75)] {
        let d =
            classical_distribution(&fourier_matrix(n).unwrap(), &OccupationState::ones(n)).unwrap();
        let v = violation_ratio(&d, n).unwrap();
        c.check(
            (v - target).abs() <= 1e-12,
            format!("n={n}: {v} vs {target}"),
        );
        c.note(format!("n={n} {v:.12}"));
    }
}

fn pair_correlation_witness_values(c: &mut Checks) {
    // ideal values sit below the measured 0.052, 0.396, 0.556
    for (n, ideal, measured) in [(2usize, 0.0, 0.052), (3, 1.0 / 3.0, 0.396), (4, 0.5, 0.556)] {
        let f = fourier_matrix(n).unwrap();
        let input = OccupationState::ones(n);
        let q = pair_correlation_witness(&quantum_distribution(&f, &input).unwrap()).unwrap();
        let cl = pair_correlation_witness(&classical_distribution(&f, &input).unwrap()).unwrap();
        let bound = 1.0 - 1.0 / n as f64;
        c.check(
            (q.g_bar - ideal).abs() <= 1e-12,
            format!("n={n}: quantum G {} vs {ideal}", q.g_bar),
        );
        c.check(
            q.g_bar < measured,
            format!("n={n}: quantum G {} not below {measured}", q.g_bar),
        );
        c.check(q.violated, format!("n={n}: quantum witness not violated"));
        c.check(
            (cl.g_bar - bound).abs() <= 1e-12,
            format!("n={n}: classical G {} vs bound {bound}", cl.g_bar),
        );
        c.check(
            (q.classical_bound - bound).abs() <= 1e-15,
            format!("n={n}: bound {}", q.classical_bound),
        );
        c.note(format!("n={n} G {:.4}/{:.4}", q.g_bar, cl.g_bar));
    }
}

fn suppression_rule_matches_permanents(c: &mut Checks) {
    let start = Instant::now();
    for n in 1..=6 {
        let mut disagreements = Vec::new();
        let states = enumerate_output_states(n, n).unwrap();
        for s in &states {
            let rule = suppression_predicate(n, s).unwrap().suppressed;
            let zero = permanent_zero_test(n, s).unwrap();
            if rule != zero {
                disagreements.push(s.to_string());
            }
        }
        c.check(
            disagreements.is_empty(),
            format!(
                "n={n}: {} of {} states disagree (zero amplitude, rule allows): {}",
                disagreements.len(),
                states.len(),
                disagreements.join(" ")
            ),
        );
        c.note(format!(
            "n={n} {}/{}",
            states.len() - disagreements.len(),
            states.len()
        ));
    }
    c.within_time(start.elapsed(), 30.0);
}

fn butterfly_factorization_identity(c: &mut Checks) {
    for d in [1usize, 2, 3, 4, 8] {
        let u = butterfly_factorization(d).unwrap().compose().unwrap();
        let diff = u.max_abs_diff(&fourier_matrix(2 * d).unwrap());
        c.check(diff <= 1e-10, format!("d={d}: max |diff| {diff:e}"));
        c.note(format!("d={d} {diff:.0e}"));
    }
}

fn fringe_oscillation_counts(c: &mut Checks) {
    let cases = [
        (2usize, PhaseDistribution::linear(2), 1.0),
        (3, PhaseDistribution::linear(3), 1.5),
        (3, PhaseDistribution::delta(3), 1.5),
        (4, PhaseDistribution::linear(4), 2.0),
        (4, PhaseDistribution::delta(4), 2.0),
    ];
    for (n, f, target) in cases {
        let osc = oscillations_per_half_cycle(n, &f, 2000).unwrap();
        c.check(
            osc == target,
            format!("n={n} {}: {osc} oscillations, expected {target}", f.kind()),
        );
        c.note(format!("n={n} {} {osc}", f.kind()));
    }
}

fn ryser_matches_permutation_sum(c: &mut Checks) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    for k in 0..=7 {
        for _ in 0..100 {
            let m = Array2::from_shape_fn((k, k), |_| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let a = permanent(m.view()).unwrap();
            let b = permanent_by_permutations(m.view()).unwrap();
            worst = worst.max((a - b).norm());
        }
    }
    c.check(worst <= 1e-12, format!("max |ryser - naive| {worst:e}"));
    c.note(format!("max dev {worst:.1e}"));
}

fn noiseless_records(
    n: usize,
    f: &PhaseDistribution,
    grid: &[f64],
    a: f64,
    v: f64,
) -> Vec<CountRecord> {
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

fn emulator_beats_shot_noise_and_calibrated(c: &mut Checks) {
    let grid = phase_grid(0.0, 2.0 * PI, 50).unwrap();
    for (n, v, seed) in [(3usize, 0.94, 31u64), (4, 0.97, 32)] {
        let f = PhaseDistribution::delta(n);
        let r = sensitivity_report(n, &f, v).unwrap();
        c.check(
            r.beats_snl,
            format!("n={n} V={v}: dphi {} not below SNL", r.delta_phi),
        );
        let records = synthesize_counts(n, &f, &grid, 1e5, v, seed).unwrap();
        let fit = fit_fringe(&records, n, &f).unwrap();
        let est = estimate_sensitivity(&fit, n, &f).unwrap();
        c.check(
            est.report.beats_snl,
            format!("n={n}: fitted dphi {} not below SNL", est.report.delta_phi),
        );
        c.note(format!(
            "n={n} dphi {:.4}+-{:.4}",
            est.report.delta_phi, est.sigma_delta_phi
        ));
    }

    let f3 = PhaseDistribution::delta(3);
    let study = coverage_study(
        3,
        &f3,
        &grid,
        1e5,
        0.94,
        2718,
        1000,
        FitWeighting::Unweighted,
    )
    .unwrap();
    c.check(
        study.within_three_sigma >= 0.99,
        format!("3-sigma coverage {}", study.within_three_sigma),
    );
    c.check(
        study.within_two_sigma >= 0.93,
        format!("2-sigma coverage {}", study.within_two_sigma),
    );
    c.note(format!(
        "cov {:.3}/{:.3}",
        study.within_two_sigma, study.within_three_sigma
    ));

    let fine = phase_grid(0.05, 2.0 * PI, 40).unwrap();
    let a = 2e12;
    for n in 2..=4 {
        for f in [PhaseDistribution::linear(n), PhaseDistribution::delta(n)] {
            for v in [0.0, 0.3, 0.7, 1.0] {
                let fit = fit_fringe(&noiseless_records(n, &f, &fine, a, v), n, &f).unwrap();
                c.check(
                    (fit.visibility - v).abs() <= 1e-9 && (fit.amplitude - a).abs() / a <= 1e-9,
                    format!("noiseless n={n} {} V={v}: {fit:?}", f.kind()),
                );
            }
        }
    }
}

type Criterion = (&'static str, fn(&mut Checks));

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "generalized HOM output distributions",
            generalized_hom_distributions,
        ),
        (
            "ideal phase sensitivity vs SNL and HL",
            ideal_phase_sensitivity_table,
        ),
        ("visibility thresholds by bisection", visibility_thresholds),
        ("classical violation ratios", classical_violation_ratios),
        (
            "pair-correlation witness values",
            pair_correlation_witness_values,
        ),
        (
            "suppression rule matches permanents for n <= 6",
            suppression_rule_matches_permanents,
        ),
        (
            "butterfly factorization identity",
            butterfly_factorization_identity,
        ),
        (
            "fringe oscillations per half cycle",
            fringe_oscillation_counts,
        ),
        (
            "Ryser permanent matches permutation sum",
            ryser_matches_permutation_sum,
        ),
        (
            "emulator beats SNL with calibrated fits",
            emulator_beats_shot_noise_and_calibrated,
        ),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let mut checks = Checks::default();
        let panicked = catch_unwind(AssertUnwindSafe(|| run(&mut checks))).is_err();
        if panicked {
            checks.failures.push("panicked".into());
        }
        let ok = checks.failures.is_empty();
        let mut line = format!(
            "{} {name} [{:.2}s] {}",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            checks.notes.join("; ")
        );
        for f in &checks.failures {
            let _ = write!(line, "\n     - {f}");
        }
        println!("{line}");
        if !ok {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
