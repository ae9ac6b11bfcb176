//! The `qftsim` command line.
//!
//! Every subcommand reads an optional JSON scenario (`--config`) and lets
//! flags override it. Results are computed in full before anything is
//! written; files are then replaced atomically. JSON summaries go to stdout
//! unless `--out-json` is given.
//!
//! Exit codes: 0 success, 1 circuit not Fourier-equivalent or I/O failure,
//! 2 invalid scenario or unsupported request.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::circuits::{
    butterfly_factorization, fourier_matrix, is_fourier_equivalent, paper_circuit, Circuit,
    EquivalenceReport,
};
use crate::emulator::{
    estimate_sensitivity, fit_fringe_with, sample_distribution, synthesize_counts, total_variation,
    EstimatedSensitivity, FitWeighting, FringeFit,
};
use crate::error::Error;
use crate::fock::{
    classical_distribution, mixture_distribution, quantum_distribution, OutputDistribution,
    ParticleModel,
};
use crate::interference::{
    bhattacharyya_fidelity, pair_correlation_witness, suppression_predicate, violation_ratio,
    WitnessReport,
};
use crate::io::{format_sig12, read_unitary, write_atomic, write_matrix_string};
use crate::metrology::{
    classical_coincidence_probability, contrast_visibility, count_extrema, fringe_scan, phase_grid,
    sensitivity_report, sensitivity_table, PhaseDistribution, PhaseKind, SensitivityReport,
    SensitivityRow,
};
use crate::state::OccupationState;
use crate::unitary::UnitaryMatrix;

/// Caps the worker threads used by the library's parallel loops.
pub const THREADS_ENV: &str = "QFTSIM_THREADS";

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "qftsim",
    version,
    about = "Multiphoton interference in Fourier interferometers"
)]
pub struct Cli {
    /// JSON scenario file; flags take precedence over its fields.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an n-mode Fourier interferometer and check it.
    Qft(QftArgs),
    /// Output statistics for an input state through a circuit.
    Distribution(DistributionArgs),
    /// Coincidence fringe of the multimode Mach-Zehnder, optionally with counts.
    Fringe(FringeArgs),
    /// Phase sensitivity per photon number against SNL and HL.
    MetrologyReport(MetrologyArgs),
}

#[derive(Debug, Args)]
pub struct QftArgs {
    #[arg(long)]
    pub modes: Option<usize>,
    /// ideal, butterfly, paper or file.
    #[arg(long)]
    pub construction: Option<String>,
    /// Matrix file to check when the construction is `file`.
    #[arg(long, value_name = "FILE")]
    pub matrix: Option<PathBuf>,
    /// Where to write the matrix.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DistributionArgs {
    #[arg(long)]
    pub modes: Option<usize>,
    /// Input occupation, e.g. "1,1,1" or "2 0 1"; defaults to one photon per mode.
    #[arg(long)]
    pub input: Option<String>,
    /// quantum, classical or mixture.
    #[arg(long)]
    pub model: Option<String>,
    /// Mixing weight x of the quantum part; required for `mixture`.
    #[arg(long)]
    pub indistinguishability: Option<f64>,
    /// ideal, butterfly, paper or file.
    #[arg(long)]
    pub circuit: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub matrix: Option<PathBuf>,
    /// Draw this many events from the model distribution.
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "FILE")]
    pub out_csv: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FringeArgs {
    #[arg(long)]
    pub modes: Option<usize>,
    /// linear, delta, normalized_linear, normalized_delta or custom.
    #[arg(long)]
    pub phase: Option<String>,
    /// Comma-separated per-mode multipliers for `custom`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub weights: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub grid_start: Option<f64>,
    /// Exclusive end of the phase grid; defaults to pi.
    #[arg(long, allow_hyphen_values = true)]
    pub grid_stop: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub visibility: Option<f64>,
    /// Expected counts at the fringe maximum; enables Poisson count synthesis.
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// unweighted or inverse_variance.
    #[arg(long)]
    pub weighting: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub out_csv: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetrologyArgs {
    #[arg(long)]
    pub max_n: Option<usize>,
    #[arg(long)]
    pub visibility: Option<f64>,
    #[arg(long)]
    pub phase: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub out_csv: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out_json: Option<PathBuf>,
}

/// Contents of a `--config` file. Every field is optional; unknown fields are
/// rejected so typos do not pass silently.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub modes: Option<usize>,
    pub input: Option<Vec<usize>>,
    pub model: Option<String>,
    pub indistinguishability: Option<f64>,
    pub circuit: Option<String>,
    pub construction: Option<String>,
    pub matrix: Option<PathBuf>,
    pub phase: Option<String>,
    pub weights: Option<Vec<f64>>,
    pub grid_start: Option<f64>,
    pub grid_stop: Option<f64>,
    pub grid_points: Option<usize>,
    pub visibility: Option<f64>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub weighting: Option<String>,
    pub max_n: Option<usize>,
    pub out: Option<PathBuf>,
    pub out_csv: Option<PathBuf>,
    pub out_json: Option<PathBuf>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::invalid(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::invalid(format!("config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            code: EXIT_FAILURE,
            message: format!("cannot write {}: {e}", path.display()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::invalid(e.to_string())
    }
}

/// What a successful run produced: files to write, text for stdout, and the
/// exit code to report once everything is on disk.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub stdout: String,
    pub code: u8,
}

impl Outcome {
    fn emit_json<T: Serialize>(
        &mut self,
        path: Option<PathBuf>,
        value: &T,
    ) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::invalid(format!("serialization: {e}")))?;
        text.push('\n');
        match path {
            Some(p) => self.files.push((p, text.into_bytes())),
            None => self.stdout.push_str(&text),
        }
        Ok(())
    }

    /// Writes every staged file. Nothing is written unless the whole run
    /// succeeded.
    pub fn commit(&self) -> Result<(), CliError> {
        for (path, bytes) in &self.files {
            write_atomic(path, bytes).map_err(|e| CliError::io(path, e))?;
        }
        Ok(())
    }
}

/// Parses arguments, runs, writes outputs, and maps failures to exit codes.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("qftsim: {e}");
        return ExitCode::from(e.code);
    }
    let result = run(&cli).and_then(|out| {
        out.commit()?;
        print!("{}", out.stdout);
        Ok(out.code)
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("qftsim: {e}");
            ExitCode::from(e.code)
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| {
            CliError::invalid(format!(
                "{THREADS_ENV} must be a positive integer, got {value:?}"
            ))
        })?;
    // a second call in the same process fails harmlessly; the first pool stays
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = match &cli.config {
        Some(path) => Scenario::load(path)?,
        None => Scenario::default(),
    };
    match &cli.command {
        Command::Qft(a) => cmd_qft(a, &cfg),
        Command::Distribution(a) => cmd_distribution(a, &cfg),
        Command::Fringe(a) => cmd_fringe(a, &cfg),
        Command::MetrologyReport(a) => cmd_metrology_report(a, &cfg),
    }
}

fn required<T>(value: Option<T>, name: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::invalid(format!("missing --{name}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Construction {
    Ideal,
    Butterfly,
    Paper,
    File,
}

impl Construction {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "ideal" | "ideal-qft" => Ok(Self::Ideal),
            "butterfly" => Ok(Self::Butterfly),
            "paper" | "paper-circuit" => Ok(Self::Paper),
            "file" => Ok(Self::File),
            _ => Err(CliError::invalid(format!(
                "unknown construction {s:?}; expected ideal, butterfly, paper or file"
            ))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Ideal => "ideal",
            Self::Butterfly => "butterfly",
            Self::Paper => "paper",
            Self::File => "file",
        }
    }
}

struct BuiltCircuit {
    unitary: UnitaryMatrix,
    elements: Vec<String>,
}

fn build_circuit(
    kind: Construction,
    modes: Option<usize>,
    matrix: Option<&Path>,
) -> Result<BuiltCircuit, CliError> {
    let from_circuit = |c: Circuit| -> Result<BuiltCircuit, CliError> {
        Ok(BuiltCircuit {
            unitary: c.compose()?,
            elements: c.elements().iter().map(|e| e.describe()).collect(),
        })
    };
    if kind == Construction::File {
        let path = required(matrix, "matrix")?;
        let unitary = read_unitary(path)?;
        if let Some(n) = modes.filter(|&n| n != unitary.dim()) {
            return Err(CliError::invalid(format!(
                "--modes {n} disagrees with the {}-mode matrix in {}",
                unitary.dim(),
                path.display()
            )));
        }
        return Ok(BuiltCircuit {
            unitary,
            elements: Vec::new(),
        });
    }
    let n = required(modes, "modes")?;
    if n == 0 {
        return Err(CliError::invalid("--modes must be positive"));
    }
    match kind {
        Construction::Ideal => Ok(BuiltCircuit {
            unitary: fourier_matrix(n)?,
            elements: Vec::new(),
        }),
        Construction::Butterfly => {
            if n % 2 != 0 {
                return Err(CliError::invalid(format!(
                    "butterfly construction needs an even mode count, got {n}"
                )));
            }
            from_circuit(butterfly_factorization(n / 2)?)
        }
        Construction::Paper => from_circuit(paper_circuit(n)?),
        Construction::File => unreachable!(),
    }
}

#[derive(Serialize)]
struct QftReport<'a> {
    command: &'static str,
    construction: &'static str,
    modes: usize,
    elements: &'a [String],
    unitarity_deviation: f64,
    max_abs_diff_from_ideal: f64,
    equivalence: &'a EquivalenceReport,
}

fn cmd_qft(a: &QftArgs, cfg: &Scenario) -> Result<Outcome, CliError> {
    let construction = a
        .construction
        .as_deref()
        .or(cfg.construction.as_deref())
        .unwrap_or("ideal");
    let kind = Construction::parse(construction)?;
    let matrix = a.matrix.as_deref().or(cfg.matrix.as_deref());
    let out = a.out.clone().or_else(|| cfg.out.clone());
    if kind != Construction::File {
        required(out.as_ref(), "out")?;
    }
    let built = build_circuit(kind, a.modes.or(cfg.modes), matrix)?;
    let u = &built.unitary;
    let report = is_fourier_equivalent(u)?;
    let ideal = fourier_matrix(u.dim())?;

    let mut outcome = Outcome::default();
    if let Some(path) = out {
        outcome
            .files
            .push((path, write_matrix_string(u.entries()).into_bytes()));
    }
    outcome.emit_json(
        a.out_json.clone().or_else(|| cfg.out_json.clone()),
        &QftReport {
            command: "qft",
            construction: kind.name(),
            modes: u.dim(),
            elements: &built.elements,
            unitarity_deviation: u.unitarity_deviation(),
            max_abs_diff_from_ideal: u.max_abs_diff(&ideal),
            equivalence: &report,
        },
    )?;
    outcome.code = if report.equivalent { 0 } else { EXIT_FAILURE };
    Ok(outcome)
}

fn parse_input(s: &str) -> Result<OccupationState, CliError> {
    OccupationState::parse_label(s).map_err(CliError::from)
}

#[derive(Serialize)]
struct VerdictRow {
    state: String,
    suppressed: bool,
    weighted_sum: usize,
    probability: f64,
}

#[derive(Serialize)]
struct SampleSummary {
    shots: u64,
    seed: u64,
    fidelity_vs_model: f64,
    fidelity_vs_quantum: f64,
    total_variation_vs_model: f64,
    violation_ratio: Option<f64>,
    witness: Option<WitnessReport>,
}

#[derive(Serialize)]
struct DistributionSummary {
    command: &'static str,
    circuit: &'static str,
    modes: usize,
    photons: usize,
    input: String,
    model: ParticleModel,
    states: usize,
    fidelity_vs_quantum: f64,
    /// Output relabeling into Fourier order used for the suppression verdicts.
    output_permutation: Option<Vec<usize>>,
    violation_ratio: Option<f64>,
    witness: Option<WitnessReport>,
    suppression: Vec<VerdictRow>,
    sample: Option<SampleSummary>,
}

fn parse_model(name: &str, x: Option<f64>) -> Result<ParticleModel, CliError> {
    match (name, x) {
        ("quantum", None) => Ok(ParticleModel::Quantum),
        ("classical", None) => Ok(ParticleModel::Classical),
        ("mixture", Some(x)) if (0.0..=1.0).contains(&x) => Ok(ParticleModel::Mixture {
            indistinguishability: x,
        }),
        ("mixture", Some(x)) => Err(CliError::invalid(format!(
            "indistinguishability {x} outside [0, 1]"
        ))),
        ("mixture", None) => Err(CliError::invalid(
            "model mixture needs --indistinguishability",
        )),
        ("quantum" | "classical", Some(_)) => Err(CliError::invalid(
            "--indistinguishability is only valid with model mixture",
        )),
        _ => Err(CliError::invalid(format!(
            "unknown model {name:?}; expected quantum, classical or mixture"
        ))),
    }
}

/// Suppression verdicts need the Fourier output labeling; physical circuits
/// may permute output modes, so their distributions are relabeled first.
fn fourier_frame(
    dist: &OutputDistribution,
    u: &UnitaryMatrix,
    kind: Construction,
    n: usize,
) -> Result<(Option<OutputDistribution>, Option<Vec<usize>>), CliError> {
    if dist.photons() != n || dist.modes() != n {
        return Ok((None, None));
    }
    if kind == Construction::Ideal {
        return Ok((Some(dist.clone()), None));
    }
    let report = is_fourier_equivalent(u)?;
    match report.output_permutation.filter(|_| report.equivalent) {
        Some(sigma) => Ok((Some(dist.relabeled(&sigma)?), Some(sigma))),
        None => Ok((None, None)),
    }
}

fn cmd_distribution(a: &DistributionArgs, cfg: &Scenario) -> Result<Outcome, CliError> {
    let circuit = a
        .circuit
        .as_deref()
        .or(cfg.circuit.as_deref())
        .unwrap_or("ideal");
    let kind = Construction::parse(circuit)?;
    let matrix = a.matrix.as_deref().or(cfg.matrix.as_deref());
    let built = build_circuit(kind, a.modes.or(cfg.modes), matrix)?;
    let u = &built.unitary;
    let n = u.dim();

    let input = match (&a.input, &cfg.input) {
        (Some(s), _) => parse_input(s)?,
        (None, Some(v)) => OccupationState::new(v.clone())?,
        (None, None) => OccupationState::ones(n),
    };
    if input.modes() != n {
        return Err(CliError::invalid(format!(
            "input {} has {} modes but the circuit has {n}",
            input.label(),
            input.modes()
        )));
    }
    if input.total() == 0 {
        return Err(CliError::invalid("input carries no photons"));
    }
    let model = parse_model(
        a.model
            .as_deref()
            .or(cfg.model.as_deref())
            .unwrap_or("quantum"),
        a.indistinguishability.or(cfg.indistinguishability),
    )?;
    let shots = a.shots.or(cfg.shots);
    let seed = a.seed.or(cfg.seed);
    if shots.is_some() && seed.is_none() {
        return Err(CliError::invalid(
            "--seed is required when --shots is given",
        ));
    }
    if shots == Some(0) {
        return Err(CliError::invalid("--shots must be positive"));
    }

    let quantum = quantum_distribution(u, &input)?;
    let dist = match model {
        ParticleModel::Quantum => quantum.clone(),
        ParticleModel::Classical => classical_distribution(u, &input)?,
        ParticleModel::Mixture {
            indistinguishability,
        } => mixture_distribution(
            &quantum,
            &classical_distribution(u, &input)?,
            indistinguishability,
        )?,
        ParticleModel::Empirical { .. } => unreachable!(),
    };
    let photons = input.total();
    let (frame, output_permutation) = fourier_frame(&dist, u, kind, photons)?;
    let suppression = match &frame {
        Some(d) => d
            .iter()
            .map(|(s, p)| {
                let v = suppression_predicate(photons, s)?;
                Ok(VerdictRow {
                    state: s.label(),
                    suppressed: v.suppressed,
                    weighted_sum: v.weighted_sum,
                    probability: p,
                })
            })
            .collect::<Result<Vec<_>, Error>>()?,
        None => Vec::new(),
    };
    let witness = if photons >= 2 && photons == n {
        Some(pair_correlation_witness(&dist)?)
    } else {
        None
    };
    let violation = frame
        .as_ref()
        .map(|d| violation_ratio(d, photons))
        .transpose()?;

    let sampled = match (shots, seed) {
        (Some(shots), Some(seed)) => Some(sample_distribution(&dist, shots, seed)?),
        _ => None,
    };
    let sample = match &sampled {
        Some(s) => {
            let (emp_frame, _) = fourier_frame(&s.empirical, u, kind, photons)?;
            Some(SampleSummary {
                shots: s.shots,
                seed: seed.expect("checked above"),
                fidelity_vs_model: bhattacharyya_fidelity(&s.empirical, &dist)?,
                fidelity_vs_quantum: bhattacharyya_fidelity(&s.empirical, &quantum)?,
                total_variation_vs_model: total_variation(&s.empirical, &dist)?,
                violation_ratio: emp_frame
                    .as_ref()
                    .map(|d| violation_ratio(d, photons))
                    .transpose()?,
                witness: if witness.is_some() {
                    Some(pair_correlation_witness(&s.empirical)?)
                } else {
                    None
                },
            })
        }
        None => None,
    };

    let mut csv = String::from(if sampled.is_some() {
        "state,probability,counts,empirical\n"
    } else {
        "state,probability\n"
    });
    for (i, (s, p)) in dist.iter().enumerate() {
        csv.push_str(&s.label());
        csv.push(',');
        csv.push_str(&format_sig12(p));
        if let Some(sm) = &sampled {
            csv.push_str(&format!(
                ",{},{}",
                sm.counts[i],
                format_sig12(sm.empirical.probabilities()[i])
            ));
        }
        csv.push('\n');
    }

    let summary = DistributionSummary {
        command: "distribution",
        circuit: kind.name(),
        modes: n,
        photons,
        input: input.label(),
        model,
        states: dist.len(),
        fidelity_vs_quantum: bhattacharyya_fidelity(&dist, &quantum)?,
        output_permutation,
        violation_ratio: violation,
        witness,
        suppression,
        sample,
    };
    let mut outcome = Outcome::default();
    if let Some(p) = a.out_csv.clone().or_else(|| cfg.out_csv.clone()) {
        outcome.files.push((p, csv.into_bytes()));
    }
    outcome.emit_json(
        a.out_json.clone().or_else(|| cfg.out_json.clone()),
        &summary,
    )?;
    Ok(outcome)
}

#[derive(Serialize)]
struct GridSummary {
    start: f64,
    stop: f64,
    points: usize,
}

#[derive(Serialize)]
struct CountsSummary {
    shots: u64,
    seed: u64,
    weighting: FitWeighting,
    fit: FringeFit,
    /// `(max - min) / (max + min)` of the raw counts.
    contrast_visibility: Option<f64>,
    sensitivity: Option<EstimatedSensitivity>,
}

#[derive(Serialize)]
struct FringeSummary {
    command: &'static str,
    modes: usize,
    phase: PhaseKind,
    weights: Vec<f64>,
    visibility: f64,
    grid: GridSummary,
    extrema: usize,
    contrast_ideal: Option<f64>,
    contrast_classical: Option<f64>,
    sensitivity: Option<SensitivityReport>,
    counts: Option<CountsSummary>,
}

fn parse_weighting(s: &str) -> Result<FitWeighting, CliError> {
    match s {
        "unweighted" => Ok(FitWeighting::Unweighted),
        "inverse_variance" | "inverse-variance" => Ok(FitWeighting::InverseVariance),
        _ => Err(CliError::invalid(format!(
            "unknown weighting {s:?}; expected unweighted or inverse_variance"
        ))),
    }
}

fn phase_distribution(
    kind: &str,
    n: usize,
    weights: Option<Vec<f64>>,
) -> Result<PhaseDistribution, CliError> {
    let kind: PhaseKind = kind.parse()?;
    match (kind, weights) {
        (PhaseKind::Custom, Some(w)) => {
            if w.len() != n {
                return Err(CliError::invalid(format!(
                    "{} weights given for {n} modes",
                    w.len()
                )));
            }
            Ok(PhaseDistribution::custom(w)?)
        }
        (PhaseKind::Custom, None) => Err(CliError::invalid("phase custom needs --weights")),
        (_, Some(_)) => Err(CliError::invalid(
            "--weights is only valid with phase custom",
        )),
        (k, None) => Ok(PhaseDistribution::of_kind(k, n)?),
    }
}

fn cmd_fringe(a: &FringeArgs, cfg: &Scenario) -> Result<Outcome, CliError> {
    let n = required(a.modes.or(cfg.modes), "modes")?;
    if n < 2 {
        return Err(CliError::invalid("--modes must be at least 2"));
    }
    let f = phase_distribution(
        a.phase
            .as_deref()
            .or(cfg.phase.as_deref())
            .unwrap_or("delta"),
        n,
        a.weights.clone().or_else(|| cfg.weights.clone()),
    )?;
    let start = a.grid_start.or(cfg.grid_start).unwrap_or(0.0);
    let stop = a
        .grid_stop
        .or(cfg.grid_stop)
        .unwrap_or(std::f64::consts::PI);
    let points = a.grid_points.or(cfg.grid_points).unwrap_or(200);
    if points == 0 {
        return Err(CliError::invalid("--grid-points must be positive"));
    }
    let visibility = a.visibility.or(cfg.visibility).unwrap_or(1.0);
    if !(0.0..=1.0).contains(&visibility) {
        return Err(CliError::invalid(format!(
            "visibility {visibility} outside [0, 1]"
        )));
    }
    let shots = a.shots.or(cfg.shots);
    let seed = a.seed.or(cfg.seed);
    if shots.is_some() && seed.is_none() {
        return Err(CliError::invalid(
            "--seed is required when --shots is given",
        ));
    }
    if shots == Some(0) {
        return Err(CliError::invalid("--shots must be positive"));
    }
    let weighting = parse_weighting(
        a.weighting
            .as_deref()
            .or(cfg.weighting.as_deref())
            .unwrap_or("unweighted"),
    )?;

    let grid = phase_grid(start, stop, points)?;
    let ideal: Vec<f64> = fringe_scan(n, &f, &grid)?.iter().map(|pt| pt.p).collect();
    let classical = grid
        .iter()
        .map(|&phi| classical_coincidence_probability(n, &f, phi))
        .collect::<Result<Vec<f64>, Error>>()?;
    let sensitivity = if visibility > 0.0 {
        Some(sensitivity_report(n, &f, visibility)?)
    } else {
        None
    };

    let (records, counts) = match (shots, seed) {
        (Some(shots), Some(seed)) => {
            let records = synthesize_counts(n, &f, &grid, shots as f64, visibility, seed)?;
            let fit = fit_fringe_with(&records, n, &f, weighting)?;
            let raw: Vec<f64> = records.iter().map(|r| r.counts as f64).collect();
            let summary = CountsSummary {
                shots,
                seed,
                weighting,
                fit,
                contrast_visibility: contrast_visibility(&raw),
                sensitivity: estimate_sensitivity(&fit, n, &f).ok(),
            };
            (Some(records), Some(summary))
        }
        _ => (None, None),
    };

    let mut csv = String::from(if records.is_some() {
        "phi,p_ideal,p_classical,counts\n"
    } else {
        "phi,p_ideal,p_classical\n"
    });
    for i in 0..grid.len() {
        csv.push_str(&format!(
            "{},{},{}",
            format_sig12(grid[i]),
            format_sig12(ideal[i]),
            format_sig12(classical[i])
        ));
        if let Some(r) = &records {
            csv.push_str(&format!(",{}", r[i].counts));
        }
        csv.push('\n');
    }

    let summary = FringeSummary {
        command: "fringe",
        modes: n,
        phase: f.kind(),
        weights: f.weights().to_vec(),
        visibility,
        grid: GridSummary {
            start,
            stop,
            points,
        },
        extrema: count_extrema(&ideal),
        contrast_ideal: contrast_visibility(&ideal),
        contrast_classical: contrast_visibility(&classical),
        sensitivity,
        counts,
    };
    let mut outcome = Outcome::default();
    if let Some(p) = a.out_csv.clone().or_else(|| cfg.out_csv.clone()) {
        outcome.files.push((p, csv.into_bytes()));
    }
    outcome.emit_json(
        a.out_json.clone().or_else(|| cfg.out_json.clone()),
        &summary,
    )?;
    Ok(outcome)
}

#[derive(Serialize)]
struct MetrologySummary<'a> {
    command: &'static str,
    phase: PhaseKind,
    visibility: f64,
    rows: &'a [SensitivityRow],
}

pub const METROLOGY_CSV_HEADER: &str =
    "n,delta_phi_formula,delta_phi_ideal,delta_phi,phi_star,fisher_info,snl,hl,threshold,beats_snl,beyond_crossover";

fn cmd_metrology_report(a: &MetrologyArgs, cfg: &Scenario) -> Result<Outcome, CliError> {
    let max_n = required(a.max_n.or(cfg.max_n), "max-n")?;
    let visibility = a.visibility.or(cfg.visibility).unwrap_or(1.0);
    if !(visibility > 0.0 && visibility <= 1.0) {
        return Err(CliError::invalid(format!(
            "visibility {visibility} outside (0, 1]"
        )));
    }
    let kind: PhaseKind = a
        .phase
        .as_deref()
        .or(cfg.phase.as_deref())
        .unwrap_or("delta")
        .parse()?;
    if kind == PhaseKind::Custom {
        return Err(CliError::invalid(
            "metrology-report needs a named phase distribution",
        ));
    }
    let rows = sensitivity_table(max_n, kind, visibility)?;

    let mut csv = format!("{METROLOGY_CSV_HEADER}\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.n,
            format_sig12(r.delta_phi_formula),
            format_sig12(r.delta_phi_ideal),
            format_sig12(r.report.delta_phi),
            format_sig12(r.report.phi_star),
            format_sig12(r.report.fisher_info),
            format_sig12(r.report.snl),
            format_sig12(r.report.hl),
            format_sig12(r.threshold),
            r.report.beats_snl,
            r.beyond_crossover,
        ));
    }
    let mut outcome = Outcome::default();
    if let Some(p) = a.out_csv.clone().or_else(|| cfg.out_csv.clone()) {
        outcome.files.push((p, csv.into_bytes()));
    }
    outcome.emit_json(
        a.out_json.clone().or_else(|| cfg.out_json.clone()),
        &MetrologySummary {
            command: "metrology-report",
            phase: kind,
            visibility,
            rows: &rows,
        },
    )?;
    Ok(outcome)
}
