//! Executes the configured checks and assembles run directories.
//!
//! Sections may run on worker threads, but results are collected by index
//! and written by the caller thread in declaration order, so the artifacts
//! never depend on scheduling.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use thiserror::Error;

use qtorus::dynamics::{averaging_defect, conjugate_operator, evolve_symbol, TimeParameter};
use qtorus::lattice::EnergyCutoff;
use qtorus::operators::{operator_norm, quantize, OperatorError};
use qtorus::semiclassical::{
    decompose_average, n1_rank_certificate_with, sn_scan, SemiclassicalError,
};
use qtorus::symbols::{bessel_constant, norm_r};

use crate::config::{ConfigError, ExperimentConfig};
use crate::report::{CheckRecord, RunReport, SectionReport};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Resource(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("internal: {0}")]
    Internal(String),
}

/// Process exit code for a failed run; successful runs map through
/// [`crate::report::outcome_exit_code`].
pub fn error_exit_code(err: &RunError) -> u8 {
    match err {
        RunError::Config(_) => 2,
        RunError::Resource(_) => 4,
        RunError::Io { .. } => 1,
        RunError::Internal(_) => 1,
    }
}

fn map_operator(err: OperatorError) -> RunError {
    match err {
        OperatorError::SizeLimit { .. } | OperatorError::NoConvergence { .. } => {
            RunError::Resource(err.to_string())
        }
        other => RunError::Internal(other.to_string()),
    }
}

fn map_semiclassical(err: SemiclassicalError) -> RunError {
    match err {
        SemiclassicalError::ShellNotCovered { .. } => RunError::Resource(err.to_string()),
        SemiclassicalError::DimensionNotOne { .. } => RunError::Config(ConfigError::Invalid {
            field: "dimension",
            reason: err.to_string(),
        }),
        SemiclassicalError::Operator(inner) => map_operator(inner),
        other => RunError::Internal(other.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    NormCheck,
    AverageConvergence,
    SnScan,
    RankCertificate,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SectionKind {
    NormCheck,
    AverageConvergence,
    SnScan,
    RankCertificate,
    RankCertificateSkipped,
}

#[derive(Debug)]
pub struct SectionOutput {
    pub report: SectionReport,
    pub files: Vec<(&'static str, Vec<u8>)>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub run_dir: PathBuf,
    pub report: RunReport,
}

fn plain(report: SectionReport) -> SectionOutput {
    SectionOutput { report, files: Vec::new() }
}

fn run_norm_check(config: &ExperimentConfig) -> Result<SectionOutput, RunError> {
    let reg = config.regularity_index()?;
    let coeffs = config.build_symbol()?;
    let tol = &config.tolerances;
    let tail = config.resolved_bessel_tail();
    let enclosure = bessel_constant(&reg, tail).map_err(|e| ConfigError::Invalid {
        field: "tolerances.bessel_tail",
        reason: e.to_string(),
    })?;
    let weighted = norm_r(&coeffs, &reg);
    let op = quantize(&coeffs);
    let norm = operator_norm(&op, tol.power_tol, tol.power_max_iter).map_err(map_operator)?;
    let norm_bound = enclosure.upper() * weighted + tol.norm_slack;

    let mut deviation = 0.0f64;
    for t in &config.times {
        let t = TimeParameter::new(*t)
            .map_err(|e| ConfigError::Invalid { field: "times", reason: e.to_string() })?;
        let difference = conjugate_operator(&op, t)
            .sub(&quantize(&evolve_symbol(&coeffs, t)))
            .map_err(map_operator)?;
        difference.for_each_entry(|_, _, v| deviation = deviation.max(v.norm()));
    }

    let records = vec![
        CheckRecord {
            name: "norm-constant-enclosure".into(),
            measured: Some(enclosure.width()),
            bound: Some(tail),
            pass: enclosure.width() <= tail,
            note: format!("C_r ∈ [{}, {}]", enclosure.lower(), enclosure.upper()),
        },
        CheckRecord {
            name: "weighted-symbol-norm".into(),
            measured: Some(weighted),
            bound: None,
            pass: true,
            note: format!("‖F‖_r at r = {}", reg.value()),
        },
        CheckRecord {
            name: "operator-norm-bound".into(),
            measured: Some(norm),
            bound: Some(norm_bound),
            pass: norm <= norm_bound,
            note: "‖Q(F)‖ ≤ C_r·‖F‖_r".into(),
        },
        CheckRecord {
            name: "conjugation-identity".into(),
            measured: Some(deviation),
            bound: Some(tol.phase),
            pass: deviation <= tol.phase,
            note: format!(
                "e^(itH) Q(F) e^(-itH) = Q(F_t) entrywise across {} times",
                config.times.len()
            ),
        },
    ];
    Ok(plain(SectionReport::from_records("norm-check", records)))
}

fn run_average_convergence(config: &ExperimentConfig) -> Result<SectionOutput, RunError> {
    let reg = config.regularity_index()?;
    let coeffs = config.build_symbol()?;
    let mut rows = Vec::with_capacity(config.horizons.len());
    for t in &config.horizons {
        let horizon = TimeParameter::new(*t)
            .map_err(|e| ConfigError::Invalid { field: "horizons", reason: e.to_string() })?;
        let report = averaging_defect(&coeffs, &reg, horizon)
            .map_err(|e| ConfigError::Invalid { field: "horizons", reason: e.to_string() })?;
        rows.push(report);
    }

    let mut table = String::from("# horizon defect bound\n");
    for row in &rows {
        table.push_str(&format!("{} {} {}\n", row.horizon, row.defect, row.bound));
    }

    let worst_ratio = rows
        .iter()
        .map(|r| if r.bound > 0.0 { r.defect / r.bound } else { 0.0 })
        .fold(0.0f64, f64::max);
    let all_bounded = rows.iter().all(|r| r.defect <= r.bound);

    let doubling = config.horizons.len() >= 2
        && config.horizons.windows(2).all(|w| w[1] == 2.0 * w[0]);
    let (monotone_pass, monotone_note) = if doubling {
        let ok = rows
            .windows(2)
            .all(|w| w[1].defect <= w[0].defect * (1.0 + 1e-12) + 1e-12);
        (ok, "defect never increases along the doubling horizon grid".to_string())
    } else {
        (true, "horizon list is not a doubling grid; monotonicity not assessed".to_string())
    };

    let records = vec![
        CheckRecord {
            name: "defect-within-bound".into(),
            measured: Some(worst_ratio),
            bound: Some(1.0),
            pass: all_bounded,
            note: "‖avg_T(F) − <F>‖_r ≤ 4‖F‖_r/T for every horizon".into(),
        },
        CheckRecord {
            name: "defect-nonincreasing".into(),
            measured: None,
            bound: None,
            pass: monotone_pass,
            note: monotone_note,
        },
    ];
    Ok(SectionOutput {
        report: SectionReport::from_records("average-convergence", records),
        files: vec![("average_convergence.dat", table.into_bytes())],
    })
}

fn run_sn_scan(config: &ExperimentConfig) -> Result<SectionOutput, RunError> {
    let coeffs = config.build_symbol()?;
    let energies: Vec<EnergyCutoff> = config.energies();
    let top = *energies.last().expect("grid count validated as at least 1");
    let required = top.shell_radius();
    if config.momentum_radius < required {
        return Err(RunError::Resource(format!(
            "energy grid up to E = {} needs momentum radius {required}, \
             but the config has momentum_radius = {}",
            top.value(),
            config.momentum_radius
        )));
    }
    let parts = decompose_average(&coeffs);
    let remainder_curve = sn_scan(&parts.remainder, &energies).map_err(map_semiclassical)?;
    let classical_curve = sn_scan(&parts.classical_part, &energies).map_err(map_semiclassical)?;

    let mut remainder_dat = Vec::new();
    remainder_curve
        .write_table(&mut remainder_dat)
        .map_err(|e| RunError::Internal(e.to_string()))?;
    let mut classical_dat = Vec::new();
    classical_curve
        .write_table(&mut classical_dat)
        .map_err(|e| RunError::Internal(e.to_string()))?;

    let mut diagonal_max = 0.0f64;
    for m in parts.remainder.input_box().iter() {
        diagonal_max = diagonal_max.max(parts.remainder.entry(&m, &m).norm());
    }
    let exact = parts.reassemble() == quantize(&qtorus::dynamics::ergodic_average(&coeffs));

    let remainder_active = remainder_curve.samples.iter().any(|(_, v)| *v > 0.0);
    let (slope_pass, slope_note) = match remainder_curve.fitted_slope {
        Some(slope) if remainder_active => (
            slope < 0.0,
            "log-log slope of τ_E(a*a); negative means the remainder is negligible".to_string(),
        ),
        _ if !remainder_active => {
            (true, "remainder vanishes on the grid; τ_E ≡ 0".to_string())
        }
        _ => (true, "fewer than two positive samples; slope unavailable".to_string()),
    };

    let records = vec![
        CheckRecord {
            name: "decomposition-exact".into(),
            measured: None,
            bound: None,
            pass: exact,
            note: "<Q(F)> = Q(F̄) + remainder, entrywise".into(),
        },
        CheckRecord {
            name: "remainder-zero-diagonal".into(),
            measured: Some(diagonal_max),
            bound: Some(0.0),
            pass: diagonal_max == 0.0,
            note: "the diagonal of the averaged operator is exactly its classical part".into(),
        },
        CheckRecord {
            name: "remainder-decay-slope".into(),
            measured: remainder_curve.fitted_slope,
            bound: None,
            pass: slope_pass,
            note: slope_note,
        },
        CheckRecord {
            name: "classical-part-slope".into(),
            measured: classical_curve.fitted_slope,
            bound: None,
            pass: true,
            note: "diagonal part need not be negligible; recorded for reference".into(),
        },
    ];
    Ok(SectionOutput {
        report: SectionReport::from_records("sn-scan", records),
        files: vec![
            ("sn_remainder.dat", remainder_dat),
            ("sn_classical.dat", classical_dat),
        ],
    })
}

fn run_rank_certificate(config: &ExperimentConfig) -> Result<SectionOutput, RunError> {
    if config.dimension != 1 {
        return Err(RunError::Config(ConfigError::Invalid {
            field: "dimension",
            reason: format!(
                "rank certificates are defined for dimension 1, got {}",
                config.dimension
            ),
        }));
    }
    let coeffs = config.build_symbol()?;
    let cert = n1_rank_certificate_with(&coeffs, config.tolerances.rank_relative)
        .map_err(map_semiclassical)?;

    let mut records = Vec::with_capacity(cert.rows.len() + 1);
    for row in &cert.rows {
        let note = match row.resonant_momentum {
            Some(p) => format!("even frequency: single resonant momentum p = {p}"),
            None => "odd frequency: kp + k²/2 = 0 has no integer solution".to_string(),
        };
        records.push(CheckRecord {
            name: format!("frequency-{}", row.frequency),
            measured: Some(row.rank as f64),
            bound: Some(row.max_rank as f64),
            pass: row.ok,
            note,
        });
    }
    records.push(CheckRecord {
        name: "remainder-rank".into(),
        measured: Some(cert.remainder_rank as f64),
        bound: Some(cert.even_frequency_count as f64),
        pass: cert.remainder_rank <= cert.even_frequency_count,
        note: "total rank bounded by the number of active even frequencies".into(),
    });
    Ok(plain(SectionReport::from_records("rank-certificate", records)))
}

fn skipped_rank_section(dimension: usize) -> SectionOutput {
    plain(SectionReport::from_records(
        "rank-certificate",
        vec![CheckRecord {
            name: "dimension-guard".into(),
            measured: None,
            bound: None,
            pass: true,
            note: format!("certificate applies to dimension 1; skipped for dimension {dimension}"),
        }],
    ))
}

fn run_section(kind: SectionKind, config: &ExperimentConfig) -> Result<SectionOutput, RunError> {
    match kind {
        SectionKind::NormCheck => run_norm_check(config),
        SectionKind::AverageConvergence => run_average_convergence(config),
        SectionKind::SnScan => run_sn_scan(config),
        SectionKind::RankCertificate => run_rank_certificate(config),
        SectionKind::RankCertificateSkipped => Ok(skipped_rank_section(config.dimension)),
    }
}

fn section_plan(command: Command, dimension: usize) -> Vec<SectionKind> {
    match command {
        Command::NormCheck => vec![SectionKind::NormCheck],
        Command::AverageConvergence => vec![SectionKind::AverageConvergence],
        Command::SnScan => vec![SectionKind::SnScan],
        Command::RankCertificate => vec![SectionKind::RankCertificate],
        Command::All => vec![
            SectionKind::NormCheck,
            SectionKind::AverageConvergence,
            SectionKind::SnScan,
            if dimension == 1 {
                SectionKind::RankCertificate
            } else {
                SectionKind::RankCertificateSkipped
            },
        ],
    }
}

pub fn run_command(
    command: Command,
    config: &ExperimentConfig,
    threads: usize,
) -> Result<Vec<SectionOutput>, RunError> {
    let plan = section_plan(command, config.dimension);
    let workers = match threads {
        0 => thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        n => n,
    }
    .min(plan.len());

    if workers <= 1 {
        return plan.into_iter().map(|kind| run_section(kind, config)).collect();
    }

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<SectionOutput, RunError>>>> =
        plan.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= plan.len() {
                    break;
                }
                let result = run_section(plan[index], config);
                *slots[index].lock().expect("result slot poisoned") = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().expect("result slot poisoned").expect("section ran"))
        .collect()
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

// run directories are append-only: existing ones are never touched
fn allocate_run_dir(base: &Path) -> Result<PathBuf, RunError> {
    fs::create_dir_all(base).map_err(io_error(base))?;
    let mut max_seen: Option<u32> = None;
    for entry in fs::read_dir(base).map_err(io_error(base))? {
        let entry = entry.map_err(io_error(base))?;
        let name = entry.file_name();
        if let Some(index) = name
            .to_str()
            .and_then(|n| n.strip_prefix("run-"))
            .and_then(|rest| rest.parse::<u32>().ok())
        {
            max_seen = Some(max_seen.map_or(index, |m| m.max(index)));
        }
    }
    let mut next = max_seen.map_or(0, |m| m + 1);
    loop {
        let candidate = base.join(format!("run-{next:03}"));
        match fs::create_dir(&candidate) {
            Ok(()) => return Ok(candidate),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                next = next.checked_add(1).ok_or_else(|| {
                    RunError::Internal("run directory index exhausted".into())
                })?;
            }
            Err(e) => return Err(io_error(&candidate)(e)),
        }
    }
}

/// Loads the config, runs the requested sections, and writes one fresh run
/// directory with the report and any plot tables.
pub fn execute(
    command: Command,
    config_path: &Path,
    out_override: Option<&Path>,
    threads: usize,
) -> Result<RunSummary, RunError> {
    let (config, digest) = ExperimentConfig::load(config_path)?;
    let outputs = run_command(command, &config, threads)?;

    let mut sections = Vec::with_capacity(outputs.len());
    let mut files = Vec::new();
    for output in outputs {
        sections.push(output.report);
        files.extend(output.files);
    }
    let report = RunReport::new(digest, sections);

    let base = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.output.directory.clone());
    let run_dir = allocate_run_dir(&base)?;
    let report_path = run_dir.join("report.json");
    fs::write(&report_path, report.to_json_bytes()).map_err(io_error(&report_path))?;
    for (name, bytes) in &files {
        let path = run_dir.join(name);
        fs::write(&path, bytes).map_err(io_error(&path))?;
    }
    Ok(RunSummary { run_dir, report })
}
