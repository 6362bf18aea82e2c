//! Subcommand bodies. Each writes its files under `config.out_dir`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;

use rmcf_core::analysis::{
    arrival_samples, decay_rate, default_arrival_window, default_directions, fit_arrival,
    levelset_residual, ArrivalFit, ArrivalSampleSet, LevelSetReport, RateFit, Selector, Window,
};
use rmcf_core::flow::evolve;
use rmcf_core::manifold::{leading_coefficient, prescribe, BallCalibration, FixedPointReport};
use rmcf_core::spectral::{eigenvalue_f64, SpectralField, SpectrumTable};
use rmcf_core::trajectory::Trajectory;
use rmcf_core::Error as CoreError;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const TRAJECTORY_FILE: &str = "trajectory.jsonl";

fn output_path(config: &RunConfig, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&config.out_dir).map_err(|e| CliError::io(&config.out_dir, e))?;
    Ok(config.out_dir.join(name))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    out.flush().map_err(|e| CliError::io(path, e))
}

fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = create(path)?;
    traj.write_jsonl(&mut out)?;
    out.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(Trajectory::read_jsonl(BufReader::new(file))?)
}

/// `spectrum.csv` for `0 ≤ j ≤ J_max`.
pub fn spectrum(config: &RunConfig) -> Result<PathBuf> {
    let path = output_path(config, "spectrum.csv")?;
    let table = SpectrumTable::new(config.n, config.j_max)?;
    let mut out = create(&path)?;
    table.write_csv(&mut out)?;
    out.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

#[derive(Clone, Debug, Serialize)]
pub struct RateRow {
    pub level: usize,
    pub expected: f64,
    pub fit: RateFit,
}

#[derive(Clone, Debug)]
pub struct EvolveOutput {
    pub trajectory: Trajectory,
    pub rates: Vec<RateRow>,
}

/// Runs the flow from `u0`, then fits the decay of each configured level.
///
/// On escape the samples up to the last valid step are still written.
pub fn run_evolve(config: &RunConfig) -> Result<EvolveOutput> {
    let u0 = config.initial_field()?;
    let traj_path = output_path(config, TRAJECTORY_FILE)?;
    let traj = match evolve(&u0, &config.flow()) {
        Ok(t) => t,
        Err(CoreError::Escape {
            s,
            sup_norm,
            threshold,
            last_valid,
        }) => {
            write_trajectory(&traj_path, &last_valid)?;
            return Err(CoreError::Escape {
                s,
                sup_norm,
                threshold,
                last_valid,
            }
            .into());
        }
        Err(e) => return Err(e.into()),
    };
    write_trajectory(&traj_path, &traj)?;

    let levels = config
        .rate_levels
        .clone()
        .unwrap_or_else(|| u0.support_levels());
    let mut rates = Vec::new();
    for level in levels {
        match decay_rate(&traj, Selector::Level(level), Window::default(), 0) {
            Ok(fit) => rates.push(RateRow {
                level,
                expected: eigenvalue_f64(config.n, level),
                fit,
            }),
            Err(CoreError::InsufficientData(count)) => {
                warn!("level {level}: only {count} samples in the fit window, no rate");
            }
            Err(e) => return Err(e.into()),
        }
    }

    let path = output_path(config, "rates.csv")?;
    let mut csv = csv::Writer::from_writer(create(&path)?);
    csv.write_record(["level", "s1", "s2", "rate", "expected", "deviation", "rms", "samples"])?;
    for row in &rates {
        let f = &row.fit;
        csv.write_record([
            row.level.to_string(),
            f.s1.to_string(),
            f.s2.to_string(),
            f.rate.to_string(),
            row.expected.to_string(),
            (f.rate - row.expected).to_string(),
            f.rms.to_string(),
            f.samples.to_string(),
        ])?;
    }
    csv.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(EvolveOutput {
        trajectory: traj,
        rates,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstructReport {
    pub converged: bool,
    pub k: usize,
    pub b: SpectralField,
    pub a: SpectralField,
    pub leading: SpectralField,
    /// `‖P(a) − b‖ / ‖b‖` at the returned `a`.
    pub residual: f64,
    pub residuals: Vec<f64>,
    pub shift: f64,
    pub note: Option<String>,
    pub ball: Option<BallCalibration>,
    pub report: Option<FixedPointReport>,
}

/// Solves `P(a) = b` on the level-`k` stable manifold.
pub fn run_construct(config: &RunConfig) -> Result<ConstructReport> {
    let b = config.target()?;
    let template = config.manifold_problem(SpectralField::zeros(config.layout()?))?;
    let out = prescribe(&b, &template)?;
    write_trajectory(&output_path(config, TRAJECTORY_FILE)?, &out.trajectory)?;
    let b_norm = l2(&b);
    let residual = if b_norm > 0.0 { l2(&out.leading.sub(&b)?) / b_norm } else { 0.0 };
    let note = (out.shift > 0.0).then(|| {
        format!(
            "b lies outside the contraction ball; solved for e^(-lambda_k s0) b and shifted by s0 = {}",
            out.shift
        )
    });
    if let Some(note) = &note {
        info!("{note}");
    }
    let report = ConstructReport {
        converged: out.report.as_ref().is_none_or(|r| r.converged),
        k: config.k,
        b,
        a: out.a,
        leading: out.leading,
        residual,
        residuals: out.residuals,
        shift: out.shift,
        note,
        ball: out.ball,
        report: out.report,
    };
    write_json(&output_path(config, "construct.json")?, &report)?;
    Ok(report)
}

fn l2(u: &SpectralField) -> f64 {
    u.coeffs().iter().map(|c| c * c).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct ArrivalReport {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "T")]
    pub t_ext: f64,
    pub directions: usize,
    pub samples: usize,
    /// Largest `|t − T + |x|²/(2n)|` over all samples.
    pub max_residual: f64,
    /// Set when every sample lies on the shrinking round sphere.
    pub exact_ball: bool,
    pub leading: SpectralField,
    pub fit: Option<ArrivalFit>,
    pub fit_note: Option<String>,
    pub levelset: Option<LevelSetReport>,
    pub levelset_note: Option<String>,
}

/// Residual below which a trajectory counts as the round sphere.
const EXACT_BALL: f64 = 1e-12;

/// Arrival-time samples, expansion fit and (for `n = 1`) level-set residual.
pub fn run_arrival(config: &RunConfig, trajectory: &Path) -> Result<ArrivalReport> {
    let traj = read_trajectory(trajectory)?;
    let layout = traj.layout();
    if layout.n != config.n {
        return Err(CliError::Config(format!(
            "trajectory has n = {}, config has n = {}",
            layout.n, config.n
        )));
    }
    let k = config.k;
    if k > layout.j_max {
        return Err(CliError::Config(format!("k = {k} exceeds the trajectory J_max")));
    }
    let dirs = default_directions(layout.n, config.direction_count());
    let set = arrival_samples(&traj, config.t_ext, &dirs)?;
    write_samples(&output_path(config, "arrival_samples.csv")?, &set)?;

    let max_residual = set.max_residual();
    let exact_ball = max_residual < EXACT_BALL;
    let leading = leading_coefficient(&traj, k)?;
    let (fit, fit_note) = if exact_ball || leading.is_zero() {
        (None, Some("round sphere: no deviation to fit".to_string()))
    } else {
        match fit_arrival(&set, &leading, k, default_arrival_window(layout.n)) {
            Ok(fit) => (Some(fit), None),
            Err(e @ CoreError::InsufficientData(_)) => {
                warn!("arrival fit skipped: {e}");
                (None, Some(e.to_string()))
            }
            Err(e) => return Err(e.into()),
        }
    };

    let path = output_path(config, "arrival_fit.csv")?;
    let mut csv = csv::Writer::from_writer(create(&path)?);
    csv.write_record(["direction", "p_value", "gamma", "c", "rms", "points"])?;
    for d in fit.iter().flat_map(|f| &f.directions) {
        csv.write_record([
            d.direction.to_string(),
            d.p_value.to_string(),
            d.gamma.to_string(),
            d.c.to_string(),
            d.rms.to_string(),
            d.points.to_string(),
        ])?;
    }
    csv.flush().map_err(|e| CliError::io(&path, e))?;

    let (levelset, levelset_note) = if layout.n == 1 && config.levelset {
        match levelset_residual(&set, config.cells) {
            Ok(report) => (Some(report), None),
            Err(e) => {
                warn!("level-set residual skipped: {e}");
                (None, Some(e.to_string()))
            }
        }
    } else {
        (None, None)
    };

    let report = ArrivalReport {
        n: layout.n,
        k,
        t_ext: config.t_ext,
        directions: dirs.len(),
        samples: set.samples.len(),
        max_residual,
        exact_ball,
        leading,
        fit,
        fit_note,
        levelset,
        levelset_note,
    };
    write_json(&output_path(config, "arrival.json")?, &report)?;
    Ok(report)
}

fn write_samples(path: &Path, set: &ArrivalSampleSet) -> Result<()> {
    let mut csv = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["direction".to_string(), "s".into(), "t".into()];
    header.extend((0..=set.n).map(|i| format!("x{i}")));
    header.push("residual".into());
    csv.write_record(&header)?;
    for smp in &set.samples {
        let mut row = vec![smp.direction.to_string(), smp.s.to_string(), smp.t.to_string()];
        row.extend(smp.x.iter().map(|v| v.to_string()));
        row.push(set.residual(smp).to_string());
        csv.write_record(&row)?;
    }
    csv.flush().map_err(|e| CliError::io(path, e))
}
