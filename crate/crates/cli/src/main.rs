//! Command-line front end: scenario files in, point clouds, logs and metrics out.

mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use rotcomp::geom::{Rotation, UnitQuaternion, Vec3};
use rotcomp::memsctl::{run_loop, shock_margin, Jitter, LoopConfig, ShockParams};
use rotcomp::simcore::{beam_dispersion, run_simulation, BeamSample, SimConfig};
use rotcomp::slamlite::{
    ate, odometry_experiment, transform, PairSet, SlamError, TrajectoryPair, Transform,
};

use config::ConfigFile;
use output::{frame_ply, num, poses_csv, Csv, RunManifest};

#[derive(Debug)]
enum CliError {
    Config(String),
    Io(String),
    Misaligned(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Io(_) => 3,
            Self::Misaligned(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Io(m) => write!(f, "I/O error: {m}"),
            Self::Misaligned(m) => write!(f, "misaligned data: {m}"),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Parser)]
#[command(
    name = "rotcomp",
    version,
    about = "Rotation-compensated MEMS lidar simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pairs {
    Consecutive,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Stage {
    On,
    Off,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write frames, logs and metrics.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Jitter-rejection bench for the mirror loop.
    Filter {
        /// Jitter frequency, Hz.
        #[arg(long, allow_negative_numbers = true)]
        freq: f64,
        #[arg(long, value_enum)]
        hg: OnOff,
        #[arg(long)]
        out: PathBuf,
        /// Jitter amplitude, degrees.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        amplitude: f64,
        /// s
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        duration: f64,
    },
    /// Mirror-plate stiffness and shock tolerance.
    Shock {
        /// Tip-tilt resonance, Hz.
        #[arg(long, allow_negative_numbers = true)]
        f_r: Option<f64>,
        /// Piston resonance, Hz.
        #[arg(long, allow_negative_numbers = true)]
        f1: Option<f64>,
        /// Plate mass, kg.
        #[arg(long, allow_negative_numbers = true)]
        m_plate: Option<f64>,
        /// Plate thickness, m.
        #[arg(long, allow_negative_numbers = true)]
        thickness: Option<f64>,
        /// Plate length, m.
        #[arg(long, allow_negative_numbers = true)]
        length: Option<f64>,
        /// Largest piston displacement, m.
        #[arg(long, allow_negative_numbers = true)]
        d_max: Option<f64>,
        /// Largest tolerable excited rotation, degrees.
        #[arg(long, allow_negative_numbers = true)]
        theta_tol: Option<f64>,
    },
    /// Relative-pose translation error between two trajectory CSVs.
    Ate {
        #[arg(long)]
        est: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, value_enum, default_value = "consecutive")]
        pairs: Pairs,
    },
    /// Odometry error under random mirror commands, per sigma and stage setting.
    OdometrySweep {
        #[arg(long)]
        config: PathBuf,
        /// Command standard deviations, degrees.
        #[arg(long, value_delimiter = ',', required = true)]
        sigmas: Vec<f64>,
        #[arg(long, value_enum, default_value = "both")]
        stage: Stage,
        /// Actuation noise, degrees.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out_dir } => simulate(&config, &out_dir),
        Command::Filter {
            freq,
            hg,
            out,
            amplitude,
            duration,
        } => filter(freq, matches!(hg, OnOff::On), amplitude, duration, &out),
        Command::Shock {
            f_r,
            f1,
            m_plate,
            thickness,
            length,
            d_max,
            theta_tol,
        } => {
            let d = ShockParams::default();
            shock(&ShockParams {
                f_r: f_r.unwrap_or(d.f_r),
                f1: f1.unwrap_or(d.f1),
                m_plate: m_plate.unwrap_or(d.m_plate),
                thickness: thickness.unwrap_or(d.thickness),
                length: length.unwrap_or(d.length),
                d_max: d_max.unwrap_or(d.d_max),
                theta_tol: theta_tol.map_or(d.theta_tol, f64::to_radians),
            })
        }
        Command::Ate {
            est,
            reference,
            pairs,
        } => ate_cmd(&est, &reference, pairs),
        Command::OdometrySweep {
            config,
            sigmas,
            stage,
            noise,
            out,
        } => odometry_sweep(&config, &sigmas, stage, noise, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rotcomp: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn load_config(path: &Path) -> Result<(SimConfig, String), CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let parsed = ConfigFile::parse(&text).map_err(CliError::Config)?;
    let config = parsed.build().map_err(CliError::Config)?;
    Ok((config, hex::encode(Sha256::digest(text.as_bytes()))))
}

fn simulate(config_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let start = Instant::now();
    let (config, hash) = load_config(config_path)?;
    let out = run_simulation(&config).map_err(|e| CliError::Config(e.to_string()))?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let mut written = Vec::new();
    let mut save = |name: String, body: &str| -> Result<(), CliError> {
        let path = out_dir.join(&name);
        fs::write(&path, body).map_err(io_err(&path))?;
        written.push(name);
        Ok(())
    };
    let width = out.frames.len().max(1).to_string().len().max(5);
    for frame in &out.frames {
        save(
            format!("frame_{:0width$}.ply", frame.frame_index),
            &frame_ply(frame),
        )?;
    }

    let mut beams = Csv::new(&["timestamp", "dir_x", "dir_y", "dir_z"]);
    for b in &out.beam_log {
        beams.row([b.timestamp, b.direction.x, b.direction.y, b.direction.z].map(num));
    }
    save("beams.csv".into(), beams.as_str())?;
    save("poses.csv".into(), poses_csv(&out.pose_log).as_str())?;

    let mut metrics = Csv::new(&[
        "frame",
        "start_time",
        "points",
        "returns",
        "mean_range_m",
        "angular_std_rad",
        "trace_area_sr",
    ]);
    for frame in &out.frames {
        let (t0, t1) = match (frame.points.first(), frame.points.last()) {
            (Some(a), Some(b)) => (a.timestamp, b.timestamp),
            _ => continue,
        };
        let beams: Vec<BeamSample> = out
            .beam_log
            .iter()
            .filter(|b| b.timestamp >= t0 && b.timestamp <= t1)
            .copied()
            .collect();
        let d = beam_dispersion(&beams);
        let ranges: Vec<f64> = frame.points.iter().filter_map(|p| p.range).collect();
        let mean = if ranges.is_empty() {
            f64::NAN
        } else {
            ranges.iter().sum::<f64>() / ranges.len() as f64
        };
        metrics.row([
            frame.frame_index.to_string(),
            num(t0),
            frame.points.len().to_string(),
            ranges.len().to_string(),
            num(mean),
            num(d.angular_std),
            num(d.trace_area),
        ]);
    }
    let total = beam_dispersion(&out.beam_log);
    let points: usize = out.frames.iter().map(|f| f.points.len()).sum();
    let returns: usize = out
        .frames
        .iter()
        .flat_map(|f| &f.points)
        .filter(|p| p.range.is_some())
        .count();
    metrics.row([
        "all".to_string(),
        num(0.0),
        points.to_string(),
        returns.to_string(),
        num(f64::NAN),
        num(total.angular_std),
        num(total.trace_area),
    ]);
    save("metrics.csv".into(), metrics.as_str())?;

    let manifest = RunManifest {
        command: "simulate".into(),
        config_sha256: hash,
        seed: config.seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        outputs: written,
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    manifest.write(out_dir).map_err(io_err(out_dir))?;

    println!("frames={}", out.frames.len());
    println!("points={points}");
    println!("returns={returns}");
    println!("angular_std_rad={}", num(total.angular_std));
    println!("trace_area_sr={}", num(total.trace_area));
    Ok(())
}

fn filter(
    freq: f64,
    use_hg: bool,
    amplitude_deg: f64,
    duration: f64,
    out: &Path,
) -> Result<(), CliError> {
    if !(freq > 0.0 && freq.is_finite()) {
        return Err(CliError::Config(format!(
            "--freq must be positive, got {freq}"
        )));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(CliError::Config(format!(
            "--duration must be positive, got {duration}"
        )));
    }
    let jitter = Jitter {
        freq,
        amplitude: amplitude_deg.to_radians(),
    };
    let (m, trace) = run_loop(&LoopConfig::default(), jitter, use_hg, duration)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut csv = Csv::new(&["t", "jitter", "residual"]);
    for k in 0..trace.time.len() {
        csv.row([trace.time[k], trace.jitter[k], trace.residual[k]].map(num));
    }
    csv.write(out).map_err(io_err(out))?;

    let mut summary = Csv::new(&["freq_hz", "hg", "rms_rad", "peak_rad"]);
    summary.row([
        num(freq),
        if use_hg { "on" } else { "off" }.into(),
        num(m.rms),
        num(m.peak),
    ]);
    let summary_path = summary_path(out);
    summary
        .write(&summary_path)
        .map_err(io_err(&summary_path))?;
    println!("rms_rad={}", num(m.rms));
    println!("peak_rad={}", num(m.peak));
    Ok(())
}

/// `x.csv` → `x_summary.csv` beside it.
fn summary_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or("filter".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}_summary.csv"))
}

fn shock(params: &ShockParams) -> Result<(), CliError> {
    let r = shock_margin(params).map_err(|e| CliError::Config(e.to_string()))?;
    println!("k_r={}", num(r.k_r));
    println!("moment_of_inertia={}", num(r.moment_of_inertia));
    println!(
        "excited_rotation_per_accel={}",
        num(r.excited_rotation_per_accel)
    );
    println!("tolerable_angular_accel={}", num(r.tolerable_angular_accel));
    println!("k_p={}", num(r.k_p));
    println!("a_max={}", num(r.a_max));
    println!("inertia_over_stiffness={}", num(r.inertia_over_stiffness()));
    Ok(())
}

/// Reads a `timestamp,tx,ty,tz,qw,qx,qy,qz` trajectory.
fn read_trajectory(path: &Path) -> Result<Vec<(f64, Transform)>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let bad = |line: usize, msg: &str| {
        CliError::Config(format!("{}:{}: {msg}", path.display(), line + 1))
    };
    match lines.next() {
        Some((_, header))
            if header.split(',').map(str::trim).eq([
                "timestamp",
                "tx",
                "ty",
                "tz",
                "qw",
                "qx",
                "qy",
                "qz",
            ]) => {}
        Some((i, _)) => return Err(bad(i, "expected header timestamp,tx,ty,tz,qw,qx,qy,qz")),
        None => return Err(bad(0, "empty file")),
    }
    lines
        .map(|(i, line)| {
            let v: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| bad(i, &e.to_string()))?;
            if v.len() != 8 || v.iter().any(|x| !x.is_finite()) {
                return Err(bad(i, "expected 8 finite values"));
            }
            let q = nalgebra::Quaternion::new(v[4], v[5], v[6], v[7]);
            if q.norm() < 1e-9 {
                return Err(bad(i, "zero quaternion"));
            }
            let r: Rotation = UnitQuaternion::from_quaternion(q).to_rotation_matrix();
            Ok((v[0], transform(&r, &Vec3::new(v[1], v[2], v[3]))))
        })
        .collect()
}

fn ate_cmd(est: &Path, reference: &Path, pairs: Pairs) -> Result<(), CliError> {
    let est = read_trajectory(est)?;
    let truth = read_trajectory(reference)?;
    let set = match pairs {
        Pairs::Consecutive => PairSet::Consecutive,
        Pairs::All => PairSet::All,
    };
    let report = ate(&TrajectoryPair::new(est, truth, set)).map_err(|e| match e {
        SlamError::LengthMismatch(..) | SlamError::Misaligned { .. } => {
            CliError::Misaligned(e.to_string())
        }
        other => CliError::Config(other.to_string()),
    })?;
    println!("e_trans_m={}", num(report.e_trans));
    println!("e_rot_rad={}", num(report.e_rot));
    println!("pairs={}", report.pairs);
    Ok(())
}

fn odometry_sweep(
    config_path: &Path,
    sigmas: &[f64],
    stage: Stage,
    noise: f64,
    out: &Path,
) -> Result<(), CliError> {
    let (config, _) = load_config(config_path)?;
    if let Some(s) = sigmas.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
        return Err(CliError::Config(format!(
            "--sigmas must be non-negative, got {s}"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(CliError::Config(format!(
            "--noise must be non-negative, got {noise}"
        )));
    }
    let stages: &[bool] = match stage {
        Stage::On => &[true],
        Stage::Off => &[false],
        Stage::Both => &[true, false],
    };
    let mut csv = Csv::new(&["sigma_deg", "stage", "noise_deg", "e_trans_m"]);
    for &sigma in sigmas {
        for &on in stages {
            let e = odometry_experiment(&config, on, sigma, noise)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let label = if on { "on" } else { "off" };
            csv.row([num(sigma), label.into(), num(noise), num(e)]);
            println!("e_trans_m[sigma={},stage={label}]={}", num(sigma), num(e));
        }
    }
    csv.write(out).map_err(io_err(out))?;
    Ok(())
}
