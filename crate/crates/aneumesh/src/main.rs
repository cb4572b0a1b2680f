//! Command-line interface for the meshing and wall-stress pipeline.
//!
//! Exit codes: 0 success; 1 runtime or input error; 2 mesh failed the
//! Jacobian quality gate; 3 soft quality failures under --strict-quality.

use aneumesh::fem::PressureSpec;
use aneumesh::geometry::{Point, SyntheticAaaSpec};
use aneumesh::pipeline::{
    cmd_convergence, cmd_mesh, cmd_quality, cmd_solve, cmd_synth, gate_of, GeometrySource,
    PipelineConfig, QualityGate,
};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "aneumesh", version, about = "Structured hex meshing, thrombus tet fill, quality audits, and linear wall-stress analysis for vessel geometries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Pipeline configuration file (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct MeshOverrides {
    /// Override the number of wall layers through the thickness.
    #[arg(long)]
    layers: Option<usize>,
    /// Fill the thrombus between lumen and wall with tets.
    #[arg(long)]
    with_ilt: bool,
}

#[derive(Args)]
struct PressureOverrides {
    /// Applied pressure in kPa (overrides the config).
    #[arg(long, conflicts_with_all = ["systolic", "diastolic"])]
    pressure_kpa: Option<f64>,
    /// Systolic pressure in mmHg (use with --diastolic).
    #[arg(long, requires = "diastolic")]
    systolic: Option<f64>,
    /// Diastolic pressure in mmHg (use with --systolic).
    #[arg(long, requires = "systolic")]
    diastolic: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic aneurysm wall and lumen surfaces as STL.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        /// Seed for random surface perturbation (omitted = smooth).
        #[arg(long)]
        seed: Option<u64>,
        /// Perturbation amplitude in mm (with --seed).
        #[arg(long, default_value_t = 0.2)]
        perturb_amplitude: f64,
    },
    /// Build the wall mesh (and optional thrombus fill) and audit it.
    Mesh {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        mesh: MeshOverrides,
        /// Fail (exit 3) on angle or skew warnings, not just Jacobian.
        #[arg(long)]
        strict_quality: bool,
    },
    /// Audit externally produced VTK / INP meshes.
    Quality {
        /// Mesh files to audit (.vtk or .inp).
        #[arg(required = true)]
        meshes: Vec<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for quality.json (printed to stdout regardless).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        strict_quality: bool,
    },
    /// Mesh in-line and run the static wall-stress analysis.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        mesh: MeshOverrides,
        #[command(flatten)]
        pressure: PressureOverrides,
    },
    /// Layer-refinement study: rebuild and solve per layer count.
    Convergence {
        #[command(flatten)]
        common: CommonArgs,
        /// Layer counts to compare (element size couples as
        /// wall_thickness / layers).
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        layers: Vec<usize>,
        /// Probe point "x,y,z" in mm (repeatable; default: four points
        /// on the coarsest mesh's inner surface).
        #[arg(long, value_parser = parse_point)]
        probe: Vec<Point>,
        #[command(flatten)]
        pressure: PressureOverrides,
    },
}

fn parse_point(s: &str) -> Result<Point, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z, got {s:?}"));
    }
    let coords: Result<Vec<f64>, _> = parts.iter().map(|p| p.trim().parse()).collect();
    let c = coords.map_err(|e| format!("bad coordinate in {s:?}: {e}"))?;
    Ok(Point::new(c[0], c[1], c[2]))
}

fn load_config(path: &Option<PathBuf>) -> Result<PipelineConfig, String> {
    match path {
        Some(p) => PipelineConfig::load(p).map_err(|e| e.to_string()),
        None => Ok(PipelineConfig::default()),
    }
}

fn apply_pressure(config: &mut PipelineConfig, p: &PressureOverrides) {
    if let Some(kpa) = p.pressure_kpa {
        config.pressure = Some(PressureSpec::Kpa { pressure_kpa: kpa });
    } else if let (Some(s), Some(d)) = (p.systolic, p.diastolic) {
        config.pressure = Some(PressureSpec::Mmhg {
            systolic_mmhg: s,
            diastolic_mmhg: d,
        });
    }
}

fn apply_mesh(config: &mut PipelineConfig, m: &MeshOverrides) {
    if let Some(layers) = m.layers {
        config.mesh.n_layers = layers;
    }
    if m.with_ilt {
        config.include_ilt = true;
    }
}

fn gate_exit(gate: QualityGate, strict: bool) -> ExitCode {
    match gate {
        QualityGate::Pass => ExitCode::SUCCESS,
        QualityGate::JacobianFailures(n) => {
            eprintln!("FAIL: {n} elements below the Jacobian threshold");
            ExitCode::from(2)
        }
        QualityGate::SoftWarnings { count, fraction } => {
            eprintln!(
                "WARN: {count} elements fail angle/skew criteria ({:.3}% of total)",
                fraction * 100.0
            );
            if strict {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}

fn run() -> Result<ExitCode, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Synth {
            common,
            seed,
            perturb_amplitude,
        } => {
            let config = load_config(&common.config)?;
            let spec = match config.geometry {
                GeometrySource::Synthetic { synthetic } => synthetic,
                GeometrySource::Stl { .. } => {
                    return Err("synth needs a synthetic geometry section in the config".into())
                }
            };
            let spec: SyntheticAaaSpec = spec;
            let manifest = cmd_synth(&spec, &common.out, seed, perturb_amplitude)
                .map_err(|e| e.to_string())?;
            for f in &manifest.files {
                println!("{}  {}", f.sha256, f.path);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Mesh {
            common,
            mesh,
            strict_quality,
        } => {
            let mut config = load_config(&common.config)?;
            apply_mesh(&mut config, &mesh);
            let outcome = cmd_mesh(&config, &common.out).map_err(|e| e.to_string())?;
            println!(
                "mesh: {} hexes / {} nodes (n_theta {}, n_axial {}, {} layers){}",
                outcome.summary.wall_elements,
                outcome.summary.wall_nodes,
                outcome.summary.n_theta,
                outcome.summary.n_axial,
                outcome.summary.n_layers,
                if outcome.summary.ilt_elements > 0 {
                    format!(", thrombus {} tets", outcome.summary.ilt_elements)
                } else {
                    String::new()
                }
            );
            print!("{}", outcome.report.to_table());
            Ok(gate_exit(outcome.gate, strict_quality))
        }
        Command::Quality {
            meshes,
            config,
            out,
            strict_quality,
        } => {
            let config = load_config(&config)?;
            let report = cmd_quality(&meshes, &config.thresholds, out.as_deref())
                .map_err(|e| e.to_string())?;
            print!("{}", report.to_table());
            Ok(gate_exit(gate_of(&report), strict_quality))
        }
        Command::Solve {
            common,
            mesh,
            pressure,
        } => {
            let mut config = load_config(&common.config)?;
            apply_mesh(&mut config, &mesh);
            apply_pressure(&mut config, &pressure);
            let outcome = cmd_solve(&config, &common.out).map_err(|e| e.to_string())?;
            println!(
                "applied pressure: {:.4} kPa",
                outcome.summary.applied_pressure_kpa
            );
            println!(
                "solved {} dofs in {} iterations (relative residual {:.3e})",
                3 * outcome.solution.model.nodes.len(),
                outcome.summary.iterations,
                outcome.summary.relative_residual
            );
            println!(
                "max principal stress: peak {:.4} MPa, p99 {:.4} MPa",
                outcome.summary.peak_mpa, outcome.summary.p99_mpa
            );
            println!(
                "reaction imbalance: {:.3e}",
                outcome.summary.reaction_imbalance
            );
            for (stage, t) in &outcome.manifest.timings_s {
                println!("  {stage}: {t:.2} s");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Convergence {
            common,
            layers,
            probe,
            pressure,
        } => {
            let mut config = load_config(&common.config)?;
            apply_pressure(&mut config, &pressure);
            let probes = (!probe.is_empty()).then_some(probe);
            let report = cmd_convergence(&config, &layers, probes, &common.out)
                .map_err(|e| e.to_string())?;
            print!("{}", report.to_table());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    // ANEUMESH_THREADS caps the worker pool (default: all cores; the
    // sequential build ignores it).
    #[cfg(feature = "parallel")]
    if let Ok(v) = std::env::var("ANEUMESH_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                eprintln!("error: ANEUMESH_THREADS must be a positive integer, got {v:?}");
                return ExitCode::FAILURE;
            }
        }
    }
    match run() {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
