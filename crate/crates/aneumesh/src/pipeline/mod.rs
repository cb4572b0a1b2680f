//! End-to-end orchestration: configuration, staged runs with timing and
//! digests, and the command implementations behind the CLI.
//!
//! Meshing is two-pass: a coarse centerline pass measures the vessel
//! (mean radius, arc length) to resolve the circumferential and axial
//! division counts, then the surface is re-sliced at the final density
//! and swept.

mod config;
mod manifest;

pub use config::{GeometrySource, PipelineConfig, SmoothingParams, SolverParams};
pub use manifest::{sha256_file, FileDigest, RunManifest};

use crate::error::{FemError, MeshError};
use crate::fem::{run_static, FeModel, StaticInput, StaticSolution};
use crate::geometry::{
    extract_centerline, perturb_surface, slice_profiles, smooth_profiles, synth_aaa, Point,
    SliceProfile, SyntheticAaaSpec, TriSurface,
};
use crate::hexmesh::{sweep, HexWallMesh};
use crate::quality::{hex_part, quality_report, tet_part, QualityReport, QualityThresholds};
use crate::tetfill::{
    build_ilt_lattice, cap_ends, check_conformal, resolve_n_radial, split_to_tets, TetFillMesh,
};
use serde::Serialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage {stage}: {source}")]
    Mesh {
        stage: &'static str,
        #[source]
        source: MeshError,
    },
    #[error("stage {stage}: {source}")]
    Fem {
        stage: &'static str,
        #[source]
        source: FemError,
    },
    #[error("stage tetfill: thrombus mesh is not conformal to the wall (max interface node distance {max_distance_mm:.3e} mm)")]
    NonConformal { max_distance_mm: f64 },
    #[error("stage config: {0}")]
    Config(String),
}

impl PipelineError {
    fn mesh(stage: &'static str) -> impl FnOnce(MeshError) -> Self {
        move |source| PipelineError::Mesh { stage, source }
    }

    fn fem(stage: &'static str) -> impl FnOnce(FemError) -> Self {
        move |source| PipelineError::Fem { stage, source }
    }
}

/// Quality-gate verdict for `mesh`-style commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum QualityGate {
    Pass,
    /// Hard failure: elements below the Jacobian threshold.
    JacobianFailures(usize),
    /// Soft failures only (angles / skew); fatal under --strict-quality.
    SoftWarnings { count: usize, fraction: f64 },
}

pub fn gate_of(report: &QualityReport) -> QualityGate {
    let jac: usize = report
        .parts
        .iter()
        .map(|p| p.jacobian_failures.unwrap_or(0))
        .sum();
    if jac > 0 {
        return QualityGate::JacobianFailures(jac);
    }
    let soft: usize = report
        .parts
        .iter()
        .map(|p| p.angle_failures + p.skew_failures.unwrap_or(0))
        .sum();
    if soft > 0 {
        QualityGate::SoftWarnings {
            count: soft,
            fraction: report.warn_fraction(),
        }
    } else {
        QualityGate::Pass
    }
}

/// Resolved meshes plus the measurements that sized them.
pub struct Build {
    pub wall: HexWallMesh,
    pub ilt: Option<TetFillMesh>,
    pub summary: BuildSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildSummary {
    pub n_theta: usize,
    pub n_axial: usize,
    pub n_layers: usize,
    pub mean_radius_mm: f64,
    pub centerline_length_mm: f64,
    pub wall_elements: usize,
    pub wall_nodes: usize,
    pub ilt_elements: usize,
    pub ilt_nodes: usize,
    pub n_radial: usize,
}

fn load_surfaces(
    config: &PipelineConfig,
) -> Result<(TriSurface, Option<TriSurface>), MeshError> {
    match &config.geometry {
        GeometrySource::Stl { wall_stl, lumen_stl } => {
            let wall = crate::geometry::load_stl(wall_stl)?.surface;
            let lumen = match (config.include_ilt, lumen_stl) {
                (true, Some(path)) => Some(crate::geometry::load_stl(path)?.surface),
                (true, None) => {
                    return Err(MeshError::InvalidParameter(
                        "include_ilt requires lumen_stl".into(),
                    ))
                }
                (false, _) => None,
            };
            Ok((wall, lumen))
        }
        GeometrySource::Synthetic { synthetic } => {
            let (wall, lumen) = synth_aaa(synthetic)?;
            Ok((wall, config.include_ilt.then_some(lumen)))
        }
    }
}

fn smoothed(
    profiles: Vec<SliceProfile>,
    smoothing: &SmoothingParams,
) -> Result<Vec<SliceProfile>, MeshError> {
    if smoothing.iterations == 0 {
        return Ok(profiles);
    }
    Ok(smooth_profiles(&profiles, smoothing.iterations, smoothing.lambda)?.profiles)
}

/// Build the wall mesh (and thrombus fill when configured) from a config.
pub fn build_meshes(
    config: &PipelineConfig,
    manifest: &mut RunManifest,
) -> Result<Build, PipelineError> {
    let hint = config.axis_hint();
    let (wall_surface, lumen_surface) = manifest
        .stage("load_geometry", || load_surfaces(config))
        .map_err(PipelineError::mesh("load_geometry"))?;

    // Coarse pass: measure the vessel to resolve division counts.
    let (n_theta, n_axial, mean_radius, length) = manifest
        .stage("measure", || -> Result<_, MeshError> {
            let coarse =
                extract_centerline(&wall_surface, &hint, config.coarse_slices())?;
            let profiles =
                slice_profiles(&wall_surface, &coarse, config.coarse_n_theta())?;
            let mean_radius = profiles.iter().map(|p| p.mean_radius()).sum::<f64>()
                / profiles.len() as f64;
            let length = coarse.arc_length();
            Ok((
                config.mesh.resolve_n_theta(mean_radius),
                config.mesh.resolve_n_axial(length),
                mean_radius,
                length,
            ))
        })
        .map_err(PipelineError::mesh("measure"))?;

    // Fine pass at the resolved density.
    let (centerline, wall_profiles) = manifest
        .stage("profiles", || -> Result<_, MeshError> {
            let centerline = extract_centerline(&wall_surface, &hint, n_axial + 1)?;
            let profiles = slice_profiles(&wall_surface, &centerline, n_theta)?;
            Ok((centerline, smoothed(profiles, &config.smoothing)?))
        })
        .map_err(PipelineError::mesh("profiles"))?;

    let wall = manifest
        .stage("sweep", || sweep(&wall_profiles, &config.mesh))
        .map_err(PipelineError::mesh("sweep"))?;

    let mut n_radial = 0;
    let ilt = match &lumen_surface {
        None => None,
        Some(lumen) => {
            let ilt = manifest
                .stage("tetfill", || -> Result<TetFillMesh, PipelineError> {
                    let lumen_profiles =
                        smoothed(
                            slice_profiles(lumen, &centerline, n_theta)
                                .map_err(PipelineError::mesh("tetfill"))?,
                            &config.smoothing,
                        )
                        .map_err(PipelineError::mesh("tetfill"))?;
                    let lumen_mean = lumen_profiles
                        .iter()
                        .map(|p| p.mean_radius())
                        .sum::<f64>()
                        / lumen_profiles.len() as f64;
                    let inner_mean = if config.mesh.grow_inward {
                        mean_radius - config.mesh.wall_thickness
                    } else {
                        mean_radius
                    };
                    n_radial = resolve_n_radial(
                        inner_mean - lumen_mean,
                        config.mesh.target_element_size,
                    );
                    let lattice = build_ilt_lattice(&wall, &lumen_profiles, n_radial)
                        .map_err(PipelineError::mesh("tetfill"))?;
                    let ilt = cap_ends(
                        split_to_tets(&lattice).map_err(PipelineError::mesh("tetfill"))?,
                    )
                    .map_err(PipelineError::mesh("tetfill"))?;
                    let conf = check_conformal(&wall, &ilt);
                    if !conf.is_conformal() {
                        return Err(PipelineError::NonConformal {
                            max_distance_mm: conf.max_node_distance_mm,
                        });
                    }
                    Ok(ilt)
                })?;
            Some(ilt)
        }
    };

    let summary = BuildSummary {
        n_theta,
        n_axial,
        n_layers: config.mesh.n_layers,
        mean_radius_mm: mean_radius,
        centerline_length_mm: length,
        wall_elements: wall.hexes.len(),
        wall_nodes: wall.nodes.len(),
        ilt_elements: ilt.as_ref().map_or(0, |m| m.tets.len()),
        ilt_nodes: ilt.as_ref().map_or(0, |m| m.nodes.len()),
        n_radial,
    };
    Ok(Build { wall, ilt, summary })
}

/// `synth`: write synthetic wall and lumen surfaces as binary STL.
pub fn cmd_synth(
    spec: &SyntheticAaaSpec,
    out_dir: &Path,
    seed: Option<u64>,
    perturb_amplitude: f64,
) -> Result<RunManifest, PipelineError> {
    let stage = PipelineError::mesh("synth");
    spec.validate().map_err(PipelineError::mesh("config"))?;
    std::fs::create_dir_all(out_dir).map_err(|e| stage(e.into()))?;
    let config = PipelineConfig {
        geometry: GeometrySource::Synthetic { synthetic: spec.clone() },
        ..PipelineConfig::default()
    };
    let mut manifest = RunManifest::new("synth", &config);
    let (mut wall, lumen) = manifest
        .stage("synth", || synth_aaa(spec))
        .map_err(PipelineError::mesh("synth"))?;
    if let Some(seed) = seed {
        perturb_surface(&mut wall, seed, perturb_amplitude);
    }
    let wall_path = out_dir.join("wall.stl");
    let lumen_path = out_dir.join("lumen.stl");
    crate::geometry::write_stl_binary(&wall, &wall_path)
        .map_err(PipelineError::mesh("synth"))?;
    crate::geometry::write_stl_binary(&lumen, &lumen_path)
        .map_err(PipelineError::mesh("synth"))?;
    manifest
        .record_file(out_dir, &wall_path)
        .and_then(|()| manifest.record_file(out_dir, &lumen_path))
        .and_then(|()| manifest.write(out_dir).map(|_| ()))
        .map_err(PipelineError::mesh("synth"))?;
    Ok(manifest)
}

#[derive(Debug)]
pub struct MeshOutcome {
    pub report: QualityReport,
    pub gate: QualityGate,
    pub summary: BuildSummary,
    pub manifest: RunManifest,
}

/// `mesh`: build, audit, and export the meshes. Files are written even
/// when the quality gate fails so the defect can be inspected; the gate
/// verdict is returned for the CLI to map to an exit code.
pub fn cmd_mesh(config: &PipelineConfig, out_dir: &Path) -> Result<MeshOutcome, PipelineError> {
    let stage = PipelineError::mesh("export");
    std::fs::create_dir_all(out_dir).map_err(|e| stage(e.into()))?;
    let mut manifest = RunManifest::new("mesh", config);
    let build = build_meshes(config, &mut manifest)?;

    let report = manifest
        .stage::<_, PipelineError>("quality", || {
            Ok(quality_report(
                Some((&build.wall.nodes, &build.wall.hexes)),
                build
                    .ilt
                    .as_ref()
                    .map(|m| (m.nodes.as_slice(), m.tets.as_slice())),
                &config.thresholds,
            ))
        })
        .unwrap();

    let mut written: Vec<PathBuf> = Vec::new();
    manifest
        .stage("export", || -> Result<(), MeshError> {
            let wall_vtk = out_dir.join("wall.vtk");
            let wall_inp = out_dir.join("wall.inp");
            crate::io::export_wall_vtk(&build.wall, &wall_vtk)?;
            crate::io::export_wall_inp(&build.wall, &wall_inp)?;
            written.push(wall_vtk);
            written.push(wall_inp);
            if let Some(ilt) = &build.ilt {
                let ilt_vtk = out_dir.join("ilt.vtk");
                let ilt_inp = out_dir.join("ilt.inp");
                let combined = out_dir.join("combined.inp");
                crate::io::export_ilt_vtk(ilt, &ilt_vtk)?;
                crate::io::export_ilt_inp(ilt, &ilt_inp)?;
                let model = FeModel::new(&build.wall, Some(ilt), &config.bcs);
                crate::io::export_combined_inp(&build.wall, Some(ilt), &model, &combined)?;
                written.push(ilt_vtk);
                written.push(ilt_inp);
                written.push(combined);
            }
            let quality_json = out_dir.join("quality.json");
            crate::io::write_json(&quality_json, &report)?;
            written.push(quality_json);
            let summary_json = out_dir.join("mesh_summary.json");
            crate::io::write_json(&summary_json, &build.summary)?;
            written.push(summary_json);
            Ok(())
        })
        .map_err(PipelineError::mesh("export"))?;
    for path in &written {
        manifest
            .record_file(out_dir, path)
            .map_err(PipelineError::mesh("export"))?;
    }
    manifest.write(out_dir).map_err(PipelineError::mesh("export"))?;

    Ok(MeshOutcome {
        gate: gate_of(&report),
        report,
        summary: build.summary,
        manifest,
    })
}

/// `quality`: standalone audit of externally produced VTK / INP meshes.
/// Each file contributes a hex and/or tet part named after the file.
pub fn cmd_quality(
    paths: &[PathBuf],
    thresholds: &QualityThresholds,
    out_dir: Option<&Path>,
) -> Result<QualityReport, PipelineError> {
    let stage = PipelineError::mesh("quality");
    if paths.is_empty() {
        return Err(PipelineError::Config("no mesh files given".into()));
    }
    let mut parts = Vec::new();
    for path in paths {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let ext = path
            .extension()
            .map(|e| e.to_ascii_lowercase().to_string_lossy().into_owned())
            .unwrap_or_default();
        let (nodes, hexes, tets) = match ext.as_str() {
            "vtk" => {
                let m = crate::io::read_vtk(path).map_err(PipelineError::mesh("quality"))?;
                (m.points, m.hexes, m.tets)
            }
            "inp" => {
                let m = crate::io::read_inp(path).map_err(PipelineError::mesh("quality"))?;
                (m.nodes, m.hexes, m.tets)
            }
            other => {
                return Err(PipelineError::Config(format!(
                    "{}: unsupported mesh format .{other} (expected .vtk or .inp)",
                    path.display()
                )))
            }
        };
        if !hexes.is_empty() {
            parts.push(hex_part(&format!("{stem} (hex)"), &nodes, &hexes, thresholds));
        }
        if !tets.is_empty() {
            parts.push(tet_part(&format!("{stem} (tet)"), &nodes, &tets, thresholds));
        }
    }
    let report = QualityReport {
        thresholds: thresholds.clone(),
        parts,
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| stage(e.into()))?;
        crate::io::write_json(&dir.join("quality.json"), &report)
            .map_err(PipelineError::mesh("quality"))?;
    }
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub applied_pressure_kpa: f64,
    pub peak_mpa: f64,
    pub p99_mpa: f64,
    pub iterations: usize,
    pub relative_residual: f64,
    pub reaction_imbalance: f64,
}

#[derive(Debug)]
pub struct SolveOutcome {
    pub solution: StaticSolution,
    pub summary: SolveSummary,
    pub build_summary: BuildSummary,
    pub manifest: RunManifest,
}

/// `solve`: build the meshes in-line, run the static analysis, and export
/// the stress field and statistics.
pub fn cmd_solve(config: &PipelineConfig, out_dir: &Path) -> Result<SolveOutcome, PipelineError> {
    let stage = PipelineError::mesh("export");
    std::fs::create_dir_all(out_dir).map_err(|e| stage(e.into()))?;
    let mut manifest = RunManifest::new("solve", config);
    let build = build_meshes(config, &mut manifest)?;

    let pressure_kpa = config.pressure_kpa().map_err(PipelineError::fem("config"))?;
    manifest.applied_pressure_kpa = Some(pressure_kpa);

    let solution = manifest.stage("solve", || {
        let mut input = StaticInput::new(&build.wall, pressure_kpa);
        if let Some(ilt) = &build.ilt {
            input = input.with_ilt(ilt);
            input.ilt_material = Some(config.ilt_material());
        }
        input.wall_material = config.wall_material;
        input.bcs = config.bcs;
        input.tolerance = config.solver.tolerance;
        input.max_iterations = config.solver.max_iterations;
        input.ssor_omega = config.solver.ssor_omega;
        run_static(&input).map_err(PipelineError::fem("solve"))
    })?;

    let summary = SolveSummary {
        applied_pressure_kpa: pressure_kpa,
        peak_mpa: solution.stats.peak_mpa,
        p99_mpa: solution.stats.p99_mpa,
        iterations: solution.log.iterations,
        relative_residual: solution.log.residual,
        reaction_imbalance: solution.reaction_imbalance,
    };

    let mut written: Vec<PathBuf> = Vec::new();
    manifest
        .stage("export", || -> Result<(), MeshError> {
            let stress_vtk = out_dir.join("stress.vtk");
            crate::io::export_stress_vtk(&solution.model, &solution.stress, false, &stress_vtk)?;
            written.push(stress_vtk);
            let stats_json = out_dir.join("stress_stats.json");
            crate::io::write_json(&stats_json, &solution.stats)?;
            written.push(stats_json);
            let log_json = out_dir.join("solve_log.json");
            crate::io::write_json(
                &log_json,
                &serde_json::json!({
                    "summary": &summary,
                    "residual_history": &solution.log.history,
                }),
            )?;
            written.push(log_json);
            Ok(())
        })
        .map_err(PipelineError::mesh("export"))?;
    for path in &written {
        manifest
            .record_file(out_dir, path)
            .map_err(PipelineError::mesh("export"))?;
    }
    manifest.write(out_dir).map_err(PipelineError::mesh("export"))?;

    Ok(SolveOutcome {
        solution,
        summary,
        build_summary: build.summary,
        manifest,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub layers: usize,
    pub element_size_mm: f64,
    pub n_elements: usize,
    pub n_nodes: usize,
    pub peak_mpa: f64,
    pub p99_mpa: f64,
    pub build_s: f64,
    pub solve_s: f64,
    pub iterations: usize,
}

#[derive(Debug, Default, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// One 101-point percentile curve per row.
    pub percentile_curves: Vec<Vec<f64>>,
    pub probe_points: Vec<[f64; 3]>,
    /// Probe values per row, aligned with `probe_points`.
    pub probe_values_mpa: Vec<Vec<f64>>,
}

impl ConvergenceReport {
    /// Plain-text comparison table (one column per mesh).
    pub fn to_table(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<28}{}",
            "Layers",
            self.rows
                .iter()
                .map(|r| format!("{:>14}", r.layers))
                .collect::<String>()
        );
        let mut line = |label: &str, cells: Vec<String>| {
            let _ = writeln!(
                s,
                "{label:<28}{}",
                cells.iter().map(|c| format!("{c:>14}")).collect::<String>()
            );
        };
        line(
            "Element size (mm)",
            self.rows.iter().map(|r| format!("{:.3}", r.element_size_mm)).collect(),
        );
        line(
            "No. of elements",
            self.rows.iter().map(|r| r.n_elements.to_string()).collect(),
        );
        line(
            "No. of nodes",
            self.rows.iter().map(|r| r.n_nodes.to_string()).collect(),
        );
        line(
            "Peak stress (MPa)",
            self.rows.iter().map(|r| format!("{:.4}", r.peak_mpa)).collect(),
        );
        line(
            "99th percentile (MPa)",
            self.rows.iter().map(|r| format!("{:.4}", r.p99_mpa)).collect(),
        );
        line(
            "Mesh time (s)",
            self.rows.iter().map(|r| format!("{:.1}", r.build_s)).collect(),
        );
        line(
            "Solve time (s)",
            self.rows.iter().map(|r| format!("{:.1}", r.solve_s)).collect(),
        );
        s
    }
}

/// Default probe locations: inner-surface points at four axial stations
/// of the given wall mesh (angle index 0).
pub fn default_probe_points(wall: &HexWallMesh) -> Vec<Point> {
    (1..=4)
        .map(|q| {
            let j = q * (wall.n_slices - 1) / 5;
            wall.nodes[wall.node_id(j, 0, wall.n_layers)]
        })
        .collect()
}

/// `convergence`: rebuild and solve at each layer count with element size
/// coupled as wall_thickness / n_layers, then compare. Partial results
/// are written before any error is propagated.
pub fn cmd_convergence(
    config: &PipelineConfig,
    layer_counts: &[usize],
    probe_points: Option<Vec<Point>>,
    out_dir: &Path,
) -> Result<ConvergenceReport, PipelineError> {
    if layer_counts.len() < 2 {
        return Err(PipelineError::Config(
            "convergence needs at least 2 layer counts".into(),
        ));
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|e| PipelineError::mesh("export")(e.into()))?;
    let mut manifest = RunManifest::new("convergence", config);
    let mut report = ConvergenceReport::default();
    let mut probes = probe_points;

    let result = (|| -> Result<(), PipelineError> {
        for &layers in layer_counts {
            let mut run_config = config.clone();
            run_config.include_ilt = false; // wall-only comparison
            run_config.mesh.n_layers = layers;
            run_config.mesh.target_element_size =
                config.mesh.wall_thickness / layers as f64;
            run_config.mesh.n_theta = 0;
            run_config.mesh.n_axial = 0;

            let t0 = std::time::Instant::now();
            let build = build_meshes(&run_config, &mut manifest)?;
            let build_s = t0.elapsed().as_secs_f64();

            let outcome = {
                let pressure_kpa = run_config
                    .pressure_kpa()
                    .map_err(PipelineError::fem("config"))?;
                let mut input = StaticInput::new(&build.wall, pressure_kpa);
                input.wall_material = run_config.wall_material;
                input.bcs = run_config.bcs;
                input.tolerance = run_config.solver.tolerance;
                input.max_iterations = run_config.solver.max_iterations;
                input.ssor_omega = run_config.solver.ssor_omega;
                let t1 = std::time::Instant::now();
                let solution = run_static(&input).map_err(PipelineError::fem("solve"))?;
                (solution, t1.elapsed().as_secs_f64())
            };
            let (solution, solve_s) = outcome;

            let points = probes
                .get_or_insert_with(|| default_probe_points(&build.wall))
                .clone();
            if report.probe_points.is_empty() {
                report.probe_points = points.iter().map(|p| [p.x, p.y, p.z]).collect();
            }
            let probe_results = crate::fem::probe(
                &build.wall.nodes,
                &solution.stress.max_principal,
                &points,
                run_config.mesh.target_element_size,
            );
            report
                .probe_values_mpa
                .push(probe_results.iter().map(|r| r.value_mpa).collect());
            report.percentile_curves.push(solution.stats.percentile_curve.clone());
            report.rows.push(ConvergenceRow {
                layers,
                element_size_mm: run_config.mesh.target_element_size,
                n_elements: build.wall.hexes.len(),
                n_nodes: build.wall.nodes.len(),
                peak_mpa: solution.stats.peak_mpa,
                p99_mpa: solution.stats.p99_mpa,
                build_s,
                solve_s,
                iterations: solution.log.iterations,
            });
        }
        Ok(())
    })();

    // Preserve whatever completed, then propagate any failure.
    let json_path = out_dir.join("convergence.json");
    crate::io::write_json(&json_path, &report).map_err(PipelineError::mesh("export"))?;
    manifest
        .record_file(out_dir, &json_path)
        .and_then(|()| manifest.write(out_dir).map(|_| ()))
        .map_err(PipelineError::mesh("export"))?;
    result?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_synthetic_config() -> PipelineConfig {
        // Small, quick geometry: meshes in well under a second.
        let synthetic = SyntheticAaaSpec {
            length: 30.0,
            base_radius: 8.0,
            bulge_amplitude: 4.0,
            bulge_center: 15.0,
            bulge_width: 5.0,
            asymmetry_offset: 0.0,
            n_theta_facets: 64,
            n_z_facets: 64,
            lumen_radius: 3.0,
        };
        PipelineConfig {
            geometry: GeometrySource::Synthetic { synthetic },
            mesh: crate::hexmesh::MeshParams {
                wall_thickness: 1.0,
                n_layers: 2,
                target_element_size: 1.5,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn mesh_command_exports_and_passes_gate() {
        let config = tiny_synthetic_config();
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_mesh(&config, dir.path()).unwrap();
        assert_eq!(out.gate, QualityGate::Pass, "{:?}", out.report.to_table());
        for name in ["wall.vtk", "wall.inp", "quality.json", "mesh_summary.json", "manifest.json"] {
            assert!(dir.path().join(name).exists(), "missing {name}");
        }
        // No ILT requested: no tet exports.
        assert!(!dir.path().join("ilt.vtk").exists());
        // Manifest digests match what is on disk.
        assert!(out.manifest.check_digests(dir.path()).is_empty());
        assert!(out.summary.n_theta >= 8 && out.summary.n_theta % 2 == 0);
    }

    #[test]
    fn mesh_command_with_ilt_is_conformal_and_exports_tets() {
        let mut config = tiny_synthetic_config();
        config.include_ilt = true;
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_mesh(&config, dir.path()).unwrap();
        assert!(out.summary.ilt_elements > 0);
        for name in ["ilt.vtk", "ilt.inp", "combined.inp"] {
            assert!(dir.path().join(name).exists(), "missing {name}");
        }
        let names: Vec<&str> = out.report.parts.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, vec!["Wall", "ILT"]);
    }

    #[test]
    fn mesh_runs_are_bit_identical() {
        let config = tiny_synthetic_config();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a = cmd_mesh(&config, dir_a.path()).unwrap();
        let b = cmd_mesh(&config, dir_b.path()).unwrap();
        for (fa, fb) in a.manifest.files.iter().zip(&b.manifest.files) {
            assert_eq!(fa.path, fb.path);
            assert_eq!(fa.sha256, fb.sha256, "digest drift in {}", fa.path);
        }
    }

    #[test]
    fn quality_command_audits_written_meshes() {
        let mut config = tiny_synthetic_config();
        config.include_ilt = true;
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_mesh(&config, dir.path()).unwrap();
        let report = cmd_quality(
            &[dir.path().join("wall.vtk"), dir.path().join("ilt.inp")],
            &config.thresholds,
            None,
        )
        .unwrap();
        // Same elements, same counts as the in-line audit.
        assert_eq!(report.parts.len(), 2);
        assert_eq!(report.parts[0].n_elements, out.report.parts[0].n_elements);
        assert_eq!(report.parts[1].n_elements, out.report.parts[1].n_elements);
        assert_eq!(
            report.parts[0].jacobian_failures,
            out.report.parts[0].jacobian_failures
        );
    }

    #[test]
    fn synth_command_is_seed_deterministic() {
        let spec = SyntheticAaaSpec {
            n_theta_facets: 32,
            n_z_facets: 32,
            ..Default::default()
        };
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a = cmd_synth(&spec, dir_a.path(), Some(7), 0.2).unwrap();
        let b = cmd_synth(&spec, dir_b.path(), Some(7), 0.2).unwrap();
        assert_eq!(a.files[0].sha256, b.files[0].sha256);
        // A different seed changes the wall surface.
        let dir_c = tempfile::tempdir().unwrap();
        let c = cmd_synth(&spec, dir_c.path(), Some(8), 0.2).unwrap();
        assert_ne!(a.files[0].sha256, c.files[0].sha256);
        // The lumen is never perturbed.
        assert_eq!(a.files[1].sha256, c.files[1].sha256);
    }

    #[test]
    fn solve_command_produces_stats_and_stress_field() {
        let config = tiny_synthetic_config();
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_solve(&config, dir.path()).unwrap();
        assert!(out.summary.peak_mpa > 0.0);
        assert!(out.summary.p99_mpa <= out.summary.peak_mpa);
        assert!(out.summary.reaction_imbalance < 1e-8);
        // Default pressure is the 120/80 mean arterial pressure.
        assert!((out.summary.applied_pressure_kpa - 12.44).abs() < 0.01);
        for name in ["stress.vtk", "stress_stats.json", "solve_log.json", "manifest.json"] {
            assert!(dir.path().join(name).exists(), "missing {name}");
        }
        let back = crate::io::read_vtk(&dir.path().join("stress.vtk")).unwrap();
        assert_eq!(back.point_scalars[0].0, "max_principal_stress_MPa");
        assert_eq!(back.point_scalars[0].1.len(), out.solution.model.nodes.len());
    }

    #[test]
    fn convergence_command_compares_layer_counts() {
        let mut config = tiny_synthetic_config();
        // Thicker wall so the coupled element sizes stay coarse and the
        // two solves stay quick.
        config.mesh.wall_thickness = 2.0;
        let dir = tempfile::tempdir().unwrap();
        let report = cmd_convergence(&config, &[1, 2], None, dir.path()).unwrap();
        assert_eq!(report.rows.len(), 2);
        // Element size couples to layer count as thickness / layers.
        assert_eq!(report.rows[0].element_size_mm, 2.0);
        assert_eq!(report.rows[1].element_size_mm, 1.0);
        assert!(report.rows[1].n_elements > report.rows[0].n_elements);
        assert_eq!(report.probe_points.len(), 4);
        assert_eq!(report.probe_values_mpa[0].len(), 4);
        assert_eq!(report.percentile_curves[0].len(), 101);
        assert!(dir.path().join("convergence.json").exists());
        let table = report.to_table();
        assert!(table.contains("99th percentile"));
    }

    #[test]
    fn too_few_layer_counts_is_a_config_error() {
        let config = tiny_synthetic_config();
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_convergence(&config, &[2], None, dir.path()).unwrap_err();
        assert!(matches!(err, PipelineError::Config(_)));
    }

    #[test]
    fn stl_round_trip_matches_synthetic_path() {
        // synth -> STL files -> mesh from STL produces a valid mesh of
        // the same lattice dimensions as the in-memory path.
        let config = tiny_synthetic_config();
        let dir = tempfile::tempdir().unwrap();
        let spec = match &config.geometry {
            GeometrySource::Synthetic { synthetic } => synthetic.clone(),
            _ => unreachable!(),
        };
        cmd_synth(&spec, dir.path(), None, 0.0).unwrap();
        let mut stl_config = config.clone();
        stl_config.geometry = GeometrySource::Stl {
            wall_stl: dir.path().join("wall.stl"),
            lumen_stl: Some(dir.path().join("lumen.stl")),
        };
        let out_a = cmd_mesh(&config, &dir.path().join("a")).unwrap();
        let out_b = cmd_mesh(&stl_config, &dir.path().join("b")).unwrap();
        assert_eq!(out_a.summary.n_theta, out_b.summary.n_theta);
        assert_eq!(out_a.summary.n_axial, out_b.summary.n_axial);
        assert_eq!(out_a.summary.wall_elements, out_b.summary.wall_elements);
        assert_eq!(out_b.gate, QualityGate::Pass);
    }

    #[test]
    fn wall_too_thick_fails_with_stage_attribution() {
        let mut config = tiny_synthetic_config();
        config.mesh.wall_thickness = 20.0;
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_mesh(&config, dir.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("stage"), "{msg}");
    }
}
