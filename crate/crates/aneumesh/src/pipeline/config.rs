//! Run configuration: one TOML file drives every pipeline command.

use crate::error::MeshError;
use crate::fem::{BcSpec, MaterialSpec, PressureSpec};
use crate::geometry::SyntheticAaaSpec;
use crate::hexmesh::MeshParams;
use crate::quality::QualityThresholds;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Where the wall (and optional lumen) surface comes from: STL files on
/// disk, or the built-in synthetic aneurysm generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeometrySource {
    Stl {
        wall_stl: PathBuf,
        #[serde(default)]
        lumen_stl: Option<PathBuf>,
    },
    Synthetic { synthetic: SyntheticAaaSpec },
}

impl Default for GeometrySource {
    fn default() -> Self {
        GeometrySource::Synthetic {
            synthetic: SyntheticAaaSpec::default(),
        }
    }
}

/// Laplacian profile smoothing before sweeping.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoothingParams {
    pub iterations: usize,
    pub lambda: f64,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        Self {
            iterations: 5,
            lambda: 0.3,
        }
    }
}

/// Linear-solver controls.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub ssor_omega: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 50_000,
            ssor_omega: 1.2,
        }
    }
}

/// Full pipeline configuration. Every field has a default matching the
/// reference workflow (1.5 mm wall, 2 layers, 0.75 mm elements, Jacobian
/// 0.6, quad angles 45-135 deg, tri angles 30-120 deg).
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PipelineConfig {
    pub geometry: GeometrySource,
    /// Approximate vessel axis, refined automatically during slicing.
    pub axis_hint: Option<[f64; 3]>,
    pub mesh: MeshParams,
    pub include_ilt: bool,
    pub smoothing: SmoothingParams,
    pub thresholds: QualityThresholds,
    pub wall_material: MaterialSpec,
    /// Defaults to a thrombus 20x more compliant than the wall.
    pub ilt_material: Option<MaterialSpec>,
    pub pressure: Option<PressureSpec>,
    pub bcs: BcSpec,
    pub solver: SolverParams,
    /// Number of slices for the first (coarse) centerline pass.
    pub coarse_slices: usize,
    /// Circumferential samples for the coarse pass.
    pub coarse_n_theta: usize,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, MeshError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: PipelineConfig = toml::from_str(&text).map_err(|e| {
            MeshError::InvalidParameter(format!("{}: {e}", path.display()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        self.mesh.validate()?;
        self.thresholds.validate()?;
        if let GeometrySource::Synthetic { synthetic } = &self.geometry {
            synthetic.validate()?;
        }
        if !(self.smoothing.lambda > 0.0 && self.smoothing.lambda <= 1.0) {
            return Err(MeshError::InvalidParameter(
                "smoothing lambda must be in (0, 1]".into(),
            ));
        }
        if self.coarse_slices() < 2 {
            return Err(MeshError::InvalidParameter(
                "coarse_slices must be >= 2".into(),
            ));
        }
        Ok(())
    }

    pub fn coarse_slices(&self) -> usize {
        if self.coarse_slices == 0 {
            33
        } else {
            self.coarse_slices
        }
    }

    pub fn coarse_n_theta(&self) -> usize {
        if self.coarse_n_theta == 0 {
            32
        } else {
            self.coarse_n_theta
        }
    }

    pub fn axis_hint(&self) -> crate::geometry::Vec3 {
        let [x, y, z] = self.axis_hint.unwrap_or([0.0, 0.0, 1.0]);
        crate::geometry::Vec3::new(x, y, z)
    }

    pub fn ilt_material(&self) -> MaterialSpec {
        self.ilt_material
            .unwrap_or_else(|| MaterialSpec::ilt_from_wall(&self.wall_material))
    }

    /// Applied pressure in kPa; defaults to the mean arterial pressure of
    /// 120/80 mmHg when no pressure is configured.
    pub fn pressure_kpa(&self) -> Result<f64, crate::error::FemError> {
        match &self.pressure {
            Some(p) => p.to_kpa(),
            None => crate::fem::map_pressure(120.0, 80.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_round_trips_through_toml() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.mesh.wall_thickness, cfg.mesh.wall_thickness);
        assert!(matches!(back.geometry, GeometrySource::Synthetic { .. }));
    }

    #[test]
    fn stl_source_parses_from_toml() {
        let text = r#"
            include_ilt = true

            [geometry]
            wall_stl = "wall.stl"
            lumen_stl = "lumen.stl"

            [mesh]
            n_layers = 3
            target_element_size = 0.5
        "#;
        let cfg: PipelineConfig = toml::from_str(text).unwrap();
        match &cfg.geometry {
            GeometrySource::Stl { wall_stl, lumen_stl } => {
                assert_eq!(wall_stl, &PathBuf::from("wall.stl"));
                assert_eq!(lumen_stl.as_deref(), Some(Path::new("lumen.stl")));
            }
            other => panic!("wrong source: {other:?}"),
        }
        assert!(cfg.include_ilt);
        assert_eq!(cfg.mesh.n_layers, 3);
        // Unset sections keep defaults.
        assert_eq!(cfg.mesh.wall_thickness, 1.5);
        assert_eq!(cfg.thresholds.jacobian_min, 0.6);
    }

    #[test]
    fn pressure_defaults_to_map_of_120_over_80() {
        let cfg = PipelineConfig::default();
        let kpa = cfg.pressure_kpa().unwrap();
        assert!((kpa - 12.44).abs() < 0.01, "{kpa}");
    }

    #[test]
    fn explicit_and_mmhg_pressure_forms_parse() {
        let kpa: PipelineConfig =
            toml::from_str("[pressure]\npressure_kpa = 12.0\n").unwrap();
        assert_eq!(kpa.pressure_kpa().unwrap(), 12.0);
        let mmhg: PipelineConfig =
            toml::from_str("[pressure]\nsystolic_mmhg = 120.0\ndiastolic_mmhg = 80.0\n").unwrap();
        assert!((mmhg.pressure_kpa().unwrap() - 12.44).abs() < 0.01);
    }

    #[test]
    fn bad_lambda_is_rejected() {
        let mut cfg = PipelineConfig::default();
        cfg.smoothing.lambda = 1.5;
        assert!(cfg.validate().is_err());
    }
}
