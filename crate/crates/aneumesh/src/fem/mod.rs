//! Linear elastostatic wall-stress analysis: internal pressure on the
//! inner surface, fixed end rings, maximum-principal-stress recovery and
//! percentile statistics.
//!
//! Units are mm / MPa / N internally; kPa and mmHg are converted at the
//! boundary. Hexes use the mean-dilatation (B-bar) 8-node formulation so
//! the near-incompressible default (nu = 0.49) does not lock; thrombus
//! tets are single-point 4-node elements.

mod assemble;
mod element;
mod sparse;
mod stress;

pub use assemble::{
    apply_pressure_closed, assemble, net_force, pressure_loads_quads, pressure_loads_tris,
    FeModel,
};
pub use element::{
    elasticity_matrix, hex8_stiffness_bbar, hex8_stiffness_plain, hex8_stress_bbar, hex8_volume,
    tet4_stiffness, tet4_stress,
};
pub use sparse::{apply_dirichlet, pcg_ssor, restore_dirichlet, solve_dirichlet, Csr, SolveLog};
pub use stress::{
    max_principal, percentile_sorted, probe, recover_stress, stress_stats, ProbeResult,
    StressField, StressStats,
};

use crate::error::FemError;
use crate::hexmesh::HexWallMesh;
use crate::tetfill::TetFillMesh;
use serde::{Deserialize, Serialize};

pub const MMHG_TO_KPA: f64 = 0.133322;

/// Isotropic linear material (MPa).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct MaterialSpec {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
}

impl Default for MaterialSpec {
    fn default() -> Self {
        // Near-incompressible wall; stresses are independent of the
        // modulus for this load-driven linear problem.
        Self {
            youngs_modulus: 1.0,
            poisson_ratio: 0.49,
        }
    }
}

impl MaterialSpec {
    /// Thrombus default: 20x more compliant than the wall, slightly
    /// less incompressible.
    pub fn ilt_from_wall(wall: &MaterialSpec) -> Self {
        Self {
            youngs_modulus: wall.youngs_modulus / 20.0,
            poisson_ratio: 0.45,
        }
    }

    pub fn validate(&self) -> Result<(), FemError> {
        if !(self.youngs_modulus > 0.0) {
            return Err(FemError::InvalidInput("Young's modulus must be > 0".into()));
        }
        if !(0.0..0.5).contains(&self.poisson_ratio) {
            return Err(FemError::InvalidInput(
                "Poisson ratio must be in [0, 0.5)".into(),
            ));
        }
        Ok(())
    }
}

/// Load specification: explicit pressure or a systolic/diastolic pair
/// from which the mean arterial pressure is computed.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PressureSpec {
    Kpa { pressure_kpa: f64 },
    Mmhg { systolic_mmhg: f64, diastolic_mmhg: f64 },
}

impl PressureSpec {
    pub fn to_kpa(&self) -> Result<f64, FemError> {
        match *self {
            PressureSpec::Kpa { pressure_kpa } => {
                if !(pressure_kpa > 0.0) {
                    return Err(FemError::InvalidInput("pressure must be > 0".into()));
                }
                Ok(pressure_kpa)
            }
            PressureSpec::Mmhg {
                systolic_mmhg,
                diastolic_mmhg,
            } => map_pressure(systolic_mmhg, diastolic_mmhg),
        }
    }
}

/// Mean arterial pressure (one third systolic plus two thirds diastolic),
/// converted from mmHg to kPa.
pub fn map_pressure(systolic_mmhg: f64, diastolic_mmhg: f64) -> Result<f64, FemError> {
    if !(diastolic_mmhg > 0.0) {
        return Err(FemError::InvalidInput("diastolic must be > 0".into()));
    }
    if systolic_mmhg < diastolic_mmhg {
        return Err(FemError::InvalidInput(
            "systolic must be >= diastolic".into(),
        ));
    }
    let map_mmhg = systolic_mmhg / 3.0 + 2.0 * diastolic_mmhg / 3.0;
    Ok(map_mmhg * MMHG_TO_KPA)
}

/// Fixed supports. Defaults fully fix both wall end rings, and the
/// thrombus end caps when a thrombus is present.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct BcSpec {
    pub fix_top_ring: bool,
    pub fix_bottom_ring: bool,
    pub fix_ilt_caps: bool,
}

impl Default for BcSpec {
    fn default() -> Self {
        Self {
            fix_top_ring: true,
            fix_bottom_ring: true,
            fix_ilt_caps: true,
        }
    }
}

/// One static solve case.
#[derive(Debug, Clone)]
pub struct StaticInput<'a> {
    pub wall: &'a HexWallMesh,
    pub ilt: Option<&'a TetFillMesh>,
    pub wall_material: MaterialSpec,
    /// Defaults to [`MaterialSpec::ilt_from_wall`] when an ILT is given.
    pub ilt_material: Option<MaterialSpec>,
    pub pressure_kpa: f64,
    pub bcs: BcSpec,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub ssor_omega: f64,
}

impl<'a> StaticInput<'a> {
    pub fn new(wall: &'a HexWallMesh, pressure_kpa: f64) -> Self {
        Self {
            wall,
            ilt: None,
            wall_material: MaterialSpec::default(),
            ilt_material: None,
            pressure_kpa,
            bcs: BcSpec::default(),
            tolerance: 1e-9,
            max_iterations: 50_000,
            ssor_omega: 1.2,
        }
    }

    pub fn with_ilt(mut self, ilt: &'a TetFillMesh) -> Self {
        self.ilt = Some(ilt);
        self
    }
}

#[derive(Debug)]
pub struct StaticSolution {
    pub model: FeModel,
    pub displacements: Vec<f64>,
    pub stress: StressField,
    pub stats: StressStats,
    pub log: SolveLog,
    /// |sum(applied) + sum(reactions)| / sum(|applied|).
    pub reaction_imbalance: f64,
}

/// Assemble, load, solve, and recover stress for one case.
pub fn run_static(input: &StaticInput) -> Result<StaticSolution, FemError> {
    let ilt_material = match (input.ilt, input.ilt_material) {
        (Some(_), Some(m)) => Some(m),
        (Some(_), None) => Some(MaterialSpec::ilt_from_wall(&input.wall_material)),
        (None, _) => None,
    };
    let model = FeModel::new(input.wall, input.ilt, &input.bcs);
    let mut k = assemble(&model, &input.wall_material, ilt_material.as_ref())?;

    let p_mpa = input.pressure_kpa / 1000.0;
    let mut f = vec![0.0; model.n_dofs()];
    if model.tets.is_empty() {
        pressure_loads_quads(&model.nodes, &model.inner_quads, p_mpa, &mut f);
    } else {
        // With a thrombus the blood channel is its lumen surface.
        pressure_loads_tris(&model.nodes, &model.lumen_tris, p_mpa, &mut f);
    }

    let fixed = model.fixed_dofs();
    let zeros = vec![0.0; model.n_dofs()];
    let (u, log) = solve_dirichlet(
        &mut k,
        &f,
        &fixed,
        &zeros,
        input.ssor_omega,
        input.tolerance,
        input.max_iterations,
    )?;

    // Reactions from the pristine operator.
    let ku = k.matvec(&u);
    let mut applied = [0.0f64; 3];
    let mut reaction = [0.0f64; 3];
    let mut gross = 0.0f64;
    for i in 0..model.n_dofs() {
        applied[i % 3] += f[i];
        gross += f[i].abs();
        if fixed[i] {
            reaction[i % 3] += ku[i] - f[i];
        }
    }
    let imbalance = (0..3)
        .map(|c| (applied[c] + reaction[c]).abs())
        .fold(0.0f64, f64::max)
        / gross.max(1e-300);

    let stress = recover_stress(&model, &u, &input.wall_material, ilt_material.as_ref())?;
    let stats = stress_stats(&stress.max_principal)?;
    Ok(StaticSolution {
        model,
        displacements: u,
        stress,
        stats,
        log,
        reaction_imbalance: imbalance,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct IndependenceReport {
    pub e_values: Vec<f64>,
    pub p99_values: Vec<f64>,
    /// (max - min) / min of p99 across the runs.
    pub p99_spread: f64,
    /// Largest relative nodal max-principal difference against the
    /// first run.
    pub max_nodal_rel_diff: f64,
}

/// Re-run the same case for each Young's modulus (thrombus scaled with
/// the wall to keep the stiffness ratio fixed) and report the spread of
/// the stress results. For a load-driven linear problem the stresses are
/// exactly invariant under uniform modulus scaling.
pub fn material_independence_check(
    base: &StaticInput,
    e_values: &[f64],
) -> Result<IndependenceReport, FemError> {
    if e_values.len() < 2 {
        return Err(FemError::InvalidInput("need at least 2 E values".into()));
    }
    let ratio = base
        .ilt_material
        .map(|m| base.wall_material.youngs_modulus / m.youngs_modulus);
    let mut p99 = Vec::new();
    let mut first_field: Option<Vec<f64>> = None;
    let mut max_rel: f64 = 0.0;
    for &e in e_values {
        let mut input = base.clone();
        input.wall_material.youngs_modulus = e;
        if let Some(r) = ratio {
            let mut ilt = input.ilt_material.unwrap();
            ilt.youngs_modulus = e / r;
            input.ilt_material = Some(ilt);
        }
        let sol = run_static(&input)?;
        p99.push(sol.stats.p99_mpa);
        match &first_field {
            None => first_field = Some(sol.stress.max_principal),
            Some(reference) => {
                let scale = reference
                    .iter()
                    .fold(0.0f64, |a, &b| a.max(b.abs()))
                    .max(1e-300);
                for (a, b) in reference.iter().zip(&sol.stress.max_principal) {
                    max_rel = max_rel.max((a - b).abs() / scale);
                }
            }
        }
    }
    let (lo, hi) = p99
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    Ok(IndependenceReport {
        e_values: e_values.to_vec(),
        p99_values: p99,
        p99_spread: (hi - lo) / lo.abs().max(1e-300),
        max_nodal_rel_diff: max_rel,
    })
}
