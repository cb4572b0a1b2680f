//! Structured hexahedral meshing of vessel walls, conformal tetrahedral
//! thrombus fill, element quality audits, and linear elastostatic wall
//! stress analysis with percentile statistics.
//!
//! The pipeline runs geometry -> hexmesh (-> tetfill) -> quality -> fem,
//! orchestrated by the `pipeline` module and the `aneumesh` CLI.
//! Units are mm / MPa / N throughout; kPa and mmHg are converted at the
//! boundary.

pub mod error;
pub mod fem;
pub mod geometry;
pub mod hexmesh;
pub mod io;
pub mod par;
pub mod pipeline;
pub mod quality;
pub mod tetfill;
