//! Numerical laboratory for mean curvature flow of closed surfaces in R³.
//!
//! * [`mesh`]: triangle surfaces, curvature, integrals, intrinsic distance,
//!   and the initial-data control checks.
//! * [`flow`]: explicit mean curvature flow and rescaled flow.
//! * [`functionals`]: Gaussian area, entropy, Huisken's quantity, curvature
//!   integrals, regularity scale and the tube/diameter reduction estimators.
//! * [`neck`]: cylinder fitting, neck detection, strong-neck tracking, axis
//!   tilt and tube assembly.
//! * [`lojasiewicz`]: the discrete Łojasiewicz lemma and its measurement on
//!   rescaled flows.
//! * [`scenario`], [`experiment`]: initial data and orchestration.

pub mod error;
pub mod experiment;
pub mod flow;
pub mod functionals;
pub mod lojasiewicz;
pub mod mesh;
pub mod neck;
pub mod scenario;
mod serde_f64;
pub mod svg;

pub use error::{Error, Result};
pub use mesh::{TriMesh, Vec3};
