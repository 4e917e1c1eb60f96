//! Checks of the initial-data controls: mean convexity, β-uniform
//! two-convexity, the curvature bound γ, the area bound, and
//! α-noncollapsedness by tangent balls.

use serde::{Deserialize, Serialize};

use super::{CurvatureField, TriMesh};
use crate::error::{Error, Result};

/// Penetration allowed in the discrete tangent-ball test, in units of the
/// local edge length at the tangency vertex.
pub const ALPHA_PENETRATION_EDGES: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub area_bound: f64,
}

impl ControlParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, area_bound: f64) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            gamma,
            area_bound,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all_positive = [self.alpha, self.beta, self.gamma, self.area_bound]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !all_positive {
            return Err(Error::InvalidParams(
                "control parameters must be positive".into(),
            ));
        }
        if self.beta > 1.0 {
            return Err(Error::InvalidParams(format!(
                "beta = {} exceeds 1",
                self.beta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Check {
    pub ok: bool,
    pub witness: f64,
}

/// One boolean and one witness value per control.
#[derive(Debug, Clone, Serialize)]
pub struct ControlReport {
    /// witness: min H.
    pub mean_convex: Check,
    /// witness: min (λ1+λ2)/H over vertices with H > 0.
    pub beta_two_convex: Check,
    /// witness: max H.
    pub gamma_ok: Check,
    /// witness: total area.
    pub area_ok: Check,
    /// witness: worst tangent-ball penetration in local edge lengths.
    pub alpha_ok: Check,
    pub alpha_tolerance_edges: f64,
}

impl ControlReport {
    pub fn all_ok(&self) -> bool {
        [
            self.mean_convex,
            self.beta_two_convex,
            self.gamma_ok,
            self.area_ok,
            self.alpha_ok,
        ]
        .iter()
        .all(|c| c.ok)
    }
}

/// Worst penetration of the interior and exterior balls of radius `α/H(p)`
/// tangent at each vertex, measured in local edge lengths. Vertices with
/// `H ≤ 0` have no admissible ball and count as infinite penetration.
fn alpha_penetration(mesh: &TriMesh, curv: &CurvatureField, alpha: f64) -> f64 {
    let verts = mesh.vertices();
    let mut worst: f64 = 0.0;
    for p in 0..mesh.n_vertices() {
        let h = curv.mean[p];
        if h <= 0.0 {
            return f64::INFINITY;
        }
        let r = alpha / h;
        let n = curv.normal_at(p);
        let edge = mesh.local_edge_length(p);
        for center in [verts[p] - n * r, verts[p] + n * r] {
            for (q, x) in verts.iter().enumerate() {
                if q == p {
                    continue;
                }
                let depth = r - (x - center).norm();
                if depth > 0.0 {
                    worst = worst.max(depth / edge);
                }
            }
        }
    }
    worst
}

pub fn check_control_params(
    mesh: &TriMesh,
    curv: &CurvatureField,
    params: &ControlParams,
) -> ControlReport {
    let min_h = curv.min_mean();
    let max_h = curv.max_mean();
    let area = mesh.area();
    let mean_convex = Check {
        ok: min_h > 0.0,
        witness: min_h,
    };
    if !mean_convex.ok {
        let fail = |w| Check {
            ok: false,
            witness: w,
        };
        return ControlReport {
            mean_convex,
            beta_two_convex: fail(f64::NAN),
            gamma_ok: Check {
                ok: max_h <= params.gamma,
                witness: max_h,
            },
            area_ok: Check {
                ok: area <= params.area_bound,
                witness: area,
            },
            alpha_ok: fail(f64::INFINITY),
            alpha_tolerance_edges: ALPHA_PENETRATION_EDGES,
        };
    }
    let ratio = (0..curv.len())
        .map(|v| (curv.lambda1[v] + curv.lambda2[v]) / curv.mean[v])
        .fold(f64::INFINITY, f64::min);
    let penetration = alpha_penetration(mesh, curv, params.alpha);
    ControlReport {
        mean_convex,
        beta_two_convex: Check {
            ok: ratio >= params.beta - 1e-12,
            witness: ratio,
        },
        gamma_ok: Check {
            ok: max_h <= params.gamma,
            witness: max_h,
        },
        area_ok: Check {
            ok: area <= params.area_bound,
            witness: area,
        },
        alpha_ok: Check {
            ok: penetration <= ALPHA_PENETRATION_EDGES,
            witness: penetration,
        },
        alpha_tolerance_edges: ALPHA_PENETRATION_EDGES,
    }
}
