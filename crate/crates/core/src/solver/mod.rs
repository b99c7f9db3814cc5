//! Per-link best responses.
//!
//! A link's energy efficiency `r(p) / p_total(p)` is maximized by Dinkelbach
//! iteration: for a fixed price `q` solve the concave parametric problem
//! `max r(p) - q * p_total(p)` under the QoS and budget constraints, then move
//! `q` to the achieved ratio. The parametric problem is solved in the dual:
//! its primal maximizer is a water-filling allocation whose level depends on
//! the QoS multiplier and the budget multiplier.

mod dinkelbach;
mod subproblem;
mod water_fill;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dinkelbach::{
    dinkelbach, dinkelbach_best_response_cellular, dinkelbach_best_response_d2d, BestResponse, DinkelbachState,
};
pub use subproblem::{
    dual_ascent_cellular, dual_ascent_d2d, CellularLink, D2dLink, DualSolution, ParametricLink, PRIMAL_CHANGE_TOL,
};
pub use water_fill::{
    budget_level, rate_at_level, rate_level, water_fill_cellular, water_fill_d2d, water_level, WaterFill,
    CELLULAR_QOS_SIGN,
};

/// How the parametric subproblem's multipliers are found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DualMethod {
    /// Solve the master dual problem exactly: the optimal water level is the
    /// unconstrained level clamped between the QoS level and the budget
    /// level, and the multipliers follow from it in closed form.
    #[default]
    Exact,
    /// Projected gradient steps on the multipliers with step size
    /// `step_c / sqrt(tau)`.
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Dinkelbach stopping tolerance on `r - q * p_total`.
    pub delta: f64,
    /// Maximum Dinkelbach iterations.
    pub l_max: usize,
    /// Iteration cap of the gradient dual method.
    pub dual_max_iters: usize,
    /// Constraint and complementary-slackness tolerance.
    pub dual_tol: f64,
    /// Gradient step scale.
    pub step_c: f64,
    pub dual_method: DualMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            delta: 1e-3,
            l_max: 10,
            dual_max_iters: 500,
            dual_tol: 1e-6,
            step_c: 0.1,
            dual_method: DualMethod::Exact,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(
                    format!("solver.{field}"),
                    format!("must be finite and > 0, got {v}"),
                ))
            }
        };
        positive("delta", self.delta)?;
        positive("dual_tol", self.dual_tol)?;
        positive("step_c", self.step_c)?;
        if self.l_max < 1 {
            return Err(Error::config("solver.l_max", "must be >= 1"));
        }
        if self.dual_max_iters < 1 {
            return Err(Error::config("solver.dual_max_iters", "must be >= 1"));
        }
        Ok(())
    }
}
