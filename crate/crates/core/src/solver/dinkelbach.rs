use serde::{Deserialize, Serialize};

use super::subproblem::{CellularLink, D2dLink, DualSolution, ParametricLink};
use super::SolverConfig;
use crate::link::PowerAllocation;
use crate::topology::{ScenarioConfig, Topology};

/// Dinkelbach iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DinkelbachState {
    /// Current EE estimate, bit/Hz/J.
    pub q: f64,
    /// 1-based iteration index.
    pub iteration: usize,
    pub converged: bool,
    pub qos_multiplier: f64,
    pub budget_multiplier: f64,
}

/// A link's EE-maximizing strategy against a frozen profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    /// Per-channel powers (one entry for a cellular UE).
    pub powers: Vec<f64>,
    /// Achieved EE `rate / power_total` of `powers`.
    pub q_star: f64,
    /// `r - q * p_total` at the returned powers, `q` being the price of the
    /// final iteration. Within `[0, delta]` when converged.
    pub residual: f64,
    pub feasible: bool,
    pub converged: bool,
    /// The price `q` used at each iteration; starts at 0.
    pub trace: Vec<f64>,
    /// Multipliers and counters at termination.
    pub state: DinkelbachState,
}

impl BestResponse {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Maximizes `rate / power_total` of `link` by Dinkelbach iteration.
///
/// Each iteration solves the parametric problem at the current `q`. When its
/// value `r - q * p_total` is at most `delta` the iterate is returned;
/// otherwise `q` moves to the achieved ratio. If a parametric solve ever
/// scores below the previous iterate (whose value at the new `q` is zero by
/// construction), the previous iterate is kept and the loop stops.
pub fn dinkelbach<L: ParametricLink>(link: &L, cfg: &SolverConfig) -> BestResponse {
    let mut q = 0.0;
    let mut trace = Vec::with_capacity(cfg.l_max);
    let mut prev: Option<(DualSolution, f64, f64)> = None;

    for n in 1..=cfg.l_max {
        trace.push(q);
        let sol = link.solve(q, cfg);
        let rate = link.rate(&sol.powers);
        let total = link.power_total(&sol.powers);
        let value = rate - q * total;

        let (sol, rate, total, value) = match prev.take() {
            Some((p, r, t)) if value < 0.0 || p.powers == sol.powers => (p, r, t, 0.0),
            _ => (sol, rate, total, value),
        };

        let done = value <= cfg.delta;
        if done || n == cfg.l_max {
            let q_star = rate / total;
            return BestResponse {
                state: DinkelbachState {
                    q: q_star,
                    iteration: n,
                    converged: done,
                    qos_multiplier: sol.qos_multiplier,
                    budget_multiplier: sol.budget_multiplier,
                },
                powers: sol.powers,
                q_star,
                residual: value,
                feasible: sol.feasible,
                converged: done,
                trace,
            };
        }
        q = rate / total;
        prev = Some((sol, rate, total));
    }
    unreachable!("l_max >= 1")
}

/// Best response of D2D pair `i` against the other UEs' powers in `alloc`.
pub fn dinkelbach_best_response_d2d(
    i: usize,
    alloc: &PowerAllocation,
    topo: &Topology,
    cfg: &ScenarioConfig,
) -> BestResponse {
    dinkelbach(&D2dLink::from_profile(i, alloc, topo, cfg), &cfg.solver)
}

/// Best response of cellular UE `k` against the D2D powers in `alloc`.
pub fn dinkelbach_best_response_cellular(
    k: usize,
    alloc: &PowerAllocation,
    topo: &Topology,
    cfg: &ScenarioConfig,
) -> BestResponse {
    dinkelbach(&CellularLink::from_profile(k, alloc, topo, cfg), &cfg.solver)
}
