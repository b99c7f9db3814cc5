//! The parametric subproblem `max r(p) - q * p_total(p)` s.t. QoS and budget,
//! for one link with every other UE's power frozen.

use std::f64::consts::{LN_2, LOG2_E};

use serde::{Deserialize, Serialize};

use super::water_fill::{budget_level, rate_level, water_fill_cellular, water_fill_d2d};
use super::{DualMethod, SolverConfig};
use crate::link::{self, PowerAllocation};
use crate::topology::{ScenarioConfig, Topology};

/// Primal-change threshold (watts) of the gradient dual method.
pub const PRIMAL_CHANGE_TOL: f64 = 1e-7;

/// Output of one parametric solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    /// Per-channel powers (a single entry for a cellular UE).
    pub powers: Vec<f64>,
    /// QoS multiplier (`alpha` for D2D, `delta` for cellular).
    pub qos_multiplier: f64,
    /// Budget multiplier (`beta` for D2D, `theta` for cellular).
    pub budget_multiplier: f64,
    /// `false` when the QoS rate cannot be reached within the budget.
    pub feasible: bool,
    /// Dual iterations used (1 for the exact method).
    pub iterations: usize,
    pub converged: bool,
}

/// A link whose energy efficiency can be maximized by Dinkelbach iteration.
pub trait ParametricLink {
    fn rate(&self, powers: &[f64]) -> f64;
    fn power_total(&self, powers: &[f64]) -> f64;
    /// Maximizer of `rate - q * power_total` under the link's constraints.
    fn solve(&self, q: f64, cfg: &SolverConfig) -> DualSolution;
}

/// One D2D pair facing frozen interference on every channel.
#[derive(Debug, Clone)]
pub struct D2dLink {
    pub interference: Vec<f64>,
    pub gains: Vec<f64>,
    /// `interference / gain` per channel.
    pub noise: Vec<f64>,
    pub eta: f64,
    pub p_cir: f64,
    pub p_max: f64,
    pub r_min: f64,
}

impl D2dLink {
    pub fn new(interference: Vec<f64>, gains: Vec<f64>, eta: f64, p_cir: f64, p_max: f64, r_min: f64) -> Self {
        let noise = interference.iter().zip(&gains).map(|(i, g)| i / g).collect();
        Self {
            interference,
            gains,
            noise,
            eta,
            p_cir,
            p_max,
            r_min,
        }
    }

    /// Link `i` under `alloc`; only the other UEs' powers matter.
    pub fn from_profile(i: usize, alloc: &PowerAllocation, topo: &Topology, cfg: &ScenarioConfig) -> Self {
        let interference = (0..alloc.num_cellular())
            .map(|k| link::d2d_interference(i, k, alloc, topo, cfg.noise_power))
            .collect();
        Self::new(
            interference,
            topo.g_direct[i].clone(),
            cfg.pa_efficiency,
            cfg.p_cir,
            cfg.p_d2d_max,
            cfg.qos_d2d,
        )
    }

    /// Water level that spends the whole budget (the rate-maximizing level).
    pub fn budget_level(&self) -> f64 {
        budget_level(&self.noise, self.p_max)
    }

    pub fn qos_attainable(&self) -> bool {
        rate_level(&self.noise, self.r_min) <= self.budget_level()
    }

    pub fn fill(&self, level: f64) -> Vec<f64> {
        self.noise.iter().map(|n| (level - n).max(0.0)).collect()
    }

    fn unconstrained_level(&self, q: f64) -> f64 {
        if q > 0.0 {
            self.eta * LOG2_E / q
        } else {
            f64::INFINITY
        }
    }

    fn solve_exact(&self, q: f64) -> DualSolution {
        let top = self.budget_level();
        let bottom = rate_level(&self.noise, self.r_min);
        let feasible = bottom <= top;
        let free = self.unconstrained_level(q);
        let level = if feasible {
            free.clamp(bottom, top)
        } else {
            free.min(top)
        };

        let (alpha, beta) = if level < free {
            (0.0, (self.eta * LOG2_E / level - q) / self.eta)
        } else if level > free {
            (level * q / (self.eta * LOG2_E) - 1.0, 0.0)
        } else {
            (0.0, 0.0)
        };
        DualSolution {
            powers: self.fill(level),
            qos_multiplier: alpha,
            budget_multiplier: beta,
            feasible,
            iterations: 1,
            converged: true,
        }
    }

    fn solve_gradient(&self, q: f64, cfg: &SolverConfig) -> DualSolution {
        if !self.qos_attainable() {
            return self.solve_exact(q);
        }
        let k = self.gains.len();
        let (mut alpha, mut beta) = (0.0f64, 0.0f64);
        let mut prev: Option<Vec<f64>> = None;
        let mut powers = vec![0.0; k];
        let mut iterations = 0;
        let mut converged = false;

        for tau in 1..=cfg.dual_max_iters {
            iterations = tau;
            powers = water_fill_d2d(q, alpha, beta, &self.interference, &self.gains, self.eta)
                .filled()
                .unwrap_or_else(|| vec![self.p_max / k as f64; k]);
            let rate = self.rate(&powers);
            let spent: f64 = powers.iter().sum();

            let residual = [
                (self.r_min - rate).max(0.0),
                (spent - self.p_max).max(0.0),
                alpha * (rate - self.r_min).abs(),
                beta * (self.p_max - spent).abs(),
            ]
            .into_iter()
            .fold(0.0, f64::max);
            let change = prev.as_ref().map_or(f64::INFINITY, |p| {
                p.iter().zip(&powers).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            });
            if residual < cfg.dual_tol && change < PRIMAL_CHANGE_TOL {
                converged = true;
                break;
            }

            let step = cfg.step_c / (tau as f64).sqrt();
            alpha = (alpha - step * (rate - self.r_min)).max(0.0);
            beta = (beta + step * (spent - self.p_max)).max(0.0);
            prev = Some(powers.clone());
        }

        let spent: f64 = powers.iter().sum();
        if spent > self.p_max {
            let scale = self.p_max / spent;
            powers.iter_mut().for_each(|p| *p *= scale);
        }
        let feasible = self.rate(&powers) >= self.r_min - cfg.dual_tol;
        DualSolution {
            powers,
            qos_multiplier: alpha,
            budget_multiplier: beta,
            feasible,
            iterations,
            converged,
        }
    }
}

impl ParametricLink for D2dLink {
    fn rate(&self, powers: &[f64]) -> f64 {
        powers.iter().zip(&self.noise).map(|(p, n)| link::log2_1p(p / n)).sum()
    }

    fn power_total(&self, powers: &[f64]) -> f64 {
        link::d2d_power_consumption(powers.iter().sum(), self.eta, self.p_cir)
    }

    fn solve(&self, q: f64, cfg: &SolverConfig) -> DualSolution {
        match cfg.dual_method {
            DualMethod::Exact => self.solve_exact(q),
            DualMethod::Gradient => self.solve_gradient(q, cfg),
        }
    }
}

/// One cellular UE facing frozen D2D interference at the BS.
///
/// A scalar power makes both constraints box bounds: QoS is `p >= p_qos`
/// and the budget is `p <= p_max`. The QoS bound is enforced on the primal
/// because the cellular level scales with `(1 - delta)` (see
/// [`CELLULAR_QOS_SIGN`](super::CELLULAR_QOS_SIGN)); the exact method
/// therefore always reports a zero QoS multiplier.
#[derive(Debug, Clone)]
pub struct CellularLink {
    pub interference: f64,
    pub gain: f64,
    pub noise: f64,
    pub eta: f64,
    pub p_cir: f64,
    pub p_max: f64,
    pub r_min: f64,
}

impl CellularLink {
    pub fn new(interference: f64, gain: f64, eta: f64, p_cir: f64, p_max: f64, r_min: f64) -> Self {
        Self {
            interference,
            gain,
            noise: interference / gain,
            eta,
            p_cir,
            p_max,
            r_min,
        }
    }

    pub fn from_profile(k: usize, alloc: &PowerAllocation, topo: &Topology, cfg: &ScenarioConfig) -> Self {
        Self::new(
            link::cellular_interference(k, alloc, topo, cfg.noise_power),
            topo.g_cell2bs[k],
            cfg.pa_efficiency,
            cfg.p_cir,
            cfg.p_cell_max,
            cfg.qos_cell,
        )
    }

    /// Smallest power meeting the QoS rate.
    pub fn qos_power(&self) -> f64 {
        self.noise * (self.r_min * LN_2).exp_m1()
    }

    pub fn qos_attainable(&self) -> bool {
        self.qos_power() <= self.p_max
    }

    fn solve_exact(&self, q: f64) -> DualSolution {
        let floor = self.qos_power();
        let feasible = floor <= self.p_max;
        let free = water_fill_cellular(q, 0.0, 0.0, self.interference, self.gain, self.eta)
            .filled()
            .unwrap_or(f64::INFINITY);
        let power = if feasible {
            free.clamp(floor, self.p_max)
        } else {
            free.min(self.p_max)
        };
        let theta = if free > self.p_max {
            (self.eta * LOG2_E / (self.p_max + self.noise) - q) / self.eta
        } else {
            0.0
        };
        DualSolution {
            powers: vec![power],
            qos_multiplier: 0.0,
            budget_multiplier: theta,
            feasible,
            iterations: 1,
            converged: true,
        }
    }

    fn solve_gradient(&self, q: f64, cfg: &SolverConfig) -> DualSolution {
        if !self.qos_attainable() {
            return self.solve_exact(q);
        }
        let (mut delta, mut theta) = (0.0f64, 0.0f64);
        let mut prev = f64::INFINITY;
        let mut power = 0.0;
        let mut iterations = 0;
        let mut converged = false;

        for tau in 1..=cfg.dual_max_iters {
            iterations = tau;
            power = water_fill_cellular(q, delta, theta, self.interference, self.gain, self.eta)
                .filled()
                .unwrap_or(self.p_max);
            let rate = self.rate(&[power]);
            let residual = [
                (self.r_min - rate).max(0.0),
                (power - self.p_max).max(0.0),
                delta * (rate - self.r_min).abs(),
                theta * (self.p_max - power).abs(),
            ]
            .into_iter()
            .fold(0.0, f64::max);
            if residual < cfg.dual_tol && (power - prev).abs() < PRIMAL_CHANGE_TOL {
                converged = true;
                break;
            }
            let step = cfg.step_c / (tau as f64).sqrt();
            delta = (delta - step * (rate - self.r_min)).max(0.0);
            theta = (theta + step * (power - self.p_max)).max(0.0);
            prev = power;
        }

        DualSolution {
            powers: vec![power.clamp(self.qos_power(), self.p_max)],
            qos_multiplier: delta,
            budget_multiplier: theta,
            feasible: true,
            iterations,
            converged,
        }
    }
}

impl ParametricLink for CellularLink {
    fn rate(&self, powers: &[f64]) -> f64 {
        link::log2_1p(powers[0] / self.noise)
    }

    fn power_total(&self, powers: &[f64]) -> f64 {
        link::cellular_power_consumption(powers[0], self.eta, self.p_cir)
    }

    fn solve(&self, q: f64, cfg: &SolverConfig) -> DualSolution {
        match cfg.dual_method {
            DualMethod::Exact => self.solve_exact(q),
            DualMethod::Gradient => self.solve_gradient(q, cfg),
        }
    }
}

/// Parametric solve for D2D pair `i` against the rest of `alloc`.
pub fn dual_ascent_d2d(
    i: usize,
    q: f64,
    alloc: &PowerAllocation,
    topo: &Topology,
    cfg: &ScenarioConfig,
) -> DualSolution {
    D2dLink::from_profile(i, alloc, topo, cfg).solve(q, &cfg.solver)
}

/// Parametric solve for cellular UE `k` against the rest of `alloc`.
pub fn dual_ascent_cellular(
    k: usize,
    q: f64,
    alloc: &PowerAllocation,
    topo: &Topology,
    cfg: &ScenarioConfig,
) -> DualSolution {
    CellularLink::from_profile(k, alloc, topo, cfg).solve(q, &cfg.solver)
}
