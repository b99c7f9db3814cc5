//! Brute-force reference solvers and the cross-check suite behind the
//! `oracle` CLI command.
//!
//! The references evaluate rate and EE from the raw gains, without going
//! through [`crate::link`] or [`crate::solver`], so that agreement is
//! evidence rather than tautology.

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::link::PowerAllocation;
use crate::regimes::bisection_single_link_ee;
use crate::rng::{rng_from_seed, SimRng};
use crate::solver::{dinkelbach_best_response_cellular, dinkelbach_best_response_d2d};
use crate::topology::{generate_topology, ScenarioConfig, Topology};

/// Grid step of the two-channel D2D search, watts.
pub const D2D_GRID_STEP: f64 = 1e-4;
/// Relative agreement required by the suite.
pub const ORACLE_REL_TOL: f64 = 1e-3;

/// Best EE point of a grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridOptimum {
    pub powers: [f64; 2],
    pub ee: f64,
}

fn bits(x: f64) -> f64 {
    (1.0 + x).log2()
}

/// Exhaustive search of a two-channel D2D link over `p0 + p1 <= p_max` on a
/// square grid of `step`, keeping points with rate `>= r_min`.
/// `inr[c]` is interference plus noise on channel `c`. `None` if no grid
/// point meets the QoS target.
pub fn grid_d2d_two_channel(
    gain: [f64; 2],
    inr: [f64; 2],
    eta: f64,
    p_cir: f64,
    p_max: f64,
    r_min: f64,
    step: f64,
) -> Option<GridOptimum> {
    let steps = (p_max / step + 1e-9).floor() as usize;
    let mut best: Option<GridOptimum> = None;
    for a in 0..=steps {
        let p0 = a as f64 * step;
        let r0 = bits(p0 * gain[0] / inr[0]);
        for b in 0..=(steps - a) {
            let p1 = b as f64 * step;
            let rate = r0 + bits(p1 * gain[1] / inr[1]);
            if rate < r_min {
                continue;
            }
            let ee = rate / ((p0 + p1) / eta + 2.0 * p_cir);
            if best.is_none_or(|o| ee > o.ee) {
                best = Some(GridOptimum { powers: [p0, p1], ee });
            }
        }
    }
    best
}

/// EE-optimal power of a single cellular link with a QoS floor: the
/// unconstrained bisection optimum pushed up to the QoS power when needed.
/// Returns `(p*, q*)`, or `None` when the floor exceeds the budget.
pub fn cellular_reference(
    gain: f64,
    inr: f64,
    eta: f64,
    p_cir: f64,
    p_max: f64,
    r_min: f64,
) -> Result<Option<(f64, f64)>> {
    let p_qos = (2f64.powf(r_min) - 1.0) * inr / gain;
    if p_qos > p_max {
        return Ok(None);
    }
    let (p, _) = bisection_single_link_ee(gain, inr, 0.0, eta, p_cir, p_max)?;
    let p = p.max(p_qos);
    Ok(Some((p, bits(p * gain / inr) / (p / eta + p_cir))))
}

/// Outcome of one family of cross-checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: &'static str,
    pub instances: usize,
    /// Instances skipped because the reference reported infeasibility.
    pub skipped: usize,
    pub worst_rel_error: f64,
    pub passed: bool,
}

impl OracleCheck {
    fn new(name: &'static str, errors: &[f64], skipped: usize) -> Self {
        let worst = errors.iter().copied().fold(0.0, f64::max);
        Self {
            name,
            instances: errors.len(),
            skipped,
            worst_rel_error: worst,
            passed: !errors.is_empty() && worst <= ORACLE_REL_TOL,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {} instances, {} skipped, worst relative error {:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.instances,
            self.skipped,
            self.worst_rel_error
        )
    }
}

fn random_others(rng: &mut SimRng, cfg: &ScenarioConfig) -> PowerAllocation {
    let n = cfg.num_d2d_pairs;
    let k = cfg.num_cellular;
    PowerAllocation {
        p_d2d: (0..n)
            .map(|_| (0..k).map(|_| rng.gen::<f64>() * cfg.p_d2d_max / k as f64).collect())
            .collect(),
        p_cell: (0..k).map(|_| rng.gen::<f64>() * cfg.p_cell_max).collect(),
    }
}

fn bs_inr(k: usize, alloc: &PowerAllocation, topo: &Topology, n0: f64) -> f64 {
    n0 + (0..alloc.num_d2d())
        .map(|j| alloc.p_d2d[j][k] * topo.g_d2d2bs[j][k])
        .sum::<f64>()
}

fn d2d_inr(i: usize, k: usize, alloc: &PowerAllocation, topo: &Topology, n0: f64) -> f64 {
    let mut total = n0 + alloc.p_cell[k] * topo.g_cell2d2d[k][i];
    for j in 0..alloc.num_d2d() {
        if j != i {
            total += alloc.p_d2d[j][k] * topo.g_d2d2d2d[j][i][k];
        }
    }
    total
}

/// Dinkelbach versus bisection on `instances` single cellular links drawn
/// from random default-scenario topologies with random D2D interference.
pub fn check_cellular_bisection(seed: u64, instances: usize) -> Result<OracleCheck> {
    let cfg = ScenarioConfig::default();
    let mut rng = rng_from_seed(seed);
    let mut errors = Vec::with_capacity(instances);
    let mut skipped = 0;
    while errors.len() < instances {
        let topo = generate_topology(&cfg, &mut rng)?;
        let alloc = random_others(&mut rng, &cfg);
        let k = rng.gen_range(0..cfg.num_cellular);
        let inr = bs_inr(k, &alloc, &topo, cfg.noise_power);
        let reference = cellular_reference(
            topo.g_cell2bs[k],
            inr,
            cfg.pa_efficiency,
            cfg.p_cir,
            cfg.p_cell_max,
            cfg.qos_cell,
        )?;
        let Some((_, q_ref)) = reference else {
            skipped += 1;
            continue;
        };
        let br = dinkelbach_best_response_cellular(k, &alloc, &topo, &cfg);
        errors.push(((br.q_star - q_ref) / q_ref).abs());
    }
    Ok(OracleCheck::new("cellular Dinkelbach vs bisection", &errors, skipped))
}

/// Dinkelbach versus a 1e-4 W grid on `instances` two-channel D2D links with
/// frozen interference.
pub fn check_d2d_grid(seed: u64, instances: usize) -> Result<OracleCheck> {
    let cfg = ScenarioConfig {
        num_cellular: 2,
        ..ScenarioConfig::default()
    };
    let mut rng = rng_from_seed(seed);
    let mut errors = Vec::with_capacity(instances);
    let mut skipped = 0;
    while errors.len() < instances {
        let topo = generate_topology(&cfg, &mut rng)?;
        let alloc = random_others(&mut rng, &cfg);
        let i = rng.gen_range(0..cfg.num_d2d_pairs);
        let n0 = cfg.noise_power;
        let grid = grid_d2d_two_channel(
            [topo.g_direct[i][0], topo.g_direct[i][1]],
            [d2d_inr(i, 0, &alloc, &topo, n0), d2d_inr(i, 1, &alloc, &topo, n0)],
            cfg.pa_efficiency,
            cfg.p_cir,
            cfg.p_d2d_max,
            cfg.qos_d2d,
            D2D_GRID_STEP,
        );
        let Some(grid) = grid else {
            skipped += 1;
            continue;
        };
        let br = dinkelbach_best_response_d2d(i, &alloc, &topo, &cfg);
        errors.push(((br.q_star - grid.ee) / grid.ee).abs());
    }
    Ok(OracleCheck::new("two-channel D2D Dinkelbach vs grid", &errors, skipped))
}

/// Bisection versus a 1e-5 W grid on random single links without QoS.
pub fn check_bisection_grid(seed: u64, instances: usize) -> Result<OracleCheck> {
    let cfg = ScenarioConfig::default();
    let mut rng = rng_from_seed(seed);
    let mut errors = Vec::with_capacity(instances);
    for _ in 0..instances {
        let gain = 10f64.powf(rng.gen_range(-9.0..-3.0));
        let inr = cfg.noise_power * 10f64.powf(rng.gen_range(0.0..2.0));
        let (_, q) = bisection_single_link_ee(gain, inr, 0.0, cfg.pa_efficiency, cfg.p_cir, cfg.p_cell_max)?;
        let steps = (cfg.p_cell_max / 1e-5).round() as usize;
        let grid = (0..=steps)
            .map(|s| {
                let p = s as f64 * 1e-5;
                bits(p * gain / inr) / (p / cfg.pa_efficiency + cfg.p_cir)
            })
            .fold(0.0, f64::max);
        errors.push(((q - grid) / grid).abs());
    }
    Ok(OracleCheck::new("single-link bisection vs grid", &errors, 0))
}

/// Full suite with the instance counts used for acceptance.
pub fn run_suite(seed: u64) -> Result<Vec<OracleCheck>> {
    Ok(vec![
        check_cellular_bisection(seed, 100)?,
        check_d2d_grid(seed ^ 0x5DEE_CE66, 50)?,
        check_bisection_grid(seed ^ 0xB5AD_4ECE, 100)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_respects_qos_and_budget() {
        let g = grid_d2d_two_channel([1e-5, 1e-6], [1e-7, 1e-7], 0.35, 0.01, 0.2, 3.0, 1e-3).unwrap();
        assert!(g.powers[0] + g.powers[1] <= 0.2 + 1e-12);
        let rate = bits(g.powers[0] * 100.0) + bits(g.powers[1] * 10.0);
        assert!(rate >= 3.0);
        assert!(grid_d2d_two_channel([1e-9, 1e-9], [1e-7, 1e-7], 0.35, 0.01, 0.2, 3.0, 1e-3).is_none());
    }

    #[test]
    fn cellular_reference_applies_floor() {
        // Unconstrained optimum sits below the QoS power for a 3-bit floor.
        let (p, _) = cellular_reference(1e-5, 1e-7, 0.35, 0.01, 0.2, 3.0).unwrap().unwrap();
        assert!((p - 7.0 * 1e-2).abs() < 1e-12);
        assert!(cellular_reference(1e-9, 1e-7, 0.35, 0.01, 0.2, 3.0).unwrap().is_none());
    }

    #[test]
    fn small_suite_passes() {
        let checks = [
            check_cellular_bisection(1, 10).unwrap(),
            check_d2d_grid(2, 3).unwrap(),
            check_bisection_grid(3, 10).unwrap(),
        ];
        for c in &checks {
            assert!(c.passed, "{}", c.line());
        }
    }
}
