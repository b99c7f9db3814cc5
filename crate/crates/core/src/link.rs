//! Physical-layer evaluation of a strategy profile: SINR, achievable rate,
//! consumed power and energy efficiency (bit/Hz/J) per link.
//!
//! Powers are watts throughout. Each cellular UE `k` owns channel `k`
//! exclusively among cellular UEs, and every D2D pair may transmit on every
//! channel.

use std::f64::consts::LOG2_E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{ScenarioConfig, Topology};
use crate::FEASIBILITY_TOL;

/// A full strategy profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    /// `p_d2d[i][k]`: D2D transmitter `i` on channel `k`.
    pub p_d2d: Vec<Vec<f64>>,
    /// `p_cell[k]`: cellular UE `k` on its own channel.
    pub p_cell: Vec<f64>,
}

impl PowerAllocation {
    pub fn zeros(num_d2d: usize, num_cellular: usize) -> Self {
        Self {
            p_d2d: vec![vec![0.0; num_cellular]; num_d2d],
            p_cell: vec![0.0; num_cellular],
        }
    }

    pub fn num_d2d(&self) -> usize {
        self.p_d2d.len()
    }

    pub fn num_cellular(&self) -> usize {
        self.p_cell.len()
    }

    /// Checks nonnegativity and both power budgets within
    /// [`FEASIBILITY_TOL`].
    pub fn check_budgets(&self, p_d2d_max: f64, p_cell_max: f64) -> Result<()> {
        for (i, row) in self.p_d2d.iter().enumerate() {
            if !row.iter().all(|p| p.is_finite() && *p >= 0.0) {
                return Err(Error::Domain(format!("negative or non-finite power on D2D link {i}")));
            }
            let total: f64 = row.iter().sum();
            if total > p_d2d_max + FEASIBILITY_TOL {
                return Err(Error::Domain(format!(
                    "D2D link {i} uses {total} W over budget {p_d2d_max} W"
                )));
            }
        }
        for (k, &p) in self.p_cell.iter().enumerate() {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::Domain(format!(
                    "negative or non-finite power on cellular UE {k}"
                )));
            }
            if p > p_cell_max + FEASIBILITY_TOL {
                return Err(Error::Domain(format!(
                    "cellular UE {k} uses {p} W over budget {p_cell_max} W"
                )));
            }
        }
        Ok(())
    }

    /// Largest absolute per-entry power difference.
    pub fn max_abs_diff(&self, other: &PowerAllocation) -> f64 {
        let d2d = self
            .p_d2d
            .iter()
            .flatten()
            .zip(other.p_d2d.iter().flatten())
            .map(|(a, b)| (a - b).abs());
        let cell = self.p_cell.iter().zip(&other.p_cell).map(|(a, b)| (a - b).abs());
        d2d.chain(cell).fold(0.0, f64::max)
    }
}

/// Rate, power and EE of one link under a given profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub sinr_per_channel: Vec<f64>,
    pub rate: f64,
    pub power_total: f64,
    pub ee: f64,
}

/// `log2(1 + x)` without cancellation for small `x`.
#[inline]
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() * LOG2_E
}

/// Interference plus noise seen by D2D receiver `i` on channel `k`.
pub fn d2d_interference(i: usize, k: usize, alloc: &PowerAllocation, topo: &Topology, n0: f64) -> f64 {
    let from_cell = alloc.p_cell[k] * topo.g_cell2d2d[k][i];
    let from_d2d: f64 = (0..alloc.num_d2d())
        .filter(|&j| j != i)
        .map(|j| alloc.p_d2d[j][k] * topo.g_d2d2d2d[j][i][k])
        .sum();
    from_cell + from_d2d + n0
}

/// Interference plus noise seen by the BS on channel `k`.
pub fn cellular_interference(k: usize, alloc: &PowerAllocation, topo: &Topology, n0: f64) -> f64 {
    let from_d2d: f64 = (0..alloc.num_d2d())
        .map(|i| alloc.p_d2d[i][k] * topo.g_d2d2bs[i][k])
        .sum();
    from_d2d + n0
}

pub fn sinr_d2d(i: usize, k: usize, alloc: &PowerAllocation, topo: &Topology, n0: f64) -> f64 {
    let signal = alloc.p_d2d[i][k] * topo.g_direct[i][k];
    if signal == 0.0 {
        return 0.0;
    }
    signal / d2d_interference(i, k, alloc, topo, n0)
}

pub fn sinr_cellular(k: usize, alloc: &PowerAllocation, topo: &Topology, n0: f64) -> f64 {
    let signal = alloc.p_cell[k] * topo.g_cell2bs[k];
    if signal == 0.0 {
        return 0.0;
    }
    signal / cellular_interference(k, alloc, topo, n0)
}

/// Sum over channels of `log2(1 + sinr)`.
pub fn rate_d2d(i: usize, alloc: &PowerAllocation, topo: &Topology, n0: f64) -> f64 {
    (0..alloc.num_cellular())
        .map(|k| log2_1p(sinr_d2d(i, k, alloc, topo, n0)))
        .sum()
}

pub fn rate_cellular(k: usize, alloc: &PowerAllocation, topo: &Topology, n0: f64) -> f64 {
    log2_1p(sinr_cellular(k, alloc, topo, n0))
}

/// Amplifier-scaled transmit power of both ends plus two circuit floors.
pub fn power_total_d2d(i: usize, alloc: &PowerAllocation, eta: f64, p_cir: f64) -> f64 {
    d2d_power_consumption(alloc.p_d2d[i].iter().sum(), eta, p_cir)
}

pub fn power_total_cellular(k: usize, alloc: &PowerAllocation, eta: f64, p_cir: f64) -> f64 {
    cellular_power_consumption(alloc.p_cell[k], eta, p_cir)
}

#[inline]
pub fn d2d_power_consumption(transmit_sum: f64, eta: f64, p_cir: f64) -> f64 {
    transmit_sum / eta + 2.0 * p_cir
}

#[inline]
pub fn cellular_power_consumption(transmit: f64, eta: f64, p_cir: f64) -> f64 {
    transmit / eta + p_cir
}

/// `rate / power`, with the `0 / 0` of a silent link and zero circuit power
/// read as zero.
#[inline]
pub fn efficiency(rate: f64, power_total: f64) -> f64 {
    if power_total > 0.0 {
        rate / power_total
    } else {
        0.0
    }
}

pub fn ee_d2d(i: usize, alloc: &PowerAllocation, topo: &Topology, cfg: &ScenarioConfig) -> f64 {
    efficiency(
        rate_d2d(i, alloc, topo, cfg.noise_power),
        power_total_d2d(i, alloc, cfg.pa_efficiency, cfg.p_cir),
    )
}

pub fn ee_cellular(k: usize, alloc: &PowerAllocation, topo: &Topology, cfg: &ScenarioConfig) -> f64 {
    efficiency(
        rate_cellular(k, alloc, topo, cfg.noise_power),
        power_total_cellular(k, alloc, cfg.pa_efficiency, cfg.p_cir),
    )
}

pub fn metrics_d2d(i: usize, alloc: &PowerAllocation, topo: &Topology, cfg: &ScenarioConfig) -> LinkMetrics {
    let n0 = cfg.noise_power;
    let sinr_per_channel: Vec<f64> = (0..alloc.num_cellular())
        .map(|k| sinr_d2d(i, k, alloc, topo, n0))
        .collect();
    let rate = rate_d2d(i, alloc, topo, n0);
    let power_total = power_total_d2d(i, alloc, cfg.pa_efficiency, cfg.p_cir);
    LinkMetrics {
        sinr_per_channel,
        rate,
        power_total,
        ee: efficiency(rate, power_total),
    }
}

pub fn metrics_cellular(k: usize, alloc: &PowerAllocation, topo: &Topology, cfg: &ScenarioConfig) -> LinkMetrics {
    let n0 = cfg.noise_power;
    let rate = rate_cellular(k, alloc, topo, n0);
    let power_total = power_total_cellular(k, alloc, cfg.pa_efficiency, cfg.p_cir);
    LinkMetrics {
        sinr_per_channel: vec![sinr_cellular(k, alloc, topo, n0)],
        rate,
        power_total,
        ee: efficiency(rate, power_total),
    }
}

/// Network EE: the sum of per-link EEs, not sum rate over sum power.
pub fn network_ee(alloc: &PowerAllocation, topo: &Topology, cfg: &ScenarioConfig) -> f64 {
    let d2d: f64 = (0..alloc.num_d2d()).map(|i| ee_d2d(i, alloc, topo, cfg)).sum();
    let cell: f64 = (0..alloc.num_cellular())
        .map(|k| ee_cellular(k, alloc, topo, cfg))
        .sum();
    d2d + cell
}
