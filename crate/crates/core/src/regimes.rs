//! Dominance regimes of the network EE and their approximations.
//!
//! Under a dominance condition (`a >> b`, read as `a >= RHO * b`) the network
//! EE simplifies: circuit power dominated EE is a weighted sum rate,
//! noise dominated EE decouples into independent single-link problems, and so
//! on. [`classify_regime`] detects the condition; [`regime_approx_ee`]
//! evaluates the simplified expression.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{self, log2_1p, PowerAllocation};
use crate::topology::{ScenarioConfig, Topology};

/// Threshold standing in for `>>`.
pub const RHO: f64 = 100.0;

/// Regime tags in precedence order: when several conditions hold, the
/// earliest wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeTag {
    CircuitDominated,
    TransmissionDominated,
    NoiseDominated,
    InterferenceDominated,
    CellularDominated,
    D2dDominated,
    None,
}

impl RegimeTag {
    pub const PRECEDENCE: [RegimeTag; 6] = [
        RegimeTag::CircuitDominated,
        RegimeTag::TransmissionDominated,
        RegimeTag::NoiseDominated,
        RegimeTag::InterferenceDominated,
        RegimeTag::CellularDominated,
        RegimeTag::D2dDominated,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    /// Ratio backing the tag; for `None`, the largest ratio seen.
    pub dominance_ratio: f64,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else if a > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn transmit_powers(alloc: &PowerAllocation) -> impl Iterator<Item = f64> + '_ {
    alloc.p_d2d.iter().flatten().chain(&alloc.p_cell).copied()
}

/// Interference (noise excluded) at every D2D receiver and at the BS.
fn interference_terms(alloc: &PowerAllocation, topo: &Topology) -> Vec<f64> {
    let k = alloc.num_cellular();
    let mut terms = Vec::with_capacity((alloc.num_d2d() + 1) * k);
    for i in 0..alloc.num_d2d() {
        for c in 0..k {
            terms.push(link::d2d_interference(i, c, alloc, topo, 0.0));
        }
    }
    for c in 0..k {
        terms.push(link::cellular_interference(c, alloc, topo, 0.0));
    }
    terms
}

/// Dominance ratio of `tag`'s defining condition.
pub fn dominance_ratio(tag: RegimeTag, topo: &Topology, alloc: &PowerAllocation, cfg: &ScenarioConfig) -> f64 {
    let max_p = transmit_powers(alloc).fold(0.0, f64::max);
    let min_p = transmit_powers(alloc).fold(f64::INFINITY, f64::min);
    match tag {
        RegimeTag::CircuitDominated => ratio(cfg.p_cir, max_p),
        RegimeTag::TransmissionDominated => ratio(min_p, cfg.p_cir),
        RegimeTag::NoiseDominated => {
            let max_i = interference_terms(alloc, topo).into_iter().fold(0.0, f64::max);
            ratio(cfg.noise_power, max_i)
        }
        RegimeTag::InterferenceDominated => {
            let min_i = interference_terms(alloc, topo)
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            ratio(min_i, cfg.noise_power)
        }
        RegimeTag::CellularDominated => (0..alloc.num_cellular())
            .map(|c| {
                let loudest = (0..alloc.num_d2d()).map(|i| alloc.p_d2d[i][c]).fold(0.0, f64::max);
                ratio(alloc.p_cell[c], loudest)
            })
            .fold(f64::INFINITY, f64::min),
        RegimeTag::D2dDominated => (0..alloc.num_d2d())
            .flat_map(|i| (0..alloc.num_cellular()).map(move |c| (i, c)))
            .map(|(i, c)| ratio(alloc.p_d2d[i][c], alloc.p_cell[c]))
            .fold(f64::INFINITY, f64::min),
        RegimeTag::None => 0.0,
    }
}

pub fn classify_regime(topo: &Topology, alloc: &PowerAllocation, cfg: &ScenarioConfig) -> Regime {
    let mut largest: f64 = 0.0;
    for tag in RegimeTag::PRECEDENCE {
        let r = dominance_ratio(tag, topo, alloc, cfg);
        if r >= RHO {
            return Regime {
                tag,
                dominance_ratio: r,
            };
        }
        largest = largest.max(r);
    }
    Regime {
        tag: RegimeTag::None,
        dominance_ratio: largest,
    }
}

fn d2d_transmit(alloc: &PowerAllocation, i: usize) -> f64 {
    alloc.p_d2d[i].iter().sum()
}

/// D2D rate with a custom denominator per channel.
fn d2d_rate_with(alloc: &PowerAllocation, topo: &Topology, i: usize, denom: impl Fn(usize) -> f64) -> f64 {
    (0..alloc.num_cellular())
        .map(|c| {
            let signal = alloc.p_d2d[i][c] * topo.g_direct[i][c];
            if signal == 0.0 {
                0.0
            } else {
                log2_1p(signal / denom(c))
            }
        })
        .sum()
}

fn cell_rate_with(alloc: &PowerAllocation, topo: &Topology, c: usize, denom: f64) -> f64 {
    let signal = alloc.p_cell[c] * topo.g_cell2bs[c];
    if signal == 0.0 {
        0.0
    } else {
        log2_1p(signal / denom)
    }
}

/// Simplified network EE valid under `regime`. `RegimeTag::None` returns the
/// exact network EE.
///
/// The transmission dominated form drops circuit power, so a silent link
/// contributes zero rather than its `0 / 0` limit. The interference dominated
/// form drops noise and can be infinite when a link sees no interference.
pub fn regime_approx_ee(topo: &Topology, alloc: &PowerAllocation, cfg: &ScenarioConfig, regime: RegimeTag) -> f64 {
    let n = alloc.num_d2d();
    let k = alloc.num_cellular();
    let n0 = cfg.noise_power;
    let eta = cfg.pa_efficiency;
    let exact_d2d = |i: usize| link::rate_d2d(i, alloc, topo, n0);
    let exact_cell = |c: usize| link::rate_cellular(c, alloc, topo, n0);
    let d2d_power = |i: usize| link::d2d_power_consumption(d2d_transmit(alloc, i), eta, cfg.p_cir);
    let cell_power = |c: usize| link::cellular_power_consumption(alloc.p_cell[c], eta, cfg.p_cir);

    match regime {
        RegimeTag::None => link::network_ee(alloc, topo, cfg),
        RegimeTag::CircuitDominated => {
            let d2d: f64 = (0..n).map(exact_d2d).sum();
            let cell: f64 = (0..k).map(|c| 2.0 * exact_cell(c)).sum();
            (d2d + cell) / (2.0 * cfg.p_cir)
        }
        RegimeTag::TransmissionDominated => {
            let d2d: f64 = (0..n)
                .map(|i| link::efficiency(exact_d2d(i), d2d_transmit(alloc, i) / eta))
                .sum();
            let cell: f64 = (0..k)
                .map(|c| link::efficiency(exact_cell(c), alloc.p_cell[c] / eta))
                .sum();
            d2d + cell
        }
        RegimeTag::NoiseDominated => {
            let d2d: f64 = (0..n)
                .map(|i| link::efficiency(d2d_rate_with(alloc, topo, i, |_| n0), d2d_power(i)))
                .sum();
            let cell: f64 = (0..k)
                .map(|c| link::efficiency(cell_rate_with(alloc, topo, c, n0), cell_power(c)))
                .sum();
            d2d + cell
        }
        RegimeTag::InterferenceDominated => {
            let d2d: f64 = (0..n)
                .map(|i| {
                    let rate = d2d_rate_with(alloc, topo, i, |c| link::d2d_interference(i, c, alloc, topo, 0.0));
                    link::efficiency(rate, d2d_power(i))
                })
                .sum();
            let cell: f64 = (0..k)
                .map(|c| {
                    let rate = cell_rate_with(alloc, topo, c, link::cellular_interference(c, alloc, topo, 0.0));
                    link::efficiency(rate, cell_power(c))
                })
                .sum();
            d2d + cell
        }
        RegimeTag::CellularDominated => (0..k)
            .map(|c| link::efficiency(cell_rate_with(alloc, topo, c, n0), cell_power(c)))
            .sum(),
        RegimeTag::D2dDominated => (0..n)
            .map(|i| {
                let rate = d2d_rate_with(alloc, topo, i, |c| {
                    let others: f64 = (0..n)
                        .filter(|&j| j != i)
                        .map(|j| alloc.p_d2d[j][c] * topo.g_d2d2d2d[j][i][c])
                        .sum();
                    others + n0
                });
                link::efficiency(rate, d2d_power(i))
            })
            .sum(),
    }
}

/// EE-optimal power of an isolated link:
/// `max log2(1 + p g / (I + N0)) / (p / eta + p_cir_total)` over `[0, p_max]`.
///
/// The objective is quasiconcave, so its derivative changes sign once; the
/// sign change is located by bisection. Returns `(p*, q*)`.
pub fn bisection_single_link_ee(
    gain: f64,
    interference: f64,
    n0: f64,
    eta: f64,
    p_cir_total: f64,
    p_max: f64,
) -> Result<(f64, f64)> {
    if !(gain.is_finite() && gain > 0.0) {
        return Err(Error::Domain(format!("gain must be > 0, got {gain}")));
    }
    let valid = interference + n0 > 0.0 && eta > 0.0 && p_max > 0.0 && p_cir_total >= 0.0;
    if !valid {
        return Err(Error::Domain("noise, efficiency and budget must be positive".into()));
    }
    let a = gain / (interference + n0);
    let objective = |p: f64| log2_1p(a * p) / (p / eta + p_cir_total);
    if p_cir_total == 0.0 {
        // Strictly decreasing; supremum is the p -> 0 limit.
        return Ok((0.0, a * eta / LN_2));
    }
    // Sign of d/dp of the objective.
    let slope = |p: f64| a * (p / eta + p_cir_total) / (1.0 + a * p) - (a * p).ln_1p() / eta;
    if slope(p_max) >= 0.0 {
        return Ok((p_max, objective(p_max)));
    }
    let (mut lo, mut hi) = (0.0, p_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    Ok((p, objective(p)))
}
