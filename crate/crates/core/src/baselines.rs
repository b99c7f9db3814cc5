//! Comparison response rules.
//!
//! * Spectral-efficient: maximize own rate with the whole budget, ignoring
//!   power cost (rate water-filling for D2D, full power for cellular).
//! * Random: total power uniform on `[0, p_max]`, split across channels with
//!   uniform Dirichlet weights; cellular power uniform on `[0, p_max]`.

use rand::Rng;
use rand_distr::Exp1;

use crate::game::{LinkResponse, Player, ResponseRule};
use crate::link::{self, PowerAllocation};
use crate::rng::SimRng;
use crate::solver::{CellularLink, D2dLink};
use crate::topology::{ScenarioConfig, Topology};

/// Description of the random rule, written into experiment metadata.
pub const RANDOM_RULE: &str = "total ~ U[0, p_max]; D2D split ~ Dirichlet(1, ..., 1); cellular ~ U[0, p_max]";
/// Description of the spectral-efficient rule, written into experiment metadata.
pub const SPECTRAL_RULE: &str = "full budget; D2D water-filled to the budget level against current interference";

/// Rate-maximizing strategy of `player` against `alloc`.
pub fn spectral_efficient_response(
    player: Player,
    alloc: &PowerAllocation,
    topo: &Topology,
    cfg: &ScenarioConfig,
) -> LinkResponse {
    match player {
        Player::D2d(i) => {
            let link = D2dLink::from_profile(i, alloc, topo, cfg);
            LinkResponse {
                powers: link.fill(link.budget_level()),
                feasible: link.qos_attainable(),
                q_trace: Vec::new(),
            }
        }
        Player::Cellular(k) => {
            let link = CellularLink::from_profile(k, alloc, topo, cfg);
            LinkResponse {
                powers: vec![cfg.p_cell_max],
                feasible: link.qos_attainable(),
                q_trace: Vec::new(),
            }
        }
    }
}

/// Random strategy for `player`; D2D vectors have `cfg.num_cellular` entries.
pub fn random_response<R: Rng + ?Sized>(player: Player, cfg: &ScenarioConfig, rng: &mut R) -> Vec<f64> {
    match player {
        Player::D2d(_) => {
            let total = cfg.p_d2d_max * rng.gen::<f64>();
            let weights: Vec<f64> = (0..cfg.num_cellular).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let sum: f64 = weights.iter().sum();
            if sum > 0.0 {
                weights.iter().map(|w| total * w / sum).collect()
            } else {
                vec![total / cfg.num_cellular as f64; cfg.num_cellular]
            }
        }
        Player::Cellular(_) => vec![cfg.p_cell_max * rng.gen::<f64>()],
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SpectralEfficient;

impl ResponseRule for SpectralEfficient {
    fn name(&self) -> &'static str {
        "spectral_efficient"
    }

    fn respond_d2d(
        &mut self,
        i: usize,
        alloc: &PowerAllocation,
        topo: &Topology,
        cfg: &ScenarioConfig,
    ) -> LinkResponse {
        spectral_efficient_response(Player::D2d(i), alloc, topo, cfg)
    }

    fn respond_cellular(
        &mut self,
        k: usize,
        alloc: &PowerAllocation,
        topo: &Topology,
        cfg: &ScenarioConfig,
    ) -> LinkResponse {
        spectral_efficient_response(Player::Cellular(k), alloc, topo, cfg)
    }
}

/// Random allocation; draws a fresh strategy every time it is asked.
#[derive(Debug, Clone)]
pub struct RandomAllocation {
    rng: SimRng,
}

impl RandomAllocation {
    pub fn new(rng: SimRng) -> Self {
        Self { rng }
    }
}

impl ResponseRule for RandomAllocation {
    fn name(&self) -> &'static str {
        "random"
    }

    fn respond_d2d(
        &mut self,
        i: usize,
        alloc: &PowerAllocation,
        topo: &Topology,
        cfg: &ScenarioConfig,
    ) -> LinkResponse {
        let powers = random_response(Player::D2d(i), cfg, &mut self.rng);
        let mut trial = alloc.clone();
        trial.p_d2d[i] = powers.clone();
        LinkResponse {
            feasible: link::rate_d2d(i, &trial, topo, cfg.noise_power) >= cfg.qos_d2d,
            powers,
            q_trace: Vec::new(),
        }
    }

    fn respond_cellular(
        &mut self,
        k: usize,
        alloc: &PowerAllocation,
        topo: &Topology,
        cfg: &ScenarioConfig,
    ) -> LinkResponse {
        let powers = random_response(Player::Cellular(k), cfg, &mut self.rng);
        let mut trial = alloc.clone();
        trial.p_cell[k] = powers[0];
        LinkResponse {
            feasible: link::rate_cellular(k, &trial, topo, cfg.noise_power) >= cfg.qos_cell,
            powers,
            q_trace: Vec::new(),
        }
    }
}
