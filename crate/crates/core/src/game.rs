//! The noncooperative power-control game.
//!
//! Round 0 has every D2D transmitter silent while each cellular UE responds
//! to the empty channel. In each later round every UE, in a fixed order,
//! replaces its strategy with its response to the current profile
//! (Gauss-Seidel). The game stops once a full round moves no power by more
//! than `nash_power_tol`, or after `max_rounds` rounds.

use serde::{Deserialize, Serialize};

use crate::link::{self, PowerAllocation};
use crate::solver::{dinkelbach_best_response_cellular, dinkelbach_best_response_d2d};
use crate::topology::{ScenarioConfig, Topology};

/// A UE taking part in the game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum Player {
    Cellular(usize),
    D2d(usize),
}

/// Update order within a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UpdateOrder {
    /// Cellular UEs `0..K`, then D2D pairs `0..N`.
    #[default]
    CellularFirst,
    /// D2D pairs `0..N`, then cellular UEs `0..K`.
    D2dFirst,
}

impl UpdateOrder {
    pub fn sequence(self, num_d2d: usize, num_cellular: usize) -> Vec<Player> {
        let cell = (0..num_cellular).map(Player::Cellular);
        let d2d = (0..num_d2d).map(Player::D2d);
        match self {
            UpdateOrder::CellularFirst => cell.chain(d2d).collect(),
            UpdateOrder::D2dFirst => d2d.chain(cell).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    pub max_rounds: usize,
    /// Sup-norm power change (watts) below which a round counts as settled.
    pub nash_power_tol: f64,
    pub ordering: UpdateOrder,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            max_rounds: 10,
            nash_power_tol: 1e-6,
            ordering: UpdateOrder::CellularFirst,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.max_rounds < 1 {
            return Err(crate::Error::config("game.max_rounds", "must be >= 1"));
        }
        if !(self.nash_power_tol.is_finite() && self.nash_power_tol > 0.0) {
            return Err(crate::Error::config("game.nash_power_tol", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// A strategy chosen by a response rule.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkResponse {
    pub powers: Vec<f64>,
    /// `false` when the link is in outage.
    pub feasible: bool,
    /// Dinkelbach prices, when the rule runs Dinkelbach.
    pub q_trace: Vec<f64>,
}

/// Produces a UE's strategy given everybody else's.
pub trait ResponseRule {
    fn name(&self) -> &'static str;
    fn respond_d2d(&mut self, i: usize, alloc: &PowerAllocation, topo: &Topology, cfg: &ScenarioConfig)
        -> LinkResponse;
    fn respond_cellular(
        &mut self,
        k: usize,
        alloc: &PowerAllocation,
        topo: &Topology,
        cfg: &ScenarioConfig,
    ) -> LinkResponse;
}

/// Dinkelbach best responses.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnergyEfficient;

impl ResponseRule for EnergyEfficient {
    fn name(&self) -> &'static str {
        "energy_efficient"
    }

    fn respond_d2d(
        &mut self,
        i: usize,
        alloc: &PowerAllocation,
        topo: &Topology,
        cfg: &ScenarioConfig,
    ) -> LinkResponse {
        let br = dinkelbach_best_response_d2d(i, alloc, topo, cfg);
        LinkResponse {
            powers: br.powers,
            feasible: br.feasible,
            q_trace: br.trace,
        }
    }

    fn respond_cellular(
        &mut self,
        k: usize,
        alloc: &PowerAllocation,
        topo: &Topology,
        cfg: &ScenarioConfig,
    ) -> LinkResponse {
        let br = dinkelbach_best_response_cellular(k, alloc, topo, cfg);
        LinkResponse {
            powers: br.powers,
            feasible: br.feasible,
            q_trace: br.trace,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub ee: f64,
    pub rate: f64,
    /// Outage flag of the link's latest response.
    pub outage: bool,
    /// Dinkelbach prices of the link's response in this round, if any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub q_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Profile at the end of the round.
    pub alloc: PowerAllocation,
    pub d2d: Vec<LinkRecord>,
    pub cellular: Vec<LinkRecord>,
    /// Sup-norm power change over the round.
    pub max_power_change: f64,
}

impl RoundRecord {
    pub fn mean_d2d_ee(&self) -> f64 {
        mean(self.d2d.iter().map(|l| l.ee))
    }

    pub fn mean_cellular_ee(&self) -> f64 {
        mean(self.cellular.iter().map(|l| l.ee))
    }
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    if n == 0 {
        0.0
    } else {
        values.sum::<f64>() / n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameTrace {
    pub rule: String,
    pub ordering: Vec<Player>,
    /// Round 0 first.
    pub rounds: Vec<RoundRecord>,
    /// First round whose power change fell below the tolerance.
    pub converged_round: Option<usize>,
}

impl GameTrace {
    pub fn final_round(&self) -> &RoundRecord {
        self.rounds.last().expect("round 0 is always recorded")
    }

    pub fn final_alloc(&self) -> &PowerAllocation {
        &self.final_round().alloc
    }
}

#[derive(Default)]
struct LinkState {
    outage: bool,
    q_trace: Vec<f64>,
}

fn record_round(
    round: usize,
    alloc: &PowerAllocation,
    d2d_state: &mut [LinkState],
    cell_state: &mut [LinkState],
    topo: &Topology,
    cfg: &ScenarioConfig,
    max_power_change: f64,
) -> RoundRecord {
    let d2d = d2d_state
        .iter_mut()
        .enumerate()
        .map(|(i, s)| {
            let m = link::metrics_d2d(i, alloc, topo, cfg);
            LinkRecord {
                ee: m.ee,
                rate: m.rate,
                outage: s.outage,
                q_trace: std::mem::take(&mut s.q_trace),
            }
        })
        .collect();
    let cellular = cell_state
        .iter_mut()
        .enumerate()
        .map(|(k, s)| {
            let m = link::metrics_cellular(k, alloc, topo, cfg);
            LinkRecord {
                ee: m.ee,
                rate: m.rate,
                outage: s.outage,
                q_trace: std::mem::take(&mut s.q_trace),
            }
        })
        .collect();
    RoundRecord {
        round,
        alloc: alloc.clone(),
        d2d,
        cellular,
        max_power_change,
    }
}

fn play(
    player: Player,
    alloc: &mut PowerAllocation,
    d2d_state: &mut [LinkState],
    cell_state: &mut [LinkState],
    topo: &Topology,
    cfg: &ScenarioConfig,
    rule: &mut dyn ResponseRule,
) {
    match player {
        Player::Cellular(k) => {
            let r = rule.respond_cellular(k, alloc, topo, cfg);
            alloc.p_cell[k] = r.powers[0];
            cell_state[k] = LinkState {
                outage: !r.feasible,
                q_trace: r.q_trace,
            };
        }
        Player::D2d(i) => {
            let r = rule.respond_d2d(i, alloc, topo, cfg);
            alloc.p_d2d[i] = r.powers;
            d2d_state[i] = LinkState {
                outage: !r.feasible,
                q_trace: r.q_trace,
            };
        }
    }
}

/// Plays the game on `topo` until the power profile settles.
pub fn run_game(topo: &Topology, cfg: &ScenarioConfig, gcfg: &GameConfig, rule: &mut dyn ResponseRule) -> GameTrace {
    let n = topo.num_d2d();
    let k = topo.num_cellular();
    let ordering = gcfg.ordering.sequence(n, k);
    let mut alloc = PowerAllocation::zeros(n, k);
    let mut d2d_state: Vec<LinkState> = (0..n).map(|_| LinkState::default()).collect();
    let mut cell_state: Vec<LinkState> = (0..k).map(|_| LinkState::default()).collect();
    let mut rounds = Vec::with_capacity(gcfg.max_rounds + 1);

    let silent = alloc.clone();
    for c in 0..k {
        play(
            Player::Cellular(c),
            &mut alloc,
            &mut d2d_state,
            &mut cell_state,
            topo,
            cfg,
            rule,
        );
    }
    let change = alloc.max_abs_diff(&silent);
    rounds.push(record_round(
        0,
        &alloc,
        &mut d2d_state,
        &mut cell_state,
        topo,
        cfg,
        change,
    ));

    let mut converged_round = None;
    for round in 1..=gcfg.max_rounds {
        let before = alloc.clone();
        for &player in &ordering {
            play(player, &mut alloc, &mut d2d_state, &mut cell_state, topo, cfg, rule);
        }
        let change = alloc.max_abs_diff(&before);
        rounds.push(record_round(
            round,
            &alloc,
            &mut d2d_state,
            &mut cell_state,
            topo,
            cfg,
            change,
        ));
        if change < gcfg.nash_power_tol {
            converged_round = Some(round);
            break;
        }
    }

    GameTrace {
        rule: rule.name().to_owned(),
        ordering,
        rounds,
        converged_round,
    }
}

/// Unilateral-deviation audit of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashAudit {
    /// Relative EE gain available to each D2D pair.
    pub d2d_improvement: Vec<f64>,
    /// Relative EE gain available to each cellular UE.
    pub cellular_improvement: Vec<f64>,
    pub max_improvement: f64,
    pub tolerance: f64,
    pub passes: bool,
}

fn relative_gain(current: f64, deviated: f64) -> f64 {
    if current > 0.0 {
        (deviated - current) / current
    } else if deviated > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// For every UE, computes the response to `alloc` and the relative EE gain
/// switching to it would bring. Passes iff no gain exceeds `tol_ee`.
pub fn check_nash(
    alloc: &PowerAllocation,
    topo: &Topology,
    cfg: &ScenarioConfig,
    tol_ee: f64,
    rule: &mut dyn ResponseRule,
) -> NashAudit {
    let d2d_improvement: Vec<f64> = (0..alloc.num_d2d())
        .map(|i| {
            let current = link::ee_d2d(i, alloc, topo, cfg);
            let mut deviated = alloc.clone();
            deviated.p_d2d[i] = rule.respond_d2d(i, alloc, topo, cfg).powers;
            relative_gain(current, link::ee_d2d(i, &deviated, topo, cfg))
        })
        .collect();
    let cellular_improvement: Vec<f64> = (0..alloc.num_cellular())
        .map(|k| {
            let current = link::ee_cellular(k, alloc, topo, cfg);
            let mut deviated = alloc.clone();
            deviated.p_cell[k] = rule.respond_cellular(k, alloc, topo, cfg).powers[0];
            relative_gain(current, link::ee_cellular(k, &deviated, topo, cfg))
        })
        .collect();
    let max_improvement = d2d_improvement
        .iter()
        .chain(&cellular_improvement)
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    NashAudit {
        d2d_improvement,
        cellular_improvement,
        max_improvement,
        tolerance: tol_ee,
        passes: max_improvement <= tol_ee,
    }
}

/// Default relative tolerance of [`check_nash`].
pub const NASH_EE_TOL: f64 = 1e-3;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::topology::generate_topology;

    fn cellular_only_topology(k: usize) -> Topology {
        let cfg = ScenarioConfig {
            num_cellular: k,
            ..ScenarioConfig::default()
        };
        let mut topo = generate_topology(&cfg, &mut rng_from_seed(5)).unwrap();
        topo.d2d_tx_positions.clear();
        topo.d2d_rx_positions.clear();
        topo.g_direct.clear();
        topo.g_d2d2d2d.clear();
        topo.g_d2d2bs.clear();
        topo.g_cell2d2d.iter_mut().for_each(Vec::clear);
        topo
    }

    #[test]
    fn cellular_only_converges_in_one_round() {
        let topo = cellular_only_topology(3);
        let cfg = ScenarioConfig::default();
        let trace = run_game(&topo, &cfg, &GameConfig::default(), &mut EnergyEfficient);
        assert_eq!(trace.converged_round, Some(1));
        assert_eq!(trace.rounds.len(), 2);
        assert_eq!(trace.rounds[1].max_power_change, 0.0);
        assert_eq!(trace.rounds[0].alloc, trace.rounds[1].alloc);
    }

    #[test]
    fn single_pair_single_cell_passes_audit() {
        let cfg = ScenarioConfig {
            num_d2d_pairs: 1,
            num_cellular: 1,
            ..ScenarioConfig::default()
        };
        // Seed 11; the test fails loudly if the game does not settle.
        let topo = generate_topology(&cfg, &mut rng_from_seed(11)).unwrap();
        let trace = run_game(&topo, &cfg, &GameConfig::default(), &mut EnergyEfficient);
        assert!(trace.converged_round.is_some(), "{trace:?}");
        let audit = check_nash(trace.final_alloc(), &topo, &cfg, NASH_EE_TOL, &mut EnergyEfficient);
        assert!(audit.passes, "{audit:?}");
    }

    #[test]
    fn trace_ee_matches_recomputation_and_budgets_hold() {
        let cfg = ScenarioConfig::default();
        for seed in 0..20 {
            let topo = generate_topology(&cfg, &mut rng_from_seed(seed)).unwrap();
            let trace = run_game(&topo, &cfg, &GameConfig::default(), &mut EnergyEfficient);
            assert!(trace.rounds.len() <= GameConfig::default().max_rounds + 1);
            for round in &trace.rounds {
                round.alloc.check_budgets(cfg.p_d2d_max, cfg.p_cell_max).unwrap();
                for (i, l) in round.d2d.iter().enumerate() {
                    assert_eq!(l.ee, link::ee_d2d(i, &round.alloc, &topo, &cfg));
                }
                for (k, l) in round.cellular.iter().enumerate() {
                    assert_eq!(l.ee, link::ee_cellular(k, &round.alloc, &topo, &cfg));
                }
            }
            // Round 0: D2D silent.
            assert!(trace.rounds[0].alloc.p_d2d.iter().flatten().all(|&p| p == 0.0));
        }
    }

    #[test]
    fn perturbation_breaks_equilibrium() {
        let cfg = ScenarioConfig::default();
        let topo = generate_topology(&cfg, &mut rng_from_seed(21)).unwrap();
        let trace = run_game(&topo, &cfg, &GameConfig::default(), &mut EnergyEfficient);
        let mut alloc = trace.final_alloc().clone();
        let spent: f64 = alloc.p_d2d[2].iter().sum();
        let bump = 0.5 * cfg.p_d2d_max;
        let scale = ((spent + bump).min(cfg.p_d2d_max)) / spent.max(1e-300);
        if spent > 0.0 {
            alloc.p_d2d[2].iter_mut().for_each(|p| *p *= scale);
        } else {
            alloc.p_d2d[2][0] = bump;
        }
        let audit = check_nash(&alloc, &topo, &cfg, NASH_EE_TOL, &mut EnergyEfficient);
        assert!(!audit.passes);
        assert!(audit.d2d_improvement[2] > NASH_EE_TOL);
    }

    #[test]
    fn silent_profile_fails_audit() {
        let cfg = ScenarioConfig {
            qos_d2d: 0.0,
            qos_cell: 0.0,
            ..ScenarioConfig::default()
        };
        let topo = generate_topology(&cfg, &mut rng_from_seed(4)).unwrap();
        let audit = check_nash(
            &PowerAllocation::zeros(5, 3),
            &topo,
            &cfg,
            NASH_EE_TOL,
            &mut EnergyEfficient,
        );
        assert!(!audit.passes);
        assert_eq!(audit.max_improvement, f64::INFINITY);
    }

    #[test]
    fn ordering_sequences() {
        assert_eq!(
            UpdateOrder::CellularFirst.sequence(2, 1),
            vec![Player::Cellular(0), Player::D2d(0), Player::D2d(1)]
        );
        assert_eq!(
            UpdateOrder::D2dFirst.sequence(1, 2),
            vec![Player::D2d(0), Player::Cellular(0), Player::Cellular(1)]
        );
    }

    #[test]
    fn single_round_cap_terminates() {
        let cfg = ScenarioConfig::default();
        let topo = generate_topology(&cfg, &mut rng_from_seed(8)).unwrap();
        let gcfg = GameConfig {
            max_rounds: 1,
            ..GameConfig::default()
        };
        let trace = run_game(&topo, &cfg, &gcfg, &mut EnergyEfficient);
        assert_eq!(trace.rounds.len(), 2);
        assert_eq!(trace.converged_round, None);
    }
}
