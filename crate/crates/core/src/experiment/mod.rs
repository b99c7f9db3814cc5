//! Seeded Monte Carlo batches.
//!
//! Run `r` of a batch uses child seed `child_seed(master_seed, r)`: the
//! topology is drawn from stream 0 of that seed and the random baseline
//! draws from stream 1. Every selected algorithm plays a game on the same
//! topology. Runs are spread over a rayon pool but reduced in run-index
//! order, so results do not depend on the pool width.

mod output;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{RandomAllocation, SpectralEfficient, RANDOM_RULE, SPECTRAL_RULE};
use crate::error::{Error, Result};
use crate::game::{run_game, EnergyEfficient, GameConfig, GameTrace, ResponseRule, RoundRecord};
use crate::rng::{child_seed, rng_stream, RANDOM_BASELINE_STREAM, TOPOLOGY_STREAM};
use crate::topology::{generate_topology, ScenarioConfig, Topology};

pub use output::{emit_outputs, version_string, OutputPaths, CSV_FILE, METADATA_FILE, TRACES_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    EnergyEfficient,
    SpectralEfficient,
    Random,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [
        Algorithm::EnergyEfficient,
        Algorithm::SpectralEfficient,
        Algorithm::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::EnergyEfficient => "energy_efficient",
            Algorithm::SpectralEfficient => "spectral_efficient",
            Algorithm::Random => "random",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Algorithm::EnergyEfficient => "Dinkelbach best response under QoS and budget constraints",
            Algorithm::SpectralEfficient => SPECTRAL_RULE,
            Algorithm::Random => RANDOM_RULE,
        }
    }

    /// Parses a comma-separated list such as `energy_efficient,random`.
    /// Duplicates and empty lists are rejected.
    pub fn parse_list(text: &str) -> Result<Vec<Algorithm>> {
        let mut out = Vec::new();
        for part in text.split(',').map(str::trim) {
            let alg: Algorithm = part.parse()?;
            if out.contains(&alg) {
                return Err(Error::config("algorithms", format!("{part} listed twice")));
            }
            out.push(alg);
        }
        Ok(out)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            Error::config(
                "algorithms",
                format!("unknown algorithm {s:?}; expected energy_efficient, spectral_efficient or random"),
            )
        })
    }
}

/// Batch settings; the `[experiment]` table of a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub num_runs: usize,
    #[serde(with = "crate::rng::seed_format")]
    pub master_seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub out_dir: PathBuf,
    /// Pool width; 0 lets rayon pick.
    pub workers: usize,
    /// Also dump every game trace as JSON lines.
    pub verbose: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            num_runs: 1000,
            master_seed: 0,
            algorithms: Algorithm::ALL.to_vec(),
            out_dir: PathBuf::from("results"),
            workers: 0,
            verbose: false,
        }
    }
}

/// Everything a batch depends on. `scenario.seed` is ignored: each run
/// replaces it with its child seed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub game: GameConfig,
    pub experiment: RunSettings,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.game.validate()?;
        let e = &self.experiment;
        if e.num_runs < 1 {
            return Err(Error::config("experiment.num_runs", "must be >= 1"));
        }
        if e.algorithms.is_empty() {
            return Err(Error::config(
                "experiment.algorithms",
                "must list at least one algorithm",
            ));
        }
        for (i, a) in e.algorithms.iter().enumerate() {
            if e.algorithms[..i].contains(a) {
                return Err(Error::config("experiment.algorithms", format!("{a} listed twice")));
            }
        }
        Ok(())
    }

    /// Parses and validates a config file body. Missing keys take defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Parse {
            what: "experiment config",
            message: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse {
            what: "experiment config",
            message: e.to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Scenario of run `run_index`, carrying its child seed.
    pub fn run_scenario(&self, run_index: usize) -> ScenarioConfig {
        ScenarioConfig {
            seed: child_seed(self.experiment.master_seed, run_index as u64),
            ..self.scenario.clone()
        }
    }
}

/// One algorithm's game on one run, reduced to what aggregation needs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunCurve {
    /// `(mean D2D EE, mean cellular EE)` per round, padded to
    /// `max_rounds + 1` entries by repeating the last played round.
    pub rounds: Vec<(f64, f64)>,
    pub converged_round: Option<usize>,
    /// Links in outage after the last played round.
    pub d2d_outages: usize,
    pub cellular_outages: usize,
}

impl RunCurve {
    fn from_trace(trace: &GameTrace, max_rounds: usize) -> Self {
        let mut rounds: Vec<(f64, f64)> = trace
            .rounds
            .iter()
            .map(|r| (r.mean_d2d_ee(), r.mean_cellular_ee()))
            .collect();
        let last = *rounds.last().expect("round 0 is always recorded");
        rounds.resize(max_rounds + 1, last);
        let fin: &RoundRecord = trace.final_round();
        Self {
            rounds,
            converged_round: trace.converged_round,
            d2d_outages: fin.d2d.iter().filter(|l| l.outage).count(),
            cellular_outages: fin.cellular.iter().filter(|l| l.outage).count(),
        }
    }
}

/// All games of one run, in `spec.experiment.algorithms` order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub run_index: usize,
    pub seed: u64,
    pub topology: Topology,
    pub traces: Vec<GameTrace>,
}

fn rule_for(alg: Algorithm, seed: u64) -> Box<dyn ResponseRule> {
    match alg {
        Algorithm::EnergyEfficient => Box::new(EnergyEfficient),
        Algorithm::SpectralEfficient => Box::new(SpectralEfficient),
        Algorithm::Random => Box::new(RandomAllocation::new(rng_stream(seed, RANDOM_BASELINE_STREAM))),
    }
}

/// Plays every selected algorithm on run `run_index`.
pub fn run_single(spec: &ExperimentSpec, run_index: usize) -> Result<RunOutput> {
    let cfg = spec.run_scenario(run_index);
    let topology = generate_topology(&cfg, &mut rng_stream(cfg.seed, TOPOLOGY_STREAM))?;
    let traces = spec
        .experiment
        .algorithms
        .iter()
        .map(|&alg| run_game(&topology, &cfg, &spec.game, rule_for(alg, cfg.seed).as_mut()))
        .collect();
    Ok(RunOutput {
        run_index,
        seed: cfg.seed,
        topology,
        traces,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub round: usize,
    pub mean_d2d_ee: f64,
    pub mean_cell_ee: f64,
    pub norm_d2d_ee: f64,
    pub norm_cell_ee: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmResult {
    pub algorithm: Algorithm,
    pub curve: Vec<CurvePoint>,
    /// Per run, in run order.
    pub runs: Vec<RunCurve>,
}

impl AlgorithmResult {
    pub fn convergence_rounds(&self) -> Vec<Option<usize>> {
        self.runs.iter().map(|r| r.converged_round).collect()
    }

    pub fn final_point(&self) -> &CurvePoint {
        self.curve.last().expect("curve has max_rounds + 1 points")
    }

    pub fn d2d_outages(&self) -> usize {
        self.runs.iter().map(|r| r.d2d_outages).sum()
    }

    pub fn cellular_outages(&self) -> usize {
        self.runs.iter().map(|r| r.cellular_outages).sum()
    }

    /// Median over converged runs; `None` if none converged.
    pub fn median_convergence_round(&self) -> Option<f64> {
        let mut rounds: Vec<usize> = self.runs.iter().filter_map(|r| r.converged_round).collect();
        if rounds.is_empty() {
            return None;
        }
        rounds.sort_unstable();
        let m = rounds.len() / 2;
        Some(if rounds.len() % 2 == 1 {
            rounds[m] as f64
        } else {
            0.5 * (rounds[m - 1] + rounds[m]) as f64
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub algorithms: Vec<AlgorithmResult>,
    /// Every curve is divided by this value.
    pub normalization_divisor: f64,
    /// Curve that supplied the divisor.
    pub normalization_reference: String,
    pub seeds: Vec<u64>,
    /// Full per-run outputs, kept only in verbose mode.
    pub traces: Option<Vec<RunOutput>>,
}

impl AggregateResult {
    pub fn get(&self, alg: Algorithm) -> Option<&AlgorithmResult> {
        self.algorithms.iter().find(|a| a.algorithm == alg)
    }
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config("experiment.workers", e.to_string()))
}

/// Runs the batch without touching the filesystem.
pub fn simulate(spec: &ExperimentSpec) -> Result<AggregateResult> {
    spec.validate()?;
    let pool = build_pool(spec.experiment.workers)?;
    let outputs: Vec<RunOutput> = pool.install(|| {
        (0..spec.experiment.num_runs)
            .into_par_iter()
            .map(|r| run_single(spec, r))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(aggregate(spec, outputs))
}

/// Checks the output directory, then runs the batch.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<AggregateResult> {
    spec.validate()?;
    output::prepare_out_dir(&spec.experiment.out_dir)?;
    simulate(spec)
}

fn aggregate(spec: &ExperimentSpec, outputs: Vec<RunOutput>) -> AggregateResult {
    let max_rounds = spec.game.max_rounds;
    let num_runs = outputs.len() as f64;
    let seeds = outputs.iter().map(|o| o.seed).collect();

    let mut results: Vec<AlgorithmResult> = spec
        .experiment
        .algorithms
        .iter()
        .enumerate()
        .map(|(a, &algorithm)| {
            let runs: Vec<RunCurve> = outputs
                .iter()
                .map(|o| RunCurve::from_trace(&o.traces[a], max_rounds))
                .collect();
            let curve = (0..=max_rounds)
                .map(|round| {
                    let (mut d2d, mut cell) = (0.0, 0.0);
                    for run in &runs {
                        d2d += run.rounds[round].0;
                        cell += run.rounds[round].1;
                    }
                    CurvePoint {
                        round,
                        mean_d2d_ee: d2d / num_runs,
                        mean_cell_ee: cell / num_runs,
                        norm_d2d_ee: 0.0,
                        norm_cell_ee: 0.0,
                    }
                })
                .collect();
            AlgorithmResult { algorithm, curve, runs }
        })
        .collect();

    let reference = results
        .iter()
        .find(|r| r.algorithm == Algorithm::EnergyEfficient)
        .unwrap_or(&results[0]);
    let normalization_reference = format!("max over rounds of {} mean D2D EE", reference.algorithm);
    let divisor = reference.curve.iter().map(|p| p.mean_d2d_ee).fold(0.0, f64::max);
    let scale = |x: f64| if divisor > 0.0 { x / divisor } else { 0.0 };
    for result in &mut results {
        for p in &mut result.curve {
            p.norm_d2d_ee = scale(p.mean_d2d_ee);
            p.norm_cell_ee = scale(p.mean_cell_ee);
        }
    }

    AggregateResult {
        algorithms: results,
        normalization_divisor: divisor,
        normalization_reference,
        seeds,
        traces: spec.experiment.verbose.then_some(outputs),
    }
}
