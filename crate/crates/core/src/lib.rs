//! Distributed energy-efficient power allocation for device-to-device (D2D)
//! links that reuse cellular uplink channels.
//!
//! Every UE (cellular or D2D pair) selfishly maximizes its own energy
//! efficiency, i.e. achievable rate per Joule, subject to a minimum-rate QoS
//! constraint and a transmit power budget. Each best response is computed by
//! a Dinkelbach fractional-programming loop whose parametric subproblem has a
//! closed-form water-filling solution. Best responses are played sequentially
//! until the power profile settles at a Nash equilibrium.
//!
//! Module map:
//!
//! * [`topology`]: scenario parameters, random UE placement and channel gains.
//! * [`scenario`]: the TOML scenario document (config, positions, gains).
//! * [`link`]: SINR, rate, power consumption and EE utilities.
//! * [`solver`]: water-filling, dual multiplier search, Dinkelbach loop.
//! * [`game`]: sequential best-response rounds and the Nash audit.
//! * [`baselines`]: spectral-efficient and random response rules.
//! * [`regimes`]: dominance-regime classification, approximate network EE
//!   and the bisection single-link EE solver.
//! * [`experiment`]: seeded Monte Carlo batches, aggregation and outputs.
//! * [`oracle`]: brute-force reference solvers used for cross-checking.

pub mod baselines;
pub mod error;
pub mod experiment;
pub mod game;
pub mod link;
pub mod oracle;
pub mod regimes;
pub mod rng;
pub mod scenario;
pub mod solver;
pub mod topology;

pub use error::{Error, Result};
pub use game::{GameConfig, GameTrace};
pub use link::PowerAllocation;
pub use solver::{BestResponse, SolverConfig};
pub use topology::{ScenarioConfig, Topology};

/// Absolute tolerance, in watts, applied to power-budget checks.
pub const FEASIBILITY_TOL: f64 = 1e-9;
