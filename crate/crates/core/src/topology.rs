//! Scenario parameters and random single-cell topologies.
//!
//! The base station sits at the origin. Cellular UEs and D2D transmitters are
//! uniform over the cell disk; each D2D receiver is uniform over a disk of
//! radius `d2d_max_distance` around its transmitter, redrawn until it falls
//! inside the cell. Every link gain is `d^-2 * |h|^2` with `h ~ CN(0, 1)`
//! drawn independently per (transmitter, receiver, channel).

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::SolverConfig;

pub type Point = [f64; 2];

/// Physical and solver parameters of one scenario. Defaults are the
/// reference simulation values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Cell radius, meters.
    pub cell_radius: f64,
    /// Maximum transmitter/receiver separation of a D2D pair, meters.
    pub d2d_max_distance: f64,
    pub num_d2d_pairs: usize,
    pub num_cellular: usize,
    /// Per-D2D-transmitter budget summed over channels, watts.
    pub p_d2d_max: f64,
    /// Per-cellular-UE budget, watts.
    pub p_cell_max: f64,
    /// Circuit power of a single device, watts.
    pub p_cir: f64,
    /// Thermal noise power, watts.
    pub noise_power: f64,
    /// Power amplifier efficiency, in (0, 1).
    pub pa_efficiency: f64,
    /// Minimum D2D rate, bit/s/Hz.
    pub qos_d2d: f64,
    /// Minimum cellular rate, bit/s/Hz.
    pub qos_cell: f64,
    #[serde(with = "crate::rng::seed_format")]
    pub seed: u64,
    pub solver: SolverConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            cell_radius: 500.0,
            d2d_max_distance: 25.0,
            num_d2d_pairs: 5,
            num_cellular: 3,
            p_d2d_max: 0.2,
            p_cell_max: 0.2,
            p_cir: 0.01,
            noise_power: 1e-7,
            pa_efficiency: 0.35,
            qos_d2d: 0.5,
            qos_cell: 0.1,
            seed: 0,
            solver: SolverConfig::default(),
        }
    }
}

fn positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite and > 0, got {value}")))
    }
}

fn non_negative(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite and >= 0, got {value}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        positive("cell_radius", self.cell_radius)?;
        positive("d2d_max_distance", self.d2d_max_distance)?;
        if self.num_d2d_pairs < 1 {
            return Err(Error::config("num_d2d_pairs", "must be >= 1"));
        }
        if self.num_cellular < 1 {
            return Err(Error::config("num_cellular", "must be >= 1"));
        }
        positive("p_d2d_max", self.p_d2d_max)?;
        positive("p_cell_max", self.p_cell_max)?;
        positive("p_cir", self.p_cir)?;
        positive("noise_power", self.noise_power)?;
        if !(self.pa_efficiency > 0.0 && self.pa_efficiency < 1.0) {
            return Err(Error::config(
                "pa_efficiency",
                format!("must lie in (0, 1), got {}", self.pa_efficiency),
            ));
        }
        non_negative("qos_d2d", self.qos_d2d)?;
        non_negative("qos_cell", self.qos_cell)?;
        self.solver.validate()
    }
}

/// UE positions and every channel gain of one scenario realization.
///
/// Tensor layouts follow the link notation: `g_direct[i][k]` is pair `i` on
/// channel `k`, `g_cell2d2d[k][i]` is cellular UE `k` into D2D receiver `i`,
/// `g_d2d2d2d[j][i][k]` is D2D transmitter `j` into D2D receiver `i` on
/// channel `k` (the `j == i` diagonal is unused and stored as zero),
/// `g_cell2bs[k]` is cellular UE `k` to the BS and `g_d2d2bs[i][k]` is D2D
/// transmitter `i` into the BS on channel `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub bs_position: Point,
    pub cell_positions: Vec<Point>,
    pub d2d_tx_positions: Vec<Point>,
    pub d2d_rx_positions: Vec<Point>,
    pub g_direct: Vec<Vec<f64>>,
    pub g_cell2d2d: Vec<Vec<f64>>,
    pub g_d2d2d2d: Vec<Vec<Vec<f64>>>,
    pub g_cell2bs: Vec<f64>,
    pub g_d2d2bs: Vec<Vec<f64>>,
}

impl Topology {
    pub fn num_d2d(&self) -> usize {
        self.g_direct.len()
    }

    pub fn num_cellular(&self) -> usize {
        self.g_cell2bs.len()
    }

    /// Checks tensor shapes against `(n, k)` and that every used gain is
    /// positive and finite. Does not check geometry.
    pub fn check_gains(&self, n: usize, k: usize) -> Result<()> {
        fn shape(field: &str, got: usize, want: usize) -> Result<()> {
            if got == want {
                Ok(())
            } else {
                Err(Error::config(field, format!("expected length {want}, got {got}")))
            }
        }
        fn gain(field: &str, g: f64) -> Result<()> {
            if g.is_finite() && g > 0.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("gain must be finite and > 0, got {g}")))
            }
        }

        shape("cell_positions", self.cell_positions.len(), k)?;
        shape("d2d_tx_positions", self.d2d_tx_positions.len(), n)?;
        shape("d2d_rx_positions", self.d2d_rx_positions.len(), n)?;
        shape("g_direct", self.g_direct.len(), n)?;
        for row in &self.g_direct {
            shape("g_direct", row.len(), k)?;
            row.iter().try_for_each(|&g| gain("g_direct", g))?;
        }
        shape("g_cell2d2d", self.g_cell2d2d.len(), k)?;
        for row in &self.g_cell2d2d {
            shape("g_cell2d2d", row.len(), n)?;
            row.iter().try_for_each(|&g| gain("g_cell2d2d", g))?;
        }
        shape("g_d2d2d2d", self.g_d2d2d2d.len(), n)?;
        for (j, plane) in self.g_d2d2d2d.iter().enumerate() {
            shape("g_d2d2d2d", plane.len(), n)?;
            for (i, row) in plane.iter().enumerate() {
                shape("g_d2d2d2d", row.len(), k)?;
                if i != j {
                    row.iter().try_for_each(|&g| gain("g_d2d2d2d", g))?;
                } else if row.iter().any(|&g| g != 0.0) {
                    return Err(Error::config("g_d2d2d2d", "diagonal entries must be zero"));
                }
            }
        }
        shape("g_cell2bs", self.g_cell2bs.len(), k)?;
        self.g_cell2bs.iter().try_for_each(|&g| gain("g_cell2bs", g))?;
        shape("g_d2d2bs", self.g_d2d2bs.len(), n)?;
        for row in &self.g_d2d2bs {
            shape("g_d2d2bs", row.len(), k)?;
            row.iter().try_for_each(|&g| gain("g_d2d2bs", g))?;
        }
        Ok(())
    }

    /// Full invariant check, geometry included.
    pub fn validate(&self, config: &ScenarioConfig) -> Result<()> {
        self.check_gains(config.num_d2d_pairs, config.num_cellular)?;
        let inside = |p: &Point| distance(p, &self.bs_position) <= config.cell_radius;
        if !self.cell_positions.iter().all(inside) {
            return Err(Error::config("cell_positions", "UE outside the cell"));
        }
        if !self.d2d_tx_positions.iter().chain(&self.d2d_rx_positions).all(inside) {
            return Err(Error::config("d2d_positions", "UE outside the cell"));
        }
        for (tx, rx) in self.d2d_tx_positions.iter().zip(&self.d2d_rx_positions) {
            if distance(tx, rx) > config.d2d_max_distance {
                return Err(Error::config(
                    "d2d_rx_positions",
                    "pair separation exceeds d2d_max_distance",
                ));
            }
        }
        Ok(())
    }
}

pub fn distance(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Large-scale gain `distance^-2 * fading_power`.
pub fn channel_gain(distance: f64, fading_power: f64) -> Result<f64> {
    if !(distance.is_finite() && distance > 0.0) {
        return Err(Error::Domain(format!("distance must be > 0, got {distance}")));
    }
    if fading_power.is_nan() || fading_power < 0.0 {
        return Err(Error::Domain(format!("fading power must be >= 0, got {fading_power}")));
    }
    Ok(fading_power / (distance * distance))
}

/// `|h|^2` for `h ~ CN(0, 1)`: real and imaginary parts each `N(0, 1/2)`.
pub fn draw_fading_power<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let power = 0.5 * (re * re + im * im);
        if power > 0.0 {
            return power;
        }
    }
}

fn uniform_in_disk<R: Rng + ?Sized>(rng: &mut R, center: Point, radius: f64) -> Point {
    let r = radius * rng.gen::<f64>().sqrt();
    let theta = 2.0 * PI * rng.gen::<f64>();
    [center[0] + r * theta.cos(), center[1] + r * theta.sin()]
}

fn draw_gain<R: Rng + ?Sized>(rng: &mut R, from: &Point, to: &Point) -> f64 {
    let fading = draw_fading_power(rng);
    // Distinct continuous draws coincide with probability zero.
    channel_gain(distance(from, to), fading).expect("linked points coincide")
}

/// Draws a topology. Consumes `rng` in a fixed order: cellular positions,
/// then D2D pairs (transmitter, receiver) by index, then fading for
/// `g_direct`, `g_cell2d2d`, `g_d2d2d2d`, `g_cell2bs`, `g_d2d2bs` in row-major
/// order.
pub fn generate_topology<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<Topology> {
    config.validate()?;
    let n = config.num_d2d_pairs;
    let k = config.num_cellular;
    let bs: Point = [0.0, 0.0];
    let radius = config.cell_radius;

    let away_from_bs = |rng: &mut R| loop {
        let p = uniform_in_disk(rng, bs, radius);
        if distance(&p, &bs) > 0.0 {
            return p;
        }
    };

    let cell_positions: Vec<Point> = (0..k).map(|_| away_from_bs(rng)).collect();
    let mut d2d_tx_positions = Vec::with_capacity(n);
    let mut d2d_rx_positions = Vec::with_capacity(n);
    for _ in 0..n {
        let tx = away_from_bs(rng);
        let rx = loop {
            let rx = uniform_in_disk(rng, tx, config.d2d_max_distance);
            let d_bs = distance(&rx, &bs);
            if d_bs <= radius && d_bs > 0.0 && distance(&rx, &tx) > 0.0 {
                break rx;
            }
        };
        d2d_tx_positions.push(tx);
        d2d_rx_positions.push(rx);
    }

    let g_direct = (0..n)
        .map(|i| {
            (0..k)
                .map(|_| draw_gain(rng, &d2d_tx_positions[i], &d2d_rx_positions[i]))
                .collect()
        })
        .collect();
    let g_cell2d2d = (0..k)
        .map(|c| {
            (0..n)
                .map(|i| draw_gain(rng, &cell_positions[c], &d2d_rx_positions[i]))
                .collect()
        })
        .collect();
    let g_d2d2d2d = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| {
                    (0..k)
                        .map(|_| {
                            if i == j {
                                0.0
                            } else {
                                draw_gain(rng, &d2d_tx_positions[j], &d2d_rx_positions[i])
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let g_cell2bs = (0..k).map(|c| draw_gain(rng, &cell_positions[c], &bs)).collect();
    let g_d2d2bs = (0..n)
        .map(|i| (0..k).map(|_| draw_gain(rng, &d2d_tx_positions[i], &bs)).collect())
        .collect();

    Ok(Topology {
        bs_position: bs,
        cell_positions,
        d2d_tx_positions,
        d2d_rx_positions,
        g_direct,
        g_cell2d2d,
        g_d2d2d2d,
        g_cell2bs,
        g_d2d2bs,
    })
}
