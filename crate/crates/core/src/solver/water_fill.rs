//! Closed-form water-filling.
//!
//! With normalized noise `n_k = I_k / g_k` (interference plus noise over the
//! direct gain), the stationary point of the D2D Lagrangian is
//!
//! ```text
//! p_k = [ eta (1 + alpha) log2(e) / (q + eta beta) - n_k ]^+
//! ```
//!
//! so every channel shares one water level and interference lowers the
//! usable part of it.

use std::f64::consts::LOG2_E;

/// Sign of the QoS multiplier inside the cellular water level
/// `eta (1 + CELLULAR_QOS_SIGN * delta) log2(e) / (q + eta theta)`.
///
/// The cellular level carries `(1 - delta)` where the D2D level carries
/// `(1 + alpha)`. With `delta >= 0` this sign can only lower the level, so
/// the cellular subproblem enforces its QoS bound as a primal lower bound
/// instead (see `CellularLink`).
pub const CELLULAR_QOS_SIGN: f64 = -1.0;

/// Result of a water-filling step. `Unbounded` means the level is infinite
/// (`q + eta * beta == 0`) and the caller must clamp to the budget.
#[derive(Debug, Clone, PartialEq)]
pub enum WaterFill<T> {
    Filled(T),
    Unbounded,
}

impl<T> WaterFill<T> {
    pub fn filled(self) -> Option<T> {
        match self {
            WaterFill::Filled(v) => Some(v),
            WaterFill::Unbounded => None,
        }
    }
}

/// `eta * scale * log2(e) / (q + eta * price)`; `None` when the denominator
/// vanishes.
pub fn water_level(q: f64, scale: f64, price: f64, eta: f64) -> Option<f64> {
    let denom = q + eta * price;
    if denom > 0.0 {
        Some(eta * scale * LOG2_E / denom)
    } else {
        None
    }
}

pub fn water_fill_d2d(
    q: f64,
    alpha: f64,
    beta: f64,
    interference: &[f64],
    gains: &[f64],
    eta: f64,
) -> WaterFill<Vec<f64>> {
    debug_assert_eq!(interference.len(), gains.len());
    match water_level(q, 1.0 + alpha, beta, eta) {
        Some(level) => WaterFill::Filled(
            interference
                .iter()
                .zip(gains)
                .map(|(i, g)| (level - i / g).max(0.0))
                .collect(),
        ),
        None => WaterFill::Unbounded,
    }
}

pub fn water_fill_cellular(q: f64, delta: f64, theta: f64, interference: f64, gain: f64, eta: f64) -> WaterFill<f64> {
    let scale = 1.0 + CELLULAR_QOS_SIGN * delta;
    if scale <= 0.0 {
        return WaterFill::Filled(0.0);
    }
    match water_level(q, scale, theta, eta) {
        Some(level) => WaterFill::Filled((level - interference / gain).max(0.0)),
        None => WaterFill::Unbounded,
    }
}

fn sorted(noise: &[f64]) -> Vec<f64> {
    let mut n = noise.to_vec();
    n.sort_by(f64::total_cmp);
    n
}

/// Level `L` with `sum_k [L - n_k]^+ == budget`.
pub fn budget_level(noise: &[f64], budget: f64) -> f64 {
    let n = sorted(noise);
    let mut prefix = 0.0;
    for m in 1..=n.len() {
        prefix += n[m - 1];
        let level = (budget + prefix) / m as f64;
        if m == n.len() || level <= n[m] {
            return level;
        }
    }
    unreachable!("noise levels are non-empty")
}

/// Level `L` with `sum_k log2(max(L, n_k) / n_k) == rate`.
pub fn rate_level(noise: &[f64], rate: f64) -> f64 {
    let n = sorted(noise);
    if rate <= 0.0 {
        return n[0];
    }
    let mut log_prefix = 0.0;
    for m in 1..=n.len() {
        log_prefix += n[m - 1].log2();
        let level = ((rate + log_prefix) / m as f64).exp2();
        if m == n.len() || level <= n[m] {
            return level;
        }
    }
    unreachable!("noise levels are non-empty")
}

/// Rate delivered by filling every channel up to `level`.
pub fn rate_at_level(noise: &[f64], level: f64) -> f64 {
    noise.iter().map(|&n| (level.max(n) / n).log2()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fully_flooded_channels_get_nothing() {
        // Level 0.35 * log2(e) / 1 ~ 0.505 W; every I/g is 1 W.
        let p = water_fill_d2d(1.0, 0.0, 0.0, &[1.0, 2.0], &[1.0, 2.0], 0.35)
            .filled()
            .unwrap();
        assert_eq!(p, vec![0.0, 0.0]);
    }

    #[test]
    fn single_channel_value() {
        let p = water_fill_d2d(1.0, 0.0, 0.0, &[1e-7], &[1e-4], 0.35).filled().unwrap();
        let expected = 0.35 * LOG2_E - 1e-3;
        assert!((p[0] - expected).abs() < 1e-15);
        assert!((p[0] - 0.50396).abs() < 5e-5);
    }

    #[test]
    fn symmetric_channels_equal_power() {
        let p = water_fill_d2d(3.0, 0.2, 0.1, &[2e-7, 2e-7], &[1e-4, 1e-4], 0.35)
            .filled()
            .unwrap();
        assert_eq!(p[0], p[1]);
        assert!(p[0] > 0.0);
    }

    #[test]
    fn zero_price_is_unbounded() {
        assert_eq!(
            water_fill_d2d(0.0, 0.0, 0.0, &[1e-7], &[1e-4], 0.35),
            WaterFill::Unbounded
        );
        assert_eq!(
            water_fill_cellular(0.0, 0.0, 0.0, 1e-7, 1e-4, 0.35),
            WaterFill::Unbounded
        );
        assert!(matches!(
            water_fill_d2d(0.0, 0.0, 1.0, &[1e-7], &[1e-4], 0.35),
            WaterFill::Filled(_)
        ));
    }

    #[test]
    fn cellular_values() {
        assert_eq!(
            water_fill_cellular(1.0, 1.0, 0.0, 1e-7, 4e-6, 0.35),
            WaterFill::Filled(0.0)
        );
        assert_eq!(
            water_fill_cellular(0.0, 2.0, 0.0, 1e-7, 4e-6, 0.35),
            WaterFill::Filled(0.0)
        );
        let p = water_fill_cellular(1.0, 0.0, 0.0, 1e-7, 4e-6, 0.35).filled().unwrap();
        assert!((p - (0.35 * LOG2_E - 0.025)).abs() < 1e-15);
        assert!((p - 0.47996).abs() < 5e-5);
        assert_eq!(
            water_fill_cellular(1.0, 0.0, 0.0, 1.0, 1e-6, 0.35),
            WaterFill::Filled(0.0)
        );
    }

    #[test]
    fn interference_lowers_power() {
        let base = water_fill_d2d(2.0, 0.0, 0.0, &[1e-7, 1e-7], &[1e-4, 1e-5], 0.35)
            .filled()
            .unwrap();
        let more = water_fill_d2d(2.0, 0.0, 0.0, &[5e-7, 1e-7], &[1e-4, 1e-5], 0.35)
            .filled()
            .unwrap();
        assert!(more[0] <= base[0]);
        assert_eq!(more[1], base[1]);
    }

    #[test]
    fn budget_level_spends_budget() {
        let noise = [0.3, 0.01, 0.05];
        let level = budget_level(&noise, 0.2);
        let spent: f64 = noise.iter().map(|n| (level - n).max(0.0)).sum();
        assert!((spent - 0.2).abs() < 1e-15);
        // 0.3 stays dry: (0.2 + 0.06) / 2 = 0.13.
        assert!((level - 0.13).abs() < 1e-15);
    }

    #[test]
    fn rate_level_delivers_rate() {
        let noise = [1e-3, 4e-3, 1.0];
        for rate in [0.1, 0.5, 3.0, 20.0] {
            let level = rate_level(&noise, rate);
            assert!((rate_at_level(&noise, level) - rate).abs() < 1e-12, "rate {rate}");
        }
        assert_eq!(rate_level(&noise, 0.0), 1e-3);
    }
}
