use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{elevation_angle, SceneGrid, TransmitterModel};
use crate::SPEED_OF_LIGHT;

/// `c₀ / (ω_c |cos α − 1|)` in meters. `ω_c` in rad/s, `α` in radians.
///
/// Returns `+∞` (with a warning) when `α = 0`, where the bound diverges.
pub fn resolution_bound(omega_c: f64, alpha: f64) -> Result<f64> {
    if !(omega_c > 0.0) || !omega_c.is_finite() {
        return Err(Error::OutOfRange {
            what: "center frequency (rad/s)",
            value: omega_c,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&alpha) {
        return Err(Error::OutOfRange {
            what: "elevation angle (rad)",
            value: alpha,
            min: 0.0,
            max: std::f64::consts::FRAC_PI_2,
        });
    }
    let gap = (alpha.cos() - 1.0).abs();
    if gap == 0.0 {
        warn!("elevation angle is zero; resolution bound diverges");
        return Ok(f64::INFINITY);
    }
    Ok(SPEED_OF_LIGHT / (omega_c * gap))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionReport {
    pub center_frequency_hz: f64,
    pub elevation_angle_deg: f64,
    pub pixel_spacing_m: f64,
    pub bound_m: f64,
    pub ratio: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Compares the grid spacing against [`resolution_bound`] for the elevation
/// of `tx` seen from the scene; passes when `Δx / bound ≥ margin`.
pub fn check_resolution_condition(
    grid: &SceneGrid,
    tx: &TransmitterModel,
    omega_c: f64,
    margin: f64,
) -> Result<ResolutionReport> {
    if !(margin > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "margin must be positive, got {margin}"
        )));
    }
    let alpha = elevation_angle(tx, grid)?;
    let bound = resolution_bound(omega_c, alpha)?;
    let dx = grid.pixel_spacing();
    let ratio = dx / bound;
    Ok(ResolutionReport {
        center_frequency_hz: omega_c / (2.0 * std::f64::consts::PI),
        elevation_angle_deg: alpha.to_degrees(),
        pixel_spacing_m: dx,
        bound_m: bound,
        ratio,
        margin,
        pass: ratio >= margin,
    })
}

/// Transmitter part of θ for the pair `(k, l)`: `| |d| − ŷ·d |` with
/// `d = x_l − x_k`. Over flat ground this is at least `|d| |1 − cos α|`.
pub fn transmitter_term_margin(tx: &TransmitterModel, grid: &SceneGrid, k: usize, l: usize) -> f64 {
    let d = grid.pixel_center(l) - grid.pixel_center(k);
    (d.norm() - tx.direction().dot(&d)).abs()
}
