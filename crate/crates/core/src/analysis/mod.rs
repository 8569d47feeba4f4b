//! Numerical checks behind exact recovery: the resolution bound, the phase
//! function θ of the kernel `FᴴF`, its stationary points, kernel estimates,
//! and empirical restricted-isometry probes.

mod kernel;
mod resolution;
mod ric;

pub use kernel::{
    closed_form_constant, kernel_asymptotic, kernel_bruteforce, sample_quads, AsymptoticKernel,
    KernelContext, KernelEstimate, KernelRegime, DEGENERACY_TOLERANCE,
};
pub use resolution::{
    check_resolution_condition, resolution_bound, transmitter_term_margin, ResolutionReport,
};
pub use ric::{empirical_ric, trace_inflation, RicProbeKind, RicProbeReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{CorrelationMode, ForwardModel};
use crate::scene::{Trajectory, Vec3};

/// Pixel indices `(k, k', l, l')` of one term of `‖F vec ρ‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexQuad {
    pub k: usize,
    pub kp: usize,
    pub l: usize,
    pub lp: usize,
}

impl IndexQuad {
    pub fn new(k: usize, kp: usize, l: usize, lp: usize) -> Self {
        Self { k, kp, l, lp }
    }

    /// `(l, l', k, k')`
    pub fn swapped(&self) -> Self {
        Self::new(self.l, self.lp, self.k, self.kp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuadClass {
    /// `k = l ∧ k' = l'`
    I1,
    /// Cross-mode complement of I1.
    I2,
    /// Phaseless only: `k = k' ∧ l = l' ∧ k ≠ l`.
    I3,
    /// Phaseless complement of `I1 ∪ I3`.
    I2Tilde,
}

impl QuadClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            QuadClass::I1 => "I1",
            QuadClass::I2 => "I2",
            QuadClass::I3 => "I3",
            QuadClass::I2Tilde => "I2~",
        }
    }
}

/// Auto-correlation mode uses the phaseless classes.
pub fn classify_quad(q: &IndexQuad, mode: CorrelationMode) -> QuadClass {
    if q.k == q.l && q.kp == q.lp {
        return QuadClass::I1;
    }
    match mode {
        CorrelationMode::Cross => QuadClass::I2,
        CorrelationMode::Auto if q.k == q.kp && q.l == q.lp => QuadClass::I3,
        CorrelationMode::Auto => QuadClass::I2Tilde,
    }
}

/// Geometry needed to evaluate θ and its derivatives along the aperture.
#[derive(Debug, Clone)]
pub struct PhaseGeometry {
    gamma1: Trajectory,
    gamma2: Trajectory,
    y_hat: Vec3,
    pixels: Vec<Vec3>,
    interval: [f64; 2],
}

/// A zero of θ̇ inside the aperture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryPoint {
    pub s: f64,
    pub theta: f64,
    pub theta_ddot: f64,
}

/// Bracketing grid used by [`PhaseGeometry::stationary_points`].
pub const STATIONARY_GRID_POINTS: usize = 2048;
/// Bisection stops once the bracket is this narrow in `s`.
pub const BISECTION_TOLERANCE: f64 = 1e-12;

// Range derivatives of |γ(s) − x| from r = γ − x.
fn range_terms(traj: &Trajectory, x: &Vec3, s: f64) -> (f64, f64, f64) {
    let r = traj.position_unchecked(s) - x;
    let g1 = traj.velocity_unchecked(s);
    let g2 = traj.acceleration_unchecked(s);
    let d = r.norm();
    let rv = r.dot(&g1);
    (
        d,
        rv / d,
        (g1.norm_squared() + r.dot(&g2)) / d - rv * rv / (d * d * d),
    )
}

impl PhaseGeometry {
    /// θ uses `γ₂ = γ₁` when the model is in auto-correlation mode.
    pub fn from_model(model: &ForwardModel) -> Result<Self> {
        model.validate()?;
        Ok(Self {
            gamma1: model.receiver(0).clone(),
            gamma2: model.receiver(1).clone(),
            y_hat: model.transmitter.direction(),
            pixels: model.scene.pixel_centers(),
            interval: model.sampling.aperture_interval(),
        })
    }

    pub fn interval(&self) -> [f64; 2] {
        self.interval
    }

    pub(crate) fn check(&self, q: &IndexQuad) -> Result<()> {
        let n = self.pixels.len();
        let worst = q.k.max(q.kp).max(q.l).max(q.lp);
        if worst >= n {
            return Err(Error::Dimension {
                context: "quad pixel index",
                expected: n,
                found: worst,
            });
        }
        Ok(())
    }

    /// `(θ, θ̇, θ̈)` at `s`, in meters per power of the aperture parameter.
    pub fn theta_derivatives(&self, s: f64, q: &IndexQuad) -> Result<(f64, f64, f64)> {
        self.check(q)?;
        let p = &self.pixels;
        let a = range_terms(&self.gamma1, &p[q.k], s);
        let b = range_terms(&self.gamma2, &p[q.kp], s);
        let c = range_terms(&self.gamma1, &p[q.l], s);
        let d = range_terms(&self.gamma2, &p[q.lp], s);
        let far = self.y_hat.dot(&(p[q.kp] - p[q.k] - p[q.lp] + p[q.l]));
        Ok((
            a.0 - b.0 - c.0 + d.0 + far,
            a.1 - b.1 - c.1 + d.1,
            a.2 - b.2 - c.2 + d.2,
        ))
    }

    /// `θ(s) = |xₖ−γ₁| − |xₖ'−γ₂| − |x_l−γ₁| + |x_l'−γ₂| + ŷ·(xₖ'−xₖ−x_l'+x_l)`
    pub fn theta(&self, s: f64, q: &IndexQuad) -> Result<f64> {
        Ok(self.theta_derivatives(s, q)?.0)
    }

    /// Zeros of θ̇ in the aperture: sign changes on a uniform grid, refined
    /// by bisection. Returns nothing when θ̇ vanishes on the whole grid.
    pub fn stationary_points(&self, q: &IndexQuad) -> Result<Vec<StationaryPoint>> {
        self.check(q)?;
        let [a, b] = self.interval;
        let n = STATIONARY_GRID_POINTS;
        let h = (b - a) / (n - 1) as f64;
        let grid: Vec<f64> = (0..n)
            .map(|i| if i == n - 1 { b } else { a + h * i as f64 })
            .collect();
        let dots: Vec<f64> = grid
            .iter()
            .map(|&s| self.theta_derivatives(s, q).map(|t| t.1))
            .collect::<Result<_>>()?;
        let scale = dots.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale <= 1e-12 {
            return Ok(Vec::new());
        }
        let mut roots = Vec::new();
        for i in 0..n - 1 {
            let (f0, f1) = (dots[i], dots[i + 1]);
            let root = if f0 == 0.0 {
                Some(grid[i])
            } else if f0.signum() != f1.signum() && f1 != 0.0 {
                let (mut lo, mut hi, mut flo) = (grid[i], grid[i + 1], f0);
                while hi - lo > BISECTION_TOLERANCE {
                    let mid = 0.5 * (lo + hi);
                    let fm = self.theta_derivatives(mid, q)?.1;
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                Some(0.5 * (lo + hi))
            } else {
                None
            };
            if let Some(s) = root {
                let (theta, _, theta_ddot) = self.theta_derivatives(s, q)?;
                roots.push(StationaryPoint {
                    s,
                    theta,
                    theta_ddot,
                });
            }
        }
        if dots[n - 1] == 0.0 {
            let (theta, _, theta_ddot) = self.theta_derivatives(b, q)?;
            roots.push(StationaryPoint {
                s: b,
                theta,
                theta_ddot,
            });
        }
        Ok(roots)
    }
}
