//! Poincaré half-plane distance and the extended metric on X × (0, ∞).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the upper half plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlanePoint {
    pub re: f64,
    pub im: f64,
}

impl HalfPlanePoint {
    pub fn new(re: f64, im: f64) -> Self {
        HalfPlanePoint { re, im }
    }
}

/// Hyperbolic distance between two points of the upper half plane.
///
/// With s = |z - w| and t = |z - w̄| the distance is log((t + s)/(t - s)).
/// Since t² - s² = 4·im(z)·im(w) exactly, this equals
/// log1p(s·(t + s) / (2·im(z)·im(w))), which stays accurate when the points
/// are close (s ≪ t) where the plain ratio cancels.
pub fn poincare(z: HalfPlanePoint, w: HalfPlanePoint) -> Result<f64> {
    if !(z.im > 0.0 && w.im > 0.0) {
        return Err(Error::domain(format!(
            "imaginary parts must be positive, got {} and {}",
            z.im, w.im
        )));
    }
    let dx = z.re - w.re;
    let s = dx.hypot(z.im - w.im);
    let t = dx.hypot(z.im + w.im);
    Ok((s * (t + s) / (2.0 * z.im * w.im)).ln_1p())
}

/// A point (x, a) of the extended space: base point x ≥ 0 and height a > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendedPoint {
    pub base: f64,
    pub height: f64,
}

impl ExtendedPoint {
    pub fn new(base: f64, height: f64) -> Result<Self> {
        if !(height > 0.0) || !height.is_finite() {
            return Err(Error::domain(format!("height must be positive, got {height}")));
        }
        if !base.is_finite() {
            return Err(Error::domain("base point must be finite"));
        }
        Ok(ExtendedPoint { base, height })
    }
}

/// d̂((x, a), (y, b)) = θ(i·a, d(x, y) + i·b).
pub fn extended_distance(p: ExtendedPoint, q: ExtendedPoint) -> Result<f64> {
    poincare(
        HalfPlanePoint::new(0.0, p.height),
        HalfPlanePoint::new((p.base - q.base).abs(), q.height),
    )
}
