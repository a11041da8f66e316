//! Physical constants and Planck units.
//!
//! All inputs are CODATA 2018 exact or recommended values. Derived Planck
//! quantities are computed from them, never hard-coded, so identities such as
//! `t_p * m_p == hbar / c^2` hold to rounding.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Planck constant, J·s (CODATA 2018, exact).
pub const PLANCK_H: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Newtonian constant of gravitation, m³·kg⁻¹·s⁻² (CODATA 2018).
pub const GRAVITATIONAL_G: f64 = 6.674_30e-11;
/// Proton mass, kg (CODATA 2018).
pub const PROTON_MASS: f64 = 1.672_621_923_69e-27;
/// Nominal solar mass, kg (IAU 2015 GM_sun / G with CODATA 2018 G).
pub const SOLAR_MASS: f64 = 1.988_47e30;

/// The hexagonal "Planck pi": arc length equals radius on a regular hexagon.
pub const PLANCK_PI: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanckUnits {
    /// Planck length, m.
    pub l_p: f64,
    /// Planck time, s.
    pub t_p: f64,
    /// Planck mass, kg.
    pub m_p: f64,
    pub h: f64,
    #[serde(rename = "G")]
    pub g: f64,
    pub c: f64,
    pub pi_p: f64,
}

impl PlanckUnits {
    pub fn hbar(&self) -> f64 {
        self.h / (2.0 * PI)
    }
}

/// Planck units built from the frozen CODATA constants.
pub fn planck_units() -> PlanckUnits {
    let (h, g, c) = (PLANCK_H, GRAVITATIONAL_G, SPEED_OF_LIGHT);
    let hbar = h / (2.0 * PI);
    PlanckUnits {
        l_p: (hbar * g / c.powi(3)).sqrt(),
        t_p: (h * g / (2.0 * PI * c.powi(5))).sqrt(),
        m_p: (h * c / (2.0 * PI * g)).sqrt(),
        h,
        g,
        c,
        pi_p: PLANCK_PI,
    }
}
