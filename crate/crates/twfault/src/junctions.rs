//! Reflection and transmission coefficients at media changes, station
//! terminals, line ends, and the fault point.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Reflection/transmission pair at one interface and one frequency.
/// `T = 1 + K` holds exactly by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientPair {
    pub k: Complex64,
    pub t: Complex64,
}

/// Coefficients for a wave arriving on a branch of characteristic
/// admittance `y_in` at a node whose other branches have admittances
/// `others` (line branches and, where present, the station branch).
///
/// `K = (Y0 - Σ Yl) / (Y0 + Σ Yl)` and `T = 2 Y0 / (Y0 + Σ Yl)`.
/// A line end (`others` empty) gives `K = 1, T = 2`.
pub fn junction_coefficients(y_in: Complex64, others: &[Complex64]) -> Result<CoefficientPair> {
    let sum_others: Complex64 = others.iter().sum();
    let total = y_in + sum_others;
    if total.norm() == 0.0 {
        return Err(Error::SingularNode);
    }
    let k = (y_in - sum_others) / total;
    Ok(CoefficientPair { k, t: k + 1.0 })
}

/// Real coefficients at the fault point for a wave arriving on one of the
/// two split edges: reflection `-Zs/(Zs + 2 R_f)` and transmission
/// `2 R_f/(Zs + 2 R_f)`. A bolted fault (`R_f = 0`) gives `(-1, 0)`.
pub fn fault_coefficients(zs_ohm: f64, r_f_ohm: f64) -> CoefficientPair {
    let (k, t) = if r_f_ohm == 0.0 {
        (-1.0, 0.0)
    } else {
        let denom = zs_ohm + 2.0 * r_f_ohm;
        (-zs_ohm / denom, 2.0 * r_f_ohm / denom)
    };
    CoefficientPair {
        k: Complex64::new(k, 0.0),
        t: Complex64::new(t, 0.0),
    }
}

/// Common derivative of the fault coefficients with respect to `R_f`:
/// `dK/dR_f = dT/dR_f = 2 Zs/(Zs + 2 R_f)^2`.
pub fn fault_coefficient_derivative(zs_ohm: f64, r_f_ohm: f64) -> f64 {
    let denom = zs_ohm + 2.0 * r_f_ohm;
    2.0 * zs_ohm / (denom * denom)
}

/// Initial fault surge: a step of amplitude `K_f(R_f) * V_bf` released at
/// `t_f`. The `1/s` pole of the step excitation is never materialized; the
/// synthesis stage realizes the step in the time domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurgeStep {
    pub amplitude_v: f64,
    pub t_f_s: f64,
}

pub fn initial_surge(v_bf_v: f64, t_f_s: f64, zs_ohm: f64, r_f_ohm: f64) -> SurgeStep {
    let kf = fault_coefficients(zs_ohm, r_f_ohm).k.re;
    SurgeStep {
        amplitude_v: kf * v_bf_v,
        t_f_s,
    }
}
