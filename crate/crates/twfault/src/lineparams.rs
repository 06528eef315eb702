//! Frequency-domain line quantities per segment class and the converter
//! terminal equivalent.
//!
//! Distributed parameters are taken at a single reference frequency; all
//! dispersion beyond these closed forms is owned by the behavioral filters.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-kilometre distributed line parameters at the catalog's reference
/// frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributedParams {
    /// Series resistance (Ω/km).
    pub r_ohm_per_km: f64,
    /// Series inductance (H/km).
    pub l_h_per_km: f64,
    /// Shunt capacitance (F/km).
    pub c_f_per_km: f64,
    /// Shunt conductance (S/km). Loaded but never used: the adopted
    /// approximations drop the shunt term.
    pub g_s_per_km: f64,
    /// Frequency at which the parameters were extracted (Hz).
    pub reference_frequency_hz: f64,
}

impl DistributedParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_h_per_km > 0.0) || !(self.c_f_per_km > 0.0) {
            return Err(Error::Config(format!(
                "distributed parameters need L > 0 and C > 0, got L = {}, C = {}",
                self.l_h_per_km, self.c_f_per_km
            )));
        }
        if self.r_ohm_per_km < 0.0 {
            return Err(Error::Config(format!(
                "series resistance must be non-negative, got {}",
                self.r_ohm_per_km
            )));
        }
        Ok(())
    }
}

/// Series RLC equivalent of an MMC station, valid before blocking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmcEquivalent {
    pub r_ohm: f64,
    pub l_h: f64,
    pub c_f: f64,
}

impl MmcEquivalent {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_h > 0.0) || !(self.c_f > 0.0) || !self.r_ohm.is_finite() {
            return Err(Error::Config(format!(
                "station equivalent needs finite R and L, C > 0, got R = {}, L = {}, C = {}",
                self.r_ohm, self.l_h, self.c_f
            )));
        }
        Ok(())
    }
}

/// Surge-impedance approximation in use for a segment class.
///
/// Cables keep the low-loss correction for the surge impedance; overhead
/// lines are treated as lossless. Propagation is a pure delay for both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApproximationMode {
    Lossless,
    LowLoss,
}

/// Surge impedance of a line with the requested approximation.
///
/// Lossless: real `sqrt(L/C)`, independent of `s`. Low-loss:
/// `sqrt(L/C) * (1 + R/(2 s L))`, which has a pole at DC; callers must
/// apply the DC-limit convention there.
pub fn surge_impedance(
    p: &DistributedParams,
    mode: ApproximationMode,
    s: Complex64,
) -> Result<Complex64> {
    let z0 = (p.l_h_per_km / p.c_f_per_km).sqrt();
    match mode {
        ApproximationMode::Lossless => Ok(Complex64::new(z0, 0.0)),
        ApproximationMode::LowLoss => {
            if s.norm() == 0.0 {
                return Err(Error::DcPole);
            }
            let correction = p.r_ohm_per_km / (2.0 * p.l_h_per_km);
            Ok(z0 * (Complex64::new(1.0, 0.0) + Complex64::new(correction, 0.0) / s))
        }
    }
}

/// Real lossless surge impedance `sqrt(L/C)` in Ω.
pub fn lossless_surge_impedance(p: &DistributedParams) -> f64 {
    (p.l_h_per_km / p.c_f_per_km).sqrt()
}

/// Traveling-wave propagation speed `1/sqrt(LC)` in km/s.
pub fn propagation_speed(p: &DistributedParams) -> f64 {
    1.0 / (p.l_h_per_km * p.c_f_per_km).sqrt()
}

/// Station terminal impedance `R + sL + 1/(sC)`.
///
/// The DC limit is an open circuit; callers treat `s = 0` as such rather
/// than evaluating here.
pub fn mmc_impedance(m: &MmcEquivalent, s: Complex64) -> Result<Complex64> {
    if s.norm() == 0.0 {
        return Err(Error::DcPole);
    }
    Ok(Complex64::new(m.r_ohm, 0.0) + s * m.l_h + (s * m.c_f).inv())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ohl() -> DistributedParams {
        DistributedParams {
            r_ohm_per_km: 0.872,
            l_h_per_km: 1.84e-3,
            c_f_per_km: 7.68e-9,
            g_s_per_km: 0.2e-9,
            reference_frequency_hz: 1000.0,
        }
    }

    fn cable() -> DistributedParams {
        DistributedParams {
            r_ohm_per_km: 0.102,
            l_h_per_km: 0.123e-3,
            c_f_per_km: 241e-9,
            g_s_per_km: -0.4e-9,
            reference_frequency_hz: 1000.0,
        }
    }

    #[test]
    fn lossless_surge_impedance_matches_catalog_values() {
        // sqrt(L/C) evaluated directly from the catalog entries.
        let z_ohl = surge_impedance(&ohl(), ApproximationMode::Lossless, Complex64::new(0.0, 1.0))
            .unwrap();
        assert_relative_eq!(z_ohl.re, (1.84e-3f64 / 7.68e-9).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(z_ohl.re, 489.5, max_relative = 1e-3);
        assert_eq!(z_ohl.im, 0.0);

        let z_cab = surge_impedance(&cable(), ApproximationMode::Lossless, Complex64::new(0.0, 1.0))
            .unwrap();
        assert_relative_eq!(z_cab.re, 22.6, max_relative = 1e-3);
    }

    #[test]
    fn lossless_is_frequency_independent_and_real() {
        let p = ohl();
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..100 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let w = (state >> 11) as f64 / (1u64 << 53) as f64 * 1e7 + 1.0;
            let z = surge_impedance(&p, ApproximationMode::Lossless, Complex64::new(0.0, w)).unwrap();
            assert_eq!(z.im, 0.0);
            assert_eq!(z.re, (p.l_h_per_km / p.c_f_per_km).sqrt());
        }
    }

    #[test]
    fn low_loss_with_zero_r_collapses_to_lossless() {
        let mut p = cable();
        p.r_ohm_per_km = 0.0;
        let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * 1e4);
        let lossless = surge_impedance(&p, ApproximationMode::Lossless, s).unwrap();
        let lowloss = surge_impedance(&p, ApproximationMode::LowLoss, s).unwrap();
        assert_eq!(lossless, lowloss);
    }

    #[test]
    fn low_loss_dc_is_an_error() {
        assert!(matches!(
            surge_impedance(&cable(), ApproximationMode::LowLoss, Complex64::new(0.0, 0.0)),
            Err(Error::DcPole)
        ));
    }

    #[test]
    fn low_loss_converges_to_lossless_at_high_frequency() {
        let p = cable();
        let z0 = lossless_surge_impedance(&p);
        let mut prev_gap = f64::INFINITY;
        for exp in 2..9 {
            let w = 10f64.powi(exp);
            let z = surge_impedance(&p, ApproximationMode::LowLoss, Complex64::new(0.0, w)).unwrap();
            let gap = (z.re - z0).abs();
            assert!(gap <= prev_gap);
            prev_gap = gap;
        }
        assert!(prev_gap / z0 < 1e-6);
    }

    #[test]
    fn propagation_speeds_match_catalog_values() {
        assert_relative_eq!(propagation_speed(&ohl()), 2.6605e5, max_relative = 1e-4);
        assert_relative_eq!(propagation_speed(&cable()), 1.8369e5, max_relative = 1e-4);
        assert!(propagation_speed(&ohl()) < 3.0e5);
        assert!(propagation_speed(&cable()) < 3.0e5);
    }

    #[test]
    fn unit_parameters_give_unit_speed() {
        let p = DistributedParams {
            r_ohm_per_km: 0.0,
            l_h_per_km: 1.0,
            c_f_per_km: 1.0,
            g_s_per_km: 0.0,
            reference_frequency_hz: 1.0,
        };
        assert_eq!(propagation_speed(&p), 1.0);
    }

    #[test]
    fn mmc_impedance_at_1khz() {
        let m = MmcEquivalent {
            r_ohm: 0.4,
            l_h: 8.1e-3,
            c_f: 391e-6,
        };
        let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * 1000.0);
        let z = mmc_impedance(&m, s).unwrap();
        assert_relative_eq!(z.re, 0.4, max_relative = 1e-12);
        assert_relative_eq!(z.im, 50.5, max_relative = 1e-2);
    }

    #[test]
    fn mmc_impedance_inductive_asymptote() {
        let m = MmcEquivalent {
            r_ohm: 0.4,
            l_h: 8.1e-3,
            c_f: 391e-6,
        };
        let w = 1e9;
        let s = Complex64::new(0.0, w);
        let z = mmc_impedance(&m, s).unwrap();
        let asymptote = Complex64::new(m.r_ohm, w * m.l_h);
        assert!((z - asymptote).norm() / z.norm() < 1e-6);
    }

    #[test]
    fn mmc_degenerates_to_pure_capacitor() {
        let m = MmcEquivalent {
            r_ohm: 0.0,
            l_h: 1e-300,
            c_f: 391e-6,
        };
        let s = Complex64::new(0.0, 100.0);
        let z = mmc_impedance(&m, s).unwrap();
        assert_relative_eq!(z.im, (s * m.c_f).inv().im, max_relative = 1e-9);
    }

    #[test]
    fn mmc_dc_is_an_error() {
        let m = MmcEquivalent {
            r_ohm: 0.4,
            l_h: 8.1e-3,
            c_f: 391e-6,
        };
        assert!(matches!(mmc_impedance(&m, Complex64::new(0.0, 0.0)), Err(Error::DcPole)));
    }
}
