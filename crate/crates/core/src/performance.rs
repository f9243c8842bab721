//! Generic point-mass performance model: drag polar per configuration,
//! density-lapsed thrust ratings, TSFC fuel flow and an N1 surrogate.
//!
//! The coefficients are a configurable stand-in for a licensed performance
//! database; defaults describe a generic twin-engine narrowbody.

use crate::atmosphere::{self, G0, SEA_LEVEL_DENSITY};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PerformanceError {
    #[error("invalid performance config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Drag polar and lift-curve offset for one flap setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlapPolar {
    /// Zero-lift drag coefficient.
    pub cd0: f64,
    /// Induced drag factor (CD = cd0 + k·CL²).
    pub induced_k: f64,
    /// Zero-lift angle of attack [rad] (negative for cambered wings).
    pub alpha_zero_lift_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedEnvelope {
    pub cas_min_mps: f64,
    pub cas_max_mps: f64,
    pub mach_max: f64,
}

/// Coefficients of the generic point-mass model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceConfig {
    pub reference_mass_kg: f64,
    pub wing_area_m2: f64,
    /// Indexed by flap setting 0..=4.
    pub flap_polars: Vec<FlapPolar>,
    pub gear_cd0: f64,
    pub speedbrake_cd0: f64,
    /// Lift-curve slope dCL/dα [1/rad].
    pub cl_alpha_per_rad: f64,
    /// All-engine sea-level static thrust [N].
    pub static_thrust_n: f64,
    /// Thrust lapse exponent on the density ratio.
    pub thrust_lapse_exp: f64,
    /// Max-climb rating as a fraction of lapsed static thrust.
    pub climb_rating: f64,
    /// Max-cruise rating as a fraction of lapsed static thrust.
    pub cruise_rating: f64,
    /// Idle thrust as a fraction of lapsed static thrust.
    pub idle_fraction: f64,
    /// TSFC at Mach 0 [kg/(N·s)].
    pub tsfc_base_kg_per_n_s: f64,
    /// Relative TSFC increase per unit Mach.
    pub tsfc_mach_slope: f64,
    /// N1 at idle thrust [%RPM].
    pub n1_idle_pct: f64,
    /// Altitude correction of the N1 surrogate [%RPM per km].
    pub n1_alt_gain_pct_per_km: f64,
    pub envelope: SpeedEnvelope,
}

impl Default for PerformanceConfig {
    fn default() -> Self {
        PerformanceConfig {
            reference_mass_kg: 64_000.0,
            wing_area_m2: 122.6,
            flap_polars: vec![
                FlapPolar { cd0: 0.0215, induced_k: 0.0420, alpha_zero_lift_rad: -0.035 },
                FlapPolar { cd0: 0.0265, induced_k: 0.0440, alpha_zero_lift_rad: -0.087 },
                FlapPolar { cd0: 0.0335, induced_k: 0.0465, alpha_zero_lift_rad: -0.140 },
                FlapPolar { cd0: 0.0430, induced_k: 0.0490, alpha_zero_lift_rad: -0.175 },
                FlapPolar { cd0: 0.0560, induced_k: 0.0520, alpha_zero_lift_rad: -0.210 },
            ],
            gear_cd0: 0.0170,
            speedbrake_cd0: 0.0060,
            cl_alpha_per_rad: 5.5,
            static_thrust_n: 230_000.0,
            thrust_lapse_exp: 0.75,
            climb_rating: 0.55,
            cruise_rating: 0.50,
            idle_fraction: 0.05,
            tsfc_base_kg_per_n_s: 1.15e-5,
            tsfc_mach_slope: 0.5,
            n1_idle_pct: 22.0,
            n1_alt_gain_pct_per_km: 1.2,
            envelope: SpeedEnvelope {
                cas_min_mps: 62.0,
                cas_max_mps: 175.0,
                mach_max: 0.82,
            },
        }
    }
}

impl PerformanceConfig {
    pub fn validate(&self) -> Result<(), PerformanceError> {
        let err = |m: &str| Err(PerformanceError::Invalid(m.to_string()));
        if self.flap_polars.len() != 5 {
            return err("flap_polars must have 5 entries (settings 0..=4)");
        }
        for (i, p) in self.flap_polars.iter().enumerate() {
            if !(p.cd0 > 0.0 && p.induced_k > 0.0) {
                return Err(PerformanceError::Invalid(format!(
                    "flap polar {i} needs positive cd0/induced_k"
                )));
            }
        }
        let positives = [
            self.reference_mass_kg,
            self.wing_area_m2,
            self.cl_alpha_per_rad,
            self.static_thrust_n,
            self.climb_rating,
            self.cruise_rating,
            self.idle_fraction,
            self.tsfc_base_kg_per_n_s,
        ];
        if positives.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return err("mass/area/thrust/tsfc coefficients must be positive and finite");
        }
        if self.idle_fraction >= self.cruise_rating || self.cruise_rating > self.climb_rating {
            return err("ratings must satisfy idle < cruise <= climb");
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PerformanceError> {
        let cfg: PerformanceConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<(), PerformanceError> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// Lapsed all-engine maximum thrust at local density [N].
    pub fn max_thrust(&self, rho: f64) -> f64 {
        self.static_thrust_n * (rho / SEA_LEVEL_DENSITY).powf(self.thrust_lapse_exp)
    }

    pub fn climb_thrust(&self, rho: f64) -> f64 {
        self.climb_rating * self.max_thrust(rho)
    }

    pub fn cruise_thrust_max(&self, rho: f64) -> f64 {
        self.cruise_rating * self.max_thrust(rho)
    }

    pub fn idle_thrust(&self, rho: f64) -> f64 {
        self.idle_fraction * self.max_thrust(rho)
    }

    /// Drag and lift coefficient at quasi-equilibrium lift (L = W·cosγ).
    pub fn drag_and_cl(
        &self,
        mass_kg: f64,
        rho: f64,
        v_tas: f64,
        gamma: f64,
        flap: u8,
        gear: bool,
        speed_brake: bool,
    ) -> (f64, f64) {
        let q = 0.5 * rho * v_tas * v_tas;
        let cl = mass_kg * G0 * gamma.cos() / (q * self.wing_area_m2);
        let polar = &self.flap_polars[flap.min(4) as usize];
        let mut cd0 = polar.cd0;
        if gear {
            cd0 += self.gear_cd0;
        }
        if speed_brake {
            cd0 += self.speedbrake_cd0;
        }
        let cd = cd0 + polar.induced_k * cl * cl;
        (q * self.wing_area_m2 * cd, cl)
    }

    /// Angle of attack from the linear lift curve CL = clα·(α − α0).
    pub fn alpha(&self, cl: f64, flap: u8) -> f64 {
        let polar = &self.flap_polars[flap.min(4) as usize];
        polar.alpha_zero_lift_rad + cl / self.cl_alpha_per_rad
    }

    /// Thrust-specific fuel consumption [kg/(N·s)].
    pub fn tsfc(&self, mach: f64) -> f64 {
        self.tsfc_base_kg_per_n_s * (1.0 + self.tsfc_mach_slope * mach)
    }

    /// Fuel flow [kg/s]; `engine_mult` models per-airframe engine
    /// efficiency spread (1.0 nominal).
    pub fn fuel_flow(&self, thrust_n: f64, mach: f64, engine_mult: f64) -> f64 {
        (self.tsfc(mach) * thrust_n * engine_mult).max(0.0)
    }

    /// N1 surrogate: affine in thrust fraction between idle and 100%, with
    /// a small altitude correction; clamped to [0, 105].
    pub fn n1(&self, thrust_n: f64, rho: f64, h_m: f64) -> f64 {
        let tf = (thrust_n / self.max_thrust(rho)).clamp(0.0, 1.1);
        let n1 = self.n1_idle_pct
            + (100.0 - self.n1_idle_pct) * tf
            + self.n1_alt_gain_pct_per_km * (h_m / 1000.0);
        n1.clamp(0.0, 105.0)
    }

    /// Residual steady climb rate at a level-lift condition [m/s]; used to
    /// reject scripts whose cruise level is above the ceiling.
    pub fn residual_climb_rate(&self, h: f64, mass_kg: f64, v_tas: f64, t_oat: f64) -> f64 {
        let p = atmosphere::isa_pressure_raw(h);
        let rho = atmosphere::air_density(p, t_oat);
        let (drag, _) = self.drag_and_cl(mass_kg, rho, v_tas, 0.0, 0, false, false);
        (self.climb_thrust(rho) - drag) * v_tas / (mass_kg * G0)
    }

    /// Coherently perturbed copy: drag and TSFC up by `frac`, thrust down by
    /// `frac`. Used for model-mismatch studies.
    pub fn perturbed(&self, frac: f64) -> PerformanceConfig {
        let mut cfg = self.clone();
        for p in &mut cfg.flap_polars {
            p.cd0 *= 1.0 + frac;
            p.induced_k *= 1.0 + frac;
        }
        cfg.static_thrust_n *= 1.0 - frac;
        cfg.tsfc_base_kg_per_n_s *= 1.0 + frac;
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn defaults_validate() {
        PerformanceConfig::default().validate().unwrap();
    }

    #[test]
    fn thrust_lapses_with_altitude() {
        let cfg = PerformanceConfig::default();
        let rho_sl = SEA_LEVEL_DENSITY;
        let rho_fl350 = 0.38;
        assert!(cfg.max_thrust(rho_fl350) < 0.6 * cfg.max_thrust(rho_sl));
        assert_relative_eq!(cfg.max_thrust(rho_sl), cfg.static_thrust_n, max_relative = 1e-12);
    }

    #[test]
    fn level_trim_numbers_are_plausible() {
        // Mid-weight cruise at FL350, M0.78: drag in the tens of kN and
        // well under the cruise thrust bound.
        let cfg = PerformanceConfig::default();
        let rho = 0.38;
        let (drag, cl) = cfg.drag_and_cl(62_000.0, rho, 232.0, 0.0, 0, false, false);
        assert!((0.3..0.7).contains(&cl), "CL = {cl}");
        assert!((30_000.0..60_000.0).contains(&drag), "drag = {drag}");
        assert!(drag < cfg.cruise_thrust_max(rho));
        // Fuel flow near cruise thrust is on the order of 1 kg/s.
        let ff = cfg.fuel_flow(drag, 0.78, 1.0);
        assert!((0.4..1.4).contains(&ff), "fuel flow = {ff}");
    }

    #[test]
    fn configuration_drag_increments_add_up() {
        let cfg = PerformanceConfig::default();
        let rho = 1.1;
        let (clean, _) = cfg.drag_and_cl(60_000.0, rho, 80.0, 0.0, 0, false, false);
        let (flaps, _) = cfg.drag_and_cl(60_000.0, rho, 80.0, 0.0, 3, false, false);
        let (dirty, _) = cfg.drag_and_cl(60_000.0, rho, 80.0, 0.0, 3, true, true);
        assert!(clean < flaps && flaps < dirty);
    }

    #[test]
    fn fuel_from_constant_tsfc_stub() {
        // With the Mach slope zeroed the one-step fuel is exactly
        // tsfc * thrust * dt.
        let mut cfg = PerformanceConfig::default();
        cfg.tsfc_mach_slope = 0.0;
        let burn = cfg.fuel_flow(100_000.0, 0.5, 1.0) * 4.0;
        assert_relative_eq!(
            burn,
            cfg.tsfc_base_kg_per_n_s * 100_000.0 * 4.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn n1_is_affine_in_thrust_fraction_and_clamped() {
        let cfg = PerformanceConfig::default();
        let rho = 1.0;
        let tmax = cfg.max_thrust(rho);
        let lo = cfg.n1(cfg.idle_fraction * tmax, rho, 0.0);
        let mid = cfg.n1(0.5 * tmax, rho, 0.0);
        let hi = cfg.n1(tmax, rho, 0.0);
        assert!(lo < mid && mid < hi);
        assert_relative_eq!(hi, 100.0, epsilon = 1e-9);
        // Affine: midpoint of idle and max fractions.
        let expected_mid = cfg.n1_idle_pct + (100.0 - cfg.n1_idle_pct) * 0.5;
        assert_relative_eq!(mid, expected_mid, epsilon = 1e-9);
        assert!(cfg.n1(2.0 * tmax, rho, 0.0) <= 105.0);
        // Altitude correction raises N1 at altitude for equal fraction.
        assert!(cfg.n1(0.5 * tmax, rho, 10_000.0) > mid);
    }

    #[test]
    fn perturbation_direction_is_coherent() {
        let cfg = PerformanceConfig::default();
        let worse = cfg.perturbed(0.03);
        assert!(worse.flap_polars[0].cd0 > cfg.flap_polars[0].cd0);
        assert!(worse.static_thrust_n < cfg.static_thrust_n);
        assert!(worse.tsfc_base_kg_per_n_s > cfg.tsfc_base_kg_per_n_s);
        assert!(worse.residual_climb_rate(9_000.0, 62_000.0, 220.0, 230.0)
            < cfg.residual_climb_rate(9_000.0, 62_000.0, 220.0, 230.0));
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::TempDir::new().unwrap();
        let p = dir.path().join("perf.json");
        let cfg = PerformanceConfig::default();
        cfg.save(&p).unwrap();
        assert_eq!(PerformanceConfig::load(&p).unwrap(), cfg);
    }
}
