//! ISA atmosphere, exact unit conversions and airspeed conversions.
//!
//! Everything here is a pure function of its arguments; the rest of the
//! crate (data ingestion, the analytical trajectory layer, the point-mass
//! kernel) builds on these primitives. Pressure always comes from the ISA
//! profile; the recorded outside air temperature is substituted wherever
//! temperature enters directly (speed of sound, gas-law density).

use thiserror::Error;

/// Ratio of specific heats for air.
pub const GAMMA_AIR: f64 = 1.4;
/// Specific gas constant for dry air [J/(kg·K)].
pub const R_AIR: f64 = 287.05287;
/// Standard gravitational acceleration [m/s²].
pub const G0: f64 = 9.80665;
/// ISA sea-level temperature [K].
pub const SEA_LEVEL_TEMPERATURE_K: f64 = 288.15;
/// ISA sea-level pressure [Pa].
pub const SEA_LEVEL_PRESSURE_PA: f64 = 101_325.0;
/// ISA sea-level density [kg/m³] (gas law at the sea-level anchor).
pub const SEA_LEVEL_DENSITY: f64 = SEA_LEVEL_PRESSURE_PA / (R_AIR * SEA_LEVEL_TEMPERATURE_K);
/// ISA tropospheric lapse rate [K/m].
pub const LAPSE_RATE_K_PER_M: f64 = 0.0065;
/// Geopotential altitude of the tropopause [m].
pub const TROPOPAUSE_ALT_M: f64 = 11_000.0;
/// ISA temperature above the tropopause [K].
pub const TROPOPAUSE_TEMPERATURE_K: f64 =
    SEA_LEVEL_TEMPERATURE_K - LAPSE_RATE_K_PER_M * TROPOPAUSE_ALT_M;
/// Supported altitude range for the ISA model [m].
pub const ALTITUDE_RANGE_M: (f64, f64) = (-2_000.0, 20_000.0);

/// Barometric exponent g / (R·L) of the tropospheric pressure law.
const BARO_EXP: f64 = G0 / (R_AIR * LAPSE_RATE_K_PER_M);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AtmosphereError {
    #[error("temperature must be positive, got {0} K")]
    NonPositiveTemperature(f64),
    #[error("altitude {0} m outside supported range [-2000, 20000] m")]
    AltitudeOutOfRange(f64),
    #[error("airspeed must be non-negative, got {0} m/s")]
    NegativeAirspeed(f64),
    #[error("true airspeed {tas} m/s is supersonic (a = {a} m/s)")]
    Supersonic { tas: f64, a: f64 },
}

/// Atmospheric state at one point: recorded static temperature paired with
/// ISA pressure, gas-law density and the local speed of sound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtmosphereSample {
    /// Static air temperature [K].
    pub t_oat: f64,
    /// Static pressure [Pa].
    pub p: f64,
    /// Density [kg/m³].
    pub rho: f64,
    /// Speed of sound [m/s].
    pub a: f64,
}

/// Atmosphere at altitude `h` with recorded temperature `t_oat`.
pub fn atmosphere_at(h: f64, t_oat: f64) -> Result<AtmosphereSample, AtmosphereError> {
    let p = isa_pressure(h)?;
    let a = speed_of_sound(t_oat)?;
    Ok(AtmosphereSample {
        t_oat,
        p,
        rho: air_density(p, t_oat),
        a,
    })
}

/// Atmosphere at altitude `h` under pure ISA temperature.
pub fn isa_atmosphere(h: f64) -> Result<AtmosphereSample, AtmosphereError> {
    atmosphere_at(h, isa_temperature(h)?)
}

/// Speed of sound a = sqrt(γ·R·T) [m/s].
pub fn speed_of_sound(t_oat: f64) -> Result<f64, AtmosphereError> {
    if !(t_oat > 0.0) {
        return Err(AtmosphereError::NonPositiveTemperature(t_oat));
    }
    Ok((GAMMA_AIR * R_AIR * t_oat).sqrt())
}

/// ISA temperature at geopotential altitude `h` [K].
pub fn isa_temperature(h: f64) -> Result<f64, AtmosphereError> {
    check_altitude(h)?;
    Ok(isa_temperature_raw(h))
}

/// ISA static pressure at geopotential altitude `h` [Pa].
///
/// Two-segment model: linear lapse troposphere from the (288.15 K,
/// 101325 Pa) anchor up to 11 km, isothermal above.
pub fn isa_pressure(h: f64) -> Result<f64, AtmosphereError> {
    check_altitude(h)?;
    Ok(isa_pressure_raw(h))
}

/// Gas-law density ρ = p/(R·T) [kg/m³].
pub fn air_density(p: f64, t_oat: f64) -> f64 {
    p / (R_AIR * t_oat)
}

/// Mach number M = V_TAS / a(T_OAT).
pub fn mach(v_tas: f64, t_oat: f64) -> Result<f64, AtmosphereError> {
    Ok(v_tas / speed_of_sound(t_oat)?)
}

/// Calibrated airspeed from true airspeed [m/s].
///
/// Subsonic compressible (Saint-Venant) impact pressure at the local ISA
/// pressure, inverted at the sea-level ISA reference.
pub fn tas_to_cas(v_tas: f64, h: f64, t_oat: f64) -> Result<f64, AtmosphereError> {
    if v_tas < 0.0 {
        return Err(AtmosphereError::NegativeAirspeed(v_tas));
    }
    let a = speed_of_sound(t_oat)?;
    if v_tas >= a {
        return Err(AtmosphereError::Supersonic { tas: v_tas, a });
    }
    let p = isa_pressure(h)?;
    Ok(cas_from_tas_raw(v_tas, p, a))
}

/// True airspeed from calibrated airspeed [m/s]. Inverse of [`tas_to_cas`].
pub fn cas_to_tas(v_cas: f64, h: f64, t_oat: f64) -> Result<f64, AtmosphereError> {
    if v_cas < 0.0 {
        return Err(AtmosphereError::NegativeAirspeed(v_cas));
    }
    let a0 = speed_of_sound(SEA_LEVEL_TEMPERATURE_K)?;
    if v_cas >= a0 {
        return Err(AtmosphereError::Supersonic { tas: v_cas, a: a0 });
    }
    let p = isa_pressure(h)?;
    let a = speed_of_sound(t_oat)?;
    let qc = SEA_LEVEL_PRESSURE_PA * ((1.0 + v_cas * v_cas / (5.0 * a0 * a0)).powf(3.5) - 1.0);
    let m2 = 5.0 * ((qc / p + 1.0).powf(2.0 / 7.0) - 1.0);
    Ok(a * m2.sqrt())
}

/// CAS for a TAS equivalent Mach number at altitude: the "CAS target a
/// Mach target corresponds to" under current conditions.
pub fn cas_of_mach(mach: f64, h: f64, t_oat: f64) -> Result<f64, AtmosphereError> {
    let a = speed_of_sound(t_oat)?;
    tas_to_cas(mach * a, h, t_oat)
}

fn check_altitude(h: f64) -> Result<(), AtmosphereError> {
    if !(ALTITUDE_RANGE_M.0..=ALTITUDE_RANGE_M.1).contains(&h) {
        return Err(AtmosphereError::AltitudeOutOfRange(h));
    }
    Ok(())
}

// Unchecked cores, shared with the differentiable trajectory layer. The
// formulas stay valid well outside the checked band; range policy lives in
// the public wrappers and in rollout state checks.

pub(crate) fn isa_temperature_raw(h: f64) -> f64 {
    if h <= TROPOPAUSE_ALT_M {
        SEA_LEVEL_TEMPERATURE_K - LAPSE_RATE_K_PER_M * h
    } else {
        TROPOPAUSE_TEMPERATURE_K
    }
}

pub(crate) fn isa_pressure_raw(h: f64) -> f64 {
    if h <= TROPOPAUSE_ALT_M {
        let t = SEA_LEVEL_TEMPERATURE_K - LAPSE_RATE_K_PER_M * h;
        SEA_LEVEL_PRESSURE_PA * (t / SEA_LEVEL_TEMPERATURE_K).powf(BARO_EXP)
    } else {
        let p_trop = SEA_LEVEL_PRESSURE_PA
            * (TROPOPAUSE_TEMPERATURE_K / SEA_LEVEL_TEMPERATURE_K).powf(BARO_EXP);
        p_trop * (-G0 * (h - TROPOPAUSE_ALT_M) / (R_AIR * TROPOPAUSE_TEMPERATURE_K)).exp()
    }
}

/// dp/dh of the ISA pressure profile [Pa/m].
pub(crate) fn isa_pressure_slope(h: f64) -> f64 {
    let p = isa_pressure_raw(h);
    if h <= TROPOPAUSE_ALT_M {
        let t = SEA_LEVEL_TEMPERATURE_K - LAPSE_RATE_K_PER_M * h;
        -p * BARO_EXP * LAPSE_RATE_K_PER_M / t
    } else {
        -p * G0 / (R_AIR * TROPOPAUSE_TEMPERATURE_K)
    }
}

/// CAS from TAS given local pressure and local speed of sound.
///
/// The differentiable trajectory layer replays this exact operation
/// sequence on the tape, so the two paths agree bit-for-bit.
pub(crate) fn cas_from_tas_raw(v_tas: f64, p: f64, a: f64) -> f64 {
    let a0 = (GAMMA_AIR * R_AIR * SEA_LEVEL_TEMPERATURE_K).sqrt();
    let m = v_tas / a;
    let m2 = m * m;
    let t1 = 0.2 * m2 + 1.0;
    let t2 = t1.powf(3.5);
    let t3 = t2 - 1.0;
    let qc = p * t3;
    let r = qc * (1.0 / SEA_LEVEL_PRESSURE_PA) + 1.0;
    let r2 = r.powf(2.0 / 7.0);
    let r5 = 5.0 * (r2 - 1.0);
    a0 * r5.sqrt()
}

/// TAS from CAS given local pressure and local speed of sound.
pub(crate) fn tas_from_cas_raw(v_cas: f64, p: f64, a: f64) -> f64 {
    let a0 = (GAMMA_AIR * R_AIR * SEA_LEVEL_TEMPERATURE_K).sqrt();
    let qc = SEA_LEVEL_PRESSURE_PA * ((1.0 + v_cas * v_cas / (5.0 * a0 * a0)).powf(3.5) - 1.0);
    let m2 = 5.0 * ((qc / p + 1.0).powf(2.0 / 7.0) - 1.0);
    a * m2.sqrt()
}

/// Conversion factors between QAR units and SI, each with an exact inverse.
pub mod units {
    use serde::{Deserialize, Serialize};
    use std::f64::consts::PI;

    /// Metres per foot (exact).
    pub const M_PER_FT: f64 = 0.3048;
    /// Metres per second per knot (exact, 1852 m per nautical mile).
    pub const MPS_PER_KT: f64 = 1852.0 / 3600.0;
    /// Metres per second per foot-per-minute (exact).
    pub const MPS_PER_FPM: f64 = 0.3048 / 60.0;
    /// Radians per degree.
    pub const RAD_PER_DEG: f64 = PI / 180.0;
    /// Kelvin offset of the Celsius scale.
    pub const KELVIN_AT_0C: f64 = 273.15;
    /// kg/s per kg/h (exact).
    pub const KGPS_PER_KGPH: f64 = 1.0 / 3600.0;
    /// Metres per nautical mile (exact).
    pub const M_PER_NM: f64 = 1852.0;

    pub fn ft_to_m(x: f64) -> f64 {
        x * M_PER_FT
    }
    pub fn m_to_ft(x: f64) -> f64 {
        x / M_PER_FT
    }
    pub fn kt_to_mps(x: f64) -> f64 {
        x * MPS_PER_KT
    }
    pub fn mps_to_kt(x: f64) -> f64 {
        x / MPS_PER_KT
    }
    pub fn fpm_to_mps(x: f64) -> f64 {
        x * MPS_PER_FPM
    }
    pub fn mps_to_fpm(x: f64) -> f64 {
        x / MPS_PER_FPM
    }
    pub fn deg_to_rad(x: f64) -> f64 {
        x * RAD_PER_DEG
    }
    pub fn rad_to_deg(x: f64) -> f64 {
        x / RAD_PER_DEG
    }
    pub fn celsius_to_kelvin(x: f64) -> f64 {
        x + KELVIN_AT_0C
    }
    pub fn kelvin_to_celsius(x: f64) -> f64 {
        x - KELVIN_AT_0C
    }
    pub fn kgph_to_kgps(x: f64) -> f64 {
        x * KGPS_PER_KGPH
    }
    pub fn kgps_to_kgph(x: f64) -> f64 {
        x / KGPS_PER_KGPH
    }
    pub fn nm_to_m(x: f64) -> f64 {
        x * M_PER_NM
    }
    pub fn m_to_nm(x: f64) -> f64 {
        x / M_PER_NM
    }

    /// A column unit as declared by a CSV schema sidecar. `to_si` converts a
    /// raw value to SI; `from_si` is its exact inverse.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
    #[serde(rename_all = "snake_case")]
    pub enum Unit {
        Meter,
        Foot,
        NauticalMile,
        MeterPerSecond,
        Knot,
        FootPerMinute,
        Radian,
        Degree,
        Kelvin,
        Celsius,
        Kilogram,
        KilogramPerSecond,
        KilogramPerHour,
        Percent,
        Index,
        Binary,
        Dimensionless,
    }

    impl Unit {
        pub fn to_si(self, x: f64) -> f64 {
            match self {
                Unit::Foot => ft_to_m(x),
                Unit::NauticalMile => nm_to_m(x),
                Unit::Knot => kt_to_mps(x),
                Unit::FootPerMinute => fpm_to_mps(x),
                Unit::Degree => deg_to_rad(x),
                Unit::Celsius => celsius_to_kelvin(x),
                Unit::KilogramPerHour => kgph_to_kgps(x),
                _ => x,
            }
        }

        pub fn from_si(self, x: f64) -> f64 {
            match self {
                Unit::Foot => m_to_ft(x),
                Unit::NauticalMile => m_to_nm(x),
                Unit::Knot => mps_to_kt(x),
                Unit::FootPerMinute => mps_to_fpm(x),
                Unit::Degree => rad_to_deg(x),
                Unit::Celsius => kelvin_to_celsius(x),
                Unit::KilogramPerHour => kgps_to_kgph(x),
                _ => x,
            }
        }
    }
}
