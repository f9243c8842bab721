//! The feature catalog: every channel of a flight record, grouped the way
//! the model consumes them (state x, controls u, context e0, trajectory
//! intermediates e1, angles e2, engine e3).

use super::FlightRecord;

/// One named channel of a [`FlightRecord`], in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureId {
    // State x(t)
    Altitude,
    Distance,
    FlightPathAngle,
    Tas,
    Mass,
    // Controls u(t)
    SelAltitude,
    SelSpeed,
    SelVerticalSpeed,
    Flap,
    Gear,
    SpeedBrake,
    // Context e0(t)
    Oat,
    WindPar,
    WindPerp,
    // Trajectory intermediates e1(t)
    Mach,
    Cas,
    VerticalSpeed,
    GroundSpeed,
    SelAltDiff,
    SelSpeedDiff,
    // Aircraft angles e2(t)
    Aoa,
    Pitch,
    // Engine parameters e3(t)
    N1,
    FuelFlow,
}

impl FeatureId {
    pub const ALL: [FeatureId; 24] = [
        FeatureId::Altitude,
        FeatureId::Distance,
        FeatureId::FlightPathAngle,
        FeatureId::Tas,
        FeatureId::Mass,
        FeatureId::SelAltitude,
        FeatureId::SelSpeed,
        FeatureId::SelVerticalSpeed,
        FeatureId::Flap,
        FeatureId::Gear,
        FeatureId::SpeedBrake,
        FeatureId::Oat,
        FeatureId::WindPar,
        FeatureId::WindPerp,
        FeatureId::Mach,
        FeatureId::Cas,
        FeatureId::VerticalSpeed,
        FeatureId::GroundSpeed,
        FeatureId::SelAltDiff,
        FeatureId::SelSpeedDiff,
        FeatureId::Aoa,
        FeatureId::Pitch,
        FeatureId::N1,
        FeatureId::FuelFlow,
    ];

    /// State vector features, in state order (h, d, γ, V_TAS, m).
    pub const STATE: [FeatureId; 5] = [
        FeatureId::Altitude,
        FeatureId::Distance,
        FeatureId::FlightPathAngle,
        FeatureId::Tas,
        FeatureId::Mass,
    ];

    pub const CONTROLS: [FeatureId; 6] = [
        FeatureId::SelAltitude,
        FeatureId::SelSpeed,
        FeatureId::SelVerticalSpeed,
        FeatureId::Flap,
        FeatureId::Gear,
        FeatureId::SpeedBrake,
    ];

    pub const CONTEXT: [FeatureId; 3] =
        [FeatureId::Oat, FeatureId::WindPar, FeatureId::WindPerp];

    pub const TRAJECTORY: [FeatureId; 6] = [
        FeatureId::Mach,
        FeatureId::Cas,
        FeatureId::VerticalSpeed,
        FeatureId::GroundSpeed,
        FeatureId::SelAltDiff,
        FeatureId::SelSpeedDiff,
    ];

    pub const ANGLES: [FeatureId; 2] = [FeatureId::Aoa, FeatureId::Pitch];

    pub const ENGINE: [FeatureId; 2] = [FeatureId::N1, FeatureId::FuelFlow];

    /// Stable snake_case name, used in CSV headers, schemas, stats and
    /// checkpoints.
    pub fn name(self) -> &'static str {
        match self {
            FeatureId::Altitude => "alt",
            FeatureId::Distance => "dist",
            FeatureId::FlightPathAngle => "fpa",
            FeatureId::Tas => "tas",
            FeatureId::Mass => "mass",
            FeatureId::SelAltitude => "sel_alt",
            FeatureId::SelSpeed => "sel_spd",
            FeatureId::SelVerticalSpeed => "sel_vs",
            FeatureId::Flap => "flap",
            FeatureId::Gear => "gear",
            FeatureId::SpeedBrake => "spdbrk",
            FeatureId::Oat => "oat",
            FeatureId::WindPar => "wind_par",
            FeatureId::WindPerp => "wind_perp",
            FeatureId::Mach => "mach",
            FeatureId::Cas => "cas",
            FeatureId::VerticalSpeed => "vs",
            FeatureId::GroundSpeed => "gs",
            FeatureId::SelAltDiff => "dh_sel",
            FeatureId::SelSpeedDiff => "dv_sel",
            FeatureId::Aoa => "aoa",
            FeatureId::Pitch => "pitch",
            FeatureId::N1 => "n1",
            FeatureId::FuelFlow => "fuel_flow",
        }
    }

    pub fn from_name(name: &str) -> Option<FeatureId> {
        FeatureId::ALL.iter().copied().find(|f| f.name() == name)
    }

    /// Discrete (binary or index) features bypass z-scoring: their
    /// normalization stats are fixed to mean 0, std 1.
    pub fn is_discrete(self) -> bool {
        matches!(
            self,
            FeatureId::Flap | FeatureId::Gear | FeatureId::SpeedBrake
        )
    }

    /// Read this channel from a record.
    pub fn get(self, r: &FlightRecord) -> f64 {
        match self {
            FeatureId::Altitude => r.state.h,
            FeatureId::Distance => r.state.d,
            FeatureId::FlightPathAngle => r.state.gamma,
            FeatureId::Tas => r.state.v_tas,
            FeatureId::Mass => r.state.m,
            FeatureId::SelAltitude => r.controls.h_sel,
            FeatureId::SelSpeed => r.controls.v_sel,
            FeatureId::SelVerticalSpeed => r.controls.vz_sel,
            FeatureId::Flap => r.controls.flap as f64,
            FeatureId::Gear => r.controls.gear as u8 as f64,
            FeatureId::SpeedBrake => r.controls.speed_brake as u8 as f64,
            FeatureId::Oat => r.context.t_oat,
            FeatureId::WindPar => r.context.wind_par,
            FeatureId::WindPerp => r.context.wind_perp,
            FeatureId::Mach => r.intermediates.mach,
            FeatureId::Cas => r.intermediates.v_cas,
            FeatureId::VerticalSpeed => r.intermediates.vz,
            FeatureId::GroundSpeed => r.intermediates.v_gs,
            FeatureId::SelAltDiff => r.intermediates.dh_sel,
            FeatureId::SelSpeedDiff => r.intermediates.dv_sel,
            FeatureId::Aoa => r.intermediates.alpha,
            FeatureId::Pitch => r.intermediates.theta,
            FeatureId::N1 => r.intermediates.n1,
            FeatureId::FuelFlow => r.intermediates.fuel_flow,
        }
    }
}
