//! Physical constants and the conversions used by the dynamics code.
//!
//! Energies are carried as frequencies `E/h` in GHz, anneal times in microseconds,
//! temperatures in millikelvin.

use std::f64::consts::PI;

/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Magnetic flux quantum h/2e, Wb.
pub const FLUX_QUANTUM: f64 = 2.067_833_848e-15;

pub fn ghz_to_joule(f_ghz: f64) -> f64 {
    f_ghz * 1e9 * PLANCK
}

/// Angular frequency in rad/s for an energy given in GHz.
pub fn ghz_to_angular(f_ghz: f64) -> f64 {
    2.0 * PI * f_ghz * 1e9
}

pub fn mk_to_joule(t_mk: f64) -> f64 {
    BOLTZMANN * t_mk * 1e-3
}

/// Thermal energy `k_B T / h` in GHz.
pub fn mk_to_ghz(t_mk: f64) -> f64 {
    mk_to_joule(t_mk) / PLANCK / 1e9
}

pub fn ghz_to_mk(f_ghz: f64) -> f64 {
    ghz_to_joule(f_ghz) / BOLTZMANN * 1e3
}

/// Phase accumulated per unit of `tau` per GHz of energy over an anneal of `t_run_us`.
pub fn phase_rate(t_run_us: f64) -> f64 {
    2.0 * PI * 1e9 * t_run_us * 1e-6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        assert!((ghz_to_mk(mk_to_ghz(20.0)) - 20.0).abs() < 1e-12);
        // 20 mK is about 0.4167 GHz
        assert!((mk_to_ghz(20.0) - 0.416_7).abs() < 1e-4);
    }
}
