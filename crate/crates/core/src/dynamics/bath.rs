//! Flux-noise bath: a 1/f low-frequency part plus an ohmic high-frequency part.

use serde::{Deserialize, Serialize};

use super::units::{ghz_to_angular, mk_to_joule, FLUX_QUANTUM, HBAR};
use crate::error::{Error, Result};

/// Bath parameters as read from JSON.
///
/// `A_1f` is in units of nano flux quanta, `omega_c` and `omega_ir` are angular
/// frequencies given as `omega / 2 pi` in GHz, `Ip_of_tau` is a table of
/// `[tau, I_p in uA]` pairs interpolated linearly (constant `Ip0_uA` when absent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    pub eta: f64,
    #[serde(rename = "A_1f")]
    pub a_1f: f64,
    pub alpha: f64,
    pub omega_c: f64,
    #[serde(rename = "T_mK")]
    pub t_mk: f64,
    #[serde(rename = "Ip0_uA")]
    pub ip0_ua: f64,
    #[serde(rename = "Ip_of_tau", default, skip_serializing_if = "Option::is_none")]
    pub ip_of_tau: Option<Vec<[f64; 2]>>,
    /// Below this frequency the `|omega|^-alpha` factor is held constant.
    #[serde(default = "default_omega_ir")]
    pub omega_ir: f64,
}

fn default_omega_ir() -> f64 {
    1e-3
}

impl Default for BathParams {
    fn default() -> Self {
        BathParams {
            eta: 0.4,
            a_1f: 3.0,
            alpha: 1.0,
            omega_c: 10.0,
            t_mk: 20.0,
            ip0_ua: 1.0,
            ip_of_tau: None,
            omega_ir: default_omega_ir(),
        }
    }
}

impl BathParams {
    /// No coupling to the environment.
    pub fn decoupled() -> Self {
        BathParams {
            eta: 0.0,
            a_1f: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::validation(format!("bath: {m}")));
        if !(self.eta >= 0.0) {
            return bad("eta must be >= 0");
        }
        if !(self.t_mk > 0.0) {
            return bad("T_mK must be > 0");
        }
        if !(self.omega_c > 0.0) {
            return bad("omega_c must be > 0");
        }
        if !(self.omega_ir > 0.0) {
            return bad("omega_ir must be > 0");
        }
        if !(self.a_1f >= 0.0) || !self.alpha.is_finite() {
            return bad("A_1f must be >= 0 and alpha finite");
        }
        if !(self.ip0_ua > 0.0) {
            return bad("Ip0_uA must be > 0");
        }
        if let Some(t) = &self.ip_of_tau {
            if t.is_empty() || t.windows(2).any(|w| w[1][0] <= w[0][0]) {
                return bad("Ip_of_tau must be a nonempty table with increasing tau");
            }
            if t.iter().any(|r| !(r[1] >= 0.0)) {
                return bad("Ip_of_tau currents must be >= 0");
            }
        }
        Ok(())
    }

    pub fn is_decoupled(&self) -> bool {
        self.eta == 0.0 && self.a_1f == 0.0
    }

    fn kt(&self) -> f64 {
        mk_to_joule(self.t_mk)
    }

    /// Persistent current in amperes.
    pub fn ip(&self, tau: f64) -> f64 {
        let ua = match &self.ip_of_tau {
            None => self.ip0_ua,
            Some(t) => {
                let k = t.partition_point(|r| r[0] <= tau);
                if k == 0 {
                    t[0][1]
                } else if k == t.len() {
                    t[k - 1][1]
                } else {
                    let (a, b) = (t[k - 1], t[k]);
                    a[1] + (tau - a[0]) / (b[0] - a[0]) * (b[1] - a[1])
                }
            }
        };
        ua * 1e-6
    }

    /// `hbar omega / (1 - exp(-hbar omega / kT))`, continuous at zero.
    fn bose_factor(&self, omega: f64) -> f64 {
        let kt = self.kt();
        let x = HBAR * omega / kt;
        if x.abs() < 1e-8 {
            kt * (1.0 + x / 2.0)
        } else {
            HBAR * omega / -(-x).exp_m1()
        }
    }

    /// Low-frequency flux noise, Wb^2 s.
    pub fn s_lf(&self, omega: f64) -> f64 {
        if self.a_1f == 0.0 {
            return 0.0;
        }
        let amp = self.a_1f * 1e-9 * FLUX_QUANTUM;
        let w = omega.abs().max(ghz_to_angular(self.omega_ir));
        amp * amp / self.kt() * self.bose_factor(omega) * w.powf(-self.alpha)
    }

    /// Ohmic high-frequency flux noise, Wb^2 s.
    pub fn s_hf(&self, omega: f64) -> f64 {
        if self.eta == 0.0 {
            return 0.0;
        }
        let ip0 = self.ip0_ua * 1e-6;
        let wc = ghz_to_angular(self.omega_c);
        HBAR / (4.0 * ip0 * ip0) * self.eta * self.bose_factor(omega) * (-omega.abs() / wc).exp()
    }

    pub fn s_phi(&self, omega: f64) -> f64 {
        self.s_lf(omega) + self.s_hf(omega)
    }

    /// `S(omega) = 4 I_p^2 S_Phi(omega)`, J^2 s.
    pub fn spectral_density(&self, omega: f64, tau: f64) -> f64 {
        let ip = self.ip(tau);
        4.0 * ip * ip * self.s_phi(omega)
    }

    /// `S(omega) / hbar^2`, in 1/s.
    pub fn rate(&self, omega: f64, tau: f64) -> f64 {
        self.spectral_density(omega, tau) / (HBAR * HBAR)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kms_ratio() {
        let b = BathParams::default();
        for f in [0.01, 0.3, 1.0, 4.0] {
            let w = ghz_to_angular(f);
            let ratio = b.spectral_density(w, 0.5) / b.spectral_density(-w, 0.5);
            let want = (HBAR * w / b.kt()).exp();
            assert!((ratio / want - 1.0).abs() < 1e-10, "{f}: {ratio} vs {want}");
        }
    }

    #[test]
    fn one_over_f_asymptote() {
        let b = BathParams {
            eta: 0.0,
            ..Default::default()
        };
        let w = ghz_to_angular(1e-2);
        let amp = 3e-9 * FLUX_QUANTUM;
        let ip = 1e-6;
        let want = amp * amp * 4.0 * ip * ip / w;
        let got = b.spectral_density(w, 0.0);
        assert!((got / want - 1.0).abs() < 0.05, "{got} vs {want}");
    }

    #[test]
    fn persistent_current_table() {
        let b = BathParams {
            ip_of_tau: Some(vec![[0.0, 0.5], [1.0, 1.5]]),
            ..Default::default()
        };
        assert!((b.ip(0.5) - 1e-6).abs() < 1e-18);
        assert_eq!(b.ip(2.0), 1.5e-6);
    }
}
