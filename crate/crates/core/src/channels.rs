//! Fiber transmittance and the added-noise variances of loss-compensated links.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Protocol and link parameters. Defaults follow the fiber reference setup:
/// σ_A² = σ_B² = 20, pure loss, unit reconciliation efficiency, 0.2 dB/km at 1550 nm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub sigma2_a: f64,
    pub sigma2_b: f64,
    /// Alice–relay length, km.
    pub l_a: f64,
    /// Bob–relay length, km.
    pub l_b: f64,
    pub tau_a: f64,
    pub tau_b: f64,
    pub n_bar: f64,
    pub beta0: f64,
    /// Fiber attenuation, dB/km.
    pub alpha0: f64,
    /// Metadata only.
    pub wavelength_nm: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            sigma2_a: 20.0,
            sigma2_b: 20.0,
            l_a: 0.0,
            l_b: 0.0,
            tau_a: 1.0,
            tau_b: 1.0,
            n_bar: 0.0,
            beta0: 1.0,
            alpha0: 0.2,
            wavelength_nm: 1550.0,
        }
    }
}

impl ProtocolParams {
    /// Default parameters over fiber links of the given lengths.
    pub fn fiber(l_a: f64, l_b: f64) -> Result<Self> {
        Self::default().with_distances(l_a, l_b)
    }

    /// Sets both lengths and recomputes the fiber transmittances.
    pub fn with_distances(mut self, l_a: f64, l_b: f64) -> Result<Self> {
        self.tau_a = fiber_transmittance(l_a, self.alpha0)?;
        self.tau_b = fiber_transmittance(l_b, self.alpha0)?;
        self.l_a = l_a;
        self.l_b = l_b;
        Ok(self)
    }

    pub fn with_l_a(self, l_a: f64) -> Result<Self> {
        let l_b = self.l_b;
        self.with_distances(l_a, l_b)
    }

    pub fn with_l_b(self, l_b: f64) -> Result<Self> {
        let l_a = self.l_a;
        self.with_distances(l_a, l_b)
    }

    pub fn with_modulation(mut self, sigma2_a: f64, sigma2_b: f64) -> Self {
        self.sigma2_a = sigma2_a;
        self.sigma2_b = sigma2_b;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2_a >= 0.0 && self.sigma2_b >= 0.0) {
            return invalid("modulation variances must be non-negative");
        }
        if !(self.tau_a > 0.0 && self.tau_a <= 1.0 && self.tau_b >= 0.0 && self.tau_b <= 1.0) {
            return invalid("transmittances must lie in (0, 1]");
        }
        if !(self.beta0 > 0.0 && self.beta0 <= 1.0) {
            return invalid("reconciliation efficiency must lie in (0, 1]");
        }
        if !(self.n_bar >= 0.0) {
            return invalid("thermal photon number must be non-negative");
        }
        Ok(())
    }
}

/// `10^{−α·L/10}`.
pub fn fiber_transmittance(l_km: f64, alpha0: f64) -> Result<f64> {
    if !(l_km >= 0.0) || !l_km.is_finite() {
        return invalid(format!("link length must be finite and non-negative, got {l_km}"));
    }
    Ok(10f64.powf(-alpha0 * l_km / 10.0))
}

/// AWGN variance (vacuum ½) of loss `tau_a` preceded by an ideal phase-insensitive amplifier.
pub fn awgn_variance_preamp(tau_a: f64, n_bar: f64) -> f64 {
    n_bar + 1.0 - tau_a
}

/// AWGN variance (vacuum ½) when loss is compensated by teleportation over a TMSV of `s0_db`.
pub fn awgn_variance_qt(tau_a: f64, s0_db: f64) -> f64 {
    let st = tau_a.sqrt();
    st * 10f64.powf(-s0_db / 10.0) + 1.0 - st
}

/// Repeaterless capacity `−log₂(1 − τ)`.
pub fn plob_bound(tau: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&tau) {
        return invalid("PLOB bound needs tau in [0, 1)");
    }
    Ok(-(-tau).ln_1p() / std::f64::consts::LN_2)
}
