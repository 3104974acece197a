//! Link scenarios and distance frontiers: how Alice's loss is handled, the
//! resulting rate at one point, and the maximum secure distance along an axis.

use serde::{Deserialize, Serialize};

use crate::channels::{awgn_variance_preamp, awgn_variance_qt, fiber_transmittance, ProtocolParams};
use crate::error::{invalid, Error, Result};
use crate::finite_size::{composable_from_state, FiniteSizeParams};
use crate::gkp::{concat_variance, optimize_squeezing, Ancilla};
use crate::security::{conditioned_state, rate_from_state, AliceLink, RateReport};

/// Resolution of [`max_secure_distance`], km.
pub const DISTANCE_RESOLUTION_KM: f64 = 0.01;
const SCAN_STEPS: usize = 128;

/// Treatment of Alice's lossy link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compensation {
    /// Plain loss.
    None,
    /// Ideal phase-insensitive pre-amplifier.
    Preamp,
    /// Pre-amplifier followed by GKP correction, optionally concatenated.
    Gkp,
    /// Teleportation over a finitely squeezed TMSV, then GKP correction.
    QtGkp,
}

/// Alice-side link model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec {
    pub compensation: Compensation,
    pub ancilla: Ancilla,
    /// Code layers `C`, equally spaced over `L_A`.
    pub layers: u32,
    /// TMSV squeezing for teleportation, dB.
    pub tmsv_squeezing_db: f64,
}

impl LinkSpec {
    pub fn lossy() -> Self {
        Self { compensation: Compensation::None, ancilla: Ancilla::Ideal, layers: 1, tmsv_squeezing_db: 0.0 }
    }

    pub fn preamp() -> Self {
        Self { compensation: Compensation::Preamp, ..Self::lossy() }
    }

    pub fn gkp(ancilla: Ancilla, layers: u32) -> Self {
        Self { compensation: Compensation::Gkp, ancilla, layers, ..Self::lossy() }
    }

    pub fn qt_gkp(tmsv_squeezing_db: f64, ancilla: Ancilla) -> Self {
        Self { compensation: Compensation::QtGkp, ancilla, tmsv_squeezing_db, ..Self::lossy() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return invalid("at least one code layer is needed");
        }
        if !(self.tmsv_squeezing_db >= 0.0) {
            return invalid("TMSV squeezing must be non-negative");
        }
        self.ancilla.validate()
    }

    /// Channel variance seen by one code layer (vacuum ½).
    pub fn segment_variance(&self, params: &ProtocolParams) -> Result<f64> {
        Ok(match self.compensation {
            Compensation::QtGkp => awgn_variance_qt(params.tau_a, self.tmsv_squeezing_db),
            _ => {
                let tau = fiber_transmittance(params.l_a / self.layers as f64, params.alpha0)?;
                awgn_variance_preamp(tau, params.n_bar)
            }
        })
    }

    /// Residual variance `σ_r²` (vacuum ½) after correction, `None` without a code.
    pub fn residual(&self, params: &ProtocolParams) -> Result<Option<f64>> {
        self.validate()?;
        match self.compensation {
            Compensation::None | Compensation::Preamp => Ok(None),
            Compensation::Gkp | Compensation::QtGkp => {
                let (_, v) = optimize_squeezing(self.segment_variance(params)?, self.ancilla)?;
                Ok(Some(concat_variance(v, self.layers)))
            }
        }
    }

    pub fn alice_link(&self, params: &ProtocolParams) -> Result<AliceLink> {
        Ok(match self.compensation {
            Compensation::None => AliceLink::Lossy,
            Compensation::Preamp => AliceLink::preamp(params),
            _ => AliceLink::corrected(self.residual(params)?.expect("code present")),
        })
    }
}

/// Rate at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    /// Residual GKP variance, vacuum ½, when a code is used.
    pub sigma_r2: Option<f64>,
    /// Asymptotic quantities, or their worst-case versions in the finite-size regime.
    pub report: RateReport,
    /// `R_asy` or `R_com`, bits per use.
    pub rate: f64,
}

/// Asymptotic rate when `finite` is `None`, composable rate otherwise.
pub fn evaluate_rate(params: &ProtocolParams, link: &LinkSpec, finite: Option<&FiniteSizeParams>) -> Result<RatePoint> {
    params.validate()?;
    let sigma_r2 = link.residual(params)?;
    let alice = match sigma_r2 {
        Some(s) => AliceLink::corrected(s),
        None => link.alice_link(params)?,
    };
    let state = conditioned_state(params, alice)?;
    match finite {
        None => {
            let report = rate_from_state(&state, params.beta0)?;
            Ok(RatePoint { sigma_r2, report, rate: report.rate })
        }
        Some(fs) => {
            let c = composable_from_state(&state, params.beta0, fs)?;
            Ok(RatePoint { sigma_r2, report: c.worst_case, rate: c.rate })
        }
    }
}

/// Largest distance in `[lo, hi]` with a positive rate, to [`DISTANCE_RESOLUTION_KM`].
///
/// A coarse scan downward from `hi` finds the outermost sign change, then
/// bisection narrows it. The returned point is the last one known to be
/// secure. `None` means no scanned point is secure; a rate still positive at
/// `hi` is an error. Unphysical worst-case states count as insecure.
pub fn max_secure_distance<F: Fn(f64) -> Result<f64>>(rate: F, lo: f64, hi: f64) -> Result<Option<f64>> {
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return invalid("distance bracket needs finite lo < hi");
    }
    let secure = |x: f64| match rate(x) {
        Ok(r) => Ok(r > 0.0),
        Err(Error::Unphysical(_)) => Ok(false),
        Err(e) => Err(e),
    };
    if secure(hi)? {
        return Err(Error::NonConvergent(format!("rate still positive at {hi} km; widen the bracket")));
    }
    let step = (hi - lo) / SCAN_STEPS as f64;
    let grid = |i: usize| if i == SCAN_STEPS { hi } else { lo + i as f64 * step };
    let mut bracket = None;
    for i in (0..SCAN_STEPS).rev() {
        if secure(grid(i))? {
            bracket = Some((grid(i), grid(i + 1)));
            break;
        }
    }
    let Some((mut a, mut b)) = bracket else {
        return Ok(None);
    };
    while b - a > DISTANCE_RESOLUTION_KM {
        let m = 0.5 * (a + b);
        if secure(m)? {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(Some(a))
}

/// Max secure `L_B` at fixed `L_A`.
pub fn max_bob_distance(
    params: &ProtocolParams,
    link: &LinkSpec,
    finite: Option<&FiniteSizeParams>,
    hi: f64,
) -> Result<Option<f64>> {
    max_secure_distance(|lb| evaluate_rate(&params.with_l_b(lb)?, link, finite).map(|p| p.rate), 0.0, hi)
}

/// Max secure `L_A` at fixed `L_B`.
pub fn max_alice_distance(
    params: &ProtocolParams,
    link: &LinkSpec,
    finite: Option<&FiniteSizeParams>,
    hi: f64,
) -> Result<Option<f64>> {
    max_secure_distance(|la| evaluate_rate(&params.with_l_a(la)?, link, finite).map(|p| p.rate), 0.0, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gkp::{concatenated_residual, residual_variance};

    #[test]
    fn bisection_on_known_root() {
        let r = max_secure_distance(|x| Ok(3.217 - x), 0.0, 10.0).unwrap().unwrap();
        assert!(r <= 3.217 && 3.217 - r <= DISTANCE_RESOLUTION_KM);
        assert_eq!(max_secure_distance(|x| Ok(-1.0 - x), 0.0, 10.0).unwrap(), None);
        assert!(max_secure_distance(|_| Ok(1.0), 0.0, 10.0).is_err());
        assert!(max_secure_distance(|x| Ok(1.0 - x), 1.0, 1.0).is_err());
        // a rate that dips below zero and recovers reports the outermost crossing
        let r = max_secure_distance(|x| Ok(if (2.0..2.5).contains(&x) { -1.0 } else { 5.0 - x }), 0.0, 10.0)
            .unwrap()
            .unwrap();
        assert!((4.99..=5.0).contains(&r), "{r}");
    }

    #[test]
    fn layer_residual_matches_gkp_helper() {
        let p = ProtocolParams::fiber(3.0, 5.0).unwrap();
        let anc = Ancilla::finite(20.0);
        for c in 1..=4 {
            let a = LinkSpec::gkp(anc, c).residual(&p).unwrap().unwrap();
            let b = concatenated_residual(3.0, c, 0.2, anc).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn qt_variance_feeds_code() {
        let p = ProtocolParams::fiber(2.0, 5.0).unwrap();
        let link = LinkSpec::qt_gkp(20.0, Ancilla::finite(20.0));
        let s2 = awgn_variance_qt(p.tau_a, 20.0);
        assert_eq!(link.segment_variance(&p).unwrap(), s2);
        let v = link.residual(&p).unwrap().unwrap();
        let (r, best) = optimize_squeezing(s2, link.ancilla).unwrap();
        assert_eq!(v, best);
        assert_eq!(residual_variance(r, s2, link.ancilla).unwrap(), best);
    }

    #[test]
    fn baseline_links_have_no_residual() {
        let p = ProtocolParams::fiber(1.0, 5.0).unwrap();
        assert_eq!(LinkSpec::lossy().residual(&p).unwrap(), None);
        assert_eq!(LinkSpec::preamp().alice_link(&p).unwrap(), AliceLink::preamp(&p));
        assert!(LinkSpec::gkp(Ancilla::Ideal, 0).validate().is_err());
    }
}
