//! Worst-case parameter estimation and the composable finite-size key rate.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::security::{rate_from_state, ConditionedState, RateReport};

/// Block size, parameter-estimation split and security parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteSizeParams {
    /// Total pulses `N`.
    pub n: f64,
    /// Pulses sacrificed for parameter estimation.
    pub m_pe: f64,
    /// Digitalization bins.
    pub d: u32,
    pub p_ec: f64,
    pub eps_cor: f64,
    pub eps_s: f64,
    pub eps_h: f64,
    pub eps_pe: f64,
}

impl Default for FiniteSizeParams {
    fn default() -> Self {
        Self::with_block(1e8)
    }
}

impl FiniteSizeParams {
    /// Reference parameters at block size `n` with `m_pe = 0.1 n`.
    pub fn with_block(n: f64) -> Self {
        Self { n, m_pe: 0.1 * n, d: 32, p_ec: 0.9, eps_cor: 1e-10, eps_s: 1e-10, eps_h: 1e-10, eps_pe: 1e-10 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m_pe > 0.0 && self.m_pe < self.n) {
            return invalid("need 0 < m_pe < N");
        }
        if self.d < 2 || !self.d.is_power_of_two() {
            return invalid("digitalization must be a power of two >= 2");
        }
        if !(self.p_ec > 0.0 && self.p_ec <= 1.0) {
            return invalid("p_ec must lie in (0, 1]");
        }
        for e in [self.eps_cor, self.eps_s, self.eps_h, self.eps_pe] {
            if !(e > 0.0 && e < 1.0) {
                return invalid("epsilon parameters must lie in (0, 1)");
            }
        }
        Ok(())
    }
}

/// Worst-case conditioned state with the tail-bound parameter used.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseCM {
    pub state: ConditionedState,
    pub kappa: f64,
}

/// `κ = ln(4/ε_pe)`, so that `4·exp(−κ) = ε_pe`.
pub fn kappa_from_eps(eps_pe: f64) -> f64 {
    (4.0 / eps_pe).ln()
}

/// Worst-case correlation for one quadrature pair with `μ± = V_a + V_b ± 2C`.
/// A positively correlated pair is shifted down, a negatively correlated one up.
pub fn worst_case_correlations(var_a: f64, var_b: f64, cov: f64, kappa: f64, m_pe: f64, positive: bool) -> f64 {
    let mu_plus = var_a + var_b + 2.0 * cov;
    let mu_minus = var_a + var_b - 2.0 * cov;
    let shift = 2.0 * (kappa / m_pe).sqrt() * (mu_plus + mu_minus);
    if positive {
        0.25 * ((mu_plus - mu_minus) - shift)
    } else {
        0.25 * ((mu_plus - mu_minus) + shift)
    }
}

/// Shifts `⟨q_a q_b⟩` down and `⟨p_a p_b⟩` up by the tail-bound terms; the diagonal is kept.
pub fn worst_case_cm(state: &ConditionedState, fs: &FiniteSizeParams) -> Result<WorstCaseCM> {
    fs.validate()?;
    let v = state.cm();
    let kappa = kappa_from_eps(fs.eps_pe);
    let mut m = v.matrix().clone();
    let q = worst_case_correlations(v.get(0, 0), v.get(2, 2), v.get(0, 2), kappa, fs.m_pe, true);
    let p = worst_case_correlations(v.get(1, 1), v.get(3, 3), v.get(1, 3), kappa, fs.m_pe, false);
    m[(0, 2)] = q;
    m[(2, 0)] = q;
    m[(1, 3)] = p;
    m[(3, 1)] = p;
    let wc = crate::gaussian::CovMatrix::new(m)?;
    if !wc.is_physical() {
        let min = crate::gaussian::symplectic_spectrum(&wc).map(|s| s[1]).unwrap_or(f64::NAN);
        return Err(Error::Unphysical(min));
    }
    Ok(WorstCaseCM { state: ConditionedState::new(wc, state.theta())?, kappa })
}

/// `Δ_aep = 4 log₂(√d + 2) √(log₂(2/ε_s²))`.
pub fn aep_delta(d: u32, eps_s: f64) -> f64 {
    4.0 * ((d as f64).sqrt() + 2.0).log2() * (2.0 / (eps_s * eps_s)).log2().sqrt()
}

/// `ε = ε_cor + ε_s + ε_h + p_ec·ε_pe`.
pub fn epsilon_total(fs: &FiniteSizeParams) -> f64 {
    fs.eps_cor + fs.eps_s + fs.eps_h + fs.p_ec * fs.eps_pe
}

/// Composable rate with its worst-case asymptotic ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComposableReport {
    /// `R_com`, bits per use, signed.
    pub rate: f64,
    /// Rate functional on the worst-case CM.
    pub worst_case: RateReport,
}

/// `R_com = p_ec [l R_pe − √l Δ_aep + log₂(ε_h² ε_cor)] / N` with `l = N − m_pe`.
pub fn composable_from_state(state: &ConditionedState, beta0: f64, fs: &FiniteSizeParams) -> Result<ComposableReport> {
    let wc = worst_case_cm(state, fs)?;
    let rpe = rate_from_state(&wc.state, beta0)?;
    let l = fs.n - fs.m_pe;
    let bracket = l * rpe.rate - l.sqrt() * aep_delta(fs.d, fs.eps_s) + (fs.eps_h * fs.eps_h * fs.eps_cor).log2();
    Ok(ComposableReport { rate: fs.p_ec * bracket / fs.n, worst_case: rpe })
}

/// Composable finite-size key rate for a parameter set and Alice link.
pub fn composable_rate(
    params: &crate::channels::ProtocolParams,
    link: crate::security::AliceLink,
    fs: &FiniteSizeParams,
) -> Result<ComposableReport> {
    let state = crate::security::conditioned_state(params, link)?;
    composable_from_state(&state, params.beta0, fs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::ProtocolParams;
    use crate::security::{asymptotic_rate, conditioned_state, AliceLink};
    use proptest::prelude::*;

    fn state(la: f64, lb: f64, s: f64) -> ConditionedState {
        conditioned_state(&ProtocolParams::fiber(la, lb).unwrap(), AliceLink::corrected(s)).unwrap()
    }

    #[test]
    fn kappa_examples() {
        assert!((kappa_from_eps(4.0 / std::f64::consts::E) - 1.0).abs() < 1e-15);
        assert!((kappa_from_eps(1e-10) - 24.4122).abs() < 1e-4);
        for e in [1e-2, 1e-10, 0.3] {
            let back = 4.0 * (-kappa_from_eps(e)).exp();
            assert!((back - e).abs() <= 1e-12 * e);
        }
    }

    #[test]
    fn aep_examples() {
        // log2(2/eps^2) = 1 when eps = 1
        assert!((aep_delta(4, 1.0) - 8.0).abs() < 1e-14);
        assert!((aep_delta(32, 1e-10) - 96.47).abs() < 0.01);
        assert!(aep_delta(64, 1e-10) > aep_delta(32, 1e-10));
        assert!(aep_delta(32, 1e-12) > aep_delta(32, 1e-10));
    }

    #[test]
    fn epsilon_examples() {
        assert!((epsilon_total(&FiniteSizeParams::default()) - 3.9e-10).abs() < 1e-22);
        let fs = FiniteSizeParams { p_ec: 0.0, ..Default::default() };
        assert!((epsilon_total(&fs) - 3e-10).abs() < 1e-22);
        let fs = FiniteSizeParams { p_ec: 1.0, ..Default::default() };
        assert!((epsilon_total(&fs) - 4e-10).abs() < 1e-22);
    }

    #[test]
    fn worst_case_shift_structure() {
        let st = state(1.0, 10.0, 0.01);
        let fs = FiniteSizeParams::default();
        let wc = worst_case_cm(&st, &fs).unwrap();
        let (v, w) = (st.cm(), wc.state.cm());
        for i in 0..4 {
            assert_eq!(v.get(i, i), w.get(i, i));
        }
        assert!(w.get(0, 2) < v.get(0, 2) && w.get(0, 2).abs() <= v.get(0, 2).abs());
        assert!(w.get(1, 3) > v.get(1, 3));
        let huge = FiniteSizeParams { n: 1e40, m_pe: 1e39, ..fs };
        let wc = worst_case_cm(&st, &huge).unwrap();
        assert!((wc.state.cm().matrix() - v.matrix()).amax() < 1e-12);
    }

    #[test]
    fn large_block_limit_recovers_scaled_asymptotic_rate() {
        let p = ProtocolParams::fiber(1.0, 5.0).unwrap();
        let link = AliceLink::corrected(0.01);
        let asy = asymptotic_rate(&p, link).unwrap().rate;
        let fs = FiniteSizeParams { n: 1e30, m_pe: 1e20, ..Default::default() };
        let r = composable_rate(&p, link, &fs).unwrap().rate;
        assert!((r - fs.p_ec * asy).abs() < 1e-6, "{r} {}", fs.p_ec * asy);
    }

    #[test]
    fn rate_non_decreasing_in_block_size() {
        let p = ProtocolParams::fiber(3.0, 5.0).unwrap();
        let link = AliceLink::corrected(0.05);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..12 {
            let n = 1e6 * 2f64.powi(k);
            let r = composable_rate(&p, link, &FiniteSizeParams::with_block(n)).unwrap().rate;
            assert!(r >= prev);
            prev = r;
        }
    }

    proptest! {
        #[test]
        fn composable_below_worst_case_and_nominal(
            la in 0.0f64..4.0, lb in 0.0f64..30.0, s in 0.0f64..0.2, logn in 6.0f64..11.0,
        ) {
            let p = ProtocolParams::fiber(la, lb).unwrap();
            let link = AliceLink::corrected(s);
            let fs = FiniteSizeParams::with_block(10f64.powf(logn));
            let st = conditioned_state(&p, link).unwrap();
            let nominal = rate_from_state(&st, 1.0).unwrap().rate;
            if let Ok(c) = composable_from_state(&st, 1.0, &fs) {
                prop_assert!(c.worst_case.rate <= nominal + 1e-12);
                prop_assert!(c.rate <= fs.p_ec * (fs.n - fs.m_pe) / fs.n * c.worst_case.rate + 1e-12);
            }
        }
    }
}
