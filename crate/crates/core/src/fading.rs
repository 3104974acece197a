//! Free-space fading link for Alice: transmittance distribution, the
//! fading-averaged conditional state, and the averaged composable rate.
//!
//! With beam-centroid deflection `d` Rayleigh distributed (variance `σ_bw²`)
//! and `τ = τ₀ exp(−(d/r₀)^γ₀)`, the transmittance CDF is
//! `F(τ) = exp(−(r₀²/2σ_bw²)·(ln τ₀/τ)^{2/γ₀})` on `(0, τ₀]`. Averages are
//! computed in the probability variable `u = F(τ)`, which puts quadrature
//! nodes where the density has mass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{awgn_variance_preamp, ProtocolParams};
use crate::error::{invalid, Result};
use crate::finite_size::{composable_from_state, ComposableReport, FiniteSizeParams};
use crate::gkp::{optimize_squeezing, residual_variance, Ancilla};
use crate::interp::Pchip;
use crate::quad;
use crate::security::{ConditionedState, StandardForm};

/// Nodes of the memoized `σ_r²(σ²)` table.
pub const TABLE_NODES: usize = 512;
const REL_TOL: f64 = 1e-11;

/// Fading-link parameters. Only `tau0`, `gamma0`, `r0` and `sigma_bw2` enter
/// any formula; the rest describe the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingConfig {
    pub tau0: f64,
    pub gamma0: f64,
    /// Scale parameter, m.
    pub r0: f64,
    /// Centroid-wander variance, m². Zero gives a point mass at `tau0`.
    pub sigma_bw2: f64,
    /// Receiver aperture radius, m.
    pub a_r: f64,
    /// Beam spot size, m.
    pub w0: f64,
    /// Link length, km.
    pub l_a: f64,
    pub pointing_urad: f64,
}

/// Beam spot size, transmission efficiency and wander variance shared by the
/// fitted reference configurations.
pub const FITTED_SPOT_M: f64 = 0.051_801_333;
pub const FITTED_WANDER_M2: f64 = 1.049_020_243e-5;

impl FadingConfig {
    /// Fitted 1 km weak-turbulence night-time link, aperture 0.1 m.
    ///
    /// Fitted values, not derived from atmospheric parameters.
    pub fn fitted_wide_aperture() -> Self {
        Self {
            tau0: 0.971_079_020_788_643_9,
            gamma0: 4.174_425_951_864_756,
            r0: 0.105_407_732_599_552_23,
            sigma_bw2: FITTED_WANDER_M2,
            a_r: 0.1,
            w0: 0.05,
            l_a: 1.0,
            pointing_urad: 1.0,
        }
    }

    /// Same fitted link with aperture 0.05 m.
    pub fn fitted_narrow_aperture() -> Self {
        Self {
            tau0: 0.820_885_818_605_348_9,
            gamma0: 2.270_933_622_071_767,
            r0: 0.056_199_655_681_730_645,
            a_r: 0.05,
            ..Self::fitted_wide_aperture()
        }
    }

    /// Degenerate link with fixed transmittance `tau`.
    pub fn point_mass(tau: f64) -> Self {
        Self { tau0: tau, sigma_bw2: 0.0, ..Self::fitted_wide_aperture() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau0 > 0.0 && self.tau0 <= 1.0) {
            return invalid("tau0 must lie in (0, 1]");
        }
        if !(self.gamma0 > 0.0 && self.r0 > 0.0 && self.sigma_bw2 >= 0.0) {
            return invalid("gamma0 and r0 must be positive and sigma_bw2 non-negative");
        }
        Ok(())
    }

    pub fn is_point_mass(&self) -> bool {
        self.sigma_bw2 == 0.0
    }

    fn rate_constant(&self) -> f64 {
        self.r0 * self.r0 / (2.0 * self.sigma_bw2)
    }

    /// Excess loss `10·log₁₀(τ₀/τ)` in dB at probability level `u` of the transmittance.
    pub fn excess_loss_quantile_db(&self, u: f64) -> f64 {
        if self.is_point_mass() || u >= 1.0 {
            return 0.0;
        }
        if u <= 0.0 {
            return f64::INFINITY;
        }
        10.0 / std::f64::consts::LN_10 * (-u.ln() / self.rate_constant()).powf(self.gamma0 / 2.0)
    }

    /// Inverse CDF: the transmittance at probability level `u ∈ (0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        if self.is_point_mass() || u >= 1.0 {
            return self.tau0;
        }
        if u <= 0.0 {
            return 0.0;
        }
        let log_ratio = (-u.ln() / self.rate_constant()).powf(self.gamma0 / 2.0);
        self.tau0 * (-log_ratio).exp()
    }
}

/// Wander variance from a pointing error: `(θ·L)²` in m².
pub fn pointing_wander_variance(l_a_km: f64, pointing_urad: f64) -> f64 {
    (pointing_urad * 1e-6 * l_a_km * 1e3).powi(2)
}

/// Transmittance density; zero outside `(0, τ₀]`.
pub fn fading_pdf(tau_a: f64, cfg: &FadingConfig) -> f64 {
    if !(tau_a > 0.0 && tau_a <= cfg.tau0) || cfg.is_point_mass() {
        return 0.0;
    }
    let l = (cfg.tau0 / tau_a).ln();
    let e = 2.0 / cfg.gamma0;
    let k = cfg.rate_constant();
    cfg.r0 * cfg.r0 / (cfg.gamma0 * cfg.sigma_bw2 * tau_a) * l.powf(e - 1.0) * (-k * l.powf(e)).exp()
}

/// Density of the excess loss `10·log₁₀(τ₀/τ)` in dB, evaluated without
/// forming `τ`, which cannot resolve losses below ~1e-15 dB.
pub fn excess_loss_pdf(loss_db: f64, cfg: &FadingConfig) -> f64 {
    if !(loss_db > 0.0) || cfg.is_point_mass() {
        return 0.0;
    }
    let x = loss_db * std::f64::consts::LN_10 / 10.0;
    let e = 2.0 / cfg.gamma0;
    let k = cfg.rate_constant();
    e * k * x.powf(e - 1.0) * (-k * x.powf(e)).exp() * std::f64::consts::LN_10 / 10.0
}

/// Transmittance CDF.
pub fn fading_cdf(tau_a: f64, cfg: &FadingConfig) -> f64 {
    if tau_a >= cfg.tau0 {
        return 1.0;
    }
    if tau_a <= 0.0 || cfg.is_point_mass() {
        return 0.0;
    }
    (-cfg.rate_constant() * (cfg.tau0 / tau_a).ln().powf(2.0 / cfg.gamma0)).exp()
}

/// How the TMS squeezing follows the fluctuating transmittance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodePolicy {
    /// Re-optimized for each transmittance.
    Dynamic,
    /// Fixed squeezing `r`.
    Fixed(f64),
}

/// Memoized `σ_r²` as a function of the pre-amplified channel variance, on
/// [`TABLE_NODES`] uniform nodes with monotone cubic interpolation.
#[derive(Debug, Clone)]
pub struct ResidualTable {
    lo: f64,
    hi: f64,
    n_bar: f64,
    interp: Pchip,
}

impl ResidualTable {
    /// Table spanning transmittances `(0, tau_max]`.
    pub fn build(tau_max: f64, n_bar: f64, ancilla: Ancilla, policy: CodePolicy) -> Result<Self> {
        let lo = awgn_variance_preamp(tau_max, n_bar);
        let hi = awgn_variance_preamp(0.0, n_bar);
        let h = (hi - lo) / (TABLE_NODES - 1) as f64;
        let values = (0..TABLE_NODES)
            .into_par_iter()
            .map(|i| {
                let s2 = if i == TABLE_NODES - 1 { hi } else { lo + i as f64 * h };
                match policy {
                    CodePolicy::Dynamic => optimize_squeezing(s2, ancilla).map(|(_, v)| v),
                    CodePolicy::Fixed(r) => residual_variance(r, s2, ancilla),
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { lo, hi, n_bar, interp: Pchip::uniform(lo, h, values) })
    }

    /// `σ_r²` at transmittance `tau`.
    pub fn at_transmittance(&self, tau: f64) -> f64 {
        let s2 = awgn_variance_preamp(tau, self.n_bar).clamp(self.lo, self.hi);
        self.interp.eval(s2)
    }
}

/// A fading link with its residual-noise table, reusable across Bob distances.
#[derive(Debug, Clone)]
pub struct FadingChannel {
    pub cfg: FadingConfig,
    table: ResidualTable,
}

impl FadingChannel {
    pub fn new(cfg: FadingConfig, n_bar: f64, ancilla: Ancilla, policy: CodePolicy) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { table: ResidualTable::build(cfg.tau0, n_bar, ancilla, policy)?, cfg })
    }

    pub fn residual_at(&self, tau: f64) -> f64 {
        self.table.at_transmittance(tau)
    }

    /// `E[f(τ)]` under the fading law.
    pub fn expectation<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> Result<f64> {
        if self.cfg.is_point_mass() {
            return Ok(f(self.cfg.tau0));
        }
        quad::integrate(|u| f(self.cfg.quantile(u)), &[0.0, 0.5, 0.9, 0.99, 1.0], REL_TOL, 0.0)
    }

    /// Same expectation with a fixed composite rule of `panels` 16-point panels.
    pub fn expectation_panels<F: Fn(f64) -> f64>(&self, f: F, panels: usize) -> f64 {
        if self.cfg.is_point_mass() {
            return f(self.cfg.tau0);
        }
        quad::composite(|u| f(self.cfg.quantile(u)), 0.0, 1.0, panels)
    }

    fn xi_integrand(&self, params: &ProtocolParams) -> impl Fn(f64) -> f64 + Sync + '_ {
        let base = params.sigma2_a + params.tau_b * params.sigma2_b + 2.0;
        move |tau| 1.0 / (base + 2.0 * self.residual_at(tau))
    }

    /// `Ξ = E[1/(σ_A² + 2σ_r²(τ) + τ_Bσ_B² + 2)]`.
    pub fn xi(&self, params: &ProtocolParams) -> Result<f64> {
        self.expectation(self.xi_integrand(params))
    }

    pub fn xi_panels(&self, params: &ProtocolParams, panels: usize) -> f64 {
        self.expectation_panels(self.xi_integrand(params), panels)
    }

    pub fn mean_residual(&self) -> Result<f64> {
        self.expectation(|t| self.residual_at(t))
    }

    pub fn mean_transmittance(&self) -> Result<f64> {
        self.expectation(|t| t)
    }

    pub fn conditioned_state(&self, params: &ProtocolParams) -> Result<ConditionedState> {
        fading_state_from_xi(params, self.xi(params)?)
    }

    pub fn average_composable_rate(&self, params: &ProtocolParams, fs: &FiniteSizeParams) -> Result<ComposableReport> {
        composable_from_state(&self.conditioned_state(params)?, params.beta0, fs)
    }
}

/// Fading-averaged conditional state for a given `Ξ`:
/// `Φ = σ_A²+1 − (σ_A⁴+2σ_A²)Ξ`, `ψ = √(τ_B(σ_A⁴+2σ_A²)(σ_B⁴+2σ_B²))·Ξ`,
/// `φ = σ_B²+1 − τ_B(σ_B⁴+2σ_B²)Ξ`.
pub fn fading_state_from_xi(params: &ProtocolParams, xi: f64) -> Result<ConditionedState> {
    let (sa, sb, tb) = (params.sigma2_a, params.sigma2_b, params.tau_b);
    let (ka, kb) = (sa * sa + 2.0 * sa, sb * sb + 2.0 * sb);
    let psi = (tb * ka * kb).sqrt() * xi;
    let form = StandardForm { a: sa + 1.0 - ka * xi, b: sb + 1.0 - tb * kb * xi, c_q: psi, c_p: -psi };
    let state = ConditionedState::from_standard_form(form, 0.5 / xi)?;
    if !state.cm().is_physical() {
        return Err(crate::error::Error::Unphysical(crate::gaussian::symplectic_spectrum(state.cm())?[1]));
    }
    Ok(state)
}

pub fn xi_integral(cfg: &FadingConfig, params: &ProtocolParams, policy: CodePolicy, ancilla: Ancilla) -> Result<f64> {
    FadingChannel::new(*cfg, params.n_bar, ancilla, policy)?.xi(params)
}

pub fn fading_cm(
    cfg: &FadingConfig,
    params: &ProtocolParams,
    policy: CodePolicy,
    ancilla: Ancilla,
) -> Result<ConditionedState> {
    FadingChannel::new(*cfg, params.n_bar, ancilla, policy)?.conditioned_state(params)
}

pub fn mean_residual_variance(cfg: &FadingConfig, policy: CodePolicy, ancilla: Ancilla) -> Result<f64> {
    FadingChannel::new(*cfg, 0.0, ancilla, policy)?.mean_residual()
}

pub fn average_composable_rate(
    cfg: &FadingConfig,
    params: &ProtocolParams,
    fs: &FiniteSizeParams,
    policy: CodePolicy,
    ancilla: Ancilla,
) -> Result<ComposableReport> {
    FadingChannel::new(*cfg, params.n_bar, ancilla, policy)?.average_composable_rate(params, fs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::security::{conditioned_state, AliceLink};

    const D20: Ancilla = Ancilla::Finite { squeezing_db: 20.0 };

    fn test_cfg(gamma0: f64) -> FadingConfig {
        FadingConfig { gamma0, ..FadingConfig::fitted_wide_aperture() }
    }

    #[test]
    fn wander_examples() {
        assert!((pointing_wander_variance(1.0, 1.0) - 1e-6).abs() < 1e-18);
        assert_eq!(pointing_wander_variance(1.0, 0.0), 0.0);
        assert!((pointing_wander_variance(2.0, 1.0) - 4e-6).abs() < 1e-18);
    }

    #[test]
    fn pdf_normalizes_and_matches_cdf() {
        for cfg in
            [FadingConfig::fitted_wide_aperture(), FadingConfig::fitted_narrow_aperture(), test_cfg(2.0), test_cfg(1.2)]
        {
            // integrate the density in log-transmittance, x = ln(τ0/τ)
            let dens = |x: f64| {
                let t = cfg.tau0 * (-x).exp();
                fading_pdf(t, &cfg) * t
            };
            // near τ0 the density is singular for γ0 > 2 and τ loses digits; the mass below x0 is added in closed form
            let x0: f64 = 1e-6;
            let k = cfg.r0 * cfg.r0 / (2.0 * cfg.sigma_bw2);
            let head = 1.0 - (-k * x0.powf(2.0 / cfg.gamma0)).exp();
            let xmax = (60.0 / k).powf(cfg.gamma0 / 2.0);
            let breaks: Vec<f64> = (0..=64).map(|i| x0 * (xmax / x0).powf(i as f64 / 64.0)).collect();
            let total = head + quad::integrate(dens, &breaks, 1e-10, 1e-12).unwrap();
            assert!((total - 1.0).abs() < 1e-6, "gamma0={} total={total}", cfg.gamma0);
            assert_eq!(fading_cdf(cfg.tau0, &cfg), 1.0);
            assert_eq!(fading_pdf(cfg.tau0 * 1.01, &cfg), 0.0);
            assert_eq!(fading_pdf(-0.1, &cfg), 0.0);
            // upper quantiles sit within ~1e-8 of τ0, where ln(τ0/τ) keeps only about eight digits
            for u in [0.1, 0.5, 0.9] {
                assert!((fading_cdf(cfg.quantile(u), &cfg) - u).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn excess_loss_density_consistent() {
        for cfg in [FadingConfig::fitted_wide_aperture(), FadingConfig::fitted_narrow_aperture()] {
            for u in [0.05, 0.3, 0.7] {
                let l = cfg.excess_loss_quantile_db(u);
                let t = cfg.quantile(u);
                assert!((cfg.tau0 * 10f64.powf(-l / 10.0) / t - 1.0).abs() < 1e-12);
                let via_tau = fading_pdf(t, &cfg) * t * std::f64::consts::LN_10 / 10.0;
                assert!((excess_loss_pdf(l, &cfg) / via_tau - 1.0).abs() < 1e-6, "{u}");
            }
            assert_eq!(excess_loss_pdf(0.0, &cfg), 0.0);
            assert_eq!(cfg.excess_loss_quantile_db(1.0), 0.0);
        }
    }

    #[test]
    fn gamma_two_closed_form() {
        let cfg = test_cfg(2.0);
        let k = cfg.rate_constant();
        for t in [0.5, 0.9, 0.95] {
            let l = (cfg.tau0 / t).ln();
            assert!((fading_cdf(t, &cfg) - (-k * l).exp()).abs() < 1e-15);
            // density of the log-negative-Weibull case: (k/τ)(τ/τ0)^k
            assert!((fading_pdf(t, &cfg) - k / t * (t / cfg.tau0).powf(k)).abs() < 1e-9 * fading_pdf(t, &cfg));
        }
        assert!(fading_pdf(1e-200, &test_cfg(3.0)) == 0.0);
    }

    #[test]
    fn point_mass_matches_fiber() {
        let tau = 0.955;
        let ch = FadingChannel::new(FadingConfig::point_mass(tau), 0.0, D20, CodePolicy::Dynamic).unwrap();
        let (_, s) = optimize_squeezing(1.0 - tau, D20).unwrap();
        assert!((ch.residual_at(tau) - s).abs() < 1e-15);
        let p = ProtocolParams::fiber(0.0, 7.0).unwrap();
        let p = ProtocolParams { tau_a: tau, ..p };
        let fade = ch.conditioned_state(&p).unwrap();
        let fiber = conditioned_state(&p, AliceLink::corrected(s)).unwrap();
        assert!((fade.cm().matrix() - fiber.cm().matrix()).amax() < 1e-9);
        let xi = ch.xi(&p).unwrap();
        assert!((xi - 1.0 / (p.sigma2_a + 2.0 * s + p.tau_b * p.sigma2_b + 2.0)).abs() < 1e-15);
        assert!((ch.mean_residual().unwrap() - s).abs() < 1e-15);
    }

    #[test]
    fn zero_xi_decouples() {
        let p = ProtocolParams::fiber(1.0, 3.0).unwrap();
        let st = fading_state_from_xi(&p, 0.0).unwrap();
        let f = st.standard_form().unwrap();
        assert_eq!((f.a, f.b, f.c_q, f.c_p), (21.0, 21.0, 0.0, -0.0));
    }

    #[test]
    fn dynamic_dominates_fixed() {
        let cfg = FadingConfig::fitted_wide_aperture();
        let p = ProtocolParams::fiber(1.0, 10.0).unwrap();
        let dynamic = FadingChannel::new(cfg, 0.0, D20, CodePolicy::Dynamic).unwrap().xi(&p).unwrap();
        for r in [0.2, 0.6, 1.0] {
            let fixed = FadingChannel::new(cfg, 0.0, D20, CodePolicy::Fixed(r)).unwrap().xi(&p).unwrap();
            assert!(dynamic >= fixed * (1.0 - 1e-12), "r={r}");
        }
    }

    #[test]
    fn quadrature_refinement_stable() {
        let p = ProtocolParams::fiber(1.0, 10.0).unwrap();
        for cfg in [FadingConfig::fitted_wide_aperture(), FadingConfig::fitted_narrow_aperture()] {
            let ch = FadingChannel::new(cfg, 0.0, D20, CodePolicy::Dynamic).unwrap();
            let a = ch.xi_panels(&p, 256);
            let b = ch.xi_panels(&p, 512);
            assert!((a - b).abs() < 1e-8 * a, "{a} {b}");
            assert!((ch.xi(&p).unwrap() - b).abs() < 1e-8 * b);
        }
    }
}
