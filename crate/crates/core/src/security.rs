//! Global state before the relay, Bell-detection conditioning, and the
//! asymptotic reverse-reconciliation key rate.
//!
//! The global CM carries the explicit ½ prefactor with `+1` vacuum entries.
//! Conditioning it on the Bell outcome gives ½ × a vacuum-1 CM, and
//! [`ConditionedState`] stores that vacuum-1 matrix.

use nalgebra::{DMatrix, Matrix2};

use crate::channels::{awgn_variance_preamp, ProtocolParams};
use crate::error::{invalid, Error, Result};
use crate::gaussian::{h_function, schur_condition, symplectic_eigenvalues, CovMatrix, PHYSICAL_TOL};
use crate::units::HalfSnu;

/// How Alice's mode reaches the relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AliceLink {
    /// Plain loss `τ_A` (thermal `n̄`), no compensation.
    Lossy,
    /// Loss compensated to unit transmittance, leaving additive Gaussian noise
    /// per quadrature. This covers pre-amplification alone, GKP correction after
    /// pre-amplification, and teleportation.
    Compensated(HalfSnu),
}

impl AliceLink {
    /// Pre-amplification alone: noise `n̄ + 1 − τ_A`.
    pub fn preamp(params: &ProtocolParams) -> Self {
        AliceLink::Compensated(HalfSnu(awgn_variance_preamp(params.tau_a, params.n_bar)))
    }

    /// Residual noise `σ_r²` left by an error-correcting code.
    pub fn corrected(sigma_r2: f64) -> Self {
        AliceLink::Compensated(HalfSnu(sigma_r2))
    }
}

/// Which closed form of θ to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaMode {
    Gkp { sigma_r2: f64 },
    PreampOnly,
}

/// Two-mode state conditioned on the Bell outcome, vacuum-1 units.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedState {
    cm: CovMatrix,
    theta: f64,
}

/// Blocks `[[a I, diag(c_q, c_p)], [diag(c_q, c_p), b I]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardForm {
    pub a: f64,
    pub b: f64,
    pub c_q: f64,
    pub c_p: f64,
}

impl StandardForm {
    pub fn to_cm(&self) -> Result<CovMatrix> {
        let StandardForm { a, b, c_q, c_p } = *self;
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
              a, 0.0, c_q, 0.0,
            0.0,   a, 0.0, c_p,
            c_q, 0.0,   b, 0.0,
            0.0, c_p, 0.0,   b,
        ]);
        CovMatrix::new(m)
    }
}

impl ConditionedState {
    pub fn new(cm: CovMatrix, theta: f64) -> Result<Self> {
        if cm.dim() != 4 {
            return invalid("conditioned state must be two-mode");
        }
        if !(theta > 0.0) {
            return invalid("theta must be positive");
        }
        Ok(Self { cm, theta })
    }

    pub fn from_standard_form(form: StandardForm, theta: f64) -> Result<Self> {
        Self::new(form.to_cm()?, theta)
    }

    pub fn cm(&self) -> &CovMatrix {
        &self.cm
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Returns the standard-form entries when every other entry is zero.
    pub fn standard_form(&self) -> Option<StandardForm> {
        let v = self.cm.matrix();
        let scale = v.amax().max(1.0);
        let zero = |i: usize, j: usize| v[(i, j)].abs() <= 1e-14 * scale;
        let structural = zero(0, 1) && zero(0, 3) && zero(1, 2) && zero(2, 3);
        let diag = v[(0, 0)] == v[(1, 1)] && v[(2, 2)] == v[(3, 3)];
        (structural && diag).then(|| StandardForm { a: v[(0, 0)], b: v[(2, 2)], c_q: v[(0, 2)], c_p: v[(1, 3)] })
    }

    fn block(&self, r: usize, c: usize) -> DMatrix<f64> {
        self.cm.block(r, c, 2, 2)
    }

    /// Bob's CM after Alice's heterodyne outcome, `V_b − C (V_a + I)⁻¹ Cᵀ`.
    pub fn bob_given_alice(&self) -> Result<CovMatrix> {
        schur_condition(&self.block(0, 0), &self.block(2, 2), &self.block(2, 0))
    }
}

/// Eight-mode-quadrature CM of `(a, b, A', B')` with the ½ prefactor, GKP-corrected link.
pub fn assemble_global_cm(params: &ProtocolParams, sigma_r2: HalfSnu) -> Result<CovMatrix> {
    assemble_link_cm(params, AliceLink::Compensated(sigma_r2))
}

/// Global CM for an arbitrary Alice link.
pub fn assemble_link_cm(params: &ProtocolParams, link: AliceLink) -> Result<CovMatrix> {
    params.validate()?;
    let (sa, sb, tb) = (params.sigma2_a, params.sigma2_b, params.tau_b);
    let (eff_ta, v_a_out) = match link {
        AliceLink::Lossy => {
            let t = params.tau_a;
            (t, t * sa + 1.0 + 2.0 * params.n_bar * (1.0 - t))
        }
        AliceLink::Compensated(HalfSnu(s)) => {
            if !(s >= 0.0) {
                return invalid("residual noise must be non-negative");
            }
            (1.0, sa + 1.0 + 2.0 * s)
        }
    };
    let v_b_out = tb * sb + 1.0 + 2.0 * params.n_bar * (1.0 - tb);
    let c1 = (eff_ta * (sa * sa + 2.0 * sa)).sqrt();
    let c2 = (tb * (sb * sb + 2.0 * sb)).sqrt();
    let mut m = DMatrix::zeros(8, 8);
    let diag = [sa + 1.0, sa + 1.0, sb + 1.0, sb + 1.0, v_a_out, v_a_out, v_b_out, v_b_out];
    for (i, d) in diag.iter().enumerate() {
        m[(i, i)] = *d;
    }
    // Z-correlations a–A' and b–B'
    for (mode, out, c) in [(0, 4, c1), (2, 6, c2)] {
        m[(mode, out)] = c;
        m[(out, mode)] = c;
        m[(mode + 1, out + 1)] = -c;
        m[(out + 1, mode + 1)] = -c;
    }
    CovMatrix::new(m * 0.5)
}

/// Closed-form θ (vacuum ½ normalisation of the global CM).
pub fn theta_value(params: &ProtocolParams, mode: ThetaMode) -> f64 {
    let (sa, sb, tb) = (params.sigma2_a, params.sigma2_b, params.tau_b);
    match mode {
        ThetaMode::Gkp { sigma_r2 } => (sa + 2.0 * sigma_r2 + tb * sb + 2.0) / 2.0,
        ThetaMode::PreampOnly => (sa - 2.0 * params.tau_a + tb * sb + 4.0) / 2.0,
    }
}

/// θ read off the global CM: the q-variance of `A'` plus that of `B'`.
pub fn theta_from_global(v_global: &CovMatrix) -> f64 {
    v_global.get(4, 4) + v_global.get(6, 6)
}

/// Conditions `(a, b)` on the Bell outcome over `(A', B')`.
pub fn condition_on_bell(v_global: &CovMatrix, theta: f64) -> Result<ConditionedState> {
    if v_global.dim() != 8 {
        return invalid("condition_on_bell expects the 8x8 global CM");
    }
    let big_theta = Matrix2::new(theta / 2.0, 0.0, 0.0, theta / 2.0);
    let det = big_theta.determinant();
    if !(det.abs() > 0.0) || !det.is_finite() {
        return Err(Error::Singular("condition_on_bell"));
    }
    let x = [Matrix2::new(0.0, 1.0, 1.0, 0.0), Matrix2::new(0.0, 1.0, -1.0, 0.0)];
    let c = [v_global.block(0, 4, 4, 2), v_global.block(0, 6, 4, 2)];
    let mut corr = DMatrix::<f64>::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            let mid = x[i].transpose() * big_theta * x[j];
            let mid = DMatrix::from_column_slice(2, 2, mid.as_slice());
            corr += &c[i] * mid * c[j].transpose();
        }
    }
    let half = v_global.block(0, 0, 4, 4) - corr / (2.0 * det);
    ConditionedState::new(CovMatrix::new(half * 2.0)?, theta)
}

/// Bell-conditioned state for a parameter set and Alice link.
pub fn conditioned_state(params: &ProtocolParams, link: AliceLink) -> Result<ConditionedState> {
    let global = assemble_link_cm(params, link)?;
    let theta = theta_from_global(&global);
    condition_on_bell(&global, theta)
}

/// Reverse-reconciliation mutual information, bits per use.
pub fn mutual_information(state: &ConditionedState) -> Result<f64> {
    let vb = state.block(2, 2);
    let vba = state.bob_given_alice()?;
    let vba = vba.matrix();
    let num = 1.0 + vb.determinant() + vb.trace();
    let den = 1.0 + vba.determinant() + vba.trace();
    if !(num > 0.0 && den > 0.0) {
        return Err(Error::InvalidInput("non-positive argument in mutual information".into()));
    }
    Ok(0.5 * (num / den).log2())
}

/// Holevo bound with the spectra it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Holevo {
    pub chi: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
}

/// Symplectic eigenvalues of a two-mode state, descending. States with
/// `c_p = −c_q` use the closed form; anything else goes to the generic solver.
pub fn two_mode_spectrum(state: &ConditionedState) -> Result<(f64, f64)> {
    match state.standard_form() {
        Some(StandardForm { a, b, c_q, c_p }) if c_q == -c_p => {
            let disc = (a + b) * (a + b) - 4.0 * c_q * c_q;
            if !(disc >= 0.0) {
                return Err(Error::Unphysical(0.0));
            }
            let s = disc.sqrt();
            let (x, y) = (((s + (b - a)) / 2.0).abs(), ((s - (b - a)) / 2.0).abs());
            Ok((x.max(y), x.min(y)))
        }
        _ => symplectic_eigenvalues(state.cm()),
    }
}

fn single_mode_eigenvalue(v: &CovMatrix) -> Result<f64> {
    let d = v.matrix().determinant();
    if !(d > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(d.sqrt())
}

/// `χ = h(v1) + h(v2) − h(v3)`, clamped at zero.
pub fn holevo_bound(state: &ConditionedState) -> Result<Holevo> {
    let (v1, v2) = two_mode_spectrum(state)?;
    let v3 = single_mode_eigenvalue(&state.bob_given_alice()?)?;
    let raw = h_function(v1)? + h_function(v2)? - h_function(v3)?;
    if raw < -PHYSICAL_TOL {
        log::warn!("negative Holevo bound {raw:e} clamped to 0 (near-pure conditional state)");
    }
    Ok(Holevo { chi: raw.max(0.0), v1, v2, v3 })
}

/// Rate report for one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub mutual_info: f64,
    pub holevo: f64,
    /// `β₀·I − χ`, signed.
    pub rate: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
}

pub fn rate_from_state(state: &ConditionedState, beta0: f64) -> Result<RateReport> {
    let i = mutual_information(state)?;
    let h = holevo_bound(state)?;
    Ok(RateReport { mutual_info: i, holevo: h.chi, rate: beta0 * i - h.chi, v1: h.v1, v2: h.v2, v3: h.v3 })
}

/// Asymptotic key rate `β₀ I − χ`.
pub fn asymptotic_rate(params: &ProtocolParams, link: AliceLink) -> Result<RateReport> {
    rate_from_state(&conditioned_state(params, link)?, params.beta0)
}

/// Coherent and reverse coherent information of the conditioned state.
pub fn ci_rci(state: &ConditionedState) -> Result<(f64, f64)> {
    let (v1, v2) = two_mode_spectrum(state)?;
    let joint = h_function(v1)? + h_function(v2)?;
    let nu_a = single_mode_eigenvalue(&state.cm().mode(0))?;
    let nu_b = single_mode_eigenvalue(&state.cm().mode(1))?;
    Ok((h_function(nu_b)? - joint, h_function(nu_a)? - joint))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::fiber_transmittance;
    use crate::gaussian::symplectic_spectrum;
    use proptest::prelude::*;

    fn table1(l_a: f64, l_b: f64) -> ProtocolParams {
        ProtocolParams::fiber(l_a, l_b).unwrap()
    }

    #[test]
    fn global_cm_examples() {
        let p = ProtocolParams::default().with_modulation(0.0, 0.0);
        let v = assemble_global_cm(&p, HalfSnu(0.0)).unwrap();
        assert_eq!(v.matrix(), &(DMatrix::identity(8, 8) * 0.5));

        let v = assemble_global_cm(&table1(1.0, 10.0), HalfSnu(0.01)).unwrap();
        assert!((v.get(0, 4) - 0.5 * 440f64.sqrt()).abs() < 1e-13);
        assert!((v.get(1, 5) + 0.5 * 440f64.sqrt()).abs() < 1e-13);
        assert!((v.get(4, 4) - 0.5 * 21.02).abs() < 1e-13);
        let m = v.matrix();
        assert_eq!(m, &m.transpose());
        assert!(
            v.block(4, 6, 2, 2).amax() == 0.0 && v.block(0, 6, 2, 2).amax() == 0.0 && v.block(2, 4, 2, 2).amax() == 0.0
        );
    }

    #[test]
    fn theta_examples() {
        let p = ProtocolParams::default();
        assert_eq!(theta_value(&p, ThetaMode::Gkp { sigma_r2: 0.0 }), 21.0);
        assert_eq!(theta_value(&p, ThetaMode::PreampOnly), 21.0);
        let p2 = ProtocolParams { tau_b: 0.5, ..p };
        assert!((theta_value(&p2, ThetaMode::Gkp { sigma_r2: 0.05 }) - 16.05).abs() < 1e-12);
        let g = assemble_global_cm(&p2, HalfSnu(0.05)).unwrap();
        assert!((theta_from_global(&g) - 16.05).abs() < 1e-12);
        let q = table1(2.0, 7.0);
        let g = assemble_link_cm(&q, AliceLink::preamp(&q)).unwrap();
        assert!((theta_from_global(&g) - theta_value(&q, ThetaMode::PreampOnly)).abs() < 1e-12);
    }

    #[test]
    fn uncorrelated_relay_leaves_state() {
        let p = ProtocolParams::default().with_modulation(0.0, 0.0);
        let g = assemble_global_cm(&p, HalfSnu(0.3)).unwrap();
        let st = condition_on_bell(&g, theta_from_global(&g)).unwrap();
        assert!((st.cm().matrix() - DMatrix::identity(4, 4)).amax() < 1e-15);
        assert!(condition_on_bell(&g, 0.0).is_err());
    }

    /// Hand substitution: with τ_A = τ_B = 1 and σ_r² = 0, D = 42 and
    /// Φ = φ = 21 − 440/42, ψ = 440/42.
    #[test]
    fn lossless_hand_evaluation() {
        let st = conditioned_state(&table1(0.0, 0.0), AliceLink::corrected(0.0)).unwrap();
        let (d, c) = (21.0 - 440.0 / 42.0, 440.0 / 42.0);
        let f = st.standard_form().unwrap();
        assert!((f.a - d).abs() < 1e-12 && (f.b - d).abs() < 1e-12);
        assert!((f.c_q - c).abs() < 1e-12 && (f.c_p + c).abs() < 1e-12);
        assert!(holevo_bound(&st).unwrap().chi.abs() < 1e-6);
    }

    #[test]
    fn matches_explicit_phi_psi_form() {
        for (la, lb, s) in [(1.0, 10.0, 0.012), (0.0, 3.0, 0.0), (2.5, 40.0, 0.2)] {
            let p = table1(la, lb);
            let st = conditioned_state(&p, AliceLink::corrected(s)).unwrap();
            let (sa, sb, tb) = (p.sigma2_a, p.sigma2_b, p.tau_b);
            let xi = 1.0 / (sa + 2.0 * s + tb * sb + 2.0);
            let big_phi = sa + 1.0 - (sa * sa + 2.0 * sa) * xi;
            let small_phi = sb + 1.0 - tb * (sb * sb + 2.0 * sb) * xi;
            let psi = (tb * (sa * sa + 2.0 * sa) * (sb * sb + 2.0 * sb)).sqrt() * xi;
            let f = st.standard_form().unwrap();
            assert!((f.a - big_phi).abs() < 1e-12 && (f.b - small_phi).abs() < 1e-12);
            assert!((f.c_q - psi).abs() < 1e-12 && (f.c_p + psi).abs() < 1e-12);
        }
    }

    #[test]
    fn mutual_information_zero_without_correlation() {
        let st =
            ConditionedState::from_standard_form(StandardForm { a: 3.0, b: 5.0, c_q: 0.0, c_p: 0.0 }, 1.0).unwrap();
        assert_eq!(mutual_information(&st).unwrap(), 0.0);
    }

    #[test]
    fn holevo_dual_path() {
        let p = table1(1.0, 10.0);
        let (_, s) = crate::gkp::optimize_squeezing(1.0 - p.tau_a, crate::gkp::Ancilla::finite(20.0)).unwrap();
        let st = conditioned_state(&p, AliceLink::corrected(s)).unwrap();
        let fast = holevo_bound(&st).unwrap();
        let generic = symplectic_spectrum(st.cm()).unwrap();
        let vb = st.bob_given_alice().unwrap();
        let v3 = symplectic_spectrum(&vb).unwrap()[0];
        let chi = h_function(generic[0]).unwrap() + h_function(generic[1]).unwrap() - h_function(v3).unwrap();
        assert!((fast.chi - chi).abs() < 1e-9, "{} {chi}", fast.chi);
        assert!((fast.v1 - generic[0]).abs() < 1e-9 && (fast.v2 - generic[1]).abs() < 1e-9);
    }

    #[test]
    fn pure_state_holevo_is_clamped() {
        // TMSV: v1 = v2 = 1, v3 = 1 as well; shift b to make v3 > 1 impossible, use a pure state
        let v = 5.0f64;
        let st = ConditionedState::from_standard_form(
            StandardForm { a: v, b: v, c_q: (v * v - 1.0).sqrt(), c_p: -(v * v - 1.0).sqrt() },
            1.0,
        )
        .unwrap();
        let h = holevo_bound(&st).unwrap();
        assert!(h.chi >= 0.0 && (h.v1 - 1.0).abs() < 1e-9 && (h.v2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn no_signal_gives_negative_rate() {
        let mut p = table1(1.0, 0.0);
        p.tau_b = 1e-30;
        let r = asymptotic_rate(&p, AliceLink::preamp(&p)).unwrap();
        assert!(r.rate <= 0.0);
        let p = table1(1.0, 150.0);
        assert!(asymptotic_rate(&p, AliceLink::preamp(&p)).unwrap().rate < 0.0);
    }

    #[test]
    fn ci_rci_examples() {
        let st = conditioned_state(&table1(0.0, 0.0), AliceLink::corrected(0.0)).unwrap();
        let (ci, rci) = ci_rci(&st).unwrap();
        assert!((ci - rci).abs() < 1e-12);
        // first-principles entropies from the generic spectrum
        let g = symplectic_spectrum(st.cm()).unwrap();
        let na = st.cm().mode(0).matrix().determinant().sqrt();
        let expect = h_function(na).unwrap() - h_function(g[0]).unwrap() - h_function(g[1]).unwrap();
        assert!((rci - expect).abs() < 1e-9);
        // the ordering follows the conditional variances Φ (Alice) and φ (Bob)
        for la in [0.5, 1.0, 2.0, 10.0] {
            for lb in [0.0, 1.0, 5.0, 20.0] {
                let p = table1(la, lb);
                for link in [AliceLink::Lossy, AliceLink::preamp(&p), AliceLink::corrected(0.02)] {
                    let st = conditioned_state(&p, link).unwrap();
                    let f = st.standard_form().unwrap();
                    let (ci, rci) = ci_rci(&st).unwrap();
                    assert!((rci - ci) * (f.a - f.b) >= -1e-12, "la={la} lb={lb} {link:?}");
                    if link == AliceLink::Lossy && la >= lb {
                        assert!(rci >= ci);
                    }
                    if link != AliceLink::Lossy {
                        assert!(ci >= rci - 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn rate_non_increasing_in_l_b() {
        for link in [AliceLink::corrected(0.02), AliceLink::corrected(0.0)] {
            let mut prev = f64::INFINITY;
            for i in 0..200 {
                let p = table1(1.0, i as f64 * 2.0);
                let r = asymptotic_rate(&p, link).unwrap().rate;
                assert!(r <= prev + 1e-12, "L_B={} {r} > {prev}", i * 2);
                prev = r;
            }
        }
    }

    #[test]
    fn gkp_beats_break_even_substitution() {
        let anc = crate::gkp::Ancilla::finite(20.0);
        for la in [0.5, 1.0, 2.0, 3.0] {
            let s2 = 1.0 - fiber_transmittance(la, 0.2).unwrap();
            let (_, s) = crate::gkp::optimize_squeezing(s2, anc).unwrap();
            for lb in [0.0, 5.0, 10.0, 20.0] {
                let p = table1(la, lb);
                let coded = asymptotic_rate(&p, AliceLink::corrected(s)).unwrap().rate;
                let plain = asymptotic_rate(&p, AliceLink::corrected(s2)).unwrap().rate;
                assert!(coded >= plain);
            }
        }
    }

    proptest! {
        #[test]
        fn rate_quantities_well_behaved(
            sa in 0.5f64..40.0, sb in 0.5f64..40.0, ta in 0.05f64..1.0, tb in 0.0f64..1.0, s in 0.0f64..0.8,
        ) {
            let p = ProtocolParams { sigma2_a: sa, sigma2_b: sb, tau_a: ta, tau_b: tb, ..Default::default() };
            for link in [AliceLink::Lossy, AliceLink::corrected(s)] {
                let st = conditioned_state(&p, link).unwrap();
                prop_assert!(st.cm().is_physical());
                let r = rate_from_state(&st, 1.0).unwrap();
                prop_assert!(r.mutual_info >= 0.0 && r.holevo >= 0.0);
                prop_assert!(r.rate.is_finite());
            }
        }
    }
}
