//! GKP-TMS oscillator-to-oscillator code with linear-estimation decoding.
//!
//! The data mode is two-mode squeezed with a square-lattice GKP ancilla, both
//! pass an AWGN channel of variance σ², and after un-squeezing the ancilla is
//! homodyned and reduced modulo `√(2π)`. The data displacement is then
//! corrected by `φ·s`.
//!
//! The q and p quadratures decouple. Per quadrature the problem is
//! one-dimensional: data noise `x` with variance `σ² cosh 2r`, syndrome
//! argument `y` with variance `σ² cosh 2r + Δ²` and covariance
//! `σ² sinh 2r`, and the residual `x − φ_eff·R(y)`.
//!
//! A finite-squeezing ancilla (`Δ² = 10^{−s_Δ/10}/2`) contributes Δ² twice:
//! once on the syndrome before wrapping, and once as a displacement left on
//! the data mode after correction. The gain `φ_eff = −V_d⁻¹V_da` is taken
//! from the noise-broadened joint covariance, so it equals `tanh 2r` only for
//! the ideal ancilla.
//!
//! All variances here use vacuum = ½.

use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::CovMatrix;
use crate::quad;

/// Lattice spacing `ℓ = √(2π)`.
pub const LATTICE: f64 = 2.506_628_274_631_000_5;
/// Half-width of the syndrome interval `ℑ = [−√(π/2), √(π/2)]`.
pub const HALF_CELL: f64 = 1.253_314_137_315_500_3;
/// Upper end of the squeezing search range.
pub const R_MAX: f64 = 3.0;

const MASS_Z: f64 = 7.2;
const MAX_TRUNCATION: usize = 10_000;
const REL_TOL: f64 = 1e-12;

/// GKP ancilla quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ancilla {
    Ideal,
    /// Finitely squeezed GKP state, squeezing in dB.
    Finite {
        squeezing_db: f64,
    },
}

impl Ancilla {
    pub fn finite(squeezing_db: f64) -> Self {
        Ancilla::Finite { squeezing_db }
    }

    /// `Δ² = 10^{−s_Δ/10}/2`, zero for the ideal ancilla.
    pub fn delta2(&self) -> f64 {
        match *self {
            Ancilla::Ideal => 0.0,
            Ancilla::Finite { squeezing_db } => 0.5 * 10f64.powf(-squeezing_db / 10.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Ancilla::Finite { squeezing_db } if !(squeezing_db > 0.0 && squeezing_db.is_finite()) => {
                invalid("GKP squeezing must be positive and finite")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GkpCodeConfig {
    /// TMS squeezing parameter.
    pub r: f64,
    pub ancilla: Ancilla,
}

impl GkpCodeConfig {
    pub fn new(r: f64, ancilla: Ancilla) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return invalid("TMS squeezing r must be finite and non-negative");
        }
        ancilla.validate()?;
        Ok(Self { r, ancilla })
    }

    pub fn residual_variance(&self, sigma2: f64) -> Result<f64> {
        residual_variance(self.r, sigma2, self.ancilla)
    }
}

/// Precision blocks of the reshaped noise (data, then Ω-rotated ancilla).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBlocks {
    pub v_d: Matrix2<f64>,
    pub v_da: Matrix2<f64>,
    pub v_a: Matrix2<f64>,
    pub v_d_given_a: Matrix2<f64>,
}

/// CM of the reshaped noise `z`, from its component formulas.
pub fn reshaped_noise_cm(r: f64, sigma2: f64) -> Result<CovMatrix> {
    if !(r >= 0.0 && r.is_finite() && sigma2 >= 0.0 && sigma2.is_finite()) {
        return invalid("reshaped_noise_cm needs r >= 0 and sigma2 >= 0");
    }
    let (c, s) = (sigma2 * (2.0 * r).cosh(), sigma2 * (2.0 * r).sinh());
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
          c, 0.0,  -s, 0.0,
        0.0,   c, 0.0,  -s,
         -s, 0.0,   c, 0.0,
        0.0,  -s, 0.0,   c,
    ]);
    CovMatrix::new(m)
}

fn omega2() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

/// Inverts `(I ⊕ Ω) V_z (I ⊕ Ωᵀ)` and splits it into blocks.
pub fn conditioning_blocks(v_z: &CovMatrix) -> Result<NoiseBlocks> {
    if v_z.dim() != 4 {
        return invalid("conditioning_blocks expects a 4x4 CM");
    }
    let mut rot = DMatrix::<f64>::identity(4, 4);
    rot.view_mut((2, 2), (2, 2)).copy_from(&omega2());
    let w = &rot * v_z.matrix() * rot.transpose();
    let p = w.try_inverse().ok_or(Error::Singular("conditioning_blocks"))?;
    let blk = |i: usize, j: usize| Matrix2::from_fn(|a, b| p[(i + a, j + b)]);
    let (v_d, v_da, v_a) = (blk(0, 0), blk(0, 2), blk(2, 2));
    let v_d_inv = v_d.try_inverse().ok_or(Error::Singular("conditioning_blocks"))?;
    let v_d_given_a = v_a - v_da.transpose() * v_d_inv * v_da;
    Ok(NoiseBlocks { v_d, v_da, v_a, v_d_given_a })
}

impl NoiseBlocks {
    /// `φ = −V_d⁻¹ V_da`.
    pub fn estimator(&self) -> Result<Matrix2<f64>> {
        let inv = self.v_d.try_inverse().ok_or(Error::Singular("estimator"))?;
        Ok(-inv * self.v_da)
    }
}

/// Ideal-ancilla linear estimator `μ̃·Ω` with `μ̃ = 2 cosh r sinh r / (cosh² r + sinh² r)`.
pub fn linear_estimator(r: f64) -> Matrix2<f64> {
    let (c, s) = (r.cosh(), r.sinh());
    omega2() * (2.0 * c * s / (c * c + s * s))
}

/// `x − n◇(x)·√(2π)` with ties rounded away from zero.
pub fn syndrome_reduce(x: f64) -> f64 {
    let t = x - (x / LATTICE).round() * LATTICE;
    t.clamp(-HALF_CELL, HALF_CELL)
}

pub fn syndrome_reduce_vec(x: Vector2<f64>) -> Vector2<f64> {
    x.map(syndrome_reduce)
}

/// Estimator gain `φ_eff = σ² sinh 2r / (σ² cosh 2r + Δ²)`.
pub fn estimator_gain(r: f64, sigma2: f64, ancilla: Ancilla) -> f64 {
    let b = sigma2 * (2.0 * r).cosh() + ancilla.delta2();
    if b == 0.0 {
        return 0.0;
    }
    sigma2 * (2.0 * r).sinh() / b
}

/// Moments of a centered Gaussian `y ~ N(0, b)` after wrapping into `ℑ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrappedMoments {
    /// `E[y·R(y)]`
    pub cross: f64,
    /// `E[R(y)²]`
    pub second: f64,
    /// Lattice-sum truncation radius used.
    pub truncation: usize,
}

/// Truncation radius leaving less than 1e-12 Gaussian mass outside `|n| ≤ K`.
pub fn truncation_radius(b: f64) -> usize {
    ((MASS_Z * b.sqrt() / LATTICE - 0.5).ceil().max(1.0)) as usize
}

/// Wrapped moments with the adaptive truncation radius.
pub fn wrapped_moments(b: f64) -> Result<WrappedMoments> {
    wrapped_moments_with(b, truncation_radius(b))
}

/// Wrapped moments with an explicit truncation radius `K`.
pub fn wrapped_moments_with(b: f64, k: usize) -> Result<WrappedMoments> {
    if !(b >= 0.0 && b.is_finite()) {
        return invalid("wrapped moments need a finite non-negative variance");
    }
    if b == 0.0 {
        return Ok(WrappedMoments { cross: 0.0, second: 0.0, truncation: 0 });
    }
    if k > MAX_TRUNCATION {
        return Err(Error::NonConvergent(format!("lattice sum for variance {b:e}")));
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI * b).sqrt();
    let kk = k as i64;
    // both integrands are even in t; integrate over [0, ℑ/2] and double
    let sums = move |t: f64| {
        let (mut dens, mut first) = (0.0, 0.0);
        for n in -kk..=kk {
            let y = t + n as f64 * LATTICE;
            let g = norm * (-y * y / (2.0 * b)).exp();
            dens += g;
            first += y * g;
        }
        (dens, first)
    };
    let peak = (12.0 * b.sqrt()).min(HALF_CELL);
    let breaks = [0.0, peak, HALF_CELL];
    let abs_tol = 1e-15 * b.min(1.0);
    let second = 2.0 * quad::integrate(|t| t * t * sums(t).0, &breaks, REL_TOL, abs_tol)?;
    let cross = 2.0 * quad::integrate(|t| t * sums(t).1, &breaks, REL_TOL, abs_tol)?;
    Ok(WrappedMoments { cross, second, truncation: k })
}

fn check_inputs(r: f64, sigma2: f64, ancilla: Ancilla) -> Result<()> {
    if !(r >= 0.0 && r.is_finite()) {
        return invalid("TMS squeezing r must be finite and non-negative");
    }
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return invalid("channel variance must be finite and non-negative");
    }
    ancilla.validate()
}

/// Per-quadrature residual variance `σ_r²` after decoding.
pub fn residual_variance(r: f64, sigma2: f64, ancilla: Ancilla) -> Result<f64> {
    check_inputs(r, sigma2, ancilla)?;
    let b = sigma2 * (2.0 * r).cosh() + ancilla.delta2();
    residual_from(r, sigma2, ancilla, wrapped_moments(b)?)
}

/// Same as [`residual_variance`] with an explicit lattice-sum truncation radius.
pub fn residual_variance_truncated(r: f64, sigma2: f64, ancilla: Ancilla, k: usize) -> Result<f64> {
    check_inputs(r, sigma2, ancilla)?;
    let b = sigma2 * (2.0 * r).cosh() + ancilla.delta2();
    residual_from(r, sigma2, ancilla, wrapped_moments_with(b, k)?)
}

fn residual_from(r: f64, sigma2: f64, ancilla: Ancilla, m: WrappedMoments) -> Result<f64> {
    let d2 = ancilla.delta2();
    let var_x = sigma2 * (2.0 * r).cosh();
    let cov_xy = sigma2 * (2.0 * r).sinh();
    let b = var_x + d2;
    let phi = estimator_gain(r, sigma2, ancilla);
    let regress = if b > 0.0 { cov_xy / b } else { 0.0 };
    let v = var_x - 2.0 * phi * regress * m.cross + phi * phi * m.second + d2;
    Ok(v.max(0.0))
}

/// Minimizes [`residual_variance`] over `r ∈ [0, 3]`: 200-point grid, then golden section.
pub fn optimize_squeezing(sigma2: f64, ancilla: Ancilla) -> Result<(f64, f64)> {
    check_inputs(0.0, sigma2, ancilla)?;
    const GRID: usize = 200;
    let f = |r: f64| residual_variance(r, sigma2, ancilla);
    let mut best = (0.0, f(0.0)?);
    let step = R_MAX / (GRID - 1) as f64;
    let mut best_i = 0;
    for i in 1..GRID {
        let r = i as f64 * step;
        let v = f(r)?;
        if v < best.1 {
            best = (r, v);
            best_i = i;
        }
    }
    let (mut a, mut b) = (best_i.saturating_sub(1) as f64 * step, ((best_i + 1).min(GRID - 1)) as f64 * step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > 1e-9 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let r = 0.5 * (a + b);
    let v = f(r)?;
    Ok(if v < best.1 { (r, v) } else { best })
}

/// Single-layer lower bound `σ⁴ / (e (1 − σ²)²)`.
pub fn lower_bound_variance(sigma2: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&sigma2) {
        return invalid("lower bound needs sigma2 in [0, 1)");
    }
    Ok(sigma2 * sigma2 / (std::f64::consts::E * (1.0 - sigma2).powi(2)))
}

/// Break-even variance: correction helps only below `σ_be² = σ²`.
pub fn break_even(sigma2: f64) -> f64 {
    sigma2
}

/// `C` layers of one-by-one concatenation accumulate `C·σ_r²`.
pub fn concat_variance(sigma_r2_single: f64, layers: u32) -> f64 {
    layers as f64 * sigma_r2_single
}

/// Concatenated residual over a link of `length_km` split into `layers` equal
/// pre-amplified segments, each with its own optimized code.
pub fn concatenated_residual(length_km: f64, layers: u32, alpha0: f64, ancilla: Ancilla) -> Result<f64> {
    if layers == 0 {
        return invalid("layer count must be at least 1");
    }
    let tau = crate::channels::fiber_transmittance(length_km / layers as f64, alpha0)?;
    let (_, single) = optimize_squeezing(crate::channels::awgn_variance_preamp(tau, 0.0), ancilla)?;
    Ok(concat_variance(single, layers))
}
