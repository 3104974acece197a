//! Symplectic and covariance-matrix primitives.
//!
//! Quadratures are ordered `(q1, p1, q2, p2, ...)` and the symplectic form is
//! the direct sum of `[[0, 1], [-1, 0]]`. Matrices here are dimensionless; the
//! unit convention (vacuum 1 or vacuum ½) belongs to the caller, see [`crate::units`].

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Error, Result};

/// Tolerance below 1 within which a symplectic eigenvalue is clamped to 1.
pub const PHYSICAL_TOL: f64 = 1e-9;

/// Real symmetric `2n x 2n` covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    m: DMatrix<f64>,
}

impl CovMatrix {
    /// Validates shape, finiteness and symmetry (relative 1e-10).
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let (r, c) = m.shape();
        if r != c || r == 0 || r % 2 != 0 {
            return invalid(format!("covariance matrix must be 2n x 2n, got {r}x{c}"));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return invalid("covariance matrix has non-finite entries");
        }
        let scale = m.amax().max(1.0);
        for i in 0..r {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                    return invalid(format!("covariance matrix not symmetric at ({i},{j})"));
                }
            }
        }
        Ok(Self { m: symmetrize(m) })
    }

    pub fn from_row_slice(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return invalid("entry count does not match dimension");
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn identity(n_modes: usize) -> Self {
        Self { m: DMatrix::identity(2 * n_modes, 2 * n_modes) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.dim() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    /// Copy of the `rows x cols` block starting at `(row, col)`.
    pub fn block(&self, row: usize, col: usize, rows: usize, cols: usize) -> DMatrix<f64> {
        self.m.view((row, col), (rows, cols)).into_owned()
    }

    /// Reduced state of mode `k`.
    pub fn mode(&self, k: usize) -> CovMatrix {
        CovMatrix { m: self.block(2 * k, 2 * k, 2, 2) }
    }

    pub fn scaled(&self, factor: f64) -> CovMatrix {
        CovMatrix { m: &self.m * factor }
    }

    /// `S V Sᵀ`.
    pub fn transformed(&self, s: &SymplecticMatrix) -> Result<CovMatrix> {
        if s.dim() != self.dim() {
            return invalid("symplectic and covariance dimensions differ");
        }
        Ok(CovMatrix { m: symmetrize(&s.m * &self.m * s.m.transpose()) })
    }

    /// Whether `V + iΩ ⪰ 0` within [`PHYSICAL_TOL`].
    pub fn is_physical(&self) -> bool {
        symplectic_spectrum(self).is_ok_and(|v| v.iter().all(|&x| x >= 1.0 - PHYSICAL_TOL))
    }
}

/// Real matrix satisfying `S Ω Sᵀ = Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    m: DMatrix<f64>,
}

impl SymplecticMatrix {
    /// Checks the symplectic condition, relative to the squared entry scale of `m`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let (r, c) = m.shape();
        if r != c || r == 0 || r % 2 != 0 {
            return invalid(format!("symplectic matrix must be 2n x 2n, got {r}x{c}"));
        }
        let omega = omega(r / 2);
        let err = (&m * &omega * m.transpose() - &omega).amax();
        let scale = m.amax().max(1.0).powi(2);
        if !(err <= 1e-12 * scale) {
            return invalid(format!("matrix violates the symplectic condition by {err:e}"));
        }
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn transpose(&self) -> SymplecticMatrix {
        SymplecticMatrix { m: self.m.transpose() }
    }

    /// `S⁻¹ = Ω Sᵀ Ωᵀ`, exact for symplectic `S`.
    pub fn inverse(&self) -> SymplecticMatrix {
        let o = omega(self.dim() / 2);
        SymplecticMatrix { m: &o * self.m.transpose() * o.transpose() }
    }

    pub fn compose(&self, rhs: &SymplecticMatrix) -> SymplecticMatrix {
        SymplecticMatrix { m: &self.m * &rhs.m }
    }

    pub fn direct_sum(&self, rhs: &SymplecticMatrix) -> SymplecticMatrix {
        SymplecticMatrix { m: direct_sum(&self.m, &rhs.m) }
    }
}

fn omega(n_modes: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        o[(2 * k, 2 * k + 1)] = 1.0;
        o[(2 * k + 1, 2 * k)] = -1.0;
    }
    o
}

pub(crate) fn direct_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Block-diagonal symplectic form for `n_modes` modes.
pub fn symplectic_form(n_modes: usize) -> Result<SymplecticMatrix> {
    if n_modes == 0 {
        return invalid("n_modes must be at least 1");
    }
    Ok(SymplecticMatrix { m: omega(n_modes) })
}

/// Single-mode squeezer `diag(e^{-r}, e^{r})`.
pub fn squeezer(r: f64) -> SymplecticMatrix {
    SymplecticMatrix { m: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![(-r).exp(), r.exp()])) }
}

/// Balanced beam splitter on two modes.
pub fn beam_splitter_half() -> SymplecticMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
         h, 0.0,   h, 0.0,
        0.0,  h, 0.0,   h,
        -h, 0.0,   h, 0.0,
        0.0, -h, 0.0,   h,
    ]);
    SymplecticMatrix { m }
}

/// Two-mode squeezer `B½ (S(r) ⊕ S(−r)) B½ᵀ = [[cosh r I, sinh r Z], [sinh r Z, cosh r I]]`.
pub fn tms_symplectic(r: f64) -> Result<SymplecticMatrix> {
    if !r.is_finite() {
        return invalid("squeezing parameter must be finite");
    }
    let (c, s) = (r.cosh(), r.sinh());
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
          c, 0.0,   s, 0.0,
        0.0,   c, 0.0,  -s,
          s, 0.0,   c, 0.0,
        0.0,  -s, 0.0,   c,
    ]);
    Ok(SymplecticMatrix { m })
}

/// All `n` symplectic eigenvalues of `V`, sorted descending.
///
/// With `V = L Lᵀ`, the matrix `A = Lᵀ Ω L` is antisymmetric and similar to
/// `ΩV`, so the eigenvalues of the symmetric `AᵀA` are the squared symplectic
/// eigenvalues, each appearing twice.
pub fn symplectic_spectrum(v: &CovMatrix) -> Result<Vec<f64>> {
    let chol = v.m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let a = l.transpose() * omega(v.n_modes()) * &l;
    let ata = symmetrize(a.transpose() * &a);
    let mut ev: Vec<f64> = SymmetricEigen::new(ata).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    Ok(ev.chunks(2).map(|p| (0.5 * (p[0] + p[1])).max(0.0).sqrt()).collect())
}

/// The two symplectic eigenvalues of a two-mode CM, descending.
pub fn symplectic_eigenvalues(v: &CovMatrix) -> Result<(f64, f64)> {
    if v.dim() != 4 {
        return invalid("symplectic_eigenvalues expects a 4x4 matrix");
    }
    let s = symplectic_spectrum(v)?;
    Ok((s[0], s[1]))
}

/// Entropy function `g((v-1)/2)` in bits for symplectic eigenvalue `v`.
pub fn h_function(v: f64) -> Result<f64> {
    if !(v >= 1.0 - PHYSICAL_TOL) {
        return Err(Error::Unphysical(v));
    }
    if v <= 1.0 {
        return Ok(0.0);
    }
    let (a, b) = ((v + 1.0) / 2.0, (v - 1.0) / 2.0);
    Ok(a * a.log2() - b * b.log2())
}

/// Heterodyne conditioning `V_b − C (V_a + I)⁻¹ Cᵀ`.
///
/// `cross` has the rows of `vb` and the columns of `va`.
pub fn schur_condition(va: &DMatrix<f64>, vb: &DMatrix<f64>, cross: &DMatrix<f64>) -> Result<CovMatrix> {
    if va.nrows() != va.ncols() || vb.nrows() != vb.ncols() || cross.shape() != (vb.nrows(), va.nrows()) {
        return invalid("schur_condition blocks are not conformable");
    }
    let shifted = va + DMatrix::identity(va.nrows(), va.nrows());
    let solved = shifted.lu().solve(&cross.transpose()).ok_or(Error::Singular("schur_condition"))?;
    CovMatrix::new(symmetrize(vb - cross * solved))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tmsv(v: f64) -> CovMatrix {
        let c = (v * v - 1.0).sqrt();
        CovMatrix::from_row_slice(
            4,
            &[
                v, 0.0, c, 0.0, //
                0.0, v, 0.0, -c, c, 0.0, v, 0.0, 0.0, -c, 0.0, v,
            ],
        )
        .unwrap()
    }

    #[test]
    fn omega_shapes() {
        let o1 = symplectic_form(1).unwrap();
        assert_eq!(o1.matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let o2 = symplectic_form(2).unwrap();
        assert_eq!(o2.matrix(), &direct_sum(o1.matrix(), o1.matrix()));
        for n in 1..5 {
            let o = symplectic_form(n).unwrap();
            let m = o.matrix();
            assert_eq!(m * m.transpose(), DMatrix::identity(2 * n, 2 * n));
            assert_eq!(m * m, -DMatrix::identity(2 * n, 2 * n));
        }
        assert!(symplectic_form(0).is_err());
    }

    #[test]
    fn tms_matches_factor_product() {
        assert_eq!(tms_symplectic(0.0).unwrap().matrix(), &DMatrix::identity(4, 4));
        let r = 0.5;
        let b = beam_splitter_half();
        let composed = b.compose(&squeezer(r).direct_sum(&squeezer(-r))).compose(&b.transpose());
        let direct = tms_symplectic(r).unwrap();
        assert!((composed.matrix() - direct.matrix()).amax() < 1e-14);
        assert!(SymplecticMatrix::new(direct.matrix().clone()).is_ok());
    }

    #[test]
    fn spectrum_examples() {
        let (a, b) = symplectic_eigenvalues(&CovMatrix::identity(2)).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        let thermal = CovMatrix::identity(2).scaled(2.0);
        let (a, b) = symplectic_eigenvalues(&thermal).unwrap();
        assert!((a - 2.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
        let (a, b) = symplectic_eigenvalues(&tmsv(3.0)).unwrap();
        assert!((a - 1.0).abs() < 1e-9 && (b - 1.0).abs() < 1e-9);
    }

    /// Independent path: eigenvalues of the complex Hermitian `iΩV`.
    #[test]
    fn spectrum_matches_complex_eigen() {
        use nalgebra::Complex;
        let v = CovMatrix::from_row_slice(
            4,
            &[
                5.0, 0.3, 2.0, 0.1, //
                0.3, 4.0, 0.2, -1.5, 2.0, 0.2, 3.0, 0.0, 0.1, -1.5, 0.0, 6.0,
            ],
        )
        .unwrap();
        let o = omega(2);
        let m = (&o * v.matrix()).map(|x| Complex::new(0.0, x));
        let mut ev: Vec<f64> = m.eigenvalues().unwrap().iter().map(|z| z.re.abs()).collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        let s = symplectic_spectrum(&v).unwrap();
        assert!((s[0] - ev[0]).abs() < 1e-10 && (s[1] - ev[2]).abs() < 1e-10, "{s:?} {ev:?}");
    }

    #[test]
    fn non_positive_definite_rejected() {
        let v = CovMatrix::from_row_slice(2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        assert_eq!(symplectic_spectrum(&v), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn h_examples() {
        assert_eq!(h_function(1.0).unwrap(), 0.0);
        assert_eq!(h_function(1.0 - 5e-10).unwrap(), 0.0);
        assert!((h_function(3.0).unwrap() - 2.0).abs() < 1e-15);
        let direct = 1.5 * 1.5f64.log2() - 0.5 * 0.5f64.log2();
        assert!((h_function(2.0).unwrap() - direct).abs() < 1e-15);
        assert!((h_function(2.0).unwrap() - 1.3774438).abs() < 1e-7);
        assert!(h_function(0.99).is_err());
    }

    #[test]
    fn schur_examples() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        let vb = &i2 * 2.0;
        let out = schur_condition(&i2, &vb, &DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(out.matrix(), &vb);
        let out = schur_condition(&i2, &vb, &i2).unwrap();
        assert!((out.matrix() - &i2 * 1.5).amax() < 1e-15);
        let sing = -&i2;
        assert_eq!(schur_condition(&sing, &vb, &i2), Err(Error::Singular("schur_condition")));
    }

    fn random_symplectic(params: &[f64]) -> SymplecticMatrix {
        let rot = |t: f64| {
            let (c, s) = (t.cos(), t.sin());
            SymplecticMatrix::new(DMatrix::from_row_slice(2, 2, &[c, s, -s, c])).unwrap()
        };
        let local =
            rot(params[0]).compose(&squeezer(params[1])).direct_sum(&rot(params[2]).compose(&squeezer(params[3])));
        let bs = {
            let (c, s) = (params[4].cos(), params[4].sin());
            #[rustfmt::skip]
            let m = DMatrix::from_row_slice(4, 4, &[
                c, 0.0, s, 0.0,
                0.0, c, 0.0, s,
                -s, 0.0, c, 0.0,
                0.0, -s, 0.0, c,
            ]);
            SymplecticMatrix::new(m).unwrap()
        };
        local.compose(&bs).compose(&tms_symplectic(params[5]).unwrap())
    }

    proptest! {
        #[test]
        fn generated_symplectics_preserve_form(p in proptest::collection::vec(-1.0f64..1.0, 6)) {
            let s = random_symplectic(&p);
            let o = omega(2);
            let err = (s.matrix() * &o * s.matrix().transpose() - &o).amax();
            prop_assert!(err < 1e-12, "err {err}");
            let inv = s.inverse();
            prop_assert!((inv.matrix() * s.matrix() - DMatrix::identity(4, 4)).amax() < 1e-12);
        }

        #[test]
        fn spectrum_congruence_invariant(
            p in proptest::collection::vec(-1.0f64..1.0, 6),
            r in 0.0f64..1.2, na in 0.0f64..3.0, nb in 0.0f64..3.0, t in 0.0f64..1.0,
        ) {
            // a TMSV with added noise and attenuated correlations is always physical
            let (a, b, c) = ((2.0 * r).cosh() + na, (2.0 * r).cosh() + nb, t * (2.0 * r).sinh());
            let v = CovMatrix::from_row_slice(4, &[
                a, 0.0, c, 0.0,
                0.0, a, 0.0, -c,
                c, 0.0, b, 0.0,
                0.0, -c, 0.0, b,
            ]).unwrap();
            let s = random_symplectic(&p);
            let w = v.transformed(&s.transpose()).unwrap();
            let (x1, x2) = symplectic_eigenvalues(&v).unwrap();
            let (y1, y2) = symplectic_eigenvalues(&w).unwrap();
            prop_assert!((x1 - y1).abs() < 1e-9 * x1.max(1.0), "{x1} {y1}");
            prop_assert!((x2 - y2).abs() < 1e-9 * x1.max(1.0), "{x2} {y2}");
        }

        #[test]
        fn h_monotone_nonnegative(v in 1.0f64..100.0, dv in 1e-6f64..10.0) {
            let a = h_function(v).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!(h_function(v + dv).unwrap() > a);
        }

        #[test]
        fn schur_symmetric_positive(
            a in 1.0f64..10.0, b in 1.0f64..10.0, t in 0.0f64..0.99, skew in -0.3f64..0.3,
        ) {
            let c = t * (a * a - 1.0).sqrt().min((b * b - 1.0).sqrt());
            let va = DMatrix::from_row_slice(2, 2, &[a, skew * 0.1, skew * 0.1, a]);
            let vb = DMatrix::from_row_slice(2, 2, &[b, 0.0, 0.0, b]);
            let cross = DMatrix::from_row_slice(2, 2, &[c, skew, 0.0, -c]);
            let out = schur_condition(&va, &vb, &cross).unwrap();
            let m = out.matrix();
            prop_assert!((m - m.transpose()).amax() < 1e-12);
            // 2x2 closed-form inverse as the reference path
            let s = &va + DMatrix::identity(2, 2);
            let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
            let inv = DMatrix::from_row_slice(2, 2, &[s[(1, 1)], -s[(0, 1)], -s[(1, 0)], s[(0, 0)]]) / det;
            let reference = &vb - &cross * inv * cross.transpose();
            prop_assert!((m - reference).amax() < 1e-12);
            if m[(0, 0)] > 0.0 && m.determinant() > 0.0 {
                prop_assert!(out.matrix().clone().cholesky().is_some());
            }
        }
    }
}
