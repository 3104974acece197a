//! Globally adaptive Gauss–Legendre quadrature.

use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const ORDER: usize = 16;
const MAX_SEGMENTS: usize = 4000;

fn rule() -> &'static ([f64; ORDER], [f64; ORDER]) {
    static RULE: OnceLock<([f64; ORDER], [f64; ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut x = [0.0; ORDER];
        let mut w = [0.0; ORDER];
        let n = ORDER as f64;
        for i in 0..ORDER {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=ORDER {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
        (x, w)
    })
}

fn gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (x, w) = rule();
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * x.iter().zip(w).map(|(&xi, &wi)| wi * f(mid + half * xi)).sum::<f64>()
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Segment {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

fn segment<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let m = 0.5 * (a + b);
    let whole = gauss(f, a, b);
    let halves = gauss(f, a, m) + gauss(f, m, b);
    Segment { a, b, value: halves, err: (whole - halves).abs() }
}

/// Integrates `f` over consecutive `breaks` (at least two points) until the
/// summed error estimate is below `rel_tol·|I| + abs_tol`.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: F, breaks: &[f64], rel_tol: f64, abs_tol: f64) -> Result<f64> {
    let mut heap: BinaryHeap<Segment> =
        breaks.windows(2).filter(|w| w[1] > w[0]).map(|w| segment(&f, w[0], w[1])).collect();
    loop {
        let total: f64 = heap.iter().map(|s| s.value).sum();
        let err: f64 = heap.iter().map(|s| s.err).sum();
        if !total.is_finite() {
            return Err(Error::NonConvergent("quadrature (non-finite integrand)".into()));
        }
        if err <= rel_tol * total.abs() + abs_tol {
            return Ok(total);
        }
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::NonConvergent(format!("quadrature (error {err:e} after {MAX_SEGMENTS} segments)")));
        }
        let worst = heap.pop().expect("non-empty");
        let m = 0.5 * (worst.a + worst.b);
        heap.push(segment(&f, worst.a, m));
        heap.push(segment(&f, m, worst.b));
    }
}

/// Composite rule with `panels` equal panels.
pub(crate) fn composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels).map(|i| gauss(&f, a + i as f64 * h, a + (i + 1) as f64 * h)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_polynomials_exact() {
        let (x, w) = rule();
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let p = |t: f64| t.powi(30) + 3.0 * t.powi(7);
        let exact = 2.0 / 31.0;
        let est: f64 = x.iter().zip(w).map(|(&a, &b)| b * p(a)).sum();
        assert!((est - exact).abs() < 1e-14);
    }

    #[test]
    fn adaptive_resolves_narrow_peak() {
        let s = 1e-3;
        let f = |t: f64| (-(t - 0.3).powi(2) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
        let v = integrate(f, &[0.0, 0.3 - 10.0 * s, 0.3 + 10.0 * s, 1.0], 1e-12, 0.0).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
        assert!((integrate(|t| t.sqrt(), &[0.0, 1.0], 1e-10, 0.0).unwrap() - 2.0 / 3.0).abs() < 1e-9);
    }
}
