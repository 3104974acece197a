//! Monte Carlo oracles for the analytic pipeline.
//!
//! Every estimator splits its samples into fixed-size batches. Batch `k`
//! draws from its own ChaCha stream, `(stream_id << 32) | k`, and the batch
//! moment sums are combined in batch order. Results are therefore
//! bit-identical for a given `(seed, stream_id)` whatever the worker count.
//!
//! Relay noise is simulated from its physical sources. Each of Alice's and
//! Bob's prepared coherent states carries unit vacuum noise, Bob's loss
//! injects vacuum `√(1−τ_B)·e`, and Alice's corrected link adds `2σ_r²`. The
//! balanced beam splitter then leaves `Var(q_Z) = 1 + σ_r²` on each relay
//! quadrature, which is 1 SNU for a pure-loss link without residual noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::channels::ProtocolParams;
use crate::error::{invalid, Result};
use crate::finite_size::{kappa_from_eps, worst_case_correlations};
use crate::gaussian::CovMatrix;
use crate::gkp::{estimator_gain, syndrome_reduce, Ancilla};

const BATCH: usize = 1 << 16;

/// Seeded, splittable random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    /// Must fit in 32 bits; the low 32 bits of the ChaCha stream index
    /// number the batches.
    pub stream_id: u32,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u32) -> Self {
        Self { seed, stream_id }
    }

    /// Generator for batch `k` of this stream.
    pub fn batch_rng(&self, k: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((self.stream_id as u64) << 32) | k as u64);
        rng
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Raw power sums `Σx, Σx², Σx³, Σx⁴` of one variable.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: f64,
    s: [f64; 4],
}

impl Moments {
    fn push(&mut self, x: f64) {
        let x2 = x * x;
        self.n += 1.0;
        self.s[0] += x;
        self.s[1] += x2;
        self.s[2] += x2 * x;
        self.s[3] += x2 * x2;
    }

    fn merge(mut self, o: &Moments) -> Self {
        self.n += o.n;
        for i in 0..4 {
            self.s[i] += o.s[i];
        }
        self
    }

    fn estimate(&self) -> McEstimate {
        let n = self.n;
        let mu = self.s[0] / n;
        let (e2, e3, e4) = (self.s[1] / n, self.s[2] / n, self.s[3] / n);
        let m2 = (e2 - mu * mu).max(0.0);
        let m4 = e4 - 4.0 * mu * e3 + 6.0 * mu * mu * e2 - 3.0 * mu.powi(4);
        McEstimate {
            mean: mu,
            variance: m2 * n / (n - 1.0),
            stderr: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
            samples: n as u64,
        }
    }
}

/// Sample variance of one quantity with the standard error of that variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl McEstimate {
    /// Whether `value` lies within `k` standard errors of the variance estimate.
    pub fn agrees(&self, value: f64, k: f64) -> bool {
        (self.variance - value).abs() <= k * self.stderr
    }
}

/// Per-quadrature residual statistics, plus both quadratures pooled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McResidual {
    pub q: McEstimate,
    pub p: McEstimate,
    pub pooled: McEstimate,
}

fn batches(n_samples: u64) -> Vec<(u32, usize)> {
    let full = n_samples / BATCH as u64;
    let rest = (n_samples % BATCH as u64) as usize;
    let mut out: Vec<(u32, usize)> = (0..full as u32).map(|k| (k, BATCH)).collect();
    if rest > 0 {
        out.push((full as u32, rest));
    }
    out
}

/// Simulates the code directly: channel noise, TMS reshaping, ancilla
/// homodyne with reduction modulo `√(2π)`, and linear correction.
pub fn mc_residual_variance(
    r: f64,
    sigma2: f64,
    ancilla: Ancilla,
    n_samples: u64,
    stream: RngStream,
) -> Result<McResidual> {
    if n_samples < 2 {
        return invalid("need at least two samples");
    }
    let (c, s) = (r.cosh(), r.sinh());
    let sigma = sigma2.sqrt();
    let delta = ancilla.delta2().sqrt();
    let mu = estimator_gain(r, sigma2, ancilla);
    let parts: Vec<(Moments, Moments)> = batches(n_samples)
        .into_par_iter()
        .map(|(k, len)| {
            let mut rng = stream.batch_rng(k);
            let (mut mq, mut mp) = (Moments::default(), Moments::default());
            for _ in 0..len {
                let xi: [f64; 4] = std::array::from_fn(|_| sigma * normal(&mut rng));
                let zd = [c * xi[0] - s * xi[2], c * xi[1] - s * xi[3]];
                let za = [c * xi[2] - s * xi[0], c * xi[3] - s * xi[1]];
                // syndrome of Ω·x_a with the ancilla's own displacement noise
                let syn = [
                    syndrome_reduce(za[1] + delta * normal(&mut rng)),
                    syndrome_reduce(-za[0] + delta * normal(&mut rng)),
                ];
                // f(s) = μ Ω s
                let out_q = zd[0] - mu * syn[1] + delta * normal(&mut rng);
                let out_p = zd[1] + mu * syn[0] + delta * normal(&mut rng);
                mq.push(out_q);
                mp.push(out_p);
            }
            (mq, mp)
        })
        .collect();
    let (mq, mp) =
        parts.iter().fold((Moments::default(), Moments::default()), |(a, b), (x, y)| (a.merge(x), b.merge(y)));
    Ok(McResidual { q: mq.estimate(), p: mp.estimate(), pooled: mq.merge(&mp).estimate() })
}

/// Empirical Gaussian mutual information with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McMutualInfo {
    /// Bits per use, summed over both quadratures.
    pub estimate: f64,
    pub stderr: f64,
    /// Sample correlation coefficients of `q_x` and `q_y` with `q_R`.
    pub corr_xr: f64,
    pub corr_yr: f64,
    /// Standard error of a sample correlation coefficient near zero.
    pub corr_stderr: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Pair {
    n: f64,
    xx: f64,
    yy: f64,
    xy: f64,
    xr: f64,
    yr: f64,
    rr: f64,
}

impl Pair {
    fn push(&mut self, x: f64, y: f64, r: f64) {
        self.n += 1.0;
        self.xx += x * x;
        self.yy += y * y;
        self.xy += x * y;
        self.xr += x * r;
        self.yr += y * r;
        self.rr += r * r;
    }

    fn merge(mut self, o: &Pair) -> Pair {
        self.n += o.n;
        self.xx += o.xx;
        self.yy += o.yy;
        self.xy += o.xy;
        self.xr += o.xr;
        self.yr += o.yr;
        self.rr += o.rr;
        self
    }

    fn rho(&self) -> f64 {
        self.xy / (self.xx * self.yy).sqrt()
    }
}

/// Prepare-and-measure simulation of one protocol run per sample: Gaussian
/// modulation, relay outcome, and the optimal conditional displacements with
/// analytically known coefficients. Alice's link is loss-compensated with
/// residual noise `sigma_r2` (vacuum ½).
pub fn mc_protocol_mutual_info(
    params: &ProtocolParams,
    sigma_r2: f64,
    n_samples: u64,
    stream: RngStream,
) -> Result<McMutualInfo> {
    params.validate()?;
    if n_samples < 2 {
        return invalid("need at least two samples");
    }
    let (sa, sb, tb) = (params.sigma2_a, params.sigma2_b, params.tau_b);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let var_r = 0.5 * (sa + 1.0 + 2.0 * sigma_r2 + tb * sb + 1.0);
    // ⟨q_A q_R⟩ = −σ_A²/√2, ⟨p_A p_R⟩ = +σ_A²/√2, ⟨q_B q_R⟩ = ⟨p_B p_R⟩ = √τ_B σ_B²/√2
    let (ka_q, ka_p, kb) = (-sa * h / var_r, sa * h / var_r, tb.sqrt() * sb * h / var_r);
    let (ma, mb, nr) = (sa.sqrt(), sb.sqrt(), (2.0 * sigma_r2).sqrt());
    let (stb, sl) = (tb.sqrt(), (1.0 - tb).sqrt());
    let parts: Vec<(Pair, Pair)> = batches(n_samples)
        .into_par_iter()
        .map(|(k, len)| {
            let mut rng = stream.batch_rng(k);
            let (mut pq, mut pp) = (Pair::default(), Pair::default());
            for _ in 0..len {
                let mut quad = |sign: f64, ka: f64, acc: &mut Pair| {
                    let a = ma * normal(&mut rng);
                    let b = mb * normal(&mut rng);
                    let a_out = a + normal(&mut rng) + nr * normal(&mut rng);
                    let b_out = stb * (b + normal(&mut rng)) + sl * normal(&mut rng);
                    let rel = (b_out + sign * a_out) * h;
                    acc.push(a - ka * rel, b - kb * rel, rel);
                };
                quad(-1.0, ka_q, &mut pq);
                quad(1.0, ka_p, &mut pp);
            }
            (pq, pp)
        })
        .collect();
    let (pq, pp) = parts.iter().fold((Pair::default(), Pair::default()), |(a, b), (x, y)| (a.merge(x), b.merge(y)));
    let n = pq.n;
    let info = |p: &Pair| -0.5 * (1.0 - p.rho().powi(2)).log2();
    let se = |p: &Pair| p.rho().abs() / (std::f64::consts::LN_2 * n.sqrt());
    Ok(McMutualInfo {
        estimate: info(&pq) + info(&pp),
        stderr: (se(&pq).powi(2) + se(&pp).powi(2)).sqrt(),
        corr_xr: pq.xr / (pq.xx * pq.rr).sqrt(),
        corr_yr: pq.yr / (pq.yy * pq.rr).sqrt(),
        corr_stderr: 1.0 / n.sqrt(),
    })
}

/// Coverage of the worst-case bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coverage {
    pub failures: u64,
    pub trials: u64,
    pub kappa: f64,
}

impl Coverage {
    pub fn fraction(&self) -> f64 {
        self.failures as f64 / self.trials as f64
    }

    /// One binomial standard deviation at probability `p`.
    pub fn binomial_sigma(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Scatter matrix `Σ xxᵀ` of `m` draws from `N(0, [[va, c], [c, vb]])`, by
/// the Bartlett decomposition of the Wishart law.
fn wishart2(
    rng: &mut ChaCha8Rng,
    va: f64,
    vb: f64,
    c: f64,
    chi_m: &ChiSquared<f64>,
    chi_m1: &ChiSquared<f64>,
) -> [f64; 3] {
    let l11 = va.sqrt();
    let l21 = c / l11;
    let l22 = (vb - l21 * l21).max(0.0).sqrt();
    let a11 = chi_m.sample(rng).sqrt();
    let a22 = chi_m1.sample(rng).sqrt();
    let a21: f64 = normal(rng);
    // S = L A Aᵀ Lᵀ with A lower triangular
    let (b11, b21, b22) = (l11 * a11, l21 * a11 + l22 * a21, l22 * a22);
    [b11 * b11, b21 * b21 + b22 * b22, b11 * b21]
}

/// Simulated parameter-estimation rounds. Each round estimates the second
/// moments of `(q_a, q_b)` and `(p_a, p_b)` from `m_pe` pairs, forms the
/// worst-case correlations from those estimates, and fails when the true
/// correlation is worse than the bound (`⟨q_a q_b⟩` below, or `⟨p_a p_b⟩`
/// above).
pub fn mc_pe_coverage(
    true_cm: &CovMatrix,
    m_pe: u64,
    eps_pe: f64,
    n_trials: u64,
    stream: RngStream,
) -> Result<Coverage> {
    if true_cm.dim() != 4 {
        return invalid("coverage needs a two-mode CM");
    }
    if !(eps_pe > 0.0 && eps_pe < 1.0) || m_pe < 2 {
        return invalid("need eps_pe in (0, 1) and m_pe >= 2");
    }
    let kappa = kappa_from_eps(eps_pe);
    let m = m_pe as f64;
    let chi_m = ChiSquared::new(m).expect("positive dof");
    let chi_m1 = ChiSquared::new(m - 1.0).expect("positive dof");
    let (qa, qb, qc) = (true_cm.get(0, 0), true_cm.get(2, 2), true_cm.get(0, 2));
    let (pa, pb, pc) = (true_cm.get(1, 1), true_cm.get(3, 3), true_cm.get(1, 3));
    const TRIALS_PER_BATCH: u64 = 1024;
    let n_batches = n_trials.div_ceil(TRIALS_PER_BATCH);
    let failures: u64 = (0..n_batches)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream.batch_rng(k as u32);
            let len = TRIALS_PER_BATCH.min(n_trials - k * TRIALS_PER_BATCH);
            let mut fails = 0;
            for _ in 0..len {
                let sq = wishart2(&mut rng, qa, qb, qc, &chi_m, &chi_m1);
                let sp = wishart2(&mut rng, pa, pb, pc, &chi_m, &chi_m1);
                let wq = worst_case_correlations(sq[0] / m, sq[1] / m, sq[2] / m, kappa, m, true);
                let wp = worst_case_correlations(sp[0] / m, sp[1] / m, sp[2] / m, kappa, m, false);
                if qc < wq || pc > wp {
                    fails += 1;
                }
            }
            fails
        })
        .sum();
    Ok(Coverage { failures, trials: n_trials, kappa })
}
