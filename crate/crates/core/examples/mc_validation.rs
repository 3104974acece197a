//! Monte Carlo cross-checks of the analytic pipeline: the residual variance,
//! the protocol mutual information, and the coverage of the worst-case
//! parameter-estimation bound. Seeded, so reruns print identical numbers.
//!
//! Usage: `mc_validation [SAMPLES] [SEED]`

use gkp_mdi::channels::{awgn_variance_preamp, fiber_transmittance, ProtocolParams};
use gkp_mdi::gkp::{optimize_squeezing, residual_variance, Ancilla};
use gkp_mdi::mc::{mc_pe_coverage, mc_protocol_mutual_info, mc_residual_variance, RngStream};
use gkp_mdi::security::{conditioned_state, mutual_information, AliceLink};

fn main() -> gkp_mdi::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2_000_000);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let d20 = Ancilla::finite(20.0);

    println!("residual variance, {n} samples");
    let mut id = 0;
    for (s2, anc) in [(0.05, Ancilla::Ideal), (0.13, d20), (0.25, d20)] {
        let r = optimize_squeezing(s2, anc)?.0;
        id += 1;
        let est = mc_residual_variance(r, s2, anc, n, RngStream::new(seed, id))?.pooled;
        let exact = residual_variance(r, s2, anc)?;
        println!("  sigma2={s2} r={r:.4}: analytic {exact:.6}  MC {:.6} +- {:.6}", est.variance, est.stderr);
    }

    println!("mutual information");
    for (l_a, l_b) in [(1.0, 5.0), (2.0, 10.0)] {
        let sr = optimize_squeezing(awgn_variance_preamp(fiber_transmittance(l_a, 0.2)?, 0.0), d20)?.1;
        let p = ProtocolParams::fiber(l_a, l_b)?;
        id += 1;
        let est = mc_protocol_mutual_info(&p, sr, n, RngStream::new(seed, id))?;
        let exact = mutual_information(&conditioned_state(&p, AliceLink::corrected(sr))?)?;
        println!("  L_A={l_a} L_B={l_b}: analytic {exact:.5}  MC {:.5} +- {:.5}", est.estimate, est.stderr);
    }

    let p = ProtocolParams::fiber(1.0, 5.0)?;
    let state = conditioned_state(&p, AliceLink::Lossy)?;
    id += 1;
    let cov = mc_pe_coverage(state.cm(), 100_000, 1e-2, 2000, RngStream::new(seed, id))?;
    println!("PE coverage: {}/{} worst-case bounds violated (eps_pe = 0.01)", cov.failures, cov.trials);
    Ok(())
}
