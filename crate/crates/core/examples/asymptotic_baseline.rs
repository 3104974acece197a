//! Asymptotic key rate without a code: plain loss against an ideal
//! pre-amplifier, the maximum Bob distance for several Alice distances, and
//! the PLOB bound of the end-to-end loss for comparison.

use gkp_mdi::channels::{fiber_transmittance, plob_bound, ProtocolParams};
use gkp_mdi::scenario::{evaluate_rate, max_bob_distance, LinkSpec};

fn main() -> gkp_mdi::Result<()> {
    println!("max secure L_B (km)");
    for l_a in [0.0, 0.5, 1.0, 2.0, 3.0] {
        let p = ProtocolParams::fiber(l_a, 0.0)?;
        let plain = max_bob_distance(&p, &LinkSpec::lossy(), None, 2000.0)?;
        let pre = if l_a > 0.0 { max_bob_distance(&p, &LinkSpec::preamp(), None, 2000.0)? } else { plain };
        println!("  L_A={l_a:<4} plain {:>8.2}  preamp {:>8.2}", plain.unwrap_or(0.0), pre.unwrap_or(0.0));
    }

    println!("\nL_A = 1 km, rate against L_B (bits/use)");
    for l_b in [0.0, 2.0, 5.0, 10.0, 15.0, 20.0] {
        let p = ProtocolParams::fiber(1.0, l_b)?;
        let r = evaluate_rate(&p, &LinkSpec::lossy(), None)?.rate;
        let plob = plob_bound(fiber_transmittance(1.0 + l_b, 0.2)?)?;
        println!("  L_B={l_b:<5} R={r:>10.5}  PLOB={plob:>8.4}");
    }
    Ok(())
}
