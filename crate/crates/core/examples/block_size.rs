//! Composable rate against block size N at L_A = 3 km, L_B = 5 km with a
//! 20 dB code. The rate turns positive somewhere between 1e8 and 1e9 pulses.

use gkp_mdi::channels::ProtocolParams;
use gkp_mdi::finite_size::FiniteSizeParams;
use gkp_mdi::gkp::Ancilla;
use gkp_mdi::scenario::{evaluate_rate, LinkSpec};

fn main() -> gkp_mdi::Result<()> {
    let p = ProtocolParams::fiber(3.0, 5.0)?;
    let link = LinkSpec::gkp(Ancilla::finite(20.0), 1);
    let asymptotic = evaluate_rate(&p, &link, None)?.rate;
    println!("asymptotic rate {asymptotic:.5} bits/use");
    for e in 14..=20 {
        let n = 10f64.powf(e as f64 / 2.0);
        let r = evaluate_rate(&p, &link, Some(&FiniteSizeParams::with_block(n)))?.rate;
        println!("N = {n:>9.3e}  R_com = {r:>9.5}");
    }
    Ok(())
}
