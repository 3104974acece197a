//! Composable finite-size frontier at N = 1e8 with L_A = 1 km, for each way
//! of handling Alice's loss, plus the maximum Alice distance at L_B = 5 km.

use gkp_mdi::channels::ProtocolParams;
use gkp_mdi::finite_size::FiniteSizeParams;
use gkp_mdi::gkp::Ancilla;
use gkp_mdi::scenario::{evaluate_rate, max_alice_distance, max_bob_distance, LinkSpec};

fn main() -> gkp_mdi::Result<()> {
    let fs = FiniteSizeParams::with_block(1e8);
    let d20 = Ancilla::finite(20.0);
    let links = [
        ("no code", LinkSpec::lossy()),
        ("pre-amplified", LinkSpec::preamp()),
        ("GKP 20 dB", LinkSpec::gkp(d20, 1)),
        ("GKP ideal", LinkSpec::gkp(Ancilla::Ideal, 1)),
        ("QT 20 dB + GKP 20 dB", LinkSpec::qt_gkp(20.0, d20)),
    ];

    let p1 = ProtocolParams::fiber(1.0, 0.0)?;
    let p5 = ProtocolParams::fiber(0.0, 5.0)?;
    println!("{:<22} {:>14} {:>14} {:>14}", "link", "R_com(1, 5)", "max L_B @ L_A=1", "max L_A @ L_B=5");
    for (name, link) in links {
        let r = evaluate_rate(&ProtocolParams::fiber(1.0, 5.0)?, &link, Some(&fs))?.rate;
        let lb = max_bob_distance(&p1, &link, Some(&fs), 60.0)?;
        let la = max_alice_distance(&p5, &link, Some(&fs), 20.0)?;
        let km = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.2}"));
        println!("{name:<22} {r:>14.5} {:>14} {:>14}", km(lb), km(la));
    }
    Ok(())
}
