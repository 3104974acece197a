//! Finite-size Bob frontier at L_A = 3 km when the link carries C code
//! layers, i.e. one every L_A/C km.

use gkp_mdi::channels::ProtocolParams;
use gkp_mdi::finite_size::FiniteSizeParams;
use gkp_mdi::gkp::Ancilla;
use gkp_mdi::scenario::{max_bob_distance, LinkSpec};

fn main() -> gkp_mdi::Result<()> {
    let fs = FiniteSizeParams::with_block(1e8);
    let p = ProtocolParams::fiber(3.0, 0.0)?;
    println!("{:>6} {:>8} {:>10}", "dB", "layers", "max L_B");
    for db in [20.0, 25.0] {
        for c in 1..=6 {
            let d = max_bob_distance(&p, &LinkSpec::gkp(Ancilla::finite(db), c), Some(&fs), 60.0)?;
            println!("{db:>6} {c:>8} {:>10}", d.map_or("-".into(), |v| format!("{v:.2}")));
        }
    }
    Ok(())
}
