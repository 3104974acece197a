//! Splitting a 3 km link into C pre-amplified segments, each with its own
//! code, accumulates C·σ_r²(3/C). Prints the sequence and its minimum.

use gkp_mdi::gkp::{concatenated_residual, Ancilla};

fn main() -> gkp_mdi::Result<()> {
    let l_a = 3.0;
    for db in [15.0, 20.0, 25.0] {
        let anc = Ancilla::finite(db);
        let seq = (1..=8).map(|c| concatenated_residual(l_a, c, 0.2, anc)).collect::<gkp_mdi::Result<Vec<_>>>()?;
        let best = (0..seq.len()).min_by(|&a, &b| seq[a].total_cmp(&seq[b])).unwrap_or(0);
        let cells: Vec<String> = seq.iter().map(|v| format!("{v:.5}")).collect();
        println!("{db:>4} dB  C=1..8: {}  best C = {}", cells.join(" "), best + 1);
    }
    Ok(())
}
