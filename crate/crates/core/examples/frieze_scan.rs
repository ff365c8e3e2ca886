//! Scan the dual of Z x Z2 for the zig-zag strip in several l_q norms, with
//! and without the bracing bar.

use rum_spectrum::catalog;
use rum_spectrum::gain::{rum_spectrum_scan, ScanOptions};

fn main() -> Result<(), rum_spectrum::error::Error> {
    let opts = ScanOptions::default();
    for q in [1.5, 2.0, 3.0] {
        for braced in [false, true] {
            let scan = rum_spectrum_scan(&catalog::frieze(q, braced), &opts)?;
            println!("q = {q}, braced = {braced}: {} points", scan.points.len());
            for p in &scan.points {
                println!(
                    "  {}  kernel {}  sigma_min {:.2e}{}",
                    p.character,
                    p.kernel_dim,
                    p.sigma_min,
                    if p.joint_spectral { "  (joint spectral)" } else { "" }
                );
            }
        }
    }
    Ok(())
}
