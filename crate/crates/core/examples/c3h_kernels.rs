//! Orbit matrix kernels of the triangular prism at every character of
//! Z2 x Z3, with Euclidean and with cylindrical bar constraints.

use rum_spectrum::catalog;
use rum_spectrum::gain::{rum_membership, SCAN_TOL};

fn main() -> Result<(), rum_spectrum::error::Error> {
    for (name, fw) in [("euclidean", catalog::c3h_euclidean()), ("cylindrical", catalog::c3h_cylindrical())] {
        println!("{name}");
        for chi in fw.group().finite_characters()? {
            let m = rum_membership(&fw, &chi, SCAN_TOL)?;
            println!("  {chi}: kernel dimension {}", m.kernel.ncols());
            for j in 0..m.kernel.ncols() {
                let col = m.kernel.column(j);
                let v: Vec<String> = col.iter().map(|z| format!("{:.3}{:+.3}i", z.re, z.im)).collect();
                println!("    ({})", v.join(", "));
            }
        }
    }
    Ok(())
}
