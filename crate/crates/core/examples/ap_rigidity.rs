//! Almost-periodic rigidity certificates for the zig-zag strip with and
//! without its bracing bar.

use rum_spectrum::ap::{check_ap_rigidity, Witness};
use rum_spectrum::catalog;
use rum_spectrum::gain::ScanOptions;

fn main() -> Result<(), rum_spectrum::error::Error> {
    for braced in [false, true] {
        let cert = check_ap_rigidity(&catalog::frieze(2.0, braced), &ScanOptions::default())?;
        println!("braced = {braced}: ap rigid = {}", cert.ap_rigid);
        for w in &cert.witnesses {
            match w {
                Witness::Character { character, kernel_dim } => {
                    println!("  spectrum point {character} outside the joint spectral points (kernel {kernel_dim})")
                }
                Witness::SaturatedTorus { torsion_indices } => println!("  whole torus {torsion_indices:?}"),
                Witness::NonTranslationalFlex { character, .. } => {
                    println!("  non-translational flex at {character}")
                }
            }
        }
    }
    Ok(())
}
