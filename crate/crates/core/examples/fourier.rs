//! Bohr-Fourier analysis of a flex of the zig-zag strip built from two
//! chi-symmetric vectors.

use std::f64::consts::PI;

use rum_spectrum::ap::{bohr_fourier_spectrum, SampledFunction};
use rum_spectrum::catalog;
use rum_spectrum::flex::{evaluate_chi_vector, verify_flex, ChiSymmetricVector};
use rum_spectrum::gain::{rum_spectrum_scan, ScanOptions};
use rum_spectrum::linalg::real_vector;

fn main() -> Result<(), rum_spectrum::error::Error> {
    let fw = catalog::frieze(2.0, false);
    let group = fw.group().clone();
    let window = group.window(200);
    let a = ChiSymmetricVector::new(&fw, group.trivial_character(), real_vector(&[1.0, 0.0]))?;
    let b = ChiSymmetricVector::new(&fw, group.character(&[PI], &[0])?, real_vector(&[0.0, 2.0]))?;
    let g = evaluate_chi_vector(&fw, &a, &window)?.add(&evaluate_chi_vector(&fw, &b, &window)?)?;
    println!("flex residual {:.2e}", verify_flex(&fw, &g, None)?.residual);

    let candidates: Vec<_> = rum_spectrum_scan(&fw, &ScanOptions::default())?
        .points
        .into_iter()
        .map(|p| p.character)
        .collect();
    let h = SampledFunction::untwisted(&fw, &g)?;
    for term in bohr_fourier_spectrum(&h, &candidates, 200, None)? {
        println!("{}  |coefficient| = {:.6}", term.character, term.magnitude);
    }
    Ok(())
}
