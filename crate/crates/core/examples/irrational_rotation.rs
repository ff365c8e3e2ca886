//! A framework whose symmetry group rotates by an irrational angle: every
//! character lies in the RUM spectrum, since each orbit matrix is 2 x 3.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rum_spectrum::catalog;
use rum_spectrum::gain::{joint_spectral_points, rum_membership, rum_spectrum_scan, ScanOptions, SCAN_TOL};

fn main() -> Result<(), rum_spectrum::error::Error> {
    let fw = catalog::irrational_rotation(1.0, None);
    for p in joint_spectral_points(fw.tau())? {
        println!("joint spectral point {}", p.character);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut members = 0;
    for _ in 0..64 {
        let chi = fw.group().character(&[rng.gen_range(0.0..std::f64::consts::TAU)], &[rng.gen_range(0..2)])?;
        members += rum_membership(&fw, &chi, SCAN_TOL)?.is_member as usize;
    }
    println!("{members} of 64 random characters are in the spectrum");
    let scan = rum_spectrum_scan(&fw, &ScanOptions { samples_per_circle: 256, ..Default::default() })?;
    println!("saturated torsion tuples: {:?}", scan.saturated);
    Ok(())
}
