//! Joint spectral points of two representations: the point group C3h acting
//! on R^3, and Z x Z2 acting by an irrational rotation and a reflection.

use rum_spectrum::catalog;
use rum_spectrum::gain::joint_spectral_points;

fn main() -> Result<(), rum_spectrum::error::Error> {
    for (name, tau) in [
        ("C3h", catalog::c3h_representation()),
        ("rotation by 1 rad", catalog::irrational_rotation_representation(1.0)),
    ] {
        println!("{name}:");
        for p in joint_spectral_points(&tau)? {
            let lambda: Vec<String> = p.lambda.iter().map(|z| format!("{:.4}{:+.4}i", z.re, z.im)).collect();
            println!("  {}  lambda = ({})  multiplicity {}", p.character, lambda.join(", "), p.eigenspace.ncols());
        }
    }
    Ok(())
}
