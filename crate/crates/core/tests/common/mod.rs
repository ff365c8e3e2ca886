#![allow(dead_code)]

use std::f64::consts::TAU;
use std::path::PathBuf;

use num_complex::Complex64;
use rand::Rng;
use rum_spectrum::gain::{AffineIsometry, GainEdge, GainFramework, Representation};
use rum_spectrum::group::{AbelianGroup, Character, GroupElement};
use rum_spectrum::linalg::{CMatrix, CVector};

pub const FIXTURES: [&str; 5] = [
    "c3h_prism.json",
    "c3h_prism_cylindrical.json",
    "irrational_rotation.json",
    "frieze_l2.json",
    "frieze_l2_braced.json",
];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/frameworks").join(name)
}

/// A random framework together with the data its representation was built
/// from: `dtau(gamma_i) = V diag(phases[i]) V*`.
pub struct RandomFramework {
    pub framework: GainFramework,
    pub basis: CMatrix,
    pub phases: Vec<Vec<Complex64>>,
}

const GROUPS: [(usize, &[u32]); 6] = [(1, &[]), (1, &[2]), (1, &[3]), (2, &[]), (0, &[2, 3]), (0, &[4])];

fn random_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_unitary(rng: &mut impl Rng, d: usize) -> CMatrix {
    loop {
        let m = CMatrix::from_fn(d, d, |_, _| random_complex(rng));
        let qr = m.qr();
        if qr.r().diagonal().iter().all(|z| z.norm() > 1e-3) {
            return qr.q();
        }
    }
}

pub fn random_framework(rng: &mut impl Rng) -> RandomFramework {
    loop {
        let (r, torsion) = GROUPS[rng.gen_range(0..GROUPS.len())];
        let group = AbelianGroup::new(r, torsion.to_vec()).unwrap();
        let d = rng.gen_range(1..=3);
        let basis = random_unitary(rng, d);
        let mut phases = Vec::new();
        for _ in 0..r {
            phases.push((0..d).map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..TAU))).collect::<Vec<_>>());
        }
        for &n in torsion {
            phases.push(
                (0..d)
                    .map(|_| Complex64::from_polar(1.0, TAU * rng.gen_range(0..n) as f64 / n as f64))
                    .collect(),
            );
        }
        let gens = phases
            .iter()
            .map(|p| {
                let diag = CMatrix::from_diagonal(&CVector::from_vec(p.clone()));
                AffineIsometry::linear(&basis * diag * basis.adjoint()).unwrap()
            })
            .collect();
        let tau = Representation::new(group.clone(), gens).unwrap();

        let nv = rng.gen_range(1..=3);
        let ne = rng.gen_range(1..=5);
        let dy = rng.gen_range(1..=2);
        let mut edges = Vec::new();
        for i in 0..ne {
            let source = rng.gen_range(0..nv);
            let range = rng.gen_range(0..nv);
            let gain = loop {
                let free: Vec<i64> = (0..r).map(|_| rng.gen_range(-2..=2)).collect();
                let tors: Vec<i64> = torsion.iter().map(|&n| rng.gen_range(0..n as i64)).collect();
                let g = group.element(&free, &tors).unwrap();
                if source != range || !g.is_zero() {
                    break g;
                }
            };
            edges.push(GainEdge {
                id: format!("e{i}"),
                source,
                range,
                gain,
                phi: CMatrix::from_fn(dy, d, |_, _| random_complex(rng)),
            });
        }
        let vertices = (0..nv).map(|v| format!("v{v}")).collect();
        if let Ok(framework) = GainFramework::new(vertices, edges, tau, dy) {
            return RandomFramework {
                framework,
                basis,
                phases,
            };
        }
    }
}

/// Exponents of `g` in the standard generators.
fn exponents(group: &AbelianGroup, g: &GroupElement) -> Vec<i64> {
    let mut e: Vec<i64> = g.free.clone();
    e.extend(g.torsion.iter().map(|&t| t as i64));
    assert_eq!(e.len(), group.rank());
    e
}

/// `chi(g)` straight from the definition.
pub fn chi_oracle(group: &AbelianGroup, chi: &Character, g: &GroupElement) -> Complex64 {
    let mut phase = 0.0;
    for (a, m) in chi.angles.iter().zip(&g.free) {
        phase += a * *m as f64;
    }
    for ((j, t), n) in chi.torsion_indices.iter().zip(&g.torsion).zip(group.torsion()) {
        phase += TAU * (*j as f64) * (*t as f64) / *n as f64;
    }
    Complex64::from_polar(1.0, phase)
}

/// Linear part of `tau(g)` as a product of generator powers; inverses are
/// adjoints.
pub fn dtau_oracle(fw: &GainFramework, g: &GroupElement) -> CMatrix {
    let d = fw.dx();
    let mut out = CMatrix::identity(d, d);
    for (gen, k) in fw.tau().generators().iter().zip(exponents(fw.group(), g)) {
        let base = if k < 0 { gen.linear.adjoint() } else { gen.linear.clone() };
        for _ in 0..k.unsigned_abs() {
            out = &out * &base;
        }
    }
    out
}

/// Eigenvalues of `dtau(g)` from the construction data.
pub fn dtau_eigenvalues(rf: &RandomFramework, g: &GroupElement) -> Vec<Complex64> {
    let e = exponents(rf.framework.group(), g);
    (0..rf.basis.nrows())
        .map(|j| {
            rf.phases
                .iter()
                .zip(&e)
                .fold(Complex64::new(1.0, 0.0), |acc, (p, &k)| acc * p[j].powi(k as i32))
        })
        .collect()
}

/// Joint eigenvalue tuples of the generators from the construction data.
pub fn joint_tuples(rf: &RandomFramework) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = Vec::new();
    for j in 0..rf.basis.nrows() {
        let t: Vec<Complex64> = rf.phases.iter().map(|p| p[j]).collect();
        if !out.iter().any(|u| u.iter().zip(&t).all(|(a, b)| (a - b).norm() < 1e-8)) {
            out.push(t);
        }
    }
    out
}

pub fn count_distinct(values: &[Complex64], tol: f64) -> usize {
    let mut seen: Vec<Complex64> = Vec::new();
    for v in values {
        if !seen.iter().any(|s| (s - v).norm() < tol) {
            seen.push(*v);
        }
    }
    seen.len()
}

/// The orbit matrix assembled from its defining rows.
pub fn orbit_oracle(fw: &GainFramework, chi: &Character) -> CMatrix {
    let (dx, dy) = (fw.dx(), fw.dy());
    let mut m = CMatrix::zeros(fw.edges().len() * dy, fw.vertices().len() * dx);
    for (i, e) in fw.edges().iter().enumerate() {
        let twist = dtau_oracle(fw, &e.gain) * chi_oracle(fw.group(), chi, &e.gain);
        let rows = i * dy..(i + 1) * dy;
        if e.source == e.range {
            let block = &e.phi * (CMatrix::identity(dx, dx) - twist);
            m.view_mut((rows.start, e.source * dx), (dy, dx)).copy_from(&block);
        } else {
            m.view_mut((rows.start, e.source * dx), (dy, dx)).copy_from(&e.phi);
            m.view_mut((rows.start, e.range * dx), (dy, dx)).copy_from(&(-&e.phi * twist));
        }
    }
    m
}

/// `(C z(chi, a))(gamma)` from the operator's defining formula.
pub fn gain_operator_oracle(fw: &GainFramework, chi: &Character, a: &CVector, gamma: &GroupElement) -> CVector {
    let (dx, dy) = (fw.dx(), fw.dy());
    let group = fw.group();
    let z = |g: &GroupElement, v: usize| -> CVector {
        dtau_oracle(fw, g) * a.rows(v * dx, dx) * chi_oracle(group, chi, g)
    };
    let back = dtau_oracle(fw, &group.neg(gamma));
    let mut out = CVector::zeros(fw.edges().len() * dy);
    for (i, e) in fw.edges().iter().enumerate() {
        let there = group.add(gamma, &e.gain).unwrap();
        let diff = z(gamma, e.source) - z(&there, e.range);
        out.rows_mut(i * dy, dy).copy_from(&(&e.phi * (&back * diff)));
    }
    out
}

pub fn random_character(rng: &mut impl Rng, group: &AbelianGroup) -> Character {
    let angles: Vec<f64> = (0..group.free_rank()).map(|_| rng.gen_range(0.0..TAU)).collect();
    let idx: Vec<i64> = group.torsion().iter().map(|&n| rng.gen_range(0..n as i64)).collect();
    group.character(&angles, &idx).unwrap()
}

pub fn random_vector(rng: &mut impl Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| random_complex(rng))
}
