//! Ready-made gain frameworks used by the examples, the fixtures and the
//! tests.
//!
//! Group coordinates follow the crate convention of free factors first.
//! For the `Z x Z_2` examples the element `(m, l)` has translation or
//! rotation count `m` and reflection count `l`.

use crate::gain::{AffineIsometry, GainEdge, GainFramework, Representation};
use crate::group::AbelianGroup;
use crate::linalg::{real_matrix, real_vector, CMatrix};

fn s3() -> f64 {
    3f64.sqrt()
}

fn single_vertex(tau: Representation, edges: Vec<(&str, Vec<i64>, Vec<i64>, CMatrix)>) -> GainFramework {
    let group = tau.group().clone();
    let dy = edges.first().map_or(1, |e| e.3.nrows());
    let edges = edges
        .into_iter()
        .map(|(id, free, torsion, phi)| GainEdge {
            id: id.to_string(),
            source: 0,
            range: 0,
            gain: group.element(&free, &torsion).expect("catalog gain"),
            phi,
        })
        .collect();
    GainFramework::new(vec!["v".to_string()], edges, tau, dy).expect("catalog framework")
}

/// `Z_2 x Z_3` acting on `C^3` by the reflection in the xy-plane and the
/// clockwise rotation by `2 pi / 3` about the z-axis.
pub fn c3h_representation() -> Representation {
    let group = AbelianGroup::new(0, vec![2, 3]).unwrap();
    let h = s3() / 2.0;
    let refl = real_matrix(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0]);
    let rot = real_matrix(3, 3, &[-0.5, h, 0.0, -h, -0.5, 0.0, 0.0, 0.0, 1.0]);
    Representation::new(
        group,
        vec![
            AffineIsometry::linear(refl).unwrap(),
            AffineIsometry::linear(rot).unwrap(),
        ],
    )
    .unwrap()
}

pub fn c3h_seed() -> Vec<f64> {
    vec![-s3(), -1.0, 1.0]
}

/// Single vertex with loops of gain `(0,1)` and `(1,1)` carrying the given
/// constraint rows.
pub fn c3h_with_rows(e1: &[f64], e2: &[f64]) -> GainFramework {
    single_vertex(
        c3h_representation(),
        vec![
            ("e1", vec![], vec![0, 1], real_matrix(1, 3, e1)),
            ("e2", vec![], vec![1, 1], real_matrix(1, 3, e2)),
        ],
    )
}

/// Triangular prism with Euclidean bar constraints.
pub fn c3h_euclidean() -> GainFramework {
    c3h_with_rows(&[-s3(), -3.0, 0.0], &[-s3(), -3.0, 2.0])
}

/// Triangular prism in the cylindrical norm `max(|(x, y)|, |z|)`.
pub fn c3h_cylindrical() -> GainFramework {
    c3h_with_rows(&[-s3(), -3.0, 0.0], &[0.0, 0.0, 2.0])
}

/// `Z x Z_2` acting on `C^3`: the free generator rotates clockwise by
/// `theta` about the z-axis, the torsion generator reflects in the
/// xy-plane.
pub fn irrational_rotation_representation(theta: f64) -> Representation {
    let group = AbelianGroup::new(1, vec![2]).unwrap();
    let (s, c) = theta.sin_cos();
    let rot = real_matrix(3, 3, &[c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0]);
    let refl = real_matrix(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0]);
    Representation::new(
        group,
        vec![
            AffineIsometry::linear(rot).unwrap(),
            AffineIsometry::linear(refl).unwrap(),
        ],
    )
    .unwrap()
}

/// Loops of gain `(1,0)` and `(1,1)` at a single vertex. Without explicit
/// rows the Euclidean constraints of the seed `(-sqrt 3, -1, 1)` are used.
pub fn irrational_rotation(theta: f64, rows: Option<([f64; 3], [f64; 3])>) -> GainFramework {
    let (e1, e2) = rows.unwrap_or_else(|| {
        let (s, c) = theta.sin_cos();
        let x = -s3() * (1.0 - c) + s;
        let y = -s3() * s - (1.0 - c);
        ([x, y, 0.0], [x, y, 2.0])
    });
    single_vertex(
        irrational_rotation_representation(theta),
        vec![
            ("e1", vec![1], vec![0], real_matrix(1, 3, &e1)),
            ("e2", vec![1], vec![1], real_matrix(1, 3, &e2)),
        ],
    )
}

/// The frieze group `p11m` as `Z x Z_2` acting on `C^2` by
/// `(a1, a2) -> (a1 + m, (-1)^l a2)`.
pub fn frieze_representation() -> Representation {
    let group = AbelianGroup::new(1, vec![2]).unwrap();
    let shift = AffineIsometry::new(CMatrix::identity(2, 2), real_vector(&[1.0, 0.0])).unwrap();
    let refl = AffineIsometry::linear(real_matrix(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
    Representation::new(group, vec![shift, refl]).unwrap()
}

pub fn frieze_seed() -> Vec<f64> {
    vec![0.0, -1.0]
}

/// The zig-zag strip with l_q bar constraints: loops of gain `(1,0)` and
/// `(1,1)`, plus the loop of gain `(2,1)` when `with_e3` is set.
pub fn frieze(q: f64, with_e3: bool) -> GainFramework {
    let k = (1.0 + 2f64.powf(q)).powf((1.0 - q) / q);
    let mut edges = vec![
        ("e1", vec![1], vec![0], real_matrix(1, 2, &[-1.0, 0.0])),
        ("e2", vec![1], vec![1], real_matrix(1, 2, &[-k, -k * 2f64.powf(q - 1.0)])),
    ];
    if with_e3 {
        let w = 2f64.powf(1.0 / q - 1.0);
        edges.push(("e3", vec![2], vec![1], real_matrix(1, 2, &[-w, -w])));
    }
    single_vertex(frieze_representation(), edges)
}

/// The five bundled frameworks, in fixture order.
pub fn all_fixtures() -> Vec<GainFramework> {
    vec![
        c3h_euclidean(),
        c3h_cylindrical(),
        irrational_rotation(1.0, None),
        frieze(2.0, false),
        frieze(2.0, true),
    ]
}
