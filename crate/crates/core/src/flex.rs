//! Chi-symmetric vectors, windowed fields and the gain framework operator.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gain::{joint_spectral_points, rum_membership, GainFramework};
use crate::group::{Character, GroupElement, Window};
use crate::linalg::{fix_phase, CMatrix, CVector};

/// Default flex tolerance is this times `1 + max |phi_e|`.
pub const FLEX_TOL_SCALE: f64 = 1e-9;

/// The field `gamma -> (chi(gamma) dtau(gamma) a_v)_v`.
#[derive(Clone, Debug)]
pub struct ChiSymmetricVector {
    pub character: Character,
    /// Stacked vertex blocks `a_v`, each of length `dx`.
    pub amplitude: CVector,
}

impl ChiSymmetricVector {
    pub fn new(fw: &GainFramework, character: Character, amplitude: CVector) -> Result<Self> {
        fw.group().check_character(&character)?;
        let expected = fw.vertices().len() * fw.dx();
        if amplitude.len() != expected {
            return Err(Error::structural(format!(
                "amplitude has length {}, expected {expected}",
                amplitude.len()
            )));
        }
        Ok(ChiSymmetricVector {
            character,
            amplitude,
        })
    }

    pub fn value_at(&self, fw: &GainFramework, g: &GroupElement) -> CVector {
        let c = fw.group().evaluate_unchecked(&self.character, g);
        block_apply(&fw.tau().dtau_unchecked(g), &self.amplitude) * c
    }
}

/// Apply `m` to every consecutive block of `v`.
pub(crate) fn block_apply(m: &CMatrix, v: &CVector) -> CVector {
    let d = m.ncols();
    let mut out = CVector::zeros(v.len());
    for b in 0..v.len() / d {
        let block = m * v.rows(b * d, d);
        out.rows_mut(b * d, d).copy_from(&block);
    }
    out
}

/// A vector-valued function on a window, stored in window order.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowedField {
    window: Window,
    block_dim: usize,
    values: Vec<CVector>,
}

impl WindowedField {
    pub fn new(window: Window, block_dim: usize, values: Vec<CVector>) -> Result<Self> {
        if values.len() != window.len() {
            return Err(Error::structural(format!(
                "{} values for a window of {} points",
                values.len(),
                window.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| v.len() != block_dim) {
            return Err(Error::structural(format!(
                "value {i} has length {}, expected {block_dim}",
                values[i].len()
            )));
        }
        if values
            .iter()
            .flat_map(|v| v.iter())
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::structural("field has non-finite entries"));
        }
        Ok(WindowedField {
            window,
            block_dim,
            values,
        })
    }

    pub fn from_fn(window: Window, block_dim: usize, f: impl Fn(&GroupElement) -> CVector) -> Result<Self> {
        let values = window.elements().iter().map(f).collect();
        Self::new(window, block_dim, values)
    }

    pub fn zeros(window: Window, block_dim: usize) -> Self {
        let values = vec![CVector::zeros(block_dim); window.len()];
        WindowedField {
            window,
            block_dim,
            values,
        }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn values(&self) -> &[CVector] {
        &self.values
    }

    pub fn get(&self, g: &GroupElement) -> Option<&CVector> {
        self.window.index_of(g).map(|i| &self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (GroupElement, &CVector)> {
        self.window.elements().into_iter().zip(&self.values)
    }

    /// Largest Euclidean norm of a value.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// The field restricted to a smaller window of the same group.
    pub fn restrict(&self, radius: usize) -> Result<WindowedField> {
        if radius > self.window.radius() {
            return Err(Error::usage(format!(
                "cannot restrict a radius-{} field to radius {radius}",
                self.window.radius()
            )));
        }
        let window = self.window.group().window(radius);
        let values = window
            .elements()
            .iter()
            .map(|g| self.get(g).expect("nested windows").clone())
            .collect();
        Ok(WindowedField {
            window,
            block_dim: self.block_dim,
            values,
        })
    }

    pub fn map(&self, f: impl Fn(&GroupElement, &CVector) -> CVector) -> Result<WindowedField> {
        let values: Vec<CVector> = self.iter().map(|(g, v)| f(&g, v)).collect();
        let block_dim = values.first().map_or(self.block_dim, |v| v.len());
        WindowedField::new(self.window.clone(), block_dim, values)
    }

    /// `gamma -> f(gamma - shift)`, on the window shrunk by `|shift|_inf`.
    pub fn shift(&self, shift: &GroupElement) -> Result<WindowedField> {
        let group = self.window.group().clone();
        group.check(shift)?;
        let margin = shift.free_sup_norm();
        let radius = self.window.radius().checked_sub(margin).ok_or_else(|| {
            Error::usage(format!(
                "window radius {} is smaller than the shift {margin}",
                self.window.radius()
            ))
        })?;
        let window = group.window(radius);
        let values = window
            .elements()
            .iter()
            .map(|g| self.get(&group.sub(g, shift).unwrap()).unwrap().clone())
            .collect();
        Ok(WindowedField {
            window,
            block_dim: self.block_dim,
            values,
        })
    }

    pub fn scale(&self, c: num_complex::Complex64) -> WindowedField {
        WindowedField {
            window: self.window.clone(),
            block_dim: self.block_dim,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &WindowedField) -> Result<WindowedField> {
        if self.window != other.window || self.block_dim != other.block_dim {
            return Err(Error::structural("fields live on different windows"));
        }
        Ok(WindowedField {
            window: self.window.clone(),
            block_dim: self.block_dim,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }
}

pub fn evaluate_chi_vector(fw: &GainFramework, z: &ChiSymmetricVector, window: &Window) -> Result<WindowedField> {
    if window.group() != fw.group() {
        return Err(Error::structural("window and framework use different groups"));
    }
    WindowedField::from_fn(window.clone(), z.amplitude.len(), |g| z.value_at(fw, g))
}

fn check_vertex_field(fw: &GainFramework, f: &WindowedField) -> Result<()> {
    if f.window().group() != fw.group() {
        return Err(Error::structural("field and framework use different groups"));
    }
    let expected = fw.vertices().len() * fw.dx();
    if f.block_dim() != expected {
        return Err(Error::structural(format!(
            "field has values of length {}, expected {expected}",
            f.block_dim()
        )));
    }
    Ok(())
}

/// `(C f)(gamma)_e = phi_e dtau(-gamma) (f(gamma)_s(e) - f(gamma + m_e)_r(e))`
/// on the window shrunk by the largest gain.
pub fn apply_gain_operator(fw: &GainFramework, f: &WindowedField) -> Result<WindowedField> {
    check_vertex_field(fw, f)?;
    let group = fw.group().clone();
    let margin = if group.free_rank() == 0 { 0 } else { fw.max_gain_norm() };
    let radius = f.window().radius();
    if radius < margin {
        return Err(Error::usage(format!(
            "window radius {radius} is too small: the gains need a margin of {margin}"
        )));
    }
    let out_window = group.window(radius - margin);
    let (dx, dy) = (fw.dx(), fw.dy());
    let values = out_window
        .elements()
        .iter()
        .map(|g| {
            let back = fw.tau().dtau_unchecked(&group.neg(g));
            let here = f.get(g).expect("inside window");
            let mut out = CVector::zeros(fw.edges().len() * dy);
            for (i, e) in fw.edges().iter().enumerate() {
                let there = f.get(&group.add_unchecked(g, &e.gain)).expect("margin respected");
                let diff = here.rows(e.source * dx, dx) - there.rows(e.range * dx, dx);
                out.rows_mut(i * dy, dy).copy_from(&(&e.phi * (&back * diff)));
            }
            out
        })
        .collect();
    WindowedField::new(out_window, fw.edges().len() * dy, values)
}

#[derive(Clone, Debug, Serialize)]
pub struct FlexCheck {
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

pub fn default_flex_tol(fw: &GainFramework) -> f64 {
    FLEX_TOL_SCALE * (1.0 + fw.max_phi_norm())
}

/// Largest value norm of `C f`; passes when it is at most `tol` (the
/// default scales with the constraint norms).
pub fn verify_flex(fw: &GainFramework, f: &WindowedField, tol: Option<f64>) -> Result<FlexCheck> {
    let tol = tol.unwrap_or_else(|| default_flex_tol(fw));
    let residual = apply_gain_operator(fw, f)?.max_norm();
    Ok(FlexCheck {
        residual,
        tol,
        pass: residual <= tol,
    })
}

/// One chi-symmetric flex per kernel basis vector of `O(chi)`.
pub fn chi_flex_basis(fw: &GainFramework, chi: &Character, tol: f64) -> Result<Vec<ChiSymmetricVector>> {
    let m = rum_membership(fw, chi, tol)?;
    Ok(m.kernel
        .column_iter()
        .map(|col| ChiSymmetricVector {
            character: chi.clone(),
            amplitude: fix_phase(&col.into_owned()),
        })
        .collect())
}

/// The joint spectral chi-symmetric vectors `z(conj chi_lambda, [a ... a])`
/// for a joint eigenbasis of `X`. They are constant fields spanning the
/// translations.
pub fn translation_space(fw: &GainFramework) -> Result<Vec<ChiSymmetricVector>> {
    let nv = fw.vertices().len();
    let dx = fw.dx();
    let mut out = Vec::with_capacity(dx);
    for point in joint_spectral_points(fw.tau())? {
        for col in point.eigenspace.column_iter() {
            let mut amplitude = CVector::zeros(nv * dx);
            for v in 0..nv {
                amplitude.rows_mut(v * dx, dx).copy_from(&col);
            }
            out.push(ChiSymmetricVector {
                character: point.character.clone(),
                amplitude,
            });
        }
    }
    Ok(out)
}

/// Componentwise real and imaginary parts. Only flex-preserving when all
/// constraint maps and the representation are real.
pub fn real_imag_parts(fw: &GainFramework, f: &WindowedField) -> Result<(WindowedField, WindowedField)> {
    if !fw.is_real() {
        return Err(Error::usage(
            "real and imaginary parts of a flex need real constraint maps and a real representation",
        ));
    }
    let re = f.map(|_, v| v.map(|z| num_complex::Complex64::new(z.re, 0.0)))?;
    let im = f.map(|_, v| v.map(|z| num_complex::Complex64::new(z.im, 0.0)))?;
    Ok((re, im))
}

/// Whether every vertex block at every window point agrees with the mean
/// block to within `tol`.
pub fn is_translation(f: &WindowedField, dx: usize, tol: f64) -> bool {
    if dx == 0 || !f.block_dim().is_multiple_of(dx) || f.values().is_empty() {
        return false;
    }
    let blocks = f.block_dim() / dx;
    let mut mean = CVector::zeros(dx);
    for v in f.values() {
        for b in 0..blocks {
            mean += v.rows(b * dx, dx);
        }
    }
    mean /= num_complex::Complex64::new((blocks * f.values().len()) as f64, 0.0);
    f.values()
        .iter()
        .all(|v| (0..blocks).all(|b| (v.rows(b * dx, dx) - &mean).norm() <= tol))
}

/// `gamma -> (dtau(shift) f(gamma - shift)_v)_v`, the twisted shift.
pub fn twisted_shift(fw: &GainFramework, f: &WindowedField, shift: &GroupElement) -> Result<WindowedField> {
    check_vertex_field(fw, f)?;
    let d = fw.tau().dtau(shift)?;
    f.shift(shift)?.map(|_, v| block_apply(&d, v))
}

/// `gamma -> (dtau(-gamma) f(gamma)_v)_v`, undoing the twist of a
/// chi-symmetric field.
pub fn untwist(fw: &GainFramework, f: &WindowedField) -> Result<WindowedField> {
    check_vertex_field(fw, f)?;
    let group = fw.group().clone();
    f.map(|g, v| block_apply(&fw.tau().dtau_unchecked(&group.neg(g)), v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::gain::{AffineIsometry, GainEdge, Representation};
    use crate::group::AbelianGroup;
    use crate::linalg::{c, parallelism, real_vector};
    use num_complex::Complex64;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn joint_spectral_vector_is_constant() {
        let fw = catalog::c3h_euclidean();
        let g = fw.group().clone();
        let z = ChiSymmetricVector::new(&fw, g.character(&[], &[1, 0]).unwrap(), real_vector(&[0.0, 0.0, 1.0])).unwrap();
        let f = evaluate_chi_vector(&fw, &z, &g.window(0)).unwrap();
        for (_, v) in f.iter() {
            assert!((v - real_vector(&[0.0, 0.0, 1.0])).norm() < 1e-12);
        }
        assert!(is_translation(&f, 3, 1e-12));
    }

    #[test]
    fn frieze_alternating_vector() {
        let fw = catalog::frieze(2.0, false);
        let g = fw.group().clone();
        let chi = g.character(&[PI], &[0]).unwrap();
        let z = ChiSymmetricVector::new(&fw, chi, real_vector(&[0.0, 1.0])).unwrap();
        let f = evaluate_chi_vector(&fw, &z, &g.window(3)).unwrap();
        for (gamma, v) in f.iter() {
            let sign = if (gamma.free[0] + gamma.torsion[0] as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            assert!((v - real_vector(&[0.0, sign])).norm() < 1e-12);
        }
        assert!(!is_translation(&f, 2, 1e-6));
    }

    #[test]
    fn operator_matches_orbit_matrix_identity() {
        let fw = catalog::frieze(1.5, true);
        let g = fw.group().clone();
        let chi = g.character(&[0.7], &[1]).unwrap();
        let a = CVector::from_vec(vec![c(0.3, -1.0), c(2.0, 0.5)]);
        let z = ChiSymmetricVector::new(&fw, chi.clone(), a.clone()).unwrap();
        let f = evaluate_chi_vector(&fw, &z, &g.window(5)).unwrap();
        let out = apply_gain_operator(&fw, &f).unwrap();
        assert_eq!(out.window().radius(), 3);
        let oa = fw.orbit_matrix(&chi).unwrap() * &a;
        for (gamma, v) in out.iter() {
            let expected = &oa * g.evaluate(&chi, &gamma).unwrap();
            assert!((v - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn operator_rejects_small_windows() {
        let fw = catalog::frieze(2.0, true);
        let f = WindowedField::zeros(fw.group().window(1), 2);
        assert!(matches!(apply_gain_operator(&fw, &f), Err(Error::Usage(_))));
    }

    #[test]
    fn c3h_rotation_is_a_flex() {
        let fw = catalog::c3h_euclidean();
        let g = fw.group().clone();
        let z = ChiSymmetricVector::new(&fw, g.trivial_character(), real_vector(&[1.0, -3f64.sqrt(), 0.0])).unwrap();
        let f = evaluate_chi_vector(&fw, &z, &g.window(3)).unwrap();
        let check = verify_flex(&fw, &f, Some(1e-10)).unwrap();
        assert!(check.pass, "residual {}", check.residual);
    }

    #[test]
    fn non_kernel_amplitude_fails_with_predicted_residual() {
        let fw = catalog::c3h_euclidean();
        let g = fw.group().clone();
        let chi = g.character(&[], &[0, 1]).unwrap();
        let a = real_vector(&[1.0, 0.0, 0.0]);
        let z = ChiSymmetricVector::new(&fw, chi.clone(), a.clone()).unwrap();
        let f = evaluate_chi_vector(&fw, &z, &g.window(0)).unwrap();
        let check = verify_flex(&fw, &f, None).unwrap();
        let predicted = (fw.orbit_matrix(&chi).unwrap() * a).norm();
        assert!(!check.pass);
        assert!((check.residual - predicted).abs() < 1e-12);
    }

    #[test]
    fn translations_are_flexes() {
        let fw = catalog::frieze(3.0, true);
        let g = fw.group().clone();
        for a in [[1.0, 0.0], [0.0, 1.0], [0.4, -2.0]] {
            let f = WindowedField::from_fn(g.window(4), 2, |_| real_vector(&a)).unwrap();
            let check = verify_flex(&fw, &f, None).unwrap();
            assert!(check.residual <= 1e-12);
        }
    }

    #[test]
    fn flex_bases() {
        let fw = catalog::c3h_euclidean();
        let g = fw.group().clone();
        let eta = Complex64::from_polar(1.0, TAU / 3.0);
        let basis = chi_flex_basis(&fw, &g.character(&[], &[1, 1]).unwrap(), 1e-9).unwrap();
        assert_eq!(basis.len(), 1);
        let u = CVector::from_vec(vec![c(0.0, 1.0), c(1.0, 0.0), -2.0 * eta.conj()]);
        assert!(parallelism(&basis[0].amplitude, &u) > 1.0 - 1e-10);

        let cyl = catalog::c3h_cylindrical();
        let basis = chi_flex_basis(&cyl, &g.character(&[], &[1, 0]).unwrap(), 1e-9).unwrap();
        assert_eq!(basis.len(), 2);

        let frieze = catalog::frieze(2.0, false);
        let chi = frieze.group().character(&[1.0], &[0]).unwrap();
        assert!(chi_flex_basis(&frieze, &chi, 1e-9).unwrap().is_empty());
    }

    #[test]
    fn translation_space_examples() {
        let fw = catalog::c3h_euclidean();
        let ts = translation_space(&fw).unwrap();
        assert_eq!(ts.len(), 3);
        let expected = [
            real_vector(&[0.0, 0.0, 1.0]),
            CVector::from_vec(vec![c(0.0, -1.0), c(1.0, 0.0), c(0.0, 0.0)]),
            CVector::from_vec(vec![c(0.0, 1.0), c(1.0, 0.0), c(0.0, 0.0)]),
        ];
        for e in &expected {
            assert!(ts.iter().any(|z| parallelism(&z.amplitude, e) > 1.0 - 1e-10));
        }

        let frieze = catalog::frieze(2.0, false);
        let ts = translation_space(&frieze).unwrap();
        assert_eq!(ts.len(), 2);
        for e in [real_vector(&[1.0, 0.0]), real_vector(&[0.0, 1.0])] {
            assert!(ts.iter().any(|z| parallelism(&z.amplitude, &e) > 1.0 - 1e-10));
        }

        let g = AbelianGroup::new(1, vec![]).unwrap();
        let trivial = crate::gain::GainFramework::new(vec!["v".into()], vec![], Representation::trivial(g, 4), 1).unwrap();
        let ts = translation_space(&trivial).unwrap();
        assert_eq!(ts.len(), 4);
        let m = CMatrix::from_columns(&ts.iter().map(|z| z.amplitude.clone()).collect::<Vec<_>>());
        assert!((m - CMatrix::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn real_part_of_c3h_flex() {
        let fw = catalog::c3h_euclidean();
        let g = fw.group().clone();
        let chi = g.character(&[], &[1, 1]).unwrap();
        let eta = Complex64::from_polar(1.0, TAU / 3.0);
        let u = CVector::from_vec(vec![c(0.0, 1.0), c(1.0, 0.0), -2.0 * eta.conj()]);
        let z = ChiSymmetricVector::new(&fw, chi, u).unwrap();
        let f = evaluate_chi_vector(&fw, &z, &g.window(0)).unwrap();
        let (re, im) = real_imag_parts(&fw, &f).unwrap();
        assert!(verify_flex(&fw, &re, None).unwrap().pass);
        assert!(verify_flex(&fw, &im, None).unwrap().pass);
        // z_(l,m) = ((-1)^l i, (-1)^l, -2 eta^(m-1))
        for (gamma, v) in re.iter() {
            let (l, m) = (gamma.torsion[0], gamma.torsion[1] as i32);
            let sign = if l == 0 { 1.0 } else { -1.0 };
            let third = (-2.0 * eta.powi(m - 1)).re;
            assert!((v - real_vector(&[0.0, sign, third])).norm() < 1e-12, "{gamma}");
        }
    }

    #[test]
    fn real_input_has_zero_imaginary_part() {
        let fw = catalog::frieze(2.0, false);
        let f = WindowedField::from_fn(fw.group().window(2), 2, |g| real_vector(&[g.free[0] as f64, 1.0])).unwrap();
        let (_, im) = real_imag_parts(&fw, &f).unwrap();
        assert_eq!(im.max_norm(), 0.0);
    }

    #[test]
    fn complex_data_blocks_real_parts() {
        let g = AbelianGroup::new(1, vec![]).unwrap();
        let phase = CMatrix::from_element(1, 1, Complex64::from_polar(1.0, 0.5));
        let tau = Representation::new(g.clone(), vec![AffineIsometry::linear(phase).unwrap()]).unwrap();
        let edge = GainEdge {
            id: "e".into(),
            source: 0,
            range: 0,
            gain: g.generator(0),
            phi: CMatrix::from_element(1, 1, c(1.0, 0.0)),
        };
        let fw = crate::gain::GainFramework::new(vec!["v".into()], vec![edge], tau, 1).unwrap();
        let f = WindowedField::zeros(g.window(1), 1);
        assert!(matches!(real_imag_parts(&fw, &f), Err(Error::Usage(_))));
    }

    #[test]
    fn intertwining_on_generators() {
        let fw = catalog::irrational_rotation(1.0, None);
        let g = fw.group().clone();
        let f = WindowedField::from_fn(g.window(5), 3, |gamma| {
            let t = gamma.free[0] as f64 + 0.5 * gamma.torsion[0] as f64;
            CVector::from_vec(vec![c(t.sin(), 0.2), c(t * t / 10.0, -t), c(1.0, t.cos())])
        })
        .unwrap();
        for shift in g.generators() {
            let lhs = apply_gain_operator(&fw, &twisted_shift(&fw, &f, &shift).unwrap()).unwrap();
            let rhs = apply_gain_operator(&fw, &f).unwrap().shift(&shift).unwrap();
            let r = lhs.window().radius().min(rhs.window().radius());
            let (lhs, rhs) = (lhs.restrict(r).unwrap(), rhs.restrict(r).unwrap());
            for (a, b) in lhs.values().iter().zip(rhs.values()) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }
}
