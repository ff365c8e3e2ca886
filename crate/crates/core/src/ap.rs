//! Almost periodic analysis on box windows: means, Bohr-Fourier
//! coefficients, averaging operators, Fejer approximation and the
//! almost-periodic rigidity certificate.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flex::{chi_flex_basis, evaluate_chi_vector, is_translation, untwist, WindowedField};
use crate::gain::{
    joint_spectral_points, rum_spectrum_finite, rum_spectrum_scan, GainFramework, ScanOptions,
    SpectrumPoint,
};
use crate::group::{circle_distance, AbelianGroup, Character, GroupElement};
use crate::linalg::{CMatrix, CVector};

/// Relative threshold for a nonzero Bohr-Fourier coefficient.
pub const COEFFICIENT_TOL: f64 = 1e-6;
/// Window radius used for means unless told otherwise.
pub const DEFAULT_MEAN_RADIUS: usize = 200;
/// Largest integer coefficient tried when expressing an angle through the
/// Fejer basis.
const MAX_BASIS_COEFFICIENT: i64 = 12;
const TRANSLATION_TOL: f64 = 1e-8;
const CERTIFICATE_RADIUS: usize = 3;

/// A finite sum `sum_k chi_k (x) a_k` with pairwise distinct characters.
#[derive(Clone, Debug)]
pub struct TrigPolynomial {
    group: AbelianGroup,
    dim: usize,
    terms: Vec<(Character, CVector)>,
}

impl TrigPolynomial {
    pub fn new(group: AbelianGroup, dim: usize, terms: Vec<(Character, CVector)>) -> Result<Self> {
        for (i, (chi, a)) in terms.iter().enumerate() {
            group.check_character(chi)?;
            if a.len() != dim {
                return Err(Error::structural(format!(
                    "coefficient {i} has length {}, expected {dim}",
                    a.len()
                )));
            }
            if terms[..i].iter().any(|(c, _)| group.characters_equal(c, chi)) {
                return Err(Error::structural(format!("character {chi} appears twice")));
            }
        }
        Ok(TrigPolynomial { group, dim, terms })
    }

    pub fn terms(&self) -> &[(Character, CVector)] {
        &self.terms
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The characters with a nonzero coefficient.
    pub fn spectrum(&self) -> Vec<Character> {
        self.terms
            .iter()
            .filter(|(_, a)| a.norm() > 0.0)
            .map(|(c, _)| c.clone())
            .collect()
    }

    pub fn evaluate(&self, g: &GroupElement) -> CVector {
        self.terms
            .iter()
            .fold(CVector::zeros(self.dim), |acc, (chi, a)| {
                acc + a * self.group.evaluate_unchecked(chi, g)
            })
    }
}

type Evaluator = Arc<dyn Fn(&GroupElement) -> Option<CVector> + Send + Sync>;

/// A vector-valued function on the group, possibly only known on part of it.
#[derive(Clone)]
pub struct SampledFunction {
    group: AbelianGroup,
    dim: usize,
    eval: Evaluator,
}

impl std::fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SampledFunction {{ group: {}, dim: {} }}", self.group, self.dim)
    }
}

impl SampledFunction {
    pub fn from_fn(
        group: AbelianGroup,
        dim: usize,
        f: impl Fn(&GroupElement) -> Option<CVector> + Send + Sync + 'static,
    ) -> Self {
        SampledFunction {
            group,
            dim,
            eval: Arc::new(f),
        }
    }

    pub fn from_trig(p: &TrigPolynomial) -> Self {
        let p = p.clone();
        SampledFunction::from_fn(p.group.clone(), p.dim, move |g| Some(p.evaluate(g)))
    }

    /// The table of a windowed field; undefined outside its window.
    pub fn from_field(f: &WindowedField) -> Self {
        let f = f.clone();
        SampledFunction::from_fn(f.window().group().clone(), f.block_dim(), move |g| f.get(g).cloned())
    }

    /// `gamma -> dtau(-gamma) f(gamma)` for a field on the vertices of a
    /// framework.
    pub fn untwisted(fw: &GainFramework, f: &WindowedField) -> Result<Self> {
        Ok(SampledFunction::from_field(&untwist(fw, f)?))
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, g: &GroupElement) -> Option<CVector> {
        (self.eval)(g)
    }

    fn require(&self, g: &GroupElement) -> Result<CVector> {
        self.get(g)
            .ok_or_else(|| Error::usage(format!("the function is not known at {g}")))
    }

    /// Largest value norm over a window.
    pub fn sup_norm(&self, radius: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for g in self.group.window(radius).elements() {
            worst = worst.max(self.require(&g)?.norm());
        }
        Ok(worst)
    }
}

/// Mean over the window of radius `n`.
pub fn truncated_mean(f: &SampledFunction, n: usize) -> Result<CVector> {
    let window = f.group.window(n);
    let mut sum = CVector::zeros(f.dim);
    for g in window.elements() {
        sum += f.require(&g)?;
    }
    Ok(sum / Complex64::new(window.len() as f64, 0.0))
}

/// Truncated Bohr-Fourier coefficient `M_n(conj(chi) h)`.
pub fn fourier_coefficient(h: &SampledFunction, chi: &Character, n: usize) -> Result<CVector> {
    h.group.check_character(chi)?;
    let window = h.group.window(n);
    let mut sum = CVector::zeros(h.dim);
    for g in window.elements() {
        sum += h.require(&g)? * h.group.evaluate_unchecked(chi, &g).conj();
    }
    Ok(sum / Complex64::new(window.len() as f64, 0.0))
}

/// Coefficients of the least-squares fit of `h` by the candidate
/// characters over the window of radius `n`.
///
/// Solves `G c = b` with `G_jk = M_n(conj(chi_j) chi_k)` and
/// `b_j = M_n(conj(chi_j) h)`, so a trigonometric polynomial whose
/// characters are all candidates is recovered exactly, without the
/// `O(1/n)` cross-talk of plain truncated means.
pub fn candidate_coefficients(h: &SampledFunction, candidates: &[Character], n: usize) -> Result<Vec<CVector>> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let group = &h.group;
    for chi in candidates {
        group.check_character(chi)?;
    }
    let elems = group.window(n).elements();
    let k = candidates.len();
    // rows: window points, columns: candidate characters
    let basis = CMatrix::from_fn(elems.len(), k, |i, j| group.evaluate_unchecked(&candidates[j], &elems[i]));
    let mut values = CMatrix::zeros(elems.len(), h.dim);
    for (i, g) in elems.iter().enumerate() {
        values.set_row(i, &h.require(g)?.transpose());
    }
    let scale = Complex64::new(1.0 / elems.len() as f64, 0.0);
    let gram = basis.adjoint() * &basis * scale;
    let rhs = basis.adjoint() * values * scale;
    let solution = gram
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::contract(format!("Gram matrix inversion failed: {e}")))?
        * rhs;
    Ok((0..k).map(|j| solution.row(j).transpose()).collect())
}

/// `omega -> (1/|H_n|) sum_{gamma in H_n} chi(gamma) f(omega - gamma)` on the
/// window of radius `n_out`.
pub fn averaging_operator(f: &SampledFunction, chi: &Character, n: usize, n_out: usize) -> Result<WindowedField> {
    let group = f.group.clone();
    group.check_character(chi)?;
    let inner = group.window(n).elements();
    let weights: Vec<Complex64> = inner.iter().map(|g| group.evaluate_unchecked(chi, g)).collect();
    let scale = Complex64::new(1.0 / inner.len() as f64, 0.0);
    let out = group.window(n_out);
    let values = out
        .elements()
        .iter()
        .map(|w| {
            let mut sum = CVector::zeros(f.dim);
            for (g, c) in inner.iter().zip(&weights) {
                let at = group.sub(w, g)?;
                let v = f.get(&at).ok_or_else(|| {
                    Error::usage(format!(
                        "averaging needs the function on the window of radius {}; missing at {at}",
                        n + n_out
                    ))
                })?;
                sum += v * *c;
            }
            Ok(sum * scale)
        })
        .collect::<Result<Vec<_>>>()?;
    WindowedField::new(out, f.dim, values)
}

/// Integer coordinates of each free angle of the candidates with respect to
/// a basis of angles chosen greedily in candidate order.
fn fejer_coordinates(candidates: &[Character], free_rank: usize) -> Vec<Vec<Vec<i64>>> {
    let mut coords = vec![Vec::new(); candidates.len()];
    for l in 0..free_rank {
        let mut basis: Vec<f64> = Vec::new();
        let mut expressed: Vec<Vec<i64>> = Vec::new();
        for chi in candidates {
            let theta = chi.angles[l];
            let found = express(theta, &basis);
            match found {
                Some(c) => expressed.push(c),
                None => {
                    basis.push(theta);
                    let mut c = vec![0; basis.len()];
                    *c.last_mut().unwrap() = 1;
                    expressed.push(c);
                }
            }
        }
        let width = basis.len();
        for (k, mut c) in expressed.into_iter().enumerate() {
            c.resize(width, 0);
            coords[k].push(c);
        }
    }
    coords
}

/// Small integer combination of the basis angles equal to `theta` mod 2 pi.
fn express(theta: f64, basis: &[f64]) -> Option<Vec<i64>> {
    if circle_distance(theta, 0.0) <= 1e-9 {
        return Some(vec![0; basis.len()]);
    }
    let mut best: Option<Vec<i64>> = None;
    let mut current = vec![-MAX_BASIS_COEFFICIENT; basis.len()];
    if basis.is_empty() {
        return None;
    }
    loop {
        let angle: f64 = current.iter().zip(basis).map(|(&j, b)| j as f64 * b).sum();
        if circle_distance(angle.rem_euclid(TAU), theta) <= 1e-9 {
            let cost = |c: &[i64]| c.iter().map(|j| j.abs()).sum::<i64>();
            if best.as_ref().is_none_or(|b| cost(&current) < cost(b)) {
                best = Some(current.clone());
            }
        }
        let mut i = 0;
        loop {
            if i == current.len() {
                return best;
            }
            current[i] += 1;
            if current[i] <= MAX_BASIS_COEFFICIENT {
                break;
            }
            current[i] = -MAX_BASIS_COEFFICIENT;
            i += 1;
        }
    }
}

/// Fejer weight of every candidate at the given level: a product of
/// `1 - |j| / (N + 1)` over the integer coordinates of the free angles, and
/// 1 on torsion factors.
pub fn fejer_weights(candidates: &[Character], free_rank: usize, level: usize) -> Vec<f64> {
    fejer_coordinates(candidates, free_rank)
        .iter()
        .map(|per_factor| {
            per_factor
                .iter()
                .flatten()
                .map(|&j| (1.0 - j.unsigned_abs() as f64 / (level as f64 + 1.0)).max(0.0))
                .product()
        })
        .collect()
}

/// Bochner-Fejer mean `sum_k w_k h^(chi_k) chi_k` over the candidates whose
/// coefficient is nonzero.
pub fn fejer_approximation(
    h: &SampledFunction,
    level: usize,
    candidates: &[Character],
    mean_radius: usize,
) -> Result<TrigPolynomial> {
    let coeffs = candidate_coefficients(h, candidates, mean_radius)?;
    let threshold = COEFFICIENT_TOL * h.sup_norm(mean_radius)?;
    let weights = fejer_weights(candidates, h.group.free_rank(), level);
    let terms = candidates
        .iter()
        .zip(coeffs)
        .zip(weights)
        .filter(|((_, c), w)| c.norm() > threshold && *w > 0.0)
        .map(|((chi, c), w)| (chi.clone(), c * Complex64::new(w, 0.0)))
        .collect();
    TrigPolynomial::new(h.group.clone(), h.dim, terms)
}

#[derive(Clone, Debug)]
pub struct FourierTerm {
    pub character: Character,
    pub coefficient: CVector,
    pub magnitude: f64,
}

/// Candidates whose coefficient norm exceeds `tol` (default
/// `1e-6 |h|_inf` on the mean window).
pub fn bohr_fourier_spectrum(
    h: &SampledFunction,
    candidates: &[Character],
    n: usize,
    tol: Option<f64>,
) -> Result<Vec<FourierTerm>> {
    let tol = match tol {
        Some(t) => t,
        None => COEFFICIENT_TOL * h.sup_norm(n)?,
    };
    let coeffs = candidate_coefficients(h, candidates, n)?;
    Ok(candidates
        .iter()
        .zip(coeffs)
        .filter(|(_, c)| c.norm() > tol)
        .map(|(chi, c)| FourierTerm {
            character: chi.clone(),
            magnitude: c.norm(),
            coefficient: c,
        })
        .collect())
}

#[derive(Clone, Debug)]
pub enum Witness {
    /// A spectrum point that is not a joint spectral point.
    Character { character: Character, kernel_dim: usize },
    /// Every character over this torsion index tuple is in the spectrum.
    SaturatedTorus { torsion_indices: Vec<u32> },
    /// A chi-symmetric flex at a joint spectral point that is not a
    /// translation.
    NonTranslationalFlex { character: Character, amplitude: CVector },
}

#[derive(Clone, Debug)]
pub struct RigidityCertificate {
    pub ap_rigid: bool,
    pub spectrum: Vec<SpectrumPoint>,
    pub saturated: Vec<Vec<u32>>,
    pub joint_points: Vec<Character>,
    pub witnesses: Vec<Witness>,
}

/// Almost-periodic rigidity holds when the RUM spectrum consists of the
/// joint spectral points only and every chi-symmetric flex at those points
/// is a translation.
pub fn check_ap_rigidity(fw: &GainFramework, opts: &ScanOptions) -> Result<RigidityCertificate> {
    let group = fw.group().clone();
    if group.free_rank() > 2 {
        return Err(Error::Unsupported(format!(
            "rigidity certificates need free rank at most 2, got {}",
            group.free_rank()
        )));
    }
    let (spectrum, saturated) = if group.is_finite() {
        (rum_spectrum_finite(fw, opts.tol)?, Vec::new())
    } else {
        let scan = rum_spectrum_scan(fw, opts)?;
        (scan.points, scan.saturated)
    };
    let joint_points: Vec<Character> = joint_spectral_points(fw.tau())?
        .into_iter()
        .map(|p| p.character)
        .collect();

    let mut witnesses: Vec<Witness> = saturated
        .iter()
        .map(|t| Witness::SaturatedTorus {
            torsion_indices: t.clone(),
        })
        .collect();
    for p in spectrum.iter().filter(|p| !p.joint_spectral) {
        witnesses.push(Witness::Character {
            character: p.character.clone(),
            kernel_dim: p.kernel_dim,
        });
    }
    let window = group.window(CERTIFICATE_RADIUS);
    for chi in &joint_points {
        for z in chi_flex_basis(fw, chi, opts.tol)? {
            let f = evaluate_chi_vector(fw, &z, &window)?;
            if !is_translation(&f, fw.dx(), TRANSLATION_TOL) {
                witnesses.push(Witness::NonTranslationalFlex {
                    character: chi.clone(),
                    amplitude: z.amplitude,
                });
            }
        }
    }
    Ok(RigidityCertificate {
        ap_rigid: witnesses.is_empty(),
        spectrum,
        saturated,
        joint_points,
        witnesses,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MeanDefect {
    pub difference: f64,
    pub bound: f64,
}

/// `|M_n(f) - M_n(f(. - shift))|` against `2 |f|_inf defect(shift, n)`.
pub fn mean_shift_defect(f: &SampledFunction, shift: &GroupElement, n: usize) -> Result<MeanDefect> {
    let group = f.group.clone();
    let g = f.clone();
    let s = shift.clone();
    let gg = group.clone();
    let shifted = SampledFunction::from_fn(group.clone(), f.dim, move |x| g.get(&gg.sub(x, &s).ok()?));
    let difference = (truncated_mean(f, n)? - truncated_mean(&shifted, n)?).norm();
    let sup = f.sup_norm(n + shift.free_sup_norm())?;
    let defect = group.folner_defect(shift, n)?.value();
    Ok(MeanDefect {
        difference,
        bound: 2.0 * sup * defect,
    })
}
