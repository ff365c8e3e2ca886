//! Gain frameworks: a directed multigraph whose edges carry a group element
//! (the gain) and a linear constraint map, together with a representation
//! of the group by affine isometries. Orbit matrices, the RUM spectrum and
//! joint spectral points live here.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{AbelianGroup, Character, GroupElement};
use crate::linalg::{
    self, joint_spectrum, right_singular_system, unitary_defect, unitary_power, CMatrix, CVector,
    DEFAULT_CLUSTER_TOL,
};

pub const REPRESENTATION_TOL: f64 = 1e-8;
/// Relative singular value threshold for flagging a scanned character.
pub const SCAN_TOL: f64 = 1e-7;
/// Scanned characters this close to a joint spectral point are replaced by it.
pub const SNAP_TOL: f64 = 1e-6;
pub const REFINE_PRECISION: f64 = 1e-10;
/// Largest grid the scan will evaluate.
pub const MAX_SCAN_POINTS: usize = 1 << 24;

/// `x -> linear * x + translation` with unitary linear part.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineIsometry {
    pub linear: CMatrix,
    pub translation: CVector,
}

impl AffineIsometry {
    pub fn new(linear: CMatrix, translation: CVector) -> Result<Self> {
        let d = linear.nrows();
        if d == 0 || linear.ncols() != d || translation.len() != d {
            return Err(Error::structural(format!(
                "affine map with linear part {}x{} and translation of length {}",
                linear.nrows(),
                linear.ncols(),
                translation.len()
            )));
        }
        linalg::check_finite(&linear)?;
        if translation.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::structural("translation has non-finite entries"));
        }
        let defect = unitary_defect(&linear);
        if defect > linalg::UNITARY_TOL {
            return Err(Error::contract(format!(
                "linear part is not unitary (|A*A - I| = {defect:.3e})"
            )));
        }
        Ok(AffineIsometry {
            linear,
            translation,
        })
    }

    pub fn linear(linear: CMatrix) -> Result<Self> {
        let d = linear.nrows();
        Self::new(linear, CVector::zeros(d))
    }

    pub fn identity(d: usize) -> Self {
        AffineIsometry {
            linear: CMatrix::identity(d, d),
            translation: CVector::zeros(d),
        }
    }

    pub fn dim(&self) -> usize {
        self.linear.nrows()
    }

    /// `self o other`.
    pub fn compose(&self, other: &AffineIsometry) -> AffineIsometry {
        AffineIsometry {
            linear: &self.linear * &other.linear,
            translation: &self.linear * &other.translation + &self.translation,
        }
    }

    pub fn inverse(&self) -> AffineIsometry {
        let inv = self.linear.adjoint();
        let translation = -(&inv * &self.translation);
        AffineIsometry {
            linear: inv,
            translation,
        }
    }

    pub fn pow(&self, k: i64) -> AffineIsometry {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut result = AffineIsometry::identity(self.dim());
        let mut sq = base;
        let mut k = k.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                result = result.compose(&sq);
            }
            k >>= 1;
            if k > 0 {
                sq = sq.compose(&sq);
            }
        }
        result
    }

    pub fn apply(&self, x: &CVector) -> CVector {
        &self.linear * x + &self.translation
    }

    /// Largest Frobenius deviation of the linear parts and translations.
    pub fn distance(&self, other: &AffineIsometry) -> f64 {
        (&self.linear - &other.linear)
            .norm()
            .max((&self.translation - &other.translation).norm())
    }

    pub fn is_real(&self) -> bool {
        is_real(&self.linear) && self.translation.iter().all(|z| z.im == 0.0)
    }
}

pub(crate) fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// A homomorphism `tau` from the group into affine isometries of `C^d`,
/// given by the images of the standard generators.
#[derive(Clone, Debug)]
pub struct Representation {
    group: AbelianGroup,
    generators: Vec<AffineIsometry>,
}

impl Representation {
    pub fn new(group: AbelianGroup, generators: Vec<AffineIsometry>) -> Result<Self> {
        if generators.len() != group.rank() {
            return Err(Error::structural(format!(
                "{} generator images for a group with {} generators",
                generators.len(),
                group.rank()
            )));
        }
        let d = generators[0].dim();
        if let Some(i) = generators.iter().position(|g| g.dim() != d) {
            return Err(Error::structural(format!(
                "generator {i} acts on dimension {}, expected {d}",
                generators[i].dim()
            )));
        }
        for (i, &n) in group.torsion().iter().enumerate() {
            let idx = group.free_rank() + i;
            let dist = generators[idx].pow(n as i64).distance(&AffineIsometry::identity(d));
            if dist > REPRESENTATION_TOL {
                return Err(Error::contract(format!(
                    "image of torsion generator {idx} does not have order dividing {n} (deviation {dist:.3e})"
                )));
            }
        }
        for i in 0..generators.len() {
            for j in i + 1..generators.len() {
                let dist = generators[i]
                    .compose(&generators[j])
                    .distance(&generators[j].compose(&generators[i]));
                if dist > REPRESENTATION_TOL {
                    return Err(Error::contract(format!(
                        "images of generators {i} and {j} do not commute (deviation {dist:.3e})"
                    )));
                }
            }
        }
        Ok(Representation { group, generators })
    }

    /// Every generator acts as the identity on `C^d`.
    pub fn trivial(group: AbelianGroup, d: usize) -> Self {
        let generators = vec![AffineIsometry::identity(d); group.rank()];
        Representation { group, generators }
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    pub fn generators(&self) -> &[AffineIsometry] {
        &self.generators
    }

    /// Linear parts of the generator images, in generator order.
    pub fn generator_linear_parts(&self) -> Vec<CMatrix> {
        self.generators.iter().map(|g| g.linear.clone()).collect()
    }

    /// The linear part `dtau(g)`.
    pub fn dtau(&self, g: &GroupElement) -> Result<CMatrix> {
        self.group.check(g)?;
        Ok(self.dtau_unchecked(g))
    }

    pub(crate) fn dtau_unchecked(&self, g: &GroupElement) -> CMatrix {
        let d = self.dim();
        self.group
            .exponents(g)
            .iter()
            .zip(&self.generators)
            .filter(|(&k, _)| k != 0)
            .fold(CMatrix::identity(d, d), |acc, (&k, gen)| {
                acc * unitary_power(&gen.linear, k)
            })
    }

    /// The affine isometry `tau(g)`.
    pub fn affine(&self, g: &GroupElement) -> Result<AffineIsometry> {
        self.group.check(g)?;
        Ok(self
            .group
            .exponents(g)
            .iter()
            .zip(&self.generators)
            .fold(AffineIsometry::identity(self.dim()), |acc, (&k, gen)| {
                acc.compose(&gen.pow(k))
            }))
    }

    pub fn is_real(&self) -> bool {
        self.generators.iter().all(AffineIsometry::is_real)
    }
}

#[derive(Clone, Debug)]
pub struct GainEdge {
    pub id: String,
    /// Index into the vertex list.
    pub source: usize,
    pub range: usize,
    pub gain: GroupElement,
    /// `dy x dx` constraint map.
    pub phi: CMatrix,
}

impl GainEdge {
    pub fn is_loop(&self) -> bool {
        self.source == self.range
    }
}

#[derive(Clone, Debug)]
pub struct GainFramework {
    vertices: Vec<String>,
    edges: Vec<GainEdge>,
    tau: Representation,
    dy: usize,
    // phi_e * dtau(m_e), independent of the character
    twisted_phi: Vec<CMatrix>,
}

impl GainFramework {
    pub fn new(
        vertices: Vec<String>,
        edges: Vec<GainEdge>,
        tau: Representation,
        dy: usize,
    ) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::structural("a gain framework needs at least one vertex"));
        }
        if dy == 0 {
            return Err(Error::structural("constraint dimension dy must be positive"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for v in &vertices {
            if !seen.insert(v.as_str()) {
                return Err(Error::structural(format!("duplicate vertex id {v:?}")));
            }
        }
        let mut edge_ids = std::collections::BTreeSet::new();
        let dx = tau.dim();
        let group = tau.group().clone();
        for e in &edges {
            if !edge_ids.insert(e.id.as_str()) {
                return Err(Error::structural(format!("duplicate edge id {:?}", e.id)));
            }
            if e.source >= vertices.len() || e.range >= vertices.len() {
                return Err(Error::structural(format!(
                    "edge {:?} refers to a vertex outside 0..{}",
                    e.id,
                    vertices.len()
                )));
            }
            group.check(&e.gain)?;
            if e.phi.shape() != (dy, dx) {
                return Err(Error::structural(format!(
                    "edge {:?} has constraint map of shape {}x{}, expected {dy}x{dx}",
                    e.id,
                    e.phi.nrows(),
                    e.phi.ncols()
                )));
            }
            linalg::check_finite(&e.phi)?;
            if e.is_loop() && e.gain.is_zero() {
                return Err(Error::Validation(format!(
                    "loop {:?} has zero gain",
                    e.id
                )));
            }
        }
        for (i, a) in edges.iter().enumerate() {
            for b in &edges[i + 1..] {
                if a.source == b.source && a.range == b.range && a.gain == b.gain {
                    return Err(Error::Validation(format!(
                        "parallel edges {:?} and {:?} share the gain {}",
                        a.id, b.id, a.gain
                    )));
                }
            }
        }
        let twisted_phi = edges
            .iter()
            .map(|e| &e.phi * tau.dtau_unchecked(&e.gain))
            .collect();
        Ok(GainFramework {
            vertices,
            edges,
            tau,
            dy,
            twisted_phi,
        })
    }

    pub fn group(&self) -> &AbelianGroup {
        self.tau.group()
    }

    pub fn tau(&self) -> &Representation {
        &self.tau
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[GainEdge] {
        &self.edges
    }

    pub fn dx(&self) -> usize {
        self.tau.dim()
    }

    pub fn dy(&self) -> usize {
        self.dy
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == id)
    }

    /// `max_e |m_e|_inf` over free parts.
    pub fn max_gain_norm(&self) -> usize {
        self.edges.iter().map(|e| e.gain.free_sup_norm()).max().unwrap_or(0)
    }

    /// Largest spectral norm among the constraint maps.
    pub fn max_phi_norm(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.phi.clone().singular_values().max())
            .fold(0.0, f64::max)
    }

    /// Whether every constraint map and every generator image is real.
    pub fn is_real(&self) -> bool {
        self.tau.is_real() && self.edges.iter().all(|e| is_real(&e.phi))
    }

    /// The orbit matrix `O(chi)`, with `|E0| * dy` rows and `|V0| * dx`
    /// columns.
    pub fn orbit_matrix(&self, chi: &Character) -> Result<CMatrix> {
        self.group().check_character(chi)?;
        Ok(self.orbit_matrix_unchecked(chi))
    }

    pub(crate) fn orbit_matrix_unchecked(&self, chi: &Character) -> CMatrix {
        let (dx, dy) = (self.dx(), self.dy);
        let mut m = CMatrix::zeros(self.edges.len() * dy, self.vertices.len() * dx);
        for (i, (e, tphi)) in self.edges.iter().zip(&self.twisted_phi).enumerate() {
            let c = self.group().evaluate_unchecked(chi, &e.gain);
            let r0 = i * dy;
            let twisted = tphi * c;
            if e.is_loop() {
                m.view_mut((r0, e.source * dx), (dy, dx))
                    .copy_from(&(&e.phi - twisted));
            } else {
                m.view_mut((r0, e.source * dx), (dy, dx)).copy_from(&e.phi);
                m.view_mut((r0, e.range * dx), (dy, dx)).copy_from(&(-twisted));
            }
        }
        m
    }
}

/// Singular values of an orbit matrix as `(sigma_min, sigma_max)`; an
/// edgeless framework has both equal to zero.
fn sigma_pair(m: &CMatrix) -> Result<(f64, f64)> {
    if m.nrows() == 0 {
        return Ok((0.0, 0.0));
    }
    linalg::sigma_extremes(m)
}

/// Kernel of an orbit matrix using the relative threshold
/// `tol * max(1, sigma_max)`; an edgeless framework has the full space.
fn orbit_kernel(m: &CMatrix, tol: f64) -> Result<(CMatrix, f64, f64)> {
    if m.nrows() == 0 {
        let n = m.ncols();
        return Ok((CMatrix::identity(n, n), 0.0, 0.0));
    }
    let (values, v) = right_singular_system(m)?;
    let threshold = tol * values[0].max(1.0);
    let first_zero = values.iter().position(|&s| s <= threshold).unwrap_or(values.len());
    let kernel = v.columns(first_zero, values.len() - first_zero).into_owned();
    Ok((kernel, *values.last().unwrap(), values[0]))
}

#[derive(Clone, Debug)]
pub struct Membership {
    pub is_member: bool,
    /// Orthonormal kernel basis of the orbit matrix.
    pub kernel: CMatrix,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

/// Whether `O(chi)` has a nontrivial numerical kernel.
pub fn rum_membership(fw: &GainFramework, chi: &Character, tol: f64) -> Result<Membership> {
    if !(tol > 0.0) {
        return Err(Error::usage("membership tolerance must be positive"));
    }
    let m = fw.orbit_matrix(chi)?;
    let (kernel, sigma_min, sigma_max) = orbit_kernel(&m, tol)?;
    Ok(Membership {
        is_member: kernel.ncols() > 0,
        kernel,
        sigma_min,
        sigma_max,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumPoint {
    pub character: Character,
    pub kernel_dim: usize,
    pub sigma_min: f64,
    /// Whether the character is a joint spectral point.
    pub joint_spectral: bool,
}

/// Exact RUM spectrum of a framework over a finite group.
pub fn rum_spectrum_finite(fw: &GainFramework, tol: f64) -> Result<Vec<SpectrumPoint>> {
    if fw.group().free_rank() > 0 {
        return Err(Error::usage(
            "the dual of a group with free factors is infinite; use the scan instead",
        ));
    }
    let js = joint_spectral_points(fw.tau())?;
    let mut out = Vec::new();
    for chi in fw.group().finite_characters()? {
        let mem = rum_membership(fw, &chi, tol)?;
        if mem.is_member {
            out.push(SpectrumPoint {
                joint_spectral: js.iter().any(|p| fw.group().characters_equal(&p.character, &chi)),
                kernel_dim: mem.kernel.ncols(),
                sigma_min: mem.sigma_min,
                character: chi,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct JointSpectralPoint {
    /// The conjugate character taking the values `conj(lambda_i)` on the
    /// standard generators.
    pub character: Character,
    pub lambda: Vec<Complex64>,
    /// Orthonormal joint eigenvectors.
    pub eigenspace: CMatrix,
}

/// Joint spectral points from the standard generators.
pub fn joint_spectral_points(tau: &Representation) -> Result<Vec<JointSpectralPoint>> {
    let group = tau.group();
    let pairs = joint_spectrum(&tau.generator_linear_parts(), DEFAULT_CLUSTER_TOL)?;
    let mut out: Vec<JointSpectralPoint> = Vec::new();
    for pair in pairs {
        let conj: Vec<Complex64> = pair.lambda.iter().map(|l| l.conj()).collect();
        let character = group.character_from_generator_values(&conj, REPRESENTATION_TOL)?;
        match out
            .iter_mut()
            .find(|p| group.characters_equal(&p.character, &character))
        {
            Some(existing) => {
                let cols: Vec<CVector> = existing
                    .eigenspace
                    .column_iter()
                    .chain(pair.eigenspace.column_iter())
                    .map(|c| c.into_owned())
                    .collect();
                existing.eigenspace = CMatrix::from_columns(&cols);
            }
            None => out.push(JointSpectralPoint {
                character,
                lambda: pair.lambda,
                eigenspace: pair.eigenspace,
            }),
        }
    }
    Ok(out)
}

/// Joint spectral characters computed from an arbitrary generating tuple of
/// group elements. Each joint eigenvector of `(dtau(g_1), ..., dtau(g_m))`
/// is also an eigenvector of every standard generator; the character is read
/// off from those eigenvalues.
pub fn joint_spectral_characters_from_tuple(
    tau: &Representation,
    tuple: &[GroupElement],
) -> Result<Vec<Character>> {
    let group = tau.group();
    let ops = tuple
        .iter()
        .map(|g| tau.dtau(g))
        .collect::<Result<Vec<_>>>()?;
    let pairs = joint_spectrum(&ops, DEFAULT_CLUSTER_TOL)?;
    let gens = tau.generator_linear_parts();
    let mut out: Vec<Character> = Vec::new();
    for pair in pairs {
        let a = pair.eigenspace.column(0).into_owned();
        let mut values = Vec::with_capacity(gens.len());
        for (i, t) in gens.iter().enumerate() {
            let ta = t * &a;
            let mu = a.dotc(&ta);
            let residual = (ta - &a * mu).norm();
            if residual > REPRESENTATION_TOL {
                return Err(Error::contract(format!(
                    "joint eigenvector is not an eigenvector of generator {i}; the tuple does not generate"
                )));
            }
            values.push(mu.conj() / mu.norm());
        }
        let chi = group.character_from_generator_values(&values, REPRESENTATION_TOL)?;
        if !out.iter().any(|c| group.characters_equal(c, &chi)) {
            out.push(chi);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ScanOptions {
    pub samples_per_circle: usize,
    /// Relative singular value threshold for spectrum membership.
    pub tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            samples_per_circle: 1024,
            tol: SCAN_TOL,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub angles: Vec<f64>,
    pub torsion: Vec<u32>,
    pub sigma_min: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanResult {
    /// Isolated spectrum points found by the scan, snapped to joint spectral
    /// points where close, with every joint spectral point included.
    pub points: Vec<SpectrumPoint>,
    /// Torsion index tuples on which every grid point was flagged. The whole
    /// torus over such a tuple belongs to the spectrum at grid resolution.
    pub saturated: Vec<Vec<u32>>,
    pub samples_per_circle: usize,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

impl ScanResult {
    /// Number of detected spectrum points, `None` when a whole torus is in
    /// the spectrum.
    pub fn detected_count(&self) -> Option<usize> {
        if self.saturated.is_empty() {
            Some(self.points.len())
        } else {
            None
        }
    }

    /// Whether the character lies on a saturated torus or among the points.
    pub fn contains(&self, group: &AbelianGroup, chi: &Character) -> bool {
        self.saturated.contains(&chi.torsion_indices)
            || self
                .points
                .iter()
                .any(|p| group.character_distance(&p.character, chi) <= SNAP_TOL)
    }
}

/// Scan the dual torus for characters with a nontrivial orbit matrix kernel.
///
/// Each circle factor is sampled at `2 pi k / N`. Grid local minima of
/// `sigma_min` are refined by golden-section search (per axis when the free
/// rank is 2) and kept when they pass the relative threshold. Groups of free
/// rank above 2 only report grid points.
pub fn rum_spectrum_scan(fw: &GainFramework, opts: &ScanOptions) -> Result<ScanResult> {
    let group = fw.group();
    let r = group.free_rank();
    let n = opts.samples_per_circle;
    if r == 0 {
        return Err(Error::usage(
            "the scan needs at least one free factor; use the finite enumeration",
        ));
    }
    if n < 16 {
        return Err(Error::usage("the scan needs at least 16 samples per circle"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::usage("scan tolerance must be positive"));
    }
    let grid_len = (n as u128).checked_pow(r as u32).unwrap_or(u128::MAX);
    let total = grid_len.saturating_mul(group.torsion_order() as u128);
    if total > MAX_SCAN_POINTS as u128 {
        return Err(Error::Unsupported(format!(
            "scan grid of {total} points exceeds the limit of {MAX_SCAN_POINTS}"
        )));
    }
    let grid_len = grid_len as usize;
    let step = std::f64::consts::TAU / n as f64;
    let js = joint_spectral_points(fw.tau())?;

    let grid_angles = |idx: usize| -> Vec<f64> {
        let mut rest = idx;
        let mut angles = vec![0.0; r];
        for a in angles.iter_mut().rev() {
            *a = (rest % n) as f64 * step;
            rest /= n;
        }
        angles
    };

    let mut trace = Vec::with_capacity(total as usize);
    let mut candidates: Vec<(Character, f64)> = Vec::new();
    let mut saturated = Vec::new();

    for torsion in group.torsion_index_tuples() {
        let sigmas: Vec<(f64, f64)> = (0..grid_len)
            .into_par_iter()
            .map(|idx| {
                let chi = Character {
                    angles: grid_angles(idx),
                    torsion_indices: torsion.clone(),
                };
                sigma_pair(&fw.orbit_matrix_unchecked(&chi))
            })
            .collect::<Result<_>>()?;
        let flagged: Vec<bool> = sigmas
            .iter()
            .map(|&(smin, smax)| smin <= opts.tol * smax.max(1.0))
            .collect();
        for (idx, (&(smin, _), &f)) in sigmas.iter().zip(&flagged).enumerate() {
            trace.push(TraceRow {
                angles: grid_angles(idx),
                torsion: torsion.clone(),
                sigma_min: smin,
                flagged: f,
            });
        }
        if flagged.iter().all(|&f| f) {
            saturated.push(torsion.clone());
            continue;
        }

        let minima: Vec<usize> = (0..grid_len)
            .filter(|&idx| is_local_min(idx, r, n, &sigmas))
            .collect();
        let found: Vec<Option<(Character, f64)>> = minima
            .par_iter()
            .map(|&idx| {
                let start = grid_angles(idx);
                let (angles, value) = if r <= 2 {
                    refine(fw, &torsion, start, step)
                } else {
                    (start, sigmas[idx].0)
                };
                let chi = Character {
                    angles: angles
                        .into_iter()
                        .map(crate::group::normalize_angle)
                        .collect(),
                    torsion_indices: torsion.clone(),
                };
                let (_, smax) = sigma_pair(&fw.orbit_matrix_unchecked(&chi)).ok()?;
                (value <= opts.tol * smax.max(1.0)).then_some((chi, value))
            })
            .collect();
        candidates.extend(found.into_iter().flatten());
    }

    // snap, merge and add the joint spectral points
    let mut merged: Vec<(Character, f64)> = Vec::new();
    for (mut chi, value) in candidates {
        if let Some(p) = js
            .iter()
            .find(|p| group.character_distance(&p.character, &chi) <= SNAP_TOL)
        {
            chi = p.character.clone();
        }
        match merged
            .iter_mut()
            .find(|(c, _)| group.character_distance(c, &chi) <= SNAP_TOL)
        {
            Some(existing) => {
                if value < existing.1 {
                    *existing = (chi, value);
                }
            }
            None => merged.push((chi, value)),
        }
    }
    for p in &js {
        if !merged
            .iter()
            .any(|(c, _)| group.character_distance(c, &p.character) <= SNAP_TOL)
        {
            merged.push((p.character.clone(), 0.0));
        }
    }

    let mut points = merged
        .into_iter()
        .map(|(chi, _)| {
            let m = fw.orbit_matrix_unchecked(&chi);
            let (kernel, sigma_min, _) = orbit_kernel(&m, opts.tol)?;
            Ok(SpectrumPoint {
                joint_spectral: js.iter().any(|p| group.characters_equal(&p.character, &chi)),
                kernel_dim: kernel.ncols(),
                sigma_min,
                character: chi,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| {
        a.character
            .torsion_indices
            .cmp(&b.character.torsion_indices)
            .then_with(|| {
                a.character
                    .angles
                    .iter()
                    .zip(&b.character.angles)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    });

    Ok(ScanResult {
        points,
        saturated,
        samples_per_circle: n,
        trace,
    })
}

fn is_local_min(idx: usize, r: usize, n: usize, sigmas: &[(f64, f64)]) -> bool {
    let value = sigmas[idx].0;
    let mut coords = vec![0usize; r];
    let mut rest = idx;
    for c in coords.iter_mut().rev() {
        *c = rest % n;
        rest /= n;
    }
    // all neighbours in the cyclic 3^r - 1 stencil
    let offsets = 3usize.pow(r as u32);
    for o in 0..offsets {
        let mut code = o;
        let mut neighbour = 0usize;
        let mut is_self = true;
        for &c in &coords {
            let d = code % 3;
            code /= 3;
            if d != 1 {
                is_self = false;
            }
            let nc = (c + n + d - 1) % n;
            neighbour = neighbour * n + nc;
        }
        if !is_self && sigmas[neighbour].0 < value {
            return false;
        }
    }
    true
}

fn sigma_min_at(fw: &GainFramework, torsion: &[u32], angles: &[f64]) -> f64 {
    let chi = Character {
        angles: angles.to_vec(),
        torsion_indices: torsion.to_vec(),
    };
    sigma_pair(&fw.orbit_matrix_unchecked(&chi))
        .map(|p| p.0)
        .unwrap_or(f64::INFINITY)
}

/// Golden-section refinement over a bracket of three grid steps, one axis
/// at a time.
fn refine(fw: &GainFramework, torsion: &[u32], start: Vec<f64>, step: f64) -> (Vec<f64>, f64) {
    let mut angles = start;
    let mut best = sigma_min_at(fw, torsion, &angles);
    let sweeps = if angles.len() == 1 { 1 } else { 4 };
    for _ in 0..sweeps {
        let before = angles.clone();
        for axis in 0..angles.len() {
            let centre = angles[axis];
            let f = |t: f64| {
                let mut a = angles.clone();
                a[axis] = t;
                sigma_min_at(fw, torsion, &a)
            };
            let (t, v) = golden_section(f, centre - 1.5 * step, centre + 1.5 * step, REFINE_PRECISION);
            if v <= best {
                best = v;
                angles[axis] = t;
            }
        }
        let moved = before
            .iter()
            .zip(&angles)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if moved <= REFINE_PRECISION {
            break;
        }
    }
    (angles, best)
}

pub(crate) fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, precision: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > precision {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let t = (a + b) / 2.0;
    let ft = f(t);
    [(t, ft), (c, fc), (d, fd)]
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::linalg::{c, parallelism, real_matrix, real_vector};
    use std::f64::consts::{PI, TAU};

    #[test]
    fn dtau_identity_and_products() {
        let fw = catalog::c3h_euclidean();
        let g = fw.group().clone();
        let tau = fw.tau();
        let zero = tau.dtau(&g.zero()).unwrap();
        assert!((zero - CMatrix::identity(3, 3)).norm() < 1e-15);
        let t11 = tau.dtau(&g.element(&[], &[1, 1]).unwrap()).unwrap();
        let expected = &tau.generators()[0].linear * &tau.generators()[1].linear;
        assert!((t11 - expected).norm() < 1e-12);
    }

    #[test]
    fn dtau_of_repeated_rotation() {
        let fw = catalog::irrational_rotation(1.0, None);
        let g = fw.group().clone();
        let d = fw.tau().dtau(&g.element(&[2], &[0]).unwrap()).unwrap();
        let (s, co) = 2f64.sin_cos();
        let expected = real_matrix(3, 3, &[co, s, 0.0, -s, co, 0.0, 0.0, 0.0, 1.0]);
        assert!((d - expected).norm() < 1e-12);
    }

    #[test]
    fn representation_rejects_wrong_torsion_order() {
        let g = AbelianGroup::new(0, vec![2]).unwrap();
        let rot = real_matrix(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let err = Representation::new(g, vec![AffineIsometry::linear(rot).unwrap()]);
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn loops_need_nonzero_gain() {
        let g = AbelianGroup::new(1, vec![]).unwrap();
        let tau = Representation::trivial(g.clone(), 1);
        let edge = GainEdge {
            id: "e".into(),
            source: 0,
            range: 0,
            gain: g.zero(),
            phi: real_matrix(1, 1, &[1.0]),
        };
        let err = GainFramework::new(vec!["v".into()], vec![edge], tau, 1);
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn parallel_edges_need_distinct_gains() {
        let g = AbelianGroup::new(1, vec![]).unwrap();
        let tau = Representation::trivial(g.clone(), 1);
        let mk = |id: &str| GainEdge {
            id: id.into(),
            source: 0,
            range: 1,
            gain: g.zero(),
            phi: real_matrix(1, 1, &[1.0]),
        };
        let err = GainFramework::new(vec!["a".into(), "b".into()], vec![mk("e"), mk("f")], tau, 1);
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn phi_shape_is_checked() {
        let g = AbelianGroup::new(1, vec![]).unwrap();
        let tau = Representation::trivial(g.clone(), 2);
        let edge = GainEdge {
            id: "e".into(),
            source: 0,
            range: 0,
            gain: g.generator(0),
            phi: real_matrix(1, 3, &[1.0, 0.0, 0.0]),
        };
        let err = GainFramework::new(vec!["v".into()], vec![edge], tau, 1);
        assert!(matches!(err, Err(Error::Structural(_))));
    }

    #[test]
    fn c3h_orbit_matrix_matches_closed_form() {
        let fw = catalog::c3h_euclidean();
        let g = fw.group().clone();
        let eta = Complex64::from_polar(1.0, TAU / 3.0);
        let s3 = 3f64.sqrt();
        for j in 0..2i64 {
            for k in 0..3i64 {
                let chi = g.character(&[], &[j, k]).unwrap();
                let o = fw.orbit_matrix(&chi).unwrap();
                let ek = eta.powi(k as i32);
                let sj = if j == 0 { 1.0 } else { -1.0 };
                let expected = CMatrix::from_row_slice(
                    2,
                    3,
                    &[
                        -s3 * (1.0 + 2.0 * ek),
                        c(-3.0, 0.0),
                        c(0.0, 0.0),
                        -s3 * (1.0 + 2.0 * sj * ek),
                        c(-3.0, 0.0),
                        2.0 * (1.0 + sj * ek),
                    ],
                );
                assert!((o - expected).norm() < 1e-12, "chi = ({j},{k})");
            }
        }
    }

    #[test]
    fn frieze_orbit_matrix_matches_closed_form() {
        for q in [1.5, 2.0, 3.0] {
            let fw = catalog::frieze(q, false);
            let g = fw.group().clone();
            let k = (1.0 + 2f64.powf(q)).powf((1.0 - q) / q);
            for theta in [0.3, 1.0, PI, 5.0] {
                for iota in 0..2i64 {
                    let chi = g.character(&[theta], &[iota]).unwrap();
                    let w = Complex64::from_polar(1.0, theta);
                    let i = if iota == 0 { 1.0 } else { -1.0 };
                    let expected = CMatrix::from_row_slice(
                        2,
                        2,
                        &[
                            -(1.0 - w),
                            c(0.0, 0.0),
                            -k * (1.0 - w * i),
                            -k * 2f64.powf(q - 1.0) * (w * i + 1.0),
                        ],
                    );
                    assert!((fw.orbit_matrix(&chi).unwrap() - expected).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_edge_trivial_character() {
        let g = AbelianGroup::new(1, vec![]).unwrap();
        let tau = Representation::trivial(g.clone(), 2);
        let phi = real_matrix(1, 2, &[1.0, 2.0]);
        let edge = GainEdge {
            id: "e".into(),
            source: 0,
            range: 1,
            gain: g.zero(),
            phi: phi.clone(),
        };
        let fw = GainFramework::new(vec!["a".into(), "b".into()], vec![edge], tau, 1).unwrap();
        let o = fw.orbit_matrix(&g.trivial_character()).unwrap();
        let expected = CMatrix::from_row_slice(1, 4, &[c(1.0, 0.0), c(2.0, 0.0), c(-1.0, 0.0), c(-2.0, 0.0)]);
        assert!((o - expected).norm() < 1e-15);
    }

    #[test]
    fn membership_examples() {
        let fw = catalog::c3h_euclidean();
        let g = fw.group().clone();
        let m = rum_membership(&fw, &g.trivial_character(), 1e-9).unwrap();
        assert!(m.is_member);
        assert_eq!(m.kernel.ncols(), 1);
        let u = real_vector(&[1.0, -3f64.sqrt(), 0.0]);
        assert!(parallelism(&m.kernel.column(0).into_owned(), &u) > 1.0 - 1e-10);

        let cyl = catalog::c3h_cylindrical();
        let m = rum_membership(&cyl, &g.character(&[], &[1, 0]).unwrap(), 1e-9).unwrap();
        assert_eq!(m.kernel.ncols(), 2);

        let frieze = catalog::frieze(2.0, false);
        let chi = frieze.group().character(&[PI / 2.0], &[0]).unwrap();
        assert!(!rum_membership(&frieze, &chi, 1e-9).unwrap().is_member);
    }

    #[test]
    fn finite_spectrum_examples() {
        let fw = catalog::c3h_euclidean();
        let spec = rum_spectrum_finite(&fw, 1e-9).unwrap();
        assert_eq!(spec.len(), 6);
        assert!(spec.iter().all(|p| p.kernel_dim == 1));
        assert_eq!(spec.iter().filter(|p| p.joint_spectral).count(), 3);

        let g = AbelianGroup::new(0, vec![2, 3]).unwrap();
        let edgeless = GainFramework::new(
            vec!["a".into(), "b".into()],
            vec![],
            Representation::trivial(g, 2),
            1,
        )
        .unwrap();
        let spec = rum_spectrum_finite(&edgeless, 1e-9).unwrap();
        assert_eq!(spec.len(), 6);
        assert!(spec.iter().all(|p| p.kernel_dim == 4));

        let frieze = catalog::frieze(2.0, false);
        assert!(matches!(rum_spectrum_finite(&frieze, 1e-9), Err(Error::Usage(_))));
    }

    #[test]
    fn c3h_joint_spectral_points() {
        let fw = catalog::c3h_euclidean();
        let g = fw.group().clone();
        let pts = joint_spectral_points(fw.tau()).unwrap();
        assert_eq!(pts.len(), 3);
        for (j, k) in [(1, 0), (0, 2), (0, 1)] {
            let chi = g.character(&[], &[j, k]).unwrap();
            assert!(pts.iter().any(|p| g.characters_equal(&p.character, &chi)));
        }
    }

    #[test]
    fn trivial_representation_has_trivial_point() {
        let g = AbelianGroup::new(1, vec![2]).unwrap();
        let pts = joint_spectral_points(&Representation::trivial(g.clone(), 3)).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].character.is_trivial());
        assert_eq!(pts[0].eigenspace.ncols(), 3);
    }

    #[test]
    fn redundant_tuple_gives_same_characters() {
        for fw in catalog::all_fixtures() {
            let g = fw.group().clone();
            let std = joint_spectral_points(fw.tau()).unwrap();
            let mut tuple = g.generators();
            let sum = tuple.iter().fold(g.zero(), |acc, x| g.add(&acc, x).unwrap());
            tuple.push(sum);
            tuple.push(g.add(&tuple[0], &tuple[0]).unwrap());
            let other = joint_spectral_characters_from_tuple(fw.tau(), &tuple).unwrap();
            assert_eq!(other.len(), std.len());
            for p in &std {
                assert!(other.iter().any(|c| g.character_distance(c, &p.character) <= 1e-8));
            }
        }
    }

    #[test]
    fn scan_frieze_finds_three_points() {
        let fw = catalog::frieze(2.0, false);
        let res = rum_spectrum_scan(
            &fw,
            &ScanOptions {
                samples_per_circle: 512,
                tol: SCAN_TOL,
            },
        )
        .unwrap();
        assert!(res.saturated.is_empty());
        assert_eq!(res.points.len(), 3);
        assert_eq!(res.trace.len(), 1024);
    }

    #[test]
    fn scan_rejects_small_grids_and_finite_groups() {
        let fw = catalog::frieze(2.0, false);
        let opts = ScanOptions {
            samples_per_circle: 8,
            tol: SCAN_TOL,
        };
        assert!(matches!(rum_spectrum_scan(&fw, &opts), Err(Error::Usage(_))));
        let finite = catalog::c3h_euclidean();
        assert!(matches!(
            rum_spectrum_scan(&finite, &ScanOptions::default()),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn golden_section_finds_vertex() {
        let (t, v) = golden_section(|x| (x - 0.3).abs(), 0.0, 1.0, 1e-12);
        assert!((t - 0.3).abs() < 1e-10);
        assert!(v < 1e-10);
    }

    #[test]
    fn affine_pow_and_inverse() {
        let rot = real_matrix(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let a = AffineIsometry::new(rot, real_vector(&[1.0, 0.0])).unwrap();
        let id = AffineIsometry::identity(2);
        assert!(a.pow(4).distance(&id) < 1e-12);
        assert!(a.compose(&a.inverse()).distance(&id) < 1e-12);
        assert!(a.pow(-3).distance(&a) < 1e-12);
    }
}
