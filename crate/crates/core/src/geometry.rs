//! Bar-and-joint frameworks with symmetry: placements, constraint rows
//! derived from norms, covering frameworks and the quotient construction
//! back to a gain framework.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde_json::json;

use crate::error::{Error, Result};
use crate::flex::WindowedField;
use crate::gain::{GainEdge, GainFramework, Representation};
use crate::group::{AbelianGroup, GroupElement};
use crate::linalg::{CMatrix, CVector};

/// Central difference step is this times `max(1, |d|)`.
pub const DIFF_STEP: f64 = 1e-5;
/// Step and agreement threshold for the one-sided smoothness check.
pub const SMOOTHNESS_STEP: f64 = 1e-8;
pub const SMOOTHNESS_TOL: f64 = 1e-6;

/// Seed points, one per vertex of the gain framework. The copy of vertex
/// `v` at `gamma` sits at the real part of `tau(gamma) p_v`.
#[derive(Clone, Debug, PartialEq)]
pub struct Placement {
    pub seeds: Vec<Vec<f64>>,
}

impl Placement {
    pub fn new(seeds: Vec<Vec<f64>>) -> Self {
        Placement { seeds }
    }

    fn check(&self, fw_vertices: usize, d: usize) -> Result<()> {
        if self.seeds.len() != fw_vertices {
            return Err(Error::structural(format!(
                "{} seed points for {fw_vertices} vertices",
                self.seeds.len()
            )));
        }
        if let Some(i) = self.seeds.iter().position(|p| p.len() != d) {
            return Err(Error::structural(format!(
                "seed {i} has dimension {}, expected {d}",
                self.seeds[i].len()
            )));
        }
        if self.seeds.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::structural("seed point has non-finite coordinates"));
        }
        Ok(())
    }

    /// Position of the copy of vertex `v` at `gamma`.
    pub fn point(&self, tau: &Representation, v: usize, gamma: &GroupElement) -> Result<Vec<f64>> {
        let p = CVector::from_iterator(self.seeds[v].len(), self.seeds[v].iter().map(|&x| Complex64::new(x, 0.0)));
        Ok(tau.affine(gamma)?.apply(&p).iter().map(|z| z.re).collect())
    }
}

/// Block of a cylindrical norm `max(|x_head|, |x_tail|)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CylinderBlock {
    Head,
    Tail,
}

/// A norm given as a plain function of the coordinates.
pub type NormFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum NormSpec {
    Euclidean,
    Lq(f64),
    /// `max(|x[..split]|_2, |x[split..]|_2)`.
    Cylindrical { split: usize },
    SmoothNumeric(NormFn),
}

impl fmt::Debug for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormSpec::Euclidean => write!(f, "Euclidean"),
            NormSpec::Lq(q) => write!(f, "Lq({q})"),
            NormSpec::Cylindrical { split } => write!(f, "Cylindrical {{ split: {split} }}"),
            NormSpec::SmoothNumeric(_) => write!(f, "SmoothNumeric(..)"),
        }
    }
}

impl NormSpec {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            NormSpec::Lq(q) if !(*q > 1.0 && q.is_finite()) => {
                Err(Error::usage(format!("l_q norm needs 1 < q < inf, got {q}")))
            }
            NormSpec::Cylindrical { split } if *split == 0 || *split >= d => Err(Error::usage(format!(
                "cylindrical split {split} must lie strictly between 0 and {d}"
            ))),
            _ => Ok(()),
        }
    }

    /// Constraint row for the bar vector `d`.
    pub fn row(&self, d: &[f64], block: Option<CylinderBlock>) -> Result<Vec<f64>> {
        match self {
            NormSpec::Euclidean => {
                if d.iter().all(|&x| x == 0.0) {
                    return Err(Error::Degenerate("bar endpoints coincide".into()));
                }
                Ok(d.to_vec())
            }
            NormSpec::Lq(q) => functional_lq(d, *q),
            NormSpec::Cylindrical { split } => functional_cylindrical(d, *split, block),
            NormSpec::SmoothNumeric(norm) => functional_smooth_numeric(norm.as_ref(), d, None),
        }
    }
}

fn l2(d: &[f64]) -> f64 {
    d.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `(p_v - p_w)^T`.
pub fn functional_euclidean(pv: &[f64], pw: &[f64]) -> Result<Vec<f64>> {
    if pv.len() != pw.len() {
        return Err(Error::structural("points of different dimension"));
    }
    let d: Vec<f64> = pv.iter().zip(pw).map(|(a, b)| a - b).collect();
    NormSpec::Euclidean.row(&d, None)
}

/// `|d|_q^(1-q) sgn(d_i) |d_i|^(q-1)`.
pub fn functional_lq(d: &[f64], q: f64) -> Result<Vec<f64>> {
    NormSpec::Lq(q).validate(d.len())?;
    let norm = d.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q);
    if norm == 0.0 {
        return Err(Error::Degenerate("bar endpoints coincide".into()));
    }
    let scale = norm.powf(1.0 - q);
    Ok(d.iter().map(|&x| scale * x.signum() * x.abs().powf(q - 1.0)).collect())
}

/// Projection of `d` onto one block of the cylindrical norm. Without a
/// designated block, the block attaining the maximum is used (ties go to
/// the head).
pub fn functional_cylindrical(d: &[f64], split: usize, block: Option<CylinderBlock>) -> Result<Vec<f64>> {
    NormSpec::Cylindrical { split }.validate(d.len())?;
    let (head, tail) = d.split_at(split);
    let block = block.unwrap_or(if l2(head) >= l2(tail) {
        CylinderBlock::Head
    } else {
        CylinderBlock::Tail
    });
    let row: Vec<f64> = d
        .iter()
        .enumerate()
        .map(|(i, &x)| match block {
            CylinderBlock::Head if i < split => x,
            CylinderBlock::Tail if i >= split => x,
            _ => 0.0,
        })
        .collect();
    if row.iter().all(|&x| x == 0.0) {
        return Err(Error::Degenerate(format!(
            "active cylindrical block {block:?} of the bar vector is zero"
        )));
    }
    Ok(row)
}

/// Gradient of a norm at `d` by central differences with step `h`
/// (default `1e-5 max(1, |d|)`). One-sided differences must agree, which
/// rejects points where the norm has a kink.
pub fn functional_smooth_numeric(norm: &dyn Fn(&[f64]) -> f64, d: &[f64], h: Option<f64>) -> Result<Vec<f64>> {
    let scale = l2(d).max(1.0);
    if norm(d) == 0.0 {
        return Err(Error::Degenerate("bar endpoints coincide".into()));
    }
    let h = h.unwrap_or(DIFF_STEP * scale);
    let s = SMOOTHNESS_STEP * scale;
    let mut x = d.to_vec();
    let n0 = norm(d);
    let mut row = Vec::with_capacity(d.len());
    for i in 0..d.len() {
        let at = |x: &mut Vec<f64>, t: f64| {
            x[i] = d[i] + t;
            let v = norm(x);
            x[i] = d[i];
            v
        };
        let forward = (at(&mut x, s) - n0) / s;
        let backward = (n0 - at(&mut x, -s)) / s;
        if (forward - backward).abs() > SMOOTHNESS_TOL {
            return Err(Error::Degenerate(format!(
                "norm is not smooth at the bar vector (coordinate {i}: one-sided slopes {backward} and {forward})"
            )));
        }
        row.push((at(&mut x, h) - at(&mut x, -h)) / (2.0 * h));
    }
    Ok(row)
}

/// Bar vector `p_s - tau(m_e) p_r` of an edge.
pub fn bar_vector(tau: &Representation, placement: &Placement, source: usize, range: usize, gain: &GroupElement) -> Result<Vec<f64>> {
    let ps = placement.point(tau, source, &tau.group().zero())?;
    let pr = placement.point(tau, range, gain)?;
    Ok(ps.iter().zip(&pr).map(|(a, b)| a - b).collect())
}

/// The `1 x d` constraint map of an edge derived from the placement and
/// the norm.
pub fn derive_phi(
    tau: &Representation,
    placement: &Placement,
    norm: &NormSpec,
    source: usize,
    range: usize,
    gain: &GroupElement,
    block: Option<CylinderBlock>,
) -> Result<CMatrix> {
    placement.check(placement.seeds.len(), tau.dim())?;
    norm.validate(tau.dim())?;
    let d = bar_vector(tau, placement, source, range, gain)?;
    let row = norm.row(&d, block)?;
    Ok(CMatrix::from_fn(1, row.len(), |_, j| Complex64::new(row[j], 0.0)))
}

/// Identifier of the copy of vertex `v` at `gamma`. Free coordinates are
/// zig-zag encoded (0, 1, -1, 2, ... -> 0, 1, 2, 3, ...) and zero padded,
/// so the copy at the identity sorts first within its orbit.
pub fn covering_vertex_id(v: &str, gamma: &GroupElement) -> String {
    let zig = |m: i64| if m > 0 { 2 * m - 1 } else { -2 * m };
    let free: Vec<String> = gamma.free.iter().map(|&m| format!("{:06}", zig(m))).collect();
    let torsion: Vec<String> = gamma.torsion.iter().map(|t| format!("{t:03}")).collect();
    format!("{v}@{}|{}", free.join("."), torsion.join("."))
}

#[derive(Clone, Debug)]
pub struct CoverVertex {
    pub id: String,
    /// Index of the gain framework vertex.
    pub vertex: usize,
    pub gamma: GroupElement,
    pub point: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct CoverBar {
    /// Index of the gain framework edge.
    pub edge: usize,
    pub gamma: GroupElement,
    pub from: usize,
    pub to: usize,
    /// `phi_e o dtau(-gamma)`.
    pub row: CMatrix,
}

/// The part of the covering framework over a window: copies `(v, gamma)`
/// and bars `(s(e), gamma) -- (r(e), gamma + m_e)` whose far end is inside.
#[derive(Clone, Debug)]
pub struct CoveringFramework {
    pub group: AbelianGroup,
    pub radius: usize,
    pub dx: usize,
    pub vertices: Vec<CoverVertex>,
    pub bars: Vec<CoverBar>,
    /// For each standard generator, the action on vertex indices where the
    /// image stays inside the window.
    pub actions: Vec<Vec<Option<usize>>>,
}

pub fn build_covering(fw: &GainFramework, placement: Option<&Placement>, radius: usize) -> Result<CoveringFramework> {
    let group = fw.group().clone();
    if let Some(p) = placement {
        p.check(fw.vertices().len(), fw.dx())?;
    }
    let window = group.window(radius);
    let elems = window.elements();
    let nv = fw.vertices().len();
    let index = |v: usize, g: &GroupElement| window.index_of(g).map(|i| i * nv + v);

    let mut vertices = Vec::with_capacity(elems.len() * nv);
    for g in &elems {
        for (v, name) in fw.vertices().iter().enumerate() {
            let point = placement.map(|p| p.point(fw.tau(), v, g)).transpose()?;
            vertices.push(CoverVertex {
                id: covering_vertex_id(name, g),
                vertex: v,
                gamma: g.clone(),
                point,
            });
        }
    }

    let mut bars = Vec::new();
    for g in &elems {
        let back = fw.tau().dtau_unchecked(&group.neg(g));
        for (ei, e) in fw.edges().iter().enumerate() {
            let far = group.add_unchecked(g, &e.gain);
            let Some(to) = index(e.range, &far) else { continue };
            let from = index(e.source, g).unwrap();
            if let (Some(a), Some(b)) = (&vertices[from].point, &vertices[to].point) {
                if a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs())) {
                    return Err(Error::Degenerate(format!(
                        "bar {} -- {} has coincident endpoints",
                        vertices[from].id, vertices[to].id
                    )));
                }
            }
            bars.push(CoverBar {
                edge: ei,
                gamma: g.clone(),
                from,
                to,
                row: &e.phi * &back,
            });
        }
    }

    let actions = group
        .generators()
        .iter()
        .map(|gen| {
            vertices
                .iter()
                .map(|cv| index(cv.vertex, &group.add_unchecked(&cv.gamma, gen)))
                .collect()
        })
        .collect();

    Ok(CoveringFramework {
        group,
        radius,
        dx: fw.dx(),
        vertices,
        bars,
        actions,
    })
}

impl CoveringFramework {
    /// `{vertices: [{id, gamma, point}], bars: [{from, to}]}`.
    pub fn export_json(&self) -> serde_json::Value {
        let vertices: Vec<_> = self
            .vertices
            .iter()
            .map(|v| {
                json!({
                    "id": v.id,
                    "gamma": {"free": v.gamma.free, "torsion": v.gamma.torsion},
                    "point": v.point,
                })
            })
            .collect();
        let bars: Vec<_> = self
            .bars
            .iter()
            .map(|b| json!({"from": self.vertices[b.from].id, "to": self.vertices[b.to].id}))
            .collect();
        json!({"vertices": vertices, "bars": bars})
    }
}

/// Quotient of a finite piece of a covering framework by the group action.
///
/// Orbits are traced through the partial generator maps; each vertex gets
/// the group element carrying its orbit representative (the smallest id)
/// to it. Edge orbits become gain edges oriented from the smaller
/// representative; loops are oriented so the gain's free part is
/// lexicographically positive, or for pure torsion gains so that the gain
/// is the smaller of `m` and `-m`.
pub fn quotient_gain_framework(cover: &CoveringFramework, tau: &Representation, dy: usize) -> Result<GainFramework> {
    let group = &cover.group;
    if tau.group() != group {
        return Err(Error::structural("representation and covering use different groups"));
    }
    let n = cover.vertices.len();
    let gens = group.generators();
    if cover.actions.len() != gens.len() || cover.actions.iter().any(|a| a.len() != n) {
        return Err(Error::structural("one vertex map per generator is required"));
    }

    // orbit root and offset (root + offset = vertex) for every vertex
    let mut root: Vec<Option<usize>> = vec![None; n];
    let mut offset: Vec<GroupElement> = vec![group.zero(); n];
    let mut inverse: Vec<Vec<Option<usize>>> = vec![vec![None; n]; gens.len()];
    for (i, map) in cover.actions.iter().enumerate() {
        for (x, y) in map.iter().enumerate() {
            if let Some(y) = *y {
                if y >= n {
                    return Err(Error::structural(format!("vertex map {i} points outside the vertex list")));
                }
                inverse[i][y] = Some(x);
            }
        }
    }
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if root[start].is_some() {
            continue;
        }
        let o = orbits.len();
        root[start] = Some(o);
        let mut members = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for (i, gen) in gens.iter().enumerate() {
                let steps = [
                    (cover.actions[i][x], group.add_unchecked(&offset[x], gen)),
                    (inverse[i][x], group.sub(&offset[x], gen)?),
                ];
                for (next, off) in steps {
                    let Some(y) = next else { continue };
                    match root[y] {
                        None => {
                            root[y] = Some(o);
                            offset[y] = off;
                            members.push(y);
                            queue.push_back(y);
                        }
                        Some(_) if offset[y] != off => {
                            return Err(Error::Validation(format!(
                                "the action is not free: vertex {} is reached as both {} and {}",
                                cover.vertices[y].id, offset[y], off
                            )));
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        orbits.push(members);
    }
    if group.is_finite() {
        let order = group.torsion_order() as usize;
        if let Some(o) = orbits.iter().find(|o| o.len() != order) {
            return Err(Error::Validation(format!(
                "incomplete orbit of {}: {} of {order} copies present",
                cover.vertices[o[0]].id,
                o.len()
            )));
        }
    }

    // re-base every orbit at its smallest id
    let mut reps = Vec::with_capacity(orbits.len());
    for members in &orbits {
        let rep = *members
            .iter()
            .min_by(|&&a, &&b| cover.vertices[a].id.cmp(&cover.vertices[b].id))
            .unwrap();
        let base = offset[rep].clone();
        for &m in members {
            offset[m] = group.sub(&offset[m], &base)?;
        }
        reps.push(rep);
    }
    let mut order: Vec<usize> = (0..orbits.len()).collect();
    order.sort_by(|&a, &b| cover.vertices[reps[a]].id.cmp(&cover.vertices[reps[b]].id));
    let mut position = vec![0usize; orbits.len()];
    for (p, &o) in order.iter().enumerate() {
        position[o] = p;
    }
    let orbit_of = |x: usize| position[root[x].unwrap()];
    let names: Vec<String> = order.iter().map(|&o| cover.vertices[reps[o]].id.clone()).collect();

    let mut edges: BTreeMap<(usize, usize, GroupElement), CMatrix> = BTreeMap::new();
    for bar in &cover.bars {
        if bar.from >= n || bar.to >= n {
            return Err(Error::structural("bar endpoint outside the vertex list"));
        }
        let (a, b) = (orbit_of(bar.from), orbit_of(bar.to));
        let (ga, gb) = (&offset[bar.from], &offset[bar.to]);
        let gain = group.sub(gb, ga)?;
        let reverse = if a != b {
            a > b
        } else {
            if gain.is_zero() {
                return Err(Error::Validation(format!(
                    "bar {} -- {} joins a vertex to itself",
                    cover.vertices[bar.from].id, cover.vertices[bar.to].id
                )));
            }
            !loop_orientation_ok(group, &gain)
        };
        let key = if reverse {
            (b, a, group.neg(&gain))
        } else {
            (a, b, gain)
        };
        edges.entry(key).or_insert_with(|| {
            if reverse {
                -(&bar.row * tau.dtau_unchecked(gb))
            } else {
                &bar.row * tau.dtau_unchecked(ga)
            }
        });
    }

    let edges = edges
        .into_iter()
        .enumerate()
        .map(|(i, ((source, range, gain), phi))| GainEdge {
            id: format!("e{}", i + 1),
            source,
            range,
            gain,
            phi,
        })
        .collect();
    GainFramework::new(names, edges, tau.clone(), dy)
}

fn loop_orientation_ok(group: &AbelianGroup, gain: &GroupElement) -> bool {
    match gain.free.iter().find(|&&m| m != 0) {
        Some(&m) => m > 0,
        None => {
            let neg = group.neg(gain);
            gain.torsion <= neg.torsion
        }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct BarCheck {
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Evaluate every bar constraint on the velocities `u_(v, gamma) = f(gamma)_v`.
pub fn cross_validate_flex(cover: &CoveringFramework, f: &WindowedField, tol: f64) -> Result<BarCheck> {
    if f.window().group() != &cover.group {
        return Err(Error::structural("field and covering use different groups"));
    }
    let dx = cover.dx;
    let velocity = |x: usize| -> Result<CVector> {
        let cv = &cover.vertices[x];
        let value = f.get(&cv.gamma).ok_or_else(|| {
            Error::usage(format!("the field is not defined at {}", cv.gamma))
        })?;
        Ok(value.rows(cv.vertex * dx, dx).into_owned())
    };
    let mut residual: f64 = 0.0;
    for bar in &cover.bars {
        let r = &bar.row * (velocity(bar.from)? - velocity(bar.to)?);
        residual = residual.max(r.norm());
    }
    Ok(BarCheck {
        residual,
        tol,
        pass: residual <= tol,
    })
}

/// Largest deviation between constraint rows regenerated from the placed
/// covering and `phi_e o dtau(-gamma)` over every bar of the window.
pub fn symmetry_defect(
    fw: &GainFramework,
    placement: &Placement,
    norm: &NormSpec,
    blocks: &[Option<CylinderBlock>],
    radius: usize,
) -> Result<f64> {
    let cover = build_covering(fw, Some(placement), radius)?;
    let mut worst: f64 = 0.0;
    for bar in &cover.bars {
        let a = cover.vertices[bar.from].point.as_ref().unwrap();
        let b = cover.vertices[bar.to].point.as_ref().unwrap();
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let row = norm.row(&d, blocks.get(bar.edge).copied().flatten())?;
        let regenerated = CMatrix::from_fn(1, row.len(), |_, j| Complex64::new(row[j], 0.0));
        worst = worst.max((regenerated - &bar.row).norm());
    }
    Ok(worst)
}
