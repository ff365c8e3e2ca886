//! Finitely generated discrete abelian groups `Z^r x Z_n1 x ... x Z_nk`,
//! their characters and the box windows used as Folner sequences.
//!
//! Elements are stored in coordinates with respect to the standard
//! generators: the `r` free generators come first, then one generator per
//! torsion factor. Characters are parametrised by one angle per free factor
//! and one residue index per torsion factor.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angular tolerance under which two free-factor angles are the same.
pub const CHARACTER_ANGLE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbelianGroup {
    free_rank: usize,
    torsion: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    pub free: Vec<i64>,
    pub torsion: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Character {
    pub angles: Vec<f64>,
    pub torsion_indices: Vec<u32>,
}

/// The box `[-n, n]^r x (full torsion part)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    group: AbelianGroup,
    radius: usize,
}

/// Exact counts behind `|(g + H_n) \ H_n| / |H_n|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FolnerDefect {
    pub escaped: u128,
    pub total: u128,
}

impl FolnerDefect {
    pub fn value(&self) -> f64 {
        self.escaped as f64 / self.total as f64
    }
}

/// Reduce an angle to `[0, 2pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU || r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Distance between two angles on the circle, in `[0, pi]`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

impl AbelianGroup {
    pub fn new(free_rank: usize, torsion: Vec<u32>) -> Result<Self> {
        if free_rank + torsion.len() == 0 {
            return Err(Error::structural("group needs at least one factor"));
        }
        if let Some(n) = torsion.iter().find(|&&n| n < 2) {
            return Err(Error::structural(format!("torsion order {n} is below 2")));
        }
        Ok(Self { free_rank, torsion })
    }

    pub fn free_rank(&self) -> usize {
        self.free_rank
    }

    pub fn torsion(&self) -> &[u32] {
        &self.torsion
    }

    /// Number of standard generators, `r + k`.
    pub fn rank(&self) -> usize {
        self.free_rank + self.torsion.len()
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank == 0
    }

    /// Product of the torsion orders.
    pub fn torsion_order(&self) -> u64 {
        self.torsion.iter().map(|&n| n as u64).product()
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement {
            free: vec![0; self.free_rank],
            torsion: vec![0; self.torsion.len()],
        }
    }

    /// Build an element, reducing torsion coordinates.
    pub fn element(&self, free: &[i64], torsion: &[i64]) -> Result<GroupElement> {
        if free.len() != self.free_rank || torsion.len() != self.torsion.len() {
            return Err(Error::structural(format!(
                "element has shape ({}, {}), group expects ({}, {})",
                free.len(),
                torsion.len(),
                self.free_rank,
                self.torsion.len()
            )));
        }
        Ok(GroupElement {
            free: free.to_vec(),
            torsion: torsion
                .iter()
                .zip(&self.torsion)
                .map(|(&t, &n)| t.rem_euclid(n as i64) as u32)
                .collect(),
        })
    }

    /// The `i`-th standard generator (free generators first).
    pub fn generator(&self, i: usize) -> GroupElement {
        let mut g = self.zero();
        if i < self.free_rank {
            g.free[i] = 1;
        } else {
            g.torsion[i - self.free_rank] = 1;
        }
        g
    }

    pub fn generators(&self) -> Vec<GroupElement> {
        (0..self.rank()).map(|i| self.generator(i)).collect()
    }

    pub fn check(&self, g: &GroupElement) -> Result<()> {
        if g.free.len() != self.free_rank || g.torsion.len() != self.torsion.len() {
            return Err(Error::structural(format!(
                "element {g} does not belong to {self}"
            )));
        }
        if let Some((t, n)) = g
            .torsion
            .iter()
            .zip(&self.torsion)
            .find(|(&t, &n)| t >= n)
        {
            return Err(Error::structural(format!(
                "torsion coordinate {t} not reduced mod {n}"
            )));
        }
        Ok(())
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.add_unchecked(a, b))
    }

    pub(crate) fn add_unchecked(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement {
            free: a.free.iter().zip(&b.free).map(|(x, y)| x + y).collect(),
            torsion: a
                .torsion
                .iter()
                .zip(&b.torsion)
                .zip(&self.torsion)
                .map(|((x, y), n)| (x + y) % n)
                .collect(),
        }
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        GroupElement {
            free: a.free.iter().map(|x| -x).collect(),
            torsion: a
                .torsion
                .iter()
                .zip(&self.torsion)
                .map(|(x, n)| (n - x) % n)
                .collect(),
        }
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.add(a, &self.neg(b))
    }

    /// Coordinates with respect to the standard generators.
    pub fn exponents(&self, g: &GroupElement) -> Vec<i64> {
        g.free
            .iter()
            .copied()
            .chain(g.torsion.iter().map(|&t| t as i64))
            .collect()
    }

    pub fn trivial_character(&self) -> Character {
        Character {
            angles: vec![0.0; self.free_rank],
            torsion_indices: vec![0; self.torsion.len()],
        }
    }

    /// Build a character, normalising angles into `[0, 2pi)` and reducing
    /// torsion indices.
    pub fn character(&self, angles: &[f64], torsion_indices: &[i64]) -> Result<Character> {
        if angles.len() != self.free_rank || torsion_indices.len() != self.torsion.len() {
            return Err(Error::structural(format!(
                "character has shape ({}, {}), group expects ({}, {})",
                angles.len(),
                torsion_indices.len(),
                self.free_rank,
                self.torsion.len()
            )));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::structural("character angle is not finite"));
        }
        Ok(Character {
            angles: angles.iter().map(|&a| normalize_angle(a)).collect(),
            torsion_indices: torsion_indices
                .iter()
                .zip(&self.torsion)
                .map(|(&j, &n)| j.rem_euclid(n as i64) as u32)
                .collect(),
        })
    }

    pub fn check_character(&self, chi: &Character) -> Result<()> {
        if chi.angles.len() != self.free_rank || chi.torsion_indices.len() != self.torsion.len()
        {
            return Err(Error::structural(format!(
                "character {chi} does not belong to the dual of {self}"
            )));
        }
        if chi
            .torsion_indices
            .iter()
            .zip(&self.torsion)
            .any(|(&j, &n)| j >= n)
        {
            return Err(Error::structural(format!(
                "character {chi} has unreduced torsion index"
            )));
        }
        Ok(())
    }

    /// Phase `arg chi(g)` in radians (not reduced).
    pub(crate) fn phase(&self, chi: &Character, g: &GroupElement) -> f64 {
        let free: f64 = chi
            .angles
            .iter()
            .zip(&g.free)
            .map(|(a, &m)| a * m as f64)
            .sum();
        let torsion: f64 = chi
            .torsion_indices
            .iter()
            .zip(&g.torsion)
            .zip(&self.torsion)
            .map(|((&j, &t), &n)| {
                let r = (j as u64 * t as u64) % n as u64;
                TAU * r as f64 / n as f64
            })
            .sum();
        free + torsion
    }

    pub fn evaluate(&self, chi: &Character, g: &GroupElement) -> Result<Complex64> {
        self.check_character(chi)?;
        self.check(g)?;
        Ok(self.evaluate_unchecked(chi, g))
    }

    pub(crate) fn evaluate_unchecked(&self, chi: &Character, g: &GroupElement) -> Complex64 {
        Complex64::from_polar(1.0, self.phase(chi, g))
    }

    pub fn conjugate(&self, chi: &Character) -> Character {
        Character {
            angles: chi.angles.iter().map(|&a| normalize_angle(-a)).collect(),
            torsion_indices: chi
                .torsion_indices
                .iter()
                .zip(&self.torsion)
                .map(|(&j, &n)| (n - j) % n)
                .collect(),
        }
    }

    /// Pointwise product of two characters.
    pub fn multiply(&self, a: &Character, b: &Character) -> Character {
        Character {
            angles: a
                .angles
                .iter()
                .zip(&b.angles)
                .map(|(x, y)| normalize_angle(x + y))
                .collect(),
            torsion_indices: a
                .torsion_indices
                .iter()
                .zip(&b.torsion_indices)
                .zip(&self.torsion)
                .map(|((x, y), n)| (x + y) % n)
                .collect(),
        }
    }

    /// The character taking the given unit values on the standard
    /// generators. Torsion values must be roots of unity of the right order.
    pub fn character_from_generator_values(
        &self,
        values: &[Complex64],
        tol: f64,
    ) -> Result<Character> {
        if values.len() != self.rank() {
            return Err(Error::structural(format!(
                "{} generator values for a group of rank {}",
                values.len(),
                self.rank()
            )));
        }
        let angles: Vec<f64> = values[..self.free_rank]
            .iter()
            .map(|v| normalize_angle(v.arg()))
            .collect();
        let mut torsion_indices = Vec::with_capacity(self.torsion.len());
        for (v, &n) in values[self.free_rank..].iter().zip(&self.torsion) {
            let residual = (v.powu(n) - Complex64::new(1.0, 0.0)).norm();
            if residual > tol {
                return Err(Error::contract(format!(
                    "generator value {v} is not an order-{n} root of unity (residual {residual:.3e})"
                )));
            }
            let j = (normalize_angle(v.arg()) * n as f64 / TAU).round() as i64;
            torsion_indices.push(j.rem_euclid(n as i64) as u32);
        }
        Ok(Character {
            angles,
            torsion_indices,
        })
    }

    /// Largest circular distance between free angles; infinite when the
    /// torsion indices differ.
    pub fn character_distance(&self, a: &Character, b: &Character) -> f64 {
        if a.torsion_indices != b.torsion_indices {
            return f64::INFINITY;
        }
        a.angles
            .iter()
            .zip(&b.angles)
            .map(|(&x, &y)| circle_distance(x, y))
            .fold(0.0, f64::max)
    }

    pub fn characters_equal(&self, a: &Character, b: &Character) -> bool {
        self.character_distance(a, b) <= CHARACTER_ANGLE_TOL
    }

    /// Every torsion index combination, lexicographically.
    pub fn torsion_index_tuples(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new()];
        for &n in &self.torsion {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..n).map(move |j| {
                        let mut p = prefix.clone();
                        p.push(j);
                        p
                    })
                })
                .collect();
        }
        out
    }

    /// All characters of a finite group.
    pub fn finite_characters(&self) -> Result<Vec<Character>> {
        if !self.is_finite() {
            return Err(Error::usage(
                "the dual of a group with free factors is infinite",
            ));
        }
        Ok(self
            .torsion_index_tuples()
            .into_iter()
            .map(|torsion_indices| Character {
                angles: Vec::new(),
                torsion_indices,
            })
            .collect())
    }

    pub fn window(&self, radius: usize) -> Window {
        Window {
            group: self.clone(),
            radius,
        }
    }

    /// `|(g + H_n) \ H_n| / |H_n|` for the box window of radius `n`.
    pub fn folner_defect(&self, g: &GroupElement, n: usize) -> Result<FolnerDefect> {
        self.check(g)?;
        let side = 2 * n as u128 + 1;
        let total_free = side.pow(self.free_rank as u32);
        let kept: u128 = g
            .free
            .iter()
            .map(|&m| side.saturating_sub(m.unsigned_abs() as u128))
            .product();
        let torsion = self.torsion_order() as u128;
        Ok(FolnerDefect {
            escaped: (total_free - kept) * torsion,
            total: total_free * torsion,
        })
    }
}

impl GroupElement {
    /// `max_i |free_i|`, zero for pure torsion elements.
    pub fn free_sup_norm(&self) -> usize {
        self.free
            .iter()
            .map(|m| m.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.free.iter().all(|&m| m == 0) && self.torsion.iter().all(|&t| t == 0)
    }
}

impl Character {
    pub fn is_trivial(&self) -> bool {
        self.angles.iter().all(|&a| circle_distance(a, 0.0) <= CHARACTER_ANGLE_TOL)
            && self.torsion_indices.iter().all(|&j| j == 0)
    }
}

impl Window {
    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.group.free_rank as u32) * self.group.torsion_order() as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        g.free_sup_norm() <= self.radius
    }

    /// Position of `g` in the enumeration order, if inside.
    pub fn index_of(&self, g: &GroupElement) -> Option<usize> {
        if !self.contains(g) {
            return None;
        }
        let side = self.side();
        let mut idx = 0usize;
        for &m in &g.free {
            idx = idx * side + (m + self.radius as i64) as usize;
        }
        for (&t, &n) in g.torsion.iter().zip(&self.group.torsion) {
            idx = idx * n as usize + t as usize;
        }
        Some(idx)
    }

    /// Element at position `idx` of the enumeration order.
    pub fn element_at(&self, mut idx: usize) -> GroupElement {
        let mut torsion = vec![0u32; self.group.torsion.len()];
        for (slot, &n) in torsion.iter_mut().zip(&self.group.torsion).rev() {
            *slot = (idx % n as usize) as u32;
            idx /= n as usize;
        }
        let side = self.side();
        let mut free = vec![0i64; self.group.free_rank];
        for slot in free.iter_mut().rev() {
            *slot = (idx % side) as i64 - self.radius as i64;
            idx /= side;
        }
        GroupElement { free, torsion }
    }

    /// Elements in lexicographic order (free coordinates first).
    pub fn elements(&self) -> Vec<GroupElement> {
        (0..self.len()).map(|i| self.element_at(i)).collect()
    }
}

impl fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if self.free_rank == 1 {
            parts.push("Z".into());
        } else if self.free_rank > 1 {
            parts.push(format!("Z^{}", self.free_rank));
        }
        parts.extend(self.torsion.iter().map(|n| format!("Z_{n}")));
        write!(f, "{}", parts.join(" x "))
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?};{:?}", self.free, self.torsion)
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "chi(angles={:?}, torsion={:?})", self.angles, self.torsion_indices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn z_z2() -> AbelianGroup {
        AbelianGroup::new(1, vec![2]).unwrap()
    }

    #[test]
    fn add_reduces_torsion() {
        let g = z_z2();
        let a = g.element(&[1], &[0]).unwrap();
        let b = g.element(&[1], &[1]).unwrap();
        assert_eq!(g.add(&a, &b).unwrap(), g.element(&[2], &[1]).unwrap());
        assert_eq!(g.add(&a, &g.zero()).unwrap(), a);

        let h = AbelianGroup::new(0, vec![2, 3]).unwrap();
        let c = h.element(&[], &[1, 2]).unwrap();
        assert_eq!(h.add(&c, &c).unwrap(), h.element(&[], &[0, 1]).unwrap());
    }

    #[test]
    fn add_rejects_foreign_elements() {
        let g = z_z2();
        let h = AbelianGroup::new(0, vec![2, 3]).unwrap();
        let a = g.element(&[1], &[0]).unwrap();
        let b = h.element(&[], &[1, 1]).unwrap();
        assert!(matches!(g.add(&a, &b), Err(Error::Structural(_))));
    }

    #[test]
    fn rejects_degenerate_groups() {
        assert!(AbelianGroup::new(0, vec![]).is_err());
        assert!(AbelianGroup::new(1, vec![1]).is_err());
    }

    #[test]
    fn character_table_values() {
        let h = AbelianGroup::new(0, vec![2, 3]).unwrap();
        let chi = h.character(&[], &[1, 0]).unwrap();
        let v = h.evaluate(&chi, &h.element(&[], &[1, 2]).unwrap()).unwrap();
        assert!((v - Complex64::new(-1.0, 0.0)).norm() < 1e-12);

        let g = z_z2();
        let triv = g.trivial_character();
        let v = g.evaluate(&triv, &g.element(&[-7], &[1]).unwrap()).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);

        // omega = e^{i pi/3}, iota = -1 at (3, 1): e^{i pi} * (-1) = 1
        let chi = g.character(&[PI / 3.0], &[1]).unwrap();
        let v = g.evaluate(&chi, &g.element(&[3], &[1]).unwrap()).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn windows_enumerate_boxes() {
        let h = AbelianGroup::new(0, vec![2, 3]).unwrap();
        assert_eq!(h.window(0).elements().len(), 6);
        assert_eq!(h.window(5).elements().len(), 6);
        let g = z_z2();
        let w = g.window(1).elements();
        assert_eq!(w.len(), 6);
        assert_eq!(w[0], g.element(&[-1], &[0]).unwrap());
        assert_eq!(w[5], g.element(&[1], &[1]).unwrap());
        let z2 = AbelianGroup::new(2, vec![]).unwrap();
        assert_eq!(z2.window(2).len(), 25);
    }

    #[test]
    fn folner_defect_counts() {
        let z = AbelianGroup::new(1, vec![]).unwrap();
        let d = z.folner_defect(&z.element(&[1], &[]).unwrap(), 10).unwrap();
        assert_eq!((d.escaped, d.total), (1, 21));
        let d = z.folner_defect(&z.element(&[3], &[]).unwrap(), 10).unwrap();
        assert_eq!((d.escaped, d.total), (3, 21));
        let d = z.folner_defect(&z.zero(), 4).unwrap();
        assert_eq!(d.escaped, 0);
    }

    #[test]
    fn generator_values_round_trip() {
        let g = AbelianGroup::new(1, vec![2, 3]).unwrap();
        let chi = g.character(&[1.25], &[1, 2]).unwrap();
        let values: Vec<Complex64> = g
            .generators()
            .iter()
            .map(|x| g.evaluate(&chi, x).unwrap())
            .collect();
        let back = g.character_from_generator_values(&values, 1e-8).unwrap();
        assert!(g.characters_equal(&chi, &back));
        let bad = vec![values[0], Complex64::new(0.0, 1.0), values[2]];
        assert!(matches!(
            g.character_from_generator_values(&bad, 1e-8),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn character_equality_wraps_around() {
        let g = AbelianGroup::new(1, vec![]).unwrap();
        let a = g.character(&[TAU - 1e-11], &[]).unwrap();
        let b = g.character(&[0.0], &[]).unwrap();
        assert!(g.characters_equal(&a, &b));
        let c = g.character(&[1e-6], &[]).unwrap();
        assert!(!g.characters_equal(&c, &b));
    }

    fn group_strategy() -> impl Strategy<Value = AbelianGroup> {
        (0usize..3, prop::collection::vec(2u32..6, 0..3))
            .prop_filter("nonempty", |(r, t)| r + t.len() > 0)
            .prop_map(|(r, t)| AbelianGroup::new(r, t).unwrap())
    }

    fn element_in(g: &AbelianGroup) -> impl Strategy<Value = GroupElement> {
        let g = g.clone();
        (
            prop::collection::vec(-6i64..=6, g.free_rank()),
            prop::collection::vec(0i64..100, g.torsion().len()),
        )
            .prop_map(move |(f, t)| g.element(&f, &t).unwrap())
    }

    fn character_in(g: &AbelianGroup) -> impl Strategy<Value = Character> {
        let g = g.clone();
        (
            prop::collection::vec(0.0f64..TAU, g.free_rank()),
            prop::collection::vec(0i64..100, g.torsion().len()),
        )
            .prop_map(move |(a, t)| g.character(&a, &t).unwrap())
    }

    proptest! {
        #[test]
        fn characters_are_unimodular_and_multiplicative(
            (g, chi, a, b) in group_strategy().prop_flat_map(|g| {
                (Just(g.clone()), character_in(&g), element_in(&g), element_in(&g))
            })
        ) {
            let va = g.evaluate(&chi, &a).unwrap();
            let vb = g.evaluate(&chi, &b).unwrap();
            let vab = g.evaluate(&chi, &g.add(&a, &b).unwrap()).unwrap();
            prop_assert!((va.norm() - 1.0).abs() < 1e-12);
            prop_assert!((vab - va * vb).norm() < 1e-12);
        }

        #[test]
        fn windows_nest_and_index_consistently(
            (g, x) in group_strategy().prop_flat_map(|g| (Just(g.clone()), element_in(&g))),
            n in 0usize..6,
        ) {
            let w = g.window(n);
            let next = g.window(n + 1);
            let elems = w.elements();
            prop_assert_eq!(elems.len(), w.len());
            for (i, e) in elems.iter().enumerate() {
                prop_assert_eq!(w.index_of(e), Some(i));
                prop_assert!(next.contains(e));
            }
            // exhaustion: every element lies in the window of its own sup norm
            prop_assert!(g.window(x.free_sup_norm()).contains(&x));
        }

        #[test]
        fn folner_defect_bounded_and_monotone(
            (g, x) in group_strategy().prop_flat_map(|g| (Just(g.clone()), element_in(&g))),
        ) {
            let l1: u64 = x.free.iter().map(|m| m.unsigned_abs()).sum();
            let mut prev = f64::INFINITY;
            for n in 0..=50usize {
                let d = g.folner_defect(&x, n).unwrap().value();
                prop_assert!(d <= l1 as f64 / (2 * n + 1) as f64 + 1e-15);
                if n >= x.free_sup_norm() {
                    prop_assert!(d <= prev + 1e-15);
                    prev = d;
                }
            }
        }
    }

    #[test]
    fn window_sizes_match_formula() {
        let g = AbelianGroup::new(2, vec![3]).unwrap();
        for n in 0..=20 {
            assert_eq!(g.window(n).len(), (2 * n + 1).pow(2) * 3);
        }
    }
}
