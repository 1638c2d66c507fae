use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::finite::{FiniteRotationGroup, GroupName, SNAP_TOLERANCE};
use super::rotation::{Rot2, Rot3, Rotation};
use crate::error::{Error, Result};

/// Second spiral constant of the super-Fibonacci construction (the real
/// root of x⁴ = x + 4).
const SUPER_FIB_PSI: f64 = 1.533_751_168_755_204_3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    /// Deterministic quasi-uniform set: super-Fibonacci spiral on the unit
    /// quaternions (3D) or a shifted equispaced circle (2D).
    LowDiscrepancy,
    /// All elements of a finite subgroup, in table order.
    Subgroup(GroupName),
    /// ZYZ Euler grid with `(alpha, beta, gamma)` resolutions; beta is spaced
    /// uniformly in `cos beta` so every cell carries equal Haar mass.
    EulerGrid([usize; 3]),
    /// Union of cosets `G·h_j` (left-closed) or double cosets `G·h_j·G`
    /// (closed under both left and right multiplication by `G`), with the
    /// representatives `h_j` drawn from the seed.
    Cosets { group: GroupName, reps: usize, two_sided: bool },
    /// Independent Haar-uniform draws.
    Uniform,
}

impl fmt::Display for SamplingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplingMethod::LowDiscrepancy => write!(f, "low_discrepancy"),
            SamplingMethod::Subgroup(g) => write!(f, "subgroup({g})"),
            SamplingMethod::EulerGrid([a, b, c]) => write!(f, "euler_grid({a}x{b}x{c})"),
            SamplingMethod::Cosets { group, reps, two_sided } => {
                write!(f, "{}cosets({group}, {reps})", if *two_sided { "double_" } else { "" })
            }
            SamplingMethod::Uniform => write!(f, "uniform"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dim: usize,
    pub method: SamplingMethod,
    pub seed: u64,
    pub m: usize,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}D {} m={} seed={}", self.dim, self.method, self.m, self.seed)
    }
}

#[derive(Debug)]
struct SetData {
    rotations: Vec<Rotation>,
    weights: Vec<f64>,
    provenance: Provenance,
}

/// An ordered finite set of rotations with quadrature weights.
///
/// Cheap to clone; the rotation list is shared.
#[derive(Clone, Debug)]
pub struct RotationSet(Arc<SetData>);

impl PartialEq for RotationSet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.provenance == other.0.provenance && self.0.rotations == other.0.rotations)
    }
}

impl RotationSet {
    /// Wraps an explicit list with uniform weights. Fails on duplicates.
    pub fn from_rotations(rotations: Vec<Rotation>, provenance: Provenance) -> Result<Self> {
        if rotations.is_empty() {
            return Err(Error::InvalidArgument("rotation set must be nonempty".into()));
        }
        let dim = rotations[0].dim();
        if rotations.iter().any(|r| r.dim() != dim) {
            return Err(Error::InvalidArgument("mixed-dimension rotation set".into()));
        }
        let m = rotations.len();
        Ok(RotationSet(Arc::new(SetData {
            weights: vec![1.0 / m as f64; m],
            rotations,
            provenance: Provenance { m, ..provenance },
        })))
    }

    pub fn subgroup(group: &FiniteRotationGroup) -> Self {
        let m = group.order();
        RotationSet(Arc::new(SetData {
            rotations: group.elements().to_vec(),
            weights: vec![1.0 / m as f64; m],
            provenance: Provenance { dim: group.dim(), method: SamplingMethod::Subgroup(group.name()), seed: 0, m },
        }))
    }

    /// Deterministic construction for `(dim, m, method, seed)`.
    pub fn sample(dim: usize, m: usize, method: &SamplingMethod, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("rotation count must be at least 1".into()));
        }
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidArgument(format!("dim must be 2 or 3, got {dim}")));
        }
        let prov = |method: SamplingMethod, m: usize| Provenance { dim, method, seed, m };
        let rotations: Vec<Rotation> = match method {
            SamplingMethod::Subgroup(name) => {
                let g = FiniteRotationGroup::new(*name)?;
                if g.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: g.dim() });
                }
                return Ok(Self::subgroup(&g));
            }
            SamplingMethod::LowDiscrepancy if m == 1 => vec![Rotation::identity(dim)],
            SamplingMethod::LowDiscrepancy if dim == 2 => {
                let offset = (seed as f64 * 0.618_033_988_749_894_9).fract();
                (0..m).map(|i| Rotation::D2(Rot2::new(TAU * (i as f64 + offset) / m as f64))).collect()
            }
            SamplingMethod::LowDiscrepancy => super_fibonacci(m, seed),
            SamplingMethod::EulerGrid(res) => {
                if dim == 2 {
                    return Err(Error::InvalidArgument("euler_grid is a 3D construction".into()));
                }
                euler_grid(*res)
            }
            SamplingMethod::Cosets { group, reps, two_sided } => {
                let g = FiniteRotationGroup::new(*group)?;
                if g.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: g.dim() });
                }
                coset_union(&g, *reps, *two_sided, seed)
            }
            SamplingMethod::Uniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..m).map(|_| Rotation::random(dim, &mut rng)).collect()
            }
        };
        let m = rotations.len();
        Self::from_rotations(rotations, prov(method.clone(), m))
    }

    pub fn low_discrepancy(dim: usize, m: usize, seed: u64) -> Result<Self> {
        Self::sample(dim, m, &SamplingMethod::LowDiscrepancy, seed)
    }

    /// Euler grid whose resolution reaches `m` exactly when a well-shaped
    /// factorization exists, otherwise the smallest well-shaped grid above `m`.
    pub fn euler_grid_with_count(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("rotation count must be at least 1".into()));
        }
        Self::sample(3, m, &SamplingMethod::EulerGrid(euler_resolution(m)), 0)
    }

    pub fn rotations(&self) -> &[Rotation] {
        &self.0.rotations
    }

    pub fn get(&self, i: usize) -> Rotation {
        self.0.rotations[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.0.weights
    }

    pub fn len(&self) -> usize {
        self.0.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.rotations.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.0.provenance.dim
    }

    pub fn provenance(&self) -> &Provenance {
        &self.0.provenance
    }

    /// Nearest member and its distance.
    pub fn nearest(&self, g: &Rotation) -> (usize, f64) {
        super::finite::nearest(&self.0.rotations, g)
    }

    /// Index permutation `i ↦ index(g ∘ r_i)` if the set is closed under
    /// left multiplication by `g`.
    pub fn left_permutation(&self, g: &Rotation) -> Option<Vec<usize>> {
        self.permutation(|r| g.compose(r))
    }

    /// Index permutation `i ↦ index(r_i ∘ g)` if the set is closed under
    /// right multiplication by `g`.
    pub fn right_permutation(&self, g: &Rotation) -> Option<Vec<usize>> {
        self.permutation(|r| r.compose(g))
    }

    fn permutation(&self, f: impl Fn(&Rotation) -> Rotation) -> Option<Vec<usize>> {
        self.0
            .rotations
            .iter()
            .map(|r| {
                let (k, d) = self.nearest(&f(r));
                (d <= SNAP_TOLERANCE).then_some(k)
            })
            .collect()
    }

    /// Largest distance from `probes` to their nearest member.
    pub fn covering_radius(&self, probes: &[Rotation]) -> f64 {
        probes.iter().map(|p| self.nearest(p).1).fold(0.0, f64::max)
    }
}

fn super_fibonacci(m: usize, seed: u64) -> Vec<Rotation> {
    let phi = 2f64.sqrt();
    let n = m as f64;
    // The seed shifts the spiral phase in both coordinate planes, which is an
    // isometry of S³ commuting with q ↦ −q: every seed gives a congruent set.
    let shift = seed as f64;
    (0..m)
        .map(|i| {
            let s = i as f64 + 0.5;
            let r = (s / n).sqrt();
            let big_r = (1.0 - s / n).sqrt();
            let alpha = TAU * (s + shift) / phi;
            let beta = TAU * (s + shift) / SUPER_FIB_PSI;
            Rotation::D3(Rot3::from_quaternion([
                r * alpha.sin(),
                r * alpha.cos(),
                big_r * beta.sin(),
                big_r * beta.cos(),
            ]))
        })
        .collect()
}

fn euler_grid([na, nb, ng]: [usize; 3]) -> Vec<Rotation> {
    let mut out = Vec::with_capacity(na * nb * ng);
    for i in 0..na {
        let alpha = TAU * (i as f64 + 0.5) / na as f64;
        for j in 0..nb {
            let beta = (1.0 - 2.0 * (j as f64 + 0.5) / nb as f64).acos();
            for k in 0..ng {
                let gamma = TAU * (k as f64 + 0.5) / ng as f64;
                out.push(Rotation::D3(Rot3::from_euler_zyz(alpha, beta, gamma)));
            }
        }
    }
    out
}

/// Largest angular step of an Euler grid.
fn euler_step([a, b, c]: [usize; 3]) -> f64 {
    (TAU / a as f64).max(PI / b as f64).max(TAU / c as f64)
}

/// Picks `(n_alpha, n_beta, n_gamma)` for a target count.
///
/// Among all factorizations with product exactly `m`, take the one with the
/// smallest largest step. If that step is more than 1.5x the step of the best
/// grid with product in `[m, 1.25 m]`, use that grid instead.
pub fn euler_resolution(m: usize) -> [usize; 3] {
    let ideal = (4.0 * m as f64).cbrt(); // alpha/gamma count when n_beta = n_alpha / 2
    let bound = (4.0 * ideal).ceil() as usize + 4;
    let mut best_exact: Option<([usize; 3], f64)> = None;
    let mut best_near: Option<([usize; 3], usize, f64)> = None;
    for a in 1..=bound {
        for b in 1..=bound {
            let c = m.div_ceil(a * b);
            if c > bound {
                continue;
            }
            let res = [a, b, c];
            let step = euler_step(res);
            let prod = a * b * c;
            if prod == m && best_exact.is_none_or(|(_, s)| step < s) {
                best_exact = Some((res, step));
            }
            if prod as f64 <= 1.25 * m as f64 && best_near.is_none_or(|(_, p, s)| step < s || (step == s && prod < p)) {
                best_near = Some((res, prod, step));
            }
        }
    }
    match (best_exact, best_near) {
        (Some((e, se)), Some((n, _, sn))) => {
            if se <= 1.5 * sn {
                e
            } else {
                n
            }
        }
        (Some((e, _)), None) => e,
        (None, Some((n, _, _))) => n,
        (None, None) => [m, 1, 1],
    }
}

fn coset_union(g: &FiniteRotationGroup, reps: usize, two_sided: bool, seed: u64) -> Vec<Rotation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Rotation> = g.elements().to_vec();
    for _ in 0..reps {
        let h = Rotation::random(g.dim(), &mut rng);
        let candidates: Vec<Rotation> = if two_sided {
            g.elements().iter().flat_map(|a| g.elements().iter().map(move |b| a.compose(&h).compose(b))).collect()
        } else {
            g.elements().iter().map(|a| a.compose(&h)).collect()
        };
        for c in candidates {
            if out.iter().all(|e| e.distance(&c) > SNAP_TOLERANCE) {
                out.push(c);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_rotation_is_identity() {
        for dim in [2, 3] {
            let s = RotationSet::low_discrepancy(dim, 1, 5).unwrap();
            assert_eq!(s.len(), 1);
            assert_eq!(s.get(0), Rotation::identity(dim));
            assert_eq!(s.weights(), &[1.0]);
        }
    }

    #[test]
    fn zero_count_rejected() {
        assert!(RotationSet::low_discrepancy(3, 0, 0).is_err());
        assert!(RotationSet::euler_grid_with_count(0).is_err());
    }

    #[test]
    fn subgroup_in_table_order() {
        let g = FiniteRotationGroup::parse("o24").unwrap();
        let s = RotationSet::sample(3, 24, &SamplingMethod::Subgroup(GroupName::Octahedral), 0).unwrap();
        assert_eq!(s.rotations(), g.elements());
    }

    #[test]
    fn reproducible_and_distinct() {
        let a = RotationSet::low_discrepancy(3, 384, 3).unwrap();
        let b = RotationSet::low_discrepancy(3, 384, 3).unwrap();
        for (x, y) in a.rotations().iter().zip(b.rotations()) {
            assert_eq!(x.as_rot3().unwrap().quaternion(), y.as_rot3().unwrap().quaternion());
        }
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                assert!(a.get(i).distance(&a.get(j)) > 1e-9);
            }
        }
        let total: f64 = a.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fine_grid_count() {
        let res = euler_resolution(26244);
        assert_eq!(res.iter().product::<usize>(), 26244);
        let s = RotationSet::euler_grid_with_count(26244).unwrap();
        assert_eq!(s.len(), 26244);
    }

    #[test]
    fn prime_count_rounds_up() {
        let res = euler_resolution(1009);
        let p: usize = res.iter().product();
        assert!(p >= 1009 && p as f64 <= 1.25 * 1009.0, "{res:?}");
    }

    #[test]
    fn double_cosets_are_two_sided_closed() {
        let s = RotationSet::sample(
            3,
            1,
            &SamplingMethod::Cosets { group: GroupName::Octahedral, reps: 1, two_sided: true },
            11,
        )
        .unwrap();
        assert_eq!(s.len(), 24 + 576);
        let g = FiniteRotationGroup::parse("o24").unwrap();
        for e in g.elements() {
            assert!(s.left_permutation(e).is_some());
            assert!(s.right_permutation(e).is_some());
        }
    }
}
