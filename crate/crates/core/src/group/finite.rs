use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::rotation::{Rot2, Rot3, Rotation};
use crate::error::{Error, Result};

/// Snap tolerance for closure checks.
pub const SNAP_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupName {
    /// Planar cyclic group of order n.
    Cyclic(usize),
    /// The 24 rotations of the cube.
    Octahedral,
    /// The 60 rotations of the icosahedron.
    Icosahedral,
}

impl GroupName {
    pub fn dim(&self) -> usize {
        match self {
            GroupName::Cyclic(_) => 2,
            _ => 3,
        }
    }

    /// Parses `"c4"`, `"c90"`, `"o24"`, `"i60"`.
    pub fn parse(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "o24" | "octahedral" => Ok(GroupName::Octahedral),
            "i60" | "icosahedral" => Ok(GroupName::Icosahedral),
            _ => lower
                .strip_prefix('c')
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|n| *n >= 1)
                .map(GroupName::Cyclic)
                .ok_or_else(|| Error::UnsupportedGroup(s.to_string())),
        }
    }
}

impl fmt::Display for GroupName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupName::Cyclic(n) => write!(f, "c{n}"),
            GroupName::Octahedral => write!(f, "o24"),
            GroupName::Icosahedral => write!(f, "i60"),
        }
    }
}

impl Serialize for GroupName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GroupName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        GroupName::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug)]
struct GroupData {
    name: GroupName,
    elements: Vec<Rotation>,
    identity: usize,
    table: Vec<usize>,
    inverses: Vec<usize>,
}

/// A finite rotation group with its multiplication table.
///
/// Cheap to clone; element data is shared.
#[derive(Clone, Debug)]
pub struct FiniteRotationGroup(Arc<GroupData>);

impl PartialEq for FiniteRotationGroup {
    fn eq(&self, other: &Self) -> bool {
        self.0.name == other.0.name
    }
}

impl FiniteRotationGroup {
    pub fn new(name: GroupName) -> Result<Self> {
        let elements: Vec<Rotation> = match name {
            GroupName::Cyclic(0) => return Err(Error::InvalidArgument("cyclic group order must be at least 1".into())),
            GroupName::Cyclic(n) => {
                (0..n).map(|i| Rotation::D2(Rot2::new(std::f64::consts::TAU * i as f64 / n as f64))).collect()
            }
            GroupName::Octahedral => dedup_quaternions(octahedral_quaternions()),
            GroupName::Icosahedral => dedup_quaternions(icosahedral_quaternions()),
        };
        let m = elements.len();
        let mut table = vec![0; m * m];
        for (i, a) in elements.iter().enumerate() {
            for (j, b) in elements.iter().enumerate() {
                let (k, d) = nearest(&elements, &a.compose(b));
                if d > SNAP_TOLERANCE {
                    return Err(Error::InvalidArgument(format!(
                        "{name} is not closed: product snaps at distance {d:e}"
                    )));
                }
                table[i * m + j] = k;
            }
        }
        let identity = nearest(&elements, &Rotation::identity(name.dim())).0;
        let inverses = (0..m)
            .map(|i| (0..m).find(|&j| table[i * m + j] == identity).expect("every element has an inverse"))
            .collect();
        Ok(FiniteRotationGroup(Arc::new(GroupData { name, elements, identity, table, inverses })))
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::new(GroupName::parse(name)?)
    }

    pub fn name(&self) -> GroupName {
        self.0.name
    }

    pub fn dim(&self) -> usize {
        self.0.name.dim()
    }

    pub fn order(&self) -> usize {
        self.0.elements.len()
    }

    pub fn elements(&self) -> &[Rotation] {
        &self.0.elements
    }

    pub fn element(&self, i: usize) -> Rotation {
        self.0.elements[i]
    }

    pub fn identity_index(&self) -> usize {
        self.0.identity
    }

    /// Index of `elements[i] ∘ elements[j]`.
    pub fn product(&self, i: usize, j: usize) -> usize {
        self.0.table[i * self.order() + j]
    }

    pub fn inverse_index(&self, i: usize) -> usize {
        self.0.inverses[i]
    }

    /// Index of the element within snap tolerance of `g`.
    pub fn index_of(&self, g: &Rotation) -> Result<usize> {
        if g.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: g.dim() });
        }
        let (k, d) = nearest(&self.0.elements, g);
        if d <= SNAP_TOLERANCE {
            Ok(k)
        } else {
            Err(Error::NotAGroupElement(self.0.name.to_string()))
        }
    }

    /// Nearest element and its geodesic distance.
    pub fn snap(&self, g: &Rotation) -> (usize, f64) {
        nearest(&self.0.elements, g)
    }
}

pub(crate) fn nearest(set: &[Rotation], g: &Rotation) -> (usize, f64) {
    set.iter().enumerate().map(|(i, h)| (i, h.distance(g))).fold((0, f64::INFINITY), |best, cur| {
        if cur.1 < best.1 {
            cur
        } else {
            best
        }
    })
}

fn dedup_quaternions(qs: Vec<[f64; 4]>) -> Vec<Rotation> {
    let mut out: Vec<Rotation> = Vec::new();
    for q in qs {
        let r = Rotation::D3(Rot3::from_quaternion(q));
        if out.iter().all(|e| e.distance(&r) > SNAP_TOLERANCE) {
            out.push(r);
        }
    }
    out
}

/// Binary octahedral group (48 unit quaternions, 24 rotations).
fn octahedral_quaternions() -> Vec<[f64; 4]> {
    let mut qs = Vec::new();
    for k in 0..4 {
        for s in [1.0, -1.0] {
            let mut q = [0.0; 4];
            q[k] = s;
            qs.push(q);
        }
    }
    for bits in 0..16u32 {
        qs.push(std::array::from_fn(|k| if bits >> k & 1 == 0 { 0.5 } else { -0.5 }));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for a in 0..4 {
        for b in a + 1..4 {
            for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut q = [0.0; 4];
                q[a] = sa * h;
                q[b] = sb * h;
                qs.push(q);
            }
        }
    }
    qs
}

/// Binary icosahedral group (the 120 unit icosians, 60 rotations).
fn icosahedral_quaternions() -> Vec<[f64; 4]> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut qs = Vec::new();
    for k in 0..4 {
        for s in [1.0, -1.0] {
            let mut q = [0.0; 4];
            q[k] = s;
            qs.push(q);
        }
    }
    for bits in 0..16u32 {
        qs.push(std::array::from_fn(|k| if bits >> k & 1 == 0 { 0.5 } else { -0.5 }));
    }
    // even permutations of (0, ±1, ±1/φ, ±φ) / 2
    let base = [0.0, 1.0, 1.0 / phi, phi];
    let even_perms: [[usize; 4]; 12] = [
        [0, 1, 2, 3],
        [0, 2, 3, 1],
        [0, 3, 1, 2],
        [1, 0, 3, 2],
        [1, 2, 0, 3],
        [1, 3, 2, 0],
        [2, 0, 1, 3],
        [2, 1, 3, 0],
        [2, 3, 0, 1],
        [3, 0, 2, 1],
        [3, 1, 0, 2],
        [3, 2, 1, 0],
    ];
    for p in even_perms {
        for bits in 0..8u32 {
            let signs = [
                1.0,
                if bits & 1 == 0 { 1.0 } else { -1.0 },
                if bits & 2 == 0 { 1.0 } else { -1.0 },
                if bits & 4 == 0 { 1.0 } else { -1.0 },
            ];
            let mut q = [0.0; 4];
            for (slot, &src) in p.iter().enumerate() {
                q[slot] = 0.5 * base[src] * signs[src];
            }
            qs.push(q);
        }
    }
    qs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_group(g: &FiniteRotationGroup) {
        let m = g.order();
        let e = g.identity_index();
        for i in 0..m {
            assert_eq!(g.product(e, i), i);
            assert_eq!(g.product(i, e), i);
            assert_eq!(g.product(i, g.inverse_index(i)), e);
            // closure snap distance recomputed independently
            for j in 0..m {
                let prod = g.element(i).compose(&g.element(j));
                assert!(prod.distance(&g.element(g.product(i, j))) < SNAP_TOLERANCE);
            }
        }
        for a in 0..m.min(12) {
            for b in 0..m {
                for c in 0..m.min(12) {
                    assert_eq!(g.product(g.product(a, b), c), g.product(a, g.product(b, c)));
                }
            }
        }
    }

    #[test]
    fn orders() {
        assert_eq!(FiniteRotationGroup::parse("o24").unwrap().order(), 24);
        assert_eq!(FiniteRotationGroup::parse("i60").unwrap().order(), 60);
        assert_eq!(FiniteRotationGroup::parse("c90").unwrap().order(), 90);
        let c1 = FiniteRotationGroup::parse("c1").unwrap();
        assert_eq!(c1.order(), 1);
        assert_eq!(c1.element(0), Rotation::identity(2));
    }

    #[test]
    fn closure_and_inverses() {
        for name in ["c4", "c90", "o24", "i60"] {
            check_group(&FiniteRotationGroup::parse(name).unwrap());
        }
    }

    #[test]
    fn identity_comes_first() {
        for name in ["c4", "o24", "i60"] {
            assert_eq!(FiniteRotationGroup::parse(name).unwrap().identity_index(), 0);
        }
    }

    #[test]
    fn octahedral_elements_are_signed_permutations() {
        let g = FiniteRotationGroup::parse("o24").unwrap();
        for r in g.elements() {
            for v in r.matrix() {
                assert!((v - v.round()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bad_names() {
        assert!(matches!(GroupName::parse("d6"), Err(Error::UnsupportedGroup(_))));
        assert!(GroupName::parse("c0").is_err());
        assert!(FiniteRotationGroup::new(GroupName::Cyclic(0)).is_err());
    }

    #[test]
    fn deterministic_order() {
        let a = FiniteRotationGroup::parse("i60").unwrap();
        let b = FiniteRotationGroup::parse("i60").unwrap();
        assert_eq!(a.elements(), b.elements());
    }
}
