use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::{Matrix2, Matrix3, UnitQuaternion, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planar rotation by `theta` radians, kept in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Rot2 {
    theta: f64,
}

impl Rot2 {
    pub const IDENTITY: Rot2 = Rot2 { theta: 0.0 };

    pub fn new(theta: f64) -> Self {
        let mut t = theta.rem_euclid(TAU);
        if t >= TAU {
            t = 0.0;
        }
        Rot2 { theta: t }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn compose(&self, other: &Rot2) -> Rot2 {
        Rot2::new(self.theta + other.theta)
    }

    pub fn inverse(&self) -> Rot2 {
        if self.theta == 0.0 {
            *self
        } else {
            Rot2::new(TAU - self.theta)
        }
    }

    /// Rotation angle of `self⁻¹ ∘ other`, in `[0, π]`.
    pub fn distance(&self, other: &Rot2) -> f64 {
        let d = (other.theta - self.theta).rem_euclid(TAU);
        d.min(TAU - d)
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        let (s, c) = self.theta.sin_cos();
        Matrix2::new(c, -s, s, c)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Rot2::new(rng.gen::<f64>() * TAU)
    }
}

/// Spatial rotation stored as a unit quaternion `(w, x, y, z)`.
///
/// The double cover is resolved by keeping `w >= 0`; when `w == 0` the first
/// nonzero vector component is made positive. Two `Rot3` values that describe
/// the same rotation therefore carry the same four numbers (up to rounding).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Rot3 {
    q: [f64; 4],
}

impl Rot3 {
    pub const IDENTITY: Rot3 = Rot3 { q: [1.0, 0.0, 0.0, 0.0] };

    /// Builds a rotation from any nonzero quaternion, normalizing and
    /// canonicalizing it.
    pub fn from_quaternion(q: [f64; 4]) -> Self {
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(n > 0.0 && n.is_finite(), "quaternion must be nonzero and finite");
        let mut q = q.map(|v| v / n);
        let flip = if q[0] != 0.0 { q[0] < 0.0 } else { q[1..].iter().find(|v| **v != 0.0).is_some_and(|v| *v < 0.0) };
        if flip {
            q = q.map(|v| -v);
        }
        Rot3 { q }
    }

    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        assert!(n > 0.0, "rotation axis must be nonzero");
        let (s, c) = (0.5 * angle).sin_cos();
        Rot3::from_quaternion([c, s * axis[0] / n, s * axis[1] / n, s * axis[2] / n])
    }

    /// `Rz(alpha) · Ry(beta) · Rz(gamma)`.
    pub fn from_euler_zyz(alpha: f64, beta: f64, gamma: f64) -> Self {
        let z = [0.0, 0.0, 1.0];
        let y = [0.0, 1.0, 0.0];
        Rot3::from_axis_angle(z, alpha)
            .compose(&Rot3::from_axis_angle(y, beta))
            .compose(&Rot3::from_axis_angle(z, gamma))
    }

    /// ZYZ Euler angles with `alpha, gamma ∈ [0, 2π)` and `beta ∈ [0, π]`.
    /// At the poles (`beta ∈ {0, π}`) `gamma` is set to zero.
    pub fn to_euler_zyz(&self) -> (f64, f64, f64) {
        let [w, x, y, z] = self.q;
        // beta from the half-angle decomposition; stable at both poles
        let a = (w * w + z * z).sqrt();
        let b = (x * x + y * y).sqrt();
        let beta = 2.0 * b.atan2(a);
        let eps = 1e-12;
        let (alpha, gamma) = if b < eps {
            (2.0 * z.atan2(w), 0.0)
        } else if a < eps {
            (2.0 * (-x).atan2(y), 0.0)
        } else {
            let sum = z.atan2(w); // (alpha + gamma) / 2
            let diff = (-x).atan2(y); // (alpha - gamma) / 2
            (sum + diff, sum - diff)
        };
        (alpha.rem_euclid(TAU) % TAU, beta, gamma.rem_euclid(TAU) % TAU)
    }

    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let u = UnitQuaternion::from_matrix(m);
        Rot3::from_quaternion([u.w, u.i, u.j, u.k])
    }

    pub fn quaternion(&self) -> [f64; 4] {
        self.q
    }

    pub fn compose(&self, other: &Rot3) -> Rot3 {
        let [a0, a1, a2, a3] = self.q;
        let [b0, b1, b2, b3] = other.q;
        Rot3::from_quaternion([
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ])
    }

    pub fn inverse(&self) -> Rot3 {
        let [w, x, y, z] = self.q;
        Rot3::from_quaternion([w, -x, -y, -z])
    }

    /// Rotation angle of `self⁻¹ ∘ other`, in `[0, π]`.
    pub fn distance(&self, other: &Rot3) -> f64 {
        let [a0, a1, a2, a3] = self.q;
        let [b0, b1, b2, b3] = other.q;
        // components of conj(a) * b
        let w = a0 * b0 + a1 * b1 + a2 * b2 + a3 * b3;
        let x = a0 * b1 - a1 * b0 - a2 * b3 + a3 * b2;
        let y = a0 * b2 + a1 * b3 - a2 * b0 - a3 * b1;
        let z = a0 * b3 - a1 * b2 + a2 * b1 - a3 * b0;
        let v = (x * x + y * y + z * z).sqrt();
        (2.0 * v.atan2(w.abs())).min(PI)
    }

    pub fn angle(&self) -> f64 {
        Rot3::IDENTITY.distance(self)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        let [w, x, y, z] = self.q;
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let r = self.matrix() * Vector3::from(v);
        [r.x, r.y, r.z]
    }

    /// Haar-uniform sample (Shoemake's subgroup algorithm).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen::<f64>() * TAU;
        let u3: f64 = rng.gen::<f64>() * TAU;
        let a = (1.0 - u1).sqrt();
        let b = u1.sqrt();
        Rot3::from_quaternion([b * u3.cos(), a * u2.sin(), a * u2.cos(), b * u3.sin()])
    }
}

/// An element of SO(2) or SO(3).
///
/// Operations that combine two rotations panic when the dimensions differ;
/// that is a programming error rather than a data error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RotationRepr", into = "RotationRepr")]
pub enum Rotation {
    D2(Rot2),
    D3(Rot3),
}

impl Rotation {
    pub fn identity(dim: usize) -> Rotation {
        match dim {
            2 => Rotation::D2(Rot2::IDENTITY),
            3 => Rotation::D3(Rot3::IDENTITY),
            _ => panic!("rotations exist for dim 2 or 3, got {dim}"),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Rotation::D2(_) => 2,
            Rotation::D3(_) => 3,
        }
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        match (self, other) {
            (Rotation::D2(a), Rotation::D2(b)) => Rotation::D2(a.compose(b)),
            (Rotation::D3(a), Rotation::D3(b)) => Rotation::D3(a.compose(b)),
            _ => panic!("cannot compose a {}D and a {}D rotation", self.dim(), other.dim()),
        }
    }

    pub fn inverse(&self) -> Rotation {
        match self {
            Rotation::D2(a) => Rotation::D2(a.inverse()),
            Rotation::D3(a) => Rotation::D3(a.inverse()),
        }
    }

    pub fn distance(&self, other: &Rotation) -> f64 {
        match (self, other) {
            (Rotation::D2(a), Rotation::D2(b)) => a.distance(b),
            (Rotation::D3(a), Rotation::D3(b)) => a.distance(b),
            _ => panic!("cannot measure between a {}D and a {}D rotation", self.dim(), other.dim()),
        }
    }

    /// Row-major `dim × dim` rotation matrix.
    pub fn matrix(&self) -> Vec<f64> {
        match self {
            Rotation::D2(r) => {
                let m = r.matrix();
                vec![m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
            }
            Rotation::D3(r) => {
                let m = r.matrix();
                (0..3).flat_map(|i| (0..3).map(move |j| m[(i, j)])).collect()
            }
        }
    }

    pub fn as_rot2(&self) -> Result<Rot2> {
        match self {
            Rotation::D2(r) => Ok(*r),
            Rotation::D3(_) => Err(Error::DimensionMismatch { expected: 2, got: 3 }),
        }
    }

    pub fn as_rot3(&self) -> Result<Rot3> {
        match self {
            Rotation::D3(r) => Ok(*r),
            Rotation::D2(_) => Err(Error::DimensionMismatch { expected: 3, got: 2 }),
        }
    }

    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Rotation {
        match dim {
            2 => Rotation::D2(Rot2::random(rng)),
            3 => Rotation::D3(Rot3::random(rng)),
            _ => panic!("rotations exist for dim 2 or 3, got {dim}"),
        }
    }
}

impl From<Rot2> for Rotation {
    fn from(r: Rot2) -> Self {
        Rotation::D2(r)
    }
}

impl From<Rot3> for Rotation {
    fn from(r: Rot3) -> Self {
        Rotation::D3(r)
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rotation::D2(r) => write!(f, "Rot2({:.6})", r.theta),
            Rotation::D3(r) => {
                let [w, x, y, z] = r.q;
                write!(f, "Rot3([{w:.6}, {x:.6}, {y:.6}, {z:.6}])")
            }
        }
    }
}

/// Wire form: `{"q":[w,x,y,z]}` or `{"theta":t}`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RotationRepr {
    D3 { q: [f64; 4] },
    D2 { theta: f64 },
}

impl TryFrom<RotationRepr> for Rotation {
    type Error = String;

    fn try_from(r: RotationRepr) -> std::result::Result<Self, Self::Error> {
        match r {
            RotationRepr::D2 { theta } if theta.is_finite() => Ok(Rotation::D2(Rot2::new(theta))),
            RotationRepr::D3 { q } if q.iter().all(|v| v.is_finite()) && q.iter().any(|v| *v != 0.0) => {
                Ok(Rotation::D3(Rot3::from_quaternion(q)))
            }
            _ => Err("rotation must be finite and nonzero".into()),
        }
    }
}

impl From<Rotation> for RotationRepr {
    fn from(r: Rotation) -> Self {
        match r {
            Rotation::D2(r) => RotationRepr::D2 { theta: r.theta },
            Rotation::D3(r) => RotationRepr::D3 { q: r.q },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_abs(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
        (a - b).abs().max()
    }

    #[test]
    fn identity_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = Rot3::random(&mut rng);
        assert!(Rot3::IDENTITY.compose(&g).distance(&g) < 1e-12);
        let r = Rot2::new(1.3);
        assert_eq!(Rot2::IDENTITY.compose(&r), r);
    }

    #[test]
    fn planar_quarter_turns() {
        let q = Rot2::new(PI / 2.0);
        assert!((q.compose(&q).theta() - PI).abs() < 1e-15);
        assert_eq!(Rot2::IDENTITY.inverse(), Rot2::IDENTITY);
        let t = 0.7;
        assert!((Rot2::new(t).inverse().theta() - (TAU - t)).abs() < 1e-15);
        assert!((Rot2::IDENTITY.distance(&Rot2::new(PI / 3.0)) - PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn quaternion_product_matches_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let a = Rot3::random(&mut rng);
            let b = Rot3::random(&mut rng);
            let lhs = a.compose(&b).matrix();
            let rhs = a.matrix() * b.matrix();
            assert!(max_abs(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn inverse_is_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let g = Rot3::random(&mut rng);
            assert!(max_abs(&g.inverse().matrix(), &g.matrix().transpose()) < 1e-12);
            assert!(g.compose(&g.inverse()).distance(&Rot3::IDENTITY) < 1e-7);
        }
    }

    #[test]
    fn distance_matches_trace_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let a = Rot3::random(&mut rng);
            let b = Rot3::random(&mut rng);
            let m = a.inverse().compose(&b).matrix();
            let oracle = ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos();
            // arccos loses precision near 0 and π; compare there with a looser bound
            let tol = if oracle < 1e-3 || PI - oracle < 1e-3 { 1e-6 } else { 1e-10 };
            assert!((a.distance(&b) - oracle).abs() < tol);
        }
        let g = Rot3::random(&mut rng);
        assert_eq!(g.distance(&g), 0.0);
    }

    #[test]
    fn canonical_form_resolves_double_cover() {
        let q = [0.3, -0.5, 0.1, 0.8];
        let a = Rot3::from_quaternion(q);
        let b = Rot3::from_quaternion(q.map(|v| -v));
        assert_eq!(a, b);
        assert!(a.quaternion()[0] >= 0.0);
        let c = Rot3::from_quaternion([0.0, 0.0, -1.0, 0.0]);
        assert_eq!(c.quaternion(), [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn euler_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let g = Rot3::random(&mut rng);
            let (a, b, c) = g.to_euler_zyz();
            assert!((0.0..TAU).contains(&a) && (0.0..=PI).contains(&b) && (0.0..TAU).contains(&c));
            assert!(Rot3::from_euler_zyz(a, b, c).distance(&g) < 1e-9);
        }
        let pole = Rot3::from_euler_zyz(0.4, 0.0, 0.3);
        let (a, b, c) = pole.to_euler_zyz();
        assert!(b.abs() < 1e-12 && c == 0.0 && (a - 0.7).abs() < 1e-12);
        let south = Rot3::from_euler_zyz(0.4, PI, 0.3);
        let (a, b, c) = south.to_euler_zyz();
        assert!((b - PI).abs() < 1e-12 && c == 0.0);
        assert!(Rot3::from_euler_zyz(a, b, c).distance(&south) < 1e-9);
    }

    #[test]
    fn json_forms() {
        let r: Rotation = serde_json::from_str(r#"{"q":[-1,0,0,0]}"#).unwrap();
        assert_eq!(r, Rotation::D3(Rot3::IDENTITY));
        let t: Rotation = serde_json::from_str(r#"{"theta":7.0}"#).unwrap();
        assert!((t.as_rot2().unwrap().theta() - (7.0 - TAU)).abs() < 1e-15);
        let s = serde_json::to_string(&Rotation::D2(Rot2::new(1.0))).unwrap();
        assert_eq!(s, r#"{"theta":1.0}"#);
        assert!(serde_json::from_str::<Rotation>(r#"{"q":[0,0,0,0]}"#).is_err());
    }
}
