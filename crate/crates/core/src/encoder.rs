//! Fixed trivial-to-trivial encoders that commute with grid rotations by
//! construction: every kernel here depends only on the offset length.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoder {
    Identity,
    /// Gaussian of width σ cells, truncated at 3σ and normalized to sum 1.
    #[serde(rename = "blur")]
    IsotropicBlur(f64),
    /// Unweighted sum over the ball of the given radius in cells.
    #[serde(rename = "density")]
    LocalDensity(f64),
    /// Selects one input channel.
    Channel(usize),
    /// Applied left to right.
    Compose(Vec<Encoder>),
}

impl Encoder {
    pub fn encode(&self, f: &ScalarField) -> Result<ScalarField> {
        match self {
            Encoder::Identity => Ok(f.clone()),
            Encoder::IsotropicBlur(sigma) => {
                if !(*sigma > 0.0) {
                    return Err(Error::InvalidArgument(format!("blur width must be positive, got {sigma}")));
                }
                Ok(ball_filter(f, &blur_kernel(f.dim(), *sigma)))
            }
            Encoder::LocalDensity(r) => {
                if !(*r >= 0.0) {
                    return Err(Error::InvalidArgument(format!("density radius must be non-negative, got {r}")));
                }
                let taps: Vec<_> = ball(f.dim(), *r).into_iter().map(|d| (d, 1.0)).collect();
                Ok(ball_filter(f, &taps))
            }
            Encoder::Channel(c) => f.channel(*c),
            Encoder::Compose(parts) => parts.iter().try_fold(f.clone(), |acc, e| e.encode(&acc)),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Integer offsets with `|d| ≤ r`, in the field's own axes.
fn ball(dim: usize, r: f64) -> Vec<Vec<isize>> {
    let k = r.floor() as isize;
    let mut out = Vec::new();
    let r2 = r * r + 1e-9;
    let range = -k..=k;
    if dim == 2 {
        for a in range.clone() {
            for b in range.clone() {
                if (a * a + b * b) as f64 <= r2 {
                    out.push(vec![a, b]);
                }
            }
        }
    } else {
        for a in range.clone() {
            for b in range.clone() {
                for c in range.clone() {
                    if (a * a + b * b + c * c) as f64 <= r2 {
                        out.push(vec![a, b, c]);
                    }
                }
            }
        }
    }
    out
}

pub(crate) fn blur_kernel(dim: usize, sigma: f64) -> Vec<(Vec<isize>, f64)> {
    let taps: Vec<(Vec<isize>, f64)> = ball(dim, 3.0 * sigma)
        .into_iter()
        .map(|d| {
            let r2 = d.iter().map(|v| (v * v) as f64).sum::<f64>();
            let w = (-r2 / (2.0 * sigma * sigma)).exp();
            (d, w)
        })
        .collect();
    let total: f64 = taps.iter().map(|t| t.1).sum();
    taps.into_iter().map(|(d, w)| (d, w / total)).collect()
}

/// `out(x) = Σ_d w_d f(x + d)` with zeros outside; per channel.
fn ball_filter(f: &ScalarField, taps: &[(Vec<isize>, f64)]) -> ScalarField {
    let shape = f.shape().to_vec();
    let c = f.channels();
    let src = f.data();
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(c).enumerate().for_each(|(flat, dst)| {
        let cell = f.cell_of(flat);
        for (d, w) in taps {
            let mut idx = 0usize;
            let mut inside = true;
            for ((&x, &o), &s) in cell.iter().zip(d).zip(&shape) {
                let y = x as isize + o;
                if y < 0 || y as usize >= s {
                    inside = false;
                    break;
                }
                idx = idx * s + y as usize;
            }
            if inside {
                for (o, v) in dst.iter_mut().zip(&src[idx * c..(idx + 1) * c]) {
                    *o += w * v;
                }
            }
        }
    });
    f.with_data(c, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{rotate_field, RotateMode};
    use crate::group::{FiniteRotationGroup, GroupName};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn occupancy(shape: &[usize], seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n: usize = shape.iter().product();
        let origin = vec![0.0; shape.len()];
        let data = (0..n).map(|_| if rng.gen_bool(0.3) { 1.0 } else { 0.0 }).collect();
        ScalarField::new(shape, 1.0, &origin, 1, data).unwrap()
    }

    #[test]
    fn density_matches_neighbourhood_sum() {
        let f = occupancy(&[7, 8, 9], 1);
        let d = Encoder::LocalDensity(2.0).encode(&f).unwrap();
        for flat in 0..f.cell_count() {
            let x = f.cell_of(flat);
            let mut want = 0.0;
            for y in 0..f.cell_count() {
                let c = f.cell_of(y);
                let r2: i64 = x.iter().zip(&c).map(|(&a, &b)| (a as i64 - b as i64).pow(2)).sum();
                if r2 <= 4 {
                    want += f.data()[y];
                }
            }
            assert!((d.data()[flat] - want).abs() < 1e-9);
        }
    }

    #[test]
    fn blur_weights_depend_on_radius_only() {
        for dim in [2, 3] {
            let k = blur_kernel(dim, 1.3);
            let total: f64 = k.iter().map(|t| t.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
            for (d, w) in &k {
                let r2: isize = d.iter().map(|v| v * v).sum();
                for (e, v) in &k {
                    if e.iter().map(|v| v * v).sum::<isize>() == r2 {
                        assert!((w - v).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn exact_equivariance_on_the_cube_group() {
        let f = occupancy(&[7, 7, 7], 2);
        let enc = Encoder::Compose(vec![Encoder::IsotropicBlur(1.0), Encoder::LocalDensity(1.5)]);
        let o24 = FiniteRotationGroup::new(GroupName::Octahedral).unwrap();
        for g in o24.elements() {
            let a = enc.encode(&rotate_field(&f, g, RotateMode::ExactSubgroup).unwrap()).unwrap();
            let b = rotate_field(&enc.encode(&f).unwrap(), g, RotateMode::ExactSubgroup).unwrap();
            assert!(a.distance(&b) <= 1e-12 * f.norm());
        }
    }

    #[test]
    fn json_forms() {
        let e = Encoder::from_json_str(r#"{"compose":[{"blur":1.0},{"density":2}]}"#).unwrap();
        assert_eq!(e, Encoder::Compose(vec![Encoder::IsotropicBlur(1.0), Encoder::LocalDensity(2.0)]));
        assert_eq!(Encoder::from_json_str(r#""identity""#).unwrap(), Encoder::Identity);
        assert_eq!(serde_json::to_string(&Encoder::Channel(1)).unwrap(), r#"{"channel":1}"#);
    }
}
