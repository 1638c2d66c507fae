use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::group::{Rot3, Rotation, RotationSet};
use crate::rep::wigner::{wigner_blocks, MAX_WIGNER_ORDER};

use super::so3_coeff_count;

/// Tikhonov weight of the least-squares fit.
pub const RIDGE: f64 = 1e-10;

/// Largest design-matrix condition number accepted by the analysis.
pub const MAX_CONDITION: f64 = 1e8;

/// Band-limited SO(3) coefficients: one `(2ℓ+1)²` block per order.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierCoeffs3 {
    pub blocks: Vec<DMatrix<f64>>,
}

impl FourierCoeffs3 {
    pub fn zeros(lmax: usize) -> Self {
        FourierCoeffs3 { blocks: (0..=lmax).map(|l| DMatrix::zeros(2 * l + 1, 2 * l + 1)).collect() }
    }

    pub fn lmax(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(so3_coeff_count(self.lmax()));
        for b in &self.blocks {
            for i in 0..b.nrows() {
                for j in 0..b.ncols() {
                    v.push(b[(i, j)]);
                }
            }
        }
        v
    }

    pub fn from_slice(lmax: usize, v: &[f64]) -> Self {
        let mut at = 0;
        let blocks = (0..=lmax)
            .map(|l| {
                let n = 2 * l + 1;
                let b = DMatrix::from_row_slice(n, n, &v[at..at + n * n]);
                at += n * n;
                b
            })
            .collect();
        FourierCoeffs3 { blocks }
    }

    /// `Σ_ℓ tr(f̂^ℓ D^ℓ(g))`.
    pub fn evaluate(&self, g: &Rot3) -> f64 {
        wigner_blocks(self.lmax(), g).iter().zip(&self.blocks).map(|(d, f)| f.component_mul(&d.transpose()).sum()).sum()
    }

    /// Coefficients of `h ↦ f(g⁻¹ h)`: `f̂^ℓ ↦ f̂^ℓ D^ℓ(g)ᵀ`.
    pub fn act_left(&self, g: &Rot3) -> Self {
        let d = wigner_blocks(self.lmax(), g);
        FourierCoeffs3 { blocks: self.blocks.iter().zip(&d).map(|(f, d)| f * d.transpose()).collect() }
    }

    /// Coefficients of `h ↦ f(h g⁻¹)`: `f̂^ℓ ↦ D^ℓ(g⁻¹) f̂^ℓ`.
    pub fn act_right(&self, g: &Rot3) -> Self {
        let d = wigner_blocks(self.lmax(), g);
        FourierCoeffs3 { blocks: self.blocks.iter().zip(&d).map(|(f, d)| d.transpose() * f).collect() }
    }

    /// Binary form: `u32 lmax` then every block row-major as little-endian `f32`.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.lmax() as u32).to_le_bytes())?;
        for x in self.to_vec() {
            w.write_all(&(x as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let lmax = u32::from_le_bytes(word) as usize;
        if lmax > MAX_WIGNER_ORDER {
            return Err(Error::Format(format!("lmax {lmax} exceeds {MAX_WIGNER_ORDER}")));
        }
        let mut v = Vec::with_capacity(so3_coeff_count(lmax));
        for _ in 0..so3_coeff_count(lmax) {
            r.read_exact(&mut word)?;
            v.push(f32::from_le_bytes(word) as f64);
        }
        Ok(FourierCoeffs3::from_slice(lmax, &v))
    }
}

/// `m × Σ(2ℓ+1)²` matrix whose row `i` evaluates every basis function at `g_i`.
pub(super) fn design_matrix(set: &RotationSet, lmax: usize) -> DMatrix<f64> {
    let ncoef = so3_coeff_count(lmax);
    let mut a = DMatrix::zeros(set.len(), ncoef);
    for (i, g) in set.rotations().iter().enumerate() {
        let Rotation::D3(r) = g else { unreachable!("dimension checked by caller") };
        let mut col = 0;
        for d in wigner_blocks(lmax, r) {
            let n = d.nrows();
            for k in 0..n {
                for kp in 0..n {
                    a[(i, col)] = d[(kp, k)];
                    col += 1;
                }
            }
        }
    }
    a
}

/// Ridge-regularized pseudo-inverse `(AᵀA + λI)⁻¹Aᵀ`, after checking the
/// sample set determines every coefficient.
pub(super) fn analysis_matrix(set: &RotationSet, lmax: usize, design: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if lmax > MAX_WIGNER_ORDER {
        return Err(Error::InvalidArgument(format!("lmax {lmax} exceeds {MAX_WIGNER_ORDER}")));
    }
    let ncoef = design.ncols();
    if set.len() < ncoef {
        return Err(Error::Underdetermined { needed: ncoef, got: set.len() });
    }
    let gram = design.transpose() * design;
    let eig = gram.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min().max(0.0);
    let cond = (max / min).sqrt();
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::IllConditioned { cond, provenance: set.provenance().to_string() });
    }
    let reg = gram + DMatrix::identity(ncoef, ncoef) * RIDGE;
    let chol =
        reg.cholesky().ok_or_else(|| Error::IllConditioned { cond, provenance: set.provenance().to_string() })?;
    Ok(chol.solve(&design.transpose()))
}

/// Least-squares coefficients up to `lmax` from samples on `set`.
pub fn so3_forward(set: &RotationSet, values: &[f64], lmax: usize) -> Result<FourierCoeffs3> {
    if set.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: set.dim() });
    }
    if values.len() != set.len() {
        return Err(Error::ShapeMismatch(format!("{} samples for {} rotations", values.len(), set.len())));
    }
    let design = design_matrix(set, lmax);
    let pinv = analysis_matrix(set, lmax, &design)?;
    let c = pinv * DVector::from_column_slice(values);
    Ok(FourierCoeffs3::from_slice(lmax, c.as_slice()))
}

pub fn so3_inverse(coeffs: &FourierCoeffs3, set: &RotationSet) -> Result<Vec<f64>> {
    set.rotations().iter().map(|g| Ok(coeffs.evaluate(&g.as_rot3()?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_coeffs(lmax: usize, rng: &mut ChaCha8Rng) -> FourierCoeffs3 {
        let v: Vec<f64> = (0..so3_coeff_count(lmax)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        FourierCoeffs3::from_slice(lmax, &v)
    }

    #[test]
    fn round_trip_on_band_limited_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set = RotationSet::low_discrepancy(3, 384, 0).unwrap();
        let c = random_coeffs(2, &mut rng);
        let vals = so3_inverse(&c, &set).unwrap();
        let back = so3_forward(&set, &vals, 2).unwrap();
        for (a, b) in c.to_vec().iter().zip(back.to_vec()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_function() {
        let set = RotationSet::low_discrepancy(3, 100, 0).unwrap();
        let c = so3_forward(&set, &vec![2.5; 100], 1).unwrap();
        assert!((c.blocks[0][(0, 0)] - 2.5).abs() < 1e-9);
        assert!(c.blocks[1].norm() < 1e-8);
    }

    #[test]
    fn underdetermined() {
        let set = RotationSet::low_discrepancy(3, 30, 0).unwrap();
        assert!(matches!(so3_forward(&set, &[0.0; 30], 2), Err(Error::Underdetermined { needed: 35, got: 30 })));
    }

    #[test]
    fn translations_match_coefficient_actions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = random_coeffs(3, &mut rng);
        let g = Rot3::random(&mut rng);
        let left = c.act_left(&g);
        let right = c.act_right(&g);
        for _ in 0..20 {
            let h = Rot3::random(&mut rng);
            let want_l = c.evaluate(&g.inverse().compose(&h));
            let want_r = c.evaluate(&h.compose(&g.inverse()));
            assert!((left.evaluate(&h) - want_l).abs() < 1e-10);
            assert!((right.evaluate(&h) - want_r).abs() < 1e-10);
        }
    }

    #[test]
    fn binary_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = random_coeffs(2, &mut rng);
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 * 35);
        let back = FourierCoeffs3::read_from(buf.as_slice()).unwrap();
        for (a, b) in c.to_vec().iter().zip(back.to_vec()) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
