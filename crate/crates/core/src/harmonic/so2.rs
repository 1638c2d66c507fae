use std::f64::consts::TAU;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::group::{Rotation, RotationSet};

/// Real Fourier series truncated at order `K`; `b[0]` is always zero.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierCoeffs2 {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl FourierCoeffs2 {
    pub fn zeros(max_order: usize) -> Self {
        FourierCoeffs2 { a: vec![0.0; max_order + 1], b: vec![0.0; max_order + 1] }
    }

    pub fn max_order(&self) -> usize {
        self.a.len() - 1
    }

    /// `[a_0, a_1, b_1, …, a_K, b_K]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.a[0]];
        for k in 1..self.a.len() {
            v.push(self.a[k]);
            v.push(self.b[k]);
        }
        v
    }

    pub fn from_slice(max_order: usize, v: &[f64]) -> Self {
        let mut c = FourierCoeffs2::zeros(max_order);
        c.a[0] = v[0];
        for k in 1..=max_order {
            c.a[k] = v[2 * k - 1];
            c.b[k] = v[2 * k];
        }
        c
    }

    pub fn evaluate(&self, theta: f64) -> f64 {
        let mut acc = self.a[0];
        for k in 1..self.a.len() {
            let (s, c) = (k as f64 * theta).sin_cos();
            acc += self.a[k] * c + self.b[k] * s;
        }
        acc
    }

    /// Coefficients of `θ ↦ f(θ − φ)`: each `(a_k, b_k)` rotates by `kφ`.
    pub fn shift(&self, phi: f64) -> Self {
        let mut out = self.clone();
        for k in 1..self.a.len() {
            let (s, c) = (k as f64 * phi).sin_cos();
            out.a[k] = c * self.a[k] - s * self.b[k];
            out.b[k] = s * self.a[k] + c * self.b[k];
        }
        out
    }
}

fn angles(set: &RotationSet) -> Result<Vec<f64>> {
    set.rotations().iter().map(|g| Ok(g.as_rot2()?.theta())).collect()
}

/// Checks that `set` is `θ_0 + 2πi/n` in order, up to 1e-9.
fn check_equispaced(theta: &[f64]) -> Result<()> {
    let n = theta.len() as f64;
    for (i, t) in theta.iter().enumerate() {
        let want = theta[0] + TAU * i as f64 / n;
        let d = (t - want).rem_euclid(TAU);
        if d.min(TAU - d) > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "SO(2) samples must be equispaced in order; sample {i} is off by {d:.3e}"
            )));
        }
    }
    Ok(())
}

/// Analysis matrix `(2K+1) × n` for equispaced samples.
///
/// With `n = 2K` the order-K pair is aliased onto a single sampled mode;
/// it is recovered as `cos K(θ−θ_0)` scaled by the sampled amplitude, which
/// keeps the forward transform exact for functions of that form.
pub(super) fn analysis_matrix(set: &RotationSet, max_order: usize) -> Result<DMatrix<f64>> {
    let theta = angles(set)?;
    let n = theta.len();
    if n < 2 * max_order || n == 0 {
        return Err(Error::Underdetermined { needed: 2 * max_order, got: n });
    }
    check_equispaced(&theta)?;
    let mut m = DMatrix::zeros(2 * max_order + 1, n);
    let nf = n as f64;
    for (i, t) in theta.iter().enumerate() {
        m[(0, i)] = 1.0 / nf;
        for k in 1..=max_order {
            let scale = if 2 * k == n { 1.0 / nf } else { 2.0 / nf };
            let (s, c) = (k as f64 * t).sin_cos();
            m[(2 * k - 1, i)] = scale * c;
            m[(2 * k, i)] = scale * s;
        }
    }
    Ok(m)
}

pub(super) fn design_matrix(set: &RotationSet, max_order: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(set.len(), 2 * max_order + 1);
    for (i, g) in set.rotations().iter().enumerate() {
        let Rotation::D2(r) = g else { unreachable!("dimension checked by caller") };
        m[(i, 0)] = 1.0;
        for k in 1..=max_order {
            let (s, c) = (k as f64 * r.theta()).sin_cos();
            m[(i, 2 * k - 1)] = c;
            m[(i, 2 * k)] = s;
        }
    }
    m
}

/// Fourier coefficients up to order `K` from samples on an equispaced circle.
///
/// Requires `n ≥ 2K`; at `n = 2K` the top order follows the Nyquist rule
/// described on [`analysis_matrix`].
pub fn so2_forward(set: &RotationSet, values: &[f64], max_order: usize) -> Result<FourierCoeffs2> {
    if set.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: set.dim() });
    }
    if values.len() != set.len() {
        return Err(Error::ShapeMismatch(format!("{} samples for {} rotations", values.len(), set.len())));
    }
    let m = analysis_matrix(set, max_order)?;
    let v = m * nalgebra::DVector::from_column_slice(values);
    Ok(FourierCoeffs2::from_slice(max_order, v.as_slice()))
}

pub fn so2_inverse(coeffs: &FourierCoeffs2, set: &RotationSet) -> Result<Vec<f64>> {
    set.rotations().iter().map(|g| Ok(coeffs.evaluate(g.as_rot2()?.theta()))).collect()
}
