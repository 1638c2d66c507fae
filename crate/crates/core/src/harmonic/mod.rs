//! Band-limited Fourier transforms on SO(2) and SO(3).
//!
//! Coefficient conventions (real throughout):
//!
//! * SO(2): `f(θ) = a_0 + Σ_{k=1}^{K} a_k cos kθ + b_k sin kθ`, flattened as
//!   `[a_0, a_1, b_1, …, a_K, b_K]`.
//! * SO(3): `f(g) = Σ_ℓ tr(f̂^ℓ D^ℓ(g)) = Σ_ℓ Σ_{kk'} f̂^ℓ_{kk'} D^ℓ_{k'k}(g)`,
//!   blocks flattened row-major in order of ℓ. With this layout each row of
//!   `f̂^ℓ` is a `D^ℓ` vector under left translation, so a flattened
//!   coefficient vector transforms by `⊕_ℓ (2ℓ+1) D^ℓ` exactly as laid out.
//!
//! Left translation `f ↦ f(g⁻¹ ·)` maps every row `r` of `f̂^ℓ` to `D^ℓ(g) r`;
//! right translation `f ↦ f(· g⁻¹)` maps `f̂^ℓ` to `D^ℓ(g⁻¹) f̂^ℓ`.

mod so2;
mod so3;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::group::{Rotation, RotationSet};
use crate::rep::RepSpec;

pub use so2::{so2_forward, so2_inverse, FourierCoeffs2};
pub use so3::{so3_forward, so3_inverse, FourierCoeffs3, RIDGE};

/// Shape of a per-cell coefficient vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Fiber {
    So2 { max_order: usize },
    So3 { lmax: usize },
}

impl Fiber {
    pub fn for_dim(dim: usize, order: usize) -> Fiber {
        if dim == 2 {
            Fiber::So2 { max_order: order }
        } else {
            Fiber::So3 { lmax: order }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Fiber::So2 { .. } => 2,
            Fiber::So3 { .. } => 3,
        }
    }

    pub fn order(&self) -> usize {
        match self {
            Fiber::So2 { max_order } => *max_order,
            Fiber::So3 { lmax } => *lmax,
        }
    }

    /// Coefficients per function: `2K + 1` or `Σ (2ℓ+1)²`.
    pub fn len(&self) -> usize {
        match self {
            Fiber::So2 { max_order } => 2 * max_order + 1,
            Fiber::So3 { lmax } => so3_coeff_count(*lmax),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Inverse of [`Fiber::rep`].
    pub fn from_rep(rep: &RepSpec) -> Option<Fiber> {
        let RepSpec::DirectSum(parts) = rep else {
            return None;
        };
        let order = parts.len().checked_sub(1)?;
        [Fiber::So2 { max_order: order }, Fiber::So3 { lmax: order }].into_iter().find(|f| &f.rep() == rep)
    }

    /// Representation carried by the flattened coefficient vector.
    pub fn rep(&self) -> RepSpec {
        match self {
            Fiber::So2 { max_order } => RepSpec::so2_fiber(*max_order),
            Fiber::So3 { lmax } => RepSpec::so3_fiber(*lmax),
        }
    }
}

/// `Σ_{ℓ ≤ lmax} (2ℓ+1)²`.
pub fn so3_coeff_count(lmax: usize) -> usize {
    (0..=lmax).map(|l| (2 * l + 1) * (2 * l + 1)).sum()
}

/// Coefficients of either group.
#[derive(Clone, Debug, PartialEq)]
pub enum Coefficients {
    So2(FourierCoeffs2),
    So3(FourierCoeffs3),
}

impl Coefficients {
    pub fn fiber(&self) -> Fiber {
        match self {
            Coefficients::So2(c) => Fiber::So2 { max_order: c.max_order() },
            Coefficients::So3(c) => Fiber::So3 { lmax: c.lmax() },
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            Coefficients::So2(c) => c.to_vec(),
            Coefficients::So3(c) => c.to_vec(),
        }
    }

    pub fn from_slice(fiber: Fiber, data: &[f64]) -> Result<Self> {
        if data.len() != fiber.len() {
            return Err(Error::ShapeMismatch(format!("{} coefficients for a fiber of {}", data.len(), fiber.len())));
        }
        Ok(match fiber {
            Fiber::So2 { max_order } => Coefficients::So2(FourierCoeffs2::from_slice(max_order, data)),
            Fiber::So3 { lmax } => Coefficients::So3(FourierCoeffs3::from_slice(lmax, data)),
        })
    }

    pub fn synthesize(&self, set: &RotationSet) -> Vec<f64> {
        set.rotations().iter().map(|g| self.evaluate(g)).collect()
    }

    pub fn evaluate(&self, g: &Rotation) -> f64 {
        match (self, g) {
            (Coefficients::So2(c), Rotation::D2(r)) => c.evaluate(r.theta()),
            (Coefficients::So3(c), Rotation::D3(r)) => c.evaluate(r),
            _ => panic!("coefficient/rotation dimension mismatch"),
        }
    }

    /// Coefficients of `h ↦ f(g⁻¹ h)`.
    pub fn act_left(&self, g: &Rotation) -> Result<Coefficients> {
        match self {
            Coefficients::So2(c) => Ok(Coefficients::So2(c.shift(g.as_rot2()?.theta()))),
            Coefficients::So3(c) => Ok(Coefficients::So3(c.act_left(&g.as_rot3()?))),
        }
    }

    /// Coefficients of `h ↦ f(h g⁻¹)`.
    pub fn act_right(&self, g: &Rotation) -> Result<Coefficients> {
        match self {
            // SO(2) is abelian
            Coefficients::So2(c) => Ok(Coefficients::So2(c.shift(g.as_rot2()?.theta()))),
            Coefficients::So3(c) => Ok(Coefficients::So3(c.act_right(&g.as_rot3()?))),
        }
    }
}

/// Evaluation matrix of a band-limited basis on a rotation set: row `i`
/// holds the basis functions at `g_i`, so `values = design · coeffs`.
#[derive(Clone, Debug)]
pub struct Synthesis {
    fiber: Fiber,
    design: DMatrix<f64>,
}

impl Synthesis {
    pub fn new(set: &RotationSet, fiber: Fiber) -> Result<Self> {
        if set.dim() != fiber.dim() {
            return Err(Error::DimensionMismatch { expected: fiber.dim(), got: set.dim() });
        }
        let design = match fiber {
            Fiber::So2 { max_order } => so2::design_matrix(set, max_order),
            Fiber::So3 { lmax } => so3::design_matrix(set, lmax),
        };
        Ok(Synthesis { fiber, design })
    }

    pub fn fiber(&self) -> Fiber {
        self.fiber
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn rows(&self) -> usize {
        self.design.nrows()
    }

    /// Evaluates one coefficient vector on every rotation of the set.
    pub fn apply(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.design.nrows()];
        self.apply_into(coeffs, &mut out);
        out
    }

    pub fn apply_into(&self, coeffs: &[f64], out: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), self.design.ncols());
        // column axpy: same summation order per output as a row dot product
        out.fill(0.0);
        let m = self.design.nrows();
        for (col, &c) in self.design.as_slice().chunks_exact(m).zip(coeffs) {
            for (o, d) in out.iter_mut().zip(col) {
                *o += d * c;
            }
        }
    }
}

/// Analysis/synthesis pair on one sample set: `forward` maps samples to
/// coefficients, `inverse` maps them back onto the same set.
#[derive(Clone, Debug)]
pub struct FiberTransform {
    set: RotationSet,
    synthesis: Synthesis,
    /// `ncoef × m`, row-major for fast per-cell products.
    analysis: Vec<f64>,
}

impl FiberTransform {
    pub fn new(set: &RotationSet, fiber: Fiber) -> Result<Self> {
        let synthesis = Synthesis::new(set, fiber)?;
        let analysis = match fiber {
            Fiber::So2 { max_order } => so2::analysis_matrix(set, max_order)?,
            Fiber::So3 { lmax } => so3::analysis_matrix(set, lmax, synthesis.matrix())?,
        };
        let (rows, cols) = analysis.shape();
        let flat = (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).map(|(i, j)| analysis[(i, j)]).collect();
        Ok(FiberTransform { set: set.clone(), synthesis, analysis: flat })
    }

    pub fn set(&self) -> &RotationSet {
        &self.set
    }

    pub fn fiber(&self) -> Fiber {
        self.synthesis.fiber
    }

    pub fn synthesis(&self) -> &Synthesis {
        &self.synthesis
    }

    pub fn forward(&self, samples: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.fiber().len()];
        self.forward_into(samples, &mut out);
        out
    }

    pub fn forward_into(&self, samples: &[f64], out: &mut [f64]) {
        let m = self.set.len();
        debug_assert_eq!(samples.len(), m);
        for (row, o) in self.analysis.chunks_exact(m).zip(out.iter_mut()) {
            *o = row.iter().zip(samples).map(|(a, b)| a * b).sum();
        }
    }

    /// Analysis applied to a strided sample vector `samples[offset + i·stride]`.
    pub fn forward_strided(&self, samples: &[f64], offset: usize, stride: usize, out: &mut [f64]) {
        let m = self.set.len();
        for (row, o) in self.analysis.chunks_exact(m).zip(out.iter_mut()) {
            let mut acc = 0.0;
            for (i, a) in row.iter().enumerate() {
                acc += a * samples[offset + i * stride];
            }
            *o = acc;
        }
    }

    pub fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
        self.synthesis.apply(coeffs)
    }

    /// Forward then inverse: the band-limit projection on this set.
    pub fn project(&self, samples: &[f64]) -> Vec<f64> {
        self.inverse(&self.forward(samples))
    }
}
