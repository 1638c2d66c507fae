use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{Provenance, Rotation, RotationSet};
use crate::harmonic::{Fiber, FiberTransform};
use crate::rep::RepSpec;

use super::{rotate_field, FourierField, RotateMode, ScalarField};

/// A dynamic kernel `κ(c) = F⁺[L↑ψ(c)]`: trivial input type, output type
/// `⊕_ℓ (2ℓ+1) D^ℓ` (or the SO(2) analogue) per input channel.
#[derive(Clone, Debug)]
pub struct SteerableKernel {
    pub base: FourierField,
    pub input_type: RepSpec,
    pub output_type: RepSpec,
    pub lift_set: Provenance,
}

/// Applies the fiber-space transform of `set` at every cell of a lifted field.
pub fn fiber_fourier(lifted: &ScalarField, set: &RotationSet, order: usize) -> Result<SteerableKernel> {
    let transform = FiberTransform::new(set, Fiber::for_dim(lifted.dim(), order))?;
    fiber_fourier_with(lifted, &transform)
}

pub fn fiber_fourier_with(lifted: &ScalarField, transform: &FiberTransform) -> Result<SteerableKernel> {
    let m = transform.set().len();
    if lifted.channels() % m != 0 {
        return Err(Error::ChannelMismatch { expected: m, got: lifted.channels() });
    }
    let c = lifted.channels() / m;
    let fiber = transform.fiber();
    let n = fiber.len();
    let mut data = vec![0.0; lifted.cell_count() * c * n];
    data.par_chunks_mut(c * n).zip(lifted.data().par_chunks(c * m)).for_each(|(dst, src)| {
        for ch in 0..c {
            transform.forward_strided(src, ch, c, &mut dst[ch * n..(ch + 1) * n]);
        }
    });
    let base = FourierField::new(lifted.shape(), lifted.cell_size(), lifted.origin(), fiber, c, data)?;
    Ok(SteerableKernel {
        base,
        input_type: RepSpec::Trivial,
        output_type: fiber.rep(),
        lift_set: transform.set().provenance().clone(),
    })
}

/// `‖β(g)K − ρ_out(g⁻¹)K‖ / ‖K‖`.
pub fn steerability_defect(k: &SteerableKernel, g: &Rotation) -> Result<f64> {
    let flat = k.base.as_scalar();
    let moved = rotate_field(&flat, g, RotateMode::Auto)?;
    let rho = k.output_type.evaluate(&g.inverse())?;
    let n = k.base.fiber().len();
    let mut diff = 0.0;
    for (a, b) in moved.data().chunks_exact(n).zip(flat.data().chunks_exact(n)) {
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += rho[(i, j)] * b[j];
            }
            diff += (a[i] - acc).powi(2);
        }
    }
    let norm = k.base.norm();
    Ok(if norm == 0.0 { 0.0 } else { diff.sqrt() / norm })
}
