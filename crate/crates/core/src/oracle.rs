//! Brute-force references: per-rotation direct correlation and per-cell
//! band-limit projection.

use rayon::prelude::*;
use serde::Serialize;

use crate::correlate::correlate_direct;
use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::field::{rotate_field, FourierField, RotateMode, ScalarField};
use crate::group::RotationSet;
use crate::harmonic::{Fiber, FiberTransform, Synthesis};

/// One correlation volume per rotation, stored cell-major (`cell · m + i`).
#[derive(Clone, Debug)]
pub struct CorrelationStack {
    pub set: RotationSet,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl CorrelationStack {
    pub fn cell_count(&self) -> usize {
        self.shape.iter().product()
    }

    /// Volume of rotation `i` over the scene grid.
    pub fn volume(&self, i: usize) -> Vec<f64> {
        self.values.iter().skip(i).step_by(self.set.len()).copied().collect()
    }
}

/// Volume `i` correlates `rotate(ψ(c), g_i)` against `φ(o)` directly.
pub fn brute_place(
    c: &ScalarField,
    o: &ScalarField,
    enc_psi: &Encoder,
    enc_phi: &Encoder,
    set: &RotationSet,
) -> Result<CorrelationStack> {
    o.check_compatible(c)?;
    if c.shape().iter().any(|s| s % 2 == 0) {
        return Err(Error::EvenCrop(c.shape().to_vec()));
    }
    let psi = enc_psi.encode(c)?;
    let phi = enc_phi.encode(o)?;
    let volumes: Vec<ScalarField> = set
        .rotations()
        .par_iter()
        .map(|g| {
            let k = rotate_field(&psi, g, RotateMode::Auto)?;
            correlate_direct(&k, phi.channels(), &phi)
        })
        .collect::<Result<_>>()?;
    let m = set.len();
    let cells = o.cell_count();
    let mut values = vec![0.0; cells * m];
    for (i, v) in volumes.iter().enumerate() {
        for (cell, x) in v.data().iter().enumerate() {
            values[cell * m + i] = *x;
        }
    }
    Ok(CorrelationStack { set: set.clone(), shape: o.shape().to_vec(), values })
}

/// Per-cell forward-then-inverse transform on the stack's own rotation set.
pub fn bandlimit_project(stack: &CorrelationStack, order: usize) -> Result<CorrelationStack> {
    let transform = FiberTransform::new(&stack.set, Fiber::for_dim(stack.set.dim(), order))?;
    let m = stack.set.len();
    let mut values = vec![0.0; stack.values.len()];
    values
        .par_chunks_mut(m)
        .zip(stack.values.par_chunks(m))
        .for_each(|(dst, src)| dst.copy_from_slice(&transform.project(src)));
    Ok(CorrelationStack { values, ..stack.clone() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareReport {
    pub max_abs_err: f64,
    pub pearson_r: f64,
    pub argmax_match: bool,
}

/// Synthesizes the pipeline logits on the stack's rotations and compares
/// them with the band-limit projection of the stack.
pub fn compare(logits: &FourierField, stack: &CorrelationStack) -> Result<CompareReport> {
    if logits.shape() != stack.shape.as_slice() {
        return Err(Error::ShapeMismatch(format!("logits {:?} vs stack {:?}", logits.shape(), stack.shape)));
    }
    if logits.channels() != 1 {
        return Err(Error::ChannelMismatch { expected: 1, got: logits.channels() });
    }
    let projected = bandlimit_project(stack, logits.fiber().order())?;
    let synthesis = Synthesis::new(&stack.set, logits.fiber())?;
    let m = stack.set.len();
    let n = logits.fiber().len();
    let mut pipeline = vec![0.0; stack.values.len()];
    pipeline
        .par_chunks_mut(m)
        .zip(logits.data().par_chunks(n))
        .for_each(|(dst, coeffs)| synthesis.apply_into(coeffs, dst));
    Ok(compare_values(&pipeline, &projected.values))
}

pub fn compare_values(a: &[f64], b: &[f64]) -> CompareReport {
    let max_abs_err = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    let pearson_r = if saa == 0.0 && sbb == 0.0 { 1.0 } else { sab / (saa * sbb).sqrt() };
    CompareReport { max_abs_err, pearson_r, argmax_match: argmax(a) == argmax(b) }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
