//! End-to-end inference: pick logits, place logits as Fourier-space
//! correlation of a dynamic steerable kernel, joint normalization, and
//! coarse-to-fine decoding.

mod config;
mod decode;

use serde::Serialize;

use crate::correlate::{correlate_at, correlate_fft};
use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::field::{crop, fiber_fourier_with, lift, FourierField, ScalarField};
use crate::group::{FiniteRotationGroup, GroupName, Rotation, RotationSet};
use crate::harmonic::{Fiber, FiberTransform, Synthesis};

pub use config::Config;
pub use decode::{argmax_action, decode_coarse, Action, DistributionSummary, PoseDistribution};

/// `κ(c) ⋆ φ(o)` with `κ(c) = F⁺[L↑ψ(c)]`, one coefficient vector per cell of `o`.
pub fn place_logits(
    c: &ScalarField,
    o: &ScalarField,
    enc_psi: &Encoder,
    enc_phi: &Encoder,
    set: &RotationSet,
    order: usize,
) -> Result<FourierField> {
    let transform = FiberTransform::new(set, Fiber::for_dim(o.dim(), order))?;
    place_logits_with(c, o, enc_psi, enc_phi, &transform)
}

fn check_inputs(c: &ScalarField, o: &ScalarField) -> Result<()> {
    o.check_compatible(c)?;
    if c.shape().iter().any(|s| s % 2 == 0) {
        return Err(Error::EvenCrop(c.shape().to_vec()));
    }
    Ok(())
}

/// The dynamic kernel `κ(c)` for a prepared transform.
pub fn dynamic_kernel(c: &ScalarField, enc_psi: &Encoder, transform: &FiberTransform) -> Result<FourierField> {
    let psi = enc_psi.encode(c)?;
    Ok(fiber_fourier_with(&lift(&psi, transform.set())?, transform)?.base)
}

pub fn place_logits_with(
    c: &ScalarField,
    o: &ScalarField,
    enc_psi: &Encoder,
    enc_phi: &Encoder,
    transform: &FiberTransform,
) -> Result<FourierField> {
    check_inputs(c, o)?;
    let kappa = dynamic_kernel(c, enc_psi, transform)?;
    correlate_kernel(&kappa, o, enc_phi)
}

/// `κ ⋆ φ(o)` for a precomputed dynamic kernel.
pub fn correlate_kernel(kappa: &FourierField, o: &ScalarField, enc_phi: &Encoder) -> Result<FourierField> {
    let phi = enc_phi.encode(o)?;
    if phi.channels() != kappa.channels() {
        return Err(Error::ChannelMismatch { expected: kappa.channels(), got: phi.channels() });
    }
    let out = correlate_fft(&kappa.as_scalar(), kappa.channels(), &phi)?;
    FourierField::from_scalar(out, kappa.fiber())
}

/// Template correlation through the same machinery, with the template in
/// the crop role and one encoder for both inputs.
pub fn pick_logits(
    o: &ScalarField,
    template: &ScalarField,
    enc: &Encoder,
    set: &RotationSet,
    order: usize,
) -> Result<FourierField> {
    place_logits(template, o, enc, enc, set, order)
}

/// Kernel recomputation and fine-set evaluation at one cell.
#[derive(Clone, Debug)]
pub struct FinePlan {
    pub lift: FiberTransform,
    pub synthesis: Synthesis,
    pub set: RotationSet,
}

impl FinePlan {
    pub fn new(lift_set: &RotationSet, order: usize, fine_set: &RotationSet) -> Result<Self> {
        let fiber = Fiber::for_dim(lift_set.dim(), order);
        Ok(FinePlan {
            lift: FiberTransform::new(lift_set, fiber)?,
            synthesis: Synthesis::new(fine_set, fiber)?,
            set: fine_set.clone(),
        })
    }
}

/// Fine rotation at cell `t`: recomputes κ at the fine band limit, correlates
/// only at `t`, and returns the best rotation of the fine set with its score.
/// The coarse rotation is kept if no fine rotation scores higher.
pub fn refine_fine(
    c: &ScalarField,
    o: &ScalarField,
    enc_psi: &Encoder,
    enc_phi: &Encoder,
    t: &[usize],
    coarse: &Rotation,
    plan: &FinePlan,
) -> Result<(Rotation, f64)> {
    check_inputs(c, o)?;
    if t.len() != o.dim() || t.iter().zip(o.shape()).any(|(a, b)| a >= b) {
        return Err(Error::InvalidArgument(format!("cell {t:?} outside grid {:?}", o.shape())));
    }
    let kappa = dynamic_kernel(c, enc_psi, &plan.lift)?;
    let phi = enc_phi.encode(o)?;
    if phi.channels() != kappa.channels() {
        return Err(Error::ChannelMismatch { expected: kappa.channels(), got: phi.channels() });
    }
    let n = kappa.fiber().len();
    let per_channel = correlate_at(&kappa.as_scalar(), kappa.channels(), &phi, t)?;
    let mut coeffs = vec![0.0; n];
    for chunk in per_channel.chunks_exact(n) {
        coeffs.iter_mut().zip(chunk).for_each(|(a, b)| *a += b);
    }
    let scores = plan.synthesis.apply(&coeffs);
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    let coarse_score = crate::harmonic::Coefficients::from_slice(kappa.fiber(), &coeffs)?.evaluate(coarse);
    if coarse_score >= scores[best] {
        Ok((*coarse, coarse_score))
    } else {
        Ok((plan.set.get(best), scores[best]))
    }
}

/// Rotation sets and cached transforms for one dimension and config.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub config: Config,
    pub dim: usize,
    pub lift: FiberTransform,
    pub coarse_set: RotationSet,
    pub coarse: Synthesis,
    pub fine: FinePlan,
}

impl Pipeline {
    pub fn new(config: &Config, dim: usize) -> Result<Self> {
        config.validate()?;
        let (lift_set, coarse_set, order_c, fine_lift, order_f, fine_set) = if dim == 2 {
            let lift_set = RotationSet::subgroup(&FiniteRotationGroup::parse(&config.group_2d_lift)?);
            let coarse = if config.coarse_rotations_2d == lift_set.len() {
                lift_set.clone()
            } else {
                RotationSet::low_discrepancy(2, config.coarse_rotations_2d, 0)?
            };
            let fine = RotationSet::low_discrepancy(2, config.fine_rotations_2d, 0)?;
            let k = config.max_order_2d;
            (lift_set.clone(), coarse, k, lift_set, k, fine)
        } else if dim == 3 {
            let method = config.lift_method()?;
            let lift_set = RotationSet::sample(3, config.coarse_rotations, &method, config.seed)?;
            let fine_lift = if config.lmax_fine == config.lmax_coarse {
                lift_set.clone()
            } else {
                RotationSet::low_discrepancy(3, config.fine_lift_rotations, config.seed)?
            };
            let fine = RotationSet::euler_grid_with_count(config.fine_rotations)?;
            (lift_set.clone(), lift_set, config.lmax_coarse, fine_lift, config.lmax_fine, fine)
        } else {
            return Err(Error::InvalidArgument(format!("dim must be 2 or 3, got {dim}")));
        };
        Self::with_sets(config, &lift_set, &coarse_set, order_c, &fine_lift, order_f, &fine_set)
    }

    pub fn with_sets(
        config: &Config,
        lift_set: &RotationSet,
        coarse_set: &RotationSet,
        order_coarse: usize,
        fine_lift: &RotationSet,
        order_fine: usize,
        fine_set: &RotationSet,
    ) -> Result<Self> {
        let dim = lift_set.dim();
        let fiber = Fiber::for_dim(dim, order_coarse);
        Ok(Pipeline {
            config: config.clone(),
            dim,
            lift: FiberTransform::new(lift_set, fiber)?,
            coarse_set: coarse_set.clone(),
            coarse: Synthesis::new(coarse_set, fiber)?,
            fine: FinePlan::new(fine_lift, order_fine, fine_set)?,
        })
    }

    pub fn pick_logits(&self, o: &ScalarField, template: &ScalarField) -> Result<FourierField> {
        let e = &self.config.pick_encoder;
        place_logits_with(template, o, e, e, &self.lift)
    }

    pub fn place_logits(&self, c: &ScalarField, o: &ScalarField) -> Result<FourierField> {
        place_logits_with(c, o, &self.config.place_crop_encoder, &self.config.place_scene_encoder, &self.lift)
    }

    pub fn decode(&self, logits: &FourierField) -> Result<PoseDistribution> {
        decode::decode_with(logits, &self.coarse_set, &self.coarse)?.normalize()
    }

    /// Coarse argmax and fine rotation for one correlation problem.
    fn stage(&self, c: &ScalarField, o: &ScalarField, psi: &Encoder, phi: &Encoder) -> Result<StageResult> {
        let logits = place_logits_with(c, o, psi, phi, &self.lift)?;
        let dist = self.decode(&logits)?;
        let coarse = argmax_action(&dist)?;
        let (rotation, score) = refine_fine(c, o, psi, phi, &coarse.cell, &coarse.rotation, &self.fine)?;
        let fine = Action { rotation, score, ..coarse.clone() };
        Ok(StageResult { coarse, fine, summary: dist.summary()? })
    }

    /// Pick by template correlation, crop at the pick cell, then place.
    pub fn infer(&self, o: &ScalarField, template: &ScalarField) -> Result<Inference> {
        if o.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: o.dim() });
        }
        let e = &self.config.pick_encoder;
        let pick = self.stage(template, o, e, e)?;
        let c = crop(o, &pick.fine.cell, self.config.crop_for(self.dim))?;
        let place = self.stage(&c, o, &self.config.place_crop_encoder, &self.config.place_scene_encoder)?;
        Ok(Inference {
            pick: pick.fine,
            place: place.fine,
            pick_coarse: pick.coarse,
            place_coarse: place.coarse,
            pick_summary: pick.summary,
            place_summary: place.summary,
        })
    }
}

struct StageResult {
    coarse: Action,
    fine: Action,
    summary: DistributionSummary,
}

/// Decoded actions; the place rotation is relative to the pick pose.
#[derive(Clone, Debug, Serialize)]
pub struct Inference {
    pub pick: Action,
    pub place: Action,
    pub pick_coarse: Action,
    pub place_coarse: Action,
    pub pick_summary: DistributionSummary,
    pub place_summary: DistributionSummary,
}

/// The grid-exact subgroup of the base space: C_4 or the cube rotations.
pub fn grid_group(dim: usize) -> FiniteRotationGroup {
    let name = if dim == 2 { GroupName::Cyclic(4) } else { GroupName::Octahedral };
    FiniteRotationGroup::new(name).expect("built-in group")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{rotate_field, RotateMode};
    use crate::group::Rot2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blob(shape: &[usize], seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| if rng.gen_bool(0.4) { 1.0 } else { 0.0 }).collect();
        ScalarField::new(shape, 0.01, &vec![0.0; shape.len()], 1, data).unwrap()
    }

    #[test]
    fn zero_crop_gives_zero_logits() {
        let c = ScalarField::zeros(&[5, 5], 0.01, &[0.0, 0.0], 1).unwrap();
        let o = blob(&[12, 10], 1);
        let set = RotationSet::low_discrepancy(2, 8, 0).unwrap();
        let l = place_logits(&c, &o, &Encoder::Identity, &Encoder::Identity, &set, 3).unwrap();
        assert_eq!(l.norm(), 0.0);
    }

    #[test]
    fn planted_template_is_found() {
        let t = blob(&[7, 7], 2);
        let mut o = ScalarField::zeros(&[20, 20], 0.01, &[0.0, 0.0], 1).unwrap();
        let g: Rotation = Rot2::new(std::f64::consts::PI).into();
        let rotated = rotate_field(&t, &g, RotateMode::ExactSubgroup).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                o.set(&[i + 9, j + 4], 0, rotated.get(&[i, j], 0));
            }
        }
        let set = RotationSet::low_discrepancy(2, 4, 0).unwrap();
        let l = pick_logits(&o, &t, &Encoder::Identity, &set, 2).unwrap();
        let a = argmax_action(&decode_coarse(&l, &set).unwrap()).unwrap();
        assert_eq!(a.cell, vec![12, 7]);
        assert!(a.rotation.distance(&g) < 1e-9);
    }

    #[test]
    fn degenerate_refinement_keeps_coarse_rotation() {
        let t = blob(&[5, 5, 5], 3);
        let o = blob(&[9, 9, 9], 4);
        let set = RotationSet::low_discrepancy(3, 60, 0).unwrap();
        let l = pick_logits(&o, &t, &Encoder::Identity, &set, 2).unwrap();
        let a = argmax_action(&decode_coarse(&l, &set).unwrap()).unwrap();
        let plan = FinePlan::new(&set, 2, &set).unwrap();
        let (r, _) = refine_fine(&t, &o, &Encoder::Identity, &Encoder::Identity, &a.cell, &a.rotation, &plan).unwrap();
        assert!(r.distance(&a.rotation) < 1e-12);
    }
}
