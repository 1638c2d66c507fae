use serde::Serialize;

use crate::error::Result;
use crate::group::Rotation;
use crate::transporter::{grid_group, Action, Inference, Pipeline};

use super::scene::Scene;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoseError {
    /// Meters.
    pub translation: f64,
    /// Radians (geodesic).
    pub rotation: f64,
}

/// Errors of one pick-place step. The headline errors are the worse of the
/// pick and place errors, so success requires both to pass.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalResult {
    pub translation_error: f64,
    pub rotation_error: f64,
    pub success_low: bool,
    pub success_high: bool,
    pub pick: PoseError,
    pub place: PoseError,
    pub pick_coarse_rotation_error: f64,
    pub place_coarse_rotation_error: f64,
    /// Grid-exact scenes only: cells equal and rotations snap to the true element.
    pub exact: Option<bool>,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Where the place action should put the crop center: the slot pose applied
/// to the picked point, `p_slot + R_rel (T_pick − p_obj)`.
pub fn place_target(scene: &Scene, pick_world: &[f64]) -> Vec<f64> {
    let gt = &scene.ground_truth;
    let d = scene.meta.dim;
    let m = gt.place.rotation.matrix();
    (0..d)
        .map(|i| gt.place.world[i] + (0..d).map(|j| m[i * d + j] * (pick_world[j] - gt.pick.world[j])).sum::<f64>())
        .collect()
}

pub fn evaluate(scene: &Scene, inf: &Inference, pipeline: &Pipeline) -> EvalResult {
    let gt = &scene.ground_truth;
    let c = &pipeline.config;
    let target = place_target(scene, &inf.pick.world);
    let pick = PoseError {
        translation: dist(&inf.pick.world, &gt.pick.world),
        rotation: inf.pick.rotation.distance(&gt.pick.rotation),
    };
    let place = PoseError {
        translation: dist(&inf.place.world, &target),
        rotation: inf.place.rotation.distance(&gt.place.rotation),
    };
    let t = pick.translation.max(place.translation);
    let r = pick.rotation.max(place.rotation);
    let exact = scene.meta.options.grid_exact.then(|| {
        let snapped = |a: &Action, want: &Rotation| {
            let g = grid_group(scene.meta.dim);
            let (i, _) = g.snap(&a.rotation);
            g.element(i).distance(want) < 1e-9
        };
        let cell = |a: &Action, want: &[isize]| a.cell.iter().map(|&v| v as isize).eq(want.iter().copied());
        cell(&inf.pick, &gt.pick.cell)
            && snapped(&inf.pick, &gt.pick.rotation)
            && cell(&inf.place, &scene.observation.cell_at(&target))
            && snapped(&inf.place, &gt.place.rotation)
    });
    EvalResult {
        translation_error: t,
        rotation_error: r,
        success_low: t <= c.tau_low && r <= c.omega_low_deg.to_radians(),
        success_high: t <= c.tau_high && r <= c.omega_high_deg.to_radians(),
        pick,
        place,
        pick_coarse_rotation_error: inf.pick_coarse.rotation.distance(&gt.pick.rotation),
        place_coarse_rotation_error: inf.place_coarse.rotation.distance(&gt.place.rotation),
        exact,
    }
}

/// Runs the full pipeline on a scene and scores it.
pub fn run_scene(scene: &Scene, pipeline: &Pipeline) -> Result<(Inference, EvalResult)> {
    let template = scene.template(pipeline.config.crop_for(scene.meta.dim))?;
    let inf = pipeline.infer(&scene.observation, &template)?;
    let eval = evaluate(scene, &inf, pipeline);
    Ok((inf, eval))
}
