use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{crop, FourierField, ScalarField};
use crate::transporter::{argmax_action, place_logits_with, refine_fine, Action, Config, Pipeline};

use super::scene::{gen_scene, SceneOptions, ShapeId};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageTime {
    pub stage: &'static str,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRun {
    pub threads: usize,
    pub stages: Vec<StageTime>,
    pub total_seconds: f64,
    /// SHA-256 over logits, distributions and decoded actions.
    pub hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub dim: usize,
    pub grid: Vec<usize>,
    pub crop: Vec<usize>,
    pub coarse_rotations: usize,
    pub fine_rotations: usize,
    pub runs: Vec<BenchRun>,
    /// All runs produced the same hash.
    pub deterministic: bool,
}

/// Observation and template for timing: a generated scene when the default
/// shape fits the grid, otherwise seeded random occupancy with the template
/// cut from its center.
pub fn bench_inputs(config: &Config, dim: usize, grid: &[usize], seed: u64) -> Result<(ScalarField, ScalarField)> {
    if grid.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: grid.len() });
    }
    let size = config.crop_for(dim).to_vec();
    let shape = if dim == 2 { ShapeId::LBlock2d } else { ShapeId::PegCube3d };
    let opts = SceneOptions { grid: Some(grid.to_vec()), ..Default::default() };
    if let Ok(scene) = gen_scene(shape, seed, &opts) {
        let template = scene.template(&size)?;
        return Ok((scene.observation, template));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = grid.iter().product();
    let data = (0..2 * n).map(|_| if rng.gen_bool(0.3) { 1.0 } else { 0.0 }).collect();
    let o = ScalarField::new(grid, 0.01, &vec![0.0; dim], 2, data)?;
    let center: Vec<usize> = grid.iter().map(|s| s / 2).collect();
    let template = crop(&o.channel(0)?, &center, &size)?;
    Ok((o, template))
}

struct Hasher(Sha256);

impl Hasher {
    fn floats(&mut self, v: &[f64]) {
        for x in v {
            self.0.update(x.to_bits().to_le_bytes());
        }
    }

    fn action(&mut self, a: &Action) {
        for c in &a.cell {
            self.0.update((*c as u64).to_le_bytes());
        }
        self.floats(&a.rotation.matrix());
        self.floats(&[a.score]);
    }

    fn logits(&mut self, f: &FourierField) {
        self.floats(f.data());
    }
}

/// One full inference with per-stage wall-clock times, on the current rayon pool.
pub fn timed_inference(p: &Pipeline, o: &ScalarField, template: &ScalarField) -> Result<(Vec<StageTime>, String)> {
    let mut stages = Vec::new();
    let mut h = Hasher(Sha256::new());
    let mut clock = Instant::now();
    let mut lap = |stages: &mut Vec<StageTime>, stage: &'static str| {
        stages.push(StageTime { stage, seconds: clock.elapsed().as_secs_f64() });
        clock = Instant::now();
    };
    let cfg = &p.config;
    let e = &cfg.pick_encoder;
    let pick_logits = place_logits_with(template, o, e, e, &p.lift)?;
    lap(&mut stages, "pick_logits");
    let pick_dist = p.decode(&pick_logits)?;
    let pick_coarse = argmax_action(&pick_dist)?;
    lap(&mut stages, "pick_decode");
    let (pick_r, _) = refine_fine(template, o, e, e, &pick_coarse.cell, &pick_coarse.rotation, &p.fine)?;
    lap(&mut stages, "pick_fine");
    let c = crop(o, &pick_coarse.cell, cfg.crop_for(o.dim()))?;
    let (psi, phi) = (&cfg.place_crop_encoder, &cfg.place_scene_encoder);
    let place_logits = place_logits_with(&c, o, psi, phi, &p.lift)?;
    lap(&mut stages, "place_logits");
    let place_dist = p.decode(&place_logits)?;
    let place_coarse = argmax_action(&place_dist)?;
    lap(&mut stages, "place_decode");
    let (place_r, _) = refine_fine(&c, o, psi, phi, &place_coarse.cell, &place_coarse.rotation, &p.fine)?;
    lap(&mut stages, "place_fine");
    h.logits(&pick_logits);
    h.floats(&pick_dist.scores);
    h.action(&pick_coarse);
    h.floats(&pick_r.matrix());
    h.logits(&place_logits);
    h.floats(&place_dist.scores);
    h.action(&place_coarse);
    h.floats(&place_r.matrix());
    let digest = h.0.finalize();
    Ok((stages, digest.iter().map(|b| format!("{b:02x}")).collect()))
}

/// Times the pipeline once per thread count, each in its own rayon pool.
pub fn bench(config: &Config, o: &ScalarField, template: &ScalarField, threads: &[usize]) -> Result<BenchReport> {
    let dim = o.dim();
    let mut runs = Vec::new();
    let mut sets = None;
    for &t in threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        let run = pool.install(|| -> Result<BenchRun> {
            let start = Instant::now();
            let p = Pipeline::new(config, dim)?;
            let build = start.elapsed().as_secs_f64();
            let (mut stages, hash) = timed_inference(&p, o, template)?;
            stages.insert(0, StageTime { stage: "pipeline_build", seconds: build });
            sets.get_or_insert((p.coarse_set.len(), p.fine.set.len()));
            Ok(BenchRun { threads: t, stages, total_seconds: start.elapsed().as_secs_f64(), hash })
        })?;
        runs.push(run);
    }
    let deterministic = runs.windows(2).all(|w| w[0].hash == w[1].hash);
    let (coarse_rotations, fine_rotations) = sets.unwrap_or((0, 0));
    Ok(BenchReport {
        dim,
        grid: o.shape().to_vec(),
        crop: config.crop_for(dim).to_vec(),
        coarse_rotations,
        fine_rotations,
        runs,
        deterministic,
    })
}
