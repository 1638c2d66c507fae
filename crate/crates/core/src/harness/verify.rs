use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FourierField;
use crate::field::{crop, fiber_fourier, lift, rotate_field, steerability_defect, RotateMode, ScalarField};
use crate::group::{FiniteRotationGroup, GroupName, Rotation, RotationSet};
use crate::oracle::{brute_place, compare};
use crate::transporter::{
    argmax_action, correlate_kernel, dynamic_kernel, grid_group, place_logits, Action, Config, Pipeline,
    PoseDistribution,
};

use super::scene::{closed_set, Scene};

/// Argmax and distribution checks are exact up to float noise.
pub const EXACT_TOL: f64 = 1e-6;
pub const DISTRIBUTION_TOL: f64 = 1e-5;
/// Argmax checks are skipped when the winner is not unique by this margin.
pub const MIN_MARGIN: f64 = 1e-6;
pub const STEER_SIZES: [usize; 4] = [48, 96, 192, 384];
pub const STEER_SEEDS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyMode {
    Equivariance,
    Oracle,
    Steerability,
}

impl fmt::Display for VerifyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerifyMode::Equivariance => "equivariance",
            VerifyMode::Oracle => "oracle",
            VerifyMode::Steerability => "steerability",
        })
    }
}

impl FromStr for VerifyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equivariance" => Ok(VerifyMode::Equivariance),
            "oracle" => Ok(VerifyMode::Oracle),
            "steerability" => Ok(VerifyMode::Steerability),
            _ => Err(Error::InvalidArgument(format!("unknown verify mode `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Measured defect; lower is better.
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Argmax checks whose winner was not unique; they count as passing.
    pub skipped: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, pass: value <= tolerance, skipped: false }
    }

    fn skipped(name: impl Into<String>) -> Self {
        Check { name: name.into(), value: 0.0, tolerance: 0.0, pass: true, skipped: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub mode: VerifyMode,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn new(mode: VerifyMode, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        VerifyReport { mode, checks, pass }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

pub fn verify(scene: &Scene, config: &Config, mode: VerifyMode) -> Result<VerifyReport> {
    match mode {
        VerifyMode::Equivariance => verify_equivariance(scene, config),
        VerifyMode::Oracle => verify_oracle(scene, config),
        VerifyMode::Steerability => verify_steerability(scene, config),
    }
}

/// Where cell `x` goes when the grid is turned by a grid-exact `g` about its center.
pub fn rotate_cell(shape: &[usize], g: &Rotation, cell: &[usize]) -> Vec<usize> {
    let d = shape.len();
    let m = g.matrix();
    let c: Vec<f64> = shape.iter().map(|&s| (s as f64 - 1.0) / 2.0).collect();
    (0..d)
        .map(|i| {
            let v = c[i] + (0..d).map(|j| m[i * d + j] * (cell[j] as f64 - c[j])).sum::<f64>();
            v.round() as usize
        })
        .collect()
}

/// Zero-pads a field to a square (cubic) grid so every grid-subgroup element maps it to itself.
pub fn square_canvas(f: &ScalarField) -> Result<ScalarField> {
    let side = *f.shape().iter().max().unwrap_or(&1);
    if f.shape().iter().all(|&s| s == side) {
        return Ok(f.clone());
    }
    let shape = vec![side; f.dim()];
    let mut out = ScalarField::zeros(&shape, f.cell_size(), f.origin(), f.channels())?;
    for flat in 0..f.cell_count() {
        let cell = f.cell_of(flat);
        for ch in 0..f.channels() {
            out.set(&cell, ch, f.get(&cell, ch));
        }
    }
    Ok(out)
}

/// Left cosets `O·h_j` suffice for pick checks.
pub const PICK_COSETS_3D: usize = 2;

/// A pipeline whose coarse set is closed under the grid subgroup: C_n with
/// 4 | n in 2D; in 3D a union of cube-rotation cosets, left-closed for pick
/// checks or closed on both sides (`two_sided`) for place checks.
pub fn equivariance_pipeline(config: &Config, dim: usize, two_sided: bool, seed: u64) -> Result<Pipeline> {
    if dim == 2 {
        // C_n contains C_4 only when 4 | n; round the configured order down
        let GroupName::Cyclic(n) = FiniteRotationGroup::parse(&config.group_2d_lift)?.name() else {
            return Err(Error::InvalidArgument("2D lift group must be cyclic".into()));
        };
        let n = (n / 4 * 4).max(4);
        let config = Config {
            group_2d_lift: format!("c{n}"),
            coarse_rotations_2d: n,
            max_order_2d: config.max_order_2d.min(n / 2),
            ..config.clone()
        };
        return Pipeline::new(&config, 2);
    }
    let set = if two_sided { closed_set(3, 1, true, seed)? } else { closed_set(3, PICK_COSETS_3D, false, seed)? };
    Pipeline::with_sets(config, &set, &set, config.lmax_coarse, &set, config.lmax_coarse, &set)
}

/// Index map `i ↦ j` with `set[j] = l ∘ set[i] ∘ r`.
fn index_map(set: &RotationSet, l: &Rotation, r: &Rotation) -> Result<Vec<usize>> {
    set.rotations()
        .iter()
        .map(|g| {
            let (j, d) = set.nearest(&l.compose(g).compose(r));
            if d < 1e-9 {
                Ok(j)
            } else {
                Err(Error::InvalidArgument("rotation set is not closed under the test action".into()))
            }
        })
        .collect()
}

/// Relative L∞ distance between `b` and `a` transported by (cell map under
/// `g`, rotation index map).
fn distribution_defect(a: &PoseDistribution, b: &PoseDistribution, g: &Rotation, rot: &[usize]) -> f64 {
    let m = a.rotations.len();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for flat in 0..a.cell_count() {
        let cell = crate::field::unflatten(&a.shape, flat);
        let moved = rotate_cell(&a.shape, g, &cell);
        let to = crate::field::flat_index(&b.shape, &moved);
        for i in 0..m {
            let x = a.scores[flat * m + i];
            worst = worst.max((b.scores[to * m + rot[i]] - x).abs());
            scale = scale.max(x.abs());
        }
    }
    if scale == 0.0 {
        worst
    } else {
        worst / scale
    }
}

/// An unrotated distribution with its argmax and margin, computed once and
/// compared against every transformed run.
#[derive(Clone, Debug)]
pub struct Baseline {
    pub dist: PoseDistribution,
    pub argmax: Action,
    pub margin: f64,
}

impl Baseline {
    pub fn new(dist: PoseDistribution) -> Result<Self> {
        let argmax = argmax_action(&dist)?;
        let margin = dist.margin();
        Ok(Baseline { dist, argmax, margin })
    }
}

fn argmax_check(
    name: String,
    before: &Baseline,
    after: &PoseDistribution,
    g_cell: &Rotation,
    expected_rotation: &Rotation,
) -> Result<Check> {
    if before.margin <= MIN_MARGIN {
        return Ok(Check::skipped(name));
    }
    let a = &before.argmax;
    let b = argmax_action(after)?;
    let want = rotate_cell(&before.dist.shape, g_cell, &a.cell);
    let cell_off = b.cell.iter().zip(&want).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0) as f64;
    let value = cell_off.max(b.rotation.distance(expected_rotation));
    Ok(Check::new(name, value, EXACT_TOL))
}

/// Pick equivariance for one grid-exact `g`: argmax `(ρ(g)T, g∘R)` and the
/// whole distribution transported by `g`.
pub fn pick_equivariance(
    p: &Pipeline,
    o: &ScalarField,
    template: &ScalarField,
    before: &Baseline,
    g: &Rotation,
) -> Result<Vec<Check>> {
    let og = rotate_field(o, g, RotateMode::ExactSubgroup)?;
    let after = p.decode(&p.pick_logits(&og, template)?)?;
    let e = Rotation::identity(g.dim());
    let rot = index_map(&p.coarse_set, g, &e)?;
    let r0 = &before.argmax.rotation;
    let tag = label(g);
    Ok(vec![
        argmax_check(format!("pick argmax g={tag}"), before, &after, g, &g.compose(r0))?,
        Check::new(
            format!("pick distribution g={tag}"),
            distribution_defect(&before.dist, &after, g, &rot),
            DISTRIBUTION_TOL,
        ),
    ])
}

/// Pick checks for every element of the grid-exact subgroup.
pub fn pick_checks(p: &Pipeline, o: &ScalarField, template: &ScalarField) -> Result<Vec<Check>> {
    let before = Baseline::new(p.decode(&p.pick_logits(o, template)?)?)?;
    let mut checks = Vec::new();
    for g in grid_group(o.dim()).elements() {
        checks.extend(pick_equivariance(p, o, template, &before, g)?);
    }
    Ok(checks)
}

/// Dynamic kernel of the crop turned by `g1`.
pub fn turned_kernel(p: &Pipeline, c: &ScalarField, g1: &Rotation) -> Result<FourierField> {
    let cg = rotate_field(c, g1, RotateMode::ExactSubgroup)?;
    dynamic_kernel(&cg, &p.config.place_crop_encoder, &p.lift)
}

/// Place bi-equivariance for `(g1, g2)`, given the kernel of the crop
/// turned by `g1` and the scene turned by `g2`; expects `R' = g2∘R∘g1⁻¹`
/// and `T' = ρ(g2)T`.
pub fn place_equivariance(
    p: &Pipeline,
    turned: &FourierField,
    o: &ScalarField,
    before: &Baseline,
    g1: &Rotation,
    g2: &Rotation,
) -> Result<Vec<Check>> {
    let og = rotate_field(o, g2, RotateMode::ExactSubgroup)?;
    let after = p.decode(&correlate_kernel(turned, &og, &p.config.place_scene_encoder)?)?;
    let rot = index_map(&p.coarse_set, g2, &g1.inverse())?;
    let tag = format!("g1={} g2={}", label(g1), label(g2));
    let want = g2.compose(&before.argmax.rotation).compose(&g1.inverse());
    Ok(vec![
        argmax_check(format!("place argmax {tag}"), before, &after, g2, &want)?,
        Check::new(
            format!("place distribution {tag}"),
            distribution_defect(&before.dist, &after, g2, &rot),
            DISTRIBUTION_TOL,
        ),
    ])
}

/// Place checks over `pairs`, reusing the turned kernel while `g1` repeats.
pub fn place_checks(
    p: &Pipeline,
    c: &ScalarField,
    o: &ScalarField,
    pairs: &[(Rotation, Rotation)],
) -> Result<Vec<Check>> {
    let before = Baseline::new(p.decode(&p.place_logits(c, o)?)?)?;
    let mut checks = Vec::new();
    let mut kernel: Option<(Rotation, FourierField)> = None;
    for (g1, g2) in pairs {
        if kernel.as_ref().map_or(true, |(k, _)| k != g1) {
            kernel = Some((*g1, turned_kernel(p, c, g1)?));
        }
        let (_, turned) = kernel.as_ref().expect("kernel set above");
        checks.extend(place_equivariance(p, turned, o, &before, g1, g2)?);
    }
    Ok(checks)
}

fn label(g: &Rotation) -> String {
    let group = grid_group(g.dim());
    match group.index_of(g) {
        Ok(i) => format!("{}[{i}]", group.name()),
        Err(_) => format!("{:.4}rad", g.distance(&Rotation::identity(g.dim()))),
    }
}

fn pick_cell(scene: &Scene, shape: &[usize]) -> Vec<usize> {
    scene.ground_truth.pick.cell.iter().zip(shape).map(|(&c, &s)| c.clamp(0, s as isize - 1) as usize).collect()
}

/// Place pairs checked in 3D when the full 24² grid is too large.
pub const PLACE_PAIRS_3D: usize = 50;

/// All grid-subgroup pick checks and the place pairs (all of C4×C4 in 2D,
/// a seeded subsample of 50 cube-rotation pairs in 3D).
pub fn verify_equivariance(scene: &Scene, config: &Config) -> Result<VerifyReport> {
    let dim = scene.meta.dim;
    let p = equivariance_pipeline(config, dim, false, config.seed)?;
    let o = square_canvas(&scene.observation)?;
    let size = config.crop_for(dim);
    let template = scene.template(size)?;
    let group = grid_group(dim);
    let mut checks = pick_checks(&p, &o, &template)?;
    let p = equivariance_pipeline(config, dim, true, config.seed)?;
    let c = crop(&o, &pick_cell(scene, o.shape()), size)?;
    let pairs = place_pairs(&group, if dim == 2 { usize::MAX } else { PLACE_PAIRS_3D }, scene.meta.seed);
    checks.extend(place_checks(&p, &c, &o, &pairs)?);
    Ok(VerifyReport::new(VerifyMode::Equivariance, checks))
}

/// Grid-subgroup pairs `(g1, g2)`, all of them or a seeded subsample.
pub fn place_pairs(group: &FiniteRotationGroup, limit: usize, seed: u64) -> Vec<(Rotation, Rotation)> {
    let n = group.order();
    let mut idx: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    if idx.len() > limit {
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x9a1f));
        idx.truncate(limit);
        idx.sort_unstable();
    }
    idx.into_iter().map(|(a, b)| (group.element(a), group.element(b))).collect()
}

/// Fourier-path place scores against the band-limit projection of brute-force
/// correlation: C8 at full bandwidth in 2D, the configured lift set and
/// ℓ_max in 3D.
pub fn verify_oracle(scene: &Scene, config: &Config) -> Result<VerifyReport> {
    let dim = scene.meta.dim;
    let o = &scene.observation;
    let c = crop(o, &pick_cell(scene, o.shape()), config.crop_for(dim))?;
    let (set, order) = if dim == 2 {
        (RotationSet::subgroup(&FiniteRotationGroup::new(GroupName::Cyclic(8))?), 4)
    } else {
        (RotationSet::sample(3, config.coarse_rotations, &config.lift_method()?, config.seed)?, config.lmax_coarse)
    };
    let (psi, phi) = (&config.place_crop_encoder, &config.place_scene_encoder);
    let logits = place_logits(&c, o, psi, phi, &set, order)?;
    let stack = brute_place(&c, o, psi, phi, &set)?;
    let r = compare(&logits, &stack)?;
    let scale = stack.values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let checks = vec![
        Check::new(
            format!("max_abs_err/scale ({} rotations, order {order})", set.len()),
            r.max_abs_err / scale,
            EXACT_TOL,
        ),
        Check::new("1 - pearson_r", 1.0 - r.pearson_r, EXACT_TOL),
        Check::new("argmax mismatch", if r.argmax_match { 0.0 } else { 1.0 }, 0.0),
    ];
    Ok(VerifyReport::new(VerifyMode::Oracle, checks))
}

/// Mean steerability defect of the lifted kernel of `c` at each lift-set
/// size, averaged over seeds and the non-identity cube rotations.
pub fn steerability_trend(c: &ScalarField, sizes: &[usize], seeds: usize, order: usize) -> Result<Vec<f64>> {
    let group = grid_group(3);
    sizes
        .iter()
        .map(|&m| {
            let mut total = 0.0;
            let mut count = 0;
            for seed in 0..seeds as u64 {
                let set = RotationSet::low_discrepancy(3, m, seed)?;
                let k = fiber_fourier(&lift(c, &set)?, &set, order)?;
                for g in group.elements().iter().skip(1) {
                    total += steerability_defect(&k, g)?;
                    count += 1;
                }
            }
            Ok(total / count as f64)
        })
        .collect()
}

/// 2D: the C8-lifted kernel of the pick crop is steerable for C4 at full
/// bandwidth. 3D: the defect does not grow with the lift-set size.
pub fn verify_steerability(scene: &Scene, config: &Config) -> Result<VerifyReport> {
    let dim = scene.meta.dim;
    let o = config.place_crop_encoder.encode(&scene.observation)?;
    let c = crop(&o, &pick_cell(scene, o.shape()), config.crop_for(dim))?;
    let mut checks = Vec::new();
    if dim == 2 {
        let c8 = RotationSet::subgroup(&FiniteRotationGroup::new(GroupName::Cyclic(8))?);
        let k = fiber_fourier(&lift(&c, &c8)?, &c8, 4)?;
        for g in grid_group(2).elements() {
            checks.push(Check::new(format!("C8 kernel defect g={}", label(g)), steerability_defect(&k, g)?, EXACT_TOL));
        }
    } else {
        let trend = steerability_trend(&c, &STEER_SIZES, STEER_SEEDS, config.lmax_coarse)?;
        for (m, d) in STEER_SIZES.iter().zip(&trend) {
            checks.push(Check {
                name: format!("mean defect m={m}"),
                value: *d,
                tolerance: f64::INFINITY,
                pass: true,
                skipped: false,
            });
        }
        for (w, m) in trend.windows(2).zip(STEER_SIZES.windows(2)) {
            checks.push(Check::new(format!("non-increasing {}→{}", m[0], m[1]), (w[1] - w[0]).max(0.0), 0.0));
        }
    }
    Ok(VerifyReport::new(VerifyMode::Steerability, checks))
}
