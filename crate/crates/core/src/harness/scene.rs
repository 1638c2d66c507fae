use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{read_field, write_field, FieldFile, ScalarField};
use crate::group::{Rotation, RotationSet};
use crate::transporter::grid_group;

/// Workspace defaults: 1.0 m × 0.5 m at 320 × 160 cells, and a 32 cm cube at 1 cm.
pub const GRID_2D: [usize; 2] = [320, 160];
pub const CELL_2D: f64 = 1.0 / 320.0;
pub const GRID_3D: [usize; 3] = [32, 32, 32];
pub const CELL_3D: f64 = 0.01;
const MAX_ATTEMPTS: usize = 100;
const SUPERSAMPLE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapeId {
    LBlock2d,
    KitShape2d(u32),
    PegCube3d,
    LBracket3d,
}

impl ShapeId {
    pub fn dim(&self) -> usize {
        match self {
            ShapeId::LBlock2d | ShapeId::KitShape2d(_) => 2,
            ShapeId::PegCube3d | ShapeId::LBracket3d => 3,
        }
    }

    /// Occupied cells relative to the reference point, in cell units.
    /// Every shape has a trivial rotational symmetry group.
    pub fn cells(&self) -> Vec<[i32; 3]> {
        let mut out = Vec::new();
        let mut boxes = |lo: [i32; 3], hi: [i32; 3]| {
            for a in lo[0]..=hi[0] {
                for b in lo[1]..=hi[1] {
                    for c in lo[2]..=hi[2] {
                        out.push([a, b, c]);
                    }
                }
            }
        };
        match self {
            ShapeId::LBlock2d => {
                boxes([0, -12, -12], [0, 11, -5]);
                boxes([0, -12, -4], [0, -5, 11]);
            }
            ShapeId::KitShape2d(k) => match k % 3 {
                // T
                0 => {
                    boxes([0, -12, -12], [0, 11, -5]);
                    boxes([0, -4, -4], [0, 3, 11]);
                }
                // right triangle
                1 => {
                    for a in -10..=10 {
                        for b in -10..=a {
                            out.push([0, a, b]);
                        }
                    }
                }
                // P
                _ => {
                    boxes([0, -10, -12], [0, -3, 11]);
                    boxes([0, -2, 2], [0, 9, 11]);
                    boxes([0, 6, -2], [0, 9, 1]);
                }
            },
            ShapeId::PegCube3d => {
                boxes([-3, -2, -3], [3, 2, 0]);
                boxes([0, -2, 1], [2, 0, 5]);
            }
            ShapeId::LBracket3d => {
                boxes([-4, -3, -1], [6, 2, 0]);
                boxes([-4, -3, 1], [-3, 2, 5]);
            }
        }
        let mut seen = HashSet::new();
        out.retain(|c| seen.insert(*c));
        out
    }

    /// Bounding radius in cells, measured to cell corners.
    pub fn radius(&self) -> f64 {
        self.cells()
            .iter()
            .map(|c| c.iter().map(|&v| (v.abs() as f64 + 0.5).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for ShapeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeId::LBlock2d => write!(f, "l_block_2d"),
            ShapeId::KitShape2d(k) => write!(f, "kit_shape_2d({k})"),
            ShapeId::PegCube3d => write!(f, "peg_cube_3d"),
            ShapeId::LBracket3d => write!(f, "l_bracket_3d"),
        }
    }
}

impl FromStr for ShapeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l_block_2d" => Ok(ShapeId::LBlock2d),
            "peg_cube_3d" => Ok(ShapeId::PegCube3d),
            "l_bracket_3d" => Ok(ShapeId::LBracket3d),
            _ => s
                .strip_prefix("kit_shape_2d(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|k| k.parse().ok())
                .map(ShapeId::KitShape2d)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown shape id `{s}`"))),
        }
    }
}

impl Serialize for ShapeId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ShapeId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneOptions {
    /// Cell-center positions and rotations from the grid-exact subgroup.
    pub grid_exact: bool,
    /// Slot placed exactly under the object with the same orientation.
    pub null_task: bool,
    pub grid: Option<Vec<usize>>,
    pub cell_size: Option<f64>,
}

impl Default for SceneOptions {
    fn default() -> Self {
        SceneOptions { grid_exact: false, null_task: false, grid: None, cell_size: None }
    }
}

/// Expected action: world position of the reference point, its nearest cell,
/// and a rotation (absolute for pick, relative for place).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseTarget {
    pub cell: Vec<isize>,
    pub world: Vec<f64>,
    pub rotation: Rotation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub pick: PoseTarget,
    pub place: PoseTarget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneMeta {
    pub shape_id: ShapeId,
    pub seed: u64,
    pub dim: usize,
    pub workspace: Vec<f64>,
    pub options: SceneOptions,
}

/// Channel 0: object coverage; channel 1: target slot footprint.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub observation: ScalarField,
    pub ground_truth: GroundTruth,
    pub meta: SceneMeta,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    ground_truth: GroundTruth,
    meta: SceneMeta,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

impl Scene {
    /// Object at identity with its reference point at the center of a crop-sized grid.
    pub fn template(&self, size: &[usize]) -> Result<ScalarField> {
        template(self.meta.shape_id, self.observation.cell_size(), size)
    }

    /// Writes `path` (SFLD observation) and `path.json` (ground truth and meta).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        write_field(path, &FieldFile::Scalar(self.observation.clone()))?;
        let side = Sidecar { ground_truth: self.ground_truth.clone(), meta: self.meta.clone() };
        fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scene> {
        let path = path.as_ref();
        let FieldFile::Scalar(observation) = read_field(path)? else {
            return Err(Error::Format("scene observation must be a scalar field".into()));
        };
        let side: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
        if side.meta.dim != observation.dim() {
            return Err(Error::DimensionMismatch { expected: side.meta.dim, got: observation.dim() });
        }
        Ok(Scene { observation, ground_truth: side.ground_truth, meta: side.meta })
    }

    /// The observation rotated by a grid-exact `g` about the grid center, with
    /// the ground truth carried along (pick rotation `g∘R`, slot moved too).
    pub fn rotated(&self, g: &Rotation) -> Result<Scene> {
        use crate::field::{rotate_field, RotateMode};
        let observation = rotate_field(&self.observation, g, RotateMode::ExactSubgroup)?;
        let h = self.observation.cell_size();
        let center: Vec<f64> = (self.observation.origin().iter().zip(self.observation.shape()))
            .map(|(o, &s)| o + (s as f64 - 1.0) / 2.0 * h)
            .collect();
        let m = g.matrix();
        let d = g.dim();
        let move_point = |p: &[f64]| -> Vec<f64> {
            (0..d).map(|i| center[i] + (0..d).map(|j| m[i * d + j] * (p[j] - center[j])).sum::<f64>()).collect()
        };
        let gt = &self.ground_truth;
        let pick_world = move_point(&gt.pick.world);
        let place_world = move_point(&gt.place.world);
        let pick = PoseTarget {
            cell: observation.cell_at(&pick_world),
            world: pick_world,
            rotation: g.compose(&gt.pick.rotation),
        };
        // both object and slot turn by g, so the relative rotation is conjugated
        let place = PoseTarget {
            cell: observation.cell_at(&place_world),
            world: place_world,
            rotation: g.compose(&gt.place.rotation).compose(&g.inverse()),
        };
        Ok(Scene { observation, ground_truth: GroundTruth { pick, place }, meta: self.meta.clone() })
    }
}

pub fn template(shape: ShapeId, cell_size: f64, size: &[usize]) -> Result<ScalarField> {
    if size.len() != shape.dim() {
        return Err(Error::DimensionMismatch { expected: shape.dim(), got: size.len() });
    }
    let mut t = ScalarField::centered(size, cell_size, 1)?;
    let id = Rotation::identity(shape.dim());
    rasterize(&mut t, 0, shape, &vec![0.0; shape.dim()], &id);
    Ok(t)
}

/// Supersampled coverage of `shape` at `(position, rotation)` written into `channel`.
fn rasterize(f: &mut ScalarField, channel: usize, shape: ShapeId, position: &[f64], rotation: &Rotation) {
    let dim = f.dim();
    let cells: HashSet<[i32; 3]> = shape.cells().into_iter().collect();
    let h = f.cell_size();
    let r = shape.radius() + 1.0;
    let inv = rotation.inverse().matrix();
    let center = f.cell_at(position);
    let reach = r.ceil() as isize;
    let s = SUPERSAMPLE;
    let subs = s.pow(dim as u32);
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for a in 0..dim {
        lo.push((center[a] - reach).max(0));
        hi.push((center[a] + reach).min(f.shape()[a] as isize - 1));
    }
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return;
    }
    let counts: Vec<usize> = (0..dim).map(|a| (hi[a] - lo[a] + 1) as usize).collect();
    let total: usize = counts.iter().product();
    for k in 0..total {
        let rel = crate::field::unflatten(&counts, k);
        let cell: Vec<usize> = rel.iter().zip(&lo).map(|(&r, &l)| (r as isize + l) as usize).collect();
        let base = f.world(&cell);
        let mut hits = 0;
        for q in 0..subs {
            let sub = crate::field::unflatten(&vec![s; dim], q);
            let p: Vec<f64> =
                (0..dim).map(|a| base[a] + ((sub[a] as f64 + 0.5) / s as f64 - 0.5) * h - position[a]).collect();
            let mut local = [0i32; 3];
            for i in 0..dim {
                let v: f64 = (0..dim).map(|j| inv[i * dim + j] * p[j]).sum::<f64>() / h;
                local[3 - dim + i] = v.round() as i32;
            }
            if cells.contains(&local) {
                hits += 1;
            }
        }
        if hits > 0 {
            let v = f.get(&cell, channel) + hits as f64 / subs as f64;
            f.set(&cell, channel, v.min(1.0));
        }
    }
}

fn random_pose(
    rng: &mut ChaCha8Rng,
    shape: &[usize],
    origin: &[f64],
    cell: f64,
    margin: f64,
    grid_exact: bool,
) -> (Vec<f64>, Rotation) {
    let dim = shape.len();
    let position: Vec<f64> = (0..dim)
        .map(|a| {
            let lo = margin;
            let hi = (shape[a] as f64 - 1.0 - margin).max(lo);
            let idx = if grid_exact {
                rng.gen_range(lo.ceil() as usize..=hi.floor().max(lo.ceil()) as usize) as f64
            } else {
                rng.gen_range(lo..=hi)
            };
            origin[a] + idx * cell
        })
        .collect();
    let rotation = if grid_exact {
        let g = grid_group(dim);
        g.element(rng.gen_range(0..g.order()))
    } else {
        Rotation::random(dim, rng)
    };
    (position, rotation)
}

/// Object at a random pose and its slot at an independent random pose.
pub fn gen_scene(shape: ShapeId, seed: u64, options: &SceneOptions) -> Result<Scene> {
    let dim = shape.dim();
    let grid = options.grid.clone().unwrap_or_else(|| if dim == 2 { GRID_2D.to_vec() } else { GRID_3D.to_vec() });
    let cell = options.cell_size.unwrap_or(if dim == 2 { CELL_2D } else { CELL_3D });
    if grid.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: grid.len() });
    }
    let mut obs = ScalarField::zeros(&grid, cell, &vec![0.0; dim], 2)?;
    let origin = obs.origin().to_vec();
    let radius = shape.radius();
    let margin = radius + 1.0;
    if grid.iter().any(|&s| (s as f64) < 2.0 * margin + 1.0) {
        return Err(Error::SceneGeneration(format!("grid {grid:?} too small for {shape}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0000_0000 ^ ((dim as u64) << 40));
    let mut chosen = None;
    for _ in 0..MAX_ATTEMPTS {
        let obj = random_pose(&mut rng, &grid, &origin, cell, margin, options.grid_exact);
        let slot = if options.null_task {
            (obj.0.clone(), obj.1)
        } else {
            random_pose(&mut rng, &grid, &origin, cell, margin, options.grid_exact)
        };
        let dist = obj.0.iter().zip(&slot.0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / cell;
        if options.null_task || dist > radius + 1.0 {
            chosen = Some((obj, slot));
            break;
        }
    }
    let ((p_obj, r_obj), (p_slot, r_slot)) = chosen
        .ok_or_else(|| Error::SceneGeneration(format!("no collision-free placement after {MAX_ATTEMPTS} attempts")))?;
    rasterize(&mut obs, 0, shape, &p_obj, &r_obj);
    rasterize(&mut obs, 1, shape, &p_slot, &r_slot);
    let r_rel = r_slot.compose(&r_obj.inverse());
    let ground_truth = GroundTruth {
        pick: PoseTarget { cell: obs.cell_at(&p_obj), world: p_obj, rotation: r_obj },
        place: PoseTarget { cell: obs.cell_at(&p_slot), world: p_slot, rotation: r_rel },
    };
    let meta = SceneMeta {
        shape_id: shape,
        seed,
        dim,
        workspace: grid.iter().map(|&s| s as f64 * cell).collect(),
        options: options.clone(),
    };
    Ok(Scene { observation: obs, ground_truth, meta })
}

/// A set closed under the grid-exact subgroup on the requested sides, for
/// exact equivariance checks: left cosets `G·h_j` or double cosets `G·h_j·G`.
pub fn closed_set(dim: usize, reps: usize, two_sided: bool, seed: u64) -> Result<RotationSet> {
    let group = grid_group(dim).name();
    RotationSet::sample(dim, 1, &crate::group::SamplingMethod::Cosets { group, reps, two_sided }, seed)
}
