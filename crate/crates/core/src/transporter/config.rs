use serde::{Deserialize, Serialize};

use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::group::{GroupName, SamplingMethod};

/// Pipeline settings. Unknown keys are rejected; missing keys take defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub lmax_coarse: usize,
    pub lmax_fine: usize,
    pub coarse_rotations: usize,
    pub fine_rotations: usize,
    /// `"low_discrepancy"`, `"uniform"`, or a 3D group name such as `"o24"`.
    pub lift_set: String,
    pub seed: u64,
    pub crop: Vec<usize>,
    pub group_2d_lift: String,
    pub max_order_2d: usize,
    /// Lift-set size used to recompute the kernel at `lmax_fine`.
    pub fine_lift_rotations: usize,
    pub coarse_rotations_2d: usize,
    pub fine_rotations_2d: usize,
    pub crop_2d: Vec<usize>,
    pub pick_encoder: Encoder,
    pub place_crop_encoder: Encoder,
    pub place_scene_encoder: Encoder,
    /// Success thresholds in meters and degrees.
    pub tau_low: f64,
    pub omega_low_deg: f64,
    pub tau_high: f64,
    pub omega_high_deg: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            lmax_coarse: 2,
            lmax_fine: 4,
            coarse_rotations: 384,
            fine_rotations: 26244,
            lift_set: "low_discrepancy".into(),
            seed: 0,
            crop: vec![17, 17, 17],
            group_2d_lift: "c90".into(),
            max_order_2d: 37,
            fine_lift_rotations: 1024,
            coarse_rotations_2d: 90,
            fine_rotations_2d: 720,
            crop_2d: vec![65, 65],
            pick_encoder: Encoder::Channel(0),
            place_crop_encoder: Encoder::Channel(0),
            place_scene_encoder: Encoder::Channel(1),
            tau_low: 0.01,
            omega_low_deg: 15.0,
            tau_high: 0.005,
            omega_high_deg: 7.5,
        }
    }
}

impl Config {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let c: Config = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.crop.len() != 3 || self.crop_2d.len() != 2 {
            return bad("crop must have 3 entries and crop_2d 2".into());
        }
        if self.crop.iter().chain(&self.crop_2d).any(|s| s % 2 == 0) {
            return Err(Error::EvenCrop(self.crop.iter().chain(&self.crop_2d).copied().collect()));
        }
        for (name, n) in [
            ("coarse_rotations", self.coarse_rotations),
            ("fine_rotations", self.fine_rotations),
            ("fine_lift_rotations", self.fine_lift_rotations),
            ("coarse_rotations_2d", self.coarse_rotations_2d),
            ("fine_rotations_2d", self.fine_rotations_2d),
        ] {
            if n == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.lmax_fine < self.lmax_coarse {
            return bad(format!("lmax_fine {} below lmax_coarse {}", self.lmax_fine, self.lmax_coarse));
        }
        if !(self.tau_high <= self.tau_low && self.omega_high_deg <= self.omega_low_deg) {
            return bad("high-precision thresholds must be at least as strict as the low ones".into());
        }
        self.lift_method()?;
        let g = GroupName::parse(&self.group_2d_lift)?;
        if g.dim() != 2 {
            return bad(format!("group_2d_lift must be cyclic, got {g}"));
        }
        Ok(())
    }

    pub fn lift_method(&self) -> Result<SamplingMethod> {
        match self.lift_set.as_str() {
            "low_discrepancy" => Ok(SamplingMethod::LowDiscrepancy),
            "uniform" => Ok(SamplingMethod::Uniform),
            other => {
                let g = GroupName::parse(other)?;
                if g.dim() != 3 {
                    return Err(Error::InvalidArgument(format!("3D lift group expected, got {g}")));
                }
                Ok(SamplingMethod::Subgroup(g))
            }
        }
    }

    pub fn crop_for(&self, dim: usize) -> &[usize] {
        if dim == 2 {
            &self.crop_2d
        } else {
            &self.crop
        }
    }
}
