//! Group representations evaluated as real matrices.
//!
//! Everything is kept in real form: SO(2) irreps are 2×2 rotation blocks and
//! Wigner matrices use the real spherical-harmonic basis (see [`wigner`]).

mod action;
mod orthogonality;
pub mod wigner;

use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::group::{FiniteRotationGroup, Rotation};

pub use action::{act_left, act_right};
pub use orthogonality::orthogonality_defect;
pub use wigner::{wigner_blocks, wigner_d_real, WIGNER1_BASIS};

#[derive(Clone, Debug, PartialEq)]
pub enum RepSpec {
    Trivial,
    /// The defining `d × d` rotation matrices.
    Standard(usize),
    /// `θ ↦ Rot(kθ)`; one-dimensional for `k = 0`.
    So2Irrep(usize),
    /// Real Wigner D-matrix of order ℓ.
    WignerD(usize),
    Regular(FiniteRotationGroup),
    /// Block-diagonal sum with multiplicities.
    DirectSum(Vec<(RepSpec, usize)>),
}

impl RepSpec {
    pub fn dim(&self) -> usize {
        match self {
            RepSpec::Trivial => 1,
            RepSpec::Standard(d) => *d,
            RepSpec::So2Irrep(0) => 1,
            RepSpec::So2Irrep(_) => 2,
            RepSpec::WignerD(l) => 2 * l + 1,
            RepSpec::Regular(g) => g.order(),
            RepSpec::DirectSum(parts) => parts.iter().map(|(r, m)| m * r.dim()).sum(),
        }
    }

    /// `⊕_{ℓ=0}^{lmax} (2ℓ+1) D^ℓ`: the fiber type of a band-limited SO(3)
    /// coefficient field.
    pub fn so3_fiber(lmax: usize) -> RepSpec {
        RepSpec::DirectSum((0..=lmax).map(|l| (RepSpec::WignerD(l), 2 * l + 1)).collect())
    }

    /// `⊕_{k=0}^{K} ρ_k`: the fiber type of a band-limited SO(2) coefficient field.
    pub fn so2_fiber(max_order: usize) -> RepSpec {
        RepSpec::DirectSum((0..=max_order).map(|k| (RepSpec::So2Irrep(k), 1)).collect())
    }

    pub fn evaluate(&self, g: &Rotation) -> Result<DMatrix<f64>> {
        let need = |d: usize| {
            if g.dim() == d {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected: d, got: g.dim() })
            }
        };
        match self {
            RepSpec::Trivial => Ok(DMatrix::identity(1, 1)),
            RepSpec::Standard(d) => {
                need(*d)?;
                Ok(DMatrix::from_row_slice(*d, *d, &g.matrix()))
            }
            RepSpec::So2Irrep(k) => {
                let theta = g.as_rot2()?.theta();
                if *k == 0 {
                    return Ok(DMatrix::identity(1, 1));
                }
                let (s, c) = (*k as f64 * theta).sin_cos();
                Ok(DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
            }
            RepSpec::WignerD(l) => Ok(wigner_d_real(*l, &g.as_rot3()?)),
            RepSpec::Regular(group) => {
                need(group.dim())?;
                regular_rep(group, group.index_of(g)?)
            }
            RepSpec::DirectSum(parts) => {
                let n = self.dim();
                let mut out = DMatrix::zeros(n, n);
                let mut at = 0;
                for (rep, mult) in parts {
                    let block = rep.evaluate(g)?;
                    let d = block.nrows();
                    for _ in 0..*mult {
                        out.view_mut((at, at), (d, d)).copy_from(&block);
                        at += d;
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            RepSpec::Trivial => json!({"trivial": 1}),
            RepSpec::Standard(d) => json!({"standard": d}),
            RepSpec::So2Irrep(k) => json!({"so2": k}),
            RepSpec::WignerD(l) => json!({"wigner": l}),
            RepSpec::Regular(g) => json!({"regular": g.name().to_string()}),
            RepSpec::DirectSum(parts) => {
                let items: Vec<Value> = parts
                    .iter()
                    .map(|(r, m)| {
                        let mut v = r.to_json();
                        v.as_object_mut().expect("rep json is an object").insert("mult".into(), json!(m));
                        v
                    })
                    .collect();
                json!({ "sum": items })
            }
        }
    }

    pub fn from_json(v: &Value) -> Result<RepSpec> {
        let obj = v.as_object().ok_or_else(|| Error::Format(format!("representation must be an object: {v}")))?;
        let uint = |key: &str| -> Result<usize> {
            obj[key]
                .as_u64()
                .map(|n| n as usize)
                .ok_or_else(|| Error::Format(format!("`{key}` must be a non-negative integer")))
        };
        if obj.contains_key("trivial") {
            Ok(RepSpec::Trivial)
        } else if obj.contains_key("standard") {
            Ok(RepSpec::Standard(uint("standard")?))
        } else if obj.contains_key("so2") {
            Ok(RepSpec::So2Irrep(uint("so2")?))
        } else if obj.contains_key("wigner") {
            Ok(RepSpec::WignerD(uint("wigner")?))
        } else if let Some(name) = obj.get("regular") {
            let name = name.as_str().ok_or_else(|| Error::Format("`regular` must be a group name".into()))?;
            Ok(RepSpec::Regular(FiniteRotationGroup::parse(name)?))
        } else if let Some(items) = obj.get("sum") {
            let items = items.as_array().ok_or_else(|| Error::Format("`sum` must be an array".into()))?;
            items
                .iter()
                .map(|item| {
                    let mult = item.get("mult").and_then(Value::as_u64).unwrap_or(1) as usize;
                    Ok((RepSpec::from_json(item)?, mult))
                })
                .collect::<Result<Vec<_>>>()
                .map(RepSpec::DirectSum)
        } else {
            Err(Error::Format(format!("unknown representation: {v}")))
        }
    }
}

/// Permutation matrix of the regular representation: `ρ(g) e_h = e_{gh}`.
pub fn regular_rep(group: &FiniteRotationGroup, g_index: usize) -> Result<DMatrix<f64>> {
    let m = group.order();
    if g_index >= m {
        return Err(Error::IndexOutOfRange { index: g_index, len: m });
    }
    let mut p = DMatrix::zeros(m, m);
    for h in 0..m {
        p[(group.product(g_index, h), h)] = 1.0;
    }
    Ok(p)
}
