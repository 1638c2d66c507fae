use crate::error::{Error, Result};
use crate::group::{Rotation, RotationSet};
use crate::harmonic::Coefficients;

/// Samples of `h ↦ f(g⁻¹ h)` on the same set.
///
/// Uses an index permutation when the set is closed under left
/// multiplication by `g`; otherwise re-synthesizes from `fallback`.
pub fn act_left(set: &RotationSet, values: &[f64], g: &Rotation, fallback: Option<&Coefficients>) -> Result<Vec<f64>> {
    check_len(set, values)?;
    // f(g⁻¹ h_i) = values[j] where h_j = g⁻¹ h_i
    let g_inv = g.inverse();
    if let Some(perm) = set.left_permutation(&g_inv) {
        return Ok(perm.iter().map(|&j| values[j]).collect());
    }
    match fallback {
        Some(c) => Ok(c.act_left(g)?.synthesize(set)),
        None => Err(Error::NotClosed),
    }
}

/// Samples of `h ↦ f(h g⁻¹)` on the same set.
pub fn act_right(set: &RotationSet, values: &[f64], g: &Rotation, fallback: Option<&Coefficients>) -> Result<Vec<f64>> {
    check_len(set, values)?;
    let g_inv = g.inverse();
    if let Some(perm) = set.right_permutation(&g_inv) {
        return Ok(perm.iter().map(|&j| values[j]).collect());
    }
    match fallback {
        Some(c) => Ok(c.act_right(g)?.synthesize(set)),
        None => Err(Error::NotClosed),
    }
}

fn check_len(set: &RotationSet, values: &[f64]) -> Result<()> {
    if set.len() != values.len() {
        return Err(Error::ShapeMismatch(format!("{} samples for a set of {} rotations", values.len(), set.len())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{FiniteRotationGroup, Rot2};
    use std::f64::consts::PI;

    #[test]
    fn identity_leaves_values() {
        let set = RotationSet::subgroup(&FiniteRotationGroup::parse("c4").unwrap());
        let v = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(act_left(&set, &v, &Rotation::identity(2), None).unwrap(), v);
        assert_eq!(act_right(&set, &v, &Rotation::identity(2), None).unwrap(), v);
    }

    #[test]
    fn quarter_turn_shifts_cyclically() {
        let set = RotationSet::subgroup(&FiniteRotationGroup::parse("c4").unwrap());
        let v = vec![1.0, 2.0, 3.0, 4.0];
        let g = Rotation::D2(Rot2::new(PI / 2.0));
        // f(g⁻¹ h_i) = f(h_{i-1})
        assert_eq!(act_left(&set, &v, &g, None).unwrap(), vec![4.0, 1.0, 2.0, 3.0]);
        assert_eq!(act_right(&set, &v, &g, None).unwrap(), vec![4.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn left_and_right_commute_on_subgroups() {
        let g = FiniteRotationGroup::parse("o24").unwrap();
        let set = RotationSet::subgroup(&g);
        let v: Vec<f64> = (0..24).map(|i| (i as f64 * 1.7).sin()).collect();
        for a in [3usize, 11, 17] {
            for b in [5usize, 9, 22] {
                let (ga, gb) = (g.element(a), g.element(b));
                let lr = act_left(&set, &act_right(&set, &v, &ga, None).unwrap(), &gb, None).unwrap();
                let rl = act_right(&set, &act_left(&set, &v, &gb, None).unwrap(), &ga, None).unwrap();
                assert_eq!(lr, rl);
            }
        }
    }

    #[test]
    fn open_set_without_fallback_fails() {
        let set = RotationSet::low_discrepancy(3, 50, 0).unwrap();
        let v = vec![0.0; 50];
        let g = FiniteRotationGroup::parse("o24").unwrap().element(5);
        assert!(matches!(act_left(&set, &v, &g, None), Err(Error::NotClosed)));
        assert!(act_right(&set, &v[..10], &g, None).is_err());
    }
}
