use nalgebra::DMatrix;

use super::RepSpec;
use crate::error::{Error, Result};
use crate::group::FiniteRotationGroup;

const TOL: f64 = 1e-9;

/// Real irreducible type, from the Frobenius–Schur count `Σ χ(g)² / |G|`.
enum RealType {
    /// Absolutely irreducible: commutant is the scalars.
    Real,
    /// Complex type: commutant is spanned by `I` and a complex structure `J`.
    Complex(DMatrix<f64>),
}

fn classify(group: &FiniteRotationGroup, mats: &[DMatrix<f64>]) -> Result<RealType> {
    let m = group.order() as f64;
    let count: f64 = mats.iter().map(|p| p.trace().powi(2)).sum::<f64>() / m;
    let not_irreducible = || Error::NotIrreducible(group.name().to_string());
    if (count - 1.0).abs() < 1e-8 {
        return Ok(RealType::Real);
    }
    if (count - 2.0).abs() > 1e-8 || mats[0].nrows() % 2 != 0 {
        return Err(not_irreducible());
    }
    // Average a fixed probe over the group to land in the commutant, drop
    // the scalar part and check the rest squares to a negative scalar.
    let d = mats[0].nrows();
    let probe = DMatrix::from_fn(d, d, |i, j| ((i * 7 + j * 3 + 1) as f64).sin());
    let mut c = DMatrix::zeros(d, d);
    for p in mats {
        c += p * &probe * p.transpose();
    }
    c /= m;
    let scalar = c.trace() / d as f64;
    for i in 0..d {
        c[(i, i)] -= scalar;
    }
    let sq = &c * &c;
    let mu = -sq.trace() / d as f64;
    let residual = (&sq + DMatrix::identity(d, d) * mu).abs().max();
    if mu <= TOL || residual > 1e-8 * mu.max(1.0) {
        return Err(not_irreducible());
    }
    Ok(RealType::Complex(c / mu.sqrt()))
}

/// Largest deviation of `Σ_g ρ_a(g)_{kk'} ρ_b(g)_{nn'}` from its predicted value.
///
/// For inequivalent irreps the sum vanishes. For the same absolutely
/// irreducible real rep it equals `(|G|/d) δ_{kn} δ_{k'n'}`. Real irreps of
/// complex type (the 2×2 rotation blocks of `C_n`) carry an extra term from
/// their complex structure `J`: `(|G|/d) (δ_{kn} δ_{k'n'} + J_{kn} J_{k'n'})`.
pub fn orthogonality_defect(group: &FiniteRotationGroup, rep_a: &RepSpec, rep_b: &RepSpec) -> Result<f64> {
    let eval_all =
        |rep: &RepSpec| -> Result<Vec<DMatrix<f64>>> { group.elements().iter().map(|g| rep.evaluate(g)).collect() };
    let a = eval_all(rep_a)?;
    let b = eval_all(rep_b)?;
    let type_a = classify(group, &a)?;
    classify(group, &b)?;
    let order = group.order() as f64;
    let (da, db) = (a[0].nrows(), b[0].nrows());

    let same = da == db && a.iter().zip(&b).all(|(x, y)| (x - y).abs().max() < TOL);
    if !same {
        let overlap: f64 = a.iter().zip(&b).map(|(x, y)| x.trace() * y.trace()).sum::<f64>() / order;
        if overlap.abs() > 1e-8 {
            return Err(Error::InvalidArgument(
                "representations are equivalent but realized differently; no fixed expected value".into(),
            ));
        }
    }

    let mut worst: f64 = 0.0;
    for k in 0..da {
        for kp in 0..da {
            for n in 0..db {
                for np in 0..db {
                    let sum: f64 = a.iter().zip(&b).map(|(x, y)| x[(k, kp)] * y[(n, np)]).sum();
                    let expected = if same {
                        let delta = if k == n && kp == np { 1.0 } else { 0.0 };
                        let extra = match &type_a {
                            RealType::Real => 0.0,
                            RealType::Complex(j) => j[(k, n)] * j[(kp, np)],
                        };
                        order / da as f64 * (delta + extra)
                    } else {
                        0.0
                    };
                    worst = worst.max((sum - expected).abs());
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_cyclic_irreps_are_orthogonal() {
        let c8 = FiniteRotationGroup::parse("c8").unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let d = orthogonality_defect(&c8, &RepSpec::So2Irrep(a), &RepSpec::So2Irrep(b)).unwrap();
                assert!(d <= 1e-10, "({a},{b}) defect {d}");
            }
        }
    }

    #[test]
    fn trivial_on_c2() {
        let c2 = FiniteRotationGroup::parse("c2").unwrap();
        let d = orthogonality_defect(&c2, &RepSpec::Trivial, &RepSpec::Trivial).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn reducible_input_is_rejected() {
        let c8 = FiniteRotationGroup::parse("c8").unwrap();
        // Rot(4θ) on C_8 is ±I: two copies of the sign character.
        assert!(matches!(
            orthogonality_defect(&c8, &RepSpec::So2Irrep(4), &RepSpec::So2Irrep(1)),
            Err(Error::NotIrreducible(_))
        ));
        let o = FiniteRotationGroup::parse("o24").unwrap();
        assert!(orthogonality_defect(&o, &RepSpec::Regular(o.clone()), &RepSpec::Trivial).is_err());
    }

    #[test]
    fn wigner_irreps_of_the_icosahedral_group() {
        // D^0, D^1, D^2 stay irreducible on I_60.
        let i60 = FiniteRotationGroup::parse("i60").unwrap();
        for a in 0..=2 {
            for b in 0..=2 {
                let d = orthogonality_defect(&i60, &RepSpec::WignerD(a), &RepSpec::WignerD(b)).unwrap();
                assert!(d < 1e-9, "({a},{b}) {d}");
            }
        }
    }
}
