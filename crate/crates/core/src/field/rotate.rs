use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{Rotation, RotationSet};

use super::{flat_index, grid3, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RotateMode {
    /// Pure index permutation; fails unless `g` maps the grid onto itself.
    ExactSubgroup,
    /// Multilinear resampling with zeros outside the grid.
    Interpolated,
    /// Exact when possible, interpolated otherwise.
    Auto,
}

/// Rotation matrix acting on the internal `[a0, a1, a2]` axes.
fn internal_matrix(g: &Rotation) -> [[f64; 3]; 3] {
    let m = g.matrix();
    match g {
        Rotation::D2(_) => [[1.0, 0.0, 0.0], [0.0, m[0], m[1]], [0.0, m[2], m[3]]],
        Rotation::D3(_) => [[m[0], m[1], m[2]], [m[3], m[4], m[5]], [m[6], m[7], m[8]]],
    }
}

/// For a grid-exact `g`, returns for each source axis `b` the output axis it
/// reads from and whether it is mirrored: `src_b = x_{π(b)}` or
/// `s_b − 1 − x_{π(b)}`.
pub fn grid_exact(shape: &[usize], g: &Rotation) -> Option<[(usize, bool); 3]> {
    if g.dim() != shape.len() {
        return None;
    }
    let s = grid3(shape);
    let m = internal_matrix(g);
    let mut map = [(0, false); 3];
    for b in 0..3 {
        // row b of R⁻¹ = column b of R
        let mut found = None;
        for a in 0..3 {
            let v = m[a][b];
            if (v.abs() - 1.0).abs() < 1e-9 {
                if found.is_some() {
                    return None;
                }
                found = Some((a, v < 0.0));
            } else if v.abs() > 1e-9 {
                return None;
            }
        }
        let (a, flip) = found?;
        if s[a] != s[b] {
            return None;
        }
        map[b] = (a, flip);
    }
    Some(map)
}

/// `(β(g)f)(x) = f(ρ₁(g)⁻¹x)` about the grid center `(s−1)/2`.
pub fn rotate_field(f: &ScalarField, g: &Rotation, mode: RotateMode) -> Result<ScalarField> {
    if g.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: g.dim() });
    }
    let exact = grid_exact(f.shape(), g);
    match (mode, exact) {
        (RotateMode::ExactSubgroup, None) => Err(Error::NotGridExact),
        (RotateMode::ExactSubgroup | RotateMode::Auto, Some(map)) => Ok(permute(f, &map)),
        _ => Ok(interpolate(f, g)),
    }
}

fn permute(f: &ScalarField, map: &[(usize, bool); 3]) -> ScalarField {
    let s = f.grid3();
    let c = f.channels();
    let src = f.data();
    let mut out = vec![0.0; src.len()];
    let mut x = [0usize; 3];
    let mut at = 0;
    for x0 in 0..s[0] {
        x[0] = x0;
        for x1 in 0..s[1] {
            x[1] = x1;
            for x2 in 0..s[2] {
                x[2] = x2;
                let mut y = [0usize; 3];
                for b in 0..3 {
                    let (a, flip) = map[b];
                    y[b] = if flip { s[b] - 1 - x[a] } else { x[a] };
                }
                let si = flat_index(&s, &y) * c;
                out[at..at + c].copy_from_slice(&src[si..si + c]);
                at += c;
            }
        }
    }
    f.with_data(c, out)
}

fn interpolate(f: &ScalarField, g: &Rotation) -> ScalarField {
    let s = f.grid3();
    let c = f.channels();
    let m = internal_matrix(g);
    let center = s.map(|n| (n as f64 - 1.0) / 2.0);
    let src = f.data();
    let mut out = vec![0.0; src.len()];
    let plane = s[1] * s[2] * c;
    out.par_chunks_mut(plane).enumerate().for_each(|(x0, slab)| {
        let mut at = 0;
        for x1 in 0..s[1] {
            for x2 in 0..s[2] {
                let d = [x0 as f64 - center[0], x1 as f64 - center[1], x2 as f64 - center[2]];
                // p = R⁻¹ d + center, with R⁻¹ = Rᵀ
                let p: [f64; 3] = std::array::from_fn(|b| m[0][b] * d[0] + m[1][b] * d[1] + m[2][b] * d[2] + center[b]);
                sample(src, &s, c, p, &mut slab[at..at + c]);
                at += c;
            }
        }
    });
    f.with_data(c, out)
}

/// Trilinear read at continuous index `p`, zero outside.
fn sample(src: &[f64], s: &[usize; 3], c: usize, p: [f64; 3], out: &mut [f64]) {
    // per axis, the in-grid taps with nonzero weight
    let mut taps = [[(0usize, 0.0f64); 2]; 3];
    let mut n = [0usize; 3];
    for a in 0..3 {
        // floor by truncation, then snap near-integers so exact positions
        // never touch a neighbor
        let mut fl = p[a] as isize;
        if fl as f64 > p[a] {
            fl -= 1;
        }
        let mut t = p[a] - fl as f64;
        if t < 1e-12 {
            t = 0.0;
        } else if t > 1.0 - 1e-12 {
            fl += 1;
            t = 0.0;
        }
        for (j, w) in [(fl, 1.0 - t), (fl + 1, t)] {
            if w != 0.0 && j >= 0 && (j as usize) < s[a] {
                taps[a][n[a]] = (j as usize, w);
                n[a] += 1;
            }
        }
    }
    for &(i0, w0) in &taps[0][..n[0]] {
        for &(i1, w1) in &taps[1][..n[1]] {
            let w01 = w0 * w1;
            let row = (i0 * s[1] + i1) * s[2];
            for &(i2, w2) in &taps[2][..n[2]] {
                let w = w01 * w2;
                let si = (row + i2) * c;
                for (o, v) in out.iter_mut().zip(&src[si..si + c]) {
                    *o += w * v;
                }
            }
        }
    }
}

/// Zero-padded window of odd `size` centered on `center`.
pub fn crop(o: &ScalarField, center: &[usize], size: &[usize]) -> Result<ScalarField> {
    if size.len() != o.dim() || center.len() != o.dim() {
        return Err(Error::DimensionMismatch { expected: o.dim(), got: size.len() });
    }
    if size.iter().any(|s| s % 2 == 0) {
        return Err(Error::EvenCrop(size.to_vec()));
    }
    let c = o.channels();
    let start: Vec<isize> = center.iter().zip(size).map(|(&m, &s)| m as isize - (s as isize - 1) / 2).collect();
    let origin: Vec<f64> = start.iter().zip(o.origin()).map(|(&i, x)| x + i as f64 * o.cell_size()).collect();
    let mut out = ScalarField::zeros(size, o.cell_size(), &origin, c)?;
    let n = out.cell_count();
    for flat in 0..n {
        let cell = out.cell_of(flat);
        let src: Vec<isize> = cell.iter().zip(&start).map(|(&i, &s)| i as isize + s).collect();
        if o.contains(&src) {
            let src: Vec<usize> = src.iter().map(|&v| v as usize).collect();
            let si = o.flat_index(&src) * c;
            out.data_mut()[flat * c..(flat + 1) * c].copy_from_slice(&o.data()[si..si + c]);
        }
    }
    Ok(out)
}

/// `L↑[f](x) = (f(g_1⁻¹x), …, f(g_m⁻¹x))`: channel block `i` holds the
/// rotation by `g_i`, exact whenever `g_i` permutes the grid.
pub fn lift(f: &ScalarField, set: &RotationSet) -> Result<ScalarField> {
    if set.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: set.dim() });
    }
    let rotated: Vec<ScalarField> =
        set.rotations().par_iter().map(|g| rotate_field(f, g, RotateMode::Auto)).collect::<Result<_>>()?;
    let c = f.channels();
    let m = set.len();
    let mut data = vec![0.0; f.data().len() * m];
    for (cell, dst) in data.chunks_exact_mut(c * m).enumerate() {
        for (i, r) in rotated.iter().enumerate() {
            dst[i * c..(i + 1) * c].copy_from_slice(&r.data()[cell * c..(cell + 1) * c]);
        }
    }
    Ok(f.with_data(c * m, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{FiniteRotationGroup, GroupName, Rot2, Rot3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn random_field(shape: &[usize], channels: usize, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = shape.iter().product::<usize>() * channels;
        let origin = vec![0.0; shape.len()];
        ScalarField::new(shape, 1.0, &origin, channels, (0..n).map(|_| rng.gen()).collect()).unwrap()
    }

    #[test]
    fn identity_is_noop() {
        let f = random_field(&[5, 6, 7], 2, 1);
        for mode in [RotateMode::ExactSubgroup, RotateMode::Interpolated] {
            assert_eq!(rotate_field(&f, &Rotation::identity(3), mode).unwrap(), f);
        }
    }

    #[test]
    fn quarter_turn_2d() {
        let f = random_field(&[5, 5], 1, 2);
        let g: Rotation = Rot2::new(FRAC_PI_2).into();
        let r = rotate_field(&f, &g, RotateMode::ExactSubgroup).unwrap();
        // out(x, y) = f(R⁻¹(x, y)) = f(y, −x) about the center
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(r.get(&[i, j], 0), f.get(&[j, 4 - i], 0));
            }
        }
        let mut h = f.clone();
        for _ in 0..4 {
            h = rotate_field(&h, &g, RotateMode::ExactSubgroup).unwrap();
        }
        assert_eq!(h, f);
        let interp = rotate_field(&f, &g, RotateMode::Interpolated).unwrap();
        assert!(interp.distance(&r) < 1e-12);
    }

    #[test]
    fn non_exact_rejected() {
        let f = random_field(&[5, 5], 1, 3);
        let g: Rotation = Rot2::new(0.3).into();
        assert!(matches!(rotate_field(&f, &g, RotateMode::ExactSubgroup), Err(Error::NotGridExact)));
        let wide = random_field(&[5, 7], 1, 3);
        let q: Rotation = Rot2::new(FRAC_PI_2).into();
        assert!(matches!(rotate_field(&wide, &q, RotateMode::ExactSubgroup), Err(Error::NotGridExact)));
    }

    #[test]
    fn octahedral_permutations_match_interpolation() {
        let f = random_field(&[5, 5, 5], 1, 4);
        let o24 = FiniteRotationGroup::new(GroupName::Octahedral).unwrap();
        for g in o24.elements() {
            let a = rotate_field(&f, g, RotateMode::ExactSubgroup).unwrap();
            let b = rotate_field(&f, g, RotateMode::Interpolated).unwrap();
            assert!(a.distance(&b) < 1e-9);
        }
    }

    #[test]
    fn crop_pads_with_zeros() {
        let f = ScalarField::new(&[4, 4], 0.5, &[1.0, 1.0], 1, vec![1.0; 16]).unwrap();
        let c = crop(&f, &[0, 0], &[3, 3]).unwrap();
        assert_eq!(c.origin(), &[0.5, 0.5]);
        assert_eq!(c.get(&[0, 0], 0), 0.0);
        assert_eq!(c.get(&[1, 1], 0), 1.0);
        assert_eq!(c.data().iter().sum::<f64>(), 4.0);
        assert!(matches!(crop(&f, &[1, 1], &[2, 3]), Err(Error::EvenCrop(_))));
    }

    #[test]
    fn lift_blocks_are_rotations() {
        let f = random_field(&[7, 7], 2, 5);
        let set = RotationSet::subgroup(&FiniteRotationGroup::new(GroupName::Cyclic(4)).unwrap());
        let l = lift(&f, &set).unwrap();
        assert_eq!(l.channels(), 8);
        for (i, g) in set.rotations().iter().enumerate() {
            let r = rotate_field(&f, g, RotateMode::ExactSubgroup).unwrap();
            for ch in 0..2 {
                assert_eq!(l.channel(2 * i + ch).unwrap(), r.channel(ch).unwrap());
            }
        }
    }

    #[test]
    fn interpolated_rotation_composes() {
        let f = random_field(&[9, 9, 9], 1, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = Rot3::random(&mut rng);
        let o24 = FiniteRotationGroup::new(GroupName::Octahedral).unwrap();
        let g = o24.element(5);
        // rotating by an exact element after a continuous one equals rotating by the product
        let lhs = rotate_field(&rotate_field(&f, &a.into(), RotateMode::Interpolated).unwrap(), &g, RotateMode::Auto)
            .unwrap();
        let rhs = rotate_field(&f, &g.compose(&a.into()), RotateMode::Interpolated).unwrap();
        assert!(lhs.distance(&rhs) < 1e-9 * f.norm());
    }
}
