//! Real Wigner D-matrices.
//!
//! The complex matrix is built from ZYZ Euler angles as
//! `D_{m'm} = e^{-i m' α} d_{m'm}(β) e^{-i m γ}` with Wigner's closed-form
//! small-d sum, then conjugated into the real spherical-harmonic basis
//! (Condon–Shortley phase, rows and columns ordered `m = -ℓ..=ℓ`). In that
//! basis `D¹(g) = B · R(g) · Bᵀ` where `B` is [`WIGNER1_BASIS`].

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::group::Rot3;

/// Highest order with a well-conditioned closed-form small-d sum in `f64`.
pub const MAX_WIGNER_ORDER: usize = 16;

/// Maps Cartesian `(x, y, z)` to the real `ℓ = 1` basis order `(y, z, x)`.
pub const WIGNER1_BASIS: [[f64; 3]; 3] = [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]];

fn factorials() -> [f64; 2 * MAX_WIGNER_ORDER + 2] {
    let mut f = [1.0; 2 * MAX_WIGNER_ORDER + 2];
    for i in 1..f.len() {
        f[i] = f[i - 1] * i as f64;
    }
    f
}

/// Small-d matrix `d^ℓ_{m'm}(β)`, indexed `[m' + ℓ][m + ℓ]`.
pub fn small_d(l: usize, beta: f64) -> DMatrix<f64> {
    assert!(l <= MAX_WIGNER_ORDER, "Wigner order {l} exceeds {MAX_WIGNER_ORDER}");
    let fact = factorials();
    let n = 2 * l + 1;
    let li = l as i64;
    let (s, c) = (0.5 * beta).sin_cos();
    let mut d = DMatrix::zeros(n, n);
    for mp in -li..=li {
        for m in -li..=li {
            let pre = (fact[(li + mp) as usize]
                * fact[(li - mp) as usize]
                * fact[(li + m) as usize]
                * fact[(li - m) as usize])
                .sqrt();
            let k_min = 0.max(m - mp);
            let k_max = (li + m).min(li - mp);
            let mut acc = 0.0;
            for k in k_min..=k_max {
                let denom = fact[(li + m - k) as usize]
                    * fact[k as usize]
                    * fact[(mp - m + k) as usize]
                    * fact[(li - mp - k) as usize];
                let sign = if (mp - m + k) % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * c.powi((2 * li + m - mp - 2 * k) as i32) * s.powi((mp - m + 2 * k) as i32) / denom;
            }
            d[((mp + li) as usize, (m + li) as usize)] = pre * acc;
        }
    }
    d
}

/// Complex-to-real change of basis `U`, rows = real index, columns = complex index.
fn real_basis(l: usize) -> DMatrix<Complex64> {
    let n = 2 * l + 1;
    let li = l as i64;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for m in -li..=li {
        let row = (m + li) as usize;
        let parity = if m.abs() % 2 == 0 { 1.0 } else { -1.0 };
        if m > 0 {
            u[(row, (li - m) as usize)] = Complex64::new(h, 0.0);
            u[(row, (li + m) as usize)] = Complex64::new(parity * h, 0.0);
        } else if m < 0 {
            u[(row, (li + m) as usize)] = Complex64::new(0.0, h);
            u[(row, (li - m) as usize)] = Complex64::new(0.0, -parity * h);
        } else {
            u[(row, li as usize)] = Complex64::new(1.0, 0.0);
        }
    }
    u
}

/// Real Wigner D-matrix of order `l` at `g`.
pub fn wigner_d_real(l: usize, g: &Rot3) -> DMatrix<f64> {
    if l == 0 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    let (alpha, beta, gamma) = g.to_euler_zyz();
    let d = small_d(l, beta);
    let n = 2 * l + 1;
    let li = l as i64;
    let phase = |m: i64, angle: f64| Complex64::from_polar(1.0, -(m as f64) * angle);
    let complex = DMatrix::from_fn(n, n, |i, j| {
        let mp = i as i64 - li;
        let m = j as i64 - li;
        phase(mp, alpha) * d[(i, j)] * phase(m, gamma)
    });
    let u = real_basis(l);
    let real = u.map(|z| z.conj()) * complex * u.transpose();
    real.map(|z| z.re)
}

/// All blocks `ℓ = 0..=lmax` at `g`.
pub fn wigner_blocks(lmax: usize, g: &Rot3) -> Vec<DMatrix<f64>> {
    (0..=lmax).map(|l| wigner_d_real(l, g)).collect()
}
