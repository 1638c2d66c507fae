//! Same-size, zero-padded spatial cross-correlation:
//! `out_j(x) = Σ_c Σ_y K_{c,j}(y) f_c(x + y − h)`, with `h = (k − 1)/2` the
//! kernel center. Kernels carry `c_in · J` channels indexed `c·J + j`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::ScalarField;

fn check(kernel: &ScalarField, c_in: usize, signal: &ScalarField) -> Result<usize> {
    signal.check_compatible(kernel)?;
    if signal.channels() != c_in {
        return Err(Error::ChannelMismatch { expected: c_in, got: signal.channels() });
    }
    if c_in == 0 || kernel.channels() % c_in != 0 {
        return Err(Error::ChannelMismatch { expected: c_in, got: kernel.channels() });
    }
    if kernel.shape().iter().any(|s| s % 2 == 0) {
        return Err(Error::EvenCrop(kernel.shape().to_vec()));
    }
    Ok(kernel.channels() / c_in)
}

/// Smallest `n ≥ lo` whose prime factors are all 2, 3 or 5.
fn fast_len(lo: usize) -> usize {
    (lo.max(1)..)
        .find(|&n| {
            let mut m = n;
            for p in [2, 3, 5] {
                while m % p == 0 {
                    m /= p;
                }
            }
            m == 1
        })
        .expect("unbounded search")
}

struct Fft3 {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    fn new(dims: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 {
            dims,
            forward: dims.map(|n| planner.plan_fft_forward(n)),
            inverse: dims.map(|n| planner.plan_fft_inverse(n)),
        }
    }

    fn len(&self) -> usize {
        self.dims.iter().product()
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let plans = if inverse { &self.inverse } else { &self.forward };
        let [p0, p1, p2] = self.dims;
        if p2 > 1 {
            plans[2].process(data);
        }
        let mut line = vec![Complex64::default(); p0.max(p1)];
        if p1 > 1 {
            for a in 0..p0 {
                for c in 0..p2 {
                    for b in 0..p1 {
                        line[b] = data[(a * p1 + b) * p2 + c];
                    }
                    plans[1].process(&mut line[..p1]);
                    for b in 0..p1 {
                        data[(a * p1 + b) * p2 + c] = line[b];
                    }
                }
            }
        }
        if p0 > 1 {
            for b in 0..p1 {
                for c in 0..p2 {
                    for a in 0..p0 {
                        line[a] = data[(a * p1 + b) * p2 + c];
                    }
                    plans[0].process(&mut line[..p0]);
                    for a in 0..p0 {
                        data[(a * p1 + b) * p2 + c] = line[a];
                    }
                }
            }
        }
    }

    /// Zero-padded transform of channel `ch` of an interleaved grid.
    fn transform_channel(&self, src: &[f64], shape: [usize; 3], channels: usize, ch: usize) -> Vec<Complex64> {
        let [_, p1, p2] = self.dims;
        let mut buf = vec![Complex64::default(); self.len()];
        for a in 0..shape[0] {
            for b in 0..shape[1] {
                for c in 0..shape[2] {
                    let v = src[((a * shape[1] + b) * shape[2] + c) * channels + ch];
                    buf[(a * p1 + b) * p2 + c] = Complex64::new(v, 0.0);
                }
            }
        }
        self.run(&mut buf, false);
        buf
    }
}

/// FFT-based correlation; output has `J` channels over the signal grid.
pub fn correlate_fft(kernel: &ScalarField, c_in: usize, signal: &ScalarField) -> Result<ScalarField> {
    let j_count = check(kernel, c_in, signal)?;
    let n = signal.grid3();
    let k = kernel.grid3();
    let h = k.map(|s| (s - 1) / 2);
    let dims: [usize; 3] =
        std::array::from_fn(|a| if n[a] == 1 && k[a] == 1 { 1 } else { fast_len((n[a] + h[a]).max(k[a])) });
    let fft = Fft3::new(dims);
    let signal_hat: Vec<Vec<Complex64>> =
        (0..c_in).into_par_iter().map(|c| fft.transform_channel(signal.data(), n, c_in, c)).collect();
    let scale = 1.0 / fft.len() as f64;
    let outputs: Vec<Vec<f64>> = (0..j_count)
        .into_par_iter()
        .map(|j| {
            let mut acc = vec![Complex64::default(); fft.len()];
            for (c, sh) in signal_hat.iter().enumerate() {
                let kh = fft.transform_channel(kernel.data(), k, kernel.channels(), c * j_count + j);
                for ((a, kv), sv) in acc.iter_mut().zip(&kh).zip(sh) {
                    *a += kv.conj() * sv;
                }
            }
            fft.run(&mut acc, true);
            // out(x) = circular correlation at (x − h) mod P
            let mut out = Vec::with_capacity(n.iter().product());
            for a in 0..n[0] {
                let va = (a + dims[0] - h[0]) % dims[0];
                for b in 0..n[1] {
                    let vb = (b + dims[1] - h[1]) % dims[1];
                    for c in 0..n[2] {
                        let vc = (c + dims[2] - h[2]) % dims[2];
                        out.push(acc[(va * dims[1] + vb) * dims[2] + vc].re * scale);
                    }
                }
            }
            out
        })
        .collect();
    let cells = signal.cell_count();
    let mut data = vec![0.0; cells * j_count];
    for (j, o) in outputs.iter().enumerate() {
        for (cell, v) in o.iter().enumerate() {
            data[cell * j_count + j] = *v;
        }
    }
    Ok(signal.with_data(j_count, data))
}

/// Direct correlation; the trusted reference for [`correlate_fft`].
pub fn correlate_direct(kernel: &ScalarField, c_in: usize, signal: &ScalarField) -> Result<ScalarField> {
    let j_count = check(kernel, c_in, signal)?;
    let n = signal.grid3();
    let cells = signal.cell_count();
    let planes: Vec<Vec<f64>> = (0..j_count)
        .into_par_iter()
        .map(|j| {
            let mut out = vec![0.0; cells];
            for c in 0..c_in {
                let k = kernel.channel(c * j_count + j).expect("channel in range");
                let s = signal.channel(c).expect("channel in range");
                accumulate(&mut out, k.data(), kernel.grid3(), s.data(), n);
            }
            out
        })
        .collect();
    let mut data = vec![0.0; cells * j_count];
    for (j, o) in planes.iter().enumerate() {
        for (cell, v) in o.iter().enumerate() {
            data[cell * j_count + j] = *v;
        }
    }
    Ok(signal.with_data(j_count, data))
}

/// Single-channel direct correlation added into `out` (signal-shaped).
pub(crate) fn accumulate(out: &mut [f64], kernel: &[f64], k: [usize; 3], signal: &[f64], n: [usize; 3]) {
    let h = k.map(|s| ((s - 1) / 2) as isize);
    for y0 in 0..k[0] {
        for y1 in 0..k[1] {
            for y2 in 0..k[2] {
                let w = kernel[(y0 * k[1] + y1) * k[2] + y2];
                if w == 0.0 {
                    continue;
                }
                let d = [y0 as isize - h[0], y1 as isize - h[1], y2 as isize - h[2]];
                // x_a + d_a must land in [0, n_a)
                let lo: [usize; 3] = std::array::from_fn(|a| (-d[a]).max(0) as usize);
                let hi: [usize; 3] = std::array::from_fn(|a| (n[a] as isize - d[a]).clamp(0, n[a] as isize) as usize);
                if (0..3).any(|a| lo[a] >= hi[a]) {
                    continue;
                }
                let len = hi[2] - lo[2];
                for x0 in lo[0]..hi[0] {
                    let s0 = (x0 as isize + d[0]) as usize;
                    for x1 in lo[1]..hi[1] {
                        let s1 = (x1 as isize + d[1]) as usize;
                        let o = (x0 * n[1] + x1) * n[2] + lo[2];
                        let s = (s0 * n[1] + s1) * n[2] + (lo[2] as isize + d[2]) as usize;
                        for (ov, sv) in out[o..o + len].iter_mut().zip(&signal[s..s + len]) {
                            *ov += w * sv;
                        }
                    }
                }
            }
        }
    }
}

/// Correlation evaluated at a single signal cell: one value per kernel channel group.
pub fn correlate_at(kernel: &ScalarField, c_in: usize, signal: &ScalarField, cell: &[usize]) -> Result<Vec<f64>> {
    let j_count = check(kernel, c_in, signal)?;
    if cell.len() != signal.dim() || cell.iter().zip(signal.shape()).any(|(c, s)| c >= s) {
        return Err(Error::InvalidArgument(format!("cell {cell:?} outside grid {:?}", signal.shape())));
    }
    let n = signal.grid3();
    let k = kernel.grid3();
    let x: [isize; 3] = match cell.len() {
        2 => [0, cell[0] as isize, cell[1] as isize],
        _ => [cell[0] as isize, cell[1] as isize, cell[2] as isize],
    };
    let h = k.map(|s| ((s - 1) / 2) as isize);
    let kc = kernel.channels();
    let mut out = vec![0.0; j_count];
    for y0 in 0..k[0] {
        for y1 in 0..k[1] {
            for y2 in 0..k[2] {
                let s = [y0 as isize - h[0] + x[0], y1 as isize - h[1] + x[1], y2 as isize - h[2] + x[2]];
                if (0..3).any(|a| s[a] < 0 || s[a] as usize >= n[a]) {
                    continue;
                }
                let si = ((s[0] as usize * n[1] + s[1] as usize) * n[2] + s[2] as usize) * c_in;
                let ki = ((y0 * k[1] + y1) * k[2] + y2) * kc;
                for c in 0..c_in {
                    let sv = signal.data()[si + c];
                    if sv == 0.0 {
                        continue;
                    }
                    for (o, kv) in out.iter_mut().zip(&kernel.data()[ki + c * j_count..ki + (c + 1) * j_count]) {
                        *o += kv * sv;
                    }
                }
            }
        }
    }
    Ok(out)
}
