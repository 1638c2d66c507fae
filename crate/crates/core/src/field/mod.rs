//! Feature fields on 2D/3D grids and the operations that move between the
//! base space and the fiber space.
//!
//! All grids are handled internally as 3D: a 2D field of shape `[s0, s1]` is
//! stored as `[1, s0, s1]` and planar rotations act on the last two internal
//! axes. Data is row-major over cells with channels fastest.

mod io;
mod kernel;
mod rotate;

use crate::error::{Error, Result};
use crate::harmonic::Fiber;

pub use io::{read_field, write_field, FieldFile};
pub use kernel::{fiber_fourier, fiber_fourier_with, steerability_defect, SteerableKernel};
pub use rotate::{crop, grid_exact, lift, rotate_field, RotateMode};

/// A grid of trivial-type channels with physical placement.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    dim: usize,
    shape: Vec<usize>,
    cell_size: f64,
    origin: Vec<f64>,
    channels: usize,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn new(shape: &[usize], cell_size: f64, origin: &[f64], channels: usize, data: Vec<f64>) -> Result<Self> {
        let dim = shape.len();
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!("fields are 2D or 3D, got {dim} axes")));
        }
        if origin.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: origin.len() });
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::InvalidArgument(format!("cell size must be positive, got {cell_size}")));
        }
        if shape.contains(&0) || channels == 0 {
            return Err(Error::ShapeMismatch(format!("empty field {shape:?} x {channels}")));
        }
        let want = shape.iter().product::<usize>() * channels;
        if data.len() != want {
            return Err(Error::ShapeMismatch(format!("{} values for {shape:?} x {channels}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field values must be finite".into()));
        }
        Ok(ScalarField { dim, shape: shape.to_vec(), cell_size, origin: origin.to_vec(), channels, data })
    }

    pub fn zeros(shape: &[usize], cell_size: f64, origin: &[f64], channels: usize) -> Result<Self> {
        let n = shape.iter().product::<usize>() * channels;
        Self::new(shape, cell_size, origin, channels, vec![0.0; n])
    }

    /// Field centered on the world origin.
    pub fn centered(shape: &[usize], cell_size: f64, channels: usize) -> Result<Self> {
        let origin: Vec<f64> = shape.iter().map(|&s| -(s as f64 - 1.0) / 2.0 * cell_size).collect();
        Self::zeros(shape, cell_size, &origin, channels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn cell_count(&self) -> usize {
        self.shape.iter().product()
    }

    pub(crate) fn grid3(&self) -> [usize; 3] {
        grid3(&self.shape)
    }

    /// Flat cell index of a multi-index.
    pub fn flat_index(&self, cell: &[usize]) -> usize {
        flat_index(&self.shape, cell)
    }

    pub fn cell_of(&self, flat: usize) -> Vec<usize> {
        unflatten(&self.shape, flat)
    }

    pub fn contains(&self, cell: &[isize]) -> bool {
        cell.len() == self.dim && cell.iter().zip(&self.shape).all(|(&c, &s)| c >= 0 && (c as usize) < s)
    }

    /// World coordinates of a cell center: `origin + index · cell_size`.
    pub fn world(&self, cell: &[usize]) -> Vec<f64> {
        cell.iter().zip(&self.origin).map(|(&i, o)| o + i as f64 * self.cell_size).collect()
    }

    /// Nearest cell to a world point (may lie outside the grid).
    pub fn cell_at(&self, world: &[f64]) -> Vec<isize> {
        world.iter().zip(&self.origin).map(|(x, o)| ((x - o) / self.cell_size).round() as isize).collect()
    }

    pub fn get(&self, cell: &[usize], channel: usize) -> f64 {
        self.data[self.flat_index(cell) * self.channels + channel]
    }

    pub fn set(&mut self, cell: &[usize], channel: usize, value: f64) {
        let i = self.flat_index(cell) * self.channels + channel;
        self.data[i] = value;
    }

    /// A single channel as its own field.
    pub fn channel(&self, c: usize) -> Result<ScalarField> {
        if c >= self.channels {
            return Err(Error::IndexOutOfRange { index: c, len: self.channels });
        }
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        Ok(self.with_data(1, data))
    }

    /// Same geometry, new channel count and values.
    pub(crate) fn with_data(&self, channels: usize, data: Vec<f64>) -> ScalarField {
        debug_assert_eq!(data.len(), self.cell_count() * channels);
        ScalarField {
            dim: self.dim,
            shape: self.shape.clone(),
            cell_size: self.cell_size,
            origin: self.origin.clone(),
            channels,
            data,
        }
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖self − other‖₂`; panics on shape mismatch.
    pub fn distance(&self, other: &ScalarField) -> f64 {
        assert_eq!(self.shape, other.shape);
        assert_eq!(self.channels, other.channels);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Translates the contents by whole cells, filling with zeros.
    pub fn shifted(&self, offset: &[isize]) -> ScalarField {
        let mut out = self.with_data(self.channels, vec![0.0; self.data.len()]);
        let c = self.channels;
        for flat in 0..self.cell_count() {
            let cell = self.cell_of(flat);
            let src: Vec<isize> = cell.iter().zip(offset).map(|(&i, &o)| i as isize - o).collect();
            if self.contains(&src) {
                let s: Vec<usize> = src.iter().map(|&v| v as usize).collect();
                let si = self.flat_index(&s);
                out.data[flat * c..(flat + 1) * c].copy_from_slice(&self.data[si * c..(si + 1) * c]);
            }
        }
        out
    }

    pub fn check_compatible(&self, other: &ScalarField) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if (self.cell_size - other.cell_size).abs() > 1e-12 * self.cell_size {
            return Err(Error::CellSizeMismatch(self.cell_size, other.cell_size));
        }
        Ok(())
    }
}

/// A grid of band-limited functions on SO(d): every cell holds `channels`
/// coefficient vectors laid out by `fiber`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierField {
    shape: Vec<usize>,
    cell_size: f64,
    origin: Vec<f64>,
    fiber: Fiber,
    channels: usize,
    data: Vec<f64>,
}

impl FourierField {
    pub fn new(
        shape: &[usize],
        cell_size: f64,
        origin: &[f64],
        fiber: Fiber,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if shape.len() != fiber.dim() {
            return Err(Error::DimensionMismatch { expected: fiber.dim(), got: shape.len() });
        }
        let want = shape.iter().product::<usize>() * channels * fiber.len();
        if data.len() != want {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {shape:?} cells x {channels} x {} coefficients",
                data.len(),
                fiber.len()
            )));
        }
        Ok(FourierField { shape: shape.to_vec(), cell_size, origin: origin.to_vec(), fiber, channels, data })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn fiber(&self) -> Fiber {
        self.fiber
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn cell_count(&self) -> usize {
        self.shape.iter().product()
    }

    /// Values per cell: `channels · fiber.len()`.
    pub fn stride(&self) -> usize {
        self.channels * self.fiber.len()
    }

    pub fn coeffs(&self, flat_cell: usize, channel: usize) -> &[f64] {
        let n = self.fiber.len();
        let at = flat_cell * self.stride() + channel * n;
        &self.data[at..at + n]
    }

    /// The raw coefficient components as a plain multi-channel field.
    pub fn as_scalar(&self) -> ScalarField {
        ScalarField {
            dim: self.dim(),
            shape: self.shape.clone(),
            cell_size: self.cell_size,
            origin: self.origin.clone(),
            channels: self.stride(),
            data: self.data.clone(),
        }
    }

    pub fn from_scalar(f: ScalarField, fiber: Fiber) -> Result<Self> {
        if f.channels % fiber.len() != 0 {
            return Err(Error::ChannelMismatch { expected: fiber.len(), got: f.channels });
        }
        let channels = f.channels / fiber.len();
        FourierField::new(&f.shape, f.cell_size, &f.origin, fiber, channels, f.data)
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub(crate) fn grid3(shape: &[usize]) -> [usize; 3] {
    match shape.len() {
        2 => [1, shape[0], shape[1]],
        3 => [shape[0], shape[1], shape[2]],
        n => panic!("unsupported grid rank {n}"),
    }
}

pub(crate) fn flat_index(shape: &[usize], cell: &[usize]) -> usize {
    debug_assert_eq!(shape.len(), cell.len());
    cell.iter().zip(shape).fold(0, |acc, (&i, &s)| {
        debug_assert!(i < s);
        acc * s + i
    })
}

pub(crate) fn unflatten(shape: &[usize], mut flat: usize) -> Vec<usize> {
    let mut cell = vec![0; shape.len()];
    for (c, &s) in cell.iter_mut().zip(shape).rev() {
        *c = flat % s;
        flat /= s;
    }
    cell
}
