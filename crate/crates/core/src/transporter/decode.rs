use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FourierField;
use crate::group::{Rotation, RotationSet};
use crate::harmonic::Synthesis;

/// Fixed block size for reductions, so sums do not depend on the thread count.
const CHUNK: usize = 1 << 14;

/// Scores over (cell, rotation) pairs, stored cell-major.
#[derive(Clone, Debug)]
pub struct PoseDistribution {
    pub shape: Vec<usize>,
    pub origin: Vec<f64>,
    pub cell_size: f64,
    pub rotations: RotationSet,
    pub scores: Vec<f64>,
    pub normalized: bool,
}

/// A decoded pose: translation as a cell plus its world position, and a rotation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Action {
    pub cell: Vec<usize>,
    pub world: Vec<f64>,
    pub rotation: Rotation,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionSummary {
    pub cells: usize,
    pub rotations: usize,
    pub max_score: f64,
    pub entropy: f64,
    pub argmax_cell: Vec<usize>,
    pub argmax_rotation: usize,
}

impl PoseDistribution {
    pub fn cell_count(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn score(&self, flat_cell: usize, rotation: usize) -> f64 {
        self.scores[flat_cell * self.rotations.len() + rotation]
    }

    pub fn world(&self, cell: &[usize]) -> Vec<f64> {
        cell.iter().zip(&self.origin).map(|(&i, o)| o + i as f64 * self.cell_size).collect()
    }

    /// Joint softmax over every (cell, rotation) pair.
    pub fn normalize(mut self) -> Result<Self> {
        if self.scores.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if self.normalized {
            return Ok(self);
        }
        let max = self
            .scores
            .par_chunks(CHUNK)
            .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect::<Vec<_>>()
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let partial: Vec<f64> = self
            .scores
            .par_chunks_mut(CHUNK)
            .map(|c| {
                let mut s = 0.0;
                for v in c.iter_mut() {
                    *v = (*v - max).exp();
                    s += *v;
                }
                s
            })
            .collect();
        let total: f64 = partial.iter().sum();
        self.scores.par_chunks_mut(CHUNK).for_each(|c| c.iter_mut().for_each(|v| *v /= total));
        self.normalized = true;
        Ok(self)
    }

    /// Index of the largest score; ties go to the lowest flat index, which
    /// orders by cell first and rotation second.
    pub fn argmax_index(&self) -> Result<usize> {
        if self.scores.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        let best = self
            .scores
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(k, c)| {
                let mut bi = 0;
                for (i, v) in c.iter().enumerate() {
                    if *v > c[bi] {
                        bi = i;
                    }
                }
                (k * CHUNK + bi, c[bi])
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        Ok(best.0)
    }

    /// Gap between the best score and the best score at any other pose.
    pub fn margin(&self) -> f64 {
        let Ok(top) = self.argmax_index() else {
            return 0.0;
        };
        let second = self
            .scores
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != top)
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        self.scores[top] - second
    }

    pub fn summary(&self) -> Result<DistributionSummary> {
        let top = self.argmax_index()?;
        let m = self.rotations.len();
        let entropy = if self.normalized {
            -self.scores.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
        } else {
            f64::NAN
        };
        Ok(DistributionSummary {
            cells: self.cell_count(),
            rotations: m,
            max_score: self.scores[top],
            entropy,
            argmax_cell: crate::field::unflatten(&self.shape, top / m),
            argmax_rotation: top % m,
        })
    }
}

/// Evaluates the logits on `set` at every cell and normalizes jointly.
pub fn decode_coarse(logits: &FourierField, set: &RotationSet) -> Result<PoseDistribution> {
    let synthesis = Synthesis::new(set, logits.fiber())?;
    decode_with(logits, set, &synthesis)?.normalize()
}

/// Unnormalized per-cell synthesis of channel 0.
pub(crate) fn decode_with(logits: &FourierField, set: &RotationSet, synthesis: &Synthesis) -> Result<PoseDistribution> {
    if logits.channels() != 1 {
        return Err(Error::ChannelMismatch { expected: 1, got: logits.channels() });
    }
    let m = set.len();
    let n = logits.fiber().len();
    let mut scores = vec![0.0; logits.cell_count() * m];
    scores
        .par_chunks_mut(m)
        .zip(logits.data().par_chunks(n))
        .for_each(|(dst, coeffs)| synthesis.apply_into(coeffs, dst));
    Ok(PoseDistribution {
        shape: logits.shape().to_vec(),
        origin: logits.origin().to_vec(),
        cell_size: logits.cell_size(),
        rotations: set.clone(),
        scores,
        normalized: false,
    })
}

pub fn argmax_action(p: &PoseDistribution) -> Result<Action> {
    let top = p.argmax_index()?;
    let m = p.rotations.len();
    let cell = crate::field::unflatten(&p.shape, top / m);
    Ok(Action { world: p.world(&cell), cell, rotation: p.rotations.get(top % m), score: p.scores[top] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::Fiber;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field(data: Vec<f64>, shape: &[usize], fiber: Fiber) -> FourierField {
        FourierField::new(shape, 0.01, &vec![0.0; shape.len()], fiber, 1, data).unwrap()
    }

    #[test]
    fn zero_logits_are_uniform() {
        let fiber = Fiber::So3 { lmax: 1 };
        let set = RotationSet::low_discrepancy(3, 12, 0).unwrap();
        let p = decode_coarse(&field(vec![0.0; 8 * 10], &[2, 2, 2], fiber), &set).unwrap();
        for s in &p.scores {
            assert!((s - 1.0 / 96.0).abs() < 1e-15);
        }
    }

    #[test]
    fn invariant_spike_concentrates_on_one_cell() {
        let fiber = Fiber::So2 { max_order: 2 };
        let set = RotationSet::low_discrepancy(2, 8, 0).unwrap();
        let mut data = vec![0.0; 9 * 5];
        data[4 * 5] = 50.0;
        let p = decode_coarse(&field(data, &[3, 3], fiber), &set).unwrap();
        let on: f64 = (0..8).map(|i| p.score(4, i)).sum();
        assert!(on > 0.999);
        for i in 1..8 {
            assert!((p.score(4, i) - p.score(4, 0)).abs() < 1e-15);
        }
    }

    #[test]
    fn sums_to_one_and_argmax_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let fiber = Fiber::So3 { lmax: 2 };
        let data: Vec<f64> = (0..5 * 4 * 3 * 35).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let set = RotationSet::low_discrepancy(3, 50, 1).unwrap();
        let p = decode_coarse(&field(data, &[5, 4, 3], fiber), &set).unwrap();
        assert!((p.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let mut best = 0;
        for (i, v) in p.scores.iter().enumerate() {
            if *v > p.scores[best] {
                best = i;
            }
        }
        assert_eq!(p.argmax_index().unwrap(), best);
        let a = argmax_action(&p).unwrap();
        assert_eq!(a.rotation, set.get(best % 50));
        assert_eq!(a.world, p.world(&a.cell));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let set = RotationSet::low_discrepancy(2, 2, 0).unwrap();
        let p = PoseDistribution {
            shape: vec![2, 1],
            origin: vec![0.0, 0.0],
            cell_size: 1.0,
            rotations: set,
            scores: vec![0.1, 0.4, 0.4, 0.1],
            normalized: true,
        };
        assert_eq!(p.argmax_index().unwrap(), 1);
        let a = argmax_action(&p).unwrap();
        assert_eq!(a.cell, vec![0, 0]);
    }
}
