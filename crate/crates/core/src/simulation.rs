//! Seeded synthetic rating matrices.
//!
//! Generation scheme (pinned so that fixtures stay reproducible):
//!
//! * The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//!   `seed_from_u64(seed)`. Stream 0 produces the base draws, stream 1 the
//!   noise draws of the noisy-copy model.
//! * Cells are produced row by row, rater by rater.
//! * A categorical draw takes one `f64` in [0, 1) and returns the first
//!   category whose cumulative marginal exceeds it (the last category with a
//!   positive marginal absorbs rounding).
//! * Independent model: every cell is a categorical draw from stream 0.
//! * Perfect copy: one categorical draw per subject from stream 0, shared by
//!   every rater.
//! * Noisy copy: the perfect-copy draw, then for each rater one `f64` from
//!   stream 1; if it is below `flip_prob`, the rater's cell is replaced by a
//!   uniform category chosen with one more stream-1 `f64` (`⌊u·k⌋`).
//!
//! Because noise uses its own stream, a noisy copy with `flip_prob = 0`
//! equals the perfect copy with the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::{Rating, RatingMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Independent,
    PerfectCopy,
    NoisyCopy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaterModel {
    pub kind: ModelKind,
    pub marginals: Vec<f64>,
    pub flip_prob: f64,
    pub seed: u64,
}

impl RaterModel {
    pub fn independent(marginals: Vec<f64>, seed: u64) -> Self {
        Self {
            kind: ModelKind::Independent,
            marginals,
            flip_prob: 0.0,
            seed,
        }
    }

    /// Independent raters choosing uniformly among `k` categories.
    pub fn uniform(k: usize, seed: u64) -> Self {
        Self::independent(vec![1.0 / k as f64; k], seed)
    }

    pub fn perfect_copy(marginals: Vec<f64>, seed: u64) -> Self {
        Self {
            kind: ModelKind::PerfectCopy,
            marginals,
            flip_prob: 0.0,
            seed,
        }
    }

    pub fn noisy_copy(marginals: Vec<f64>, flip_prob: f64, seed: u64) -> Self {
        Self {
            kind: ModelKind::NoisyCopy,
            marginals,
            flip_prob,
            seed,
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        if self.marginals.len() != k {
            return Err(Error::Config(format!(
                "model has {} marginals for {k} categories",
                self.marginals.len()
            )));
        }
        if self.marginals.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::Config("marginals must be non-negative".into()));
        }
        let total: f64 = self.marginals.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("marginals sum to {total}, not 1")));
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return Err(Error::Config(format!(
                "flip probability {} outside [0, 1]",
                self.flip_prob
            )));
        }
        Ok(())
    }
}

struct Categorical {
    cumulative: Vec<f64>,
    last: usize,
}

impl Categorical {
    fn new(marginals: &[f64]) -> Self {
        let cumulative = marginals
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        let last = marginals.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        Self { cumulative, last }
    }

    fn draw(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .map_or(self.last, |j| j.min(self.last))
    }
}

/// Generates an N × n matrix over k categories under `model`.
pub fn generate(model: &RaterModel, subjects: usize, raters: usize, k: usize) -> Result<RatingMatrix> {
    if subjects == 0 || raters < 2 || k < 2 {
        return Err(Error::Config(format!(
            "need N >= 1, n >= 2, k >= 2; got N={subjects}, n={raters}, k={k}"
        )));
    }
    model.validate(k)?;
    let dist = Categorical::new(&model.marginals);
    let mut base = ChaCha8Rng::seed_from_u64(model.seed);
    let mut noise = ChaCha8Rng::seed_from_u64(model.seed);
    noise.set_stream(1);

    let mut rows: Vec<Vec<Rating>> = Vec::with_capacity(subjects);
    for _ in 0..subjects {
        let row = match model.kind {
            ModelKind::Independent => (0..raters).map(|_| Some(dist.draw(&mut base))).collect(),
            ModelKind::PerfectCopy => vec![Some(dist.draw(&mut base)); raters],
            ModelKind::NoisyCopy => {
                let truth = dist.draw(&mut base);
                (0..raters)
                    .map(|_| {
                        let u: f64 = noise.random();
                        if u < model.flip_prob {
                            let v: f64 = noise.random();
                            Some(((v * k as f64) as usize).min(k - 1))
                        } else {
                            Some(truth)
                        }
                    })
                    .collect()
            }
        };
        rows.push(row);
    }
    RatingMatrix::from_rows(rows, k)
}
