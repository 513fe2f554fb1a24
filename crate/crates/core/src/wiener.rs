//! Reproducible Brownian increments on dyadic time grids.
//!
//! A [`WienerGrid`] holds the increments `dW_n = W(t_{n+1}) - W(t_n)` of an
//! m-dimensional Wiener process on the uniform grid `t_n = n h`, `h = T/N`,
//! with `N` a power of two. Two properties drive the design:
//!
//! **Reproducibility.** Increments come from a ChaCha12 stream keyed by
//! `(seed, path_index)` via the generator's stream mechanism, so every
//! `(seed, path_index)` pair is an independent substream and regeneration
//! is bit-identical regardless of thread count or platform. Standard
//! normals are produced by the Marsaglia polar method: draw `u, v` uniform
//! on `[-1, 1)` (53-bit uniforms built from `next_u64 >> 11`), accept when
//! `s = u² + v²` lies in `(0, 1)`, and return `u·sqrt(-2 ln s / s)`
//! (the partner value is kept as the next output). Rejection consumes
//! draws only from the same substream, so the sequence is a pure function
//! of `(seed, path_index)`.
//!
//! **Exact coupling across resolutions.** A fine grid is coarsened by
//! summing blocks of increments. Block sums are computed by repeated
//! adjacent-pair addition (a fixed dyadic tree), which makes coarsening by
//! `2^k` bitwise identical to `k` successive coarsenings by 2 and leaves
//! the total `W(T)` bitwise invariant. A strong-convergence study can
//! therefore drive every resolution with literally the same Brownian path.

use std::io::{self, Write};

use rand_chacha::ChaCha12Rng;
use rand_core::{Rng, SeedableRng};
use thiserror::Error;

use crate::linalg::Vector;

/// Errors from grid construction and coarsening.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WienerError {
    #[error("step count must be a positive power of two, got {0}")]
    StepsNotPowerOfTwo(usize),
    #[error("noise dimension must be positive")]
    ZeroNoiseDim,
    #[error("horizon must be positive and finite, got {0}")]
    InvalidHorizon(f64),
    #[error("coarsening factor must be a power of two dividing the step count, got factor {factor} with {steps} steps")]
    InvalidFactor { factor: usize, steps: usize },
}

/// Brownian increments of one sample path on a dyadic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerGrid {
    seed: u64,
    path_index: u64,
    noise_dim: usize,
    steps: usize,
    horizon: f64,
    /// `steps * noise_dim` entries, row-major by time step.
    increments: Vec<f64>,
}

impl WienerGrid {
    /// Samples a fresh path on `steps` uniform intervals of `[0, horizon]`.
    ///
    /// Each increment component is `N(0, horizon/steps)`. The draw is a
    /// pure function of `(seed, path_index)`; see the module docs for the
    /// exact construction.
    ///
    /// # Errors
    /// Rejects a step count that is not a power of two, a zero noise
    /// dimension, and a non-finite or non-positive horizon.
    pub fn generate(
        seed: u64,
        path_index: u64,
        noise_dim: usize,
        steps: usize,
        horizon: f64,
    ) -> Result<Self, WienerError> {
        if steps == 0 || !steps.is_power_of_two() {
            return Err(WienerError::StepsNotPowerOfTwo(steps));
        }
        if noise_dim == 0 {
            return Err(WienerError::ZeroNoiseDim);
        }
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(WienerError::InvalidHorizon(horizon));
        }
        let std = (horizon / steps as f64).sqrt();
        let mut normals = PolarNormals::new(substream(seed, path_index));
        let increments = (0..steps * noise_dim)
            .map(|_| std * normals.next())
            .collect();
        Ok(Self {
            seed,
            path_index,
            noise_dim,
            steps,
            horizon,
            increments,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Grid spacing `horizon / steps`.
    pub fn step_size(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// The increment over `[t_n, t_{n+1})` as a slice of length
    /// `noise_dim`.
    ///
    /// # Panics
    /// Panics if `n >= steps`.
    pub fn increment(&self, n: usize) -> &[f64] {
        assert!(
            n < self.steps,
            "step {n} out of range (steps = {})",
            self.steps
        );
        &self.increments[n * self.noise_dim..(n + 1) * self.noise_dim]
    }

    /// The increment over `[t_n, t_{n+1})` as a [`Vector`].
    ///
    /// # Panics
    /// Panics if `n >= steps`.
    pub fn increment_vec(&self, n: usize) -> Vector {
        Vector::from_slice(self.increment(n))
    }

    /// Merges blocks of `factor` consecutive increments into one, producing
    /// the same path on a grid that is `factor` times coarser.
    ///
    /// Block sums use repeated adjacent-pair addition, so
    /// `w.coarsen(4) == w.coarsen(2).coarsen(2)` holds bitwise and
    /// [`WienerGrid::total`] is exactly invariant.
    ///
    /// # Errors
    /// The factor must be a power of two and at most `steps`.
    pub fn coarsen(&self, factor: usize) -> Result<Self, WienerError> {
        if factor == 0 || !factor.is_power_of_two() || factor > self.steps {
            return Err(WienerError::InvalidFactor {
                factor,
                steps: self.steps,
            });
        }
        let mut out = self.clone();
        let mut remaining = factor;
        while remaining > 1 {
            out.halve();
            remaining /= 2;
        }
        Ok(out)
    }

    /// One adjacent-pair coarsening pass.
    fn halve(&mut self) {
        let m = self.noise_dim;
        let half = self.steps / 2;
        let mut merged = Vec::with_capacity(half * m);
        for n in 0..half {
            let a = &self.increments[2 * n * m..(2 * n + 1) * m];
            let b = &self.increments[(2 * n + 1) * m..(2 * n + 2) * m];
            merged.extend(a.iter().zip(b).map(|(&x, &y)| x + y));
        }
        self.increments = merged;
        self.steps = half;
    }

    /// `W(horizon)`: the sum of all increments, evaluated with the same
    /// dyadic-tree order as [`WienerGrid::coarsen`] so that it is bitwise
    /// invariant under coarsening.
    pub fn total(&self) -> Vector {
        let full = self
            .coarsen(self.steps)
            .expect("steps is a valid coarsening factor");
        full.increment_vec(0)
    }

    /// Writes the grid as CSV with header `t,dW_1,...,dW_m`; row `n` holds
    /// the left endpoint `t_n` and the increment over `[t_n, t_{n+1})`.
    ///
    /// # Errors
    /// Propagates I/O errors from the writer.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "t")?;
        for j in 1..=self.noise_dim {
            write!(out, ",dW_{j}")?;
        }
        writeln!(out)?;
        let h = self.step_size();
        for n in 0..self.steps {
            write!(out, "{}", n as f64 * h)?;
            for v in self.increment(n) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// ChaCha12 generator keyed to `(seed, stream)`; every consumer of
/// randomness in this crate derives its draws from one of these
/// substreams, which is what makes results independent of thread count.
pub(crate) fn substream(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Marsaglia polar transform over a ChaCha stream; see the module docs.
pub(crate) struct PolarNormals {
    rng: ChaCha12Rng,
    spare: Option<f64>,
}

impl PolarNormals {
    pub(crate) fn new(rng: ChaCha12Rng) -> Self {
        Self { rng, spare: None }
    }

    /// 53-bit uniform in `[0, 1)`.
    pub(crate) fn uniform01(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn uniform_signed(&mut self) -> f64 {
        2.0 * self.uniform01() - 1.0
    }

    pub(crate) fn next(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        loop {
            let u = self.uniform_signed();
            let v = self.uniform_signed();
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * factor);
                return u * factor;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            WienerGrid::generate(0, 0, 1, 100, 1.0),
            Err(WienerError::StepsNotPowerOfTwo(100))
        ));
        assert!(WienerGrid::generate(0, 0, 1, 0, 1.0).is_err());
        assert!(WienerGrid::generate(0, 0, 0, 64, 1.0).is_err());
        assert!(WienerGrid::generate(0, 0, 1, 64, 0.0).is_err());
        assert!(WienerGrid::generate(0, 0, 1, 64, f64::NAN).is_err());
    }

    #[test]
    fn regeneration_is_bit_identical() {
        let a = WienerGrid::generate(42, 7, 3, 256, 1.0).unwrap();
        let b = WienerGrid::generate(42, 7, 3, 256, 1.0).unwrap();
        assert_eq!(a, b);
        let c = WienerGrid::generate(42, 8, 3, 256, 1.0).unwrap();
        assert_ne!(a.increments, c.increments);
        let d = WienerGrid::generate(43, 7, 3, 256, 1.0).unwrap();
        assert_ne!(a.increments, d.increments);
    }

    #[test]
    fn increments_match_the_n_0_h_distribution() {
        // one long scalar path; bounds are deterministic for the fixed seed
        let steps = 1 << 17;
        let w = WienerGrid::generate(0, 0, 1, steps, 1.0).unwrap();
        let h = w.step_size();
        let n = steps as f64;
        let mean = w.increments.iter().sum::<f64>() / n;
        let var = w
            .increments
            .iter()
            .map(|&x| (x - mean) * (x - mean))
            .sum::<f64>()
            / (n - 1.0);
        // four standard errors of the mean of N(0, h) samples
        assert!(
            mean.abs() <= 4.0 * (h / n).sqrt(),
            "sample mean {mean:e} outside CLT bound"
        );
        assert!(
            var >= 0.95 * h && var <= 1.05 * h,
            "sample variance {var:e} not within 5% of {h:e}"
        );
    }

    #[test]
    fn coarsening_composes_exactly() {
        let w = WienerGrid::generate(9, 3, 2, 1024, 2.0).unwrap();
        let twice = w.coarsen(2).unwrap().coarsen(2).unwrap();
        let once = w.coarsen(4).unwrap();
        assert_eq!(twice, once);
        let deep = w.coarsen(2).unwrap().coarsen(8).unwrap();
        assert_eq!(deep, w.coarsen(16).unwrap());
    }

    #[test]
    fn coarsening_preserves_the_endpoint_exactly() {
        let w = WienerGrid::generate(5, 11, 3, 512, 1.0).unwrap();
        let total = w.total();
        for factor in [2usize, 8, 64, 512] {
            let c = w.coarsen(factor).unwrap();
            assert_eq!(c.total(), total, "factor {factor}");
            assert_eq!(c.steps(), 512 / factor);
            assert!((c.step_size() - w.step_size() * factor as f64).abs() < 1e-18);
        }
    }

    #[test]
    fn coarsen_validates_factor() {
        let w = WienerGrid::generate(0, 0, 1, 64, 1.0).unwrap();
        assert!(w.coarsen(3).is_err());
        assert!(w.coarsen(128).is_err());
        assert!(w.coarsen(0).is_err());
        assert_eq!(w.coarsen(1).unwrap(), w);
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let steps = 1 << 14;
        let a = WienerGrid::generate(1, 0, 1, steps, 1.0).unwrap();
        let b = WienerGrid::generate(1, 1, 1, steps, 1.0).unwrap();
        let n = steps as f64;
        let (xs, ys) = (&a.increments, &b.increments);
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut vx = 0.0;
        let mut vy = 0.0;
        for (&x, &y) in xs.iter().zip(ys) {
            cov += (x - mx) * (y - my);
            vx += (x - mx) * (x - mx);
            vy += (y - my) * (y - my);
        }
        let corr = cov / (vx.sqrt() * vy.sqrt());
        assert!(
            corr.abs() <= 0.05,
            "correlation {corr} between streams 0 and 1"
        );
    }

    #[test]
    fn csv_has_header_and_one_row_per_step() {
        let w = WienerGrid::generate(3, 0, 2, 4, 1.0).unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "t,dW_1,dW_2");
        assert!(lines[1].starts_with("0,"));
        assert!(lines[2].starts_with("0.25,"));
        // every data row parses back to finite numbers
        for line in &lines[1..] {
            for field in line.split(',') {
                assert!(field.parse::<f64>().unwrap().is_finite());
            }
        }
    }
}
