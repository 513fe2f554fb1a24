//! Monte Carlo measurement of strong convergence order.
//!
//! The strong error of a scheme at resolution `N` is
//!
//! ```text
//!     error_p(N) = ( E  sup_n ‖X^N_n - X^ref_n‖^p )^(1/p),
//! ```
//!
//! with the supremum over the nodes of the coarse grid and the
//! expectation estimated over simulated paths. Because the exact
//! solution is out of reach, the reference is the same scheme on a much
//! finer grid (`n_ref >= 4 * max N`), and — crucially — every coarse run
//! is driven by the *same* Brownian path as its reference: the coarse
//! increments are obtained by [`crate::wiener::WienerGrid::coarsen`],
//! which sums the fine ones exactly. Without that coupling the measured
//! error would be dominated by independent Brownian noise instead of the
//! discretization error.
//!
//! Plotting `log2 error_p` against `log2 h` and fitting a line by least
//! squares estimates the convergence order; the schemes in this crate
//! exhibit order 1/2, the expected rate for multi-dimensional
//! multiplicative noise.
//!
//! Paths run in parallel, but every path writes into its own
//! pre-assigned slot and the reduction runs sequentially in path order
//! afterwards, so the report is bit-for-bit identical no matter how many
//! worker threads execute it. Divergent paths are counted, excluded from
//! the mean, and reported as a fraction per resolution; a resolution
//! where every path diverged is an error.

use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::model::SdaeProblem;
use crate::scheme::{self, SchemeError, SchemeKind};
use crate::wiener::{WienerError, WienerGrid};

/// Errors from configuration checks and the measurement itself.
#[derive(Debug, Error)]
pub enum ConvergenceError {
    #[error("{what} = {value} must be a power of two")]
    NotPowerOfTwo { what: &'static str, value: usize },
    #[error("reference resolution {n_ref} is not divisible by coarse resolution {n}")]
    NotDivisible { n_ref: usize, n: usize },
    #[error("reference resolution {n_ref} must be at least 4 times the finest coarse resolution {n_max}")]
    ReferenceTooCoarse { n_ref: usize, n_max: usize },
    #[error("coarse resolutions must be strictly increasing")]
    LevelsNotIncreasing,
    #[error("need at least two coarse resolutions for a slope, got {0}")]
    TooFewLevels(usize),
    #[error("path count must be positive")]
    ZeroPaths,
    #[error("moment exponent p must be at least 1")]
    ZeroExponent,
    #[error("every path diverged at resolution N = {n}; no error can be estimated")]
    AllPathsDiverged { n: usize },
    #[error("need at least two usable (finite, positive) error points for a fit, got {0}")]
    TooFewFitPoints(usize),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Wiener(#[from] WienerError),
}

/// What to measure: scheme, grid resolutions, ensemble size, moment, and
/// the seed that fixes every Brownian path.
#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub scheme: SchemeKind,
    /// Resolution of the reference grid (power of two).
    pub n_ref: usize,
    /// Coarse resolutions to measure, strictly increasing powers of two
    /// dividing `n_ref`, each at most `n_ref / 4`.
    pub n_list: Vec<usize>,
    /// Number of Monte Carlo paths; path `i` uses Wiener stream `i`.
    pub paths: usize,
    /// Moment exponent `p` in `error_p`.
    pub p_exponent: u32,
    pub seed: u64,
}

impl ConvergenceConfig {
    /// Checks the structural requirements listed on the fields.
    ///
    /// # Errors
    /// One [`ConvergenceError`] variant per violated requirement.
    pub fn validate(&self) -> Result<(), ConvergenceError> {
        if self.n_ref == 0 || !self.n_ref.is_power_of_two() {
            return Err(ConvergenceError::NotPowerOfTwo {
                what: "n_ref",
                value: self.n_ref,
            });
        }
        if self.n_list.len() < 2 {
            return Err(ConvergenceError::TooFewLevels(self.n_list.len()));
        }
        for pair in self.n_list.windows(2) {
            if pair[1] <= pair[0] {
                return Err(ConvergenceError::LevelsNotIncreasing);
            }
        }
        for &n in &self.n_list {
            if n == 0 || !n.is_power_of_two() {
                return Err(ConvergenceError::NotPowerOfTwo {
                    what: "coarse resolution",
                    value: n,
                });
            }
            if !self.n_ref.is_multiple_of(n) {
                return Err(ConvergenceError::NotDivisible {
                    n_ref: self.n_ref,
                    n,
                });
            }
        }
        let n_max = *self.n_list.last().expect("checked non-empty above");
        if self.n_ref / n_max < 4 {
            return Err(ConvergenceError::ReferenceTooCoarse {
                n_ref: self.n_ref,
                n_max,
            });
        }
        if self.paths == 0 {
            return Err(ConvergenceError::ZeroPaths);
        }
        if self.p_exponent == 0 {
            return Err(ConvergenceError::ZeroExponent);
        }
        Ok(())
    }
}

/// One measured resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    /// `(mean of e^p)^(1/p)` over the paths that stayed finite.
    pub error_p: f64,
    /// Delta-method standard error of `error_p`:
    /// `sd(e^p) / sqrt(count) * (1/p) * mean(e^p)^(1/p - 1)`
    /// (NaN when only one usable path).
    pub std_error: f64,
    pub diverged_paths: usize,
    pub used_paths: usize,
}

/// Least-squares line through `(log2 h, log2 error_p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    /// Estimated convergence order.
    pub slope: f64,
    /// `log2` of the error constant: `error ≈ 2^intercept * h^slope`.
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log2 units.
    pub residual: f64,
    pub points_used: usize,
}

/// Full result of [`strong_error`].
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub problem: String,
    pub scheme: SchemeKind,
    pub n_ref: usize,
    pub paths: usize,
    pub p_exponent: u32,
    pub seed: u64,
    pub rows: Vec<ConvergenceRow>,
    /// Present when at least two rows had finite positive errors.
    pub fit: Option<SlopeFit>,
}

impl ConvergenceReport {
    /// Writes the rows as CSV (`N,h,error_p,stderr,diverged_fraction`)
    /// followed, when a fit exists, by the comment footer
    /// `# slope=<s> intercept=<i> residual=<r>`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "N,h,error_p,stderr,diverged_fraction")?;
        for row in &self.rows {
            let fraction = row.diverged_paths as f64 / self.paths as f64;
            writeln!(
                out,
                "{},{},{},{},{}",
                row.n, row.h, row.error_p, row.std_error, fraction
            )?;
        }
        if let Some(fit) = &self.fit {
            writeln!(
                out,
                "# slope={} intercept={} residual={}",
                fit.slope, fit.intercept, fit.residual
            )?;
        }
        Ok(())
    }

    /// Writes a self-contained SVG log-log plot: measured errors as
    /// points, the least-squares line dashed, and an annotation with the
    /// fitted slope.
    pub fn write_svg<W: Write>(&self, out: &mut W) -> io::Result<()> {
        const WIDTH: f64 = 640.0;
        const HEIGHT: f64 = 440.0;
        const MARGIN_L: f64 = 70.0;
        const MARGIN_R: f64 = 30.0;
        const MARGIN_T: f64 = 50.0;
        const MARGIN_B: f64 = 60.0;
        let plot_w = WIDTH - MARGIN_L - MARGIN_R;
        let plot_h = HEIGHT - MARGIN_T - MARGIN_B;

        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="monospace" font-size="13">"#
        )?;
        writeln!(
            out,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        )?;
        writeln!(
            out,
            r#"<text x="{:.2}" y="25" text-anchor="middle" font-size="15">strong error of {} on {} ({} paths, p = {})</text>"#,
            WIDTH / 2.0,
            self.scheme,
            self.problem,
            self.paths,
            self.p_exponent
        )?;

        let points: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.error_p.is_finite() && r.error_p > 0.0)
            .map(|r| (r.h.log2(), r.error_p.log2()))
            .collect();
        if points.is_empty() {
            writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">no usable data (all paths diverged)</text>"#,
                WIDTH / 2.0,
                HEIGHT / 2.0
            )?;
            writeln!(out, "</svg>")?;
            return Ok(());
        }

        let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
        let x_pad = 0.05 * (x_max - x_min).max(1.0);
        let y_pad = 0.05 * (y_max - y_min).max(1.0);
        x_min -= x_pad;
        x_max += x_pad;
        y_min -= y_pad;
        y_max += y_pad;
        let to_px = |x: f64, y: f64| {
            (
                MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w,
                MARGIN_T + (y_max - y) / (y_max - y_min) * plot_h,
            )
        };

        // frame and axis labels
        writeln!(
            out,
            r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
        )?;
        for row in &self.rows {
            let x = row.h.log2();
            if !(x_min..=x_max).contains(&x) {
                continue;
            }
            let (px, _) = to_px(x, 0.0);
            let base = MARGIN_T + plot_h;
            writeln!(
                out,
                r#"<line x1="{px:.2}" y1="{base:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#,
                base + 5.0
            )?;
            writeln!(
                out,
                r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{:.0}</text>"#,
                base + 20.0,
                x
            )?;
        }
        for k in 0..=4 {
            let y = y_min + (y_max - y_min) * k as f64 / 4.0;
            let (_, py) = to_px(0.0, y);
            writeln!(
                out,
                r#"<line x1="{:.2}" y1="{py:.2}" x2="{MARGIN_L}" y2="{py:.2}" stroke="black"/>"#,
                MARGIN_L - 5.0
            )?;
            writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.1}</text>"#,
                MARGIN_L - 9.0,
                py + 4.0
            )?;
        }
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">log2 h</text>"#,
            MARGIN_L + plot_w / 2.0,
            HEIGHT - 15.0
        )?;
        writeln!(
            out,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">log2 error_p</text>"#,
            MARGIN_T + plot_h / 2.0,
            MARGIN_T + plot_h / 2.0
        )?;

        // fitted line behind the data
        if let Some(fit) = &self.fit {
            let (x1, y1) = to_px(x_min, fit.slope * x_min + fit.intercept);
            let (x2, y2) = to_px(x_max, fit.slope * x_max + fit.intercept);
            writeln!(
                out,
                r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#888" stroke-dasharray="6 4"/>"##
            )?;
            writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">slope = {:.3}</text>"#,
                MARGIN_L + plot_w - 10.0,
                MARGIN_T + 20.0,
                fit.slope
            )?;
        }

        // data polyline and markers
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| {
                let (px, py) = to_px(x, y);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#1a6fb0" stroke-width="1.5"/>"##,
            path.join(" ")
        )?;
        for &(x, y) in &points {
            let (px, py) = to_px(x, y);
            writeln!(
                out,
                r##"<circle cx="{px:.2}" cy="{py:.2}" r="4" fill="#1a6fb0"/>"##
            )?;
        }
        writeln!(out, "</svg>")?;
        Ok(())
    }
}

/// Fits the least-squares line through `(log2 h, log2 error_p)`, using
/// only rows whose error is finite and positive.
///
/// # Errors
/// Needs at least two usable rows.
pub fn fit_slope(rows: &[ConvergenceRow]) -> Result<SlopeFit, ConvergenceError> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error_p.is_finite() && r.error_p > 0.0)
        .map(|r| (r.h.log2(), r.error_p.log2()))
        .collect();
    if points.len() < 2 {
        return Err(ConvergenceError::TooFewFitPoints(points.len()));
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let ss: f64 = points
        .iter()
        .map(|&(x, y)| {
            let d = y - (slope * x + intercept);
            d * d
        })
        .sum();
    Ok(SlopeFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
        points_used: points.len(),
    })
}

/// Per-path supremum errors, one entry per resolution (`None` when that
/// run, or the reference itself, diverged).
type PathErrors = Vec<Option<f64>>;

fn run_path(
    problem: &SdaeProblem,
    config: &ConvergenceConfig,
    path: usize,
) -> Result<PathErrors, ConvergenceError> {
    let ref_grid = WienerGrid::generate(
        config.seed,
        path as u64,
        problem.noise_dim(),
        config.n_ref,
        problem.horizon(),
    )?;
    let reference = scheme::simulate(problem, config.scheme, &ref_grid)?;
    if reference.diverged() {
        // without a reference there is nothing to compare against
        return Ok(vec![None; config.n_list.len()]);
    }
    let mut out = Vec::with_capacity(config.n_list.len());
    for &n in &config.n_list {
        let factor = config.n_ref / n;
        let coarse = scheme::simulate(problem, config.scheme, &ref_grid.coarsen(factor)?)?;
        if coarse.diverged() {
            out.push(None);
            continue;
        }
        let mut sup = 0.0_f64;
        for k in 0..=n {
            let diff = coarse.states[k]
                .sub(&reference.states[k * factor])
                .map_err(SchemeError::from)?
                .norm();
            sup = sup.max(diff);
        }
        out.push(Some(sup));
    }
    Ok(out)
}

/// Runs the full measurement: simulates `paths` coupled
/// reference/coarse pairs (in parallel), aggregates the `p`-th moment
/// errors per resolution, and fits the convergence slope. The slope is
/// `None` — not an error — when fewer than two resolutions produced a
/// usable error.
///
/// # Errors
/// Rejects invalid configurations, propagates simulation failures, and
/// fails with [`ConvergenceError::AllPathsDiverged`] when a resolution
/// has no surviving path at all.
pub fn strong_error(
    problem: &SdaeProblem,
    config: &ConvergenceConfig,
) -> Result<ConvergenceReport, ConvergenceError> {
    config.validate()?;

    // each path fills its own slot; order of completion does not matter
    let results: Vec<Result<PathErrors, ConvergenceError>> = (0..config.paths)
        .into_par_iter()
        .map(|path| run_path(problem, config, path))
        .collect();
    // surface the lowest-indexed failure so errors are deterministic too
    let mut per_path = Vec::with_capacity(config.paths);
    for result in results {
        per_path.push(result?);
    }

    let p = config.p_exponent;
    let mut rows = Vec::with_capacity(config.n_list.len());
    for (level, &n) in config.n_list.iter().enumerate() {
        let mut moments = Vec::with_capacity(config.paths);
        let mut diverged = 0usize;
        for errors in &per_path {
            match errors[level] {
                Some(e) => moments.push(e.powi(p as i32)),
                None => diverged += 1,
            }
        }
        if moments.is_empty() {
            return Err(ConvergenceError::AllPathsDiverged { n });
        }
        let count = moments.len();
        let mean = moments.iter().sum::<f64>() / count as f64;
        let error_p = mean.powf(1.0 / f64::from(p));
        let std_error = if mean == 0.0 {
            0.0
        } else {
            let var = moments
                .iter()
                .map(|m| {
                    let d = m - mean;
                    d * d
                })
                .sum::<f64>()
                / (count as f64 - 1.0);
            (var / count as f64).sqrt() * mean.powf(1.0 / f64::from(p) - 1.0) / f64::from(p)
        };
        rows.push(ConvergenceRow {
            n,
            h: problem.horizon() / n as f64,
            error_p,
            std_error,
            diverged_paths: diverged,
            used_paths: count,
        });
    }

    let fit = fit_slope(&rows).ok();
    Ok(ConvergenceReport {
        problem: problem.name().to_string(),
        scheme: config.scheme,
        n_ref: config.n_ref,
        paths: config.paths,
        p_exponent: config.p_exponent,
        seed: config.seed,
        rows,
        fit,
    })
}
