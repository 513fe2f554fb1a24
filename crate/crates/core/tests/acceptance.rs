//! Acceptance gate: the nine end-to-end criteria the crate promises.
//!
//! Each test checks one criterion at its stated tolerance and prints a
//! single `PASS` line with the measured numbers (visible with
//! `--nocapture`; cargo's own per-test ok/FAILED line mirrors it).

use std::process::Command;

use rand_chacha::ChaCha12Rng;
use rand_core::{Rng, SeedableRng};

use sdae::convergence::{strong_error, ConvergenceConfig};
use sdae::linalg::{projectors, pseudo_inverse, LuFactors, Matrix, Vector};
use sdae::model::{paper_example, random_index1_fixture};
use sdae::scheme::{self, dual_operators, tame, SchemeKind};
use sdae::{SdaeProblem, WienerGrid};

fn mat(rows: &[&[f64]]) -> Matrix {
    Matrix::from_rows(rows).unwrap()
}

fn assert_entrywise(actual: &Matrix, expected: &Matrix, tol: f64, label: &str) {
    assert_eq!(actual.rows(), expected.rows(), "{label}: row count");
    assert_eq!(actual.cols(), expected.cols(), "{label}: column count");
    for i in 0..actual.rows() {
        for j in 0..actual.cols() {
            let d = (actual.get(i, j) - expected.get(i, j)).abs();
            assert!(
                d <= tol,
                "{label} entry ({i},{j}): {} vs {} (|diff| = {d:e} > {tol:e})",
                actual.get(i, j),
                expected.get(i, j)
            );
        }
    }
}

/// 53-bit uniform in [0, 1).
fn uniform01(rng: &mut ChaCha12Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn uniform(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform01(rng)
}

/// Criterion 1: the tamed scheme converges strongly with order 1/2 on
/// the built-in example — the fitted slope of the premade study
/// (reference N = 2^14, coarse N = 64..2048, 128 paths, mean-square
/// error, seed 42) lies in [0.40, 0.60].
#[test]
fn c1_strong_convergence_order_is_one_half() {
    let problem = paper_example();
    let config = ConvergenceConfig {
        scheme: SchemeKind::DirectTamed,
        n_ref: 1 << 14,
        n_list: vec![64, 128, 256, 512, 1024, 2048],
        paths: 128,
        p_exponent: 2,
        seed: 42,
    };
    let report = strong_error(&problem, &config).expect("the study completes");
    for row in &report.rows {
        assert_eq!(
            row.diverged_paths, 0,
            "no path may diverge at N = {}",
            row.n
        );
    }
    let fit = report.fit.expect("six clean rows fit a line");
    assert!(
        (0.40..=0.60).contains(&fit.slope),
        "measured order {} outside [0.40, 0.60]",
        fit.slope
    );
    println!(
        "PASS c1: strong convergence order {:.4} in [0.40, 0.60] (fit residual {:.3}, 128 paths)",
        fit.slope, fit.residual
    );
}

/// Criterion 2: the direct scheme and its dual (split differential /
/// algebraic) formulation produce the same iterates to within 1e-7
/// relative, on the built-in example and on random index-1 fixtures.
#[test]
fn c2_direct_and_dual_schemes_coincide() {
    let problems: Vec<SdaeProblem> = vec![
        paper_example(),
        random_index1_fixture(1),
        random_index1_fixture(2),
        random_index1_fixture(3),
    ];
    let mut worst = 0.0_f64;
    for problem in &problems {
        for &steps in &[1usize << 4, 1 << 8] {
            for seed in 0..10u64 {
                let grid =
                    WienerGrid::generate(seed, 0, problem.noise_dim(), steps, problem.horizon())
                        .unwrap();
                let direct = scheme::simulate(problem, SchemeKind::DirectTamed, &grid).unwrap();
                let dual = scheme::simulate(problem, SchemeKind::DualTamed, &grid).unwrap();
                assert!(!direct.diverged() && !dual.diverged());
                let mut diff = 0.0_f64;
                let mut scale = 1.0_f64;
                for n in 0..=steps {
                    diff = diff.max(direct.states[n].sub(&dual.states[n]).unwrap().norm());
                    scale = scale.max(1.0 + direct.states[n].norm());
                }
                let relative = diff / scale;
                assert!(
                    relative <= 1e-7,
                    "{}: N = {steps}, seed {seed}: direct and dual disagree by {relative:e}",
                    problem.name()
                );
                worst = worst.max(relative);
            }
        }
    }
    println!(
        "PASS c2: direct and dual iterates agree to {worst:.3e} <= 1e-7 on {} problems x 2 resolutions x 10 seeds",
        problems.len()
    );
}

/// Criterion 3: the pseudo-inverse satisfies the four Penrose
/// identities to 1e-10 relative on 100 random matrices of every rank,
/// and on the built-in example's singular matrix it matches the
/// hand-computed pseudo-inverse entrywise to 1e-12, with projectors
/// that are idempotent and complementary to 1e-12.
#[test]
fn c3_pseudo_inverse_satisfies_the_penrose_identities() {
    let mut rng = ChaCha12Rng::seed_from_u64(0x5eedc3);
    let mut checked = 0usize;
    let mut worst = 0.0_f64;
    while checked < 100 {
        let d = 2 + checked % 7; // orders 2..=8
        let r = 1 + checked % d; // every rank 1..=d over the run
        let left = Matrix::from_fn(d, r, |_, _| uniform(&mut rng, -1.0, 1.0));
        let right = Matrix::from_fn(r, d, |_, _| uniform(&mut rng, -1.0, 1.0));
        let a = left.mul(&right).unwrap();
        let x = pseudo_inverse(&a, 1e-10).unwrap();
        // keep the conditioning honest so 1e-10 is a fair ask
        if a.norm_1() * x.norm_1() > 1e4 {
            continue;
        }
        let a_norm = a.frobenius_norm();
        let x_norm = x.frobenius_norm();
        let axa = a.mul(&x).unwrap().mul(&a).unwrap();
        let xax = x.mul(&a).unwrap().mul(&x).unwrap();
        let ax = a.mul(&x).unwrap();
        let xa = x.mul(&a).unwrap();
        let checks = [
            (axa.sub(&a).unwrap().frobenius_norm() / a_norm, "A X A = A"),
            (xax.sub(&x).unwrap().frobenius_norm() / x_norm, "X A X = X"),
            (
                ax.sub(&ax.transpose()).unwrap().frobenius_norm() / (1.0 + ax.frobenius_norm()),
                "A X symmetric",
            ),
            (
                xa.sub(&xa.transpose()).unwrap().frobenius_norm() / (1.0 + xa.frobenius_norm()),
                "X A symmetric",
            ),
        ];
        for (violation, label) in checks {
            assert!(
                violation <= 1e-10,
                "{label} violated by {violation:e} on a {d}x{d} rank-{r} matrix (case {checked})"
            );
            worst = worst.max(violation);
        }
        checked += 1;
    }

    // the built-in example's singular matrix, against the hand value
    let problem = paper_example();
    let a = problem.a(0.0);
    let a_pinv = pseudo_inverse(&a, 1e-10).unwrap();
    let expected = mat(&[&[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0], &[1.0, 0.0, -1.0]]);
    assert_entrywise(&a_pinv, &expected, 1e-12, "built-in pseudo-inverse");

    let (p, q, r) = projectors(&a, &a_pinv).unwrap();
    let identity = Matrix::identity(3);
    assert_entrywise(&p.mul(&p).unwrap(), &p, 1e-12, "P idempotent");
    assert_entrywise(&q.mul(&q).unwrap(), &q, 1e-12, "Q idempotent");
    assert_entrywise(&r.mul(&r).unwrap(), &r, 1e-12, "R idempotent");
    assert_entrywise(&p.add(&q).unwrap(), &identity, 1e-12, "P + Q = I");
    assert_entrywise(&p.mul(&q).unwrap(), &Matrix::zeros(3, 3), 1e-12, "P Q = 0");
    assert_entrywise(&r.mul(&a).unwrap(), &Matrix::zeros(3, 3), 1e-12, "R A = 0");
    println!(
        "PASS c3: Penrose identities within {worst:.3e} <= 1e-10 on 100 random matrices; built-in pseudo-inverse and projectors exact to 1e-12"
    );
}

/// Criterion 4: the dual scheme's step matrix on the built-in example
/// equals the closed form [[1,0,-h],[0,1,0],[0,0,1+h]] entrywise to
/// 1e-12 for h in {1e-3, 1e-1, 1}, and the inverse has 1-norm exactly 1
/// (the dual flow is non-expansive at every step size).
#[test]
fn c4_dual_step_matrix_matches_the_frozen_oracle() {
    let problem = paper_example();
    let (m1, m2) = dual_operators(&problem, 0.37).unwrap();
    let a_pinv_expected = mat(&[&[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0], &[1.0, 0.0, -1.0]]);
    assert_entrywise(&m2, &a_pinv_expected, 1e-12, "M2 equals the pseudo-inverse");
    let mut worst_norm_dev = 0.0_f64;
    for &h in &[1e-3, 1e-1, 1.0] {
        let step = Matrix::identity(3).add_scaled(h, &m1).unwrap();
        let expected = mat(&[&[1.0, 0.0, -h], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0 + h]]);
        assert_entrywise(&step, &expected, 1e-12, "I + h M1");
        let inverse_norm = LuFactors::factor(&step).unwrap().inverse().norm_1();
        assert!(
            (inverse_norm - 1.0).abs() <= 1e-12,
            "h = {h}: |(I + h M1)^-1|_1 = {inverse_norm} != 1"
        );
        worst_norm_dev = worst_norm_dev.max((inverse_norm - 1.0).abs());
    }
    println!(
        "PASS c4: dual step matrix matches its closed form for h in {{1e-3, 1e-1, 1}}; inverse 1-norm = 1 within {worst_norm_dev:.3e}"
    );
}

/// Criterion 5: every iterate satisfies the hidden constraint — the
/// constraint-space residual R B X_{n+1} + R f/(1 + h|f|), recomputed
/// here from the raw states, stays below 1e-9 (1 + |X_{n+1}|) at all
/// 256 nodes for 20 seeds and both tamed schemes.
#[test]
fn c5_hidden_constraint_holds_at_every_node() {
    let problem = paper_example();
    let steps = 1usize << 8;
    let h = problem.horizon() / steps as f64;
    let mut worst = 0.0_f64;
    for &kind in &[SchemeKind::DirectTamed, SchemeKind::DualTamed] {
        for seed in 0..20u64 {
            let grid = WienerGrid::generate(seed, 0, problem.noise_dim(), steps, problem.horizon())
                .unwrap();
            let trajectory = scheme::simulate(&problem, kind, &grid).unwrap();
            assert!(!trajectory.diverged());
            for n in 0..steps {
                let t_next = trajectory.time(n + 1);
                let bundle = problem.projector_bundle_at(t_next).unwrap();
                let b = problem.b(t_next);
                let f = problem.drift(trajectory.time(n), &trajectory.states[n]);
                let denominator = 1.0 + h * f.norm();
                let residual = bundle
                    .r
                    .mul_vec(&b.mul_vec(&trajectory.states[n + 1]).unwrap())
                    .unwrap()
                    .add_scaled(1.0 / denominator, &bundle.r.mul_vec(&f).unwrap())
                    .unwrap()
                    .norm();
                let bound = 1e-9 * (1.0 + trajectory.states[n + 1].norm());
                assert!(
                    residual <= bound,
                    "{kind}: seed {seed}, node {}: constraint residual {residual:e} > {bound:e}",
                    n + 1
                );
                worst = worst.max(residual / (1.0 + trajectory.states[n + 1].norm()));
            }
        }
    }
    println!(
        "PASS c5: hidden constraint residual {worst:.3e} <= 1e-9 relative across 2 schemes x 20 seeds x 256 nodes"
    );
}

/// Criterion 6: moment stability under refinement — the terminal
/// mean-square norm over 64 paths varies by less than a factor 2
/// across N = 2^6 .. 2^12 and stays finite.
#[test]
fn c6_second_moments_stay_bounded_as_the_grid_refines() {
    let problem = paper_example();
    let paths = 64u64;
    let finest = 12u32;
    // one master path per sample, coarsened to every resolution, so the
    // comparison isolates the effect of refinement from sampling noise
    let mut moments = vec![0.0_f64; (finest - 6 + 1) as usize];
    for path in 0..paths {
        let master = WienerGrid::generate(
            11,
            path,
            problem.noise_dim(),
            1usize << finest,
            problem.horizon(),
        )
        .unwrap();
        for (slot, k) in (6..=finest).enumerate() {
            let grid = master.coarsen(1usize << (finest - k)).unwrap();
            let trajectory = scheme::simulate(&problem, SchemeKind::DirectTamed, &grid).unwrap();
            assert!(!trajectory.diverged(), "N = 2^{k}, path {path} diverged");
            let norm = trajectory.final_state().norm();
            assert!(norm.is_finite());
            moments[slot] += norm * norm / paths as f64;
        }
    }
    let max = moments.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = moments.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max.is_finite() && min > 0.0);
    assert!(
        max / min < 2.0,
        "terminal second moments vary too much: {moments:?}"
    );
    println!(
        "PASS c6: terminal second moment in [{min:.4e}, {max:.4e}] (ratio {:.3} < 2) across N = 2^6..2^12",
        max / min
    );
}

/// Criterion 7: the tamed drift increment never exceeds
/// min(1, h |f|) (1 + 1e-15) and keeps its exact magnitude
/// h |f| / (1 + h |f|), over 10^4 seeded (h, f) pairs spanning twelve
/// orders of magnitude.
#[test]
fn c7_taming_respects_its_bound() {
    let mut rng = ChaCha12Rng::seed_from_u64(0x5eedc7);
    let mut worst_ratio = 0.0_f64;
    for case in 0..10_000usize {
        let dim = 1 + case % 6;
        let magnitude = 10.0_f64.powf(uniform(&mut rng, -6.0, 6.0));
        let f = Vector::from_vec(
            (0..dim)
                .map(|_| magnitude * uniform(&mut rng, -1.0, 1.0))
                .collect(),
        );
        let h = 10.0_f64.powf(uniform(&mut rng, -6.0, 0.5));
        let tamed = tame(&f, h);
        let bound = 1.0_f64.min(h * f.norm()) * (1.0 + 1e-15);
        assert!(
            tamed.norm() <= bound,
            "case {case}: |tamed| = {} exceeds min(1, h|f|) = {bound}",
            tamed.norm()
        );
        let expected = h * f.norm() / (1.0 + h * f.norm());
        if expected > 0.0 {
            let deviation = (tamed.norm() - expected).abs() / expected;
            assert!(
                deviation <= 1e-12,
                "case {case}: |tamed| deviates from its closed form by {deviation:e}"
            );
            worst_ratio = worst_ratio.max(deviation);
        }
    }
    println!(
        "PASS c7: taming bound holds on 10^4 pairs; magnitude matches its closed form within {worst_ratio:.3e}"
    );
}

/// Criterion 8: Brownian coarsening is exact — coarsening composes
/// bitwise (coarsen(2k) = coarsen(2) then coarsen(k)) and the endpoint
/// W(T) is bitwise invariant across all resolutions, on 100 grids.
#[test]
fn c8_brownian_coarsening_is_exact() {
    let mut grids = 0usize;
    for seed in 0..25u64 {
        for (noise_dim, exponent) in [(1usize, 6u32), (2, 7), (3, 8), (5, 6)] {
            let steps = 1usize << exponent;
            let grid = WienerGrid::generate(seed, seed ^ 0xabc, noise_dim, steps, 2.0).unwrap();
            let composed = grid.coarsen(2).unwrap().coarsen(4).unwrap();
            let direct = grid.coarsen(8).unwrap();
            assert_eq!(composed, direct, "coarsen(2) then coarsen(4) != coarsen(8)");
            let total = grid.total();
            let mut factor = 1usize;
            while factor <= steps {
                let coarse = grid.coarsen(factor).unwrap();
                let coarse_total = coarse.total();
                for j in 0..noise_dim {
                    assert_eq!(
                        coarse_total.get(j).to_bits(),
                        total.get(j).to_bits(),
                        "W(T) component {j} drifted at factor {factor}"
                    );
                }
                factor *= 2;
            }
            grids += 1;
        }
    }
    assert_eq!(grids, 100);
    println!(
        "PASS c8: coarsening composes bitwise and W(T) is bit-identical across resolutions on {grids} grids"
    );
}

/// Criterion 9: CLI runs are byte-deterministic — the same converge and
/// simulate invocations produce identical CSV bytes regardless of the
/// worker count.
#[test]
fn c9_cli_output_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run_converge = |workers: &str, out: &std::path::Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_sdae"))
            .args([
                "converge",
                "--model",
                "paper-example",
                "--scheme",
                "direct-tamed",
                "--nref",
                "512",
                "--nlist",
                "16,32,64",
                "--paths",
                "6",
                "--seed",
                "9",
                "--workers",
                workers,
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let a = run_converge("2", &dir.path().join("a.csv"));
    let b = run_converge("4", &dir.path().join("b.csv"));
    assert!(!a.is_empty());
    assert_eq!(a, b, "converge CSV bytes differ between worker counts");

    let run_simulate = |out: &std::path::Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_sdae"))
            .args([
                "simulate",
                "--model",
                "paper-example",
                "--scheme",
                "dual-tamed",
                "--steps",
                "64",
                "--seed",
                "3",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let c = run_simulate(&dir.path().join("c.csv"));
    let d = run_simulate(&dir.path().join("d.csv"));
    assert!(!c.is_empty());
    assert_eq!(c, d, "simulate CSV bytes differ between repeated runs");
    println!(
        "PASS c9: converge ({} bytes) and simulate ({} bytes) CSVs are byte-identical across runs and worker counts",
        a.len(),
        c.len()
    );
}
