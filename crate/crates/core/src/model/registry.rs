//! Built-in example problems addressable by name from the CLI.

use std::sync::Arc;

use crate::linalg::{Matrix, Vector};

use super::{DiffusionFn, DriftFn, MatrixFn, SdaeProblem};

/// Names of the built-in problems, in the order `by_name` knows them.
pub fn names() -> &'static [&'static str] {
    &["paper-example", "paper-example-broken-g", "stiff-cubic"]
}

/// Looks up a built-in problem by its registry name.
pub fn by_name(name: &str) -> Option<SdaeProblem> {
    match name {
        "paper-example" => Some(paper_example()),
        "paper-example-broken-g" => Some(paper_example_broken_g()),
        "stiff-cubic" => Some(stiff_cubic()),
        _ => None,
    }
}

fn constant(m: Matrix) -> MatrixFn {
    Arc::new(move |_| m.clone())
}

fn paper_example_drift() -> DriftFn {
    Arc::new(|_, x: &Vector| {
        Vector::from_vec(vec![
            x.get(0),
            x.get(1) - x.get(1).powi(5),
            x.get(2) - x.get(2).powi(3),
        ])
    })
}

fn paper_example_with_diffusion(name: &str, diffusion: DiffusionFn) -> SdaeProblem {
    let a = Matrix::from_rows(&[&[1.0, 0.0, 1.0], &[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]])
        .expect("literal rows conform");
    let b = Matrix::diag(&[0.0, -1.0, 1.0]);
    SdaeProblem::new(
        name,
        constant(a),
        constant(b),
        paper_example_drift(),
        diffusion,
        3,
        Vector::from_slice(&[0.01, 0.0, 0.01]),
        1.0,
    )
    .expect("built-in shapes are consistent")
    .with_constant_coefficients(true)
}

/// The reference benchmark: a three-dimensional constant-coefficient
/// index-1 system with a rank-2 singular leading matrix,
///
/// ```text
///     A = | 1 0 1 |        B = diag(0, -1, 1)
///         | 0 0 0 |
///         | 1 0 0 |
/// ```
///
/// quintic/cubic drift `f(x) = (x1, x2 - x2^5, x3 - x3^3)` — one-sided
/// Lipschitz but far from globally Lipschitz — and a state-dependent
/// diffusion whose middle row vanishes, keeping noise out of the purely
/// algebraic second equation. Start value `(0.01, 0, 0.01)`, horizon 1,
/// three driving Wiener components.
pub fn paper_example() -> SdaeProblem {
    paper_example_with_diffusion(
        "paper-example",
        Arc::new(|_, x: &Vector| {
            Matrix::from_rows(&[
                &[x.get(0) - x.get(2), x.get(1), x.get(2)],
                &[0.0, 0.0, 0.0],
                &[x.get(1) - x.get(2), x.get(0), x.get(1) - x.get(0)],
            ])
            .expect("literal rows conform")
        }),
    )
}

/// Deliberately broken variant of [`paper_example`]: the middle row of
/// the diffusion is `(1, 0, 0)` instead of zero, so white noise drives
/// the algebraic equation and the index-1 noise condition fails. Useful
/// for exercising the failure path of
/// [`SdaeProblem::validate_index1`](super::SdaeProblem::validate_index1).
pub fn paper_example_broken_g() -> SdaeProblem {
    paper_example_with_diffusion(
        "paper-example-broken-g",
        Arc::new(|_, x: &Vector| {
            Matrix::from_rows(&[
                &[x.get(0) - x.get(2), x.get(1), x.get(2)],
                &[1.0, 0.0, 0.0],
                &[x.get(1) - x.get(2), x.get(0), x.get(1) - x.get(0)],
            ])
            .expect("literal rows conform")
        }),
    )
}

/// A scalar stiff test problem `dX = -X³ dt + 0.1 dW`, started at
/// `X(0) = 10`. The drift is dissipative, so the solution collapses
/// quickly toward zero — but an untamed explicit step at moderate step
/// sizes overshoots (`10³ · h` dwarfs the state) and blows up in a few
/// iterations. The tamed schemes stay bounded at every step size, which
/// makes this the standard demonstration of why taming is worth having.
pub fn stiff_cubic() -> SdaeProblem {
    SdaeProblem::new(
        "stiff-cubic",
        constant(Matrix::identity(1)),
        constant(Matrix::zeros(1, 1)),
        Arc::new(|_, x: &Vector| Vector::from_vec(vec![-x.get(0).powi(3)])),
        Arc::new(|_, _: &Vector| Matrix::diag(&[0.1])),
        1,
        Vector::from_slice(&[10.0]),
        1.0,
    )
    .expect("built-in shapes are consistent")
    .with_constant_coefficients(true)
}
