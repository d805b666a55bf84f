//! Reference problems used by tests, benchmarks, and the CLI examples.

use crate::semialg::Problem;

/// Bi-objective `(x2*x3, x1*x3)` on the line `{(0, 0, t)}`, cut out by
/// constraints whose gradients all vanish on the line.
pub fn degenerate_line() -> Problem {
    Problem::parse(
        3,
        &["x2*x3", "x1*x3"],
        &["(1 - x1*x2*x3)^2 + x1^2 + x2^2 - 1", "x1*x2"],
        &["x1^3"],
    )
    .expect("fixture parses")
}

/// Bi-objective `(x3, (1 - x1*x2)^2 + x2^2 + x3^2)` on `x1, x2 >= 0`; its
/// section below `(-1, 2)` is bounded but not closed.
pub fn non_closed_section() -> Problem {
    Problem::parse(
        3,
        &["x3", "(1 - x1*x2)^2 + x2^2 + x3^2"],
        &[],
        &["x1", "x2"],
    )
    .expect("fixture parses")
}

/// Motzkin polynomial paired with the squared distance to `(1, 1)` on the
/// nonnegative orthant. The unique Pareto solution is `(1, 1)`.
pub fn motzkin() -> Problem {
    Problem::parse(
        2,
        &[
            "x1^2*x2^4 + x1^4*x2^2 - 3*x1^2*x2^2 + 1",
            "(x1 - 1)^2 + (x2 - 1)^2",
        ],
        &[],
        &["x1", "x2"],
    )
    .expect("fixture parses")
}

/// Linear objectives `(x1, x2)` on the line `x1 + x2 = 1`.
pub fn linear_segment() -> Problem {
    Problem::parse(2, &["x1", "x2"], &["x1 + x2 - 1"], &[]).expect("fixture parses")
}
