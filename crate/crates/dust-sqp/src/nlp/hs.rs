//! Hand-coded Hock-Schittkowski test problems.
//!
//! Each problem is stated with the catalog objective and starting point.
//! Inequalities published as `g(x) >= 0` enter negated as `c(x) = -g(x) <= 0`;
//! variable bounds become general inequality rows.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{build_problem, Constraint, ConstraintKind, NlpProblem};

use ConstraintKind::{Equality, Inequality};

fn mat(n: usize, entries: &[(usize, usize, f64)]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for &(i, j, v) in entries {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    m
}

pub fn hs11() -> NlpProblem {
    let n = 2;
    build_problem(
        "hs11",
        n,
        vec![4.9, 0.1],
        Arc::new(|x| (x[0] - 5.0).powi(2) + x[1] * x[1] - 25.0),
        Arc::new(|x| vec![2.0 * (x[0] - 5.0), 2.0 * x[1]]),
        Arc::new(move |_| mat(2, &[(0, 0, 2.0), (1, 1, 2.0)])),
        vec![
            // x1^2 - x2 <= 0
            Constraint::new(
                Inequality,
                Arc::new(|x| x[0] * x[0] - x[1]),
                Arc::new(|x| vec![2.0 * x[0], -1.0]),
                Arc::new(move |_| mat(2, &[(0, 0, 2.0)])),
            ),
        ],
    )
}

pub fn hs14() -> NlpProblem {
    let n = 2;
    build_problem(
        "hs14",
        n,
        vec![2.0, 2.0],
        Arc::new(|x| (x[0] - 2.0).powi(2) + (x[1] - 1.0).powi(2)),
        Arc::new(|x| vec![2.0 * (x[0] - 2.0), 2.0 * (x[1] - 1.0)]),
        Arc::new(move |_| mat(2, &[(0, 0, 2.0), (1, 1, 2.0)])),
        vec![
            Constraint::linear(Equality, n, vec![1.0, -2.0], 1.0),
            // x1^2/4 + x2^2 - 1 <= 0
            Constraint::new(
                Inequality,
                Arc::new(|x| 0.25 * x[0] * x[0] + x[1] * x[1] - 1.0),
                Arc::new(|x| vec![0.5 * x[0], 2.0 * x[1]]),
                Arc::new(move |_| mat(2, &[(0, 0, 0.5), (1, 1, 2.0)])),
            ),
        ],
    )
}

fn hs21_with(x1_bounds: bool) -> NlpProblem {
    let n = 2;
    let name = if x1_bounds { "hs21" } else { "hs21_free_x1" };
    let mut cons = vec![
        // 10 x1 - x2 >= 10
        Constraint::linear(Inequality, n, vec![-10.0, 1.0], 10.0),
        Constraint::lower_bound(n, 1, -50.0),
        Constraint::upper_bound(n, 1, 50.0),
    ];
    if x1_bounds {
        cons.push(Constraint::lower_bound(n, 0, 2.0));
        cons.push(Constraint::upper_bound(n, 0, 50.0));
    }
    build_problem(
        name,
        n,
        vec![-1.0, -1.0],
        Arc::new(|x| 0.01 * x[0] * x[0] + x[1] * x[1] - 100.0),
        Arc::new(|x| vec![0.02 * x[0], 2.0 * x[1]]),
        Arc::new(move |_| mat(2, &[(0, 0, 0.02), (1, 1, 2.0)])),
        cons,
    )
}

pub fn hs21() -> NlpProblem {
    hs21_with(true)
}

/// hs21 without its `x_1` bound rows; basis for the infeasible variant, whose
/// injected `x_1 <= 0`, `x_1 >= 1` pair replaces the original `x_1` bounds.
pub fn hs21_free_x1() -> NlpProblem {
    let mut p = hs21_with(false);
    p.name = "hs21".to_string();
    p
}

pub fn hs28() -> NlpProblem {
    let n = 3;
    build_problem(
        "hs28",
        n,
        vec![-4.0, 1.0, 1.0],
        Arc::new(|x| (x[0] + x[1]).powi(2) + (x[1] + x[2]).powi(2)),
        Arc::new(|x| {
            vec![
                2.0 * (x[0] + x[1]),
                2.0 * (x[0] + x[1]) + 2.0 * (x[1] + x[2]),
                2.0 * (x[1] + x[2]),
            ]
        }),
        Arc::new(move |_| mat(3, &[(0, 0, 2.0), (0, 1, 2.0), (1, 1, 4.0), (1, 2, 2.0), (2, 2, 2.0)])),
        vec![Constraint::linear(Equality, n, vec![1.0, 2.0, 3.0], -1.0)],
    )
}

pub fn hs32() -> NlpProblem {
    let n = 3;
    build_problem(
        "hs32",
        n,
        vec![0.1, 0.7, 0.2],
        Arc::new(|x| (x[0] + 3.0 * x[1] + x[2]).powi(2) + 4.0 * (x[0] - x[1]).powi(2)),
        Arc::new(|x| {
            let s = x[0] + 3.0 * x[1] + x[2];
            let d = x[0] - x[1];
            vec![2.0 * s + 8.0 * d, 6.0 * s - 8.0 * d, 2.0 * s]
        }),
        Arc::new(move |_| {
            mat(3, &[(0, 0, 10.0), (0, 1, -2.0), (0, 2, 2.0), (1, 1, 26.0), (1, 2, 6.0), (2, 2, 2.0)])
        }),
        vec![
            // 1 - x1 - x2 - x3 = 0
            Constraint::linear(Equality, n, vec![-1.0, -1.0, -1.0], 1.0),
            // 6 x2 + 4 x3 - x1^3 - 3 >= 0
            Constraint::new(
                Inequality,
                Arc::new(|x| 3.0 + x[0].powi(3) - 6.0 * x[1] - 4.0 * x[2]),
                Arc::new(|x| vec![3.0 * x[0] * x[0], -6.0, -4.0]),
                Arc::new(move |x| mat(3, &[(0, 0, 6.0 * x[0])])),
            ),
            Constraint::lower_bound(n, 0, 0.0),
            Constraint::lower_bound(n, 1, 0.0),
            Constraint::lower_bound(n, 2, 0.0),
        ],
    )
}

pub fn hs35() -> NlpProblem {
    let n = 3;
    build_problem(
        "hs35",
        n,
        vec![0.5, 0.5, 0.5],
        Arc::new(|x| {
            9.0 - 8.0 * x[0] - 6.0 * x[1] - 4.0 * x[2]
                + 2.0 * x[0] * x[0]
                + 2.0 * x[1] * x[1]
                + x[2] * x[2]
                + 2.0 * x[0] * x[1]
                + 2.0 * x[0] * x[2]
        }),
        Arc::new(|x| {
            vec![
                -8.0 + 4.0 * x[0] + 2.0 * x[1] + 2.0 * x[2],
                -6.0 + 4.0 * x[1] + 2.0 * x[0],
                -4.0 + 2.0 * x[2] + 2.0 * x[0],
            ]
        }),
        Arc::new(move |_| {
            mat(3, &[(0, 0, 4.0), (0, 1, 2.0), (0, 2, 2.0), (1, 1, 4.0), (2, 2, 2.0)])
        }),
        vec![
            Constraint::linear(Inequality, n, vec![1.0, 1.0, 2.0], -3.0),
            Constraint::lower_bound(n, 0, 0.0),
            Constraint::lower_bound(n, 1, 0.0),
            Constraint::lower_bound(n, 2, 0.0),
        ],
    )
}

pub fn hs41() -> NlpProblem {
    let n = 4;
    build_problem(
        "hs41",
        n,
        vec![2.0, 2.0, 2.0, 2.0],
        Arc::new(|x| 2.0 - x[0] * x[1] * x[2]),
        Arc::new(|x| vec![-x[1] * x[2], -x[0] * x[2], -x[0] * x[1], 0.0]),
        Arc::new(move |x| mat(4, &[(0, 1, -x[2]), (0, 2, -x[1]), (1, 2, -x[0])])),
        vec![
            Constraint::linear(Equality, n, vec![1.0, 2.0, 2.0, -1.0], 0.0),
            Constraint::lower_bound(n, 0, 0.0),
            Constraint::upper_bound(n, 0, 1.0),
            Constraint::lower_bound(n, 1, 0.0),
            Constraint::upper_bound(n, 1, 1.0),
            Constraint::lower_bound(n, 2, 0.0),
            Constraint::upper_bound(n, 2, 1.0),
            Constraint::lower_bound(n, 3, 0.0),
            Constraint::upper_bound(n, 3, 2.0),
        ],
    )
}

pub fn hs43() -> NlpProblem {
    let n = 4;
    build_problem(
        "hs43",
        n,
        vec![0.0; 4],
        Arc::new(|x| {
            x[0] * x[0] + x[1] * x[1] + 2.0 * x[2] * x[2] + x[3] * x[3]
                - 5.0 * x[0]
                - 5.0 * x[1]
                - 21.0 * x[2]
                + 7.0 * x[3]
        }),
        Arc::new(|x| {
            vec![
                2.0 * x[0] - 5.0,
                2.0 * x[1] - 5.0,
                4.0 * x[2] - 21.0,
                2.0 * x[3] + 7.0,
            ]
        }),
        Arc::new(move |_| mat(4, &[(0, 0, 2.0), (1, 1, 2.0), (2, 2, 4.0), (3, 3, 2.0)])),
        vec![
            Constraint::new(
                Inequality,
                Arc::new(|x| {
                    x.iter().map(|v| v * v).sum::<f64>() + x[0] - x[1] + x[2] - x[3] - 8.0
                }),
                Arc::new(|x| {
                    vec![
                        2.0 * x[0] + 1.0,
                        2.0 * x[1] - 1.0,
                        2.0 * x[2] + 1.0,
                        2.0 * x[3] - 1.0,
                    ]
                }),
                Arc::new(move |_| {
                    mat(4, &[(0, 0, 2.0), (1, 1, 2.0), (2, 2, 2.0), (3, 3, 2.0)])
                }),
            ),
            Constraint::new(
                Inequality,
                Arc::new(|x| {
                    x[0] * x[0] + 2.0 * x[1] * x[1] + x[2] * x[2] + 2.0 * x[3] * x[3]
                        - x[0]
                        - x[3]
                        - 10.0
                }),
                Arc::new(|x| {
                    vec![2.0 * x[0] - 1.0, 4.0 * x[1], 2.0 * x[2], 4.0 * x[3] - 1.0]
                }),
                Arc::new(move |_| {
                    mat(4, &[(0, 0, 2.0), (1, 1, 4.0), (2, 2, 2.0), (3, 3, 4.0)])
                }),
            ),
            Constraint::new(
                Inequality,
                Arc::new(|x| {
                    2.0 * x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + 2.0 * x[0] - x[1] - x[3] - 5.0
                }),
                Arc::new(|x| vec![4.0 * x[0] + 2.0, 2.0 * x[1] - 1.0, 2.0 * x[2], -1.0]),
                Arc::new(move |_| mat(4, &[(0, 0, 4.0), (1, 1, 2.0), (2, 2, 2.0)])),
            ),
        ],
    )
}

pub fn hs48() -> NlpProblem {
    let n = 5;
    build_problem(
        "hs48",
        n,
        vec![3.0, 5.0, -3.0, 2.0, -2.0],
        Arc::new(|x| (x[0] - 1.0).powi(2) + (x[1] - x[2]).powi(2) + (x[3] - x[4]).powi(2)),
        Arc::new(|x| {
            vec![
                2.0 * (x[0] - 1.0),
                2.0 * (x[1] - x[2]),
                -2.0 * (x[1] - x[2]),
                2.0 * (x[3] - x[4]),
                -2.0 * (x[3] - x[4]),
            ]
        }),
        Arc::new(move |_| {
            mat(
                5,
                &[
                    (0, 0, 2.0),
                    (1, 1, 2.0),
                    (1, 2, -2.0),
                    (2, 2, 2.0),
                    (3, 3, 2.0),
                    (3, 4, -2.0),
                    (4, 4, 2.0),
                ],
            )
        }),
        vec![
            Constraint::linear(Equality, n, vec![1.0; 5], -5.0),
            Constraint::linear(Equality, n, vec![0.0, 0.0, 1.0, -2.0, -2.0], 3.0),
        ],
    )
}

pub fn hs51() -> NlpProblem {
    let n = 5;
    build_problem(
        "hs51",
        n,
        vec![2.5, 0.5, 2.0, -1.0, 0.5],
        Arc::new(|x| {
            (x[0] - x[1]).powi(2)
                + (x[1] + x[2] - 2.0).powi(2)
                + (x[3] - 1.0).powi(2)
                + (x[4] - 1.0).powi(2)
        }),
        Arc::new(|x| {
            let a = x[0] - x[1];
            let b = x[1] + x[2] - 2.0;
            vec![2.0 * a, -2.0 * a + 2.0 * b, 2.0 * b, 2.0 * (x[3] - 1.0), 2.0 * (x[4] - 1.0)]
        }),
        Arc::new(move |_| {
            mat(
                5,
                &[
                    (0, 0, 2.0),
                    (0, 1, -2.0),
                    (1, 1, 4.0),
                    (1, 2, 2.0),
                    (2, 2, 2.0),
                    (3, 3, 2.0),
                    (4, 4, 2.0),
                ],
            )
        }),
        vec![
            Constraint::linear(Equality, n, vec![1.0, 3.0, 0.0, 0.0, 0.0], -4.0),
            Constraint::linear(Equality, n, vec![0.0, 0.0, 1.0, 1.0, -2.0], 0.0),
            Constraint::linear(Equality, n, vec![0.0, 1.0, 0.0, 0.0, -1.0], 0.0),
        ],
    )
}

pub fn hs52() -> NlpProblem {
    let n = 5;
    build_problem(
        "hs52",
        n,
        vec![2.0; 5],
        Arc::new(|x| {
            (4.0 * x[0] - x[1]).powi(2)
                + (x[1] + x[2] - 2.0).powi(2)
                + (x[3] - 1.0).powi(2)
                + (x[4] - 1.0).powi(2)
        }),
        Arc::new(|x| {
            let a = 4.0 * x[0] - x[1];
            let b = x[1] + x[2] - 2.0;
            vec![8.0 * a, -2.0 * a + 2.0 * b, 2.0 * b, 2.0 * (x[3] - 1.0), 2.0 * (x[4] - 1.0)]
        }),
        Arc::new(move |_| {
            mat(
                5,
                &[
                    (0, 0, 32.0),
                    (0, 1, -8.0),
                    (1, 1, 4.0),
                    (1, 2, 2.0),
                    (2, 2, 2.0),
                    (3, 3, 2.0),
                    (4, 4, 2.0),
                ],
            )
        }),
        vec![
            Constraint::linear(Equality, n, vec![1.0, 3.0, 0.0, 0.0, 0.0], 0.0),
            Constraint::linear(Equality, n, vec![0.0, 0.0, 1.0, 1.0, -2.0], 0.0),
            Constraint::linear(Equality, n, vec![0.0, 1.0, 0.0, 0.0, -1.0], 0.0),
        ],
    )
}

pub fn hs61() -> NlpProblem {
    let n = 3;
    build_problem(
        "hs61",
        n,
        vec![0.0; 3],
        Arc::new(|x| {
            4.0 * x[0] * x[0] + 2.0 * x[1] * x[1] + 2.0 * x[2] * x[2]
                - 33.0 * x[0]
                + 16.0 * x[1]
                - 24.0 * x[2]
        }),
        Arc::new(|x| vec![8.0 * x[0] - 33.0, 4.0 * x[1] + 16.0, 4.0 * x[2] - 24.0]),
        Arc::new(move |_| mat(3, &[(0, 0, 8.0), (1, 1, 4.0), (2, 2, 4.0)])),
        vec![
            // 3 x1 - 2 x2^2 - 7 = 0
            Constraint::new(
                Equality,
                Arc::new(|x| 3.0 * x[0] - 2.0 * x[1] * x[1] - 7.0),
                Arc::new(|x| vec![3.0, -4.0 * x[1], 0.0]),
                Arc::new(move |_| mat(3, &[(1, 1, -4.0)])),
            ),
            // 4 x1 - x3^2 - 11 = 0
            Constraint::new(
                Equality,
                Arc::new(|x| 4.0 * x[0] - x[2] * x[2] - 11.0),
                Arc::new(|x| vec![4.0, 0.0, -2.0 * x[2]]),
                Arc::new(move |_| mat(3, &[(2, 2, -2.0)])),
            ),
        ],
    )
}

pub fn hs76() -> NlpProblem {
    let n = 4;
    build_problem(
        "hs76",
        n,
        vec![0.5; 4],
        Arc::new(|x| {
            x[0] * x[0] + 0.5 * x[1] * x[1] + x[2] * x[2] + 0.5 * x[3] * x[3]
                - x[0] * x[2]
                + x[2] * x[3]
                - x[0]
                - 3.0 * x[1]
                + x[2]
                - x[3]
        }),
        Arc::new(|x| {
            vec![
                2.0 * x[0] - x[2] - 1.0,
                x[1] - 3.0,
                2.0 * x[2] - x[0] + x[3] + 1.0,
                x[3] + x[2] - 1.0,
            ]
        }),
        Arc::new(move |_| {
            mat(
                4,
                &[
                    (0, 0, 2.0),
                    (0, 2, -1.0),
                    (1, 1, 1.0),
                    (2, 2, 2.0),
                    (2, 3, 1.0),
                    (3, 3, 1.0),
                ],
            )
        }),
        vec![
            Constraint::linear(Inequality, n, vec![1.0, 2.0, 1.0, 1.0], -5.0),
            Constraint::linear(Inequality, n, vec![3.0, 1.0, 2.0, -1.0], -4.0),
            Constraint::linear(Inequality, n, vec![0.0, -1.0, -4.0, 0.0], 1.5),
            Constraint::lower_bound(n, 0, 0.0),
            Constraint::lower_bound(n, 1, 0.0),
            Constraint::lower_bound(n, 2, 0.0),
            Constraint::lower_bound(n, 3, 0.0),
        ],
    )
}

pub fn hs100() -> NlpProblem {
    let n = 7;
    build_problem(
        "hs100",
        n,
        vec![1.0, 2.0, 0.0, 4.0, 0.0, 1.0, 1.0],
        Arc::new(|x| {
            (x[0] - 10.0).powi(2)
                + 5.0 * (x[1] - 12.0).powi(2)
                + x[2].powi(4)
                + 3.0 * (x[3] - 11.0).powi(2)
                + 10.0 * x[4].powi(6)
                + 7.0 * x[5] * x[5]
                + x[6].powi(4)
                - 4.0 * x[5] * x[6]
                - 10.0 * x[5]
                - 8.0 * x[6]
        }),
        Arc::new(|x| {
            vec![
                2.0 * (x[0] - 10.0),
                10.0 * (x[1] - 12.0),
                4.0 * x[2].powi(3),
                6.0 * (x[3] - 11.0),
                60.0 * x[4].powi(5),
                14.0 * x[5] - 4.0 * x[6] - 10.0,
                4.0 * x[6].powi(3) - 4.0 * x[5] - 8.0,
            ]
        }),
        Arc::new(move |x| {
            mat(
                7,
                &[
                    (0, 0, 2.0),
                    (1, 1, 10.0),
                    (2, 2, 12.0 * x[2] * x[2]),
                    (3, 3, 6.0),
                    (4, 4, 300.0 * x[4].powi(4)),
                    (5, 5, 14.0),
                    (5, 6, -4.0),
                    (6, 6, 12.0 * x[6] * x[6]),
                ],
            )
        }),
        vec![
            Constraint::new(
                Inequality,
                Arc::new(|x| {
                    2.0 * x[0] * x[0] + 3.0 * x[1].powi(4) + x[2] + 4.0 * x[3] * x[3]
                        + 5.0 * x[4]
                        - 127.0
                }),
                Arc::new(|x| {
                    vec![4.0 * x[0], 12.0 * x[1].powi(3), 1.0, 8.0 * x[3], 5.0, 0.0, 0.0]
                }),
                Arc::new(move |x| {
                    mat(7, &[(0, 0, 4.0), (1, 1, 36.0 * x[1] * x[1]), (3, 3, 8.0)])
                }),
            ),
            Constraint::new(
                Inequality,
                Arc::new(|x| {
                    7.0 * x[0] + 3.0 * x[1] + 10.0 * x[2] * x[2] + x[3] - x[4] - 282.0
                }),
                Arc::new(|x| vec![7.0, 3.0, 20.0 * x[2], 1.0, -1.0, 0.0, 0.0]),
                Arc::new(move |_| mat(7, &[(2, 2, 20.0)])),
            ),
            Constraint::new(
                Inequality,
                Arc::new(|x| {
                    23.0 * x[0] + x[1] * x[1] + 6.0 * x[5] * x[5] - 8.0 * x[6] - 196.0
                }),
                Arc::new(|x| vec![23.0, 2.0 * x[1], 0.0, 0.0, 0.0, 12.0 * x[5], -8.0]),
                Arc::new(move |_| mat(7, &[(1, 1, 2.0), (5, 5, 12.0)])),
            ),
            Constraint::new(
                Inequality,
                Arc::new(|x| {
                    4.0 * x[0] * x[0] + x[1] * x[1] - 3.0 * x[0] * x[1] + 2.0 * x[2] * x[2]
                        + 5.0 * x[5]
                        - 11.0 * x[6]
                }),
                Arc::new(|x| {
                    vec![
                        8.0 * x[0] - 3.0 * x[1],
                        2.0 * x[1] - 3.0 * x[0],
                        4.0 * x[2],
                        0.0,
                        0.0,
                        5.0,
                        -11.0,
                    ]
                }),
                Arc::new(move |_| {
                    mat(7, &[(0, 0, 8.0), (0, 1, -3.0), (1, 1, 2.0), (2, 2, 4.0)])
                }),
            ),
        ],
    )
}

pub fn hs113() -> NlpProblem {
    let n = 10;
    build_problem(
        "hs113",
        n,
        vec![2.0, 3.0, 5.0, 5.0, 1.0, 2.0, 7.0, 3.0, 6.0, 10.0],
        Arc::new(|x| {
            x[0] * x[0] + x[1] * x[1] + x[0] * x[1] - 14.0 * x[0] - 16.0 * x[1]
                + (x[2] - 10.0).powi(2)
                + 4.0 * (x[3] - 5.0).powi(2)
                + (x[4] - 3.0).powi(2)
                + 2.0 * (x[5] - 1.0).powi(2)
                + 5.0 * x[6] * x[6]
                + 7.0 * (x[7] - 11.0).powi(2)
                + 2.0 * (x[8] - 10.0).powi(2)
                + (x[9] - 7.0).powi(2)
                + 45.0
        }),
        Arc::new(|x| {
            vec![
                2.0 * x[0] + x[1] - 14.0,
                2.0 * x[1] + x[0] - 16.0,
                2.0 * (x[2] - 10.0),
                8.0 * (x[3] - 5.0),
                2.0 * (x[4] - 3.0),
                4.0 * (x[5] - 1.0),
                10.0 * x[6],
                14.0 * (x[7] - 11.0),
                4.0 * (x[8] - 10.0),
                2.0 * (x[9] - 7.0),
            ]
        }),
        Arc::new(move |_| {
            mat(
                10,
                &[
                    (0, 0, 2.0),
                    (0, 1, 1.0),
                    (1, 1, 2.0),
                    (2, 2, 2.0),
                    (3, 3, 8.0),
                    (4, 4, 2.0),
                    (5, 5, 4.0),
                    (6, 6, 10.0),
                    (7, 7, 14.0),
                    (8, 8, 4.0),
                    (9, 9, 2.0),
                ],
            )
        }),
        vec![
            Constraint::linear(
                Inequality,
                n,
                vec![4.0, 5.0, 0.0, 0.0, 0.0, 0.0, -3.0, 9.0, 0.0, 0.0],
                -105.0,
            ),
            Constraint::linear(
                Inequality,
                n,
                vec![10.0, -8.0, 0.0, 0.0, 0.0, 0.0, -17.0, 2.0, 0.0, 0.0],
                0.0,
            ),
            Constraint::linear(
                Inequality,
                n,
                vec![-8.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 5.0, -2.0],
                -12.0,
            ),
            Constraint::new(
                Inequality,
                Arc::new(|x| {
                    3.0 * (x[0] - 2.0).powi(2) + 4.0 * (x[1] - 3.0).powi(2) + 2.0 * x[2] * x[2]
                        - 7.0 * x[3]
                        - 120.0
                }),
                Arc::new(|x| {
                    let mut g = vec![0.0; 10];
                    g[0] = 6.0 * (x[0] - 2.0);
                    g[1] = 8.0 * (x[1] - 3.0);
                    g[2] = 4.0 * x[2];
                    g[3] = -7.0;
                    g
                }),
                Arc::new(move |_| mat(10, &[(0, 0, 6.0), (1, 1, 8.0), (2, 2, 4.0)])),
            ),
            Constraint::new(
                Inequality,
                Arc::new(|x| {
                    5.0 * x[0] * x[0] + 8.0 * x[1] + (x[2] - 6.0).powi(2) - 2.0 * x[3] - 40.0
                }),
                Arc::new(|x| {
                    let mut g = vec![0.0; 10];
                    g[0] = 10.0 * x[0];
                    g[1] = 8.0;
                    g[2] = 2.0 * (x[2] - 6.0);
                    g[3] = -2.0;
                    g
                }),
                Arc::new(move |_| mat(10, &[(0, 0, 10.0), (2, 2, 2.0)])),
            ),
            Constraint::new(
                Inequality,
                Arc::new(|x| {
                    x[0] * x[0] + 2.0 * (x[1] - 2.0).powi(2) - 2.0 * x[0] * x[1] + 14.0 * x[4]
                        - 6.0 * x[5]
                }),
                Arc::new(|x| {
                    let mut g = vec![0.0; 10];
                    g[0] = 2.0 * x[0] - 2.0 * x[1];
                    g[1] = 4.0 * (x[1] - 2.0) - 2.0 * x[0];
                    g[4] = 14.0;
                    g[5] = -6.0;
                    g
                }),
                Arc::new(move |_| mat(10, &[(0, 0, 2.0), (0, 1, -2.0), (1, 1, 4.0)])),
            ),
            Constraint::new(
                Inequality,
                Arc::new(|x| {
                    0.5 * (x[0] - 8.0).powi(2) + 2.0 * (x[1] - 4.0).powi(2) + 3.0 * x[4] * x[4]
                        - x[5]
                        - 30.0
                }),
                Arc::new(|x| {
                    let mut g = vec![0.0; 10];
                    g[0] = x[0] - 8.0;
                    g[1] = 4.0 * (x[1] - 4.0);
                    g[4] = 6.0 * x[4];
                    g[5] = -1.0;
                    g
                }),
                Arc::new(move |_| mat(10, &[(0, 0, 1.0), (1, 1, 4.0), (4, 4, 6.0)])),
            ),
            Constraint::new(
                Inequality,
                Arc::new(|x| {
                    -3.0 * x[0] + 6.0 * x[1] + 12.0 * (x[8] - 8.0).powi(2) - 7.0 * x[9]
                }),
                Arc::new(|x| {
                    let mut g = vec![0.0; 10];
                    g[0] = -3.0;
                    g[1] = 6.0;
                    g[8] = 24.0 * (x[8] - 8.0);
                    g[9] = -7.0;
                    g
                }),
                Arc::new(move |_| mat(10, &[(8, 8, 24.0)])),
            ),
        ],
    )
}
