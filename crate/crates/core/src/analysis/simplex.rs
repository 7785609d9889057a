//! Nelder-Mead minimization in two dimensions.

#[derive(Debug, Clone, Copy)]
pub(crate) struct Minimum {
    pub point: [f64; 2],
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) struct Options {
    pub max_iterations: usize,
    /// Stop once `f_worst - f_best <= rel_tol * |f_best| + abs_tol` and the
    /// simplex is smaller than `size_tol`.
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub size_tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            rel_tol: 1e-10,
            abs_tol: 1e-30,
            size_tol: 1e-9,
        }
    }
}

pub(crate) fn minimize(
    f: impl Fn([f64; 2]) -> f64,
    start: [f64; 2],
    step: [f64; 2],
    opts: &Options,
) -> Minimum {
    let mut simplex = [
        start,
        [start[0] + step[0], start[1]],
        [start[0], start[1] + step[1]],
    ];
    let mut values = simplex.map(&f);

    for iteration in 0..opts.max_iterations {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|k| simplex[k]);
        values = order.map(|k| values[k]);

        let spread = values[2] - values[0];
        let size = simplex[1..]
            .iter()
            .map(|p| {
                (p[0] - simplex[0][0])
                    .abs()
                    .max((p[1] - simplex[0][1]).abs())
            })
            .fold(0.0, f64::max);
        if spread <= opts.rel_tol * values[0].abs() + opts.abs_tol && size <= opts.size_tol
            || size <= opts.size_tol * 1e-3
        {
            return Minimum {
                point: simplex[0],
                value: values[0],
                iterations: iteration,
                converged: true,
            };
        }

        let centroid = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let along = |t: f64| {
            [
                centroid[0] + t * (simplex[2][0] - centroid[0]),
                centroid[1] + t * (simplex[2][1] - centroid[1]),
            ]
        };

        let reflected = along(-1.0);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
            continue;
        }
        if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
            continue;
        }
        let contracted = if fr < values[2] {
            along(-0.5)
        } else {
            along(0.5)
        };
        let fc = f(contracted);
        if fc < values[2].min(fr) {
            simplex[2] = contracted;
            values[2] = fc;
            continue;
        }
        // shrink toward the best vertex
        for k in 1..3 {
            simplex[k] = [
                simplex[0][0] + 0.5 * (simplex[k][0] - simplex[0][0]),
                simplex[0][1] + 0.5 * (simplex[k][1] - simplex[0][1]),
            ];
            values[k] = f(simplex[k]);
        }
    }
    let best = (0..3)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    Minimum {
        point: simplex[best],
        value: values[best],
        iterations: opts.max_iterations,
        converged: false,
    }
}
