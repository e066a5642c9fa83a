//! Derivative-free simplex minimizer (Nelder–Mead with the standard
//! reflection 1, expansion 2, contraction 1/2, shrink 1/2 coefficients).

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub max_evals: usize,
    /// Stop once both the function-value spread and the coordinate spread
    /// of the simplex fall below this.
    pub tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            max_evals: 100_000,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
    /// Best objective value after every iteration.
    pub best_trace: Vec<f64>,
}

/// Minimizes `f` starting from the simplex `x0, x0 + steps[i] * e_i`.
pub fn minimize(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], steps: &[f64], opts: Options) -> Minimum {
    let n = x0.len();
    assert_eq!(steps.len(), n, "one step per coordinate");
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let mut best_trace = Vec::new();
    let mut converged = false;
    let point = |c: &[f64], d: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(d).map(|(ci, di)| ci + t * (di - ci)).collect()
    };

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        best_trace.push(simplex[0].1);

        let f_spread = simplex[n].1 - simplex[0].1;
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if f_spread <= opts.tol && x_spread <= opts.tol {
            converged = true;
            break;
        }
        if evals >= opts.max_evals {
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let f_worst = simplex[n].1;

        let xr = point(&centroid, &worst, -1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = point(&centroid, &worst, -2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < f_worst {
            let xc = point(&centroid, &xr, 0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = point(&centroid, &worst, 0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fr.min(f_worst) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = point(&best, &vertex.0, 0.5);
            let v = eval(&x, &mut evals);
            *vertex = (x, v);
        }
    }

    let (x, f) = simplex.swap_remove(0);
    Minimum {
        x,
        f,
        evals,
        converged,
        best_trace,
    }
}
