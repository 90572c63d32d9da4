//! Derivative-free minimizers used by the counterexample search.

/// Outcome of a local minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_iters: usize,
    /// Spread of objective values across the simplex (or the last sweep).
    pub f_tol: f64,
    /// Simplex diameter or pattern step.
    pub x_tol: f64,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Nelder-Mead simplex method.
///
/// The starting simplex is `x0` plus `step` along each axis. `on_iter` sees
/// the iteration index and the current best vertex after every iteration.
pub fn nelder_mead<F, C>(mut f: F, x0: &[f64], step: f64, stop: StopRule, mut on_iter: C) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
    C: FnMut(usize, &[f64], f64),
{
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..stop.max_iters {
        iterations = iter + 1;
        // stable sort keeps the result independent of anything but the values
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if spread.abs() <= stop.f_tol && diameter <= stop.x_tol {
            converged = true;
            on_iter(iter, &simplex[0], values[0]);
            break;
        }

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, vi) in centroid.iter_mut().zip(v) {
                *c += vi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(REFLECT);
        let fr = f(&xr);
        if fr < values[0] {
            let xe = along(REFLECT * EXPAND);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let xc = along(REFLECT * CONTRACT);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(-CONTRACT);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=n {
                    for (vi, bi) in simplex[i].iter_mut().zip(&best) {
                        *vi = bi + SHRINK * (*vi - bi);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }

        let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
        on_iter(iter, &simplex[best], values[best]);
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

/// Compass search: try `+-step` along every axis, keep improvements, halve the
/// step after a sweep without one. One iteration is one sweep.
pub fn coordinate_search<F, C>(mut f: F, x0: &[f64], step: f64, stop: StopRule, mut on_iter: C) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
    C: FnMut(usize, &[f64], f64),
{
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut step = step;
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..stop.max_iters {
        iterations = iter + 1;
        let before = fx;
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut trial = x.clone();
                trial[i] += dir * step;
                let ft = f(&trial);
                if ft < fx {
                    x = trial;
                    fx = ft;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
        on_iter(iter, &x, fx);
        if step <= stop.x_tol && (before - fx).abs() <= stop.f_tol {
            converged = true;
            break;
        }
    }
    Minimum {
        x,
        value: fx,
        iterations,
        converged,
    }
}
