//! Search for functions that satisfy the `eps`-perturbed equation on a grid
//! while staying far from every solution.
//!
//! Candidates are `f_theta(x) = sum_j theta_j sin(j pi x)`. The search
//! maximizes the sup distance of `f_theta` to the family subject to
//! `sup defect(f_theta) <= eps`, through the penalized objective
//! `distance - w * max(0, defect - eps)`. Both the defect at each grid point
//! and the projection residual are linear in `theta`, so the two linear maps
//! are tabulated once and every objective evaluation is a pair of
//! matrix-vector products. The reported numbers of the winner are recomputed
//! through [`fe_defect_sup`] and [`distance_to_family`].
//!
//! For `alpha < 0` a feasible candidate with positive distance would
//! contradict hyperstability; on any finite grid the search instead finds the
//! feasible set squeezed towards zero as the margin shrinks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::fit::{distance_to_family, FamilyBasis};
use crate::analysis::optim::{coordinate_search, nelder_mead, Minimum, StopRule};
use crate::defect::fe_defect_sup;
use crate::domain::{grid_1d, grid_d2, Alpha, GridSpec};
use crate::error::{Error, Result};
use crate::measures::{pow_checked, sine_basis, EvaluableFunction, FamilyMember};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    NelderMead,
    CoordinateSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    pub alpha: Alpha,
    pub eps: f64,
    pub grid: GridSpec,
    pub basis_size: usize,
    pub optimizer: Optimizer,
    /// Iterations per restart.
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    pub penalty_weight: f64,
}

impl SearchConfig {
    /// Defaults: grid `(150, 1e-3)`, 6 basis functions, Nelder-Mead with 8
    /// restarts of 600 iterations, seed 0, penalty weight 1.
    pub fn new(alpha: Alpha, eps: f64) -> Self {
        SearchConfig {
            alpha,
            eps,
            grid: GridSpec::new(150, 1e-3).expect("valid default grid"),
            basis_size: 6,
            optimizer: Optimizer::NelderMead,
            max_iters: 600,
            restarts: 8,
            seed: 0,
            penalty_weight: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::invalid(format!("eps must be finite and >= 0, got {}", self.eps)));
        }
        if self.basis_size == 0 {
            return Err(Error::invalid("basis size must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        if !(self.penalty_weight > 0.0 && self.penalty_weight.is_finite()) {
            return Err(Error::invalid(format!(
                "penalty weight must be positive, got {}",
                self.penalty_weight
            )));
        }
        Ok(())
    }

    /// Slack on `defect <= eps`: `eps * 1e-6 + 1e-12`.
    pub fn feasibility_tolerance(&self) -> f64 {
        self.eps * 1e-6 + 1e-12
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub restart: usize,
    pub iter: usize,
    /// Best feasible distance found so far in this restart.
    pub distance: f64,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub best_distance: f64,
    pub best_defect: f64,
    pub best_coefficients: Vec<f64>,
    /// Restart that produced the winner.
    pub best_restart: usize,
    /// Iterations summed over restarts.
    pub iterations: usize,
    /// Whether the winning restart met its stopping tolerances.
    pub converged: bool,
    pub feasibility_tolerance: f64,
    pub history: Vec<HistoryEntry>,
}

impl SearchReport {
    /// `best_distance / eps`, or `None` when `eps = 0`.
    pub fn distance_ratio(&self, eps: f64) -> Option<f64> {
        (eps > 0.0).then(|| self.best_distance / eps)
    }
}

/// Tabulated linear maps `theta -> defect terms` and `theta -> residual`.
struct LinearModel {
    basis_size: usize,
    /// Row-major `n_points x basis_size`.
    defect_rows: Vec<f64>,
    residual_rows: Vec<f64>,
}

impl LinearModel {
    fn build(alpha: Alpha, grid: &GridSpec, basis_size: usize) -> Result<Self> {
        let a = alpha.value();
        let j = basis_size;
        let points = grid_d2(grid)?;
        let mut defect_rows = vec![0.0; points.len() * j];
        let mut buf = [vec![0.0; j], vec![0.0; j], vec![0.0; j], vec![0.0; j]];
        for (row, p) in defect_rows.chunks_mut(j).zip(&points) {
            let (x, y) = (p.x(), p.y());
            let wx = pow_checked(1.0 - x, a)?;
            let wy = pow_checked(1.0 - y, a)?;
            sine_basis(x, &mut buf[0]);
            sine_basis(y / (1.0 - x), &mut buf[1]);
            sine_basis(y, &mut buf[2]);
            sine_basis(x / (1.0 - y), &mut buf[3]);
            for k in 0..j {
                row[k] = (buf[0][k] + wx * buf[1][k]) - (buf[2][k] + wy * buf[3][k]);
            }
        }

        let xs = grid_1d(grid)?;
        let basis = FamilyBasis::new(&xs, alpha)?;
        let mut residual_rows = vec![0.0; xs.len() * j];
        let mut col = vec![0.0; xs.len()];
        let mut phi = vec![0.0; j];
        for k in 0..j {
            for (slot, &x) in col.iter_mut().zip(&xs) {
                sine_basis(x, &mut phi);
                *slot = phi[k];
            }
            for (i, r) in basis.projection_residual(&col).into_iter().enumerate() {
                residual_rows[i * j + k] = r;
            }
        }
        Ok(LinearModel {
            basis_size: j,
            defect_rows,
            residual_rows,
        })
    }

    fn sup_abs(rows: &[f64], j: usize, theta: &[f64]) -> f64 {
        rows.chunks_exact(j)
            .map(|r| r.iter().zip(theta).map(|(a, t)| a * t).sum::<f64>().abs())
            .fold(0.0f64, f64::max)
    }

    fn defect(&self, theta: &[f64]) -> f64 {
        Self::sup_abs(&self.defect_rows, self.basis_size, theta)
    }

    fn distance(&self, theta: &[f64]) -> f64 {
        Self::sup_abs(&self.residual_rows, self.basis_size, theta)
    }
}

struct RestartOutcome {
    best_theta: Vec<f64>,
    best_distance: f64,
    best_defect: f64,
    iterations: usize,
    converged: bool,
    history: Vec<HistoryEntry>,
}

fn run_restart(cfg: &SearchConfig, model: &LinearModel, restart: usize) -> RestartOutcome {
    let j = cfg.basis_size;
    let eps = cfg.eps;
    let tol = cfg.feasibility_tolerance();
    // work in units of eps so the objective is O(1)
    let unit = if eps > 0.0 { eps } else { 1.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64);
    let mut u0: Vec<f64> = (0..j).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let d0 = model.defect(&u0.iter().map(|u| u * unit).collect::<Vec<_>>());
    if d0 > 0.0 {
        let target = if eps > 0.0 { eps } else { unit };
        for u in u0.iter_mut() {
            *u *= target / d0;
        }
    }
    let step = 0.25 * u0.iter().fold(0.0f64, |m, u| m.max(u.abs())).max(1e-3);

    let mut theta = vec![0.0; j];
    let objective = |u: &[f64], best: &mut (Vec<f64>, f64, f64), theta: &mut Vec<f64>| -> f64 {
        for (t, ui) in theta.iter_mut().zip(u) {
            *t = ui * unit;
        }
        let defect = model.defect(theta);
        let distance = model.distance(theta);
        if defect <= eps + tol && distance > best.1 {
            *best = (theta.clone(), distance, defect);
        }
        (-distance + cfg.penalty_weight * (defect - eps).max(0.0)) / unit
    };

    let stop = StopRule {
        max_iters: cfg.max_iters,
        f_tol: 1e-12,
        x_tol: 1e-10,
    };
    let best_cell = std::cell::RefCell::new((vec![0.0; j], 0.0, 0.0));
    let mut history = Vec::new();
    let f = |u: &[f64]| objective(u, &mut best_cell.borrow_mut(), &mut theta);
    let on_iter = |iter: usize, _: &[f64], _: f64| {
        let b = best_cell.borrow();
        history.push(HistoryEntry {
            restart,
            iter,
            distance: b.1,
            defect: b.2,
        });
    };
    let minimum: Minimum = match cfg.optimizer {
        Optimizer::NelderMead => nelder_mead(f, &u0, step, stop, on_iter),
        Optimizer::CoordinateSearch => coordinate_search(f, &u0, step, stop, on_iter),
    };
    let (best_theta, best_distance, best_defect) = best_cell.into_inner();

    RestartOutcome {
        best_theta,
        best_distance,
        best_defect,
        iterations: minimum.iterations,
        converged: minimum.converged,
        history,
    }
}

/// Maximizes the distance to the family over `eps`-feasible sine expansions.
///
/// Restarts run in parallel; the winner is the largest feasible distance,
/// ties going to the lower restart index, so the report depends only on the
/// configuration.
pub fn counterexample_search(cfg: &SearchConfig) -> Result<SearchReport> {
    cfg.validate()?;
    let model = LinearModel::build(cfg.alpha, &cfg.grid, cfg.basis_size)?;
    let outcomes: Vec<RestartOutcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_restart(cfg, &model, r))
        .collect();

    let mut winner = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.best_distance > outcomes[winner].best_distance {
            winner = i;
        }
    }
    let iterations = outcomes.iter().map(|o| o.iterations).sum();
    let history: Vec<HistoryEntry> = outcomes.iter().flat_map(|o| o.history.iter().copied()).collect();
    let best = &outcomes[winner];

    let f = candidate(cfg.alpha, best.best_theta.clone());
    let best_defect = fe_defect_sup(&f, cfg.alpha, &cfg.grid)?.sup_defect;
    let best_distance = distance_to_family(&f, cfg.alpha, &cfg.grid)?.dist_sup;
    debug_assert!((best_defect - best.best_defect).abs() <= 1e-9 * best.best_defect.max(1e-300));

    Ok(SearchReport {
        best_distance,
        best_defect,
        best_coefficients: best.best_theta.clone(),
        best_restart: winner,
        iterations,
        converged: best.converged,
        feasibility_tolerance: cfg.feasibility_tolerance(),
        history,
    })
}

/// `sum_j theta_j sin(j pi x)` as an [`EvaluableFunction`].
pub fn candidate(alpha: Alpha, coefficients: Vec<f64>) -> EvaluableFunction {
    EvaluableFunction::BasisPerturbed {
        base: FamilyMember::zero(alpha),
        coefficients,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(alpha: f64, eps: f64) -> SearchConfig {
        let mut cfg = SearchConfig::new(Alpha::new(alpha).unwrap(), eps);
        cfg.grid = GridSpec::new(40, 1e-2).unwrap();
        cfg.max_iters = 150;
        cfg.restarts = 3;
        cfg
    }

    #[test]
    fn tabulated_model_matches_direct_sweep() {
        let alpha = Alpha::new(-1.0).unwrap();
        let grid = GridSpec::new(30, 1e-2).unwrap();
        let model = LinearModel::build(alpha, &grid, 4).unwrap();
        let theta = vec![1e-3, -2e-3, 5e-4, 7e-4];
        let f = candidate(alpha, theta.clone());
        let direct = fe_defect_sup(&f, alpha, &grid).unwrap().sup_defect;
        assert!((model.defect(&theta) - direct).abs() <= 1e-12 * direct);
        let dist = distance_to_family(&f, alpha, &grid).unwrap().dist_sup;
        assert!((model.distance(&theta) - dist).abs() <= 1e-10 * dist);
    }

    #[test]
    fn result_is_feasible_and_reproducible() {
        let cfg = small(0.0, 1e-3);
        let a = counterexample_search(&cfg).unwrap();
        assert!(a.best_defect <= cfg.eps + a.feasibility_tolerance);
        assert!(a.best_distance > 0.0);
        let b = counterexample_search(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_eps_admits_only_solutions() {
        for alpha in [-1.0, 0.0] {
            let cfg = small(alpha, 0.0);
            let r = counterexample_search(&cfg).unwrap();
            assert!(
                r.best_distance <= cfg.feasibility_tolerance(),
                "{alpha}: {}",
                r.best_distance
            );
        }
    }

    #[test]
    fn coordinate_search_runs() {
        let mut cfg = small(0.0, 1e-3);
        cfg.optimizer = Optimizer::CoordinateSearch;
        let r = counterexample_search(&cfg).unwrap();
        assert!(r.best_defect <= cfg.eps + r.feasibility_tolerance);
        assert!(r.best_distance > 0.0);
    }

    #[test]
    fn invalid_config() {
        let mut cfg = small(-1.0, 1e-3);
        cfg.max_iters = 0;
        assert!(counterexample_search(&cfg).is_err());
        let mut cfg = small(-1.0, 1e-3);
        cfg.penalty_weight = 0.0;
        assert!(counterexample_search(&cfg).is_err());
        let cfg = small(-1.0, -1.0);
        assert!(counterexample_search(&cfg).is_err());
    }
}
