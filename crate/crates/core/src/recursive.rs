//! Measure sequences `I_n` on the open simplex built from a two-point kernel
//! by the alpha-recursion
//!
//! ```text
//! I_n(p) = I_{n-1}(p1 + p2, p3, ..., pn) + (p1 + p2)^alpha I_2(p1/(p1+p2), p2/(p1+p2)) + delta_n(p)
//! ```
//!
//! with optional bounded perturbations `delta_n`, and the checks that replay
//! the cumulative error bound `|I_n - J_n| <= sum_{k=2}^{n-1} eps_k`.
//!
//! The kernel convention is `f(x) = I_2(1 - x, x)`, i.e. `I_2(p1, p2) = f(p2)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{grid_simplex, Alpha, SimplexPoint};
use crate::error::{Error, Result};
use crate::measures::{eval_j, family_from_j, pow_checked, EvaluableFunction, JParams, UnitFunction};

/// Nonnegative budgets `eps_1, eps_2, ...`.
///
/// `eps_1` bounds the 3-semi-symmetry defect; `eps_k` for `k >= 2` bounds the
/// recursion defect at level `k + 1`. Entries past the end of the list are 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EpsilonBudget {
    eps: Vec<f64>,
}

impl EpsilonBudget {
    /// `eps[0]` is `eps_1`, `eps[1]` is `eps_2`, and so on.
    pub fn new(eps: Vec<f64>) -> Result<Self> {
        if let Some(bad) = eps.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
            return Err(Error::invalid(format!(
                "budgets must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(EpsilonBudget { eps })
    }

    /// The same budget `eps` for every recursion level `k = 2..=k_max`, `eps_1 = 0`.
    pub fn uniform_levels(eps: f64, k_max: usize) -> Result<Self> {
        let mut v = vec![0.0; k_max.max(1)];
        for slot in v.iter_mut().skip(1) {
            *slot = eps;
        }
        Self::new(v)
    }

    /// `eps_k`, 1-based.
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.eps.get(k - 1).copied().unwrap_or(0.0)
    }

    /// `sum_{k=2}^{n-1} eps_k`; zero for `n = 2`.
    pub fn cumulative(&self, n: usize) -> f64 {
        (2..n).map(|k| self.get(k)).fold(0.0, |acc, e| acc + e)
    }
}

/// The `eps` for which `x -> I_2(1 - x, x)` satisfies the stability inequality
/// when the level-3 recursion defect is at most `eps_2` and the semi-symmetry
/// defect at most `eps_1`: `2 eps_2 + eps_1`.
pub fn kernel_stability_eps(eps: &EpsilonBudget) -> f64 {
    2.0 * eps.get(2) + eps.get(1)
}

/// A bounded perturbation added at one level of the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevelPerturbation {
    Constant {
        value: f64,
    },
    /// `amplitude * prod_i sin(pi p_i) / sin(pi / n)^n`, clipped to `[-amplitude, amplitude]`.
    ///
    /// `log sin` is concave on `(0, pi)`, so the product peaks at the uniform
    /// point where the normalized value is exactly `amplitude`.
    SineProduct {
        amplitude: f64,
    },
}

impl LevelPerturbation {
    pub fn eval(&self, p: &[f64]) -> f64 {
        match *self {
            LevelPerturbation::Constant { value } => value,
            LevelPerturbation::SineProduct { amplitude } => {
                let n = p.len() as f64;
                let peak = (PI / n).sin().powf(n);
                let prod: f64 = p.iter().map(|&pi| (PI * pi).sin()).product();
                let a = amplitude.abs();
                (amplitude * prod / peak).clamp(-a, a)
            }
        }
    }
}

/// Per-level perturbations together with the budgets they must respect.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Perturbations {
    pub budget: EpsilonBudget,
    /// `(n, delta_n)` pairs; levels `n >= 3`.
    pub levels: Vec<(usize, LevelPerturbation)>,
}

impl Perturbations {
    fn at(&self, n: usize) -> Option<&LevelPerturbation> {
        self.levels.iter().find(|(k, _)| *k == n).map(|(_, d)| d)
    }
}

/// A sequence `(I_n)` given by its kernel and the recursion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSequence {
    pub kernel: EvaluableFunction,
    pub alpha: Alpha,
    pub perturbations: Option<Perturbations>,
}

impl MeasureSequence {
    pub fn new(kernel: EvaluableFunction, alpha: Alpha) -> Self {
        MeasureSequence {
            kernel,
            alpha,
            perturbations: None,
        }
    }

    /// Perturbs every level `3..=n_max` by the given shape with amplitude equal to
    /// that level's budget `eps_{n-1}`.
    pub fn with_saturating_perturbations(
        mut self,
        budget: EpsilonBudget,
        n_max: usize,
        shape: fn(f64) -> LevelPerturbation,
    ) -> Self {
        let levels = (3..=n_max).map(|n| (n, shape(budget.get(n - 1)))).collect();
        self.perturbations = Some(Perturbations { budget, levels });
        self
    }

    pub fn with_perturbations(mut self, perturbations: Perturbations) -> Self {
        self.perturbations = Some(perturbations);
        self
    }

    /// `I_2(p1, p2) = f(p2)`.
    #[inline]
    fn i2(&self, p2: f64) -> Result<f64> {
        self.kernel.eval(p2)
    }

    /// The weighted two-point term `(p1 + p2)^alpha I_2(p1/s, p2/s)` and `s`.
    fn split_term(&self, p1: f64, p2: f64) -> Result<(f64, f64)> {
        let s = p1 + p2;
        Ok((pow_checked(s, self.alpha.value())? * self.i2(p2 / s)?, s))
    }

    fn delta(&self, n: usize, p: &[f64]) -> Result<f64> {
        let Some(pert) = &self.perturbations else {
            return Ok(0.0);
        };
        let Some(d) = pert.at(n) else {
            return Ok(0.0);
        };
        let value = d.eval(p);
        let budget = pert.budget.get(n - 1);
        if value.abs() > budget {
            return Err(Error::BudgetViolation {
                level: n,
                value,
                budget,
            });
        }
        Ok(value)
    }

    /// `I_n(p)` by left-fold merging of the first two coordinates.
    fn eval_slice(&self, p: &[f64]) -> Result<f64> {
        let n = p.len();
        if n == 2 {
            return self.i2(p[1]);
        }
        let mut cur = p.to_vec();
        let mut acc = 0.0;
        for level in (3..=n).rev() {
            acc += self.delta(level, &cur)?;
            let (term, s) = self.split_term(cur[0], cur[1])?;
            acc += term;
            cur.remove(0);
            cur[0] = s;
        }
        Ok(acc + self.i2(cur[1])?)
    }
}

/// `I_n(p)`.
pub fn eval_measure(seq: &MeasureSequence, p: &SimplexPoint) -> Result<f64> {
    seq.eval_slice(p.as_slice())
}

/// `|I_n(p) - I_{n-1}(p1 + p2, p3, ...) - (p1 + p2)^alpha I_2(p1/(p1+p2), p2/(p1+p2))|`
/// with the largest of the three magnitudes as scale.
pub fn recursivity_defect(seq: &MeasureSequence, p: &SimplexPoint) -> Result<(f64, f64)> {
    let v = p.as_slice();
    if v.len() < 3 {
        return Err(Error::invalid("recursivity defect needs n >= 3"));
    }
    let full = seq.eval_slice(v)?;
    let mut merged = Vec::with_capacity(v.len() - 1);
    merged.push(v[0] + v[1]);
    merged.extend_from_slice(&v[2..]);
    let lower = seq.eval_slice(&merged)?;
    let (split, _) = seq.split_term(v[0], v[1])?;
    let scale = full.abs().max(lower.abs()).max(split.abs());
    Ok(((full - lower - split).abs(), scale))
}

/// `|I_3(p1, p2, p3) - I_3(p1, p3, p2)|` with scale.
pub fn semisymmetry_defect(seq: &MeasureSequence, p: &SimplexPoint) -> Result<(f64, f64)> {
    let v = p.as_slice();
    if v.len() != 3 {
        return Err(Error::invalid(format!(
            "semi-symmetry is defined on n = 3, got n = {}",
            v.len()
        )));
    }
    let a = seq.eval_slice(v)?;
    let b = seq.eval_slice(&[v[0], v[2], v[1]])?;
    Ok(((a - b).abs(), a.abs().max(b.abs())))
}

/// `x -> I_2(1 - x, x)`, which is the kernel itself under the crate's convention.
pub fn kernel_from_sequence(seq: &MeasureSequence) -> EvaluableFunction {
    seq.kernel.clone()
}

/// The kernel whose sequence is `J_n(a, b)`.
pub fn kernel_from_j(params: JParams, alpha: Alpha) -> EvaluableFunction {
    EvaluableFunction::family(family_from_j(params, alpha), alpha)
}

/// One level of [`cumulative_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    pub n: usize,
    pub max_gap: f64,
    pub bound: f64,
    /// Largest `|I_n|` or `|J_n|` seen at this level.
    pub scale: f64,
    pub n_points: usize,
    pub ok: bool,
}

/// Rounding allowance in [`cumulative_bound_check`], relative to the level's scale.
pub const BOUND_TOLERANCE: f64 = 1e-10;

/// For `n = 2..=n_max`, the largest `|I_n(p) - J_n(p)|` over `grid_simplex(n, m)`
/// against `sum_{k=2}^{n-1} eps_k`.
pub fn cumulative_bound_check(seq: &MeasureSequence, params: JParams, n_max: usize, m: usize) -> Result<Vec<BoundRow>> {
    if n_max < 2 {
        return Err(Error::invalid(format!("n_max must be at least 2, got {n_max}")));
    }
    let budget = seq.perturbations.as_ref().map(|p| p.budget.clone()).unwrap_or_default();
    let mut rows = Vec::with_capacity(n_max - 1);
    for n in 2..=n_max {
        let points = grid_simplex(n, m)?;
        let per_point: Vec<Result<(f64, f64)>> = points
            .par_iter()
            .map(|p| {
                let i = eval_measure(seq, p)?;
                let j = eval_j(params, seq.alpha, p);
                Ok(((i - j).abs(), i.abs().max(j.abs())))
            })
            .collect();
        let mut max_gap = 0.0f64;
        let mut scale = 0.0f64;
        for item in per_point {
            let (gap, s) = item?;
            max_gap = max_gap.max(gap);
            scale = scale.max(s);
        }
        let bound = budget.cumulative(n);
        rows.push(BoundRow {
            n,
            max_gap,
            bound,
            scale,
            n_points: points.len(),
            ok: max_gap <= bound + BOUND_TOLERANCE * scale.max(1.0),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{params_from_fit, FamilyMember, SolutionParams};
    use approx::assert_relative_eq;

    fn alpha(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    fn sp(p: &[f64]) -> SimplexPoint {
        SimplexPoint::new(p.to_vec()).unwrap()
    }

    fn family_seq(c: f64, d: f64, a: f64) -> MeasureSequence {
        MeasureSequence::new(EvaluableFunction::family(SolutionParams { c, d }, alpha(a)), alpha(a))
    }

    #[test]
    fn three_point_expansion() {
        // f(x) = 1/x: I_3 = I_2(3/4, 1/4) + (3/4)^-1 I_2(2/3, 1/3) = 4 + (4/3) 3 = 8
        let seq = family_seq(1.0, 0.0, -1.0);
        let p = sp(&[0.5, 0.25, 0.25]);
        let v = eval_measure(&seq, &p).unwrap();
        assert_relative_eq!(v, 8.0, max_relative = 1e-14);
        let j = eval_j(params_from_fit(1.0, 0.0, alpha(-1.0)), alpha(-1.0), &p);
        assert_relative_eq!(v, j, max_relative = 1e-14);
    }

    #[test]
    fn two_point_is_kernel() {
        let seq = family_seq(0.4, 1.1, -0.7);
        for x in [0.1, 0.37, 0.9] {
            let v = eval_measure(&seq, &sp(&[1.0 - x, x])).unwrap();
            assert_relative_eq!(v, seq.kernel.eval(x).unwrap(), max_relative = 1e-14);
        }
    }

    #[test]
    fn zero_perturbations_change_nothing() {
        let plain = family_seq(0.4, 1.1, -0.7);
        let zero = plain
            .clone()
            .with_saturating_perturbations(EpsilonBudget::default(), 6, |a| LevelPerturbation::SineProduct {
                amplitude: a,
            });
        for p in grid_simplex(5, 9).unwrap() {
            assert_eq!(eval_measure(&plain, &p).unwrap(), eval_measure(&zero, &p).unwrap());
        }
    }

    #[test]
    fn budget_violation_is_reported() {
        let budget = EpsilonBudget::uniform_levels(1e-3, 6).unwrap();
        let seq = family_seq(1.0, 0.0, -1.0).with_perturbations(Perturbations {
            budget,
            levels: vec![(4, LevelPerturbation::Constant { value: 2e-3 })],
        });
        let err = eval_measure(&seq, &sp(&[0.25, 0.25, 0.25, 0.25])).unwrap_err();
        assert!(matches!(err, Error::BudgetViolation { level: 4, .. }), "{err}");
        // level 3 has no perturbation and evaluates fine
        assert!(eval_measure(&seq, &sp(&[0.5, 0.25, 0.25])).is_ok());
    }

    #[test]
    fn sine_product_peaks_at_budget() {
        for n in 2..9 {
            let d = LevelPerturbation::SineProduct { amplitude: 1e-3 };
            let u = vec![1.0 / n as f64; n];
            assert!((d.eval(&u) - 1e-3).abs() <= 1e-18);
            for p in grid_simplex(n, 3 * n).unwrap() {
                assert!(d.eval(p.as_slice()).abs() <= 1e-3);
            }
        }
    }

    #[test]
    fn recursivity_defect_examples() {
        let seq = family_seq(0.4, 1.1, -0.7);
        for p in grid_simplex(5, 11).unwrap() {
            let (d, s) = recursivity_defect(&seq, &p).unwrap();
            assert!(d <= 1e-12 * s.max(1.0));
        }
        let budget = EpsilonBudget::uniform_levels(1e-3, 8).unwrap();
        let pert = seq.with_saturating_perturbations(budget, 8, |a| LevelPerturbation::SineProduct { amplitude: a });
        for p in grid_simplex(4, 12).unwrap() {
            let (d, s) = recursivity_defect(&pert, &p).unwrap();
            assert!(d <= 1e-3 + 1e-12 * s.max(1.0));
        }
        assert!(recursivity_defect(&pert, &sp(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn j_sequence_is_recursive_and_semisymmetric() {
        let a = alpha(-1.3);
        let params = JParams { a: 0.8, b: -1.9 };
        let seq = MeasureSequence::new(kernel_from_j(params, a), a);
        for p in grid_simplex(3, 14).unwrap() {
            let (d, s) = semisymmetry_defect(&seq, &p).unwrap();
            assert!(d <= 1e-10 * s.max(1.0), "{p:?} {d}");
            let (d, s) = recursivity_defect(&seq, &p).unwrap();
            assert!(d <= 1e-10 * s.max(1.0));
        }
    }

    #[test]
    fn semisymmetry_examples() {
        let sq = MeasureSequence::new(
            EvaluableFunction::Polynomial {
                coefficients: vec![0.0, 0.0, 1.0],
            },
            alpha(-1.0),
        );
        assert_eq!(semisymmetry_defect(&sq, &sp(&[0.5, 0.25, 0.25])).unwrap().0, 0.0);
        let (d, _) = semisymmetry_defect(&sq, &sp(&[0.2, 0.3, 0.5])).unwrap();
        // |f(x) + (1-x)^-1 f(y/(1-x)) - f(y) - (1-y)^-1 f(x/(1-y))| at x = 0.5, y = 0.3
        let f = |t: f64| t * t;
        let oracle = (f(0.5) + f(0.3 / 0.5) / 0.5 - f(0.3) - f(0.5 / 0.7) / 0.7).abs();
        assert!(d > 0.0);
        assert_relative_eq!(d, oracle, max_relative = 1e-13);
    }

    #[test]
    fn budget_bookkeeping() {
        let e = EpsilonBudget::new(vec![0.1, 0.2]).unwrap();
        assert_relative_eq!(kernel_stability_eps(&e), 0.5);
        assert_eq!(kernel_stability_eps(&EpsilonBudget::new(vec![0.0, 0.0]).unwrap()), 0.0);
        assert_eq!(kernel_stability_eps(&EpsilonBudget::new(vec![1.0, 0.0]).unwrap()), 1.0);
        assert_eq!(e.cumulative(2).to_bits(), 0.0f64.to_bits());
        assert_relative_eq!(e.cumulative(3), 0.2);
        assert!(EpsilonBudget::new(vec![-1.0]).is_err());
    }

    #[test]
    fn kernel_round_trips() {
        let a = alpha(-2.0);
        let fam = EvaluableFunction::Family(FamilyMember::new(SolutionParams { c: 0.5, d: 3.0 }, a));
        assert_eq!(kernel_from_sequence(&MeasureSequence::new(fam.clone(), a)), fam);
        let constant = EvaluableFunction::constant(2.0);
        let k = kernel_from_sequence(&MeasureSequence::new(constant, a));
        assert_eq!(k.eval(0.3).unwrap(), 2.0);
        assert_eq!(k.eval(0.8).unwrap(), 2.0);
    }

    #[test]
    fn kernel_of_j_matches_j2() {
        let a = alpha(-0.6);
        let params = JParams { a: 1.7, b: -0.3 };
        let k = kernel_from_j(params, a);
        let nrm = (1.0 - a.value()).exp2() - 1.0;
        let c = params.a / nrm;
        let d = params.a / nrm + params.b;
        for i in 1..1000 {
            let x = i as f64 / 1000.0;
            let direct = eval_j(params, a, &sp(&[1.0 - x, x]));
            assert_relative_eq!(k.eval(x).unwrap(), direct, max_relative = 1e-12, epsilon = 1e-13);
            let closed = c * x.powf(a.value()) + d * (1.0 - x).powf(a.value()) - d;
            assert_relative_eq!(closed, direct, max_relative = 1e-12, epsilon = 1e-13);
        }
    }

    #[test]
    fn bound_check_small() {
        let seq = family_seq(1.0, 0.5, -1.0);
        let params = params_from_fit(1.0, 0.5, alpha(-1.0));
        let rows = cumulative_bound_check(&seq, params, 5, 10).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].bound, 0.0);
        assert!(rows.iter().all(|r| r.ok && r.max_gap <= 1e-9 * r.scale.max(1.0)));
        let two = cumulative_bound_check(&seq, params, 2, 10).unwrap();
        assert_eq!(two.len(), 1);
        assert_eq!(two[0].bound, 0.0);
        assert!(cumulative_bound_check(&seq, params, 1, 10).is_err());
        assert!(matches!(
            cumulative_bound_check(&seq, params, 5, 4),
            Err(Error::EmptyGrid(_))
        ));
    }

    #[test]
    fn constant_perturbation_saturates_bound() {
        let budget = EpsilonBudget::uniform_levels(1e-3, 8).unwrap();
        let seq = family_seq(1.0, 0.5, -1.0)
            .with_saturating_perturbations(budget, 6, |a| LevelPerturbation::Constant { value: a });
        let params = params_from_fit(1.0, 0.5, alpha(-1.0));
        for r in cumulative_bound_check(&seq, params, 6, 12).unwrap() {
            assert!(r.ok, "{r:?}");
            assert_relative_eq!(r.max_gap, r.bound, epsilon = 1e-10 * r.scale.max(1.0));
        }
    }
}
