//! Closed-form evaluators: the two-parameter solution family, its extension
//! to `[0, 1]`, degree-alpha entropy and the comparison measures `J_n`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::domain::{Alpha, SimplexPoint};
use crate::error::{Error, Result};

/// `base^alpha` for a strictly positive base.
///
/// A nonpositive base means a caller produced a point outside its domain.
#[inline]
pub fn pow_checked(base: f64, alpha: f64) -> Result<f64> {
    if base > 0.0 && base.is_finite() {
        Ok(base.powf(alpha))
    } else {
        Err(Error::domain(format!("power base must be positive, got {base}")))
    }
}

/// `2^(1 - alpha) - 1`, the entropy normalizer. Nonzero because `alpha != 1`.
#[inline]
pub fn tsallis_normalizer(alpha: Alpha) -> f64 {
    (1.0 - alpha.value()).exp2() - 1.0
}

/// A real function on `(0, 1)` that the defect functionals can evaluate.
pub trait UnitFunction: Sync {
    fn eval(&self, x: f64) -> Result<f64>;

    /// Whether evaluating at `x` leaves the range the function was built from.
    fn extrapolates(&self, _x: f64) -> bool {
        false
    }
}

impl<F: UnitFunction + ?Sized> UnitFunction for &F {
    fn eval(&self, x: f64) -> Result<f64> {
        (**self).eval(x)
    }

    fn extrapolates(&self, x: f64) -> bool {
        (**self).extrapolates(x)
    }
}

/// Coefficients `(c, d)` of `f(x) = c x^alpha + d (1 - x)^alpha - d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolutionParams {
    pub c: f64,
    pub d: f64,
}

impl SolutionParams {
    pub fn new(c: f64, d: f64) -> Result<Self> {
        if !(c.is_finite() && d.is_finite()) {
            return Err(Error::invalid(format!(
                "family parameters must be finite, got ({c}, {d})"
            )));
        }
        Ok(SolutionParams { c, d })
    }
}

/// Coefficients `(a, b)` of `J_n(p) = a H_n(p) + b (p_1^alpha - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JParams {
    pub a: f64,
    pub b: f64,
}

impl JParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::invalid(format!(
                "measure parameters must be finite, got ({a}, {b})"
            )));
        }
        Ok(JParams { a, b })
    }
}

fn check_open(x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("argument must lie in (0, 1), got {x}")))
    }
}

/// `c x^alpha + d (1 - x)^alpha - d` on the open interval.
pub fn eval_family(params: SolutionParams, alpha: Alpha, x: f64) -> Result<f64> {
    check_open(x)?;
    let a = alpha.value();
    Ok(params.c * pow_checked(x, a)? + params.d * pow_checked(1.0 - x, a)? - params.d)
}

/// The family extended to `[0, 1]`: `0` at `x = 0`, `c - d` at `x = 1`.
pub fn eval_closed_family(params: SolutionParams, alpha: Alpha, x: f64) -> Result<f64> {
    if x == 0.0 {
        Ok(0.0)
    } else if x == 1.0 {
        Ok(params.c - params.d)
    } else if x > 0.0 && x < 1.0 {
        eval_family(params, alpha, x)
    } else {
        Err(Error::domain(format!("argument must lie in [0, 1], got {x}")))
    }
}

/// Degree-alpha entropy `(2^(1-alpha) - 1)^(-1) (sum p_i^alpha - 1)`.
pub fn entropy_alpha(alpha: Alpha, p: &SimplexPoint) -> f64 {
    let a = alpha.value();
    let sum: f64 = p.as_slice().iter().map(|&pi| pi.powf(a)).sum();
    (sum - 1.0) / tsallis_normalizer(alpha)
}

/// `a H_n(p) + b (p_1^alpha - 1)`.
pub fn eval_j(params: JParams, alpha: Alpha, p: &SimplexPoint) -> f64 {
    let p1 = p.as_slice()[0];
    params.a * entropy_alpha(alpha, p) + params.b * (p1.powf(alpha.value()) - 1.0)
}

/// Measure parameters matching a family kernel: `a = (2^(1-alpha) - 1) c`, `b = d - c`.
pub fn params_from_fit(c: f64, d: f64, alpha: Alpha) -> JParams {
    JParams {
        a: tsallis_normalizer(alpha) * c,
        b: d - c,
    }
}

/// Inverse of [`params_from_fit`]: the family member `x -> J_2(1 - x, x)`.
pub fn family_from_j(params: JParams, alpha: Alpha) -> SolutionParams {
    let c = params.a / tsallis_normalizer(alpha);
    SolutionParams { c, d: c + params.b }
}

/// A family member with its own exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyMember {
    pub params: SolutionParams,
    pub alpha: Alpha,
}

impl FamilyMember {
    pub fn new(params: SolutionParams, alpha: Alpha) -> Self {
        FamilyMember { params, alpha }
    }

    pub fn zero(alpha: Alpha) -> Self {
        FamilyMember {
            params: SolutionParams { c: 0.0, d: 0.0 },
            alpha,
        }
    }
}

impl UnitFunction for FamilyMember {
    fn eval(&self, x: f64) -> Result<f64> {
        eval_family(self.params, self.alpha, x)
    }
}

/// `phi_j(x) = sin(j pi x)` for `j = 1..=out.len()`.
#[inline]
pub fn sine_basis(x: f64, out: &mut [f64]) {
    for (j, slot) in out.iter_mut().enumerate() {
        *slot = ((j + 1) as f64 * PI * x).sin();
    }
}

/// Tabulated data with piecewise-linear interpolation.
///
/// Outside its node range the function is clamped to the end values;
/// [`UnitFunction::extrapolates`] reports those arguments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != values.len() {
            return Err(Error::invalid(format!(
                "sampled function needs matching non-empty nodes and values ({} vs {})",
                nodes.len(),
                values.len()
            )));
        }
        for &x in &nodes {
            check_open(x)?;
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sample nodes must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sample values must be finite"));
        }
        Ok(SampledFunction { nodes, values })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn interpolate(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if x <= self.nodes[0] {
            return self.values[0];
        }
        if x >= self.nodes[n - 1] {
            return self.values[n - 1];
        }
        // first node strictly greater than x; 1 <= hi <= n - 1
        let hi = self.nodes.partition_point(|&node| node <= x);
        let lo = hi - 1;
        let t = (x - self.nodes[lo]) / (self.nodes[hi] - self.nodes[lo]);
        self.values[lo] + t * (self.values[hi] - self.values[lo])
    }
}

/// A real function on `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvaluableFunction {
    /// A member of the solution family.
    Family(FamilyMember),
    /// A family member plus `sum_j theta_j sin(j pi x)`.
    BasisPerturbed {
        base: FamilyMember,
        coefficients: Vec<f64>,
    },
    /// `sum_k coefficients[k] x^k`.
    Polynomial {
        coefficients: Vec<f64>,
    },
    Sampled(SampledFunction),
}

impl EvaluableFunction {
    pub fn family(params: SolutionParams, alpha: Alpha) -> Self {
        EvaluableFunction::Family(FamilyMember::new(params, alpha))
    }

    pub fn constant(value: f64) -> Self {
        EvaluableFunction::Polynomial {
            coefficients: vec![value],
        }
    }
}

impl UnitFunction for EvaluableFunction {
    fn eval(&self, x: f64) -> Result<f64> {
        eval_function(self, x)
    }

    fn extrapolates(&self, x: f64) -> bool {
        match self {
            EvaluableFunction::Sampled(s) => x < s.nodes[0] || x > s.nodes[s.nodes.len() - 1],
            _ => false,
        }
    }
}

/// Evaluates any [`EvaluableFunction`] variant at `x in (0, 1)`.
pub fn eval_function(f: &EvaluableFunction, x: f64) -> Result<f64> {
    check_open(x)?;
    match f {
        EvaluableFunction::Family(m) => m.eval(x),
        EvaluableFunction::BasisPerturbed { base, coefficients } => {
            let mut v = base.eval(x)?;
            for (j, theta) in coefficients.iter().enumerate() {
                v += theta * ((j + 1) as f64 * PI * x).sin();
            }
            Ok(v)
        }
        EvaluableFunction::Polynomial { coefficients } => {
            Ok(coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c))
        }
        EvaluableFunction::Sampled(s) => Ok(s.interpolate(x)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn alpha(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    fn sp(p: &[f64]) -> SimplexPoint {
        SimplexPoint::new(p.to_vec()).unwrap()
    }

    #[test]
    fn family_examples() {
        let a = alpha(-1.0);
        assert_relative_eq!(eval_family(SolutionParams { c: 1.0, d: 0.0 }, a, 0.5).unwrap(), 2.0);
        assert_relative_eq!(eval_family(SolutionParams { c: 0.0, d: 1.0 }, a, 0.5).unwrap(), 1.0);
        assert_relative_eq!(
            eval_family(SolutionParams { c: 2.0, d: 3.0 }, a, 0.25).unwrap(),
            9.0,
            max_relative = 1e-15
        );
        assert!(eval_family(SolutionParams { c: 1.0, d: 0.0 }, a, 1.0).is_err());
        assert!(eval_family(SolutionParams { c: 1.0, d: 0.0 }, a, 0.0).is_err());
    }

    #[test]
    fn closed_family_examples() {
        let params = SolutionParams { c: 5.0, d: 2.0 };
        assert_eq!(eval_closed_family(params, alpha(-2.0), 0.0).unwrap(), 0.0);
        assert_eq!(eval_closed_family(params, alpha(-2.0), 1.0).unwrap(), 3.0);
        let unit = SolutionParams { c: 1.0, d: 0.0 };
        assert_relative_eq!(eval_closed_family(unit, alpha(-1.0), 0.5).unwrap(), 2.0);
        assert!(eval_closed_family(unit, alpha(-1.0), 1.5).is_err());
        assert!(eval_closed_family(unit, alpha(-1.0), -0.1).is_err());
    }

    #[test]
    fn entropy_examples() {
        let a = alpha(-1.0);
        assert_relative_eq!(entropy_alpha(a, &sp(&[0.5, 0.5])), 1.0, max_relative = 1e-15);
        assert_relative_eq!(entropy_alpha(a, &sp(&[0.5, 0.25, 0.25])), 3.0, max_relative = 1e-15);
        for n in 2..12usize {
            let h = entropy_alpha(a, &SimplexPoint::uniform(n).unwrap());
            let closed = ((n * n) as f64 - 1.0) / 3.0;
            // direct summation
            let direct = ((0..n).map(|_| n as f64).sum::<f64>() - 1.0) / 3.0;
            assert_relative_eq!(h, closed, max_relative = 1e-12);
            assert_relative_eq!(h, direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn j_examples() {
        let a = alpha(-1.0);
        let one = JParams { a: 1.0, b: 0.0 };
        assert_relative_eq!(eval_j(one, a, &sp(&[0.5, 0.5])), 1.0, max_relative = 1e-15);
        let pure_b = JParams { a: 0.0, b: 1.0 };
        assert_relative_eq!(eval_j(pure_b, a, &sp(&[0.25, 0.75])), 3.0, max_relative = 1e-15);
        let mixed = JParams { a: 2.0, b: 1.0 };
        assert_relative_eq!(eval_j(mixed, a, &sp(&[0.5, 0.25, 0.25])), 7.0, max_relative = 1e-15);
    }

    #[test]
    fn fit_parameter_map() {
        assert_eq!(params_from_fit(1.0, 1.0, alpha(-1.0)), JParams { a: 3.0, b: 0.0 });
        assert_eq!(params_from_fit(0.0, 0.0, alpha(-0.3)), JParams { a: 0.0, b: 0.0 });
        assert_eq!(params_from_fit(1.0, 4.0, alpha(-2.0)), JParams { a: 7.0, b: 3.0 });
        let back = family_from_j(params_from_fit(1.5, -0.5, alpha(-0.7)), alpha(-0.7));
        assert_relative_eq!(back.c, 1.5, max_relative = 1e-14);
        assert_relative_eq!(back.d, -0.5, max_relative = 1e-14);
    }

    #[test]
    fn function_dispatch() {
        let a = alpha(-1.0);
        let f = EvaluableFunction::family(SolutionParams { c: 1.0, d: 0.0 }, a);
        assert_relative_eq!(f.eval(0.25).unwrap(), 4.0);

        let g = EvaluableFunction::BasisPerturbed {
            base: FamilyMember::zero(a),
            coefficients: vec![1e-3],
        };
        assert_relative_eq!(g.eval(0.5).unwrap(), 1e-3, max_relative = 1e-15);

        let s = EvaluableFunction::Sampled(SampledFunction::new(vec![0.25, 0.75], vec![1.0, 3.0]).unwrap());
        assert_relative_eq!(s.eval(0.5).unwrap(), 2.0);
        assert_eq!(s.eval(0.1).unwrap(), 1.0);
        assert_eq!(s.eval(0.9).unwrap(), 3.0);
        assert!(s.extrapolates(0.1) && s.extrapolates(0.9) && !s.extrapolates(0.5));

        let p = EvaluableFunction::Polynomial {
            coefficients: vec![1.0, 0.0, 2.0],
        };
        assert_relative_eq!(p.eval(0.5).unwrap(), 1.5);
        assert!(p.eval(1.0).is_err());
    }

    #[test]
    fn sampled_rejects_bad_nodes() {
        assert!(SampledFunction::new(vec![0.5, 0.25], vec![1.0, 2.0]).is_err());
        assert!(SampledFunction::new(vec![0.0, 0.25], vec![1.0, 2.0]).is_err());
        assert!(SampledFunction::new(vec![0.5], vec![1.0, 2.0]).is_err());
    }
}
