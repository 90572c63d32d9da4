//! Least-squares recovery of `(c, d)` and the distance of a function to the
//! solution family.

use serde::Serialize;

use crate::domain::{grid_1d, Alpha, GridSpec};
use crate::error::{Error, Result};
use crate::measures::{pow_checked, SolutionParams, UnitFunction};

/// Condition estimate above which the design is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub params: SolutionParams,
    /// Euclidean norm of the residual vector.
    pub residual_l2: f64,
    pub residual_sup: f64,
    /// Ratio of singular values of the column-normalized design.
    pub condition: f64,
    pub n_samples: usize,
}

/// Orthonormalized design `[x^alpha, (1 - x)^alpha - 1]` for a fixed sample set.
///
/// Columns are normalized before a twice-applied Gram-Schmidt step, so the
/// solve is backward stable even when the columns span six orders of
/// magnitude near the ends of the interval. For `alpha = 0` the second column
/// vanishes identically; the family is then the constants and `d` is fixed at 0.
#[derive(Debug, Clone)]
pub struct FamilyBasis {
    xs: Vec<f64>,
    cols: [Vec<f64>; 2],
    norms: [f64; 2],
    q1: Vec<f64>,
    /// `None` when the second column is identically zero.
    q2: Option<(Vec<f64>, f64, f64)>,
    condition: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl FamilyBasis {
    pub fn new(xs: &[f64], alpha: Alpha) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::invalid("no samples"));
        }
        for &x in xs {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::domain(format!("sample abscissa must lie in (0, 1), got {x}")));
            }
        }
        let a = alpha.value();
        let u: Vec<f64> = xs.iter().map(|&x| pow_checked(x, a)).collect::<Result<_>>()?;
        let v: Vec<f64> = xs
            .iter()
            .map(|&x| Ok(pow_checked(1.0 - x, a)? - 1.0))
            .collect::<Result<_>>()?;

        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let nu = norm(&u);
        let nv = norm(&v);
        if sorted.len() < 2 && nv != 0.0 {
            return Err(Error::SingularDesign {
                condition: f64::INFINITY,
            });
        }

        let q1: Vec<f64> = u.iter().map(|t| t / nu).collect();
        let (q2, condition) = if nv == 0.0 {
            (None, 1.0)
        } else {
            let mut w: Vec<f64> = v.iter().map(|t| t / nv).collect();
            let mut r12 = 0.0;
            for _ in 0..2 {
                let proj = dot(&q1, &w);
                r12 += proj;
                for (wi, qi) in w.iter_mut().zip(&q1) {
                    *wi -= proj * qi;
                }
            }
            let r22 = norm(&w);
            // singular values of [[1, r12], [0, r22]]
            let t = 1.0 + r12 * r12 + r22 * r22;
            let det = r22.abs();
            let disc = (t * t - 4.0 * det * det).max(0.0).sqrt();
            let smax = ((t + disc) / 2.0).sqrt();
            let smin = if det == 0.0 { 0.0 } else { det / smax };
            let condition = if smin == 0.0 { f64::INFINITY } else { smax / smin };
            if condition.is_nan() || condition > MAX_CONDITION {
                return Err(Error::SingularDesign { condition });
            }
            let q2: Vec<f64> = w.iter().map(|t| t / r22).collect();
            (Some((q2, r12, r22)), condition)
        };

        Ok(FamilyBasis {
            xs: xs.to_vec(),
            cols: [u, v],
            norms: [nu, nv],
            q1,
            q2,
            condition,
        })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Least-squares coefficients for the sample values `ys`.
    pub fn solve(&self, ys: &[f64]) -> SolutionParams {
        let b1 = dot(&self.q1, ys);
        match &self.q2 {
            None => SolutionParams {
                c: b1 / self.norms[0],
                d: 0.0,
            },
            Some((q2, r12, r22)) => {
                let t2 = dot(q2, ys) / r22;
                let t1 = b1 - r12 * t2;
                SolutionParams {
                    c: t1 / self.norms[0],
                    d: t2 / self.norms[1],
                }
            }
        }
    }

    /// `ys - family(params)` at the sample sites.
    pub fn residual(&self, ys: &[f64], params: SolutionParams) -> Vec<f64> {
        ys.iter()
            .zip(&self.cols[0])
            .zip(&self.cols[1])
            .map(|((y, u), v)| y - params.c * u - params.d * v)
            .collect()
    }

    /// Residual of the orthogonal projection of `ys` onto the family span.
    pub fn projection_residual(&self, ys: &[f64]) -> Vec<f64> {
        let mut r = ys.to_vec();
        let mut bases = vec![&self.q1];
        if let Some((q2, _, _)) = &self.q2 {
            bases.push(q2);
        }
        for q in bases {
            let proj = dot(q, &r);
            for (ri, qi) in r.iter_mut().zip(q.iter()) {
                *ri -= proj * qi;
            }
        }
        r
    }

    pub fn fit(&self, ys: &[f64]) -> Result<FitResult> {
        if ys.len() != self.xs.len() {
            return Err(Error::invalid(format!(
                "{} samples for {} abscissae",
                ys.len(),
                self.xs.len()
            )));
        }
        if let Some(bad) = ys.iter().find(|y| !y.is_finite()) {
            return Err(Error::invalid(format!("sample values must be finite, got {bad}")));
        }
        let params = self.solve(ys);
        let r = self.residual(ys, params);
        Ok(FitResult {
            params,
            residual_l2: norm(&r),
            residual_sup: r.iter().fold(0.0f64, |m, t| m.max(t.abs())),
            condition: self.condition,
            n_samples: ys.len(),
        })
    }
}

/// Least-squares `(c, d)` for `y = c x^alpha + d ((1 - x)^alpha - 1)`.
pub fn fit_family(xs: &[f64], ys: &[f64], alpha: Alpha) -> Result<FitResult> {
    FamilyBasis::new(xs, alpha)?.fit(ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyDistance {
    pub dist_sup: f64,
    pub dist_l2: f64,
    pub best: SolutionParams,
    /// Largest `|f|` at the sample sites.
    pub scale: f64,
    pub condition: f64,
}

/// Distance of `f` to the family, measured on the `m` sample sites of `[h, 1 - h]`.
pub fn distance_to_family<F: UnitFunction + ?Sized>(f: &F, alpha: Alpha, spec: &GridSpec) -> Result<FamilyDistance> {
    let xs = grid_1d(spec)?;
    let ys: Vec<f64> = xs.iter().map(|&x| f.eval(x)).collect::<Result<_>>()?;
    let fit = fit_family(&xs, &ys, alpha)?;
    Ok(FamilyDistance {
        dist_sup: fit.residual_sup,
        dist_l2: fit.residual_l2,
        best: fit.params,
        scale: ys.iter().fold(0.0f64, |m, y| m.max(y.abs())),
        condition: fit.condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{eval_family, EvaluableFunction, FamilyMember};

    fn alpha(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    #[test]
    fn recovers_exact_samples() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 + 0.5) / 50.0).collect();
        let truth = SolutionParams { c: 3.0, d: 2.0 };
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| eval_family(truth, alpha(-1.0), x).unwrap())
            .collect();
        let fit = fit_family(&xs, &ys, alpha(-1.0)).unwrap();
        assert!(
            (fit.params.c - 3.0).abs() < 1e-8 && (fit.params.d - 2.0).abs() < 1e-8,
            "{fit:?}"
        );
        assert!(fit.residual_sup <= 1e-10);
        assert!(fit.residual_sup >= fit.residual_l2 / (fit.n_samples as f64).sqrt());
    }

    #[test]
    fn zero_data_gives_zero_member() {
        let xs = [0.1, 0.4, 0.8];
        let fit = fit_family(&xs, &[0.0; 3], alpha(-2.0)).unwrap();
        assert_eq!(fit.params, SolutionParams { c: 0.0, d: 0.0 });
        assert_eq!(fit.residual_l2, 0.0);
    }

    #[test]
    fn repeated_abscissa_is_singular() {
        let err = fit_family(&[0.3; 5], &[1.0; 5], alpha(-1.0)).unwrap_err();
        assert!(matches!(err, Error::SingularDesign { .. }));
    }

    #[test]
    fn alpha_zero_fits_constants() {
        let xs = [0.1, 0.4, 0.8];
        let fit = fit_family(&xs, &[2.0, 2.0, 2.0], alpha(0.0)).unwrap();
        assert!((fit.params.c - 2.0).abs() < 1e-15 && fit.params.d == 0.0);
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(fit_family(&[0.0, 0.5], &[1.0, 1.0], alpha(-1.0)).is_err());
        assert!(fit_family(&[0.2, 0.5], &[1.0], alpha(-1.0)).is_err());
        assert!(fit_family(&[0.2, 0.5], &[1.0, f64::NAN], alpha(-1.0)).is_err());
    }

    #[test]
    fn sine_is_far_from_family() {
        // oracle: normal equations on the same sites, solved by Cramer's rule
        let spec = GridSpec::new(150, 1e-3).unwrap();
        let a = alpha(-1.0);
        let base = FamilyMember::new(SolutionParams { c: 0.7, d: -1.2 }, a);
        let f = EvaluableFunction::BasisPerturbed {
            base,
            coefficients: vec![1e-3],
        };
        let dist = distance_to_family(&f, a, &spec).unwrap();
        assert!(dist.dist_sup >= 0.5e-3 && dist.dist_sup <= 1e-3, "{dist:?}");

        let xs = grid_1d(&spec).unwrap();
        let g: Vec<f64> = xs.iter().map(|x| 1e-3 * (std::f64::consts::PI * x).sin()).collect();
        let u: Vec<f64> = xs.iter().map(|x| 1.0 / x).collect();
        let v: Vec<f64> = xs.iter().map(|x| 1.0 / (1.0 - x) - 1.0).collect();
        let (uu, uv, vv) = (dot(&u, &u), dot(&u, &v), dot(&v, &v));
        let (ug, vg) = (dot(&u, &g), dot(&v, &g));
        let det = uu * vv - uv * uv;
        let c = (ug * vv - vg * uv) / det;
        let d = (uu * vg - uv * ug) / det;
        let sup = xs
            .iter()
            .enumerate()
            .map(|(i, _)| (g[i] - c * u[i] - d * v[i]).abs())
            .fold(0.0f64, f64::max);
        assert!(
            (dist.dist_sup - sup).abs() <= 1e-9 * sup,
            "{} vs {}",
            dist.dist_sup,
            sup
        );
    }

    #[test]
    fn constant_one_distance_is_positive() {
        let spec = GridSpec::new(150, 1e-3).unwrap();
        let dist = distance_to_family(&EvaluableFunction::constant(1.0), alpha(-1.0), &spec).unwrap();
        // dense least squares (numpy lstsq) on the same 150 sites
        assert!((dist.dist_sup - 0.9949062435170696).abs() <= 1e-9, "{dist:?}");
        assert!((dist.dist_l2 - 12.008599572743877).abs() <= 1e-8, "{dist:?}");
    }
}
