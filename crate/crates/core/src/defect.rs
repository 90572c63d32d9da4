//! Defect functionals of the equation
//!
//! ```text
//! f(x) + (1 - x)^alpha f(y / (1 - x)) = f(y) + (1 - y)^alpha f(x / (1 - y))
//! ```
//!
//! and of the auxiliary function
//! `G(x, y) = f(x) + (1 - x)^alpha f(y / (1 - x)) - f(x + y)`.
//!
//! Every pointwise functional returns a [`Residual`]: the absolute value
//! together with the largest magnitude among the terms that were combined to
//! produce it. Near the boundary those terms grow like `h^alpha`, so "equals
//! zero" is always judged relative to that scale.
//!
//! None of these operations require `alpha < 0`. The hyperstability
//! conclusions drawn from them do; see [`scaling_exponent`].

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{grid_d2, Alpha, ClosedD2Point, D2Point, D3Point, GridSpec};
use crate::error::{Error, Result};
use crate::measures::{eval_closed_family, pow_checked, EvaluableFunction, FamilyMember, SolutionParams, UnitFunction};

/// An absolute residual and the magnitude of the largest term behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub value: f64,
    pub scale: f64,
}

impl Residual {
    /// `value / max(scale, 1)`: relative for large terms, absolute for small ones.
    pub fn relative(&self) -> f64 {
        self.value / self.scale.max(1.0)
    }
}

#[inline]
fn max_abs(terms: &[f64]) -> f64 {
    terms.iter().fold(0.0f64, |m, t| m.max(t.abs()))
}

/// Signed left-minus-right side of the equation at `(x, y)` and its scale.
fn fe_signed<F: UnitFunction + ?Sized>(f: &F, alpha: f64, x: f64, y: f64) -> Result<(f64, f64)> {
    let t1 = f.eval(x)?;
    let t2 = pow_checked(1.0 - x, alpha)? * f.eval(y / (1.0 - x))?;
    let t3 = f.eval(y)?;
    let t4 = pow_checked(1.0 - y, alpha)? * f.eval(x / (1.0 - y))?;
    Ok(((t1 + t2) - (t3 + t4), max_abs(&[t1, t2, t3, t4])))
}

/// Pointwise defect `|f(x) + (1-x)^a f(y/(1-x)) - f(y) - (1-y)^a f(x/(1-y))|`.
pub fn fe_defect<F: UnitFunction + ?Sized>(f: &F, alpha: Alpha, p: &D2Point) -> Result<Residual> {
    let (signed, scale) = fe_signed(f, alpha.value(), p.x(), p.y())?;
    Ok(Residual {
        value: signed.abs(),
        scale,
    })
}

/// One row of a defect sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointRecord {
    pub x: f64,
    pub y: f64,
    pub defect: f64,
    pub local_scale: f64,
}

/// Sup and mean of the pointwise defect over a lattice.
///
/// The sup over a finite lattice bounds the sup over `D2` from below; the
/// grid it was measured on is always carried along.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectReport {
    pub sup_defect: f64,
    pub mean_defect: f64,
    /// Largest `defect / max(local_scale, 1)` over the grid.
    pub sup_relative: f64,
    pub argmax: D2Point,
    pub grid: GridSpec,
    pub n_points: usize,
    /// Points at which some evaluation left the range of a sampled function.
    pub extrapolated_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_point: Option<Vec<PointRecord>>,
}

fn touches_extrapolation<F: UnitFunction + ?Sized>(f: &F, p: &D2Point) -> bool {
    let (x, y) = (p.x(), p.y());
    [x, y, y / (1.0 - x), x / (1.0 - y)]
        .into_iter()
        .any(|t| f.extrapolates(t))
}

/// Sweeps [`fe_defect`] over `grid_d2(spec)`.
///
/// Points are evaluated in parallel and reduced serially in grid order, with
/// ties on the sup broken towards the lexicographically smallest point, so
/// the report does not depend on the thread count.
pub fn fe_defect_sweep<F: UnitFunction + ?Sized>(
    f: &F,
    alpha: Alpha,
    spec: &GridSpec,
    keep_points: bool,
) -> Result<DefectReport> {
    let points = grid_d2(spec)?;
    let evaluated: Vec<Result<(Residual, bool)>> = points
        .par_iter()
        .map(|p| Ok((fe_defect(f, alpha, p)?, touches_extrapolation(f, p))))
        .collect();

    let mut sup = f64::NEG_INFINITY;
    let mut sup_relative = 0.0f64;
    let mut argmax = points[0];
    let mut total = 0.0;
    let mut extrapolated = 0;
    let mut records = keep_points.then(|| Vec::with_capacity(points.len()));
    for (p, item) in points.iter().zip(evaluated) {
        let (r, extrap) = item?;
        if !r.value.is_finite() {
            return Err(Error::domain(format!("defect is not finite at ({}, {})", p.x(), p.y())));
        }
        let better = r.value > sup || (r.value == sup && (p.x(), p.y()) < (argmax.x(), argmax.y()));
        if better {
            sup = r.value;
            argmax = *p;
        }
        sup_relative = sup_relative.max(r.relative());
        total += r.value;
        extrapolated += usize::from(extrap);
        if let Some(rec) = records.as_mut() {
            rec.push(PointRecord {
                x: p.x(),
                y: p.y(),
                defect: r.value,
                local_scale: r.scale,
            });
        }
    }
    Ok(DefectReport {
        sup_defect: sup,
        mean_defect: total / points.len() as f64,
        sup_relative,
        argmax,
        grid: *spec,
        n_points: points.len(),
        extrapolated_points: extrapolated,
        per_point: records,
    })
}

/// [`fe_defect_sweep`] without per-point records.
pub fn fe_defect_sup<F: UnitFunction + ?Sized>(f: &F, alpha: Alpha, spec: &GridSpec) -> Result<DefectReport> {
    fe_defect_sweep(f, alpha, spec, false)
}

/// `G(x, y)` together with the magnitude of its largest term.
fn g_terms<F: UnitFunction + ?Sized>(f: &F, alpha: f64, x: f64, y: f64) -> Result<(f64, f64)> {
    let t1 = f.eval(x)?;
    let t2 = pow_checked(1.0 - x, alpha)? * f.eval(y / (1.0 - x))?;
    let t3 = f.eval(x + y)?;
    Ok((t1 + t2 - t3, max_abs(&[t1, t2, t3])))
}

/// `G(x, y) = f(x) + (1 - x)^alpha f(y / (1 - x)) - f(x + y)`.
pub fn g_value<F: UnitFunction + ?Sized>(f: &F, alpha: Alpha, p: &D2Point) -> Result<f64> {
    Ok(g_terms(f, alpha.value(), p.x(), p.y())?.0)
}

fn g_checked<F: UnitFunction + ?Sized>(f: &F, alpha: f64, x: f64, y: f64) -> Result<(f64, f64)> {
    let p = D2Point::new(x, y)?;
    g_terms(f, alpha, p.x(), p.y())
}

/// Signed `G(x, y) - G(y, x)` with scale.
fn g_antisym<F: UnitFunction + ?Sized>(f: &F, alpha: f64, x: f64, y: f64) -> Result<(f64, f64)> {
    let (gxy, sxy) = g_checked(f, alpha, x, y)?;
    let (gyx, syx) = g_checked(f, alpha, y, x)?;
    Ok((gxy - gyx, sxy.max(syx)))
}

/// `|G(x, y) - G(y, x)|`; equal to [`fe_defect`] because the `f(x + y)`
/// terms cancel.
pub fn g_symmetry_gap<F: UnitFunction + ?Sized>(f: &F, alpha: Alpha, p: &D2Point) -> Result<Residual> {
    let (d, scale) = g_antisym(f, alpha.value(), p.x(), p.y())?;
    Ok(Residual { value: d.abs(), scale })
}

/// `|G(x,y) + G(x+y,z) - G(x,y+z) - (1-x)^alpha G(y/(1-x), z/(1-x))|`.
///
/// This vanishes for every `f`, not only for solutions.
pub fn cocycle_residual<F: UnitFunction + ?Sized>(f: &F, alpha: Alpha, q: &D3Point) -> Result<Residual> {
    let a = alpha.value();
    let (x, y, z) = (q.x(), q.y(), q.z());
    let w = pow_checked(1.0 - x, a)?;
    let (g1, s1) = g_checked(f, a, x, y)?;
    let (g2, s2) = g_checked(f, a, x + y, z)?;
    let (g3, s3) = g_checked(f, a, x, y + z)?;
    let (g4, s4) = g_checked(f, a, y / (1.0 - x), z / (1.0 - x))?;
    let value = ((g1 + g2) - (g3 + w * g4)).abs();
    let scale = s1.max(s2).max(s3).max(w * s4);
    Ok(Residual { value, scale })
}

/// Result of [`homogeneity_gap`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomogeneityGap {
    /// `|G(y, z) - (1-x)^alpha G(y/(1-x), z/(1-x))|`.
    pub gap: f64,
    /// Sum of the three symmetry gaps that bound `gap`.
    pub certified_bound: f64,
    /// Signed `G(y, z) - (1-x)^alpha G(y/(1-x), z/(1-x))`.
    pub signed_gap: f64,
    /// Signed sum of the three antisymmetric parts; equals `signed_gap` for every `f`.
    pub signed_expansion: f64,
    pub scale: f64,
}

impl HomogeneityGap {
    /// `gap <= certified_bound` up to `tol * max(scale, 1)` of rounding.
    pub fn within_bound(&self, tol: f64) -> bool {
        self.gap <= self.certified_bound + tol * self.scale.max(1.0)
    }
}

/// Homogeneity defect of `G` on `D3` and the bound implied by the symmetry gaps:
///
/// ```text
/// G(y,z) - (1-x)^a G(y/(1-x), z/(1-x))
///   = [G(y,x) - G(x,y)] + [G(x,y+z) - G(y+z,x)]
///     + (1-y)^a [G(z/(1-y), x/(1-y)) - G(x/(1-y), z/(1-y))]
/// ```
pub fn homogeneity_gap<F: UnitFunction + ?Sized>(f: &F, alpha: Alpha, q: &D3Point) -> Result<HomogeneityGap> {
    let a = alpha.value();
    let (x, y, z) = (q.x(), q.y(), q.z());
    let wx = pow_checked(1.0 - x, a)?;
    let wy = pow_checked(1.0 - y, a)?;

    let (gyz, s1) = g_checked(f, a, y, z)?;
    let (gscaled, s2) = g_checked(f, a, y / (1.0 - x), z / (1.0 - x))?;
    let signed_gap = gyz - wx * gscaled;

    let (d1, t1) = g_antisym(f, a, x, y)?;
    let (d2, t2) = g_antisym(f, a, x, y + z)?;
    let (d3, t3) = g_antisym(f, a, x / (1.0 - y), z / (1.0 - y))?;
    // d1 = G(x,y) - G(y,x), d2 = G(x,y+z) - G(y+z,x), d3 = G(x',z') - G(z',x')
    let signed_expansion = -d1 + d2 - wy * d3;

    Ok(HomogeneityGap {
        gap: signed_gap.abs(),
        certified_bound: d1.abs() + d2.abs() + wy * d3.abs(),
        signed_gap,
        signed_expansion,
        scale: s1.max(wx * s2).max(t1).max(t2).max(wy * t3),
    })
}

/// Closed-domain defect for a function given on `[0, 1]`.
///
/// On the edge `x + y = 1` both ratios are exactly 1. They are set rather than
/// computed there: a quotient that rounds to `1 - ulp` would evaluate `f`
/// where `(1 - t)^alpha` is about `1e16^(-alpha)`.
pub fn closed_fe_defect<F>(f: F, alpha: Alpha, p: &ClosedD2Point) -> Result<Residual>
where
    F: Fn(f64) -> Result<f64>,
{
    let a = alpha.value();
    let (x, y) = (p.x(), p.y());
    let (rx, ry) = if x + y == 1.0 {
        (1.0, 1.0)
    } else {
        ((y / (1.0 - x)).min(1.0), (x / (1.0 - y)).min(1.0))
    };
    let t1 = f(x)?;
    let t2 = pow_checked(1.0 - x, a)? * f(rx)?;
    let t3 = f(y)?;
    let t4 = pow_checked(1.0 - y, a)? * f(ry)?;
    Ok(Residual {
        value: ((t1 + t2) - (t3 + t4)).abs(),
        scale: max_abs(&[t1, t2, t3, t4]),
    })
}

/// Largest relative closed-domain defect of the extended family member along
/// the edges `y = 0` and `y = 1 - x`, sampled at `n` interior abscissae.
pub fn closed_boundary_sup(params: SolutionParams, alpha: Alpha, n: usize) -> Result<f64> {
    let f = |t: f64| eval_closed_family(params, alpha, t);
    let mut worst = 0.0f64;
    for i in 0..n {
        let x = (i as f64 + 0.5) / n as f64;
        for p in [ClosedD2Point::new(x, 0.0)?, ClosedD2Point::new(x, 1.0 - x)?] {
            worst = worst.max(closed_fe_defect(f, alpha, &p)?.relative());
        }
    }
    Ok(worst)
}

/// `base + delta * g`.
struct Shifted<'a> {
    base: FamilyMember,
    delta: f64,
    g: &'a EvaluableFunction,
}

impl UnitFunction for Shifted<'_> {
    fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.base.eval(x)? + self.delta * self.g.eval(x)?)
    }

    fn extrapolates(&self, x: f64) -> bool {
        self.g.extrapolates(x)
    }
}

/// Sup defects over shrinking margins and their log-log slope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit that produced `slope`.
    pub rms_residual: f64,
    /// How many of the smallest margins entered the reported fit.
    pub points_used: usize,
    /// `(h, sup_defect)` per margin, in the order given.
    pub table: Vec<(f64, f64)>,
}

/// Ordinary least-squares line through `(xs, ys)`: `(slope, intercept, rms)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return Err(Error::invalid("a line fit needs at least two (x, y) pairs"));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("a line fit needs distinct abscissae"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok((slope, intercept, (sse / n as f64).sqrt()))
}

/// RMS log residual above which only the three smallest margins are fitted.
pub const PREASYMPTOTIC_RMS: f64 = 0.05;

/// Measures how the sup defect of `family(f_base) + delta * g` grows as the
/// grid margin `h` shrinks.
///
/// For `alpha < 0` the weight `(1 - x)^alpha` makes the sup grow like
/// `h^alpha` unless `g` is itself a solution, which is what forces an
/// `eps`-bounded defect to vanish. For `alpha >= 0` the weights stay bounded
/// and the slope is near zero.
pub fn scaling_exponent(
    f_base: SolutionParams,
    g: &EvaluableFunction,
    delta: f64,
    alpha: Alpha,
    margins: &[f64],
    m: usize,
) -> Result<ScalingFit> {
    if margins.len() < 2 {
        return Err(Error::invalid("need at least two margins"));
    }
    if margins.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("margins must be strictly decreasing"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    let f = Shifted {
        base: FamilyMember::new(f_base, alpha),
        delta,
        g,
    };

    let mut table = Vec::with_capacity(margins.len());
    for &h in margins {
        let spec = GridSpec::new(m, h)?;
        let sup = fe_defect_sup(&f, alpha, &spec)?.sup_defect;
        if !(sup > 0.0 && sup.is_finite()) {
            return Err(Error::SlopeUndefined(format!("sup defect at margin {h} is {sup}")));
        }
        table.push((h, sup));
    }

    let lx: Vec<f64> = table.iter().map(|(h, _)| h.ln()).collect();
    let ly: Vec<f64> = table.iter().map(|(_, s)| s.ln()).collect();
    let (mut slope, mut intercept, mut rms) = fit_line(&lx, &ly)?;
    let mut used = table.len();
    if rms > PREASYMPTOTIC_RMS && table.len() > 3 {
        let k = table.len() - 3;
        (slope, intercept, rms) = fit_line(&lx[k..], &ly[k..])?;
        used = 3;
    }
    Ok(ScalingFit {
        slope,
        intercept,
        rms_residual: rms,
        points_used: used,
        table,
    })
}
