//! One function per subcommand; each returns an [`Outcome`] for `main` to emit.

use clap::{ArgGroup, Args, ValueEnum};
use serde::Serialize;
use serde_json::json;

use fei_core::analysis::{counterexample_search, Optimizer, SearchConfig};
use fei_core::defect::{fe_defect_sweep, scaling_exponent};
use fei_core::measures::{entropy_alpha, eval_j, params_from_fit};
use fei_core::recursive::{cumulative_bound_check, LevelPerturbation};
use fei_core::{
    Alpha, EpsilonBudget, EvaluableFunction, FamilyMember, GridSpec, JParams, MeasureSequence, SimplexPoint,
};

use crate::error::{ensure_finite, CliError};
use crate::funcspec;
use crate::output::{num, to_value, Outcome, Table};

fn alpha(v: f64) -> Result<Alpha, CliError> {
    Ok(Alpha::new(v)?)
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true, group(ArgGroup::new("dist").required(true).args(["p", "uniform"])))]
pub struct EntropyArgs {
    #[arg(long)]
    pub alpha: f64,
    /// Probabilities, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    /// Use the uniform distribution on this many points.
    #[arg(long, value_name = "N")]
    pub uniform: Option<usize>,
    /// Also evaluate `a H + b (p1^alpha - 1)`.
    #[arg(long, requires = "b")]
    pub a: Option<f64>,
    #[arg(long, requires = "a")]
    pub b: Option<f64>,
}

pub fn entropy(args: &EntropyArgs) -> Result<Outcome, CliError> {
    let a = alpha(args.alpha)?;
    let p = match (&args.p, args.uniform) {
        (Some(p), _) => SimplexPoint::new(p.clone())?,
        (None, Some(n)) => SimplexPoint::uniform(n)?,
        (None, None) => unreachable!("clap enforces one of --p/--uniform"),
    };
    let h = entropy_alpha(a, &p);
    let j = match (args.a, args.b) {
        (Some(ja), Some(jb)) => {
            let params = JParams::new(ja, jb)?;
            Some((params, eval_j(params, a, &p)))
        }
        _ => None,
    };
    ensure_finite("entropy", &[h, j.map_or(0.0, |t| t.1)])?;

    let mut summary = vec![format!("H = {}", num(h))];
    let mut table = Table::new(&["n", "entropy"]);
    let mut row = vec![p.n().to_string(), num(h)];
    if let Some((_, v)) = j {
        summary.push(format!("J = {}", num(v)));
        table.header.push("j");
        row.push(num(v));
    }
    table.rows.push(row);
    Ok(Outcome {
        config: to_value(args),
        result: json!({
            "n": p.n(),
            "p": p.as_slice(),
            "entropy": h,
            "j": j.map(|(params, value)| json!({ "a": params.a, "b": params.b, "value": value })),
        }),
        summary,
        table,
    })
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct DefectArgs {
    #[arg(long)]
    pub alpha: f64,
    /// family:C,D[:+AMPsin[J]...] | perturbed:C,D:T1,... | sampled:PATH
    #[arg(long = "fn", value_name = "SPEC")]
    pub function: String,
    /// Lattice resolution.
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    /// Margin from the boundary of the triangle.
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
}

pub fn defect(args: &DefectArgs, want_points: bool) -> Result<Outcome, CliError> {
    let a = alpha(args.alpha)?;
    let f = funcspec::parse(&args.function, a)?;
    let spec = GridSpec::new(args.m, args.h)?;
    let mut report = fe_defect_sweep(&f, a, &spec, want_points)?;
    ensure_finite("sup defect", &[report.sup_defect, report.mean_defect])?;

    let mut table = Table::new(&["x", "y", "defect", "local_scale"]);
    for r in report.per_point.take().unwrap_or_default() {
        table
            .rows
            .push(vec![num(r.x), num(r.y), num(r.defect), num(r.local_scale)]);
    }
    let mut summary = vec![
        format!(
            "sup defect {} at ({}, {}), relative {}",
            num(report.sup_defect),
            num(report.argmax.x()),
            num(report.argmax.y()),
            num(report.sup_relative)
        ),
        format!(
            "mean defect {} over {} points",
            num(report.mean_defect),
            report.n_points
        ),
    ];
    if report.extrapolated_points > 0 {
        summary.push(format!(
            "{} points evaluated outside the sampled range",
            report.extrapolated_points
        ));
    }
    Ok(Outcome {
        config: to_value(args),
        result: json!({ "function": f, "report": report }),
        summary,
        table,
    })
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct ProbeArgs {
    #[arg(long)]
    pub alpha: f64,
    /// Perturbation size.
    #[arg(long, default_value_t = 1e-3)]
    pub delta: f64,
    /// Perturbation shape as sine coefficients: g = sum_j T_j sin(j pi x).
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub shape: Vec<f64>,
    /// Family member the perturbation is added to, as C,D.
    #[arg(long, value_delimiter = ',', default_value = "0,0", num_args = 1)]
    pub base: Vec<f64>,
    /// Margins, strictly decreasing.
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4,1e-5")]
    pub margins: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub m: usize,
}

pub fn probe(args: &ProbeArgs) -> Result<Outcome, CliError> {
    let a = alpha(args.alpha)?;
    let [c, d] = args.base[..] else {
        return Err(CliError::Usage(format!(
            "--base takes C,D, got {} values",
            args.base.len()
        )));
    };
    let g = EvaluableFunction::BasisPerturbed {
        base: FamilyMember::zero(a),
        coefficients: args.shape.clone(),
    };
    let fit = scaling_exponent(
        fei_core::SolutionParams { c, d },
        &g,
        args.delta,
        a,
        &args.margins,
        args.m,
    )?;
    ensure_finite("slope", &[fit.slope, fit.intercept])?;

    let mut table = Table::new(&["h", "sup_defect"]);
    for &(h, sup) in &fit.table {
        table.rows.push(vec![num(h), num(sup)]);
    }
    table.footer = Some(format!("slope={}", num(fit.slope)));
    let mut summary: Vec<String> = fit
        .table
        .iter()
        .map(|(h, sup)| format!("h = {:<8} sup defect {}", num(*h), num(*sup)))
        .collect();
    summary.push(format!(
        "slope {} (last {} margins, rms {})",
        num(fit.slope),
        fit.points_used,
        num(fit.rms_residual)
    ));
    Ok(Outcome {
        config: to_value(args),
        result: to_value(&fit),
        summary,
        table,
    })
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerArg {
    NelderMead,
    Coordinate,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct SearchArgs {
    #[arg(long)]
    pub alpha: f64,
    /// Defect budget.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = 150)]
    pub m: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
    /// Number of sine basis functions.
    #[arg(long, default_value_t = 6)]
    pub basis_size: usize,
    #[arg(long, value_enum, default_value_t = OptimizerArg::NelderMead)]
    pub optimizer: OptimizerArg,
    /// Iterations per restart.
    #[arg(long, default_value_t = 600)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1.0)]
    pub penalty: f64,
}

pub fn search(args: &SearchArgs, seed: u64) -> Result<Outcome, CliError> {
    let mut cfg = SearchConfig::new(alpha(args.alpha)?, args.eps);
    cfg.grid = GridSpec::new(args.m, args.h)?;
    cfg.basis_size = args.basis_size;
    cfg.optimizer = match args.optimizer {
        OptimizerArg::NelderMead => Optimizer::NelderMead,
        OptimizerArg::Coordinate => Optimizer::CoordinateSearch,
    };
    cfg.max_iters = args.max_iters;
    cfg.restarts = args.restarts;
    cfg.seed = seed;
    cfg.penalty_weight = args.penalty;
    let report = counterexample_search(&cfg)?;
    ensure_finite("best distance", &[report.best_distance, report.best_defect])?;

    let mut table = Table::new(&["restart", "iter", "distance", "defect"]);
    for e in &report.history {
        table.rows.push(vec![
            e.restart.to_string(),
            e.iter.to_string(),
            num(e.distance),
            num(e.defect),
        ]);
    }
    let ratio = report.distance_ratio(cfg.eps);
    let mut summary = vec![format!(
        "best distance {} with defect {} (restart {})",
        num(report.best_distance),
        num(report.best_defect),
        report.best_restart
    )];
    if let Some(r) = ratio {
        summary.push(format!("distance / eps = {}", num(r)));
    }
    let mut result = to_value(&report);
    result["distance_ratio"] = json!(ratio);
    Ok(Outcome {
        config: to_value(args),
        result,
        summary,
        table,
    })
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeArg {
    Sine,
    Constant,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct RecursionArgs {
    #[arg(long)]
    pub alpha: f64,
    /// Kernel `x -> I_2(1 - x, x)`, in the same grammar as `defect --fn`.
    #[arg(long, value_name = "SPEC")]
    pub kernel: String,
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    /// Simplex lattice resolution.
    #[arg(long, default_value_t = 24)]
    pub m: usize,
    /// The same budget at every level k = 2..n_max-1.
    #[arg(long, conflicts_with = "budgets")]
    pub eps: Option<f64>,
    /// Budgets eps_2, eps_3, ... listed explicitly.
    #[arg(long, value_delimiter = ',')]
    pub budgets: Option<Vec<f64>>,
    /// Shape of the perturbation injected at each level, scaled to its budget.
    #[arg(long, value_enum, default_value_t = ShapeArg::Sine)]
    pub shape: ShapeArg,
}

pub fn recursion(args: &RecursionArgs) -> Result<Outcome, CliError> {
    let a = alpha(args.alpha)?;
    let kernel = funcspec::parse(&args.kernel, a)?;
    let reference = funcspec::reference_params(&kernel, a)?;
    let params = params_from_fit(reference.c, reference.d, a);
    let budget = match (&args.budgets, args.eps) {
        (Some(list), _) => Some(EpsilonBudget::new(
            std::iter::once(0.0).chain(list.iter().copied()).collect(),
        )?),
        (None, Some(e)) => Some(EpsilonBudget::uniform_levels(e, args.n_max.saturating_sub(1))?),
        (None, None) => None,
    };
    let shape: fn(f64) -> LevelPerturbation = match args.shape {
        ShapeArg::Sine => |e| LevelPerturbation::SineProduct { amplitude: e },
        ShapeArg::Constant => |e| LevelPerturbation::Constant { value: e },
    };
    let mut seq = MeasureSequence::new(kernel, a);
    if let Some(b) = budget {
        seq = seq.with_saturating_perturbations(b, args.n_max, shape);
    }
    let rows = cumulative_bound_check(&seq, params, args.n_max, args.m)?;
    for r in &rows {
        ensure_finite("gap", &[r.max_gap, r.bound])?;
    }

    let mut table = Table::new(&["n", "max_gap", "bound", "ok"]);
    let mut summary = vec![format!("reference J: a = {}, b = {}", num(params.a), num(params.b))];
    for r in &rows {
        table
            .rows
            .push(vec![r.n.to_string(), num(r.max_gap), num(r.bound), r.ok.to_string()]);
        summary.push(format!(
            "n = {}  gap {}  bound {}  {}",
            r.n,
            num(r.max_gap),
            num(r.bound),
            if r.ok { "ok" } else { "VIOLATED" }
        ));
    }
    let all_ok = rows.iter().all(|r| r.ok);
    Ok(Outcome {
        config: to_value(args),
        result: json!({
            "reference": params,
            "perturbations": seq.perturbations,
            "rows": rows,
            "all_ok": all_ok,
        }),
        summary,
        table,
    })
}
