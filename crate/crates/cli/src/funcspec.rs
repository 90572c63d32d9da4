//! The function-spec mini-grammar.
//!
//! ```text
//! family:C,D                 c x^a + d (1 - x)^a - d
//! family:C,D:+1e-3sin-2e-4sin3   the same plus a sum of amp * sin(j pi x) terms
//! perturbed:C,D:T1,T2,...    family plus sum_j Tj sin(j pi x)
//! sampled:PATH               CSV with header "x,value", x strictly increasing in (0, 1)
//! ```

use std::path::{Path, PathBuf};

use fei_core::analysis::{distance_to_family, fit_family};
use fei_core::{Alpha, EvaluableFunction, FamilyMember, GridSpec, SampledFunction, SolutionParams};

use crate::error::CliError;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_f64(s: &str, what: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| usage(format!("{what}: cannot parse {s:?} as a number")))?;
    if !v.is_finite() {
        return Err(usage(format!("{what} must be finite, got {s}")));
    }
    Ok(v)
}

fn parse_params(s: &str) -> Result<SolutionParams, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(usage(format!("expected C,D but got {s:?}")));
    }
    Ok(SolutionParams {
        c: parse_f64(parts[0], "c")?,
        d: parse_f64(parts[1], "d")?,
    })
}

/// `+1e-3sin-2e-4sin3` as sine coefficients (index `j - 1`).
fn parse_sine_terms(s: &str) -> Result<Vec<f64>, CliError> {
    let mut coefficients = Vec::new();
    let mut rest = s.trim();
    if rest.is_empty() {
        return Err(usage("empty perturbation suffix"));
    }
    while !rest.is_empty() {
        let idx = rest
            .find("sin")
            .ok_or_else(|| usage(format!("perturbation term {rest:?} lacks \"sin\"")))?;
        let amp = match &rest[..idx] {
            "" | "+" => 1.0,
            "-" => -1.0,
            a => parse_f64(a, "perturbation amplitude")?,
        };
        let after = &rest[idx + 3..];
        let digits = after.bytes().take_while(u8::is_ascii_digit).count();
        let j = if digits == 0 {
            1
        } else {
            after[..digits]
                .parse::<usize>()
                .map_err(|_| usage(format!("bad sine index in {s:?}")))?
        };
        if j == 0 {
            return Err(usage("sine index must be at least 1"));
        }
        if coefficients.len() < j {
            coefficients.resize(j, 0.0);
        }
        coefficients[j - 1] += amp;
        rest = &after[digits..];
    }
    Ok(coefficients)
}

/// Parses a function spec for exponent `alpha`.
pub fn parse(spec: &str, alpha: Alpha) -> Result<EvaluableFunction, CliError> {
    let (kind, body) = spec
        .split_once(':')
        .ok_or_else(|| usage(format!("function spec {spec:?} has no kind prefix")))?;
    match kind {
        "family" => {
            let (params, suffix) = match body.split_once(':') {
                Some((p, s)) => (p, Some(s)),
                None => (body, None),
            };
            let base = FamilyMember::new(parse_params(params)?, alpha);
            Ok(match suffix {
                None => EvaluableFunction::Family(base),
                Some(s) => EvaluableFunction::BasisPerturbed {
                    base,
                    coefficients: parse_sine_terms(s)?,
                },
            })
        }
        "perturbed" => {
            let (params, theta) = body
                .split_once(':')
                .ok_or_else(|| usage(format!("expected perturbed:C,D:T1,... but got {spec:?}")))?;
            let coefficients = theta
                .split(',')
                .map(|t| parse_f64(t, "coefficient"))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(EvaluableFunction::BasisPerturbed {
                base: FamilyMember::new(parse_params(params)?, alpha),
                coefficients,
            })
        }
        "sampled" => Ok(EvaluableFunction::Sampled(read_sampled(Path::new(body))?)),
        other => Err(usage(format!(
            "unknown function kind {other:?} (expected family, perturbed or sampled)"
        ))),
    }
}

/// Reads a two-column `x,value` CSV.
pub fn read_sampled(path: &Path) -> Result<SampledFunction, CliError> {
    let format_err = |message: String| CliError::InputFormat {
        path: PathBuf::from(path),
        message,
    };
    let file = std::fs::File::open(path).map_err(|source| CliError::Input {
        path: PathBuf::from(path),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers().map_err(|e| format_err(e.to_string()))?;
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "value" {
        return Err(format_err(format!(
            "header must be \"x,value\", got {:?}",
            headers.as_slice()
        )));
    }
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format_err(e.to_string()))?;
        let row = line + 2;
        let field = |i: usize| {
            record[i]
                .parse::<f64>()
                .map_err(|_| format_err(format!("row {row}: cannot parse {:?}", &record[i])))
        };
        nodes.push(field(0)?);
        values.push(field(1)?);
    }
    Ok(SampledFunction::new(nodes, values)?)
}

/// The family member a spec is built around, used as the reference measure.
///
/// Sampled data are fitted on their own nodes.
pub fn reference_params(f: &EvaluableFunction, alpha: Alpha) -> Result<SolutionParams, CliError> {
    Ok(match f {
        EvaluableFunction::Family(m) | EvaluableFunction::BasisPerturbed { base: m, .. } => m.params,
        EvaluableFunction::Sampled(s) => fit_family(s.nodes(), s.values(), alpha)?.params,
        other => distance_to_family(other, alpha, &GridSpec::new(150, 1e-3)?)?.best,
    })
}
