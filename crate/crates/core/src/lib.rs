//! Numerics for the parametric fundamental equation of information
//!
//! ```text
//! f(x) + (1 - x)^alpha f(y / (1 - x)) = f(y) + (1 - y)^alpha f(x / (1 - y)),   (x, y) in D2
//! ```
//!
//! and its stability theory. The crate evaluates the solution family
//! `c x^alpha + d (1 - x)^alpha - d`, degree-alpha entropy and the measures
//! `J_n = a H_n + b (p_1^alpha - 1)`; measures how far a function is from
//! satisfying the equation; checks the algebraic identities and inequalities
//! that force an `eps`-approximate solution to be exact when `alpha < 0`; and
//! replays the cumulative error bound for perturbed alpha-recursive measures.
//!
//! | module | contents |
//! |--------|----------|
//! | [`domain`] | validated points of `D2`, `D3`, the closed triangle and the simplex; lattices |
//! | [`measures`] | family, entropy and `J_n` evaluators; [`EvaluableFunction`] |
//! | [`defect`] | pointwise and sup defects, the `G` identities, scaling exponents |
//! | [`recursive`] | measure sequences and the cumulative bound check |
//! | [`analysis`] | least-squares fits, distance to the family, counterexample search |
//!
//! Three regimes are visible numerically: for `alpha < 0` the sup defect of
//! any non-solution grows like `h^alpha` as the grid approaches the boundary
//! (hyperstability); for `alpha >= 0`, `alpha != 1`, bounded perturbations
//! have bounded defect (stability, superstability for `alpha > 0`). The case
//! `alpha = 1` is excluded throughout.
//!
//! ```
//! use fei_core::defect::fe_defect_sup;
//! use fei_core::{Alpha, EvaluableFunction, FamilyMember, GridSpec, SolutionParams};
//!
//! let alpha = Alpha::new(-1.0)?;
//! let f = EvaluableFunction::BasisPerturbed {
//!     base: FamilyMember::new(SolutionParams { c: 1.0, d: 0.0 }, alpha),
//!     coefficients: vec![1e-3], // + 1e-3 sin(pi x)
//! };
//! let report = fe_defect_sup(&f, alpha, &GridSpec::new(100, 1e-3)?)?;
//! assert!(report.sup_defect > 0.1);
//! # Ok::<(), fei_core::Error>(())
//! ```

pub mod analysis;
pub mod defect;
pub mod domain;
mod error;
pub mod measures;
pub mod recursive;

pub use defect::{DefectReport, Residual};
pub use domain::{Alpha, ClosedD2Point, D2Point, D3Point, GridSpec, SimplexPoint};
pub use error::{Error, Result};
pub use measures::{EvaluableFunction, FamilyMember, JParams, SampledFunction, SolutionParams, UnitFunction};
pub use recursive::{EpsilonBudget, LevelPerturbation, MeasureSequence};
