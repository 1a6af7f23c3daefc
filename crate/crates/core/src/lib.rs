//! Mode versus Bayes decisions for finite-category classification under
//! arbitrary cost matrices, in exact rational arithmetic.
//!
//! The mode of a conditional class distribution is the Bayes-optimal decision
//! under zero-one loss, and under zero-one loss only. This crate makes that
//! statement executable:
//!
//! - [`cost_matrix`] represents loss matrices, checks reasonableness, and
//!   reduces matrices to canonical form (zero diagonal, off-diagonals
//!   averaging to one);
//! - [`decision`] computes mode sets, Bayes sets, expected loss, and regret
//!   with exact tie semantics, plus a seeded tie-breaking sampler;
//! - [`certify`] decides whether the mode rule is Bayes for a given matrix
//!   and, when it is not, constructs a verified counterexample via an exact
//!   margin-maximizing feasibility solver — with a brute-force simplex-grid
//!   oracle as an independent check;
//! - [`region`] turns the three-class geometry into exact polygons on the
//!   probability simplex and renders them as SVG.
//!
//! All arithmetic is exact (`num-rational` big rationals); there is no
//! tolerance anywhere, so boundary ties are genuine ties.

pub mod cost_matrix;
pub mod decision;
pub mod certify;
pub mod rational;
pub mod region;

pub use cost_matrix::{
    CanonicalCostMatrix, CostMatrix, CostMatrixError, MatrixParseError, ReasonablenessReport,
};
pub use decision::{
    bayes_set, expected_loss, mode_set, regret, regret_with_policy, sample_decision, DecisionError,
    DecisionSet, ProbVector, ProbVectorError, TiePolicy,
};
pub use certify::{
    binary_threshold, brute_force_oracle, brute_force_oracle_with_threads, check_point,
    disagreement_system, feasible_strict, find_counterexample, mode_is_bayes, ternary_conditions,
    CertifyError, Counterexample, StrictFeasibilitySystem, Verdict, ORACLE_GRID_LIMIT,
};
pub use rational::{decimal_approx, format_rational, parse_rational, ParseRationalError, Rational};
pub use region::{
    bayes_regions_ternary, disagreement_region, mode_regions_ternary, render_svg, RegionError,
    RegionLabel, RegionSet, RenderOptions, Rule, SimplexPolygon,
};
