//! Certification: does the mode functional coincide with the Bayes classifier
//! for a given loss matrix? The verdict is constructive — whenever the
//! canonical form is not zero-one loss, a counterexample probability vector is
//! produced on which the unique mode label is provably not Bayes-optimal.
//!
//! Two independent routes exist: an exact margin-maximizing feasibility solver
//! over the open disagreement regions, and a brute-force simplex-grid oracle.

mod lp;

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use num_traits::Zero;
use serde_json::Value;
use thiserror::Error;

use crate::cost_matrix::{CanonicalCostMatrix, CostMatrix, CostMatrixError};
use crate::decision::{bayes_set, expected_loss, mode_set, ProbVector};
use crate::rational::{decimal_approx, format_rational, Rational};

use lp::LpOutcome;

/// Largest simplex-grid size the oracle will enumerate.
pub const ORACLE_GRID_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertifyError {
    #[error("expected k={expected}, got k={found}")]
    WrongArity { expected: usize, found: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("{0}")]
    NotReasonable(CostMatrixError),
    #[error("malformed system: {reason}")]
    MalformedSystem { reason: String },
    #[error("resolution must be at least 1")]
    ZeroResolution,
    #[error("resolution {resolution} yields {points} grid points, over the {ORACLE_GRID_LIMIT} limit")]
    ResolutionTooLarge { resolution: u32, points: u128 },
    #[error("internal invariant violation: {reason}")]
    Internal { reason: String },
}

impl From<CostMatrixError> for CertifyError {
    fn from(e: CostMatrixError) -> Self {
        CertifyError::NotReasonable(e)
    }
}

/// A probability vector witnessing that the mode rule is suboptimal: its mode
/// label is unique yet absent from the Bayes set, with strictly positive
/// regret.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub p: ProbVector,
    pub mode_label: usize,
    pub bayes_labels: BTreeSet<usize>,
    pub regret: Rational,
    /// `(mode_label, better_label)` pair whose disagreement region produced
    /// the witness, when one was used in construction.
    pub witness_pair: Option<(usize, usize)>,
}

impl Counterexample {
    /// Re-check every invariant against `matrix` through the decision module.
    pub fn verify(&self, matrix: &CostMatrix) -> bool {
        let mode = mode_set(&self.p);
        if mode.unique_label() != Some(self.mode_label) {
            return false;
        }
        let Ok(bayes) = bayes_set(matrix, &self.p) else {
            return false;
        };
        if *bayes.labels() != self.bayes_labels || bayes.labels().contains(&self.mode_label) {
            return false;
        }
        let Ok(mode_loss) = expected_loss(matrix, self.mode_label, &self.p) else {
            return false;
        };
        self.regret == mode_loss - bayes.value() && self.regret > Rational::zero()
    }

    pub fn to_json(&self) -> Value {
        let p: Vec<Value> = self
            .p
            .probs()
            .iter()
            .map(|q| Value::String(format_rational(q)))
            .collect();
        let bayes: Vec<Value> = self
            .bayes_labels
            .iter()
            .map(|&l| Value::Number(l.into()))
            .collect();
        let mut obj = serde_json::json!({
            "p": p,
            "mode_label": self.mode_label,
            "bayes_labels": bayes,
            "regret": format_rational(&self.regret),
            "regret_decimal": decimal_approx(&self.regret, 12),
        });
        if let Some((m, w)) = self.witness_pair {
            obj["witness_pair"] = serde_json::json!([m, w]);
        }
        obj
    }
}

/// The certifier's answer for one loss matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub mode_is_bayes: bool,
    pub canonical: CanonicalCostMatrix,
    pub counterexample: Option<Counterexample>,
}

impl Verdict {
    pub fn to_json(&self) -> Value {
        let mut obj = serde_json::json!({
            "mode_is_bayes": self.mode_is_bayes,
            "canonical": self.canonical.to_json(),
        });
        if let Some(ce) = &self.counterexample {
            obj["counterexample"] = ce.to_json();
        }
        obj
    }
}

/// A linear system over a probability vector: equalities, inequalities, and
/// the implicit bounds `p >= 0`. The simplex equality `sum p = 1` is always
/// present. Inequality rows `coeffs . p (>|>=) rhs` are read strictly by
/// [`feasible_strict`] and weakly by [`StrictFeasibilitySystem::satisfied_weak`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrictFeasibilitySystem {
    k: usize,
    equalities: Vec<(Vec<Rational>, Rational)>,
    strict_inequalities: Vec<(Vec<Rational>, Rational)>,
}

impl StrictFeasibilitySystem {
    pub fn new(k: usize) -> Self {
        let ones = vec![Rational::from_integer(1.into()); k];
        StrictFeasibilitySystem {
            k,
            equalities: vec![(ones, Rational::from_integer(1.into()))],
            strict_inequalities: Vec::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn equalities(&self) -> &[(Vec<Rational>, Rational)] {
        &self.equalities
    }

    pub fn strict_inequalities(&self) -> &[(Vec<Rational>, Rational)] {
        &self.strict_inequalities
    }

    pub fn push_equality(
        &mut self,
        coeffs: Vec<Rational>,
        rhs: Rational,
    ) -> Result<(), CertifyError> {
        self.check_width(coeffs.len())?;
        self.equalities.push((coeffs, rhs));
        Ok(())
    }

    pub fn push_inequality(
        &mut self,
        coeffs: Vec<Rational>,
        rhs: Rational,
    ) -> Result<(), CertifyError> {
        self.check_width(coeffs.len())?;
        self.strict_inequalities.push((coeffs, rhs));
        Ok(())
    }

    fn check_width(&self, found: usize) -> Result<(), CertifyError> {
        if found != self.k {
            return Err(CertifyError::MalformedSystem {
                reason: format!("coefficient vector has {found} entries, expected {}", self.k),
            });
        }
        Ok(())
    }

    /// All equalities hold and every inequality holds weakly (`>=`).
    pub fn satisfied_weak(&self, p: &ProbVector) -> Result<bool, CertifyError> {
        self.satisfied(p, false)
    }

    /// All equalities hold and every inequality holds strictly (`>`).
    pub fn satisfied_strict(&self, p: &ProbVector) -> Result<bool, CertifyError> {
        self.satisfied(p, true)
    }

    fn satisfied(&self, p: &ProbVector, strict: bool) -> Result<bool, CertifyError> {
        if p.k() != self.k {
            return Err(CertifyError::MalformedSystem {
                reason: format!("point has k={}, system has k={}", p.k(), self.k),
            });
        }
        let dot = |coeffs: &[Rational]| -> Rational {
            coeffs.iter().zip(p.probs()).map(|(c, q)| c * q).sum()
        };
        for (coeffs, rhs) in &self.equalities {
            if dot(coeffs) != *rhs {
                return Ok(false);
            }
        }
        for (coeffs, rhs) in &self.strict_inequalities {
            let lhs = dot(coeffs);
            if (strict && lhs <= *rhs) || (!strict && lhs < *rhs) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Threshold `c/2` for a canonical binary matrix `[[0, c], [2-c, 0]]`:
/// decision 1 is uniquely optimal strictly above it on `p(1|x)`, both
/// decisions tie at it, and decision 2 is uniquely optimal below it.
pub fn binary_threshold(canonical: &CanonicalCostMatrix) -> Result<Rational, CertifyError> {
    if canonical.k() != 2 {
        return Err(CertifyError::WrongArity {
            expected: 2,
            found: canonical.k(),
        });
    }
    Ok(canonical.entry(1, 2) / Rational::from_integer(2.into()))
}

/// The two half-plane conditions under which `target` is Bayes-optimal for a
/// symmetric canonical ternary matrix `[[0,a,b],[a,0,3-a-b],[b,3-a-b,0]]`.
///
/// For target 1 these are `2b p1 >= (2a-3) p2 + b` and
/// `2a p1 >= (2b-3) p3 + a`; targets 2 and 3 relabel accordingly. A vector
/// satisfies the returned system weakly iff the target is in its Bayes set.
pub fn ternary_conditions(
    canonical: &CanonicalCostMatrix,
    target: usize,
) -> Result<StrictFeasibilitySystem, CertifyError> {
    if canonical.k() != 3 {
        return Err(CertifyError::WrongArity {
            expected: 3,
            found: canonical.k(),
        });
    }
    if !canonical.is_symmetric() {
        return Err(CertifyError::NotSymmetric);
    }
    if !(1..=3).contains(&target) {
        return Err(CertifyError::MalformedSystem {
            reason: format!("target label {target} out of range 1..=3"),
        });
    }

    // Swap labels 1 and `target`; the transposition is its own inverse.
    let mut sigma = [0usize, 1, 2];
    sigma.swap(0, target - 1);
    let relabeled = |i: usize, j: usize| canonical.entry(sigma[i - 1] + 1, sigma[j - 1] + 1);
    let a = relabeled(1, 2).clone();
    let b = relabeled(1, 3).clone();

    let two = Rational::from_integer(2.into());
    let three = Rational::from_integer(3.into());
    // Coefficients over the relabeled coordinates q_i = p_{sigma(i)}.
    let rows_q = [
        (vec![&two * &b, -(&two * &a - &three), Rational::zero()], b.clone()),
        (vec![&two * &a, Rational::zero(), -(&two * &b - &three)], a.clone()),
    ];

    let mut sys = StrictFeasibilitySystem::new(3);
    for (coeffs_q, rhs) in rows_q {
        let mut coeffs_p = vec![Rational::zero(); 3];
        for (i, c) in coeffs_q.into_iter().enumerate() {
            coeffs_p[sigma[i]] = c;
        }
        sys.push_inequality(coeffs_p, rhs)?;
    }
    Ok(sys)
}

/// Find an exact point satisfying the system with every inequality strict, or
/// `None` when no such point exists.
///
/// A margin variable is introduced and maximized subject to
/// `coeffs . p >= rhs + margin` (capped at 1 to keep the program bounded);
/// the system is strictly feasible iff the optimal margin is positive.
pub fn feasible_strict(sys: &StrictFeasibilitySystem) -> Result<Option<ProbVector>, CertifyError> {
    let k = sys.k();
    let n_ineq = sys.strict_inequalities().len();
    // Columns: p_1..p_k, margin, one surplus per inequality, the margin cap slack.
    let n = k + 1 + n_ineq + 1;
    let margin_col = k;
    let cap_col = n - 1;

    let mut rows: Vec<(Vec<Rational>, Rational)> = Vec::new();
    for (coeffs, rhs) in sys.equalities() {
        let mut row = vec![Rational::zero(); n];
        row[..k].clone_from_slice(coeffs);
        rows.push((row, rhs.clone()));
    }
    for (idx, (coeffs, rhs)) in sys.strict_inequalities().iter().enumerate() {
        let mut row = vec![Rational::zero(); n];
        row[..k].clone_from_slice(coeffs);
        row[margin_col] = -Rational::from_integer(1.into());
        row[k + 1 + idx] = -Rational::from_integer(1.into());
        rows.push((row, rhs.clone()));
    }
    let mut cap = vec![Rational::zero(); n];
    cap[margin_col] = Rational::from_integer(1.into());
    cap[cap_col] = Rational::from_integer(1.into());
    rows.push((cap, Rational::from_integer(1.into())));

    let mut objective = vec![Rational::zero(); n];
    objective[margin_col] = Rational::from_integer(1.into());

    match lp::maximize(&objective, &rows) {
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(CertifyError::Internal {
            reason: "margin program is unbounded despite the cap".to_owned(),
        }),
        LpOutcome::Optimal { value, solution } => {
            if value <= Rational::zero() {
                return Ok(None);
            }
            let p = ProbVector::new(solution[..k].to_vec()).map_err(|e| {
                CertifyError::Internal {
                    reason: format!("solver produced an invalid simplex point: {e}"),
                }
            })?;
            debug_assert!(sys.satisfied_strict(&p).unwrap_or(false));
            Ok(Some(p))
        }
    }
}

/// Search for a counterexample to mode-optimality under `matrix`.
///
/// Returns `None` exactly when the canonical form is zero-one loss. Otherwise
/// scans ordered label pairs `(m, w)` lexicographically and solves the strict
/// system `{p_m > p_j for j != m}` with `{E_w < E_m}` under the canonical
/// matrix, returning the first witness; the scan order makes the witness
/// deterministic.
pub fn find_counterexample(matrix: &CostMatrix) -> Result<Option<Counterexample>, CertifyError> {
    let canonical = matrix.canonicalize()?;
    if canonical.is_zero_one() {
        return Ok(None);
    }
    let k = matrix.k();
    for mode_label in 1..=k {
        for better in 1..=k {
            if better == mode_label {
                continue;
            }
            let sys = disagreement_system(&canonical, mode_label, better)?;
            if let Some(p) = feasible_strict(&sys)? {
                let ce = build_counterexample(matrix, p, mode_label, Some((mode_label, better)))?;
                return Ok(Some(ce));
            }
        }
    }
    Err(CertifyError::Internal {
        reason: "canonical matrix is not zero-one, yet no disagreement region is feasible"
            .to_owned(),
    })
}

/// The strict system `{p_m > p_j for all j != m} + {E_w < E_m}` under a
/// canonical matrix: its solutions have unique mode `m` while `w` is strictly
/// better in expected loss.
pub fn disagreement_system(
    canonical: &CanonicalCostMatrix,
    mode_label: usize,
    better: usize,
) -> Result<StrictFeasibilitySystem, CertifyError> {
    let k = canonical.k();
    for label in [mode_label, better] {
        if label == 0 || label > k {
            return Err(CertifyError::MalformedSystem {
                reason: format!("label {label} out of range 1..={k}"),
            });
        }
    }
    if mode_label == better {
        return Err(CertifyError::MalformedSystem {
            reason: "mode and better label coincide".to_owned(),
        });
    }
    let mut sys = StrictFeasibilitySystem::new(k);
    for j in 1..=k {
        if j == mode_label {
            continue;
        }
        let mut coeffs = vec![Rational::zero(); k];
        coeffs[mode_label - 1] = Rational::from_integer(1.into());
        coeffs[j - 1] = -Rational::from_integer(1.into());
        sys.push_inequality(coeffs, Rational::zero())?;
    }
    let mode_row = &canonical.inner().entries()[mode_label - 1];
    let better_row = &canonical.inner().entries()[better - 1];
    let coeffs = mode_row
        .iter()
        .zip(better_row)
        .map(|(m, w)| m - w)
        .collect();
    sys.push_inequality(coeffs, Rational::zero())?;
    Ok(sys)
}

fn build_counterexample(
    matrix: &CostMatrix,
    p: ProbVector,
    mode_label: usize,
    witness_pair: Option<(usize, usize)>,
) -> Result<Counterexample, CertifyError> {
    let bayes = bayes_set(matrix, &p).map_err(|e| CertifyError::Internal {
        reason: e.to_string(),
    })?;
    let mode_loss = expected_loss(matrix, mode_label, &p).map_err(|e| CertifyError::Internal {
        reason: e.to_string(),
    })?;
    let ce = Counterexample {
        regret: mode_loss - bayes.value(),
        bayes_labels: bayes.labels().clone(),
        p,
        mode_label,
        witness_pair,
    };
    if !ce.verify(matrix) {
        return Err(CertifyError::Internal {
            reason: "constructed counterexample fails re-verification".to_owned(),
        });
    }
    Ok(ce)
}

/// Certify whether the mode functional is the Bayes classifier for `matrix`.
/// True exactly when the canonical form is zero-one loss; otherwise the
/// verdict carries a verified counterexample.
pub fn mode_is_bayes(matrix: &CostMatrix) -> Result<Verdict, CertifyError> {
    let canonical = matrix.canonicalize()?;
    let zero_one = canonical.is_zero_one();
    let counterexample = if zero_one {
        None
    } else {
        match find_counterexample(matrix)? {
            Some(ce) => Some(ce),
            None => {
                return Err(CertifyError::Internal {
                    reason: "non-zero-one matrix produced no counterexample".to_owned(),
                })
            }
        }
    };
    Ok(Verdict {
        mode_is_bayes: zero_one,
        canonical,
        counterexample,
    })
}

/// Exhaustively scan the simplex grid `{n/resolution : sum n = resolution}` in
/// ascending lexicographic order and return the first point whose unique mode
/// label is not Bayes-optimal. Exact arithmetic throughout.
pub fn brute_force_oracle(
    matrix: &CostMatrix,
    resolution: u32,
) -> Result<Option<Counterexample>, CertifyError> {
    brute_force_oracle_with_threads(matrix, resolution, 1)
}

/// [`brute_force_oracle`] fanned out over `threads` workers. Work is split by
/// the first grid coordinate and reduced to the minimal lexicographic hit, so
/// the reported result is identical to the sequential scan.
pub fn brute_force_oracle_with_threads(
    matrix: &CostMatrix,
    resolution: u32,
    threads: usize,
) -> Result<Option<Counterexample>, CertifyError> {
    let report = matrix.validate_reasonable();
    if !report.is_reasonable {
        return Err(CertifyError::NotReasonable(CostMatrixError::NotReasonable {
            reason: format!(
                "{} violations, strict inequality {}",
                report.violations.len(),
                if report.has_strict { "present" } else { "absent" }
            ),
        }));
    }
    if resolution == 0 {
        return Err(CertifyError::ZeroResolution);
    }
    let k = matrix.k();
    let points = grid_size(resolution, k);
    if points > ORACLE_GRID_LIMIT {
        return Err(CertifyError::ResolutionTooLarge { resolution, points });
    }

    if threads <= 1 {
        return scan_block(matrix, resolution, 0..=u64::from(resolution));
    }

    // Blocks indexed by the first coordinate, claimed in ascending order.
    let next_block = AtomicU64::new(0);
    let best_block = AtomicU64::new(u64::MAX);
    let hits: Mutex<Vec<(u64, Counterexample)>> = Mutex::new(Vec::new());
    let failure: Mutex<Option<CertifyError>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..threads.min(resolution as usize + 1) {
            scope.spawn(|| loop {
                let block = next_block.fetch_add(1, Ordering::Relaxed);
                if block > u64::from(resolution) || block > best_block.load(Ordering::Relaxed) {
                    break;
                }
                match scan_block(matrix, resolution, block..=block) {
                    Ok(Some(ce)) => {
                        best_block.fetch_min(block, Ordering::Relaxed);
                        hits.lock().unwrap().push((block, ce));
                    }
                    Ok(None) => {}
                    Err(e) => {
                        *failure.lock().unwrap() = Some(e);
                        break;
                    }
                }
            });
        }
    });

    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let mut hits = hits.into_inner().unwrap();
    hits.sort_by_key(|(block, _)| *block);
    Ok(hits.into_iter().next().map(|(_, ce)| ce))
}

/// Scan the grid points whose first coordinate numerator lies in `first`,
/// in ascending lexicographic order, returning the first counterexample.
fn scan_block(
    matrix: &CostMatrix,
    resolution: u32,
    first: std::ops::RangeInclusive<u64>,
) -> Result<Option<Counterexample>, CertifyError> {
    let k = matrix.k();
    let denom = Rational::from_integer(u64::from(resolution).into());
    let mut numerators = vec![0u64; k];
    for first_coord in first {
        if first_coord > u64::from(resolution) {
            break;
        }
        numerators[0] = first_coord;
        let rest = u64::from(resolution) - first_coord;
        // Sub-odometer over coordinates 2..k in ascending lexicographic order.
        for v in numerators[1..k - 1].iter_mut() {
            *v = 0;
        }
        numerators[k - 1] = rest;
        loop {
            let p = ProbVector::new(
                numerators
                    .iter()
                    .map(|&n| Rational::from_integer(n.into()) / denom.clone())
                    .collect(),
            )
            .map_err(|e| CertifyError::Internal {
                reason: format!("grid point invalid: {e}"),
            })?;
            if let Some(ce) = check_point(matrix, &p)? {
                return Ok(Some(ce));
            }
            if !advance(&mut numerators[1..]) {
                break;
            }
        }
    }
    Ok(None)
}

/// The oracle's per-point predicate: unique mode absent from the Bayes set.
/// Returns the full counterexample record when it holds.
pub fn check_point(
    matrix: &CostMatrix,
    p: &ProbVector,
) -> Result<Option<Counterexample>, CertifyError> {
    if p.k() != matrix.k() {
        return Err(CertifyError::MalformedSystem {
            reason: format!("point has k={}, matrix has k={}", p.k(), matrix.k()),
        });
    }
    let mode = mode_set(p);
    let Some(mode_label) = mode.unique_label() else {
        return Ok(None);
    };
    let bayes = bayes_set(matrix, p).map_err(|e| CertifyError::Internal {
        reason: e.to_string(),
    })?;
    if bayes.labels().contains(&mode_label) {
        return Ok(None);
    }
    Ok(Some(build_counterexample(
        matrix,
        p.clone(),
        mode_label,
        None,
    )?))
}

/// Advance a fixed-sum odometer to the next composition in ascending
/// lexicographic order; false once exhausted.
fn advance(tail: &mut [u64]) -> bool {
    let len = tail.len();
    if len < 2 {
        return false;
    }
    // Rightmost position (excluding the last) with mass to its right.
    let mut suffix = tail[len - 1];
    for i in (0..len - 1).rev() {
        if suffix > 0 {
            tail[i] += 1;
            let rest = suffix - 1;
            for v in tail[i + 1..len - 1].iter_mut() {
                *v = 0;
            }
            tail[len - 1] = rest;
            return true;
        }
        suffix += tail[i];
    }
    false
}

/// Number of grid points: choose(resolution + k - 1, k - 1), saturating above
/// the oracle limit.
fn grid_size(resolution: u32, k: usize) -> u128 {
    let mut count: u128 = 1;
    for i in 1..=(k - 1) as u128 {
        count = count * (u128::from(resolution) + i) / i;
        if count > ORACLE_GRID_LIMIT * 2 {
            return count;
        }
    }
    count
}
