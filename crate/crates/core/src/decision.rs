//! The mode functional, the Bayes rule, expected loss, and regret — all with
//! exact tie-set semantics. Decision rules return the full set of optimal
//! labels; drawing a single label from a tie set is a separate, seeded step.
//!
//! Every comparison is exact rational. There is no epsilon anywhere in this
//! module: boundary ties are mathematically meaningful.

use std::collections::BTreeSet;

use num_traits::Zero;
use thiserror::Error;

use crate::cost_matrix::CostMatrix;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProbVectorError {
    #[error("probability vector must be nonempty")]
    Empty,
    #[error("component {index} is negative")]
    Negative { index: usize },
    #[error("components sum to {sum}, expected exactly 1")]
    NotNormalized { sum: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecisionError {
    #[error("matrix has k={matrix_k} but probability vector has k={vector_k}")]
    DimensionMismatch { matrix_k: usize, vector_k: usize },
    #[error("label {label} out of range 1..={k}")]
    LabelOutOfRange { label: usize, k: usize },
}

/// An exact point on the probability simplex: the conditional class
/// distribution a probabilistic classifier emits for one unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbVector {
    probs: Vec<Rational>,
}

impl ProbVector {
    /// Requires nonnegative components summing to exactly 1.
    pub fn new(probs: Vec<Rational>) -> Result<Self, ProbVectorError> {
        if probs.is_empty() {
            return Err(ProbVectorError::Empty);
        }
        for (i, p) in probs.iter().enumerate() {
            if *p < Rational::zero() {
                return Err(ProbVectorError::Negative { index: i + 1 });
            }
        }
        let sum: Rational = probs.iter().sum();
        if sum != Rational::from_integer(1.into()) {
            return Err(ProbVectorError::NotNormalized {
                sum: crate::rational::format_rational(&sum),
            });
        }
        Ok(ProbVector { probs })
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    /// Probability of class `label` (1-based).
    pub fn prob(&self, label: usize) -> &Rational {
        assert!(
            (1..=self.k()).contains(&label),
            "label must lie in 1..={}",
            self.k()
        );
        &self.probs[label - 1]
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }
}

/// The full set of optimal labels together with the attained optimum (maximal
/// probability for the mode rule, minimal expected loss for the Bayes rule).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionSet {
    labels: BTreeSet<usize>,
    value: Rational,
}

impl DecisionSet {
    pub fn labels(&self) -> &BTreeSet<usize> {
        &self.labels
    }

    pub fn value(&self) -> &Rational {
        &self.value
    }

    /// The single optimal label, when the set is not a tie.
    pub fn unique_label(&self) -> Option<usize> {
        if self.labels.len() == 1 {
            self.labels.first().copied()
        } else {
            None
        }
    }
}

/// How a tie among mode labels is charged when computing regret.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiePolicy {
    /// Average the expected losses of the tied labels (uniform randomization).
    #[default]
    Uniform,
    /// Charge the worst tied label.
    WorstCase,
}

/// The mode functional: all labels of maximal probability.
pub fn mode_set(p: &ProbVector) -> DecisionSet {
    let mut best = p.probs()[0].clone();
    for q in &p.probs()[1..] {
        if *q > best {
            best = q.clone();
        }
    }
    let labels = p
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, q)| **q == best)
        .map(|(i, _)| i + 1)
        .collect();
    DecisionSet {
        labels,
        value: best,
    }
}

/// Expected loss of deciding `label` under `matrix` at `p`:
/// the dot product of the label's row with `p`.
pub fn expected_loss(
    matrix: &CostMatrix,
    label: usize,
    p: &ProbVector,
) -> Result<Rational, DecisionError> {
    let k = matrix.k();
    if p.k() != k {
        return Err(DecisionError::DimensionMismatch {
            matrix_k: k,
            vector_k: p.k(),
        });
    }
    if label == 0 || label > k {
        return Err(DecisionError::LabelOutOfRange { label, k });
    }
    let row = &matrix.entries()[label - 1];
    let mut sum = Rational::zero();
    for (cost, prob) in row.iter().zip(p.probs()) {
        sum += cost * prob;
    }
    Ok(sum)
}

/// The Bayes classifier: all labels of minimal expected loss.
pub fn bayes_set(matrix: &CostMatrix, p: &ProbVector) -> Result<DecisionSet, DecisionError> {
    let k = matrix.k();
    if p.k() != k {
        return Err(DecisionError::DimensionMismatch {
            matrix_k: k,
            vector_k: p.k(),
        });
    }
    let losses: Vec<Rational> = (1..=k)
        .map(|label| expected_loss(matrix, label, p))
        .collect::<Result<_, _>>()?;
    let mut best = losses[0].clone();
    for l in &losses[1..] {
        if *l < best {
            best = l.clone();
        }
    }
    let labels = losses
        .iter()
        .enumerate()
        .filter(|(_, l)| **l == best)
        .map(|(i, _)| i + 1)
        .collect();
    Ok(DecisionSet {
        labels,
        value: best,
    })
}

/// Expected excess loss of the mode rule over the Bayes rule at `p`, charging
/// mode ties uniformly. Always nonnegative; zero exactly when every mode label
/// is Bayes-optimal.
pub fn regret(matrix: &CostMatrix, p: &ProbVector) -> Result<Rational, DecisionError> {
    regret_with_policy(matrix, p, TiePolicy::Uniform)
}

/// Regret with an explicit tie policy for the mode set.
pub fn regret_with_policy(
    matrix: &CostMatrix,
    p: &ProbVector,
    policy: TiePolicy,
) -> Result<Rational, DecisionError> {
    let mode = mode_set(p);
    let bayes = bayes_set(matrix, p)?;
    let losses: Vec<Rational> = mode
        .labels()
        .iter()
        .map(|&label| expected_loss(matrix, label, p))
        .collect::<Result<_, _>>()?;
    let mode_loss = match policy {
        TiePolicy::Uniform => {
            let sum: Rational = losses.iter().sum();
            sum / Rational::from_integer((losses.len() as u64).into())
        }
        TiePolicy::WorstCase => {
            let mut worst = losses[0].clone();
            for l in &losses[1..] {
                if *l > worst {
                    worst = l.clone();
                }
            }
            worst
        }
    };
    Ok(mode_loss - bayes.value())
}

/// Draw one label from a tie set, uniformly and reproducibly.
///
/// The SplitMix64 finalizer is applied to `seed` and the result taken modulo
/// the tie-set size to index the ascending label list, so the outcome is
/// identical across platforms and runs.
pub fn sample_decision(d: &DecisionSet, seed: u64) -> usize {
    let labels: Vec<usize> = d.labels().iter().copied().collect();
    assert!(!labels.is_empty(), "decision set must be nonempty");
    let x = splitmix64(seed);
    labels[(x % labels.len() as u64) as usize]
}

pub(crate) fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
