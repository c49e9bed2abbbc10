//! Match distributions and the two hinge objectives used for training.
//!
//! For a group with positive scores `S⁺` (size `n₁`) and negative scores
//! `S⁻` (size `n₂`), summing the pairwise hinge arguments collapses to a
//! closed form:
//!
//! ```text
//! Σ_{i⁺} Σ_{i⁻} (S⁻ − S⁺ + λ) = n₁·ΣS⁻ − n₂·ΣS⁺ + n₁n₂λ
//! ```
//!
//! The well-order loss hinges that aggregate once per group, while the
//! ranking loss hinges every pair separately. A zero aggregate only says
//! `mean(S⁺) − mean(S⁻) ≥ λ`; it does not imply every positive beats every
//! negative.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Positive and negative match scores of one question for one matcher.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreGroup {
    pub positives: Vec<f64>,
    pub negatives: Vec<f64>,
}

impl ScoreGroup {
    pub fn new(positives: Vec<f64>, negatives: Vec<f64>) -> Self {
        Self {
            positives,
            negatives,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.positives.is_empty() || self.negatives.is_empty()
    }
}

/// `∂L/∂s` for every score of a group, aligned with the group's vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupGradients {
    pub positives: Vec<f64>,
    pub negatives: Vec<f64>,
}

impl GroupGradients {
    fn zeros(group: &ScoreGroup) -> Self {
        Self {
            positives: alloc::vec![0.0; group.positives.len()],
            negatives: alloc::vec![0.0; group.negatives.len()],
        }
    }
}

/// Numerically stable softmax.
pub fn match_distribution(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument(
            "match distribution of no scores".into(),
        ));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(
            "match distribution of non-finite scores".into(),
        ));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| libm::exp(s - max)).collect();
    let z: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / z).collect())
}

/// `n₁·ΣS⁻ − n₂·ΣS⁺ + n₁n₂λ`, before the hinge.
pub fn well_order_aggregate(group: &ScoreGroup, lambda: f64) -> f64 {
    let n1 = group.positives.len() as f64;
    let n2 = group.negatives.len() as f64;
    let sum_pos: f64 = group.positives.iter().sum();
    let sum_neg: f64 = group.negatives.iter().sum();
    n1 * sum_neg - n2 * sum_pos + n1 * n2 * lambda
}

/// Hinged aggregate of one group; 0 when either side is empty.
pub fn well_order_term(group: &ScoreGroup, lambda: f64) -> f64 {
    if group.is_degenerate() {
        return 0.0;
    }
    well_order_aggregate(group, lambda).max(0.0)
}

pub fn well_order_loss(ms: &ScoreGroup, pr: &ScoreGroup, lambda: f64) -> f64 {
    well_order_term(ms, lambda) + well_order_term(pr, lambda)
}

/// Gradient of [`well_order_term`]. While the hinge is active every
/// negative gets `n₁` and every positive gets `−n₂`; at or below the hinge
/// boundary everything is zero.
pub fn well_order_gradients(group: &ScoreGroup, lambda: f64) -> GroupGradients {
    let mut grads = GroupGradients::zeros(group);
    if group.is_degenerate() || well_order_aggregate(group, lambda) <= 0.0 {
        return grads;
    }
    let n1 = group.positives.len() as f64;
    let n2 = group.negatives.len() as f64;
    grads.positives.iter_mut().for_each(|g| *g = -n2);
    grads.negatives.iter_mut().for_each(|g| *g = n1);
    grads
}

/// `Σ_{pairs} [s⁻ − s⁺ + λ]₊`.
pub fn ranking_loss(group: &ScoreGroup, lambda: f64) -> f64 {
    group
        .positives
        .iter()
        .flat_map(|p| {
            group
                .negatives
                .iter()
                .map(move |n| (n - p + lambda).max(0.0))
        })
        .sum()
}

pub fn ranking_gradients(group: &ScoreGroup, lambda: f64) -> GroupGradients {
    let mut grads = GroupGradients::zeros(group);
    for (i, p) in group.positives.iter().enumerate() {
        for (j, n) in group.negatives.iter().enumerate() {
            if n - p + lambda > 0.0 {
                grads.positives[i] -= 1.0;
                grads.negatives[j] += 1.0;
            }
        }
    }
    grads
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn g(p: &[f64], n: &[f64]) -> ScoreGroup {
        ScoreGroup::new(p.to_vec(), n.to_vec())
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(match_distribution(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(match_distribution(&[4.2]).unwrap(), vec![1.0]);
        let d = match_distribution(&[libm::log(2.0), 0.0]).unwrap();
        assert!(close(d[0], 2.0 / 3.0) && close(d[1], 1.0 / 3.0));
        assert!(match_distribution(&[]).is_err());
        assert!(match_distribution(&[f64::NAN]).is_err());
    }

    #[test]
    fn ranking_examples() {
        assert_eq!(ranking_loss(&g(&[0.9], &[0.2]), 0.1), 0.0);
        assert!(close(ranking_loss(&g(&[0.2], &[0.9]), 0.1), 0.8));
        assert_eq!(ranking_loss(&g(&[0.2], &[]), 0.1), 0.0);
    }

    #[test]
    fn well_order_examples() {
        let empty = ScoreGroup::default();
        assert!(close(
            well_order_aggregate(&g(&[0.9], &[0.2, 0.1]), 0.1),
            -1.3
        ));
        assert_eq!(well_order_loss(&g(&[0.9], &[0.2, 0.1]), &empty, 0.1), 0.0);
        assert!(close(well_order_loss(&g(&[0.2], &[0.9]), &empty, 0.1), 0.8));
        assert_eq!(well_order_loss(&g(&[], &[0.9]), &g(&[0.3], &[]), 0.1), 0.0);
    }

    #[test]
    fn well_order_gradient_examples() {
        let active = g(&[0.0], &[0.5, 0.4]);
        let gr = well_order_gradients(&active, 0.1);
        assert_eq!(gr.positives, vec![-2.0]);
        assert_eq!(gr.negatives, vec![1.0, 1.0]);

        let inactive = g(&[1.0], &[0.0]);
        assert_eq!(
            well_order_gradients(&inactive, 0.1),
            GroupGradients {
                positives: vec![0.0],
                negatives: vec![0.0]
            }
        );

        let boundary = g(&[0.5], &[0.25]);
        assert_eq!(well_order_aggregate(&boundary, 0.25), 0.0);
        assert_eq!(well_order_gradients(&boundary, 0.25).positives, vec![0.0]);
    }
}
