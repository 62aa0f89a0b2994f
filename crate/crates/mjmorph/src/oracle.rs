//! Metamorphic oracle: decides whether a model behaved consistently on an
//! original program and its equivalent variant.
//!
//! Three relations are available. `Top1Match` asks for the same rank-1
//! label; `TopKOverlap` thresholds the Jaccard overlap of the top-k label
//! sets; `ScoreDrop` bounds how much confidence the variant may lose in the
//! original's top answer.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::models::{ModelUnavailable, Prediction};
use crate::transforms::TransformRecord;

/// Which metamorphic relation to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Top1Match,
    TopKOverlap,
    ScoreDrop,
}

impl std::fmt::Display for Relation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Relation::Top1Match => f.write_str("top1"),
            Relation::TopKOverlap => f.write_str("jaccard"),
            Relation::ScoreDrop => f.write_str("score-drop"),
        }
    }
}

impl std::str::FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "top1" => Ok(Relation::Top1Match),
            "jaccard" => Ok(Relation::TopKOverlap),
            "score-drop" => Ok(Relation::ScoreDrop),
            other => Err(format!(
                "unknown relation `{other}` (expected top1, jaccard, or score-drop)"
            )),
        }
    }
}

/// The relation plus its parameters. `k` and `tau` matter only to
/// `TopKOverlap`; `delta` only to `ScoreDrop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OraclePolicy {
    pub relation: Relation,
    pub k: usize,
    pub tau: f64,
    pub delta: f64,
}

impl Default for OraclePolicy {
    fn default() -> Self {
        OraclePolicy {
            relation: Relation::Top1Match,
            k: 5,
            tau: 0.5,
            delta: 0.3,
        }
    }
}

/// Per-case consistency judgment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum VerdictStatus {
    Consistent,
    Inconsistent,
    ModelError,
}

/// The full judgment for one (program, transformation) pair: status, the
/// relation and measured similarity behind it, and both predictions for
/// replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetamorphicVerdict {
    pub status: VerdictStatus,
    pub relation: Relation,
    /// Value the relation measured: 1/0 for top-1 agreement, the Jaccard
    /// overlap, or the score drop. Absent on model errors.
    pub similarity: Option<f64>,
    pub original: Option<Prediction>,
    pub variant: Option<Prediction>,
    pub record: TransformRecord,
}

/// True iff the rank-1 labels agree.
pub fn top1_match(a: &Prediction, b: &Prediction) -> bool {
    a.top1() == b.top1()
}

/// Jaccard overlap of the top-`k` label sets: `|A ∩ B| / |A ∪ B|`.
pub fn jaccard_topk(a: &Prediction, b: &Prediction, k: usize) -> f64 {
    let take = |p: &Prediction| -> BTreeSet<String> {
        p.entries
            .iter()
            .take(k.min(p.entries.len()))
            .map(|e| e.label.clone())
            .collect()
    };
    let sa = take(a);
    let sb = take(b);
    let intersection = sa.intersection(&sb).count();
    let union = sa.union(&sb).count();
    if union == 0 {
        1.0
    } else {
        intersection as f64 / union as f64
    }
}

/// How much confidence the variant lost in the original's top answer:
/// the top-1 score in `a` minus that label's score in `b` (0 when absent).
/// Positive means lost confidence.
pub fn score_drop(a: &Prediction, b: &Prediction) -> f64 {
    let label = a.top1();
    a.entries[0].score - b.score_of(label)
}

/// Applies the policy's relation to a pair of prediction results.
pub fn judge(
    a: &Result<Prediction, ModelUnavailable>,
    b: &Result<Prediction, ModelUnavailable>,
    policy: &OraclePolicy,
    record: TransformRecord,
) -> MetamorphicVerdict {
    let (a, b) = match (a, b) {
        (Ok(a), Ok(b)) => (a, b),
        _ => {
            return MetamorphicVerdict {
                status: VerdictStatus::ModelError,
                relation: policy.relation,
                similarity: None,
                original: a.as_ref().ok().cloned(),
                variant: b.as_ref().ok().cloned(),
                record,
            }
        }
    };
    let (consistent, similarity) = match policy.relation {
        Relation::Top1Match => {
            let ok = top1_match(a, b);
            (ok, if ok { 1.0 } else { 0.0 })
        }
        Relation::TopKOverlap => {
            let j = jaccard_topk(a, b, policy.k);
            (j >= policy.tau, j)
        }
        Relation::ScoreDrop => {
            let d = score_drop(a, b);
            (d <= policy.delta, d)
        }
    };
    MetamorphicVerdict {
        status: if consistent {
            VerdictStatus::Consistent
        } else {
            VerdictStatus::Inconsistent
        },
        relation: policy.relation,
        similarity: Some(similarity),
        original: Some(a.clone()),
        variant: Some(b.clone()),
        record,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::TransformKind;

    fn pred(entries: &[(&str, f64)]) -> Prediction {
        Prediction::normalize(
            entries.iter().map(|(l, s)| (l.to_string(), *s)).collect(),
            entries.len().max(1),
        )
        .unwrap()
    }

    fn record() -> TransformRecord {
        TransformRecord {
            kind: TransformKind::ExchangeLoop,
            method: "isPrime".into(),
            node_path: "body.1".into(),
            seed: 7,
            before_sha256: "aa".into(),
            after_sha256: "bb".into(),
        }
    }

    #[test]
    fn top1_examples() {
        let a = pred(&[("is|prime", 0.9), ("prime", 0.05)]);
        assert!(top1_match(&a, &a));
        let skip = pred(&[("skip", 0.8), ("run", 0.1)]);
        assert!(!top1_match(&a, &skip));
        let same_top = pred(&[("is|prime", 0.7), ("other", 0.2)]);
        assert!(top1_match(&a, &same_top));
    }

    #[test]
    fn jaccard_examples() {
        let a = pred(&[("a", 0.9), ("b", 0.8), ("c", 0.7), ("d", 0.6), ("e", 0.5)]);
        assert_eq!(jaccard_topk(&a, &a, 5), 1.0);
        let disjoint = pred(&[("v", 0.9), ("w", 0.8), ("x", 0.7), ("y", 0.6), ("z", 0.5)]);
        assert_eq!(jaccard_topk(&a, &disjoint, 5), 0.0);
        // 3 shared labels among two 5-label sets: |∩| = 3, |∪| = 7.
        let partial = pred(&[("a", 0.9), ("b", 0.8), ("c", 0.7), ("y", 0.6), ("z", 0.5)]);
        assert!((jaccard_topk(&a, &partial, 5) - 3.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn jaccard_is_symmetric_and_bounded() {
        let preds = [
            pred(&[("a", 0.9), ("b", 0.5)]),
            pred(&[("b", 0.9), ("c", 0.5)]),
            pred(&[("x", 1.0)]),
            pred(&[("a", 0.2)]),
        ];
        for x in &preds {
            for y in &preds {
                let j1 = jaccard_topk(x, y, 5);
                let j2 = jaccard_topk(y, x, 5);
                assert_eq!(j1, j2);
                assert!((0.0..=1.0).contains(&j1));
            }
        }
        // Equal top-k sets iff jaccard is exactly 1.
        let a = pred(&[("a", 0.9), ("b", 0.5)]);
        let b = pred(&[("a", 0.3), ("b", 0.2)]);
        assert_eq!(jaccard_topk(&a, &b, 5), 1.0);
    }

    #[test]
    fn score_drop_examples() {
        let a = pred(&[("m", 0.9), ("n", 0.3)]);
        assert_eq!(score_drop(&a, &a), 0.0);
        let absent = pred(&[("other", 0.5)]);
        assert!((score_drop(&a, &absent) - 0.9).abs() < 1e-12);
        let lower = pred(&[("x", 0.8), ("m", 0.7)]);
        assert!((score_drop(&a, &lower) - 0.2).abs() < 1e-9);
        // Gained confidence: negative drop.
        let higher = pred(&[("m", 1.0)]);
        assert!(score_drop(&a, &higher) < 0.0);
    }

    #[test]
    fn judge_flags_the_loop_exchange_failure_pair() {
        let original = Ok(pred(&[("is|prime", 0.95), ("prime", 0.03)]));
        let variant = Ok(pred(&[
            ("skip", 0.9),
            ("compute", 0.04),
            ("run", 0.02),
            ("do|work", 0.02),
            ("go", 0.01),
        ]));
        let policy = OraclePolicy::default();
        let verdict = judge(&original, &variant, &policy, record());
        assert_eq!(verdict.status, VerdictStatus::Inconsistent);
        assert_eq!(verdict.similarity, Some(0.0));
    }

    #[test]
    fn zero_tau_overlap_is_vacuously_consistent() {
        let a = Ok(pred(&[("a", 0.9)]));
        let b = Ok(pred(&[("z", 0.9)]));
        let policy = OraclePolicy {
            relation: Relation::TopKOverlap,
            tau: 0.0,
            ..OraclePolicy::default()
        };
        assert_eq!(judge(&a, &b, &policy, record()).status, VerdictStatus::Consistent);
    }

    #[test]
    fn identical_predictions_are_consistent_under_every_policy() {
        let p = Ok(pred(&[("a", 0.9), ("b", 0.5)]));
        for relation in [Relation::Top1Match, Relation::TopKOverlap, Relation::ScoreDrop] {
            let policy = OraclePolicy {
                relation,
                k: 5,
                tau: 1.0,
                delta: 0.0,
            };
            assert_eq!(
                judge(&p, &p, &policy, record()).status,
                VerdictStatus::Consistent,
                "under {relation:?}"
            );
        }
    }

    #[test]
    fn model_error_dominates() {
        let ok = Ok(pred(&[("a", 0.9)]));
        let err: Result<Prediction, ModelUnavailable> =
            Err(ModelUnavailable::new("connection refused"));
        let policy = OraclePolicy::default();
        assert_eq!(judge(&ok, &err, &policy, record()).status, VerdictStatus::ModelError);
        assert_eq!(judge(&err, &ok, &policy, record()).status, VerdictStatus::ModelError);
    }

    #[test]
    fn raising_tau_never_flips_inconsistent_to_consistent() {
        let a = Ok(pred(&[("a", 0.9), ("b", 0.8), ("c", 0.7)]));
        let b = Ok(pred(&[("a", 0.9), ("x", 0.8), ("y", 0.7)]));
        let mut last_consistent = true;
        for step in 0..=10 {
            let tau = step as f64 / 10.0;
            let policy = OraclePolicy {
                relation: Relation::TopKOverlap,
                k: 5,
                tau,
                delta: 0.0,
            };
            let consistent =
                judge(&a, &b, &policy, record()).status == VerdictStatus::Consistent;
            // Monotone: once inconsistent at some tau, higher tau stays
            // inconsistent.
            if !last_consistent {
                assert!(!consistent, "tau={tau}");
            }
            last_consistent = consistent;
        }
    }
}
