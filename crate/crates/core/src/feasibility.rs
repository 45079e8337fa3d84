//! What classical and quantum probability rules allow for observed question
//! chains: total-probability consistency across samples, order effects,
//! the max/min contraction property and exact majorization feasibility.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::ProbabilityVector;

/// Which side of the underlying issue a "Yes" answer supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Favour,
    Oppose,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyQuestion {
    pub text: String,
    /// Ordered as (yes, unsure, no).
    pub distribution: ProbabilityVector,
    pub polarity: Polarity,
    /// Published percentages the distribution was normalized from, kept so
    /// that writing the question back out reproduces its input exactly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub percentages: Option<Vec<f64>>,
}

impl SurveyQuestion {
    pub fn new(text: impl Into<String>, distribution: ProbabilityVector, polarity: Polarity) -> Self {
        Self {
            text: text.into(),
            distribution,
            polarity,
            percentages: None,
        }
    }
}

/// One sample's ordered list of questions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyChain {
    pub label: String,
    pub questions: Vec<SurveyQuestion>,
}

impl SurveyChain {
    pub fn new(label: impl Into<String>, questions: Vec<SurveyQuestion>) -> Result<Self> {
        let first = questions
            .first()
            .ok_or_else(|| Error::Ingest("a chain needs at least one question".into()))?;
        let dim = first.distribution.len();
        if let Some(q) = questions.iter().find(|q| q.distribution.len() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "question {:?} has {} answers, expected {dim}",
                q.text,
                q.distribution.len()
            )));
        }
        Ok(Self {
            label: label.into(),
            questions,
        })
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn distribution(&self, i: usize) -> &ProbabilityVector {
        &self.questions[i].distribution
    }

    pub fn last(&self) -> &SurveyQuestion {
        self.questions.last().expect("chain is never empty")
    }
}

/// Probabilities of supporting and opposing the issue.
fn support_oppose(p: &ProbabilityVector, polarity: Polarity) -> Result<(f64, f64)> {
    let (first, last) = (p[0], p[p.len() - 1]);
    match polarity {
        Polarity::Favour => Ok((first, last)),
        Polarity::Oppose => Ok((last, first)),
        Polarity::Neutral => Err(Error::IncomparablePolarity(
            "a neutral question has no support/oppose mapping".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalReport {
    pub support: [f64; 2],
    pub oppose: [f64; 2],
    pub support_difference: f64,
    pub oppose_difference: f64,
    pub tol: f64,
    /// Support-side difference, when it exceeds `tol`.
    pub violation: Option<f64>,
    /// Oppose-side difference, when it exceeds `tol`.
    pub oppose_violation: Option<f64>,
    /// The two final questions were worded with opposite polarity, so
    /// equating "not opposing" with "favouring" is an assumption.
    pub polarity_warning: bool,
}

impl ClassicalReport {
    pub fn is_violation(&self) -> bool {
        self.violation.is_some() || self.oppose_violation.is_some()
    }
}

/// Law of total probability across two samples: if the final question is
/// the same random variable, its marginal cannot depend on which leading
/// questions preceded it.
pub fn classical_consistency_check(
    final_a: (&ProbabilityVector, Polarity),
    final_b: (&ProbabilityVector, Polarity),
    tol: f64,
) -> Result<ClassicalReport> {
    let (sa, oa) = support_oppose(final_a.0, final_a.1)?;
    let (sb, ob) = support_oppose(final_b.0, final_b.1)?;
    let support_difference = (sa - sb).abs();
    let oppose_difference = (oa - ob).abs();
    Ok(ClassicalReport {
        support: [sa, sb],
        oppose: [oa, ob],
        support_difference,
        oppose_difference,
        tol,
        violation: (support_difference > tol).then_some(support_difference),
        oppose_violation: (oppose_difference > tol).then_some(oppose_difference),
        polarity_warning: final_a.1 != final_b.1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEffectEntry {
    /// 0 for the question asked first in ordering 1, 1 for the other.
    pub question: usize,
    pub asked_first: ProbabilityVector,
    pub asked_second: ProbabilityVector,
    pub difference: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEffectReport {
    pub tol: f64,
    pub entries: Vec<OrderEffectEntry>,
}

impl OrderEffectReport {
    pub fn any_flagged(&self) -> bool {
        self.entries.iter().any(|e| e.flagged)
    }
}

/// `ordering_1` asks (X, Y), `ordering_2` asks (Y, X). A question is flagged
/// when its marginal moves by more than `tol` between the two positions.
pub fn order_effect_check(
    ordering_1: (&ProbabilityVector, &ProbabilityVector),
    ordering_2: (&ProbabilityVector, &ProbabilityVector),
    tol: f64,
) -> Result<OrderEffectReport> {
    let pairs = [
        (0, ordering_1.0, ordering_2.1),
        (1, ordering_2.0, ordering_1.1),
    ];
    let entries = pairs
        .into_iter()
        .map(|(question, first, second)| {
            if first.len() != second.len() {
                return Err(Error::DimensionMismatch(format!(
                    "question {question} has {} answers in one ordering and {} in the other",
                    first.len(),
                    second.len()
                )));
            }
            let difference = first.max_abs_diff(second);
            Ok(OrderEffectEntry {
                question,
                asked_first: first.clone(),
                asked_second: second.clone(),
                difference,
                flagged: difference > tol,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OrderEffectReport { tol, entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Majorization {
    pub feasible: bool,
    pub slack: f64,
}

/// How far `target` is from being majorized by `current`: the largest excess
/// of a sorted partial sum of `target` over the same partial sum of
/// `current`, clamped at zero. By Schur-Horn, `target` is reachable as the
/// diagonal of a unitary conjugate of `diag(current)` iff the slack is zero.
pub fn majorization_slack(current: &ProbabilityVector, target: &ProbabilityVector) -> Result<f64> {
    let n = current.len();
    if target.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "current has {n} entries, target has {}",
            target.len()
        )));
    }
    let c = current.sorted_desc();
    let t = target.sorted_desc();
    let mut slack = 0.0f64;
    // The full sum (k = n) is 1 for both. For k past the midpoint compare the
    // complementary bottom sums instead, so k = n-1 is exactly the min test.
    for k in 1..n {
        let excess = if 2 * k <= n {
            t[..k].iter().sum::<f64>() - c[..k].iter().sum::<f64>()
        } else {
            c[k..].iter().sum::<f64>() - t[k..].iter().sum::<f64>()
        };
        slack = slack.max(excess);
    }
    Ok(slack)
}

pub fn majorization_check(
    current: &ProbabilityVector,
    target: &ProbabilityVector,
    tol: f64,
) -> Result<Majorization> {
    let slack = majorization_slack(current, target)?;
    Ok(Majorization {
        feasible: slack <= tol,
        slack,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    /// Zero-based question indices.
    pub from_index: usize,
    pub to_index: usize,
    pub max_increase: f64,
    pub min_decrease: f64,
    pub majorization_slack: f64,
    pub feasible_at_tol: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub label: String,
    pub tol: f64,
    /// The first question was treated as an independent tensor factor and
    /// its transition exempted.
    pub isolated_first: bool,
    pub transitions: Vec<Transition>,
    pub classical_violation: Option<f64>,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.transitions.iter().all(|t| t.feasible_at_tol)
    }

    pub fn first_infeasible(&self) -> Option<&Transition> {
        self.transitions.iter().find(|t| !t.feasible_at_tol)
    }
}

fn transition(
    chain: &SurveyChain,
    from_index: usize,
    tol: f64,
) -> Result<Transition> {
    let prev = chain.distribution(from_index);
    let next = chain.distribution(from_index + 1);
    let slack = majorization_slack(prev, next)?;
    Ok(Transition {
        from_index,
        to_index: from_index + 1,
        max_increase: (next.max() - prev.max()).max(0.0),
        min_decrease: (prev.min() - next.min()).max(0.0),
        majorization_slack: slack,
        feasible_at_tol: slack <= tol,
    })
}

/// Contraction property on every consecutive pair. A transition is feasible
/// only when neither the largest probability rises nor the smallest falls
/// and the full majorization test passes at zero tolerance.
pub fn contraction_check(chain: &SurveyChain) -> FeasibilityReport {
    let transitions = (0..chain.len().saturating_sub(1))
        .map(|i| {
            let mut t = transition(chain, i, 0.0).expect("chain dims are uniform");
            t.feasible_at_tol = t.max_increase <= 0.0 && t.min_decrease <= 0.0 && t.feasible_at_tol;
            t
        })
        .collect();
    FeasibilityReport {
        label: chain.label.clone(),
        tol: 0.0,
        isolated_first: false,
        transitions,
        classical_violation: None,
    }
}

/// Majorization feasibility of each transition. With `isolate_first` the
/// first question lives on its own tensor factor of a product state, so
/// Q1 -> Q2 carries no constraint and is skipped.
pub fn chain_feasibility(chain: &SurveyChain, isolate_first: bool, tol: f64) -> FeasibilityReport {
    let start = usize::from(isolate_first);
    let transitions = (start..chain.len().saturating_sub(1))
        .map(|i| transition(chain, i, tol).expect("chain dims are uniform"))
        .collect();
    FeasibilityReport {
        label: chain.label.clone(),
        tol,
        isolated_first: isolate_first,
        transitions,
        classical_violation: None,
    }
}
