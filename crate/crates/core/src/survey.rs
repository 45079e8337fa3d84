//! JSON survey files and the bundled datasets.
//!
//! ```json
//! {"sample_label": "Sample A",
//!  "questions": [{"text": "...", "yes": 52, "unsure": 9, "no": 39, "polarity": "neutral"}]}
//! ```
//!
//! Percentages must lie in `[0, 100]` and each row must total between 99
//! and 101; rows are rescaled to sum to exactly one.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{Polarity, SurveyChain, SurveyQuestion};
use crate::state::ProbabilityVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyRow {
    pub text: String,
    pub yes: f64,
    pub unsure: f64,
    pub no: f64,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyFile {
    pub sample_label: String,
    pub questions: Vec<SurveyRow>,
}

impl SurveyFile {
    pub fn into_chain(self) -> Result<SurveyChain> {
        let questions = self
            .questions
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                let pct = [row.yes, row.unsure, row.no];
                if pct.iter().any(|p| *p < 0.0) {
                    return Err(Error::Ingest(format!(
                        "row {} ({:?}) has a negative percentage",
                        i + 1,
                        row.text
                    )));
                }
                let distribution = ProbabilityVector::from_percentages(&pct).map_err(|e| {
                    Error::Ingest(format!("row {} ({:?}): {e}", i + 1, row.text))
                })?;
                Ok(SurveyQuestion {
                    text: row.text,
                    distribution,
                    polarity: row.polarity,
                    percentages: Some(pct.to_vec()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SurveyChain::new(self.sample_label, questions)
    }

    /// Percentages a chain was read from, or `100 * p` for questions built
    /// directly from probabilities.
    pub fn from_chain(chain: &SurveyChain) -> Result<Self> {
        let questions = chain
            .questions
            .iter()
            .map(|q| {
                let d = q.distribution.as_slice();
                if d.len() != 3 {
                    return Err(Error::DimensionMismatch(format!(
                        "question {:?} does not have yes/unsure/no answers",
                        q.text
                    )));
                }
                let pct = match &q.percentages {
                    Some(p) if p.len() == 3 => [p[0], p[1], p[2]],
                    _ => [d[0] * 100.0, d[1] * 100.0, d[2] * 100.0],
                };
                Ok(SurveyRow {
                    text: q.text.clone(),
                    yes: pct[0],
                    unsure: pct[1],
                    no: pct[2],
                    polarity: q.polarity,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            sample_label: chain.label.clone(),
            questions,
        })
    }
}

pub fn parse_survey(json: &str) -> Result<SurveyChain> {
    let file: SurveyFile = serde_json::from_str(json).map_err(|e| Error::Ingest(e.to_string()))?;
    file.into_chain()
}

pub fn ingest(path: impl AsRef<Path>) -> Result<SurveyChain> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Ingest(format!("{}: {e}", path.display())))?;
    parse_survey(&text)
}

pub fn to_json(chain: &SurveyChain) -> Result<String> {
    let file = SurveyFile::from_chain(chain)?;
    Ok(serde_json::to_string_pretty(&file).expect("survey file serializes"))
}

/// Datasets shipped with the crate.
pub mod fixtures {
    use super::*;

    pub const TABLE1: &str = include_str!("../fixtures/table1.json");
    pub const TABLE2: &str = include_str!("../fixtures/table2.json");
    pub const MOORE_CLINTON_FIRST: &str = include_str!("../fixtures/moore_clinton_first.json");
    pub const MOORE_GORE_FIRST: &str = include_str!("../fixtures/moore_gore_first.json");

    /// Sample A: leading questions towards national service.
    pub fn table1() -> SurveyChain {
        parse_survey(TABLE1).expect("bundled fixture")
    }

    /// Sample B: leading questions away from national service.
    pub fn table2() -> SurveyChain {
        parse_survey(TABLE2).expect("bundled fixture")
    }

    pub fn moore_clinton_first() -> SurveyChain {
        parse_survey(MOORE_CLINTON_FIRST).expect("bundled fixture")
    }

    pub fn moore_gore_first() -> SurveyChain {
        parse_survey(MOORE_GORE_FIRST).expect("bundled fixture")
    }

    /// Looks up a bundled dataset by file stem, e.g. `table1`.
    pub fn by_name(name: &str) -> Option<&'static str> {
        match name {
            "table1" => Some(TABLE1),
            "table2" => Some(TABLE2),
            "moore_clinton_first" => Some(MOORE_CLINTON_FIRST),
            "moore_gore_first" => Some(MOORE_GORE_FIRST),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_tables() {
        let t1 = fixtures::table1();
        assert_eq!(t1.len(), 5);
        assert_eq!(t1.distribution(1).as_slice(), &[0.81, 0.04, 0.15]);
        let t2 = fixtures::table2();
        assert_eq!(t2.distribution(3).as_slice(), &[0.79, 0.09, 0.12]);
        assert_eq!(t2.last().polarity, Polarity::Oppose);
    }

    #[test]
    fn rejects_bad_row_sum() {
        let json = r#"{"sample_label": "x", "questions": [
            {"text": "ok", "yes": 50, "unsure": 10, "no": 40, "polarity": "neutral"},
            {"text": "short", "yes": 50, "unsure": 7, "no": 40, "polarity": "neutral"}]}"#;
        let err = parse_survey(json).unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
        assert!(err.contains("short"), "{err}");
    }

    #[test]
    fn rejects_negative_and_malformed() {
        let neg = r#"{"sample_label": "x", "questions": [
            {"text": "n", "yes": -1, "unsure": 51, "no": 50, "polarity": "neutral"}]}"#;
        assert!(parse_survey(neg).unwrap_err().to_string().contains("negative"));
        assert!(parse_survey("{").is_err());
        let bad_pol = r#"{"sample_label": "x", "questions": [
            {"text": "n", "yes": 1, "unsure": 49, "no": 50, "polarity": "maybe"}]}"#;
        assert!(parse_survey(bad_pol).is_err());
        assert!(parse_survey(r#"{"sample_label": "x", "questions": []}"#).is_err());
    }

    #[test]
    fn rounded_rows_are_renormalized() {
        let json = r#"{"sample_label": "x", "questions": [
            {"text": "r", "yes": 50, "unsure": 10, "no": 41, "polarity": "favour"}]}"#;
        let c = parse_survey(json).unwrap();
        let sum: f64 = c.distribution(0).as_slice().iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }
}
