//! Pairwise ("permuted") kappas for every rater pair, and the per-user and
//! group summaries built from them.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{project_pair, RatingMatrix};
use crate::kappa::{
    cohen_kappa, confidence_interval, fleiss_kappa, fleiss_pipeline, KappaEstimate, DEFAULT_CI_LEVEL,
};

/// Why a pair kappa could not be computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UndefinedReason {
    Diagonal,
    EmptyOverlap,
    DegenerateMarginals,
}

impl UndefinedReason {
    pub fn as_str(self) -> &'static str {
        match self {
            UndefinedReason::Diagonal => "diagonal",
            UndefinedReason::EmptyOverlap => "empty-overlap",
            UndefinedReason::DegenerateMarginals => "degenerate-marginals",
        }
    }
}

impl fmt::Display for UndefinedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A kappa estimate, or the reason it is undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KappaOutcome {
    Defined(KappaEstimate),
    Undefined(UndefinedReason),
}

impl KappaOutcome {
    pub fn estimate(&self) -> Option<&KappaEstimate> {
        match self {
            KappaOutcome::Defined(est) => Some(est),
            KappaOutcome::Undefined(_) => None,
        }
    }
}

/// The n × n table of pair kappas. Entry (x, y) mirrors (y, x).
#[derive(Debug, Clone, PartialEq)]
pub struct PairKappaTable {
    raters: usize,
    entries: Vec<KappaOutcome>,
}

impl PairKappaTable {
    pub fn raters(&self) -> usize {
        self.raters
    }

    pub fn get(&self, x: usize, y: usize) -> &KappaOutcome {
        &self.entries[x * self.raters + y]
    }

    pub fn row(&self, x: usize) -> &[KappaOutcome] {
        &self.entries[x * self.raters..(x + 1) * self.raters]
    }

    /// Every unordered pair (x < y) with its outcome.
    pub fn unordered_pairs(&self) -> impl Iterator<Item = (usize, usize, &KappaOutcome)> + '_ {
        (0..self.raters)
            .flat_map(move |x| (x + 1..self.raters).map(move |y| (x, y, self.get(x, y))))
    }

    /// The n × n × 2 view: `[x][y][0]` is the kappa and `[x][y][1]` its
    /// standard error; undefined entries are NaN.
    pub fn to_tensor(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.raters)
            .map(|x| {
                self.row(x)
                    .iter()
                    .map(|o| match o.estimate() {
                        Some(e) => [e.kappa(), e.se()],
                        None => [f64::NAN, f64::NAN],
                    })
                    .collect()
            })
            .collect()
    }

    /// Mean of the defined unordered-pair kappas.
    pub fn mean_kappa(&self) -> Option<f64> {
        let kappas: Vec<f64> = self
            .unordered_pairs()
            .filter_map(|(_, _, o)| o.estimate().map(KappaEstimate::kappa))
            .collect();
        (!kappas.is_empty()).then(|| kappas.iter().sum::<f64>() / kappas.len() as f64)
    }
}

fn pair_outcome(m: &RatingMatrix, x: usize, y: usize) -> KappaOutcome {
    let result = project_pair(m, x, y).and_then(|pp| cohen_kappa(&pp));
    match result {
        Ok(est) => KappaOutcome::Defined(est),
        Err(Error::EmptyOverlap) => KappaOutcome::Undefined(UndefinedReason::EmptyOverlap),
        Err(Error::DegenerateMarginals) => {
            KappaOutcome::Undefined(UndefinedReason::DegenerateMarginals)
        }
        Err(e) => unreachable!("valid pair ({x},{y}) failed: {e}"),
    }
}

/// Computes the Cohen kappa of every unordered rater pair once and mirrors
/// it into both halves of the table.
pub fn build_pair_table(m: &RatingMatrix) -> PairKappaTable {
    let n = m.raters();
    let mut entries = vec![KappaOutcome::Undefined(UndefinedReason::Diagonal); n * n];
    for x in 0..n {
        for y in x + 1..n {
            let outcome = pair_outcome(m, x, y);
            entries[x * n + y] = outcome;
            entries[y * n + x] = outcome;
        }
    }
    PairKappaTable { raters: n, entries }
}

/// A user's mean pair kappa. The standard error treats the pair estimates
/// as independent: √(Σ SE²) / count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AverageKappa {
    pub kappa: f64,
    pub se: f64,
    pub ci_level: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserSummary {
    pub user: usize,
    /// Category probabilities over the subjects this user rated; `None` if
    /// the user rated nothing.
    pub category_probs: Option<Vec<f64>>,
    /// Outcome against every other user, in partner order.
    pub pair_kappas: Vec<(usize, KappaOutcome)>,
    pub average: Option<AverageKappa>,
}

pub fn summarize_user(t: &PairKappaTable, m: &RatingMatrix, x: usize) -> Result<UserSummary> {
    if x >= m.raters() || x >= t.raters() {
        return Err(Error::Config(format!("user {x} out of range")));
    }
    let counts = m.rater_counts(x);
    let rated: u64 = counts.iter().sum();
    let category_probs =
        (rated > 0).then(|| counts.iter().map(|&c| c as f64 / rated as f64).collect());

    let pair_kappas: Vec<(usize, KappaOutcome)> = t
        .row(x)
        .iter()
        .enumerate()
        .filter(|&(y, _)| y != x)
        .map(|(y, o)| (y, *o))
        .collect();

    let defined: Vec<&KappaEstimate> = pair_kappas.iter().filter_map(|(_, o)| o.estimate()).collect();
    let average = if defined.is_empty() {
        None
    } else {
        let count = defined.len() as f64;
        let kappa = defined.iter().map(|e| e.kappa()).sum::<f64>() / count;
        let se = defined.iter().map(|e| e.variance()).sum::<f64>().sqrt() / count;
        let (ci_low, ci_high) = confidence_interval(kappa, se * se, DEFAULT_CI_LEVEL)?;
        Some(AverageKappa {
            kappa,
            se,
            ci_level: DEFAULT_CI_LEVEL,
            ci_low,
            ci_high,
            pairs: defined.len(),
        })
    };

    Ok(UserSummary {
        user: x,
        category_probs,
        pair_kappas,
        average,
    })
}

pub fn summarize_users(t: &PairKappaTable, m: &RatingMatrix) -> Vec<UserSummary> {
    (0..m.raters())
        .map(|x| summarize_user(t, m, x).expect("user index in range"))
        .collect()
}

/// Group-level results: Fleiss kappa over the complete-case subjects, plus
/// the mean pair kappa for side-by-side comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub category_probs: Vec<f64>,
    pub mean_agreement: f64,
    pub fleiss: KappaOutcome,
    pub rows_used: usize,
    pub dropped_rows: usize,
    pub mean_permuted_kappa: Option<f64>,
}

pub fn summarize_group(m: &RatingMatrix) -> Result<GroupSummary> {
    let table = build_pair_table(m);
    summarize_group_with_table(m, &table)
}

/// As [`summarize_group`], reusing an already computed pair table.
pub fn summarize_group_with_table(m: &RatingMatrix, t: &PairKappaTable) -> Result<GroupSummary> {
    let complete = m.complete_case_rows()?;
    let ga = fleiss_pipeline(&complete)?;
    let fleiss = match fleiss_kappa(&ga) {
        Ok(est) => KappaOutcome::Defined(est),
        Err(Error::DegenerateMarginals) => {
            KappaOutcome::Undefined(UndefinedReason::DegenerateMarginals)
        }
        Err(e) => return Err(e),
    };
    Ok(GroupSummary {
        category_probs: ga.category_probs().to_vec(),
        mean_agreement: ga.observed_agreement(),
        fleiss,
        rows_used: complete.subjects(),
        dropped_rows: m.subjects() - complete.subjects(),
        mean_permuted_kappa: t.mean_kappa(),
    })
}
