//! Parsing of the categories and ratings files, and complete-case views of
//! the parsed rating matrix.
//!
//! A ratings file holds one subject per line and one whitespace-separated
//! token per rater. Tokens that do not exactly match a category label are
//! treated as abstentions. Blank lines are skipped.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// The ordered list of valid category labels.
///
/// The position of a label in the list is its category index, used by every
/// downstream count and probability vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategorySet {
    labels: Vec<String>,
}

impl CategorySet {
    /// Builds a category set from labels, trimming each one.
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let labels: Vec<String> = labels
            .into_iter()
            .map(|s| s.as_ref().trim().to_owned())
            .collect();
        let mut seen = HashSet::new();
        for label in &labels {
            if label.is_empty() {
                return Err(Error::Config("empty category label".into()));
            }
            if label.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!(
                    "category label {label:?} contains whitespace and can never match a rating token"
                )));
            }
            if !seen.insert(label.as_str()) {
                return Err(Error::Config(format!("duplicate category label {label:?}")));
            }
        }
        if labels.len() < 2 {
            return Err(Error::Config(format!(
                "at least 2 categories are required, found {}",
                labels.len()
            )));
        }
        Ok(Self { labels })
    }

    /// Parses a categories file: one label per non-blank line.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    /// Exact, case-sensitive lookup of a rating token.
    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == token)
    }
}

/// A single cell of the rating matrix: a category index, or `None` for an
/// abstention.
pub type Rating = Option<usize>;

/// The N subjects × n raters grid of ratings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingMatrix {
    cells: Vec<Rating>,
    raters: usize,
    categories: usize,
}

impl RatingMatrix {
    /// Builds a matrix from rows of ratings over `categories` categories.
    pub fn from_rows<R>(rows: impl IntoIterator<Item = R>, categories: usize) -> Result<Self>
    where
        R: AsRef<[Rating]>,
    {
        let mut cells = Vec::new();
        let mut raters = None;
        for (i, row) in rows.into_iter().enumerate() {
            let row = row.as_ref();
            let expected = *raters.get_or_insert(row.len());
            if row.len() != expected {
                return Err(Error::RaggedRow {
                    line: i + 1,
                    expected,
                    found: row.len(),
                });
            }
            if let Some(bad) = row.iter().flatten().find(|&&j| j >= categories) {
                return Err(Error::Config(format!(
                    "row {}: category index {bad} out of range for {categories} categories",
                    i + 1
                )));
            }
            cells.extend_from_slice(row);
        }
        let raters = raters.ok_or(Error::EmptyData)?;
        if raters < 2 {
            return Err(Error::TooFewRaters {
                line: 1,
                found: raters,
            });
        }
        if categories < 2 {
            return Err(Error::Config(format!(
                "at least 2 categories are required, found {categories}"
            )));
        }
        Ok(Self {
            cells,
            raters,
            categories,
        })
    }

    /// Parses a ratings file against a category set.
    ///
    /// The first non-blank line fixes the rater count; every later line must
    /// match it. Unknown tokens become abstentions.
    pub fn parse(text: &str, categories: &CategorySet) -> Result<Self> {
        let mut cells = Vec::new();
        let mut raters = None;
        for (lineno, line) in text.lines().enumerate() {
            let line_number = lineno + 1;
            let start = cells.len();
            cells.extend(line.split_whitespace().map(|t| categories.index_of(t)));
            let found = cells.len() - start;
            if found == 0 {
                continue;
            }
            match raters {
                None => {
                    if found < 2 {
                        return Err(Error::TooFewRaters {
                            line: line_number,
                            found,
                        });
                    }
                    raters = Some(found);
                }
                Some(expected) if expected != found => {
                    return Err(Error::RaggedRow {
                        line: line_number,
                        expected,
                        found,
                    });
                }
                Some(_) => {}
            }
        }
        let raters = raters.ok_or(Error::EmptyData)?;
        Ok(Self {
            cells,
            raters,
            categories: categories.len(),
        })
    }

    /// Number of subjects, N.
    pub fn subjects(&self) -> usize {
        self.cells.len() / self.raters
    }

    /// Number of raters, n.
    pub fn raters(&self) -> usize {
        self.raters
    }

    /// Number of categories, k.
    pub fn categories(&self) -> usize {
        self.categories
    }

    pub fn get(&self, subject: usize, rater: usize) -> Rating {
        self.row(subject)[rater]
    }

    pub fn row(&self, subject: usize) -> &[Rating] {
        &self.cells[subject * self.raters..(subject + 1) * self.raters]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[Rating]> + '_ {
        self.cells.chunks_exact(self.raters)
    }

    pub fn column(&self, rater: usize) -> impl Iterator<Item = Rating> + '_ {
        self.rows().map(move |r| r[rater])
    }

    /// True when no cell is an abstention.
    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    /// Rows in which every rater gave a valid rating, in original order.
    pub fn complete_case_rows(&self) -> Result<RatingMatrix> {
        let cells: Vec<Rating> = self
            .rows()
            .filter(|r| r.iter().all(Option::is_some))
            .flatten()
            .copied()
            .collect();
        if cells.is_empty() {
            return Err(Error::EmptyOverlap);
        }
        Ok(Self {
            cells,
            raters: self.raters,
            categories: self.categories,
        })
    }

    /// Per-category counts of one rater over the subjects they rated.
    pub fn rater_counts(&self, rater: usize) -> Vec<u64> {
        let mut counts = vec![0; self.categories];
        for j in self.column(rater).flatten() {
            counts[j] += 1;
        }
        counts
    }

    /// Returns a copy with the given rater columns in a new order.
    pub fn select_raters(&self, order: &[usize]) -> Result<RatingMatrix> {
        if let Some(&bad) = order.iter().find(|&&u| u >= self.raters) {
            return Err(Error::Config(format!("rater index {bad} out of range")));
        }
        RatingMatrix::from_rows(
            self.rows()
                .map(|r| order.iter().map(|&u| r[u]).collect::<Vec<_>>()),
            self.categories,
        )
    }
}

/// The complete-case view of one rater pair: only subjects that both raters
/// rated validly, with their marginals and agreement fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct PairProjection {
    rater_x: usize,
    rater_y: usize,
    rows: Vec<(usize, usize)>,
    agreements: u64,
    counts_x: Vec<u64>,
    counts_y: Vec<u64>,
}

impl PairProjection {
    pub fn rater_x(&self) -> usize {
        self.rater_x
    }

    pub fn rater_y(&self) -> usize {
        self.rater_y
    }

    /// The (x, y) category pairs of the overlapping subjects.
    pub fn rows(&self) -> &[(usize, usize)] {
        &self.rows
    }

    /// N₂, the number of subjects rated by both raters.
    pub fn overlap(&self) -> usize {
        self.rows.len()
    }

    /// Subjects on which the two raters chose the same category.
    pub fn agreements(&self) -> u64 {
        self.agreements
    }

    pub fn counts_x(&self) -> &[u64] {
        &self.counts_x
    }

    pub fn counts_y(&self) -> &[u64] {
        &self.counts_y
    }

    pub fn probs_x(&self) -> Vec<f64> {
        self.probs(&self.counts_x)
    }

    pub fn probs_y(&self) -> Vec<f64> {
        self.probs(&self.counts_y)
    }

    fn probs(&self, counts: &[u64]) -> Vec<f64> {
        let total = self.overlap() as f64;
        counts.iter().map(|&c| c as f64 / total).collect()
    }

    /// Observed agreement p_o.
    pub fn observed_agreement(&self) -> f64 {
        self.agreements as f64 / self.overlap() as f64
    }

    /// Σ_j n_{j,x}·n_{j,y}; divided by N₂² this is the chance agreement.
    pub(crate) fn chance_numerator(&self) -> u128 {
        self.counts_x
            .iter()
            .zip(&self.counts_y)
            .map(|(&a, &b)| u128::from(a) * u128::from(b))
            .sum()
    }

    /// Chance agreement p_e = Σ_j p_{j,x}·p_{j,y}.
    pub fn chance_agreement(&self) -> f64 {
        let n2 = self.overlap() as u128;
        self.chance_numerator() as f64 / (n2 * n2) as f64
    }

    /// Category totals pooled over both raters.
    pub fn pooled_counts(&self) -> Vec<u64> {
        self.counts_x
            .iter()
            .zip(&self.counts_y)
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// Projects the matrix onto raters `x` and `y`, keeping only subjects both
/// rated validly.
pub fn project_pair(m: &RatingMatrix, x: usize, y: usize) -> Result<PairProjection> {
    if x == y {
        return Err(Error::Config(format!("rater pair ({x},{y}) is not distinct")));
    }
    if x >= m.raters() || y >= m.raters() {
        return Err(Error::Config(format!(
            "rater pair ({x},{y}) out of range for {} raters",
            m.raters()
        )));
    }
    let k = m.categories();
    let mut rows = Vec::new();
    let mut agreements = 0;
    let mut counts_x = vec![0; k];
    let mut counts_y = vec![0; k];
    for row in m.rows() {
        if let (Some(a), Some(b)) = (row[x], row[y]) {
            rows.push((a, b));
            counts_x[a] += 1;
            counts_y[b] += 1;
            if a == b {
                agreements += 1;
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    Ok(PairProjection {
        rater_x: x,
        rater_y: y,
        rows,
        agreements,
        counts_x,
        counts_y,
    })
}
