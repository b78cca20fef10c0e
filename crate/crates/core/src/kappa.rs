//! Cohen and Fleiss kappa with their large-sample variances.
//!
//! Counts stay in exact integers until the final division wherever the
//! statistic is a ratio of counts, so that small worked examples reproduce
//! exactly and replicated data gives bitwise-identical kappas.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::ingest::{PairProjection, RatingMatrix};

pub const DEFAULT_CI_LEVEL: f64 = 0.95;

/// Chance agreement within this distance of 1 leaves kappa undefined.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

/// A kappa statistic with its variance and a symmetric normal-approximation
/// confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaEstimate {
    kappa: f64,
    variance: f64,
    se: f64,
    ci_level: f64,
    ci_low: f64,
    ci_high: f64,
    sample_size: usize,
}

impl KappaEstimate {
    pub fn new(kappa: f64, variance: f64, ci_level: f64, sample_size: usize) -> Result<Self> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::Config(format!("invalid variance {variance}")));
        }
        let (ci_low, ci_high) = confidence_interval(kappa, variance, ci_level)?;
        Ok(Self {
            kappa,
            variance,
            se: variance.sqrt(),
            ci_level,
            ci_low,
            ci_high,
            sample_size,
        })
    }

    /// The same estimate with its interval rebuilt at another level.
    pub fn with_level(&self, ci_level: f64) -> Result<Self> {
        Self::new(self.kappa, self.variance, ci_level, self.sample_size)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn se(&self) -> f64 {
        self.se
    }

    pub fn ci_level(&self) -> f64 {
        self.ci_level
    }

    pub fn ci_low(&self) -> f64 {
        self.ci_low
    }

    pub fn ci_high(&self) -> f64 {
        self.ci_high
    }

    /// Subjects used: N for the group statistic, N₂ for a pair.
    pub fn sample_size(&self) -> usize {
        self.sample_size
    }
}

/// Two-sided standard normal quantile for a confidence level in (0, 1).
pub fn z_score(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "confidence level {level} must lie strictly between 0 and 1"
        )));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(0.5 + level / 2.0))
}

/// `kappa ± z(level)·√variance`.
pub fn confidence_interval(kappa: f64, variance: f64, level: f64) -> Result<(f64, f64)> {
    let half = z_score(level)? * variance.sqrt();
    Ok((kappa - half, kappa + half))
}

/// (observed − chance) / (1 − chance).
pub fn kappa_statistic(observed: f64, chance: f64) -> Result<f64> {
    if chance >= 1.0 - DEGENERACY_TOLERANCE {
        return Err(Error::DegenerateMarginals);
    }
    Ok((observed - chance) / (1.0 - chance))
}

/// Cohen kappa for a rater pair, with the Fleiss–Nee–Landis two-rater
/// variance.
pub fn cohen_kappa(pp: &PairProjection) -> Result<KappaEstimate> {
    if pp.chance_agreement() >= 1.0 - DEGENERACY_TOLERANCE {
        return Err(Error::DegenerateMarginals);
    }
    let n2 = pp.overlap() as i128;
    let chance = pp.chance_numerator() as i128;
    let agree = i128::from(pp.agreements());
    let kappa = (agree * n2 - chance) as f64 / (n2 * n2 - chance) as f64;
    let variance = cohen_variance_fleiss(pp)?;
    KappaEstimate::new(kappa, variance, DEFAULT_CI_LEVEL, pp.overlap())
}

/// Pair variance: the large-sample Fleiss variance evaluated on the pooled
/// marginals of the two raters with n = 2 and N = N₂.
pub fn cohen_variance_fleiss(pp: &PairProjection) -> Result<f64> {
    fleiss_variance_from_totals(&pp.pooled_counts(), pp.overlap(), 2)
}

/// The commonly quoted p_o(1 − p_o) / (N₂(1 − p_e)²). Kept for comparison;
/// it overestimates the variance and the report never uses it.
pub fn cohen_variance_simplistic(pp: &PairProjection) -> Result<f64> {
    simplistic_variance(
        pp.observed_agreement(),
        pp.chance_agreement(),
        pp.overlap(),
    )
}

pub fn simplistic_variance(observed: f64, chance: f64, subjects: usize) -> Result<f64> {
    if chance >= 1.0 - DEGENERACY_TOLERANCE {
        return Err(Error::DegenerateMarginals);
    }
    if subjects == 0 {
        return Err(Error::EmptyOverlap);
    }
    let gap = 1.0 - chance;
    Ok(observed * (1.0 - observed) / (subjects as f64 * gap * gap))
}

/// Per-subject, per-category rating counts n_ij of a matrix without
/// abstentions.
pub fn counts_matrix(m: &RatingMatrix) -> Result<Vec<Vec<u64>>> {
    let k = m.categories();
    m.rows()
        .enumerate()
        .map(|(i, row)| {
            let mut counts = vec![0u64; k];
            for cell in row {
                let j = cell.ok_or_else(|| {
                    Error::Config(format!("subject {} has an abstention", i + 1))
                })?;
                counts[j] += 1;
            }
            Ok(counts)
        })
        .collect()
}

/// Agreement among `raters` raters on one subject:
/// Σ_j n_ij(n_ij − 1) / (n(n − 1)).
pub fn subject_agreement(counts: &[u64], raters: usize) -> f64 {
    let pairs: u64 = counts.iter().map(|&c| c * c.saturating_sub(1)).sum();
    let raters = raters as u64;
    pairs as f64 / (raters * (raters - 1)) as f64
}

/// The Fleiss quantities for a group of raters with a fixed number of
/// ratings per subject.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAgreement {
    counts: Vec<Vec<u64>>,
    raters: usize,
    totals: Vec<u64>,
    pair_agreements: u128,
    per_subject: Vec<f64>,
    observed: f64,
    probs: Vec<f64>,
    chance: f64,
}

impl GroupAgreement {
    /// Builds the Fleiss quantities from an n_ij counts matrix whose rows all
    /// sum to the same rater count n ≥ 2.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let first = counts.first().ok_or(Error::EmptyOverlap)?;
        let k = first.len();
        if k < 2 {
            return Err(Error::Config(format!(
                "at least 2 categories are required, found {k}"
            )));
        }
        let raters: u64 = first.iter().sum();
        if raters < 2 {
            return Err(Error::Config(format!(
                "at least 2 ratings per subject are required, found {raters}"
            )));
        }
        let mut totals = vec![0u64; k];
        let mut pair_agreements = 0u128;
        for (i, row) in counts.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Config(format!(
                    "counts row {} has {} categories, expected {k}",
                    i + 1,
                    row.len()
                )));
            }
            if row.iter().sum::<u64>() != raters {
                return Err(Error::Config(format!(
                    "counts row {} does not sum to {raters}",
                    i + 1
                )));
            }
            for (t, &c) in totals.iter_mut().zip(row) {
                *t += c;
                pair_agreements += u128::from(c) * u128::from(c.saturating_sub(1));
            }
        }
        let raters = raters as usize;
        let subjects = counts.len();
        let total_ratings = (subjects * raters) as f64;
        let per_subject = counts
            .iter()
            .map(|row| subject_agreement(row, raters))
            .collect();
        let observed =
            pair_agreements as f64 / (subjects as u128 * (raters * (raters - 1)) as u128) as f64;
        let probs: Vec<f64> = totals.iter().map(|&c| c as f64 / total_ratings).collect();
        let chance = sum_of_squares(&totals) as f64 / (total_ratings * total_ratings);
        Ok(Self {
            counts,
            raters,
            totals,
            pair_agreements,
            per_subject,
            observed,
            probs,
            chance,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    /// N
    pub fn subjects(&self) -> usize {
        self.counts.len()
    }

    /// n
    pub fn raters(&self) -> usize {
        self.raters
    }

    /// k
    pub fn categories(&self) -> usize {
        self.totals.len()
    }

    /// Ratings per category summed over subjects.
    pub fn category_totals(&self) -> &[u64] {
        &self.totals
    }

    /// P_i for every subject.
    pub fn subject_agreements(&self) -> &[f64] {
        &self.per_subject
    }

    /// P_o, the mean of P_i.
    pub fn observed_agreement(&self) -> f64 {
        self.observed
    }

    /// p_ij = n_ij / n.
    pub fn category_fractions(&self) -> Vec<Vec<f64>> {
        let n = self.raters as f64;
        self.counts
            .iter()
            .map(|row| row.iter().map(|&c| c as f64 / n).collect())
            .collect()
    }

    /// p_j, the mean of p_ij over subjects.
    pub fn category_probs(&self) -> &[f64] {
        &self.probs
    }

    /// q_j = 1 − p_j.
    pub fn complements(&self) -> Vec<f64> {
        self.probs.iter().map(|p| 1.0 - p).collect()
    }

    /// P_e = Σ_j p_j².
    pub fn chance_agreement(&self) -> f64 {
        self.chance
    }
}

fn sum_of_squares(totals: &[u64]) -> u128 {
    totals.iter().map(|&c| u128::from(c) * u128::from(c)).sum()
}

fn sum_of_cubes(totals: &[u64]) -> u128 {
    totals
        .iter()
        .map(|&c| u128::from(c) * u128::from(c) * u128::from(c))
        .sum()
}

/// Runs the Fleiss pipeline on a matrix with no abstentions.
pub fn fleiss_pipeline(m: &RatingMatrix) -> Result<GroupAgreement> {
    GroupAgreement::from_counts(counts_matrix(m)?)
}

/// Fleiss kappa (P_o − P_e)/(1 − P_e) with its large-sample variance.
pub fn fleiss_kappa(ga: &GroupAgreement) -> Result<KappaEstimate> {
    if ga.chance_agreement() >= 1.0 - DEGENERACY_TOLERANCE {
        return Err(Error::DegenerateMarginals);
    }
    // With D = N·n(n−1) and T = N·n: P_o = A/D and P_e = S2/T², so
    // kappa = (A·T² − S2·D) / (D·(T² − S2)).
    let subjects = ga.subjects() as i128;
    let raters = ga.raters() as i128;
    let d = subjects * raters * (raters - 1);
    let t = subjects * raters;
    let s2 = sum_of_squares(&ga.totals) as i128;
    let a = ga.pair_agreements as i128;
    let kappa = match (a.checked_mul(t * t), s2.checked_mul(d), d.checked_mul(t * t - s2)) {
        (Some(at), Some(sd), Some(den)) => (at - sd) as f64 / den as f64,
        _ => kappa_statistic(ga.observed_agreement(), ga.chance_agreement())?,
    };
    let variance = fleiss_variance(ga)?;
    KappaEstimate::new(kappa, variance, DEFAULT_CI_LEVEL, ga.subjects())
}

/// Large-sample variance of Fleiss kappa in its simplified form
///
/// Var = 2·[(1 − P_e)² + 3P_e − 2Σ_j p_j³ − 1] / [N·n(n − 1)·(1 − P_e)²].
pub fn fleiss_variance(ga: &GroupAgreement) -> Result<f64> {
    fleiss_variance_from_totals(&ga.totals, ga.subjects(), ga.raters())
}

/// The same variance in its product form
///
/// Var = 2·[(Σ_j p_j q_j)² − Σ_j p_j q_j (q_j − p_j)] / [N·n(n − 1)·(Σ_j p_j q_j)²].
pub fn fleiss_variance_product_form(ga: &GroupAgreement) -> Result<f64> {
    fleiss_variance_from_probs(ga.category_probs(), ga.subjects(), ga.raters())
}

/// Simplified-form variance from category totals over `subjects` subjects
/// each rated by `raters` raters.
pub fn fleiss_variance_from_totals(totals: &[u64], subjects: usize, raters: usize) -> Result<f64> {
    if subjects == 0 {
        return Err(Error::EmptyOverlap);
    }
    if raters < 2 {
        return Err(Error::Config(format!(
            "at least 2 raters are required, found {raters}"
        )));
    }
    let t = (subjects * raters) as f64;
    let s2 = sum_of_squares(totals);
    let chance = s2 as f64 / (t * t);
    if chance >= 1.0 - DEGENERACY_TOLERANCE {
        return Err(Error::DegenerateMarginals);
    }
    let pairs_per_subject = (raters * (raters - 1)) as f64;
    if let Some(v) = exact_simplified_variance(totals, subjects, raters) {
        return Ok(v);
    }
    let cubes: f64 = totals.iter().map(|&c| (c as f64 / t).powi(3)).sum();
    let gap = 1.0 - chance;
    let bracket = gap * gap + 3.0 * chance - 2.0 * cubes - 1.0;
    Ok((2.0 * bracket / (subjects as f64 * pairs_per_subject * gap * gap)).max(0.0))
}

/// The simplified form multiplied through by T⁴ (T = N·n) so that it is a
/// ratio of integers:
///
/// bracket·T⁴ = (T² − S2)² + 3·S2·T² − 2·S3·T − T⁴ = S2² + S2·T² − 2·S3·T,
/// (1 − P_e)²·T⁴ = (T² − S2)²,
///
/// with S2 = Σ c_j², S3 = Σ c_j³. Returns `None` on i128 overflow.
fn exact_simplified_variance(totals: &[u64], subjects: usize, raters: usize) -> Option<f64> {
    let t = i128::try_from(subjects.checked_mul(raters)?).ok()?;
    let s2 = i128::try_from(sum_of_squares(totals)).ok()?;
    let s3 = i128::try_from(sum_of_cubes(totals)).ok()?;
    let t2 = t.checked_mul(t)?;
    let bracket = s2
        .checked_mul(s2)?
        .checked_add(s2.checked_mul(t2)?)?
        .checked_sub(s3.checked_mul(t)?.checked_mul(2)?)?;
    let gap = t2 - s2;
    let gap_sq = gap.checked_mul(gap)?;
    let pairs = i128::try_from(subjects.checked_mul(raters)?.checked_mul(raters - 1)?).ok()?;
    let numerator = bracket.max(0).checked_mul(2)?;
    let denominator = pairs.checked_mul(gap_sq)?;
    Some(numerator as f64 / denominator as f64)
}

/// Product-form variance from category probabilities.
pub fn fleiss_variance_from_probs(probs: &[f64], subjects: usize, raters: usize) -> Result<f64> {
    if subjects == 0 {
        return Err(Error::EmptyOverlap);
    }
    if raters < 2 {
        return Err(Error::Config(format!(
            "at least 2 raters are required, found {raters}"
        )));
    }
    // q_j as the sum of the other probabilities rather than 1 − p_j: equal
    // when Σp = 1, but without cancellation when p_j is close to 1.
    let total: f64 = probs.iter().sum();
    let complements: Vec<f64> = probs
        .iter()
        .enumerate()
        .map(|(j, _)| {
            probs
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, p)| p)
                .sum::<f64>()
        })
        .collect();
    debug_assert!((total - 1.0).abs() < 1e-9);
    let spread: f64 = probs.iter().zip(&complements).map(|(p, q)| p * q).sum();
    if spread <= DEGENERACY_TOLERANCE {
        return Err(Error::DegenerateMarginals);
    }
    let skew: f64 = probs
        .iter()
        .zip(&complements)
        .map(|(p, q)| p * q * (q - p))
        .sum();
    let pairs_per_subject = (raters * (raters - 1)) as f64;
    Ok((2.0 * (spread * spread - skew) / (subjects as f64 * pairs_per_subject * spread * spread))
        .max(0.0))
}
