//! Inter-rater reliability for n raters rating N subjects into k unordered
//! categories.
//!
//! The crate computes Cohen kappa for every pair of raters, Fleiss kappa for
//! the whole group, large-sample variances and normal confidence intervals
//! for both, and a per-rater summary built from the pair ("permuted")
//! kappas. Results can be rendered as a text report, a JSON document, or an
//! SVG chart.
//!
//! ```
//! use interrater::{analyze, CategorySet, RatingMatrix};
//!
//! let cats = CategorySet::parse("yes\nmaybe\nno")?;
//! let data = "yes maybe no no\nyes yes yes yes\nno maybe no no\nno yes no yes\nyes no no no\n";
//! let ratings = RatingMatrix::parse(data, &cats)?;
//! let report = analyze(&ratings, &cats, None, None)?;
//!
//! let fleiss = report.group.fleiss.estimate().unwrap();
//! assert!((fleiss.kappa() - 4.0 / 29.0).abs() < 1e-12);
//! # Ok::<(), interrater::Error>(())
//! ```

pub mod chart;
pub mod error;
pub mod ingest;
pub mod kappa;
pub mod permutation;
pub mod report;
pub mod simulation;

pub use chart::{build_plot_spec, emit_svg, svg_output_path, PlotSpec};
pub use error::{Error, Result};
pub use ingest::{project_pair, CategorySet, PairProjection, Rating, RatingMatrix};
pub use kappa::{
    cohen_kappa, cohen_variance_fleiss, cohen_variance_simplistic, confidence_interval,
    counts_matrix, fleiss_kappa, fleiss_pipeline, fleiss_variance, fleiss_variance_product_form,
    subject_agreement, GroupAgreement, KappaEstimate,
};
pub use permutation::{
    build_pair_table, summarize_group, summarize_user, GroupSummary, KappaOutcome,
    PairKappaTable, UndefinedReason, UserSummary,
};
pub use report::{analyze, render_machine, render_text, AnalysisReport};
pub use simulation::{generate, RaterModel};
