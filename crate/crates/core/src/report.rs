//! The analysis report: a text rendering for the terminal and a JSON export
//! with the same content.
//!
//! JSON schema (`"format": "inter-rater-report/1"`):
//!
//! ```text
//! {
//!   "format": "inter-rater-report/1",
//!   "provenance": { "data_file", "categories_file", "categories": [..],
//!                   "subjects", "raters", "dropped_rows" },
//!   "group": { "category_probs": [{"category", "prob"}..], "mean_agreement",
//!              "fleiss": <kappa>, "rows_used", "dropped_rows",
//!              "mean_permuted_kappa": number | null },
//!   "users": [ { "user", "label", "category_probs": [..] | null,
//!                "pairs": [ <kappa> + {"partner"} .. ],
//!                "average": {"kappa", "se", "ci_level", "ci_low", "ci_high", "pairs"} | null } ],
//!   "table": [[ <kappa> .. ] ..]
//! }
//! ```
//!
//! `<kappa>` is either `{"kappa", "variance", "se", "ci_level", "ci_low",
//! "ci_high", "sample_size"}` or `{"kappa": null, "reason": "diagonal" |
//! "empty-overlap" | "degenerate-marginals"}`. Object keys are emitted in
//! sorted order.

use std::fmt;

use serde_json::{json, Value};

use crate::error::Result;
use crate::ingest::{CategorySet, RatingMatrix};
use crate::kappa::KappaEstimate;
use crate::permutation::{
    build_pair_table, summarize_group_with_table, summarize_users, GroupSummary, KappaOutcome,
    PairKappaTable, UndefinedReason, UserSummary,
};

pub const REPORT_FORMAT: &str = "inter-rater-report/1";

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub data_file: Option<String>,
    pub categories_file: Option<String>,
    pub categories: Vec<String>,
    pub subjects: usize,
    pub raters: usize,
    pub dropped_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub provenance: Provenance,
    pub group: GroupSummary,
    pub users: Vec<UserSummary>,
    pub table: PairKappaTable,
}

/// Runs the full analysis of a rating matrix.
pub fn analyze(
    m: &RatingMatrix,
    categories: &CategorySet,
    data_file: Option<&str>,
    categories_file: Option<&str>,
) -> Result<AnalysisReport> {
    let table = build_pair_table(m);
    let group = summarize_group_with_table(m, &table)?;
    let users = summarize_users(&table, m);
    Ok(AnalysisReport {
        provenance: Provenance {
            data_file: data_file.map(str::to_owned),
            categories_file: categories_file.map(str::to_owned),
            categories: categories.labels().to_vec(),
            subjects: m.subjects(),
            raters: m.raters(),
            dropped_rows: group.dropped_rows,
        },
        group,
        users,
        table,
    })
}

pub fn user_label(user: usize) -> String {
    format!("#{user}")
}

fn num(x: f64) -> String {
    let s = format!("{x:.4}");
    if s == "-0.0000" {
        "0.0000".to_owned()
    } else {
        s
    }
}

fn percent(level: f64) -> String {
    let p = level * 100.0;
    if (p - p.round()).abs() < 1e-9 {
        format!("{}%", p.round())
    } else {
        format!("{p}%")
    }
}

fn undefined_text(reason: UndefinedReason) -> &'static str {
    match reason {
        UndefinedReason::DegenerateMarginals => "undefined (single-category data)",
        UndefinedReason::EmptyOverlap => "undefined (no subjects rated by both)",
        UndefinedReason::Diagonal => "undefined (same rater)",
    }
}

fn estimate_text(e: &KappaEstimate) -> String {
    format!(
        "{} ({} CI {} to {}, SE {}, N = {})",
        num(e.kappa()),
        percent(e.ci_level()),
        num(e.ci_low()),
        num(e.ci_high()),
        num(e.se()),
        e.sample_size()
    )
}

fn outcome_text(o: &KappaOutcome) -> String {
    match o {
        KappaOutcome::Defined(e) => estimate_text(e),
        KappaOutcome::Undefined(r) => undefined_text(*r).to_owned(),
    }
}

/// Renders the screen report: the group block, then one block per user.
pub fn render_text(r: &AnalysisReport) -> String {
    let mut out = String::new();
    write_text(r, &mut out).expect("writing to a String cannot fail");
    out
}

fn write_text(r: &AnalysisReport, w: &mut impl fmt::Write) -> fmt::Result {
    let p = &r.provenance;
    let g = &r.group;

    writeln!(w, "Inter-rater reliability")?;
    if let Some(f) = &p.data_file {
        writeln!(w, "Data file: {f}")?;
    }
    if let Some(f) = &p.categories_file {
        writeln!(w, "Categories file: {f}")?;
    }
    writeln!(
        w,
        "Subjects: {}  Raters: {}  Categories: {}",
        p.subjects,
        p.raters,
        p.categories.len()
    )?;

    writeln!(w)?;
    writeln!(w, "== Group ==")?;
    writeln!(
        w,
        "Subjects rated by all users: {} ({} incomplete rows dropped)",
        g.rows_used, g.dropped_rows
    )?;
    writeln!(w, "Probability of each category:")?;
    for (label, prob) in p.categories.iter().zip(&g.category_probs) {
        writeln!(w, "  {label}: {}", num(*prob))?;
    }
    writeln!(w, "Average agreement between users: {}", num(g.mean_agreement))?;
    writeln!(w, "Fleiss kappa: {}", outcome_text(&g.fleiss))?;
    writeln!(
        w,
        "Mean of pair kappas: {}",
        g.mean_permuted_kappa.map_or_else(|| "undefined".to_owned(), num)
    )?;

    for u in &r.users {
        writeln!(w)?;
        writeln!(w, "== User {} ==", user_label(u.user))?;
        match &u.category_probs {
            Some(probs) => {
                writeln!(w, "Probability of each category:")?;
                for (label, prob) in p.categories.iter().zip(probs) {
                    writeln!(w, "  {label}: {}", num(*prob))?;
                }
            }
            None => {
                writeln!(w, "Probability of each category: no valid ratings")?;
            }
        }
        writeln!(w, "Pair kappas:")?;
        for (partner, outcome) in &u.pair_kappas {
            writeln!(w, "  ({},{}): {}", u.user, partner, outcome_text(outcome))?;
        }
        match &u.average {
            Some(a) => {
                writeln!(
                    w,
                    "Average kappa: {} ({} CI {} to {}, SE {}, {} pairs)",
                    num(a.kappa),
                    percent(a.ci_level),
                    num(a.ci_low),
                    num(a.ci_high),
                    num(a.se),
                    a.pairs
                )?;
            }
            None => {
                writeln!(w, "Average kappa: undefined (no defined pairs)")?;
            }
        }
    }
    Ok(())
}

fn outcome_json(o: &KappaOutcome) -> Value {
    match o {
        KappaOutcome::Defined(e) => serde_json::to_value(e).expect("estimate serializes"),
        KappaOutcome::Undefined(r) => json!({ "kappa": null, "reason": r.as_str() }),
    }
}

fn probs_json(labels: &[String], probs: &[f64]) -> Value {
    labels
        .iter()
        .zip(probs)
        .map(|(l, p)| json!({ "category": l, "prob": p }))
        .collect()
}

/// Builds the JSON document for a report.
pub fn to_json(r: &AnalysisReport) -> Value {
    let p = &r.provenance;
    let g = &r.group;
    let users: Vec<Value> = r
        .users
        .iter()
        .map(|u| {
            let pairs: Vec<Value> = u
                .pair_kappas
                .iter()
                .map(|(partner, o)| {
                    let mut v = outcome_json(o);
                    v["partner"] = json!(partner);
                    v
                })
                .collect();
            json!({
                "user": u.user,
                "label": user_label(u.user),
                "category_probs": u.category_probs.as_ref().map(|pr| probs_json(&p.categories, pr)),
                "pairs": pairs,
                "average": u.average,
            })
        })
        .collect();
    let table: Vec<Value> = (0..r.table.raters())
        .map(|x| r.table.row(x).iter().map(outcome_json).collect())
        .collect();
    json!({
        "format": REPORT_FORMAT,
        "provenance": {
            "data_file": p.data_file,
            "categories_file": p.categories_file,
            "categories": p.categories,
            "subjects": p.subjects,
            "raters": p.raters,
            "dropped_rows": p.dropped_rows,
        },
        "group": {
            "category_probs": probs_json(&p.categories, &g.category_probs),
            "mean_agreement": g.mean_agreement,
            "fleiss": outcome_json(&g.fleiss),
            "rows_used": g.rows_used,
            "dropped_rows": g.dropped_rows,
            "mean_permuted_kappa": g.mean_permuted_kappa,
        },
        "users": users,
        "table": table,
    })
}

/// Renders the JSON export as pretty-printed text with a trailing newline.
pub fn render_machine(r: &AnalysisReport) -> String {
    let mut s = serde_json::to_string_pretty(&to_json(r)).expect("report serializes");
    s.push('\n');
    s
}
