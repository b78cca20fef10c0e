//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use interrater::kappa::{kappa_statistic, GroupAgreement};
use interrater::{
    analyze, build_pair_table, build_plot_spec, counts_matrix, emit_svg, fleiss_kappa,
    fleiss_pipeline, fleiss_variance, fleiss_variance_product_form, generate, project_pair,
    render_machine, render_text, subject_agreement, summarize_group, CategorySet, RaterModel,
    Rating, RatingMatrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const WORKED_DATA: &str = "\
yes maybe no no
yes yes yes yes
no maybe no no
no yes no yes
yes no no no
";
const WORKED_CATS: &str = "yes\nmaybe\nno\n";

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Product-form variance evaluated straight from probabilities, used as an
/// oracle independent of the library's integer path.
fn oracle_variance(p: &[f64], subjects: f64, raters: f64) -> f64 {
    let s: f64 = p.iter().map(|p| p * (1.0 - p)).sum();
    let t: f64 = p.iter().map(|p| p * (1.0 - p) * (1.0 - 2.0 * p)).sum();
    2.0 * (s * s - t) / (subjects * raters * (raters - 1.0) * s * s)
}

fn worked_example_golden() -> Outcome {
    let start = Instant::now();
    let cats = CategorySet::parse(WORKED_CATS).map_err(err)?;
    let m = RatingMatrix::parse(WORKED_DATA, &cats).map_err(err)?;
    let counts = counts_matrix(&m).map_err(err)?;
    let ga = fleiss_pipeline(&m).map_err(err)?;
    let elapsed = start.elapsed();

    let expected_counts = vec![
        vec![1, 1, 2],
        vec![4, 0, 0],
        vec![0, 1, 3],
        vec![2, 0, 2],
        vec![1, 0, 3],
    ];
    ensure!(counts == expected_counts, "n_ij rows {counts:?}");
    let expected_pi = [1.0 / 6.0, 1.0, 0.5, 1.0 / 3.0, 0.5];
    for (i, (&got, want)) in ga.subject_agreements().iter().zip(expected_pi).enumerate() {
        ensure!(close(got, want, 1e-12), "P_{i} = {got}, want {want}");
        ensure!(
            close(subject_agreement(&counts[i], 4), want, 1e-12),
            "subject_agreement row {i}"
        );
    }
    for (j, (&got, want)) in ga.category_probs().iter().zip([0.4, 0.1, 0.5]).enumerate() {
        ensure!(close(got, want, 1e-12), "p_{j} = {got}, want {want}");
    }
    ensure!(close(ga.observed_agreement(), 0.5, 1e-12), "P_o = {}", ga.observed_agreement());
    ensure!(elapsed < Duration::from_millis(10), "took {elapsed:?}");
    Ok(format!("n_ij, P_i, p_j, P_o exact; {elapsed:?}"))
}

fn worked_example_fleiss() -> Outcome {
    let cats = CategorySet::parse(WORKED_CATS).map_err(err)?;
    let m = RatingMatrix::parse(WORKED_DATA, &cats).map_err(err)?;
    let est = fleiss_kappa(&fleiss_pipeline(&m).map_err(err)?).map_err(err)?;
    ensure!(close(est.kappa(), 4.0 / 29.0, 1e-9), "kappa {}", est.kappa());
    let oracle = oracle_variance(&[0.4, 0.1, 0.5], 5.0, 4.0);
    ensure!(close(oracle, 0.0214427, 1e-6), "oracle variance {oracle}");
    ensure!(close(est.variance(), 0.0214427, 1e-6), "variance {}", est.variance());
    ensure!(close(est.variance(), oracle, 1e-12), "variance vs oracle {}", est.variance());
    Ok(format!("kappa {:.6}, variance {:.7}", est.kappa(), est.variance()))
}

fn random_counts(rng: &mut ChaCha8Rng) -> Vec<Vec<u64>> {
    let subjects = rng.random_range(2..=50);
    let raters = rng.random_range(2..=8);
    let k = rng.random_range(2..=6);
    // Skewed per-matrix marginals so near-degenerate cases are exercised.
    let weights: Vec<f64> = (0..k).map(|_| rng.random::<f64>().powi(3)).collect();
    let total: f64 = weights.iter().sum();
    (0..subjects)
        .map(|_| {
            let mut row = vec![0u64; k];
            for _ in 0..raters {
                let mut u = rng.random::<f64>() * total;
                let mut j = 0;
                while j + 1 < k && u >= weights[j] {
                    u -= weights[j];
                    j += 1;
                }
                row[j] += 1;
            }
            row
        })
        .collect()
}

fn variance_identities() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2018);
    let mut checked = 0;
    let mut degenerate = 0;
    let mut worst: f64 = 0.0;
    for trial in 0..1000 {
        let ga = GroupAgreement::from_counts(random_counts(&mut rng)).map_err(err)?;
        let spread: f64 = ga
            .category_probs()
            .iter()
            .zip(ga.complements())
            .map(|(p, q)| p * q)
            .sum();
        let gap = 1.0 - ga.chance_agreement();
        ensure!(
            (spread - gap).abs() <= 1e-12,
            "trial {trial}: sum p_j q_j = {spread}, 1 - P_e = {gap}"
        );
        match (fleiss_variance(&ga), fleiss_variance_product_form(&ga)) {
            (Ok(a), Ok(b)) => {
                let rel = (a - b).abs() / a.abs().max(b.abs());
                worst = worst.max(rel);
                ensure!(rel <= 1e-12, "trial {trial}: {a} vs {b} (rel {rel:e})");
                checked += 1;
            }
            (Err(_), Err(_)) => degenerate += 1,
            (a, b) => return Err(format!("trial {trial}: forms disagree on definedness {a:?} {b:?}")),
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!(
        "{checked} matrices compared, {degenerate} degenerate, worst rel {worst:.1e}; {elapsed:?}"
    ))
}

fn teacher_example() -> Outcome {
    let kappa = kappa_statistic(0.85, 0.82).map_err(err)?;
    ensure!(close(kappa, 0.16667, 1e-5), "kappa {kappa}");
    let mut total = 0.0;
    let seeds = 200;
    for seed in 0..seeds {
        let m = generate(&RaterModel::independent(vec![0.9, 0.1], seed), 1000, 2, 2).map_err(err)?;
        total += project_pair(&m, 0, 1).map_err(err)?.observed_agreement();
    }
    let mean = total / seeds as f64;
    ensure!(close(mean, 0.82, 0.01), "simulated chance agreement {mean}");
    Ok(format!("kappa {kappa:.5}; simulated agreement {mean:.4}"))
}

fn null_calibration() -> Outcome {
    let seeds = 200;
    let mut inside = 0;
    for seed in 0..seeds {
        let m = generate(&RaterModel::uniform(3, seed), 500, 4, 3).map_err(err)?;
        let est = fleiss_kappa(&fleiss_pipeline(&m).map_err(err)?).map_err(err)?;
        if est.kappa().abs() <= 4.0 * est.se() {
            inside += 1;
        }
    }
    ensure!(inside * 100 >= 95 * seeds, "only {inside}/{seeds} within 4 SE");

    for seed in 0..20 {
        let m = generate(&RaterModel::perfect_copy(vec![0.5, 0.3, 0.2], seed), 500, 4, 3)
            .map_err(err)?;
        let table = build_pair_table(&m);
        for (x, y, o) in table.unordered_pairs() {
            let k = o.estimate().ok_or(format!("pair ({x},{y}) undefined"))?.kappa();
            ensure!(k == 1.0, "perfect copy pair ({x},{y}) kappa {k}");
        }
        let group = summarize_group(&m).map_err(err)?;
        let k = group.fleiss.estimate().ok_or("group undefined")?.kappa();
        ensure!(k == 1.0, "perfect copy Fleiss kappa {k}");
    }
    Ok(format!("{inside}/{seeds} null kappas within 4 SE; perfect copies exactly 1"))
}

fn variance_scaling() -> Outcome {
    let cats = CategorySet::parse(WORKED_CATS).map_err(err)?;
    let mut cases = vec![counts_matrix(&RatingMatrix::parse(WORKED_DATA, &cats).map_err(err)?)
        .map_err(err)?];
    for seed in 0..10 {
        let m = generate(&RaterModel::noisy_copy(vec![0.3, 0.3, 0.4], 0.5, seed), 37, 5, 3)
            .map_err(err)?;
        cases.push(counts_matrix(&m).map_err(err)?);
    }
    for (c, counts) in cases.iter().enumerate() {
        let base = fleiss_kappa(&GroupAgreement::from_counts(counts.clone()).map_err(err)?)
            .map_err(err)?;
        for r in [2usize, 4] {
            let replicated: Vec<Vec<u64>> = counts
                .iter()
                .flat_map(|row| std::iter::repeat_n(row.clone(), r))
                .collect();
            let est = fleiss_kappa(&GroupAgreement::from_counts(replicated).map_err(err)?)
                .map_err(err)?;
            ensure!(
                (est.kappa() - base.kappa()).abs() <= 1e-12,
                "case {c}, r={r}: kappa {} vs {}",
                est.kappa(),
                base.kappa()
            );
            ensure!(
                rel_close(est.variance(), base.variance() / r as f64, 1e-12),
                "case {c}, r={r}: variance {} vs {}",
                est.variance(),
                base.variance() / r as f64
            );
        }
    }
    Ok(format!("{} matrices, r in {{2, 4}}", cases.len()))
}

fn matrix_text(m: &RatingMatrix, cats: &CategorySet) -> String {
    let mut s = String::new();
    for row in m.rows() {
        let tokens: Vec<&str> = row
            .iter()
            .map(|c| c.and_then(|j| cats.label(j)).unwrap_or("-"))
            .collect();
        let _ = writeln!(s, "{}", tokens.join(" "));
    }
    s
}

fn full_pipeline(subjects: usize, raters: usize, limit: Duration) -> Result<Duration, String> {
    let cats = CategorySet::parse("1\n0\n-1\n").map_err(err)?;
    let model = RaterModel::noisy_copy(vec![0.3, 0.5, 0.2], 0.3, 7);
    let text = matrix_text(&generate(&model, subjects, raters, 3).map_err(err)?, &cats);

    let start = Instant::now();
    let m = RatingMatrix::parse(&text, &cats).map_err(err)?;
    let report = analyze(&m, &cats, Some("synthetic.txt"), None).map_err(err)?;
    let text_report = render_text(&report);
    let json = render_machine(&report);
    let spec = build_plot_spec(&report, 0.0, 1.0, Some((0, 1)), true).map_err(err)?;
    let svg = emit_svg(&spec, &[]);
    let elapsed = start.elapsed();
    ensure!(!text_report.is_empty() && !json.is_empty() && !svg.is_empty(), "empty output");
    ensure!(elapsed < limit, "{subjects}x{raters} took {elapsed:?} (limit {limit:?})");
    Ok(elapsed)
}

fn speed() -> Outcome {
    let small = full_pipeline(1620, 4, Duration::from_secs(1))?;
    let large = full_pipeline(100_000, 8, Duration::from_secs(10))?;
    Ok(format!("1620x4 in {small:?}; 100000x8 in {large:?}"))
}

fn chart_structure() -> Outcome {
    let m = generate(&RaterModel::noisy_copy(vec![0.5, 0.5], 0.3, 11), 200, 4, 2).map_err(err)?;
    let cats = CategorySet::parse("relevant\nirrelevant").map_err(err)?;
    let report = analyze(&m, &cats, None, None).map_err(err)?;
    let count = |svg: &str, class: &str| svg.matches(&format!("class=\"{class}\"")).count();
    let prefix = |svg: &str, class: &str| svg.matches(&format!("class=\"{class}")).count();

    let plain = emit_svg(&build_plot_spec(&report, 0.0, 1.0, None, false).map_err(err)?, &[]);
    ensure!(prefix(&plain, "pair-point") == 12, "pair glyphs {}", prefix(&plain, "pair-point"));
    ensure!(count(&plain, "average-point") == 4, "average markers");
    ensure!(count(&plain, "ci-bar average-bar") == 4, "average CI bars");
    ensure!(count(&plain, "group-band") == 2, "band lines");
    ensure!(plain.contains("stroke-dasharray"), "band not dashed");
    ensure!(prefix(&plain, "ci-bar pair-bar") == 0, "pair bars without -indbars");

    let lit = emit_svg(&build_plot_spec(&report, 0.0, 1.0, Some((2, 3)), false).map_err(err)?, &[]);
    ensure!(count(&lit, "pair-point highlight") == 2, "highlighted glyphs");
    ensure!(prefix(&lit, "pair-point") == 12, "highlight changed glyph total");
    ensure!(
        lit.contains(r#"data-pair="2,3""#) && lit.contains(r#"data-pair="3,2""#),
        "wrong pair highlighted"
    );

    let bars = emit_svg(&build_plot_spec(&report, 0.0, 1.0, None, true).map_err(err)?, &[]);
    ensure!(count(&bars, "ci-bar pair-bar") == 12, "pair bars {}", count(&bars, "ci-bar pair-bar"));
    Ok("12 pair glyphs, 4 averages with bars, 2 dashed lines, 2 highlighted, 12 pair bars".into())
}

fn abstention_handling() -> Outcome {
    // 10 subjects, 4 raters. Rater 3 abstains on even subjects, rater 1 on
    // subject 1.
    let mut rows: Vec<Vec<Rating>> = (0..10)
        .map(|i| vec![Some(i % 2), Some((i / 2) % 2), Some(i % 3 % 2), Some((i + 1) % 2)])
        .collect();
    for (i, row) in rows.iter_mut().enumerate() {
        if i % 2 == 0 {
            row[3] = None;
        }
    }
    rows[1][1] = None;
    let m = RatingMatrix::from_rows(rows, 2).map_err(err)?;

    // Hand count of subjects rated by both members of each pair.
    let expected = [((0, 1), 9), ((0, 2), 10), ((0, 3), 5), ((1, 2), 9), ((1, 3), 4), ((2, 3), 5)];
    for ((x, y), n2) in expected {
        let got = project_pair(&m, x, y).map_err(err)?.overlap();
        ensure!(got == n2, "pair ({x},{y}) N2 = {got}, hand count {n2}");
    }
    let group = summarize_group(&m).map_err(err)?;
    ensure!(group.dropped_rows == 6, "dropped_rows {}", group.dropped_rows);
    ensure!(group.rows_used == 4, "rows_used {}", group.rows_used);
    Ok("pair N2 = 9,10,5,9,4,5; 6 rows dropped".into())
}

fn cli_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_inter-rater");
    let run = || -> Result<(Vec<u8>, Vec<u8>), String> {
        let dir = tempfile::TempDir::new().map_err(err)?;
        fs::write(dir.path().join("data.txt"), WORKED_DATA).map_err(err)?;
        fs::write(dir.path().join("categories.txt"), WORKED_CATS).map_err(err)?;
        let out = Command::new(bin)
            .args(["-dfile", "data.txt", "-highlight", "2,3", "-indbars", "yes"])
            .current_dir(dir.path())
            .output()
            .map_err(err)?;
        ensure!(out.status.success(), "exit {:?}", out.status.code());
        let chart = fs::read(dir.path().join(Path::new("output_graph.svg"))).map_err(err)?;
        Ok((out.stdout, chart))
    };
    let (out_a, chart_a) = run()?;
    let (out_b, chart_b) = run()?;
    ensure!(out_a == out_b, "stdout differs");
    ensure!(chart_a == chart_b, "chart differs");
    ensure!(
        String::from_utf8_lossy(&out_a).contains("Fleiss kappa: 0.1379"),
        "report lacks Fleiss line"
    );
    Ok(format!("stdout {} bytes, chart {} bytes identical", out_a.len(), chart_a.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("worked example golden", worked_example_golden),
        ("Fleiss kappa and variance on the worked example", worked_example_fleiss),
        ("variance identities on 1000 random matrices", variance_identities),
        ("teacher example", teacher_example),
        ("null calibration and perfect copies", null_calibration),
        ("variance scaling under replication", variance_scaling),
        ("speed", speed),
        ("chart structure", chart_structure),
        ("abstention handling", abstention_handling),
        ("end-to-end determinism", cli_determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
