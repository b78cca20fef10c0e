#![no_main]

use interrater::{analyze, build_plot_spec, emit_svg, render_machine, render_text, CategorySet, RatingMatrix};
use libfuzzer_sys::fuzz_target;

// Same layout as parse_ratings, but the whole report and chart are built.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Some((cats, ratings)) = text.split_once('\0') else { return };
    let Ok(cats) = CategorySet::parse(cats) else { return };
    let Ok(m) = RatingMatrix::parse(ratings, &cats) else { return };
    if m.raters() > 16 || m.subjects() > 2000 {
        return;
    }
    let Ok(report) = analyze(&m, &cats, None, None) else { return };
    let _ = render_text(&report);
    let _ = render_machine(&report);
    let spec = build_plot_spec(&report, -1.0, 1.0, None, true).expect("valid range");
    let svg = emit_svg(&spec, &[]);
    assert!(svg.ends_with("</svg>\n"));
});
