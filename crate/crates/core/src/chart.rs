//! SVG chart of the pair kappas per user, each user's average with its
//! confidence interval, and the group Fleiss interval as a dashed band.
//!
//! Glyph classes:
//!
//! | element                      | class                      |
//! |------------------------------|----------------------------|
//! | pair kappa marker            | `pair-point`               |
//! | highlighted pair marker      | `pair-point highlight`     |
//! | user average marker          | `average-point`            |
//! | average CI bar               | `ci-bar average-bar`       |
//! | pair CI bar (optional)       | `ci-bar pair-bar`          |
//! | group CI band line (two)     | `group-band`               |

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::permutation::KappaOutcome;
use crate::report::AnalysisReport;

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 60.0;

pub const PAIR_COLOR: &str = "#1f77b4";
pub const HIGHLIGHT_COLOR: &str = "#000000";
pub const AVERAGE_COLOR: &str = "#ff7f0e";
pub const BAND_COLOR: &str = "#2ca02c";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPoint {
    pub user: usize,
    pub partner: usize,
    pub kappa: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub highlighted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragePoint {
    pub user: usize,
    pub kappa: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub users: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub points: Vec<PairPoint>,
    pub averages: Vec<AveragePoint>,
    /// Group Fleiss CI; absent when the group kappa is undefined.
    pub group_band: Option<(f64, f64)>,
    /// Normalized so that the smaller index comes first.
    pub highlight: Option<(usize, usize)>,
    pub show_pair_bars: bool,
}

/// Collects what the chart shows from a report. Undefined pair kappas are
/// left out rather than drawn at zero.
pub fn build_plot_spec(
    r: &AnalysisReport,
    y_min: f64,
    y_max: f64,
    highlight: Option<(usize, usize)>,
    show_pair_bars: bool,
) -> Result<PlotSpec> {
    if !(y_min.is_finite() && y_max.is_finite() && y_min < y_max) {
        return Err(Error::Config(format!(
            "y-axis range [{y_min}, {y_max}] is empty"
        )));
    }
    let users = r.table.raters();
    let highlight = match highlight {
        Some((a, b)) if a == b => {
            return Err(Error::Config(format!("highlight pair ({a},{b}) is not distinct")))
        }
        Some((a, b)) if a >= users || b >= users => {
            return Err(Error::Config(format!(
                "highlight pair ({a},{b}) out of range for {users} users"
            )))
        }
        Some((a, b)) => Some((a.min(b), a.max(b))),
        None => None,
    };
    let is_highlighted = |x: usize, y: usize| highlight == Some((x.min(y), x.max(y)));

    let mut points = Vec::new();
    for x in 0..users {
        for y in (0..users).filter(|&y| y != x) {
            if let Some(e) = r.table.get(x, y).estimate() {
                points.push(PairPoint {
                    user: x,
                    partner: y,
                    kappa: e.kappa(),
                    se: e.se(),
                    ci_low: e.ci_low(),
                    ci_high: e.ci_high(),
                    highlighted: is_highlighted(x, y),
                });
            }
        }
    }
    let averages = r
        .users
        .iter()
        .filter_map(|u| {
            u.average.map(|a| AveragePoint {
                user: u.user,
                kappa: a.kappa,
                ci_low: a.ci_low,
                ci_high: a.ci_high,
            })
        })
        .collect();
    let group_band = match &r.group.fleiss {
        KappaOutcome::Defined(e) => Some((e.ci_low(), e.ci_high())),
        KappaOutcome::Undefined(_) => None,
    };
    Ok(PlotSpec {
        users,
        y_min,
        y_max,
        points,
        averages,
        group_band,
        highlight,
        show_pair_bars,
    })
}

struct Frame {
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
    y_min: f64,
    y_max: f64,
    slot: f64,
}

impl Frame {
    fn new(spec: &PlotSpec) -> Self {
        let left = MARGIN_LEFT;
        let right = WIDTH - MARGIN_RIGHT;
        Self {
            left,
            right,
            top: MARGIN_TOP,
            bottom: HEIGHT - MARGIN_BOTTOM,
            y_min: spec.y_min,
            y_max: spec.y_max,
            slot: (right - left) / spec.users.max(1) as f64,
        }
    }

    /// Pixel row of a kappa value, clamped to the plot box.
    fn y(&self, value: f64) -> f64 {
        let t = (self.y_max - value) / (self.y_max - self.y_min);
        (self.top + t * (self.bottom - self.top)).clamp(self.top, self.bottom)
    }

    fn user_center(&self, user: usize) -> f64 {
        self.left + (user as f64 + 0.5) * self.slot
    }

    /// Pair markers fan out left of the user's center, ordered by partner.
    fn pair_x(&self, user: usize, partner: usize, users: usize) -> f64 {
        let rank = if partner < user { partner } else { partner - 1 };
        let spread = users.saturating_sub(2).max(1) as f64;
        self.user_center(user) - 0.35 * self.slot + rank as f64 * 0.3 * self.slot / spread
    }

    fn average_x(&self, user: usize) -> f64 {
        self.user_center(user) + 0.25 * self.slot
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && !matches!(c, '\t' | '\n' | '\r') => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

/// Tick step of the form {1, 2, 5}·10^e giving at most about six ticks.
fn tick_step(range: f64) -> f64 {
    let raw = range / 5.0;
    let magnitude = 10f64.powf(raw.log10().floor());
    let normalized = raw / magnitude;
    let nice = if normalized <= 1.0 {
        1.0
    } else if normalized <= 2.0 {
        2.0
    } else if normalized <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * magnitude
}

fn ticks(y_min: f64, y_max: f64) -> (Vec<f64>, usize) {
    let step = tick_step(y_max - y_min);
    let decimals = (-step.log10() - 1e-9).ceil().max(0.0) as usize;
    let first = (y_min / step - 1e-9).ceil() as i64;
    let last = (y_max / step + 1e-9).floor() as i64;
    let values = (first..=last).map(|i| i as f64 * step).collect();
    (values, decimals)
}

fn ci_bar(w: &mut String, class: &str, color: &str, x: f64, lo: f64, hi: f64) -> fmt::Result {
    writeln!(
        w,
        r#"<path class="{class}" d="M{x:.2},{lo:.2} V{hi:.2} M{l:.2},{lo:.2} H{r:.2} M{l:.2},{hi:.2} H{r:.2}" stroke="{color}" stroke-width="1.5" fill="none"/>"#,
        l = x - 4.0,
        r = x + 4.0,
    )
}

/// Renders the plot as a standalone SVG 1.1 document. `labels` names the
/// x-axis positions; missing labels fall back to `#index`.
pub fn emit_svg(p: &PlotSpec, labels: &[String]) -> String {
    let mut out = String::new();
    write_svg(p, labels, &mut out).expect("writing to a String cannot fail");
    out
}

fn write_svg(p: &PlotSpec, labels: &[String], w: &mut String) -> fmt::Result {
    let f = Frame::new(p);
    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )?;
    writeln!(w, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#)?;
    writeln!(
        w,
        r#"<rect class="frame" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        f.left,
        f.top,
        f.right - f.left,
        f.bottom - f.top
    )?;

    let (tick_values, decimals) = ticks(p.y_min, p.y_max);
    for v in tick_values {
        let y = f.y(v);
        writeln!(
            w,
            r#"<line class="tick" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#,
            f.left - 5.0,
            f.left
        )?;
        writeln!(
            w,
            r#"<text class="tick-label" x="{:.2}" y="{:.2}" text-anchor="end">{v:.decimals$}</text>"#,
            f.left - 8.0,
            y + 4.0
        )?;
    }
    for user in 0..p.users {
        let label = labels
            .get(user)
            .map_or_else(|| format!("#{user}"), |l| escape(l));
        writeln!(
            w,
            r#"<text class="user-label" x="{:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
            f.user_center(user),
            f.bottom + 18.0
        )?;
    }
    writeln!(
        w,
        r#"<text class="axis-title" x="{:.2}" y="{:.2}" text-anchor="middle">User</text>"#,
        (f.left + f.right) / 2.0,
        f.bottom + 40.0
    )?;
    writeln!(
        w,
        r#"<text class="axis-title" x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">Kappa</text>"#,
        (f.top + f.bottom) / 2.0,
        (f.top + f.bottom) / 2.0
    )?;

    if let Some((lo, hi)) = p.group_band {
        for v in [lo, hi] {
            let y = f.y(v);
            writeln!(
                w,
                r#"<line class="group-band" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{BAND_COLOR}" stroke-width="1.5" stroke-dasharray="6,4"/>"#,
                f.left, f.right
            )?;
        }
    }

    if p.show_pair_bars {
        for pt in &p.points {
            let color = if pt.highlighted { HIGHLIGHT_COLOR } else { PAIR_COLOR };
            let x = f.pair_x(pt.user, pt.partner, p.users);
            ci_bar(w, "ci-bar pair-bar", color, x, f.y(pt.ci_low), f.y(pt.ci_high))?;
        }
    }
    for pt in &p.points {
        let (class, color) = if pt.highlighted {
            ("pair-point highlight", HIGHLIGHT_COLOR)
        } else {
            ("pair-point", PAIR_COLOR)
        };
        let x = f.pair_x(pt.user, pt.partner, p.users);
        let y = f.y(pt.kappa);
        writeln!(
            w,
            r#"<path class="{class}" data-pair="{},{}" d="M{x:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2} Z" fill="{color}"><title>({},{}) {:.4}</title></path>"#,
            pt.user,
            pt.partner,
            y - 5.0,
            x + 4.5,
            y + 3.0,
            x - 4.5,
            y + 3.0,
            pt.user,
            pt.partner,
            pt.kappa
        )?;
    }
    for a in &p.averages {
        let x = f.average_x(a.user);
        ci_bar(w, "ci-bar average-bar", AVERAGE_COLOR, x, f.y(a.ci_low), f.y(a.ci_high))?;
        writeln!(
            w,
            r#"<circle class="average-point" cx="{x:.2}" cy="{:.2}" r="5" fill="{AVERAGE_COLOR}"><title>#{} average {:.4}</title></circle>"#,
            f.y(a.kappa),
            a.user,
            a.kappa
        )?;
    }

    let lx = f.right + 15.0;
    let legend = [
        ("Pair kappa", PAIR_COLOR),
        ("User average, 95% CI", AVERAGE_COLOR),
        ("Fleiss kappa 95% CI", BAND_COLOR),
    ];
    for (i, (text, color)) in legend.iter().enumerate() {
        writeln!(
            w,
            r#"<text class="legend" x="{lx:.2}" y="{:.2}" fill="{color}">{text}</text>"#,
            f.top + 15.0 + 18.0 * i as f64
        )?;
    }
    if let Some((a, b)) = p.highlight {
        writeln!(
            w,
            r#"<text class="legend" x="{lx:.2}" y="{:.2}" fill="{HIGHLIGHT_COLOR}">Highlighted ({a},{b})</text>"#,
            f.top + 15.0 + 18.0 * legend.len() as f64
        )?;
    }
    writeln!(w, "</svg>")
}

/// Where the chart is written: raster extensions (.jpg, .jpeg, .png) are
/// replaced with .svg. Returns the path and whether it was substituted.
pub fn svg_output_path(requested: &Path) -> (PathBuf, bool) {
    let raster = requested
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "jpg" | "jpeg" | "png"))
        .unwrap_or(false);
    if raster {
        (requested.with_extension("svg"), true)
    } else {
        (requested.to_path_buf(), false)
    }
}
