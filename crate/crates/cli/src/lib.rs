//! Flag parsing and orchestration for the `inter-rater` command.
//!
//! Flags use a single dash and always take a value:
//!
//! ```text
//! inter-rater -dfile data.txt [-cfile categories.txt] [-ofile output_graph.jpg]
//!             [-ymin 0] [-ymax 1] [-highlight 2,3] [-indbars yes|no] [-jfile report.json]
//! ```

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use interrater::{
    analyze, build_plot_spec, emit_svg, render_machine, render_text, svg_output_path,
    CategorySet, Error as AnalysisError, KappaOutcome, RatingMatrix,
};

pub const USAGE: &str = "\
usage: inter-rater -dfile <data file> [options]

options:
  -dfile <path>      ratings file, one subject per line (required)
  -cfile <path>      categories file, one label per line [categories.txt]
  -ofile <path>      chart file; .jpg/.jpeg/.png are written as .svg [output_graph.jpg]
  -ymin <number>     chart y-axis minimum [0]
  -ymax <number>     chart y-axis maximum [1]
  -highlight <x,y>   highlight the pair of users x and y (zero-based) [none]
  -indbars <yes|no>  draw a confidence bar for every pair kappa [no]
  -jfile <path>      also write the report as JSON [none]
  -help              print this message";

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Io = 1,
    Usage = 2,
    Parse = 3,
    Degenerate = 4,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub dfile: PathBuf,
    pub cfile: PathBuf,
    pub ofile: PathBuf,
    pub ymin: f64,
    pub ymax: f64,
    pub highlight: Option<(usize, usize)>,
    pub indbars: bool,
    pub jfile: Option<PathBuf>,
}

impl CliConfig {
    pub fn new(dfile: impl Into<PathBuf>) -> Self {
        Self {
            dfile: dfile.into(),
            cfile: PathBuf::from("categories.txt"),
            ofile: PathBuf::from("output_graph.jpg"),
            ymin: 0.0,
            ymax: 1.0,
            highlight: None,
            indbars: false,
            jfile: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Run(CliConfig),
    Help,
}

fn parse_number(flag: &str, value: &str) -> Result<f64, UsageError> {
    match value.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(UsageError(format!("{flag} expects a number, got {value:?}"))),
    }
}

fn parse_highlight(value: &str) -> Result<Option<(usize, usize)>, UsageError> {
    if value == "none" {
        return Ok(None);
    }
    let bad = || UsageError(format!("-highlight expects two distinct user indices like 2,3, got {value:?}"));
    let (a, b) = value.split_once(',').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == b {
        return Err(bad());
    }
    Ok(Some((a, b)))
}

/// Parses arguments (without the program name).
pub fn parse_flags<S: AsRef<str>>(args: &[S]) -> Result<Command, UsageError> {
    let mut dfile = None;
    let mut cfg = CliConfig::new("");
    let mut iter = args.iter().map(AsRef::as_ref);
    while let Some(flag) = iter.next() {
        if matches!(flag, "-help" | "-h" | "--help") {
            return Ok(Command::Help);
        }
        let known = matches!(
            flag,
            "-dfile" | "-cfile" | "-ofile" | "-ymin" | "-ymax" | "-highlight" | "-indbars" | "-jfile"
        );
        if !known {
            return Err(UsageError(format!("unknown flag {flag:?}")));
        }
        let value = iter
            .next()
            .ok_or_else(|| UsageError(format!("{flag} requires a value")))?;
        match flag {
            "-dfile" => dfile = Some(PathBuf::from(value)),
            "-cfile" => cfg.cfile = PathBuf::from(value),
            "-ofile" => cfg.ofile = PathBuf::from(value),
            "-ymin" => cfg.ymin = parse_number(flag, value)?,
            "-ymax" => cfg.ymax = parse_number(flag, value)?,
            "-highlight" => cfg.highlight = parse_highlight(value)?,
            "-indbars" => {
                cfg.indbars = match value {
                    "yes" => true,
                    "no" => false,
                    _ => {
                        return Err(UsageError(format!(
                            "-indbars expects yes or no, got {value:?}"
                        )))
                    }
                }
            }
            "-jfile" => cfg.jfile = Some(PathBuf::from(value)),
            _ => unreachable!(),
        }
    }
    cfg.dfile = dfile.ok_or_else(|| UsageError("missing required flag -dfile".into()))?;
    if cfg.dfile.as_os_str().is_empty() {
        return Err(UsageError("-dfile must name a file".into()));
    }
    if cfg.ymin >= cfg.ymax {
        return Err(UsageError(format!(
            "-ymin ({}) must be less than -ymax ({})",
            cfg.ymin, cfg.ymax
        )));
    }
    Ok(Command::Run(cfg))
}

fn read_text(path: &Path, what: &str) -> Result<String, String> {
    let bytes =
        fs::read(path).map_err(|e| format!("cannot read {what} {}: {e}", path.display()))?;
    String::from_utf8(bytes).map_err(|_| format!("{what} {} is not valid UTF-8", path.display()))
}

/// Writes through a temporary file in the destination directory and renames
/// it into place, so a failed run never leaves a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Runs the analysis, printing the report to `out` and diagnostics to `err`.
pub fn run(cfg: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> Exit {
    macro_rules! fail {
        ($code:expr, $($arg:tt)*) => {{
            let _ = writeln!(err, "inter-rater: {}", format!($($arg)*));
            return $code;
        }};
    }

    let cat_text = match read_text(&cfg.cfile, "categories file") {
        Ok(t) => t,
        Err(e) => fail!(Exit::Parse, "{e}"),
    };
    let categories = match CategorySet::parse(&cat_text) {
        Ok(c) => c,
        Err(e) => fail!(Exit::Parse, "{}: {e}", cfg.cfile.display()),
    };
    let data_text = match read_text(&cfg.dfile, "data file") {
        Ok(t) => t,
        Err(e) => fail!(Exit::Parse, "{e}"),
    };
    let ratings = match RatingMatrix::parse(&data_text, &categories) {
        Ok(m) => m,
        Err(e) => fail!(Exit::Parse, "{}: {e}", cfg.dfile.display()),
    };

    let dfile = cfg.dfile.display().to_string();
    let cfile = cfg.cfile.display().to_string();
    let report = match analyze(&ratings, &categories, Some(&dfile), Some(&cfile)) {
        Ok(r) => r,
        Err(e @ (AnalysisError::EmptyOverlap | AnalysisError::DegenerateMarginals)) => {
            fail!(Exit::Degenerate, "{}: {e}", cfg.dfile.display())
        }
        Err(e) => fail!(Exit::Parse, "{}: {e}", cfg.dfile.display()),
    };
    let spec = match build_plot_spec(&report, cfg.ymin, cfg.ymax, cfg.highlight, cfg.indbars) {
        Ok(s) => s,
        Err(e) => fail!(Exit::Usage, "{e}"),
    };

    if let Err(e) = out.write_all(render_text(&report).as_bytes()) {
        fail!(Exit::Io, "cannot write report: {e}");
    }

    let labels: Vec<String> = (0..ratings.raters()).map(interrater::report::user_label).collect();
    let svg = emit_svg(&spec, &labels);
    let (chart_path, substituted) = svg_output_path(&cfg.ofile);
    if let Err(e) = write_atomic(&chart_path, svg.as_bytes()) {
        fail!(Exit::Io, "cannot write chart {}: {e}", chart_path.display());
    }
    if substituted {
        let _ = writeln!(
            err,
            "inter-rater: raster output is not supported; wrote SVG chart to {}",
            chart_path.display()
        );
    }

    if let Some(jfile) = &cfg.jfile {
        if let Err(e) = write_atomic(jfile, render_machine(&report).as_bytes()) {
            fail!(Exit::Io, "cannot write JSON report {}: {e}", jfile.display());
        }
    }

    if let KappaOutcome::Undefined(_) = report.group.fleiss {
        let _ = writeln!(
            err,
            "inter-rater: group Fleiss kappa is undefined (single-category data)"
        );
        return Exit::Degenerate;
    }
    Exit::Success
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<S: AsRef<str>>(args: &[S], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match parse_flags(args) {
        Ok(Command::Help) => {
            let _ = writeln!(out, "{USAGE}");
            Exit::Success.code()
        }
        Ok(Command::Run(cfg)) => run(&cfg, out, err).code(),
        Err(e) => {
            let _ = writeln!(err, "inter-rater: {e}\n\n{USAGE}");
            Exit::Usage.code()
        }
    }
}
