//! The `twold` command line: spec-file ingestion, the user commands and the
//! versioned report format.
//!
//! Every command produces a [`Report`]. With `--json` the report is printed as
//! one JSON document; otherwise a short human summary is printed. Exit codes:
//! `0` pass, `1` mathematical failure, `2` input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::extension::{extend_doubly_twisted_isometries, verify_extension};
use crate::factory::{ExampleId, ExampleParams, EXAMPLE_NAMES};
use crate::identities::{lemma_suite, IdentityOptions};
use crate::model::{pi_a, verify_equivalence};
use crate::report::CheckReport;
use crate::representation::verify_all;
use crate::specfile::{self, LoadedSpec};
use crate::tensorspace::check_hexagon;
use crate::wold::{verify_decomposition, WoldOptions};
use crate::{Error, Result};

pub const REPORT_SCHEMA: &str = "twold-report/1";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

const DEFAULT_WINDOW: usize = 8;
const DENSE_TOL: f64 = 1e-12;
const COMPOSITE_TOL: f64 = 1e-10;

#[derive(Parser, Debug)]
#[command(name = "twold", version, about = "Verify, decompose, model and extend doubly twisted isometric tuples")]
pub struct Cli {
    /// Print the structured JSON report instead of the human summary.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Input {
    /// Spec file; `-` reads standard input.
    pub file: Option<String>,
    /// Read the spec from standard input.
    #[arg(long, conflicts_with = "file")]
    pub stdin: bool,
}

impl Input {
    fn load(&self) -> Result<LoadedSpec> {
        match (&self.file, self.stdin) {
            (_, true) => specfile::read_path("-"),
            (Some(f), false) => specfile::read_path(f),
            (None, false) => Err(Error::Input("no spec file given (pass a path, `-` or --stdin)".into())),
        }
    }

    fn label(&self) -> String {
        if self.stdin {
            "-".into()
        } else {
            self.file.clone().unwrap_or_default()
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Isometric, twisted, doubly twisted, σ and covariance checks.
    Verify {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long, default_value_t = DENSE_TOL)]
        tol: f64,
    },
    /// Existence verdict and per-degree dimensions of every summand.
    Wold {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long, default_value_t = COMPOSITE_TOL)]
        tol: f64,
        /// Include orthonormal bases of the summands in the report.
        #[arg(long)]
        emit_bases: bool,
    },
    /// Transport the tuple onto the Fock model over `𝒟_A`.
    Model {
        #[command(flatten)]
        input: Input,
        /// Comma-separated 0-based coordinates, e.g. `0,2`; defaults to the spec's subset.
        #[arg(long, value_parser = parse_subset)]
        subset: Option<SubsetArg>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long, default_value_t = COMPOSITE_TOL)]
        tol: f64,
        /// Write the model tuple as a spec file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the doubly twisted unitary extension and verify it.
    Extend {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        window: Option<usize>,
        /// Highest level `n` for the level intertwinings.
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = COMPOSITE_TOL)]
        tol: f64,
        /// Write the extended tuple as a spec file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hexagon identities for the iterated flips.
    Braid {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = DENSE_TOL)]
        tol: f64,
    },
    /// The operator identities used by the decomposition and extension proofs.
    Identities {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long, default_value_t = COMPOSITE_TOL)]
        tol: f64,
    },
    /// Generate a named fixture as a spec file.
    Example {
        /// Fixture name; `list` prints the known names.
        name: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_parser = parse_subset)]
        subset: Option<SubsetArg>,
        /// Polydisc rank.
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        core_dim: usize,
        /// Phase parameter in turns (λ for m2_hardy, z for doubly_noncommuting).
        #[arg(long)]
        turns: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rewrite a spec file in canonical form.
    Canon {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A coordinate subset given on the command line.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetArg(pub Vec<usize>);

/// Accepts `0,2`, `{0,2}`, `[0, 2]` and the empty set `{}`.
pub fn parse_subset(s: &str) -> std::result::Result<SubsetArg, String> {
    let inner = s.trim().trim_matches(|c| matches!(c, '{' | '}' | '[' | ']'));
    if inner.trim().is_empty() {
        return Ok(SubsetArg(vec![]));
    }
    inner
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad coordinate '{}': {e}", p.trim())))
        .collect::<std::result::Result<_, _>>()
        .map(SubsetArg)
}

/// Structured result of one command.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    pub passed: bool,
    pub exit_code: i32,
    pub checks: Vec<CheckReport>,
    pub data: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Extra human-summary lines.
    #[serde(skip)]
    pub lines: Vec<String>,
}

impl Report {
    fn new(command: &str, input: Option<String>) -> Self {
        Report {
            schema: REPORT_SCHEMA,
            command: command.into(),
            input,
            passed: true,
            exit_code: EXIT_PASS,
            checks: vec![],
            data: Value::Null,
            error: None,
            notes: vec![],
            lines: vec![],
        }
    }

    /// Set `passed` and the exit code from the checks.
    fn settle(&mut self) {
        self.passed = self.checks.iter().all(|c| c.passed);
        self.exit_code = if self.passed { EXIT_PASS } else { EXIT_FAIL };
    }

    fn fail_with(mut self, e: &Error) -> Self {
        self.passed = false;
        self.exit_code = if e.is_input_error() || matches!(e, Error::Unsupported(_)) { EXIT_INPUT } else { EXIT_FAIL };
        self.error = Some(e.to_string());
        self
    }

    pub fn human(&self) -> String {
        let mut s = String::new();
        let what = self.input.as_deref().map(|i| format!(" {i}")).unwrap_or_default();
        s.push_str(&format!("twold {}{what}\n", self.command));
        for c in &self.checks {
            s.push_str(&format!("  {}\n", c.summary()));
        }
        for l in &self.lines {
            s.push_str(&format!("  {l}\n"));
        }
        for n in &self.notes {
            s.push_str(&format!("  note: {n}\n"));
        }
        if let Some(e) = &self.error {
            s.push_str(&format!("  error: {e}\n"));
        }
        s.push_str(&format!("{} (exit {})\n", if self.passed { "PASS" } else { "FAIL" }, self.exit_code));
        s
    }
}

fn window_of(flag: Option<usize>, spec: &LoadedSpec) -> usize {
    flag.or(spec.window).unwrap_or(DEFAULT_WINDOW)
}

fn write_spec(path: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn cmd_verify(input: &Input, window: Option<usize>, tol: f64) -> Result<Report> {
    let spec = input.load()?;
    let n = window_of(window, &spec);
    let mut r = Report::new("verify", Some(input.label()));
    r.checks = verify_all(&spec.tuple, n, tol)?;
    r.data = json!({ "k": spec.tuple.k(), "window": n, "tol": tol });
    r.settle();
    Ok(r)
}

fn cmd_wold(input: &Input, window: Option<usize>, tol: f64, emit_bases: bool) -> Result<Report> {
    let spec = input.load()?;
    let n = window_of(window, &spec);
    let opts = WoldOptions { composite_tol: tol, ..WoldOptions::default().with_window(n) };
    let mut r = Report::new("wold", Some(input.label()));
    let dec = verify_decomposition(&spec.tuple, &opts)?;
    let ex = &dec.existence;
    r.lines.push(format!("existence: {} (max_dev={:.3e}, tol={:.1e})", ex.holds, ex.max_deviation, ex.tol));
    r.notes.extend(ex.notes.iter().cloned());
    if let Some(w) = &ex.witness {
        r.lines.push(format!(
            "witness: P_{{H_{}^1}} does not commute with S^{}_{} at e_{}⊗δ{} (deviation {:.3e})",
            w.i, w.j, w.alpha, w.component, w.degree, w.deviation
        ));
    }
    let mut existence = CheckReport::new("existence", tol);
    existence.record(ex.max_deviation, || match &ex.witness {
        Some(w) => format!("i={} j={} alpha={} degree={} component={}", w.i, w.j, w.alpha, w.degree, w.component),
        None => "worst commutator".into(),
    });
    r.checks.push(existence);

    if !ex.holds {
        r.data = json!({ "window": n, "existence": ex });
        r.settle();
        return Ok(r);
    }
    r.checks.extend(dec.checks.iter().cloned());
    for s in &dec.summands {
        let by_total: Vec<String> = s.space.dims_by_total_degree().iter().map(|(d, m)| format!("{d}:{m}")).collect();
        r.lines.push(format!("H_{:<8} total={:<4} by total degree [{}]", s.label, s.total_dim, by_total.join(" ")));
    }
    let mut data = serde_json::to_value(&dec)?;
    let by_total: serde_json::Map<String, Value> =
        dec.summands.iter().map(|s| (s.label.clone(), json!(s.space.dims_by_total_degree()))).collect();
    data["dims_by_total_degree"] = Value::Object(by_total);
    if emit_bases {
        let bases: serde_json::Map<String, Value> = dec
            .summands
            .iter()
            .map(|s| Ok((s.label.clone(), serde_json::to_value(&s.space)?)))
            .collect::<Result<_>>()?;
        data["bases"] = Value::Object(bases);
    }
    r.data = data;
    r.settle();
    Ok(r)
}

fn cmd_model(
    input: &Input,
    subset: Option<Vec<usize>>,
    window: Option<usize>,
    tol: f64,
    out: Option<&PathBuf>,
) -> Result<Report> {
    let spec = input.load()?;
    let n = window_of(window, &spec);
    let a = subset
        .or_else(|| spec.subset.clone())
        .ok_or_else(|| Error::Input("no subset: pass --subset or set `subset` in the spec".into()))?;
    let opts = WoldOptions { composite_tol: tol, ..WoldOptions::default().with_window(n) };
    let mut r = Report::new("model", Some(input.label()));
    let fm = pi_a(&spec.tuple, &a, &opts)?;
    let eq = verify_equivalence(&spec.tuple, &fm, tol)?;
    r.checks = eq.checks;
    r.lines.push(format!("subset {:?}: core dim {}", fm.subset, fm.core_dim()));
    if let Some(p) = out {
        write_spec(p, &specfile::to_canonical_string(&fm.tuple, Some(fm.subset.clone()), Some(n)))?;
        r.lines.push(format!("model spec written to {}", p.display()));
    }
    r.data = json!({ "subset": fm.subset, "core_dim": fm.core_dim(), "window": n, "out": out });
    r.settle();
    Ok(r)
}

fn cmd_extend(input: &Input, window: Option<usize>, levels: usize, tol: f64, out: Option<&PathBuf>) -> Result<Report> {
    let spec = input.load()?;
    let n = window_of(window, &spec);
    let mut r = Report::new("extend", Some(input.label()));
    let res = extend_doubly_twisted_isometries(&spec.tuple, n, tol)?;
    let rep = verify_extension(&res, n, levels, tol)?;
    r.checks = rep.checks.clone();
    r.notes.extend(rep.log.iter().cloned());
    r.lines.push(format!(
        "extension: {:?}; unitary={} twisted={} doubly_twisted={}",
        rep.kind, rep.unitary, rep.twisted, rep.doubly_twisted
    ));
    if let Some(p) = out {
        write_spec(p, &specfile::to_canonical_string(&res.extended, None, Some(n)))?;
        r.lines.push(format!("extended spec written to {}", p.display()));
    }
    r.data = json!({
        "kind": rep.kind,
        "phi_coords": res.phi_coords,
        "unitary": rep.unitary,
        "twisted": rep.twisted,
        "doubly_twisted": rep.doubly_twisted,
        "window": n,
        "levels": levels,
        "out": out,
    });
    r.settle();
    Ok(r)
}

fn cmd_braid(input: &Input, n: usize, tol: f64) -> Result<Report> {
    let spec = input.load()?;
    let mut r = Report::new("braid", Some(input.label()));
    let hex = check_hexagon(&spec.tuple.fibers, n, tol)?;
    for e in hex.entries.iter().filter(|e| e.deviation > tol) {
        r.lines
            .push(format!("triple ({},{},{}) n={}: deviation {:.3e} at {:?}", e.i, e.j, e.l, e.n, e.deviation, e.at));
    }
    r.lines.push(format!("{} hexagon evaluations", hex.entries.len()));
    r.checks.push(hex.check);
    r.data = json!({ "n": n, "entries": hex.entries });
    r.settle();
    Ok(r)
}

fn cmd_identities(input: &Input, window: Option<usize>, tol: f64) -> Result<Report> {
    let spec = input.load()?;
    let n = window_of(window, &spec);
    let mut r = Report::new("identities", Some(input.label()));
    r.checks = lemma_suite(&spec.tuple, &IdentityOptions { window: n, tol, ..IdentityOptions::default() })?;
    r.data = json!({ "window": n, "tol": tol });
    r.settle();
    Ok(r)
}

fn cmd_example(
    name: &str,
    params: ExampleParams,
    out: Option<&PathBuf>,
    stdout: &mut dyn Write,
    as_json: bool,
) -> Result<Option<Report>> {
    if name == "list" {
        for n in EXAMPLE_NAMES {
            writeln!(stdout, "{n}")?;
        }
        return Ok(None);
    }
    let id = ExampleId::from_name(name, &params)?;
    let t = id.build()?;
    let subset = matches!(id, ExampleId::FockModel { .. }).then(|| params.subset.clone());
    let text = specfile::to_canonical_string(&t, subset, None);
    match out {
        Some(p) => {
            write_spec(p, &text)?;
            let mut r = Report::new("example", Some(name.into()));
            r.lines.push(format!("spec written to {}", p.display()));
            r.data = json!({ "example": id, "out": p });
            Ok(Some(r))
        }
        None if as_json => {
            let mut r = Report::new("example", Some(name.into()));
            r.data = json!({ "example": id, "spec": serde_json::from_str::<Value>(&text)? });
            Ok(Some(r))
        }
        None => {
            stdout.write_all(text.as_bytes())?;
            Ok(None)
        }
    }
}

fn cmd_canon(input: &Input, out: Option<&PathBuf>, stdout: &mut dyn Write, as_json: bool) -> Result<Option<Report>> {
    let spec = input.load()?;
    let text = specfile::to_canonical_string(&spec.tuple, spec.subset, spec.window);
    match out {
        Some(p) => {
            write_spec(p, &text)?;
            let mut r = Report::new("canon", Some(input.label()));
            r.lines.push(format!("canonical spec written to {}", p.display()));
            Ok(Some(r))
        }
        None if as_json => {
            let mut r = Report::new("canon", Some(input.label()));
            r.data = json!({ "spec": serde_json::from_str::<Value>(&text)? });
            Ok(Some(r))
        }
        None => {
            stdout.write_all(text.as_bytes())?;
            Ok(None)
        }
    }
}

fn command_name(c: &Command) -> (&'static str, Option<String>) {
    match c {
        Command::Verify { input, .. } => ("verify", Some(input.label())),
        Command::Wold { input, .. } => ("wold", Some(input.label())),
        Command::Model { input, .. } => ("model", Some(input.label())),
        Command::Extend { input, .. } => ("extend", Some(input.label())),
        Command::Braid { input, .. } => ("braid", Some(input.label())),
        Command::Identities { input, .. } => ("identities", Some(input.label())),
        Command::Example { name, .. } => ("example", Some(name.clone())),
        Command::Canon { input, .. } => ("canon", Some(input.label())),
    }
}

/// Run one parsed command, writing reports to `stdout`. Returns the exit code.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> i32 {
    let outcome: Result<Option<Report>> = match &cli.command {
        Command::Verify { input, window, tol } => cmd_verify(input, *window, *tol).map(Some),
        Command::Wold { input, window, tol, emit_bases } => cmd_wold(input, *window, *tol, *emit_bases).map(Some),
        Command::Model { input, subset, window, tol, out } => {
            cmd_model(input, subset.clone().map(|s| s.0), *window, *tol, out.as_ref()).map(Some)
        }
        Command::Extend { input, window, levels, tol, out } => {
            cmd_extend(input, *window, *levels, *tol, out.as_ref()).map(Some)
        }
        Command::Braid { input, n, tol } => cmd_braid(input, *n, *tol).map(Some),
        Command::Identities { input, window, tol } => cmd_identities(input, *window, *tol).map(Some),
        Command::Example { name, seed, k, subset, n, core_dim, turns, out } => {
            let params = ExampleParams {
                k: *k,
                subset: subset.clone().map(|s| s.0).unwrap_or_else(|| ExampleParams::default().subset),
                n: *n,
                seed: *seed,
                core_dim: *core_dim,
                turns: *turns,
            };
            cmd_example(name, params, out.as_ref(), stdout, cli.json)
        }
        Command::Canon { input, out } => cmd_canon(input, out.as_ref(), stdout, cli.json),
    };
    let report = match outcome {
        Ok(None) => return EXIT_PASS,
        Ok(Some(r)) => r,
        Err(e) => {
            let (name, input) = command_name(&cli.command);
            Report::new(name, input).fail_with(&e)
        }
    };
    let text = if cli.json {
        serde_json::to_string_pretty(&report).map(|s| s + "\n").unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}\n"))
    } else {
        report.human()
    };
    // A closed pipe is not worth a panic; the exit code still carries the verdict.
    let _ = stdout.write_all(text.as_bytes());
    report.exit_code
}

/// Parse `args` (including the program name) and run. Usage errors exit with 2.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli, stdout),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            code
        }
    }
}

/// Entry point used by the `twold` binary.
pub fn run() -> i32 {
    run_from(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_from(std::iter::once("twold").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap() + &String::from_utf8(err).unwrap())
    }

    #[test]
    fn subsets_parse_in_several_spellings() {
        assert_eq!(parse_subset("0,2").unwrap().0, vec![0, 2]);
        assert_eq!(parse_subset("{1, 0}").unwrap().0, vec![1, 0]);
        assert_eq!(parse_subset("[]").unwrap().0, Vec::<usize>::new());
        let cli = Cli::try_parse_from(["twold", "model", "f.json", "--subset", "0,1"]).unwrap();
        assert!(matches!(cli.command, Command::Model { subset: Some(SubsetArg(ref a)), .. } if a == &vec![0, 1]));
        assert!(parse_subset("a").is_err());
    }

    #[test]
    fn example_then_verify_roundtrip() {
        let dir = std::env::temp_dir().join(format!("twold-cli-unit-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let f = dir.join("c3.json");
        let (code, _) = run_args(&["example", "c3_permutation", "--out", f.to_str().unwrap()]);
        assert_eq!(code, 0);
        let (code, text) = run_args(&["verify", f.to_str().unwrap()]);
        assert_eq!(code, 0, "{text}");
        assert!(text.contains("[pass] twisted"));
        let (code, text) = run_args(&["--json", "verify", f.to_str().unwrap()]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema"], REPORT_SCHEMA);
        assert_eq!(v["exit_code"], 0);
    }

    #[test]
    fn missing_file_is_an_input_error() {
        let (code, text) = run_args(&["verify", "/nonexistent/spec.json"]);
        assert_eq!(code, EXIT_INPUT, "{text}");
        let (code, _) = run_args(&["verify"]);
        assert_eq!(code, EXIT_INPUT);
        let (code, _) = run_args(&["frobnicate"]);
        assert_eq!(code, EXIT_INPUT);
    }

    #[test]
    fn help_exits_zero() {
        let (code, text) = run_args(&["--help"]);
        assert_eq!(code, 0);
        assert!(text.contains("verify"));
    }
}
