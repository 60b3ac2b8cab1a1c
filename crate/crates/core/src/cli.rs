//! Command-line frontend. Every command produces a [`Report`]; `--json` prints
//! it, otherwise a short human-readable summary is printed.
//!
//! Exit codes: 0 on success, 1 when the answer is a negative verdict
//! (nontrivial, inequivalent, dependent, failed verification), 2 on errors.

use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bpf::BpfMatrix;
use crate::expr::MatrixExpr;
use crate::extensions::{self, ExtensionAlgebra};
use crate::fredholm::{self, KernelBasis, TruncationConfig};
use crate::linalg::DenseMatrix;
use crate::parse::parse;
use crate::verify;

pub const SCHEMA: &str = "rcfm-report/1";

#[derive(Parser, Debug)]
#[command(name = "rcfm", version, about = "Exact Fredholm indices and extensions for row-and-column-finite matrices")]
pub struct Cli {
    /// Print the machine-readable report.
    #[arg(long, global = true)]
    json: bool,
    /// Largest truncation any computation may build.
    #[arg(long, global = true, default_value_t = 256)]
    max_trunc: u64,
    /// Equal successive nullities required by the uncertified fallback.
    #[arg(long, global = true, default_value_t = 16)]
    window: usize,
    /// Exponent depth of the monomial independence check.
    #[arg(long, global = true, default_value_t = 6)]
    depth: u32,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ExprArg {
    #[arg(allow_hyphen_values = true)]
    expr: String,
}

#[derive(Args, Debug)]
struct PairArgs {
    #[arg(long, allow_hyphen_values = true)]
    x: String,
    #[arg(long, allow_hyphen_values = true)]
    y: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Kernel dimension, cokernel dimension and index.
    Index(ExprArg),
    /// Basis of the kernel.
    Kernel(ExprArg),
    /// Basis of the finitely supported functionals vanishing on the image.
    Cokernel(ExprArg),
    /// Write an index-zero matrix as bijective plus finite rank.
    Split(ExprArg),
    /// Fredholm inverse with both residuals.
    Finverse(ExprArg),
    /// Decide whether the extension with these generator images is trivial.
    Classify(PairArgs),
    /// Member of the family T_n.
    Family {
        #[arg(long)]
        n: u64,
    },
    /// Check a conjugation witness between two extensions.
    Equiv {
        #[arg(long, allow_hyphen_values = true)]
        x1: String,
        #[arg(long, allow_hyphen_values = true)]
        y1: String,
        #[arg(long, allow_hyphen_values = true)]
        x2: String,
        #[arg(long, allow_hyphen_values = true)]
        y2: String,
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        /// Defaults to the structural inverse of `u`.
        #[arg(long, allow_hyphen_values = true)]
        u_inv: Option<String>,
    },
    /// Independence of the powers Diag(2ⁿ) modulo finite matrices.
    Indep {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        exps: Vec<i64>,
        #[arg(long, default_value_t = 1)]
        cutoff: u64,
    },
    /// Matrix units E_ij for 1 ≤ i, j ≤ n.
    Units {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        n: u64,
    },
    /// Top-left block of the faithful embedding of `a`.
    Embed {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        n: u64,
    },
    /// Top-left n × n block.
    Truncate {
        #[arg(allow_hyphen_values = true)]
        expr: String,
        #[arg(long)]
        n: u64,
    },
    /// Run the randomized property suites.
    Verify {
        #[arg(long, value_parser = ["fredholm", "ring", "extensions", "all"])]
        suite: String,
        #[arg(long, default_value_t = verify::DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct Parameters {
    pub max_trunc: u64,
    pub window: usize,
    pub depth: u32,
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub inputs: Value,
    pub result: Value,
    pub certified: bool,
    pub parameters: Parameters,
    pub timing_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

/// Outcome of one command before it is wrapped in a report.
struct Outcome {
    inputs: Value,
    result: Value,
    certified: bool,
    negative: bool,
    text: String,
}

struct Failure {
    kind: &'static str,
    message: String,
    inputs: Value,
}

impl Failure {
    fn new(kind: &'static str, err: impl ToString) -> Self {
        Failure {
            kind,
            message: err.to_string(),
            inputs: Value::Null,
        }
    }
}

fn expr_input(src: &str) -> Result<(MatrixExpr, BpfMatrix, Value), Failure> {
    let e = parse(src).map_err(|err| Failure::new("parse", err))?;
    let m = e.eval().map_err(|err| Failure::new("eval", err))?;
    let v = json!({ "expr": e.to_string(), "matrix": m });
    Ok((e, m, v))
}

fn rows_json(m: &DenseMatrix) -> Value {
    json!(m
        .to_rows()
        .iter()
        .map(|r| r.iter().map(ToString::to_string).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn basis_text(label: &str, b: &KernelBasis) -> String {
    let mut s = format!("{label} dimension {}", b.dim());
    if !b.certified {
        s.push_str(" (uncertified)");
    }
    for v in &b.vectors {
        s.push_str(&format!("\n  {v}"));
    }
    s
}

fn extension(pair: &PairArgs, depth: u32) -> Result<(ExtensionAlgebra, Value), Failure> {
    let (_, x, xin) = expr_input(&pair.x)?;
    let (_, y, yin) = expr_input(&pair.y)?;
    let ext = extensions::make_extension(&x, &y, "custom", depth)
        .map_err(|e| Failure::new("extension", e))?;
    Ok((ext, json!({ "x": xin, "y": yin })))
}

fn fredholm_failure(e: fredholm::FredholmError) -> Failure {
    Failure::new("fredholm", e)
}

fn execute(cli: &Cli) -> Result<Outcome, Failure> {
    let cfg = TruncationConfig {
        max_trunc: cli.max_trunc,
        window: cli.window,
    };
    let with_inputs = |inputs: Value| move |mut f: Failure| {
        f.inputs = inputs.clone();
        f
    };
    Ok(match &cli.command {
        Command::Index(arg) => {
            let (_, a, inputs) = expr_input(&arg.expr)?;
            let r = fredholm::index(&a, &cfg).map_err(fredholm_failure).map_err(with_inputs(inputs.clone()))?;
            Outcome {
                text: format!(
                    "index {} (kernel {}, cokernel {}){}",
                    r.index,
                    r.kernel_dim,
                    r.coker_dim,
                    if r.certified { ", certified" } else { ", uncertified" }
                ),
                inputs,
                result: json!(r),
                certified: r.certified,
                negative: false,
            }
        }
        Command::Kernel(arg) | Command::Cokernel(arg) => {
            let (_, a, inputs) = expr_input(&arg.expr)?;
            let is_kernel = matches!(cli.command, Command::Kernel(_));
            let b = if is_kernel {
                fredholm::kernel_basis(&a, &cfg)
            } else {
                fredholm::cokernel_basis(&a, &cfg)
            }
            .map_err(fredholm_failure)
            .map_err(with_inputs(inputs.clone()))?;
            Outcome {
                text: basis_text(if is_kernel { "kernel" } else { "cokernel" }, &b),
                inputs,
                result: json!({
                    "dim": b.dim(),
                    "vectors": b.vectors,
                    "truncation_used": b.truncation_used,
                }),
                certified: b.certified,
                negative: false,
            }
        }
        Command::Split(arg) => {
            let (_, a, inputs) = expr_input(&arg.expr)?;
            let sc = fredholm::index_zero_split(&a, &cfg)
                .map_err(fredholm_failure)
                .map_err(with_inputs(inputs.clone()))?;
            Outcome {
                text: format!("u = {}\nt = {}", sc.u, BpfMatrix::from_finite(sc.t.clone())),
                inputs,
                result: json!(sc),
                certified: true,
                negative: false,
            }
        }
        Command::Finverse(arg) => {
            let (e, _, inputs) = expr_input(&arg.expr)?;
            let c = fredholm::fredholm_inverse(&e)
                .map_err(fredholm_failure)
                .map_err(with_inputs(inputs.clone()))?;
            Outcome {
                text: format!(
                    "a0 = {}\nr = {}\ns = {}",
                    c.a0,
                    BpfMatrix::from_finite(c.r.clone()),
                    BpfMatrix::from_finite(c.s.clone())
                ),
                inputs,
                result: json!(c),
                certified: true,
                negative: false,
            }
        }
        Command::Classify(pair) => {
            let (ext, inputs) = extension(pair, cli.depth)?;
            let v = extensions::classify_trivial(&ext, &cfg)
                .map_err(|e| Failure::new("classify", e))
                .map_err(with_inputs(inputs.clone()))?;
            let mut text = format!(
                "{} (index {})",
                if v.trivial { "trivial" } else { "nontrivial" },
                v.index
            );
            if let Some(s) = &v.splitting {
                text.push_str(&format!("\nsigma(x) = {}\nsigma(x)^-1 = {}", s.sigma_x, s.sigma_x_inv));
            }
            if let Some(d) = &v.diagnostic {
                text.push_str(&format!("\nno splitting: {d}"));
            }
            Outcome {
                text,
                inputs,
                negative: !v.trivial,
                result: json!(v),
                certified: true,
            }
        }
        Command::Family { n } => {
            let ext = extensions::family_tn(*n, cli.depth);
            let v = extensions::classify_trivial(&ext, &cfg).map_err(|e| Failure::new("classify", e))?;
            Outcome {
                text: format!(
                    "{}: x -> {}, x^-1 -> {}, index {}",
                    ext.label(),
                    ext.x_image(),
                    ext.y_image(),
                    v.index
                ),
                inputs: json!({ "n": n }),
                result: json!({ "extension": ext, "index": v.index, "trivial": v.trivial }),
                certified: true,
                negative: false,
            }
        }
        Command::Equiv { x1, y1, x2, y2, u, u_inv } => {
            let (e1, in1) = extension(&PairArgs { x: x1.clone(), y: y1.clone() }, cli.depth)?;
            let (e2, in2) = extension(&PairArgs { x: x2.clone(), y: y2.clone() }, cli.depth)?;
            let (ue, um, uin) = expr_input(u)?;
            let (um_inv, uinv_in) = match u_inv {
                Some(src) => {
                    let (_, m, v) = expr_input(src)?;
                    (m, v)
                }
                None => {
                    let inv = ue.exact_inverse().ok_or_else(|| {
                        Failure::new("witness", format!("`{ue}` has no structural inverse; pass --u-inv"))
                    })?;
                    let m = inv.eval().map_err(|e| Failure::new("eval", e))?;
                    let v = json!({ "expr": inv.to_string(), "matrix": m });
                    (m, v)
                }
            };
            let inputs = json!({ "e1": in1, "e2": in2, "u": uin, "u_inv": uinv_in });
            let eq = extensions::equivalence_check(&e1, &e2, &um, &um_inv)
                .map_err(|e| Failure::new("witness", e))
                .map_err(with_inputs(inputs.clone()))?;
            Outcome {
                text: if eq { "equivalent".into() } else { "not equivalent under this witness".into() },
                inputs,
                result: json!({ "equivalent": eq }),
                certified: true,
                negative: !eq,
            }
        }
        Command::Indep { exps, cutoff } => {
            let inputs = json!({ "exps": exps, "cutoff": cutoff });
            let ok = extensions::diag_independence(exps, *cutoff)
                .map_err(|e| Failure::new("independence", e))
                .map_err(with_inputs(inputs.clone()))?;
            Outcome {
                text: if ok { "independent".into() } else { "dependent".into() },
                inputs,
                result: json!({ "independent": ok }),
                certified: true,
                negative: !ok,
            }
        }
        Command::Units { pair, n } => {
            let (_, x, xin) = expr_input(&pair.x)?;
            let (_, y, yin) = expr_input(&pair.y)?;
            let inputs = json!({ "x": xin, "y": yin, "n": n });
            let units = extensions::matrix_units(&x, &y, *n)
                .map_err(|e| Failure::new("units", e))
                .map_err(with_inputs(inputs.clone()))?;
            let mut list = Vec::new();
            let mut text = String::new();
            for i in 1..=*n {
                for j in 1..=*n {
                    let e = units.unit(i, j).unwrap();
                    text.push_str(&format!("E({i},{j}) = {e}\n"));
                    list.push(json!({ "i": i, "j": j, "matrix": e }));
                }
            }
            Outcome {
                text: text.trim_end().to_string(),
                inputs,
                result: json!({ "units": list }),
                certified: true,
                negative: false,
            }
        }
        Command::Embed { a, pair, n } => {
            let (_, am, ain) = expr_input(a)?;
            let (_, x, xin) = expr_input(&pair.x)?;
            let (_, y, yin) = expr_input(&pair.y)?;
            let inputs = json!({ "a": ain, "x": xin, "y": yin, "n": n });
            let run = || -> Result<DenseMatrix, extensions::ExtensionError> {
                let units = extensions::matrix_units(&x, &y, *n)?;
                extensions::embed(&am, &units, *n)
            };
            let d = run().map_err(|e| Failure::new("embed", e)).map_err(with_inputs(inputs.clone()))?;
            Outcome {
                text: dense_text(&d),
                inputs,
                result: json!({ "rows": rows_json(&d) }),
                certified: true,
                negative: false,
            }
        }
        Command::Truncate { expr, n } => {
            let (_, a, v) = expr_input(expr)?;
            let d = a.truncate(*n, *n);
            Outcome {
                text: dense_text(&d),
                inputs: json!({ "expr": v, "n": n }),
                result: json!({ "rows": rows_json(&d) }),
                certified: true,
                negative: false,
            }
        }
        Command::Verify { suite, seed } => {
            let reports = verify::run_suite(suite, *seed, &cfg, cli.depth)
                .ok_or_else(|| Failure::new("usage", format!("unknown suite {suite}")))?;
            let passed = reports.iter().all(verify::SuiteReport::passed);
            let mut text = String::new();
            for r in &reports {
                for c in &r.checks {
                    text.push_str(&format!(
                        "{}/{}: {} ({} instances, {} skipped)\n",
                        r.suite,
                        c.name,
                        if c.passed() { "pass" } else { "FAIL" },
                        c.instances,
                        c.skipped
                    ));
                    for v in &c.violations {
                        text.push_str(&format!("  {v}\n"));
                    }
                }
            }
            Outcome {
                text: text.trim_end().to_string(),
                inputs: json!({ "suite": suite, "seed": seed }),
                result: json!({ "passed": passed, "suites": reports }),
                certified: true,
                negative: !passed,
            }
        }
    })
}

fn dense_text(d: &DenseMatrix) -> String {
    d.to_rows()
        .iter()
        .map(|r| r.iter().map(ToString::to_string).collect::<Vec<_>>().join("\t"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Index(_) => "index",
        Command::Kernel(_) => "kernel",
        Command::Cokernel(_) => "cokernel",
        Command::Split(_) => "split",
        Command::Finverse(_) => "finverse",
        Command::Classify(_) => "classify",
        Command::Family { .. } => "family",
        Command::Equiv { .. } => "equiv",
        Command::Indep { .. } => "indep",
        Command::Units { .. } => "units",
        Command::Embed { .. } => "embed",
        Command::Truncate { .. } => "truncate",
        Command::Verify { .. } => "verify",
    }
}

/// What a run prints and how it exits.
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs one command line (including the program name) without touching the process.
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            return if code == 0 {
                Output { code, stdout: rendered, stderr: String::new() }
            } else {
                Output { code, stdout: String::new(), stderr: rendered }
            };
        }
    };
    let start = Instant::now();
    let outcome = execute(&cli);
    let timing_ms = start.elapsed().as_secs_f64() * 1000.0;
    let parameters = Parameters {
        max_trunc: cli.max_trunc,
        window: cli.window,
        depth: cli.depth,
    };
    let command = command_name(&cli.command).to_string();
    let (report, code, text) = match outcome {
        Ok(o) => (
            Report {
                schema: SCHEMA,
                command,
                inputs: o.inputs,
                result: o.result,
                certified: o.certified,
                parameters,
                timing_ms,
                error: None,
            },
            if o.negative { 1 } else { 0 },
            o.text,
        ),
        Err(f) => {
            let text = format!("error ({}): {}", f.kind, f.message);
            (
                Report {
                    schema: SCHEMA,
                    command,
                    inputs: f.inputs,
                    result: Value::Null,
                    certified: false,
                    parameters,
                    timing_ms,
                    error: Some(ErrorInfo {
                        kind: f.kind.to_string(),
                        message: f.message,
                    }),
                },
                2,
                text,
            )
        }
    };
    if cli.json {
        let mut s = serde_json::to_string_pretty(&report).expect("reports serialize");
        s.push('\n');
        Output { code, stdout: s, stderr: String::new() }
    } else if code == 2 {
        Output { code, stdout: String::new(), stderr: text + "\n" }
    } else {
        Output { code, stdout: text + "\n", stderr: String::new() }
    }
}
