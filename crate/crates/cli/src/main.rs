//! `mwqc`: star products, Poisson brackets, Beltrami coefficients and
//! quasiconformality checks from the command line, plus the scenario
//! registry that certifies every identity the engine implements.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mwqc_core::beltrami::{self, BeltramiError, BeltramiValue, GridDomain};
use mwqc_core::cauchy::{self, ContourSpec, MuFunction};
use mwqc_core::{parse, poisson_bracket, serialize, star, Complex64, StarConfig, StarExpr};
use mwqc::report::CheckReport;
use mwqc::scenarios;
use mwqc::{parse_complex, parse_complex_list};
use serde::Deserialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "mwqc", version, about = "Star products and quasiconformality checks")]
struct Cli {
    /// Output format for reports and results
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run every registered scenario and exit nonzero on any failure
    RunAll {
        /// JSON file with an "overrides" object keyed by scenario id
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed for randomized scenarios (overrides MWQC_SEED)
        #[arg(long)]
        seed: Option<u64>,
        /// Trial count for randomized scenarios
        #[arg(long)]
        trials: Option<u64>,
        /// Tolerance override for scenarios that accept one
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run a single scenario: `mwqc run ID [--key value ...]`
    Run {
        id: String,
        /// Parameter overrides as `--key value` pairs
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Star product of two expressions
    Star {
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
        /// Truncate the series at this order instead of resumming exactly
        #[arg(long)]
        order: Option<usize>,
    },
    /// Poisson bracket of two expressions
    Poisson {
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
    },
    /// Beltrami coefficient (exact when recognized, else a grid field)
    Mu {
        #[arg(long)]
        f: String,
        /// Grid resolution for the pointwise fallback
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Certify quasiconformality on a grid
    Qc {
        #[arg(long)]
        f: String,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long = "k-threshold", default_value_t = beltrami::DEFAULT_K_THRESHOLD)]
        k_threshold: f64,
    },
    /// Cauchy reproduction of the exponential star product in mu-space
    Cauchy {
        /// Comma-separated nonzero frequencies, e.g. "1,2"
        #[arg(long)]
        alphas: String,
        /// Comma-separated Beltrami coefficients, e.g. "0.3,-0.2i"
        #[arg(long)]
        mus: String,
        /// Evaluation point
        #[arg(long, default_value = "0.1+0.2i")]
        z0: String,
        #[arg(long, default_value_t = 0.5)]
        hbar: f64,
        #[arg(long, default_value_t = 128)]
        nodes: usize,
        /// Contour radius (default: 2*max(1, |mu_j|) per variable)
        #[arg(long)]
        radius: Option<f64>,
        /// Derivative orders, e.g. "1,0"; omitted means plain reproduction
        #[arg(long)]
        orders: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code())
        }
    }
}

#[derive(Debug)]
struct CliError {
    message: String,
    usage: bool,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            usage: true,
        }
    }

    fn check(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            usage: false,
        }
    }

    fn exit_code(&self) -> u8 {
        if self.usage {
            2
        } else {
            1
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<scenarios::ScenarioError> for CliError {
    fn from(e: scenarios::ScenarioError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<BeltramiError> for CliError {
    fn from(e: BeltramiError) -> Self {
        CliError::check(e.to_string())
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::RunAll {
            config,
            seed,
            trials,
            tol,
        } => run_all(cli.format, config, seed, trials, tol),
        Command::Run { id, overrides } => run_one(cli.format, &id, &overrides),
        Command::Star { f, g, hbar, order } => {
            let f = parse_expr(&f)?;
            let g = parse_expr(&g)?;
            let cfg = StarConfig {
                hbar,
                truncation_order: order,
            };
            let result = star(&f, &g, &cfg).map_err(|e| CliError::check(e.to_string()))?;
            emit_expr(cli.format, "star", &result);
            Ok(ExitCode::SUCCESS)
        }
        Command::Poisson { f, g } => {
            let f = parse_expr(&f)?;
            let g = parse_expr(&g)?;
            emit_expr(cli.format, "poisson", &poisson_bracket(&f, &g));
            Ok(ExitCode::SUCCESS)
        }
        Command::Mu { f, grid } => {
            let expr = parse_expr(&f)?;
            mu_command(cli.format, &expr, grid)
        }
        Command::Qc {
            f,
            grid,
            k_threshold,
        } => {
            if !(0.0..1.0).contains(&k_threshold) {
                return Err(CliError::usage("--k-threshold must lie in [0, 1)"));
            }
            let expr = parse_expr(&f)?;
            let dom = GridDomain::new(-1.0, 1.0, -1.0, 1.0, grid, grid)?;
            let report = mwqc_core::qc_certify(&expr, &dom, k_threshold);
            emit_qc(cli.format, &report);
            Ok(if report.verdict {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Cauchy {
            alphas,
            mus,
            z0,
            hbar,
            nodes,
            radius,
            orders,
        } => cauchy_command(cli.format, &alphas, &mus, &z0, hbar, nodes, radius, orders),
    }
}

fn parse_expr(text: &str) -> Result<StarExpr, CliError> {
    parse(text).map_err(|e| CliError::check(format!("cannot parse {text:?}: {e}")))
}

/// Complex scalars print through the expression serializer so that the
/// output is parseable by the same grammar.
fn fmt_complex(v: Complex64) -> String {
    serialize(&StarExpr::constant(v))
}

fn emit_expr(format: Format, command: &str, expr: &StarExpr) {
    match format {
        Format::Text => println!("{}", serialize(expr)),
        Format::Json => println!("{}", json!({ "command": command, "result": serialize(expr) })),
    }
}

fn emit_reports(format: Format, reports: &[CheckReport]) {
    for report in reports {
        match format {
            Format::Text => println!("{}", report.text_line()),
            Format::Json => println!("{}", report.json_line()),
        }
    }
    if format == Format::Text {
        let passed = reports.iter().filter(|r| r.passed()).count();
        println!("{passed}/{} scenarios passed", reports.len());
    }
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var("MWQC_SEED") {
        Ok(text) => text
            .parse::<u64>()
            .map(Some)
            .map_err(|_| CliError::usage(format!("MWQC_SEED must be an integer, got {text:?}"))),
        Err(_) => Ok(None),
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    overrides: BTreeMap<String, BTreeMap<String, Value>>,
}

fn load_config(path: &PathBuf) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::usage(format!(
            "malformed config {} at line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

fn run_all(
    format: Format,
    config: Option<PathBuf>,
    seed: Option<u64>,
    trials: Option<u64>,
    tol: Option<f64>,
) -> Result<ExitCode, CliError> {
    let config = config.map(|p| load_config(&p)).transpose()?.unwrap_or_default();
    let mut global = BTreeMap::new();
    if let Some(seed) = seed.or(env_seed()?) {
        global.insert("seed".to_string(), Value::from(seed));
    }
    if let Some(trials) = trials {
        global.insert("trials".to_string(), Value::from(trials));
    }
    if let Some(tol) = tol {
        global.insert(
            "tol".to_string(),
            serde_json::Number::from_f64(tol)
                .map(Value::Number)
                .ok_or_else(|| CliError::usage("--tol must be finite"))?,
        );
    }
    let reports = scenarios::run_all(&global, &config.overrides)?;
    emit_reports(format, &reports);
    Ok(if reports.iter().all(|r| r.passed()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

/// Parse `--key value` pairs into a parameter map; values are JSON when
/// they parse as JSON, strings otherwise. A trailing `--format` is pulled
/// out so it can follow the overrides on the command line.
fn parse_overrides(
    tokens: &[String],
) -> Result<(BTreeMap<String, Value>, Option<Format>), CliError> {
    let mut map = BTreeMap::new();
    let mut format = None;
    let mut iter = tokens.iter();
    while let Some(token) = iter.next() {
        let key = token
            .strip_prefix("--")
            .ok_or_else(|| CliError::usage(format!("expected --key, got {token:?}")))?;
        let value = iter
            .next()
            .ok_or_else(|| CliError::usage(format!("missing value for --{key}")))?;
        if key == "format" {
            format = Some(match value.as_str() {
                "text" => Format::Text,
                "json" => Format::Json,
                other => {
                    return Err(CliError::usage(format!(
                        "--format must be text or json, got {other:?}"
                    )))
                }
            });
            continue;
        }
        let parsed = serde_json::from_str(value).unwrap_or(Value::String(value.clone()));
        map.insert(key.to_string(), parsed);
    }
    Ok((map, format))
}

fn run_one(format: Format, id: &str, overrides: &[String]) -> Result<ExitCode, CliError> {
    let (mut overrides, format_override) = parse_overrides(overrides)?;
    let format = format_override.unwrap_or(format);
    if !overrides.contains_key("seed") {
        if let Some(seed) = env_seed()? {
            overrides.insert("seed".to_string(), Value::from(seed));
        }
    }
    let report = scenarios::run_scenario(id, &overrides)?;
    emit_reports(format, std::slice::from_ref(&report));
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn mu_command(format: Format, expr: &StarExpr, grid: usize) -> Result<ExitCode, CliError> {
    match mwqc_core::mu_exact(expr) {
        Ok(BeltramiValue::ExactConstant(mu)) => {
            match format {
                Format::Text => println!("{}", fmt_complex(mu)),
                Format::Json => println!(
                    "{}",
                    json!({ "command": "mu", "kind": "exact_constant", "mu": fmt_complex(mu) })
                ),
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(BeltramiError::NotRepresentable) => {
            let dom = GridDomain::new(-1.0, 1.0, -1.0, 1.0, grid, grid)?;
            match mwqc_core::mu_grid(expr, &dom)? {
                BeltramiValue::PointwiseField(field) => {
                    let defined: Vec<f64> = field
                        .values
                        .iter()
                        .zip(&field.masked)
                        .filter(|(_, &m)| !m)
                        .map(|(v, _)| v.norm())
                        .collect();
                    let masked = field.masked.iter().filter(|&&m| m).count();
                    let min = defined.iter().copied().fold(f64::INFINITY, f64::min);
                    let max = defined.iter().copied().fold(0.0, f64::max);
                    match format {
                        Format::Text => println!(
                            "pointwise field on {grid}x{grid}: |mu| in [{min:.6}, {max:.6}], {masked} masked points"
                        ),
                        Format::Json => println!(
                            "{}",
                            json!({
                                "command": "mu",
                                "kind": "pointwise_field",
                                "grid": grid,
                                "abs_min": min,
                                "abs_max": max,
                                "masked_points": masked,
                            })
                        ),
                    }
                    Ok(ExitCode::SUCCESS)
                }
                BeltramiValue::ExactConstant(_) => unreachable!("mu_grid returns fields"),
            }
        }
        Err(e) => Err(e.into()),
        Ok(BeltramiValue::PointwiseField(_)) => unreachable!("mu_exact returns constants"),
    }
}

fn emit_qc(format: Format, report: &mwqc_core::QCReport) {
    match format {
        Format::Text => {
            println!(
                "verdict: {}",
                if report.verdict { "quasiconformal (on samples)" } else { "not quasiconformal" }
            );
            println!("k_hat: {:e} (threshold {:e})", report.k_hat, report.k_threshold);
            println!("dz_nonvanishing: {}", report.dz_nonvanishing);
            println!("l2_dz: {:e}, l2_dzbar: {:e}", report.l2_dz, report.l2_dzbar);
            if let Some(w) = &report.witness {
                println!("witness: {:?} at {} (value {:e})", w.kind, fmt_complex(w.point), w.value);
            }
            println!("note: {}", report.sampling_note);
        }
        Format::Json => {
            let witness = report.witness.as_ref().map(|w| {
                json!({
                    "point": fmt_complex(w.point),
                    "kind": format!("{:?}", w.kind),
                    "value": w.value,
                })
            });
            println!(
                "{}",
                json!({
                    "command": "qc",
                    "verdict": report.verdict,
                    "k_hat": report.k_hat,
                    "k_threshold": report.k_threshold,
                    "dz_nonvanishing": report.dz_nonvanishing,
                    "l2_dz": report.l2_dz,
                    "l2_dzbar": report.l2_dzbar,
                    "witness": witness,
                    "note": report.sampling_note,
                })
            );
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cauchy_command(
    format: Format,
    alphas: &str,
    mus: &str,
    z0: &str,
    hbar: f64,
    nodes: usize,
    radius: Option<f64>,
    orders: Option<String>,
) -> Result<ExitCode, CliError> {
    let alphas = parse_complex_list(alphas).map_err(CliError::usage)?;
    let mus = parse_complex_list(mus).map_err(CliError::usage)?;
    let z0 = parse_complex(z0).map_err(CliError::usage)?;
    let mf = MuFunction::new(alphas, z0, hbar).map_err(|e| CliError::check(e.to_string()))?;
    let contours: Vec<ContourSpec> = mus
        .iter()
        .map(|&m| {
            let r = radius.unwrap_or_else(|| 2.0 * 1f64.max(m.norm()));
            ContourSpec::new(Complex64::new(0.0, 0.0), r, nodes)
        })
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::check(e.to_string()))?;

    let direct = cauchy::mu_function_eval(&mf, &mus).map_err(|e| CliError::check(e.to_string()))?;
    let (label, value) = match orders {
        Some(text) => {
            let orders: Vec<u32> = text
                .split(',')
                .map(|p| p.trim().parse::<u32>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::usage(format!("bad --orders list {text:?}")))?;
            let value = cauchy::cauchy_derivative(&mf, &mus, &orders, &contours)
                .map_err(|e| CliError::check(e.to_string()))?;
            let analytic = cauchy::analytic_derivative(&mf, &mus, &orders)
                .map_err(|e| CliError::check(e.to_string()))?;
            match format {
                Format::Text => {
                    println!("derivative (quadrature): {}", fmt_complex(value));
                    println!("derivative (analytic):   {}", fmt_complex(analytic));
                    println!("residual: {:e}", (value - analytic).norm());
                }
                Format::Json => println!(
                    "{}",
                    json!({
                        "command": "cauchy",
                        "kind": "derivative",
                        "quadrature": fmt_complex(value),
                        "analytic": fmt_complex(analytic),
                        "residual": (value - analytic).norm(),
                    })
                ),
            }
            return Ok(ExitCode::SUCCESS);
        }
        None => {
            let value = cauchy::cauchy_reproduce(&mf, &mus, &contours)
                .map_err(|e| CliError::check(e.to_string()))?;
            ("reproduced", value)
        }
    };
    match format {
        Format::Text => {
            println!("{label}: {}", fmt_complex(value));
            println!("direct:     {}", fmt_complex(direct));
            println!("residual: {:e}", (value - direct).norm());
        }
        Format::Json => println!(
            "{}",
            json!({
                "command": "cauchy",
                "kind": "reproduce",
                "reproduced": fmt_complex(value),
                "direct": fmt_complex(direct),
                "residual": (value - direct).norm(),
            })
        ),
    }
    Ok(ExitCode::SUCCESS)
}
