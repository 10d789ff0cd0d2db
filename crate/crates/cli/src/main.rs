mod config;
mod svg;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use p2scatter::diagram::{default_ell_max, initial_diagram, scatter, Diagram, DiagramConfig};
use p2scatter::exactalg::RatFuncQ;
use p2scatter::invariants::{extract, report_json, tree_report_json};
use p2scatter::stability::ChargeVector;
use p2scatter::verify::{golden_suite, property_suite, CriterionResult, Golden};

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Engine(#[from] p2scatter::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed criteria: {0}")]
    Failed(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Engine(_) => "engine",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Failed(_) => "verification",
        }
    }
}

#[derive(Parser)]
#[command(name = "p2scatter", version, about = "Scattering diagrams and refined invariants of sheaves on the projective plane")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Poincaré polynomial, Hodge numbers and Euler numbers of one class.
    Betti(Common),
    /// Decomposition of the invariant by initial points.
    Trees(Common),
    /// Compute a diagram and write it as JSON and SVG.
    Scatter(Common),
    /// Run the golden-value or property suites.
    Verify(Common),
}

/// Flags mirroring the config-file keys; every value is parsed by the
/// config layer so that file and flag syntax agree.
#[derive(Args, Default)]
struct Common {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Charge `r,d,chi`.
    #[arg(long, allow_hyphen_values = true)]
    class: Option<String>,
    /// Order cap of the diagram.
    #[arg(long)]
    order: Option<String>,
    /// `xmin,xmax,smax`.
    #[arg(long, allow_hyphen_values = true)]
    region: Option<String>,
    /// Explicit probe `x,y` on the ray locus.
    #[arg(long, allow_hyphen_values = true)]
    probe: Option<String>,
    #[arg(long)]
    s_target: Option<String>,
    #[arg(long)]
    order_slack: Option<String>,
    #[arg(long)]
    retries: Option<String>,
    #[arg(long)]
    x_margin: Option<String>,
    /// `true` or `false`.
    #[arg(long)]
    markers: Option<String>,
    #[arg(long)]
    verify_vertices: Option<String>,
    #[arg(long)]
    svg: Option<String>,
    #[arg(long)]
    json: Option<String>,
    /// SVG pixels per unit.
    #[arg(long)]
    scale: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// `paper` (golden values and oracles), `properties` or `all`.
    #[arg(long)]
    suite: Option<String>,
    /// Perturb the golden value of one criterion (harness self-test).
    #[arg(long)]
    corrupt: Option<String>,
    /// Comma-separated criterion ids to run from the golden suite.
    #[arg(long)]
    criteria: Option<String>,
    #[arg(long)]
    cache_dir: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let pairs = [
            ("class", &self.class),
            ("order", &self.order),
            ("region", &self.region),
            ("probe", &self.probe),
            ("s_target", &self.s_target),
            ("order_slack", &self.order_slack),
            ("retries", &self.retries),
            ("x_margin", &self.x_margin),
            ("markers", &self.markers),
            ("verify_vertices", &self.verify_vertices),
            ("svg", &self.svg),
            ("json", &self.json),
            ("scale", &self.scale),
            ("seed", &self.seed),
            ("suite", &self.suite),
            ("corrupt", &self.corrupt),
            ("criteria", &self.criteria),
            ("cache_dir", &self.cache_dir),
        ];
        let flags: BTreeMap<String, String> = pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        RunConfig::resolve(self.config.as_deref(), &flags)
    }
}

fn need_class(c: &RunConfig) -> Result<ChargeVector, CliError> {
    c.class.ok_or_else(|| CliError::Config("missing --class r,d,chi".into()))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn with_config(mut v: Value, c: &RunConfig) -> Value {
    v["config"] = json!(c.echo());
    v
}

/// Report for classes whose moduli space is empty.
fn empty_report(g: &ChargeVector) -> Value {
    json!({
        "gamma": [g.r, g.d, g.chi],
        "dim": null,
        "poincare": [0],
        "trees": [],
        "note": "no stable objects",
    })
}

fn cmd_betti(c: &RunConfig) -> Result<Value, CliError> {
    let g = need_class(c)?;
    match extract(&g, &c.extract_config()) {
        Ok(e) => Ok(with_config(report_json(&e)?, c)),
        Err(p2scatter::Error::NoStableObjects) => Ok(with_config(empty_report(&g), c)),
        Err(e) => Err(e.into()),
    }
}

fn cmd_trees(c: &RunConfig) -> Result<Value, CliError> {
    let g = need_class(c)?;
    let mut cfg = c.extract_config();
    cfg.markers = true;
    match extract(&g, &cfg) {
        Ok(e) => Ok(with_config(tree_report_json(&e.trees()), c)),
        Err(p2scatter::Error::NoStableObjects) => Ok(with_config(empty_report(&g), c)),
        Err(e) => Err(e.into()),
    }
}

fn cmd_scatter(c: &RunConfig) -> Result<Value, CliError> {
    let mut dc = DiagramConfig::new(c.region.clone(), c.order.clone());
    dc.verify_vertices = c.verify_vertices;
    let (lo, hi) = dc.region.tangency_range();
    let init: Diagram<RatFuncQ> = initial_diagram(lo, hi, default_ell_max(&c.order), &dc)?;
    let d = scatter(&init)?;
    let dump = d.to_json();
    if let Some(p) = &c.json {
        let text = serde_json::to_string_pretty(&dump).map_err(p2scatter::Error::from)?;
        write_file(p, &format!("{text}\n"))?;
    }
    if let Some(p) = &c.svg {
        write_file(p, &svg::render(&d, &c.scale))?;
    }
    let summary = json!({
        "rays": d.rays.len(),
        "vertices": d.vertex_log.len(),
        "loops_ok": d.vertex_log.iter().all(|v| v.loop_ok),
        "json": c.json.as_ref().map(|p| p.display().to_string()),
        "svg": c.svg.as_ref().map(|p| p.display().to_string()),
    });
    Ok(with_config(summary, c))
}

fn cmd_verify(c: &RunConfig) -> Result<Value, CliError> {
    let mut golden = Golden::default();
    if let Some(id) = c.corrupt {
        golden.corrupt(id);
    }
    let mut results: Vec<CriterionResult> = Vec::new();
    if c.suite == "paper" || c.suite == "all" {
        results.extend(golden_suite(&golden, &c.extract_config(), c.criteria.as_deref()));
    }
    if c.suite == "properties" || c.suite == "all" {
        results.extend(property_suite(c.seed));
    }
    for r in &results {
        eprintln!("{}", r.line());
    }
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} {}", r.id, r.name))
        .collect();
    if !failed.is_empty() {
        return Err(CliError::Failed(failed.join(", ")));
    }
    Ok(with_config(json!({"passed": results.len(), "results": results}), c))
}

fn run(cli: Cli) -> Result<Value, CliError> {
    match cli.command {
        Command::Betti(a) => cmd_betti(&a.resolve()?),
        Command::Trees(a) => cmd_trees(&a.resolve()?),
        Command::Scatter(a) => cmd_scatter(&a.resolve()?),
        Command::Verify(a) => cmd_verify(&a.resolve()?),
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            emit(&json!({"error": first, "kind": "usage"}).to_string());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(v) => {
            emit(&serde_json::to_string_pretty(&v).expect("JSON values serialize"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            emit(&json!({"error": e.to_string(), "kind": e.kind()}).to_string());
            ExitCode::FAILURE
        }
    }
}
