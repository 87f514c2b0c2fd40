//! Command-line front end. Every command is a thin wrapper over a library
//! call; in machine format its output is exactly that call's serialized
//! result.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::api::{self, default_report_nodes, default_target, ApiService};
use crate::engine::{compile, infer, BayesianNetwork, CompiledNetwork, Evidence, Observation};
use crate::error::Error;
use crate::model::{export_matrix, parse_model, validate};
use crate::netgen::{derive_network, GoalDocument, Selection};
use crate::report::{self, machine, BatchTable, OutputFormat};
use crate::scenarios::{compare, goal_seek, run_scenario, sensitivity, Scenario};

pub const CASES_DIR_VAR: &str = "QUALNET_CASES_DIR";

#[derive(Debug, Parser)]
#[command(name = "qualnet", version, about = "Quality prediction networks from activity-based quality models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Machine,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => OutputFormat::Text,
            FormatArg::Machine => OutputFormat::Machine,
        }
    }
}

#[derive(Debug, Args)]
struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Write the output to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a quality model and list rule violations.
    Validate {
        /// Model file (abqm-v1).
        #[arg(value_name = "MODEL", required_unless_present = "model")]
        path: Option<String>,
        #[arg(long, conflicts_with = "path")]
        model: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Export the fact x activity impact matrix as CSV.
    Matrix {
        #[arg(long)]
        model: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Derive a network from a model and a goal document.
    Derive {
        #[arg(long)]
        model: String,
        #[arg(long)]
        goal: String,
        /// Selection file replacing the goal document's selection.
        #[arg(long)]
        select: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Posterior marginals of every node.
    Infer {
        #[arg(long)]
        net: String,
        #[arg(long)]
        scenario: Option<String>,
        /// Extra observation, `node=value`; repeatable.
        #[arg(long = "observe", value_name = "NODE=VALUE")]
        observe: Vec<String>,
        /// Node summarized first in text output.
        #[arg(long)]
        target: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Run scenarios and tabulate the target side by side.
    ScenarioRun {
        #[arg(long)]
        net: String,
        #[arg(long = "scenario", required = true)]
        scenarios: Vec<String>,
        #[arg(long)]
        target: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Differences between two scenarios (second minus first); a single
    /// scenario is compared with the prior.
    ScenarioCompare {
        #[arg(long)]
        net: String,
        #[arg(long = "scenario", required = true, num_args = 1, action = clap::ArgAction::Append)]
        scenarios: Vec<String>,
        #[arg(long)]
        target: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Fix the target at a desired value and report what it implies.
    GoalSeek {
        #[arg(long)]
        net: String,
        /// `node=value` or `node=state`.
        #[arg(long, value_name = "NODE=VALUE")]
        target: String,
        /// Comma-separated report nodes; defaults to all indicators.
        #[arg(long, value_delimiter = ',')]
        report: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Rank nodes by how far they can move the target mean.
    Sensitivity {
        #[arg(long)]
        net: String,
        #[arg(long)]
        target: Option<String>,
        /// Comma-separated candidates; defaults to all indicators.
        #[arg(long, value_delimiter = ',')]
        candidates: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Serve the HTTP API for one network.
    Serve {
        #[arg(long)]
        net: String,
        #[arg(long)]
        target: Option<String>,
        #[arg(long, default_value_t = api::DEFAULT_PORT)]
        port: u16,
    },
}

/// Exit status and captured output of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn success(stdout: String) -> Self {
        Outcome {
            code: 0,
            stdout,
            stderr: String::new(),
        }
    }
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Directory holding the bundled case files.
pub fn cases_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os(CASES_DIR_VAR) {
        return PathBuf::from(dir);
    }
    let local = PathBuf::from("cases");
    if local.is_dir() {
        return local;
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../cases")
}

/// `name` as given if it exists, else looked up in the cases directory,
/// with `ext` appended when missing.
fn resolve(name: &str, ext: &str) -> CliResult<PathBuf> {
    let direct = PathBuf::from(name);
    if direct.is_file() {
        return Ok(direct);
    }
    let dir = cases_dir();
    for candidate in [dir.join(name), dir.join(format!("{name}.{ext}"))] {
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    Err(Failure::Usage(format!("cannot find `{name}`")))
}

fn read(name: &str, ext: &str) -> CliResult<String> {
    let path = resolve(name, ext)?;
    fs::read_to_string(&path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_net(name: &str) -> CliResult<CompiledNetwork> {
    Ok(compile(&BayesianNetwork::parse(&read(name, "net")?)?)?)
}

fn load_scenario(name: &str) -> CliResult<Scenario> {
    Ok(Scenario::parse(&read(name, "scen")?)?)
}

fn parse_assignment(text: &str) -> CliResult<(String, Observation)> {
    let (node, value) = text
        .split_once('=')
        .ok_or_else(|| Failure::Usage(format!("expected NODE=VALUE, got `{text}`")))?;
    let obs = match value.trim().parse::<f64>() {
        Ok(v) => Observation::Value(v),
        Err(_) => Observation::State(value.trim().to_string()),
    };
    Ok((node.trim().to_string(), obs))
}

fn target_or_default(net: &CompiledNetwork, target: Option<String>) -> CliResult<String> {
    target
        .or_else(|| default_target(net))
        .ok_or_else(|| Failure::Usage("--target is required for this network".into()))
}

fn render<T: serde::Serialize>(format: OutputFormat, value: &T, text: impl FnOnce() -> String) -> String {
    match format {
        OutputFormat::Machine => machine(value),
        OutputFormat::Text => text(),
    }
}

/// Runs one invocation; `args` excludes the program name.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv = std::iter::once(OsString::from("qualnet")).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome::success(text)
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    match execute(cli.command) {
        Ok(out) => out,
        Err(Failure::Usage(msg)) => Outcome {
            code: 2,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        },
        Err(Failure::Domain(msg)) => Outcome {
            code: 1,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        },
    }
}

fn emit(out: Option<&Path>, text: String) -> CliResult<Outcome> {
    match out {
        Some(path) => {
            fs::write(path, &text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
            Ok(Outcome::success(String::new()))
        }
        None => Ok(Outcome::success(text)),
    }
}

fn execute(command: Command) -> CliResult<Outcome> {
    match command {
        Command::Validate { path, model, common } => {
            let name = path.or(model).expect("clap requires one");
            let m = parse_model(&read(&name, "model")?)?;
            let report = validate(&m);
            let text = render(common.format.into(), &report, || report::validation_text(&report));
            let mut outcome = emit(common.out.as_deref(), text)?;
            if !report.is_valid() {
                outcome.code = 1;
            }
            Ok(outcome)
        }
        Command::Matrix { model, out } => {
            let m = parse_model(&read(&model, "model")?)?;
            emit(out.as_deref(), export_matrix(&m)?.to_csv()?)
        }
        Command::Derive { model, goal, select, out } => {
            let m = parse_model(&read(&model, "model")?)?;
            let mut doc = GoalDocument::parse(&read(&goal, "goal")?)?;
            if let Some(select) = select {
                let selection: Selection = serde_json::from_str(&read(&select, "select")?).map_err(Error::from)?;
                doc.indicators.retain(|i| {
                    selection.included_facts.contains(&i.attached_to)
                        || selection.included_activities.contains(&i.attached_to)
                });
                doc.selection = selection;
            }
            emit(out.as_deref(), derive_network(&m, &doc)?.to_text())
        }
        Command::Infer {
            net,
            scenario,
            observe,
            target,
            common,
        } => {
            let net = load_net(&net)?;
            let mut evidence = match scenario {
                Some(s) => load_scenario(&s)?.observations,
                None => Evidence::new(),
            };
            for o in &observe {
                let (node, value) = parse_assignment(o)?;
                evidence.insert(node, value);
            }
            let posterior = infer(&net, &evidence)?;
            let target = target.or_else(|| default_target(&net));
            let text = || {
                let mut text = String::new();
                if let Some(t) = target.as_deref().and_then(|t| posterior.node(t).ok()) {
                    text += &report::node_text(&net, t);
                    text.push('\n');
                }
                text + &report::posterior_text(&net, &posterior)
            };
            emit(common.out.as_deref(), render(common.format.into(), &posterior, text))
        }
        Command::ScenarioRun {
            net,
            scenarios,
            target,
            common,
        } => {
            let net = load_net(&net)?;
            let target = target_or_default(&net, target)?;
            let results = scenarios
                .iter()
                .map(|s| Ok(run_scenario(&net, &load_scenario(s)?, &target)?))
                .collect::<CliResult<Vec<_>>>()?;
            let text = || {
                if results.len() == 1 {
                    report::scenario_text(&net, &results[0])
                } else {
                    BatchTable::new(&net, &results, &[]).to_text()
                }
            };
            emit(common.out.as_deref(), render(common.format.into(), &results, text))
        }
        Command::ScenarioCompare {
            net,
            scenarios,
            target,
            common,
        } => {
            let net = load_net(&net)?;
            let target = target_or_default(&net, target)?;
            let mut loaded = scenarios.iter().map(|s| load_scenario(s)).collect::<CliResult<Vec<_>>>()?;
            match loaded.len() {
                1 => loaded.insert(0, Scenario::new("prior", Evidence::new())),
                2 => {}
                _ => return Err(Failure::Usage("give one or two --scenario".into())),
            }
            let a = run_scenario(&net, &loaded[0], &target)?;
            let b = run_scenario(&net, &loaded[1], &target)?;
            let c = compare(&a, &b)?;
            emit(
                common.out.as_deref(),
                render(common.format.into(), &c, || report::comparison_text(&c)),
            )
        }
        Command::GoalSeek {
            net,
            target,
            report: nodes,
            common,
        } => {
            let net = load_net(&net)?;
            let (target, desired) = parse_assignment(&target)?;
            let nodes = if nodes.is_empty() {
                default_report_nodes(&net, &target)
            } else {
                nodes
            };
            let r = goal_seek(&net, &target, &desired, &nodes)?;
            emit(
                common.out.as_deref(),
                render(common.format.into(), &r, || report::goal_seek_text(&r)),
            )
        }
        Command::Sensitivity {
            net,
            target,
            candidates,
            common,
        } => {
            let net = load_net(&net)?;
            let target = target_or_default(&net, target)?;
            let candidates = if candidates.is_empty() {
                default_report_nodes(&net, &target)
            } else {
                candidates
            };
            let r = sensitivity(&net, &target, &candidates)?;
            emit(
                common.out.as_deref(),
                render(common.format.into(), &r, || report::sensitivity_text(&r)),
            )
        }
        Command::Serve { net, target, port } => {
            let net = load_net(&net)?;
            if let Some(t) = &target {
                net.index_of(t)?;
            }
            let service = ApiService::new(net, target);
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Domain(e.to_string()))?;
            runtime
                .block_on(api::serve(service, port))
                .map_err(|e| Failure::Domain(e.to_string()))?;
            Ok(Outcome::success(String::new()))
        }
    }
}
