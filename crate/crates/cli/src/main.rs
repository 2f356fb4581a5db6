//! `geoagent`: validate corpora, run sessions and evaluate policies.
//!
//! Exit codes: 0 success, 1 validation rejections present, 2 usage or config error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geoagent_core::corpus::{self, InputKind};
use geoagent_core::evaluator::{evaluate_e2e, evaluate_stepwise, EvalConfig, EvalReport, Judge, RemoteJudge};
use geoagent_core::orchestrator::prompt::render_observation;
use geoagent_core::registry::load_category_map;
use geoagent_core::replay::corpus_gate;
use geoagent_core::{
    run, AnswerKind, Domain, FixtureStore, Modality, Policy, PolicyError, PolicyHandle, RemoteConfig, SessionConfig,
    TaskInput, TaskInstance, ToolRegistry, Toolkit, TrajectoryRecord,
};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "geoagent", version, about = "Tool-augmented geospatial agent toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay every record of a corpus and report the ones that fail the gate.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Score a policy against a gold corpus.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = JudgeKind::None)]
        judge: JudgeKind,
        /// Judge endpoint; defaults to `--endpoint`.
        #[arg(long)]
        judge_endpoint: Option<String>,
        #[arg(long)]
        judge_model: Option<String>,
        /// Prompt template with {{question}}, {{reference}} and {{prediction}} placeholders.
        #[arg(long)]
        judge_template: Option<PathBuf>,
        /// Count each tool at most once per category when computing F1.
        #[arg(long)]
        f1_set_mode: bool,
    },
    /// Run one live session and print its transcript.
    Run {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Take the task (and, for the scripted policy, the trajectory) from this corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, conflicts_with = "query")]
        task: Option<String>,
        #[arg(long)]
        query: Option<String>,
        /// Input as PATH or PATH@GSD (meters per pixel); `.gpkg`/`.tif` directories are geo bundles.
        #[arg(long = "input")]
        inputs: Vec<String>,
        #[arg(long, default_value = "urban")]
        domain: String,
        #[arg(long, default_value = "rgb")]
        modality: String,
        #[arg(long, default_value = "text")]
        answer_kind: String,
    },
    /// Print corpus statistics.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// List the registered tools.
    Tools {
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(long)]
        category_map: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Tool registry JSON; the bundled registry when omitted.
    #[arg(long)]
    registry: Option<PathBuf>,
    #[arg(long)]
    category_map: Option<PathBuf>,
    #[arg(long, default_value = "fixtures")]
    fixtures: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    max_steps: usize,
}

#[derive(Args)]
struct PolicyArgs {
    #[arg(long, value_enum, default_value_t = PolicyKind::Scripted)]
    policy: PolicyKind,
    #[arg(long, default_value = "http://127.0.0.1:8000/v1")]
    endpoint: String,
    #[arg(long, default_value = "default")]
    model: String,
    /// Name of the environment variable holding the API key.
    #[arg(long, default_value = "GEOAGENT_API_KEY")]
    api_key_env: String,
    #[arg(long, default_value_t = 2)]
    max_retries: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Step,
    E2e,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyKind {
    Scripted,
    Rule,
    Remote,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum JudgeKind {
    None,
    Remote,
}

/// Usage or configuration problem; maps to exit code 2.
struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

type CmdResult = Result<ExitCode, Usage>;

fn usage(msg: impl Into<String>) -> Usage {
    Usage(msg.into())
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), Usage> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn registry(path: Option<&Path>, category_map: Option<&Path>) -> Result<ToolRegistry, Usage> {
    let reg = match path {
        Some(p) => ToolRegistry::load(p).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => ToolRegistry::default_registry(),
    };
    match category_map {
        Some(p) => {
            let map = load_category_map(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            Ok(reg.with_category_overrides(&map)?)
        }
        None => Ok(reg),
    }
}

fn toolkit(common: &Common, registry: ToolRegistry) -> Result<Toolkit, Usage> {
    if !common.fixtures.is_dir() {
        return Err(usage(format!("fixtures directory {} not found", common.fixtures.display())));
    }
    let fixtures = FixtureStore::load(&common.fixtures)?;
    Ok(Toolkit::new(registry, fixtures, &common.out)?)
}

fn session(common: &Common) -> Result<SessionConfig, Usage> {
    if common.max_steps == 0 {
        return Err(usage("--max-steps must be at least 1"));
    }
    Ok(SessionConfig {
        max_steps: common.max_steps,
        ..SessionConfig::default()
    })
}

fn load(path: &Path) -> Result<Vec<TrajectoryRecord>, Usage> {
    Ok(corpus::load_corpus(path)?)
}

fn remote_config(p: &PolicyArgs, endpoint: &str, model: &str) -> Result<RemoteConfig, Usage> {
    let c = RemoteConfig {
        base_url: endpoint.to_owned(),
        model: model.to_owned(),
        api_key_env: p.api_key_env.clone(),
        max_retries: p.max_retries,
        ..RemoteConfig::default()
    };
    c.check()?;
    Ok(c)
}

fn policy_handle(p: &PolicyArgs) -> Result<PolicyHandle, Usage> {
    Ok(match p.policy {
        PolicyKind::Scripted => PolicyHandle::Scripted,
        PolicyKind::Rule => PolicyHandle::RuleBased,
        PolicyKind::Remote => PolicyHandle::Remote(remote_config(p, &p.endpoint, &p.model)?),
    })
}

fn policy_label(p: &PolicyArgs) -> String {
    match p.policy {
        PolicyKind::Scripted => "scripted".into(),
        PolicyKind::Rule => "rule".into(),
        PolicyKind::Remote => format!("remote:{}:{}", p.endpoint, p.model),
    }
}

fn cmd_validate(common: &Common, corpus_path: &Path) -> CmdResult {
    let reg = registry(common.registry.as_deref(), common.category_map.as_deref())?;
    let records = load(corpus_path)?;
    for w in corpus::unknown_tool_warnings(&records, &reg) {
        log::warn!("{w}");
    }
    let tk = toolkit(common, reg)?;
    let gate = corpus_gate(&records, &tk);
    let accepted: Vec<&str> = gate.accepted.iter().map(|r| r.id()).collect();
    let report = json!({
        "corpus": corpus_path.display().to_string(),
        "accepted": accepted,
        "rejected": gate.rejected,
    });
    let path = common.out.join("validation.json");
    write_atomic(&path, &(geoagent_core::canonical::canonical_value(&report) + "\n"))?;
    println!("accepted {} of {}", gate.accepted.len(), records.len());
    for r in &gate.rejected {
        let first = r.report.failures.first();
        println!(
            "rejected {}: {}",
            r.id,
            first.map(|f| format!("step {} {}: {}", f.step, f.code, f.detail)).unwrap_or_default()
        );
    }
    println!("report written to {}", path.display());
    Ok(if gate.rejected.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    common: &Common,
    policy: &PolicyArgs,
    corpus_path: &Path,
    mode: Mode,
    workers: usize,
    judge: JudgeKind,
    judge_endpoint: Option<&str>,
    judge_model: Option<&str>,
    judge_template: Option<&Path>,
    f1_set_mode: bool,
) -> CmdResult {
    if workers == 0 {
        return Err(usage("--workers must be at least 1"));
    }
    let reg = registry(common.registry.as_deref(), common.category_map.as_deref())?;
    let golds = load(corpus_path)?;
    let handle = policy_handle(policy)?;
    let mut config = EvalConfig::new(&reg);
    config.session = session(common)?;
    config.workers = workers;
    config.f1_set_mode = f1_set_mode;
    config.policy_label = policy_label(policy);
    if judge == JudgeKind::Remote {
        let template = judge_template
            .map(|p| std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display()))))
            .transpose()?;
        let rc = remote_config(
            policy,
            judge_endpoint.unwrap_or(&policy.endpoint),
            judge_model.unwrap_or(&policy.model),
        )?;
        config.judge = Some(Arc::new(RemoteJudge::new(rc, template)?) as Arc<dyn Judge>);
    }
    let factory = |g: &TrajectoryRecord| -> Result<Box<dyn Policy>, PolicyError> { handle.instantiate(Some(g)) };

    let (report, csv_name, csv): (EvalReport, &str, fn(&EvalReport) -> _) = match mode {
        Mode::Step => (evaluate_stepwise(&factory, &golds, &reg, &config)?, "table1.csv", EvalReport::table1_csv),
        Mode::E2e => {
            let tk = toolkit(common, reg)?;
            (evaluate_e2e(&factory, &golds, &tk, &config)?, "table2.csv", EvalReport::table2_csv)
        }
    };
    let stem = match mode {
        Mode::Step => "report_step.json",
        Mode::E2e => "report_e2e.json",
    };
    let table = csv(&report)?;
    write_atomic(&common.out.join(stem), &(report.to_canonical_json() + "\n"))?;
    write_atomic(&common.out.join(csv_name), &table)?;
    print!("{table}");
    println!(
        "tasks {}, policy failures {}, errors {}",
        report.n_tasks,
        report.policy_failures.len(),
        report.errors.total()
    );
    println!("reports written to {}", common.out.display());
    Ok(ExitCode::SUCCESS)
}

fn parse_enum<T: serde::de::DeserializeOwned>(flag: &str, value: &str) -> Result<T, Usage> {
    serde_json::from_value(Value::String(value.to_owned())).map_err(|_| usage(format!("invalid --{flag} `{value}`")))
}

fn parse_input(spec: &str) -> Result<TaskInput, Usage> {
    let (path, gsd) = match spec.rsplit_once('@') {
        Some((p, g)) => {
            let g: f64 = g.parse().map_err(|_| usage(format!("invalid GSD in `{spec}`")))?;
            if !(g > 0.0 && g.is_finite()) {
                return Err(usage(format!("GSD must be positive in `{spec}`")));
            }
            (p, Some(g))
        }
        None => (spec, None),
    };
    if path.trim().is_empty() {
        return Err(usage("empty input path"));
    }
    let geo = path.ends_with(".gpkg") || path.ends_with(".tif");
    Ok(TaskInput {
        kind: if geo { InputKind::GeoBundle } else { InputKind::Image },
        path: path.to_owned(),
        gsd_m_per_px: gsd,
        crs: geo.then(|| "EPSG:4326".to_owned()),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    common: &Common,
    policy: &PolicyArgs,
    corpus_path: Option<&Path>,
    task_id: Option<&str>,
    query: Option<&str>,
    inputs: &[String],
    domain: &str,
    modality: &str,
    answer_kind: &str,
) -> CmdResult {
    let reg = registry(common.registry.as_deref(), common.category_map.as_deref())?;
    let config = session(common)?;
    let handle = policy_handle(policy)?;

    let gold = match task_id {
        Some(id) => {
            let path = corpus_path.ok_or_else(|| usage("--task needs --corpus"))?;
            let found = load(path)?.into_iter().find(|r| r.id() == id);
            Some(found.ok_or_else(|| usage(format!("task `{id}` not in {}", path.display())))?)
        }
        None => None,
    };
    let (task, kind) = match &gold {
        Some(g) => (g.task.clone(), g.answer_kind),
        None => {
            let q = query.map(str::trim).unwrap_or_default();
            if q.is_empty() {
                return Err(usage("a non-empty --query or a --task is required"));
            }
            let task = TaskInstance {
                id: "cli_run".into(),
                domain: parse_enum::<Domain>("domain", domain)?,
                modality: parse_enum::<Modality>("modality", modality)?,
                query: q.to_owned(),
                inputs: inputs.iter().map(|s| parse_input(s)).collect::<Result<_, _>>()?,
            };
            (task, parse_enum::<AnswerKind>("answer-kind", answer_kind)?)
        }
    };
    let mut p = handle.instantiate(gold.as_ref())?;
    let tk = toolkit(common, reg)?;
    let result = run(p.as_mut(), &task, kind, &tk, &config)?;

    for (i, step) in result.record.steps.iter().enumerate() {
        println!("[{}] Thought: {}", i + 1, step.thought);
        if let Some(call) = &step.action {
            println!("    Action: {} {}", call.tool, geoagent_core::canonical::canonical_value(&call.args));
        }
        if let Some(obs) = &step.observation {
            println!("    {}", render_observation(obs));
        }
    }
    let outcome = serde_json::to_value(result.outcome)?;
    println!("outcome: {}", outcome["status"].as_str().unwrap_or("unknown"));
    println!("final answer: {}", result.record.final_answer);

    let out = json!({ "record": result.record, "outcome": result.outcome, "log": result.log });
    let path = common.out.join(format!("trajectory_{}.json", task.id));
    write_atomic(&path, &(geoagent_core::canonical::canonical_value(&out) + "\n"))?;
    println!("trajectory written to {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_stats(corpus_path: &Path) -> CmdResult {
    let records = load(corpus_path)?;
    let s = corpus::stats(&records);
    println!("{}", serde_json::to_string_pretty(&s)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_tools(path: Option<&Path>, category_map: Option<&Path>) -> CmdResult {
    let reg = registry(path, category_map)?;
    let mut out = std::io::stdout().lock();
    let mut rows = vec![format!("{:<28} {:<12} parameters", "tool", "category")];
    for d in reg.iter() {
        let params: Vec<String> = d
            .params
            .iter()
            .map(|p| format!("{}{}: {}", p.name, if p.required { "" } else { "?" }, p.kind))
            .collect();
        rows.push(format!("{:<28} {:<12} {}", d.name, d.category.as_str(), params.join(", ")));
    }
    for row in rows {
        // A closed pipe (e.g. `| head`) is not an error.
        if writeln!(out, "{row}").is_err() {
            break;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { common, corpus } => cmd_validate(common, corpus),
        Command::Eval {
            common,
            policy,
            corpus,
            mode,
            workers,
            judge,
            judge_endpoint,
            judge_model,
            judge_template,
            f1_set_mode,
        } => cmd_eval(
            common,
            policy,
            corpus,
            *mode,
            *workers,
            *judge,
            judge_endpoint.as_deref(),
            judge_model.as_deref(),
            judge_template.as_deref(),
            *f1_set_mode,
        ),
        Command::Run {
            common,
            policy,
            corpus,
            task,
            query,
            inputs,
            domain,
            modality,
            answer_kind,
        } => cmd_run(
            common,
            policy,
            corpus.as_deref(),
            task.as_deref(),
            query.as_deref(),
            inputs,
            domain,
            modality,
            answer_kind,
        ),
        Command::Stats { corpus } => cmd_stats(corpus),
        Command::Tools { registry, category_map } => cmd_tools(registry.as_deref(), category_map.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
