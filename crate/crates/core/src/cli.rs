//! Command-line interface. Exit codes: 0 success, 1 usage or config error,
//! 2 runtime failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::backend::RemoteConfig;
use crate::env::{generate_catalog, generate_goals, load_catalog, save_goals, Catalog};
use crate::eval::{
    aggregate, build_backend, read_trajectory_log, run_batch, write_report, write_trajectory_log, AggregateReport,
    BackendConfig, Batch, EvalError, PolicyKind, RunConfig, DEFAULT_BUCKET_EDGES, TRAJECTORY_FILE,
};
use crate::orchestrator::{
    run_episode_observed, Episode, LlmPolicy, Mode, OraclePolicy, Policy, StepRecord, Summarizer,
};
use crate::prompting::TemplateSet;

#[derive(Debug, Parser)]
#[command(name = "ashprompt", version, about = "Summarize-then-act prompting on a deterministic shop simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a catalog file.
    GenCatalog {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate solvable goals for a catalog.
    GenGoals {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one episode and print each step as it happens.
    Run {
        #[command(flatten)]
        run: RunArgs,
        /// Index of the goal to run.
        #[arg(long, default_value_t = 0)]
        goal_index: usize,
        /// Append the finished episode to this trajectory log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run every goal and write the trajectory log and reports.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the episodes of a trajectory log against a transcript and
    /// check they reproduce.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long, conflicts_with = "catalog_size")]
        catalog: Option<PathBuf>,
        #[arg(long)]
        catalog_seed: Option<u64>,
        #[arg(long)]
        catalog_size: Option<usize>,
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show one logged episode with raw and summarized observations side by side.
    Inspect {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        episode: usize,
        #[arg(long, default_value_t = 120)]
        width: usize,
    },
    /// Re-aggregate an existing trajectory log.
    Report {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, value_delimiter = ',')]
        buckets: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Config file plus overrides; flags win over file values.
#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, conflicts_with = "catalog_size")]
    catalog: Option<PathBuf>,
    #[arg(long)]
    catalog_seed: Option<u64>,
    #[arg(long)]
    catalog_size: Option<usize>,
    #[arg(long, conflicts_with = "goal_count")]
    goals: Option<PathBuf>,
    #[arg(long)]
    goal_seed: Option<u64>,
    #[arg(long)]
    goal_count: Option<usize>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long, value_parser = parse_policy)]
    policy: Option<PolicyKind>,
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    max_invalid_streak: Option<usize>,
    /// Answer every completion from this transcript.
    #[arg(long, conflicts_with = "record")]
    replay: Option<PathBuf>,
    /// Call the remote backend and record completions to this transcript.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Remote completions endpoint base URL.
    #[arg(long)]
    remote_url: Option<String>,
}

fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    match s {
        "llm" => Ok(PolicyKind::Llm),
        "oracle" => Ok(PolicyKind::Oracle),
        _ => Err(format!("unknown policy {s:?} (expected llm or oracle)")),
    }
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn config<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

fn runtime<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Runs the CLI over `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(Failure::Config(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
        Err(Failure::Runtime(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Command::GenCatalog { seed, size, out: path } => {
            if size == 0 {
                return Err(Failure::Config("size must be >= 1".into()));
            }
            let c = generate_catalog(seed, size);
            c.save(&path).map_err(runtime)?;
            writeln!(out, "wrote {} products to {}", c.len(), path.display()).map_err(runtime)
        }
        Command::GenGoals { catalog, seed, count, out: path } => {
            let c = load_catalog(&catalog).map_err(config)?;
            let goals = generate_goals(&c, seed, count).map_err(config)?;
            save_goals(&goals, &path).map_err(runtime)?;
            writeln!(out, "wrote {} goals to {}", goals.len(), path.display()).map_err(runtime)
        }
        Command::Run { run, goal_index, log } => cmd_run(&run, goal_index, log.as_deref(), out),
        Command::Eval { run, workers, out: dir } => {
            let mut cfg = run.resolve()?;
            if let Some(w) = workers {
                cfg.worker_count = w;
            }
            if let Some(d) = dir {
                cfg.output_dir = d;
            }
            let (_, report) = run_batch(&cfg)?;
            print_report(out, &report)?;
            writeln!(out, "wrote {}", cfg.output_dir.display()).map_err(runtime)
        }
        Command::Replay { log, transcript, catalog, catalog_seed, catalog_size, templates, workers, out: dir } => {
            let catalog = match (catalog, catalog_size) {
                (Some(p), _) => load_catalog(&p).map_err(config)?,
                (None, Some(n)) if n > 0 => generate_catalog(catalog_seed.unwrap_or(0), n),
                _ => return Err(Failure::Config("replay needs --catalog or --catalog-size".into())),
            };
            cmd_replay(&log, &transcript, catalog, templates.as_deref(), workers, dir.as_deref(), out)
        }
        Command::Inspect { log, episode, width } => {
            let eps = read_trajectory_log(&log)?;
            let ep = eps
                .iter()
                .find(|e| e.goal_id == episode)
                .ok_or_else(|| Failure::Config(format!("no episode {episode} in {}", log.display())))?;
            out.write_all(render_inspect(ep, width).as_bytes()).map_err(runtime)
        }
        Command::Report { log, buckets, out: dir } => {
            let eps = read_trajectory_log(&log)?;
            let edges = buckets.unwrap_or_else(|| DEFAULT_BUCKET_EDGES.to_vec());
            let report = aggregate(&eps, &edges)?;
            if let Some(d) = dir {
                write_report(&report, &eps, &d)?;
            }
            print_report(out, &report)
        }
    }
}

fn print_report(out: &mut dyn Write, report: &AggregateReport) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(report).map_err(runtime)?;
    writeln!(out, "{json}").map_err(runtime)
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(p) = &self.catalog {
            cfg.catalog.path = Some(p.clone());
            cfg.catalog.size = None;
        }
        if let Some(n) = self.catalog_size {
            cfg.catalog.size = Some(n);
            cfg.catalog.path = None;
        }
        if self.catalog_seed.is_some() {
            cfg.catalog.seed = self.catalog_seed;
        }
        if let Some(p) = &self.goals {
            cfg.goals.path = Some(p.clone());
            cfg.goals.count = None;
        }
        if let Some(n) = self.goal_count {
            cfg.goals.count = Some(n);
            cfg.goals.path = None;
        }
        if self.goal_seed.is_some() {
            cfg.goals.seed = self.goal_seed;
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(p) = self.policy {
            cfg.policy = p;
        }
        if let Some(t) = &self.templates {
            cfg.templates = Some(t.clone());
        }
        if let Some(n) = self.max_steps {
            cfg.limits.max_steps = n;
        }
        if let Some(n) = self.max_invalid_streak {
            cfg.limits.max_invalid_streak = n;
        }
        let mut remote = match &cfg.backend {
            Some(BackendConfig::Remote { remote } | BackendConfig::Record { remote, .. }) => remote.clone(),
            _ => RemoteConfig::default(),
        };
        if let Some(url) = &self.remote_url {
            remote.base_url = url.clone();
        }
        if let Some(t) = &self.replay {
            cfg.backend = Some(BackendConfig::Replay { transcript: t.clone() });
        } else if let Some(t) = &self.record {
            cfg.backend = Some(BackendConfig::Record { transcript: t.clone(), remote });
        } else if self.remote_url.is_some() {
            cfg.backend = Some(BackendConfig::Remote { remote });
        }
        Ok(cfg)
    }
}

fn cmd_run(args: &RunArgs, goal_index: usize, log: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    let cfg = args.resolve()?;
    let batch = Batch::from_config(&cfg)?;
    let goal = batch.goals.get(goal_index).ok_or_else(|| {
        Failure::Config(format!("goal index {goal_index} out of range ({} goals)", batch.goals.len()))
    })?;
    writeln!(out, "Goal {goal_index}: {}", goal.instruction_text).map_err(runtime)?;
    writeln!(out, "Mode: {}\n", batch.mode).map_err(runtime)?;

    let mut policy: Box<dyn Policy> = match (batch.policy, &batch.backend) {
        (PolicyKind::Oracle, _) => Box::new(OraclePolicy::new(&batch.catalog, goal)),
        (PolicyKind::Llm, Some(b)) => {
            Box::new(LlmPolicy::new(batch.mode, batch.templates.clone(), b.clone(), batch.params.clone()))
        }
        (PolicyKind::Llm, None) => return Err(Failure::Config("llm policy needs a backend".into())),
    };
    let mut summarizer = batch
        .backend
        .as_ref()
        .filter(|_| batch.mode.summarizes())
        .map(|b| Summarizer::new(batch.templates.clone(), b.clone(), batch.params.clone()));
    let mut write_failed = None;
    let mut trace = |s: &StepRecord| {
        if let Err(e) = out.write_all(render_step(s).as_bytes()).and_then(|_| out.flush()) {
            write_failed.get_or_insert(e);
        }
    };
    let mut ep = run_episode_observed(
        &batch.catalog,
        goal,
        batch.mode,
        policy.as_mut(),
        summarizer.as_mut(),
        &batch.limits,
        &mut trace,
    );
    if let Some(e) = write_failed {
        return Err(runtime(e));
    }
    ep.goal_id = goal_index;
    if let Some(f) = &ep.final_observation {
        writeln!(out, "Final observation:\n{}\n", f.trim_end()).map_err(runtime)?;
    }
    writeln!(out, "Termination: {}  Score: {}  Steps: {}", ep.termination, ep.score, ep.step_count).map_err(runtime)?;
    if let Some(e) = &ep.error {
        writeln!(out, "Error: {e}").map_err(runtime)?;
    }
    if let Some(p) = log {
        crate::eval::append_trajectory_log(std::slice::from_ref(&ep), p)?;
    }
    Ok(())
}

fn render_step(s: &StepRecord) -> String {
    let mut text = format!("--- step {} ---\nObservation:\n{}\n", s.index + 1, s.raw_observation.trim_end());
    if let Some(sum) = &s.summarized_observation {
        text.push_str(&format!("Summary:\n{}\n", sum.trim_end()));
    }
    text.push_str(&format!("Action: {}{}\n\n", s.action, if s.valid { "" } else { "  (invalid)" }));
    text
}

fn cmd_replay(
    log: &Path,
    transcript: &Path,
    catalog: Catalog,
    templates: Option<&Path>,
    workers: usize,
    dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let original = read_trajectory_log(log)?;
    let Some(first) = original.first() else {
        return Err(Failure::Config(format!("{} holds no episodes", log.display())));
    };
    if original.iter().any(|e| e.mode != first.mode || e.limits != first.limits) {
        return Err(Failure::Config("replay needs a log with a single mode and limits".into()));
    }
    if workers == 0 {
        return Err(Failure::Config("workers must be >= 1".into()));
    }
    let templates = match templates {
        Some(d) => TemplateSet::load_dir(d).map_err(config)?,
        None => TemplateSet::builtin(),
    };
    let backend = build_backend(&BackendConfig::Replay { transcript: transcript.to_path_buf() })?;
    let batch = Batch {
        catalog: Arc::new(catalog),
        goals: original.iter().map(|e| e.goal.clone()).collect(),
        mode: first.mode,
        policy: PolicyKind::Llm,
        limits: first.limits,
        templates: Arc::new(templates),
        backend: Some(backend),
        params: Default::default(),
        worker_count: workers,
    };
    let mut rerun = batch.run();
    for (new, old) in rerun.iter_mut().zip(&original) {
        new.goal_id = old.goal_id;
    }
    let same = rerun.iter().zip(&original).filter(|(a, b)| a == b).count();
    if let Some(d) = dir {
        std::fs::create_dir_all(d).map_err(runtime)?;
        write_trajectory_log(&rerun, &d.join(TRAJECTORY_FILE))?;
        let report = aggregate(&rerun, &DEFAULT_BUCKET_EDGES)?;
        write_report(&report, &rerun, d)?;
    }
    writeln!(out, "{same}/{} episodes reproduced", original.len()).map_err(runtime)?;
    if same != original.len() {
        return Err(Failure::Runtime("replay diverged from the log".into()));
    }
    Ok(())
}

/// Splits `text` into lines of at most `width` characters.
fn wrap(text: &str, width: usize) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let chars: Vec<char> = line.chars().collect();
        if chars.is_empty() {
            out.push(String::new());
        }
        for chunk in chars.chunks(width.max(1)) {
            out.push(chunk.iter().collect());
        }
    }
    out
}

/// Two-column rendering: raw observation left, summary right. No line is
/// wider than `width` (or 43 characters, whichever is larger).
pub fn render_inspect(ep: &Episode, width: usize) -> String {
    let col = (width.saturating_sub(3) / 2).max(20);
    let full = 2 * col + 3;
    let mut s = String::new();
    let para = |s: &mut String, text: &str| {
        for line in wrap(text, full) {
            s.push_str(&line);
            s.push('\n');
        }
    };
    para(
        &mut s,
        &format!(
            "Episode {}  mode={}  termination={}  score={}  steps={}",
            ep.goal_id, ep.mode, ep.termination, ep.score, ep.step_count
        ),
    );
    para(&mut s, &format!("Instruction: {}", ep.goal.instruction_text));
    if let Some(e) = &ep.error {
        para(&mut s, &format!("Error: {e}"));
    }
    for step in &ep.steps {
        s.push('\n');
        para(
            &mut s,
            &format!("== step {}: {}{}", step.index + 1, step.action, if step.valid { "" } else { "  (invalid)" }),
        );
        s.push_str(&format!("{:<col$} | {}\n", "RAW OBSERVATION", "SUMMARIZED OBSERVATION"));
        s.push_str(&format!("{}-+-{}\n", "-".repeat(col), "-".repeat(col)));
        let left = wrap(&step.raw_observation, col);
        let right = match &step.summarized_observation {
            Some(t) => wrap(t, col),
            None => vec!["(not summarized)".to_string()],
        };
        for i in 0..left.len().max(right.len()) {
            let l = left.get(i).map_or("", String::as_str);
            let r = right.get(i).map_or("", String::as_str);
            s.push_str(format!("{l:<col$} | {r}").trim_end());
            s.push('\n');
        }
    }
    if let Some(f) = &ep.final_observation {
        s.push_str("\n== final observation\n");
        para(&mut s, f.trim_end());
    }
    s
}
