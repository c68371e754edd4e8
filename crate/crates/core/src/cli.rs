//! Command-line front end.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::bench::{run_bench, RunSpec};
use crate::llm::{
    generate_rules, Gateway, GeneratedRules, LlmConfig, MockFixture, MockLlm, RuleGenError,
};
use crate::mazenamo::{author_domain, domain_text, generate, render, Difficulty, GridSpec};
use crate::pddl::{parse_domain, parse_problem, Domain, Problem};
use crate::pipeline::{Mode, Pipeline, PipelineConfig, Policy};
use crate::planner::{parse_plan, validate};
use crate::rules::{
    load_complementary, load_relaxation, manual, parse_complementary, parse_relaxation,
    validate_rules, RuleKind,
};
use crate::scoring::{
    baseline_score, BaselineScorer, LlmScorer, ObjectScorer, Provenance, ScoreMap,
};

#[derive(Debug, Parser)]
#[command(
    name = "pruneplan",
    version,
    about = "Object-pruning planner, rule tools and MazeNamo benchmarks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ask a model (live or scripted) for relaxation and complementary rules.
    GenRules(GenRulesArgs),
    /// Check a rule file against a domain's predicates.
    ValidateRules(ValidateRulesArgs),
    /// Generate MazeNamo problem files with sidecar metadata.
    GenProblems(GenProblemsArgs),
    /// Solve one problem with the chosen mode.
    Plan(PlanArgs),
    /// Run a benchmark sweep described by a TOML run spec.
    Bench(BenchArgs),
    /// Draw a problem, optionally stepping through a plan.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct LlmArgs {
    /// Scripted replies (JSON fixture) instead of a model server.
    #[arg(long)]
    pub mock: Option<PathBuf>,
    /// Server URL; defaults to $LLM_ENDPOINT or http://localhost:11434.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Model name; defaults to $LLM_MODEL or gemma3:12b.
    #[arg(long)]
    pub model: Option<String>,
    /// Append every call as a JSON line to this file.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

impl LlmArgs {
    fn gateway(&self) -> Result<Gateway, String> {
        let mut config = LlmConfig::from_env();
        if let Some(e) = &self.endpoint {
            config.endpoint = e.clone();
        }
        if let Some(m) = &self.model {
            config.model = m.clone();
        }
        let gw = match &self.mock {
            Some(p) => {
                let f = MockFixture::load(p).map_err(|e| format!("{}: {e}", p.display()))?;
                Gateway::new(config, Arc::new(MockLlm::new(f)))
            }
            None => Gateway::http(config),
        };
        match &self.transcript {
            Some(p) => gw
                .with_transcript_file(p)
                .map_err(|e| format!("{}: {e}", p.display())),
            None => Ok(gw),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenRulesArgs {
    /// Domain file; the built-in MazeNamo domain when omitted.
    #[arg(long)]
    pub domain: Option<PathBuf>,
    /// Where relaxation.json, complementary.json and transcript.json go.
    #[arg(long, default_value = "rules")]
    pub out_dir: PathBuf,
    /// Attempts per rule type.
    #[arg(long, default_value_t = 3)]
    pub attempts: u32,
    #[command(flatten)]
    pub llm: LlmArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Relaxation,
    Complementary,
}

#[derive(Debug, Args)]
pub struct ValidateRulesArgs {
    /// Rule file (JSON).
    pub file: PathBuf,
    #[arg(long)]
    pub domain: Option<PathBuf>,
    /// Guessed from the entries when omitted.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
}

#[derive(Debug, Args)]
pub struct GenProblemsArgs {
    /// Grid side length.
    #[arg(long)]
    pub size: usize,
    #[arg(long, default_value = "easy")]
    pub difficulty: Difficulty,
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    /// Seed of the first problem; later ones count up.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "problems")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScorerArg {
    Baseline,
    Llm,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Problem file.
    pub problem: PathBuf,
    #[arg(long)]
    pub domain: Option<PathBuf>,
    /// pure-search, scorer-only, manual-rules, llm-rules or full.
    #[arg(long, default_value = "manual-rules")]
    pub mode: Mode,
    /// Seconds.
    #[arg(long, default_value_t = 10.0)]
    pub timeout: f64,
    /// shared-budget, capped-latency-unaware or feasibility-gated.
    #[arg(long, default_value = "feasibility-gated")]
    pub policy: Policy,
    #[arg(long, value_enum, default_value = "baseline")]
    pub scorer: ScorerArg,
    /// Relaxation rules; the manual listing in manual-rules mode when omitted.
    #[arg(long)]
    pub relaxation: Option<PathBuf>,
    /// Complementary rules; the manual listing in manual-rules mode when omitted.
    #[arg(long)]
    pub complementary: Option<PathBuf>,
    /// Turn recovery on or off regardless of mode.
    #[arg(long)]
    pub recovery: Option<bool>,
    /// Write the step trace as JSON lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the plan here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub llm: LlmArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Run spec (TOML).
    pub spec: PathBuf,
    /// Overrides the spec's worker count.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overrides the spec's output directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Problem file.
    pub problem: PathBuf,
    #[arg(long)]
    pub domain: Option<PathBuf>,
    /// Plan file, one `(action args...)` per line.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Score CSV (`object,score,provenance`) to draw as a heat map.
    #[arg(long, conflicts_with = "baseline_scores")]
    pub scores: Option<PathBuf>,
    /// Draw the baseline scores.
    #[arg(long)]
    pub baseline_scores: bool,
}

/// Failure of a subcommand: exit 2 for usage problems, 1 otherwise.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn load_domain(path: Option<&Path>) -> Result<(Domain, String), CliError> {
    match path {
        Some(p) => {
            let text = read(p)?;
            let d = parse_domain(&text)
                .map_err(|e| CliError::Failed(format!("{}: {e}", p.display())))?;
            Ok((d, text))
        }
        None => Ok((author_domain(), domain_text())),
    }
}

fn load_problem(path: &Path, domain: &Domain) -> Result<Problem, CliError> {
    let text = read(path)?;
    parse_problem(&text, domain).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))
}

/// Parses `argv` and runs the subcommand.
pub fn dispatch<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::GenRules(a) => gen_rules(a),
        Command::ValidateRules(a) => validate_rules_cmd(a),
        Command::GenProblems(a) => gen_problems(a),
        Command::Plan(a) => plan(a),
        Command::Bench(a) => bench(a),
        Command::Render(a) => render_cmd(a),
    }
}

fn print_outcome(out: &GeneratedRules) {
    for (name, stats, dedup, filtered) in [
        (
            "relaxation",
            &out.relaxation.stats,
            out.relaxation.after_dedup,
            out.relaxation.after_filter,
        ),
        (
            "complementary",
            &out.complementary.stats,
            out.complementary.after_dedup,
            out.complementary.after_filter,
        ),
    ] {
        for (i, s) in stats.iter().enumerate() {
            println!(
                "{name} attempt {}: format {}, {} rules, {} duplicates, {} typos",
                i + 1,
                if s.format_ok { "ok" } else { "errors" },
                s.rules,
                s.duplicates,
                s.typos
            );
        }
        println!("{name}: {dedup} after dedup, {filtered} after filter");
    }
}

fn gen_rules(a: GenRulesArgs) -> Result<(), CliError> {
    let (_, text) = load_domain(a.domain.as_deref())?;
    let mut gw = a.llm.gateway().map_err(CliError::Usage)?;
    gw.config_mut().max_attempts = a.attempts.max(1);
    let (out, failed) = match generate_rules(&gw, &text) {
        Ok(out) => (out, None),
        Err(RuleGenError::Exhausted {
            partial,
            kinds,
            attempts,
        }) => (
            *partial,
            Some(format!(
                "no well-formed {kinds} rules within {attempts} attempts"
            )),
        ),
        Err(e) => return Err(CliError::Failed(e.to_string())),
    };
    out.write_to(&a.out_dir)?;
    let transcript =
        serde_json::to_string_pretty(&out).map_err(|e| CliError::Failed(e.to_string()))?;
    std::fs::write(a.out_dir.join("transcript.json"), transcript + "\n")?;
    print_outcome(&out);
    println!("wrote {}", a.out_dir.display());
    match failed {
        Some(m) => Err(CliError::Failed(m)),
        None => Ok(()),
    }
}

fn guess_kind(v: &Value) -> RuleKind {
    let complementary = v.as_object().is_some_and(|m| {
        !m.is_empty()
            && m.values()
                .all(|e| e.get("cond").is_some() || e.get("cmpl").is_some())
    });
    if complementary {
        RuleKind::Complementary
    } else {
        RuleKind::Relaxation
    }
}

fn validate_rules_cmd(a: ValidateRulesArgs) -> Result<(), CliError> {
    let (domain, _) = load_domain(a.domain.as_deref())?;
    let text = read(&a.file)?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Failed(format!("{}: invalid JSON: {e}", a.file.display())))?;
    let kind = match a.kind {
        Some(KindArg::Relaxation) => RuleKind::Relaxation,
        Some(KindArg::Complementary) => RuleKind::Complementary,
        None => guess_kind(&value),
    };
    let report = validate_rules(&value, &domain.predicate_set(), kind);
    if report.is_valid() {
        let n = value.as_object().map_or(0, |m| m.len());
        println!("{}: {n} {kind} rules, valid", a.file.display());
        Ok(())
    } else {
        print!("{report}");
        Err(CliError::Failed(format!(
            "{} problems in {kind} rules",
            report.errors.len()
        )))
    }
}

fn gen_problems(a: GenProblemsArgs) -> Result<(), CliError> {
    for i in 0..a.count {
        let spec = GridSpec::square(a.size, a.difficulty, a.seed + i);
        let inst = generate(&spec).map_err(|e| match e {
            crate::mazenamo::GenerateError::Infeasible(_) => CliError::Usage(e.to_string()),
            other => CliError::Failed(other.to_string()),
        })?;
        let (pddl, _) = inst
            .write_to(&a.out_dir)
            .map_err(|e| CliError::Failed(e.to_string()))?;
        println!(
            "{} ({} objects, witness {} steps, {})",
            pddl.display(),
            inst.problem.objects().len(),
            inst.meta.witness_length,
            inst.meta.certified_by
        );
    }
    Ok(())
}

fn plan(a: PlanArgs) -> Result<(), CliError> {
    let (domain, _) = load_domain(a.domain.as_deref())?;
    let problem = load_problem(&a.problem, &domain)?;
    let known = domain.predicate_set();
    let rules_err =
        |p: &Path, e: crate::rules::RuleError| CliError::Failed(format!("{}: {e}", p.display()));
    let relaxation = match (&a.relaxation, a.mode) {
        (Some(p), _) => load_relaxation(p, &known).map_err(|e| rules_err(p, e))?,
        (None, Mode::ManualRules) => parse_relaxation(manual::RELAXATION_JSON, &known)
            .map_err(|e| CliError::Failed(e.to_string()))?,
        _ => Vec::new(),
    };
    let complementary = match (&a.complementary, a.mode) {
        (Some(p), _) => load_complementary(p, &known).map_err(|e| rules_err(p, e))?,
        (None, Mode::ManualRules) => parse_complementary(manual::COMPLEMENTARY_JSON, &known)
            .map_err(|e| CliError::Failed(e.to_string()))?,
        _ => Vec::new(),
    };
    if matches!(a.mode, Mode::LlmRules | Mode::Full)
        && relaxation.is_empty()
        && complementary.is_empty()
    {
        log::warn!(
            "{} mode without --relaxation/--complementary runs with empty rule sets",
            a.mode
        );
    }
    let mut config =
        PipelineConfig::for_mode(a.mode, a.timeout).with_rules(relaxation, complementary);
    config.policy = a.policy;
    if let Some(r) = a.recovery {
        config.recovery = r;
    }
    config.check().map_err(|e| CliError::Usage(e.to_string()))?;

    let wants_llm = matches!(a.scorer, ScorerArg::Llm) || config.recovery;
    let gateway = if wants_llm {
        Some(a.llm.gateway().map_err(CliError::Usage)?)
    } else {
        None
    };
    let llm_scorer = gateway.clone().map(LlmScorer::new);
    let scorer: &dyn ObjectScorer = match (a.scorer, &llm_scorer) {
        (ScorerArg::Llm, Some(s)) => s,
        _ => &BaselineScorer,
    };
    let mut pipeline = Pipeline::new(&domain, &config, scorer);
    if let Some(gw) = &gateway {
        pipeline = pipeline.with_gateway(gw);
    }
    let r = pipeline.run(&problem);
    if let Some(p) = &a.trace {
        let mut f = std::fs::File::create(p)?;
        r.write_trace(&mut f)?;
    }
    eprintln!(
        "{}: {} at {} in {:.2}s (recovery {}, objects {:?}/{:?}/{:?})",
        r.problem, r.outcome, r.stage, r.timings.total, r.recovery, r.o1, r.o2, r.o3
    );
    match &r.plan {
        Some(plan) => {
            print!("{}", plan.to_text());
            eprintln!("plan length {}", plan.len());
            if let Some(p) = &a.out {
                std::fs::write(p, plan.to_text())?;
            }
            Ok(())
        }
        None => Err(CliError::Failed(format!("no plan: {}", r.outcome))),
    }
}

fn bench(a: BenchArgs) -> Result<(), CliError> {
    if !a.spec.is_file() {
        return Err(CliError::Usage(format!(
            "run spec {} not found",
            a.spec.display()
        )));
    }
    let mut spec = RunSpec::load(&a.spec).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(w) = a.workers {
        spec.workers = w;
    }
    if let Some(d) = a.out_dir {
        spec.out_dir = d;
    }
    let report = run_bench(&spec).map_err(|e| match e {
        crate::bench::BenchError::MissingProblems(_) | crate::bench::BenchError::Spec(_) => {
            CliError::Usage(e.to_string())
        }
        other => CliError::Failed(other.to_string()),
    })?;
    print!("{}", report.summary_table());
    println!("wrote {}", spec.out_dir.display());
    Ok(())
}

/// Reads an `object,score,provenance` CSV.
pub fn read_score_csv(text: &str) -> Result<ScoreMap, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut scores = BTreeMap::new();
    let mut provenance = Provenance::Baseline;
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let object = rec.get(0).ok_or("missing object column")?;
        let score: f64 = rec
            .get(1)
            .ok_or("missing score column")?
            .parse()
            .map_err(|e| format!("score of {object}: {e}"))?;
        provenance = match rec.get(2) {
            Some("llm") => Provenance::Llm,
            Some("fallback") => Provenance::Fallback,
            _ => Provenance::Baseline,
        };
        scores.insert(object.to_string(), score);
    }
    Ok(ScoreMap::new(scores, provenance))
}

fn render_cmd(a: RenderArgs) -> Result<(), CliError> {
    let (domain, _) = load_domain(a.domain.as_deref())?;
    let problem = load_problem(&a.problem, &domain)?;
    let actions = match &a.plan {
        Some(p) => parse_plan(&read(p)?, &domain, &problem)
            .map_err(|e| CliError::Failed(format!("{}: {e}", p.display())))?,
        None => Vec::new(),
    };
    let scores = match (&a.scores, a.baseline_scores) {
        (Some(p), _) => Some(
            read_score_csv(&read(p)?)
                .map_err(|e| CliError::Failed(format!("{}: {e}", p.display())))?,
        ),
        (None, true) => Some(baseline_score(&problem)),
        _ => None,
    };
    let r = render(&problem, &actions, scores.as_ref());
    print!("{r}");
    match validate(&actions, &problem, &domain) {
        Ok(()) => Ok(()),
        Err(e) if a.plan.is_some() => Err(CliError::Failed(format!("plan does not validate: {e}"))),
        Err(_) => Ok(()),
    }
}
