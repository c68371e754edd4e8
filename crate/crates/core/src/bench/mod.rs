//! Benchmark sweeps over (configuration, problem) pairs.

mod report;
mod spec;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::llm::{
    generate_rules, Gateway, GeneratedRules, LlmConfig, MockFixture, MockLlm, RuleGenError,
};
use crate::mazenamo::{author_domain, domain_text, generate, parse_cell, GridSpec};
use crate::pddl::{parse_domain, parse_problem, Domain, Problem};
use crate::pipeline::{Mode, Pipeline, PipelineConfig, PipelineResult};
use crate::rules::{
    load_complementary, load_relaxation, manual, parse_complementary, parse_relaxation,
    ComplementaryRule, RelaxationRule, RuleError,
};
use crate::scoring::{BaselineScorer, LlmScorer, ObjectScorer};

pub use report::{
    aggregate, read_report, read_timings, Aggregate, BenchReport, ReportRow, TimingRow,
};
pub use spec::{default_timeout, ConfigSpec, GenerateSpec, LlmSpec, RunSpec, ScorerChoice};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("run spec: {0}")]
    Spec(String),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
    #[error("problem directory {0} does not exist")]
    MissingProblems(PathBuf),
    #[error("domain {0}: {1}")]
    Domain(PathBuf, String),
    #[error("rules {0}: {1}")]
    Rules(PathBuf, #[source] RuleError),
    #[error("rule generation: {0}")]
    RuleGen(#[source] RuleGenError),
}

/// A problem ready for the sweep, or the reason it is not.
#[derive(Debug, Clone)]
pub struct BenchProblem {
    pub name: String,
    pub task: String,
    pub seed: Option<u64>,
    pub problem: Result<Problem, String>,
}

impl BenchProblem {
    /// Larger of the grid's row and column counts, from `p{r}_{c}` names.
    pub fn grid_side(&self) -> usize {
        let Ok(p) = &self.problem else {
            return 0;
        };
        p.objects()
            .keys()
            .filter_map(|o| parse_cell(o))
            .map(|(r, c)| r.max(c) + 1)
            .max()
            .unwrap_or(0)
    }
}

/// `mazenamo-10x10-easy-s3` → `10x10-easy`.
pub fn task_label(problem_name: &str) -> Option<String> {
    let rest = problem_name.strip_prefix("mazenamo-")?;
    let (task, seed) = rest.rsplit_once("-s")?;
    seed.parse::<u64>().ok()?;
    Some(task.to_string())
}

/// Problems of `spec` in sweep order: the directory's files sorted by
/// name, then generated ones. Generated seeds are `seed + index`.
pub fn load_problems(spec: &RunSpec, domain: &Domain) -> Result<Vec<BenchProblem>, BenchError> {
    let mut out = Vec::new();
    if let Some(dir) = &spec.problems {
        if !dir.is_dir() {
            return Err(BenchError::MissingProblems(dir.clone()));
        }
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| BenchError::Io(dir.clone(), e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "pddl"))
            .collect();
        files.sort();
        for f in files {
            let stem = f
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let problem = std::fs::read_to_string(&f)
                .map_err(|e| e.to_string())
                .and_then(|t| parse_problem(&t, domain).map_err(|e| e.to_string()));
            let name = problem.as_ref().map_or(stem, |p| p.name().to_string());
            out.push(BenchProblem {
                task: task_label(&name).unwrap_or_else(|| spec.name.clone()),
                name,
                seed: None,
                problem,
            });
        }
    }
    let mut index = 0u64;
    for g in &spec.generate {
        for _ in 0..g.count {
            let seed = spec.seed.wrapping_add(index);
            index += 1;
            let grid = GridSpec::square(g.size, g.difficulty, seed);
            let task = format!("{0}x{0}-{1}", g.size, g.difficulty);
            let (name, problem) = match generate(&grid) {
                Ok(i) => (i.meta.name.clone(), Ok(i.problem)),
                Err(e) => (format!("mazenamo-{task}-s{seed}"), Err(e.to_string())),
            };
            out.push(BenchProblem {
                name,
                task,
                seed: Some(seed),
                problem,
            });
        }
    }
    Ok(out)
}

/// Everything resolved from a spec before the sweep starts.
pub struct Prepared {
    pub domain: Domain,
    pub problems: Vec<BenchProblem>,
    pub configs: Vec<(ConfigSpec, PipelineConfig)>,
    pub gateway: Option<Gateway>,
    pub mock: Option<Arc<MockLlm>>,
    pub llm_scorer: Option<LlmScorer>,
    pub generated: Option<GeneratedRules>,
}

pub fn prepare(spec: &RunSpec) -> Result<Prepared, BenchError> {
    let (domain, domain_text) = match &spec.domain {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| BenchError::Io(p.clone(), e))?;
            let d =
                parse_domain(&text).map_err(|e| BenchError::Domain(p.clone(), e.to_string()))?;
            (d, text)
        }
        None => (author_domain(), domain_text()),
    };
    let problems = load_problems(spec, &domain)?;
    let known = domain.predicate_set();

    let needs_llm = spec.configs.iter().any(|c| {
        c.scorer == ScorerChoice::Llm
            || c.recovery.unwrap_or(c.mode == Mode::Full)
            || (matches!(c.mode, Mode::LlmRules | Mode::Full)
                && (c.relaxation.is_none() || c.complementary.is_none()))
    });
    let (gateway, mock) = if needs_llm {
        let mut config = LlmConfig::from_env();
        if let Some(e) = &spec.llm.endpoint {
            config.endpoint = e.clone();
        }
        if let Some(m) = &spec.llm.model {
            config.model = m.clone();
        }
        match &spec.llm.mock {
            Some(path) => {
                let fixture =
                    MockFixture::load(path).map_err(|e| BenchError::Io(path.clone(), e))?;
                let mock = Arc::new(MockLlm::new(fixture));
                (Some(Gateway::new(config, mock.clone())), Some(mock))
            }
            None => (Some(Gateway::http(config)), None),
        }
    } else {
        (None, None)
    };

    let needs_generated = spec.configs.iter().any(|c| {
        matches!(c.mode, Mode::LlmRules | Mode::Full)
            && (c.relaxation.is_none() || c.complementary.is_none())
    });
    let generated = match (&gateway, needs_generated) {
        (Some(gw), true) => match generate_rules(gw, &domain_text) {
            Ok(g) => Some(g),
            Err(RuleGenError::Exhausted { partial, kinds, .. }) => {
                log::warn!("rule generation exhausted for {kinds}; using salvaged rules");
                Some(*partial)
            }
            Err(e) => return Err(BenchError::RuleGen(e)),
        },
        _ => None,
    };

    let mut configs = Vec::new();
    for c in &spec.configs {
        let relaxation: Vec<RelaxationRule> = match (&c.relaxation, c.mode) {
            (Some(p), _) => {
                load_relaxation(p, &known).map_err(|e| BenchError::Rules(p.clone(), e))?
            }
            (None, Mode::ManualRules) => parse_relaxation(manual::RELAXATION_JSON, &known)
                .map_err(|e| BenchError::Rules("manual".into(), e))?,
            (None, Mode::LlmRules | Mode::Full) => generated
                .as_ref()
                .map(|g| g.relaxation.rules.clone())
                .unwrap_or_default(),
            _ => Vec::new(),
        };
        let complementary: Vec<ComplementaryRule> = match (&c.complementary, c.mode) {
            (Some(p), _) => {
                load_complementary(p, &known).map_err(|e| BenchError::Rules(p.clone(), e))?
            }
            (None, Mode::ManualRules) => parse_complementary(manual::COMPLEMENTARY_JSON, &known)
                .map_err(|e| BenchError::Rules("manual".into(), e))?,
            (None, Mode::LlmRules | Mode::Full) => generated
                .as_ref()
                .map(|g| g.complementary.rules.clone())
                .unwrap_or_default(),
            _ => Vec::new(),
        };
        let mut pc = PipelineConfig::for_mode(c.mode, c.timeout.unwrap_or(10.0))
            .with_rules(relaxation, complementary);
        pc.policy = c.policy;
        if let Some(r) = c.recovery {
            pc.recovery = r;
        }
        pc.check()
            .map_err(|e| BenchError::Spec(format!("config {}: {e}", c.name)))?;
        configs.push((c.clone(), pc));
    }
    let llm_scorer = gateway.clone().map(LlmScorer::new);
    Ok(Prepared {
        domain,
        problems,
        configs,
        gateway,
        mock,
        llm_scorer,
        generated,
    })
}

/// Runs every (configuration, problem) pair on `workers` threads. Rows come
/// back in configuration-major order whatever the thread count.
pub fn run_prepared(prep: &Prepared, workers: usize) -> BenchReport {
    let pairs: Vec<(usize, usize)> = (0..prep.configs.len())
        .flat_map(|c| (0..prep.problems.len()).map(move |p| (c, p)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    let results: Vec<(ReportRow, TimingRow, Option<PipelineResult>)> = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(c, p)| run_one(prep, c, p))
            .collect()
    });
    let mut report = BenchReport::default();
    for (row, timing, result) in results {
        if let Some(r) = result {
            report.traces.extend(r.trace.iter().cloned());
            if let Some(plan) = r.plan {
                report
                    .plans
                    .push((row.config.clone(), row.problem.clone(), plan.to_text()));
            }
        }
        report.rows.push(row);
        report.timings.push(timing);
    }
    report
}

fn run_one(prep: &Prepared, c: usize, p: usize) -> (ReportRow, TimingRow, Option<PipelineResult>) {
    let (cs, base) = &prep.configs[c];
    let bp = &prep.problems[p];
    let mut config = base.clone();
    if cs.timeout.is_none() {
        config.timeout = default_timeout(bp.grid_side());
    }
    let mut row = ReportRow {
        config: cs.name.clone(),
        task: bp.task.clone(),
        problem: bp.name.clone(),
        mode: cs.mode.to_string(),
        scorer: cs.scorer.as_str().to_string(),
        policy: cs.policy.to_string(),
        timeout: config.timeout,
        seed: bp.seed,
        outcome: "error".into(),
        plan_length: None,
        stage: String::new(),
        recovery: String::new(),
        recovery_calls: 0,
        o1: None,
        o2: None,
        o3: None,
        searches: 0,
    };
    let mut timing = TimingRow {
        config: cs.name.clone(),
        problem: bp.name.clone(),
        ..TimingRow::default()
    };
    let problem = match &bp.problem {
        Ok(p) => p,
        Err(e) => {
            log::warn!("{}: {e}", bp.name);
            return (row, timing, None);
        }
    };
    let baseline = BaselineScorer;
    let scorer: &dyn ObjectScorer = match (cs.scorer, &prep.llm_scorer) {
        (ScorerChoice::Llm, Some(s)) => s,
        _ => &baseline,
    };
    let mut pipeline = Pipeline::new(&prep.domain, &config, scorer);
    if let Some(gw) = &prep.gateway {
        pipeline = pipeline.with_gateway(gw);
    }
    let r = pipeline.run(problem);
    log::info!(
        "{} {} {} {:.2}s",
        cs.name,
        bp.name,
        r.outcome,
        r.timings.total
    );
    row.outcome = r.outcome.to_string();
    row.plan_length = r.plan_len();
    row.stage = r.stage.to_string();
    row.recovery = r.recovery.to_string();
    row.recovery_calls = r.recovery_calls;
    row.o1 = r.o1;
    row.o2 = r.o2;
    row.o3 = r.o3;
    row.searches = r.searches;
    timing.scoring = r.timings.scoring;
    timing.step1 = r.timings.step1;
    timing.recovery = r.timings.recovery;
    timing.step2 = r.timings.step2;
    timing.step3 = r.timings.step3;
    timing.total = r.timings.total;
    (row, timing, Some(r))
}

/// Loads, runs and writes a sweep into `spec.out_dir`.
pub fn run_bench(spec: &RunSpec) -> Result<BenchReport, BenchError> {
    let prep = prepare(spec)?;
    if let Some(g) = &prep.generated {
        g.write_to(&spec.out_dir.join("rules"))
            .map_err(|e| BenchError::Io(spec.out_dir.join("rules"), e))?;
    }
    let report = run_prepared(&prep, spec.workers);
    report
        .write_to(&spec.out_dir)
        .map_err(|e| BenchError::Io(spec.out_dir.clone(), e))?;
    Ok(report)
}

/// `out_dir/report.csv` of a finished sweep.
pub fn report_path(out_dir: &Path) -> PathBuf {
    out_dir.join("report.csv")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_labels() {
        assert_eq!(
            task_label("mazenamo-10x10-easy-s3").as_deref(),
            Some("10x10-easy")
        );
        assert_eq!(task_label("other"), None);
    }

    #[test]
    fn missing_problem_dir() {
        let spec = RunSpec::from_toml(
            "problems = \"/nonexistent/dir\"\n[[config]]\nname = \"a\"\nmode = \"pure-search\"\n",
        )
        .unwrap();
        assert!(matches!(
            prepare(&spec),
            Err(BenchError::MissingProblems(_))
        ));
    }

    #[test]
    fn serial_and_parallel_agree() {
        let spec = RunSpec::from_toml(
            "seed = 5\n[[generate]]\nsize = 5\ndifficulty = \"medium\"\ncount = 3\n\
             [[config]]\nname = \"m\"\nmode = \"manual-rules\"\n\
             [[config]]\nname = \"s\"\nmode = \"scorer-only\"\n",
        )
        .unwrap();
        let prep = prepare(&spec).unwrap();
        let a = run_prepared(&prep, 1);
        let b = run_prepared(&prep, 3);
        assert_eq!(a.report_csv(), b.report_csv());
        assert_eq!(a.rows.len(), 6);
        assert!(a.rows.iter().all(|r| r.outcome == "success"));
    }
}
