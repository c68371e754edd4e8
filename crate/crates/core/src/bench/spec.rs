use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::mazenamo::Difficulty;
use crate::pipeline::{Mode, Policy};

/// A declarative sweep: problem sources, configurations and output.
///
/// Relative paths are resolved against the directory of the spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default = "default_name")]
    pub name: String,
    /// Directory of `.pddl` problem files.
    #[serde(default)]
    pub problems: Option<PathBuf>,
    /// Problems generated in memory before the sweep.
    #[serde(default)]
    pub generate: Vec<GenerateSpec>,
    /// Domain file; the built-in MazeNamo domain when absent.
    #[serde(default)]
    pub domain: Option<PathBuf>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub llm: LlmSpec,
    #[serde(rename = "config")]
    pub configs: Vec<ConfigSpec>,
}

fn default_name() -> String {
    "bench".to_string()
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("bench-out")
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    pub size: usize,
    pub difficulty: Difficulty,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmSpec {
    /// Mock fixture; the HTTP backend is used when absent.
    #[serde(default)]
    pub mock: Option<PathBuf>,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerChoice {
    #[default]
    Baseline,
    Llm,
}

impl ScorerChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScorerChoice::Baseline => "baseline",
            ScorerChoice::Llm => "llm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSpec {
    pub name: String,
    pub mode: Mode,
    #[serde(default)]
    pub scorer: ScorerChoice,
    #[serde(default)]
    pub policy: Policy,
    /// Seconds; by grid size when absent.
    #[serde(default)]
    pub timeout: Option<f64>,
    /// Overrides the mode default (on only in full mode).
    #[serde(default)]
    pub recovery: Option<bool>,
    #[serde(default)]
    pub relaxation: Option<PathBuf>,
    #[serde(default)]
    pub complementary: Option<PathBuf>,
}

impl RunSpec {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let spec: RunSpec = toml::from_str(text).map_err(|e| BenchError::Spec(e.to_string()))?;
        spec.check()?;
        Ok(spec)
    }

    /// Reads `path` and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| BenchError::Io(path.to_path_buf(), e))?;
        let mut spec = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        spec.resolve(base);
        Ok(spec)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = &mut self.problems {
            fix(p);
        }
        if let Some(p) = &mut self.domain {
            fix(p);
        }
        fix(&mut self.out_dir);
        if let Some(p) = &mut self.llm.mock {
            fix(p);
        }
        for c in &mut self.configs {
            if let Some(p) = &mut c.relaxation {
                fix(p);
            }
            if let Some(p) = &mut c.complementary {
                fix(p);
            }
        }
    }

    fn check(&self) -> Result<(), BenchError> {
        if self.configs.is_empty() {
            return Err(BenchError::Spec("no [[config]] entries".into()));
        }
        if self.problems.is_none() && self.generate.is_empty() {
            return Err(BenchError::Spec(
                "neither `problems` nor [[generate]] given".into(),
            ));
        }
        let mut names: Vec<&str> = self.configs.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(BenchError::Spec(format!("config name {} used twice", w[0])));
        }
        if self.configs.iter().any(|c| c.name.contains(',')) {
            return Err(BenchError::Spec(
                "config names may not contain commas".into(),
            ));
        }
        Ok(())
    }
}

/// Default timeout by grid side: 10 s up to 10, 30 s up to 12, 40 s above.
pub fn default_timeout(grid_side: usize) -> f64 {
    match grid_side {
        0..=10 => 10.0,
        11..=12 => 30.0,
        _ => 40.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"
name = "demo"
seed = 3
workers = 2

[[generate]]
size = 6
difficulty = "easy"
count = 2

[[config]]
name = "manual"
mode = "manual-rules"

[[config]]
name = "ploi"
mode = "scorer-only"
scorer = "llm"
policy = "capped-latency-unaware"
timeout = 5.0
"#;

    #[test]
    fn parses_defaults() {
        let s = RunSpec::from_toml(SPEC).unwrap();
        assert_eq!(s.configs.len(), 2);
        assert_eq!(s.configs[0].policy, Policy::FeasibilityGated);
        assert_eq!(s.configs[0].scorer, ScorerChoice::Baseline);
        assert_eq!(s.configs[1].policy, Policy::CappedLatencyUnaware);
        assert_eq!(s.generate[0].difficulty, Difficulty::Easy);
        assert_eq!(s.out_dir, PathBuf::from("bench-out"));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(
            RunSpec::from_toml("name = \"x\"\n[[config]]\nname = \"a\"\nmode = \"full\"\n")
                .is_err()
        );
        assert!(RunSpec::from_toml(&SPEC.replace("\"ploi\"", "\"manual\"")).is_err());
        assert!(RunSpec::from_toml(&SPEC.replace("workers", "wrokers")).is_err());
    }

    #[test]
    fn timeouts_by_size() {
        assert_eq!(default_timeout(10), 10.0);
        assert_eq!(default_timeout(12), 30.0);
        assert_eq!(default_timeout(15), 40.0);
    }
}
