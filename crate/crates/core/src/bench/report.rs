use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::pipeline::TraceRecord;

/// One (configuration, problem) run. Contains nothing measured in wall
/// time, so fixed inputs give identical rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub config: String,
    pub task: String,
    pub problem: String,
    pub mode: String,
    pub scorer: String,
    pub policy: String,
    pub timeout: f64,
    pub seed: Option<u64>,
    /// `success`, `timeout`, `unsolvable` or `error`.
    pub outcome: String,
    pub plan_length: Option<usize>,
    pub stage: String,
    pub recovery: String,
    pub recovery_calls: u32,
    pub o1: Option<usize>,
    pub o2: Option<usize>,
    pub o3: Option<usize>,
    pub searches: u32,
}

/// Seconds per step of one run, keyed like [`ReportRow`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub config: String,
    pub problem: String,
    pub scoring: f64,
    pub step1: f64,
    pub recovery: f64,
    pub step2: f64,
    pub step3: f64,
    pub total: f64,
}

/// Success rate and averages over successes for one (task, config) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub task: String,
    pub config: String,
    pub runs: usize,
    pub successes: usize,
    pub sr: f64,
    pub avg_time: Option<f64>,
    pub avg_length: Option<f64>,
}

/// Groups by (task, config) in order of first appearance.
pub fn aggregate(rows: &[ReportRow], timings: &[TimingRow]) -> Vec<Aggregate> {
    let mut cells: Vec<(String, String, Vec<usize>)> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        match cells
            .iter_mut()
            .find(|(t, c, _)| *t == r.task && *c == r.config)
        {
            Some(cell) => cell.2.push(i),
            None => cells.push((r.task.clone(), r.config.clone(), vec![i])),
        }
    }
    cells
        .into_iter()
        .map(|(task, config, idx)| {
            let ok: Vec<usize> = idx
                .iter()
                .copied()
                .filter(|&i| rows[i].outcome == "success")
                .collect();
            let mean =
                |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
            Aggregate {
                runs: idx.len(),
                successes: ok.len(),
                sr: ok.len() as f64 / idx.len() as f64,
                avg_time: mean(
                    ok.iter()
                        .filter_map(|&i| timings.get(i).map(|t| t.total))
                        .collect(),
                ),
                avg_length: mean(
                    ok.iter()
                        .filter_map(|&i| rows[i].plan_length.map(|l| l as f64))
                        .collect(),
                ),
                task,
                config,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub rows: Vec<ReportRow>,
    /// Parallel to `rows`.
    pub timings: Vec<TimingRow>,
    pub traces: Vec<TraceRecord>,
    /// `(config, problem, plan text)` of every success.
    pub plans: Vec<(String, String, String)>,
}

fn to_csv<T: Serialize>(items: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for item in items {
        w.serialize(item).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("CSV is UTF-8")
}

impl BenchReport {
    pub fn aggregates(&self) -> Vec<Aggregate> {
        aggregate(&self.rows, &self.timings)
    }

    pub fn report_csv(&self) -> String {
        to_csv(&self.rows)
    }

    pub fn timings_csv(&self) -> String {
        to_csv(&self.timings)
    }

    /// Task / Config / SR / Time / Len, `---` where no run succeeded.
    pub fn summary_table(&self) -> String {
        let aggs = self.aggregates();
        let tw = aggs.iter().map(|a| a.task.len()).max().unwrap_or(0).max(4);
        let cw = aggs
            .iter()
            .map(|a| a.config.len())
            .max()
            .unwrap_or(0)
            .max(6);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<tw$}  {:<cw$}  {:>5}  {:>8}  {:>7}",
            "Task", "Config", "SR", "Time", "Len"
        );
        for a in &aggs {
            let time = a.avg_time.map_or("---".to_string(), |t| format!("{t:.2}"));
            let len = a
                .avg_length
                .map_or("---".to_string(), |l| format!("{l:.1}"));
            let _ = writeln!(
                s,
                "{:<tw$}  {:<cw$}  {:>5.3}  {:>8}  {:>7}",
                a.task, a.config, a.sr, time, len
            );
        }
        s
    }

    /// Writes `report.csv`, `timings.csv`, `summary.txt`, `traces.jsonl`
    /// and `plans/<config>/<problem>.plan`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.csv"), self.report_csv())?;
        std::fs::write(dir.join("timings.csv"), self.timings_csv())?;
        std::fs::write(dir.join("summary.txt"), self.summary_table())?;
        let mut traces = String::new();
        for t in &self.traces {
            traces.push_str(&serde_json::to_string(t).expect("trace record serializes"));
            traces.push('\n');
        }
        std::fs::write(dir.join("traces.jsonl"), traces)?;
        for (config, problem, text) in &self.plans {
            let d = dir.join("plans").join(config);
            std::fs::create_dir_all(&d)?;
            std::fs::write(d.join(format!("{problem}.plan")), text)?;
        }
        Ok(())
    }
}

pub fn read_report(text: &str) -> Result<Vec<ReportRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect()
}

pub fn read_timings(text: &str) -> Result<Vec<TimingRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect()
}
