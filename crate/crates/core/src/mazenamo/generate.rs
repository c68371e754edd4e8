use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{author_domain, cell_name, DIRECTIONS, ROBOT};
use crate::pddl::{Domain, GroundAtom, Problem};
use crate::planner::{search_with, validate, Deadline, Plan, SearchMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
    Expert,
}

impl Difficulty {
    pub const ALL: [Difficulty; 4] = [
        Difficulty::Easy,
        Difficulty::Medium,
        Difficulty::Hard,
        Difficulty::Expert,
    ];
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
            Difficulty::Expert => "expert",
        })
    }
}

impl FromStr for Difficulty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "easy" => Ok(Difficulty::Easy),
            "medium" => Ok(Difficulty::Medium),
            "hard" => Ok(Difficulty::Hard),
            "expert" => Ok(Difficulty::Expert),
            other => Err(format!("unknown difficulty `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub difficulty: Difficulty,
    pub seed: u64,
    pub heavy: usize,
    pub light: usize,
    /// Light boxes sitting on heavy ones.
    pub stacked: usize,
}

impl GridSpec {
    /// Spec with the default obstacle counts for the tier.
    pub fn new(width: usize, height: usize, difficulty: Difficulty, seed: u64) -> Self {
        let n = width.min(height);
        let (heavy, light, stacked) = match difficulty {
            Difficulty::Easy => (n / 2, n / 2, 0),
            Difficulty::Medium => (n / 2, n, 0),
            Difficulty::Hard => (n / 2, n, (n / 5).max(1)),
            Difficulty::Expert => (n / 2, n, (n / 5).max(2)),
        };
        GridSpec {
            width,
            height,
            difficulty,
            seed,
            heavy,
            light,
            stacked,
        }
    }

    pub fn square(size: usize, difficulty: Difficulty, seed: u64) -> Self {
        Self::new(size, size, difficulty, seed)
    }

    pub fn with_counts(mut self, heavy: usize, light: usize, stacked: usize) -> Self {
        self.heavy = heavy;
        self.light = light;
        self.stacked = stacked;
        self
    }

    /// Number of occupied cells (a stacked pair takes one).
    pub fn occupied_cells(&self) -> usize {
        self.heavy + self.light + self.stacked
    }

    pub fn check(&self) -> Result<(), GenerateError> {
        let infeasible = |reason: String| Err(GenerateError::Infeasible(reason));
        if self.width < 2 || self.height < 2 {
            return infeasible(format!(
                "grid {}x{} is smaller than 2x2",
                self.width, self.height
            ));
        }
        let cells = self.width * self.height;
        if self.occupied_cells() + 2 > cells {
            return infeasible(format!(
                "{} obstacle cells plus robot and goal exceed {cells} cells",
                self.occupied_cells()
            ));
        }
        match self.difficulty {
            Difficulty::Medium if self.light == 0 => infeasible("medium needs a light box".into()),
            Difficulty::Hard if self.stacked == 0 => infeasible("hard needs a stacked pair".into()),
            Difficulty::Expert => {
                if self.height < 3 {
                    return infeasible("expert needs at least 3 rows".into());
                }
                if self.light == 0 {
                    return infeasible("expert needs a light box in the barrier".into());
                }
                if self.occupied_cells() < self.width {
                    return infeasible(format!(
                        "{} obstacle cells cannot fill a barrier of width {}",
                        self.occupied_cells(),
                        self.width
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("infeasible grid spec: {0}")]
    Infeasible(String),
    #[error("no solvable layout after {0} attempts")]
    Exhausted(u32),
    #[error("writing instance: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleKind {
    /// Push only.
    Heavy,
    /// Push or pick and place.
    Light,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObstacleMeta {
    pub name: String,
    pub kind: ObstacleKind,
    pub cell: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub upon: Option<String>,
}

/// Sidecar describing how an instance was laid out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub difficulty: Difficulty,
    pub seed: u64,
    pub robot: String,
    pub goal: String,
    pub obstacles: Vec<ObstacleMeta>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub barrier_row: Option<usize>,
    pub attempts: u32,
    pub certified_by: String,
    pub witness_length: usize,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub problem: Problem,
    pub meta: InstanceMeta,
    /// A plan for `problem` found during certification.
    pub witness: Plan,
}

impl Instance {
    pub fn problem_text(&self) -> String {
        self.problem.to_string()
    }

    pub fn meta_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.meta).expect("metadata serializes");
        s.push('\n');
        s
    }

    /// Writes `<name>.pddl` and `<name>.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(PathBuf, PathBuf), GenerateError> {
        std::fs::create_dir_all(dir)?;
        let pddl = dir.join(format!("{}.pddl", self.meta.name));
        let json = dir.join(format!("{}.json", self.meta.name));
        std::fs::write(&pddl, self.problem_text())?;
        std::fs::write(&json, self.meta_json())?;
        Ok((pddl, json))
    }
}

const MAX_ATTEMPTS: u32 = 60;
const WITNESS_BUDGET: Duration = Duration::from_secs(5);

type Cell = (usize, usize);

/// Deterministically lays out an instance for `spec` and certifies it
/// solvable. Layouts that fail certification are redrawn from the same
/// random stream.
pub fn generate(spec: &GridSpec) -> Result<Instance, GenerateError> {
    spec.check()?;
    let domain = author_domain();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for attempt in 1..=MAX_ATTEMPTS {
        let Some(layout) = draw_layout(spec, &mut rng) else {
            continue;
        };
        let name = format!(
            "mazenamo-{}x{}-{}-s{}",
            spec.width, spec.height, spec.difficulty, spec.seed
        );
        let problem = layout.problem(&name, spec, &domain);
        if let Some((witness, how)) = certify(&layout, &problem, spec, &domain) {
            let meta = InstanceMeta {
                name,
                width: spec.width,
                height: spec.height,
                difficulty: spec.difficulty,
                seed: spec.seed,
                robot: cell_name(layout.robot.0, layout.robot.1),
                goal: cell_name(layout.goal.0, layout.goal.1),
                obstacles: layout.obstacle_meta(),
                barrier_row: layout.barrier_row,
                attempts: attempt,
                certified_by: how.to_string(),
                witness_length: witness.len(),
            };
            return Ok(Instance {
                problem,
                meta,
                witness,
            });
        }
        log::debug!(
            "{}: attempt {attempt} not certified, redrawing",
            spec.difficulty
        );
    }
    Err(GenerateError::Exhausted(MAX_ATTEMPTS))
}

#[derive(Debug, Clone)]
struct Placed {
    kind: ObstacleKind,
    cell: Cell,
    /// Index of the box this one sits on.
    upon: Option<usize>,
}

#[derive(Debug, Clone)]
struct Layout {
    width: usize,
    height: usize,
    robot: Cell,
    goal: Cell,
    obstacles: Vec<Placed>,
    barrier_row: Option<usize>,
}

fn in_box(c: Cell, a: Cell, b: Cell) -> bool {
    let (r0, r1) = (a.0.min(b.0), a.0.max(b.0));
    let (c0, c1) = (a.1.min(b.1), a.1.max(b.1));
    (r0..=r1).contains(&c.0) && (c0..=c1).contains(&c.1)
}

fn manhattan(a: Cell, b: Cell) -> usize {
    a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
}

/// Removes and returns the first free cell satisfying `pred`.
fn take_cell(free: &mut Vec<Cell>, pred: &dyn Fn(Cell) -> bool) -> Option<Cell> {
    let i = free.iter().position(|&c| pred(c))?;
    Some(free.remove(i))
}

fn draw_layout(spec: &GridSpec, rng: &mut ChaCha8Rng) -> Option<Layout> {
    let (w, h) = (spec.width, spec.height);
    let all: Vec<Cell> = (0..h).flat_map(|r| (0..w).map(move |c| (r, c))).collect();
    let mut layout = Layout {
        width: w,
        height: h,
        robot: (0, 0),
        goal: (0, 0),
        obstacles: Vec::new(),
        barrier_row: None,
    };
    let min_dist = ((w + h) / 3).max(2);

    if spec.difficulty == Difficulty::Expert {
        let row = rng.gen_range(1..h - 1);
        layout.barrier_row = Some(row);
        layout.robot = (rng.gen_range(0..row), rng.gen_range(0..w));
        layout.goal = (rng.gen_range(row + 1..h), rng.gen_range(0..w));
    } else {
        layout.robot = *all.choose(rng)?;
        let far: Vec<Cell> = all
            .iter()
            .copied()
            .filter(|&c| manhattan(c, layout.robot) >= min_dist)
            .collect();
        layout.goal = *far.choose(rng)?;
    }
    let (robot, goal) = (layout.robot, layout.goal);
    let corridor = |c: Cell| in_box(c, robot, goal);
    let mut free: Vec<Cell> = all
        .iter()
        .copied()
        .filter(|&c| c != robot && c != goal)
        .collect();
    free.shuffle(rng);

    let mut take = |pred: &dyn Fn(Cell) -> bool| take_cell(&mut free, pred);

    let mut kinds: Vec<ObstacleKind> = Vec::new();
    kinds.extend(std::iter::repeat_n(ObstacleKind::Heavy, spec.heavy));
    kinds.extend(std::iter::repeat_n(ObstacleKind::Light, spec.light));

    let push_stack = |layout: &mut Layout, cell: Cell| {
        layout.obstacles.push(Placed {
            kind: ObstacleKind::Heavy,
            cell,
            upon: None,
        });
        let bottom = layout.obstacles.len() - 1;
        layout.obstacles.push(Placed {
            kind: ObstacleKind::Light,
            cell,
            upon: Some(bottom),
        });
    };
    let push_one = |layout: &mut Layout, kind: ObstacleKind, cell: Cell| {
        layout.obstacles.push(Placed {
            kind,
            cell,
            upon: None,
        });
    };

    match spec.difficulty {
        Difficulty::Easy => {
            for _ in 0..spec.stacked {
                let cell = take(&|c| !corridor(c))?;
                push_stack(&mut layout, cell);
            }
            for kind in kinds {
                let cell = take(&|c| !corridor(c))?;
                push_one(&mut layout, kind, cell);
            }
        }
        Difficulty::Medium => {
            let inside = (spec.light / 3).max(1);
            let mut n_light = 0;
            for kind in kinds {
                let cell = if kind == ObstacleKind::Light && n_light < inside {
                    n_light += 1;
                    take(&|c| corridor(c))?
                } else {
                    take(&|c| !corridor(c))?
                };
                push_one(&mut layout, kind, cell);
            }
            for _ in 0..spec.stacked {
                let cell = take(&|c| !corridor(c))?;
                push_stack(&mut layout, cell);
            }
        }
        Difficulty::Hard => {
            for i in 0..spec.stacked {
                let cell = if i == 0 {
                    take(&|c| corridor(c))?
                } else {
                    take(&|_| true)?
                };
                push_stack(&mut layout, cell);
            }
            for kind in kinds {
                let cell = take(&|_| true)?;
                push_one(&mut layout, kind, cell);
            }
        }
        Difficulty::Expert => {
            let row = layout.barrier_row.unwrap();
            let mut cols: Vec<usize> = (0..w).collect();
            cols.shuffle(rng);
            let mut heavy = spec.heavy;
            let mut light = spec.light;
            let mut stacked = spec.stacked;
            for (i, &col) in cols.iter().enumerate() {
                let cell = (row, col);
                take(&|c| c == cell)?;
                if i == 0 {
                    light -= 1;
                    push_one(&mut layout, ObstacleKind::Light, cell);
                } else if stacked > 0 && i <= w / 2 {
                    stacked -= 1;
                    push_stack(&mut layout, cell);
                } else if heavy > 0 {
                    heavy -= 1;
                    push_one(&mut layout, ObstacleKind::Heavy, cell);
                } else if light > 0 {
                    light -= 1;
                    push_one(&mut layout, ObstacleKind::Light, cell);
                } else {
                    stacked -= 1;
                    push_stack(&mut layout, cell);
                }
            }
            for _ in 0..stacked {
                let cell = take(&|c| c.0 != row)?;
                push_stack(&mut layout, cell);
            }
            for _ in 0..heavy {
                let cell = take(&|c| c.0 != row)?;
                push_one(&mut layout, ObstacleKind::Heavy, cell);
            }
            for _ in 0..light {
                let cell = take(&|c| c.0 != row)?;
                push_one(&mut layout, ObstacleKind::Light, cell);
            }
        }
    }
    Some(layout)
}

impl Layout {
    fn obstacle_name(i: usize) -> String {
        format!("o{}", i + 1)
    }

    fn obstacle_meta(&self) -> Vec<ObstacleMeta> {
        self.obstacles
            .iter()
            .enumerate()
            .map(|(i, o)| ObstacleMeta {
                name: Self::obstacle_name(i),
                kind: o.kind,
                cell: cell_name(o.cell.0, o.cell.1),
                upon: o.upon.map(Self::obstacle_name),
            })
            .collect()
    }

    fn problem(&self, name: &str, _spec: &GridSpec, domain: &Domain) -> Problem {
        let mut objects = BTreeMap::new();
        let mut init = BTreeSet::new();
        objects.insert(ROBOT.to_string(), "robot".to_string());
        init.insert(GroundAtom::new("handempty", [ROBOT]));
        init.insert(GroundAtom::new(
            "rat",
            [ROBOT.to_string(), cell_name(self.robot.0, self.robot.1)],
        ));
        let occupied: BTreeSet<Cell> = self.obstacles.iter().map(|o| o.cell).collect();
        for r in 0..self.height {
            for c in 0..self.width {
                let p = cell_name(r, c);
                objects.insert(p.clone(), "position".to_string());
                if !occupied.contains(&(r, c)) {
                    init.insert(GroundAtom::new("posempty", [p.clone()]));
                }
                for (_, adj) in DIRECTIONS {
                    if let Some(n) = self.neighbour((r, c), adj) {
                        init.insert(GroundAtom::new(
                            adj.to_ascii_lowercase(),
                            [p.clone(), cell_name(n.0, n.1)],
                        ));
                    }
                }
            }
        }
        let covered: BTreeSet<usize> = self.obstacles.iter().filter_map(|o| o.upon).collect();
        for (i, o) in self.obstacles.iter().enumerate() {
            let n = Self::obstacle_name(i);
            objects.insert(n.clone(), "obstacle".to_string());
            init.insert(GroundAtom::new("ismoveable", [n.clone()]));
            if o.kind == ObstacleKind::Light {
                init.insert(GroundAtom::new("islight", [n.clone()]));
            }
            if !covered.contains(&i) {
                init.insert(GroundAtom::new("clear", [n.clone()]));
            }
            match o.upon {
                Some(b) => {
                    init.insert(GroundAtom::new("upon", [n.clone(), Self::obstacle_name(b)]));
                }
                None => {
                    init.insert(GroundAtom::new(
                        "oat",
                        [n.clone(), cell_name(o.cell.0, o.cell.1)],
                    ));
                }
            }
        }
        let goal = BTreeSet::from([GroundAtom::new(
            "rat",
            [ROBOT.to_string(), cell_name(self.goal.0, self.goal.1)],
        )]);
        Problem::new(name, domain, objects, init, goal).expect("generated problem is well formed")
    }

    /// `upTo(a, b)` holds when `b` is the cell directly above `a`.
    fn neighbour(&self, (r, c): Cell, adj: &str) -> Option<Cell> {
        match adj {
            "upTo" if r > 0 => Some((r - 1, c)),
            "downTo" if r + 1 < self.height => Some((r + 1, c)),
            "leftTo" if c > 0 => Some((r, c - 1)),
            "rightTo" if c + 1 < self.width => Some((r, c + 1)),
            _ => None,
        }
    }

    /// Cells of an L-shaped path, moving along rows first when `rows_first`.
    fn l_path(from: Cell, to: Cell, rows_first: bool) -> Vec<Cell> {
        let mut out = vec![from];
        let mut cur = from;
        let step = |x: usize, t: usize| if t > x { x + 1 } else { x - 1 };
        for phase in 0..2 {
            let vertical = (phase == 0) == rows_first;
            if vertical {
                while cur.0 != to.0 {
                    cur.0 = step(cur.0, to.0);
                    out.push(cur);
                }
            } else {
                while cur.1 != to.1 {
                    cur.1 = step(cur.1, to.1);
                    out.push(cur);
                }
            }
        }
        out
    }

    /// Candidate corridors for the witness problem.
    fn witness_routes(&self) -> Vec<Vec<Cell>> {
        let mut routes = Vec::new();
        if let Some(row) = self.barrier_row {
            for (i, o) in self.obstacles.iter().enumerate() {
                let crossable = o.cell.0 == row
                    && o.upon.is_none()
                    && !self.obstacles.iter().any(|t| t.upon == Some(i));
                if crossable && o.kind == ObstacleKind::Light {
                    let above = (row - 1, o.cell.1);
                    let below = (row + 1, o.cell.1);
                    let mut path = Self::l_path(self.robot, above, false);
                    path.extend(Self::l_path(below, self.goal, true));
                    routes.push(path);
                }
            }
        }
        routes.push(Self::l_path(self.robot, self.goal, true));
        routes.push(Self::l_path(self.robot, self.goal, false));
        routes
    }

    /// The sub-problem over `route` widened by one cell, with the boxes
    /// found there. A plan for it is a plan for the full problem.
    fn witness_problem(&self, full: &Problem, route: &[Cell], domain: &Domain) -> Option<Problem> {
        let mut cells = BTreeSet::new();
        for &(r, c) in route {
            cells.insert((r, c));
            for (_, adj) in DIRECTIONS {
                if let Some(n) = self.neighbour((r, c), adj) {
                    cells.insert(n);
                }
            }
        }
        let mut keep: BTreeSet<String> = cells.iter().map(|&(r, c)| cell_name(r, c)).collect();
        keep.insert(ROBOT.to_string());
        for (i, o) in self.obstacles.iter().enumerate() {
            if cells.contains(&o.cell) {
                keep.insert(Self::obstacle_name(i));
            }
        }
        let objects: BTreeMap<String, String> = full
            .objects()
            .iter()
            .filter(|(k, _)| keep.contains(*k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let init = full
            .init()
            .iter()
            .filter(|a| a.args.iter().all(|x| keep.contains(x)))
            .cloned()
            .collect();
        Problem::new(
            format!("{}-witness", full.name()),
            domain,
            objects,
            init,
            full.goal().clone(),
        )
        .ok()
    }
}

fn certify(
    layout: &Layout,
    problem: &Problem,
    _spec: &GridSpec,
    domain: &Domain,
) -> Option<(Plan, &'static str)> {
    for route in layout.witness_routes() {
        let Some(sub) = layout.witness_problem(problem, &route, domain) else {
            continue;
        };
        let out = search_with(
            &sub,
            domain,
            Deadline::after(WITNESS_BUDGET),
            SearchMode::Optimal,
        );
        if let Some(plan) = out.into_plan() {
            if validate(&plan.actions, problem, domain).is_ok() {
                return Some((plan, "optimal-witness"));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l_paths_are_connected() {
        for rows_first in [true, false] {
            let p = Layout::l_path((4, 1), (0, 3), rows_first);
            assert_eq!(p.len(), manhattan((4, 1), (0, 3)) + 1);
            assert!(p.windows(2).all(|w| manhattan(w[0], w[1]) == 1));
        }
    }

    #[test]
    fn overfull_spec_is_rejected() {
        let spec = GridSpec::square(3, Difficulty::Easy, 1).with_counts(4, 4, 0);
        assert!(matches!(generate(&spec), Err(GenerateError::Infeasible(_))));
    }

    #[test]
    fn small_easy_instance() {
        let inst = generate(&GridSpec::square(5, Difficulty::Easy, 7)).unwrap();
        assert_eq!(inst.problem.objects().len(), 25 + 1 + 4);
        assert!(validate(&inst.witness.actions, &inst.problem, &author_domain()).is_ok());
    }
}
