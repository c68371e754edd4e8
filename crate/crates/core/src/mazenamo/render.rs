use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{author_domain, parse_cell, ROBOT};
use crate::pddl::{GroundAtom, Problem};
use crate::planner::{instantiate, GroundAction, PlanFailureKind};
use crate::scoring::ScoreMap;

/// Cell geometry recovered from a problem's position objects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridLayout {
    pub width: usize,
    pub height: usize,
    /// Cell object name per (row, col), absent for cells not in the problem.
    cells: BTreeMap<(usize, usize), String>,
    goal: Option<(usize, usize)>,
}

impl GridLayout {
    pub fn of(problem: &Problem) -> Self {
        let cells: BTreeMap<_, _> = problem
            .objects()
            .iter()
            .filter(|(_, ty)| ty.as_str() == "position")
            .filter_map(|(name, _)| parse_cell(name).map(|rc| (rc, name.clone())))
            .collect();
        let width = cells.keys().map(|&(_, c)| c + 1).max().unwrap_or(0);
        let height = cells.keys().map(|&(r, _)| r + 1).max().unwrap_or(0);
        let goal = problem
            .goal()
            .iter()
            .find(|a| a.predicate == "rat")
            .and_then(|a| parse_cell(&a.args[1]));
        GridLayout {
            width,
            height,
            cells,
            goal,
        }
    }

    /// One text row per grid row.
    ///
    /// `R` robot, `G` goal, `H` heavy box, `L` light box, `S` box with
    /// another box on top, `#` immovable, `.` empty.
    pub fn draw(&self, state: &BTreeSet<GroundAtom>) -> Vec<String> {
        let has =
            |p: &str, args: &[&str]| state.contains(&GroundAtom::new(p, args.iter().copied()));
        let mut at: BTreeMap<&str, &str> = BTreeMap::new();
        let mut robot = None;
        let mut covered = BTreeSet::new();
        for a in state {
            match a.predicate.as_str() {
                "oat" => {
                    at.insert(a.args[1].as_str(), a.args[0].as_str());
                }
                "rat" => robot = Some(a.args[1].as_str()),
                "upon" => {
                    covered.insert(a.args[1].as_str());
                }
                _ => {}
            }
        }
        (0..self.height)
            .map(|r| {
                (0..self.width)
                    .map(|c| {
                        let Some(cell) = self.cells.get(&(r, c)) else {
                            return ' ';
                        };
                        if robot == Some(cell.as_str()) {
                            'R'
                        } else if let Some(o) = at.get(cell.as_str()) {
                            if covered.contains(o) {
                                'S'
                            } else if has("islight", &[o]) {
                                'L'
                            } else if has("ismoveable", &[o]) {
                                'H'
                            } else {
                                '#'
                            }
                        } else if self.goal == Some((r, c)) {
                            'G'
                        } else {
                            '.'
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Score bucket per cell: `0`..`9` for `[0, 0.1)`..`[0.9, 1]`.
    pub fn draw_scores(&self, scores: &ScoreMap) -> Vec<String> {
        (0..self.height)
            .map(|r| {
                (0..self.width)
                    .map(
                        |c| match self.cells.get(&(r, c)).and_then(|n| scores.get(n)) {
                            Some(s) => char::from(b'0' + ((s * 10.0) as u8).min(9)),
                            None => ' ',
                        },
                    )
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    /// Number of actions applied before this frame.
    pub step: usize,
    /// The action that produced this frame, or the failing one.
    pub action: Option<String>,
    pub holding: Option<String>,
    pub rows: Vec<String>,
    /// Set on the last frame when the next action cannot be applied.
    pub invalid: Option<String>,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.action, &self.invalid) {
            (Some(a), Some(why)) => writeln!(f, "step {}: {a} INVALID: {why}", self.step + 1)?,
            (Some(a), None) => writeln!(f, "step {}: {a}", self.step)?,
            (None, Some(why)) => writeln!(f, "step {}: INVALID: {why}", self.step)?,
            (None, None) => writeln!(f, "initial")?,
        }
        if let Some(h) = &self.holding {
            writeln!(f, "holding {h}")?;
        }
        for row in &self.rows {
            writeln!(f, "{}", row.trim_end())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendering {
    pub frames: Vec<Frame>,
    /// The first failing step, if the plan does not apply.
    pub failed_step: Option<usize>,
    /// The plan applied fully but left the goal unmet.
    pub goal_unmet: bool,
}

impl fmt::Display for Rendering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, frame) in self.frames.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{frame}")?;
        }
        if self.goal_unmet {
            writeln!(f, "\ngoal not reached")?;
        }
        Ok(())
    }
}

/// Draws the initial state and the state after each action of `plan`.
/// Stops at the first action that does not apply and marks that frame.
/// With `scores`, each frame also shows the score bucket of every cell.
pub fn render(problem: &Problem, plan: &[GroundAction], scores: Option<&ScoreMap>) -> Rendering {
    let domain = author_domain();
    let layout = GridLayout::of(problem);
    let score_rows = scores.map(|s| layout.draw_scores(s));
    let frame = |step: usize,
                 action: Option<String>,
                 state: &BTreeSet<GroundAtom>,
                 invalid: Option<String>| {
        let mut rows = layout.draw(state);
        if let Some(sr) = &score_rows {
            for (row, s) in rows.iter_mut().zip(sr) {
                row.push_str("   ");
                row.push_str(s);
            }
        }
        let holding = state
            .iter()
            .find(|a| a.predicate == "holding" && a.args[0] == ROBOT)
            .map(|a| a.args[1].clone());
        Frame {
            step,
            action,
            holding,
            rows,
            invalid,
        }
    };

    let mut state = problem.init().clone();
    let mut frames = vec![frame(0, None, &state, None)];
    for (i, step) in plan.iter().enumerate() {
        let failure = match instantiate(&domain, problem, &step.schema, &step.args) {
            Err(kind) => Some(kind),
            Ok(a) => {
                if let Some(p) = a.pre_pos.iter().find(|p| !state.contains(*p)) {
                    Some(PlanFailureKind::PreconditionFalse(p.clone()))
                } else if let Some(p) = a.pre_neg.iter().find(|p| state.contains(*p)) {
                    Some(PlanFailureKind::NegativePreconditionTrue(p.clone()))
                } else {
                    for d in &a.del {
                        state.remove(d);
                    }
                    state.extend(a.add.iter().cloned());
                    None
                }
            }
        };
        if let Some(kind) = failure {
            let last = frames.last_mut().unwrap();
            last.invalid = Some(kind.to_string());
            last.action = Some(step.to_string());
            return Rendering {
                frames,
                failed_step: Some(i),
                goal_unmet: false,
            };
        }
        frames.push(frame(i + 1, Some(step.to_string()), &state, None));
    }
    let goal_unmet = !problem.goal().iter().all(|g| state.contains(g));
    Rendering {
        frames,
        failed_step: None,
        goal_unmet,
    }
}
