//! MazeNamo: grid navigation among movable obstacles.
//!
//! A robot walks between grid cells (`p{row}_{col}`). Heavy boxes can only
//! be pushed, light boxes can also be picked up and placed, and a light box
//! may sit on top of a heavy one (`upon`), hiding it until removed. Pillars
//! never move.

mod generate;
mod render;

use std::sync::OnceLock;

use crate::pddl::{parse_domain, Domain};

pub use generate::{
    generate, Difficulty, GenerateError, GridSpec, Instance, InstanceMeta, ObstacleKind,
    ObstacleMeta,
};
pub use render::{render, Frame, GridLayout, Rendering};

pub const DOMAIN_NAME: &str = "mazenamo";
pub const ROBOT: &str = "r1";

/// (action suffix, adjacency predicate)
pub const DIRECTIONS: [(&str, &str); 4] = [
    ("up", "upTo"),
    ("down", "downTo"),
    ("left", "leftTo"),
    ("right", "rightTo"),
];

pub fn cell_name(row: usize, col: usize) -> String {
    format!("p{row}_{col}")
}

/// Inverse of [`cell_name`].
pub fn parse_cell(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix('p')?;
    let (r, c) = rest.split_once('_')?;
    Some((r.parse().ok()?, c.parse().ok()?))
}

/// The domain file. Written in the usual camelCase; the parser folds it.
pub fn domain_text() -> String {
    let mut s = String::from(
        "; MazeNamo: navigation among movable obstacles on a grid.\n\
         (define (domain mazenamo)\n\
         \x20 (:requirements :strips :typing)\n\
         \x20 (:types position obstacle robot)\n\
         \x20 (:predicates\n\
         \x20   (rAt ?r - robot ?p - position)\n\
         \x20   (oAt ?o - obstacle ?p - position)\n\
         \x20   (posEmpty ?p - position)\n\
         \x20   (isLight ?o - obstacle)\n\
         \x20   (isMoveable ?o - obstacle)\n\
         \x20   (clear ?o - obstacle)\n\
         \x20   (upon ?top - obstacle ?bottom - obstacle)\n\
         \x20   (upTo ?from - position ?to - position)\n\
         \x20   (downTo ?from - position ?to - position)\n\
         \x20   (leftTo ?from - position ?to - position)\n\
         \x20   (rightTo ?from - position ?to - position)\n\
         \x20   (holding ?r - robot ?o - obstacle)\n\
         \x20   (handEmpty ?r - robot))\n",
    );
    for (dir, adj) in DIRECTIONS {
        s.push_str(&format!(
            r#"
  (:action move-{dir}
    :parameters (?r - robot ?from ?to - position)
    :precondition (and (rAt ?r ?from) ({adj} ?from ?to) (posEmpty ?to))
    :effect (and (rAt ?r ?to) (not (rAt ?r ?from))))

  (:action push-{dir}
    :parameters (?r - robot ?from - position ?o - obstacle ?opos ?dest - position)
    :precondition (and (rAt ?r ?from) ({adj} ?from ?opos) (oAt ?o ?opos) (isMoveable ?o)
                       (clear ?o) ({adj} ?opos ?dest) (posEmpty ?dest))
    :effect (and (rAt ?r ?opos) (oAt ?o ?dest) (posEmpty ?opos)
                 (not (rAt ?r ?from)) (not (oAt ?o ?opos)) (not (posEmpty ?dest))))

  (:action pick-{dir}
    :parameters (?r - robot ?from - position ?o - obstacle ?opos - position)
    :precondition (and (rAt ?r ?from) ({adj} ?from ?opos) (oAt ?o ?opos) (isLight ?o)
                       (clear ?o) (handEmpty ?r))
    :effect (and (holding ?r ?o) (posEmpty ?opos) (not (oAt ?o ?opos)) (not (handEmpty ?r))))

  (:action unstack-{dir}
    :parameters (?r - robot ?from - position ?o ?under - obstacle ?opos - position)
    :precondition (and (rAt ?r ?from) ({adj} ?from ?opos) (upon ?o ?under) (oAt ?under ?opos)
                       (isLight ?o) (clear ?o) (handEmpty ?r))
    :effect (and (holding ?r ?o) (clear ?under) (not (upon ?o ?under)) (not (handEmpty ?r))))

  (:action place-{dir}
    :parameters (?r - robot ?from - position ?o - obstacle ?to - position)
    :precondition (and (rAt ?r ?from) ({adj} ?from ?to) (holding ?r ?o) (isLight ?o) (posEmpty ?to))
    :effect (and (oAt ?o ?to) (handEmpty ?r) (not (holding ?r ?o)) (not (posEmpty ?to))))
"#
        ));
    }
    s.push_str(")\n");
    s
}

/// The parsed MazeNamo domain (parsed once, then shared).
pub fn author_domain() -> Domain {
    static DOMAIN: OnceLock<Domain> = OnceLock::new();
    DOMAIN
        .get_or_init(|| parse_domain(&domain_text()).expect("bundled domain parses"))
        .clone()
}
