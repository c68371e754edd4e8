pub mod bench;
pub mod cli;
pub mod llm;
pub mod mazenamo;
pub mod pddl;
pub mod pipeline;
pub mod planner;
pub mod rules;
pub mod scoring;
