//! Generates one instance per difficulty and prints its metadata.

use pruneplan::mazenamo::{generate, Difficulty, GridSpec};

fn main() {
    for d in Difficulty::ALL {
        let inst = generate(&GridSpec::square(10, d, 1)).expect("instance");
        let m = &inst.meta;
        println!(
            "{}: {} obstacles, {} objects, witness {} steps ({})",
            m.name,
            m.obstacles.len(),
            inst.problem.objects().len(),
            m.witness_length,
            m.certified_by
        );
    }
}
