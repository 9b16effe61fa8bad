//! Fixtures shared by the criterion benchmarks.

use protolearn::data::{random_problem, ProblemShape};
use protolearn::{Dataset, Model};

/// A seeded problem of the requested size with a random model.
pub fn fixture(
    instances: usize,
    vectors: usize,
    dim: usize,
    k: usize,
    classes: usize,
) -> (Dataset, Model) {
    let shape = ProblemShape {
        instances,
        max_vectors: vectors,
        dim,
        k,
        classes,
        lambda: 0.1,
    };
    random_problem(&shape, 7).expect("valid fixture shape")
}
