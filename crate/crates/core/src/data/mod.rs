//! File formats, synthetic generators, record grouping and splits.

mod io;
mod records;
mod split;
mod synthetic;

pub use io::{
    load_dataset, load_model, model_from_str, model_to_string, read_dataset, save_dataset,
    save_model, write_dataset,
};
pub use records::{group_records_to_soft_labels, Record, RecordTable};
pub use split::{stratified_split, Split};
pub use synthetic::{generate_figure1_toy, random_problem, ProblemShape, SyntheticConfig};
