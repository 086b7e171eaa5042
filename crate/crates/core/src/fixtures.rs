//! Bundled datasets.
//!
//! * `korea`: three lists (B, C, D), 123 observed cases.
//! * `table1_n1` .. `table1_n4`: four-list tables differing only in which
//!   sparse cells are zero, used to exercise the existence check.

use crate::dataset::Dataset;
use crate::table::CountTable;

const KOREA: &str = include_str!("../data/korea.csv");
const TABLE1: [&str; 4] = [
    include_str!("../data/table1_n1.csv"),
    include_str!("../data/table1_n2.csv"),
    include_str!("../data/table1_n3.csv"),
    include_str!("../data/table1_n4.csv"),
];

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 5] = ["korea", "table1_n1", "table1_n2", "table1_n3", "table1_n4"];

pub fn korea_dataset() -> Dataset {
    Dataset::from_reader(KOREA.as_bytes()).expect("bundled fixture parses")
}

pub fn korea() -> CountTable {
    korea_dataset().table
}

/// Column `n_k` (k in 1..=4) of the four-list sparse example.
pub fn table1_dataset(k: usize) -> Dataset {
    assert!((1..=4).contains(&k), "table1 column must be 1..=4");
    Dataset::from_reader(TABLE1[k - 1].as_bytes()).expect("bundled fixture parses")
}

pub fn table1(k: usize) -> CountTable {
    table1_dataset(k).table
}

pub fn by_name(name: &str) -> Option<Dataset> {
    match name {
        "korea" => Some(korea_dataset()),
        "table1_n1" => Some(table1_dataset(1)),
        "table1_n2" => Some(table1_dataset(2)),
        "table1_n3" => Some(table1_dataset(3)),
        "table1_n4" => Some(table1_dataset(4)),
        _ => None,
    }
}
