#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SCHEMA: &str = "\
# synthetic customers
feature age continuous
feature hours continuous
feature colour categorical red,green,blue
feature member categorical no,yes
label plan
";

/// Label as a depth-two tree of the features: members take `gold`; others split on age.
pub fn plan(age: f64, member: bool) -> &'static str {
    if member {
        "gold"
    } else if age <= 40.0 {
        "basic"
    } else {
        "plus"
    }
}

/// Writes `rows` synthetic rows plus the schema declaration into `dir`. With `noise > 0` that
/// fraction of labels is replaced by a uniformly drawn plan.
pub fn write_dataset(dir: &Path, rows: usize, seed: u64, noise: f64) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::from("id,age,hours,colour,member,plan\n");
    for i in 0..rows {
        let age: f64 = rng.random_range(18.0..80.0);
        let hours: f64 = rng.random_range(0.0..60.0);
        let colour = ["red", "green", "blue"][rng.random_range(0..3)];
        let member = rng.random_bool(0.3);
        let mut label = plan(age, member);
        if rng.random_bool(noise) {
            label = ["gold", "basic", "plus"][rng.random_range(0..3)];
        }
        writeln!(text, "{i},{age:.3},{hours:.2},{colour},{},{label}", if member { "yes" } else { "no" }).unwrap();
    }
    let data = dir.join("data.csv");
    let schema = dir.join("schema.txt");
    std::fs::write(&data, text).unwrap();
    std::fs::write(&schema, SCHEMA).unwrap();
    (data, schema)
}
