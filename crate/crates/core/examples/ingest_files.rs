//! Reading delimited response and covariate files with explicit covariate
//! types, then fitting the plain model.
//!
//! Run with `cargo run --release --example ingest_files`.

use std::fs;

use pcmift::api;
use pcmift::io::{ingest, CovariateTypes, IngestOptions};
use pcmift::FitOptions;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("pcmift_ingest_example");
    fs::create_dir_all(&dir)?;
    let responses = dir.join("responses.csv");
    let covariates = dir.join("covariates.csv");

    // Five-category items labelled 1..5, with age and gender.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut r = String::from("N1,N2,N3,N4,N5,N6,N7,N8\n");
    let mut c = String::from("age,gender\n");
    for _ in 0..300 {
        let level: i32 = rng.gen_range(0..5);
        let mut row: Vec<i32> = (0..8)
            .map(|_| (level + rng.gen_range(-1..=1)).clamp(0, 4) + 1)
            .collect();
        if row.iter().all(|&v| v == row[0]) {
            // constant rows would be rejected at ingestion
            row[0] = if row[0] == 1 { 2 } else { row[0] - 1 };
        }
        let row: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        r.push_str(&(row.join(",") + "\n"));
        let gender = if rng.gen_bool(0.5) { "female" } else { "male" };
        c.push_str(&format!("{},{gender}\n", rng.gen_range(18..80)));
    }
    fs::write(&responses, r)?;
    fs::write(&covariates, c)?;

    let types: CovariateTypes = "age=numeric,gender=binary".parse()?;
    let data = ingest(&responses, Some(&covariates), &types, &IngestOptions::default())?;
    println!(
        "{} persons, {} items, category labels {:?} mapped to 0..={}",
        data.responses.n_persons(),
        data.responses.n_items(),
        data.category_labels,
        data.responses.n_thresholds()
    );
    for (name, labels) in &data.binary_labels {
        println!("{name}: '{}' -> 0, '{}' -> 1", labels[0], labels[1]);
    }

    let (report, _) = api::fit(&data.responses, &data.item_names, &FitOptions::default())?;
    println!("deviance {:.2}, converged {}", report.deviance, report.converged);
    for item in &report.items {
        println!("{}: {:?}", item.name, item.thresholds.iter().map(|d| (d * 100.0).round() / 100.0).collect::<Vec<_>>());
    }

    // A covariate without a declared type is rejected.
    let err = ingest(&responses, Some(&covariates), &"age=numeric".parse()?, &IngestOptions::default())
        .unwrap_err();
    println!("\nwithout a gender type: {err}");
    Ok(())
}
