//! A small Monte-Carlo study: a few replications of a preset scenario and
//! the resulting detection rates.
//!
//! Run with `cargo run --release --example simulate_study [preset] [replications]`.

use pcmift::sim::{preset, results_table, run_study};
use pcmift::tree::IftConfig;

fn main() -> pcmift::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "sim1-s1-strong".to_string());
    let replications = args.next().and_then(|r| r.parse().ok()).unwrap_or(5);

    let mut spec = preset(&name).expect("unknown preset");
    spec.replications = replications;
    let config = IftConfig {
        n_perm: 200,
        early_stop: true,
        ..IftConfig::default()
    };
    let study = run_study(&spec, &config)?;
    for rep in &study.replications {
        let flagged: Vec<usize> = rep
            .trees
            .iter()
            .filter(|t| t.has_dif())
            .map(|t| t.item + 1)
            .collect();
        println!("replication {}: {} persons, DIF items {:?}", rep.index, rep.n_persons, flagged);
    }
    print!("\n{}", results_table(&[study]));
    Ok(())
}
