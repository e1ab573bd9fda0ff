//! Exhaustive search for the best first split: every item, covariate and
//! admissible split point is tried with a joint refit.
//!
//! Run with `cargo run --release --example split_search`.

use pcmift::sim::{generate_dataset, preset};
use pcmift::tree::{best_split_search, enumerate_split_points, IftConfig, SearchOutcome};
use pcmift::{fit_pcm, ItemPartition};

fn main() -> pcmift::Result<()> {
    let spec = preset("sim2-s1-strong").expect("known preset");
    let data = generate_dataset(&spec, 1)?;
    let (responses, covariates) = (&data.responses, &data.covariates);
    let config = IftConfig::default();

    let everyone: Vec<usize> = (0..responses.n_persons()).collect();
    for column in covariates.columns() {
        let points = enumerate_split_points(&column.values, &everyone, config.min_node_size)?;
        println!("{} ({}): {} split points", column.name, column.kind, points.len());
    }

    let partition = ItemPartition::root(responses.n_items(), responses.n_persons());
    let root = fit_pcm(responses, partition.layout(), &config.fit)?;
    match best_split_search(responses, covariates, &partition, &root, &config)? {
        SearchOutcome::Exhausted => println!("no admissible split"),
        SearchOutcome::Found {
            best,
            fit,
            n_candidates,
        } => {
            println!("{n_candidates} candidate models fitted");
            println!(
                "best: item {} on {} at {} (T = {:.3}, {} | {} persons)",
                best.item + 1,
                covariates.column(best.variable).name,
                best.split_point,
                best.lr_statistic,
                best.left_count,
                best.right_count
            );
            println!("deviance {:.3} -> {:.3}", root.deviance, fit.deviance);
        }
    }
    Ok(())
}
