//! Joint maximum likelihood fit of the partial credit model on simulated
//! responses, compared with the generating thresholds.
//!
//! Run with `cargo run --release --example fit_pcm`.

use pcmift::sim::{generate_dataset, preset};
use pcmift::{fit_pcm, FitOptions, Layout};

fn main() -> pcmift::Result<()> {
    let spec = preset("sim1-s3-nodif").expect("known preset");
    let data = generate_dataset(&spec, 0)?;
    let responses = &data.responses;
    println!(
        "{} persons (of {}), {} items, {} categories",
        responses.n_persons(),
        spec.n_persons,
        responses.n_items(),
        responses.n_categories()
    );

    let layout = Layout::root(responses.n_items(), responses.n_persons());
    let fit = fit_pcm(responses, &layout, &FitOptions::default())?;
    println!(
        "converged {} after {} iterations, deviance {:.3}, {} parameters",
        fit.converged, fit.iterations, fit.deviance, fit.n_parameters
    );

    let mut sq = 0.0;
    let mut n = 0;
    for (i, truth) in data.reference_thresholds.iter().enumerate() {
        let est = fit.params.centered_leaf_thresholds(i, 0);
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:+.2}")).collect::<Vec<_>>().join(" ");
        println!("item {}: true {}  fitted {}", i + 1, fmt(truth), fmt(&est));
        for (a, b) in est.iter().zip(truth) {
            sq += (a - b).powi(2);
            n += 1;
        }
    }
    println!("threshold RMSE {:.3}", (sq / n as f64).sqrt());
    Ok(())
}
