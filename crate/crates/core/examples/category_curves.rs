//! Category probabilities of one item across the ability range.
//!
//! Run with `cargo run --example category_curves`.

use pcmift::{adjacent_logit, category_probabilities};

fn main() -> pcmift::Result<()> {
    let thresholds = [-1.5, -0.5, 0.5, 1.5];
    println!("theta\tP(0)\tP(1)\tP(2)\tP(3)\tP(4)");
    for step in -8..=8 {
        let theta = step as f64 * 0.5;
        let p = category_probabilities(theta, &thresholds)?;
        let cells: Vec<String> = p.iter().map(|v| format!("{v:.4}")).collect();
        println!("{theta:+.1}\t{}", cells.join("\t"));
    }

    // Where theta equals a threshold, the two adjacent categories are
    // equally likely.
    let p = category_probabilities(-0.5, &thresholds)?;
    println!("\nat theta = -0.5: P(1) = {:.4}, P(2) = {:.4}", p[1], p[2]);
    println!("log(P(2)/P(1)) = {:.4}", adjacent_logit(-0.5, thresholds[1])?);
    Ok(())
}
