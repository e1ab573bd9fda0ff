//! Text, JSON and plot-data renderings of a grown tree, and the JSON round
//! trip back to a tree.
//!
//! Run with `cargo run --release --example render_tree`.

use pcmift::report::{parse_tree, render_tree, TreeDocument};
use pcmift::sim::{generate_dataset, preset};
use pcmift::tree::{grow_trees, predict_item_thresholds, IftConfig};

fn main() -> pcmift::Result<()> {
    let spec = preset("sim3-strong").expect("known preset");
    let data = generate_dataset(&spec, 0)?;
    let config = IftConfig {
        n_perm: 200,
        ..IftConfig::default()
    };
    let growth = grow_trees(&data.responses, &data.covariates, &config)?;
    let names = vec!["x".to_string()];
    let tree = &growth.trees[4];

    let rendered = render_tree(tree, &growth.fit, "item5", &names)?;
    print!("{}", rendered.text);
    println!("\nplot data:");
    for p in &rendered.plot {
        println!(
            "  leaf {} ({}) threshold {}: {:.3}{}",
            p.leaf,
            p.node_spec,
            p.threshold,
            p.value,
            if p.truncated { " (truncated)" } else { "" }
        );
    }

    let json = serde_json::to_string_pretty(&rendered.document)?;
    println!("\n{json}");
    let doc: TreeDocument = serde_json::from_str(&json)?;
    let back = parse_tree(&doc)?;
    let agree = (0..data.covariates.n_persons()).all(|p| {
        let row = data.covariates.row(p);
        predict_item_thresholds(tree, &row) == predict_item_thresholds(&back, &row)
    });
    println!("round trip agrees on every person: {agree}");
    Ok(())
}
