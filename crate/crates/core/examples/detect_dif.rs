//! Full DIF detection: grow one tree per item and print the summary, the
//! trees and the audit log.
//!
//! Run with `cargo run --release --example detect_dif`.

use pcmift::api::{default_item_names, detect};
use pcmift::sim::{generate_dataset, preset};
use pcmift::tree::IftConfig;

fn main() -> pcmift::Result<()> {
    let spec = preset("sim2-s1-strong").expect("known preset");
    let data = generate_dataset(&spec, 2)?;
    let names = default_item_names(data.responses.n_items());
    let config = IftConfig {
        n_perm: 200,
        rng_seed: 7,
        ..IftConfig::default()
    };
    let detection = detect(&data.responses, &data.covariates, &names, &config)?;
    let report = &detection.report;

    println!("generating DIF: item 5 on x1 (binary, split at 0)\n");
    for d in &report.dif_items {
        println!("DIF in {} via {} (p = {:?})", d.name, d.variables.join(", "), d.p_values);
    }
    println!("stopped: {}\n", report.stop_reason);
    for r in &detection.rendered {
        print!("{}", r.text);
    }
    println!("\n{}", report.audit_log());
    Ok(())
}
