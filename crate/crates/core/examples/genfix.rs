// One-off generator for the frozen trap regression fixture.

use graphtrap_core::attacks::{trap_poison};
use graphtrap_core::gnn::{Arch, ModelConfig, TrainConfig};
use graphtrap_core::graphdata::{split, synth_dataset, ClassSpec};

fn main() {
    let d = synth_dataset(
        &[
            ClassSpec { nodes: 8, edge_prob: 0.25, count: 10 },
            ClassSpec { nodes: 8, edge_prob: 0.65, count: 10 },
        ],
        3,
        7,
    )
    .unwrap();
    let plan = split(&d, 0, 6).unwrap();
    let config = ModelConfig::new(Arch::Gcn, 3, 2).with_widths(&[6, 4]);
    let tcfg = TrainConfig { epochs: 4, seed: 3, ..TrainConfig::default() };
    let outcome = trap_poison(&d, &plan, 0, 3, &config, &tcfg).unwrap();
    for e in &outcome.plan.entries {
        let flips: Vec<String> = e.flips.iter().map(|(u, v)| format!("({u}, {v})")).collect();
        println!("({}, vec![{}]),", e.graph_id, flips.join(", "));
    }
}
