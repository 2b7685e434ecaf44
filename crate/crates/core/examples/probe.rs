// Scratch driver for eyeballing trend numbers on the canonical
// synthetic dataset. Not part of the test suite.

use graphtrap_core::attacks::AttackKind;
use graphtrap_core::defense::DefenseConfig;
use graphtrap_core::gnn::Arch;
use graphtrap_core::graphdata::{synth_dataset, ClassSpec};
use graphtrap_core::harness::Lab;
use std::time::Instant;

fn main() {
    let d = synth_dataset(
        &[
            ClassSpec { nodes: 12, edge_prob: 0.2, count: 60 },
            ClassSpec { nodes: 12, edge_prob: 0.6, count: 60 },
        ],
        4,
        2024,
    )
    .unwrap();
    let seeds = [1u64, 2, 3, 4, 5];
    let lab = Lab {
        dataset_name: "synthetic-er".into(),
        jobs: 8,
        ..Lab::default()
    };

    let t = Instant::now();
    let trap = lab.run_effectiveness(&d, AttackKind::Trap, &seeds).unwrap();
    let rand = lab.run_effectiveness(&d, AttackKind::Random, &seeds).unwrap();
    let ta = trap.mean_for("gcn", None).unwrap();
    let ra = rand.mean_for("gcn", None).unwrap();
    println!("== Q1 effectiveness ({:.1}s)", t.elapsed().as_secs_f64());
    println!(
        "trap:   clean_acc {:.4} backdoor_acc {:.4} asr {:.4} cad {:+.4}",
        ta.mean_clean_acc, ta.mean_backdoor_acc, ta.mean_asr, ta.mean_cad
    );
    println!(
        "random: clean_acc {:.4} backdoor_acc {:.4} asr {:.4} cad {:+.4}",
        ra.mean_clean_acc, ra.mean_backdoor_acc, ra.mean_asr, ra.mean_cad
    );
    for cell in &trap.cells {
        println!(
            "  trap seed {} asr {:.4} clean {:.4} cad {:+.4} ({:.2}s)",
            cell.seed, cell.asr, cell.clean_acc, cell.cad, cell.runtime_s
        );
    }

    let t = Instant::now();
    let victims = [Arch::Gin, Arch::Gsage];
    let trap_tx = lab.run_transfer(&d, AttackKind::Trap, &victims, true, &seeds).unwrap();
    let rand_tx = lab.run_transfer(&d, AttackKind::Random, &victims, true, &seeds).unwrap();
    println!("== Q2 transfer ({:.1}s)", t.elapsed().as_secs_f64());
    for v in ["gin", "gsage"] {
        println!(
            "{v}: trap asr {:.4} vs random asr {:.4}",
            trap_tx.mean_for(v, None).unwrap().mean_asr,
            rand_tx.mean_for(v, None).unwrap().mean_asr
        );
    }

    let t = Instant::now();
    let rates = lab.run_rate_sweep(&d, &[0.01, 0.03, 0.05, 0.07], &seeds).unwrap();
    println!("== Q4 rate sweep ({:.1}s)", t.elapsed().as_secs_f64());
    for r in ["0.01", "0.03", "0.05", "0.07"] {
        let a = rates.mean_for("gcn", Some(r)).unwrap();
        println!("rate {r}: asr {:.4} cad {:+.4}", a.mean_asr, a.mean_cad);
    }

    let t = Instant::now();
    let budgets = lab.run_budget_sweep(&d, &[1, 3, 5, 7], &seeds).unwrap();
    println!("== Q5 budget sweep ({:.1}s)", t.elapsed().as_secs_f64());
    for b in ["1", "3", "5", "7"] {
        let a = budgets.mean_for("gcn", Some(b)).unwrap();
        println!("budget {b}: asr {:.4} cad {:+.4}", a.mean_asr, a.mean_cad);
    }

    let t = Instant::now();
    let lab3 = Lab { victims: vec![Arch::Gcn, Arch::Gin, Arch::Gsage], ..lab.clone() };
    let defense = lab3
        .run_defense(&d, AttackKind::Trap, &DefenseConfig::default(), &seeds)
        .unwrap();
    println!("== defense ({:.1}s)", t.elapsed().as_secs_f64());
    for v in ["gcn", "gin", "gsage"] {
        let plain = defense.mean_for(v, Some("undefended")).unwrap();
        let defended = defense.mean_for(v, Some("defended")).unwrap();
        println!(
            "{v}: clean {:.4} -> {:.4}; asr {:.4} -> {:.4} (ratio {:.2})",
            plain.mean_clean_acc,
            defended.mean_clean_acc,
            plain.mean_asr,
            defended.mean_asr,
            defended.mean_asr / plain.mean_asr.max(1e-9)
        );
    }
}
