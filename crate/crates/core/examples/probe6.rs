// Deep validation of the canonical fixture (data seed 8) on every
// acceptance trend, across disjoint experiment-seed sets.
// Defense here models subsample_ratio as the KEPT fraction: drop = 0.9.

use graphtrap_core::attacks::AttackKind;
use graphtrap_core::defense::DefenseConfig;
use graphtrap_core::gnn::Arch;
use graphtrap_core::graphdata::{synth_dataset, ClassSpec};
use graphtrap_core::harness::Lab;

fn main() {
    let d = synth_dataset(
        &[
            ClassSpec { nodes: 12, edge_prob: 0.6, count: 60 },
            ClassSpec { nodes: 12, edge_prob: 0.2, count: 60 },
        ],
        4,
        8,
    )
    .unwrap();
    let lab = Lab { dataset_name: "syn".into(), jobs: 10, ..Lab::default() };
    let seed_sets: [Vec<u64>; 3] = [(1..=5).collect(), (6..=10).collect(), (11..=15).collect()];

    for seeds in &seed_sets {
        println!("=== seeds {seeds:?}");
        let trap = lab.run_effectiveness(&d, AttackKind::Trap, seeds).unwrap();
        let rand = lab.run_effectiveness(&d, AttackKind::Random, seeds).unwrap();
        let t = trap.mean_for("gcn", None).unwrap();
        let r = rand.mean_for("gcn", None).unwrap();
        println!(
            "Q1: clean {:.3} trap_asr {:.3} rand_asr {:.3} gap {:+.3} cad {:+.3}",
            t.mean_clean_acc,
            t.mean_asr,
            r.mean_asr,
            t.mean_asr - r.mean_asr,
            t.mean_cad
        );

        let victims = [Arch::Gin, Arch::Gsage];
        let ttx = lab.run_transfer(&d, AttackKind::Trap, &victims, true, seeds).unwrap();
        let rtx = lab.run_transfer(&d, AttackKind::Random, &victims, true, seeds).unwrap();
        for v in ["gin", "gsage"] {
            let tv = ttx.mean_for(v, None).unwrap().mean_asr;
            let rv = rtx.mean_for(v, None).unwrap().mean_asr;
            println!("Q2 {v}: trap {tv:.3} rand {rv:.3} ok={}", tv >= rv);
        }

        let rates = lab.run_rate_sweep(&d, &[0.01, 0.03, 0.05, 0.07], seeds).unwrap();
        let r1 = rates.mean_for("gcn", Some("0.01")).unwrap().mean_asr;
        let r7 = rates.mean_for("gcn", Some("0.07")).unwrap().mean_asr;
        println!("Q4: rate 1% {r1:.3} -> 7% {r7:.3} ok={}", r7 >= r1);

        let budgets = lab.run_budget_sweep(&d, &[1, 3, 5, 7], seeds).unwrap();
        let b1 = budgets.mean_for("gcn", Some("1")).unwrap().mean_asr;
        let b5 = budgets.mean_for("gcn", Some("5")).unwrap().mean_asr;
        println!("Q5: budget 1 {b1:.3} -> 5 {b5:.3} ok={}", b5 >= b1);

        let lab3 = Lab { victims: vec![Arch::Gcn, Arch::Gin, Arch::Gsage], ..lab.clone() };
        // subsample_ratio = kept fraction; views drop 1 - 0.10 of edges.
        let dcfg = DefenseConfig { subsample_ratio: 0.10, num_views: 10, seed: 0 };
        let def = lab3.run_defense(&d, AttackKind::Trap, &dcfg, seeds).unwrap();
        let mut any_ratio = false;
        for v in ["gcn", "gin", "gsage"] {
            let u = def.mean_for(v, Some("undefended")).unwrap();
            let dd = def.mean_for(v, Some("defended")).unwrap();
            let ratio = dd.mean_asr / u.mean_asr.max(1e-9);
            any_ratio |= ratio >= 0.5;
            println!(
                "Q-def {v}: clean {:.3} -> {:.3} (delta {:+.3}) asr {:.3} -> {:.3} ratio {:.2}",
                u.mean_clean_acc,
                dd.mean_clean_acc,
                dd.mean_clean_acc - u.mean_clean_acc,
                u.mean_asr,
                dd.mean_asr,
                ratio
            );
        }
        println!("Q-def any victim ratio>=0.5: {any_ratio}");
    }
}
