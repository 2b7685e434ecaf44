// Isolates the degree-normalization chain rule: f(A) = sum c (x) norm(A)
// has an exact analytic gradient; compare it against finite differences
// entry by entry.

use graphtrap_core::gnn::normalize_adjacency;
use graphtrap_core::numkit::Matrix;
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

fn f(a: &Matrix, c: &Matrix) -> f64 {
    let norm = normalize_adjacency(a);
    norm.values().iter().zip(c.values()).map(|(x, y)| x * y).sum()
}

fn main() {
    let n = 4;
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut a = Matrix::zeros(n, n);
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen::<f64>() < 0.5 {
                a.set(u, v, 1.0);
                a.set(v, u, 1.0);
            }
        }
    }
    let mut c = Matrix::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            c.set(u, v, rng.gen_range(-1.0..1.0));
        }
    }

    // Analytic per the implementation's formula.
    let mut tilde = a.clone();
    for u in 0..n {
        tilde.set(u, u, 1.0);
    }
    let degrees: Vec<f64> = (0..n).map(|u| tilde.row(u).iter().sum()).collect();
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut row_correction = vec![0.0f64; n];
    for p in 0..n {
        let mut sum = 0.0;
        for v in 0..n {
            sum += c.get(p, v) * tilde.get(p, v) * inv_sqrt[v];
            sum += c.get(v, p) * tilde.get(v, p) * inv_sqrt[v];
        }
        row_correction[p] = -0.5 * sum * inv_sqrt[p].powi(3);
    }

    let h = 1e-6;
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            let analytic = c.get(p, q) * inv_sqrt[p] * inv_sqrt[q] + row_correction[p];
            let orig = a.get(p, q);
            let mut probe = a.clone();
            probe.set(p, q, orig + h);
            let plus = f(&probe, &c);
            probe.set(p, q, orig - h);
            let minus = f(&probe, &c);
            let fd = (plus - minus) / (2.0 * h);
            let flag = if (analytic - fd).abs() > 1e-6 * analytic.abs().max(fd.abs()).max(1e-9) {
                " <-- MISMATCH"
            } else {
                ""
            };
            println!("({p},{q}): analytic {analytic:+.9} fd {fd:+.9}{flag}");
        }
    }
}
