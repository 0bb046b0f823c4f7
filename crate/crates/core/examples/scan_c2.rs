use gcs_tsp::{exact, instance};
use rayon::prelude::*;

fn main() {
    for n in 4..=8usize {
        let bad: Vec<String> = (0..100u64)
            .into_par_iter()
            .filter_map(|i| {
                let seed = 20_000 + 100 * n as u64 + i;
                let inst = instance::generate(n, 2, seed).unwrap();
                let c = match instance::bounded_matrix(&inst, 1e-8) {
                    Ok(c) => c,
                    Err(e) => return Some(format!("n={n} seed={seed} matrix: {e}")),
                };
                let e = match exact::solve_enumeration(&inst, 1e-7) {
                    Ok(r) => r,
                    Err(e) => return Some(format!("n={n} seed={seed} enum: {e}")),
                };
                let l = match exact::solve_lattice(&inst, &c, 1e-7, 10_000_000) {
                    Ok(r) => r,
                    Err(err) => return Some(format!("n={n} seed={seed} lattice: {err}")),
                };
                let rel = (e.cost - l.cost).abs() / e.cost.max(1.0);
                (rel > 1e-6).then(|| format!("n={n} seed={seed} gap {rel:.3e}"))
            })
            .collect();
        println!("n={n}: {} problems", bad.len());
        for b in bad {
            println!("  {b}");
        }
    }
}
