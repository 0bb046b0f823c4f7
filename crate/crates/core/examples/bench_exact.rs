use gcs_tsp::{exact, instance};
use std::time::Instant;

fn main() {
    for n in [6usize, 7, 8] {
        let mut te = 0.0;
        let mut tl = 0.0;
        let mut nodes = 0usize;
        let reps = 3;
        for seed in 0..reps {
            let inst = instance::generate(n, 2, 7000 + seed).unwrap();
            let c = instance::bounded_matrix(&inst, 1e-8).unwrap();
            let t0 = Instant::now();
            let e = exact::solve_enumeration(&inst, 1e-7).unwrap();
            te += t0.elapsed().as_secs_f64();
            let t0 = Instant::now();
            let l = exact::solve_lattice(&inst, &c, 1e-7, 10_000_000).unwrap();
            tl += t0.elapsed().as_secs_f64();
            nodes += l.nodes;
            assert!((e.cost - l.cost).abs() <= 1e-6 * e.cost, "n={n} seed={seed}: {} vs {}", e.cost, l.cost);
        }
        println!(
            "n={n}: enum {:.2}s lattice {:.2}s ({} states avg) per instance",
            te / reps as f64,
            tl / reps as f64,
            nodes / reps as usize
        );
    }
}
