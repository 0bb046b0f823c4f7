use gcs_tsp::{convex, instance};
use std::time::Instant;

fn main() {
    for n in [5usize, 8] {
        let inst = instance::generate(n, 2, 42).unwrap();
        let order: Vec<usize> = (0..n).collect();
        let t = convex::Topology::tour(&order).unwrap();
        let r = convex::realize(&t, &inst.sets, 1e-7, None).unwrap();
        let start = Instant::now();
        let reps = 200;
        let mut acc = 0.0;
        for _ in 0..reps {
            let r = convex::realize(&t, &inst.sets, 1e-7, None).unwrap();
            acc += r.cost;
        }
        let el = start.elapsed().as_secs_f64();
        println!(
            "n={n}: {:.3} ms/realize  iters={} cost={:.6} residual={:.2e} (acc {acc:.1})",
            1000.0 * el / reps as f64,
            r.iterations,
            r.cost,
            r.residual
        );
    }
}
