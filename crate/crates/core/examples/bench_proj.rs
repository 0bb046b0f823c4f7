use gcs_tsp::{instance, Point};
use std::time::Instant;

fn main() {
    let inst = instance::generate(8, 2, 42).unwrap();
    let s = &inst.sets[3];
    let (c, _) = s.chebyshev_center();
    // typical PGD queries: slightly outside the set
    let queries: Vec<Point> = (0..32)
        .map(|k| {
            let a = k as f64 * 0.19634954;
            Point::new(vec![c.coords[0] + 0.6 * a.cos(), c.coords[1] + 0.6 * a.sin()])
        })
        .collect();
    let start = Instant::now();
    let reps = 20000;
    let mut acc = 0.0;
    for r in 0..reps {
        let q = &queries[r % queries.len()];
        let p = s.project(q, 1e-7).unwrap();
        acc += p.coords[0];
    }
    let el = start.elapsed().as_secs_f64();
    println!("project: {:.2} us/call (acc {acc:.1})", 1e6 * el / reps as f64);
}
