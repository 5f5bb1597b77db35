//! Cross-module checks over a seeded suite of linear scenarios.

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use signed_consensus::classification::{classify, ClassifierConfig};
use signed_consensus::dynamics::{integrate, IntegratorConfig};
use signed_consensus::signed_graph::Schedule;
use signed_consensus::time_varying::analyze_schedule;

fn suite() -> Vec<(Schedule, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut out = Vec::new();
    for i in 0..80 {
        let n = 2 + i % 4;
        let s = if i % 3 == 0 {
            Schedule::constant(common::matrix(&mut rng, n, 0.6, true))
        } else {
            common::schedule(&mut rng, n)
        };
        out.push((s, common::state(&mut rng, n)));
    }
    out
}

/// A nonzero bipartite limit needs an essentially quasi-strongly connected
/// graph.
#[test]
fn bipartite_limits_need_eqsc() {
    let cfg = IntegratorConfig::with_step(1e-2);
    let ccfg = ClassifierConfig::default();
    let mut bipartite = 0;
    for (idx, (s, x0)) in suite().into_iter().enumerate() {
        let traj = integrate(&s, &x0, 80.0, &cfg).unwrap();
        let c = classify(&traj, &ccfg).unwrap();
        let x_star = c.outcome.x_star.unwrap_or(0.0);
        if c.outcome.kind.is_bipartite() && x_star > ccfg.tol {
            bipartite += 1;
            let report = analyze_schedule(&s, None).unwrap();
            assert!(report.eqsc, "scenario {idx}: {:?} without EQSC", c.outcome.kind);
        }
    }
    assert!(bipartite >= 5, "only {bipartite} bipartite runs; the suite is too weak");
}
