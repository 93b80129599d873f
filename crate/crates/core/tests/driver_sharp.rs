//! Accessibility driver runs on the sharp instances: the trace certifies the
//! exact edge counts against the rank bound.

use foldlab::constructions::{build_sharp_example, build_torsionfree_sharp, driver_sharp_run};
use foldlab::driver::{run_driver, trace_weights_monotone, DriverConfig, DriverMode};
use foldlab::influence::SeedSet;
use foldlab::pclass::{PClass, Weight};

fn run_instance(k: u32, r: u32, torsion_free: bool) {
    let run = driver_sharp_run(k, r, torsion_free).unwrap();
    let cfg = DriverConfig {
        k,
        mode: DriverMode::FgQuotient,
        budget: 10_000,
        target: Some(run.target.clone()),
        resolution_bound: Some(run.rank as u64),
    };
    let trace = run_driver(
        &run.start,
        &run.schedule,
        &SeedSet::empty(),
        &PClass::trivial_only(),
        &cfg,
    )
    .unwrap();
    assert!(trace_weights_monotone(&trace), "trace not monotone:\n{}", trace.to_text());
    assert!(!trace.budget_exhausted);
    // The driver ends on a point having collapsed the whole tree.
    assert_eq!(trace.final_edges, 0, "k={} r={} tf={}\n{}", k, r, torsion_free, trace.to_text());
    assert_eq!(trace.final_weight, Weight::Finite(0));
    assert_eq!(
        trace.total_collapsed, run.reference_edges,
        "k={} r={} tf={} trace:\n{}",
        k, r, torsion_free, trace.to_text()
    );
    // Initial weight 2(r-1); final count within 2^M k (rank - 1) with M = 1.
    assert_eq!(trace.initial_weight, Weight::Finite(2 * (r as u64 - 1)));
    assert!(trace.k_w_bound_holds(trace.total_collapsed));
    // The built tree agrees with the reference count.
    let built = if torsion_free {
        build_torsionfree_sharp(k, r).unwrap()
    } else {
        build_sharp_example(k, r).unwrap()
    };
    assert_eq!(built.splitting.edge_count(), run.reference_edges);
    // Cyclic stage fires exactly once per run.
    assert!(trace.cyclic_stage_fired);
    let cap = if torsion_free { k as usize } else { (3 * k as usize) / 2 };
    assert!(trace.cyclic_stage_spend <= cap);
}

#[test]
fn driver_sharp_2_2() {
    run_instance(2, 2, false);
}

#[test]
fn driver_sharp_2_3() {
    run_instance(2, 3, false);
}

#[test]
fn driver_sharp_4_3() {
    run_instance(4, 3, false);
}

#[test]
fn driver_torsionfree_2_3() {
    run_instance(2, 3, true);
}

#[test]
fn driver_sharp_k1() {
    run_instance(1, 2, false);
    run_instance(1, 3, true);
}
