//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Every tolerance is exact and pinned in the assertions below; the random
//! suites run on fixed seeds.

use foldlab::ball::{expand_ball, BallConfig, QClass, VerdictStatus};
use foldlab::constructions::{
    build_f2_example, build_generic_chain, build_sharp_example, build_torsionfree_sharp,
    driver_sharp_run, verification_ball_config, BuiltExample,
};
use foldlab::driver::{
    certify_edge_bound, collapse_large_connector, run_driver, trace_weights_monotone,
    update_seeds_after_fold, DriverConfig, DriverMode,
};
use foldlab::fold::{apply_fold, replay_schedule, ScheduleStep};
use foldlab::influence::{
    connecting_multiset, forest_distance, grow_forest_ordered, seed_weight, GrowOrder, SeedSet,
};
use foldlab::pclass::{PClass, Weight};
use foldlab::splitting::Splitting;
use foldlab::testkit;
use foldlab::word::{enumerate_ambient, Word};

fn report(criterion: &str, pass: bool, detail: String) {
    println!(
        "ACCEPTANCE {}: {} ({})",
        criterion,
        if pass { "PASS" } else { "FAIL" },
        detail
    );
    assert!(pass, "criterion {} failed: {}", criterion, detail);
}

fn sharp_expected(k: u32, r: u32) -> usize {
    ((4 * r as i64 - 5) * k as i64 / 2) as usize
}

#[test]
fn criterion_1_sharp_edge_counts() {
    let mut ok = true;
    let mut detail = String::new();
    for k in 1..=6 {
        for r in 2..=4 {
            let built = build_sharp_example(k, r).unwrap();
            let expect = sharp_expected(k, r);
            if built.splitting.edge_count() != expect {
                ok = false;
                detail.push_str(&format!(
                    "(k={},r={}): got {} want {}; ",
                    k,
                    r,
                    built.splitting.edge_count(),
                    expect
                ));
            }
        }
    }
    let fourteen = build_sharp_example(4, 3).unwrap().splitting.edge_count();
    if fourteen != 14 {
        ok = false;
        detail.push_str(&format!("(4,3) gave {} edges; ", fourteen));
    }
    report(
        "1 sharp-example edge counts",
        ok,
        if detail.is_empty() {
            "grid k=1..6, r=2..4 exact; (4,3)=14".into()
        } else {
            detail
        },
    );
}

#[test]
fn criterion_2_torsionfree_counts() {
    let mut ok = true;
    let mut detail = String::new();
    for k in 1..=6 {
        for r in 2..=4 {
            let built = build_torsionfree_sharp(k, r).unwrap();
            let expect = ((2 * r - 3) * k) as usize;
            if built.splitting.edge_count() != expect {
                ok = false;
                detail.push_str(&format!(
                    "(k={},r={}): got {} want {}; ",
                    k,
                    r,
                    built.splitting.edge_count(),
                    expect
                ));
            }
        }
    }
    let six = build_torsionfree_sharp(2, 3).unwrap().splitting.edge_count();
    if six != 6 {
        ok = false;
        detail.push_str(&format!("(2,3) gave {} edges; ", six));
    }
    report(
        "2 torsion-free sharp counts",
        ok,
        if detail.is_empty() {
            "grid k=1..6, r=2..4 exact; (2,3)=6".into()
        } else {
            detail
        },
    );
}

#[test]
fn criterion_3_f2_example() {
    let mut ok = true;
    let mut detail = String::new();
    for n in 1..=6u32 {
        let built = build_f2_example(n).unwrap();
        if built.splitting.edge_count() != n as usize {
            ok = false;
            detail.push_str(&format!("N={}: {} edges; ", n, built.splitting.edge_count()));
            continue;
        }
        let reduced = built
            .splitting
            .check_reducedness(&PClass::trivial_only())
            .reduced;
        if !reduced {
            ok = false;
            detail.push_str(&format!("N={}: not reduced; ", n));
            continue;
        }
        // Balls of radius 4 from every orbit; word bound 12 caps the link
        // searches (generator depth 3 within the cap).
        let cfg = BallConfig {
            radius: 4,
            link_depth: 3,
            max_cosets: 4,
            max_cells: 12_000,
        };
        for v in built.splitting.vertex_ids() {
            let ball = expand_ball(&built.splitting, v, &cfg);
            let verdict = ball.check_acylindricity(1, &QClass::NonCyclic);
            if verdict.status == VerdictStatus::Fail {
                ok = false;
                detail.push_str(&format!("N={} orbit {}: acyl fail; ", n, v));
            }
        }
    }
    report(
        "3 F2 example",
        ok,
        if detail.is_empty() {
            "N<=6: N orbits, reduced, 1-acylindrical on non-cyclic at radius 4".into()
        } else {
            detail
        },
    );
}

fn sharpness_instance(built: &BuiltExample, k: u32) -> Result<(), String> {
    let sp = &built.splitting;
    // Failure witness at k-1 (for k=1 the parameter is 0: any nontrivially
    // stabilized edge is a witness).
    let cfg = BallConfig {
        radius: k + 1,
        link_depth: 3,
        max_cosets: 8,
        max_cells: 30_000,
    };
    let mut failed = None;
    for v in sp.vertex_ids() {
        let ball = expand_ball(sp, v, &cfg);
        let verdict = ball.check_acylindricity(k - 1, &QClass::AllNontrivial);
        if verdict.status == VerdictStatus::Fail {
            failed = Some(verdict);
            break;
        }
    }
    let verdict = failed.ok_or("no failure witness at k-1")?;
    let (_, stab) = verdict.witness.as_ref().unwrap();
    // The witness stabilizer is a conjugate of a power of a: it must be a
    // nontrivial cyclic group all of whose short elements share a root with
    // a positioned conjugate of a.
    if stab.kurosh_profile().is_trivial() {
        return Err("witness stabilizer trivial".into());
    }
    // Fixed-set diameter of the torsion powers equals k exactly.
    let pres = sp.presentation();
    let a = Word::parse(pres, "a").unwrap();
    let ball = expand_ball(sp, built.a_vertex, &cfg);
    let mut best = 0;
    match built.primes {
        Some((p, q)) => {
            for m in 1..(p * q) {
                best = best.max(ball.fixed_set(&a.pow(pres, m as i64)).diameter());
            }
        }
        None => {
            best = ball.fixed_set(&a).diameter();
        }
    }
    if best != k {
        return Err(format!("fixed diameter {} != k = {}", best, k));
    }
    Ok(())
}

#[test]
fn criterion_4_sharpness_witness() {
    let mut ok = true;
    let mut detail = String::new();
    for (k, r) in [(1u32, 2u32), (2, 2), (2, 3), (3, 3), (4, 3)] {
        let built = build_sharp_example(k, r).unwrap();
        if let Err(e) = sharpness_instance(&built, k) {
            ok = false;
            detail.push_str(&format!("sharp({},{}): {}; ", k, r, e));
        }
    }
    for (k, r) in [(1u32, 2u32), (2, 2), (2, 3), (3, 3)] {
        let built = build_torsionfree_sharp(k, r).unwrap();
        if let Err(e) = sharpness_instance(&built, k) {
            ok = false;
            detail.push_str(&format!("tf({},{}): {}; ", k, r, e));
        }
    }
    report(
        "4 sharpness witness",
        ok,
        if detail.is_empty() {
            "fail at k-1 with a-power witness; fixed diameter = ceil(k/2)+floor(k/2)".into()
        } else {
            detail
        },
    );
}

#[test]
fn criterion_5_weight_monotonicity() {
    let mut steps = 0usize;
    let mut violations = Vec::new();
    let mut seed = 0u64;
    let mut rng = testkit::rng(0xfeed);
    while steps < 1000 {
        seed += 1;
        let sp = testkit::random_splitting(seed, 5);
        let seeds = testkit::random_seed_set(&mut rng, &sp);
        let pclass = if seed % 2 == 0 {
            PClass::trivial_only()
        } else {
            PClass::cyclic()
        };
        if seed_weight(&sp, &seeds, &pclass).is_err() {
            continue;
        }
        let folds = testkit::enumerate_folds(&sp, 2, 6);
        for m in folds.iter().take(3) {
            // Route large connectors to the collapse stage first, as the
            // driver does.
            let mut work = sp.clone();
            let mut work_seeds = seeds.clone();
            let mut routed = 0;
            while let Ok(ledger) = seed_weight(&work, &work_seeds, &pclass) {
                if !ledger.connecting.iter().any(|(_, _, w)| w.is_one()) {
                    break;
                }
                match collapse_large_connector(&work, &work_seeds, &pclass, 6) {
                    Ok(c) => {
                        if c.weight_after >= c.weight_before {
                            violations.push(format!("seed {}: collapse did not drop", seed));
                        }
                        work = c.splitting;
                        work_seeds = c.seeds;
                        routed += 1;
                        if routed > 8 {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
            let m = if routed == 0 {
                m.clone()
            } else {
                // The splitting changed; refresh the fold candidates.
                match testkit::enumerate_folds(&work, 2, 3).into_iter().next() {
                    Some(m) => m,
                    None => continue,
                }
            };
            let outcome = match apply_fold(&work, &m) {
                Ok(o) => o,
                Err(_) => continue,
            };
            match update_seeds_after_fold(&work, &m, &outcome, &work_seeds, &pclass) {
                Ok(update) => {
                    steps += 1;
                    if update.ledger_after.total > update.ledger_before.total {
                        violations.push(format!(
                            "seed {}: weight {} -> {}",
                            seed, update.ledger_before.total, update.ledger_after.total
                        ));
                    }
                    if update.weight_preserved
                        && !update.injective_on_seeds
                        && update.ledger_before.total != Weight::Infinite
                    {
                        violations.push(format!("seed {}: preserved but non-injective", seed));
                    }
                }
                Err(foldlab::influence::InfluenceError::RoutedToCollapse(_)) => continue,
                Err(_) => continue,
            }
        }
    }
    report(
        "5 weight-monotonicity suite",
        violations.is_empty(),
        format!("{} fold steps, {} violations", steps, violations.len()),
    );
}

#[test]
fn criterion_6_connecting_invariance() {
    let mut pairs = 0usize;
    let mut violations = Vec::new();
    let mut seed = 1_000u64;
    let mut rng = testkit::rng(0xbeef);
    while pairs < 200 {
        seed += 1;
        let sp = testkit::random_splitting(seed, 5);
        let seeds = testkit::random_seed_set(&mut rng, &sp);
        if seeds.is_empty() {
            continue;
        }
        let f1 = match grow_forest_ordered(&sp, &seeds, GrowOrder::Ascending) {
            Ok(f) => f,
            Err(_) => continue,
        };
        let f2 = match grow_forest_ordered(&sp, &seeds, GrowOrder::Descending) {
            Ok(f) => f,
            Err(_) => continue,
        };
        pairs += 1;
        if connecting_multiset(&sp, &f1) != connecting_multiset(&sp, &f2) {
            violations.push(format!("seed {}: multisets differ", seed));
            continue;
        }
        let d0 = forest_distance(&sp, &f1, &f2);
        match foldlab::influence::transform_chain(&sp, &f1, &f2) {
            Ok(chain) => {
                if chain.len() > d0 {
                    violations.push(format!("seed {}: chain longer than d", seed));
                }
            }
            Err(e) => violations.push(format!("seed {}: chain failed: {}", seed, e)),
        }
    }
    report(
        "6 connecting-group invariance",
        violations.is_empty(),
        format!("{} forest pairs, {} violations", pairs, violations.len()),
    );
}

#[test]
fn criterion_7_fold_chi_ledger() {
    let mut ok = true;
    let mut detail = String::new();
    let mut logs: Vec<(String, Splitting, Vec<ScheduleStep>)> = Vec::new();
    for n in 1..=6 {
        let built = build_f2_example(n).unwrap();
        logs.push((format!("f2({})", n), built.start, built.schedule));
    }
    for n in 1..=4 {
        let built = build_generic_chain(n).unwrap();
        logs.push((format!("generic({})", n), built.start, built.schedule));
    }
    for (k, r) in [(1, 2), (2, 2), (2, 3), (4, 3), (3, 4)] {
        let built = build_sharp_example(k, r).unwrap();
        logs.push((format!("sharp({},{})", k, r), built.start, built.schedule));
        let built = build_torsionfree_sharp(k, r).unwrap();
        logs.push((format!("tf({},{})", k, r), built.start, built.schedule));
    }
    let mut folds_checked = 0usize;
    for (name, start, schedule) in &logs {
        match replay_schedule(start, schedule) {
            Ok((_, ledger)) => {
                folds_checked += ledger.fold_deltas.len();
                if !ledger.consistent() {
                    ok = false;
                    detail.push_str(&format!("{}: chi ledger inconsistent; ", name));
                }
            }
            Err(e) => {
                ok = false;
                detail.push_str(&format!("{}: replay failed: {}; ", name, e));
            }
        }
    }
    report(
        "7 fold-chi ledger",
        ok,
        if detail.is_empty() {
            format!(
                "{} logs replayed, {} folds: delta-chi 0 for I/II, +1 for III",
                logs.len(),
                folds_checked
            )
        } else {
            detail
        },
    );
}

/// Per-edge fixer bitsets over an element list.
fn edge_fixer_sets(ball: &foldlab::ball::Ball, elements: &[Word]) -> Vec<Vec<u64>> {
    let words = elements.len().div_ceil(64);
    (0..ball.edges.len())
        .map(|e| {
            let mut bits = vec![0u64; words];
            for (i, w) in elements.iter().enumerate() {
                if ball.edge_stab_contains(e, w) {
                    bits[i / 64] |= 1 << (i % 64);
                }
            }
            bits
        })
        .collect()
}

fn and_bits(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn bits_to_words(bits: &[u64], elements: &[Word]) -> Vec<Word> {
    let mut out = Vec::new();
    for (i, w) in elements.iter().enumerate() {
        if bits[i / 64] & (1 << (i % 64)) != 0 {
            out.push(w.clone());
        }
    }
    out
}

#[test]
fn criterion_8_oracle_equivalence() {
    let mut ok = true;
    let mut detail = String::new();
    let instances: Vec<(String, BuiltExample, u32, QClass)> = vec![
        (
            "f2(1)".into(),
            build_f2_example(1).unwrap(),
            1,
            QClass::NonCyclic,
        ),
        (
            "f2(2)".into(),
            build_f2_example(2).unwrap(),
            1,
            QClass::NonCyclic,
        ),
        (
            "generic(2)".into(),
            build_generic_chain(2).unwrap(),
            1,
            QClass::Infinite,
        ),
        (
            "sharp(1,2)".into(),
            build_sharp_example(1, 2).unwrap(),
            1,
            QClass::AllNontrivial,
        ),
        (
            "sharp(2,2)".into(),
            build_sharp_example(2, 2).unwrap(),
            2,
            QClass::AllNontrivial,
        ),
        (
            "tf(2,2)".into(),
            build_torsionfree_sharp(2, 2).unwrap(),
            2,
            QClass::AllNontrivial,
        ),
    ];
    let mut paths_checked = 0usize;
    for (name, built, k, class) in &instances {
        let sp = &built.splitting;
        let pres = sp.presentation().clone();
        let elements: Vec<Word> = enumerate_ambient(&pres, 10)
            .into_iter()
            .filter(|w| !w.is_identity())
            .collect();
        let cfg = BallConfig {
            radius: 6.min(2 * k + 2).max(*k + 2),
            link_depth: 3,
            max_cosets: 4,
            max_cells: 4_000,
        };
        let ball = expand_ball(sp, built.a_vertex, &cfg);
        let fixers = edge_fixer_sets(&ball, &elements);
        // Path stabilizer agreement and the acylindricity verdict.
        let paths = testkit::all_paths(&ball, (*k + 1) as usize);
        let mut element_route_violation = false;
        for path in &paths {
            paths_checked += 1;
            let mut bits = fixers[path[0]].clone();
            for &e in &path[1..] {
                bits = and_bits(&bits, &fixers[e]);
            }
            let fixer_words = bits_to_words(&bits, &elements);
            // Route 1: automaton intersection.
            let stab = ball.path_stabilizer(path);
            let by_automaton: Vec<&Word> =
                elements.iter().filter(|w| stab.contains(w)).collect();
            if by_automaton.len() != fixer_words.len()
                || by_automaton.iter().zip(&fixer_words).any(|(a, b)| **a != *b)
            {
                ok = false;
                detail.push_str(&format!("{}: path stabilizer mismatch; ", name));
                break;
            }
            if testkit::fixers_match_class(&pres, &fixer_words, class) {
                element_route_violation = true;
            }
        }
        let verdict = ball.check_acylindricity(*k, class);
        let checker_violation = verdict.status == VerdictStatus::Fail;
        if checker_violation != element_route_violation {
            ok = false;
            detail.push_str(&format!(
                "{}: checker {} vs oracle {}; ",
                name, checker_violation, element_route_violation
            ));
        }
        // Fixed sets in trees are subtrees: connected when nonempty.
        for w in elements.iter().take(200) {
            let fix = ball.fixed_set(w);
            if !fix.is_empty() && fix.components.len() > 1 {
                // Components can only split at truncation boundaries.
                if !ball.truncated {
                    ok = false;
                    detail.push_str(&format!("{}: disconnected fixed set; ", name));
                    break;
                }
            }
        }
    }
    report(
        "8 oracle equivalence",
        ok,
        if detail.is_empty() {
            format!(
                "{} instances, {} paths: path stabilizers and verdicts agree with element enumeration (weight <= 10)",
                instances.len(),
                paths_checked
            )
        } else {
            detail
        },
    );
}

#[test]
fn criterion_9_bound_certification() {
    let mut ok = true;
    let mut detail = String::new();
    // (2k+1)n on every constructed example with its natural seed set.
    let mut instances: Vec<(String, Splitting, PClass, u32)> = Vec::new();
    for n in 1..=4 {
        instances.push((
            format!("f2({})", n),
            build_f2_example(n).unwrap().splitting,
            PClass::cyclic(),
            1,
        ));
    }
    for (k, r) in [(1u32, 2u32), (2, 2), (2, 3), (4, 3)] {
        instances.push((
            format!("sharp({},{})", k, r),
            build_sharp_example(k, r).unwrap().splitting,
            PClass::trivial_only(),
            k,
        ));
        instances.push((
            format!("tf({},{})", k, r),
            build_torsionfree_sharp(k, r).unwrap().splitting,
            PClass::trivial_only(),
            k,
        ));
    }
    // A reduced instance with k = 2 exercises the 2kn variant.
    instances.push((
        "f2(3) at k=2".into(),
        build_f2_example(3).unwrap().splitting,
        PClass::cyclic(),
        2,
    ));
    for (name, sp, pclass, k) in &instances {
        let seeds = foldlab::influence::natural_seeds(sp);
        match certify_edge_bound(sp, &seeds, pclass, *k) {
            Ok(cert) => {
                if !cert.bound_holds {
                    ok = false;
                    detail.push_str(&format!(
                        "{}: {} > {}; ",
                        name, cert.achieved_edges, cert.claimed_bound
                    ));
                }
                if let Some((bound, holds)) = cert.reduced_variant {
                    if !holds {
                        ok = false;
                        detail.push_str(&format!(
                            "{}: reduced variant {} fails; ",
                            name, bound
                        ));
                    }
                }
            }
            Err(e) => {
                ok = false;
                detail.push_str(&format!("{}: certify error {}; ", name, e));
            }
        }
    }
    // Driver runs on the section-7 instances certify the exact counts
    // against 2^M k (rank - 1) with M = 1, and equality with the sharp
    // formula.
    for (k, r, tf) in [
        (1u32, 2u32, false),
        (2, 2, false),
        (2, 3, false),
        (4, 3, false),
        (1, 2, true),
        (2, 3, true),
    ] {
        let run = driver_sharp_run(k, r, tf).unwrap();
        let cfg = DriverConfig {
            k,
            mode: DriverMode::FgQuotient,
            budget: 10_000,
            target: Some(run.target.clone()),
            resolution_bound: None,
        };
        let trace = run_driver(
            &run.start,
            &run.schedule,
            &SeedSet::empty(),
            &PClass::trivial_only(),
            &cfg,
        )
        .unwrap();
        let name = format!("driver {}({},{})", if tf { "tf" } else { "sharp" }, k, r);
        if !trace_weights_monotone(&trace) {
            ok = false;
            detail.push_str(&format!("{}: non-monotone; ", name));
        }
        let expected = if tf {
            ((2 * r - 3) * k) as usize
        } else {
            sharp_expected(k, r)
        };
        if trace.final_edges != 0 || trace.total_collapsed != expected {
            ok = false;
            detail.push_str(&format!(
                "{}: collapsed {} + residue {} vs expected {}; ",
                name, trace.total_collapsed, trace.final_edges, expected
            ));
        }
        // 2^M k (rank - 1) with M = 1: initial weight is 2(rank-1).
        if trace.initial_weight != Weight::Finite(2 * (r as u64 - 1))
            || !trace.k_w_bound_holds(trace.total_collapsed)
        {
            ok = false;
            detail.push_str(&format!("{}: rank bound fails; ", name));
        }
    }
    report(
        "9 bound certification",
        ok,
        if detail.is_empty() {
            "(2k+1)n holds on every instance; driver certifies floor((2r-5/2)k) = total <= 2k(r-1)".into()
        } else {
            detail
        },
    );
}
