//! Seeded corpus generation and brute-force oracles for the property
//! suites: random small splittings built by valid operation sequences from
//! known-good bases, random fold moves found on them, and element-level
//! oracles for path stabilizers and acylindricity.

use crate::automaton::SubgroupRep;
use crate::ball::{Ball, QClass};
use crate::fold::{apply_fold, classify_fold, FoldMove};
use crate::influence::SeedSet;
use crate::splitting::{one_edge_splitting, rose_splitting, EdgeId, End, Splitting, VertexId};
use crate::word::{enumerate_ambient, Presentation, Word};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::collections::BTreeSet;

pub fn corpus_presentations() -> Vec<Presentation> {
    vec![
        Presentation::free(2),
        Presentation::new(&[("a", 4), ("b", 0)]).unwrap(),
        Presentation::new(&[("a", 2), ("b", 3)]).unwrap(),
        Presentation::new(&[("a", 8), ("b", 0)]).unwrap(),
    ]
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn base_splitting(rng: &mut StdRng, pres: &Presentation) -> Splitting {
    let a = pres.generator_word(0);
    let b = pres.generator_word(1);
    match rng.gen_range(0..3) {
        0 => one_edge_splitting(pres, &[a], &[b]),
        1 => rose_splitting(pres, &[a], &[b]),
        _ => {
            let mut sp = one_edge_splitting(pres, &[a], &[b]);
            sp.subdivide(EdgeId(0), 2).unwrap();
            sp
        }
    }
}

/// Short elements of a vertex group usable as pull witnesses.
fn witness_pool(sp: &Splitting, v: VertexId) -> Vec<Word> {
    sp.vertex(v)
        .group
        .generator_products(2, 24)
        .into_iter()
        .filter(|w| !w.is_identity())
        .collect()
}

/// Candidate fold moves visible at canonical cells, each already validated
/// by the classifier.
pub fn enumerate_folds(sp: &Splitting, depth: u32, cap: usize) -> Vec<FoldMove> {
    let pres = sp.presentation();
    let mut out = Vec::new();
    for v in sp.vertex_ids() {
        let pivot = crate::splitting::Cell {
            orbit: v,
            rep: Word::identity(),
        };
        let vgroup = &sp.vertex(v).group;
        let mut incident: Vec<(EdgeId, End, Word)> = Vec::new();
        for (e, end) in sp.incident_ends(v) {
            let sub = sp.edge_group_at(e, end);
            let (reps, _) = vgroup.coset_reps(&sub, depth, 4);
            for u in reps {
                incident.push((e, end, u.mul(pres, sp.edge(e).attach(end))));
            }
        }
        for i in 0..incident.len() {
            for j in (i + 1)..incident.len() {
                let (e1, end1, h1) = incident[i].clone();
                let (e2, end2, h2) = incident[j].clone();
                let witness = if e1 == e2 {
                    // type II: elliptic translation between the cosets
                    let mut found = None;
                    for eps in sp.edge(e1).group.generator_products(2, 16) {
                        let h = h2.mul(pres, &eps).mul(pres, &h1.inverse(pres));
                        if sp.cell_stab_contains(&pivot, &h) {
                            found = Some(h);
                            break;
                        }
                    }
                    match found {
                        Some(h) => Some(h),
                        None => continue,
                    }
                } else {
                    let far1 = sp.endpoint_cell(
                        &crate::splitting::EdgeCell {
                            orbit: e1,
                            rep: h1.clone(),
                        },
                        end1.other(),
                    );
                    let far2 = sp.endpoint_cell(
                        &crate::splitting::EdgeCell {
                            orbit: e2,
                            rep: h2.clone(),
                        },
                        end2.other(),
                    );
                    if far1.orbit == far2.orbit {
                        let mut found = None;
                        for nu in sp.vertex(far1.orbit).group.generator_products(2, 16) {
                            let h = far2
                                .rep
                                .mul(pres, &nu)
                                .mul(pres, &far1.rep.inverse(pres));
                            let moved = crate::splitting::Cell {
                                orbit: far1.orbit,
                                rep: h.mul(pres, &far1.rep),
                            };
                            if sp.same_vertex_cell(&moved, &far2) {
                                found = Some(h);
                                break;
                            }
                        }
                        match found {
                            Some(h) => Some(h),
                            None => continue,
                        }
                    } else {
                        None
                    }
                };
                let m = FoldMove {
                    pivot: pivot.clone(),
                    e1: crate::fold::EdgeHalf {
                        orbit: e1,
                        rep: h1.clone(),
                        pivot_end: end1,
                    },
                    e2: crate::fold::EdgeHalf {
                        orbit: e2,
                        rep: h2.clone(),
                        pivot_end: end2,
                    },
                    witness,
                };
                if classify_fold(sp, &m).is_ok() {
                    out.push(m);
                    if out.len() >= cap {
                        return out;
                    }
                }
            }
        }
    }
    out
}

/// One random valid operation. Returns None when nothing applies.
pub fn random_op(rng: &mut StdRng, sp: &Splitting, max_vertices: usize) -> Option<Splitting> {
    for _ in 0..8 {
        match rng.gen_range(0..4) {
            0 if sp.vertex_count() < max_vertices => {
                let edges = sp.edge_ids();
                let e = edges[rng.gen_range(0..edges.len())];
                let mut out = sp.clone();
                out.subdivide(e, 2).ok()?;
                return Some(out);
            }
            1 => {
                // type II pull with a random witness
                let vertices = sp.vertex_ids();
                let v = vertices[rng.gen_range(0..vertices.len())];
                let pool = witness_pool(sp, v);
                if pool.is_empty() {
                    continue;
                }
                let h = pool[rng.gen_range(0..pool.len())].clone();
                let ends = sp.incident_ends(v);
                if ends.is_empty() {
                    continue;
                }
                let (e, end) = ends[rng.gen_range(0..ends.len())];
                let m = crate::fold::pull_move(sp, e, end, &h);
                if classify_fold(sp, &m).is_ok() {
                    if let Ok(outcome) = apply_fold(sp, &m) {
                        return Some(outcome.splitting);
                    }
                }
            }
            2 => {
                let folds = enumerate_folds(sp, 2, 12);
                if folds.is_empty() {
                    continue;
                }
                let m = &folds[rng.gen_range(0..folds.len())];
                if let Ok(outcome) = apply_fold(sp, m) {
                    if outcome.splitting.vertex_count() >= 1 {
                        return Some(outcome.splitting);
                    }
                }
            }
            _ => {
                // strict collapse of a random tree edge
                let candidates: Vec<EdgeId> = sp
                    .edge_ids()
                    .into_iter()
                    .filter(|&e| {
                        let d = sp.edge(e);
                        d.tree && d.tail != d.head && sp.edge_count() > 1
                    })
                    .collect();
                if candidates.is_empty() {
                    continue;
                }
                let e = candidates[rng.gen_range(0..candidates.len())];
                let mut out = sp.clone();
                if out.collapse(&[e].into_iter().collect(), true).is_ok() {
                    return Some(out);
                }
            }
        }
    }
    None
}

/// A random small splitting built from a valid base by a few operations.
pub fn random_splitting(seed: u64, max_vertices: usize) -> Splitting {
    let mut rng = rng(seed);
    let presentations = corpus_presentations();
    let pres = &presentations[rng.gen_range(0..presentations.len())];
    let mut sp = base_splitting(&mut rng, pres);
    let ops = rng.gen_range(0..4);
    for _ in 0..ops {
        if let Some(next) = random_op(&mut rng, &sp, max_vertices) {
            sp = next;
        }
    }
    sp
}

/// A random valid seed set: a random superset of the greedy minimal one.
pub fn random_seed_set(rng: &mut StdRng, sp: &Splitting) -> SeedSet {
    let mut seeds = crate::influence::natural_seeds(sp);
    for v in sp.vertex_ids() {
        if rng.gen_bool(0.3) {
            seeds.orbits.insert(v);
        }
    }
    if seeds.is_empty() {
        return seeds;
    }
    // dropping back to validity if the random superset somehow fails
    if crate::influence::grow_forest(sp, &seeds).is_err() {
        crate::influence::natural_seeds(sp)
    } else {
        seeds
    }
}

/// Elements of the ambient group up to the given weight, cyclically reduced
/// representatives only (fixed-set diameters are conjugation invariant).
pub fn oracle_elements(pres: &Presentation, max_weight: u64) -> Vec<Word> {
    enumerate_ambient(pres, max_weight)
        .into_iter()
        .filter(|w| !w.is_identity() && w.is_cyclically_reduced())
        .collect()
}

/// Element-level pointwise stabilizer of a path: all enumerated elements
/// fixing every edge.
pub fn path_fixers(ball: &Ball, path: &[usize], elements: &[Word]) -> Vec<Word> {
    elements
        .iter()
        .filter(|w| path.iter().all(|&e| ball.edge_stab_contains(e, w)))
        .cloned()
        .collect()
}

/// Is a set of elements contained in a common cyclic subgroup? Tested via
/// primitive roots: all non-trivial members must share a root up to
/// inversion.
pub fn fixers_cyclic(pres: &Presentation, fixers: &[Word]) -> bool {
    let mut root: Option<Word> = None;
    for w in fixers {
        if w.is_identity() {
            continue;
        }
        let (r, _) = w.primitive_root(pres);
        let rinv = r.inverse(pres);
        match &root {
            None => root = Some(r),
            Some(existing) => {
                if *existing != r && *existing != rinv {
                    return false;
                }
            }
        }
    }
    true
}

pub fn fixers_match_class(pres: &Presentation, fixers: &[Word], class: &QClass) -> bool {
    match class {
        QClass::AllNontrivial => fixers.iter().any(|w| !w.is_identity()),
        QClass::NonCyclic => !fixers_cyclic(pres, fixers),
        QClass::Infinite => fixers.iter().any(|w| {
            let (core, _) = w.cyclically_reduce(pres);
            if core.is_identity() {
                return false;
            }
            if core.syllable_count() >= 2 {
                return true;
            }
            let (g, _) = core.syllables()[0];
            pres.order(g) == 0
        }),
        QClass::LargerThan(p) => match p.kind {
            crate::pclass::PClassKind::TrivialOnly => {
                fixers.iter().any(|w| !w.is_identity())
            }
            crate::pclass::PClassKind::Cyclic => !fixers_cyclic(pres, fixers),
            _ => !fixers_cyclic(pres, fixers),
        },
    }
}

/// Brute-force acylindricity oracle: scan every (k+1)-edge path from
/// canonical cells and test whether its element-level fixer set meets the
/// class. Returns true when a violation exists.
pub fn oracle_acylindricity_violation(
    ball: &Ball,
    k: u32,
    class: &QClass,
    elements: &[Word],
) -> bool {
    let pres = ball.splitting.presentation().clone();
    for path in all_paths(ball, (k + 1) as usize) {
        let fixers = path_fixers(ball, &path, elements);
        if fixers_match_class(&pres, &fixers, class) {
            return true;
        }
    }
    false
}

/// Non-backtracking paths of the given length starting at canonical cells.
pub fn all_paths(ball: &Ball, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(
        ball: &Ball,
        v: usize,
        last: Option<usize>,
        remaining: usize,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if remaining == 0 {
            out.push(path.clone());
            return;
        }
        for &(e, far) in &ball.adjacency[v] {
            if Some(e) == last {
                continue;
            }
            path.push(e);
            rec(ball, far, Some(e), remaining - 1, path, out);
            path.pop();
        }
    }
    let mut path = Vec::new();
    for vi in 0..ball.vertices.len() {
        if ball.vertices[vi].cell.rep.is_identity() {
            rec(ball, vi, None, len, &mut path, &mut out);
        }
    }
    out
}

/// Distinct-cell audit for a ball: returns a pair of coinciding cells when
/// the ambient realization is degenerate (indicating an invalid splitting).
pub fn ball_cells_distinct(ball: &Ball) -> Option<(usize, usize)> {
    for i in 0..ball.vertices.len() {
        for j in (i + 1)..ball.vertices.len() {
            if ball
                .splitting
                .same_vertex_cell(&ball.vertices[i].cell, &ball.vertices[j].cell)
            {
                return Some((i, j));
            }
        }
    }
    None
}

/// Deterministic set of orbits touched by a splitting, for reporting.
pub fn orbit_summary(sp: &Splitting) -> String {
    let mut parts: Vec<String> = Vec::new();
    for v in sp.vertex_ids() {
        parts.push(format!("{}:{}", v, sp.vertex(v).group.describe()));
    }
    parts.join(" ")
}

/// Used by fuzz tests: every operation output satisfies the validator.
pub fn validate_or_panic(sp: &Splitting, context: &str) {
    let report = sp.validate();
    // The generation check can fail midway through random op sequences only
    // if an operation broke the fundamental-group invariant, which would be
    // a bug.
    assert!(
        report.is_empty(),
        "{}: invalid splitting: {:?}\n{}",
        context,
        report,
        sp.to_text()
    );
}
