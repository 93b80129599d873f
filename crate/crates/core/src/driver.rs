//! Seed bookkeeping across folds, the large-connector and cyclic collapse
//! stages, the edge-count bound certifier, and the accessibility driver.

use crate::fold::{apply_fold, relabel, FoldMove, FoldOutcome, ScheduleStep};
use crate::influence::{
    exists_forest_containing, grow_forest, ledger_of_forest, seed_weight,
    Forest, InfluenceError, SeedSet, WeightLedger,
};
use crate::pclass::{PClass, Weight};
use crate::splitting::{EdgeCell, EdgeId, End, Splitting, VertexId};
use crate::word::Presentation;
use std::collections::{BTreeMap, BTreeSet};

/// Which picture of the fold lemma a seed update landed in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FoldCase {
    /// Some forest of influence contains both folded edges.
    SharedForest,
    /// No forest contains either folded edge; the image vertex becomes a
    /// seed.
    Detached,
    /// Exactly one of the edges sits in a forest.
    OneSided {
        /// The in-forest edge is the branch edge of the pivot rather than of
        /// its far endpoint.
        pivot_branch: bool,
        /// stab(far endpoint of the in-forest edge) is contained in the
        /// stabilizer of the other far endpoint.
        dominated: bool,
    },
    /// The action was free before the fold and is not after.
    FreeTransition,
}

impl std::fmt::Display for FoldCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FoldCase::SharedForest => write!(f, "shared-forest"),
            FoldCase::Detached => write!(f, "detached"),
            FoldCase::OneSided {
                pivot_branch,
                dominated,
            } => write!(
                f,
                "one-sided({},{})",
                if *pivot_branch { "pivot-branch" } else { "far-branch" },
                if *dominated { "dominated" } else { "undominated" }
            ),
            FoldCase::FreeTransition => write!(f, "free-transition"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SeedUpdate {
    pub seeds: SeedSet,
    pub ledger_before: WeightLedger,
    pub ledger_after: WeightLedger,
    pub case: FoldCase,
    pub injective_on_seeds: bool,
    pub weight_preserved: bool,
}

fn is_free(sp: &Splitting) -> bool {
    sp.vertex_ids()
        .iter()
        .all(|&v| sp.vertex(v).group.is_trivial())
}

fn all_nontrivial_orbits(sp: &Splitting) -> SeedSet {
    SeedSet::new(
        sp.vertex_ids()
            .into_iter()
            .filter(|&v| !sp.vertex(v).group.is_trivial()),
    )
}

/// Update a seed set across an applied fold, per the forest case analysis.
/// Requires every connecting group to lie in the class; callers must route
/// larger connectors to `collapse_large_connector` first.
pub fn update_seeds_after_fold(
    before: &Splitting,
    m: &FoldMove,
    outcome: &FoldOutcome,
    seeds: &SeedSet,
    pclass: &PClass,
) -> Result<SeedUpdate, InfluenceError> {
    let ledger_before = seed_weight(before, seeds, pclass)?;
    let after = &outcome.splitting;

    // Free-action route.
    if is_free(before) {
        let new_seeds = if is_free(after) {
            seeds.map_through(&outcome.vertex_map)
        } else {
            all_nontrivial_orbits(after)
        };
        let ledger_after = seed_weight(after, &new_seeds, pclass)?;
        if ledger_after.total > ledger_before.total {
            return Err(InfluenceError::WeightIncrease(
                ledger_before.total.to_string(),
                ledger_after.total.to_string(),
            ));
        }
        let weight_preserved = ledger_after.total == ledger_before.total;
        return Ok(SeedUpdate {
            seeds: new_seeds,
            ledger_before,
            ledger_after,
            case: FoldCase::FreeTransition,
            injective_on_seeds: true,
            weight_preserved,
        });
    }

    for (e, _, w) in &ledger_before.connecting {
        if w.is_one() {
            return Err(InfluenceError::RoutedToCollapse(*e));
        }
    }

    let same_orbit = m.e1.orbit == m.e2.orbit;
    let pair: Vec<EdgeId> = if same_orbit {
        vec![m.e1.orbit]
    } else {
        vec![m.e1.orbit, m.e2.orbit]
    };
    let in_both = exists_forest_containing(before, seeds, &pair);
    let case;
    let mut extra_seed: Option<VertexId> = None;
    if in_both.is_some() {
        case = FoldCase::SharedForest;
    } else if same_orbit {
        // Type II shares the orbit, so one-sided containment cannot happen.
        case = FoldCase::Detached;
        extra_seed = Some(outcome.vertex_map[&outcome.far1.orbit]);
    } else {
        let c1 = exists_forest_containing(before, seeds, &[m.e1.orbit]);
        let c2 = exists_forest_containing(before, seeds, &[m.e2.orbit]);
        match (c1, c2) {
            (None, None) => {
                case = FoldCase::Detached;
                extra_seed = Some(outcome.vertex_map[&outcome.far1.orbit]);
            }
            (forest, other) => {
                let (forest, far_in, far_out, in_edge) = if forest.is_some() {
                    (forest.unwrap(), &outcome.far1, &outcome.far2, m.e1.orbit)
                } else {
                    (other.unwrap(), &outcome.far2, &outcome.far1, m.e2.orbit)
                };
                // Is the in-forest edge the branch edge of the pivot rather
                // than of its far endpoint?
                let far_parent = forest
                    .parent
                    .get(&far_in.orbit)
                    .map(|p| p.edge == in_edge)
                    .unwrap_or(false);
                let pivot_branch = !far_parent;
                // dominated: stab(far_in cell) <= stab(far_out cell).
                let pres = before.presentation();
                let dominated = before
                    .vertex(far_in.orbit)
                    .group
                    .generators()
                    .iter()
                    .all(|g| {
                        let positioned = far_in.rep.conj(pres, g);
                        before
                            .vertex(far_out.orbit)
                            .group
                            .conjugate_contains(&far_out.rep, &positioned)
                    });
                case = FoldCase::OneSided {
                    pivot_branch,
                    dominated,
                };
                let type_iii = outcome.fold_type.roman() == 3;
                if type_iii || !dominated {
                    extra_seed = Some(outcome.vertex_map[&outcome.far1.orbit]);
                }
            }
        }
    }

    let mut new_seeds = seeds.map_through(&outcome.vertex_map);
    if let Some(v) = extra_seed {
        new_seeds.orbits.insert(v);
    }
    let ledger_after = seed_weight(after, &new_seeds, pclass)?;
    if ledger_after.total > ledger_before.total {
        return Err(InfluenceError::WeightIncrease(
            ledger_before.total.to_string(),
            ledger_after.total.to_string(),
        ));
    }
    let weight_preserved = ledger_after.total == ledger_before.total;
    // Injectivity of the fold on seed cells: type I merges two orbits, types
    // II and III merge distinct cells of the far orbit.
    let injective = match outcome.fold_type.roman() {
        1 => !(seeds.contains(outcome.far1.orbit) && seeds.contains(outcome.far2.orbit)),
        _ => !seeds.contains(outcome.far1.orbit),
    };
    if weight_preserved && !injective && ledger_before.total != Weight::Infinite {
        return Err(InfluenceError::Other(format!(
            "weight preserved ({}) but the fold merges seed cells: lemma violation",
            ledger_before.total
        )));
    }
    Ok(SeedUpdate {
        seeds: new_seeds,
        ledger_before,
        ledger_after,
        case,
        injective_on_seeds: injective,
        weight_preserved,
    })
}

#[derive(Clone, Debug)]
pub struct LargeCollapse {
    pub splitting: Splitting,
    pub seeds: SeedSet,
    pub collapsed_edges: usize,
    pub cap: usize,
    pub connector: EdgeId,
    pub weight_before: Weight,
    pub weight_after: Weight,
}

/// The edge orbits of the fixed region of a weight-one connector: the
/// connecting edge together with the branches of both its endpoints, every
/// edge of which is fixed by the connecting group (verified cell by cell).
fn connector_region(
    sp: &Splitting,
    forest: &Forest,
    e: EdgeId,
) -> Result<Vec<EdgeId>, InfluenceError> {
    let pres = sp.presentation();
    let egroup = sp.edge(e).group.clone();
    let mut region: Vec<EdgeId> = vec![e];
    let mut seen: BTreeSet<EdgeId> = region.iter().copied().collect();
    for end in [End::Tail, End::Head] {
        let mut pos = sp.edge(e).attach(end).inverse(pres);
        let mut cur = sp.edge(e).end_vertex(end);
        while let Some(p) = forest.parent.get(&cur).copied() {
            let d = sp.edge(p.edge);
            let branch_cell = EdgeCell {
                orbit: p.edge,
                rep: pos.mul(pres, d.attach(p.child_end)),
            };
            for g in egroup.generators() {
                if !sp.edge_cell_stab_contains(&branch_cell, g) {
                    return Err(InfluenceError::InvalidForest(format!(
                        "branch edge {} of {} is not fixed by the connector group",
                        p.edge, e
                    )));
                }
            }
            if seen.insert(p.edge) {
                region.push(p.edge);
            }
            let far_end = p.child_end.other();
            pos = pos
                .mul(pres, d.attach(p.child_end))
                .mul(pres, &d.attach(far_end).inverse(pres));
            cur = d.end_vertex(far_end);
        }
    }
    Ok(region)
}

/// Collapse the fixed region of a weight-one connecting group: at most `k`
/// orbits of edges, weight drops by at least one. Refuses (with a refutation
/// report) when the region is longer than the acylindricity constant allows.
pub fn collapse_large_connector(
    sp: &Splitting,
    seeds: &SeedSet,
    pclass: &PClass,
    k: u32,
) -> Result<LargeCollapse, InfluenceError> {
    let forest = grow_forest(sp, seeds)?;
    let ledger = ledger_of_forest(sp, &forest, pclass);
    let connector = ledger
        .connecting
        .iter()
        .find(|(_, _, w)| w.is_one())
        .map(|(e, _, _)| *e)
        .ok_or_else(|| InfluenceError::Other("no weight-one connecting group".into()))?;
    let region = connector_region(sp, &forest, connector)?;
    let cap = k as usize;
    if region.len() > cap {
        return Err(InfluenceError::AcylindricityRefuted {
            edge: connector,
            got: region.len(),
            cap,
        });
    }
    let mut out = sp.clone();
    let record = out.collapse(&region.iter().copied().collect(), false)?;
    let new_seeds = seeds.map_through(&record.vertex_map);
    let after = seed_weight(&out, &new_seeds, pclass)?;
    if after.total >= ledger.total {
        return Err(InfluenceError::WeightIncrease(
            ledger.total.to_string(),
            after.total.to_string(),
        ));
    }
    Ok(LargeCollapse {
        splitting: out,
        seeds: new_seeds,
        collapsed_edges: region.len(),
        cap,
        connector,
        weight_before: ledger.total,
        weight_after: after.total,
    })
}

#[derive(Clone, Debug)]
pub enum CyclicStageOutcome {
    /// Stabilizers stayed cyclic and connecting groups trivial.
    Kept(SeedUpdate),
    /// The fold created a larger vertex; the fixed regions of the new
    /// weight-one connectors were collapsed within the stage budget.
    Collapsed {
        update: SeedUpdate,
        splitting: Splitting,
        seeds: SeedSet,
        collapsed_edges: usize,
        cap: usize,
        weight_before: Weight,
        weight_after: Weight,
    },
}

fn all_vertex_groups_cyclic(sp: &Splitting) -> bool {
    sp.vertex_ids()
        .iter()
        .all(|&v| sp.vertex(v).group.kurosh_profile().is_cyclic())
}

fn connecting_all_trivial(sp: &Splitting, seeds: &SeedSet) -> Result<bool, InfluenceError> {
    if seeds.is_empty() {
        return Ok(true);
    }
    let forest = grow_forest(sp, seeds)?;
    Ok(forest
        .connecting_orbits(sp)
        .iter()
        .all(|&e| sp.edge(e).group.is_trivial()))
}

/// Preconditions of the cyclic collapse stage.
pub fn cyclic_stage_applies(
    sp: &Splitting,
    seeds: &SeedSet,
    pclass: &PClass,
) -> Result<bool, InfluenceError> {
    Ok(pclass == &PClass::trivial_only()
        && !seeds.is_empty()
        && all_vertex_groups_cyclic(sp)
        && connecting_all_trivial(sp, seeds)?)
}

/// One step of the cyclic-inefficiency dichotomy: either the fold keeps all
/// stabilizers cyclic with trivial connectors, or the new weight-one
/// connectors are collapsed, spending at most floor(3k/2) edge orbits (k for
/// torsion-free groups) for a weight drop of at least two.
pub fn cyclic_stage(
    before: &Splitting,
    m: &FoldMove,
    outcome: &FoldOutcome,
    seeds: &SeedSet,
    k: u32,
) -> Result<CyclicStageOutcome, InfluenceError> {
    let pclass = PClass::trivial_only();
    let update = update_seeds_after_fold(before, m, outcome, seeds, &pclass)?;
    let after = &outcome.splitting;
    let still_cyclic = all_vertex_groups_cyclic(after);
    let trivial_connectors = update
        .ledger_after
        .connecting
        .iter()
        .all(|(_, _, w)| !w.is_one());
    if still_cyclic && trivial_connectors {
        return Ok(CyclicStageOutcome::Kept(update));
    }
    let torsion_free = before.presentation().is_torsion_free();
    let cap = if torsion_free {
        k as usize
    } else {
        (3 * k as usize) / 2
    };
    let mut sp = after.clone();
    let mut cur_seeds = update.seeds.clone();
    let mut spent = 0usize;
    loop {
        let forest = grow_forest(&sp, &cur_seeds)?;
        let ledger = ledger_of_forest(&sp, &forest, &pclass);
        let Some((connector, _, _)) = ledger.connecting.iter().find(|(_, _, w)| w.is_one())
        else {
            break;
        };
        let region = connector_region(&sp, &forest, *{
            let c = connector;
            c
        })?;
        if spent + region.len() > cap {
            return Err(InfluenceError::AcylindricityRefuted {
                edge: *connector,
                got: spent + region.len(),
                cap,
            });
        }
        let record = sp.collapse(&region.iter().copied().collect(), false)?;
        cur_seeds = cur_seeds.map_through(&record.vertex_map);
        spent += region.len();
    }
    let weight_before = update.ledger_before.total;
    let after_ledger = seed_weight(&sp, &cur_seeds, &pclass)?;
    let dropped_enough = match (weight_before, after_ledger.total) {
        (Weight::Finite(b), Weight::Finite(a)) => a + 2 <= b,
        _ => true,
    };
    if !dropped_enough {
        return Err(InfluenceError::Other(format!(
            "cyclic stage dropped weight only from {} to {}",
            weight_before, after_ledger.total
        )));
    }
    Ok(CyclicStageOutcome::Collapsed {
        update,
        splitting: sp,
        seeds: cur_seeds,
        collapsed_edges: spent,
        cap,
        weight_before,
        weight_after: after_ledger.total,
    })
}

/// Audit data for the counting argument.
#[derive(Clone, Debug)]
pub struct BoundCertificate {
    pub p: usize,
    pub q: usize,
    pub chi_r: i64,
    pub chi_matches: bool,
    pub valences: BTreeMap<usize, usize>,
    pub n_connecting: usize,
    pub claimed_bound: usize,
    pub achieved_edges: usize,
    pub bound_holds: bool,
    pub reduced_variant: Option<(usize, bool)>,
    pub partially_reduced: bool,
    pub large_collapse_spent: usize,
    pub notes: Vec<String>,
}

impl BoundCertificate {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "edges={} n={} bound=(2k+1)n={} holds={}\n",
            self.achieved_edges, self.n_connecting, self.claimed_bound, self.bound_holds
        );
        out.push_str(&format!(
            "p={} q={} chi(R/G)={} chi=p-q:{}\n",
            self.p, self.q, self.chi_r, self.chi_matches
        ));
        let valences: Vec<String> = self
            .valences
            .iter()
            .map(|(v, c)| format!("{}:{}", v, c))
            .collect();
        out.push_str(&format!("valences: {}\n", valences.join(" ")));
        out.push_str(&format!(
            "partially_reduced={} large_collapse_spent={}\n",
            self.partially_reduced, self.large_collapse_spent
        ));
        if let Some((b, ok)) = self.reduced_variant {
            out.push_str(&format!("reduced variant bound 2kn={} holds={}\n", b, ok));
        }
        for n in &self.notes {
            out.push_str(&format!("note: {}\n", n));
        }
        out
    }
}

/// Certify the edge-count bound (2k+1)n for a seed set with n connecting
/// orbits, constructing the small-edge subgraph audit data the counting
/// proof uses.
pub fn certify_edge_bound(
    sp: &Splitting,
    seeds: &SeedSet,
    pclass: &PClass,
    k: u32,
) -> Result<BoundCertificate, InfluenceError> {
    let mut notes = Vec::new();
    let reducedness = sp.check_reducedness(pclass);
    if !reducedness.partially_reduced {
        notes.push("action is not partially reduced over the class".into());
    }
    let ledger = seed_weight(sp, seeds, pclass)?;
    let n = ledger.n_connecting();
    let achieved = sp.edge_count();
    // Collapse the fixed regions of large connectors.
    let mut working = sp.clone();
    let mut cur_seeds = seeds.clone();
    let mut spent = 0usize;
    loop {
        match collapse_large_connector(&working, &cur_seeds, pclass, k) {
            Ok(c) => {
                spent += c.collapsed_edges;
                working = c.splitting;
                cur_seeds = c.seeds;
            }
            Err(InfluenceError::AcylindricityRefuted { edge, got, cap }) => {
                notes.push(format!(
                    "acylindricity refuted at {}: fixed path of {} edges exceeds cap {}",
                    edge, got, cap
                ));
                break;
            }
            Err(_) => break,
        }
    }
    let forest = grow_forest(&working, &cur_seeds)?;
    let ledger_small = ledger_of_forest(&working, &forest, pclass);
    let q = ledger_small.n_connecting();
    let p = working
        .vertex_ids()
        .into_iter()
        .filter(|&v| {
            cur_seeds.contains(v) || pclass.larger_than(&working.vertex(v).group)
        })
        .count();
    let inv = working.graph_invariants();
    let chi_r = inv.euler_characteristic;
    let claimed = (2 * k as usize + 1) * n;
    let reduced_variant = if reducedness.reduced && k > 1 {
        let b = 2 * k as usize * n;
        Some((b, achieved <= b))
    } else {
        None
    };
    Ok(BoundCertificate {
        p,
        q,
        chi_r,
        chi_matches: chi_r == p as i64 - q as i64,
        valences: inv.valence_histogram,
        n_connecting: n,
        claimed_bound: claimed,
        achieved_edges: achieved,
        bound_holds: achieved <= claimed,
        reduced_variant,
        partially_reduced: reducedness.partially_reduced,
        large_collapse_spent: spent,
        notes,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DriverMode {
    Simple,
    Dagger,
    FgQuotient,
}

impl DriverMode {
    pub fn parse(s: &str) -> Option<DriverMode> {
        match s {
            "simple" => Some(DriverMode::Simple),
            "dagger" => Some(DriverMode::Dagger),
            "fg-quotient" => Some(DriverMode::FgQuotient),
            _ => None,
        }
    }
}

impl std::fmt::Display for DriverMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DriverMode::Simple => write!(f, "simple"),
            DriverMode::Dagger => write!(f, "dagger"),
            DriverMode::FgQuotient => write!(f, "fg-quotient"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DriverConfig {
    pub k: u32,
    pub mode: DriverMode,
    pub budget: usize,
    /// Target presentation for relabel steps (fg-quotient mode).
    pub target: Option<Presentation>,
    /// The resolution constant C(G) supplied externally, recorded verbatim.
    pub resolution_bound: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct TraceStep {
    pub index: usize,
    pub action: String,
    pub case: Option<String>,
    pub weight_before: Weight,
    pub weight_after: Weight,
    pub collapsed: usize,
    pub collapse_cap: usize,
}

#[derive(Clone, Debug)]
pub struct DriverTrace {
    pub steps: Vec<TraceStep>,
    pub initial_weight: Weight,
    pub final_weight: Weight,
    pub total_collapsed: usize,
    pub final_edges: usize,
    pub final_vertices: usize,
    pub budget_exhausted: bool,
    pub cyclic_stage_fired: bool,
    pub cyclic_stage_spend: usize,
    pub kernel_certificates: Vec<String>,
    pub mode: DriverMode,
    pub k: u32,
    pub pclass: String,
    pub resolution_bound: Option<u64>,
}

impl DriverTrace {
    /// Total edges the run accounts for: collapses plus the residue.
    pub fn accounted_edges(&self) -> usize {
        self.total_collapsed + self.final_edges
    }

    /// The lemma bound in doubled form: 2 * edges <= (2k+1) * W0.
    pub fn simple_bound_holds(&self, edges: usize) -> bool {
        match self.initial_weight {
            Weight::Finite(w0) => 2 * edges as u64 <= (2 * self.k as u64 + 1) * w0,
            Weight::Infinite => true,
        }
    }

    /// The k * 2^M * (rank-1)-shaped bound with W0 = 2^M (rank-1)-ish data:
    /// edges <= k * W0.
    pub fn k_w_bound_holds(&self, edges: usize) -> bool {
        match self.initial_weight {
            Weight::Finite(w0) => edges as u64 <= self.k as u64 * w0,
            Weight::Infinite => true,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "driver mode={} pclass={} k={} W0={}\n",
            self.mode, self.pclass, self.k, self.initial_weight
        );
        if let Some(c) = self.resolution_bound {
            out.push_str(&format!("resolution bound C(G)={}\n", c));
        }
        for s in &self.steps {
            out.push_str(&format!(
                "step {}: {} {} weight {} -> {} collapsed {}{}\n",
                s.index,
                s.action,
                s.case.clone().unwrap_or_default(),
                s.weight_before,
                s.weight_after,
                s.collapsed,
                if s.collapse_cap > 0 {
                    format!(" (cap {})", s.collapse_cap)
                } else {
                    String::new()
                }
            ));
        }
        for c in &self.kernel_certificates {
            out.push_str(&format!("kernel: {}\n", c));
        }
        out.push_str(&format!(
            "final: weight={} edges={} vertices={} collapsed_total={} budget_exhausted={} cyclic_stage={}({})\n",
            self.final_weight,
            self.final_edges,
            self.final_vertices,
            self.total_collapsed,
            self.budget_exhausted,
            self.cyclic_stage_fired,
            self.cyclic_stage_spend
        ));
        out
    }
}

/// Replay a fold schedule with full seed and weight bookkeeping, collapsing
/// weight-one connectors as they appear. The trace records every step; a
/// weight increase aborts with a hard error.
pub fn run_driver(
    start: &Splitting,
    schedule: &[ScheduleStep],
    seeds: &SeedSet,
    pclass: &PClass,
    cfg: &DriverConfig,
) -> Result<DriverTrace, InfluenceError> {
    let mut sp = start.clone();
    let mut cur_seeds = seeds.clone();
    let mut trace_steps: Vec<TraceStep> = Vec::new();
    let mut total_collapsed = 0usize;
    let mut cyclic_fired = false;
    let mut cyclic_spend = 0usize;
    let mut kernel_certs = Vec::new();
    let initial_weight = seed_weight(&sp, &cur_seeds, pclass)?.total;
    let mut last_weight = initial_weight;
    let mut budget_exhausted = false;

    let push = |steps: &mut Vec<TraceStep>,
                    action: String,
                    case: Option<String>,
                    before: Weight,
                    after: Weight,
                    collapsed: usize,
                    cap: usize| {
        steps.push(TraceStep {
            index: steps.len(),
            action,
            case,
            weight_before: before,
            weight_after: after,
            collapsed,
            collapse_cap: cap,
        });
    };

    let drain_large = |sp: &mut Splitting,
                           cur_seeds: &mut SeedSet,
                           steps: &mut Vec<TraceStep>,
                           total: &mut usize,
                           last: &mut Weight|
     -> Result<(), InfluenceError> {
        loop {
            if cur_seeds.is_empty() {
                return Ok(());
            }
            let forest = grow_forest(sp, cur_seeds)?;
            let ledger = ledger_of_forest(sp, &forest, pclass);
            if !ledger.connecting.iter().any(|(_, _, w)| w.is_one()) {
                return Ok(());
            }
            let c = collapse_large_connector(sp, cur_seeds, pclass, cfg.k)?;
            *total += c.collapsed_edges;
            push(
                steps,
                format!("collapse-large-connector {}", c.connector),
                None,
                c.weight_before,
                c.weight_after,
                c.collapsed_edges,
                c.cap,
            );
            *last = c.weight_after;
            *sp = c.splitting;
            *cur_seeds = c.seeds;
        }
    };

    for (i, step) in schedule.iter().enumerate() {
        if i >= cfg.budget {
            budget_exhausted = true;
            break;
        }
        match step {
            ScheduleStep::Subdivide { edge, parts } => {
                sp.subdivide(*edge, *parts)?;
                let w = seed_weight(&sp, &cur_seeds, pclass)?.total;
                if w != last_weight {
                    return Err(InfluenceError::WeightIncrease(
                        last_weight.to_string(),
                        w.to_string(),
                    ));
                }
                push(
                    &mut trace_steps,
                    format!("subdivide {} into {}", edge, parts),
                    None,
                    last_weight,
                    w,
                    0,
                    0,
                );
            }
            ScheduleStep::Relabel => {
                let target = cfg
                    .target
                    .clone()
                    .ok_or_else(|| InfluenceError::Other("relabel without a target".into()))?;
                // Kernel certificate: short elements of each edge group must
                // survive the relabeling.
                let bound = crate::limits::max_depth() as u64;
                for e in sp.edge_ids() {
                    let group = &sp.edge(e).group;
                    let mut ok = true;
                    for w in group.elements_up_to(bound.min(6)) {
                        if w.is_identity() {
                            continue;
                        }
                        let translated: Vec<(usize, i64)> = w
                            .syllables()
                            .iter()
                            .map(|&(g, x)| {
                                (
                                    target
                                        .gen_index(sp.presentation().symbol(g))
                                        .expect("shared symbols"),
                                    x,
                                )
                            })
                            .collect();
                        if crate::word::Word::from_syllables(&target, translated).is_identity() {
                            ok = false;
                            break;
                        }
                    }
                    kernel_certs.push(format!(
                        "edge {}: kernel ∩ stabilizer trivial up to weight {}: {}",
                        e,
                        bound.min(6),
                        ok
                    ));
                }
                sp = relabel(&sp, &target);
                let w = seed_weight(&sp, &cur_seeds, pclass)?.total;
                if w > last_weight {
                    return Err(InfluenceError::WeightIncrease(
                        last_weight.to_string(),
                        w.to_string(),
                    ));
                }
                push(
                    &mut trace_steps,
                    "relabel".into(),
                    None,
                    last_weight,
                    w,
                    0,
                    0,
                );
                last_weight = w;
            }
            ScheduleStep::Collapse { edges } => {
                let was_free = is_free(&sp);
                let record = sp.collapse(&edges.iter().copied().collect(), false)?;
                if was_free && !is_free(&sp) && cur_seeds.is_empty() {
                    cur_seeds = all_nontrivial_orbits(&sp);
                } else {
                    cur_seeds = cur_seeds.map_through(&record.vertex_map);
                }
                let w = seed_weight(&sp, &cur_seeds, pclass)?.total;
                if w > last_weight {
                    return Err(InfluenceError::WeightIncrease(
                        last_weight.to_string(),
                        w.to_string(),
                    ));
                }
                push(
                    &mut trace_steps,
                    format!("collapse {} edges (schedule)", edges.len()),
                    Some(if was_free { "free-stage".into() } else { String::new() }),
                    last_weight,
                    w,
                    edges.len(),
                    0,
                );
                last_weight = w;
            }
            ScheduleStep::Fold(m) => {
                drain_large(
                    &mut sp,
                    &mut cur_seeds,
                    &mut trace_steps,
                    &mut total_collapsed,
                    &mut last_weight,
                )?;
                let use_cyclic = cyclic_stage_applies(&sp, &cur_seeds, pclass)?;
                let outcome = apply_fold(&sp, m)?;
                if use_cyclic {
                    match cyclic_stage(&sp, m, &outcome, &cur_seeds, cfg.k)? {
                        CyclicStageOutcome::Kept(update) => {
                            push(
                                &mut trace_steps,
                                format!("fold {} (cyclic stage kept)", outcome.fold_type),
                                Some(update.case.to_string()),
                                update.ledger_before.total,
                                update.ledger_after.total,
                                0,
                                0,
                            );
                            last_weight = update.ledger_after.total;
                            cur_seeds = update.seeds;
                            sp = outcome.splitting;
                        }
                        CyclicStageOutcome::Collapsed {
                            update,
                            splitting,
                            seeds,
                            collapsed_edges,
                            cap,
                            weight_before,
                            weight_after,
                        } => {
                            cyclic_fired = true;
                            cyclic_spend = collapsed_edges;
                            total_collapsed += collapsed_edges;
                            push(
                                &mut trace_steps,
                                format!("fold {} (cyclic stage collapse)", outcome.fold_type),
                                Some(update.case.to_string()),
                                weight_before,
                                weight_after,
                                collapsed_edges,
                                cap,
                            );
                            last_weight = weight_after;
                            cur_seeds = seeds;
                            sp = splitting;
                        }
                    }
                } else {
                    let update =
                        update_seeds_after_fold(&sp, m, &outcome, &cur_seeds, pclass)?;
                    push(
                        &mut trace_steps,
                        format!("fold {}", outcome.fold_type),
                        Some(update.case.to_string()),
                        update.ledger_before.total,
                        update.ledger_after.total,
                        0,
                        0,
                    );
                    last_weight = update.ledger_after.total;
                    cur_seeds = update.seeds;
                    sp = outcome.splitting;
                }
            }
        }
    }
    if !budget_exhausted {
        drain_large(
            &mut sp,
            &mut cur_seeds,
            &mut trace_steps,
            &mut total_collapsed,
            &mut last_weight,
        )?;
    }
    let final_weight = seed_weight(&sp, &cur_seeds, pclass)?.total;
    Ok(DriverTrace {
        steps: trace_steps,
        initial_weight,
        final_weight,
        total_collapsed,
        final_edges: sp.edge_count(),
        final_vertices: sp.vertex_count(),
        budget_exhausted,
        cyclic_stage_fired: cyclic_fired,
        cyclic_stage_spend: cyclic_spend,
        kernel_certificates: kernel_certs,
        mode: cfg.mode,
        k: cfg.k,
        pclass: pclass.to_string(),
        resolution_bound: cfg.resolution_bound,
    })
}

/// Weights of the connecting groups of a seed set (empty for empty seeds).
pub fn grow_connecting_weights(
    sp: &Splitting,
    seeds: &SeedSet,
    pclass: &PClass,
) -> Result<Vec<Weight>, InfluenceError> {
    if seeds.is_empty() {
        return Ok(Vec::new());
    }
    let forest = grow_forest(sp, seeds)?;
    Ok(forest
        .connecting_orbits(sp)
        .iter()
        .map(|&e| pclass.p_weight(&sp.edge(e).group))
        .collect())
}

/// Monotonicity of the trace: weights never increase across steps.
pub fn trace_weights_monotone(trace: &DriverTrace) -> bool {
    let mut prev = trace.initial_weight;
    for s in &trace.steps {
        if s.weight_before > prev || s.weight_after > s.weight_before {
            return false;
        }
        prev = s.weight_after;
    }
    trace.final_weight <= prev
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fold::pull_move;
    use crate::splitting::Cell;
    use crate::splitting::one_edge_splitting;
    use crate::word::{Presentation, Word};

    fn word(p: &Presentation, s: &str) -> Word {
        Word::parse(p, s).unwrap()
    }

    #[test]
    fn case1_pull_inside_forest_preserves_weight() {
        // A - B edge subdivided: pulling a^2 along the first edge keeps the
        // interior vertex inside the A tree of influence.
        let p = Presentation::free(2);
        let mut sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        let (_, es) = sp.subdivide(EdgeId(0), 2).unwrap();
        let seeds = SeedSet::new([VertexId(0), VertexId(1)]);
        let m = pull_move(&sp, es[0], End::Tail, &word(&p, "a^2"));
        let outcome = apply_fold(&sp, &m).unwrap();
        let update =
            update_seeds_after_fold(&sp, &m, &outcome, &seeds, &PClass::trivial_only()).unwrap();
        assert_eq!(update.case, FoldCase::SharedForest);
        assert!(update.weight_preserved);
        assert_eq!(update.ledger_after.total, Weight::Finite(2));
        assert!(update.injective_on_seeds);
    }

    #[test]
    fn free_transition_keeps_weight_formula() {
        // Rose of F2: subdivide the b petal and fold it in two, making b
        // elliptic. Weight (beta1 - 1) * 2 = 2 is preserved.
        let p = Presentation::free(2);
        let mut sp = crate::splitting::rose_splitting(&p, &[], &[word(&p, "a"), word(&p, "b")]);
        let (vs, es) = sp.subdivide(EdgeId(1), 2).unwrap();
        let m = crate::fold::FoldMove {
            pivot: Cell {
                orbit: vs[0],
                rep: Word::identity(),
            },
            e1: crate::fold::EdgeHalf {
                orbit: es[0],
                rep: Word::identity(),
                pivot_end: End::Head,
            },
            e2: crate::fold::EdgeHalf {
                orbit: es[1],
                rep: Word::identity(),
                pivot_end: End::Tail,
            },
            witness: Some(word(&p, "b")),
        };
        let outcome = apply_fold(&sp, &m).unwrap();
        assert_eq!(outcome.fold_type.roman(), 3);
        let update = update_seeds_after_fold(
            &sp,
            &m,
            &outcome,
            &SeedSet::empty(),
            &PClass::trivial_only(),
        )
        .unwrap();
        assert_eq!(update.case, FoldCase::FreeTransition);
        assert_eq!(update.ledger_before.total, Weight::Finite(2));
        assert_eq!(update.ledger_after.total, Weight::Finite(2));
        assert!(!update.seeds.is_empty());
    }

    #[test]
    fn routed_to_collapse_when_connector_large() {
        let p = Presentation::free(2);
        let mut sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        // make the single edge group nontrivial: weight 1 under trivial-only
        sp.edge_mut(EdgeId(0)).group =
            crate::automaton::SubgroupRep::from_generators(&[word(&p, "a")], &p);
        sp.vertex_mut(VertexId(1)).group =
            crate::automaton::SubgroupRep::from_generators(&[word(&p, "a"), word(&p, "b")], &p);
        let seeds = SeedSet::new([VertexId(0), VertexId(1)]);
        let m = pull_move(&sp, EdgeId(0), End::Head, &word(&p, "b"));
        let outcome = apply_fold(&sp, &m).unwrap();
        assert!(matches!(
            update_seeds_after_fold(&sp, &m, &outcome, &seeds, &PClass::trivial_only()),
            Err(InfluenceError::RoutedToCollapse(_))
        ));
        // and the collapse stage removes it, spending one edge (cap k)
        let c = collapse_large_connector(&sp, &seeds, &PClass::trivial_only(), 1).unwrap();
        assert_eq!(c.collapsed_edges, 1);
        assert_eq!(c.weight_after, Weight::Finite(0));
        assert_eq!(c.splitting.edge_count(), 0);
    }

    #[test]
    fn refutation_when_fixed_path_too_long() {
        // A chain of 3 edges all labelled <a>: the connector's fixed region
        // spans more than k = 2 edges.
        let p = Presentation::free(2);
        let mut sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        let (vs, es) = sp.subdivide(EdgeId(0), 3).unwrap();
        let a_group = crate::automaton::SubgroupRep::from_generators(&[word(&p, "a")], &p);
        for &e in &es {
            sp.edge_mut(e).group = a_group.clone();
        }
        for &v in &vs {
            sp.vertex_mut(v).group = a_group.clone();
        }
        sp.vertex_mut(VertexId(1)).group = crate::automaton::SubgroupRep::from_generators(
            &[word(&p, "a"), word(&p, "b")],
            &p,
        );
        let seeds = SeedSet::new([VertexId(0), VertexId(1)]);
        assert!(matches!(
            collapse_large_connector(&sp, &seeds, &PClass::trivial_only(), 2),
            Err(InfluenceError::AcylindricityRefuted { .. })
        ));
    }

    #[test]
    fn certify_single_seed_point() {
        let p = Presentation::free(2);
        let mut sp = Splitting::new(p.clone());
        sp.add_vertex(crate::automaton::SubgroupRep::from_generators(
            &[word(&p, "a"), word(&p, "b")],
            &p,
        ));
        let seeds = SeedSet::new([VertexId(0)]);
        let cert = certify_edge_bound(&sp, &seeds, &PClass::trivial_only(), 2).unwrap();
        assert_eq!(cert.n_connecting, 0);
        assert_eq!(cert.claimed_bound, 0);
        assert!(cert.bound_holds);
    }
}
