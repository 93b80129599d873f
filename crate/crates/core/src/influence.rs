//! Seed vertices, forests of influence, and the weight ledger.
//!
//! A seed set is a G-invariant set of vertex orbits dominating every
//! stabilizer. A forest of influence is stored as an equivariant
//! parent-pointer structure on the quotient: each non-seed orbit names the
//! incident edge end that starts its branch, subject to the branch-edge law
//! (the attachment conjugate of the parent edge group equals the vertex
//! group) and acyclicity. The connecting edges are the orbits left out, and
//! the weight of the seed set is the sum of their class weights.

use crate::automaton::SubgroupRep;
use crate::pclass::{PClass, Weight};
use crate::splitting::{EdgeId, End, Splitting, SplittingError, VertexId};
use crate::word::Word;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InfluenceError {
    #[error("vertex {0} is dominated by no seed: not a seed set")]
    Uncoverable(VertexId),
    #[error("a connecting group ({0}) is larger than the class; collapse it first")]
    RoutedToCollapse(EdgeId),
    #[error("invalid forest: {0}")]
    InvalidForest(String),
    #[error("weight increased from {0} to {1}: theorem violation means an implementation bug")]
    WeightIncrease(String, String),
    #[error("acylindricity refuted: the fixed path through {edge} spans {got} edges, cap {cap}")]
    AcylindricityRefuted { edge: EdgeId, got: usize, cap: usize },
    #[error("fold error: {0}")]
    Fold(#[from] crate::fold::FoldError),
    #[error("splitting error: {0}")]
    Splitting(#[from] SplittingError),
    #[error("driver budget exhausted after {0} steps")]
    BudgetExhausted(usize),
    #[error("{0}")]
    Other(String),
}

/// Orbit-closed seed vertex set. The empty set is only allowed for free
/// actions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedSet {
    pub orbits: BTreeSet<VertexId>,
}

impl SeedSet {
    pub fn new(orbits: impl IntoIterator<Item = VertexId>) -> SeedSet {
        SeedSet {
            orbits: orbits.into_iter().collect(),
        }
    }

    pub fn empty() -> SeedSet {
        SeedSet {
            orbits: BTreeSet::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.orbits.contains(&v)
    }

    /// Map seed orbits through a fold or collapse forwarding map.
    pub fn map_through(&self, map: &BTreeMap<VertexId, VertexId>) -> SeedSet {
        SeedSet {
            orbits: self.orbits.iter().map(|v| map[v]).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParentEdge {
    pub edge: EdgeId,
    /// The end of the edge at the child vertex.
    pub child_end: End,
}

/// Forest of influence at quotient level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Forest {
    pub seeds: SeedSet,
    pub parent: BTreeMap<VertexId, ParentEdge>,
}

impl Forest {
    pub fn forest_edges(&self) -> BTreeSet<EdgeId> {
        self.parent.values().map(|p| p.edge).collect()
    }

    pub fn connecting_orbits(&self, sp: &Splitting) -> Vec<EdgeId> {
        let used = self.forest_edges();
        sp.edge_ids()
            .into_iter()
            .filter(|e| !used.contains(e))
            .collect()
    }

    /// The seed cell influencing the canonical cell of `v`: follows parent
    /// pointers accumulating tree positions. Returns (seed orbit, position).
    pub fn influencer(&self, sp: &Splitting, v: VertexId) -> (VertexId, Word) {
        let pres = sp.presentation();
        let mut cur = v;
        let mut pos = Word::identity();
        while let Some(p) = self.parent.get(&cur) {
            let d = sp.edge(p.edge);
            let far_end = p.child_end.other();
            // From the canonical cell of `cur`, its branch edge lifts to the
            // tree edge attach_child * E, whose far endpoint sits at
            // attach_child * attach_far^-1 * V_far.
            let step = d
                .attach(p.child_end)
                .mul(pres, &d.attach(far_end).inverse(pres));
            pos = pos.mul(pres, &step);
            cur = d.end_vertex(far_end);
        }
        (cur, pos)
    }

    /// Branch length (in edges) of a vertex orbit.
    pub fn branch_length(&self, sp: &Splitting, v: VertexId) -> usize {
        let mut cur = v;
        let mut len = 0;
        while let Some(p) = self.parent.get(&cur) {
            cur = sp.edge(p.edge).end_vertex(p.child_end.other());
            len += 1;
        }
        len
    }

    /// Full check of the forest laws: branch-edge condition, acyclicity
    /// (implied by the BTreeMap walk terminating), coverage, influence.
    pub fn validate(&self, sp: &Splitting) -> Result<(), InfluenceError> {
        for v in sp.vertex_ids() {
            if self.seeds.contains(v) {
                if self.parent.contains_key(&v) {
                    return Err(InfluenceError::InvalidForest(format!(
                        "seed {} has a parent",
                        v
                    )));
                }
                continue;
            }
            let p = self
                .parent
                .get(&v)
                .ok_or(InfluenceError::Uncoverable(v))?;
            if sp.edge(p.edge).end_vertex(p.child_end) != v {
                return Err(InfluenceError::InvalidForest(format!(
                    "parent edge of {} is not incident at the stated end",
                    v
                )));
            }
            if !branch_edge_law(sp, v, p) {
                return Err(InfluenceError::InvalidForest(format!(
                    "branch edge of {} violates stab(e) = stab(v)",
                    v
                )));
            }
        }
        // Acyclicity: walking parents must terminate for every orbit.
        for v in sp.vertex_ids() {
            let mut cur = v;
            let mut steps = 0;
            while let Some(p) = self.parent.get(&cur) {
                cur = sp.edge(p.edge).end_vertex(p.child_end.other());
                steps += 1;
                if steps > sp.vertex_count() {
                    return Err(InfluenceError::InvalidForest(format!(
                        "parent pointers cycle through {}",
                        v
                    )));
                }
            }
            if !self.seeds.contains(cur) {
                return Err(InfluenceError::Uncoverable(v));
            }
        }
        // Influence: stab(v) <= stab(seed cell).
        for v in sp.vertex_ids() {
            if self.seeds.contains(v) {
                continue;
            }
            let (u, pos) = self.influencer(sp, v);
            let seed_group = &sp.vertex(u).group;
            for g in sp.vertex(v).group.generators() {
                if !seed_group.conjugate_contains(&pos, g) {
                    return Err(InfluenceError::InvalidForest(format!(
                        "vertex {} is not dominated by its seed {}",
                        v, u
                    )));
                }
            }
        }
        Ok(())
    }
}

/// stab(first branch edge) = stab(v): the attachment conjugate of the edge
/// group at the child end equals the child vertex group.
pub fn branch_edge_law(sp: &Splitting, v: VertexId, p: &ParentEdge) -> bool {
    let conj = sp.edge_group_at(p.edge, p.child_end);
    let vg = &sp.vertex(v).group;
    conj.is_subgroup_of(vg) && vg.is_subgroup_of(&conj)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrowOrder {
    Ascending,
    Descending,
}

/// Grow a forest of influence from the seed set by greedy attachment. Every
/// valid attachment step preserves influence transitively thanks to the
/// branch-edge law, so only the local law is tested. Deterministic for each
/// tie-break order.
pub fn grow_forest_ordered(
    sp: &Splitting,
    seeds: &SeedSet,
    order: GrowOrder,
) -> Result<Forest, InfluenceError> {
    grow_forest_constrained(sp, seeds, order, &BTreeMap::new(), &BTreeSet::new())
}

pub fn grow_forest(sp: &Splitting, seeds: &SeedSet) -> Result<Forest, InfluenceError> {
    grow_forest_ordered(sp, seeds, GrowOrder::Ascending)
}

/// Growth honoring forced parent assignments and forbidden edge orbits.
pub fn grow_forest_constrained(
    sp: &Splitting,
    seeds: &SeedSet,
    order: GrowOrder,
    forced: &BTreeMap<VertexId, ParentEdge>,
    forbidden: &BTreeSet<EdgeId>,
) -> Result<Forest, InfluenceError> {
    if seeds.is_empty() {
        // Only valid for free actions: nothing to grow, nothing to cover.
        let free = sp
            .vertex_ids()
            .iter()
            .all(|&v| sp.vertex(v).group.is_trivial());
        if !free {
            let bad = sp
                .vertex_ids()
                .into_iter()
                .find(|&v| !sp.vertex(v).group.is_trivial())
                .unwrap();
            return Err(InfluenceError::Uncoverable(bad));
        }
        if sp.vertex_count() != 1 {
            // A free action still needs every vertex covered; with no seeds
            // there is nothing to attach to, so only single-vertex quotients
            // qualify (the rose case).
            if let Some(&v) = sp.vertex_ids().iter().find(|v| !seeds.contains(**v)) {
                if sp.vertex_count() > 1 {
                    return Err(InfluenceError::Uncoverable(v));
                }
            }
        }
        return Ok(Forest {
            seeds: seeds.clone(),
            parent: BTreeMap::new(),
        });
    }
    for (v, p) in forced {
        if sp.edge(p.edge).end_vertex(p.child_end) != *v || !branch_edge_law(sp, *v, p) {
            return Err(InfluenceError::InvalidForest(format!(
                "forced parent of {} violates the branch-edge law",
                v
            )));
        }
    }
    let mut parent: BTreeMap<VertexId, ParentEdge> = BTreeMap::new();
    let mut covered: BTreeSet<VertexId> = seeds.orbits.clone();
    for (&v, &p) in forced {
        if covered.contains(&v) {
            return Err(InfluenceError::InvalidForest(format!(
                "forced parent on seed {}",
                v
            )));
        }
        parent.insert(v, p);
    }
    // Attach forced vertices whose chains already reach seeds, iterating
    // until the frontier stabilizes.
    loop {
        let mut progress = false;
        // First absorb forced chains that now reach covered ground.
        for (&v, &p) in &parent.clone() {
            if covered.contains(&v) {
                continue;
            }
            let far = sp.edge(p.edge).end_vertex(p.child_end.other());
            if covered.contains(&far) {
                covered.insert(v);
                progress = true;
            }
        }
        // Then greedy attachment of free vertices.
        let mut candidates: Vec<(VertexId, EdgeId, End)> = Vec::new();
        for v in sp.vertex_ids() {
            if covered.contains(&v) || parent.contains_key(&v) {
                continue;
            }
            for (e, end) in sp.incident_ends(v) {
                if forbidden.contains(&e) || parent.values().any(|p| p.edge == e) {
                    continue;
                }
                let far = sp.edge(e).end_vertex(end.other());
                if far == v {
                    continue; // a loop cannot be a branch edge
                }
                if !covered.contains(&far) {
                    continue;
                }
                let p = ParentEdge {
                    edge: e,
                    child_end: end,
                };
                if branch_edge_law(sp, v, &p) {
                    candidates.push((v, e, end));
                }
            }
        }
        candidates.sort();
        let pick = match order {
            GrowOrder::Ascending => candidates.first().cloned(),
            GrowOrder::Descending => candidates.last().cloned(),
        };
        if let Some((v, e, end)) = pick {
            parent.insert(
                v,
                ParentEdge {
                    edge: e,
                    child_end: end,
                },
            );
            covered.insert(v);
            progress = true;
        }
        if !progress {
            break;
        }
    }
    if let Some(&v) = sp.vertex_ids().iter().find(|v| !covered.contains(v)) {
        // Greedy growth can block itself when two vertices compete for the
        // same parent orbit; fall back to a full backtracking search.
        return grow_forest_backtracking(sp, seeds, forced, forbidden)
            .ok_or(InfluenceError::Uncoverable(v));
    }
    let forest = Forest {
        seeds: seeds.clone(),
        parent,
    };
    forest.validate(sp)?;
    Ok(forest)
}

fn grow_forest_backtracking(
    sp: &Splitting,
    seeds: &SeedSet,
    forced: &BTreeMap<VertexId, ParentEdge>,
    forbidden: &BTreeSet<EdgeId>,
) -> Option<Forest> {
    let free_vertices: Vec<VertexId> = sp
        .vertex_ids()
        .into_iter()
        .filter(|v| !seeds.contains(*v) && !forced.contains_key(v))
        .collect();
    fn rec(
        sp: &Splitting,
        seeds: &SeedSet,
        order: &[VertexId],
        idx: usize,
        parent: &mut BTreeMap<VertexId, ParentEdge>,
        forbidden: &BTreeSet<EdgeId>,
    ) -> bool {
        if idx == order.len() {
            let forest = Forest {
                seeds: seeds.clone(),
                parent: parent.clone(),
            };
            return forest.validate(sp).is_ok();
        }
        let v = order[idx];
        for (e, end) in sp.incident_ends(v) {
            if forbidden.contains(&e) || parent.values().any(|p| p.edge == e) {
                continue;
            }
            if sp.edge(e).end_vertex(end.other()) == v {
                continue;
            }
            let p = ParentEdge {
                edge: e,
                child_end: end,
            };
            if !branch_edge_law(sp, v, &p) {
                continue;
            }
            parent.insert(v, p);
            if rec(sp, seeds, order, idx + 1, parent, forbidden) {
                return true;
            }
            parent.remove(&v);
        }
        false
    }
    let mut parent = forced.clone();
    if rec(sp, seeds, &free_vertices, 0, &mut parent, forbidden) {
        Some(Forest {
            seeds: seeds.clone(),
            parent,
        })
    } else {
        None
    }
}

/// Does some forest grown from `seeds` contain every listed edge orbit?
pub fn exists_forest_containing(
    sp: &Splitting,
    seeds: &SeedSet,
    edges: &[EdgeId],
) -> Option<Forest> {
    if seeds.is_empty() {
        return None;
    }
    // Enumerate orientation choices for the required edges; each must serve
    // as somebody's branch edge.
    fn rec(
        sp: &Splitting,
        seeds: &SeedSet,
        edges: &[EdgeId],
        idx: usize,
        forced: &mut BTreeMap<VertexId, ParentEdge>,
    ) -> Option<Forest> {
        if idx == edges.len() {
            return grow_forest_constrained(sp, seeds, GrowOrder::Ascending, forced, &BTreeSet::new())
                .ok();
        }
        let e = edges[idx];
        let d = sp.edge(e);
        for end in [End::Tail, End::Head] {
            let child = d.end_vertex(end);
            if seeds.contains(child) || forced.contains_key(&child) {
                continue;
            }
            if d.end_vertex(end.other()) == child {
                continue;
            }
            let p = ParentEdge {
                edge: e,
                child_end: end,
            };
            if !branch_edge_law(sp, child, &p) {
                continue;
            }
            forced.insert(child, p);
            if let Some(f) = rec(sp, seeds, edges, idx + 1, forced) {
                return Some(f);
            }
            forced.remove(&child);
        }
        None
    }
    let mut forced = BTreeMap::new();
    rec(sp, seeds, edges, 0, &mut forced)
}

/// A conjugacy certificate for a connecting group. Cyclic groups get an
/// exact key (cyclic normal form of a generator up to inversion); other
/// groups are grouped only by literal equality and flagged unresolved.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConnectingCert {
    pub key: String,
    pub exact: bool,
}

pub fn conjugacy_cert(sp: &Splitting, group: &SubgroupRep) -> ConnectingCert {
    let pres = sp.presentation();
    let profile = group.kurosh_profile();
    if profile.is_trivial() {
        return ConnectingCert {
            key: "1".into(),
            exact: true,
        };
    }
    if profile.is_cyclic() {
        let g = &group.generators()[0];
        let (core, _) = g.cyclically_reduce(pres);
        let mut best: Option<Word> = None;
        for cand in [core.clone(), core.inverse(pres)] {
            let syls = cand.syllables().to_vec();
            let n = syls.len().max(1);
            for r in 0..n {
                let mut rot = Vec::new();
                rot.extend_from_slice(&syls[r..]);
                rot.extend_from_slice(&syls[..r]);
                let w = Word::from_syllables(pres, rot);
                best = Some(match best {
                    None => w,
                    Some(b) => crate::word::shortlex_min(pres, b, w),
                });
            }
        }
        return ConnectingCert {
            key: format!("cyc:{}", best.unwrap().to_text(pres)),
            exact: true,
        };
    }
    let gens: Vec<String> = group
        .generators()
        .iter()
        .map(|w| w.to_text(pres))
        .collect();
    ConnectingCert {
        key: format!("lit:{}", gens.join(",")),
        exact: false,
    }
}

#[derive(Clone, Debug)]
pub struct CollapseSpend {
    pub edges: usize,
    pub cap: usize,
    pub stage: &'static str,
}

/// The weight ledger of a seed set.
#[derive(Clone, Debug)]
pub struct WeightLedger {
    pub total: Weight,
    pub connecting: Vec<(EdgeId, ConnectingCert, Weight)>,
    pub collapses: Vec<CollapseSpend>,
    /// Empty seed set of a free action: the (beta_1 - 1) * W_1 formula.
    pub free_formula: bool,
}

impl WeightLedger {
    pub fn n_connecting(&self) -> usize {
        self.connecting.len()
    }

    pub fn to_text(&self, _sp: &Splitting) -> String {
        let mut out = format!("weight: {}\n", self.total);
        for (e, cert, w) in &self.connecting {
            out.push_str(&format!(
                "connecting {}: {} weight {}{}\n",
                e,
                cert.key,
                w,
                if cert.exact { "" } else { " (unresolved conjugacy)" }
            ));
        }
        for c in &self.collapses {
            out.push_str(&format!(
                "collapse[{}]: {} edges (cap {})\n",
                c.stage, c.edges, c.cap
            ));
        }
        out
    }
}

/// Weight of a seed set: grows a forest (any; the connecting multiset is an
/// invariant of the seed set) and sums the connecting class weights. The
/// empty seed set of a free action uses the Betti-number formula.
pub fn seed_weight(
    sp: &Splitting,
    seeds: &SeedSet,
    pclass: &PClass,
) -> Result<WeightLedger, InfluenceError> {
    if seeds.is_empty() {
        let free = sp
            .vertex_ids()
            .iter()
            .all(|&v| sp.vertex(v).group.is_trivial());
        if !free {
            return Err(InfluenceError::Uncoverable(
                sp.vertex_ids()
                    .into_iter()
                    .find(|&v| !sp.vertex(v).group.is_trivial())
                    .unwrap(),
            ));
        }
        let beta = sp.graph_invariants().betti_1 as u64;
        let w1 = pclass.height(sp.presentation());
        let total = match w1 {
            Weight::Finite(w) => Weight::Finite(beta.saturating_sub(1) * w),
            Weight::Infinite => {
                if beta <= 1 {
                    Weight::Finite(0)
                } else {
                    Weight::Infinite
                }
            }
        };
        return Ok(WeightLedger {
            total,
            connecting: Vec::new(),
            collapses: Vec::new(),
            free_formula: true,
        });
    }
    let forest = grow_forest(sp, seeds)?;
    Ok(ledger_of_forest(sp, &forest, pclass))
}

pub fn ledger_of_forest(sp: &Splitting, forest: &Forest, pclass: &PClass) -> WeightLedger {
    let mut connecting = Vec::new();
    let mut total = Weight::Finite(0);
    for e in forest.connecting_orbits(sp) {
        let group = &sp.edge(e).group;
        let w = pclass.p_weight(group);
        total = total.add(w);
        connecting.push((e, conjugacy_cert(sp, group), w));
    }
    WeightLedger {
        total,
        connecting,
        collapses: Vec::new(),
        free_formula: false,
    }
}

/// Multisets of connecting certificates, for the invariance property.
pub fn connecting_multiset(sp: &Splitting, forest: &Forest) -> Vec<ConnectingCert> {
    let mut certs: Vec<ConnectingCert> = forest
        .connecting_orbits(sp)
        .into_iter()
        .map(|e| conjugacy_cert(sp, &sp.edge(e).group))
        .collect();
    certs.sort();
    certs
}

/// Replace the branch edge of `v` by the connecting edge `(e2, end2)` with
/// equal stabilizer. The connecting multiset is unchanged.
pub fn elementary_transformation(
    sp: &Splitting,
    forest: &Forest,
    v: VertexId,
    e2: EdgeId,
    end2: End,
) -> Result<Forest, InfluenceError> {
    if forest.seeds.contains(v) {
        return Err(InfluenceError::InvalidForest(format!(
            "{} is a seed vertex",
            v
        )));
    }
    if forest.forest_edges().contains(&e2) {
        return Err(InfluenceError::InvalidForest(format!(
            "{} is already a forest edge",
            e2
        )));
    }
    if sp.edge(e2).end_vertex(end2) != v {
        return Err(InfluenceError::InvalidForest(format!(
            "{} has no {:?} end at {}",
            e2, end2, v
        )));
    }
    let p = ParentEdge {
        edge: e2,
        child_end: end2,
    };
    if !branch_edge_law(sp, v, &p) {
        return Err(InfluenceError::InvalidForest(
            "stab(e2) != stab(v): not an elementary transformation".into(),
        ));
    }
    let mut parent = forest.parent.clone();
    parent.insert(v, p);
    let out = Forest {
        seeds: forest.seeds.clone(),
        parent,
    };
    out.validate(sp)?;
    Ok(out)
}

/// Number of vertex orbits whose influencing seed cell differs between the
/// two forests.
pub fn forest_distance(sp: &Splitting, f1: &Forest, f2: &Forest) -> usize {
    sp.vertex_ids()
        .into_iter()
        .filter(|&v| {
            if f1.seeds.contains(v) {
                return false;
            }
            let (u1, pos1) = f1.influencer(sp, v);
            let (u2, pos2) = f2.influencer(sp, v);
            u1 != u2
                || !sp.same_vertex_cell(
                    &crate::splitting::Cell {
                        orbit: u1,
                        rep: pos1,
                    },
                    &crate::splitting::Cell {
                        orbit: u2,
                        rep: pos2,
                    },
                )
        })
        .count()
}

/// Transform `f1` into `f2` by elementary transformations, each strictly
/// decreasing the distance.
pub fn transform_chain(
    sp: &Splitting,
    f1: &Forest,
    f2: &Forest,
) -> Result<Vec<(VertexId, ParentEdge)>, InfluenceError> {
    if f1.seeds != f2.seeds {
        return Err(InfluenceError::InvalidForest(
            "forests grown from different seed sets".into(),
        ));
    }
    let mut cur = f1.clone();
    let mut steps = Vec::new();
    let mut d = forest_distance(sp, &cur, f2);
    while d > 0 {
        // Pick the least vertex with a differing influencer; walk its branch
        // in f2 and find the edge nearest the seed that is not in `cur`.
        let v = sp
            .vertex_ids()
            .into_iter()
            .find(|&v| {
                !cur.seeds.contains(v) && {
                    let (u1, p1) = cur.influencer(sp, v);
                    let (u2, p2) = f2.influencer(sp, v);
                    u1 != u2
                        || !sp.same_vertex_cell(
                            &crate::splitting::Cell { orbit: u1, rep: p1 },
                            &crate::splitting::Cell { orbit: u2, rep: p2 },
                        )
                }
            })
            .ok_or_else(|| InfluenceError::InvalidForest("distance positive but no witness".into()))?;
        let cur_edges = cur.forest_edges();
        // Branch of v in f2, listed from v toward the seed.
        let mut branch = Vec::new();
        let mut walker = v;
        while let Some(p) = f2.parent.get(&walker) {
            branch.push((walker, *p));
            walker = sp.edge(p.edge).end_vertex(p.child_end.other());
        }
        let (v_prime, p_prime) = branch
            .iter()
            .rev()
            .find(|(_, p)| !cur_edges.contains(&p.edge))
            .copied()
            .ok_or_else(|| {
                InfluenceError::InvalidForest("no replaceable edge on the branch".into())
            })?;
        cur = elementary_transformation(sp, &cur, v_prime, p_prime.edge, p_prime.child_end)?;
        steps.push((v_prime, p_prime));
        let nd = forest_distance(sp, &cur, f2);
        if nd >= d {
            return Err(InfluenceError::InvalidForest(format!(
                "elementary transformation failed to decrease d ({} -> {})",
                d, nd
            )));
        }
        d = nd;
    }
    Ok(steps)
}

/// Greedy minimal seed set for a splitting: start from every orbit with a
/// non-trivial group and drop orbits (largest id first) while a forest still
/// grows.
pub fn natural_seeds(sp: &Splitting) -> SeedSet {
    let mut seeds: BTreeSet<VertexId> = sp
        .vertex_ids()
        .into_iter()
        .filter(|&v| !sp.vertex(v).group.is_trivial())
        .collect();
    if seeds.is_empty() {
        // Free action: prefer the empty seed set when it is valid, else any
        // single orbit.
        if grow_forest(sp, &SeedSet::empty()).is_ok() {
            return SeedSet::empty();
        }
        seeds.insert(sp.vertex_ids()[0]);
    }
    // Try dropping candidates, largest first.
    let candidates: Vec<VertexId> = seeds.iter().rev().copied().collect();
    for v in candidates {
        if seeds.len() == 1 {
            break;
        }
        let mut trial = seeds.clone();
        trial.remove(&v);
        let trial_set = SeedSet { orbits: trial };
        if grow_forest(sp, &trial_set).is_ok() {
            seeds.remove(&v);
        }
    }
    SeedSet { orbits: seeds }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitting::{one_edge_splitting, rose_splitting};
    use crate::word::Presentation;

    fn word(p: &Presentation, s: &str) -> Word {
        Word::parse(p, s).unwrap()
    }

    #[test]
    fn rose_seed_weight_is_twice_rank() {
        // rose for F(X), seeds = the single vertex, P = trivial: each petal
        // is a trivial connecting group of weight 2.
        for rank in 1..=4 {
            let p = Presentation::free(rank.max(2));
            let petals: Vec<Word> = (0..rank)
                .map(|g| p.generator_word(g))
                .collect();
            let sp = rose_splitting(&p, &[], &petals);
            let seeds = SeedSet::new([VertexId(0)]);
            let ledger = seed_weight(&sp, &seeds, &PClass::trivial_only()).unwrap();
            assert_eq!(ledger.total, Weight::Finite(2 * rank as u64));
        }
    }

    #[test]
    fn empty_seed_formula() {
        // free action with beta_1 = 3: (3-1)*2 = 4
        let p = Presentation::free(3);
        let petals: Vec<Word> = (0..3).map(|g| p.generator_word(g)).collect();
        let sp = rose_splitting(&p, &[], &petals);
        let ledger = seed_weight(&sp, &SeedSet::empty(), &PClass::trivial_only()).unwrap();
        assert_eq!(ledger.total, Weight::Finite(4));
        assert!(ledger.free_formula);
    }

    #[test]
    fn single_seed_no_connecting() {
        let p = Presentation::free(2);
        let sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        let seeds = SeedSet::new([VertexId(0), VertexId(1)]);
        let forest = grow_forest(&sp, &seeds).unwrap();
        // both endpoints are seeds: the edge is connecting
        assert_eq!(forest.connecting_orbits(&sp).len(), 1);
        // subdividing absorbs interior vertices without new connecting edges
        let mut sub = sp.clone();
        sub.subdivide(EdgeId(0), 3).unwrap();
        let forest = grow_forest(&sub, &seeds).unwrap();
        assert_eq!(forest.connecting_orbits(&sub).len(), 1);
        let ledger = seed_weight(&sub, &seeds, &PClass::trivial_only()).unwrap();
        assert_eq!(ledger.total, Weight::Finite(2));
    }

    #[test]
    fn uncoverable_vertex_rejected() {
        let p = Presentation::free(2);
        let sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        // seed at A only: B has stabilizer <b> not dominated by <a>, and the
        // branch edge law fails (trivial edge group vs <b>).
        let seeds = SeedSet::new([VertexId(0)]);
        assert!(matches!(
            grow_forest(&sp, &seeds),
            Err(InfluenceError::Uncoverable(VertexId(1)))
        ));
    }

    #[test]
    fn two_forests_same_connecting_multiset() {
        // A path with a middle vertex influented from either side.
        let p = Presentation::free(2);
        let mut sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        sp.subdivide(EdgeId(0), 2).unwrap();
        let seeds = SeedSet::new([VertexId(0), VertexId(1)]);
        let f1 = grow_forest_ordered(&sp, &seeds, GrowOrder::Ascending).unwrap();
        let f2 = grow_forest_ordered(&sp, &seeds, GrowOrder::Descending).unwrap();
        assert_eq!(connecting_multiset(&sp, &f1), connecting_multiset(&sp, &f2));
        // and a transformation chain converts one into the other
        let steps = transform_chain(&sp, &f1, &f2).unwrap();
        assert!(steps.len() <= forest_distance(&sp, &f1, &f2).max(1));
        let mut cur = f1.clone();
        for (v, pe) in &steps {
            cur = elementary_transformation(&sp, &cur, *v, pe.edge, pe.child_end).unwrap();
        }
        assert_eq!(forest_distance(&sp, &cur, &f2), 0);
    }

    #[test]
    fn elementary_transformation_requires_equal_stabs() {
        let p = Presentation::free(2);
        let mut sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        sp.subdivide(EdgeId(0), 2).unwrap();
        // give the second edge a bigger group than the middle vertex
        let es = sp.edge_ids();
        let b_vertex = VertexId(1);
        sp.vertex_mut(b_vertex).group =
            SubgroupRep::from_generators(&[word(&p, "a"), word(&p, "b")], &p);
        sp.edge_mut(es[1]).group = SubgroupRep::from_generators(&[word(&p, "a")], &p);
        let seeds = SeedSet::new([VertexId(0), b_vertex]);
        let forest = grow_forest(&sp, &seeds).unwrap();
        // middle vertex trivial: swapping its parent to the <a>-edge fails
        let mid = sp
            .vertex_ids()
            .into_iter()
            .find(|v| !seeds.contains(*v))
            .unwrap();
        let q = forest.parent[&mid];
        let other = es.iter().copied().find(|&e| e != q.edge).unwrap();
        let end2 = if sp.edge(other).tail == mid {
            End::Tail
        } else {
            End::Head
        };
        assert!(elementary_transformation(&sp, &forest, mid, other, end2).is_err());
    }

    #[test]
    fn natural_seeds_minimal() {
        let p = Presentation::free(2);
        let sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        let seeds = natural_seeds(&sp);
        assert_eq!(seeds.orbits.len(), 2);
        let rose = rose_splitting(&p, &[], &[word(&p, "a"), word(&p, "b")]);
        assert!(natural_seeds(&rose).is_empty());
    }
}
