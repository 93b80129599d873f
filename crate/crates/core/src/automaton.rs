//! Folded core graphs for finitely generated subgroups of free products of
//! cyclic groups.
//!
//! Edges carry single generator letters. A generator of finite order `n`
//! never appears as a partial path: every node touched by it lies on a
//! complete directed cycle whose length divides `n`. Folding (making the
//! graph deterministic in both directions) preserves this shape, which makes
//! membership exact: a normal-form word lies in the subgroup iff it traces a
//! loop at the basepoint.

use crate::word::{Presentation, Word};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Folded, pruned, canonically numbered core graph with basepoint 0.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SubgroupRep {
    pres: Presentation,
    out: Vec<Vec<Option<u32>>>,
    inn: Vec<Vec<Option<u32>>>,
    gens: Vec<Word>,
}

impl std::fmt::Debug for SubgroupRep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let gens: Vec<String> = self.gens.iter().map(|w| w.to_text(&self.pres)).collect();
        write!(f, "<{}> ({} nodes)", gens.join(", "), self.out.len())
    }
}

/// Free rank plus finite cyclic factors of a subgroup, read off its core
/// graph via the Kurosh decomposition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KuroshProfile {
    pub free_rank: usize,
    pub finite_factors: Vec<u64>, // sorted multiset, every entry >= 2
}

impl KuroshProfile {
    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.finite_factors.is_empty()
    }

    /// Generated by a single element.
    pub fn is_cyclic(&self) -> bool {
        self.free_rank + self.finite_factors.len() <= 1
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank == 0 && self.finite_factors.len() <= 1
    }

    pub fn finite_order(&self) -> Option<u64> {
        if !self.is_finite() {
            return None;
        }
        Some(self.finite_factors.first().copied().unwrap_or(1))
    }

    pub fn total_rank(&self) -> usize {
        self.free_rank + self.finite_factors.len()
    }
}

struct GraphBuilder {
    pres: Presentation,
    parent: Vec<u32>,
    out: Vec<Vec<Option<u32>>>,
    inn: Vec<Vec<Option<u32>>>,
    pending: VecDeque<(u32, u32)>,
}

impl GraphBuilder {
    fn new(pres: Presentation) -> Self {
        let mut b = GraphBuilder {
            pres,
            parent: Vec::new(),
            out: Vec::new(),
            inn: Vec::new(),
            pending: VecDeque::new(),
        };
        b.new_node();
        b
    }

    fn rank(&self) -> usize {
        self.pres.rank()
    }

    fn new_node(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        self.out.push(vec![None; self.rank()]);
        self.inn.push(vec![None; self.rank()]);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = self.parent[x as usize];
        }
        x
    }

    fn set_edge(&mut self, from: u32, g: usize, to: u32) {
        let from = self.find(from);
        let to = self.find(to);
        match self.out[from as usize][g] {
            None => self.out[from as usize][g] = Some(to),
            Some(t) => {
                let t = self.find(t);
                if t != to {
                    self.pending.push_back((t, to));
                }
            }
        }
        let from = self.find(from);
        let to = self.find(to);
        match self.inn[to as usize][g] {
            None => self.inn[to as usize][g] = Some(from),
            Some(s) => {
                let s = self.find(s);
                if s != from {
                    self.pending.push_back((s, from));
                }
            }
        }
    }

    fn merge(&mut self, a: u32, b: u32) {
        let a = self.find(a);
        let b = self.find(b);
        if a == b {
            return;
        }
        let (keep, gone) = if a < b { (a, b) } else { (b, a) };
        self.parent[gone as usize] = keep;
        for g in 0..self.rank() {
            if let Some(t) = self.out[gone as usize][g] {
                match self.out[keep as usize][g] {
                    None => self.out[keep as usize][g] = Some(t),
                    Some(t2) => {
                        let (t, t2) = (self.find(t), self.find(t2));
                        if t != t2 {
                            self.pending.push_back((t, t2));
                        }
                    }
                }
            }
            if let Some(s) = self.inn[gone as usize][g] {
                match self.inn[keep as usize][g] {
                    None => self.inn[keep as usize][g] = Some(s),
                    Some(s2) => {
                        let (s, s2) = (self.find(s), self.find(s2));
                        if s != s2 {
                            self.pending.push_back((s, s2));
                        }
                    }
                }
            }
        }
    }

    fn fold(&mut self) {
        while let Some((a, b)) = self.pending.pop_front() {
            self.merge(a, b);
        }
    }

    /// Ensure `node` lies on a complete cycle of the finite-order generator
    /// `g` (length exactly `n` when created fresh; folding can shorten it to
    /// a divisor later).
    fn ensure_cycle(&mut self, node: u32, g: usize) -> u32 {
        let node = self.find(node);
        if self.out[node as usize][g].is_some() || self.inn[node as usize][g].is_some() {
            return node;
        }
        let n = self.pres.order(g);
        debug_assert!(n >= 2);
        let mut cur = node;
        for _ in 0..n - 1 {
            let next = self.new_node();
            self.set_edge(cur, g, next);
            cur = next;
        }
        self.set_edge(cur, g, node);
        self.find(node)
    }

    /// Walk one syllable from `node`, creating structure when `create`.
    fn step_syllable(&mut self, node: u32, g: usize, e: i64, create: bool) -> Option<u32> {
        let n = self.pres.order(g);
        let mut cur = self.find(node);
        if n > 0 {
            if self.out[cur as usize][g].is_none() && self.inn[cur as usize][g].is_none() {
                if !create {
                    return None;
                }
                cur = self.ensure_cycle(cur, g);
            }
            // Complete cycle: e forward steps are always defined.
            for _ in 0..e {
                cur = self.find(self.out[cur as usize][g]?);
            }
            Some(cur)
        } else {
            let steps = e.unsigned_abs();
            for _ in 0..steps {
                let next = if e > 0 {
                    self.out[cur as usize][g]
                } else {
                    self.inn[cur as usize][g]
                };
                match next {
                    Some(t) => cur = self.find(t),
                    None => {
                        if !create {
                            return None;
                        }
                        let fresh = self.new_node();
                        if e > 0 {
                            self.set_edge(cur, g, fresh);
                        } else {
                            self.set_edge(fresh, g, cur);
                        }
                        cur = self.find(fresh);
                    }
                }
            }
            Some(cur)
        }
    }

    fn trace(&mut self, from: u32, w: &Word, create: bool) -> Option<u32> {
        let mut cur = from;
        for &(g, e) in w.syllables() {
            cur = self.step_syllable(cur, g, e, create)?;
            // Creation can trigger folds lazily; flush so positions stay live.
            self.fold();
            cur = self.find(cur);
        }
        Some(cur)
    }

    fn add_relator_loop(&mut self, w: &Word) {
        let end = self.trace(0, w, true).expect("creation cannot fail");
        let base = self.find(0);
        if end != base {
            self.pending.push_back((end, base));
            self.fold();
        }
    }

    /// Compact into (out, inn) arrays over live nodes, basepoint first.
    fn compact(&mut self) -> (Vec<Vec<Option<u32>>>, Vec<Vec<Option<u32>>>, u32) {
        self.fold();
        let mut map: BTreeMap<u32, u32> = BTreeMap::new();
        let roots: Vec<u32> = (0..self.parent.len() as u32)
            .filter(|&x| self.parent[x as usize] == x)
            .collect();
        for (i, &r) in roots.iter().enumerate() {
            map.insert(r, i as u32);
        }
        let mut out = vec![vec![None; self.rank()]; roots.len()];
        let mut inn = vec![vec![None; self.rank()]; roots.len()];
        for (&r, &i) in &map {
            for g in 0..self.rank() {
                if let Some(t) = self.out[r as usize][g] {
                    let t = self.find(t);
                    out[i as usize][g] = Some(map[&t]);
                    inn[map[&t] as usize][g] = Some(i);
                }
            }
        }
        let base = map[&self.find(0)];
        (out, inn, base)
    }
}

/// Remove dead material: unreachable nodes, hanging trees, and hanging
/// full-length torsion cycles (whose loop reads the trivial element).
fn prune(
    pres: &Presentation,
    out: &mut Vec<Vec<Option<u32>>>,
    inn: &mut Vec<Vec<Option<u32>>>,
    base: u32,
) -> u32 {
    let rank = pres.rank();
    loop {
        let n_nodes = out.len();
        let mut dead_node = vec![false; n_nodes];

        let degree = |node: usize, out: &Vec<Vec<Option<u32>>>, inn: &Vec<Vec<Option<u32>>>| {
            let mut d = 0;
            for g in 0..rank {
                if out[node][g].is_some() {
                    d += 1;
                }
                if inn[node][g].is_some() {
                    d += 1;
                }
            }
            d
        };

        // Hanging-tree prune.
        let mut changed = false;
        let mut queue: VecDeque<usize> = (0..n_nodes)
            .filter(|&v| v as u32 != base && degree(v, out, inn) <= 1)
            .collect();
        while let Some(v) = queue.pop_front() {
            if dead_node[v] || v as u32 == base {
                continue;
            }
            if degree(v, out, inn) > 1 {
                continue;
            }
            dead_node[v] = true;
            changed = true;
            for g in 0..rank {
                if let Some(t) = out[v][g] {
                    out[v][g] = None;
                    inn[t as usize][g] = None;
                    if t as u32 != base && degree(t as usize, out, inn) <= 1 {
                        queue.push_back(t as usize);
                    }
                }
                if let Some(s) = inn[v][g] {
                    inn[v][g] = None;
                    out[s as usize][g] = None;
                    if s as u32 != base && degree(s as usize, out, inn) <= 1 {
                        queue.push_back(s as usize);
                    }
                }
            }
        }

        // Hanging full-length torsion cycles: the loop they subtend is the
        // identity, so they never occur on an accepting normal-form trace.
        for g in 0..rank {
            let n = pres.order(g);
            if n == 0 {
                continue;
            }
            let mut seen = vec![false; n_nodes];
            for start in 0..n_nodes {
                if seen[start] || dead_node[start] || out[start][g].is_none() {
                    continue;
                }
                let mut cycle = vec![start];
                seen[start] = true;
                let mut cur = out[start][g].unwrap() as usize;
                while cur != start {
                    seen[cur] = true;
                    cycle.push(cur);
                    cur = out[cur][g].unwrap() as usize;
                }
                if cycle.len() != n as usize {
                    continue;
                }
                let anchors: Vec<usize> = cycle
                    .iter()
                    .copied()
                    .filter(|&v| {
                        v as u32 == base
                            || (0..rank).any(|h| {
                                h != g && (out[v][h].is_some() || inn[v][h].is_some())
                            })
                    })
                    .collect();
                if anchors.len() <= 1 {
                    changed = true;
                    for &v in &cycle {
                        let t = out[v][g].unwrap() as usize;
                        out[v][g] = None;
                        inn[t][g] = None;
                    }
                    for &v in &cycle {
                        if !anchors.contains(&v) && v as u32 != base {
                            dead_node[v] = true;
                        }
                    }
                }
            }
        }


        // Keep the reachable component of the basepoint and renumber.
        let mut keep: Vec<u32> = Vec::new();
        let mut idx = vec![u32::MAX; n_nodes];
        let mut bfs = VecDeque::new();
        bfs.push_back(base as usize);
        idx[base as usize] = 0;
        keep.push(base);
        while let Some(v) = bfs.pop_front() {
            for g in 0..rank {
                for t in [out[v][g], inn[v][g]].into_iter().flatten() {
                    let t = t as usize;
                    if !dead_node[t] && idx[t] == u32::MAX {
                        idx[t] = keep.len() as u32;
                        keep.push(t as u32);
                        bfs.push_back(t);
                    }
                }
            }
        }
        let mut new_out = vec![vec![None; rank]; keep.len()];
        let mut new_inn = vec![vec![None; rank]; keep.len()];
        for (new_v, &old_v) in keep.iter().enumerate() {
            for g in 0..rank {
                if let Some(t) = out[old_v as usize][g] {
                    if idx[t as usize] != u32::MAX {
                        new_out[new_v][g] = Some(idx[t as usize]);
                        new_inn[idx[t as usize] as usize][g] = Some(new_v as u32);
                    }
                }
            }
        }
        let shrunk = new_out.len() < out.len() || changed;
        *out = new_out;
        *inn = new_inn;
        if !shrunk {
            return 0; // base is node 0 after renumbering
        }
        if out.len() == 1 && out[0].iter().all(|e| e.is_none()) {
            return 0;
        }
        // Loop again: removals can expose new hanging material.
    }
}

/// Canonical BFS renumbering from the basepoint with fixed edge order.
fn canonicalize(rank: usize, out: &[Vec<Option<u32>>], inn: &[Vec<Option<u32>>]) -> (Vec<Vec<Option<u32>>>, Vec<Vec<Option<u32>>>) {
    let n = out.len();
    let mut order = vec![u32::MAX; n];
    let mut seq = Vec::with_capacity(n);
    let mut q = VecDeque::new();
    order[0] = 0;
    seq.push(0usize);
    q.push_back(0usize);
    while let Some(v) = q.pop_front() {
        for g in 0..rank {
            for t in [out[v][g], inn[v][g]].into_iter().flatten() {
                let t = t as usize;
                if order[t] == u32::MAX {
                    order[t] = seq.len() as u32;
                    seq.push(t);
                    q.push_back(t);
                }
            }
        }
    }
    let mut new_out = vec![vec![None; rank]; n];
    let mut new_inn = vec![vec![None; rank]; n];
    for (new_v, &old_v) in seq.iter().enumerate() {
        for g in 0..rank {
            if let Some(t) = out[old_v][g] {
                new_out[new_v][g] = Some(order[t as usize]);
                new_inn[order[t as usize] as usize][g] = Some(new_v as u32);
            }
        }
    }
    (new_out, new_inn)
}

impl SubgroupRep {
    /// Core graph of the subgroup generated by `gens`.
    pub fn from_generators(gens: &[Word], pres: &Presentation) -> SubgroupRep {
        let mut b = GraphBuilder::new(pres.clone());
        for w in gens {
            b.add_relator_loop(w);
        }
        b.fold();
        let (mut out, mut inn, base) = b.compact();
        // Relocate basepoint to slot 0 before pruning, which assumes it.
        if base != 0 {
            out.swap(0, base as usize);
            inn.swap(0, base as usize);
            let fix = |x: &mut Option<u32>| {
                if let Some(t) = x {
                    if *t == 0 {
                        *t = base;
                    } else if *t == base {
                        *t = 0;
                    }
                }
            };
            for row in out.iter_mut().chain(inn.iter_mut()) {
                for cell in row.iter_mut() {
                    fix(cell);
                }
            }
        }
        let base = prune(pres, &mut out, &mut inn, 0);
        debug_assert_eq!(base, 0);
        let (out, inn) = canonicalize(pres.rank(), &out, &inn);
        let mut rep = SubgroupRep {
            pres: pres.clone(),
            out,
            inn,
            gens: Vec::new(),
        };
        rep.gens = rep.extract_generators();
        rep
    }

    pub fn trivial(pres: &Presentation) -> SubgroupRep {
        SubgroupRep::from_generators(&[], pres)
    }

    pub fn full_group(pres: &Presentation) -> SubgroupRep {
        let gens: Vec<Word> = (0..pres.rank()).map(|g| pres.generator_word(g)).collect();
        SubgroupRep::from_generators(&gens, pres)
    }

    pub fn presentation(&self) -> &Presentation {
        &self.pres
    }

    pub fn node_count(&self) -> usize {
        self.out.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out
            .iter()
            .map(|row| row.iter().filter(|e| e.is_some()).count())
            .sum()
    }

    /// Canonical generating set: one word per non-tree edge of the core graph.
    pub fn generators(&self) -> &[Word] {
        &self.gens
    }

    fn extract_generators(&self) -> Vec<Word> {
        let rank = self.pres.rank();
        let n = self.out.len();
        let mut tree_word: Vec<Option<Word>> = vec![None; n];
        tree_word[0] = Some(Word::identity());
        let mut tree_edge: BTreeSet<(u32, usize)> = BTreeSet::new();
        let mut q = VecDeque::new();
        q.push_back(0usize);
        while let Some(v) = q.pop_front() {
            for g in 0..rank {
                if let Some(t) = self.out[v][g] {
                    if tree_word[t as usize].is_none() {
                        let w = tree_word[v]
                            .clone()
                            .unwrap()
                            .mul(&self.pres, &Word::single(&self.pres, g, 1));
                        tree_word[t as usize] = Some(w);
                        tree_edge.insert((v as u32, g));
                        q.push_back(t as usize);
                    }
                }
                if let Some(s) = self.inn[v][g] {
                    if tree_word[s as usize].is_none() {
                        let w = tree_word[v]
                            .clone()
                            .unwrap()
                            .mul(&self.pres, &Word::single(&self.pres, g, -1));
                        tree_word[s as usize] = Some(w);
                        tree_edge.insert((s as u32, g));
                        q.push_back(s as usize);
                    }
                }
            }
        }
        let mut gens = Vec::new();
        for v in 0..n {
            for g in 0..rank {
                if let Some(t) = self.out[v][g] {
                    if tree_edge.contains(&(v as u32, g)) {
                        continue;
                    }
                    let w = tree_word[v]
                        .clone()
                        .unwrap()
                        .mul(&self.pres, &Word::single(&self.pres, g, 1))
                        .mul(&self.pres, &tree_word[t as usize].clone().unwrap().inverse(&self.pres));
                    if !w.is_identity() {
                        gens.push(w);
                    }
                }
            }
        }
        gens
    }

    fn step_syllable(&self, node: u32, g: usize, e: i64) -> Option<u32> {
        let n = self.pres.order(g);
        let mut cur = node;
        if n > 0 {
            for _ in 0..e {
                cur = self.out[cur as usize][g]?;
            }
        } else {
            for _ in 0..e.unsigned_abs() {
                cur = if e > 0 {
                    self.out[cur as usize][g]?
                } else {
                    self.inn[cur as usize][g]?
                };
            }
        }
        Some(cur)
    }

    /// Exact membership test for a normal-form word.
    pub fn contains(&self, w: &Word) -> bool {
        let mut cur = 0u32;
        for &(g, e) in w.syllables() {
            match self.step_syllable(cur, g, e) {
                Some(t) => cur = t,
                None => return false,
            }
        }
        cur == 0
    }

    /// `self <= other` as subgroups.
    pub fn is_subgroup_of(&self, other: &SubgroupRep) -> bool {
        self.gens.iter().all(|g| other.contains(g))
    }

    pub fn same_subgroup(&self, other: &SubgroupRep) -> bool {
        self == other
    }

    pub fn is_trivial(&self) -> bool {
        self.edge_count() == 0
    }

    /// Membership in the conjugate `c * self * c^-1` without materializing it.
    pub fn conjugate_contains(&self, c: &Word, w: &Word) -> bool {
        let t = c
            .inverse(&self.pres)
            .mul(&self.pres, w)
            .mul(&self.pres, c);
        self.contains(&t)
    }

    /// Materialize `c * self * c^-1`.
    pub fn conjugate(&self, c: &Word) -> SubgroupRep {
        let gens: Vec<Word> = self.gens.iter().map(|g| c.conj(&self.pres, g)).collect();
        SubgroupRep::from_generators(&gens, &self.pres)
    }

    /// Subgroup generated by both inputs.
    pub fn join(&self, other: &SubgroupRep) -> SubgroupRep {
        let mut gens = self.gens.clone();
        gens.extend_from_slice(&other.gens);
        SubgroupRep::from_generators(&gens, &self.pres)
    }

    pub fn join_words(&self, extra: &[Word]) -> SubgroupRep {
        let mut gens = self.gens.clone();
        gens.extend_from_slice(extra);
        SubgroupRep::from_generators(&gens, &self.pres)
    }

    /// Intersection via the pullback (product) graph at the paired basepoints.
    pub fn intersect(&self, other: &SubgroupRep) -> SubgroupRep {
        assert_eq!(self.pres, other.pres, "presentation mismatch");
        let rank = self.pres.rank();
        let mut index: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        let mut nodes: Vec<(u32, u32)> = vec![(0, 0)];
        index.insert((0, 0), 0);
        let mut out: Vec<Vec<Option<u32>>> = vec![vec![None; rank]];
        let mut inn: Vec<Vec<Option<u32>>> = vec![vec![None; rank]];
        let mut q = VecDeque::new();
        q.push_back(0usize);
        while let Some(v) = q.pop_front() {
            let (x, y) = nodes[v];
            for g in 0..rank {
                if let (Some(tx), Some(ty)) = (
                    self.out[x as usize][g],
                    other.out[y as usize][g],
                ) {
                    let key = (tx, ty);
                    let t = *index.entry(key).or_insert_with(|| {
                        nodes.push(key);
                        out.push(vec![None; rank]);
                        inn.push(vec![None; rank]);
                        q.push_back(nodes.len() - 1);
                        (nodes.len() - 1) as u32
                    });
                    out[v][g] = Some(t);
                    inn[t as usize][g] = Some(v as u32);
                }
                if let (Some(sx), Some(sy)) = (self.inn[x as usize][g], other.inn[y as usize][g]) {
                    let key = (sx, sy);
                    let s = *index.entry(key).or_insert_with(|| {
                        nodes.push(key);
                        out.push(vec![None; rank]);
                        inn.push(vec![None; rank]);
                        q.push_back(nodes.len() - 1);
                        (nodes.len() - 1) as u32
                    });
                    out[s as usize][g] = Some(v as u32);
                    inn[v][g] = Some(s);
                }
            }
        }
        let base = prune(&self.pres, &mut out, &mut inn, 0);
        debug_assert_eq!(base, 0);
        let (out, inn) = canonicalize(rank, &out, &inn);
        let mut rep = SubgroupRep {
            pres: self.pres.clone(),
            out,
            inn,
            gens: Vec::new(),
        };
        rep.gens = rep.extract_generators();
        rep
    }

    /// Kurosh profile from the core graph: every torsion cycle uses up one
    /// independent loop; a cycle of length `d < n` contributes the finite
    /// factor `Z/(n/d)`.
    pub fn kurosh_profile(&self) -> KuroshProfile {
        let rank = self.pres.rank();
        let n_nodes = self.out.len();
        let mut torsion_cycles = 0usize;
        let mut factors: Vec<u64> = Vec::new();
        for g in 0..rank {
            let n = self.pres.order(g);
            if n == 0 {
                continue;
            }
            let mut seen = vec![false; n_nodes];
            for start in 0..n_nodes {
                if seen[start] || self.out[start][g].is_none() {
                    continue;
                }
                let mut len = 0u64;
                let mut cur = start;
                loop {
                    seen[cur] = true;
                    len += 1;
                    cur = self.out[cur][g].unwrap() as usize;
                    if cur == start {
                        break;
                    }
                }
                torsion_cycles += 1;
                let quotient = n as u64 / len;
                debug_assert_eq!(n as u64 % len, 0, "torsion cycle length must divide order");
                if quotient > 1 {
                    factors.push(quotient);
                }
            }
        }
        let beta1 = self.edge_count() + 1 - self.node_count();
        factors.sort_unstable();
        KuroshProfile {
            free_rank: beta1 - torsion_cycles,
            finite_factors: factors,
        }
    }

    pub fn is_cyclic_subgroup(&self) -> bool {
        self.kurosh_profile().is_cyclic()
    }

    /// Elements of the subgroup with ambient geodesic weight at most
    /// `max_weight`, enumerated as reduced loops in the core graph.
    pub fn elements_up_to(&self, max_weight: u64) -> Vec<Word> {
        let mut out_words = vec![Word::identity()];
        let rank = self.pres.rank();
        struct Ctx<'a> {
            rep: &'a SubgroupRep,
            rank: usize,
            max: u64,
        }
        fn rec(
            ctx: &Ctx,
            node: u32,
            prev_gen: Option<usize>,
            used: u64,
            stack: &mut Vec<(usize, i64)>,
            acc: &mut Vec<Word>,
        ) {
            for g in 0..ctx.rank {
                if Some(g) == prev_gen {
                    continue;
                }
                let n = ctx.rep.pres.order(g);
                if n > 0 {
                    if ctx.rep.out[node as usize][g].is_none() {
                        continue;
                    }
                    let mut cur = node;
                    for e in 1..n as i64 {
                        cur = ctx.rep.out[cur as usize][g].unwrap();
                        let cost = (e as u64).min(n as u64 - e as u64);
                        if used + cost > ctx.max {
                            continue;
                        }
                        stack.push((g, e));
                        if cur == 0 {
                            acc.push(Word::from_syllables(&ctx.rep.pres, stack.clone()));
                        }
                        rec(ctx, cur, Some(g), used + cost, stack, acc);
                        stack.pop();
                    }
                } else {
                    for dir in [1i64, -1] {
                        let mut cur = node;
                        let mut e = 0i64;
                        loop {
                            let next = if dir > 0 {
                                ctx.rep.out[cur as usize][g]
                            } else {
                                ctx.rep.inn[cur as usize][g]
                            };
                            match next {
                                Some(t) => {
                                    cur = t;
                                    e += dir;
                                    let cost = e.unsigned_abs();
                                    if used + cost > ctx.max {
                                        break;
                                    }
                                    stack.push((g, e));
                                    if cur == 0 {
                                        acc.push(Word::from_syllables(
                                            &ctx.rep.pres,
                                            stack.clone(),
                                        ));
                                    }
                                    rec(ctx, cur, Some(g), used + cost, stack, acc);
                                    stack.pop();
                                }
                                None => break,
                            }
                        }
                    }
                }
            }
        }
        let ctx = Ctx {
            rep: self,
            rank,
            max: max_weight,
        };
        let mut stack = Vec::new();
        rec(&ctx, 0, None, 0, &mut stack, &mut out_words);
        out_words.sort_by(|a, b| a.shortlex_key(&self.pres).cmp(&b.shortlex_key(&self.pres)));
        out_words.dedup();
        out_words
    }

    /// Products of the defining generators up to the given generator count,
    /// deduplicated as normal forms. Used when elements with short subgroup
    /// spellings are needed even though their ambient length is large.
    pub fn generator_products(&self, max_factors: u32, max_elements: usize) -> Vec<Word> {
        let mut seen: BTreeSet<Word> = BTreeSet::new();
        seen.insert(Word::identity());
        let mut frontier = vec![Word::identity()];
        for _ in 0..max_factors {
            let mut next = Vec::new();
            for w in &frontier {
                for g in &self.gens {
                    for h in [g.clone(), g.inverse(&self.pres)] {
                        let prod = w.mul(&self.pres, &h);
                        if seen.insert(prod.clone()) {
                            next.push(prod);
                            if seen.len() >= max_elements {
                                let mut v: Vec<Word> = seen.into_iter().collect();
                                v.sort_by(|a, b| {
                                    a.shortlex_key(&self.pres).cmp(&b.shortlex_key(&self.pres))
                                });
                                return v;
                            }
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        let mut v: Vec<Word> = seen.into_iter().collect();
        v.sort_by(|a, b| a.shortlex_key(&self.pres).cmp(&b.shortlex_key(&self.pres)));
        v
    }

    /// Left-coset representatives of `sub` inside `self` discovered from
    /// short generator products. Returns `(reps, complete)`.
    pub fn coset_reps(
        &self,
        sub: &SubgroupRep,
        max_factors: u32,
        max_cosets: usize,
    ) -> (Vec<Word>, bool) {
        let elements = self.generator_products(max_factors, 4096);
        let mut reps: Vec<Word> = Vec::new();
        let mut overflow = false;
        for u in &elements {
            let mut found = false;
            for r in &reps {
                let diff = r.inverse(&self.pres).mul(&self.pres, u);
                if sub.contains(&diff) {
                    found = true;
                    break;
                }
            }
            if !found {
                if reps.len() >= max_cosets {
                    overflow = true;
                    break;
                }
                reps.push(u.clone());
            }
        }
        // Completeness certificates: the whole (finite) subgroup was
        // enumerated, or the index is one.
        let complete = if overflow {
            false
        } else if reps.len() == 1 && self.gens.iter().all(|g| sub.contains(g)) {
            true
        } else {
            let profile = self.kurosh_profile();
            match profile.finite_order() {
                Some(order) => (elements.len() as u64) == order,
                None => false,
            }
        };
        (reps, complete)
    }

    /// Deterministic text dump of the graph (for DOT captions and debugging).
    pub fn describe(&self) -> String {
        let gens: Vec<String> = self.gens.iter().map(|w| w.to_text(&self.pres)).collect();
        if gens.is_empty() {
            "1".to_string()
        } else {
            format!("<{}>", gens.join(", "))
        }
    }
}
