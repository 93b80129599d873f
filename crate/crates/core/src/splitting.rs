//! Graphs of groups over an ambient free product of cyclic groups.
//!
//! A `Splitting` stores the quotient graph of a group action on a tree.
//! Every vertex and edge group is a concrete subgroup of the ambient group,
//! and each oriented edge end carries an attachment conjugator `w` with
//! `w E w^-1 <= V`. The canonical tree edge `1*E` has endpoint cells
//! `attach_tail^-1 * V_tail` and `attach_head^-1 * V_head`; spanning-tree
//! edges carry identity attachments on both ends, so the stable letter of a
//! non-tree edge is `attach_head^-1 * attach_tail`.

use crate::automaton::SubgroupRep;
use crate::pclass::PClass;
use crate::word::{Presentation, Word, WordError};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VertexId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct EdgeId(pub u32);

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl std::fmt::Display for EdgeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, PartialOrd, Ord, Hash)]
pub enum End {
    Tail,
    Head,
}

impl End {
    pub fn other(self) -> End {
        match self {
            End::Tail => End::Head,
            End::Head => End::Tail,
        }
    }
}

#[derive(Clone, Debug)]
pub struct VertexData {
    pub group: SubgroupRep,
}

#[derive(Clone, Debug)]
pub struct EdgeData {
    pub tail: VertexId,
    pub head: VertexId,
    pub group: SubgroupRep,
    pub attach_tail: Word,
    pub attach_head: Word,
    pub tree: bool,
}

impl EdgeData {
    pub fn end_vertex(&self, end: End) -> VertexId {
        match end {
            End::Tail => self.tail,
            End::Head => self.head,
        }
    }

    pub fn attach(&self, end: End) -> &Word {
        match end {
            End::Tail => &self.attach_tail,
            End::Head => &self.attach_head,
        }
    }

    pub fn attach_mut(&mut self, end: End) -> &mut Word {
        match end {
            End::Tail => &mut self.attach_tail,
            End::Head => &mut self.attach_head,
        }
    }
}

/// A tree vertex `rep * V_orbit`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub orbit: VertexId,
    pub rep: Word,
}

/// A tree edge `rep * E_orbit`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeCell {
    pub orbit: EdgeId,
    pub rep: Word,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SplittingError {
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("subdivision needs at least 2 parts, got {0}")]
    BadSubdivision(u32),
    #[error("collapsing loop {0} would absorb its stable letter into the vertex group")]
    LoopCollapse(EdgeId),
    #[error("word error: {0}")]
    Word(#[from] WordError),
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    EdgeGroupNotInVertex {
        edge: EdgeId,
        end: End,
    },
    TreeAttachmentNotIdentity {
        edge: EdgeId,
    },
    TreeNotSpanning,
    Disconnected,
    GeneratorNotGenerated {
        generator: String,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::EdgeGroupNotInVertex { edge, end } => {
                write!(f, "edge {} group not contained in its {:?} vertex group", edge, end)
            }
            Violation::TreeAttachmentNotIdentity { edge } => {
                write!(f, "tree edge {} carries a non-identity attachment", edge)
            }
            Violation::TreeNotSpanning => write!(f, "tree edges do not form a spanning tree"),
            Violation::Disconnected => write!(f, "quotient graph is not connected"),
            Violation::GeneratorNotGenerated { generator } => {
                write!(f, "ambient generator {} is not generated by vertex groups and stable letters", generator)
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct GraphInvariants {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub euler_characteristic: i64,
    pub betti_1: usize,
    pub valence_histogram: BTreeMap<usize, usize>,
}

#[derive(Clone, Debug)]
pub struct ReducednessReport {
    pub minimal: bool,
    pub reduced: bool,
    pub partially_reduced: bool,
    pub offending_vertices: Vec<VertexId>,
}

/// Record returned by `collapse`: which vertices merged where.
#[derive(Clone, Debug)]
pub struct CollapseRecord {
    pub removed_edges: Vec<EdgeId>,
    pub vertex_map: BTreeMap<VertexId, VertexId>,
}

#[derive(Clone, Debug)]
pub struct Splitting {
    pres: Presentation,
    vertices: BTreeMap<VertexId, VertexData>,
    edges: BTreeMap<EdgeId, EdgeData>,
    next_vertex: u32,
    next_edge: u32,
}

impl Splitting {
    pub fn new(pres: Presentation) -> Splitting {
        Splitting {
            pres,
            vertices: BTreeMap::new(),
            edges: BTreeMap::new(),
            next_vertex: 0,
            next_edge: 0,
        }
    }

    pub fn presentation(&self) -> &Presentation {
        &self.pres
    }

    pub fn add_vertex(&mut self, group: SubgroupRep) -> VertexId {
        let id = VertexId(self.next_vertex);
        self.next_vertex += 1;
        self.vertices.insert(id, VertexData { group });
        id
    }

    pub fn add_edge(
        &mut self,
        tail: VertexId,
        head: VertexId,
        group: SubgroupRep,
        attach_tail: Word,
        attach_head: Word,
        tree: bool,
    ) -> EdgeId {
        let id = EdgeId(self.next_edge);
        self.next_edge += 1;
        self.edges.insert(
            id,
            EdgeData {
                tail,
                head,
                group,
                attach_tail,
                attach_head,
                tree,
            },
        );
        id
    }

    pub fn add_vertex_with_id(&mut self, id: VertexId, group: SubgroupRep) -> VertexId {
        self.next_vertex = self.next_vertex.max(id.0 + 1);
        self.vertices.insert(id, VertexData { group });
        id
    }

    #[allow(clippy::too_many_arguments)]
    pub fn add_edge_with_id(
        &mut self,
        id: EdgeId,
        tail: VertexId,
        head: VertexId,
        group: SubgroupRep,
        attach_tail: Word,
        attach_head: Word,
        tree: bool,
    ) -> EdgeId {
        self.next_edge = self.next_edge.max(id.0 + 1);
        self.edges.insert(
            id,
            EdgeData {
                tail,
                head,
                group,
                attach_tail,
                attach_head,
                tree,
            },
        );
        id
    }

    /// Drop a vertex without touching incident edges; the caller must have
    /// rewired them already.
    pub fn remove_vertex_raw(&mut self, v: VertexId) {
        self.vertices.remove(&v);
    }

    pub fn remove_edge_raw(&mut self, e: EdgeId) {
        self.edges.remove(&e);
    }

    pub fn vertex(&self, v: VertexId) -> &VertexData {
        &self.vertices[&v]
    }

    pub fn vertex_mut(&mut self, v: VertexId) -> &mut VertexData {
        self.vertices.get_mut(&v).unwrap()
    }

    pub fn edge(&self, e: EdgeId) -> &EdgeData {
        &self.edges[&e]
    }

    pub fn edge_mut(&mut self, e: EdgeId) -> &mut EdgeData {
        self.edges.get_mut(&e).unwrap()
    }

    pub fn has_edge(&self, e: EdgeId) -> bool {
        self.edges.contains_key(&e)
    }

    pub fn vertex_ids(&self) -> Vec<VertexId> {
        self.vertices.keys().copied().collect()
    }

    pub fn edge_ids(&self) -> Vec<EdgeId> {
        self.edges.keys().copied().collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Oriented edge ends incident to a vertex, in deterministic order.
    /// A loop contributes both of its ends.
    pub fn incident_ends(&self, v: VertexId) -> Vec<(EdgeId, End)> {
        let mut out = Vec::new();
        for (&e, data) in &self.edges {
            if data.tail == v {
                out.push((e, End::Tail));
            }
            if data.head == v {
                out.push((e, End::Head));
            }
        }
        out
    }

    pub fn quotient_valence(&self, v: VertexId) -> usize {
        self.incident_ends(v).len()
    }

    /// Stable letter of an edge: `attach_head^-1 * attach_tail`.
    pub fn stable_letter(&self, e: EdgeId) -> Word {
        let d = self.edge(e);
        d.attach_head
            .inverse(&self.pres)
            .mul(&self.pres, &d.attach_tail)
    }

    /// The endpoint cell of a positioned tree edge.
    pub fn endpoint_cell(&self, edge: &EdgeCell, end: End) -> Cell {
        let d = self.edge(edge.orbit);
        let rep = edge
            .rep
            .mul(&self.pres, &d.attach(end).inverse(&self.pres));
        Cell {
            orbit: d.end_vertex(end),
            rep,
        }
    }

    /// Exact equality of tree vertices.
    pub fn same_vertex_cell(&self, a: &Cell, b: &Cell) -> bool {
        if a.orbit != b.orbit {
            return false;
        }
        let diff = a.rep.inverse(&self.pres).mul(&self.pres, &b.rep);
        self.vertex(a.orbit).group.contains(&diff)
    }

    /// Exact equality of tree edges.
    pub fn same_edge_cell(&self, a: &EdgeCell, b: &EdgeCell) -> bool {
        if a.orbit != b.orbit {
            return false;
        }
        let diff = a.rep.inverse(&self.pres).mul(&self.pres, &b.rep);
        self.edge(a.orbit).group.contains(&diff)
    }

    /// Stabilizer membership for a tree vertex without materializing it.
    pub fn cell_stab_contains(&self, cell: &Cell, w: &Word) -> bool {
        self.vertex(cell.orbit).group.conjugate_contains(&cell.rep, w)
    }

    pub fn edge_cell_stab_contains(&self, cell: &EdgeCell, w: &Word) -> bool {
        self.edge(cell.orbit).group.conjugate_contains(&cell.rep, w)
    }

    pub fn cell_stabilizer(&self, cell: &Cell) -> SubgroupRep {
        self.vertex(cell.orbit).group.conjugate(&cell.rep)
    }

    pub fn edge_cell_stabilizer(&self, cell: &EdgeCell) -> SubgroupRep {
        self.edge(cell.orbit).group.conjugate(&cell.rep)
    }

    /// The attachment-conjugate of the edge group at one end, i.e. the
    /// stabilizer of the canonical edge seen from the canonical cell of the
    /// end vertex: `attach * E * attach^-1 <= V`.
    pub fn edge_group_at(&self, e: EdgeId, end: End) -> SubgroupRep {
        let d = self.edge(e);
        d.group.conjugate(d.attach(end))
    }

    pub fn graph_invariants(&self) -> GraphInvariants {
        let vertex_count = self.vertices.len();
        let edge_count = self.edges.len();
        let euler = vertex_count as i64 - edge_count as i64;
        let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
        for &v in self.vertices.keys() {
            *histogram.entry(self.quotient_valence(v)).or_default() += 1;
        }
        GraphInvariants {
            vertex_count,
            edge_count,
            euler_characteristic: euler,
            betti_1: (1 - euler).max(0) as usize,
            valence_histogram: histogram,
        }
    }

    pub fn is_connected(&self) -> bool {
        if self.vertices.is_empty() {
            return true;
        }
        let start = *self.vertices.keys().next().unwrap();
        let mut seen = BTreeSet::new();
        seen.insert(start);
        let mut q = VecDeque::new();
        q.push_back(start);
        while let Some(v) = q.pop_front() {
            for (e, end) in self.incident_ends(v) {
                let w = self.edge(e).end_vertex(end.other());
                if seen.insert(w) {
                    q.push_back(w);
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    /// Every invariant violation, with the offending cell.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.is_connected() {
            out.push(Violation::Disconnected);
        }
        for (&e, data) in &self.edges {
            for end in [End::Tail, End::Head] {
                let conj = self.edge_group_at(e, end);
                if !conj.is_subgroup_of(&self.vertex(data.end_vertex(end)).group) {
                    out.push(Violation::EdgeGroupNotInVertex { edge: e, end });
                }
            }
            if data.tree
                && (!data.attach_tail.is_identity() || !data.attach_head.is_identity())
            {
                out.push(Violation::TreeAttachmentNotIdentity { edge: e });
            }
        }
        // Tree edges must form a spanning tree.
        let tree_edges: Vec<EdgeId> = self
            .edges
            .iter()
            .filter(|(_, d)| d.tree)
            .map(|(&e, _)| e)
            .collect();
        if tree_edges.len() + 1 != self.vertices.len() || !self.tree_spans(&tree_edges) {
            out.push(Violation::TreeNotSpanning);
        }
        // Generation: vertex groups at canonical position plus stable
        // letters must generate the ambient group. Membership is exact.
        let gen_group = self.generated_group();
        for g in 0..self.pres.rank() {
            if !gen_group.contains(&self.pres.generator_word(g)) {
                out.push(Violation::GeneratorNotGenerated {
                    generator: self.pres.symbol(g).to_string(),
                });
            }
        }
        out
    }

    fn tree_spans(&self, tree_edges: &[EdgeId]) -> bool {
        if self.vertices.is_empty() {
            return true;
        }
        let start = *self.vertices.keys().next().unwrap();
        let mut seen = BTreeSet::new();
        seen.insert(start);
        let mut q = VecDeque::new();
        q.push_back(start);
        while let Some(v) = q.pop_front() {
            for &e in tree_edges {
                let d = self.edge(e);
                for (a, b) in [(d.tail, d.head), (d.head, d.tail)] {
                    if a == v && seen.insert(b) {
                        q.push_back(b);
                    }
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    /// Subgroup generated by all vertex groups (tree-positioned) and all
    /// stable letters.
    pub fn generated_group(&self) -> SubgroupRep {
        let mut gens: Vec<Word> = Vec::new();
        for data in self.vertices.values() {
            gens.extend_from_slice(data.group.generators());
        }
        for &e in self.edges.keys() {
            let t = self.stable_letter(e);
            if !t.is_identity() {
                gens.push(t);
            }
        }
        SubgroupRep::from_generators(&gens, &self.pres)
    }

    /// Recompute tree flags: keep a spanning tree of identity-attachment
    /// edges, preferring currently flagged ones. Falls back to a full
    /// renormalization when no such spanning tree exists.
    pub fn fix_tree(&mut self) {
        let ids: Vec<EdgeId> = self.edge_ids();
        for &e in &ids {
            let d = self.edge(e);
            if d.tree && (!d.attach_tail.is_identity() || !d.attach_head.is_identity()) {
                self.edge_mut(e).tree = false;
            }
        }
        if self.try_mark_spanning_tree() {
            return;
        }
        self.renormalize();
    }

    /// Greedy spanning tree over identity-attachment edges (preferring
    /// already flagged ones). Returns false when they do not span.
    fn try_mark_spanning_tree(&mut self) -> bool {
        let mut chosen: BTreeSet<EdgeId> = BTreeSet::new();
        let mut reached: BTreeSet<VertexId> = BTreeSet::new();
        let start = match self.vertices.keys().next() {
            Some(&v) => v,
            None => return true,
        };
        reached.insert(start);
        // Two passes: flagged identity edges first, then any identity edge.
        loop {
            let mut progress = false;
            for pass in 0..2 {
                for (&e, d) in &self.edges {
                    if chosen.contains(&e) {
                        continue;
                    }
                    if !d.attach_tail.is_identity() || !d.attach_head.is_identity() {
                        continue;
                    }
                    if pass == 0 && !d.tree {
                        continue;
                    }
                    let (t, h) = (d.tail, d.head);
                    if reached.contains(&t) != reached.contains(&h) {
                        chosen.insert(e);
                        reached.insert(t);
                        reached.insert(h);
                        progress = true;
                    }
                }
            }
            if !progress {
                break;
            }
        }
        if reached.len() != self.vertices.len() {
            return false;
        }
        for e in self.edge_ids() {
            let flag = chosen.contains(&e);
            self.edge_mut(e).tree = flag;
        }
        true
    }

    /// Rebase vertex orbit `v`: the new canonical cell is `c * V_v`.
    /// Edge attachments at `v` pick up `c` on the left.
    pub fn rebase_vertex(&mut self, v: VertexId, c: &Word) {
        if c.is_identity() {
            return;
        }
        let pres = self.pres.clone();
        let new_group = self.vertex(v).group.conjugate(c);
        self.vertex_mut(v).group = new_group;
        for e in self.edge_ids() {
            let d = self.edge(e).clone();
            if d.tail == v {
                self.edge_mut(e).attach_tail = c.mul(&pres, &d.attach_tail);
            }
            if d.head == v {
                self.edge_mut(e).attach_head = c.mul(&pres, &d.attach_head);
            }
        }
    }

    /// Rebase edge orbit `e`: the new canonical tree edge is `c * E_e`.
    pub fn rebase_edge(&mut self, e: EdgeId, c: &Word) {
        if c.is_identity() {
            return;
        }
        let pres = self.pres.clone();
        let d = self.edge(e).clone();
        let inv = c.inverse(&pres);
        let data = self.edge_mut(e);
        data.group = d.group.conjugate(c);
        data.attach_tail = d.attach_tail.mul(&pres, &inv);
        data.attach_head = d.attach_head.mul(&pres, &inv);
    }

    /// Pick a spanning tree by BFS and rebase orbits so its edges carry
    /// identity attachments on both ends.
    pub fn renormalize(&mut self) {
        let start = match self.vertices.keys().next() {
            Some(&v) => v,
            None => return,
        };
        for e in self.edge_ids() {
            self.edge_mut(e).tree = false;
        }
        let mut visited: BTreeSet<VertexId> = BTreeSet::new();
        visited.insert(start);
        let mut queue = VecDeque::new();
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            let ends = self.incident_ends(v);
            for (e, end) in ends {
                let far = self.edge(e).end_vertex(end.other());
                if visited.contains(&far) {
                    continue;
                }
                // Make this a tree edge: clear the near attachment by
                // rebasing the edge, then clear the far one by rebasing the
                // far vertex.
                let near_attach = self.edge(e).attach(end).clone();
                self.rebase_edge(e, &near_attach);
                let far_attach = self.edge(e).attach(end.other()).clone();
                let clear = far_attach.inverse(&self.pres.clone());
                self.rebase_vertex(far, &clear);
                debug_assert!(self.edge(e).attach(end.other()).is_identity());
                self.edge_mut(e).tree = true;
                visited.insert(far);
                queue.push_back(far);
            }
        }
    }

    /// Replace edge `e` by a path of `n` edges. Interior vertex groups equal
    /// the edge group; the head-side attachment rides on the last sub-edge.
    /// Returns (new vertex ids, new edge ids) in path order.
    pub fn subdivide(&mut self, e: EdgeId, n: u32) -> Result<(Vec<VertexId>, Vec<EdgeId>), SplittingError> {
        if n < 2 {
            return Err(SplittingError::BadSubdivision(n));
        }
        let d = self
            .edges
            .get(&e)
            .cloned()
            .ok_or(SplittingError::UnknownEdge(e))?;
        self.edges.remove(&e);
        let mut new_vertices = Vec::new();
        let mut new_edges = Vec::new();
        let mut prev = d.tail;
        for i in 0..n {
            let last = i == n - 1;
            let next = if last {
                d.head
            } else {
                let v = self.add_vertex(d.group.clone());
                new_vertices.push(v);
                v
            };
            let attach_tail = if i == 0 {
                d.attach_tail.clone()
            } else {
                Word::identity()
            };
            let attach_head = if last {
                d.attach_head.clone()
            } else {
                Word::identity()
            };
            let tree = if last {
                d.tree
            } else {
                // Interior edges always have identity attachments and are
                // safe to put in the tree; spanning is restored below.
                true
            };
            let id = self.add_edge(prev, next, d.group.clone(), attach_tail, attach_head, tree);
            new_edges.push(id);
            prev = next;
        }
        self.fix_tree();
        Ok((new_vertices, new_edges))
    }

    /// Collapse the given edge orbits. In `strict` mode a loop may only be
    /// collapsed when its edge group equals both endpoint-positioned groups;
    /// the general mode absorbs holonomy letters into the merged group
    /// (still a tree collapse for the same ambient group).
    pub fn collapse(
        &mut self,
        orbit_edges: &BTreeSet<EdgeId>,
        strict: bool,
    ) -> Result<CollapseRecord, SplittingError> {
        for &e in orbit_edges {
            if !self.edges.contains_key(&e) {
                return Err(SplittingError::UnknownEdge(e));
            }
        }
        if strict {
            for &e in orbit_edges {
                let d = self.edge(e);
                if d.tail == d.head {
                    let at = self.edge_group_at(e, End::Tail);
                    let ah = self.edge_group_at(e, End::Head);
                    let v = &self.vertex(d.tail).group;
                    if !(v.is_subgroup_of(&at) && v.is_subgroup_of(&ah)) {
                        return Err(SplittingError::LoopCollapse(e));
                    }
                }
            }
        }
        let pres = self.pres.clone();
        // Components of the collapsed subgraph.
        let mut comp: BTreeMap<VertexId, usize> = BTreeMap::new();
        let mut comps: Vec<Vec<VertexId>> = Vec::new();
        for &v in self.vertices.keys() {
            if comp.contains_key(&v) {
                continue;
            }
            let idx = comps.len();
            let mut members = vec![v];
            comp.insert(v, idx);
            let mut q = VecDeque::new();
            q.push_back(v);
            while let Some(x) = q.pop_front() {
                for (e, end) in self.incident_ends(x) {
                    if !orbit_edges.contains(&e) {
                        continue;
                    }
                    let y = self.edge(e).end_vertex(end.other());
                    if !comp.contains_key(&y) {
                        comp.insert(y, idx);
                        members.push(y);
                        q.push_back(y);
                    }
                }
            }
            comps.push(members);
        }

        let mut vertex_map: BTreeMap<VertexId, VertexId> = BTreeMap::new();
        let mut position: BTreeMap<VertexId, Word> = BTreeMap::new();
        for members in &comps {
            let root = *members.iter().min().unwrap();
            // BFS inside the component accumulating tree positions of the
            // canonical lift through collapsed edges.
            position.insert(root, Word::identity());
            let mut q = VecDeque::new();
            q.push_back(root);
            let mut holonomies: Vec<Word> = Vec::new();
            let mut used: BTreeSet<EdgeId> = BTreeSet::new();
            while let Some(x) = q.pop_front() {
                let pos_x = position[&x].clone();
                for (e, end) in self.incident_ends(x) {
                    if !orbit_edges.contains(&e) {
                        continue;
                    }
                    let d = self.edge(e);
                    let y = d.end_vertex(end.other());
                    // Crossing the canonical lift of e from the x side:
                    // position of the far cell is
                    // pos_x * attach_near * attach_far^-1.
                    let pos_y = pos_x
                        .mul(&pres, d.attach(end))
                        .mul(&pres, &d.attach(end.other()).inverse(&pres));
                    if let Some(existing) = position.get(&y) {
                        if used.insert(e) {
                            // Holonomy of a non-tree collapsed edge.
                            let hol = pos_y.mul(&pres, &existing.inverse(&pres));
                            if !hol.is_identity() {
                                holonomies.push(hol);
                            }
                        }
                    } else {
                        used.insert(e);
                        position.insert(y, pos_y);
                        q.push_back(y);
                    }
                }
            }
            if members.len() == 1 && holonomies.is_empty() {
                vertex_map.insert(root, root);
                continue;
            }
            let mut gens: Vec<Word> = Vec::new();
            for &m in members {
                let pos = &position[&m];
                for g in self.vertex(m).group.generators() {
                    gens.push(pos.conj(&pres, g));
                }
            }
            gens.extend(holonomies);
            let merged = SubgroupRep::from_generators(&gens, &pres);
            self.vertex_mut(root).group = merged;
            for &m in members {
                vertex_map.insert(m, root);
            }
        }
        // Rewire surviving edges.
        let removed: Vec<EdgeId> = orbit_edges.iter().copied().collect();
        for e in removed.iter() {
            self.edges.remove(e);
        }
        for e in self.edge_ids() {
            let d = self.edge(e).clone();
            for end in [End::Tail, End::Head] {
                let v = d.end_vertex(end);
                let root = vertex_map[&v];
                if root != v || !position[&v].is_identity() {
                    let new_attach = position[&v].mul(&pres, d.attach(end));
                    let data = self.edge_mut(e);
                    match end {
                        End::Tail => {
                            data.tail = root;
                            data.attach_tail = new_attach;
                        }
                        End::Head => {
                            data.head = root;
                            data.attach_head = new_attach;
                        }
                    }
                }
            }
        }
        // Drop merged vertices.
        let dead: Vec<VertexId> = vertex_map
            .iter()
            .filter(|(v, root)| v != root)
            .map(|(&v, _)| v)
            .collect();
        for v in dead {
            self.vertices.remove(&v);
        }
        self.fix_tree();
        Ok(CollapseRecord {
            removed_edges: removed,
            vertex_map,
        })
    }

    /// Minimality and (partial) reducedness of the action, per quotient data.
    pub fn check_reducedness(&self, pclass: &PClass) -> ReducednessReport {
        // Circle special case: a single vertex with a single loop.
        if self.vertices.len() == 1 && self.edges.len() == 1 {
            let e = *self.edges.keys().next().unwrap();
            let d = self.edge(e);
            if d.tail == d.head {
                return ReducednessReport {
                    minimal: true,
                    reduced: true,
                    partially_reduced: true,
                    offending_vertices: Vec::new(),
                };
            }
        }
        let mut minimal = true;
        let mut reduced = true;
        let mut partially_reduced = true;
        let mut offenders = Vec::new();
        for &v in self.vertices.keys() {
            let ends = self.incident_ends(v);
            let valence = ends.len();
            let vgroup = &self.vertex(v).group;
            let mut equal_edge = None;
            for (e, end) in &ends {
                let conj = self.edge_group_at(*e, *end);
                if conj.is_subgroup_of(vgroup) && vgroup.is_subgroup_of(&conj) {
                    equal_edge = Some(*e);
                    break;
                }
            }
            if let Some(_e) = equal_edge {
                if valence == 1 {
                    minimal = false;
                }
                if valence < 3 {
                    reduced = false;
                    offenders.push(v);
                    // Partial reducedness only constrains vertices whose
                    // stabilizer is contained in a member of the class.
                    if !pclass.larger_than(vgroup) {
                        partially_reduced = false;
                    }
                }
            }
        }
        ReducednessReport {
            minimal,
            reduced,
            partially_reduced,
            offending_vertices: offenders,
        }
    }

    /// Graph isomorphism together with groupwise equality of vertex and edge
    /// groups (attachments are not compared).
    pub fn isomorphic(&self, other: &Splitting) -> bool {
        if self.pres != other.pres
            || self.vertices.len() != other.vertices.len()
            || self.edges.len() != other.edges.len()
        {
            return false;
        }
        let my_vertices: Vec<VertexId> = self.vertex_ids();
        let their_vertices: Vec<VertexId> = other.vertex_ids();
        let mut assignment: BTreeMap<VertexId, VertexId> = BTreeMap::new();
        let mut used: BTreeSet<VertexId> = BTreeSet::new();
        fn edges_match(
            a: &Splitting,
            b: &Splitting,
            assignment: &BTreeMap<VertexId, VertexId>,
        ) -> bool {
            // For every pair of assigned vertices, the multiset of edge
            // groups between them must agree.
            let mut b_used: BTreeSet<EdgeId> = BTreeSet::new();
            for (_, da) in &a.edges {
                let (Some(&t), Some(&h)) = (assignment.get(&da.tail), assignment.get(&da.head))
                else {
                    continue;
                };
                let mut found = false;
                for (&eb, db) in &b.edges {
                    if b_used.contains(&eb) {
                        continue;
                    }
                    let straight = db.tail == t && db.head == h;
                    let flipped = db.tail == h && db.head == t;
                    if (straight || flipped) && db.group == da.group {
                        b_used.insert(eb);
                        found = true;
                        break;
                    }
                }
                if !found {
                    return false;
                }
            }
            true
        }
        fn rec(
            a: &Splitting,
            b: &Splitting,
            order: &[VertexId],
            their: &[VertexId],
            i: usize,
            assignment: &mut BTreeMap<VertexId, VertexId>,
            used: &mut BTreeSet<VertexId>,
        ) -> bool {
            if i == order.len() {
                return edges_match(a, b, assignment);
            }
            let v = order[i];
            for &w in their {
                if used.contains(&w) {
                    continue;
                }
                if a.vertex(v).group != b.vertex(w).group {
                    continue;
                }
                if a.quotient_valence(v) != b.quotient_valence(w) {
                    continue;
                }
                assignment.insert(v, w);
                used.insert(w);
                if edges_match(a, b, assignment)
                    && rec(a, b, order, their, i + 1, assignment, used)
                {
                    return true;
                }
                assignment.remove(&v);
                used.remove(&w);
            }
            false
        }
        rec(
            self,
            other,
            &my_vertices,
            &their_vertices,
            0,
            &mut assignment,
            &mut used,
        )
    }

    /// Structured text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("[presentation]\n");
        out.push_str(&self.pres.to_text());
        out.push('\n');
        for (&v, data) in &self.vertices {
            let gens: Vec<String> = data
                .group
                .generators()
                .iter()
                .map(|w| w.to_text(&self.pres))
                .collect();
            out.push_str(&format!("[vertex {}] gens: {}\n", v.0, gens.join(", ")));
        }
        for (&e, data) in &self.edges {
            let gens: Vec<String> = data
                .group
                .generators()
                .iter()
                .map(|w| w.to_text(&self.pres))
                .collect();
            out.push_str(&format!(
                "[edge {}] {}:{} gens: {} attach_head: {} attach_tail: {} tree: {}\n",
                e.0,
                data.tail.0,
                data.head.0,
                gens.join(", "),
                data.attach_head.to_text(&self.pres),
                data.attach_tail.to_text(&self.pres),
                if data.tree { "yes" } else { "no" }
            ));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Splitting, SplittingError> {
        let mut pres_lines = String::new();
        let mut vertex_lines: Vec<(u32, String)> = Vec::new();
        let mut edge_lines: Vec<(u32, String)> = Vec::new();
        let mut mode = "";
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == "[presentation]" {
                mode = "pres";
                continue;
            }
            if let Some(rest) = line.strip_prefix("[vertex ") {
                let (id, rest) = rest
                    .split_once(']')
                    .ok_or_else(|| SplittingError::Parse(line.to_string()))?;
                let id = id
                    .trim()
                    .parse()
                    .map_err(|_| SplittingError::Parse(line.to_string()))?;
                vertex_lines.push((id, rest.trim().to_string()));
                mode = "";
                continue;
            }
            if let Some(rest) = line.strip_prefix("[edge ") {
                let (id, rest) = rest
                    .split_once(']')
                    .ok_or_else(|| SplittingError::Parse(line.to_string()))?;
                let id = id
                    .trim()
                    .parse()
                    .map_err(|_| SplittingError::Parse(line.to_string()))?;
                edge_lines.push((id, rest.trim().to_string()));
                mode = "";
                continue;
            }
            if mode == "pres" {
                pres_lines.push_str(line);
                pres_lines.push('\n');
            }
        }
        let pres = Presentation::parse(&pres_lines)?;
        let parse_gens = |pres: &Presentation, s: &str| -> Result<SubgroupRep, SplittingError> {
            let mut gens = Vec::new();
            for part in s.split(',') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                gens.push(Word::parse(pres, part)?);
            }
            Ok(SubgroupRep::from_generators(&gens, pres))
        };
        let mut sp = Splitting::new(pres.clone());
        let mut vmap: BTreeMap<u32, VertexId> = BTreeMap::new();
        for (id, rest) in vertex_lines {
            let gens = rest
                .strip_prefix("gens:")
                .ok_or_else(|| SplittingError::Parse(rest.clone()))?;
            let group = parse_gens(&pres, gens)?;
            let v = VertexId(id);
            sp.vertices.insert(v, VertexData { group });
            sp.next_vertex = sp.next_vertex.max(id + 1);
            vmap.insert(id, v);
        }
        for (id, rest) in edge_lines {
            // {tail}:{head} gens: ... attach_head: w attach_tail: w tree: yes|no
            let (ends, rest) = rest
                .split_once(" gens:")
                .ok_or_else(|| SplittingError::Parse(rest.clone()))?;
            let (tail, head) = ends
                .trim()
                .split_once(':')
                .ok_or_else(|| SplittingError::Parse(ends.to_string()))?;
            let tail: u32 = tail
                .trim()
                .parse()
                .map_err(|_| SplittingError::Parse(ends.to_string()))?;
            let head: u32 = head
                .trim()
                .parse()
                .map_err(|_| SplittingError::Parse(ends.to_string()))?;
            let (gens_part, rest) = rest
                .split_once("attach_head:")
                .ok_or_else(|| SplittingError::Parse(rest.to_string()))?;
            let (ah, rest) = rest
                .split_once("attach_tail:")
                .ok_or_else(|| SplittingError::Parse(rest.to_string()))?;
            let (at, tree) = rest
                .split_once("tree:")
                .ok_or_else(|| SplittingError::Parse(rest.to_string()))?;
            let group = parse_gens(&pres, gens_part)?;
            let e = EdgeId(id);
            sp.edges.insert(
                e,
                EdgeData {
                    tail: *vmap
                        .get(&tail)
                        .ok_or(SplittingError::UnknownVertex(VertexId(tail)))?,
                    head: *vmap
                        .get(&head)
                        .ok_or(SplittingError::UnknownVertex(VertexId(head)))?,
                    group,
                    attach_head: Word::parse(&pres, ah.trim())?,
                    attach_tail: Word::parse(&pres, at.trim())?,
                    tree: tree.trim() == "yes",
                },
            );
            sp.next_edge = sp.next_edge.max(id + 1);
        }
        Ok(sp)
    }

    /// Deterministic DOT rendering with group labels as captions.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph splitting {\n");
        for (&v, data) in &self.vertices {
            out.push_str(&format!(
                "  v{} [label=\"v{} {}\"];\n",
                v.0,
                v.0,
                data.group.describe()
            ));
        }
        for (&e, data) in &self.edges {
            let style = if data.tree { "solid" } else { "dashed" };
            out.push_str(&format!(
                "  v{} -- v{} [label=\"e{} {}\", style={}];\n",
                data.tail.0,
                data.head.0,
                e.0,
                data.group.describe(),
                style
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// One-edge splitting of a free product `<A> * <B>` with trivial edge group.
pub fn one_edge_splitting(pres: &Presentation, a_gens: &[Word], b_gens: &[Word]) -> Splitting {
    let mut sp = Splitting::new(pres.clone());
    let a = sp.add_vertex(SubgroupRep::from_generators(a_gens, pres));
    let b = sp.add_vertex(SubgroupRep::from_generators(b_gens, pres));
    sp.add_edge(
        a,
        b,
        SubgroupRep::trivial(pres),
        Word::identity(),
        Word::identity(),
        true,
    );
    sp
}

/// Rose with one vertex and one loop per listed generator word; each loop's
/// stable letter is the generator.
pub fn rose_splitting(pres: &Presentation, vertex_gens: &[Word], petals: &[Word]) -> Splitting {
    let mut sp = Splitting::new(pres.clone());
    let v = sp.add_vertex(SubgroupRep::from_generators(vertex_gens, pres));
    for w in petals {
        sp.add_edge(
            v,
            v,
            SubgroupRep::trivial(pres),
            Word::identity(),
            w.inverse(pres),
            false,
        );
    }
    sp
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> Presentation {
        Presentation::free(2)
    }

    fn word(p: &Presentation, s: &str) -> Word {
        Word::parse(p, s).unwrap()
    }

    #[test]
    fn one_edge_splitting_is_valid() {
        let p = f2();
        let sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        assert!(sp.validate().is_empty(), "{:?}", sp.validate());
        let inv = sp.graph_invariants();
        assert_eq!(inv.euler_characteristic, 1);
        assert_eq!(inv.betti_1, 0);
    }

    #[test]
    fn rose_is_valid_and_has_loops() {
        let p = f2();
        let sp = rose_splitting(&p, &[], &[word(&p, "a"), word(&p, "b")]);
        assert!(sp.validate().is_empty(), "{:?}", sp.validate());
        let inv = sp.graph_invariants();
        assert_eq!(inv.euler_characteristic, -1);
        assert_eq!(inv.betti_1, 2);
        assert_eq!(sp.stable_letter(EdgeId(0)), word(&p, "a"));
        // single vertex, single loop = circle case
        let one = rose_splitting(&p, &[word(&p, "b")], &[word(&p, "a")]);
        let inv = one.graph_invariants();
        assert_eq!(inv.euler_characteristic, 0);
        assert_eq!(inv.betti_1, 1);
    }

    #[test]
    fn invalid_edge_inclusion_is_reported() {
        let p = f2();
        let mut sp = Splitting::new(p.clone());
        let a = sp.add_vertex(SubgroupRep::from_generators(&[word(&p, "a")], &p));
        let b = sp.add_vertex(SubgroupRep::from_generators(&[word(&p, "b")], &p));
        // edge group <b> is not inside <a>
        sp.add_edge(
            a,
            b,
            SubgroupRep::from_generators(&[word(&p, "b")], &p),
            Word::identity(),
            Word::identity(),
            true,
        );
        let report = sp.validate();
        assert!(report
            .iter()
            .any(|v| matches!(v, Violation::EdgeGroupNotInVertex { edge: EdgeId(0), end: End::Tail })));
    }

    #[test]
    fn generation_check_catches_missing_generator() {
        let p = f2();
        // single vertex <a>, no stable letters: b missing
        let mut sp = Splitting::new(p.clone());
        sp.add_vertex(SubgroupRep::from_generators(&[word(&p, "a")], &p));
        let report = sp.validate();
        assert!(report
            .iter()
            .any(|v| matches!(v, Violation::GeneratorNotGenerated { .. })));
    }

    #[test]
    fn subdivide_then_collapse_roundtrip() {
        let p = f2();
        let sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        let mut sub = sp.clone();
        let (_vs, es) = sub.subdivide(EdgeId(0), 4).unwrap();
        assert_eq!(sub.edge_count(), 4);
        assert_eq!(sub.graph_invariants().euler_characteristic, 1);
        assert!(sub.validate().is_empty(), "{:?}", sub.validate());
        // collapse three of the four sub-edges back
        let mut collapse_set: BTreeSet<EdgeId> = es[..3].iter().copied().collect();
        let rec = sub.collapse(&collapse_set, true).unwrap();
        assert_eq!(rec.removed_edges.len(), 3);
        assert_eq!(sub.edge_count(), 1);
        assert!(sub.isomorphic(&sp), "\n{}\nvs\n{}", sub.to_text(), sp.to_text());
        collapse_set.clear();
    }

    #[test]
    fn collapse_loop_strictness() {
        let p = f2();
        let sp = rose_splitting(&p, &[word(&p, "b")], &[word(&p, "a")]);
        let set: BTreeSet<EdgeId> = [EdgeId(0)].into_iter().collect();
        let mut strict_version = sp.clone();
        assert!(matches!(
            strict_version.collapse(&set, true),
            Err(SplittingError::LoopCollapse(_))
        ));
        let mut general = sp.clone();
        general.collapse(&set, false).unwrap();
        assert_eq!(general.edge_count(), 0);
        // absorbed the stable letter
        assert!(general
            .vertex(VertexId(0))
            .group
            .contains(&word(&p, "a")));
        assert!(general
            .vertex(VertexId(0))
            .group
            .contains(&word(&p, "b")));
    }

    #[test]
    fn hanging_edge_is_not_minimal() {
        // G = G *_H H hanging edge: valence-1 vertex labeled H with edge
        // group H.
        let p = f2();
        let mut sp = Splitting::new(p.clone());
        let g = sp.add_vertex(SubgroupRep::from_generators(&[word(&p, "a"), word(&p, "b")], &p));
        let h = sp.add_vertex(SubgroupRep::from_generators(&[word(&p, "a")], &p));
        sp.add_edge(
            g,
            h,
            SubgroupRep::from_generators(&[word(&p, "a")], &p),
            Word::identity(),
            Word::identity(),
            true,
        );
        let report = sp.check_reducedness(&PClass::trivial_only());
        assert!(!report.minimal);
        assert!(!report.reduced);
        // circle is reduced
        let circle = rose_splitting(&p, &[word(&p, "b")], &[word(&p, "a")]);
        let report = circle.check_reducedness(&PClass::trivial_only());
        assert!(report.reduced && report.partially_reduced && report.minimal);
    }

    #[test]
    fn serialization_roundtrip() {
        let p = Presentation::new(&[("a", 8), ("b", 0)]).unwrap();
        let mut sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        sp.subdivide(EdgeId(0), 2).unwrap();
        let text = sp.to_text();
        let back = Splitting::parse(&text).unwrap();
        assert!(back.isomorphic(&sp));
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn renormalize_clears_tree_attachments() {
        let p = f2();
        let mut sp = Splitting::new(p.clone());
        let a = sp.add_vertex(SubgroupRep::from_generators(&[word(&p, "a")], &p));
        let b = sp.add_vertex(SubgroupRep::trivial(&p));
        // tree edge with a stray attachment on the head
        sp.add_edge(
            a,
            b,
            SubgroupRep::trivial(&p),
            Word::identity(),
            word(&p, "b"),
            true,
        );
        sp.add_edge(
            b,
            b,
            SubgroupRep::trivial(&p),
            Word::identity(),
            word(&p, "b"),
            false,
        );
        sp.fix_tree();
        assert!(sp
            .validate()
            .iter()
            .all(|v| !matches!(v, Violation::TreeAttachmentNotIdentity { .. })));
    }

    #[test]
    fn dot_deterministic() {
        let p = f2();
        let sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        assert_eq!(sp.to_dot(), sp.to_dot());
        assert!(sp.to_dot().contains("v0 -- v1"));
    }
}
