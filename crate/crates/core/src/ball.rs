//! Finite balls in the Bass-Serre tree of a splitting.
//!
//! Tree vertices are cosets `g * V_orbit`, edges are cosets `h * E_orbit`;
//! the edge `h * E` runs between `h * attach_tail^-1 * V_tail` and
//! `h * attach_head^-1 * V_head`. Links are expanded from per-orbit coset
//! templates and may be truncated (infinite vertex groups have infinite
//! links); the truncation is recorded so every verdict carries its coverage.

use crate::automaton::SubgroupRep;
use crate::pclass::PClass;
use crate::splitting::{Cell, EdgeCell, EdgeId, End, Splitting, VertexId};
use crate::word::Word;
use std::collections::{BTreeMap, VecDeque};

#[derive(Clone, Debug)]
pub struct BallConfig {
    pub radius: u32,
    /// Generator-product depth for link coset enumeration.
    pub link_depth: u32,
    /// Cap on cosets per (vertex orbit, edge end) template.
    pub max_cosets: usize,
    pub max_cells: usize,
}

impl Default for BallConfig {
    fn default() -> Self {
        BallConfig {
            radius: 4,
            link_depth: crate::limits::max_depth().min(4),
            max_cosets: 8,
            max_cells: 40_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BallVertex {
    pub cell: Cell,
    pub depth: u32,
    /// Every incident edge coset is present in the template.
    pub link_complete: bool,
}

#[derive(Clone, Debug)]
pub struct BallEdge {
    pub cell: EdgeCell,
    pub tail: usize,
    pub head: usize,
}

#[derive(Clone, Debug)]
pub struct Ball {
    pub splitting: Splitting,
    pub base: usize,
    pub radius: u32,
    pub vertices: Vec<BallVertex>,
    pub edges: Vec<BallEdge>,
    pub adjacency: Vec<Vec<(usize, usize)>>, // vertex -> [(edge idx, far vertex idx)]
    pub truncated: bool,
    pub config: BallConfig,
}

struct LinkTemplate {
    /// (edge orbit, incident end, coset representatives)
    entries: Vec<(EdgeId, End, Vec<Word>)>,
    complete: bool,
}

fn link_template(sp: &Splitting, v: VertexId, cfg: &BallConfig) -> LinkTemplate {
    let mut entries = Vec::new();
    let mut complete = true;
    let vgroup = &sp.vertex(v).group;
    for (e, end) in sp.incident_ends(v) {
        let sub = sp.edge_group_at(e, end);
        let (reps, full) = vgroup.coset_reps(&sub, cfg.link_depth, cfg.max_cosets);
        complete &= full;
        entries.push((e, end, reps));
    }
    LinkTemplate { entries, complete }
}

/// Expand the ball of the given radius around the canonical cell of `base`.
pub fn expand_ball(sp: &Splitting, base: VertexId, cfg: &BallConfig) -> Ball {
    let pres = sp.presentation().clone();
    let mut templates: BTreeMap<VertexId, LinkTemplate> = BTreeMap::new();
    for v in sp.vertex_ids() {
        templates.insert(v, link_template(sp, v, cfg));
    }
    let mut vertices = vec![BallVertex {
        cell: Cell {
            orbit: base,
            rep: Word::identity(),
        },
        depth: 0,
        link_complete: templates[&base].complete,
    }];
    let mut edges: Vec<BallEdge> = Vec::new();
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    let mut truncated = !templates[&base].complete;
    let mut queue: VecDeque<(usize, Option<EdgeCell>)> = VecDeque::new();
    queue.push_back((0, None));
    while let Some((vi, incoming)) = queue.pop_front() {
        let depth = vertices[vi].depth;
        if depth >= cfg.radius {
            continue;
        }
        if vertices.len() + edges.len() > cfg.max_cells {
            truncated = true;
            break;
        }
        let cell = vertices[vi].cell.clone();
        let template = &templates[&cell.orbit];
        if !template.complete {
            truncated = true;
        }
        let mut skipped_incoming = false;
        for (e, end, reps) in &template.entries {
            let data = sp.edge(*e);
            for u in reps {
                // Tree edge rep: g * u * attach_end.
                let rep = cell.rep.mul(&pres, u).mul(&pres, data.attach(*end));
                let ecell = EdgeCell {
                    orbit: *e,
                    rep,
                };
                if let Some(inc) = &incoming {
                    if !skipped_incoming && sp.same_edge_cell(inc, &ecell) {
                        skipped_incoming = true;
                        continue;
                    }
                }
                let far = sp.endpoint_cell(&ecell, end.other());
                let far_template_complete = templates[&far.orbit].complete;
                let far_idx = vertices.len();
                vertices.push(BallVertex {
                    cell: far,
                    depth: depth + 1,
                    link_complete: far_template_complete,
                });
                adjacency.push(Vec::new());
                let edge_idx = edges.len();
                let (tail_idx, head_idx) = match end {
                    // The near end is `end`, so the far endpoint sits at the
                    // other end of the oriented edge.
                    End::Tail => (vi, far_idx),
                    End::Head => (far_idx, vi),
                };
                edges.push(BallEdge {
                    cell: ecell,
                    tail: tail_idx,
                    head: head_idx,
                });
                adjacency[vi].push((edge_idx, far_idx));
                adjacency[far_idx].push((edge_idx, vi));
                queue.push_back((far_idx, Some(edges[edge_idx].cell.clone())));
            }
        }
    }
    Ball {
        splitting: sp.clone(),
        base: 0,
        radius: cfg.radius,
        vertices,
        edges,
        adjacency,
        truncated,
        config: cfg.clone(),
    }
}

/// Descriptor for the class `Q` an acylindricity check quantifies over.
#[derive(Clone, Debug)]
pub enum QClass {
    AllNontrivial,
    NonCyclic,
    Infinite,
    LargerThan(PClass),
}

impl std::fmt::Display for QClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QClass::AllNontrivial => write!(f, "all-nontrivial"),
            QClass::NonCyclic => write!(f, "non-cyclic"),
            QClass::Infinite => write!(f, "infinite"),
            QClass::LargerThan(p) => write!(f, "larger-than-{}", p),
        }
    }
}

impl QClass {
    /// Does the subgroup contain a member of `Q`? For these monotone classes
    /// that holds exactly when the subgroup itself is a member.
    pub fn test(&self, h: &SubgroupRep) -> bool {
        let profile = h.kurosh_profile();
        match self {
            QClass::AllNontrivial => !profile.is_trivial(),
            QClass::NonCyclic => !profile.is_cyclic(),
            QClass::Infinite => !profile.is_finite(),
            QClass::LargerThan(p) => p.larger_than(h),
        }
    }

    /// Once an intersection chain leaves the candidate set it never returns;
    /// used for early exit while intersecting along a path.
    pub fn test_still_possible(&self, h: &SubgroupRep) -> bool {
        self.test(h)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VerdictStatus {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct Coverage {
    pub radius: u32,
    pub link_depth: u32,
    pub links_complete: bool,
}

#[derive(Clone, Debug)]
pub struct AcylindricityVerdict {
    pub k: u32,
    pub class: String,
    pub status: VerdictStatus,
    /// Offending path (ball edge indices) and its pointwise stabilizer.
    pub witness: Option<(Vec<usize>, SubgroupRep)>,
    pub coverage: Coverage,
}

impl AcylindricityVerdict {
    pub fn to_text(&self, ball: &Ball) -> String {
        let mut out = format!(
            "acylindricity k={} class={} status={:?}\ncoverage: radius={} link_depth={} links_complete={}\n",
            self.k,
            self.class,
            self.status,
            self.coverage.radius,
            self.coverage.link_depth,
            self.coverage.links_complete
        );
        if let Some((path, stab)) = &self.witness {
            let pres = ball.splitting.presentation();
            let cells: Vec<String> = path
                .iter()
                .map(|&i| {
                    let c = &ball.edges[i].cell;
                    format!("{}@{}", c.orbit, c.rep.to_text(pres))
                })
                .collect();
            out.push_str(&format!(
                "witness path: {}\nwitness stabilizer: {}\n",
                cells.join(" , "),
                stab.describe()
            ));
        }
        out
    }
}

impl Ball {
    pub fn is_tree(&self) -> bool {
        self.vertices.len() == self.edges.len() + 1
    }

    pub fn vertex_stabilizer(&self, vi: usize) -> SubgroupRep {
        self.splitting.cell_stabilizer(&self.vertices[vi].cell)
    }

    pub fn edge_stabilizer(&self, ei: usize) -> SubgroupRep {
        self.splitting.edge_cell_stabilizer(&self.edges[ei].cell)
    }

    pub fn vertex_stab_contains(&self, vi: usize, w: &Word) -> bool {
        self.splitting.cell_stab_contains(&self.vertices[vi].cell, w)
    }

    pub fn edge_stab_contains(&self, ei: usize, w: &Word) -> bool {
        self.splitting
            .edge_cell_stab_contains(&self.edges[ei].cell, w)
    }

    /// Pointwise stabilizer of an edge path: iterated intersection.
    pub fn path_stabilizer(&self, path: &[usize]) -> SubgroupRep {
        assert!(!path.is_empty());
        let mut acc = self.edge_stabilizer(path[0]);
        for &e in &path[1..] {
            acc = acc.intersect(&self.edge_stabilizer(e));
        }
        acc
    }

    /// All cells fixed by `g` plus the components and diameters of the fixed
    /// subforest.
    pub fn fixed_set(&self, g: &Word) -> FixedSet {
        let fixed_vertices: Vec<bool> = (0..self.vertices.len())
            .map(|vi| self.vertex_stab_contains(vi, g))
            .collect();
        let fixed_edges: Vec<bool> = (0..self.edges.len())
            .map(|ei| self.edge_stab_contains(ei, g))
            .collect();
        // Components over fixed vertices joined by fixed edges.
        let mut comp = vec![usize::MAX; self.vertices.len()];
        let mut components = Vec::new();
        for start in 0..self.vertices.len() {
            if !fixed_vertices[start] || comp[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut q = VecDeque::new();
            q.push_back(start);
            while let Some(v) = q.pop_front() {
                for &(e, far) in &self.adjacency[v] {
                    if fixed_edges[e] && fixed_vertices[far] && comp[far] == usize::MAX {
                        comp[far] = id;
                        members.push(far);
                        q.push_back(far);
                    }
                }
            }
            // Diameter by double BFS over fixed edges within the component.
            let bfs = |from: usize| -> (usize, u32) {
                let mut dist: BTreeMap<usize, u32> = BTreeMap::new();
                dist.insert(from, 0);
                let mut q = VecDeque::new();
                q.push_back(from);
                let (mut far_v, mut far_d) = (from, 0);
                while let Some(v) = q.pop_front() {
                    for &(e, far) in &self.adjacency[v] {
                        if fixed_edges[e]
                            && fixed_vertices[far]
                            && !dist.contains_key(&far)
                        {
                            let d = dist[&v] + 1;
                            dist.insert(far, d);
                            if d > far_d {
                                far_d = d;
                                far_v = far;
                            }
                            q.push_back(far);
                        }
                    }
                }
                (far_v, far_d)
            };
            let (far, _) = bfs(start);
            let (_, diameter) = bfs(far);
            components.push(FixedComponent {
                vertices: members,
                diameter,
            });
        }
        let edges = fixed_edges
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| i)
            .collect();
        let vertices = fixed_vertices
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| i)
            .collect();
        FixedSet {
            vertices,
            edges,
            components,
        }
    }

    /// Non-backtracking paths of exactly `len` edges starting from canonical
    /// cells only (every deck orbit of paths has such a representative when
    /// the radius allows).
    fn paths_from_canonical(&self, len: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        fn rec(
            ball: &Ball,
            v: usize,
            last_edge: Option<usize>,
            remaining: usize,
            path: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if remaining == 0 {
                out.push(path.clone());
                return;
            }
            for &(e, far) in &ball.adjacency[v] {
                if Some(e) == last_edge {
                    continue;
                }
                path.push(e);
                rec(ball, far, Some(e), remaining - 1, path, out);
                path.pop();
            }
        }
        for vi in 0..self.vertices.len() {
            if !self.vertices[vi].cell.rep.is_identity() {
                continue;
            }
            rec(self, vi, None, len, &mut path, &mut out);
        }
        out
    }

    /// Certify `k`-acylindricity on `Q` within this ball: no reduced path of
    /// `k+1` edges may have a pointwise stabilizer in `Q`.
    pub fn check_acylindricity(&self, k: u32, class: &QClass) -> AcylindricityVerdict {
        let coverage = Coverage {
            radius: self.radius,
            link_depth: self.config.link_depth,
            links_complete: !self.truncated,
        };
        let len = (k + 1) as usize;
        for path in self.paths_from_canonical(len) {
            let mut acc = self.edge_stabilizer(path[0]);
            let mut alive = class.test_still_possible(&acc);
            for &e in &path[1..] {
                if !alive {
                    break;
                }
                acc = acc.intersect(&self.edge_stabilizer(e));
                alive = class.test_still_possible(&acc);
            }
            if alive && class.test(&acc) {
                return AcylindricityVerdict {
                    k,
                    class: class.to_string(),
                    status: VerdictStatus::Fail,
                    witness: Some((path, acc)),
                    coverage,
                };
            }
        }
        let status = if self.radius >= k + 2 {
            VerdictStatus::Pass
        } else {
            VerdictStatus::Inconclusive
        };
        AcylindricityVerdict {
            k,
            class: class.to_string(),
            status,
            witness: None,
            coverage,
        }
    }

    /// Deterministic DOT rendering with stabilizer captions.
    pub fn to_dot(&self) -> String {
        let pres = self.splitting.presentation();
        let mut out = String::from("graph ball {\n");
        for (i, v) in self.vertices.iter().enumerate() {
            out.push_str(&format!(
                "  n{} [label=\"{}@{} : {}\"];\n",
                i,
                v.cell.orbit,
                v.cell.rep.to_text(pres),
                self.vertex_stabilizer(i).describe()
            ));
        }
        for (i, e) in self.edges.iter().enumerate() {
            out.push_str(&format!(
                "  n{} -- n{} [label=\"{}@{} : {}\"];\n",
                e.tail,
                e.head,
                e.cell.orbit,
                e.cell.rep.to_text(pres),
                self.edge_stabilizer(i).describe()
            ));
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Clone, Debug)]
pub struct FixedComponent {
    pub vertices: Vec<usize>,
    pub diameter: u32,
}

#[derive(Clone, Debug)]
pub struct FixedSet {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    pub components: Vec<FixedComponent>,
}

impl FixedSet {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn diameter(&self) -> u32 {
        self.components.iter().map(|c| c.diameter).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitting::one_edge_splitting;
    use crate::word::Presentation;

    fn word(p: &Presentation, s: &str) -> Word {
        Word::parse(p, s).unwrap()
    }

    #[test]
    fn star_of_amalgam() {
        // one-edge A*B splitting, radius 1 from the A-vertex: a star whose
        // edges are the B-coset steps of the trivial edge group in <a>.
        let p = Presentation::free(2);
        let sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        let cfg = BallConfig {
            radius: 1,
            link_depth: 3,
            max_cosets: 8,
            max_cells: 1000,
        };
        let ball = expand_ball(&sp, VertexId(0), &cfg);
        assert!(ball.is_tree());
        // every edge is incident to the base
        assert!(ball.edges.iter().all(|e| e.tail == 0 || e.head == 0));
        assert!(ball.edges.len() >= 5); // 1, a, a^-1, a^2, ... cosets
        assert!(ball.truncated); // <a> has infinitely many cosets of 1
        // base stabilizer is A
        let stab = ball.vertex_stabilizer(0);
        assert!(stab.contains(&word(&p, "a")));
        assert!(!stab.contains(&word(&p, "b")));
    }

    #[test]
    fn radius_zero_is_single_vertex() {
        let p = Presentation::free(2);
        let sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        let cfg = BallConfig {
            radius: 0,
            ..BallConfig::default()
        };
        let ball = expand_ball(&sp, VertexId(1), &cfg);
        assert_eq!(ball.vertices.len(), 1);
        assert!(ball.edges.is_empty());
    }

    #[test]
    fn finite_group_links_are_complete() {
        // Z/4 * Z/2 one-edge splitting: all links finite, the whole ball of
        // any radius is exact.
        let p = Presentation::new(&[("a", 4), ("b", 2)]).unwrap();
        let sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        let cfg = BallConfig {
            radius: 3,
            link_depth: 6,
            max_cosets: 16,
            max_cells: 10_000,
        };
        let ball = expand_ball(&sp, VertexId(0), &cfg);
        assert!(!ball.truncated);
        assert!(ball.is_tree());
        // A-vertex has 4 incident edges (cosets of 1 in Z/4), each far
        // vertex is a B-vertex with 1 more edge visible within radius 2.
        assert_eq!(ball.adjacency[0].len(), 4);
        // Equivariance of stabilizers: stab(g.cell) = g stab(cell) g^-1.
        for e in &ball.edges {
            let tail = &ball.vertices[e.tail];
            let stab = sp.cell_stabilizer(&tail.cell);
            let direct = sp.vertex(tail.cell.orbit).group.conjugate(&tail.cell.rep);
            assert_eq!(stab, direct);
        }
    }

    #[test]
    fn free_action_passes_everywhere() {
        // rose of F2 acts freely: pass for every k under all-nontrivial.
        let p = Presentation::free(2);
        let sp = crate::splitting::rose_splitting(&p, &[], &[word(&p, "a"), word(&p, "b")]);
        let cfg = BallConfig {
            radius: 4,
            link_depth: 3,
            max_cosets: 8,
            max_cells: 4000,
        };
        let ball = expand_ball(&sp, VertexId(0), &cfg);
        assert!(ball.is_tree());
        for k in 0..3 {
            let verdict = ball.check_acylindricity(k, &QClass::AllNontrivial);
            assert_ne!(verdict.status, VerdictStatus::Fail, "k={}", k);
        }
        // identity fixes the whole ball
        let fix = ball.fixed_set(&Word::identity());
        assert_eq!(fix.vertices.len(), ball.vertices.len());
        assert_eq!(fix.components.len(), 1);
    }

    #[test]
    fn amalgam_fixed_sets_and_failure_witness() {
        // A*B with A = <a>: a fixes exactly the A-vertex; <a> stabilizes no
        // edge, so the action is 0-acylindrical on all-nontrivial... but a
        // subdivided edge with group <a> pulled along gives a fixed path.
        let p = Presentation::free(2);
        let mut sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        // make both subdivided halves carry <a>
        sp.subdivide(crate::splitting::EdgeId(0), 2).unwrap();
        for e in sp.edge_ids() {
            sp.edge_mut(e).group = SubgroupRep::from_generators(&[word(&p, "a")], &p);
        }
        // fix interior vertex group to contain <a> as well
        let interior = sp
            .vertex_ids()
            .into_iter()
            .find(|&v| sp.vertex(v).group.is_trivial())
            .unwrap();
        sp.vertex_mut(interior).group = SubgroupRep::from_generators(&[word(&p, "a")], &p);
        // V_b must contain the edge group now
        let b = VertexId(1);
        sp.vertex_mut(b).group =
            SubgroupRep::from_generators(&[word(&p, "a"), word(&p, "b")], &p);
        let cfg = BallConfig {
            radius: 4,
            link_depth: 3,
            max_cosets: 6,
            max_cells: 8000,
        };
        let ball = expand_ball(&sp, VertexId(0), &cfg);
        let fix = ball.fixed_set(&word(&p, "a"));
        assert!(fix.diameter() >= 2);
        let verdict = ball.check_acylindricity(1, &QClass::AllNontrivial);
        assert_eq!(verdict.status, VerdictStatus::Fail);
        let (path, stab) = verdict.witness.unwrap();
        assert_eq!(path.len(), 2);
        assert!(stab.contains(&word(&p, "a")));
        // but 1-acylindrical on non-cyclic subgroups: <a> is cyclic
        let verdict = ball.check_acylindricity(1, &QClass::NonCyclic);
        assert_ne!(verdict.status, VerdictStatus::Fail);
    }

    #[test]
    fn path_stabilizer_is_edgewise_intersection() {
        let p = Presentation::new(&[("a", 4), ("b", 2)]).unwrap();
        let sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        let cfg = BallConfig {
            radius: 2,
            link_depth: 6,
            max_cosets: 8,
            max_cells: 4000,
        };
        let ball = expand_ball(&sp, VertexId(0), &cfg);
        // single edge: its own stabilizer
        let s = ball.path_stabilizer(&[0]);
        assert_eq!(s, ball.edge_stabilizer(0));
        // path across two trivial-group edges: trivial
        let two: Vec<usize> = vec![ball.adjacency[0][0].0, ball.adjacency[0][1].0];
        assert!(ball.path_stabilizer(&two).is_trivial());
    }
}
