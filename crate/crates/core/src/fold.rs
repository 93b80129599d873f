//! Fold moves on splittings.
//!
//! A fold identifies two distinct tree edges sharing an endpoint, together
//! with every translate of the pair. Folds are classified I/II/III by the
//! orbit relations of the far endpoints and edges, and A/B by whether the
//! pivot shares an orbit with a far endpoint. The quotient rewrites follow
//! the standard graph-of-groups pictures: type I merges a vertex orbit and
//! an edge orbit, type II leaves the graph alone and pulls the witness along
//! the edge, type III merges the two edge orbits and makes the witness
//! elliptic at the far vertex.

use crate::automaton::SubgroupRep;
use crate::splitting::{Cell, EdgeCell, EdgeId, End, Splitting, SplittingError, VertexId};
use crate::word::{Presentation, Word, WordError};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Clone, Copy, PartialEq, Eq, Debug, PartialOrd, Ord)]
pub enum FoldType {
    IA,
    IB,
    IIA,
    IIB,
    IIIA,
    IIIB,
}

impl FoldType {
    pub fn roman(self) -> u8 {
        match self {
            FoldType::IA | FoldType::IB => 1,
            FoldType::IIA | FoldType::IIB => 2,
            FoldType::IIIA | FoldType::IIIB => 3,
        }
    }

    /// Euler characteristic change of the quotient graph.
    pub fn chi_delta(self) -> i64 {
        match self.roman() {
            1 | 2 => 0,
            _ => 1,
        }
    }

    pub fn parse(s: &str) -> Option<FoldType> {
        match s {
            "IA" => Some(FoldType::IA),
            "IB" => Some(FoldType::IB),
            "IIA" => Some(FoldType::IIA),
            "IIB" => Some(FoldType::IIB),
            "IIIA" => Some(FoldType::IIIA),
            "IIIB" => Some(FoldType::IIIB),
            _ => None,
        }
    }
}

impl std::fmt::Display for FoldType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FoldType::IA => "IA",
            FoldType::IB => "IB",
            FoldType::IIA => "IIA",
            FoldType::IIB => "IIB",
            FoldType::IIIA => "IIIA",
            FoldType::IIIB => "IIIB",
        };
        write!(f, "{}", s)
    }
}

/// A positioned half-edge: the tree edge `rep * E_orbit` seen from the end
/// where the pivot sits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeHalf {
    pub orbit: EdgeId,
    pub rep: Word,
    pub pivot_end: End,
}

impl EdgeHalf {
    pub fn cell(&self) -> EdgeCell {
        EdgeCell {
            orbit: self.orbit,
            rep: self.rep.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FoldMove {
    pub pivot: Cell,
    pub e1: EdgeHalf,
    pub e2: EdgeHalf,
    /// Type II: elliptic `h` with `h * e1 = e2`.
    /// Type III: `h` with `h * y1 = y2`.
    /// Type B additionally records `g` with `g * pivot = y1` implicitly via
    /// the classification; only `h` is stored.
    pub witness: Option<Word>,
}

#[derive(Debug, Error)]
pub enum FoldError {
    #[error("edge {0:?} is not incident to the pivot at the stated end")]
    NotIncident(EdgeId),
    #[error("the two half-edges are the same tree edge")]
    SameEdge,
    #[error("type II fold requires a witness in the pivot stabilizer; a hyperbolic witness would make the action non orientation preserving")]
    HyperbolicTypeII,
    #[error("witness does not realize the stated orbit relation")]
    BadWitness,
    #[error("missing witness for {0}")]
    MissingWitness(String),
    #[error("splitting error: {0}")]
    Splitting(#[from] SplittingError),
    #[error("word error: {0}")]
    Word(#[from] WordError),
}

#[derive(Clone, Debug)]
pub struct FoldOutcome {
    pub splitting: Splitting,
    pub fold_type: FoldType,
    /// Orbit forwarding for vertices (identity except merged orbits).
    pub vertex_map: BTreeMap<VertexId, VertexId>,
    /// Orbit forwarding for edges.
    pub edge_map: BTreeMap<EdgeId, EdgeId>,
    pub chi_before: i64,
    pub chi_after: i64,
    /// Far endpoint data used by seed bookkeeping.
    pub far1: Cell,
    pub far2: Cell,
    pub merged_vertex_position: Option<Word>,
}

fn incidence_ok(sp: &Splitting, pivot: &Cell, half: &EdgeHalf) -> bool {
    let cell = sp.endpoint_cell(&half.cell(), half.pivot_end);
    sp.same_vertex_cell(&cell, pivot)
}

/// Derive the fold type of a proposed move, verifying its witness.
pub fn classify_fold(sp: &Splitting, m: &FoldMove) -> Result<FoldType, FoldError> {
    let pres = sp.presentation();
    if !incidence_ok(sp, &m.pivot, &m.e1) {
        return Err(FoldError::NotIncident(m.e1.orbit));
    }
    if !incidence_ok(sp, &m.pivot, &m.e2) {
        return Err(FoldError::NotIncident(m.e2.orbit));
    }
    if m.e1.orbit == m.e2.orbit && sp.same_edge_cell(&m.e1.cell(), &m.e2.cell()) {
        return Err(FoldError::SameEdge);
    }
    let far1 = sp.endpoint_cell(&m.e1.cell(), m.e1.pivot_end.other());
    let far2 = sp.endpoint_cell(&m.e2.cell(), m.e2.pivot_end.other());
    // A/B: is the pivot in the orbit of a far endpoint?
    let b_type = m.pivot.orbit == far1.orbit || m.pivot.orbit == far2.orbit;
    let roman = if m.e1.orbit == m.e2.orbit {
        // Type II needs an elliptic witness h with h * e1 = e2.
        let h = m
            .witness
            .as_ref()
            .ok_or_else(|| FoldError::MissingWitness("type II".into()))?;
        let moved = EdgeCell {
            orbit: m.e1.orbit,
            rep: h.mul(pres, &m.e1.rep),
        };
        if !sp.same_edge_cell(&moved, &m.e2.cell()) {
            return Err(FoldError::BadWitness);
        }
        if !sp.cell_stab_contains(&m.pivot, h) {
            return Err(FoldError::HyperbolicTypeII);
        }
        2
    } else if far1.orbit == far2.orbit {
        // Type III: h with h * y1 = y2, acting hyperbolically with
        // translation length 2 (it cannot fix the pivot).
        let h = m
            .witness
            .as_ref()
            .ok_or_else(|| FoldError::MissingWitness("type III".into()))?;
        let moved = Cell {
            orbit: far1.orbit,
            rep: h.mul(pres, &far1.rep),
        };
        if !sp.same_vertex_cell(&moved, &far2) {
            return Err(FoldError::BadWitness);
        }
        3
    } else {
        1
    };
    Ok(match (roman, b_type) {
        (1, false) => FoldType::IA,
        (1, true) => FoldType::IB,
        (2, false) => FoldType::IIA,
        (2, true) => FoldType::IIB,
        (3, false) => FoldType::IIIA,
        _ => FoldType::IIIB,
    })
}

/// Apply a fold to the quotient splitting.
pub fn apply_fold(sp: &Splitting, m: &FoldMove) -> Result<FoldOutcome, FoldError> {
    let fold_type = classify_fold(sp, m)?;
    let pres = sp.presentation().clone();
    let chi_before = sp.graph_invariants().euler_characteristic;
    let far1 = sp.endpoint_cell(&m.e1.cell(), m.e1.pivot_end.other());
    let far2 = sp.endpoint_cell(&m.e2.cell(), m.e2.pivot_end.other());
    let mut out = sp.clone();
    let mut vertex_map: BTreeMap<VertexId, VertexId> =
        sp.vertex_ids().into_iter().map(|v| (v, v)).collect();
    let mut edge_map: BTreeMap<EdgeId, EdgeId> =
        sp.edge_ids().into_iter().map(|e| (e, e)).collect();
    let mut merged_position = None;

    match fold_type.roman() {
        2 => {
            // Pull h along the edge: edge group and far vertex group grow.
            let h = m.witness.clone().unwrap();
            let c1inv = m.e1.rep.inverse(&pres);
            let h_edge = c1inv.mul(&pres, &h).mul(&pres, &m.e1.rep);
            let new_edge_group = out.edge(m.e1.orbit).group.join_words(&[h_edge]);
            out.edge_mut(m.e1.orbit).group = new_edge_group;
            let p1inv = far1.rep.inverse(&pres);
            let h_far = p1inv.mul(&pres, &h).mul(&pres, &far1.rep);
            let new_far_group = out.vertex(far1.orbit).group.join_words(&[h_far]);
            out.vertex_mut(far1.orbit).group = new_far_group;
        }
        1 => {
            // Merge the far vertex orbits and the edge orbits.
            let (keep_v, gone_v, keep_pos, gone_pos) = (
                far1.orbit,
                far2.orbit,
                far1.rep.clone(),
                far2.rep.clone(),
            );
            // Tree vertices keep_pos*V1 and gone_pos*V2 become one; a generic
            // cell q*V2 maps to q*gone_pos^-1*keep_pos*V_new.
            let delta = gone_pos
                .inverse(&pres)
                .mul(&pres, &keep_pos);
            // surviving group: V1 plus (keep_pos^-1 gone_pos) V2 (..)^-1
            let conj = keep_pos.inverse(&pres).mul(&pres, &gone_pos);
            let extra: Vec<Word> = out
                .vertex(gone_v)
                .group
                .generators()
                .iter()
                .map(|g| conj.conj(&pres, g))
                .collect();
            let merged = out.vertex(keep_v).group.join_words(&extra);
            out.vertex_mut(keep_v).group = merged;
            merged_position = Some(keep_pos.clone());
            // rewire edge ends at gone_v: attachment w -> delta^-1 * w? The
            // end cell w^-1 * V2 = w^-1 * q with q*V2 ~ q*delta*V_new, so the
            // new attachment w' satisfies w'^-1 = w^-1 * delta.
            for e in out.edge_ids() {
                let d = out.edge(e).clone();
                for end in [End::Tail, End::Head] {
                    if d.end_vertex(end) == gone_v {
                        let new_attach = delta
                            .inverse(&pres)
                            .mul(&pres, d.attach(end));
                        let data = out.edge_mut(e);
                        match end {
                            End::Tail => {
                                data.tail = keep_v;
                                data.attach_tail = new_attach;
                            }
                            End::Head => {
                                data.head = keep_v;
                                data.attach_head = new_attach;
                            }
                        }
                    }
                }
            }
            out.remove_vertex_raw(gone_v);
            for entry in vertex_map.values_mut() {
                if *entry == gone_v {
                    *entry = keep_v;
                }
            }
            merge_edge_orbits(&mut out, &pres, m, &mut edge_map)?;
        }
        _ => {
            // Type III: far orbits already agree; h becomes elliptic there.
            let h = m.witness.clone().unwrap();
            let p1inv = far1.rep.inverse(&pres);
            let h_far = p1inv.mul(&pres, &h).mul(&pres, &far1.rep);
            let new_far_group = out.vertex(far1.orbit).group.join_words(&[h_far]);
            out.vertex_mut(far1.orbit).group = new_far_group;
            merged_position = Some(far1.rep.clone());
            merge_edge_orbits(&mut out, &pres, m, &mut edge_map)?;
        }
    }
    out.fix_tree();
    let chi_after = out.graph_invariants().euler_characteristic;
    debug_assert_eq!(chi_after - chi_before, fold_type.chi_delta());
    Ok(FoldOutcome {
        splitting: out,
        fold_type,
        vertex_map,
        edge_map,
        chi_before,
        chi_after,
        far1,
        far2,
        merged_vertex_position: merged_position,
    })
}

/// Merge the orbit of e2 into the orbit of e1 (types I and III): the tree
/// edges c1*E1 and c2*E2 are identified, so a generic cell q*E2 maps to
/// q*c2^-1*c1*E_new, and E_new = <E1, (c1^-1 c2) E2 (c1^-1 c2)^-1>.
fn merge_edge_orbits(
    out: &mut Splitting,
    pres: &Presentation,
    m: &FoldMove,
    edge_map: &mut BTreeMap<EdgeId, EdgeId>,
) -> Result<(), FoldError> {
    let keep = m.e1.orbit;
    let gone = m.e2.orbit;
    debug_assert_ne!(keep, gone);
    let conj = m.e1.rep.inverse(pres).mul(pres, &m.e2.rep);
    let extra: Vec<Word> = out
        .edge(gone)
        .group
        .generators()
        .iter()
        .map(|g| conj.conj(pres, g))
        .collect();
    let merged = out.edge(keep).group.join_words(&extra);
    out.edge_mut(keep).group = merged;
    // The surviving canonical edge may need an enlarged attachment reach;
    // its endpoints already carry both old endpoint cells after the vertex
    // merge, so only the group changes and the gone orbit is dropped.
    out.remove_edge_raw(gone);
    for entry in edge_map.values_mut() {
        if *entry == gone {
            *entry = keep;
        }
    }
    Ok(())
}

/// One step of a replayable construction schedule.
#[derive(Clone, Debug)]
pub enum ScheduleStep {
    Subdivide {
        edge: EdgeId,
        parts: u32,
    },
    Fold(FoldMove),
    Collapse {
        edges: Vec<EdgeId>,
    },
    /// Re-normalize every label under the ambient presentation (the image of
    /// the natural surjection from the free group on the generators).
    Relabel,
}

#[derive(Clone, Debug, Default)]
pub struct ChiLedger {
    pub fold_deltas: Vec<(FoldType, i64)>,
}

impl ChiLedger {
    pub fn consistent(&self) -> bool {
        self.fold_deltas
            .iter()
            .all(|(t, d)| *d == t.chi_delta())
    }
}

/// Replay a schedule. Returns the final splitting, forwarding maps for
/// vertices and edges, and the chi ledger of the fold steps.
pub fn replay_schedule(
    start: &Splitting,
    steps: &[ScheduleStep],
) -> Result<(Splitting, ChiLedger), FoldError> {
    let mut sp = start.clone();
    let mut ledger = ChiLedger::default();
    for step in steps {
        match step {
            ScheduleStep::Subdivide { edge, parts } => {
                let before = sp.graph_invariants().euler_characteristic;
                sp.subdivide(*edge, *parts)?;
                let after = sp.graph_invariants().euler_characteristic;
                debug_assert_eq!(before, after);
            }
            ScheduleStep::Fold(m) => {
                let outcome = apply_fold(&sp, m)?;
                ledger
                    .fold_deltas
                    .push((outcome.fold_type, outcome.chi_after - outcome.chi_before));
                sp = outcome.splitting;
            }
            ScheduleStep::Collapse { edges } => {
                let set = edges.iter().copied().collect();
                sp.collapse(&set, false)?;
            }
            ScheduleStep::Relabel => {
                sp = relabel(&sp, sp.presentation());
            }
        }
    }
    Ok((sp, ledger))
}

/// Replace every label by its image under the surjection onto the target
/// presentation (same symbols, possibly different orders).
pub fn relabel(sp: &Splitting, target: &Presentation) -> Splitting {
    let translate = |w: &Word, from: &Presentation| -> Word {
        let mut raw = Vec::new();
        for &(g, e) in w.syllables() {
            let symbol = from.symbol(g);
            let tg = target
                .gen_index(symbol)
                .expect("target presentation must share symbols");
            raw.push((tg, e));
        }
        Word::from_syllables(target, raw)
    };
    let from = sp.presentation().clone();
    let mut out = Splitting::new(target.clone());
    let mut vmap = BTreeMap::new();
    for v in sp.vertex_ids() {
        let gens: Vec<Word> = sp
            .vertex(v)
            .group
            .generators()
            .iter()
            .map(|w| translate(w, &from))
            .collect();
        let nv = out.add_vertex_with_id(v, SubgroupRep::from_generators(&gens, target));
        vmap.insert(v, nv);
    }
    for e in sp.edge_ids() {
        let d = sp.edge(e);
        let gens: Vec<Word> = d
            .group
            .generators()
            .iter()
            .map(|w| translate(w, &from))
            .collect();
        out.add_edge_with_id(
            e,
            vmap[&d.tail],
            vmap[&d.head],
            SubgroupRep::from_generators(&gens, target),
            translate(&d.attach_tail, &from),
            translate(&d.attach_head, &from),
            d.tree,
        );
    }
    out
}

/// Serialize a schedule into the replayable fold-log format.
pub fn schedule_to_text(pres: &Presentation, steps: &[ScheduleStep]) -> String {
    let mut out = String::new();
    for step in steps {
        match step {
            ScheduleStep::Subdivide { edge, parts } => {
                out.push_str(&format!("subdivide {} {}\n", edge, parts));
            }
            ScheduleStep::Collapse { edges } => {
                let parts: Vec<String> = edges.iter().map(|e| e.to_string()).collect();
                out.push_str(&format!("collapse {}\n", parts.join(" ")));
            }
            ScheduleStep::Relabel => out.push_str("relabel\n"),
            ScheduleStep::Fold(m) => {
                let fmt_half = |h: &EdgeHalf| {
                    format!(
                        "{}@{}:{}",
                        h.orbit,
                        h.rep.to_text(pres).replace(' ', "_"),
                        match h.pivot_end {
                            End::Tail => "t",
                            End::Head => "h",
                        }
                    )
                };
                out.push_str(&format!(
                    "fold {}@{} {} {} {}\n",
                    m.pivot.orbit,
                    m.pivot.rep.to_text(pres).replace(' ', "_"),
                    fmt_half(&m.e1),
                    fmt_half(&m.e2),
                    m.witness
                        .as_ref()
                        .map(|w| w.to_text(pres).replace(' ', "_"))
                        .unwrap_or_else(|| "-".into())
                ));
            }
        }
    }
    out
}

pub fn schedule_parse(pres: &Presentation, text: &str) -> Result<Vec<ScheduleStep>, FoldError> {
    let parse_word = |tok: &str| -> Result<Word, FoldError> {
        Ok(Word::parse(pres, &tok.replace('_', " "))?)
    };
    let parse_half = |tok: &str| -> Result<EdgeHalf, FoldError> {
        let err = || FoldError::Splitting(SplittingError::Parse(tok.to_string()));
        let (id_part, rest) = tok.split_once('@').ok_or_else(err)?;
        let (rep_part, end_part) = rest.rsplit_once(':').ok_or_else(err)?;
        let id: u32 = id_part.trim_start_matches('e').parse().map_err(|_| err())?;
        Ok(EdgeHalf {
            orbit: EdgeId(id),
            rep: parse_word(rep_part)?,
            pivot_end: if end_part == "t" { End::Tail } else { End::Head },
        })
    };
    let mut steps = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let kind = toks.next().unwrap();
        let err = || FoldError::Splitting(SplittingError::Parse(line.to_string()));
        match kind {
            "subdivide" => {
                let e: u32 = toks
                    .next()
                    .ok_or_else(err)?
                    .trim_start_matches('e')
                    .parse()
                    .map_err(|_| err())?;
                let n: u32 = toks.next().ok_or_else(err)?.parse().map_err(|_| err())?;
                steps.push(ScheduleStep::Subdivide {
                    edge: EdgeId(e),
                    parts: n,
                });
            }
            "collapse" => {
                let mut edges = Vec::new();
                for t in toks {
                    let e: u32 = t.trim_start_matches('e').parse().map_err(|_| err())?;
                    edges.push(EdgeId(e));
                }
                steps.push(ScheduleStep::Collapse { edges });
            }
            "relabel" => steps.push(ScheduleStep::Relabel),
            "fold" => {
                let pivot_tok = toks.next().ok_or_else(err)?;
                let (vid, rep) = pivot_tok.split_once('@').ok_or_else(err)?;
                let vid: u32 = vid.trim_start_matches('v').parse().map_err(|_| err())?;
                let pivot = Cell {
                    orbit: VertexId(vid),
                    rep: parse_word(rep)?,
                };
                let e1 = parse_half(toks.next().ok_or_else(err)?)?;
                let e2 = parse_half(toks.next().ok_or_else(err)?)?;
                let witness_tok = toks.next().ok_or_else(err)?;
                let witness = if witness_tok == "-" {
                    None
                } else {
                    Some(parse_word(witness_tok)?)
                };
                steps.push(ScheduleStep::Fold(FoldMove {
                    pivot,
                    e1,
                    e2,
                    witness,
                }));
            }
            _ => return Err(err()),
        }
    }
    Ok(steps)
}

/// Convenience: the type II pull of `h` across the canonical edge `e`, with
/// the pivot at the given end of the canonical tree edge.
pub fn pull_move(sp: &Splitting, e: EdgeId, pivot_end: End, h: &Word) -> FoldMove {
    let pivot = sp.endpoint_cell(
        &EdgeCell {
            orbit: e,
            rep: Word::identity(),
        },
        pivot_end,
    );
    FoldMove {
        pivot: pivot.clone(),
        e1: EdgeHalf {
            orbit: e,
            rep: Word::identity(),
            pivot_end,
        },
        e2: EdgeHalf {
            orbit: e,
            rep: h.clone(),
            pivot_end,
        },
        witness: Some(h.clone()),
    }
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
    fn type_ii_pull_enlarges_edge_and_far_vertex() {
        // Pull a^2 across the A-B edge with pivot A.
        let p = Presentation::free(2);
        let sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        let m = pull_move(&sp, EdgeId(0), End::Tail, &word(&p, "a^2"));
        assert_eq!(classify_fold(&sp, &m).unwrap(), FoldType::IIA);
        let outcome = apply_fold(&sp, &m).unwrap();
        let out = outcome.splitting;
        assert_eq!(out.edge_count(), 1);
        assert!(out.edge(EdgeId(0)).group.contains(&word(&p, "a^2")));
        assert!(out
            .vertex(VertexId(1))
            .group
            .contains(&word(&p, "a^2")));
        assert!(out.vertex(VertexId(1)).group.contains(&word(&p, "b")));
        assert!(out.validate().is_empty(), "{:?}", out.validate());
        assert_eq!(outcome.chi_after, outcome.chi_before);
    }

    #[test]
    fn type_ii_rejects_hyperbolic_witness() {
        // In the rose tree the petal edge e = [v, b*v] shares its head with
        // the tail of b*e; folding them would need the hyperbolic witness b.
        let p = Presentation::free(2);
        let sp = rose_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        let pivot = Cell {
            orbit: VertexId(0),
            rep: word(&p, "b"),
        };
        let m = FoldMove {
            pivot,
            e1: EdgeHalf {
                orbit: EdgeId(0),
                rep: Word::identity(),
                pivot_end: End::Head,
            },
            e2: EdgeHalf {
                orbit: EdgeId(0),
                rep: word(&p, "b"),
                pivot_end: End::Tail,
            },
            witness: Some(word(&p, "b")),
        };
        assert!(matches!(
            classify_fold(&sp, &m),
            Err(FoldError::HyperbolicTypeII)
        ));
    }

    #[test]
    fn type_iii_on_subdivided_petal() {
        // Subdivide the b-petal of the rose <a>-vertex into 2; fold the two
        // edges at the midpoint: far endpoints v and b*v share the orbit.
        let p = Presentation::free(2);
        let mut sp = rose_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        let (vs, es) = sp.subdivide(EdgeId(0), 2).unwrap();
        let mid = vs[0];
        let pivot = Cell {
            orbit: mid,
            rep: Word::identity(),
        };
        // e1: first sub-edge [v, mid] seen from its head (mid);
        // e2: second sub-edge [mid, v] seen from its tail (mid).
        let m = FoldMove {
            pivot,
            e1: EdgeHalf {
                orbit: es[0],
                rep: Word::identity(),
                pivot_end: End::Head,
            },
            e2: EdgeHalf {
                orbit: es[1],
                rep: Word::identity(),
                pivot_end: End::Tail,
            },
            witness: Some(word(&p, "b")),
        };
        let ft = classify_fold(&sp, &m).unwrap();
        assert_eq!(ft, FoldType::IIIA);
        let outcome = apply_fold(&sp, &m).unwrap();
        assert_eq!(outcome.chi_after - outcome.chi_before, 1);
        let out = outcome.splitting;
        assert_eq!(out.edge_count(), 1);
        assert_eq!(out.vertex_count(), 2);
        // b became elliptic at the far vertex
        assert!(out.vertex(VertexId(0)).group.contains(&word(&p, "b")));
        assert!(out.validate().is_empty(), "{:?}", out.validate());
    }

    #[test]
    fn type_i_merges_distinct_orbits() {
        // Two-edge path A - m - B where both edges have trivial groups; fold
        // them at m after mapping both onto one edge: far endpoints A, B in
        // distinct orbits -> type IA; merged vertex group <a, b>-ish.
        let p = Presentation::free(2);
        let mut sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        let (vs, es) = sp.subdivide(EdgeId(0), 2).unwrap();
        let m = FoldMove {
            pivot: Cell {
                orbit: vs[0],
                rep: Word::identity(),
            },
            e1: EdgeHalf {
                orbit: es[0],
                rep: Word::identity(),
                pivot_end: End::Head,
            },
            e2: EdgeHalf {
                orbit: es[1],
                rep: Word::identity(),
                pivot_end: End::Tail,
            },
            witness: None,
        };
        assert_eq!(classify_fold(&sp, &m).unwrap(), FoldType::IA);
        let outcome = apply_fold(&sp, &m).unwrap();
        assert_eq!(outcome.chi_after, outcome.chi_before);
        let out = outcome.splitting;
        assert_eq!(out.vertex_count(), 2);
        assert_eq!(out.edge_count(), 1);
        // merged vertex group is the free product of the endpoint groups
        let merged = out
            .vertex_ids()
            .into_iter()
            .find(|&v| out.vertex(v).group.contains(&word(&p, "a")))
            .unwrap();
        assert!(out.vertex(merged).group.contains(&word(&p, "b")));
        assert!(out.validate().is_empty(), "{:?}", out.validate());
    }

    #[test]
    fn schedule_roundtrip() {
        let p = Presentation::free(2);
        let sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        let steps = vec![
            ScheduleStep::Subdivide {
                edge: EdgeId(0),
                parts: 3,
            },
            ScheduleStep::Fold(pull_move(&sp, EdgeId(0), End::Tail, &word(&p, "a^2"))),
            ScheduleStep::Collapse {
                edges: vec![EdgeId(1)],
            },
            ScheduleStep::Relabel,
        ];
        let text = schedule_to_text(&p, &steps);
        let back = schedule_parse(&p, &text).unwrap();
        assert_eq!(schedule_to_text(&p, &back), text);
    }
}
