//! Equivariant combinatorial maps and their decomposition into folds.
//!
//! A map is either explicit (orbit-level vertex images into the codomain
//! tree) or the composite of a replayable schedule. Explicit maps are made
//! simplicial by subdividing domain edges along their image paths, then
//! folds are emitted at vertices where two incident edge cosets share an
//! image, until no such pair is visible within the search coverage.

use crate::ball::{expand_ball, BallConfig};
use crate::fold::{apply_fold, replay_schedule, EdgeHalf, FoldError, FoldMove, ScheduleStep};
use crate::splitting::{Cell, EdgeId, End, Splitting, VertexId};
use crate::word::Word;
use std::collections::BTreeMap;

#[derive(Clone, Debug)]
pub enum MapData {
    /// Orbit-level vertex images: canonical cell of each domain orbit to a
    /// codomain tree cell.
    Explicit {
        vertex_images: BTreeMap<VertexId, Cell>,
    },
    /// The composite of a fold schedule from the domain.
    Composite { schedule: Vec<ScheduleStep> },
}

#[derive(Clone, Debug)]
pub struct EquivariantMap {
    pub domain: Splitting,
    pub codomain: Splitting,
    pub data: MapData,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Residual {
    /// No locally non-injective vertex remains within the stated coverage.
    InjectiveOnCoverage { link_depth: u32 },
    BudgetExhausted,
    /// The map was given as a schedule; its folds are returned verbatim.
    ScheduleReplay,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub steps: Vec<ScheduleStep>,
    pub residual: Residual,
    pub final_splitting: Splitting,
}

#[derive(Debug, thiserror::Error)]
pub enum MapError {
    #[error("image cell not found within radius {0}; widen the search")]
    ImageSearch(u32),
    #[error("vertex image of {0} does not absorb its stabilizer")]
    NotEquivariant(VertexId),
    #[error("fold error: {0}")]
    Fold(#[from] FoldError),
    #[error("splitting error: {0}")]
    Splitting(#[from] crate::splitting::SplittingError),
}

impl EquivariantMap {
    pub fn explicit(
        domain: Splitting,
        codomain: Splitting,
        vertex_images: BTreeMap<VertexId, Cell>,
    ) -> Result<EquivariantMap, MapError> {
        for v in domain.vertex_ids() {
            let img = vertex_images
                .get(&v)
                .ok_or(MapError::NotEquivariant(v))?;
            for g in domain.vertex(v).group.generators() {
                if !codomain.cell_stab_contains(img, g) {
                    return Err(MapError::NotEquivariant(v));
                }
            }
        }
        Ok(EquivariantMap {
            domain,
            codomain,
            data: MapData::Explicit { vertex_images },
        })
    }

    pub fn composite(domain: Splitting, schedule: Vec<ScheduleStep>) -> Result<EquivariantMap, MapError> {
        let (codomain, _) = replay_schedule(&domain, &schedule)?;
        Ok(EquivariantMap {
            domain,
            codomain,
            data: MapData::Composite { schedule },
        })
    }
}

/// Reduced edge path between two codomain cells, found inside a ball around
/// the first cell. Returns the vertex cells along the path.
fn codomain_path(
    codomain: &Splitting,
    from: &Cell,
    to: &Cell,
    radius: u32,
) -> Result<Vec<Cell>, MapError> {
    let cfg = BallConfig {
        radius,
        link_depth: 4,
        max_cosets: 12,
        max_cells: 60_000,
    };
    // Reuse the ball machinery: expand around the orbit of `from`, then
    // locate both cells (translated so `from` is the base).
    let pres = codomain.presentation();
    let shift = from.rep.inverse(pres);
    let target = Cell {
        orbit: to.orbit,
        rep: shift.mul(pres, &to.rep),
    };
    let ball = expand_ball(codomain, from.orbit, &cfg);
    let target_idx = (0..ball.vertices.len())
        .find(|&i| codomain.same_vertex_cell(&ball.vertices[i].cell, &target))
        .ok_or(MapError::ImageSearch(radius))?;
    // Walk back to the base along BFS parents.
    let mut dist: Vec<Option<usize>> = vec![None; ball.vertices.len()];
    let mut prev: Vec<Option<usize>> = vec![None; ball.vertices.len()];
    let mut queue = std::collections::VecDeque::new();
    dist[0] = Some(0);
    queue.push_back(0usize);
    while let Some(v) = queue.pop_front() {
        for &(_, far) in &ball.adjacency[v] {
            if dist[far].is_none() {
                dist[far] = Some(dist[v].unwrap() + 1);
                prev[far] = Some(v);
                queue.push_back(far);
            }
        }
    }
    let mut cells = Vec::new();
    let mut cur = Some(target_idx);
    while let Some(i) = cur {
        let cell = &ball.vertices[i].cell;
        cells.push(Cell {
            orbit: cell.orbit,
            rep: from.rep.mul(pres, &cell.rep),
        });
        cur = prev[i];
    }
    cells.reverse();
    Ok(cells)
}

/// Decompose an equivariant map into folds. Composite maps return their
/// schedule; explicit maps run the fold search after a pre-subdivision pass
/// making every edge image a single edge.
pub fn decompose_map(map: &EquivariantMap, budget: usize) -> Result<Decomposition, MapError> {
    match &map.data {
        MapData::Composite { schedule } => {
            let (final_splitting, _) = replay_schedule(&map.domain, schedule)?;
            Ok(Decomposition {
                steps: schedule.clone(),
                residual: Residual::ScheduleReplay,
                final_splitting,
            })
        }
        MapData::Explicit { vertex_images } => {
            decompose_explicit(map, vertex_images.clone(), budget)
        }
    }
}

fn decompose_explicit(
    map: &EquivariantMap,
    mut images: BTreeMap<VertexId, Cell>,
    budget: usize,
) -> Result<Decomposition, MapError> {
    let codomain = &map.codomain;
    let pres = map.domain.presentation().clone();
    let mut sp = map.domain.clone();
    let mut steps: Vec<ScheduleStep> = Vec::new();

    // Pre-pass: subdivide so every edge maps onto a single codomain edge (or
    // collapse edges whose endpoints share an image).
    for e in sp.edge_ids() {
        let d = sp.edge(e).clone();
        let tail_cell = sp.endpoint_cell(
            &crate::splitting::EdgeCell {
                orbit: e,
                rep: Word::identity(),
            },
            End::Tail,
        );
        let head_cell = sp.endpoint_cell(
            &crate::splitting::EdgeCell {
                orbit: e,
                rep: Word::identity(),
            },
            End::Head,
        );
        let img_tail = translate_image(&pres, &images[&d.tail], &tail_cell);
        let img_head = translate_image(&pres, &images[&d.head], &head_cell);
        let path = codomain_path(codomain, &img_tail, &img_head, 12)?;
        let len = path.len() - 1;
        if len == 0 {
            sp.collapse(&[e].into_iter().collect(), false)?;
            steps.push(ScheduleStep::Collapse { edges: vec![e] });
            // Collapsing merges the endpoint orbits; their images agree.
            let root = *images
                .keys()
                .find(|v| sp.vertex_ids().contains(v))
                .unwrap();
            let _ = root;
            images.retain(|v, _| sp.vertex_ids().contains(v));
        } else if len > 1 {
            let (vs, _) = sp.subdivide(e, len as u32)?;
            steps.push(ScheduleStep::Subdivide {
                edge: e,
                parts: len as u32,
            });
            // Interior canonical cells sit on the canonical lift of e, so
            // their images are the interior path cells shifted back to the
            // canonical tail lift.
            for (i, v) in vs.iter().enumerate() {
                let cell = path[i + 1].clone();
                // The canonical cell of vs[i] is the interior point of the
                // canonical lift 1*E, whose tail end is tail_cell; path was
                // computed from img_tail = image of that lift's tail.
                images.insert(*v, cell);
            }
        }
    }

    // Fold search loop.
    let cfg_depth = 3u32;
    let mut folds_done = 0usize;
    loop {
        if folds_done >= budget {
            return Ok(Decomposition {
                steps,
                residual: Residual::BudgetExhausted,
                final_splitting: sp,
            });
        }
        match find_fold_pair(&sp, codomain, &images, cfg_depth)? {
            None => {
                return Ok(Decomposition {
                    steps,
                    residual: Residual::InjectiveOnCoverage {
                        link_depth: cfg_depth,
                    },
                    final_splitting: sp,
                });
            }
            Some(m) => {
                let outcome = apply_fold(&sp, &m)?;
                // Merged orbits keep the image of the surviving orbit.
                let mut new_images = BTreeMap::new();
                for (v, img) in &images {
                    let nv = outcome.vertex_map[v];
                    new_images.entry(nv).or_insert_with(|| img.clone());
                }
                images = new_images;
                sp = outcome.splitting;
                steps.push(ScheduleStep::Fold(m));
                folds_done += 1;
            }
        }
    }
}

/// Image of an arbitrary cell of an orbit given the image of its canonical
/// cell: equivariance transports by the representative.
fn translate_image(pres: &crate::word::Presentation, canonical_img: &Cell, cell: &Cell) -> Cell {
    Cell {
        orbit: canonical_img.orbit,
        rep: cell.rep.mul(pres, &canonical_img.rep),
    }
}

/// The image cell of an edge orbit's canonical lift.
fn edge_image(
    sp: &Splitting,
    codomain: &Splitting,
    images: &BTreeMap<VertexId, Cell>,
    e: EdgeId,
) -> Result<crate::splitting::EdgeCell, MapError> {
    let pres = sp.presentation();
    let tail_cell = sp.endpoint_cell(
        &crate::splitting::EdgeCell {
            orbit: e,
            rep: Word::identity(),
        },
        End::Tail,
    );
    let d = sp.edge(e);
    let img_tail = translate_image(pres, &images[&d.tail], &tail_cell);
    let head_cell = sp.endpoint_cell(
        &crate::splitting::EdgeCell {
            orbit: e,
            rep: Word::identity(),
        },
        End::Head,
    );
    let img_head = translate_image(pres, &images[&d.head], &head_cell);
    // Simplicial: the image is the unique codomain edge between the two
    // image cells; find it via a radius-1 link scan at the tail image.
    let cfg = BallConfig {
        radius: 1,
        link_depth: 4,
        max_cosets: 16,
        max_cells: 4_000,
    };
    let ball = expand_ball(codomain, img_tail.orbit, &cfg);
    let shift = &img_tail.rep;
    for be in &ball.edges {
        let t = &ball.vertices[be.tail].cell;
        let h = &ball.vertices[be.head].cell;
        let weld = |c: &Cell| Cell {
            orbit: c.orbit,
            rep: shift.mul(codomain.presentation(), &c.rep),
        };
        let (wt, wh) = (weld(t), weld(h));
        let fits = (codomain.same_vertex_cell(&wt, &img_tail)
            && codomain.same_vertex_cell(&wh, &img_head))
            || (codomain.same_vertex_cell(&wh, &img_tail)
                && codomain.same_vertex_cell(&wt, &img_head));
        if fits {
            return Ok(crate::splitting::EdgeCell {
                orbit: be.cell.orbit,
                rep: shift.mul(codomain.presentation(), &be.cell.rep),
            });
        }
    }
    Err(MapError::ImageSearch(1))
}

/// Scan the links of canonical domain cells for two incident edge cosets
/// with a common image; derive the witness and return the fold move.
fn find_fold_pair(
    sp: &Splitting,
    codomain: &Splitting,
    images: &BTreeMap<VertexId, Cell>,
    depth: u32,
) -> Result<Option<FoldMove>, MapError> {
    let pres = sp.presentation();
    let mut edge_images: BTreeMap<EdgeId, crate::splitting::EdgeCell> = BTreeMap::new();
    for e in sp.edge_ids() {
        edge_images.insert(e, edge_image(sp, codomain, images, e)?);
    }
    for v in sp.vertex_ids() {
        let pivot = Cell {
            orbit: v,
            rep: Word::identity(),
        };
        let vgroup = &sp.vertex(v).group;
        // Incident edge cosets at the canonical cell.
        let mut incident: Vec<(EdgeId, End, Word)> = Vec::new();
        for (e, end) in sp.incident_ends(v) {
            let sub = sp.edge_group_at(e, end);
            let (reps, _) = vgroup.coset_reps(&sub, depth, 12);
            for u in reps {
                incident.push((e, end, u.mul(pres, sp.edge(e).attach(end))));
            }
        }
        for i in 0..incident.len() {
            for j in (i + 1)..incident.len() {
                let (e1, end1, h1) = &incident[i];
                let (e2, end2, h2) = &incident[j];
                let img1 = &edge_images[e1];
                let img2 = &edge_images[e2];
                let cell1 = crate::splitting::EdgeCell {
                    orbit: img1.orbit,
                    rep: h1.mul(codomain.presentation(), &img1.rep),
                };
                let cell2 = crate::splitting::EdgeCell {
                    orbit: img2.orbit,
                    rep: h2.mul(codomain.presentation(), &img2.rep),
                };
                if !codomain.same_edge_cell(&cell1, &cell2) {
                    continue;
                }
                // Same domain cell is not a fold.
                if e1 == e2
                    && sp.same_edge_cell(
                        &crate::splitting::EdgeCell {
                            orbit: *e1,
                            rep: h1.clone(),
                        },
                        &crate::splitting::EdgeCell {
                            orbit: *e2,
                            rep: h2.clone(),
                        },
                    )
                {
                    continue;
                }
                let witness = derive_witness(sp, &pivot, (*e1, end1, h1), (*e2, end2, h2));
                let m = FoldMove {
                    pivot: pivot.clone(),
                    e1: EdgeHalf {
                        orbit: *e1,
                        rep: h1.clone(),
                        pivot_end: *end1,
                    },
                    e2: EdgeHalf {
                        orbit: *e2,
                        rep: h2.clone(),
                        pivot_end: *end2,
                    },
                    witness,
                };
                if crate::fold::classify_fold(sp, &m).is_ok() {
                    return Ok(Some(m));
                }
            }
        }
    }
    Ok(None)
}

fn derive_witness(
    sp: &Splitting,
    pivot: &Cell,
    (e1, _end1, h1): (EdgeId, &End, &Word),
    (e2, _end2, h2): (EdgeId, &End, &Word),
) -> Option<Word> {
    let pres = sp.presentation();
    if e1 == e2 {
        // Type II: h with h * (h1 E) = h2 E and h elliptic at the pivot.
        for eps in sp.edge(e1).group.generator_products(2, 64) {
            let h = h2.mul(pres, &eps).mul(pres, &h1.inverse(pres));
            if sp.cell_stab_contains(pivot, &h) {
                return Some(h);
            }
        }
        return Some(h2.mul(pres, &h1.inverse(pres)));
    }
    let far1 = sp.endpoint_cell(
        &crate::splitting::EdgeCell {
            orbit: e1,
            rep: h1.clone(),
        },
        _end1.other(),
    );
    let far2 = sp.endpoint_cell(
        &crate::splitting::EdgeCell {
            orbit: e2,
            rep: h2.clone(),
        },
        _end2.other(),
    );
    if far1.orbit != far2.orbit {
        return None; // type I needs no witness
    }
    // Type III: h with h * far1 = far2.
    for nu in sp.vertex(far1.orbit).group.generator_products(2, 64) {
        let h = far2
            .rep
            .mul(pres, &nu)
            .mul(pres, &far1.rep.inverse(pres));
        let moved = Cell {
            orbit: far1.orbit,
            rep: h.mul(pres, &far1.rep),
        };
        if sp.same_vertex_cell(&moved, &far2) {
            return Some(h);
        }
    }
    Some(far2.rep.mul(pres, &far1.rep.inverse(pres)))
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
    fn identity_map_decomposes_to_nothing() {
        let p = Presentation::free(2);
        let sp = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        let images: BTreeMap<VertexId, Cell> = sp
            .vertex_ids()
            .into_iter()
            .map(|v| {
                (
                    v,
                    Cell {
                        orbit: v,
                        rep: Word::identity(),
                    },
                )
            })
            .collect();
        let map = EquivariantMap::explicit(sp.clone(), sp.clone(), images).unwrap();
        let dec = decompose_map(&map, 100).unwrap();
        assert!(dec.steps.is_empty());
        assert!(matches!(dec.residual, Residual::InjectiveOnCoverage { .. }));
    }

    #[test]
    fn two_edge_path_onto_one_edge_is_one_fold() {
        // Domain: the b-petal of the rose at an <a>-vertex subdivided in
        // two; codomain: the splitting where the petal is folded in half
        // (b elliptic). The two petal edges at the midpoint share an image,
        // so exactly one fold is emitted.
        let p = Presentation::free(2);
        let mut domain =
            crate::splitting::rose_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        let (vs, es) = domain.subdivide(EdgeId(0), 2).unwrap();
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
        let codomain = apply_fold(&domain, &m).unwrap().splitting;
        let images: BTreeMap<VertexId, Cell> = domain
            .vertex_ids()
            .into_iter()
            .map(|v| {
                (
                    v,
                    Cell {
                        orbit: v,
                        rep: Word::identity(),
                    },
                )
            })
            .collect();
        let map = EquivariantMap::explicit(domain, codomain.clone(), images).unwrap();
        let dec = decompose_map(&map, 10).unwrap();
        let folds = dec
            .steps
            .iter()
            .filter(|s| matches!(s, ScheduleStep::Fold(_)))
            .count();
        assert_eq!(folds, 1, "steps: {:?}", dec.steps);
        assert!(dec.final_splitting.isomorphic(&codomain));
    }

    #[test]
    fn composite_map_returns_schedule() {
        let built = crate::constructions::build_f2_example(2).unwrap();
        let map = EquivariantMap::composite(built.start.clone(), built.schedule.clone()).unwrap();
        let dec = decompose_map(&map, 100).unwrap();
        assert_eq!(dec.residual, Residual::ScheduleReplay);
        assert!(dec.final_splitting.isomorphic(&built.splitting));
    }

    #[test]
    fn f2_schedule_recovered_from_explicit_map() {
        // Explicit map from the one-edge splitting onto the built f2 example
        // (N = 1): the fold search recovers type II pulls landing on an
        // isomorphic splitting.
        let built = crate::constructions::build_f2_example(1).unwrap();
        let p = built.splitting.presentation().clone();
        let domain = one_edge_splitting(&p, &[word(&p, "a")], &[word(&p, "b")]);
        let mut images = BTreeMap::new();
        images.insert(
            VertexId(0),
            Cell {
                orbit: VertexId(0),
                rep: Word::identity(),
            },
        );
        images.insert(
            VertexId(1),
            Cell {
                orbit: VertexId(1),
                rep: Word::identity(),
            },
        );
        let map = EquivariantMap::explicit(domain, built.splitting.clone(), images).unwrap();
        let dec = decompose_map(&map, 50).unwrap();
        assert!(matches!(dec.residual, Residual::InjectiveOnCoverage { .. }));
        assert!(
            dec.final_splitting.isomorphic(&built.splitting),
            "got:\n{}\nwant:\n{}",
            dec.final_splitting.to_text(),
            built.splitting.to_text()
        );
    }
}
