//! Executable reproductions of the explicit example families, with
//! replayable fold schedules and self-verification of edge counts and
//! acylindricity claims.

use crate::automaton::SubgroupRep;
use crate::ball::{expand_ball, BallConfig, QClass, VerdictStatus};
use crate::fold::{apply_fold, pull_move, replay_schedule, FoldError, ScheduleStep};
use crate::pclass::PClass;
use crate::splitting::{EdgeId, End, Splitting, VertexId};
use crate::word::{Presentation, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExampleFamily {
    /// F2 acting with N orbits of edges, 1-acylindrical on non-cyclic
    /// subgroups.
    F2Chain,
    /// Same fold schedule over Z/2^(N+1) * Z, realizing the finite prefix of
    /// the subgroup chain; 1-acylindrical on infinite subgroups.
    GenericChain,
    /// (Z/pq) * F_{r-1} acting k-acylindrically with floor((2r-5/2)k) edges,
    /// all edge stabilizers non-trivial.
    SharpTorsion,
    /// F_r acting k-acylindrically with (2r-3)k edges.
    SharpFree,
}

impl ExampleFamily {
    pub fn parse(s: &str) -> Option<ExampleFamily> {
        match s {
            "f2" | "f2_chain" => Some(ExampleFamily::F2Chain),
            "generic" | "generic_chain" => Some(ExampleFamily::GenericChain),
            "sharp" | "sharp_torsion" => Some(ExampleFamily::SharpTorsion),
            "sharp-free" | "sharp_free" | "torsion-free" => Some(ExampleFamily::SharpFree),
            _ => None,
        }
    }
}

impl std::fmt::Display for ExampleFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ExampleFamily::F2Chain => "f2_chain",
            ExampleFamily::GenericChain => "generic_chain",
            ExampleFamily::SharpTorsion => "sharp_torsion",
            ExampleFamily::SharpFree => "sharp_free",
        };
        write!(f, "{}", s)
    }
}

#[derive(Clone, Debug)]
pub struct ExampleSpec {
    pub family: ExampleFamily,
    /// N for the chain families, (k, r) for the sharp families.
    pub n: u32,
    pub k: u32,
    pub r: u32,
    pub expected_edges: usize,
    pub expected_acyl_k: u32,
    pub expected_class: QClass,
}

/// A built example: the starting splitting, the replayable schedule, and the
/// finished splitting together with the distinguished vertices.
#[derive(Clone, Debug)]
pub struct BuiltExample {
    pub spec: ExampleSpec,
    pub start: Splitting,
    pub schedule: Vec<ScheduleStep>,
    pub splitting: Splitting,
    /// Orbit whose group is the cyclic <a> seed.
    pub a_vertex: VertexId,
    /// Orbit carrying the large central group (sharp families).
    pub central_vertex: Option<VertexId>,
    pub primes: Option<(u64, u64)>,
}

/// Smallest pair of distinct primes (by p+q, then p) with
/// (p-1)(q-1) >= 2(r-2).
pub fn choose_primes(r: u32) -> (u64, u64) {
    let primes = [2u64, 3, 5, 7, 11, 13, 17, 19, 23];
    let need = 2 * (r as u64).saturating_sub(2);
    let mut best: Option<(u64, u64)> = None;
    for &p in &primes {
        for &q in &primes {
            if p == q {
                continue;
            }
            if (p - 1) * (q - 1) >= need {
                let better = match best {
                    None => true,
                    Some((bp, bq)) => (p + q, p) < (bp + bq, bp),
                };
                if better {
                    best = Some((p, q));
                }
            }
        }
    }
    best.expect("prime table exhausted")
}

struct Builder {
    splitting: Splitting,
    schedule: Vec<ScheduleStep>,
}

impl Builder {
    fn new(start: Splitting) -> Builder {
        Builder {
            splitting: start,
            schedule: Vec::new(),
        }
    }

    fn subdivide(&mut self, e: EdgeId, parts: u32) -> (Vec<VertexId>, Vec<EdgeId>) {
        let out = self.splitting.subdivide(e, parts).expect("subdivide");
        self.schedule.push(ScheduleStep::Subdivide { edge: e, parts });
        out
    }

    fn pull(&mut self, e: EdgeId, pivot_end: End, h: &Word) -> Result<(), FoldError> {
        let m = pull_move(&self.splitting, e, pivot_end, h);
        let outcome = apply_fold(&self.splitting, &m)?;
        self.splitting = outcome.splitting;
        self.schedule.push(ScheduleStep::Fold(m));
        Ok(())
    }

    fn collapse(&mut self, edges: Vec<EdgeId>) {
        let set = edges.iter().copied().collect();
        self.splitting.collapse(&set, false).expect("collapse");
        self.schedule.push(ScheduleStep::Collapse { edges });
    }
}

/// The shared chain schedule: subdivide the single A-B edge into N parts,
/// pull the descending powers of `a` outward from A, then pull the
/// recursively defined b-words back from B.
fn build_chain(pres: &Presentation, n: u32) -> Result<BuiltExample, FoldError> {
    let a = Word::parse(pres, "a").unwrap();
    let b = Word::parse(pres, "b").unwrap();
    let start = crate::splitting::one_edge_splitting(
        pres,
        std::slice::from_ref(&a),
        std::slice::from_ref(&b),
    );
    let a_vertex = VertexId(0);
    let mut builder = Builder::new(start.clone());
    let edges: Vec<EdgeId> = if n >= 2 {
        let (_, es) = builder.subdivide(EdgeId(0), n);
        es
    } else {
        vec![EdgeId(0)]
    };
    // Forward pulls: a^(2^i) across edge i with the pivot on the A side.
    for i in 1..=n {
        let h = a.pow(pres, 1i64 << i);
        builder.pull(edges[(i - 1) as usize], End::Tail, &h)?;
    }
    // Backward pulls: c_j = c_{j-1} a^(2^(N+1-j)) c_{j-1}^2 across edge
    // N+1-j with the pivot on the B side.
    let mut c = b.clone();
    for j in 1..n {
        let mid = a.pow(pres, 1i64 << (n + 1 - j));
        c = c.mul(pres, &mid).mul(pres, &c).mul(pres, &c);
        builder.pull(edges[(n - j) as usize], End::Head, &c)?;
    }
    Ok(BuiltExample {
        spec: ExampleSpec {
            family: ExampleFamily::F2Chain,
            n,
            k: 1,
            r: 2,
            expected_edges: n as usize,
            expected_acyl_k: 1,
            expected_class: QClass::NonCyclic,
        },
        start,
        schedule: builder.schedule,
        splitting: builder.splitting,
        a_vertex,
        central_vertex: None,
        primes: None,
    })
}

/// F2 example with N edge orbits (reduced, 1-acylindrical on non-cyclic
/// subgroups).
pub fn build_f2_example(n: u32) -> Result<BuiltExample, FoldError> {
    assert!(n > 0);
    let pres = Presentation::free(2);
    build_chain(&pres, n)
}

/// The same schedule over the finite chain stand-in Z/2^(N+1) * Z,
/// 1-acylindrical on infinite subgroups.
pub fn build_generic_chain(n: u32) -> Result<BuiltExample, FoldError> {
    assert!(n > 0 && n <= 14);
    let pres = Presentation::new(&[("a", 1 << (n + 1)), ("b", 0)]).unwrap();
    let mut built = build_chain(&pres, n)?;
    built.spec.family = ExampleFamily::GenericChain;
    built.spec.expected_class = QClass::Infinite;
    Ok(built)
}

struct SharpLayout {
    builder: Builder,
    start: Splitting,
    a_vertex: VertexId,
    central: VertexId,
    loop_edges: Vec<EdgeId>, // petals for h_2..h_{r-1}
}

/// Starting decomposition for both sharp families: a rose with r-1 petals
/// and an <a>-labelled vertex on the h_1 loop.
fn sharp_start(pres: &Presentation) -> SharpLayout {
    let a = Word::parse(pres, "a").unwrap();
    let r = pres.rank() as u32;
    let mut sp = Splitting::new(pres.clone());
    let center = sp.add_vertex(SubgroupRep::trivial(pres));
    let marked = sp.add_vertex(SubgroupRep::from_generators(&[a], pres));
    let h1 = Word::parse(pres, "h1").unwrap();
    // f1: center -> marked (tree); f2: marked -> center carrying h1.
    sp.add_edge(
        center,
        marked,
        SubgroupRep::trivial(pres),
        Word::identity(),
        Word::identity(),
        true,
    );
    sp.add_edge(
        marked,
        center,
        SubgroupRep::trivial(pres),
        Word::identity(),
        h1.inverse(pres),
        false,
    );
    let mut loops = Vec::new();
    for j in 2..r {
        let hj = Word::parse(pres, &format!("h{}", j)).unwrap();
        let e = sp.add_edge(
            center,
            center,
            SubgroupRep::trivial(pres),
            Word::identity(),
            hj.inverse(pres),
            false,
        );
        loops.push(e);
    }
    SharpLayout {
        start: sp.clone(),
        builder: Builder::new(sp),
        a_vertex: marked,
        central: center,
        loop_edges: loops,
    }
}

/// The g_i pull schedule on the petals h_2..h_{r-1}: subdivide each into 2k
/// edges, pull one element k edges deep from each end.
fn pull_petals(
    layout: &mut SharpLayout,
    pres: &Presentation,
    k: u32,
    g_words: &[Word],
) -> Result<(), FoldError> {
    for (j, &petal) in layout.loop_edges.clone().iter().enumerate() {
        let g_a = &g_words[2 * j];
        let g_b = &g_words[2 * j + 1];
        let hj = Word::parse(pres, &format!("h{}", j + 2)).unwrap();
        let edges: Vec<EdgeId> = if 2 * k >= 2 {
            let (_, es) = layout.builder.subdivide(petal, 2 * k);
            es
        } else {
            vec![petal]
        };
        // k pulls of g_a from the canonical central end.
        for t in 0..k as usize {
            layout.builder.pull(edges[t], End::Tail, g_a)?;
        }
        // k pulls of the h_j-translate of g_b from the far end.
        let g_b_conj = hj.conj(pres, g_b);
        for t in 0..k as usize {
            let idx = 2 * k as usize - 1 - t;
            layout.builder.pull(edges[idx], End::Head, &g_b_conj)?;
        }
    }
    Ok(())
}

/// The g_i list: b^(x+1) c^(y+1) with i = (p-1)x + y enumerated from 0.
fn sharp_g_words(
    pres: &Presentation,
    b_word: &Word,
    c_word: &Word,
    count: usize,
    p_minus_1: u64,
) -> Vec<Word> {
    (0..count as u64)
        .map(|t| {
            let (x, y) = (t / p_minus_1, t % p_minus_1);
            b_word
                .pow(pres, (x + 1) as i64)
                .mul(pres, &c_word.pow(pres, (y + 1) as i64))
        })
        .collect()
}

/// Sharp example over (Z/pq) * F_{r-1}: exactly floor((2r - 5/2) k) edges,
/// every edge group non-trivial, k-acylindrical.
pub fn build_sharp_example(k: u32, r: u32) -> Result<BuiltExample, FoldError> {
    assert!(k >= 1 && r >= 2);
    let (p, q) = choose_primes(r);
    let mut gens: Vec<(String, u32)> = vec![("a".into(), (p * q) as u32)];
    for j in 1..r {
        gens.push((format!("h{}", j), 0));
    }
    let gen_refs: Vec<(&str, u32)> = gens.iter().map(|(s, n)| (s.as_str(), *n)).collect();
    let pres = Presentation::new(&gen_refs).unwrap();
    let a = Word::parse(&pres, "a").unwrap();
    let h1 = Word::parse(&pres, "h1").unwrap();
    let mut layout = sharp_start(&pres);
    let f1 = EdgeId(0);
    let f2 = EdgeId(1);

    let (b_word, c_word);
    if k == 1 {
        // Collapse one initial loop edge, then pull a across the survivor.
        layout.builder.collapse(vec![f1]);
        layout.builder.pull(f2, End::Tail, &a)?;
        b_word = a.pow(&pres, p as i64);
        c_word = h1.inverse(&pres).conj(&pres, &a.pow(&pres, q as i64));
        // After the collapse the central vertex is the merged one.
        layout.central = VertexId(0).min(layout.a_vertex);
    } else {
        let half_up = k.div_ceil(2); // ceil(k/2)
        let half_down = k / 2;
        // Loop shape: center - [u-chain] - s1 - [arc] - w - [t-chain] - center
        let (arc_vertices, arc_edges) = if half_up + 1 >= 2 {
            layout.builder.subdivide(f1, half_up + 1)
        } else {
            (Vec::new(), vec![f1])
        };
        let s1 = arc_vertices.first().copied();
        // Pull a backwards from w across the arc edges (all but the first).
        for idx in (1..arc_edges.len()).rev() {
            layout.builder.pull(arc_edges[idx], End::Head, &a)?;
        }
        // Subdivide the center-adjacent arc edge into the a^p chain and pull.
        let u_edges: Vec<EdgeId> = if half_down >= 2 {
            let (_, es) = layout.builder.subdivide(arc_edges[0], half_down);
            es
        } else {
            vec![arc_edges[0]]
        };
        let ap = a.pow(&pres, p as i64);
        for idx in (0..u_edges.len()).rev() {
            layout.builder.pull(u_edges[idx], End::Head, &ap)?;
        }
        // Subdivide the attachment edge into the a^q chain and pull from w.
        let t_edges: Vec<EdgeId> = if half_down >= 2 {
            let (_, es) = layout.builder.subdivide(f2, half_down);
            es
        } else {
            vec![f2]
        };
        let aq = a.pow(&pres, q as i64);
        for &e in &t_edges {
            layout.builder.pull(e, End::Tail, &aq)?;
        }
        b_word = ap;
        c_word = h1.inverse(&pres).conj(&pres, &aq);
        let _ = s1;
    }

    let g_words = sharp_g_words(&pres, &b_word, &c_word, 2 * (r as usize - 2), p - 1);
    pull_petals(&mut layout, &pres, k, &g_words)?;

    let expected = ((2 * r as i64 * 2 - 5) * k as i64 / 2) as usize; // floor((2r-5/2)k)
    Ok(BuiltExample {
        spec: ExampleSpec {
            family: ExampleFamily::SharpTorsion,
            n: 0,
            k,
            r,
            expected_edges: expected,
            expected_acyl_k: k,
            expected_class: QClass::AllNontrivial,
        },
        start: layout.start,
        schedule: layout.builder.schedule,
        splitting: layout.builder.splitting,
        a_vertex: layout.a_vertex,
        central_vertex: Some(layout.central),
        primes: Some((p, q)),
    })
}

/// Torsion-free sharp example over F_r: exactly (2r-3)k edges.
pub fn build_torsionfree_sharp(k: u32, r: u32) -> Result<BuiltExample, FoldError> {
    assert!(k >= 1 && r >= 2);
    let mut gens: Vec<(String, u32)> = vec![("a".into(), 0)];
    for j in 1..r {
        gens.push((format!("h{}", j), 0));
    }
    let gen_refs: Vec<(&str, u32)> = gens.iter().map(|(s, n)| (s.as_str(), *n)).collect();
    let pres = Presentation::new(&gen_refs).unwrap();
    let a = Word::parse(&pres, "a").unwrap();
    let h1 = Word::parse(&pres, "h1").unwrap();
    let mut layout = sharp_start(&pres);
    let f1 = EdgeId(0);
    let f2 = EdgeId(1);

    if k == 1 {
        layout.builder.collapse(vec![f1]);
        layout.builder.pull(f2, End::Tail, &a)?;
        layout.central = VertexId(0).min(layout.a_vertex);
    } else {
        // Loop of k edges, every label <a>.
        let chain: Vec<EdgeId> = if k - 1 >= 2 {
            let (_, es) = layout.builder.subdivide(f1, k - 1);
            es
        } else {
            vec![f1]
        };
        for idx in (0..chain.len()).rev() {
            layout.builder.pull(chain[idx], End::Head, &a)?;
        }
        layout.builder.pull(f2, End::Tail, &a)?;
    }
    let b_word = a.clone();
    let c_word = h1.inverse(&pres).conj(&pres, &a);
    // Pairwise non-conjugate elements b^(t+1) c of the free central group.
    let g_words: Vec<Word> = (0..2 * (r as usize - 2) as i64)
        .map(|t| b_word.pow(&pres, t + 1).mul(&pres, &c_word))
        .collect();
    pull_petals(&mut layout, &pres, k, &g_words)?;

    Ok(BuiltExample {
        spec: ExampleSpec {
            family: ExampleFamily::SharpFree,
            n: 0,
            k,
            r,
            expected_edges: ((2 * r - 3) * k) as usize,
            expected_acyl_k: k,
            expected_class: QClass::AllNontrivial,
        },
        start: layout.start,
        schedule: layout.builder.schedule,
        splitting: layout.builder.splitting,
        a_vertex: layout.a_vertex,
        central_vertex: Some(layout.central),
        primes: None,
    })
}

/// A driver run: start splitting over the free presentation, target
/// presentation, schedule, and the reference edge count of the tree the
/// schedule builds.
#[derive(Clone, Debug)]
pub struct DriverRun {
    pub start: Splitting,
    pub target: Presentation,
    pub schedule: Vec<ScheduleStep>,
    pub reference_edges: usize,
    pub rank: u32,
    pub k: u32,
}

/// Schedule for the accessibility driver on a sharp-family instance: start
/// from the rose of the free group on the generators, collapse the a-petal
/// (its image is a point), relabel onto the ambient group, then run the
/// loop construction. The driver's collapse stages fire along the way; the
/// generator mirrors them on its working copy so later moves stay aligned.
pub fn driver_sharp_run(k: u32, r: u32, torsion_free: bool) -> Result<DriverRun, FoldError> {
    use crate::driver::{
        collapse_large_connector, cyclic_stage, cyclic_stage_applies, grow_connecting_weights,
        CyclicStageOutcome,
    };
    use crate::influence::SeedSet;
    use crate::pclass::PClass;

    assert!(k >= 1 && r >= 2);
    let target = if torsion_free {
        let mut gens: Vec<(String, u32)> = vec![("a".into(), 0)];
        for j in 1..r {
            gens.push((format!("h{}", j), 0));
        }
        let refs: Vec<(&str, u32)> = gens.iter().map(|(s, n)| (s.as_str(), *n)).collect();
        Presentation::new(&refs).unwrap()
    } else {
        let (p, q) = choose_primes(r);
        let mut gens: Vec<(String, u32)> = vec![("a".into(), (p * q) as u32)];
        for j in 1..r {
            gens.push((format!("h{}", j), 0));
        }
        let refs: Vec<(&str, u32)> = gens.iter().map(|(s, n)| (s.as_str(), *n)).collect();
        Presentation::new(&refs).unwrap()
    };
    let free_pres = target.free_version();
    let petals: Vec<Word> = (0..free_pres.rank())
        .map(|g| free_pres.generator_word(g))
        .collect();
    let start = crate::splitting::rose_splitting(&free_pres, &[], &petals);

    let mut schedule: Vec<ScheduleStep> = Vec::new();
    let mut sp = start.clone();

    // Pre-collapse pass: the a-petal maps to a point.
    schedule.push(ScheduleStep::Collapse {
        edges: vec![EdgeId(0)],
    });
    sp.collapse(&[EdgeId(0)].into_iter().collect(), false)
        .map_err(crate::fold::FoldError::Splitting)?;
    schedule.push(ScheduleStep::Relabel);
    sp = crate::fold::relabel(&sp, &target);

    let pclass = PClass::trivial_only();
    let mut seeds = SeedSet::new(
        sp.vertex_ids()
            .into_iter()
            .filter(|&v| !sp.vertex(v).group.is_trivial()),
    );
    let pres = target.clone();
    let a = Word::parse(&pres, "a").unwrap();
    let h1 = Word::parse(&pres, "h1").unwrap();
    let (p, q) = if torsion_free {
        (1, 1)
    } else {
        choose_primes(r)
    };

    // Emits a fold, mirroring the driver's collapse stages on (sp, seeds).
    let emit = |sp: &mut Splitting,
                    seeds: &mut SeedSet,
                    schedule: &mut Vec<ScheduleStep>,
                    e: EdgeId,
                    end: End,
                    h: &Word|
     -> Result<(), FoldError> {
        // Drain weight-one connectors exactly as the driver does.
        while grow_connecting_weights(sp, seeds, &pclass)
            .map(|ws| ws.iter().any(|w| w.is_one()))
            .unwrap_or(false)
        {
            let c = collapse_large_connector(sp, seeds, &pclass, k)
                .map_err(|e| FoldError::Splitting(crate::splitting::SplittingError::Parse(e.to_string())))?;
            *sp = c.splitting;
            *seeds = c.seeds;
        }
        let m = pull_move(sp, e, end, h);
        let use_cyclic = cyclic_stage_applies(sp, seeds, &pclass)
            .map_err(|e| FoldError::Splitting(crate::splitting::SplittingError::Parse(e.to_string())))?;
        let outcome = apply_fold(sp, &m)?;
        schedule.push(ScheduleStep::Fold(m.clone()));
        if use_cyclic {
            match cyclic_stage(sp, &m, &outcome, seeds, k)
                .map_err(|e| FoldError::Splitting(crate::splitting::SplittingError::Parse(e.to_string())))?
            {
                CyclicStageOutcome::Kept(update) => {
                    *sp = outcome.splitting;
                    *seeds = update.seeds;
                }
                CyclicStageOutcome::Collapsed {
                    splitting, seeds: s, ..
                } => {
                    *sp = splitting;
                    *seeds = s;
                }
            }
        } else {
            let update = crate::driver::update_seeds_after_fold(sp, &m, &outcome, seeds, &pclass)
                .map_err(|e| FoldError::Splitting(crate::splitting::SplittingError::Parse(e.to_string())))?;
            *sp = outcome.splitting;
            *seeds = update.seeds;
        }
        Ok(())
    };

    // Petal ids on the post-collapse splitting: the a-petal was edge 0, so
    // the h_j petal is edge j.
    let h1_edge = EdgeId(1);
    if k == 1 {
        emit(&mut sp, &mut seeds, &mut schedule, h1_edge, End::Tail, &a)?;
    } else if torsion_free {
        // Loop of k edges, every label <a>: forward pulls cover all but the
        // attachment edge, the last pull crosses it backwards.
        let (_, chain) = sp.subdivide(h1_edge, k).unwrap();
        schedule.push(ScheduleStep::Subdivide {
            edge: h1_edge,
            parts: k,
        });
        for t in 0..(k - 1) as usize {
            emit(&mut sp, &mut seeds, &mut schedule, chain[t], End::Tail, &a)?;
        }
        let conj = h1.conj(&pres, &a);
        emit(
            &mut sp,
            &mut seeds,
            &mut schedule,
            chain[(k - 1) as usize],
            End::Head,
            &conj,
        )?;
    } else {
        let half_up = k.div_ceil(2);
        let half_down = k / 2;
        let parts = half_up + 2;
        let (vs, es) = sp.subdivide(h1_edge, parts).unwrap();
        schedule.push(ScheduleStep::Subdivide {
            edge: h1_edge,
            parts,
        });
        let _ = vs;
        // Arc pulls: a onto the first ceil(k/2) edges from the base vertex.
        for t in 0..half_up as usize {
            emit(&mut sp, &mut seeds, &mut schedule, es[t], End::Tail, &a)?;
        }
        // a^p chain toward the central vertex z.
        let p_edge = es[half_up as usize];
        let u_edges: Vec<EdgeId> = if half_down >= 2 {
            let (_, ues) = sp.subdivide(p_edge, half_down).unwrap();
            schedule.push(ScheduleStep::Subdivide {
                edge: p_edge,
                parts: half_down,
            });
            ues
        } else {
            vec![p_edge]
        };
        let ap = if torsion_free {
            a.clone()
        } else {
            a.pow(&pres, p as i64)
        };
        for &e in &u_edges {
            emit(&mut sp, &mut seeds, &mut schedule, e, End::Tail, &ap)?;
        }
        // a^q chain pulled backwards from the base across the attachment.
        let q_edge = es[half_up as usize + 1];
        let t_edges: Vec<EdgeId> = if half_down >= 2 {
            let (_, tes) = sp.subdivide(q_edge, half_down).unwrap();
            schedule.push(ScheduleStep::Subdivide {
                edge: q_edge,
                parts: half_down,
            });
            tes
        } else {
            vec![q_edge]
        };
        let aq_conj = if torsion_free {
            h1.conj(&pres, &a)
        } else {
            h1.conj(&pres, &a.pow(&pres, q as i64))
        };
        for &e in t_edges.iter().rev() {
            emit(&mut sp, &mut seeds, &mut schedule, e, End::Head, &aq_conj)?;
        }
    }

    // Petal pulls with the central generators. The central vertex group now
    // contains b and the h1-conjugate c.
    let b_word = if torsion_free {
        a.clone()
    } else {
        a.pow(&pres, p as i64)
    };
    let c_word = if k == 1 {
        if torsion_free {
            h1.inverse(&pres).conj(&pres, &a)
        } else {
            h1.inverse(&pres).conj(&pres, &a.pow(&pres, q as i64))
        }
    } else if torsion_free {
        h1.conj(&pres, &a)
    } else {
        h1.conj(&pres, &a.pow(&pres, q as i64))
    };
    let g_words: Vec<Word> = if torsion_free {
        (0..2 * (r as i64 - 2))
            .map(|t| b_word.pow(&pres, t + 1).mul(&pres, &c_word))
            .collect()
    } else {
        sharp_g_words(&pres, &b_word, &c_word, 2 * (r as usize - 2), p - 1)
    };
    for j in 0..(r as usize).saturating_sub(2) {
        let petal = EdgeId(2 + j as u32);
        let hj = Word::parse(&pres, &format!("h{}", j + 2)).unwrap();
        let g_a = &g_words[2 * j];
        let g_b = &g_words[2 * j + 1];
        let edges: Vec<EdgeId> = if 2 * k >= 2 {
            let (_, es) = sp.subdivide(petal, 2 * k).unwrap();
            schedule.push(ScheduleStep::Subdivide {
                edge: petal,
                parts: 2 * k,
            });
            es
        } else {
            vec![petal]
        };
        for t in 0..k as usize {
            emit(&mut sp, &mut seeds, &mut schedule, edges[t], End::Tail, g_a)?;
        }
        let g_b_conj = hj.conj(&pres, g_b);
        for t in 0..k as usize {
            let idx = 2 * k as usize - 1 - t;
            emit(&mut sp, &mut seeds, &mut schedule, edges[idx], End::Head, &g_b_conj)?;
        }
    }

    let reference_edges = if torsion_free {
        ((2 * r - 3) * k) as usize
    } else {
        ((4 * r as i64 - 5) * k as i64 / 2) as usize
    };
    Ok(DriverRun {
        start,
        target,
        schedule,
        reference_edges,
        rank: r,
        k,
    })
}

pub fn build(family: ExampleFamily, n: u32, k: u32, r: u32) -> Result<BuiltExample, FoldError> {
    match family {
        ExampleFamily::F2Chain => build_f2_example(n),
        ExampleFamily::GenericChain => build_generic_chain(n),
        ExampleFamily::SharpTorsion => build_sharp_example(k, r),
        ExampleFamily::SharpFree => build_torsionfree_sharp(k, r),
    }
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub family: ExampleFamily,
    pub edge_count_ok: bool,
    pub edge_count: usize,
    pub expected_edges: usize,
    pub reduced_ok: Option<bool>,
    pub all_edges_nontrivial: bool,
    pub acyl_pass: bool,
    pub sharpness_fail_at_k_minus_1: Option<bool>,
    pub fixed_diameter: Option<u32>,
    pub expected_fixed_diameter: Option<u32>,
    pub replay_ok: bool,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.edge_count_ok
            && self.reduced_ok.unwrap_or(true)
            && self.all_edges_nontrivial
            && self.acyl_pass
            && self.sharpness_fail_at_k_minus_1.unwrap_or(true)
            && (self.fixed_diameter.is_none()
                || self.fixed_diameter == self.expected_fixed_diameter)
            && self.replay_ok
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "family={} edges={} expected={} edge_count_ok={}\n",
            self.family, self.edge_count, self.expected_edges, self.edge_count_ok
        );
        if let Some(r) = self.reduced_ok {
            out.push_str(&format!("reduced={}\n", r));
        }
        out.push_str(&format!(
            "all_edges_nontrivial={} acyl_pass={}\n",
            self.all_edges_nontrivial, self.acyl_pass
        ));
        if let Some(s) = self.sharpness_fail_at_k_minus_1 {
            out.push_str(&format!("sharpness_witness={}\n", s));
        }
        if let Some(d) = self.fixed_diameter {
            out.push_str(&format!(
                "fixed_diameter={} expected={}\n",
                d,
                self.expected_fixed_diameter.unwrap_or(0)
            ));
        }
        out.push_str(&format!("replay_ok={}\n", self.replay_ok));
        for n in &self.notes {
            out.push_str(&format!("note: {}\n", n));
        }
        out.push_str(&format!("verdict: {}\n", if self.passed() { "PASS" } else { "FAIL" }));
        out
    }
}

/// Ball configuration used by example verification.
pub fn verification_ball_config(k: u32) -> BallConfig {
    BallConfig {
        radius: 2 * k + 2,
        link_depth: 3,
        max_cosets: 8,
        max_cells: 60_000,
    }
}

/// Check a built example against its claims: exact edge count, reducedness
/// where claimed, ball-scale acylindricity, the sharpness witness at k-1,
/// the fixed-set diameter of the torsion powers, and schedule replay.
pub fn verify_example(built: &BuiltExample) -> VerificationReport {
    let sp = &built.splitting;
    let spec = &built.spec;
    let mut notes = Vec::new();
    let edge_count = sp.edge_count();
    let edge_count_ok = edge_count == spec.expected_edges;

    let reduced_ok = match spec.family {
        ExampleFamily::F2Chain | ExampleFamily::GenericChain => {
            Some(sp.check_reducedness(&PClass::trivial_only()).reduced)
        }
        _ => None,
    };

    let all_edges_nontrivial = match spec.family {
        ExampleFamily::SharpTorsion | ExampleFamily::SharpFree => sp
            .edge_ids()
            .iter()
            .all(|&e| !sp.edge(e).group.kurosh_profile().is_trivial()),
        _ => true,
    };

    // Acylindricity at the claimed parameter, per-orbit balls.
    let cfg = verification_ball_config(spec.expected_acyl_k);
    let mut acyl_pass = true;
    let mut balls = Vec::new();
    for v in sp.vertex_ids() {
        let ball = expand_ball(sp, v, &cfg);
        let verdict = ball.check_acylindricity(spec.expected_acyl_k, &spec.expected_class);
        if verdict.status == VerdictStatus::Fail {
            acyl_pass = false;
            notes.push(format!(
                "acylindricity failed at k={} from orbit {}",
                spec.expected_acyl_k, v
            ));
        }
        balls.push(ball);
    }

    // Sharp families: failure witness at k-1 and exact fixed-set diameter.
    let mut sharpness = None;
    let mut fixed_diameter = None;
    let mut expected_fixed = None;
    if matches!(
        spec.family,
        ExampleFamily::SharpTorsion | ExampleFamily::SharpFree
    ) {
        let k = spec.k;
        let mut failed = false;
        for ball in &balls {
            let verdict = ball.check_acylindricity(k - 1, &QClass::AllNontrivial);
            if verdict.status == VerdictStatus::Fail {
                // The witness stabilizer must contain a conjugate of a power
                // of a (possibly translated); record its description.
                failed = true;
                break;
            }
        }
        sharpness = Some(failed);
        // Fixed set of the a-powers around the marked vertex.
        let pres = sp.presentation();
        let a = Word::parse(pres, "a").unwrap();
        let ball = expand_ball(sp, built.a_vertex, &cfg);
        let mut best = 0;
        match built.primes {
            Some((p, q)) => {
                for m in 1..(p * q) {
                    let fix = ball.fixed_set(&a.pow(pres, m as i64));
                    best = best.max(fix.diameter());
                }
            }
            None => {
                let fix = ball.fixed_set(&a);
                best = best.max(fix.diameter());
            }
        }
        fixed_diameter = Some(best);
        expected_fixed = Some(k);
    }

    // Schedule replay lands on the built splitting.
    let replay_ok = match replay_schedule(&built.start, &built.schedule) {
        Ok((sp2, ledger)) => ledger.consistent() && sp2.isomorphic(sp),
        Err(e) => {
            notes.push(format!("replay error: {}", e));
            false
        }
    };

    VerificationReport {
        family: spec.family,
        edge_count_ok,
        edge_count,
        expected_edges: spec.expected_edges,
        reduced_ok,
        all_edges_nontrivial,
        acyl_pass,
        sharpness_fail_at_k_minus_1: sharpness,
        fixed_diameter,
        expected_fixed_diameter: expected_fixed,
        replay_ok,
        notes,
    }
}
