//! Syllable normal forms for free products of cyclic groups.
//!
//! An ambient group is a free product of cyclic groups, one factor per
//! generator. A generator either has infinite order (written `g:0` in the
//! text format) or finite order `n >= 2` (`g:n`). Elements are kept in
//! syllable normal form: adjacent syllables use distinct generators, no
//! exponent is zero, and a finite-order generator carries an exponent in
//! `1..n-1`.

use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("unknown generator symbol `{0}`")]
    UnknownSymbol(String),
    #[error("malformed word token `{0}`")]
    BadToken(String),
    #[error("generator order must be 0 (infinite) or at least 2, got {0}")]
    BadOrder(u32),
    #[error("duplicate generator symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("empty presentation")]
    EmptyPresentation,
    #[error("malformed presentation line `{0}`")]
    BadPresentationLine(String),
}

/// Ambient group: an ordered list of cyclic factors.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Presentation {
    gens: Vec<(String, u32)>,
}

impl fmt::Debug for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .gens
            .iter()
            .map(|(s, n)| format!("{}:{}", s, n))
            .collect();
        write!(f, "<{}>", parts.join(" "))
    }
}

impl Presentation {
    pub fn new(gens: &[(&str, u32)]) -> Result<Self, WordError> {
        if gens.is_empty() {
            return Err(WordError::EmptyPresentation);
        }
        let mut seen = std::collections::BTreeSet::new();
        for (s, n) in gens {
            if *n == 1 {
                return Err(WordError::BadOrder(*n));
            }
            if !seen.insert(s.to_string()) {
                return Err(WordError::DuplicateSymbol(s.to_string()));
            }
        }
        Ok(Presentation {
            gens: gens.iter().map(|(s, n)| (s.to_string(), *n)).collect(),
        })
    }

    /// Free group of the given rank over symbols `a`, `b`, ... or `x0`, `x1`, ...
    pub fn free(rank: usize) -> Self {
        let names: Vec<String> = if rank <= 8 {
            ["a", "b", "c", "d", "e", "f", "g", "h"][..rank]
                .iter()
                .map(|s| s.to_string())
                .collect()
        } else {
            (0..rank).map(|i| format!("x{}", i)).collect()
        };
        Presentation {
            gens: names.into_iter().map(|s| (s, 0)).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.gens.len()
    }

    /// Order of generator `g`; 0 means infinite.
    pub fn order(&self, g: usize) -> u32 {
        self.gens[g].1
    }

    pub fn symbol(&self, g: usize) -> &str {
        &self.gens[g].0
    }

    pub fn gen_index(&self, symbol: &str) -> Option<usize> {
        self.gens.iter().position(|(s, _)| s == symbol)
    }

    pub fn is_torsion_free(&self) -> bool {
        self.gens.iter().all(|(_, n)| *n == 0)
    }

    pub fn has_infinite_order_element(&self) -> bool {
        // Any infinite factor, or at least two factors (e.g. the product of
        // the first generators of two finite factors has infinite order).
        self.gens.iter().any(|(_, n)| *n == 0) || self.gens.len() >= 2
    }

    /// The same symbols with every order forced to 0. Used as the domain of
    /// the natural surjection from the free group on the generators.
    pub fn free_version(&self) -> Presentation {
        Presentation {
            gens: self.gens.iter().map(|(s, _)| (s.clone(), 0)).collect(),
        }
    }

    pub fn generator_word(&self, g: usize) -> Word {
        Word::from_syllables(self, vec![(g, 1)])
    }

    /// One `symbol:order` line per generator.
    pub fn to_text(&self) -> String {
        self.gens
            .iter()
            .map(|(s, n)| format!("{}:{}", s, n))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn parse(text: &str) -> Result<Self, WordError> {
        let mut gens = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (sym, ord) = line
                .split_once(':')
                .ok_or_else(|| WordError::BadPresentationLine(line.to_string()))?;
            let n: u32 = ord
                .trim()
                .parse()
                .map_err(|_| WordError::BadPresentationLine(line.to_string()))?;
            gens.push((sym.trim().to_string(), n));
        }
        let refs: Vec<(&str, u32)> = gens.iter().map(|(s, n)| (s.as_str(), *n)).collect();
        Presentation::new(&refs)
    }
}

/// A single syllable `gen^exp`.
pub type Syllable = (usize, i64);

/// A group element in syllable normal form.
#[derive(Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Word {
    syls: Vec<Syllable>,
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.syls.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .syls
            .iter()
            .map(|(g, e)| {
                if *e == 1 {
                    format!("g{}", g)
                } else {
                    format!("g{}^{}", g, e)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

fn canonical_exp(p: &Presentation, g: usize, e: i64) -> i64 {
    let n = p.order(g);
    if n == 0 {
        e
    } else {
        e.rem_euclid(n as i64)
    }
}

impl Word {
    pub fn identity() -> Word {
        Word::default()
    }

    pub fn is_identity(&self) -> bool {
        self.syls.is_empty()
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.syls
    }

    pub fn syllable_count(&self) -> usize {
        self.syls.len()
    }

    /// Normalize an arbitrary syllable sequence.
    pub fn from_syllables(p: &Presentation, raw: Vec<Syllable>) -> Word {
        let mut stack: Vec<Syllable> = Vec::with_capacity(raw.len());
        for (g, e) in raw {
            let e = canonical_exp(p, g, e);
            if e == 0 {
                continue;
            }
            match stack.last().copied() {
                Some((tg, te)) if tg == g => {
                    stack.pop();
                    let merged = canonical_exp(p, g, te + e);
                    if merged != 0 {
                        // The exposed top has a distinct generator by the
                        // stack invariant, so a single push suffices.
                        stack.push((g, merged));
                    }
                }
                _ => stack.push((g, e)),
            }
        }
        Word { syls: stack }
    }

    pub fn single(p: &Presentation, g: usize, e: i64) -> Word {
        Word::from_syllables(p, vec![(g, e)])
    }

    pub fn mul(&self, p: &Presentation, other: &Word) -> Word {
        let mut raw = Vec::with_capacity(self.syls.len() + other.syls.len());
        raw.extend_from_slice(&self.syls);
        raw.extend_from_slice(&other.syls);
        Word::from_syllables(p, raw)
    }

    pub fn inverse(&self, p: &Presentation) -> Word {
        let raw: Vec<Syllable> = self.syls.iter().rev().map(|&(g, e)| (g, -e)).collect();
        Word::from_syllables(p, raw)
    }

    pub fn pow(&self, p: &Presentation, k: i64) -> Word {
        let base = if k < 0 { self.inverse(p) } else { self.clone() };
        let mut acc = Word::identity();
        for _ in 0..k.unsigned_abs() {
            acc = acc.mul(p, &base);
        }
        acc
    }

    /// `self * w * self^-1`.
    pub fn conj(&self, p: &Presentation, w: &Word) -> Word {
        self.mul(p, w).mul(p, &self.inverse(p))
    }

    /// Geodesic letter length: a finite-order syllable `g^e` costs
    /// `min(e, n-e)`, an infinite-order one costs `|e|`.
    pub fn weight(&self, p: &Presentation) -> u64 {
        self.syls
            .iter()
            .map(|&(g, e)| {
                let n = p.order(g);
                if n == 0 {
                    e.unsigned_abs()
                } else {
                    let e = e as u64;
                    e.min(n as u64 - e)
                }
            })
            .sum()
    }

    /// Total order used for canonical representatives: weight, then syllable
    /// count, then lexicographic on (gen, exponent key).
    pub fn shortlex_key(&self, p: &Presentation) -> (u64, usize, Vec<(usize, u64, i64)>) {
        let lex: Vec<(usize, u64, i64)> = self
            .syls
            .iter()
            .map(|&(g, e)| {
                let n = p.order(g);
                let mag = if n == 0 {
                    e.unsigned_abs()
                } else {
                    (e as u64).min(n as u64 - e as u64)
                };
                (g, mag, -e) // positive exponent preferred on ties
            })
            .collect();
        (self.weight(p), self.syls.len(), lex)
    }

    /// Cyclically reduce: returns `(core, c)` with `self = c * core * c^-1`
    /// and `core` cyclically reduced (first and last syllables use distinct
    /// generators, or at most one syllable).
    pub fn cyclically_reduce(&self, p: &Presentation) -> (Word, Word) {
        let mut core = self.clone();
        let mut conj = Word::identity();
        loop {
            if core.syls.len() < 2 {
                return (core, conj);
            }
            let first = core.syls[0];
            let last = *core.syls.last().unwrap();
            if first.0 != last.0 {
                return (core, conj);
            }
            // core = s * u * t with s,t on the same generator: conjugate by s.
            let s = Word::single(p, first.0, first.1);
            conj = conj.mul(p, &s);
            let mut mid: Vec<Syllable> = core.syls[1..core.syls.len() - 1].to_vec();
            mid.push((last.0, last.1 + first.1));
            core = Word::from_syllables(p, mid);
        }
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.syls.len() < 2 || self.syls[0].0 != self.syls.last().unwrap().0
    }

    /// Exact conjugacy test for single elements. Cyclically reduced words are
    /// conjugate iff their syllable sequences are rotations of each other.
    pub fn is_conjugate(&self, p: &Presentation, other: &Word) -> bool {
        let (a, _) = self.cyclically_reduce(p);
        let (b, _) = other.cyclically_reduce(p);
        if a.syls.len() != b.syls.len() {
            return false;
        }
        if a.syls.len() <= 1 {
            return a == b;
        }
        let n = a.syls.len();
        (0..n).any(|r| (0..n).all(|i| a.syls[(i + r) % n] == b.syls[i]))
    }

    /// Maximal root: returns `(root, m)` with `self` conjugate-equal to
    /// `root^m` exactly (same element, not just conjugate), `m` maximal for
    /// words of infinite order. For a single finite-order syllable the root
    /// is the syllable of the generating exponent `gcd(e, n)`.
    pub fn primitive_root(&self, p: &Presentation) -> (Word, u64) {
        if self.is_identity() {
            return (Word::identity(), 0);
        }
        let (core, c) = self.cyclically_reduce(p);
        if core.syls.len() == 1 {
            let (g, e) = core.syls[0];
            let n = p.order(g);
            if n == 0 {
                let root = Word::single(p, g, e.signum());
                let m = e.unsigned_abs();
                return (c.conj(p, &root), m);
            } else {
                // Torsion syllable: the canonical root is the conjugated
                // factor generator, so elements of a common conjugate factor
                // report a common root. w = (c g c^-1)^e exactly.
                let root = Word::single(p, g, 1);
                return (c.conj(p, &root), e as u64);
            }
        }
        let n = core.syls.len();
        for period in 1..=n {
            if n % period != 0 {
                continue;
            }
            let m = n / period;
            if m == 1 {
                break;
            }
            // Candidate root = first `period` syllables; verify core == root^m.
            let root = Word {
                syls: core.syls[..period].to_vec(),
            };
            let mut acc = Word::identity();
            for _ in 0..m {
                acc = acc.mul(p, &root);
            }
            if acc == core {
                return (c.conj(p, &root), m as u64);
            }
        }
        (self.clone(), 1)
    }

    /// True when the cyclic subgroup generated by this word is root-closed
    /// (the word is not a proper power and, for torsion words, generates the
    /// full finite factor it meets).
    pub fn is_root_closed_generator(&self, p: &Presentation) -> bool {
        if self.is_identity() {
            return false;
        }
        let (core, _) = self.cyclically_reduce(p);
        if core.syls.len() == 1 {
            let (g, e) = core.syls[0];
            let n = p.order(g);
            if n == 0 {
                return e.abs() == 1;
            }
            return gcd(e as u64, n as u64) == 1;
        }
        let (_, m) = self.primitive_root(p);
        m == 1
    }

    pub fn to_text(&self, p: &Presentation) -> String {
        if self.syls.is_empty() {
            return "1".to_string();
        }
        self.syls
            .iter()
            .map(|&(g, e)| {
                if e == 1 {
                    p.symbol(g).to_string()
                } else {
                    format!("{}^{}", p.symbol(g), e)
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn parse(p: &Presentation, text: &str) -> Result<Word, WordError> {
        let mut raw = Vec::new();
        for tok in text.split_whitespace() {
            if tok == "1" {
                continue;
            }
            let (sym, exp) = match tok.split_once('^') {
                Some((s, e)) => {
                    let e: i64 = e.parse().map_err(|_| WordError::BadToken(tok.into()))?;
                    (s, e)
                }
                None => (tok, 1),
            };
            let g = p
                .gen_index(sym)
                .ok_or_else(|| WordError::UnknownSymbol(sym.to_string()))?;
            raw.push((g, exp));
        }
        Ok(Word::from_syllables(p, raw))
    }
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Number of prime factors counted with multiplicity.
pub fn prime_factor_count(mut n: u64) -> u32 {
    let mut count = 0;
    let mut d = 2;
    while d * d <= n {
        while n % d == 0 {
            count += 1;
            n /= d;
        }
        d += 1;
    }
    if n > 1 {
        count += 1;
    }
    count
}

/// Shortlex comparison of two words.
pub fn shortlex_min(p: &Presentation, a: Word, b: Word) -> Word {
    if b.shortlex_key(p) < a.shortlex_key(p) {
        b
    } else {
        a
    }
}

/// Enumerate every normal-form element of the ambient group with geodesic
/// weight at most `max_weight`, including the identity. Deterministic order.
pub fn enumerate_ambient(p: &Presentation, max_weight: u64) -> Vec<Word> {
    let mut out = vec![Word::identity()];
    let mut stack: Vec<Syllable> = Vec::new();
    fn rec(
        p: &Presentation,
        stack: &mut Vec<Syllable>,
        used: u64,
        max: u64,
        out: &mut Vec<Word>,
    ) {
        let prev = stack.last().map(|&(g, _)| g);
        for g in 0..p.rank() {
            if Some(g) == prev {
                continue;
            }
            let n = p.order(g);
            if n == 0 {
                let rem = max - used;
                for mag in 1..=rem {
                    for sign in [1i64, -1] {
                        stack.push((g, sign * mag as i64));
                        out.push(Word {
                            syls: stack.clone(),
                        });
                        rec(p, stack, used + mag, max, out);
                        stack.pop();
                    }
                }
            } else {
                for e in 1..n as i64 {
                    let cost = (e as u64).min(n as u64 - e as u64);
                    if used + cost > max {
                        continue;
                    }
                    stack.push((g, e));
                    out.push(Word {
                        syls: stack.clone(),
                    });
                    rec(p, stack, used + cost, max, out);
                    stack.pop();
                }
            }
        }
    }
    rec(p, &mut stack, 0, max_weight, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c2_free() -> Presentation {
        Presentation::new(&[("a", 2), ("b", 0)]).unwrap()
    }

    #[test]
    fn normalize_torsion_power() {
        // a a a over <a | a^2> is a
        let p = c2_free();
        let w = Word::from_syllables(&p, vec![(0, 1), (0, 1), (0, 1)]);
        assert_eq!(w, Word::single(&p, 0, 1));
    }

    #[test]
    fn normalize_empty_is_identity() {
        let p = c2_free();
        assert!(Word::from_syllables(&p, vec![]).is_identity());
        assert!(Word::from_syllables(&p, vec![(0, 2)]).is_identity());
    }

    #[test]
    fn normalize_order_eight_example() {
        // "b a^2 b^2" with a of order 8 stays [(b,1),(a,2),(b,2)]
        let p = Presentation::new(&[("a", 8), ("b", 0)]).unwrap();
        let w = Word::parse(&p, "b a^2 b^2").unwrap();
        assert_eq!(w.syllables(), &[(1, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn normalize_is_idempotent_on_random_inputs() {
        let p = Presentation::new(&[("a", 6), ("b", 0), ("c", 3)]).unwrap();
        // Oracle: stack-of-letters multiplication, written independently of
        // the syllable normalizer. Letters are (gen, +-1).
        fn letter_reduce(p: &Presentation, letters: &[(usize, i64)]) -> Vec<(usize, i64)> {
            let mut st: Vec<(usize, i64)> = Vec::new();
            for &(lg, le) in letters {
                let n = p.order(lg) as i64;
                let le = if n == 0 { le } else { le.rem_euclid(n) };
                if le == 0 {
                    continue;
                }
                st.push((lg, le));
                loop {
                    let m = st.len();
                    if m >= 2 && st[m - 1].0 == st[m - 2].0 {
                        let g = st[m - 1].0;
                        let s = st[m - 1].1 + st[m - 2].1;
                        st.truncate(m - 2);
                        let n = p.order(g) as i64;
                        let s = if n == 0 { s } else { s.rem_euclid(n) };
                        if s != 0 {
                            st.push((g, s));
                        }
                    } else {
                        break;
                    }
                }
            }
            st
        }
        let mut seed = 0x9e3779b97f4a7c15u64;
        for _ in 0..500 {
            let mut letters = Vec::new();
            for _ in 0..12 {
                seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
                let g = (seed >> 33) as usize % 3;
                let e = if (seed >> 17) & 1 == 0 { 1 } else { -1 };
                letters.push((g, e));
            }
            let w = Word::from_syllables(&p, letters.clone());
            let oracle = letter_reduce(&p, &letters);
            assert_eq!(w.syllables(), &oracle[..], "letters {:?}", letters);
            // idempotence
            let w2 = Word::from_syllables(&p, w.syllables().to_vec());
            assert_eq!(w, w2);
        }
    }

    #[test]
    fn inverse_and_mul() {
        let p = Presentation::new(&[("a", 8), ("b", 0)]).unwrap();
        let w = Word::parse(&p, "b a^2 b^-3 a").unwrap();
        let inv = w.inverse(&p);
        assert!(w.mul(&p, &inv).is_identity());
        assert!(inv.mul(&p, &w).is_identity());
        // finite-order inverse exponent canonicalization: (a^2)^-1 = a^6
        let a2 = Word::parse(&p, "a^2").unwrap();
        assert_eq!(a2.inverse(&p), Word::parse(&p, "a^6").unwrap());
    }

    #[test]
    fn cyclic_reduction_and_conjugacy() {
        let p = Presentation::free(2);
        let w = Word::parse(&p, "a b a b^-1 a^-1").unwrap();
        let (core, c) = w.cyclically_reduce(&p);
        assert!(core.is_cyclically_reduced());
        assert_eq!(c.conj(&p, &core), w);
        let u = Word::parse(&p, "b a b^-1 a^-1 a").unwrap(); // rotation
        assert!(w.is_conjugate(&p, &u));
        assert!(!w.is_conjugate(&p, &Word::parse(&p, "a b").unwrap()));
    }

    #[test]
    fn primitive_roots() {
        let p = Presentation::free(2);
        let w = Word::parse(&p, "a b a b a b").unwrap();
        let (root, m) = w.primitive_root(&p);
        assert_eq!(m, 3);
        assert_eq!(root, Word::parse(&p, "a b").unwrap());
        assert!(Word::parse(&p, "a b^2").unwrap().is_root_closed_generator(&p));
        assert!(!w.is_root_closed_generator(&p));

        let q = Presentation::new(&[("a", 8), ("b", 0)]).unwrap();
        // Torsion elements of a common conjugate factor share their root.
        let a6 = Word::parse(&q, "a^6").unwrap();
        let (root, m) = a6.primitive_root(&q);
        assert_eq!(root, Word::parse(&q, "a").unwrap());
        assert_eq!(m, 6);
        let conj = Word::parse(&q, "b a^3 b^-1").unwrap();
        let (root2, _) = conj.primitive_root(&q);
        assert_eq!(root2, Word::parse(&q, "b a b^-1").unwrap());
        assert!(Word::parse(&q, "a^3").unwrap().is_root_closed_generator(&q));
        assert!(!a6.is_root_closed_generator(&q));
    }

    #[test]
    fn enumerate_counts_free_group() {
        let p = Presentation::free(2);
        // Ball of radius 2 in F2: 1 + 4 + 12 = 17.
        assert_eq!(enumerate_ambient(&p, 2).len(), 17);
        // All distinct.
        let v = enumerate_ambient(&p, 3);
        let s: std::collections::BTreeSet<_> = v.iter().cloned().collect();
        assert_eq!(v.len(), s.len());
    }

    #[test]
    fn enumerate_counts_finite_cyclic() {
        let p = Presentation::new(&[("a", 6)]).unwrap();
        let v = enumerate_ambient(&p, 10);
        assert_eq!(v.len(), 6);
    }

    #[test]
    fn parse_format_roundtrip() {
        let p = Presentation::new(&[("a", 8), ("b", 0)]).unwrap();
        for text in ["1", "a", "a^2 b^-1 a^3", "b^5"] {
            let w = Word::parse(&p, text).unwrap();
            assert_eq!(Word::parse(&p, &w.to_text(&p)).unwrap(), w);
        }
        assert!(Word::parse(&p, "z").is_err());
    }
}
