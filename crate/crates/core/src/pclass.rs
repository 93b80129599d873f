//! Subgroup classes with chain weights.
//!
//! A class `P` of subgroups (closed under conjugation) assigns each subgroup
//! `K` the weight `2^n` where `n` is the length of the longest chain
//! `K <= H_1 < H_2 < ... < H_n` with every `H_i` in `P`. Weight 1 means `K`
//! is larger than `P` (contained in no member). The chain search is exact
//! for the shipped classes because cyclic overgroups in a free product of
//! cyclic groups form computable root/divisor lattices.

use crate::automaton::SubgroupRep;
use crate::word::{prime_factor_count, Presentation, Word};
use std::fmt;

/// A chain weight: a power of two, or infinite when unbounded chains exist.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Weight {
    Finite(u64),
    Infinite,
}

impl Weight {
    pub fn pow2(n: u32) -> Weight {
        Weight::Finite(1u64 << n)
    }

    pub fn add(self, other: Weight) -> Weight {
        match (self, other) {
            (Weight::Finite(a), Weight::Finite(b)) => Weight::Finite(a + b),
            _ => Weight::Infinite,
        }
    }

    pub fn is_one(self) -> bool {
        self == Weight::Finite(1)
    }

    pub fn as_finite(self) -> Option<u64> {
        match self {
            Weight::Finite(v) => Some(v),
            Weight::Infinite => None,
        }
    }
}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Weight {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (Weight::Finite(a), Weight::Finite(b)) => a.cmp(b),
            (Weight::Finite(_), Weight::Infinite) => std::cmp::Ordering::Less,
            (Weight::Infinite, Weight::Finite(_)) => std::cmp::Ordering::Greater,
            (Weight::Infinite, Weight::Infinite) => std::cmp::Ordering::Equal,
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Finite(v) => write!(f, "{}", v),
            Weight::Infinite => write!(f, "inf"),
        }
    }
}

/// Condition flags for classes not closed under taking subgroups.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DaggerFlags {
    pub finite_height: bool,
    pub elliptic_minimal_extensions: bool,
    pub intersection_closed: bool,
}

impl DaggerFlags {
    pub fn all(self) -> bool {
        self.finite_height && self.elliptic_minimal_extensions && self.intersection_closed
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PClassKind {
    /// Only the trivial subgroup; height 1.
    TrivialOnly,
    /// All cyclic subgroups (finite or infinite).
    Cyclic,
    /// Finite subgroups whose order has at most the given number of prime
    /// factors, counted with multiplicity.
    FinitePrimeFactors(u32),
    /// Root-closed cyclic subgroups.
    MaximalCyclic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PClass {
    pub kind: PClassKind,
}

impl fmt::Display for PClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PClassKind::TrivialOnly => write!(f, "trivial"),
            PClassKind::Cyclic => write!(f, "cyclic"),
            PClassKind::FinitePrimeFactors(m) => write!(f, "prime-factors:{}", m),
            PClassKind::MaximalCyclic => write!(f, "maximal-cyclic"),
        }
    }
}

impl PClass {
    pub fn trivial_only() -> PClass {
        PClass {
            kind: PClassKind::TrivialOnly,
        }
    }

    pub fn cyclic() -> PClass {
        PClass {
            kind: PClassKind::Cyclic,
        }
    }

    pub fn finite_prime_factors(m: u32) -> PClass {
        PClass {
            kind: PClassKind::FinitePrimeFactors(m),
        }
    }

    pub fn maximal_cyclic() -> PClass {
        PClass {
            kind: PClassKind::MaximalCyclic,
        }
    }

    pub fn parse(text: &str) -> Option<PClass> {
        match text {
            "trivial" => Some(PClass::trivial_only()),
            "cyclic" => Some(PClass::cyclic()),
            "maximal-cyclic" => Some(PClass::maximal_cyclic()),
            _ => {
                let m = text.strip_prefix("prime-factors:")?.parse().ok()?;
                Some(PClass::finite_prime_factors(m))
            }
        }
    }

    pub fn closed_under_subgroups(&self) -> bool {
        match self.kind {
            PClassKind::TrivialOnly | PClassKind::Cyclic | PClassKind::FinitePrimeFactors(_) => {
                true
            }
            PClassKind::MaximalCyclic => false,
        }
    }

    /// Membership of a subgroup in the class.
    pub fn member(&self, k: &SubgroupRep) -> bool {
        let profile = k.kurosh_profile();
        match self.kind {
            PClassKind::TrivialOnly => profile.is_trivial(),
            PClassKind::Cyclic => profile.is_cyclic(),
            PClassKind::FinitePrimeFactors(m) => match profile.finite_order() {
                Some(order) => prime_factor_count(order) <= m,
                None => false,
            },
            PClassKind::MaximalCyclic => {
                if profile.is_trivial() || !profile.is_cyclic() {
                    return false;
                }
                let g = &k.generators()[0];
                g.is_root_closed_generator(k.presentation())
            }
        }
    }

    /// Height of the class over the given ambient group: the weight of the
    /// trivial subgroup is `2^M`.
    pub fn height(&self, pres: &Presentation) -> Weight {
        self.weight_of_trivial(pres)
    }

    fn weight_of_trivial(&self, pres: &Presentation) -> Weight {
        match self.kind {
            PClassKind::TrivialOnly => Weight::pow2(1),
            PClassKind::Cyclic => {
                if pres.has_infinite_order_element() {
                    Weight::Infinite
                } else {
                    // Single finite factor Z/n: divisor chains above 1.
                    let n = pres.order(0) as u64;
                    Weight::pow2(1 + prime_factor_count(n))
                }
            }
            PClassKind::FinitePrimeFactors(m) => {
                let best = (0..pres.rank())
                    .filter(|&g| pres.order(g) > 0)
                    .map(|g| prime_factor_count(pres.order(g) as u64).min(m))
                    .max()
                    .unwrap_or(0);
                Weight::pow2(1 + best)
            }
            PClassKind::MaximalCyclic => Weight::pow2(1),
        }
    }

    /// Condition-dagger flags over the given ambient group.
    pub fn dagger(&self, pres: &Presentation) -> DaggerFlags {
        let finite_height = self.height(pres) != Weight::Infinite;
        match self.kind {
            // Subgroup-closed classes are intersection closed, and a minimal
            // extension of K is K itself.
            PClassKind::TrivialOnly | PClassKind::FinitePrimeFactors(_) => DaggerFlags {
                finite_height,
                elliptic_minimal_extensions: true,
                intersection_closed: true,
            },
            PClassKind::Cyclic => DaggerFlags {
                finite_height,
                elliptic_minimal_extensions: true,
                intersection_closed: true,
            },
            // Root closure is the unique minimal extension and it contains
            // the original with finite index, hence acts elliptically.
            PClassKind::MaximalCyclic => DaggerFlags {
                finite_height: true,
                elliptic_minimal_extensions: true,
                intersection_closed: true,
            },
        }
    }

    /// Chain weight of a subgroup.
    pub fn p_weight(&self, k: &SubgroupRep) -> Weight {
        let pres = k.presentation();
        let profile = k.kurosh_profile();
        match self.kind {
            PClassKind::TrivialOnly => {
                if profile.is_trivial() {
                    Weight::pow2(1)
                } else {
                    Weight::Finite(1)
                }
            }
            PClassKind::Cyclic => {
                if profile.is_trivial() {
                    return self.weight_of_trivial(pres);
                }
                if !profile.is_cyclic() {
                    return Weight::Finite(1);
                }
                let w = &k.generators()[0];
                let (core, _) = w.cyclically_reduce(pres);
                if core.syllable_count() == 1 {
                    let (g, e) = core.syllables()[0];
                    let n = pres.order(g);
                    if n > 0 {
                        // <g^e> = <g^d>: divisor chains from d up to 1.
                        let d = crate::word::gcd(e as u64, n as u64);
                        return Weight::pow2(1 + prime_factor_count(d));
                    }
                }
                // Infinite-order generator: chains follow the root ladder.
                let (_, m) = w.primitive_root(pres);
                Weight::pow2(1 + prime_factor_count(m))
            }
            PClassKind::FinitePrimeFactors(max_pf) => {
                if profile.is_trivial() {
                    return self.weight_of_trivial(pres);
                }
                let order = match profile.finite_order() {
                    Some(o) => o,
                    None => return Weight::Finite(1),
                };
                if prime_factor_count(order) > max_pf {
                    return Weight::Finite(1);
                }
                // K = <g^e>^c inside the factor <g> of order n: overgroup
                // orders o with order | o | n and at most max_pf primes.
                let w = &k.generators()[0];
                let (core, _) = w.cyclically_reduce(pres);
                debug_assert_eq!(core.syllable_count(), 1);
                let (g, _) = core.syllables()[0];
                let n = pres.order(g) as u64;
                let room = prime_factor_count(n) - prime_factor_count(order);
                let steps = room.min(max_pf - prime_factor_count(order));
                Weight::pow2(1 + steps)
            }
            PClassKind::MaximalCyclic => {
                if profile.is_cyclic() {
                    Weight::pow2(1)
                } else {
                    Weight::Finite(1)
                }
            }
        }
    }

    /// True when the subgroup is contained in no member of the class.
    pub fn larger_than(&self, k: &SubgroupRep) -> bool {
        self.p_weight(k).is_one()
    }

    /// A minimal extension of `k` to the class, when one exists and is
    /// computable: for subgroup-closed classes this is `k` itself (when a
    /// member), for the maximal-cyclic class it is the root closure.
    pub fn minimal_extension(&self, k: &SubgroupRep) -> Option<SubgroupRep> {
        if self.member(k) {
            return Some(k.clone());
        }
        match self.kind {
            PClassKind::MaximalCyclic => {
                let profile = k.kurosh_profile();
                if !profile.is_cyclic() {
                    return None;
                }
                let pres = k.presentation();
                if profile.is_trivial() {
                    return None; // every maximal cyclic works; no canonical one
                }
                let w = &k.generators()[0];
                let (root, _) = w.primitive_root(pres);
                Some(SubgroupRep::from_generators(&[root], pres))
            }
            _ => None,
        }
    }

    /// Weight of the subgroup generated by a single word (convenience).
    pub fn word_weight(&self, pres: &Presentation, w: &Word) -> Weight {
        self.p_weight(&SubgroupRep::from_generators(&[w.clone()], pres))
    }
}
