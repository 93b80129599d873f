//! Workbench for group actions on trees over free products of cyclic groups:
//! folded subgroup automata, graphs of groups, Stallings fold moves,
//! Bass-Serre balls with acylindricity certificates, seed-vertex weight
//! accounting, and the explicit sharp constructions.

pub mod automaton;
pub mod testkit;
pub mod word;

pub mod ball;
pub mod constructions;
pub mod driver;
pub mod fold;
pub mod influence;
pub mod limits;
pub mod mapdecomp;
pub mod pclass;
pub mod splitting;

pub use automaton::{KuroshProfile, SubgroupRep};
pub use pclass::{PClass, PClassKind, Weight};
pub use splitting::{Cell, EdgeCell, EdgeId, End, Splitting, VertexId};
pub use word::{Presentation, Word, WordError};
