//! Word measures on finite groups, Stallings core graphs, algebraic
//! extensions of free groups and the arithmetic of permutation powers.

pub mod error;
pub mod extensions;
pub mod measures;
pub mod mobius;
pub mod perm_powers;
pub mod stallings;
pub mod words;

pub use error::{Error, Result};
pub use num::BigRational;
pub use stallings::CoreGraph;
pub use words::{parse, Word};
