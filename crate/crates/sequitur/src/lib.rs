//! Incremental inference of a hierarchical straight-line grammar from a
//! sequence of discrete symbols.
//!
//! The engine maintains two constraints as symbols stream in:
//!
//! * **digram uniqueness** — no pair of adjacent symbols appears more than
//!   once across all right-hand sides; a repeated pair is replaced by a
//!   rule reference, creating the rule if necessary.
//! * **rule utility** — every rule other than the start rule is referenced
//!   at least twice; a rule whose reference count falls to one is inlined
//!   at its remaining use and deleted.
//!
//! Together these yield a grammar that generates exactly the input seen so
//! far, exposes its repeated phrase structure as rule nesting, and is
//! maintained in amortized linear time.
//!
//! ```
//! use sequitur::{Grammar, TokenId};
//!
//! let mut g = Grammar::new();
//! for b in "abcdbc".bytes() {
//!     g.append_terminal(TokenId(b as u32));
//! }
//! // the repeated "bc" became a rule
//! assert_eq!(g.rule_ids().len(), 2);
//! assert_eq!(
//!     sequitur::analysis::expand(&g).unwrap(),
//!     "abcdbc".bytes().map(|b| TokenId(b as u32)).collect::<Vec<_>>()
//! );
//! ```

#![forbid(unsafe_code)]

pub mod analysis;
pub mod digram;
pub mod engine;
pub mod grammar;
pub mod render;
pub mod testkit;
pub mod tokenize;

pub use digram::{Digram, DigramIndex, HashMixer, InsertOutcome};
pub use engine::ActionCounters;
pub use grammar::{Grammar, GrammarError, NodeHandle, RuleId, SymbolValue, TokenId};
pub use tokenize::{TokenMode, TokenTable};
