//! Cooperative-game tooling for MEV rebate design and auditing.
//!
//! The crate is organized around a dense characteristic-function [`game::Game`]:
//!
//! - [`game`] — games over subset bitmasks, the unanimity base, classification.
//! - [`sybil`] — copy/split identity extensions, player merges (reduced and
//!   collusion games).
//! - [`ops`] — value operators (Shapley, Banzhaf, theta, psi, psi-bar,
//!   pro-rata), Sybil attack search, and axiom audits.
//! - [`prior`] — the prior-optimal symmetric rebate linear program.
//! - [`cfmm`] — constant-function market makers, arbitrage, and the induced
//!   liquidity-provision games.
//! - [`auction`] — block-space auction mechanisms with threshold payments.
//! - [`checks`] — the built-in reference regression suite backing the CLI
//!   `paper-check` subcommand and the acceptance tests.

pub mod auction;
pub mod cfmm;
pub mod checks;
pub mod game;
pub mod ops;
pub mod prior;
pub mod sample;
pub mod sybil;

pub use game::{Coalition, Game, GameError, RebateVector};
