//! Published `(G, H)` coordinates shipped with the crate.
//!
//! The optimized step functions for `n = 4..=9` are printed to four decimals,
//! so a few budget pairs exceed 1 by about `1e-4`. [`optimized`] returns them
//! verbatim; [`optimized_repaired`] applies [`GhPair::with_budget_repair`].

use crate::error::{domain, Result};
use crate::stepfn::GhPair;

pub const OPT4: &str = include_str!("../data/opt4.json");
pub const OPT5: &str = include_str!("../data/opt5.json");
pub const OPT6: &str = include_str!("../data/opt6.json");
pub const OPT7: &str = include_str!("../data/opt7.json");
pub const OPT8: &str = include_str!("../data/opt8.json");
pub const OPT9: &str = include_str!("../data/opt9.json");
pub const TABLE13: &str = include_str!("../data/table13.json");

/// Certified ratios reported alongside the optimized coordinates, `n = 4..=9`.
pub const OPTIMIZED_RATIOS: [(usize, f64); 6] =
    [(4, 0.6321), (5, 0.6389), (6, 0.6447), (7, 0.6487), (8, 0.6515), (9, 0.6537)];

/// Reported verification results for guessed step functions, `n = 7..=13`.
pub const VERIFIED_RATIOS: [(usize, f64); 7] =
    [(7, 0.6479), (8, 0.6506), (9, 0.6529), (10, 0.6549), (11, 0.6565), (12, 0.6575), (13, 0.6590)];

pub fn optimized(n: usize) -> Result<GhPair> {
    let src = match n {
        4 => OPT4,
        5 => OPT5,
        6 => OPT6,
        7 => OPT7,
        8 => OPT8,
        9 => OPT9,
        _ => return domain(format!("no optimized coordinates for n = {n}")),
    };
    GhPair::from_json(src)
}

pub fn optimized_repaired(n: usize) -> Result<GhPair> {
    Ok(optimized(n)?.with_budget_repair().0)
}

pub fn table13() -> GhPair {
    GhPair::from_json(TABLE13).expect("bundled table parses")
}
