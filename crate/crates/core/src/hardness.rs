//! Exact upper bounds for oblivious matching on small hard instances.
//!
//! The hidden graph is a fixed pattern placed on observable labels by a
//! uniformly random embedding. A query state is summarized by the multiset
//! of labelled graphs ("worlds") still consistent with every outcome,
//! restricted to the unmatched labels. With `U(W)` the total matched count
//! summed over the worlds of `W` under an optimal strategy,
//!
//! ```text
//! U(W) = max(0, max_{pairs ab, 0 < p} [ yes(W, ab) + U(W_yes) + U(W_no) ])
//! ```
//!
//! where `yes(W, ab)` counts worlds containing `ab`, `W_yes` keeps those
//! worlds with `a`, `b` removed and `W_no` keeps the others. Values are
//! integers, so the expected matching size is the exact rational
//! `U(W0) / |W0|`.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{domain, Error, Result};
use crate::ranking::vertex_greedy;

pub type Rational = BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HardFamily {
    /// The 2+2 warm-up instance, equal in shape to `BipartiteH(2)`.
    WarmupB4,
    /// `n` left and `n` right vertices; left `k` meets right `m` iff `m <= k`.
    BipartiteH(usize),
    /// `2n` vertices `u_1..u_2n`; `u_i u_j` is an edge iff `i` is odd and
    /// `i >= j - 1` (or the same with `i`, `j` swapped).
    GeneralHhat(usize),
}

impl std::str::FromStr for HardFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        if s == "warmup" {
            return Ok(Self::WarmupB4);
        }
        let parse = |digits: &str| digits.parse::<usize>().map_err(|_| Error::Domain(format!("unknown family {s}")));
        let fam = if let Some(d) = s.strip_prefix("hhat") {
            Self::GeneralHhat(parse(d)?)
        } else if let Some(d) = s.strip_prefix('h') {
            Self::BipartiteH(parse(d)?)
        } else {
            return domain(format!("unknown family {s}"));
        };
        fam.validate()?;
        Ok(fam)
    }
}

impl std::fmt::Display for HardFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::WarmupB4 => write!(f, "warmup"),
            Self::BipartiteH(n) => write!(f, "h{n}"),
            Self::GeneralHhat(n) => write!(f, "hhat{n}"),
        }
    }
}

impl HardFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::BipartiteH(n) | Self::GeneralHhat(n) if n < 2 => domain("family size must be at least 2"),
            Self::BipartiteH(n) if n > 6 => Err(Error::TooLarge(format!("h{n}: at most 6 per side"))),
            Self::GeneralHhat(n) if n > 4 => Err(Error::TooLarge(format!("hhat{n}: at most 8 vertices"))),
            _ => Ok(()),
        }
    }

    /// Size of a perfect matching.
    pub fn half(&self) -> usize {
        match *self {
            Self::WarmupB4 => 2,
            Self::BipartiteH(n) | Self::GeneralHhat(n) => n,
        }
    }

    pub fn vertex_count(&self) -> usize {
        2 * self.half()
    }

    pub fn is_bipartite(&self) -> bool {
        !matches!(self, Self::GeneralHhat(_))
    }

    /// Side of each label: 0 left, 1 right, 2 for the general family.
    /// Bipartite labels `0..n` are left, `n..2n` right.
    pub fn sides(&self) -> Vec<u8> {
        let n = self.half();
        if self.is_bipartite() {
            (0..2 * n).map(|x| u8::from(x >= n)).collect()
        } else {
            vec![2; 2 * n]
        }
    }

    /// Adjacency of the hidden pattern on identities `0..2n`, indexed like
    /// the labels.
    pub fn pattern(&self) -> Vec<Vec<bool>> {
        let n = self.half();
        let mut adj = vec![vec![false; 2 * n]; 2 * n];
        match *self {
            Self::WarmupB4 | Self::BipartiteH(_) => {
                for k in 0..n {
                    for m in 0..=k {
                        adj[k][n + m] = true;
                        adj[n + m][k] = true;
                    }
                }
            }
            Self::GeneralHhat(_) => {
                // 1-based i odd and j <= i + 1
                for i in 1..=2 * n {
                    for j in 1..=2 * n {
                        if i != j && i % 2 == 1 && j <= i + 1 {
                            adj[i - 1][j - 1] = true;
                            adj[j - 1][i - 1] = true;
                        }
                    }
                }
            }
        }
        adj
    }

    /// Every embedding as the label -> identity map.
    fn embeddings(&self) -> Vec<Vec<usize>> {
        let n = self.half();
        let mut out = Vec::new();
        if self.is_bipartite() {
            let perms = permutations(n);
            for pl in &perms {
                for pr in &perms {
                    out.push(pl.iter().copied().chain(pr.iter().map(|&j| n + j)).collect());
                }
            }
        } else {
            out = permutations(2 * n);
        }
        out
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else { break };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairStatus {
    Unqueried,
    Exists,
    Null,
}

/// Outcomes of the queries made so far, on the observable labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryState {
    family: HardFamily,
    outcomes: BTreeMap<(usize, usize), bool>,
}

impl QueryState {
    pub fn new(family: HardFamily) -> Result<Self> {
        family.validate()?;
        Ok(Self { family, outcomes: BTreeMap::new() })
    }

    pub fn family(&self) -> HardFamily {
        self.family
    }

    pub fn status(&self, a: usize, b: usize) -> PairStatus {
        match self.outcomes.get(&(a.min(b), a.max(b))) {
            None => PairStatus::Unqueried,
            Some(true) => PairStatus::Exists,
            Some(false) => PairStatus::Null,
        }
    }

    pub fn is_matched(&self, x: usize) -> bool {
        self.outcomes.iter().any(|(&(a, b), &e)| e && (a == x || b == x))
    }

    pub fn matched_count(&self) -> usize {
        self.outcomes.values().filter(|&&e| e).count()
    }

    /// Pairs that may still be queried: unqueried, both endpoints unmatched,
    /// and across sides for bipartite families.
    pub fn open_pairs(&self) -> Vec<(usize, usize)> {
        let sides = self.family.sides();
        let k = self.family.vertex_count();
        let mut out = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                let cross = sides[a] == 2 || sides[a] != sides[b];
                if cross && !self.is_matched(a) && !self.is_matched(b) && self.status(a, b) == PairStatus::Unqueried {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Records an outcome. Matched endpoints and repeated queries are
    /// rejected, which keeps existing pairs a matching.
    pub fn with_outcome(&self, a: usize, b: usize, exists: bool) -> Result<Self> {
        let (a, b) = (a.min(b), a.max(b));
        if !self.open_pairs().contains(&(a, b)) {
            return domain(format!("pair ({a}, {b}) cannot be queried in this state"));
        }
        let mut next = self.clone();
        next.outcomes.insert((a, b), exists);
        Ok(next)
    }

    fn consistent(&self, adj: &[Vec<bool>], emb: &[usize]) -> bool {
        self.outcomes.iter().all(|(&(a, b), &e)| adj[emb[a]][emb[b]] == e)
    }

    /// Number of embeddings agreeing with every outcome.
    pub fn consistent_embeddings(&self) -> u64 {
        let adj = self.family.pattern();
        self.family.embeddings().iter().filter(|e| self.consistent(&adj, e)).count() as u64
    }
}

/// Existence probability of every open pair under the uniform posterior
/// over consistent embeddings.
pub fn posterior(state: &QueryState) -> Result<Vec<((usize, usize), Rational)>> {
    let adj = state.family.pattern();
    let consistent: Vec<Vec<usize>> =
        state.family.embeddings().into_iter().filter(|e| state.consistent(&adj, e)).collect();
    if consistent.is_empty() {
        return Err(Error::Inconsistent);
    }
    let total = BigInt::from(consistent.len());
    Ok(state
        .open_pairs()
        .into_iter()
        .map(|(a, b)| {
            let hits = consistent.iter().filter(|e| adj[e[a]][e[b]]).count();
            ((a, b), Rational::new(BigInt::from(hits), total.clone()))
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardnessValue {
    pub family: HardFamily,
    #[serde(with = "rational_str")]
    pub expected_matched: Rational,
    #[serde(with = "rational_str")]
    pub ratio: Rational,
    /// Embeddings of the pattern (the root's world count, with multiplicity).
    pub embeddings: u64,
    /// Distinct states stored in the memo table.
    pub states: u64,
}

impl HardnessValue {
    pub fn ratio_f64(&self) -> f64 {
        self.ratio.to_f64().unwrap_or(f64::NAN)
    }
}

mod rational_str {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::Rational;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DpOptions {
    /// Relabel states into a canonical order and query one pair per class of
    /// interchangeable labels. Off, the DP only compacts labels.
    pub canonicalize: bool,
    pub workers: usize,
}

impl Default for DpOptions {
    fn default() -> Self {
        Self { canonicalize: true, workers: 1 }
    }
}

/// Worlds over `k` labels: sorted `(edge mask, multiplicity)` pairs with
/// distinct masks.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Belief {
    sides: Vec<u8>,
    worlds: Vec<(u128, u64)>,
}

struct PairTable {
    index: Vec<Vec<u8>>,
    ends: Vec<(u8, u8)>,
}

impl PairTable {
    fn new(k: usize) -> Self {
        let mut index = vec![vec![u8::MAX; k]; k];
        let mut ends = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                index[a][b] = ends.len() as u8;
                index[b][a] = ends.len() as u8;
                ends.push((a as u8, b as u8));
            }
        }
        Self { index, ends }
    }

    fn bit(&self, a: usize, b: usize) -> u128 {
        1u128 << self.index[a][b]
    }

    /// Mask on the labels `map[x] != None`, renumbered by `map`.
    fn remap(&self, mask: u128, map: &[Option<u8>], target: &PairTable) -> u128 {
        let mut out = 0u128;
        let mut m = mask;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            let (a, b) = self.ends[i];
            if let (Some(x), Some(y)) = (map[a as usize], map[b as usize]) {
                out |= target.bit(x as usize, y as usize);
            }
        }
        out
    }
}

fn normalize(worlds: &mut Vec<(u128, u64)>) {
    worlds.sort_unstable_by_key(|w| w.0);
    let mut out: Vec<(u128, u64)> = Vec::with_capacity(worlds.len());
    for &(m, c) in worlds.iter() {
        match out.last_mut() {
            Some(last) if last.0 == m => last.1 += c,
            _ => out.push((m, c)),
        }
    }
    *worlds = out;
}

fn split_gcd(worlds: &mut [(u128, u64)]) -> u64 {
    let g = worlds.iter().fold(0u64, |g, w| g.gcd(&w.1));
    if g > 1 {
        for w in worlds.iter_mut() {
            w.1 /= g;
        }
    }
    g.max(1)
}

struct Solver {
    canonicalize: bool,
    tables: Vec<PairTable>,
    shards: Vec<Mutex<HashMap<[u8; 16], u64>>>,
    stored: AtomicU64,
}

const SHARDS: usize = 64;

impl Solver {
    fn new(k: usize, canonicalize: bool) -> Self {
        Self {
            canonicalize,
            tables: (0..=k).map(PairTable::new).collect(),
            shards: (0..SHARDS).map(|_| Mutex::new(HashMap::new())).collect(),
            stored: AtomicU64::new(0),
        }
    }

    fn key(b: &Belief) -> [u8; 16] {
        let mut h = Sha256::new();
        h.update([b.sides.len() as u8]);
        h.update(&b.sides);
        for (m, c) in &b.worlds {
            h.update(m.to_le_bytes());
            h.update(c.to_le_bytes());
        }
        let d = h.finalize();
        let mut k = [0u8; 16];
        k.copy_from_slice(&d[..16]);
        k
    }

    /// Label order from refined signatures; ties keep the current order.
    fn canonical_order(&self, b: &Belief) -> (Vec<usize>, Vec<u64>) {
        let k = b.sides.len();
        let t = &self.tables[k];
        let mix = |x: u64| {
            let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^ (z >> 31)
        };
        let mut sig: Vec<u64> = b.sides.iter().map(|&s| mix(s as u64)).collect();
        for _ in 0..3 {
            let mut next: Vec<u64> = sig.iter().map(|&s| mix(s)).collect();
            for &(mask, count) in &b.worlds {
                let mut acc = vec![0u64; k];
                let mut m = mask;
                while m != 0 {
                    let i = m.trailing_zeros() as usize;
                    m &= m - 1;
                    let (x, y) = t.ends[i];
                    acc[x as usize] = acc[x as usize].wrapping_add(mix(sig[y as usize]));
                    acc[y as usize] = acc[y as usize].wrapping_add(mix(sig[x as usize]));
                }
                for x in 0..k {
                    next[x] = next[x].wrapping_add(mix(acc[x] ^ 0x5555).wrapping_mul(count));
                }
            }
            sig = next;
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&x| (b.sides[x], sig[x], x));
        (order, sig)
    }

    fn relabel(&self, b: &Belief, order: &[usize]) -> Belief {
        let k = b.sides.len();
        let t = &self.tables[k];
        let mut map = vec![None; k];
        for (new, &old) in order.iter().enumerate() {
            map[old] = Some(new as u8);
        }
        let mut worlds: Vec<(u128, u64)> = b.worlds.iter().map(|&(m, c)| (t.remap(m, &map, t), c)).collect();
        normalize(&mut worlds);
        Belief { sides: order.iter().map(|&x| b.sides[x]).collect(), worlds }
    }

    /// Candidate query pairs: every pair with both outcomes possible, or one
    /// representative per pair of interchangeable-label classes.
    fn actions(&self, b: &Belief, sig: Option<&[u64]>) -> Vec<(usize, usize)> {
        let k = b.sides.len();
        let t = &self.tables[k];
        let any: u128 = b.worlds.iter().fold(0, |acc, w| acc | w.0);
        let mut class: Vec<usize> = (0..k).collect();
        if let Some(sig) = sig {
            for x in 0..k {
                if class[x] != x {
                    continue;
                }
                for y in x + 1..k {
                    if class[y] == y && b.sides[x] == b.sides[y] && sig[x] == sig[y] && self.swap_invariant(b, x, y) {
                        class[y] = x;
                    }
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for x in 0..k {
            for y in x + 1..k {
                if any & t.bit(x, y) == 0 {
                    continue;
                }
                let (cx, cy) = (class[x], class[y]);
                if seen.insert((cx.min(cy), cx.max(cy))) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    fn swap_invariant(&self, b: &Belief, x: usize, y: usize) -> bool {
        let k = b.sides.len();
        let t = &self.tables[k];
        let map: Vec<Option<u8>> = (0..k)
            .map(|z| Some(if z == x { y } else if z == y { x } else { z } as u8))
            .collect();
        let mut swapped: Vec<(u128, u64)> = b.worlds.iter().map(|&(m, c)| (t.remap(m, &map, t), c)).collect();
        swapped.sort_unstable_by_key(|w| w.0);
        swapped == b.worlds
    }

    /// `U` for a belief whose world counts are already gcd-free.
    fn value(&self, b: &Belief) -> u64 {
        if b.sides.len() < 2 || b.worlds.is_empty() {
            return 0;
        }
        let (b, sig) = if self.canonicalize {
            let (order, sig) = self.canonical_order(b);
            let relabeled = self.relabel(b, &order);
            let sig: Vec<u64> = order.iter().map(|&x| sig[x]).collect();
            (relabeled, Some(sig))
        } else {
            (b.clone(), None)
        };
        let key = Self::key(&b);
        let shard = &self.shards[key[0] as usize % SHARDS];
        if let Some(&v) = shard.lock().unwrap().get(&key) {
            return v;
        }
        let best = self
            .actions(&b, sig.as_deref())
            .into_iter()
            .map(|(x, y)| self.action_value(&b, x, y))
            .max()
            .unwrap_or(0);
        if shard.lock().unwrap().insert(key, best).is_none() {
            self.stored.fetch_add(1, Ordering::Relaxed);
        }
        best
    }

    fn action_value(&self, b: &Belief, x: usize, y: usize) -> u64 {
        let k = b.sides.len();
        let t = &self.tables[k];
        let bit = t.bit(x, y);
        let (yes, no): (Vec<(u128, u64)>, Vec<(u128, u64)>) = b.worlds.iter().partition(|w| w.0 & bit != 0);
        let yes_count: u64 = yes.iter().map(|w| w.1).sum();
        let mut total = yes_count;
        if !yes.is_empty() {
            let mut map = vec![None; k];
            let mut next = 0u8;
            for (z, slot) in map.iter_mut().enumerate() {
                if z != x && z != y {
                    *slot = Some(next);
                    next += 1;
                }
            }
            let target = &self.tables[k - 2];
            let mut worlds: Vec<(u128, u64)> = yes.iter().map(|&(m, c)| (t.remap(m, &map, target), c)).collect();
            normalize(&mut worlds);
            let g = split_gcd(&mut worlds);
            let sides = (0..k).filter(|&z| z != x && z != y).map(|z| b.sides[z]).collect();
            total += g * self.value(&Belief { sides, worlds });
        }
        if !no.is_empty() {
            let mut worlds = no;
            let g = split_gcd(&mut worlds);
            total += g * self.value(&Belief { sides: b.sides.clone(), worlds });
        }
        total
    }
}

fn root_belief(family: HardFamily) -> (Belief, u64) {
    let k = family.vertex_count();
    let adj = family.pattern();
    let t = PairTable::new(k);
    let embs = family.embeddings();
    let count = embs.len() as u64;
    let mut worlds: Vec<(u128, u64)> = embs
        .iter()
        .map(|e| {
            let mut m = 0u128;
            for a in 0..k {
                for b in a + 1..k {
                    if adj[e[a]][e[b]] {
                        m |= t.bit(a, b);
                    }
                }
            }
            (m, 1)
        })
        .collect();
    normalize(&mut worlds);
    (Belief { sides: family.sides(), worlds }, count)
}

/// Expected matching size of the best adaptive query strategy, and its ratio
/// to the perfect matching.
pub fn optimal_adaptive_value(family: HardFamily, opts: DpOptions) -> Result<HardnessValue> {
    family.validate()?;
    let (mut root, embeddings) = root_belief(family);
    let g = split_gcd(&mut root.worlds);
    let solver = Solver::new(family.vertex_count(), opts.canonicalize);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::Solver(format!("thread pool: {e}")))?;
    // first-level branching in parallel; deeper levels share the memo table
    let actions = solver.actions(&root, None);
    let best = pool.install(|| actions.par_iter().map(|&(x, y)| solver.action_value(&root, x, y)).max().unwrap_or(0));
    let total = BigInt::from(g) * BigInt::from(best);
    let expected = Rational::new(total, BigInt::from(embeddings));
    let ratio = &expected / BigInt::from(family.half());
    Ok(HardnessValue {
        family,
        expected_matched: expected,
        ratio,
        embeddings,
        states: solver.stored.load(Ordering::Relaxed),
    })
}

/// Expected matching size of Ranking (vertex greedy by uniformly random rank
/// order), exact.
///
/// Vertices are revealed in rank order; a newly revealed vertex matches the
/// earliest revealed vertex that is still unmatched and adjacent to it. Only
/// the reveal set and the ordered list of unmatched revealed vertices with an
/// unrevealed neighbor matter for the future, which keeps the state space
/// small enough for 12 vertices.
pub fn ranking_exact_value(family: HardFamily) -> Result<HardnessValue> {
    family.validate()?;
    let adj = family.pattern();
    let k = adj.len();
    if k > 16 {
        return Err(Error::TooLarge(format!("{k} vertices; at most 16")));
    }
    let mut memo = HashMap::new();
    let total = reveal_sum(&adj, 0, &[], &mut memo);
    let fact: u64 = (1..=k as u64).product();
    let expected = Rational::new(BigInt::from(total), BigInt::from(fact));
    let ratio = &expected / BigInt::from(family.half());
    Ok(HardnessValue { family, expected_matched: expected, ratio, embeddings: fact, states: memo.len() as u64 })
}

/// Sum over all orders of the remaining vertices of the matches made.
fn reveal_sum(adj: &[Vec<bool>], revealed: u32, pending: &[u8], memo: &mut HashMap<(u32, Vec<u8>), u64>) -> u64 {
    let k = adj.len();
    let left = k - revealed.count_ones() as usize;
    if left == 0 {
        return 0;
    }
    let key = (revealed, pending.to_vec());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let orders_after: u64 = (1..left as u64).product();
    let mut total = 0u64;
    for x in (0..k).filter(|&x| revealed & (1 << x) == 0) {
        let r = revealed | (1 << x);
        let partner = pending.iter().position(|&p| adj[x][p as usize]);
        let mut next: Vec<u8> = pending.to_vec();
        match partner {
            Some(i) => {
                next.remove(i);
                total += orders_after;
            }
            None => next.push(x as u8),
        }
        next.retain(|&p| (0..k).any(|z| r & (1 << z) == 0 && adj[p as usize][z]));
        total += reveal_sum(adj, r, &next, memo);
    }
    memo.insert(key, total);
    total
}

/// [`ranking_exact_value`] by direct enumeration of all rank orders.
pub fn ranking_exact_value_enumerated(family: HardFamily) -> Result<HardnessValue> {
    family.validate()?;
    let adj = family.pattern();
    let k = adj.len();
    if k > 10 {
        return Err(Error::TooLarge(format!("{k} vertices; enumeration supports at most 10")));
    }
    let perms = permutations(k);
    let total: u64 = perms
        .par_iter()
        .map(|order| vertex_greedy(&adj, order).iter().filter(|p| p.is_some()).count() as u64 / 2)
        .sum();
    let expected = Rational::new(BigInt::from(total), BigInt::from(perms.len()));
    let ratio = &expected / BigInt::from(family.half());
    Ok(HardnessValue { family, expected_matched: expected, ratio, embeddings: perms.len() as u64, states: 0 })
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_zero() {
        return "0".into();
    }
    r.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn patterns() {
        let hat2 = HardFamily::GeneralHhat(2).pattern();
        let mut edges = vec![];
        for a in 0..4 {
            for b in a + 1..4 {
                if hat2[a][b] {
                    edges.push((a + 1, b + 1));
                }
            }
        }
        assert_eq!(edges, vec![(1, 2), (1, 3), (2, 3), (3, 4)]);
        let h3 = HardFamily::BipartiteH(3).pattern();
        assert_eq!(h3.iter().flatten().filter(|&&e| e).count(), 12);
        assert_eq!(HardFamily::WarmupB4.pattern(), HardFamily::BipartiteH(2).pattern());
    }

    #[test]
    fn posterior_examples() {
        let s = QueryState::new(HardFamily::WarmupB4).unwrap();
        let p = posterior(&s).unwrap();
        assert_eq!(p.len(), 4);
        assert!(p.iter().all(|(_, r)| *r == q(3, 4)));

        let s = QueryState::new(HardFamily::BipartiteH(3)).unwrap();
        assert!(posterior(&s).unwrap().iter().all(|(_, r)| *r == q(2, 3)));

        // a null pair pins down both identities
        let s = QueryState::new(HardFamily::WarmupB4).unwrap().with_outcome(0, 2, false).unwrap();
        let p = posterior(&s).unwrap();
        assert!(p.iter().all(|(_, r)| *r == q(1, 1)));
    }

    #[test]
    fn inconsistent_state_is_an_error() {
        let s = QueryState::new(HardFamily::WarmupB4).unwrap();
        let s = s.with_outcome(0, 2, false).unwrap().with_outcome(1, 3, false).unwrap();
        assert!(matches!(posterior(&s), Err(Error::Inconsistent)));
    }

    #[test]
    fn small_values() {
        let v = optimal_adaptive_value(HardFamily::WarmupB4, DpOptions::default()).unwrap();
        assert_eq!(v.expected_matched, q(7, 4));
        assert_eq!(v.ratio, q(7, 8));
        let r = ranking_exact_value(HardFamily::WarmupB4).unwrap();
        assert_eq!(r.ratio, q(7, 8));
    }

    #[test]
    fn canonicalization_is_a_pure_speedup() {
        for fam in [HardFamily::WarmupB4, HardFamily::BipartiteH(3), HardFamily::GeneralHhat(2), HardFamily::BipartiteH(4)] {
            let a = optimal_adaptive_value(fam, DpOptions { canonicalize: true, workers: 1 }).unwrap();
            let b = optimal_adaptive_value(fam, DpOptions { canonicalize: false, workers: 2 }).unwrap();
            assert_eq!(a.ratio, b.ratio, "{fam}");
            assert!(a.states <= b.states);
        }
    }

    #[test]
    fn optimal_dominates_ranking() {
        for fam in [HardFamily::BipartiteH(4), HardFamily::GeneralHhat(3)] {
            let opt = optimal_adaptive_value(fam, DpOptions::default()).unwrap();
            assert!(opt.ratio >= ranking_exact_value(fam).unwrap().ratio);
        }
    }

    #[test]
    fn reveal_dp_matches_enumeration() {
        for fam in [HardFamily::WarmupB4, HardFamily::BipartiteH(3), HardFamily::GeneralHhat(2)] {
            assert_eq!(ranking_exact_value(fam).unwrap().ratio, ranking_exact_value_enumerated(fam).unwrap().ratio);
        }
    }

    #[test]
    fn family_names() {
        for s in ["warmup", "h3", "h5", "hhat2", "hhat3"] {
            assert_eq!(s.parse::<HardFamily>().unwrap().to_string(), s);
        }
        assert!("h1".parse::<HardFamily>().is_err());
        assert!("x3".parse::<HardFamily>().is_err());
    }
}
