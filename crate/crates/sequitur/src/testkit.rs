//! Deterministic generators for the sequence families that drive the
//! engine to its extremes, plus random-input generators and the full-scan
//! oracle used by the property suites.
//!
//! The letter-indexed families use the 26 lowercase letters; the random
//! generators work over arbitrary token ids.

use crate::analysis::{self, ConstraintReport};
use crate::grammar::{Grammar, TokenId};

/// Largest alphabet for the letter-indexed families.
pub const LETTER_CAPACITY: usize = 26;

/// Parameter outside a generator's documented range.
#[derive(Clone, Copy, PartialEq, Eq, Debug, thiserror::Error)]
#[error("{name} must be in {min}..={max}, got {got}")]
pub struct ParamError {
    pub name: &'static str,
    pub min: usize,
    pub max: usize,
    pub got: usize,
}

fn letter(i: usize) -> char {
    (b'a' + i as u8) as char
}

/// Concatenation of alphabet prefixes P2 P3 ... P(m+1), where Pk is the
/// first k letters. Each block extends the previous repetition by one
/// symbol, so inference stacks one rule per block: the deepest hierarchy a
/// sequence of this length can produce. Length is 2+3+...+(m+1).
pub fn gen_deepest(m: usize) -> Result<String, ParamError> {
    if m < 1 || m + 1 > LETTER_CAPACITY {
        return Err(ParamError { name: "m", min: 1, max: LETTER_CAPACITY - 1, got: m });
    }
    let mut out = String::new();
    for k in 2..=m + 1 {
        for i in 0..k {
            out.push(letter(i));
        }
    }
    Ok(out)
}

/// A sequence of length s²+1 over an s-letter alphabet in which every
/// ordered digram occurs exactly once: an Eulerian circuit over the
/// complete digraph with self-loops, built with Hierholzer's algorithm
/// (smallest unused target first). No rule can ever form, so this is the
/// largest grammar and the shallowest hierarchy for its length.
pub fn gen_digram_unique(s: usize) -> Result<String, ParamError> {
    if !(2..=LETTER_CAPACITY).contains(&s) {
        return Err(ParamError { name: "s", min: 2, max: LETTER_CAPACITY, got: s });
    }
    Ok(eulerian_digram_walk(s).into_iter().map(|t| letter(t.0 as usize)).collect())
}

/// The digram-unique walk over an arbitrary-size alphabet, as token ids.
pub fn gen_digram_unique_tokens(s: usize) -> Vec<TokenId> {
    eulerian_digram_walk(s)
}

fn eulerian_digram_walk(s: usize) -> Vec<TokenId> {
    // next unused target for each node; targets tried in ascending order
    let mut next_target: Vec<usize> = vec![0; s];
    let mut stack: Vec<usize> = Vec::with_capacity(s * s + 1);
    let mut out: Vec<TokenId> = Vec::with_capacity(s * s + 1);
    stack.push(0);
    while let Some(&v) = stack.last() {
        if next_target[v] < s {
            let u = next_target[v];
            next_target[v] += 1;
            stack.push(u);
        } else {
            out.push(TokenId(stack.pop().expect("stack non-empty") as u32));
        }
    }
    out.reverse();
    out
}

/// The single letter `a` repeated n times. Inference halves the sequence
/// repeatedly, producing the smallest possible grammar: one rule per
/// doubling.
pub fn gen_unary(n: usize) -> String {
    "a".repeat(n)
}

/// Concatenation over i = 1..=k of the doubled pair (a·σi)(a·σi) with
/// σ1 = a, σ2 = b, ... Every four input symbols mint one two-terminal rule
/// and nothing nests, so the rule count reaches its n/4 maximum.
pub fn gen_max_rules(k: usize) -> Result<String, ParamError> {
    if !(1..=LETTER_CAPACITY).contains(&k) {
        return Err(ParamError { name: "k", min: 1, max: LETTER_CAPACITY, got: k });
    }
    let mut out = String::new();
    for i in 0..k {
        for _ in 0..2 {
            out.push('a');
            out.push(letter(i));
        }
    }
    Ok(out)
}

/// Blocks B1 B2 ... Bm where Bk is the k+1 trailing letters of the
/// alphabet (B1 = yz, B2 = xyz, B3 = wxyz, ...). Every block lengthens the
/// repeated suffix leftwards by one symbol, so the final symbol of each
/// block triggers a cascade of matches one longer than the last.
pub fn gen_cascade(m: usize) -> Result<String, ParamError> {
    if !(2..=LETTER_CAPACITY - 1).contains(&m) {
        return Err(ParamError { name: "m", min: 2, max: LETTER_CAPACITY - 1, got: m });
    }
    let mut out = String::new();
    for k in 1..=m {
        for i in (0..=k).rev() {
            out.push(letter(LETTER_CAPACITY - 1 - i));
        }
    }
    Ok(out)
}

/// The first `block_len` letters repeated `reps` times. Each repetition
/// re-grows the block rule through a chain of short-lived rules, so rule
/// creations and deletions are both linear in the input.
pub fn gen_repeated_block(block_len: usize, reps: usize) -> Result<String, ParamError> {
    if !(2..=LETTER_CAPACITY).contains(&block_len) {
        return Err(ParamError { name: "block_len", min: 2, max: LETTER_CAPACITY, got: block_len });
    }
    if reps < 2 {
        return Err(ParamError { name: "reps", min: 2, max: usize::MAX, got: reps });
    }
    let block: String = (0..block_len).map(letter).collect();
    Ok(block.repeat(reps))
}

/// Small deterministic generator for seeded random inputs.
#[derive(Clone, Debug)]
pub struct SplitMixRng(u64);

impl SplitMixRng {
    pub fn new(seed: u64) -> Self {
        SplitMixRng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in 0..bound (bound > 0).
    pub fn below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }
}

/// Distribution shapes for random token streams.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TokenDistribution {
    /// Every symbol equally likely.
    Uniform,
    /// Heavily skewed: low-numbered symbols dominate.
    Skewed,
}

/// Seeded random token sequence over `alphabet` symbols.
pub fn gen_random_tokens(
    seed: u64,
    len: usize,
    alphabet: usize,
    distribution: TokenDistribution,
) -> Vec<TokenId> {
    assert!(alphabet > 0, "alphabet must be non-empty");
    let mut rng = SplitMixRng::new(seed);
    (0..len)
        .map(|_| {
            let sym = match distribution {
                TokenDistribution::Uniform => rng.below(alphabet),
                TokenDistribution::Skewed => {
                    // min of two draws biases toward small symbols
                    rng.below(alphabet).min(rng.below(alphabet))
                }
            };
            TokenId(sym as u32)
        })
        .collect()
}

/// Seeded random letters, for inputs that must be printable text.
pub fn gen_random_text(seed: u64, len: usize, alphabet: usize) -> String {
    assert!((1..=LETTER_CAPACITY).contains(&alphabet));
    gen_random_tokens(seed, len, alphabet, TokenDistribution::Uniform)
        .into_iter()
        .map(|t| letter(t.0 as usize))
        .collect()
}

/// Feeds a token sequence through a fresh engine.
pub fn infer_tokens(tokens: &[TokenId]) -> Grammar {
    let mut g = Grammar::new();
    for &t in tokens {
        g.append_terminal(t);
    }
    g
}

/// Feeds a string byte-wise through a fresh engine.
pub fn infer_str(input: &str) -> Grammar {
    infer_tokens(&input.bytes().map(|b| TokenId(b as u32)).collect::<Vec<_>>())
}

/// Everything the full-scan oracle recomputes from scratch.
#[derive(Clone, Copy, Debug)]
pub struct OracleReport {
    pub constraints: ConstraintReport,
    /// Every rule except the start rule has at least two rhs symbols.
    pub rhs_lengths_ok: bool,
    /// Grammar size equals the number of live symbol nodes.
    pub node_count_ok: bool,
}

impl OracleReport {
    pub fn all_ok(&self) -> bool {
        self.constraints.all_ok() && self.rhs_lengths_ok && self.node_count_ok
    }
}

/// Recomputes digram population, reference counts, constraint status, and
/// structural tallies from scratch, with no reliance on the incremental
/// index.
pub fn full_scan_oracle(g: &Grammar) -> OracleReport {
    let constraints = analysis::verify_constraints(g);
    let rhs_lengths_ok = g
        .rule_ids()
        .iter()
        .filter(|&&r| r != g.start())
        .all(|&r| g.rhs_len(r).expect("live rule") >= 2);
    let node_count_ok = analysis::grammar_size(g) == g.live_symbol_count();
    OracleReport { constraints, rhs_lengths_ok, node_count_ok }
}

/// Asserts the accounting identities that relate the action tallies to the
/// final grammar: appends minus grammar size equals reuses plus deletions,
/// rule count equals creations minus deletions, and total work is within
/// the linear-time ceiling.
pub fn assert_accounting_identities(g: &Grammar, context: &str) {
    let c = g.counters();
    let n = c.symbols_appended;
    let o = analysis::grammar_size(g) as u64;
    let r = (g.rule_count() - 1) as u64;
    assert_eq!(n - o, c.rules_reused + c.rules_deleted, "size identity failed: {context}");
    assert_eq!(r, c.rules_created - c.rules_deleted, "rule identity failed: {context}");
    assert!(c.total() <= 6 * n, "work ceiling exceeded: {context}");
}
