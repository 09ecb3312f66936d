//! Index from each digram (ordered pair of adjacent symbol values) to the
//! unique grammar location that holds it.
//!
//! The table is open-addressed with linear probing and tombstoned deletion;
//! chaining is avoided so no per-entry allocation happens. A single probe
//! serves both lookup and insertion: [`DigramIndex::insert_or_match`] either
//! stores the new location or reports the existing one, and the caller
//! decides what the collision means. Occupancy is kept below 80% by
//! doubling the table and rehashing live entries.

use crate::grammar::{NodeHandle, SymbolValue};

/// Ordered pair of adjacent symbol values, the unit of the uniqueness
/// constraint. Guards never participate in digrams.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Digram {
    pub left: SymbolValue,
    pub right: SymbolValue,
}

impl Digram {
    pub fn new(left: SymbolValue, right: SymbolValue) -> Self {
        Digram { left, right }
    }
}

/// Result of the single-probe insert-or-match discipline.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum InsertOutcome {
    /// The digram was new; an entry now points at the caller's location.
    Inserted,
    /// The digram is already indexed at the returned location; the index is
    /// unchanged.
    Matched(NodeHandle),
}

/// Deterministic 64-bit mix of a digram's `(kind, payload)` pairs.
///
/// The grammar produced by inference is identical under every mixer; the
/// hash affects only probe distribution. Two distinct mixers are provided
/// so that independence can be tested.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum HashMixer {
    /// Multiply-xorshift avalanche of the two encoded symbols.
    #[default]
    SplitMix,
    /// FNV-1a over the 16 little-endian key bytes.
    Fnv,
}

fn encode(v: SymbolValue) -> u64 {
    match v {
        SymbolValue::Terminal(t) => t.0 as u64,
        SymbolValue::NonTerminal(r) => (1 << 32) | r.0 as u64,
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

impl HashMixer {
    fn mix(self, d: &Digram) -> u64 {
        let (a, b) = (encode(d.left), encode(d.right));
        match self {
            HashMixer::SplitMix => splitmix64(a ^ splitmix64(b)),
            HashMixer::Fnv => {
                let mut h: u64 = 0xcbf29ce484222325;
                for byte in a.to_le_bytes().into_iter().chain(b.to_le_bytes()) {
                    h ^= byte as u64;
                    h = h.wrapping_mul(0x100000001b3);
                }
                h
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Bucket {
    Free,
    Tombstone,
    Full(Digram, NodeHandle),
}

/// Initial table size; doubles whenever occupancy would reach 80%. Both
/// values are tunables, not correctness requirements.
const INITIAL_CAPACITY: usize = 256;
const MAX_LOAD_NUM: usize = 4; // load threshold 4/5 = 80%
const MAX_LOAD_DEN: usize = 5;

/// Open-addressed digram table. Values are the handle of each digram's
/// *left* node.
#[derive(Clone, Debug)]
pub struct DigramIndex {
    buckets: Vec<Bucket>,
    /// Live entries.
    live: usize,
    /// Slots not free (live + tombstones); what probing cost depends on.
    used: usize,
    mixer: HashMixer,
}

impl Default for DigramIndex {
    fn default() -> Self {
        Self::with_mixer(HashMixer::default())
    }
}

impl DigramIndex {
    pub fn with_mixer(mixer: HashMixer) -> Self {
        DigramIndex {
            buckets: vec![Bucket::Free; INITIAL_CAPACITY],
            live: 0,
            used: 0,
            mixer,
        }
    }

    /// Number of live entries.
    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// Slots in use, tombstones included.
    pub fn occupancy(&self) -> usize {
        self.used
    }

    pub fn capacity(&self) -> usize {
        self.buckets.len()
    }

    pub fn mixer(&self) -> HashMixer {
        self.mixer
    }

    /// One probe for both access and update: if `d` is absent, stores
    /// `d -> loc` and reports `Inserted`; if present, reports the stored
    /// location and leaves the index unchanged. Overlap and reuse decisions
    /// belong to the caller.
    pub fn insert_or_match(&mut self, d: Digram, loc: NodeHandle) -> InsertOutcome {
        self.rebuild_if_crowded();
        let mask = self.buckets.len() - 1;
        let mut i = (self.mixer.mix(&d) as usize) & mask;
        let mut slot = None;
        loop {
            match self.buckets[i] {
                Bucket::Free => {
                    let target = slot.unwrap_or(i);
                    if matches!(self.buckets[target], Bucket::Free) {
                        self.used += 1;
                    }
                    self.buckets[target] = Bucket::Full(d, loc);
                    self.live += 1;
                    return InsertOutcome::Inserted;
                }
                Bucket::Tombstone => {
                    slot.get_or_insert(i);
                }
                Bucket::Full(stored, existing) => {
                    if stored == d {
                        return InsertOutcome::Matched(existing);
                    }
                }
            }
            i = (i + 1) & mask;
        }
    }

    /// Removes the entry for `d` only if its stored handle is exactly
    /// `loc`; otherwise another occurrence owns the entry and nothing
    /// changes. Returns whether the entry was removed.
    pub fn forget(&mut self, d: Digram, loc: NodeHandle) -> bool {
        if let Some(i) = self.find(&d) {
            if let Bucket::Full(_, existing) = self.buckets[i] {
                if existing == loc {
                    self.buckets[i] = Bucket::Tombstone;
                    self.live -= 1;
                    return true;
                }
            }
        }
        false
    }

    /// Re-points an existing entry at a new location.
    pub fn update_location(&mut self, d: Digram, loc: NodeHandle) -> Result<(), DigramAbsent> {
        match self.find(&d) {
            Some(i) => {
                self.buckets[i] = Bucket::Full(d, loc);
                Ok(())
            }
            None => Err(DigramAbsent(d)),
        }
    }

    /// Stored location for `d`, if any.
    pub fn get(&self, d: &Digram) -> Option<NodeHandle> {
        self.find(d).and_then(|i| match self.buckets[i] {
            Bucket::Full(_, loc) => Some(loc),
            _ => None,
        })
    }

    /// Doubles the table and rehashes live entries whenever occupancy has
    /// reached 80% of capacity. Tombstones are dropped by the rebuild.
    pub fn rebuild_if_crowded(&mut self) {
        if (self.used + 1) * MAX_LOAD_DEN < self.buckets.len() * MAX_LOAD_NUM {
            return;
        }
        let mut cap = self.buckets.len();
        while (self.live + 1) * MAX_LOAD_DEN >= cap * MAX_LOAD_NUM {
            cap *= 2;
        }
        let old = std::mem::replace(&mut self.buckets, vec![Bucket::Free; cap]);
        self.used = self.live;
        let mask = cap - 1;
        for bucket in old {
            if let Bucket::Full(d, loc) = bucket {
                let mut i = (self.mixer.mix(&d) as usize) & mask;
                while !matches!(self.buckets[i], Bucket::Free) {
                    i = (i + 1) & mask;
                }
                self.buckets[i] = Bucket::Full(d, loc);
            }
        }
    }

    /// Live entries in unspecified order.
    pub fn iter(&self) -> impl Iterator<Item = (Digram, NodeHandle)> + '_ {
        self.buckets.iter().filter_map(|b| match b {
            Bucket::Full(d, loc) => Some((*d, *loc)),
            _ => None,
        })
    }

    fn find(&self, d: &Digram) -> Option<usize> {
        let mask = self.buckets.len() - 1;
        let mut i = (self.mixer.mix(d) as usize) & mask;
        loop {
            match self.buckets[i] {
                Bucket::Free => return None,
                Bucket::Tombstone => {}
                Bucket::Full(stored, _) => {
                    if stored == *d {
                        return Some(i);
                    }
                }
            }
            i = (i + 1) & mask;
        }
    }
}

/// Error from [`DigramIndex::update_location`] on an absent key.
#[derive(Clone, Copy, PartialEq, Eq, Debug, thiserror::Error)]
#[error("digram not present in index: {0:?}")]
pub struct DigramAbsent(pub Digram);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{RuleId, TokenId};
    use std::collections::HashMap;

    fn t(b: u8) -> SymbolValue {
        SymbolValue::Terminal(TokenId(b as u32))
    }

    fn nt(i: u32) -> SymbolValue {
        SymbolValue::NonTerminal(RuleId(i))
    }

    fn d(l: SymbolValue, r: SymbolValue) -> Digram {
        Digram::new(l, r)
    }

    fn h(i: u32) -> NodeHandle {
        NodeHandle::synthetic(i)
    }

    #[test]
    fn insert_then_match() {
        let mut ix = DigramIndex::default();
        assert_eq!(ix.insert_or_match(d(t(b'a'), t(b'b')), h(1)), InsertOutcome::Inserted);
        assert_eq!(
            ix.insert_or_match(d(t(b'a'), t(b'b')), h(9)),
            InsertOutcome::Matched(h(1))
        );
        assert_eq!(ix.len(), 1);
    }

    #[test]
    fn distinct_keys_both_insert() {
        let mut ix = DigramIndex::default();
        assert_eq!(ix.insert_or_match(d(t(b'a'), t(b'b')), h(1)), InsertOutcome::Inserted);
        assert_eq!(ix.insert_or_match(d(t(b'b'), t(b'a')), h(2)), InsertOutcome::Inserted);
        assert_eq!(ix.len(), 2);
    }

    #[test]
    fn forget_requires_identical_location() {
        let mut ix = DigramIndex::default();
        ix.insert_or_match(d(t(b'a'), t(b'b')), h(1));
        assert!(!ix.forget(d(t(b'a'), t(b'b')), h(2)));
        assert_eq!(ix.get(&d(t(b'a'), t(b'b'))), Some(h(1)));
        assert!(ix.forget(d(t(b'a'), t(b'b')), h(1)));
        assert_eq!(ix.get(&d(t(b'a'), t(b'b'))), None);
        assert!(!ix.forget(d(t(b'a'), t(b'b')), h(1)));
    }

    /// The index transitions of the worked "abcdbc" example: entries for
    /// the sequence, then the new rule's body takes over the repeated
    /// digram while the replaced occurrences drop their broken links.
    #[test]
    fn rule_substitution_transitions() {
        let (a, b, c, dd) = (t(b'a'), t(b'b'), t(b'c'), t(b'd'));
        let big_a = nt(1);
        let mut ix = DigramIndex::default();
        // S = a b c d b c, left-node handles 1..=5
        ix.insert_or_match(d(a, b), h(1));
        ix.insert_or_match(d(b, c), h(2));
        ix.insert_or_match(d(c, dd), h(3));
        ix.insert_or_match(d(dd, b), h(4));
        let keys = |ix: &DigramIndex| {
            let mut v: Vec<Digram> = ix.iter().map(|(k, _)| k).collect();
            v.sort_by_key(|k| format!("{k:?}"));
            v
        };
        let mut expect = vec![d(a, b), d(b, c), d(c, dd), d(dd, b)];
        expect.sort_by_key(|k| format!("{k:?}"));
        assert_eq!(keys(&ix), expect);

        // new rule A -> b c: entry re-pointed at the body (handle 10)
        ix.update_location(d(b, c), h(10)).unwrap();
        assert_eq!(ix.get(&d(b, c)), Some(h(10)));

        // substitute A for the first b c: ab, cd removed; aA, Ad added
        assert!(ix.forget(d(a, b), h(1)));
        assert!(ix.forget(d(c, dd), h(3)));
        assert!(!ix.forget(d(b, c), h(2)), "body now owns the bc entry");
        ix.insert_or_match(d(a, big_a), h(1));
        ix.insert_or_match(d(big_a, dd), h(11));
        let mut expect = vec![d(b, c), d(dd, b), d(a, big_a), d(big_a, dd)];
        expect.sort_by_key(|k| format!("{k:?}"));
        assert_eq!(keys(&ix), expect);

        // substitute A for the second b c: db removed, dA added
        assert!(ix.forget(d(dd, b), h(4)));
        assert!(!ix.forget(d(b, c), h(5)));
        ix.insert_or_match(d(dd, big_a), h(11));
        let mut expect = vec![d(b, c), d(dd, big_a), d(a, big_a), d(big_a, dd)];
        expect.sort_by_key(|k| format!("{k:?}"));
        assert_eq!(keys(&ix), expect);
    }

    #[test]
    fn update_location_of_absent_key_errors() {
        let mut ix = DigramIndex::default();
        assert!(ix.update_location(d(t(b'x'), t(b'y')), h(1)).is_err());
        ix.insert_or_match(d(t(b'x'), t(b'y')), h(1));
        ix.update_location(d(t(b'x'), t(b'y')), h(2)).unwrap();
        assert_eq!(ix.get(&d(t(b'x'), t(b'y'))), Some(h(2)));
    }

    #[test]
    fn growth_keeps_every_entry_retrievable() {
        let mut ix = DigramIndex::default();
        let start_cap = ix.capacity();
        let mut n = 0u32;
        while ix.capacity() == start_cap {
            ix.insert_or_match(d(t((n % 251) as u8), nt(n)), h(n));
            n += 1;
        }
        assert!(ix.capacity() >= 2 * start_cap);
        for i in 0..n {
            assert_eq!(ix.get(&d(t((i % 251) as u8), nt(i))), Some(h(i)));
        }
        assert!(ix.occupancy() * 5 < ix.capacity() * 4, "load must stay under 80%");
    }

    #[test]
    fn below_threshold_rebuild_is_a_noop() {
        let mut ix = DigramIndex::default();
        ix.insert_or_match(d(t(1), t(2)), h(1));
        let cap = ix.capacity();
        ix.rebuild_if_crowded();
        assert_eq!(ix.capacity(), cap);
        assert_eq!(ix.get(&d(t(1), t(2))), Some(h(1)));
    }

    #[test]
    fn hundred_thousand_distinct_digrams_round_trip() {
        for mixer in [HashMixer::SplitMix, HashMixer::Fnv] {
            let mut ix = DigramIndex::with_mixer(mixer);
            for i in 0..100_000u32 {
                assert_eq!(ix.insert_or_match(d(nt(i), nt(i + 7)), h(i)), InsertOutcome::Inserted);
            }
            assert_eq!(ix.len(), 100_000);
            for i in 0..100_000u32 {
                assert_eq!(ix.get(&d(nt(i), nt(i + 7))), Some(h(i)), "mixer {mixer:?}");
            }
            assert!(ix.occupancy() * 5 < ix.capacity() * 4);
        }
    }

    /// Reference-map shadow: after any interleaving of insert/forget/update,
    /// lookups agree with a std HashMap driven by the same operations.
    #[test]
    fn shadowed_random_interleaving() {
        let mut seed = 0x00c0ffee_d15ea5e5u64;
        let mut rng = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed
        };
        for mixer in [HashMixer::SplitMix, HashMixer::Fnv] {
            let mut ix = DigramIndex::with_mixer(mixer);
            let mut shadow: HashMap<Digram, NodeHandle> = HashMap::new();
            for step in 0..60_000u32 {
                let k = d(t((rng() % 11) as u8), nt((rng() % 37) as u32));
                let loc = h((rng() % 5) as u32);
                match rng() % 3 {
                    0 => match ix.insert_or_match(k, loc) {
                        InsertOutcome::Inserted => {
                            assert!(shadow.insert(k, loc).is_none(), "step {step}");
                        }
                        InsertOutcome::Matched(got) => {
                            assert_eq!(shadow.get(&k), Some(&got), "step {step}");
                        }
                    },
                    1 => {
                        let removed = ix.forget(k, loc);
                        let expect = shadow.get(&k) == Some(&loc);
                        assert_eq!(removed, expect, "step {step}");
                        if expect {
                            shadow.remove(&k);
                        }
                    }
                    _ => {
                        let ok = ix.update_location(k, loc).is_ok();
                        assert_eq!(ok, shadow.contains_key(&k), "step {step}");
                        if ok {
                            shadow.insert(k, loc);
                        }
                    }
                }
                assert_eq!(ix.len(), shadow.len());
                assert!(ix.occupancy() * 5 < ix.capacity() * 4);
            }
            for (k, v) in &shadow {
                assert_eq!(ix.get(k), Some(*v));
            }
        }
    }
}
