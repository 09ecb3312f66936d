//! Structural representation of rules: each right-hand side is a circular
//! doubly-linked chain of nodes closed by a single guard node, and every
//! rule tracks the nodes that reference it.
//!
//! This module owns pure structural edits and traversal only. Constraint
//! enforcement and digram-index upkeep live in [`crate::engine`]; edits here
//! never touch the index.

use std::collections::HashMap;

use crate::digram::{DigramIndex, HashMixer};
use crate::engine::ActionCounters;

/// Opaque id of a terminal symbol, assigned densely by a token table.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct TokenId(pub u32);

/// Identifies a rule. Ids are assigned in creation order and never reused,
/// so traces are reproducible and stale references are detectable. Id 0 is
/// the start rule.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct RuleId(pub u32);

impl RuleId {
    /// The start rule, whose expansion is the whole sequence seen so far.
    pub const START: RuleId = RuleId(0);
}

/// Value held by one occupied position in a right-hand side.
///
/// Equality is by value; two nodes holding equal values are distinct
/// occurrences.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum SymbolValue {
    Terminal(TokenId),
    NonTerminal(RuleId),
}

/// Handle to a node in a grammar's node store.
///
/// Handles are generation-checked: once a node is freed, handles to it are
/// detectably stale and structural operations on them panic rather than
/// corrupt the grammar.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct NodeHandle {
    index: u32,
    generation: u32,
}

impl NodeHandle {
    #[cfg(test)]
    pub(crate) fn synthetic(index: u32) -> Self {
        NodeHandle { index, generation: u32::MAX }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Payload {
    Guard(RuleId),
    Symbol(SymbolValue),
}

#[derive(Clone, Debug)]
struct Slot {
    generation: u32,
    live: bool,
    payload: Payload,
    prev: NodeHandle,
    next: NodeHandle,
    /// Back-index into the referenced rule's user list; meaningful only for
    /// live non-terminal nodes.
    user_slot: u32,
}

/// One production: a unique id, the guard node anchoring its right-hand
/// side, and the set of nodes that reference it.
#[derive(Clone, Debug)]
pub struct Rule {
    id: RuleId,
    guard: NodeHandle,
    users: Vec<NodeHandle>,
}

impl Rule {
    pub fn id(&self) -> RuleId {
        self.id
    }

    pub fn guard(&self) -> NodeHandle {
        self.guard
    }

    /// Number of non-terminal occurrences of this rule anywhere in the
    /// grammar. Always 0 for the start rule.
    pub fn ref_count(&self) -> usize {
        self.users.len()
    }

    pub(crate) fn users(&self) -> &[NodeHandle] {
        &self.users
    }
}

/// Errors from read-only queries over a grammar.
#[derive(Clone, Copy, PartialEq, Eq, Debug, thiserror::Error)]
pub enum GrammarError {
    #[error("unknown rule id {0:?}")]
    UnknownRule(RuleId),
}

/// The full rule set: the start rule plus auxiliary rules, the digram
/// index, and the action counters maintained by the engine.
#[derive(Clone, Debug)]
pub struct Grammar {
    slots: Vec<Slot>,
    free: Vec<u32>,
    rules: HashMap<u32, Rule>,
    next_rule_id: u32,
    pub(crate) index: DigramIndex,
    pub(crate) counters: ActionCounters,
}

impl Default for Grammar {
    fn default() -> Self {
        Self::new()
    }
}

impl Grammar {
    /// Empty grammar: just the start rule with an empty right-hand side.
    pub fn new() -> Self {
        Self::with_mixer(HashMixer::default())
    }

    /// Empty grammar whose digram index uses the given hash mixer. The
    /// inferred grammar is identical for every mixer; the choice affects
    /// only probe behavior.
    pub fn with_mixer(mixer: HashMixer) -> Self {
        let mut g = Grammar {
            slots: Vec::new(),
            free: Vec::new(),
            rules: HashMap::new(),
            next_rule_id: 0,
            index: DigramIndex::with_mixer(mixer),
            counters: ActionCounters::default(),
        };
        g.add_rule();
        g
    }

    /// Id of the start rule.
    pub fn start(&self) -> RuleId {
        RuleId::START
    }

    pub fn rule(&self, id: RuleId) -> Option<&Rule> {
        self.rules.get(&id.0)
    }

    /// Number of live rules, including the start rule.
    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }

    /// Live rule ids in creation order.
    pub fn rule_ids(&self) -> Vec<RuleId> {
        let mut ids: Vec<RuleId> = self.rules.values().map(|r| r.id).collect();
        ids.sort();
        ids
    }

    /// Creates a fresh empty rule and returns its id.
    pub fn add_rule(&mut self) -> RuleId {
        let id = RuleId(self.next_rule_id);
        self.next_rule_id += 1;
        let guard = self.alloc(Payload::Guard(id));
        // a guard starts self-linked: empty circular rhs
        self.slot_mut(guard).prev = guard;
        self.slot_mut(guard).next = guard;
        self.rules.insert(id.0, Rule { id, guard, users: Vec::new() });
        id
    }

    /// Guard node of a rule's right-hand side.
    pub fn guard_of(&self, id: RuleId) -> Result<NodeHandle, GrammarError> {
        self.rule(id).map(|r| r.guard).ok_or(GrammarError::UnknownRule(id))
    }

    /// True while the handle refers to a node that has not been freed.
    pub fn is_live(&self, h: NodeHandle) -> bool {
        match self.slots.get(h.index as usize) {
            Some(s) => s.live && s.generation == h.generation,
            None => false,
        }
    }

    pub fn is_guard(&self, h: NodeHandle) -> bool {
        matches!(self.slot(h).payload, Payload::Guard(_))
    }

    /// The rule a guard node belongs to; `None` for symbol nodes.
    pub fn guard_rule(&self, h: NodeHandle) -> Option<RuleId> {
        match self.slot(h).payload {
            Payload::Guard(id) => Some(id),
            Payload::Symbol(_) => None,
        }
    }

    /// Value of a symbol node; `None` for guards.
    pub fn value(&self, h: NodeHandle) -> Option<SymbolValue> {
        match self.slot(h).payload {
            Payload::Guard(_) => None,
            Payload::Symbol(v) => Some(v),
        }
    }

    pub fn next(&self, h: NodeHandle) -> NodeHandle {
        self.slot(h).next
    }

    pub fn prev(&self, h: NodeHandle) -> NodeHandle {
        self.slot(h).prev
    }

    /// Splices a new node holding `v` between `at` and its successor and
    /// returns the new node's handle. `at` may be a guard (prepend) or any
    /// live symbol node. Does not touch the digram index.
    ///
    /// Panics on a stale handle: that is a structural-integrity fault in the
    /// caller, not an input error.
    pub fn insert_after(&mut self, at: NodeHandle, v: SymbolValue) -> NodeHandle {
        assert!(self.is_live(at), "insert_after: stale node handle {at:?}");
        let n = self.alloc(Payload::Symbol(v));
        let succ = self.slot(at).next;
        self.slot_mut(n).prev = at;
        self.slot_mut(n).next = succ;
        self.slot_mut(at).next = n;
        self.slot_mut(succ).prev = n;
        if let SymbolValue::NonTerminal(r) = v {
            self.add_user(r, n);
        }
        n
    }

    /// Unsplices a symbol node, relinks its neighbors, and returns the
    /// removed value. Does not touch the digram index.
    ///
    /// Panics on a guard or stale handle (structural-integrity fault).
    pub fn remove(&mut self, n: NodeHandle) -> SymbolValue {
        assert!(self.is_live(n), "remove: stale node handle {n:?}");
        let v = match self.slot(n).payload {
            Payload::Guard(_) => panic!("remove: attempted to remove a guard node"),
            Payload::Symbol(v) => v,
        };
        let (p, s) = (self.slot(n).prev, self.slot(n).next);
        self.slot_mut(p).next = s;
        self.slot_mut(s).prev = p;
        if let SymbolValue::NonTerminal(r) = v {
            self.remove_user(r, n);
        }
        self.release(n);
        v
    }

    /// Right-hand side of a rule in guard-to-guard order.
    pub fn rhs_values(&self, id: RuleId) -> Result<Vec<SymbolValue>, GrammarError> {
        Ok(self.rhs_nodes(id)?.into_iter().filter_map(|h| self.value(h)).collect())
    }

    /// Handles of a rule's symbol nodes in order.
    pub fn rhs_nodes(&self, id: RuleId) -> Result<Vec<NodeHandle>, GrammarError> {
        let guard = self.guard_of(id)?;
        let mut out = Vec::new();
        let mut cur = self.next(guard);
        while cur != guard {
            out.push(cur);
            cur = self.next(cur);
        }
        Ok(out)
    }

    pub fn rhs_len(&self, id: RuleId) -> Result<usize, GrammarError> {
        Ok(self.rhs_nodes(id)?.len())
    }

    /// Count of live symbol nodes across all rules (guards excluded).
    pub fn live_symbol_count(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| s.live && matches!(s.payload, Payload::Symbol(_)))
            .count()
    }

    /// Read-only view of the digram index.
    pub fn digram_index(&self) -> &DigramIndex {
        &self.index
    }

    /// Snapshot of the action tallies.
    pub fn counters(&self) -> ActionCounters {
        self.counters
    }

    // ---- crate-internal structural surgery ---------------------------------

    /// Detaches a rule's whole body chain from its guard and returns the
    /// chain's endpoints. The guard is left self-linked (empty rhs). Node
    /// values, and therefore user lists, are untouched.
    pub(crate) fn detach_body(&mut self, id: RuleId) -> Option<(NodeHandle, NodeHandle)> {
        let guard = self.rule(id)?.guard;
        let first = self.next(guard);
        if first == guard {
            return None;
        }
        let last = self.prev(guard);
        self.slot_mut(guard).next = guard;
        self.slot_mut(guard).prev = guard;
        // endpoints keep their outward links dangling until reattached
        Some((first, last))
    }

    /// Splices a detached chain `first..=last` between `at` and its
    /// successor.
    pub(crate) fn attach_chain_after(&mut self, at: NodeHandle, first: NodeHandle, last: NodeHandle) {
        let succ = self.slot(at).next;
        self.slot_mut(at).next = first;
        self.slot_mut(first).prev = at;
        self.slot_mut(last).next = succ;
        self.slot_mut(succ).prev = last;
    }

    /// Frees an unreferenced rule with an empty body.
    pub(crate) fn remove_rule_record(&mut self, id: RuleId) {
        let rule = self.rules.remove(&id.0).expect("removing unknown rule");
        debug_assert!(rule.users.is_empty(), "removing rule that is still referenced");
        debug_assert_eq!(self.next(rule.guard), rule.guard, "removing rule with non-empty body");
        self.release(rule.guard);
    }

    // ---- node store --------------------------------------------------------

    fn alloc(&mut self, payload: Payload) -> NodeHandle {
        if let Some(index) = self.free.pop() {
            let s = &mut self.slots[index as usize];
            s.live = true;
            s.payload = payload;
            s.user_slot = 0;
            let h = NodeHandle { index, generation: s.generation };
            s.prev = h;
            s.next = h;
            h
        } else {
            let index = u32::try_from(self.slots.len()).expect("node store exceeds u32 indices");
            let h = NodeHandle { index, generation: 1 };
            self.slots.push(Slot {
                generation: 1,
                live: true,
                payload,
                prev: h,
                next: h,
                user_slot: 0,
            });
            h
        }
    }

    fn release(&mut self, h: NodeHandle) {
        debug_assert!(self.is_live(h));
        let s = &mut self.slots[h.index as usize];
        s.live = false;
        s.generation = s.generation.wrapping_add(1);
        self.free.push(h.index);
    }

    fn slot(&self, h: NodeHandle) -> &Slot {
        let s = &self.slots[h.index as usize];
        assert!(
            s.live && s.generation == h.generation,
            "stale node handle {h:?}"
        );
        s
    }

    fn slot_mut(&mut self, h: NodeHandle) -> &mut Slot {
        let s = &mut self.slots[h.index as usize];
        assert!(
            s.live && s.generation == h.generation,
            "stale node handle {h:?}"
        );
        s
    }

    fn add_user(&mut self, r: RuleId, n: NodeHandle) {
        let rule = self
            .rules
            .get_mut(&r.0)
            .unwrap_or_else(|| panic!("non-terminal references unknown rule {r:?}"));
        rule.users.push(n);
        let slot = (rule.users.len() - 1) as u32;
        self.slots[n.index as usize].user_slot = slot;
    }

    fn remove_user(&mut self, r: RuleId, n: NodeHandle) {
        let slot = self.slots[n.index as usize].user_slot as usize;
        let rule = self
            .rules
            .get_mut(&r.0)
            .unwrap_or_else(|| panic!("non-terminal references unknown rule {r:?}"));
        debug_assert_eq!(rule.users[slot], n, "user back-index out of sync");
        rule.users.swap_remove(slot);
        if let Some(&moved) = rule.users.get(slot) {
            self.slots[moved.index as usize].user_slot = slot as u32;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn term(b: u8) -> SymbolValue {
        SymbolValue::Terminal(TokenId(b as u32))
    }

    /// Full-scan reference count: number of NonTerminal(id) nodes found by
    /// walking every rhs.
    fn scan_ref_count(g: &Grammar, id: RuleId) -> usize {
        g.rule_ids()
            .iter()
            .flat_map(|&r| g.rhs_values(r).unwrap())
            .filter(|v| *v == SymbolValue::NonTerminal(id))
            .count()
    }

    #[test]
    fn new_grammar_is_empty() {
        let g = Grammar::new();
        assert_eq!(g.rule_count(), 1);
        assert_eq!(g.rhs_len(g.start()).unwrap(), 0);
        assert_eq!(g.live_symbol_count(), 0);
        assert_eq!(g.rhs_values(g.start()).unwrap(), Vec::new());
    }

    #[test]
    fn insert_after_builds_rhs_in_order() {
        let mut g = Grammar::new();
        let guard = g.guard_of(g.start()).unwrap();
        let a = g.insert_after(guard, term(b'a'));
        assert_eq!(g.rhs_values(g.start()).unwrap(), vec![term(b'a')]);
        g.insert_after(a, term(b'b'));
        assert_eq!(g.rhs_values(g.start()).unwrap(), vec![term(b'a'), term(b'b')]);
    }

    #[test]
    fn nonterminal_insert_and_remove_track_ref_count() {
        let mut g = Grammar::new();
        let a = g.add_rule();
        let guard = g.guard_of(g.start()).unwrap();
        let n1 = g.insert_after(guard, SymbolValue::NonTerminal(a));
        let n2 = g.insert_after(n1, SymbolValue::NonTerminal(a));
        assert_eq!(g.rule(a).unwrap().ref_count(), 2);
        assert_eq!(scan_ref_count(&g, a), 2);

        assert_eq!(g.remove(n1), SymbolValue::NonTerminal(a));
        assert_eq!(g.rule(a).unwrap().ref_count(), 1);
        assert_eq!(scan_ref_count(&g, a), 1);
        assert_eq!(g.remove(n2), SymbolValue::NonTerminal(a));
        assert_eq!(g.rule(a).unwrap().ref_count(), 0);
    }

    #[test]
    fn remove_middle_relinks_neighbors() {
        let mut g = Grammar::new();
        let guard = g.guard_of(g.start()).unwrap();
        let a = g.insert_after(guard, term(b'a'));
        let b = g.insert_after(a, term(b'b'));
        let c = g.insert_after(b, term(b'c'));
        assert_eq!(g.remove(b), term(b'b'));
        assert_eq!(g.rhs_values(g.start()).unwrap(), vec![term(b'a'), term(b'c')]);
        assert_eq!(g.next(a), c);
        assert_eq!(g.prev(c), a);
    }

    #[test]
    fn remove_sole_node_leaves_empty_rhs() {
        let mut g = Grammar::new();
        let guard = g.guard_of(g.start()).unwrap();
        let a = g.insert_after(guard, term(b'a'));
        g.remove(a);
        assert_eq!(g.rhs_len(g.start()).unwrap(), 0);
        assert_eq!(g.next(guard), guard);
    }

    #[test]
    fn link_consistency_holds_after_edits() {
        let mut g = Grammar::new();
        let guard = g.guard_of(g.start()).unwrap();
        let mut at = guard;
        for b in b"abcdef" {
            at = g.insert_after(at, term(*b));
        }
        let nodes = g.rhs_nodes(g.start()).unwrap();
        g.remove(nodes[2]);
        g.remove(nodes[4]);
        // every remaining node still satisfies prev.next == self == next.prev
        let guard_and_rest: Vec<NodeHandle> =
            std::iter::once(guard).chain(g.rhs_nodes(g.start()).unwrap()).collect();
        for h in guard_and_rest {
            assert_eq!(g.next(g.prev(h)), h);
            assert_eq!(g.prev(g.next(h)), h);
        }
    }

    #[test]
    fn rhs_values_matches_hand_built_grammar() {
        // S -> a A d A, A -> b c
        let mut g = Grammar::new();
        let a_rule = g.add_rule();
        let ag = g.guard_of(a_rule).unwrap();
        let b = g.insert_after(ag, term(b'b'));
        g.insert_after(b, term(b'c'));
        let sg = g.guard_of(g.start()).unwrap();
        let mut at = sg;
        for v in [
            term(b'a'),
            SymbolValue::NonTerminal(a_rule),
            term(b'd'),
            SymbolValue::NonTerminal(a_rule),
        ] {
            at = g.insert_after(at, v);
        }
        assert_eq!(
            g.rhs_values(g.start()).unwrap(),
            vec![
                term(b'a'),
                SymbolValue::NonTerminal(a_rule),
                term(b'd'),
                SymbolValue::NonTerminal(a_rule)
            ]
        );
        assert_eq!(g.rhs_values(a_rule).unwrap(), vec![term(b'b'), term(b'c')]);
        assert_eq!(g.rule(a_rule).unwrap().ref_count(), 2);
    }

    #[test]
    fn unknown_rule_is_an_error() {
        let g = Grammar::new();
        assert_eq!(
            g.rhs_values(RuleId(99)),
            Err(GrammarError::UnknownRule(RuleId(99)))
        );
    }

    #[test]
    fn rule_ids_increase_and_are_never_reused() {
        let mut g = Grammar::new();
        let r1 = g.add_rule();
        let r2 = g.add_rule();
        assert!(r1 < r2);
        // simulate deletion of r1
        g.remove_rule_record(r1);
        let r3 = g.add_rule();
        assert!(r3 > r2);
        assert!(g.rule(r1).is_none());
    }

    #[test]
    #[should_panic(expected = "guard")]
    fn removing_a_guard_panics() {
        let mut g = Grammar::new();
        let guard = g.guard_of(g.start()).unwrap();
        g.remove(guard);
    }

    #[test]
    #[should_panic(expected = "stale")]
    fn stale_handle_panics() {
        let mut g = Grammar::new();
        let guard = g.guard_of(g.start()).unwrap();
        let a = g.insert_after(guard, term(b'a'));
        g.remove(a);
        g.insert_after(a, term(b'b'));
    }

    #[test]
    fn freed_slots_are_recycled_with_new_generation() {
        let mut g = Grammar::new();
        let guard = g.guard_of(g.start()).unwrap();
        let a = g.insert_after(guard, term(b'a'));
        g.remove(a);
        let b = g.insert_after(guard, term(b'b'));
        assert!(!g.is_live(a));
        assert!(g.is_live(b));
        assert_ne!(a, b);
    }
}
