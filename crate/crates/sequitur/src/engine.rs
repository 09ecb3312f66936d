//! The inference engine: appends terminals to the start rule and restores
//! the two grammar constraints after every new link.
//!
//! Every time a link between two symbols is created, the resulting digram
//! is offered to the index with a single probe. A fresh digram is simply
//! recorded. A repeated, non-overlapping digram is rewritten: if the other
//! occurrence is exactly some rule's whole right-hand side that rule is
//! reused, otherwise a new two-symbol rule is formed and both occurrences
//! are replaced. Each replacement breaks and creates links, so the process
//! cascades until the grammar is stable. Whenever a replacement drops a
//! rule's reference count to one, the rule is inlined at its remaining use
//! and deleted, which is how long rules grow out of short-lived two-symbol
//! ones.
//!
//! Index upkeep is fused with link edits: a link being broken withdraws its
//! digram's entry only if that entry points at the broken occurrence, and a
//! new rule's body takes over the entry for the digram it absorbs.

use crate::digram::{Digram, InsertOutcome};
use crate::grammar::{Grammar, NodeHandle, RuleId, SymbolValue, TokenId};

/// Tallies of the five kinds of work the engine performs. Sizes and rule
/// counts are arithmetic consequences of these, which is what makes the
/// engine's linear-time accounting checkable from outside.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct ActionCounters {
    /// Symbols appended to the start rule (equals the input length).
    pub symbols_appended: u64,
    /// New digrams recorded in the index.
    pub digrams_indexed: u64,
    /// Digram occurrences replaced by an existing rule's head.
    pub rules_reused: u64,
    /// Rules created.
    pub rules_created: u64,
    /// Rules deleted after their reference count fell to one.
    pub rules_deleted: u64,
}

impl ActionCounters {
    /// Total work events.
    pub fn total(&self) -> u64 {
        self.symbols_appended
            + self.digrams_indexed
            + self.rules_reused
            + self.rules_created
            + self.rules_deleted
    }
}

impl Grammar {
    /// Feeds one terminal: appends it to the start rule and restores both
    /// constraints before returning. The grammar is valid between any two
    /// calls.
    pub fn append_terminal(&mut self, t: TokenId) {
        let guard = self.guard_of(self.start()).expect("start rule always exists");
        let last = self.prev(guard);
        self.insert_after(last, SymbolValue::Terminal(t));
        self.counters.symbols_appended += 1;
        if last != guard {
            self.on_link(last);
        }
    }

    /// Processes the freshly created link `(left, left.next)`.
    ///
    /// Exactly one of: the digram is recorded as new; it overlaps its stored
    /// occurrence inside a run of equal symbols and is skipped (the earlier
    /// entry is kept); the stored occurrence is a whole rule body and that
    /// rule is reused; otherwise a new rule is formed. Rewrites cascade via
    /// the links they create.
    fn on_link(&mut self, left: NodeHandle) {
        if !self.is_live(left) || self.is_guard(left) {
            return;
        }
        let right = self.next(left);
        if self.is_guard(right) {
            return;
        }
        let digram = Digram::new(
            self.value(left).expect("left is a symbol node"),
            self.value(right).expect("right is a symbol node"),
        );
        match self.index.insert_or_match(digram, left) {
            InsertOutcome::Inserted => {
                self.counters.digrams_indexed += 1;
            }
            InsertOutcome::Matched(existing) => {
                // Overlapping occurrences (possible only inside a run of
                // identical symbols) form no rule; the earlier entry stays.
                if existing == left || self.next(existing) == left || right == existing {
                    return;
                }
                // A stored occurrence is a whole rule body when its left
                // node follows the guard and its right node precedes it.
                let before = self.prev(existing);
                let complete_rule = self
                    .guard_rule(before)
                    .filter(|_| self.is_guard(self.next(self.next(existing))))
                    .filter(|&r| r != self.start());
                match complete_rule {
                    Some(rule) => self.reuse_rule(rule, left),
                    None => {
                        self.create_rule(existing, left);
                    }
                }
            }
        }
    }

    /// Replaces the digram at `left` with the head of `rule`, whose body is
    /// exactly that digram.
    fn reuse_rule(&mut self, rule: RuleId, left: NodeHandle) {
        self.counters.rules_reused += 1;
        self.replace_digram(left, rule);
    }

    /// Forms a new rule from the digram at `fresh` and replaces both the
    /// stored occurrence and the fresh one with its head. Returns the new
    /// rule's id.
    fn create_rule(&mut self, existing: NodeHandle, fresh: NodeHandle) -> RuleId {
        self.counters.rules_created += 1;
        let digram = Digram::new(
            self.value(fresh).expect("fresh left node"),
            self.value(self.next(fresh)).expect("fresh right node"),
        );
        let rule = self.add_rule();
        let guard = self.guard_of(rule).expect("new rule exists");
        let first = self.insert_after(guard, digram.left);
        self.insert_after(first, digram.right);
        // The body now holds the canonical occurrence: re-point the entry
        // rather than probing again.
        self.index
            .update_location(digram, first)
            .expect("matched digram must be indexed");
        self.replace_digram(existing, rule);
        self.replace_digram(fresh, rule);
        rule
    }

    /// Replaces the two nodes starting at `left` with one reference to
    /// `rule`: withdraws entries owned by the broken links, runs the
    /// utility check on both removed values, then processes the new
    /// boundary links, predecessor side first.
    fn replace_digram(&mut self, left: NodeHandle, rule: RuleId) {
        let right = self.next(left);
        let before = self.prev(left);
        let after = self.next(right);
        let left_value = self.value(left).expect("left symbol");
        let right_value = self.value(right).expect("right symbol");
        let before_value = self.value(before); // None for a guard
        let after_value = self.value(after);

        if let Some(bv) = before_value {
            self.index.forget(Digram::new(bv, left_value), before);
        }
        // Usually a no-op: the entry for the digram itself points at the
        // other occurrence or at the rule body.
        self.index.forget(Digram::new(left_value, right_value), left);
        if let Some(av) = after_value {
            self.index.forget(Digram::new(right_value, av), right);
        }

        self.remove(left);
        self.remove(right);
        let head = self.insert_after(before, SymbolValue::NonTerminal(rule));

        // Overlap repair: inside a run of one repeated symbol only a single
        // occurrence of the doubled digram is indexed. If a broken boundary
        // link was such a pair, an overlapping occurrence may survive it and
        // must take over the entry; offering it is a no-op when an entry
        // still exists.
        if before_value == Some(left_value) {
            let further = self.prev(before);
            if self.value(further) == Some(left_value) {
                self.index
                    .insert_or_match(Digram::new(left_value, left_value), further);
            }
        }
        if after_value == Some(right_value) {
            let further = self.next(after);
            if self.value(further) == Some(right_value) {
                self.index
                    .insert_or_match(Digram::new(right_value, right_value), after);
            }
        }

        self.check_utility(left_value);
        self.check_utility(right_value);
        self.cascade(before, head);
    }

    /// Deletes a rule whose reference count fell to one: moves its body in
    /// place of the remaining reference and processes the splice
    /// boundaries.
    fn delete_rule(&mut self, rule: RuleId) {
        self.counters.rules_deleted += 1;
        let site = self.rule(rule).expect("rule exists").users()[0];
        let before = self.prev(site);
        let after = self.next(site);
        let head_value = SymbolValue::NonTerminal(rule);
        if !self.is_guard(before) {
            let d = Digram::new(self.value(before).expect("symbol"), head_value);
            self.index.forget(d, before);
        }
        if !self.is_guard(after) {
            let d = Digram::new(head_value, self.value(after).expect("symbol"));
            self.index.forget(d, site);
        }
        let (first, last) = self
            .detach_body(rule)
            .expect("deleted rule has a non-empty body");
        self.remove(site);
        self.attach_chain_after(before, first, last);
        self.remove_rule_record(rule);
        // Body nodes moved wholesale, so entries pointing into the body
        // stay valid; only the splice boundaries are new links.
        if self.is_live(before)
            && !self.is_guard(before)
            && self.is_live(first)
            && self.next(before) == first
        {
            self.on_link(before);
        }
        if self.is_live(last) && !self.is_guard(self.next(last)) {
            self.on_link(last);
        }
    }

    /// Deletes the referenced rule if its reference count has fallen to
    /// one. Rules already gone (deleted by a nested rewrite) are skipped,
    /// as is the start rule.
    fn check_utility(&mut self, v: SymbolValue) {
        if let SymbolValue::NonTerminal(r) = v {
            if r != self.start() && self.rule(r).is_some_and(|rule| rule.ref_count() == 1) {
                self.delete_rule(r);
            }
        }
    }

    /// Rebuilds the digram index from a full scan, keeping the first
    /// occurrence of any repeated digram. For grammars assembled by
    /// structural edits that bypass the engine, such as parsed documents;
    /// such grammars may legitimately violate the constraints, which
    /// [`crate::analysis::verify_constraints`] will then report.
    pub fn rebuild_digram_index(&mut self) {
        let mixer = self.index.mixer();
        self.index = crate::digram::DigramIndex::with_mixer(mixer);
        for id in self.rule_ids() {
            let nodes = self.rhs_nodes(id).expect("live rule");
            for pair in nodes.windows(2) {
                let d = Digram::new(
                    self.value(pair[0]).expect("symbol"),
                    self.value(pair[1]).expect("symbol"),
                );
                self.index.insert_or_match(d, pair[0]);
            }
        }
    }

    /// Processes the boundary links around a freshly inserted `head` node,
    /// predecessor side first, then successor side. Either side is skipped
    /// if an inner rewrite already consumed it; re-offered links are
    /// harmless because an entry pointing at its own offerer reads as an
    /// overlap.
    fn cascade(&mut self, before: NodeHandle, head: NodeHandle) {
        if self.is_live(before)
            && self.is_live(head)
            && !self.is_guard(before)
            && self.next(before) == head
        {
            self.on_link(before);
        }
        if self.is_live(head) && !self.is_guard(self.next(head)) {
            self.on_link(head);
        }
    }
}
