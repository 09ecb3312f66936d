//! Read-only analytics over a grammar: lossless expansion, size and depth
//! measures, the nesting tree, and an exhaustive constraint verifier that
//! rebuilds everything from scratch instead of trusting the incremental
//! index.

use std::collections::{HashMap, HashSet};

use crate::digram::Digram;
use crate::grammar::{Grammar, NodeHandle, RuleId, SymbolValue, TokenId};

/// Errors from analytics that must walk rule references.
#[derive(Clone, Copy, PartialEq, Eq, Debug, thiserror::Error)]
pub enum AnalysisError {
    /// A chain of rule references revisits a rule already being expanded.
    /// Unreachable for engine-produced grammars; hand-written ones can do it.
    #[error("rule reference cycle through {0:?}")]
    Cycle(RuleId),
    /// The queried measure is undefined on an empty grammar.
    #[error("measure undefined on an empty grammar")]
    EmptyGrammar,
}

/// Depth-first, left-to-right expansion of the start rule. Equals the exact
/// token sequence fed so far, after every append.
pub fn expand(g: &Grammar) -> Result<Vec<TokenId>, AnalysisError> {
    expand_rule(g, g.start())
}

/// Expansion of one rule. Iterative: deep hierarchies would overflow the
/// call stack at quite ordinary sizes.
pub fn expand_rule(g: &Grammar, rule: RuleId) -> Result<Vec<TokenId>, AnalysisError> {
    let mut out = Vec::new();
    let mut on_path: HashSet<RuleId> = HashSet::new();
    // stack of (rule, cursor into its rhs)
    let mut stack: Vec<(RuleId, NodeHandle)> = Vec::new();
    on_path.insert(rule);
    let guard = g.guard_of(rule).map_err(|_| AnalysisError::Cycle(rule))?;
    stack.push((rule, g.next(guard)));
    while let Some((r, cursor)) = stack.pop() {
        if g.is_guard(cursor) {
            on_path.remove(&r);
            continue;
        }
        match g.value(cursor).expect("non-guard node") {
            SymbolValue::Terminal(t) => {
                out.push(t);
                stack.push((r, g.next(cursor)));
            }
            SymbolValue::NonTerminal(child) => {
                if !on_path.insert(child) {
                    return Err(AnalysisError::Cycle(child));
                }
                stack.push((r, g.next(cursor)));
                let child_guard = g.guard_of(child).expect("referenced rule exists");
                stack.push((child, g.next(child_guard)));
            }
        }
    }
    Ok(out)
}

/// Sum of right-hand-side lengths over all rules, the start rule included;
/// rule heads are not counted.
pub fn grammar_size(g: &Grammar) -> usize {
    g.rule_ids()
        .iter()
        .map(|&r| g.rhs_len(r).expect("live rule"))
        .sum()
}

/// Length of the longest chain of rule references starting at, and
/// counting, the start rule. A grammar with no auxiliary rules has depth 1.
pub fn depth(g: &Grammar) -> Result<usize, AnalysisError> {
    if g.rhs_len(g.start()).expect("start rule") == 0 {
        return Err(AnalysisError::EmptyGrammar);
    }
    let mut memo: HashMap<RuleId, usize> = HashMap::new();
    // iterative post-order over the rule DAG
    let mut stack: Vec<(RuleId, bool)> = vec![(g.start(), false)];
    let mut on_path: HashSet<RuleId> = HashSet::new();
    while let Some((rule, children_done)) = stack.pop() {
        if children_done {
            let best = g
                .rhs_values(rule)
                .expect("live rule")
                .into_iter()
                .filter_map(|v| match v {
                    SymbolValue::NonTerminal(c) => Some(memo[&c]),
                    SymbolValue::Terminal(_) => None,
                })
                .max()
                .unwrap_or(0);
            memo.insert(rule, best + 1);
            on_path.remove(&rule);
            continue;
        }
        if memo.contains_key(&rule) {
            continue;
        }
        if !on_path.insert(rule) {
            return Err(AnalysisError::Cycle(rule));
        }
        stack.push((rule, true));
        for v in g.rhs_values(rule).expect("live rule") {
            if let SymbolValue::NonTerminal(c) = v {
                if !memo.contains_key(&c) {
                    if on_path.contains(&c) {
                        return Err(AnalysisError::Cycle(c));
                    }
                    stack.push((c, false));
                }
            }
        }
    }
    Ok(memo[&g.start()])
}

/// One node of the nesting tree: a rule with its expansion as children, or
/// a terminal leaf. Leaves, read left to right, reproduce the input.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum HierarchyNode {
    Rule { rule: RuleId, children: Vec<HierarchyNode> },
    Terminal(TokenId),
}

impl HierarchyNode {
    /// Terminal leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<TokenId> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            match node {
                HierarchyNode::Terminal(t) => out.push(*t),
                HierarchyNode::Rule { children, .. } => {
                    for c in children.iter().rev() {
                        stack.push(c);
                    }
                }
            }
        }
        out
    }
}

/// Full nesting tree rooted at the start rule.
pub fn hierarchy(g: &Grammar) -> Result<HierarchyNode, AnalysisError> {
    build_hierarchy(g, g.start(), &mut HashSet::new())
}

fn build_hierarchy(
    g: &Grammar,
    rule: RuleId,
    on_path: &mut HashSet<RuleId>,
) -> Result<HierarchyNode, AnalysisError> {
    if !on_path.insert(rule) {
        return Err(AnalysisError::Cycle(rule));
    }
    let mut children = Vec::new();
    for v in g.rhs_values(rule).map_err(|_| AnalysisError::Cycle(rule))? {
        match v {
            SymbolValue::Terminal(t) => children.push(HierarchyNode::Terminal(t)),
            SymbolValue::NonTerminal(c) => children.push(build_hierarchy(g, c, on_path)?),
        }
    }
    on_path.remove(&rule);
    Ok(HierarchyNode::Rule { rule, children })
}

/// Size, rule-count, and depth measures plus the engine's action tallies.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct GrammarStats {
    /// Input length consumed by the engine (zero for hand-built grammars).
    pub input_len: u64,
    /// Grammar size: total rhs symbols, heads excluded.
    pub size: usize,
    /// Rule count excluding the start rule.
    pub rule_count: usize,
    /// Hierarchy depth; 0 only for an empty grammar.
    pub depth: usize,
    pub counters: crate::engine::ActionCounters,
}

/// Collects the stats block for a grammar.
pub fn stats(g: &Grammar) -> GrammarStats {
    GrammarStats {
        input_len: g.counters().symbols_appended,
        size: grammar_size(g),
        rule_count: g.rule_count() - 1,
        depth: depth(g).unwrap_or(0),
        counters: g.counters(),
    }
}

/// Outcome of the exhaustive constraint scan. Reports, never fails.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ConstraintReport {
    /// No digram occurs twice, except overlapping occurrences inside a run
    /// of one repeated symbol.
    pub p1_ok: bool,
    /// Every rule but the start rule is referenced at least twice.
    pub p2_ok: bool,
    /// Every node's prev/next links are mutually consistent and every live
    /// node is reachable from exactly one rule walk.
    pub link_ok: bool,
    /// Stored reference counts equal the counts found by scanning.
    pub refcount_ok: bool,
    /// The index holds exactly the scanned digram set, every entry pointing
    /// at a live occurrence of its key.
    pub index_ok: bool,
}

impl ConstraintReport {
    pub fn all_ok(&self) -> bool {
        self.p1_ok && self.p2_ok && self.link_ok && self.refcount_ok && self.index_ok
    }
}

/// Exhaustive verifier: walks every rule, rebuilding the digram population
/// and reference counts from scratch. The incremental index is consulted
/// only to be cross-checked.
pub fn verify_constraints(g: &Grammar) -> ConstraintReport {
    let mut link_ok = true;
    let mut reachable = 0usize;
    // digram -> occurrences as (left, right) handles
    let mut occurrences: HashMap<Digram, Vec<(NodeHandle, NodeHandle)>> = HashMap::new();
    let mut scanned_refs: HashMap<RuleId, usize> = HashMap::new();
    let node_budget = g.live_symbol_count() + g.rule_count();

    for id in g.rule_ids() {
        let guard = g.guard_of(id).expect("live rule");
        let mut cur = g.next(guard);
        let mut steps = 0usize;
        let mut prev_symbol: Option<NodeHandle> = None;
        while cur != guard {
            steps += 1;
            if steps > node_budget {
                // walk does not return to the guard: corrupt links
                return ConstraintReport {
                    p1_ok: false,
                    p2_ok: false,
                    link_ok: false,
                    refcount_ok: false,
                    index_ok: false,
                };
            }
            if g.next(g.prev(cur)) != cur || g.prev(g.next(cur)) != cur {
                link_ok = false;
            }
            reachable += 1;
            let value = match g.value(cur) {
                Some(v) => v,
                None => {
                    link_ok = false; // a second guard inside a rhs
                    cur = g.next(cur);
                    continue;
                }
            };
            if let SymbolValue::NonTerminal(r) = value {
                *scanned_refs.entry(r).or_default() += 1;
                if g.rule(r).is_none() {
                    link_ok = false;
                }
            }
            if let Some(p) = prev_symbol {
                let d = Digram::new(g.value(p).expect("symbol"), value);
                occurrences.entry(d).or_default().push((p, cur));
            }
            prev_symbol = Some(cur);
            cur = g.next(cur);
        }
    }

    // all live nodes accounted for by rule walks
    if reachable != g.live_symbol_count() {
        link_ok = false;
    }

    // p1: duplicates must pairwise share a node (only runs of one symbol)
    let mut p1_ok = true;
    for occ in occurrences.values() {
        for (i, a) in occ.iter().enumerate() {
            for b in &occ[i + 1..] {
                let disjoint = a.0 != b.0 && a.0 != b.1 && a.1 != b.0 && a.1 != b.1;
                if disjoint {
                    p1_ok = false;
                }
            }
        }
    }

    // p2 from scanned counts, not stored ones
    let p2_ok = g
        .rule_ids()
        .iter()
        .filter(|&&r| r != g.start())
        .all(|r| scanned_refs.get(r).copied().unwrap_or(0) >= 2);

    let refcount_ok = g.rule_ids().iter().all(|&r| {
        let stored = g.rule(r).expect("live rule").ref_count();
        stored == scanned_refs.get(&r).copied().unwrap_or(0)
    }) && scanned_refs.keys().all(|r| g.rule(*r).is_some());

    // index against the scan: same key set, each entry a live occurrence
    let mut index_ok = true;
    let mut index_keys: HashSet<Digram> = HashSet::new();
    for (d, loc) in g.digram_index().iter() {
        index_keys.insert(d);
        let valid = g.is_live(loc)
            && !g.is_guard(loc)
            && g.value(loc) == Some(d.left)
            && !g.is_guard(g.next(loc))
            && g.value(g.next(loc)) == Some(d.right);
        if !valid {
            index_ok = false;
        }
    }
    if index_keys.len() != g.digram_index().len() {
        index_ok = false;
    }
    let scanned_keys: HashSet<Digram> = occurrences.keys().copied().collect();
    if index_keys != scanned_keys {
        index_ok = false;
    }

    ConstraintReport { p1_ok, p2_ok, link_ok, refcount_ok, index_ok }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn term(b: u8) -> SymbolValue {
        SymbolValue::Terminal(TokenId(b as u32))
    }

    fn tokens(s: &str) -> Vec<TokenId> {
        s.bytes().map(|b| TokenId(b as u32)).collect()
    }

    fn feed(input: &str) -> Grammar {
        let mut g = Grammar::new();
        for b in input.bytes() {
            g.append_terminal(TokenId(b as u32));
        }
        g
    }

    /// S -> a A d A, A -> b c, built without the engine.
    fn nested_pair_grammar() -> (Grammar, RuleId) {
        let mut g = Grammar::new();
        let a = g.add_rule();
        let ag = g.guard_of(a).unwrap();
        let b = g.insert_after(ag, term(b'b'));
        g.insert_after(b, term(b'c'));
        let sg = g.guard_of(g.start()).unwrap();
        let mut at = sg;
        for v in [term(b'a'), SymbolValue::NonTerminal(a), term(b'd'), SymbolValue::NonTerminal(a)] {
            at = g.insert_after(at, v);
        }
        (g, a)
    }

    #[test]
    fn expand_reproduces_nested_grammar() {
        let (g, _) = nested_pair_grammar();
        assert_eq!(expand(&g).unwrap(), tokens("abcdbc"));
    }

    #[test]
    fn expand_two_level_hierarchy() {
        // S -> A A, A -> a B d B, B -> b c
        let mut g = Grammar::new();
        let a = g.add_rule();
        let b = g.add_rule();
        let bg = g.guard_of(b).unwrap();
        let n = g.insert_after(bg, term(b'b'));
        g.insert_after(n, term(b'c'));
        let ag = g.guard_of(a).unwrap();
        let mut at = ag;
        for v in [term(b'a'), SymbolValue::NonTerminal(b), term(b'd'), SymbolValue::NonTerminal(b)] {
            at = g.insert_after(at, v);
        }
        let sg = g.guard_of(g.start()).unwrap();
        let mut at = sg;
        for v in [SymbolValue::NonTerminal(a), SymbolValue::NonTerminal(a)] {
            at = g.insert_after(at, v);
        }
        assert_eq!(expand(&g).unwrap(), tokens("abcdbcabcdbc"));
    }

    #[test]
    fn expand_empty_grammar_is_empty() {
        assert_eq!(expand(&Grammar::new()).unwrap(), Vec::new());
    }

    #[test]
    fn expand_detects_reference_cycle() {
        let mut g = Grammar::new();
        let a = g.add_rule();
        let b = g.add_rule();
        let ag = g.guard_of(a).unwrap();
        g.insert_after(ag, SymbolValue::NonTerminal(b));
        let bg = g.guard_of(b).unwrap();
        g.insert_after(bg, SymbolValue::NonTerminal(a));
        let sg = g.guard_of(g.start()).unwrap();
        g.insert_after(sg, SymbolValue::NonTerminal(a));
        assert!(matches!(expand(&g), Err(AnalysisError::Cycle(_))));
        assert!(matches!(hierarchy(&g), Err(AnalysisError::Cycle(_))));
        assert!(matches!(depth(&g), Err(AnalysisError::Cycle(_))));
    }

    #[test]
    fn grammar_size_counts_rhs_symbols_only() {
        let (g, _) = nested_pair_grammar();
        assert_eq!(grammar_size(&g), 6);
        assert_eq!(grammar_size(&Grammar::new()), 0);
        let g = feed("abcdbcabcd");
        assert_eq!(grammar_size(&g), 8);
        // grammar size equals live symbol nodes
        assert_eq!(grammar_size(&g), g.live_symbol_count());
    }

    #[test]
    fn depth_counts_start_rule() {
        let g = feed("aaa");
        assert_eq!(depth(&g).unwrap(), 1);
        let (g, _) = nested_pair_grammar();
        assert_eq!(depth(&g).unwrap(), 2);
        assert!(matches!(depth(&Grammar::new()), Err(AnalysisError::EmptyGrammar)));
    }

    #[test]
    fn depth_of_prefix_ladder_is_five() {
        // S -> A B C D D f, A -> ab, B -> Ac, C -> Bd, D -> Ce
        let g = feed("ababcabcdabcdeabcdef");
        assert_eq!(depth(&g).unwrap(), 5);
    }

    #[test]
    fn hierarchy_mirrors_rule_nesting() {
        let (g, a) = nested_pair_grammar();
        let root = hierarchy(&g).unwrap();
        let HierarchyNode::Rule { rule, children } = &root else {
            panic!("root must be a rule")
        };
        assert_eq!(*rule, g.start());
        assert_eq!(children.len(), 4);
        assert_eq!(children[0], HierarchyNode::Terminal(TokenId(b'a' as u32)));
        let HierarchyNode::Rule { rule: r1, children: inner } = &children[1] else {
            panic!("second child must be the pair rule")
        };
        assert_eq!(*r1, a);
        assert_eq!(inner.len(), 2);
        assert_eq!(root.leaves(), tokens("abcdbc"));
    }

    #[test]
    fn hierarchy_of_single_terminal() {
        let g = feed("a");
        let root = hierarchy(&g).unwrap();
        assert_eq!(
            root,
            HierarchyNode::Rule {
                rule: g.start(),
                children: vec![HierarchyNode::Terminal(TokenId(b'a' as u32))],
            }
        );
    }

    #[test]
    fn hierarchy_leaves_equal_expansion() {
        for input in ["abcdbcabcd", "aabaaab", "aaaaaaaaaaaaaaaa", "xyxyzxyzz"] {
            let g = feed(input);
            assert_eq!(hierarchy(&g).unwrap().leaves(), expand(&g).unwrap());
        }
    }

    #[test]
    fn verifier_accepts_engine_output() {
        for input in ["", "a", "abcdbcabcd", "aaaaaaaa", "abcabcabcabc", "aabaaab"] {
            let g = feed(input);
            let report = verify_constraints(&g);
            assert!(report.all_ok(), "input {input}: {report:?}");
        }
    }

    #[test]
    fn verifier_flags_duplicate_digram() {
        // S -> a b a b, hand-built: digram ab occurs twice, disjoint
        let mut g = Grammar::new();
        let sg = g.guard_of(g.start()).unwrap();
        let mut at = sg;
        for b in b"abab" {
            at = g.insert_after(at, term(*b));
        }
        g.rebuild_digram_index();
        let report = verify_constraints(&g);
        assert!(!report.p1_ok);
        assert!(report.p2_ok && report.link_ok && report.refcount_ok);
    }

    #[test]
    fn verifier_permits_overlapping_run() {
        let g = feed("aaa");
        assert!(verify_constraints(&g).all_ok());
    }

    #[test]
    fn verifier_flags_singly_used_rule() {
        // S -> A b, A -> x y: rule A referenced once
        let mut g = Grammar::new();
        let a = g.add_rule();
        let ag = g.guard_of(a).unwrap();
        let x = g.insert_after(ag, term(b'x'));
        g.insert_after(x, term(b'y'));
        let sg = g.guard_of(g.start()).unwrap();
        let n = g.insert_after(sg, SymbolValue::NonTerminal(a));
        g.insert_after(n, term(b'b'));
        g.rebuild_digram_index();
        let report = verify_constraints(&g);
        assert!(!report.p2_ok);
        assert!(report.p1_ok && report.link_ok && report.refcount_ok && report.index_ok);
    }

    #[test]
    fn stats_block_for_engine_grammar() {
        let g = feed("abcdbcabcd");
        let s = stats(&g);
        assert_eq!(s.input_len, 10);
        assert_eq!(s.size, 8);
        assert_eq!(s.rule_count, 2);
        assert_eq!(s.depth, 3);
    }
}
