use sequitur::analysis;
use sequitur::testkit::full_scan_oracle;
use sequitur::{Grammar, SymbolValue, TokenId};
use std::collections::BTreeSet;

fn name(v: SymbolValue) -> String {
    match v {
        SymbolValue::Terminal(t) => ((b'a' + t.0 as u8) as char).to_string(),
        SymbolValue::NonTerminal(r) => format!("<{}>", r.0),
    }
}

fn dump(g: &Grammar) {
    for id in g.rule_ids() {
        let rhs: String = g.rhs_values(id).unwrap().into_iter().map(name).collect();
        print!("  {} -> {}   ", id.0, rhs);
    }
    println!();
    let mut ix: BTreeSet<String> = BTreeSet::new();
    for (d, _) in g.digram_index().iter() {
        ix.insert(format!("{}{}", name(d.left), name(d.right)));
    }
    let mut scan: BTreeSet<String> = BTreeSet::new();
    for id in g.rule_ids() {
        let vs = g.rhs_values(id).unwrap();
        for w in vs.windows(2) {
            scan.insert(format!("{}{}", name(w[0]), name(w[1])));
        }
    }
    println!("  index: {:?}", ix);
    if ix != scan {
        println!("  MISMATCH extra: {:?}, missing: {:?}",
            ix.difference(&scan).collect::<Vec<_>>(),
            scan.difference(&ix).collect::<Vec<_>>());
    }
}

fn main() {
    let raw = [0u32, 3, 2, 3, 1, 1, 1, 2, 0, 0, 0, 0, 3, 1];
    let mut g = Grammar::new();
    for (i, &t) in raw.iter().enumerate() {
        g.append_terminal(TokenId(t));
        let rep = full_scan_oracle(&g);
        println!("after symbol {} ({}):", i + 1, (b'a' + t as u8) as char);
        dump(&g);
        if !rep.all_ok() {
            println!("  oracle: {:?}", rep);
            break;
        }
        let _ = analysis::expand(&g).unwrap();
    }
}
