//! Randomized properties of the temporal-logic semantics, checked over
//! seeded generators so every run exercises the same cases.

use smc_core::bltlc::{check_trace_offline, desugar_formula, parse_formula, Formula, Interval};
use smc_core::expr::{Slot, SymbolTable};
use smc_core::model::State;
use smc_core::ssa::{RngStream, Trace};

const SPECIES: [&str; 2] = ["s0", "s1"];

fn symbols() -> SymbolTable {
    let mut st = SymbolTable::new();
    for (i, name) in SPECIES.iter().enumerate() {
        st.bind(name, Slot::Species(i));
    }
    st
}

fn random_trace(rng: &mut RngStream) -> Trace {
    let len = 1 + (rng.next_u64() % 12) as usize;
    let mut states = Vec::with_capacity(len);
    let mut entries = Vec::with_capacity(len);
    let mut t = 0.0;
    for _ in 0..len {
        states.push(State::new(vec![rng.next_u64() % 8, rng.next_u64() % 8]));
        entries.push(t);
        t += 0.05 + 0.45 * rng.uniform();
    }
    Trace::new(states, entries, t).unwrap()
}

fn random_bound(rng: &mut RngStream) -> String {
    match rng.next_u64() % 3 {
        0 => String::new(),
        1 => {
            let lo = (rng.next_u64() % 3) as f64 * 0.2;
            format!("[{lo},inf)")
        }
        _ => {
            let lo = (rng.next_u64() % 4) as f64 * 0.25;
            let hi = lo + 0.25 + (rng.next_u64() % 8) as f64 * 0.25;
            format!("[{lo},{hi}]")
        }
    }
}

fn random_atom(rng: &mut RngStream) -> String {
    let sp = SPECIES[(rng.next_u64() % 2) as usize];
    let cmp = ["<", "<=", ">=", ">", "==", "!="][(rng.next_u64() % 6) as usize];
    let k = rng.next_u64() % 8;
    format!("{sp} {cmp} {k}")
}

fn random_formula(rng: &mut RngStream, depth: usize) -> String {
    if depth == 0 {
        return random_atom(rng);
    }
    match rng.next_u64() % 10 {
        0 | 1 => random_atom(rng),
        2 => format!("!({})", random_formula(rng, depth - 1)),
        3 => format!(
            "({}) & ({})",
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1)
        ),
        4 => format!(
            "({}) | ({})",
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1)
        ),
        5 => format!(
            "X{} ({})",
            random_bound(rng),
            random_formula(rng, depth - 1)
        ),
        6 | 7 => format!(
            "({}) U{} ({})",
            random_formula(rng, depth - 1),
            random_bound(rng),
            random_formula(rng, depth - 1)
        ),
        8 => format!(
            "F{} ({})",
            random_bound(rng),
            random_formula(rng, depth - 1)
        ),
        _ => format!(
            "G{} ({})",
            random_bound(rng),
            random_formula(rng, depth - 1)
        ),
    }
}

#[test]
fn surface_and_desugared_forms_agree() {
    let st = symbols();
    let mut rng = RngStream::seed_from(0x5EED_0001);
    for case in 0..1000 {
        let src = random_formula(&mut rng, 3);
        let f = parse_formula(&src, &st).expect(&src);
        let d = desugar_formula(f.clone());
        let trace = random_trace(&mut rng);
        let direct = check_trace_offline(&f, &trace, 0, &[]).unwrap();
        let lowered = check_trace_offline(&d, &trace, 0, &[]).unwrap();
        assert_eq!(direct, lowered, "case {case}: `{src}` on {trace:?}");
    }
}

#[test]
fn globally_is_the_dual_of_finally() {
    let st = symbols();
    let mut rng = RngStream::seed_from(0x5EED_0002);
    for _ in 0..500 {
        let inner_src = random_formula(&mut rng, 2);
        let bound = random_bound(&mut rng);
        let g = parse_formula(&format!("G{bound} ({inner_src})"), &st).unwrap();
        let not_f_not = parse_formula(&format!("!(F{bound} (!({inner_src})))"), &st).unwrap();
        let trace = random_trace(&mut rng);
        assert_eq!(
            check_trace_offline(&g, &trace, 0, &[]).unwrap(),
            check_trace_offline(&not_f_not, &trace, 0, &[]).unwrap(),
            "duality failed for `{inner_src}` bound `{bound}`"
        );
    }
}

#[test]
fn until_is_monotone_in_the_upper_bound() {
    let st = symbols();
    let mut rng = RngStream::seed_from(0x5EED_0003);
    let mut hits = 0;
    for _ in 0..2000 {
        let lhs = random_atom(&mut rng);
        let rhs = random_atom(&mut rng);
        let t1 = 0.2 + 2.0 * rng.uniform();
        let t2 = t1 + 2.0 * rng.uniform();
        let narrow = parse_formula(&format!("({lhs}) U[0,{t1}] ({rhs})"), &st).unwrap();
        let wide = parse_formula(&format!("({lhs}) U[0,{t2}] ({rhs})"), &st).unwrap();
        let trace = random_trace(&mut rng);
        if check_trace_offline(&narrow, &trace, 0, &[]).unwrap() {
            hits += 1;
            assert!(
                check_trace_offline(&wide, &trace, 0, &[]).unwrap(),
                "widening [0,{t1}] to [0,{t2}] lost `{lhs} U {rhs}`"
            );
        }
    }
    assert!(
        hits > 100,
        "generator produced too few satisfied cases: {hits}"
    );
}

#[test]
fn unbounded_until_holds_at_every_position_up_to_its_witness() {
    let st = symbols();
    let mut rng = RngStream::seed_from(0x5EED_0004);
    let mut exercised = 0;
    for _ in 0..2000 {
        let lhs_src = random_atom(&mut rng);
        let rhs_src = random_atom(&mut rng);
        let f = parse_formula(&format!("({lhs_src}) U ({rhs_src})"), &st).unwrap();
        let (lhs, rhs) = match &f {
            Formula::Until(_, a, b) => (a.as_ref().clone(), b.as_ref().clone()),
            _ => unreachable!(),
        };
        let trace = random_trace(&mut rng);
        if !check_trace_offline(&f, &trace, 0, &[]).unwrap() {
            continue;
        }
        // Recover the earliest witness, then the formula must hold when
        // evaluation starts anywhere between the origin and that witness
        // (for an unbounded interval the elapsed-time shift is vacuous).
        let mut witness = None;
        for k in 0..trace.len() {
            if check_trace_offline(&rhs, &trace, k, &[]).unwrap() {
                witness = Some(k);
                break;
            }
            if !check_trace_offline(&lhs, &trace, k, &[]).unwrap() {
                break;
            }
        }
        let witness = witness.expect("satisfied Until must have a witness");
        for m in 0..=witness {
            assert!(
                check_trace_offline(&f, &trace, m, &[]).unwrap(),
                "`{lhs_src} U {rhs_src}` true at 0 with witness {witness}, false at {m}"
            );
        }
        exercised += 1;
    }
    assert!(exercised > 100, "too few satisfied cases: {exercised}");
}

#[test]
fn printed_formulas_reparse_to_the_same_tree() {
    let st = symbols();
    let mut rng = RngStream::seed_from(0x5EED_0005);
    for case in 0..1000 {
        let src = random_formula(&mut rng, 3);
        let f = parse_formula(&src, &st).unwrap();
        let printed = f.to_string();
        let reparsed = parse_formula(&printed, &st)
            .unwrap_or_else(|e| panic!("case {case}: `{printed}`: {e}"));
        assert_eq!(f, reparsed, "case {case}: `{src}` printed as `{printed}`");
    }
}

#[test]
fn bound_parsing_accepts_both_interval_closers() {
    let st = symbols();
    let a = parse_formula("F[0,2] (s0 == 0)", &st).unwrap();
    let b = parse_formula("F[0,2) (s0 == 0)", &st).unwrap();
    assert_eq!(a, b);
    match a {
        Formula::Finally(iv, _) => assert_eq!(iv, Interval::new(0.0, 2.0).unwrap()),
        _ => unreachable!(),
    }
}
