mod common;

use proptest::prelude::*;
use relicomp::netlist::{parse, serialize, ParseError};
use relicomp::Error;

fn positioned(e: &Error) -> bool {
    match e {
        Error::Parse(ParseError::NoOutputs) => true,
        Error::Parse(
            ParseError::Syntax { line, column, .. }
            | ParseError::Undefined { line, column, .. }
            | ParseError::Duplicate { line, column, .. }
            | ParseError::TableLength { line, column, .. }
            | ParseError::Arity { line, column, .. },
        ) => *line >= 1 && *column >= 1,
        Error::InvalidCircuit(v) => !v.is_empty(),
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn round_trip_is_isomorphic(c in common::circuits(1..=6, 1..=42, 3, true)) {
        prop_assert!(c.len() <= 50);
        let text = serialize(&c).unwrap();
        let back = parse(&text).unwrap();
        prop_assert!(back.is_isomorphic(&c));
        prop_assert_eq!(serialize(&back).unwrap(), text);
    }

    #[test]
    fn parse_is_total_on_arbitrary_text(s in "\\PC{0,200}") {
        match parse(&s) {
            Ok(c) => prop_assert!(c.validate().is_ok()),
            Err(e) => prop_assert!(positioned(&e), "unpositioned error {e:?}"),
        }
    }

    #[test]
    fn parse_is_total_on_mutated_netlists(
        c in common::circuits(1..=4, 1..=8, 3, true),
        edits in proptest::collection::vec((any::<usize>(), prop_oneof![Just(None), any::<char>().prop_map(Some)]), 1..6),
    ) {
        let mut chars: Vec<char> = serialize(&c).unwrap().chars().collect();
        for (pos, edit) in edits {
            let at = pos % (chars.len() + 1);
            match edit {
                None if at < chars.len() => { chars.remove(at); }
                None => {}
                Some(ch) => chars.insert(at, ch),
            }
        }
        let text: String = chars.into_iter().collect();
        match parse(&text) {
            Ok(c) => prop_assert!(c.validate().is_ok()),
            Err(e) => prop_assert!(positioned(&e), "unpositioned error {e:?}"),
        }
    }
}
