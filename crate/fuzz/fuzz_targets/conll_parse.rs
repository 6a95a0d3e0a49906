#![no_main]

use ener::corpus::{format_conll, parse_conll, LabelSchema, Origin};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let schema = LabelSchema::default();
    if let Ok(sentences) = parse_conll(text, &schema, Origin::Id, "fuzz") {
        // Whatever parses must survive a write/read round trip.
        let written = format_conll(&sentences).expect("parsed sentences format");
        let again = parse_conll(&written, &schema, Origin::Id, "fuzz").expect("formatted text parses");
        assert_eq!(again, sentences);
    }
});
