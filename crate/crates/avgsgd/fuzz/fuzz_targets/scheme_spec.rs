//! Fuzz the scheme-spec parser: no panics on arbitrary input, and accepted
//! specs round-trip through their canonical string.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(spec) = avgsgd::SchemeSpec::parse(text) else {
        return;
    };
    let canonical = spec.to_spec_string();
    let reparsed = avgsgd::SchemeSpec::parse(&canonical)
        .expect("canonical spec string must parse");
    assert_eq!(reparsed, spec, "canonical string changed the spec");
});
