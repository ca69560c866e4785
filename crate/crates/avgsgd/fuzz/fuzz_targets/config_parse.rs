//! Fuzz the experiment-config parser: arbitrary bytes must never panic it,
//! and any accepted config must round-trip through its canonical text form.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = avgsgd::ExperimentConfig::parse(text) else {
        return;
    };
    let canonical = config.format();
    let reparsed = avgsgd::ExperimentConfig::parse(&canonical)
        .expect("canonical config text must parse");
    assert_eq!(reparsed, config, "canonical text changed the config");
});
