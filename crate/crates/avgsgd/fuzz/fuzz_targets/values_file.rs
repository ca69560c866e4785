//! Fuzz the numeric values-file reader (spectrum/displacement/noise/custom
//! coefficient files): no panics, and errors must point at a real input line.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    match avgsgd::parse_values_text(text) {
        Ok(values) => {
            // Every parsed value came from some line; the count can never
            // exceed the number of input lines.
            assert!(values.len() <= text.lines().count());
        }
        Err((line, value)) => {
            assert!(line >= 1 && line <= text.lines().count());
            assert!(!value.is_empty());
        }
    }
});
