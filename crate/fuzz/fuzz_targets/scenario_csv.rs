#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((sea, wind)) = fjordtwin::scenario::parse_scenario_csv(text, "fuzz.csv") {
        assert_eq!(sea.len(), wind.len());
    }
});
