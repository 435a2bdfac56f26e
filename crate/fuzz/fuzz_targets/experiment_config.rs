#![no_main]

use fjordtwin::config::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ExperimentConfig::from_text(text, "fuzz.cfg") {
        // whatever parses must survive a dump and reload
        let again = ExperimentConfig::from_text(&cfg.to_text(), "dump").expect("dump reloads");
        assert_eq!(again.to_text(), cfg.to_text());
    }
});
