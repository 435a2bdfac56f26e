#![no_main]

use fjordtwin::control::{load_strategy, save_strategy};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(tree) = load_strategy(text) {
        let back = load_strategy(&save_strategy(&tree)).expect("saved document reloads");
        assert_eq!(back, tree);
    }
});
