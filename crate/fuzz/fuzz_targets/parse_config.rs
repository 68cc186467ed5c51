#![no_main]

use libfuzzer_sys::fuzz_target;
use sta_cli::config::{parse_config, Settings};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(config) = parse_config(text) else { return };
    // resolution must reject bad keys and values with an error, never a panic
    for (scenario, defaults) in [
        (sta_cli::lz::SCENARIO, sta_cli::lz::DEFAULTS),
        (sta_cli::atom::SCENARIO, sta_cli::atom::DEFAULTS),
        (sta_cli::trap::SCENARIO, sta_cli::trap::DEFAULTS),
    ] {
        let _ = Settings::resolve(scenario, defaults, Some(&config), &[]);
    }
});
