#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use specgame::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::load(Some(text), None, Path::new("/")) {
        let echoed = cfg.to_toml().unwrap();
        let again = ExperimentConfig::load(Some(&echoed), None, Path::new("/")).unwrap();
        assert_eq!(again.to_toml().unwrap(), echoed);
    }
});
