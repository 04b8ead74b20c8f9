#![no_main]
use libfuzzer_sys::fuzz_target;
use riskseq::cli::{EngineConfig, Requirement};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = EngineConfig::parse(text) {
        let _ = config.validate(Requirement::Generate);
        let _ = config.model_config();
    }
});
