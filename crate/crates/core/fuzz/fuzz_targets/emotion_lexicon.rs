#![no_main]
use libfuzzer_sys::fuzz_target;
use riskseq::encoders::EmotionLexicon;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(lexicon) = EmotionLexicon::parse(text) {
        let p = lexicon.scores(text);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
});
