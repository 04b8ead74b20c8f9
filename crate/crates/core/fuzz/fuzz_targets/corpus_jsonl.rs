#![no_main]
use libfuzzer_sys::fuzz_target;
use riskseq::dataset::Corpus;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(corpus) = Corpus::from_jsonl_str(text) else {
        return;
    };
    let mut out = Vec::new();
    corpus.write_jsonl(&mut out).unwrap();
    let again = Corpus::from_jsonl_str(std::str::from_utf8(&out).unwrap()).unwrap();
    assert_eq!(again, corpus);
});
