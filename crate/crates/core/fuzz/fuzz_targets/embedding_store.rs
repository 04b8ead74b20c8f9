#![no_main]
use libfuzzer_sys::fuzz_target;
use riskseq::encoders::EmbeddingStore;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(store) = EmbeddingStore::parse(text) else { return };
    let mut out = Vec::new();
    store.write(&mut out).unwrap();
    let again = EmbeddingStore::parse(std::str::from_utf8(&out).unwrap()).unwrap();
    assert_eq!(again, store);
});
