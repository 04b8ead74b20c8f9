#![no_main]
use libfuzzer_sys::fuzz_target;
use riskseq::model::{decode_checkpoint, encode_checkpoint};

fuzz_target!(|data: &[u8]| {
    let Ok((params, config)) = decode_checkpoint(data) else {
        return;
    };
    let (again, config_again) = decode_checkpoint(&encode_checkpoint(&params, &config)).unwrap();
    assert_eq!(config_again, config);
    assert!(again.same_values(&params));
});
