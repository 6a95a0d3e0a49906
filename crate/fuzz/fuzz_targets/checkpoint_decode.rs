#![no_main]

use ener::model::decode_checkpoint;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ckpt) = decode_checkpoint(data) {
        let again = decode_checkpoint(ckpt.to_json().as_bytes()).expect("re-encoded checkpoint decodes");
        assert_eq!(again, ckpt);
    }
});
