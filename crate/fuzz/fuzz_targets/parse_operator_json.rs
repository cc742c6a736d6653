#![no_main]

use libfuzzer_sys::fuzz_target;
use schatten_core::{HVector, LinOp};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(f) = LinOp::from_json_str(text) {
        let again = LinOp::from_json_str(&f.to_json_string()).expect("serialized operators parse");
        assert_eq!(again, f);
    }
    if let Ok(v) = HVector::from_json_str(text) {
        let again = HVector::from_json_str(&v.to_json_string()).expect("serialized vectors parse");
        assert_eq!(again, v);
    }
});
