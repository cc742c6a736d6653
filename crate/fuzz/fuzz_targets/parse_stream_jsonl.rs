#![no_main]

use libfuzzer_sys::fuzz_target;
use schatten_core::streams::{parse_stream, write_stream};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(stream) = parse_stream(text) {
        if stream.is_empty() {
            return;
        }
        let mut out = Vec::new();
        write_stream(&stream, &mut out).expect("writing to memory");
        let again = parse_stream(std::str::from_utf8(&out).expect("utf-8 output")).expect("written streams parse");
        assert_eq!(again, stream);
    }
});
