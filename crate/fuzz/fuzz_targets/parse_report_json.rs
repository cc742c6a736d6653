#![no_main]

use libfuzzer_sys::fuzz_target;
use schatten_bench::plot::render_json;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(svg) = render_json(text) {
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
});
