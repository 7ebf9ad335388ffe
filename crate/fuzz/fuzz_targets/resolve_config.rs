#![no_main]

use libfuzzer_sys::fuzz_target;
use nzkl_cli::Overrides;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(config) = nzkl_cli::parse_config(text) else { return };
    // Keep the grid small so resolution, not allocation, is exercised.
    let overrides = Overrides { dt: Some(0.5), t_max: Some(1.0), ..Overrides::default() };
    let _ = config.resolve(&overrides);
});
