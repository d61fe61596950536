#![no_main]
use glfa::runspec::parse_config;
use glfa::{Command, RunSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(map) = parse_config(text) else {
        return;
    };
    let command = map
        .get("command")
        .and_then(|c| c.parse().ok())
        .unwrap_or(Command::Train);
    if let Ok(spec) = RunSpec::from_map(command, &map) {
        let again = parse_config(&spec.to_config_string()).unwrap();
        assert_eq!(RunSpec::from_map(command, &again).unwrap(), spec);
    }
});
