#![no_main]
use glfa::FactorModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = FactorModel::read(data) {
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        assert_eq!(FactorModel::read(buf.as_slice()).unwrap(), m);
    }
});
