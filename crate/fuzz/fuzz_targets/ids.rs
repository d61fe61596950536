#![no_main]
use glfa::IdMap;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ids) = IdMap::read(data) {
        let mut buf = Vec::new();
        ids.write(&mut buf).unwrap();
        let back = IdMap::read(buf.as_slice()).unwrap();
        for k in 0..ids.n_rows() {
            assert_eq!(back.row_token(k), ids.row_token(k));
        }
        for k in 0..ids.n_cols() {
            assert_eq!(back.col_token(k), ids.col_token(k));
        }
    }
});
