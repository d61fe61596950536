#![no_main]
use glfa::data::{parse_ratings, RatingFormat};
use libfuzzer_sys::fuzz_target;

// First byte picks the layout and header flag, the rest is the file.
fuzz_target!(|data: &[u8]| {
    let Some((&sel, body)) = data.split_first() else {
        return;
    };
    let format = match sel % 3 {
        0 => RatingFormat::MovieLens,
        1 => RatingFormat::Tsv,
        _ => RatingFormat::Csv,
    };
    if let Ok(r) = parse_ratings(body, format, sel & 0x80 != 0) {
        assert_eq!(r.matrix.n_rows(), r.ids.n_rows());
        assert_eq!(r.matrix.n_cols(), r.ids.n_cols());
    }
});
