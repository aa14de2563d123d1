#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(set) = specgame::frontier::read_frontier_csv(data) {
        let mut out = Vec::new();
        specgame::frontier::write_frontier_csv(set.points(), &mut out).unwrap();
        let again = specgame::frontier::read_frontier_csv(out.as_slice()).unwrap();
        assert_eq!(again.len(), set.len());
    }
});
