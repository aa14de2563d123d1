#![no_main]

use libfuzzer_sys::fuzz_target;
use specgame::metrics::{demographic_disparity, read_predictions_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = read_predictions_csv(data) {
        let n_classes = records.iter().map(|r| r.predicted_class).max().map_or(1, |m| m.saturating_add(1)).min(64);
        let n_groups = records.iter().map(|r| r.subgroup).max().map_or(1, |m| m.saturating_add(1)).min(64);
        if let Ok(report) = demographic_disparity(&records, n_classes, n_groups) {
            assert!(report.matrix.iter().flatten().all(|v| (-1.0..=1.0).contains(v)));
        }
    }
});
