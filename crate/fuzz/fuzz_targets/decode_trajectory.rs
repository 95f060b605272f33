#![no_main]

use congestion_experiments::store::{decode_trajectory, encode_trajectory};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(traj) = decode_trajectory(data) {
        assert!(decode_trajectory(&encode_trajectory(&traj)).is_ok_and(|back| back == traj));
    }
});
