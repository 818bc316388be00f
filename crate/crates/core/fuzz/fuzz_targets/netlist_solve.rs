#![no_main]

use libfuzzer_sys::fuzz_target;
use ycoupler::{solve_steady_state, Netlist, DEFAULT_TOL};

fuzz_target!(|data: &[u8]| {
    // Keep the dense solve cheap.
    if data.len() > 4096 {
        return;
    }
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(net) = Netlist::from_json(text) else {
        return;
    };
    if net.devices().iter().map(|d| d.matrix.dim()).sum::<usize>() > 64 {
        return;
    }
    let _ = solve_steady_state(&net, DEFAULT_TOL);
});
