#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(maze) = easpace::grid::parse_maze(text) {
            let again = easpace::grid::parse_maze(&maze.to_string()).expect("round trip");
            assert_eq!(again.num_free(), maze.num_free());
        }
    }
});
