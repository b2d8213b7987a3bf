// One-time fixture generation (kept out of the default test run).
use evigame_core::{fixtures, io};

#[test]
#[ignore]
fn generate() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures");
    for (game, name) in fixtures::all().iter().zip(fixtures::file_names()) {
        std::fs::write(format!("{dir}/{name}"), io::game_to_string(game)).unwrap();
        println!("wrote {name}");
    }
}
