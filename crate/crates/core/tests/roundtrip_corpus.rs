use std::path::PathBuf;

use stacksim::cooling::{emit_pattern, parse_pattern, validate_pattern};
use stacksim::floorplan::{emit_floorplan, parse_floorplan};

fn corpus() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus");
    let mut files: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn every_corpus_file_round_trips_byte_exact() {
    let files = corpus();
    assert_eq!(files.len(), 50);
    let (mut fps, mut pats) = (0, 0);
    for (name, text) in &files {
        let again = if name.ends_with(".flp") {
            fps += 1;
            emit_floorplan(&parse_floorplan(text).unwrap_or_else(|e| panic!("{name}: {e}")))
        } else {
            pats += 1;
            let p = parse_pattern(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(validate_pattern(&p).is_empty(), "{name}");
            emit_pattern(&p)
        };
        assert!(again == *text, "{name} differs after parse/emit");
    }
    assert!(fps > 0 && pats > 0);
}
