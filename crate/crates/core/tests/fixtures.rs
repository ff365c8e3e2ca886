mod common;

use rum_spectrum::catalog;
use rum_spectrum::cli::load_framework;

use common::{fixture_path, FIXTURES};

#[test]
fn fixture_files_match_the_catalog() {
    for (name, expected) in FIXTURES.iter().zip(catalog::all_fixtures()) {
        let loaded = load_framework(&fixture_path(name)).unwrap().framework;
        assert_eq!(loaded.group(), expected.group(), "{name}");
        assert_eq!(loaded.dx(), expected.dx(), "{name}");
        assert_eq!(loaded.dy(), expected.dy(), "{name}");
        for (a, b) in loaded.tau().generators().iter().zip(expected.tau().generators()) {
            assert!(a.distance(b) < 1e-12, "{name}: generators differ");
        }
        assert_eq!(loaded.edges().len(), expected.edges().len(), "{name}");
        for (a, b) in loaded.edges().iter().zip(expected.edges()) {
            assert_eq!((a.source, a.range, &a.gain), (b.source, b.range, &b.gain), "{name}: edge {}", a.id);
            assert!((&a.phi - &b.phi).norm() < 1e-12, "{name}: edge {} rows differ", a.id);
        }
    }
}
