//! Spec files written by hand against the factory fixtures.

use twisted_wold::factory;
use twisted_wold::linalg::c;
use twisted_wold::operators::equal_on_window;
use twisted_wold::representation::verify_all;
use twisted_wold::specfile;

const TWISTED_PAIR: &str = r#"{
  "schema": "twisted-tuple/1",
  "rank": 2,
  "backend": "lattice-unsigned",
  "lattice_rank": 2,
  "fiber": 1,
  "fiber_dims": [1, 1],
  "flips": [{"pair": [0, 1], "matrix": [[[1, 0]]]}],
  "matrices": {"z": [[[0, 1]]], "zbar": [[[0, -1]]]},
  "coords": [
    [{"terms": [{"offset": [1, 0], "factors": []}]}],
    [{"terms": [{"offset": [0, 1], "factors": [{"name": "zbar", "exponent": {"coeffs": [1, 0], "const": 0}}]}]}]
  ],
  "twists": [{"pair": [0, 1], "op": {"terms": [{"offset": [0, 0], "factors": [{"name": "z"}]}]}}],
  "algebra": {"kind": "scalar"},
  "window": 5
}"#;

#[test]
fn hand_written_pair_matches_the_fixture() {
    let loaded = specfile::parse(TWISTED_PAIR).unwrap();
    assert_eq!(loaded.window, Some(5));
    let fixture = factory::doubly_noncommuting(c(0.0, 1.0)).unwrap();
    for i in 0..2 {
        let w = equal_on_window(loaded.tuple.op(i, 0), fixture.op(i, 0), 5, 1e-15).unwrap();
        assert!(w.equal, "coordinate {i}: {}", w.max_deviation);
    }
    assert!(verify_all(&loaded.tuple, 5, 1e-12).unwrap().iter().all(|r| r.passed));
}

#[test]
fn canonical_form_is_a_fixed_point() {
    let once = specfile::canonicalize(TWISTED_PAIR).unwrap();
    assert_ne!(once, TWISTED_PAIR);
    assert_eq!(specfile::canonicalize(&once).unwrap(), once);
    assert!(once.contains("\"window\": 5"));
}

#[test]
fn dimension_mismatch_names_the_matrix() {
    let bad = TWISTED_PAIR.replace(r#""z": [[[0, 1]]]"#, r#""z": [[[0, 1], [0, 0]]]"#);
    let e = specfile::parse(&bad).unwrap_err();
    assert!(e.is_input_error());
    assert!(e.to_string().contains('z'), "{e}");
}
