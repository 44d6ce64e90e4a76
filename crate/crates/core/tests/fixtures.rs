use std::path::Path;

use nonlocality_forge::fixtures;
use nonlocality_forge::io::{read_document, write_document, Document};
use nonlocality_forge::robustness::{robn, roe, rot};

fn bundled(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn bundled_files_match_generator() {
    for (name, doc) in fixtures::all().unwrap() {
        let text = bundled(&name);
        assert_eq!(write_document(&doc), text, "{name} is stale");
        assert_eq!(write_document(&read_document(&text).unwrap()), text, "{name} does not round-trip");
    }
}

#[test]
fn bundled_values() {
    let tol = 1e-8;
    let value = |name: &str| match read_document(&bundled(name)).unwrap() {
        Document::Measurement(m) => robn(&m, tol).unwrap().value,
        Document::State(s) => roe(&s, tol).unwrap().value,
        Document::Instrument(t) => rot(&t, tol).unwrap().value,
        other => panic!("{name}: unexpected {:?}", other.kind()),
    };
    assert!((value("bell_phi_plus.json") - 1.0).abs() <= 1e-5);
    assert!(value("free_measurement.json").abs() <= 1e-6);
    assert!((value("phi_plus_state.json") - 1.0).abs() <= 1e-6);
    assert!(value("product_state.json").abs() <= 1e-6);
    assert!((value("teleportation_instrument.json") - 1.0).abs() <= 1e-5);
    assert!(value("classical_instrument.json").abs() <= 1e-6);
    for p in fixtures::ISOTROPIC_FAMILY {
        let tag = format!("{:03}", (p * 100.0).round() as u32);
        // Isotropic two-qubit state: RoE = max(0, (3p − 1)/2).
        let want = ((3.0 * p - 1.0) / 2.0f64).max(0.0);
        assert!((value(&format!("isotropic_p{tag}_state.json")) - want).abs() <= 1e-5, "p = {p}");
        assert!((value(&format!("isotropic_p{tag}_bell_bell.json")) - want).abs() <= 1e-5, "p = {p}");
    }
}
