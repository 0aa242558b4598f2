use agsplab::agsp::{build_k, certify, product_probes, Window};
use agsplab::artifact::{read_blocks, write_blocks};
use agsplab::detectability::{dl_bound, layer_projectors, shrink_factor, ProductOrdering};
use agsplab::hamiltonian::{build_model, spectral_gap, validate_frustration_free, ModelSpec};
use agsplab::linalg::{op_norm, random_matrix};
use agsplab::rng::substream;
use agsplab::schmidt::{schmidt_decompose, Cut};
use agsplab::Error;
use approx::assert_abs_diff_eq;

#[test]
fn product_parent_has_unit_gap_and_product_ground_state() {
    for n in 2..=8 {
        let chain = build_model(&ModelSpec::product_parent(n)).unwrap();
        let s = spectral_gap(&chain).unwrap();
        assert_abs_diff_eq!(s.gap, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.spectrum[0], 0.0, epsilon = 1e-10);
        let cut = Cut::middle(n, 2).unwrap();
        assert_eq!(schmidt_decompose(&s.ground_state, cut).unwrap().rank, 1);
    }
}

#[test]
fn pinned_aklt_is_frustration_free_with_a_unique_ground_state() {
    for n in 4..=6 {
        let chain = build_model(&ModelSpec::aklt(n, true)).unwrap();
        let report = validate_frustration_free(&chain);
        assert!(report.passed(), "{report:?}");
        let s = spectral_gap(&chain).unwrap();
        // Bond dimension two: at most one bit across any cut.
        let dec = schmidt_decompose(&s.ground_state, Cut::middle(n, 3).unwrap()).unwrap();
        assert_eq!(dec.rank, 2);
        assert!(dec.entropy <= 1.0 + 1e-10 && dec.entropy > 0.95);
    }
}

#[test]
fn open_aklt_has_the_edge_degeneracy() {
    let chain = build_model(&ModelSpec::aklt(5, false)).unwrap();
    let report = validate_frustration_free(&chain);
    assert_eq!(report.degeneracy, 4);
    assert!(matches!(spectral_gap(&chain), Err(Error::DegenerateGround { .. })));
}

#[test]
fn dl_shrink_is_below_bound_for_seeded_parents() {
    for seed in 0..5 {
        let chain = build_model(&ModelSpec::random_mps_parent(5, 3, 2, seed)).unwrap();
        let s = spectral_gap(&chain).unwrap();
        let layers = layer_projectors(&chain);
        for ordering in ProductOrdering::BOTH {
            let r = shrink_factor(&layers.dl(ordering), &s).unwrap();
            assert!(r.measured_delta <= dl_bound(s.gap) + 1e-9);
            assert!(r.measured_delta > 0.0);
        }
    }
}

#[test]
fn certificate_end_to_end_on_aklt() {
    let chain = build_model(&ModelSpec::aklt(6, true)).unwrap();
    let s = spectral_gap(&chain).unwrap();
    let cut = Cut::middle(6, 3).unwrap();
    let window = Window::new(&chain, cut, 3).unwrap();
    let kop = build_k(&chain, &s, &window, 2, None).unwrap();
    let probes = product_probes(cut, 16, 3, "models/probes");
    let cert = certify(&s, &window, &kop, &probes).unwrap();
    assert!(cert.ground_ok());
    assert!(cert.delta_within_theory());
    assert!(cert.product_ok);
    assert!(cert.measured_delta < cert.measured_delta_dl);
    assert!((&kop.k * &s.ground_state - &s.ground_state).norm() < 1e-8);
    assert!(op_norm(&kop.k) <= 1.0 + 1e-8);
}

#[test]
fn operator_artifacts_round_trip() {
    let mut rng = substream(1, "models/artifact");
    let blocks = vec![random_matrix(3, 4, &mut rng), random_matrix(5, 5, &mut rng)];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ops.bin");
    write_blocks(&path, &blocks).unwrap();
    assert_eq!(read_blocks(&path).unwrap(), blocks);
}
