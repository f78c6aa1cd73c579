use selfadj::corpus::{check_item, transform_corpus};

#[test]
fn identities_on_one_item() {
    let item = &transform_corpus(7)[0];
    let t = std::time::Instant::now();
    let m = check_item(item, 11).unwrap();
    println!("{m:#?} in {:?}", t.elapsed());
    assert!(m.isometry_forward < 1e-8 && m.isometry_inverse < 1e-8);
    assert!(m.round_trip_position < 1e-7 && m.round_trip_spectral < 1e-7);
    assert!(m.psi_vs_direct < 1e-6);
    assert!(m.psi_bound_ratio <= 1.0);
    assert!(m.sampling_identity < 1e-6);
    assert!(m.conjugation < 1e-6);
}
