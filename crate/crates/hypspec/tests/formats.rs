use hypspec::cache::SpectrumCache;
use hypspec::formats::{
    parse_gram, parse_spectrum, read_group, read_spectrum, render_gram, render_spectrum, write_group, write_spectrum,
};
use hypspec::parallel::ThreadedRunner;
use hypspec::Error;
use hypspec_core::metrics::GramMatrix;
use hypspec_core::spectrum::{
    enumerate_spectrum, enumerate_spectrum_with, Completeness, EnumerationBudget, GeodesicClass, GroupPresentation,
    LengthSpectrum,
};
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn spectrum_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let grp = GroupPresentation::gamma2();
    let gpath = dir.path().join("g.json");
    write_group(&gpath, &grp).unwrap();
    let grp = read_group(&gpath).unwrap();
    let spec = enumerate_spectrum(&grp, 7.0, &EnumerationBudget::default()).unwrap();
    let path = dir.path().join("s.spectrum");
    write_spectrum(&path, &spec, None).unwrap();
    assert_eq!(read_spectrum(&path, Some(&grp.fingerprint())).unwrap(), spec);
}

#[test]
fn fingerprint_mismatch_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let spec = enumerate_spectrum(&GroupPresentation::gamma2(), 5.0, &EnumerationBudget::default()).unwrap();
    let path = dir.path().join("s.spectrum");
    write_spectrum(&path, &spec, None).unwrap();
    let other = GroupPresentation::cyclic(0.7).unwrap().fingerprint();
    assert!(matches!(read_spectrum(&path, Some(&other)), Err(Error::Fingerprint { .. })));
}

#[test]
fn truncated_file_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let spec = enumerate_spectrum(&GroupPresentation::gamma2(), 7.0, &EnumerationBudget::default()).unwrap();
    let text = render_spectrum(&spec, None);
    for cut in [text.len() / 3, text.len() - 5] {
        let path = dir.path().join(format!("t{cut}.spectrum"));
        std::fs::write(&path, &text[..cut]).unwrap();
        assert!(matches!(read_spectrum(&path, None), Err(Error::Parse { .. })), "cut at {cut}");
    }
}

#[test]
fn rendering_is_independent_of_worker_count() {
    let grp = GroupPresentation::gamma2();
    let b = EnumerationBudget::default();
    let one = render_spectrum(&enumerate_spectrum(&grp, 8.5, &b).unwrap(), None);
    for w in [2, 5] {
        let many = render_spectrum(&enumerate_spectrum_with(&grp, 8.5, &b, &ThreadedRunner::new(w)).unwrap(), None);
        assert_eq!(many, one);
    }
}

#[test]
fn cache_keys_on_group_and_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let cache = SpectrumCache::new(dir.path());
    let grp = GroupPresentation::gamma2();
    let spec = enumerate_spectrum(&grp, 6.0, &EnumerationBudget::default()).unwrap();
    let path = cache.store(&grp, &spec, None).unwrap();
    assert!(path.file_name().unwrap().to_str().unwrap().starts_with(&hex::encode(grp.fingerprint())));
    assert_eq!(cache.load(&grp, 6.0).unwrap(), spec);
    // A corrupted entry is a miss, not an error.
    std::fs::write(&path, "garbage").unwrap();
    assert!(cache.load(&grp, 6.0).is_none());
}

fn class_strategy() -> impl Strategy<Value = Vec<(f64, Vec<i32>)>> {
    proptest::collection::vec(
        (0.05f64..20.0, proptest::collection::vec(prop_oneof![Just(1), Just(-1), Just(2), Just(-2)], 1..6)),
        0..20,
    )
}

proptest! {
    #[test]
    fn arbitrary_spectra_round_trip(raw in class_strategy(), fp in any::<[u8; 32]>()) {
        let classes: Vec<GeodesicClass> = raw
            .into_iter()
            .enumerate()
            .map(|(i, (l, mut w))| {
                w.push(3 + i as i32);
                GeodesicClass::from_length(l, w)
            })
            .collect();
        let spec = LengthSpectrum::from_classes(classes, 20.0, fp, 20.0, Completeness::Heuristic).unwrap();
        prop_assert_eq!(parse_spectrum(&render_spectrum(&spec, None)).unwrap(), spec);
    }

    #[test]
    fn gram_round_trip(d in 1usize..5, seed in proptest::collection::vec(-3.0f64..3.0, 50)) {
        let a: Vec<Complex64> = (0..d * d).map(|i| Complex64::new(seed[2 * i % 50], seed[(2 * i + 1) % 50])).collect();
        let mut g = GramMatrix::from_factor(d, d, &a);
        if g.is_err() {
            g = Ok(GramMatrix::identity(d));
        }
        let g = g.unwrap();
        prop_assert_eq!(parse_gram(&render_gram(&g)).unwrap(), g);
    }
}
