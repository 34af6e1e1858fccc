use ddos_core::dataset::stratified_split;
use ddos_core::synth::{generate, write_csv, SynthConfig};
use ddos_core::{predict, train, ModelKind, ModelSpec};

#[test]
fn reference_label_counts() {
    let cfg = SynthConfig {
        n_benign: 63_561,
        n_ddos: 40_784,
        n_features: 3,
        ..Default::default()
    };
    let d = generate(&cfg).unwrap().label_distribution();
    assert_eq!((d.benign_count, d.ddos_count, d.total), (63_561, 40_784, 104_345));
}

#[test]
fn class_means_differ_by_separation() {
    // the standard error of a mean gap is sqrt(2/n); at n=2000 per class the
    // 0.1 band is about 3.2 of them
    for sep in [0.0, 2.5, 6.0] {
        let cfg = SynthConfig {
            class_separation: sep,
            ..Default::default()
        };
        let ds = generate(&cfg).unwrap();
        let cats = cfg.categorical_features();
        for j in (0..cfg.n_features).filter(|j| !cats.contains(j)) {
            let mean = |label: u8| {
                let v: Vec<f64> = (0..ds.len()).filter(|&i| ds.y[i] == label).map(|i| ds.x.get(i, j)).collect();
                v.iter().sum::<f64>() / v.len() as f64
            };
            let gap = mean(1) - mean(0);
            assert!((gap - sep).abs() < 0.1, "feature {j} sep {sep}: {gap}");
        }
    }
}

#[test]
fn same_config_same_bytes() {
    let cfg: SynthConfig = "n=50,seed=3,noise=0.1".parse().unwrap();
    let bytes = |c: &SynthConfig| {
        let mut buf = Vec::new();
        write_csv(c, &generate(c).unwrap(), &mut buf, "label").unwrap();
        buf
    };
    assert_eq!(bytes(&cfg), bytes(&cfg));
    let other = SynthConfig { seed: 4, ..cfg.clone() };
    assert_ne!(bytes(&cfg), bytes(&other));
}

#[test]
fn indistinguishable_classes_give_chance_accuracy() {
    let ds = generate(&SynthConfig {
        class_separation: 0.0,
        ..Default::default()
    })
    .unwrap();
    let sp = stratified_split(&ds, 0.8, 0).unwrap();
    let m = train(&ModelSpec::new(ModelKind::Rf).with("n_trees", 50.0), &sp.train).unwrap();
    let p = predict(&m, &sp.test).unwrap();
    let acc = p.labels.iter().zip(&sp.test.y).filter(|(a, b)| a == b).count() as f64 / sp.test.len() as f64;
    assert!((0.4..=0.6).contains(&acc), "{acc}");
}

#[test]
fn mean_threshold_oracle_separates_wide_margin() {
    // Bayes rule for equal isotropic Gaussians: compare the mean feature to sep/2
    let cfg = SynthConfig::default();
    let ds = generate(&cfg).unwrap();
    let cats = cfg.categorical_features();
    let cont: Vec<usize> = (0..cfg.n_features).filter(|j| !cats.contains(j)).collect();
    let hits = (0..ds.len())
        .filter(|&i| {
            let m = cont.iter().map(|&j| ds.x.get(i, j)).sum::<f64>() / cont.len() as f64;
            u8::from(m > cfg.class_separation / 2.0) == ds.y[i]
        })
        .count();
    assert_eq!(hits, ds.len());
}
