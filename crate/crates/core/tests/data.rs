use sdca::data::{
    generate_sim1, generate_sim2, generate_sim3, load_sparse_text, split, standardize, write_sparse_text, DataError,
    Dataset, DatasetBuilder, Format, GeneratorSpec, LoadOptions, Provenance, SimKind, SplitSpec,
};

const HANDCRAFTED: &str = "\
3 1:0.5 4:-1.25
1 2:1e-3 3:7
2 1:-0.1
3 5:2.5 6:0.3333333333333333
1 1:1 2:2 3:3 4:4 5:5 6:6
2 6:-6
3 2:0.1
1 3:123456.789
2 4:-0.0001 5:1e10
1 1:3.14159
";

fn load(path: &std::path::Path, format: Format) -> Dataset {
    load_sparse_text(path, format, &LoadOptions::default()).unwrap()
}

fn same_content(a: &Dataset, b: &Dataset) {
    assert_eq!(a.n(), b.n());
    assert_eq!(a.dim(), b.dim());
    assert_eq!(a.labels(), b.labels());
    for i in 0..a.n() {
        assert_eq!(a.row(i).indices, b.row(i).indices);
        let (va, vb) = (a.row(i).values, b.row(i).values);
        assert_eq!(va.len(), vb.len());
        for (x, y) in va.iter().zip(vb) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

#[test]
fn handcrafted_file_round_trips_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("in.svm");
    std::fs::write(&src, HANDCRAFTED).unwrap();
    let ds = load(&src, Format::Libsvm);
    assert_eq!((ds.n(), ds.dim(), ds.classes()), (10, 6, 3));

    let svm = dir.path().join("out.svm");
    write_sparse_text(&ds, &svm, Format::Libsvm).unwrap();
    same_content(&ds, &load(&svm, Format::Libsvm));
    let csv = dir.path().join("out.csv");
    write_sparse_text(&ds, &csv, Format::Csv).unwrap();
    same_content(&ds, &load(&csv, Format::Csv));
}

#[test]
fn generated_data_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate_sim2(30, 4).unwrap();
    let path = dir.path().join("sim2.svm");
    write_sparse_text(&ds, &path, Format::Libsvm).unwrap();
    same_content(&ds, &load(&path, Format::Libsvm));
}

#[test]
fn generators_are_deterministic() {
    assert_eq!(generate_sim1(200, 7).unwrap(), generate_sim1(200, 7).unwrap());
    assert_eq!(generate_sim2(200, 7).unwrap(), generate_sim2(200, 7).unwrap());
    assert_eq!(generate_sim3(50, 120, 7).unwrap(), generate_sim3(50, 120, 7).unwrap());
    assert_ne!(generate_sim1(200, 7).unwrap(), generate_sim1(200, 8).unwrap());
    let spec = GeneratorSpec { kind: SimKind::Sim3, n: 40, d: Some(110), seed: 1 };
    assert_eq!(spec.generate().unwrap(), generate_sim3(10, 110, 1).unwrap());
    assert_eq!(spec.generate().unwrap().provenance(), &Provenance::Generated(spec.clone()));
}

fn class_feature_mean(ds: &Dataset, class: u32, j: usize) -> (f64, usize) {
    let mut s = 0.0;
    let mut k = 0;
    for i in 0..ds.n() {
        if ds.label(i) == class {
            s += ds.dense_row(i)[j];
            k += 1;
        }
    }
    (s / k as f64, k)
}

#[test]
fn sim1_class_means() {
    let ds = generate_sim1(20_000, 11).unwrap();
    for k in 1..=4u32 {
        for j in 0..50 {
            let expect = if j / 10 == k as usize - 1 { 0.5 } else { 0.0 };
            let (m, nk) = class_feature_mean(&ds, k, j);
            assert!((m - expect).abs() <= 4.0 / (nk as f64).sqrt(), "class {k} feature {j}: {m}");
        }
    }
}

#[test]
fn sim3_informative_and_noise_means() {
    let ds = generate_sim3(5_000, 105, 2).unwrap();
    for k in 1..=4u32 {
        for j in [0, 50, 99, 100, 104] {
            let expect = if j < 100 { (k - 1) as f64 / 3.0 } else { 0.0 };
            let (m, nk) = class_feature_mean(&ds, k, j);
            assert!((m - expect).abs() <= 4.0 / (nk as f64).sqrt(), "class {k} feature {j}: {m}");
        }
    }
}

#[test]
fn split_sizes_for_balanced_hundred() {
    let mut b = DatasetBuilder::new(1);
    for i in 0..100 {
        b.push_dense(&[i as f64 + 1.0], (i % 2) as u32 + 1).unwrap();
    }
    let ds = b.finish(None, Provenance::InMemory).unwrap();
    let s = split(&ds, &SplitSpec::default()).unwrap();
    assert_eq!((s.test.n(), s.validation.n(), s.train.n()), (20, 16, 64));
    let again = split(&ds, &SplitSpec::default()).unwrap();
    assert_eq!(s.train, again.train);
    assert_eq!(s.test, again.test);
    let other = split(&ds, &SplitSpec { seed: 5, ..SplitSpec::default() }).unwrap();
    assert_ne!(s.train, other.train);

    // Disjoint and exhaustive: the single feature is the row id.
    let mut ids: Vec<f64> = [&s.train, &s.validation, &s.test]
        .iter()
        .flat_map(|p| (0..p.n()).map(|i| p.row(i).values[0]).collect::<Vec<_>>())
        .collect();
    ids.sort_by(f64::total_cmp);
    assert_eq!(ids, (1..=100).map(f64::from).collect::<Vec<_>>());
}

/// Every class composition with Q ∈ {2, 3} and up to 40 rows: each part's
/// class counts stay within one row of the global proportions.
#[test]
fn split_proportions_exhaustive() {
    let mut checked = 0;
    let mut compositions = Vec::new();
    for a in 1..=40usize {
        for b in 1..=40 - a {
            compositions.push(vec![a, b]);
            for c in 1..=40 - a - b {
                compositions.push(vec![a, b, c]);
            }
        }
    }
    for counts in compositions {
        let n: usize = counts.iter().sum();
        let mut b = DatasetBuilder::new(1);
        for (c, &k) in counts.iter().enumerate() {
            for _ in 0..k {
                b.push_dense(&[1.0], c as u32 + 1).unwrap();
            }
        }
        let ds = b.finish(None, Provenance::InMemory).unwrap();
        match split(&ds, &SplitSpec::default()) {
            Ok(s) => {
                for part in [&s.train, &s.validation, &s.test] {
                    for (c, &k) in part.class_counts().iter().enumerate() {
                        let share = counts[c] as f64 * part.n() as f64 / n as f64;
                        assert!((k as f64 - share).abs() < 1.0, "{counts:?}: class {c} has {k}, share {share}");
                    }
                }
                checked += 1;
            }
            Err(DataError::ClassStarvation { class, .. }) => assert!(class as usize <= counts.len()),
            Err(e) => panic!("{counts:?}: {e}"),
        }
    }
    assert!(checked > 1000);
}

#[test]
fn starved_class_is_named() {
    let mut b = DatasetBuilder::new(1);
    for i in 0..50 {
        b.push_dense(&[1.0], if i == 0 { 2 } else { 1 }).unwrap();
    }
    let ds = b.finish(None, Provenance::InMemory).unwrap();
    match split(&ds, &SplitSpec::default()) {
        Err(DataError::ClassStarvation { class, .. }) => assert_eq!(class, 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn standardize_examples() {
    let mut b = DatasetBuilder::new(2);
    b.push_dense(&[1.0, 4.0], 1).unwrap();
    b.push_dense(&[3.0, 4.0], 2).unwrap();
    let train = b.finish(None, Provenance::InMemory).unwrap();
    let mut b = DatasetBuilder::new(2);
    b.push_dense(&[2.0, 5.0], 1).unwrap();
    b.push_dense(&[5.0, 4.0], 2).unwrap();
    let test = b.finish(None, Provenance::InMemory).unwrap();

    let (t, rest, scaler) = standardize(&train, &[&test]).unwrap();
    assert_eq!(t.dense_row(0), vec![-1.0, 4.0]);
    assert_eq!(t.dense_row(1), vec![1.0, 4.0]);
    assert_eq!(rest[0].dense_row(0), vec![0.0, 5.0]);
    assert_eq!(rest[0].dense_row(1), vec![3.0, 4.0]);
    assert_eq!(scaler.scaled, vec![true, false]);
    let json = serde_json::to_string(&scaler).unwrap();
    assert_eq!(serde_json::from_str::<sdca::data::Scaler>(&json).unwrap(), scaler);
}

#[test]
fn standardized_train_is_centered() {
    let ds = generate_sim2(600, 3).unwrap();
    let (t, _, _) = standardize(&ds, &[]).unwrap();
    for j in 0..t.dim() {
        let mean: f64 = (0..t.n()).map(|i| t.dense_row(i)[j]).sum::<f64>() / t.n() as f64;
        let var: f64 = (0..t.n()).map(|i| t.dense_row(i)[j].powi(2)).sum::<f64>() / t.n() as f64;
        assert!(mean.abs() <= 1e-10, "feature {j}: mean {mean}");
        assert!((var - 1.0).abs() <= 1e-10, "feature {j}: var {var}");
    }
}
