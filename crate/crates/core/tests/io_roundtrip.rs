use bgnn_core::bench::{generate_synthetic, DegreeModel, SyntheticSpec};
use bgnn_core::graph::{
    load_dataset_dir, load_embeddings, read_remap, save_dataset, save_embeddings, write_remap,
    DatasetFiles,
};
use bgnn_core::tensor::Matrix;
use bgnn_core::BgnnError;
use proptest::prelude::*;

#[test]
fn dataset_directory_round_trip() {
    let ds = generate_synthetic(&SyntheticSpec {
        num_u: 40,
        num_v: 25,
        num_edges: 120,
        feat_u_dim: 3,
        feat_v_dim: 2,
        degree_model: DegreeModel::power_law(),
        num_classes_u: 3,
        seed: 1,
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_dataset(&ds, dir.path()).unwrap();
    let (back, report) = load_dataset_dir(dir.path()).unwrap();
    assert_eq!(report.duplicate_edges, 0);
    assert_eq!(back, ds);
}

#[test]
fn duplicate_edges_are_dropped_and_counted() {
    let ds = generate_synthetic(&SyntheticSpec {
        num_u: 5,
        num_v: 5,
        num_edges: 6,
        feat_u_dim: 1,
        feat_v_dim: 1,
        degree_model: DegreeModel::Uniform,
        num_classes_u: 2,
        seed: 1,
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let f = save_dataset(&ds, dir.path()).unwrap();
    let mut text = std::fs::read_to_string(&f.edges).unwrap();
    let first = text
        .lines()
        .find(|l| !l.starts_with('#') && !l.trim().is_empty())
        .unwrap()
        .to_string();
    text.push_str(&first);
    text.push('\n');
    std::fs::write(&f.edges, text).unwrap();
    let (back, report) = load_dataset_dir(dir.path()).unwrap();
    assert_eq!(report.duplicate_edges, 1);
    assert_eq!(back.num_edges(), 6);
}

#[test]
fn malformed_feature_line_names_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("z.txt");
    std::fs::write(&p, "2 2\n0.5 1\n0.25 oops\n").unwrap();
    match load_embeddings(&p) {
        Err(BgnnError::Parse { line, path, .. }) => {
            assert_eq!(line, 3);
            assert_eq!(path, p);
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn remap_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let f = DatasetFiles::in_dir(dir.path());
    let ids: Vec<String> = ["31336", "1061127", "x-9"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    write_remap(&ids, &f.remap_u).unwrap();
    assert_eq!(read_remap(&f.remap_u).unwrap(), ids);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn embeddings_round_trip_exactly(
        rows in 1usize..6,
        cols in 1usize..5,
        vals in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 30),
    ) {
        let m = Matrix::from_fn(rows, cols, |i, j| vals[(i * cols + j) % vals.len()]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.txt");
        save_embeddings(&m, &p).unwrap();
        let back = load_embeddings(&p).unwrap();
        prop_assert_eq!(back.shape(), m.shape());
        for (a, b) in back.as_slice().iter().zip(m.as_slice()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
