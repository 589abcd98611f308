//! Plain-text dataset formats.
//!
//! * edges: `<u>\t<v>` per line, `#` comments
//! * features and embeddings: header `<rows> <cols>`, then one row per line
//! * labels: `<node>\t<label>` per line; absent nodes are unlabeled
//! * remap sidecars: `<original_id>\t<new_index>` per line

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::dataset::{BipartiteDataset, LabelVector, Partition};
use crate::error::{BgnnError, Result};
use crate::tensor::{FeatureMatrix, Matrix};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| BgnnError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| BgnnError::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| BgnnError::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> BgnnError {
    BgnnError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Content lines with 1-based line numbers; blank and `#` lines skipped.
fn content_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| BgnnError::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push((i + 1, t.to_string()));
    }
    Ok(out)
}

fn parse_pair(path: &Path, line: usize, text: &str) -> Result<(usize, usize)> {
    let mut it = text.split_ascii_whitespace();
    let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
        return Err(parse_err(
            path,
            line,
            format!("expected two fields, got {text:?}"),
        ));
    };
    let a = a
        .parse()
        .map_err(|_| parse_err(path, line, format!("bad index {a:?}")))?;
    let b = b
        .parse()
        .map_err(|_| parse_err(path, line, format!("bad index {b:?}")))?;
    Ok((a, b))
}

pub fn read_edges(path: &Path) -> Result<Vec<(usize, usize)>> {
    content_lines(path)?
        .iter()
        .map(|(n, t)| parse_pair(path, *n, t))
        .collect()
}

pub fn write_edges(edges: &[(usize, usize)], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| BgnnError::io(path, e);
    for (u, v) in edges {
        writeln!(w, "{u}\t{v}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Shortest text that parses back to the identical `f64`.
fn fmt_f64(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v}")
    } else {
        format!("{v:?}")
    }
}

pub fn write_feature_matrix(m: &FeatureMatrix, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| BgnnError::io(path, e);
    writeln!(w, "{} {}", m.rows(), m.cols()).map_err(io)?;
    let mut line = String::new();
    for r in m.row_iter() {
        line.clear();
        for (j, v) in r.iter().enumerate() {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&fmt_f64(*v));
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_feature_matrix(path: &Path) -> Result<FeatureMatrix> {
    let mut lines = open(path)?.lines().enumerate();
    let (rows, cols) = loop {
        match lines.next() {
            None => return Err(parse_err(path, 1, "missing `<rows> <cols>` header")),
            Some((i, l)) => {
                let l = l.map_err(|e| BgnnError::io(path, e))?;
                if l.trim().is_empty() || l.trim_start().starts_with('#') {
                    continue;
                }
                break parse_pair(path, i + 1, &l)?;
            }
        }
    };
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen_rows = 0;
    for (i, l) in lines {
        let l = l.map_err(|e| BgnnError::io(path, e))?;
        if l.trim().is_empty() {
            continue;
        }
        if seen_rows == rows {
            return Err(parse_err(
                path,
                i + 1,
                format!("more than the declared {rows} rows"),
            ));
        }
        let before = data.len();
        for tok in l.split_ascii_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(path, i + 1, format!("bad number {tok:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(path, i + 1, format!("non-finite value {tok:?}")));
            }
            data.push(v);
        }
        if data.len() - before != cols {
            return Err(parse_err(
                path,
                i + 1,
                format!("expected {cols} values, got {}", data.len() - before),
            ));
        }
        seen_rows += 1;
    }
    if seen_rows != rows {
        return Err(BgnnError::Validation(format!(
            "{}: header declares {rows} rows, found {seen_rows}",
            path.display()
        )));
    }
    Matrix::new(rows, cols, data)
}

pub fn save_embeddings(m: &FeatureMatrix, path: &Path) -> Result<()> {
    write_feature_matrix(m, path)
}

pub fn load_embeddings(path: &Path) -> Result<FeatureMatrix> {
    read_feature_matrix(path)
}

/// Reads `<node>\t<label>` lines for `num_nodes` nodes. The class count is
/// `max label + 1`, raised to at least `min_classes` and 2.
pub fn read_labels(path: &Path, num_nodes: usize, min_classes: usize) -> Result<LabelVector> {
    let mut values = vec![None; num_nodes];
    for (n, t) in content_lines(path)? {
        let (node, label) = parse_pair(path, n, &t)?;
        if node >= num_nodes {
            return Err(BgnnError::Validation(format!(
                "{}:{n}: node {node} out of range for {num_nodes} nodes",
                path.display()
            )));
        }
        values[node] = Some(label);
    }
    let k = values
        .iter()
        .flatten()
        .max()
        .map_or(2, |m| m + 1)
        .max(min_classes)
        .max(2);
    LabelVector::new(values, k)
}

pub fn write_labels(labels: &LabelVector, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| BgnnError::io(path, e);
    for (i, l) in labels.values().iter().enumerate() {
        if let Some(c) = l {
            writeln!(w, "{i}\t{c}").map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// `original_ids[new_index]` written as `<original_id>\t<new_index>`.
pub fn write_remap(original_ids: &[String], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| BgnnError::io(path, e);
    for (new, orig) in original_ids.iter().enumerate() {
        writeln!(w, "{orig}\t{new}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_remap(path: &Path) -> Result<Vec<String>> {
    let mut pairs = Vec::new();
    for (n, t) in content_lines(path)? {
        let mut it = t.split('\t');
        let (Some(orig), Some(new), None) = (it.next(), it.next(), it.next()) else {
            return Err(parse_err(path, n, "expected `<original_id>\\t<new_index>`"));
        };
        let new: usize = new
            .trim()
            .parse()
            .map_err(|_| parse_err(path, n, format!("bad index {new:?}")))?;
        pairs.push((new, orig.to_string()));
    }
    pairs.sort();
    if pairs.iter().enumerate().any(|(i, (n, _))| *n != i) {
        return Err(BgnnError::Validation(format!(
            "{}: remap indices are not a dense 0-based range",
            path.display()
        )));
    }
    Ok(pairs.into_iter().map(|(_, o)| o).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadReport {
    pub duplicate_edges: usize,
}

/// Loads and validates a dataset. Duplicate edges are dropped and counted.
pub fn load_dataset(
    edge_path: &Path,
    feat_u_path: &Path,
    feat_v_path: &Path,
    labels_u_path: Option<&Path>,
    labels_v_path: Option<&Path>,
) -> Result<(BipartiteDataset, LoadReport)> {
    let mut edges = read_edges(edge_path)?;
    let duplicate_edges = BipartiteDataset::dedup_edges(&mut edges);
    if duplicate_edges > 0 {
        log::warn!(
            "{}: dropped {duplicate_edges} duplicate edge(s)",
            edge_path.display()
        );
    }
    let fu = read_feature_matrix(feat_u_path)?;
    let fv = read_feature_matrix(feat_v_path)?;
    let lu = labels_u_path
        .map(|p| read_labels(p, fu.rows(), 0))
        .transpose()?;
    let lv = labels_v_path
        .map(|p| read_labels(p, fv.rows(), 0))
        .transpose()?;
    // both sides of a citation split share one class space
    let (lu, lv) = match (lu, lv) {
        (Some(a), Some(b)) if a.num_classes() != b.num_classes() => {
            let k = a.num_classes().max(b.num_classes());
            (
                Some(LabelVector::new(a.values().to_vec(), k)?),
                Some(LabelVector::new(b.values().to_vec(), k)?),
            )
        }
        other => other,
    };
    let ds = BipartiteDataset::new(edges, fu, fv, lu, lv)?;
    Ok((ds, LoadReport { duplicate_edges }))
}

/// Standard file names of a dataset directory.
#[derive(Debug, Clone)]
pub struct DatasetFiles {
    pub edges: PathBuf,
    pub features_u: PathBuf,
    pub features_v: PathBuf,
    pub labels_u: PathBuf,
    pub labels_v: PathBuf,
    pub remap_u: PathBuf,
    pub remap_v: PathBuf,
}

impl DatasetFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            edges: dir.join("edges.tsv"),
            features_u: dir.join("features_u.txt"),
            features_v: dir.join("features_v.txt"),
            labels_u: dir.join("labels_u.tsv"),
            labels_v: dir.join("labels_v.tsv"),
            remap_u: dir.join("remap_u.tsv"),
            remap_v: dir.join("remap_v.tsv"),
        }
    }

    pub fn labels(&self, p: Partition) -> &Path {
        match p {
            Partition::U => &self.labels_u,
            Partition::V => &self.labels_v,
        }
    }
}

pub fn save_dataset(ds: &BipartiteDataset, dir: &Path) -> Result<DatasetFiles> {
    let f = DatasetFiles::in_dir(dir);
    write_edges(ds.edges(), &f.edges)?;
    write_feature_matrix(ds.features_u(), &f.features_u)?;
    write_feature_matrix(ds.features_v(), &f.features_v)?;
    if let Some(l) = ds.labels_u() {
        write_labels(l, &f.labels_u)?;
    }
    if let Some(l) = ds.labels_v() {
        write_labels(l, &f.labels_v)?;
    }
    Ok(f)
}

/// Loads a directory written by [`save_dataset`]; label files are optional.
pub fn load_dataset_dir(dir: &Path) -> Result<(BipartiteDataset, LoadReport)> {
    let f = DatasetFiles::in_dir(dir);
    let lu = f.labels_u.exists().then_some(f.labels_u.as_path());
    let lv = f.labels_v.exists().then_some(f.labels_v.as_path());
    load_dataset(&f.edges, &f.features_u, &f.features_v, lu, lv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.txt");
        let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [0.1 + 0.2, -1e-300]]).unwrap();
        write_feature_matrix(&m, &p).unwrap();
        let back = read_feature_matrix(&p).unwrap();
        assert_eq!(back.shape(), (3, 2));
        for (a, b) in back.as_slice().iter().zip(m.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn empty_matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        write_feature_matrix(&Matrix::zeros(0, 5), &p).unwrap();
        assert_eq!(read_feature_matrix(&p).unwrap().shape(), (0, 5));
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("edges.tsv");
        std::fs::write(&p, "# header\n0\t1\n1\tx\n").unwrap();
        match read_edges(&p).unwrap_err() {
            BgnnError::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        let f = dir.path().join("f.txt");
        std::fs::write(&f, "2 2\n1 2\n3\n").unwrap();
        assert!(matches!(
            read_feature_matrix(&f).unwrap_err(),
            BgnnError::Parse { line: 3, .. }
        ));
        std::fs::write(&f, "3 2\n1 2\n3 4\n").unwrap();
        assert!(matches!(
            read_feature_matrix(&f).unwrap_err(),
            BgnnError::Validation(_)
        ));
    }

    #[test]
    fn remap_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.tsv");
        let ids = vec!["31336".to_string(), "1061127".to_string()];
        write_remap(&ids, &p).unwrap();
        assert_eq!(read_remap(&p).unwrap(), ids);
    }
}
