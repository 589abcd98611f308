//! Homogeneous citation networks: the LINQS `.content`/`.cites` loader and a
//! seeded generator that stands in for Cora/Citeseer when the files are absent.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{BgnnError, Result};
use crate::rng::rng_for;
use crate::tensor::{FeatureMatrix, Matrix};

/// An undirected citation graph with node features and one class per node.
#[derive(Debug, Clone, PartialEq)]
pub struct CitationNetwork {
    pub node_ids: Vec<String>,
    pub edges: Vec<(usize, usize)>,
    pub features: FeatureMatrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub class_names: Vec<String>,
}

impl CitationNetwork {
    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_nodes();
        if self.features.rows() != n || self.node_ids.len() != n {
            return Err(BgnnError::Validation(format!(
                "citation network: {n} labels, {} feature rows, {} ids",
                self.features.rows(),
                self.node_ids.len()
            )));
        }
        if self.edges.iter().any(|&(a, b)| a >= n || b >= n) {
            return Err(BgnnError::Validation("citation edge out of range".into()));
        }
        if self.labels.iter().any(|&c| c >= self.num_classes) {
            return Err(BgnnError::Validation("citation label out of range".into()));
        }
        Ok(())
    }
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| BgnnError::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect())
}

/// Reads the LINQS format: `<paper_id> <f_1> ... <f_n> <class>` and
/// `<cited_id> <citing_id>`. Citations naming unknown papers or a paper
/// itself are skipped; the graph is undirected and deduplicated.
pub fn load_linqs(content_path: &Path, cites_path: &Path) -> Result<CitationNetwork> {
    let mut node_ids = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels = Vec::new();
    for (line, text) in read_lines(content_path)? {
        let toks: Vec<&str> = text.split_ascii_whitespace().collect();
        if toks.len() < 3 {
            return Err(BgnnError::Parse {
                path: content_path.to_path_buf(),
                line,
                msg: "expected `<id> <features...> <class>`".into(),
            });
        }
        let feats = toks[1..toks.len() - 1]
            .iter()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| BgnnError::Parse {
                path: content_path.to_path_buf(),
                line,
                msg: "non-numeric feature".into(),
            })?;
        if let Some(first) = rows.first() {
            if first.len() != feats.len() {
                return Err(BgnnError::Parse {
                    path: content_path.to_path_buf(),
                    line,
                    msg: format!("{} features, expected {}", feats.len(), first.len()),
                });
            }
        }
        node_ids.push(toks[0].to_string());
        rows.push(feats);
        raw_labels.push(toks[toks.len() - 1].to_string());
    }
    let class_names: Vec<String> = raw_labels
        .iter()
        .cloned()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let class_of: HashMap<&str, usize> = class_names
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let labels = raw_labels.iter().map(|c| class_of[c.as_str()]).collect();
    let index: HashMap<&str, usize> = node_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    let mut skipped = 0usize;
    for (line, text) in read_lines(cites_path)? {
        let toks: Vec<&str> = text.split_ascii_whitespace().collect();
        if toks.len() != 2 {
            return Err(BgnnError::Parse {
                path: cites_path.to_path_buf(),
                line,
                msg: "expected `<cited> <citing>`".into(),
            });
        }
        match (index.get(toks[0]), index.get(toks[1])) {
            (Some(&a), Some(&b)) if a != b => {
                let key = (a.min(b), a.max(b));
                if seen.insert(key) {
                    edges.push(key);
                }
            }
            _ => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!(
            "{}: skipped {skipped} citation(s) with unknown or identical endpoints",
            cites_path.display()
        );
    }
    let features = Matrix::from_rows(&rows)?;
    let net = CitationNetwork {
        node_ids,
        edges,
        features,
        labels,
        num_classes: class_names.len().max(2),
        class_names,
    };
    net.validate()?;
    Ok(net)
}

/// Finds the single `*.content` / `*.cites` pair in `dir` and loads it.
pub fn load_linqs_dir(dir: &Path) -> Result<CitationNetwork> {
    let entries = std::fs::read_dir(dir).map_err(|e| BgnnError::io(dir, e))?;
    let mut content = None;
    let mut cites = None;
    for e in entries {
        let p = e.map_err(|e| BgnnError::io(dir, e))?.path();
        match p.extension().and_then(|x| x.to_str()) {
            Some("content") => content = Some(p),
            Some("cites") => cites = Some(p),
            _ => {}
        }
    }
    match (content, cites) {
        (Some(c), Some(e)) => load_linqs(&c, &e),
        _ => Err(BgnnError::Validation(format!(
            "{}: expected a `*.content` and a `*.cites` file",
            dir.display()
        ))),
    }
}

/// Parameters of the synthetic citation network.
///
/// Classes own topic vocabularies; each document draws a bag of distinct
/// words, a `topic_strength` share of them from its class topic and the rest
/// from a Zipf background. Edges follow a degree-corrected block model: both
/// endpoints are drawn in proportion to Pareto propensities and the second
/// endpoint shares the first's class with probability `homophily`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationStandIn {
    pub name: String,
    pub class_sizes: Vec<usize>,
    pub num_features: usize,
    pub num_edges: usize,
    pub mean_words: f64,
    pub topic_words_per_class: usize,
    pub topic_strength: f64,
    pub zipf_exponent: f64,
    pub homophily: f64,
    pub degree_alpha: f64,
}

impl CitationStandIn {
    /// Cora statistics: 2708 papers, 7 classes, 1433 binary word features,
    /// 5278 undirected links, about 18 words per paper, edge homophily 0.81.
    pub fn cora() -> Self {
        Self {
            name: "cora".into(),
            class_sizes: vec![818, 426, 418, 351, 298, 217, 180],
            num_features: 1433,
            num_edges: 5278,
            mean_words: 18.2,
            topic_words_per_class: 200,
            topic_strength: 0.345,
            zipf_exponent: 0.6,
            homophily: 0.81,
            degree_alpha: 2.5,
        }
    }

    /// Citeseer statistics: 3312 papers, 6 classes, 3703 word features,
    /// 4552 undirected links, about 32 words per paper, edge homophily 0.74.
    pub fn citeseer() -> Self {
        Self {
            name: "citeseer".into(),
            class_sizes: vec![596, 249, 701, 668, 590, 508],
            num_features: 3703,
            num_edges: 4552,
            mean_words: 31.7,
            topic_words_per_class: 500,
            topic_strength: 0.23,
            zipf_exponent: 0.6,
            homophily: 0.74,
            degree_alpha: 2.5,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "cora" => Some(Self::cora()),
            "citeseer" => Some(Self::citeseer()),
            _ => None,
        }
    }

    pub fn generate(&self, seed: u64) -> Result<CitationNetwork> {
        let k = self.class_sizes.len();
        let n: usize = self.class_sizes.iter().sum();
        if k < 2 || n < 2 || self.num_features == 0 {
            return Err(BgnnError::Validation(format!(
                "degenerate stand-in spec {self:?}"
            )));
        }
        if self.num_edges > n * (n - 1) / 2 {
            return Err(BgnnError::Validation("more edges than node pairs".into()));
        }
        let mut rng = rng_for(seed, &format!("standin/{}", self.name));

        let mut labels: Vec<usize> = self
            .class_sizes
            .iter()
            .enumerate()
            .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
            .collect();
        labels.shuffle(&mut rng);

        let f = self.num_features;
        let mut order: Vec<usize> = (0..f).collect();
        order.shuffle(&mut rng);
        let zipf = |rank: usize| 1.0 / ((rank + 1) as f64).powf(self.zipf_exponent);
        let background = Sampler::new(
            order
                .iter()
                .enumerate()
                .map(|(r, &w)| (w, zipf(r)))
                .collect(),
        );
        let topics: Vec<Sampler> = (0..k)
            .map(|_| {
                let mut words: Vec<usize> = (0..f).collect();
                words.shuffle(&mut rng);
                words.truncate(self.topic_words_per_class.min(f));
                Sampler::new(
                    words
                        .iter()
                        .enumerate()
                        .map(|(r, &w)| (w, zipf(r)))
                        .collect(),
                )
            })
            .collect();

        let poisson = Poisson::new(self.mean_words.max(1e-3)).expect("positive mean");
        let max_words = (f / 2).max(1);
        let mut features = Matrix::zeros(n, f);
        for (i, &c) in labels.iter().enumerate() {
            let len = (poisson.sample(&mut rng) as usize).clamp(1, max_words);
            let mut words = HashSet::with_capacity(len);
            let mut attempts = 0;
            while words.len() < len && attempts < 50 * len {
                attempts += 1;
                let w = if rng.random::<f64>() < self.topic_strength {
                    topics[c].draw(&mut rng)
                } else {
                    background.draw(&mut rng)
                };
                words.insert(w);
            }
            for w in words {
                features.set(i, w, 1.0);
            }
        }

        // Pareto(x_m = 1) propensities; tail index alpha - 1
        let theta: Vec<f64> = (0..n)
            .map(|_| {
                (1.0 - rng.random::<f64>())
                    .powf(-1.0 / (self.degree_alpha - 1.0))
                    .min(1e3)
            })
            .collect();
        let everyone = Sampler::new(theta.iter().copied().enumerate().collect());
        let by_class: Vec<Sampler> = (0..k)
            .map(|c| {
                Sampler::new(
                    (0..n)
                        .filter(|&i| labels[i] == c)
                        .map(|i| (i, theta[i]))
                        .collect(),
                )
            })
            .collect();
        let mut seen = HashSet::with_capacity(self.num_edges);
        let mut edges = Vec::with_capacity(self.num_edges);
        let mut attempts = 0usize;
        while edges.len() < self.num_edges {
            attempts += 1;
            if attempts > 200 * self.num_edges + 1000 {
                return Err(BgnnError::Validation(format!(
                    "could not place {} edges (placed {})",
                    self.num_edges,
                    edges.len()
                )));
            }
            let a = everyone.draw(&mut rng);
            let b = if rng.random::<f64>() < self.homophily {
                by_class[labels[a]].draw(&mut rng)
            } else {
                let b = everyone.draw(&mut rng);
                if labels[b] == labels[a] {
                    continue;
                }
                b
            };
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            if seen.insert(key) {
                edges.push(key);
            }
        }

        let net = CitationNetwork {
            node_ids: (0..n).map(|i| i.to_string()).collect(),
            edges,
            features,
            labels,
            num_classes: k,
            class_names: (0..k).map(|c| format!("class_{c}")).collect(),
        };
        net.validate()?;
        Ok(net)
    }
}

/// Draws items with probability proportional to their weights (inverse CDF).
struct Sampler {
    items: Vec<usize>,
    cumulative: Vec<f64>,
}

impl Sampler {
    fn new(weighted: Vec<(usize, f64)>) -> Self {
        let mut acc = 0.0;
        let mut items = Vec::with_capacity(weighted.len());
        let mut cumulative = Vec::with_capacity(weighted.len());
        for (i, w) in weighted {
            acc += w;
            items.push(i);
            cumulative.push(acc);
        }
        Self { items, cumulative }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty sampler");
        let x = rng.random::<f64>() * total;
        let k = self.cumulative.partition_point(|&c| c <= x);
        self.items[k.min(self.items.len() - 1)]
    }
}

/// Class histogram, useful in reports.
pub fn class_counts(labels: &[usize]) -> BTreeMap<usize, usize> {
    let mut m = BTreeMap::new();
    for &l in labels {
        *m.entry(l).or_insert(0) += 1;
    }
    m
}
