//! Hand-written backward passes against central finite differences, and the
//! sparse product against its dense counterpart. Shared by the gradient
//! tests and the acceptance report.

use bgnn_core::graph::NormalizedIncidence;
use bgnn_core::layers::{Discriminator, IdmpLayer, MlpAligner};
use bgnn_core::rng::seeded;
use bgnn_core::tensor::{
    bce_with_logits, softmax_cross_entropy, spmm, spmm_transpose, spmm_with, Matrix, Mode,
    Parameter,
};
use rand::Rng;

pub const STEP: f64 = 1e-5;
pub const TOL: f64 = 1e-4;
pub const CASES: u64 = 24;

fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
    let diff = a.sub(b).unwrap().frobenius_norm();
    let scale = a.frobenius_norm() + b.frobenius_norm();
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

/// Central differences of `loss` with respect to parameter `k` of `model`.
fn numeric<T>(
    model: &mut T,
    k: usize,
    params: fn(&mut T) -> Vec<&mut Parameter>,
    loss: impl Fn(&T) -> f64,
) -> Matrix {
    let n = params(model)[k].value.len();
    let mut out = params(model)[k].value.clone();
    for i in 0..n {
        let x0 = params(model)[k].value.as_slice()[i];
        params(model)[k].value.as_mut_slice()[i] = x0 + STEP;
        let up = loss(model);
        params(model)[k].value.as_mut_slice()[i] = x0 - STEP;
        let down = loss(model);
        params(model)[k].value.as_mut_slice()[i] = x0;
        out.as_mut_slice()[i] = (up - down) / (2.0 * STEP);
    }
    out
}

fn numeric_input(x: &Matrix, loss: impl Fn(&Matrix) -> f64) -> Matrix {
    let mut x = x.clone();
    let mut out = x.clone();
    for i in 0..x.len() {
        let x0 = x.as_slice()[i];
        x.as_mut_slice()[i] = x0 + STEP;
        let up = loss(&x);
        x.as_mut_slice()[i] = x0 - STEP;
        let down = loss(&x);
        x.as_mut_slice()[i] = x0;
        out.as_mut_slice()[i] = (up - down) / (2.0 * STEP);
    }
    out
}

fn grads<T>(model: &mut T, params: fn(&mut T) -> Vec<&mut Parameter>) -> Vec<Matrix> {
    params(model).iter().map(|p| p.grad.clone()).collect()
}

fn zero_grads<T>(model: &mut T, params: fn(&mut T) -> Vec<&mut Parameter>) {
    params(model).into_iter().for_each(Parameter::zero_grad);
}

fn idmp_params(l: &mut IdmpLayer) -> Vec<&mut Parameter> {
    l.params_mut()
}

fn disc_params(d: &mut Discriminator) -> Vec<&mut Parameter> {
    d.net.params_mut()
}

fn aligner_params(a: &mut MlpAligner) -> Vec<&mut Parameter> {
    a.net.params_mut()
}

fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Random incidence with some empty rows.
fn random_incidence<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> NormalizedIncidence {
    let density = rng.random_range(0.05..0.6);
    let edges: Vec<(usize, usize)> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .filter(|_| rng.random::<f64>() < density)
        .collect();
    NormalizedIncidence::from_edges(rows, cols, edges)
}

struct Case {
    b_hat: NormalizedIncidence,
    h_other: Matrix,
    out_dim: usize,
    hidden: usize,
    seed: u64,
}

fn case(seed: u64) -> Case {
    let mut rng = seeded(1000 + seed);
    let rows = rng.random_range(2..25);
    let cols = rng.random_range(2..25);
    let in_dim = rng.random_range(1..10);
    Case {
        b_hat: random_incidence(rows, cols, &mut rng),
        h_other: random_matrix(cols, in_dim, &mut rng),
        out_dim: rng.random_range(1..8),
        hidden: rng.random_range(2..10),
        seed,
    }
}

fn layer(c: &Case, keep: f64) -> IdmpLayer {
    let mut l = IdmpLayer::new(
        c.h_other.cols(),
        c.out_dim,
        keep,
        true,
        &mut seeded(c.seed),
        None,
    )
    .unwrap();
    // non-zero bias so the bias gradient is exercised away from the origin
    let bias = l.bias.as_mut().unwrap();
    bias.value = random_matrix(1, c.out_dim, &mut seeded(c.seed + 7));
    l
}

/// Every comparison made, with its relative error.
#[derive(Debug, Default)]
pub struct Recorder {
    pub checks: Vec<(String, u64, f64)>,
}

impl Recorder {
    fn record(&mut self, what: &str, seed: u64, analytic: &Matrix, numeric: &Matrix) {
        self.checks
            .push((what.to_string(), seed, rel_err(analytic, numeric)));
    }

    /// The largest error and where it occurred.
    pub fn worst(&self) -> Option<&(String, u64, f64)> {
        self.checks.iter().max_by(|a, b| a.2.total_cmp(&b.2))
    }

    pub fn assert_within(&self, tol: f64) {
        for (what, seed, e) in &self.checks {
            assert!(*e < tol, "{what} (case {seed}): relative error {e:.3e}");
        }
        assert!(!self.checks.is_empty());
    }
}

pub fn message_passing_layer_gradients(rec: &mut Recorder) {
    for seed in 0..CASES {
        let c = case(seed);
        for keep in [1.0, 0.6] {
            let mut l = layer(&c, keep);
            let probe = random_matrix(c.b_hat.num_rows(), c.out_dim, &mut seeded(seed + 99));
            let mask_seed = seed + 5;
            let loss = |l: &IdmpLayer, h: &Matrix| {
                let f = l
                    .forward(&c.b_hat, h, Mode::Train, &mut seeded(mask_seed))
                    .unwrap();
                f.output.zip_map(&probe, |a, b| a * b).unwrap().sum()
            };
            let fwd = l
                .forward(&c.b_hat, &c.h_other, Mode::Train, &mut seeded(mask_seed))
                .unwrap();
            let g_in = l.backward(&c.b_hat, &fwd, &probe, true).unwrap().unwrap();
            let analytic = grads(&mut l, idmp_params);
            for (k, a) in analytic.iter().enumerate() {
                let n = numeric(&mut l, k, idmp_params, |l| loss(l, &c.h_other));
                rec.record(&format!("idmp param {k} keep {keep}"), seed, a, &n);
            }
            let n = numeric_input(&c.h_other, |h| loss(&l, h));
            rec.record("idmp input", seed, &g_in, &n);
        }
    }
}

fn disc_loss(d: &Discriminator, target: &Matrix, source: &Matrix) -> f64 {
    bgnn_core::layers::discriminator_loss(d, target, source).unwrap()
}

pub fn discriminator_gradients(rec: &mut Recorder) {
    for seed in 0..CASES {
        let c = case(seed);
        let mut rng = seeded(seed + 31);
        let source = random_matrix(rng.random_range(1..12), c.out_dim, &mut rng);
        let target = random_matrix(rng.random_range(1..12), c.out_dim, &mut rng);
        let mut d = Discriminator::new(c.out_dim, c.hidden, &mut seeded(seed), None).unwrap();
        // same accumulation as the training step, minus the optimizer update
        for (batch, label) in [(&target, 0.0), (&source, 1.0)] {
            let fwd = d.net.forward(batch).unwrap();
            let z = fwd.output.as_slice();
            let (_, g) = bce_with_logits(z, &vec![label; z.len()]).unwrap();
            let g = Matrix::new(z.len(), 1, g.iter().map(|x| 0.5 * x).collect()).unwrap();
            d.net.backward(&fwd, &g, true).unwrap();
        }
        let analytic = grads(&mut d, disc_params);
        for (k, a) in analytic.iter().enumerate() {
            let n = numeric(&mut d, k, disc_params, |d| disc_loss(d, &target, &source));
            rec.record(&format!("discriminator param {k}"), seed, a, &n);
        }
    }
}

pub fn generator_gradients_reach_the_layer_only(rec: &mut Recorder) {
    for seed in 0..CASES {
        let c = case(seed);
        let mut l = layer(&c, 1.0);
        let mut d = Discriminator::new(c.out_dim, c.hidden, &mut seeded(seed + 3), None).unwrap();
        let gen_loss = |l: &IdmpLayer, d: &Discriminator| {
            let out = l
                .forward(&c.b_hat, &c.h_other, Mode::Eval, &mut seeded(0))
                .unwrap()
                .output;
            bgnn_core::layers::generator_loss(d, &out).unwrap()
        };
        let fwd = l
            .forward(&c.b_hat, &c.h_other, Mode::Eval, &mut seeded(0))
            .unwrap();
        let dfwd = d.net.forward(&fwd.output).unwrap();
        let z = dfwd.output.as_slice();
        let (_, g) = bce_with_logits(z, &vec![0.0; z.len()]).unwrap();
        let g_h = d
            .net
            .backward(&dfwd, &Matrix::new(z.len(), 1, g).unwrap(), false)
            .unwrap();
        l.backward(&c.b_hat, &fwd, &g_h, false).unwrap();
        assert!(grads(&mut d, disc_params)
            .iter()
            .all(|g| g.as_slice().iter().all(|&x| x == 0.0)));
        let analytic = grads(&mut l, idmp_params);
        for (k, a) in analytic.iter().enumerate() {
            let n = numeric(&mut l, k, idmp_params, |l| gen_loss(l, &d));
            rec.record(&format!("generator param {k}"), seed, a, &n);
        }
    }
}

pub fn mlp_alignment_gradients(rec: &mut Recorder) {
    for seed in 0..CASES {
        let c = case(seed);
        let mut l = layer(&c, 1.0);
        let target_dim = c.hidden + 1;
        let mut a =
            MlpAligner::new(c.out_dim, c.hidden, target_dim, &mut seeded(seed + 4), None).unwrap();
        let target = random_matrix(c.b_hat.num_rows(), target_dim, &mut seeded(seed + 8));
        let loss = |l: &IdmpLayer, a: &MlpAligner| {
            let out = l
                .forward(&c.b_hat, &c.h_other, Mode::Eval, &mut seeded(0))
                .unwrap()
                .output;
            bgnn_core::layers::mlp_loss(a, &out, &target).unwrap()
        };
        let fwd = l
            .forward(&c.b_hat, &c.h_other, Mode::Eval, &mut seeded(0))
            .unwrap();
        let afwd = a.net.forward(&fwd.output).unwrap();
        let rows = fwd.output.rows() as f64;
        let g = afwd.output.sub(&target).unwrap().map(|d| 2.0 * d / rows);
        let g_h = a.net.backward(&afwd, &g, true).unwrap();
        l.backward(&c.b_hat, &fwd, &g_h, false).unwrap();
        for (k, g) in grads(&mut a, aligner_params).iter().enumerate() {
            let n = numeric(&mut a, k, aligner_params, |a| loss(&l, a));
            rec.record(&format!("aligner param {k}"), seed, g, &n);
        }
        for (k, g) in grads(&mut l, idmp_params).iter().enumerate() {
            let n = numeric(&mut l, k, idmp_params, |l| loss(l, &a));
            rec.record(&format!("mlp layer param {k}"), seed, g, &n);
        }
        zero_grads(&mut l, idmp_params);
    }
}

pub fn classifier_gradients(rec: &mut Recorder) {
    for seed in 0..CASES {
        let mut rng = seeded(seed + 500);
        let (n, d, classes) = (
            rng.random_range(1..20),
            rng.random_range(1..8),
            rng.random_range(2..6),
        );
        let x = random_matrix(n, d, &mut rng);
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        let w = random_matrix(d, classes, &mut rng);
        let (_, g) = softmax_cross_entropy(&x.matmul(&w).unwrap(), &y).unwrap();
        let analytic = x.t_matmul(&g).unwrap();
        let n = numeric_input(&w, |w| {
            softmax_cross_entropy(&x.matmul(w).unwrap(), &y).unwrap().0
        });
        rec.record("softmax regression", seed, &analytic, &n);
    }
}

/// Largest absolute deviation of the sparse products from the dense ones
/// over `instances` random incidences.
pub fn sparse_product_deviation(instances: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..instances {
        let mut rng = seeded(seed);
        let (rows, cols, d) = (
            rng.random_range(1..40),
            rng.random_range(1..40),
            rng.random_range(1..9),
        );
        let b = random_incidence(rows, cols, &mut rng);
        let x = random_matrix(cols, d, &mut rng);
        let dense = b.to_dense();
        let expect = dense.matmul(&x).unwrap();
        worst = worst.max(spmm(&b, &x).unwrap().max_abs_diff(&expect));
        worst = worst.max(spmm_with(&b, &x, true).unwrap().max_abs_diff(&expect));
        let g = random_matrix(rows, d, &mut rng);
        let expect_t = dense.t_matmul(&g).unwrap();
        worst = worst.max(spmm_transpose(&b, &g).unwrap().max_abs_diff(&expect_t));
    }
    worst
}

/// All gradient families.
pub fn all_gradients() -> Recorder {
    let mut rec = Recorder::default();
    message_passing_layer_gradients(&mut rec);
    discriminator_gradients(&mut rec);
    generator_gradients_reach_the_layer_only(&mut rec);
    mlp_alignment_gradients(&mut rec);
    classifier_gradients(&mut rec);
    rec
}
