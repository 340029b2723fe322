//! Feed-forward stacking network: SELU hidden layers with inverted dropout,
//! a two-node output head (fake, real) and plain minibatch SGD on
//! cross-entropy.

use std::path::Path;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::normalize::Normalizer;
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::io;

pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_2;
pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;

/// Layer sizes of the canonical stacking network.
pub const CANONICAL_DIMS: [usize; 6] = [2576, 896, 640, 512, 216, 2];

pub fn selu(z: f64) -> f64 {
    if z > 0.0 {
        SELU_LAMBDA * z
    } else {
        SELU_LAMBDA * SELU_ALPHA * z.exp_m1()
    }
}

fn selu_grad(z: f64) -> f64 {
    if z > 0.0 {
        SELU_LAMBDA
    } else {
        SELU_LAMBDA * SELU_ALPHA * z.exp()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputHead {
    /// Independent sigmoid per node, binary cross-entropy summed over nodes.
    #[default]
    Sigmoid,
    /// Softmax over the nodes with categorical cross-entropy.
    Softmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub layer_dims: Vec<usize>,
    #[serde(default)]
    pub output_head: OutputHead,
    /// Drop probability applied after every hidden activation.
    pub dropout_p: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl MlpConfig {
    /// The reference configuration: λ = 0.001, p = 0.7, batch 32, 100 epochs.
    pub fn paper(seed: u64) -> Self {
        MlpConfig {
            layer_dims: CANONICAL_DIMS.to_vec(),
            output_head: OutputHead::Sigmoid,
            dropout_p: 0.7,
            learning_rate: 0.001,
            batch_size: 32,
            epochs: 100,
            seed,
        }
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 2 || self.layer_dims.contains(&0) {
            return Err(Error::State(format!("invalid layer dims {:?}", self.layer_dims)));
        }
        if *self.layer_dims.last().expect("len checked") != 2 {
            return Err(Error::State("the output layer must have 2 nodes".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::State(format!("dropout_p must lie in [0, 1), got {}", self.dropout_p)));
        }
        if !(self.learning_rate > 0.0) || self.batch_size == 0 {
            return Err(Error::State("learning rate and batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Hyperparameter lists searched for the stacking network (the duplicated
/// 0.005 learning rate appears once).
pub fn mlp_grid(base: &MlpConfig) -> Vec<MlpConfig> {
    const LR: [f64; 6] = [0.0001, 0.005, 0.001, 0.01, 0.05, 0.1];
    const DROPOUT: [f64; 4] = [0.1, 0.3, 0.5, 0.7];
    const BATCH: [usize; 5] = [16, 32, 64, 128, 256];
    const EPOCHS: [usize; 3] = [10, 100, 1000];
    let mut out = Vec::with_capacity(LR.len() * DROPOUT.len() * BATCH.len() * EPOCHS.len());
    for &learning_rate in &LR {
        for &dropout_p in &DROPOUT {
            for &batch_size in &BATCH {
                for &epochs in &EPOCHS {
                    out.push(MlpConfig {
                        learning_rate,
                        dropout_p,
                        batch_size,
                        epochs,
                        ..base.clone()
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `fan_in × fan_out`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub config: MlpConfig,
    pub layers: Vec<Layer>,
    /// Input normalizer applied by [`MlpModel::predict`]; forward passes take
    /// already-normalized input.
    pub normalizer: Option<Normalizer>,
    /// Mean training loss per epoch.
    pub loss_history: Vec<f64>,
}

struct Cache {
    /// Layer inputs; `inputs[0]` is the batch itself.
    inputs: Vec<Array2<f64>>,
    /// Pre-activations per layer.
    pre: Vec<Array2<f64>>,
    /// Inverted-dropout masks (already scaled by 1/(1-p)) per hidden layer.
    masks: Vec<Option<Array2<f64>>>,
}

impl MlpModel {
    /// LeCun-normal weights (std = 1/√fan_in) and zero biases.
    pub fn init(config: &MlpConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = crate::seed::rng(config.seed, crate::seed::INIT);
        let layers = config
            .layer_dims
            .windows(2)
            .map(|w| {
                let normal = Normal::new(0.0, 1.0 / (w[0] as f64).sqrt()).expect("finite std");
                Layer {
                    weights: Array2::from_shape_fn((w[0], w[1]), |_| normal.sample(&mut rng)),
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        Ok(MlpModel {
            config: config.clone(),
            layers,
            normalizer: None,
            loss_history: Vec::new(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.config.layer_dims[0]
    }

    fn check_input(&self, x: ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        Ok(())
    }

    fn forward_cached(&self, x: ArrayView2<f64>, mut dropout: Option<&mut ChaCha8Rng>) -> Cache {
        let p = self.config.dropout_p;
        let last = self.layers.len() - 1;
        let mut cache = Cache {
            inputs: vec![x.to_owned()],
            pre: Vec::with_capacity(self.layers.len()),
            masks: Vec::with_capacity(last),
        };
        for (l, layer) in self.layers.iter().enumerate() {
            let z = cache.inputs[l].dot(&layer.weights) + &layer.bias;
            if l < last {
                let mut a = z.mapv(selu);
                let mask = match dropout.as_deref_mut() {
                    Some(rng) if p > 0.0 => {
                        let keep = 1.0 / (1.0 - p);
                        let m = Array2::from_shape_fn(a.dim(), |_| {
                            if rng.random::<f64>() < p {
                                0.0
                            } else {
                                keep
                            }
                        });
                        a *= &m;
                        Some(m)
                    }
                    _ => None,
                };
                cache.masks.push(mask);
                cache.inputs.push(a);
            }
            cache.pre.push(z);
        }
        cache
    }

    fn head(&self, logits: &Array2<f64>) -> Array2<f64> {
        match self.config.output_head {
            OutputHead::Sigmoid => logits.mapv(sigmoid),
            OutputHead::Softmax => {
                let mut out = logits.clone();
                for mut row in out.rows_mut() {
                    let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    row.mapv_inplace(|v| (v - m).exp());
                    let s = row.sum();
                    row.mapv_inplace(|v| v / s);
                }
                out
            }
        }
    }

    /// Output activations, one row per input row, columns (fake, real).
    /// With `dropout_rng` set the pass runs in training mode (inverted dropout).
    pub fn forward(&self, x: ArrayView2<f64>, dropout_rng: Option<&mut ChaCha8Rng>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let cache = self.forward_cached(x, dropout_rng);
        Ok(self.head(cache.pre.last().expect("at least one layer")))
    }

    /// Mean per-sample cross-entropy computed from the output logits.
    fn batch_loss(&self, logits: &Array2<f64>, targets: &Array2<f64>) -> f64 {
        let n = logits.nrows() as f64;
        let total: f64 = match self.config.output_head {
            OutputHead::Sigmoid => Zip::from(logits)
                .and(targets)
                .fold(0.0, |acc, &z, &t| acc + softplus(z) - t * z),
            OutputHead::Softmax => logits
                .rows()
                .into_iter()
                .zip(targets.rows())
                .map(|(z, t)| {
                    let m = z.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                    z.iter().zip(t.iter()).map(|(zi, ti)| ti * (lse - zi)).sum::<f64>()
                })
                .sum(),
        };
        total / n
    }

    /// Loss gradient with respect to the output logits.
    fn output_delta(&self, cache: &Cache, targets: &Array2<f64>) -> Array2<f64> {
        let n = targets.nrows() as f64;
        let out = self.head(cache.pre.last().expect("at least one layer"));
        (out - targets) / n
    }

    /// Propagates the delta of layer `l` to the pre-activations of layer `l - 1`.
    fn hidden_delta(&self, l: usize, delta: &Array2<f64>, cache: &Cache) -> Array2<f64> {
        let mut da = delta.dot(&self.layers[l].weights.t());
        if let Some(mask) = &cache.masks[l - 1] {
            da *= mask;
        }
        Zip::from(&mut da)
            .and(&cache.pre[l - 1])
            .for_each(|d, &z| *d *= selu_grad(z));
        da
    }

    fn backward(&self, cache: &Cache, targets: &Array2<f64>) -> Vec<Layer> {
        let mut delta = self.output_delta(cache, targets);
        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            grads.push(Layer {
                weights: cache.inputs[l].t().dot(&delta),
                bias: delta.sum_axis(Axis(0)),
            });
            if l > 0 {
                delta = self.hidden_delta(l, &delta, cache);
            }
        }
        grads.reverse();
        grads
    }

    /// One SGD update, accumulating `-lr * gradient` straight into the
    /// weights instead of materializing the gradient.
    fn sgd_step(&mut self, cache: &Cache, targets: &Array2<f64>, lr: f64) {
        let mut delta = self.output_delta(cache, targets);
        for l in (0..self.layers.len()).rev() {
            let next = (l > 0).then(|| self.hidden_delta(l, &delta, cache));
            let layer = &mut self.layers[l];
            general_mat_mul(-lr, &cache.inputs[l].t(), &delta, 1.0, &mut layer.weights);
            layer.bias.scaled_add(-lr, &delta.sum_axis(Axis(0)));
            if let Some(d) = next {
                delta = d;
            }
        }
    }

    /// Mean loss and its gradient for every parameter, without dropout.
    pub fn loss_and_gradients(&self, x: ArrayView2<f64>, targets: &Array2<f64>) -> Result<(f64, Vec<Layer>)> {
        self.check_input(x)?;
        let cache = self.forward_cached(x, None);
        let loss = self.batch_loss(cache.pre.last().expect("layers"), targets);
        Ok((loss, self.backward(&cache, targets)))
    }

    /// Mean loss over `x` in inference mode.
    pub fn loss(&self, x: ArrayView2<f64>, labels: &[Label]) -> Result<f64> {
        self.check_input(x)?;
        let cache = self.forward_cached(x, None);
        Ok(self.batch_loss(cache.pre.last().expect("layers"), &one_hot(labels)))
    }

    /// Labels for already-normalized input: argmax of (fake, real), ties to fake.
    pub fn predict_normalized(&self, x: ArrayView2<f64>) -> Result<Vec<Label>> {
        let out = self.forward(x, None)?;
        Ok(out
            .rows()
            .into_iter()
            .map(|r| if r[1] > r[0] { Label::Real } else { Label::Fake })
            .collect())
    }

    /// Applies the attached normalizer (if any) and predicts.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<Label>> {
        match &self.normalizer {
            Some(n) => self.predict_normalized(n.transform(x)?.view()),
            None => self.predict_normalized(x),
        }
    }

    fn layer_norms(&self) -> Vec<f64> {
        self.layers
            .iter()
            .map(|l| l.weights.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }

    pub fn save(&self, prefix: &Path) -> Result<()> {
        let manifest = MlpManifest {
            format_version: 1,
            config: self.config.clone(),
            layer_dims: self.config.layer_dims.clone(),
            normalizer: self.normalizer.clone(),
            loss_history: self.loss_history.clone(),
        };
        let mut block = Vec::new();
        for l in &self.layers {
            block.extend(l.weights.iter().copied());
            block.extend(l.bias.iter().copied());
        }
        io::write_atomic(&io::with_suffix(prefix, ".bin"), &io::f64s_to_le_bytes(&block))?;
        io::write_json(&io::with_suffix(prefix, ".json"), &manifest)
    }

    pub fn load(prefix: &Path) -> Result<Self> {
        let m: MlpManifest = io::read_json(&io::with_suffix(prefix, ".json"))?;
        let values = io::le_bytes_to_f64s(&io::read_file(&io::with_suffix(prefix, ".bin"))?)?;
        let expected: usize = m.layer_dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        if values.len() != expected || m.layer_dims != m.config.layer_dims {
            return Err(Error::Format(format!(
                "network {}: expected {expected} parameters, found {}",
                prefix.display(),
                values.len()
            )));
        }
        let mut rest = values.as_slice();
        let mut layers = Vec::new();
        for w in m.layer_dims.windows(2) {
            let (wv, r) = rest.split_at(w[0] * w[1]);
            let (bv, r) = r.split_at(w[1]);
            rest = r;
            layers.push(Layer {
                weights: Array2::from_shape_vec((w[0], w[1]), wv.to_vec()).expect("length checked"),
                bias: Array1::from(bv.to_vec()),
            });
        }
        Ok(MlpModel {
            config: m.config,
            layers,
            normalizer: m.normalizer,
            loss_history: m.loss_history,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct MlpManifest {
    format_version: u32,
    config: MlpConfig,
    layer_dims: Vec<usize>,
    normalizer: Option<Normalizer>,
    loss_history: Vec<f64>,
}

/// Rows of (fake, real) indicator targets.
pub fn one_hot(labels: &[Label]) -> Array2<f64> {
    let mut t = Array2::zeros((labels.len(), 2));
    for (i, l) in labels.iter().enumerate() {
        t[[i, l.index()]] = 1.0;
    }
    t
}

/// Minibatch SGD with seeded per-epoch shuffling and dropout.
pub fn train_mlp(x: ArrayView2<f64>, labels: &[Label], cfg: &MlpConfig) -> Result<MlpModel> {
    let mut model = MlpModel::init(cfg)?;
    model.check_input(x)?;
    if labels.len() != x.nrows() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.nrows(), labels.len())));
    }
    if !labels.contains(&Label::Real) || !labels.contains(&Label::Fake) {
        return Err(Error::State("network training needs both classes".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite input to network training".into()));
    }

    let targets = one_hot(labels);
    let mut shuffle_rng = crate::seed::rng(cfg.seed, crate::seed::SHUFFLE);
    let mut dropout_rng = crate::seed::rng(cfg.seed, crate::seed::DROPOUT);
    let mut order: Vec<usize> = (0..x.nrows()).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for (batch_no, batch) in order.chunks(cfg.batch_size).enumerate() {
            let xb = x.select(Axis(0), batch);
            let tb = targets.select(Axis(0), batch);
            let cache = model.forward_cached(xb.view(), Some(&mut dropout_rng));
            let loss = model.batch_loss(cache.pre.last().expect("layers"), &tb);
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: batch_no,
                    loss,
                    layer_norms: model.layer_norms(),
                });
            }
            epoch_loss += loss * batch.len() as f64;
            model.sgd_step(&cache, &tb, cfg.learning_rate);
            if model
                .layers
                .iter()
                .any(|l| l.weights.iter().chain(l.bias.iter()).any(|v| !v.is_finite()))
            {
                return Err(Error::Diverged {
                    epoch,
                    batch: batch_no,
                    loss,
                    layer_norms: model.layer_norms(),
                });
            }
        }
        model.loss_history.push(epoch_loss / x.nrows() as f64);
    }
    Ok(model)
}

/// Maximum relative difference between analytic gradients and central finite
/// differences (step `h`) over every parameter, with dropout off. The relative
/// error of a component is `|a - f| / max(|a|, |f|, 1e-8)`.
pub fn gradient_check(model: &MlpModel, x: ArrayView2<f64>, labels: &[Label], h: f64) -> Result<f64> {
    let targets = one_hot(labels);
    let (_, grads) = model.loss_and_gradients(x, &targets)?;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    let mut compare = |analytic: f64, plus: f64, minus: f64| {
        let numeric = (plus - minus) / (2.0 * h);
        let denom = analytic.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic - numeric).abs() / denom);
    };
    #[allow(clippy::needless_range_loop)]
    for l in 0..probe.layers.len() {
        let (rows, cols) = probe.layers[l].weights.dim();
        for i in 0..rows {
            for j in 0..cols {
                let orig = probe.layers[l].weights[[i, j]];
                probe.layers[l].weights[[i, j]] = orig + h;
                let plus = probe.loss(x, labels)?;
                probe.layers[l].weights[[i, j]] = orig - h;
                let minus = probe.loss(x, labels)?;
                probe.layers[l].weights[[i, j]] = orig;
                compare(grads[l].weights[[i, j]], plus, minus);
            }
        }
        for j in 0..cols {
            let orig = probe.layers[l].bias[j];
            probe.layers[l].bias[j] = orig + h;
            let plus = probe.loss(x, labels)?;
            probe.layers[l].bias[j] = orig - h;
            let minus = probe.loss(x, labels)?;
            probe.layers[l].bias[j] = orig;
            compare(grads[l].bias[j], plus, minus);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_distr::StandardNormal;

    fn tiny(seed: u64, dropout_p: f64) -> MlpConfig {
        MlpConfig {
            layer_dims: vec![6, 5, 4, 3, 2, 2],
            output_head: OutputHead::Sigmoid,
            dropout_p,
            learning_rate: 0.05,
            batch_size: 4,
            epochs: 5,
            seed,
        }
    }

    fn batch(n: usize, dim: usize, seed: u64) -> (Array2<f64>, Vec<Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, dim), |_| StandardNormal.sample(&mut rng));
        let y = (0..n).map(|i| if i % 2 == 0 { Label::Real } else { Label::Fake }).collect();
        (x, y)
    }

    #[test]
    fn selu_closed_form() {
        assert_eq!(selu(0.0), 0.0);
        assert!((selu(1.0) - 1.050701).abs() < 1e-6);
        assert!((selu(-50.0) + SELU_LAMBDA * SELU_ALPHA).abs() < 1e-12);
    }

    #[test]
    fn zero_parameters_give_half() {
        let mut m = MlpModel::init(&tiny(1, 0.0)).unwrap();
        for l in &mut m.layers {
            l.weights.fill(0.0);
            l.bias.fill(0.0);
        }
        let (x, _) = batch(3, 6, 2);
        assert!(m.forward(x.view(), None).unwrap().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn no_dropout_means_train_equals_inference() {
        let m = MlpModel::init(&tiny(1, 0.0)).unwrap();
        let (x, _) = batch(5, 6, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(m.forward(x.view(), Some(&mut rng)).unwrap(), m.forward(x.view(), None).unwrap());
        let dropped = MlpModel::init(&tiny(1, 0.5)).unwrap();
        assert_ne!(dropped.forward(x.view(), Some(&mut rng)).unwrap(), dropped.forward(x.view(), None).unwrap());
    }

    #[test]
    fn shape_chain_for_canonical_dims() {
        let m = MlpModel::init(&MlpConfig::paper(0)).unwrap();
        let dims: Vec<(usize, usize)> = m.layers.iter().map(|l| l.weights.dim()).collect();
        assert_eq!(dims, vec![(2576, 896), (896, 640), (640, 512), (512, 216), (216, 2)]);
        for n in [1, 3] {
            let x = Array2::zeros((n, 2576));
            assert_eq!(m.forward(x.view(), None).unwrap().dim(), (n, 2));
        }
        assert!(m.forward(Array2::zeros((1, 10)).view(), None).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..5 {
            let m = MlpModel::init(&tiny(seed, 0.0)).unwrap();
            let (x, y) = batch(4, 6, seed + 100);
            let err = gradient_check(&m, x.view(), &y, 1e-6).unwrap();
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn softmax_head_gradients() {
        let cfg = MlpConfig { output_head: OutputHead::Softmax, ..tiny(3, 0.0) };
        let m = MlpModel::init(&cfg).unwrap();
        let (x, y) = batch(4, 6, 9);
        assert!(gradient_check(&m, x.view(), &y, 1e-6).unwrap() < 1e-4);
    }

    #[test]
    fn symmetric_parameters_get_equal_gradients() {
        // Two hidden units with identical incoming and outgoing weights stay
        // interchangeable, so their gradients agree.
        let mut m = MlpModel::init(&tiny(4, 0.0)).unwrap();
        let w0 = m.layers[0].weights.column(0).to_owned();
        m.layers[0].weights.column_mut(1).assign(&w0);
        let r0 = m.layers[1].weights.row(0).to_owned();
        m.layers[1].weights.row_mut(1).assign(&r0);
        let (x, y) = batch(4, 6, 5);
        let x = ndarray::concatenate![Axis(0), x, x];
        let y: Vec<Label> = y.iter().chain(y.iter()).copied().collect();
        let (_, g) = m.loss_and_gradients(x.view(), &one_hot(&y)).unwrap();
        for i in 0..6 {
            assert!((g[0].weights[[i, 0]] - g[0].weights[[i, 1]]).abs() < 1e-10);
        }
        assert!((g[0].bias[0] - g[0].bias[1]).abs() < 1e-10);
    }

    #[test]
    fn duplicated_batch_keeps_mean_gradient() {
        let m = MlpModel::init(&tiny(6, 0.0)).unwrap();
        let (x, y) = batch(4, 6, 7);
        let (l1, g1) = m.loss_and_gradients(x.view(), &one_hot(&y)).unwrap();
        let x2 = ndarray::concatenate![Axis(0), x, x];
        let y2: Vec<Label> = y.iter().chain(y.iter()).copied().collect();
        let (l2, g2) = m.loss_and_gradients(x2.view(), &one_hot(&y2)).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.iter().zip(&g2) {
            for (u, v) in a.weights.iter().zip(b.weights.iter()) {
                assert!((u - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fused_step_matches_explicit_gradients() {
        let m = MlpModel::init(&tiny(13, 0.0)).unwrap();
        let (x, y) = batch(5, 6, 14);
        let t = one_hot(&y);
        let (_, g) = m.loss_and_gradients(x.view(), &t).unwrap();
        let mut stepped = m.clone();
        let cache = stepped.forward_cached(x.view(), None);
        stepped.sgd_step(&cache, &t, 0.3);
        for ((after, before), g) in stepped.layers.iter().zip(&m.layers).zip(&g) {
            let expected = &before.weights - &(&g.weights * 0.3);
            for (a, e) in after.weights.iter().zip(expected.iter()) {
                assert!((a - e).abs() < 1e-14, "{a} vs {e}");
            }
            let expected = &before.bias - &(&g.bias * 0.3);
            for (a, e) in after.bias.iter().zip(expected.iter()) {
                assert!((a - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let cfg = MlpConfig { epochs: 0, ..tiny(8, 0.3) };
        let (x, y) = batch(6, 6, 1);
        assert_eq!(train_mlp(x.view(), &y, &cfg).unwrap(), MlpModel::init(&cfg).unwrap());
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let cfg = MlpConfig { epochs: 30, ..tiny(11, 0.0) };
        let (x, y) = batch(16, 6, 12);
        let a = train_mlp(x.view(), &y, &cfg).unwrap();
        let b = train_mlp(x.view(), &y, &cfg).unwrap();
        assert_eq!(a, b);
        let init = MlpModel::init(&cfg).unwrap();
        assert!(a.loss(x.view(), &y).unwrap() <= init.loss(x.view(), &y).unwrap());
    }

    #[test]
    fn divergence_reports_diagnostics() {
        let cfg = MlpConfig { learning_rate: 1e300, epochs: 3, ..tiny(2, 0.0) };
        let (x, y) = batch(8, 6, 2);
        match train_mlp(x.view(), &y, &cfg) {
            Err(Error::Diverged { layer_norms, .. }) => assert_eq!(layer_norms.len(), 5),
            other => panic!("expected divergence, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn argmax_with_tie_to_fake() {
        let mut m = MlpModel::init(&MlpConfig { layer_dims: vec![1, 2], ..tiny(0, 0.0) }).unwrap();
        m.layers[0].weights = array![[0.0, 0.0]];
        m.layers[0].bias = array![0.0, 0.0];
        assert_eq!(m.predict(array![[1.0]].view()).unwrap(), vec![Label::Fake]);
        // σ(2.2) ≈ 0.9 in the fake slot, σ(-2.2) ≈ 0.1 in the real slot
        m.layers[0].bias = array![2.2, -2.2];
        assert_eq!(m.predict(array![[1.0]].view()).unwrap(), vec![Label::Fake]);
        m.layers[0].bias = array![-2.2, 2.2];
        assert_eq!(m.predict(array![[1.0]].view()).unwrap(), vec![Label::Real]);
    }

    #[test]
    fn grid_size() {
        let g = mlp_grid(&MlpConfig::paper(0));
        assert_eq!(g.len(), 6 * 4 * 5 * 3);
        assert!(g.iter().any(|c| c.learning_rate == 0.001 && c.dropout_p == 0.7 && c.batch_size == 32 && c.epochs == 100));
    }

    #[test]
    fn save_load() {
        let cfg = MlpConfig { epochs: 2, ..tiny(1, 0.2) };
        let (x, y) = batch(8, 6, 1);
        let mut m = train_mlp(x.view(), &y, &cfg).unwrap();
        m.normalizer = Some(Normalizer::fit(x.view(), &[0, 1, 2, 3], Default::default()).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mlp");
        m.save(&p).unwrap();
        assert_eq!(MlpModel::load(&p).unwrap(), m);
    }
}
