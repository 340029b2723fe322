//! Linear classifiers trained by per-sample SGD with an elastic-net penalty.
//!
//! The objective is
//! `(1/N) Σ L(yᵢ, w·xᵢ + b) + alpha (r ‖w‖₁ + (1 - r)/2 ‖w‖₂²)`
//! with `y ∈ {-1 (fake), +1 (real)}`, `r` the L1 share of the penalty and the
//! learning rate `eta0 / t^power_t` driven by a global step counter `t`.
//! The L1 part uses the cumulative-penalty truncation of Tsuruoka et al.,
//! which keeps zeroed weights at zero instead of oscillating around it.

use std::path::Path;
use std::sync::LazyLock;

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    /// Logistic loss.
    Log,
    Hinge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    L2,
    L1,
    ElasticNet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdConfig {
    pub loss: Loss,
    pub penalty: Penalty,
    pub alpha: f64,
    /// L1 share of the penalty; read only for [`Penalty::ElasticNet`].
    pub l1_ratio: f64,
    pub power_t: f64,
    pub eta0: f64,
    /// Maximum passes over the data.
    pub epochs: usize,
    /// Stop once an epoch improves the objective by less than this.
    pub tol: Option<f64>,
    pub seed: u64,
    /// Inverse regularization; when set, `alpha = 1 / (c · N)`.
    pub c: Option<f64>,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            loss: Loss::Hinge,
            penalty: Penalty::L2,
            alpha: 1e-4,
            l1_ratio: 0.15,
            power_t: 0.5,
            eta0: 0.1,
            epochs: 1000,
            tol: Some(1e-3),
            seed: 0,
            c: None,
        }
    }
}

impl SgdConfig {
    /// Regularization strength for a training set of `n` rows.
    pub fn effective_alpha(&self, n: usize) -> f64 {
        match self.c {
            Some(c) => 1.0 / (c * n as f64),
            None => self.alpha,
        }
    }

    /// L1 share actually applied.
    pub fn l1_share(&self) -> f64 {
        match self.penalty {
            Penalty::L2 => 0.0,
            Penalty::L1 => 1.0,
            Penalty::ElasticNet => self.l1_ratio,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) {
            return Err(Error::State(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        if let Some(c) = self.c {
            if !(c > 0.0) {
                return Err(Error::State(format!("C must be positive, got {c}")));
            }
        }
        if !(self.eta0 > 0.0) {
            return Err(Error::State(format!("eta0 must be positive, got {}", self.eta0)));
        }
        if !(0.0..=1.0).contains(&self.l1_ratio) {
            return Err(Error::State(format!("l1_ratio must lie in [0, 1], got {}", self.l1_ratio)));
        }
        if !(self.power_t >= 0.0) {
            return Err(Error::State(format!("power_t must be non-negative, got {}", self.power_t)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub vectorization: String,
    pub model: String,
    /// `None` for rows the linear engine cannot reproduce.
    pub sgd: Option<SgdConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

static CATALOG: LazyLock<Vec<Preset>> = LazyLock::new(|| {
    serde_json::from_str(include_str!("presets.json")).expect("bundled preset catalog parses")
});

/// Every named hyperparameter preset, in catalog order.
pub fn catalog() -> &'static [Preset] {
    &CATALOG
}

pub fn preset(name: &str) -> Result<SgdConfig> {
    let p = CATALOG
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::Validation(format!("unknown preset {name:?}")))?;
    p.sgd.clone().ok_or_else(|| {
        Error::State(format!(
            "preset {name:?} is not a linear SGD model: {}",
            p.note.as_deref().unwrap_or("unsupported")
        ))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Array1<f64>,
    pub bias: f64,
    pub loss: Loss,
    pub config: SgdConfig,
    /// Full-data objective before training and after each epoch.
    pub objective_history: Vec<f64>,
}

pub const CLASSES: [Label; 2] = [Label::Fake, Label::Real];

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl Loss {
    fn value(self, y: f64, score: f64) -> f64 {
        match self {
            Loss::Log => softplus(-y * score),
            Loss::Hinge => (1.0 - y * score).max(0.0),
        }
    }

    /// dL/dscore
    fn derivative(self, y: f64, score: f64) -> f64 {
        match self {
            Loss::Log => -y * sigmoid(-y * score),
            Loss::Hinge => {
                if y * score < 1.0 {
                    -y
                } else {
                    0.0
                }
            }
        }
    }
}

fn check_finite(x: ArrayView2<f64>) -> Result<()> {
    if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!(
            "non-finite feature value at row {}, column {}",
            pos / x.ncols().max(1),
            pos % x.ncols().max(1)
        )));
    }
    Ok(())
}

fn objective(
    x: ArrayView2<f64>,
    y: &[f64],
    w: &Array1<f64>,
    b: f64,
    loss: Loss,
    alpha: f64,
    r: f64,
) -> f64 {
    let scores = x.dot(w);
    let mean_loss = scores
        .iter()
        .zip(y)
        .map(|(s, yi)| loss.value(*yi, s + b))
        .sum::<f64>()
        / y.len() as f64;
    let l1 = w.iter().map(|v| v.abs()).sum::<f64>();
    let l2 = w.dot(w);
    mean_loss + alpha * (r * l1 + 0.5 * (1.0 - r) * l2)
}

pub fn train_sgd(x: ArrayView2<f64>, labels: &[Label], cfg: &SgdConfig) -> Result<LinearModel> {
    cfg.validate()?;
    let (n, dim) = x.dim();
    if labels.len() != n {
        return Err(Error::Shape(format!("{n} rows but {} labels", labels.len())));
    }
    if n < 2 || !labels.contains(&Label::Real) || !labels.contains(&Label::Fake) {
        return Err(Error::State(
            "SGD training needs at least two rows covering both classes".into(),
        ));
    }
    check_finite(x)?;

    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let alpha = cfg.effective_alpha(n);
    let r = cfg.l1_share();
    let l2_strength = alpha * (1.0 - r);

    let mut w = Array1::<f64>::zeros(dim);
    let mut b = 0.0;
    // Cumulative L1 penalty: `u` is the total any weight could have received,
    // `q[j]` what weight j actually received.
    let mut u = 0.0;
    let mut q = vec![0.0; dim];

    let mut rng = crate::seed::rng(cfg.seed, crate::seed::SHUFFLE);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = vec![objective(x, &y, &w, b, cfg.loss, alpha, r)];
    let mut step: u64 = 0;

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            step += 1;
            let eta = cfg.eta0 / (step as f64).powf(cfg.power_t);
            let xi = x.row(i);
            let score = xi.dot(&w) + b;
            let g = cfg.loss.derivative(y[i], score);

            if l2_strength > 0.0 {
                w *= (1.0 - eta * l2_strength).max(0.0);
            }
            if g != 0.0 {
                w.scaled_add(-eta * g, &xi);
                b -= eta * g;
            }
            if r > 0.0 && alpha > 0.0 {
                u += eta * alpha * r;
                apply_l1(&mut w, &mut q, u);
            }
        }
        if !w.iter().all(|v| v.is_finite()) || !b.is_finite() {
            return Err(Error::Data(format!(
                "SGD diverged after {step} steps; lower eta0"
            )));
        }
        let obj = objective(x, &y, &w, b, cfg.loss, alpha, r);
        let prev = *history.last().expect("seeded with initial objective");
        history.push(obj);
        if let Some(tol) = cfg.tol {
            if prev - obj < tol {
                break;
            }
        }
    }

    Ok(LinearModel {
        weights: w,
        bias: b,
        loss: cfg.loss,
        config: cfg.clone(),
        objective_history: history,
    })
}

fn apply_l1(w: &mut Array1<f64>, q: &mut [f64], u: f64) {
    for (wj, qj) in w.iter_mut().zip(q.iter_mut()) {
        let z = *wj;
        if z > 0.0 {
            *wj = (z - (u + *qj)).max(0.0);
        } else if z < 0.0 {
            *wj = (z + (u - *qj)).min(0.0);
        }
        *qj += *wj - z;
    }
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn check_dim(&self, x: ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.dim() {
            return Err(Error::Shape(format!(
                "model expects {} features, got {}",
                self.dim(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// `w·x + b` per row.
    pub fn decision_function(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        self.check_dim(x)?;
        Ok(x.dot(&self.weights) + self.bias)
    }

    pub fn decision_one(&self, x: ArrayView1<f64>) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<Label>> {
        Ok(self
            .decision_function(x)?
            .iter()
            .map(|&s| Label::from_score(s))
            .collect())
    }

    /// Probability of "real"; only defined for logistic models.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        if self.loss != Loss::Log {
            return Err(Error::State(
                "hinge-loss models do not produce calibrated probabilities".into(),
            ));
        }
        Ok(self.decision_function(x)?.mapv(sigmoid))
    }

    /// Decision value for hinge models, probability of "real" for logistic ones.
    pub fn stacking_scores(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        match self.loss {
            Loss::Log => self.predict_proba(x),
            Loss::Hinge => self.decision_function(x),
        }
    }

    pub fn save(&self, prefix: &Path) -> Result<()> {
        let manifest = LinearManifest {
            format_version: 1,
            config: self.config.clone(),
            loss: self.loss,
            classes: CLASSES,
            bias: self.bias,
            dim: self.dim(),
            objective_history: self.objective_history.clone(),
        };
        io::write_atomic(
            &io::with_suffix(prefix, ".bin"),
            &io::f64s_to_le_bytes(self.weights.as_slice().expect("contiguous")),
        )?;
        io::write_json(&io::with_suffix(prefix, ".json"), &manifest)
    }

    pub fn load(prefix: &Path) -> Result<Self> {
        let m: LinearManifest = io::read_json(&io::with_suffix(prefix, ".json"))?;
        let w = io::le_bytes_to_f64s(&io::read_file(&io::with_suffix(prefix, ".bin"))?)?;
        if w.len() != m.dim {
            return Err(Error::Format(format!(
                "linear model {}: manifest dim {} but {} weights",
                prefix.display(),
                m.dim,
                w.len()
            )));
        }
        Ok(LinearModel {
            weights: Array1::from(w),
            bias: m.bias,
            loss: m.loss,
            config: m.config,
            objective_history: m.objective_history,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct LinearManifest {
    format_version: u32,
    config: SgdConfig,
    loss: Loss,
    classes: [Label; 2],
    bias: f64,
    dim: usize,
    objective_history: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn toy() -> (Array2<f64>, Vec<Label>) {
        (
            array![[2.0, 1.0], [1.5, 2.0], [-1.0, -1.5], [-2.0, -0.5]],
            vec![Label::Real, Label::Real, Label::Fake, Label::Fake],
        )
    }

    /// Brute-force search for a separating line through a grid of directions.
    fn separable(x: &Array2<f64>, y: &[Label]) -> bool {
        (0..360).any(|deg| {
            let t = (deg as f64).to_radians();
            let w = array![t.cos(), t.sin()];
            let s = x.dot(&w);
            let (mut lo_real, mut hi_fake) = (f64::INFINITY, f64::NEG_INFINITY);
            for (v, l) in s.iter().zip(y) {
                match l {
                    Label::Real => lo_real = lo_real.min(*v),
                    Label::Fake => hi_fake = hi_fake.max(*v),
                }
            }
            lo_real > hi_fake
        })
    }

    #[test]
    fn separable_toy_is_fit_perfectly() {
        let (x, y) = toy();
        assert!(separable(&x, &y));
        for loss in [Loss::Log, Loss::Hinge] {
            let cfg = SgdConfig { loss, epochs: 50, ..SgdConfig::default() };
            let m = train_sgd(x.view(), &y, &cfg).unwrap();
            let pred = m.predict(x.view()).unwrap();
            assert_eq!(pred, y, "{loss:?}");
        }
    }

    #[test]
    fn huge_alpha_shrinks_weights() {
        let (x, y) = toy();
        let cfg = SgdConfig { alpha: 1e6, eta0: 1e-7, power_t: 0.0, epochs: 20, tol: None, ..SgdConfig::default() };
        let m = train_sgd(x.view(), &y, &cfg).unwrap();
        // Fixed point of w <- (1 - eta*alpha) w + eta*x is |x| / alpha <= 2e-6.
        assert!(m.weights.iter().all(|w| w.abs() <= 2.0 / cfg.alpha), "{:?}", m.weights);
        let s = m.decision_function(x.view()).unwrap();
        for v in s.iter() {
            assert!((v - m.bias).abs() < 1e-5);
        }
    }

    #[test]
    fn decision_function_by_hand() {
        let m = LinearModel {
            weights: array![1.0, -1.0],
            bias: 0.5,
            loss: Loss::Log,
            config: SgdConfig::default(),
            objective_history: vec![],
        };
        let s = m.decision_function(array![[2.0, 1.0], [4.0, 2.0]].view()).unwrap();
        assert_eq!(s[0], 1.5);
        assert_eq!(s[1] - m.bias, 2.0 * (s[0] - m.bias));
        assert!(m.decision_function(array![[1.0]].view()).is_err());

        let zero = LinearModel { weights: array![0.0, 0.0], bias: 0.0, ..m.clone() };
        assert!(zero.decision_function(array![[3.0, 4.0]].view()).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tie_goes_to_fake() {
        assert_eq!(Label::from_score(1.5), Label::Real);
        assert_eq!(Label::from_score(-0.1), Label::Fake);
        assert_eq!(Label::from_score(0.0), Label::Fake);
    }

    #[test]
    fn probabilities() {
        let mk = |bias: f64, loss| LinearModel {
            weights: array![0.0],
            bias,
            loss,
            config: SgdConfig::default(),
            objective_history: vec![],
        };
        let x = array![[1.0]];
        assert_eq!(mk(0.0, Loss::Log).predict_proba(x.view()).unwrap()[0], 0.5);
        assert!((mk(3f64.ln(), Loss::Log).predict_proba(x.view()).unwrap()[0] - 0.75).abs() < 1e-15);
        assert_eq!(mk(1e4, Loss::Log).predict_proba(x.view()).unwrap()[0], 1.0);
        assert!(matches!(mk(0.0, Loss::Hinge).predict_proba(x.view()), Err(Error::State(_))));
    }

    #[test]
    fn input_errors() {
        let (x, _) = toy();
        let one_class = vec![Label::Real; 4];
        assert!(matches!(train_sgd(x.view(), &one_class, &SgdConfig::default()), Err(Error::State(_))));
        let mut bad = x.clone();
        bad[[1, 1]] = f64::NAN;
        let (_, y) = toy();
        assert!(matches!(train_sgd(bad.view(), &y, &SgdConfig::default()), Err(Error::Data(_))));
    }

    #[test]
    fn objective_decreases_without_penalty() {
        let (x, y) = toy();
        let cfg = SgdConfig { alpha: 0.0, loss: Loss::Log, epochs: 20, tol: None, ..SgdConfig::default() };
        let m = train_sgd(x.view(), &y, &cfg).unwrap();
        assert!(m.objective_history.last().unwrap() < &m.objective_history[0]);
    }

    #[test]
    fn l1_gives_sparsity() {
        // column 2 is pure noise unrelated to labels
        let x = array![[2.0, 0.3], [1.5, -0.2], [-1.0, 0.25], [-2.0, -0.3], [1.2, 0.1], [-1.3, -0.1]];
        let y = vec![Label::Real, Label::Real, Label::Fake, Label::Fake, Label::Real, Label::Fake];
        let cfg = SgdConfig { penalty: Penalty::L1, alpha: 0.05, epochs: 200, tol: None, ..SgdConfig::default() };
        let m = train_sgd(x.view(), &y, &cfg).unwrap();
        assert_eq!(m.weights[1], 0.0);
        assert!(m.weights[0] > 0.0);
    }

    #[test]
    fn catalog_presets() {
        let lr = preset("lsa-lr").unwrap();
        assert_eq!((lr.loss, lr.penalty, lr.l1_ratio, lr.power_t), (Loss::Log, Penalty::ElasticNet, 0.05, 0.5));
        let hc = preset("handcrafted-svm").unwrap();
        assert_eq!((hc.loss, hc.l1_ratio, hc.power_t), (Loss::Hinge, 0.95, 0.1));
        let st = preset("linear-stacking").unwrap();
        assert_eq!((st.loss, st.penalty, st.l1_ratio), (Loss::Hinge, Penalty::ElasticNet, 0.3));
        assert_eq!(preset("linear-stacking-probs").unwrap().l1_ratio, 0.8);
        let rob = preset("roberta-lr").unwrap();
        assert_eq!(rob.c, Some(0.01));
        assert!((rob.effective_alpha(6420) - 1.0 / 64.2).abs() < 1e-15);
        assert_eq!(catalog().len(), 9);
        assert!(matches!(preset("tax2vec-kg-tfidf"), Err(Error::State(_))));
        assert!(preset("nope").is_err());
    }

    #[test]
    fn save_load() {
        let (x, y) = toy();
        let m = train_sgd(x.view(), &y, &preset("lsa-lr").unwrap()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lin");
        m.save(&p).unwrap();
        assert_eq!(LinearModel::load(&p).unwrap(), m);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn deterministic_and_consistent(seed in any::<u64>(), hinge in any::<bool>()) {
            let (x, y) = toy();
            let loss = if hinge { Loss::Hinge } else { Loss::Log };
            let cfg = SgdConfig { loss, seed, epochs: 30, ..SgdConfig::default() };
            let a = train_sgd(x.view(), &y, &cfg).unwrap();
            let b = train_sgd(x.view(), &y, &cfg).unwrap();
            prop_assert_eq!(&a.weights, &b.weights);
            let scores = a.decision_function(x.view()).unwrap();
            let pred = a.predict(x.view()).unwrap();
            for (s, p) in scores.iter().zip(&pred) {
                prop_assert_eq!(*p, Label::from_score(*s));
            }
            if !hinge {
                let p = a.predict_proba(x.view()).unwrap();
                for (pr, lab) in p.iter().zip(&pred) {
                    prop_assert!(*pr > 0.0 && *pr < 1.0);
                    prop_assert_eq!(*lab, if *pr > 0.5 { Label::Real } else { Label::Fake });
                }
            }
        }
    }
}
