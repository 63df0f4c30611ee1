//! One-hidden-layer classifier trained with minibatch SGD on the logistic loss.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::rng::{stream_id, stream_rng, INIT_STREAM, SHUFFLE_STREAM};
use crate::error::{Error, Result};
use crate::network::{dot, Activation, GeneralLayer, GeneralNetwork, Layer};
use crate::sign::relu;

/// Hidden activation of the trained network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HiddenActivation {
    Relu,
    /// `tanh(c z)`.
    CompressedTanh { c: f64 },
}

pub const DEFAULT_TANH_SCALE: f64 = 10_000.0;

impl HiddenActivation {
    pub fn activation(self) -> Activation {
        match self {
            HiddenActivation::Relu => Activation::Relu,
            HiddenActivation::CompressedTanh { c } => Activation::CompressedTanh { c },
        }
    }

    #[inline]
    pub fn value(self, z: f64) -> f64 {
        match self {
            HiddenActivation::Relu => relu(z),
            HiddenActivation::CompressedTanh { c } => (c * z).tanh(),
        }
    }

    /// Derivative used in backpropagation; the rectifier takes 1 at `z = 0`.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            HiddenActivation::Relu => {
                if z >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            HiddenActivation::CompressedTanh { c } => {
                let t = (c * z).tanh();
                c * (1.0 - t * t)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HiddenActivation::Relu => "relu",
            HiddenActivation::CompressedTanh { .. } => "ctanh",
        }
    }
}

/// How the learning rate is selected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Validation {
    /// The last `fraction` of the training split is held out.
    Holdout { fraction: f64 },
    /// `folds` contiguous folds of the training split; the mean best error picks the rate.
    KFold { folds: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_units: usize,
    pub activation: HiddenActivation,
    pub lr_grid: Vec<f64>,
    pub l2: f64,
    pub max_epochs: usize,
    pub minibatch: usize,
    pub early_stop_patience: usize,
    pub seed: u64,
    pub validation: Validation,
}

impl TrainConfig {
    pub fn new(hidden_units: usize, activation: HiddenActivation, seed: u64) -> Self {
        Self {
            hidden_units,
            activation,
            lr_grid: vec![1.0, 1e-1, 1e-2, 1e-3, 1e-4],
            l2: 1e-4,
            max_epochs: 1000,
            minibatch: 20,
            early_stop_patience: 50,
            seed,
            validation: Validation::Holdout { fraction: 0.1 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.hidden_units == 0 {
            return bad("hidden_units must be positive".into());
        }
        self.activation.activation().validate()?;
        if self.lr_grid.is_empty() || self.lr_grid.iter().any(|&lr| !(lr > 0.0 && lr.is_finite())) {
            return bad(format!("learning rates must be positive and finite: {:?}", self.lr_grid));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad(format!("l2 must be non-negative, got {}", self.l2));
        }
        if self.max_epochs == 0 || self.minibatch == 0 || self.early_stop_patience == 0 {
            return bad("max_epochs, minibatch and early_stop_patience must be positive".into());
        }
        match self.validation {
            Validation::Holdout { fraction } if !(fraction > 0.0 && fraction < 1.0) => {
                bad(format!("holdout fraction must be in (0, 1), got {fraction}"))
            }
            Validation::KFold { folds } if folds < 2 => bad(format!("need at least 2 folds, got {folds}")),
            _ => Ok(()),
        }
    }
}

/// Parameters `z = w2 . act(W1 x + b1) + b2`; `w1` is row-major `hidden x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub dim: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

#[inline]
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Mlp {
    /// Hidden weights `N(0, 1/dim)`, output weights `N(0, 1/hidden)`, zero biases.
    pub fn init(dim: usize, hidden: usize, rng: &mut impl Rng) -> Result<Self> {
        let n1 = Normal::new(0.0, (1.0 / dim as f64).sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let n2 = Normal::new(0.0, (1.0 / hidden as f64).sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let w1 = (0..hidden * dim).map(|_| n1.sample(rng)).collect();
        let w2 = (0..hidden).map(|_| n2.sample(rng)).collect();
        Ok(Self { dim, hidden, w1, b1: vec![0.0; hidden], w2, b2: 0.0 })
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    /// `[w1, b1, w2, b2]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_params());
        v.extend(&self.w1);
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.push(self.b2);
        v
    }

    pub fn from_flat(dim: usize, hidden: usize, flat: &[f64]) -> Result<Self> {
        let need = hidden * dim + 2 * hidden + 1;
        if flat.len() != need {
            return Err(Error::DimensionMismatch { expected: need, got: flat.len() });
        }
        let (w1, rest) = flat.split_at(hidden * dim);
        let (b1, rest) = rest.split_at(hidden);
        let (w2, rest) = rest.split_at(hidden);
        Ok(Self { dim, hidden, w1: w1.to_vec(), b1: b1.to_vec(), w2: w2.to_vec(), b2: rest[0] })
    }

    fn hidden_into(&self, act: HiddenActivation, x: &[f64], z: &mut [f64], a: &mut [f64]) {
        for j in 0..self.hidden {
            z[j] = dot(&self.w1[j * self.dim..(j + 1) * self.dim], x) + self.b1[j];
            a[j] = act.value(z[j]);
        }
    }

    /// Output pre-activation.
    pub fn score(&self, act: HiddenActivation, x: &[f64]) -> f64 {
        let mut z = vec![0.0; self.hidden];
        let mut a = vec![0.0; self.hidden];
        self.hidden_into(act, x, &mut z, &mut a);
        dot(&self.w2, &a) + self.b2
    }

    fn l2_penalty(&self, l2: f64) -> f64 {
        0.5 * l2 * (self.w1.iter().map(|w| w * w).sum::<f64>() + self.w2.iter().map(|w| w * w).sum::<f64>())
    }

    /// Mean logistic loss over `rows` plus `(l2/2)` times the squared weights (biases excluded).
    pub fn objective(&self, act: HiddenActivation, data: &Dataset, rows: &[usize], l2: f64) -> f64 {
        let mut z = vec![0.0; self.hidden];
        let mut a = vec![0.0; self.hidden];
        let mut total = 0.0;
        for &i in rows {
            self.hidden_into(act, &data.points[i], &mut z, &mut a);
            total += softplus(-data.label(i) * (dot(&self.w2, &a) + self.b2));
        }
        total / rows.len() as f64 + self.l2_penalty(l2)
    }

    /// Gradient of [`Mlp::objective`], in the layout of [`Mlp::to_flat`].
    pub fn gradient(&self, act: HiddenActivation, data: &Dataset, rows: &[usize], l2: f64) -> Vec<f64> {
        let mut g = Gradient::zeros(self);
        g.accumulate(self, act, data, rows);
        g.finish(self, rows.len(), l2);
        g.flat()
    }

    /// Fraction of `rows` where `sgn(score)` differs from the label.
    pub fn error(&self, act: HiddenActivation, data: &Dataset, rows: impl IntoIterator<Item = usize>) -> f64 {
        let mut z = vec![0.0; self.hidden];
        let mut a = vec![0.0; self.hidden];
        let (mut wrong, mut count) = (0usize, 0usize);
        for i in rows {
            self.hidden_into(act, &data.points[i], &mut z, &mut a);
            let s = dot(&self.w2, &a) + self.b2;
            let predicted = if s >= 0.0 { 1.0 } else { -1.0 };
            if !(s.is_finite() && predicted == data.label(i)) {
                wrong += 1;
            }
            count += 1;
        }
        if count == 0 {
            0.0
        } else {
            wrong as f64 / count as f64
        }
    }

    pub fn to_network(&self, act: HiddenActivation) -> Result<GeneralNetwork> {
        let rows = self.w1.chunks(self.dim).map(<[f64]>::to_vec).collect();
        GeneralNetwork::new(
            self.dim,
            vec![
                GeneralLayer { layer: Layer::new(rows, self.b1.clone())?, activation: act.activation() },
                GeneralLayer { layer: Layer::output(self.w2.clone(), self.b2)?, activation: Activation::Sign },
            ],
        )
    }

    fn is_finite(&self) -> bool {
        self.b2.is_finite() && self.w1.iter().chain(&self.b1).chain(&self.w2).all(|v| v.is_finite())
    }
}

struct Gradient {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
    z: Vec<f64>,
    a: Vec<f64>,
}

impl Gradient {
    fn zeros(m: &Mlp) -> Self {
        Self {
            w1: vec![0.0; m.w1.len()],
            b1: vec![0.0; m.hidden],
            w2: vec![0.0; m.hidden],
            b2: 0.0,
            z: vec![0.0; m.hidden],
            a: vec![0.0; m.hidden],
        }
    }

    fn reset(&mut self) {
        self.w1.fill(0.0);
        self.b1.fill(0.0);
        self.w2.fill(0.0);
        self.b2 = 0.0;
    }

    fn accumulate(&mut self, m: &Mlp, act: HiddenActivation, data: &Dataset, rows: &[usize]) {
        for &i in rows {
            let x = &data.points[i];
            let y = data.label(i);
            m.hidden_into(act, x, &mut self.z, &mut self.a);
            let out = dot(&m.w2, &self.a) + m.b2;
            // d/ds log(1 + exp(-y s)) = -y sigmoid(-y s).
            let g = -y * sigmoid(-y * out);
            self.b2 += g;
            for j in 0..m.hidden {
                self.w2[j] += g * self.a[j];
                let gz = g * m.w2[j] * act.derivative(self.z[j]);
                if gz != 0.0 {
                    self.b1[j] += gz;
                    for (gw, xv) in self.w1[j * m.dim..(j + 1) * m.dim].iter_mut().zip(x) {
                        *gw += gz * xv;
                    }
                }
            }
        }
    }

    fn finish(&mut self, m: &Mlp, count: usize, l2: f64) {
        let inv = 1.0 / count as f64;
        for (g, w) in self.w1.iter_mut().zip(&m.w1) {
            *g = *g * inv + l2 * w;
        }
        for (g, w) in self.w2.iter_mut().zip(&m.w2) {
            *g = *g * inv + l2 * w;
        }
        self.b1.iter_mut().for_each(|g| *g *= inv);
        self.b2 *= inv;
    }

    fn step(&self, m: &mut Mlp, lr: f64) {
        m.w1.iter_mut().zip(&self.w1).for_each(|(w, g)| *w -= lr * g);
        m.b1.iter_mut().zip(&self.b1).for_each(|(w, g)| *w -= lr * g);
        m.w2.iter_mut().zip(&self.w2).for_each(|(w, g)| *w -= lr * g);
        m.b2 -= lr * self.b2;
    }

    fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.w1.len() + 2 * self.b1.len() + 1);
        v.extend(&self.w1);
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.push(self.b2);
        v
    }
}

/// Outcome of one learning rate on one train/validation split.
#[derive(Debug, Clone)]
struct Fit {
    model: Mlp,
    validation_error: f64,
    epochs_run: usize,
    loss_curve: Vec<f64>,
}

/// SGD with early stopping on validation error; `None` when the objective diverges.
fn fit(data: &Dataset, cfg: &TrainConfig, lr: f64, train: &[usize], val: &[usize], run: u64) -> Result<Option<Fit>> {
    let act = cfg.activation;
    let mut model = Mlp::init(data.dim, cfg.hidden_units, &mut stream_rng(cfg.seed, stream_id(INIT_STREAM, run, 0)))?;
    let mut shuffle = stream_rng(cfg.seed, stream_id(SHUFFLE_STREAM, run, 0));
    let mut order = train.to_vec();
    let mut grad = Gradient::zeros(&model);
    let mut best = (model.clone(), model.error(act, data, val.iter().copied()));
    let mut since_best = 0;
    let mut loss_curve = Vec::new();
    for _ in 0..cfg.max_epochs {
        order.shuffle(&mut shuffle);
        for batch in order.chunks(cfg.minibatch) {
            grad.reset();
            grad.accumulate(&model, act, data, batch);
            grad.finish(&model, batch.len(), cfg.l2);
            grad.step(&mut model, lr);
        }
        let loss = model.objective(act, data, train, cfg.l2);
        if !loss.is_finite() || !model.is_finite() {
            return Ok(None);
        }
        loss_curve.push(loss);
        let err = model.error(act, data, val.iter().copied());
        if err < best.1 {
            best = (model.clone(), err);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.early_stop_patience {
                break;
            }
        }
    }
    Ok(Some(Fit { model: best.0, validation_error: best.1, epochs_run: loss_curve.len(), loss_curve }))
}

/// Validation score of one grid entry; `None` marks divergence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrScore {
    pub lr: f64,
    pub validation_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub network: GeneralNetwork,
    pub train_error: f64,
    pub test_error: f64,
    pub validation_error: f64,
    pub chosen_lr: f64,
    pub epochs_run: usize,
    pub loss_curve: Vec<f64>,
    pub lr_scores: Vec<LrScore>,
}

impl TrainResult {
    /// Share of consecutive epochs whose objective did not increase.
    pub fn monotone_fraction(&self) -> f64 {
        if self.loss_curve.len() < 2 {
            return 1.0;
        }
        let ok = self.loss_curve.windows(2).filter(|w| w[1] <= w[0]).count();
        ok as f64 / (self.loss_curve.len() - 1) as f64
    }
}

/// `(train, validation)` row sets for each split of the training range.
fn splits(data: &Dataset, v: Validation) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let n = data.train_size();
    let out = match v {
        Validation::Holdout { fraction } => {
            let held = ((n as f64 * fraction).round() as usize).clamp(1, n.saturating_sub(1));
            vec![((0..n - held).collect(), (n - held..n).collect())]
        }
        Validation::KFold { folds } => (0..folds)
            .map(|f| {
                let (lo, hi) = (f * n / folds, (f + 1) * n / folds);
                ((0..lo).chain(hi..n).collect(), (lo..hi).collect())
            })
            .collect(),
    };
    if out.iter().any(|(t, v): &(Vec<usize>, Vec<usize>)| t.is_empty() || v.is_empty()) {
        return Err(Error::InvalidArgument(format!("training split of {n} rows is too small to validate")));
    }
    Ok(out)
}

pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<TrainResult> {
    cfg.validate()?;
    let splits = splits(data, cfg.validation)?;
    let jobs: Vec<(usize, usize)> =
        (0..cfg.lr_grid.len()).flat_map(|l| (0..splits.len()).map(move |s| (l, s))).collect();
    // The initial weights and shuffles depend on the split only, so every rate starts alike.
    let fits = jobs
        .par_iter()
        .map(|&(l, s)| fit(data, cfg, cfg.lr_grid[l], &splits[s].0, &splits[s].1, s as u64))
        .collect::<Result<Vec<_>>>()?;
    let per_lr: Vec<&[Option<Fit>]> = fits.chunks(splits.len()).collect();
    let lr_scores: Vec<LrScore> = cfg
        .lr_grid
        .iter()
        .zip(&per_lr)
        .map(|(&lr, runs)| LrScore {
            lr,
            validation_error: runs
                .iter()
                .map(|f| f.as_ref().map(|f| f.validation_error))
                .sum::<Option<f64>>()
                .map(|s| s / runs.len() as f64),
        })
        .collect();
    let chosen = lr_scores
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.validation_error.map(|e| (i, e)))
        .fold(None, |acc: Option<(usize, f64)>, (i, e)| match acc {
            Some((_, be)) if be <= e => acc,
            _ => Some((i, e)),
        })
        .ok_or(Error::AllDiverged)?
        .0;
    let best = per_lr[chosen]
        .iter()
        .flatten()
        .fold(None, |acc: Option<&Fit>, f| match acc {
            Some(b) if b.validation_error <= f.validation_error => acc,
            _ => Some(f),
        })
        .ok_or(Error::AllDiverged)?;
    let act = cfg.activation;
    Ok(TrainResult {
        network: best.model.to_network(act)?,
        train_error: best.model.error(act, data, data.train_range()),
        test_error: best.model.error(act, data, data.test_range()),
        validation_error: best.validation_error,
        chosen_lr: cfg.lr_grid[chosen],
        epochs_run: best.epochs_run,
        loss_curve: best.loss_curve.clone(),
        lr_scores,
    })
}
