//! Rectifier and threshold network values and their exact evaluation.
//!
//! All network types validate on construction and are immutable afterwards;
//! conversions elsewhere in the crate always build new values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sign::{relu, sgn, Sign};

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(&v) => Err(Error::NonFinite(v)),
        None => Ok(()),
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One hidden unit: `weights . x + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AffineUnitRepr")]
pub struct AffineUnit {
    weights: Vec<f64>,
    bias: f64,
}

#[derive(Deserialize)]
struct AffineUnitRepr {
    weights: Vec<f64>,
    bias: f64,
}

impl TryFrom<AffineUnitRepr> for AffineUnit {
    type Error = Error;
    fn try_from(r: AffineUnitRepr) -> Result<Self> {
        AffineUnit::new(r.weights, r.bias)
    }
}

impl AffineUnit {
    pub fn new(weights: Vec<f64>, bias: f64) -> Result<Self> {
        check_finite(&weights)?;
        check_finite(&[bias])?;
        Ok(Self { weights, bias })
    }

    pub fn zero(dim: usize, bias: f64) -> Result<Self> {
        Self::new(vec![0.0; dim], bias)
    }

    /// The unit `x_axis + bias` along coordinate `axis`.
    pub fn axis(dim: usize, axis: usize, bias: f64) -> Result<Self> {
        if axis >= dim {
            return Err(Error::IndexOutOfRange(format!("axis {axis} in dimension {dim}")));
        }
        let mut w = vec![0.0; dim];
        w[axis] = 1.0;
        Self::new(w, bias)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Pre-activation value. Caller guarantees `x.len() == self.dim()`.
    #[inline]
    pub fn apply(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.weights.iter().map(|w| w * factor).collect(), self.bias * factor)
    }

    pub fn with_bias(&self, bias: f64) -> Result<Self> {
        Self::new(self.weights.clone(), bias)
    }
}

/// Two-layer rectifier network in general form:
/// `sgn(w0 + sum_P R(a_k(x)) - sum_N R(a_k(x)))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ReluNetworkRepr")]
pub struct ReluNetwork {
    dim: usize,
    positive: Vec<AffineUnit>,
    negative: Vec<AffineUnit>,
    w0: f64,
}

#[derive(Deserialize)]
struct ReluNetworkRepr {
    dim: usize,
    positive: Vec<AffineUnit>,
    negative: Vec<AffineUnit>,
    w0: f64,
}

impl TryFrom<ReluNetworkRepr> for ReluNetwork {
    type Error = Error;
    fn try_from(r: ReluNetworkRepr) -> Result<Self> {
        ReluNetwork::new(r.dim, r.positive, r.negative, r.w0)
    }
}

impl ReluNetwork {
    pub fn new(dim: usize, positive: Vec<AffineUnit>, negative: Vec<AffineUnit>, w0: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidNetwork("input dimension must be at least 1".into()));
        }
        for u in positive.iter().chain(&negative) {
            check_dim(dim, u.dim())?;
        }
        check_finite(&[w0])?;
        Ok(Self { dim, positive, negative, w0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn positive(&self) -> &[AffineUnit] {
        &self.positive
    }

    pub fn negative(&self) -> &[AffineUnit] {
        &self.negative
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    /// `|P|`
    pub fn n1(&self) -> usize {
        self.positive.len()
    }

    /// `|N|`
    pub fn n2(&self) -> usize {
        self.negative.len()
    }

    pub fn num_units(&self) -> usize {
        self.n1() + self.n2()
    }

    /// Real-valued output pre-activation.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        let pos: f64 = self.positive.iter().map(|u| relu(u.apply(x))).sum();
        let neg: f64 = self.negative.iter().map(|u| relu(u.apply(x))).sum();
        Ok(self.w0 + pos - neg)
    }

    pub fn eval(&self, x: &[f64]) -> Result<Sign> {
        sgn(self.score(x)?)
    }

    /// Every hidden unit, positive units first.
    pub fn units(&self) -> impl Iterator<Item = &AffineUnit> {
        self.positive.iter().chain(&self.negative)
    }
}

pub fn eval_relu(net: &ReluNetwork, x: &[f64]) -> Result<Sign> {
    net.eval(x)
}

/// Weight rows of a layer, stored densely or as `(input, weight)` pairs.
#[derive(Debug, Clone, PartialEq)]
enum Rows {
    Dense(Vec<Vec<f64>>),
    Sparse { inputs: usize, rows: Vec<Vec<(usize, f64)>> },
}

/// Fully connected layer; row `i` holds the weights of unit `i`.
///
/// Sparse rows keep the block-structured layers of normal-form conversions
/// linear in the number of units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayerRepr", into = "LayerRepr")]
pub struct Layer {
    rows: Rows,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LayerRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inputs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sparse_weights: Option<Vec<Vec<(usize, f64)>>>,
    bias: Vec<f64>,
}

impl TryFrom<LayerRepr> for Layer {
    type Error = Error;
    fn try_from(r: LayerRepr) -> Result<Self> {
        match (r.weights, r.inputs, r.sparse_weights) {
            (Some(w), None, None) => Layer::new(w, r.bias),
            (None, Some(inputs), Some(rows)) => Layer::sparse(inputs, rows, r.bias),
            _ => Err(Error::InvalidNetwork("layer needs either `weights` or `inputs` with `sparse_weights`".into())),
        }
    }
}

impl From<Layer> for LayerRepr {
    fn from(l: Layer) -> Self {
        match l.rows {
            Rows::Dense(w) => LayerRepr { weights: Some(w), inputs: None, sparse_weights: None, bias: l.bias },
            Rows::Sparse { inputs, rows } => {
                LayerRepr { weights: None, inputs: Some(inputs), sparse_weights: Some(rows), bias: l.bias }
            }
        }
    }
}

fn check_shape(rows: usize, bias: &[f64]) -> Result<()> {
    if rows != bias.len() {
        return Err(Error::InvalidNetwork(format!("layer has {rows} weight rows but {} biases", bias.len())));
    }
    if rows == 0 {
        return Err(Error::InvalidNetwork("layer has no units".into()));
    }
    check_finite(bias)
}

impl Layer {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self> {
        check_shape(weights.len(), &bias)?;
        let width = weights[0].len();
        for row in &weights {
            check_dim(width, row.len())?;
            check_finite(row)?;
        }
        Ok(Self { rows: Rows::Dense(weights), bias })
    }

    /// Layer over `inputs` inputs whose row `i` lists its non-zero `(input, weight)` pairs.
    pub fn sparse(inputs: usize, rows: Vec<Vec<(usize, f64)>>, bias: Vec<f64>) -> Result<Self> {
        check_shape(rows.len(), &bias)?;
        if inputs == 0 {
            return Err(Error::InvalidNetwork("layer has no inputs".into()));
        }
        for row in &rows {
            for &(j, w) in row {
                if j >= inputs {
                    return Err(Error::IndexOutOfRange(format!("input {j} of {inputs}")));
                }
                if !w.is_finite() {
                    return Err(Error::NonFinite(w));
                }
            }
        }
        Ok(Self { rows: Rows::Sparse { inputs, rows }, bias })
    }

    pub fn from_units(units: &[AffineUnit]) -> Result<Self> {
        Self::new(
            units.iter().map(|u| u.weights.clone()).collect(),
            units.iter().map(|u| u.bias).collect(),
        )
    }

    /// A single output unit.
    pub fn output(weights: Vec<f64>, bias: f64) -> Result<Self> {
        Self::new(vec![weights], vec![bias])
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.rows, Rows::Sparse { .. })
    }

    /// Dense weights of unit `i`.
    pub fn weight_row(&self, i: usize) -> Vec<f64> {
        match &self.rows {
            Rows::Dense(w) => w[i].clone(),
            Rows::Sparse { inputs, rows } => {
                let mut w = vec![0.0; *inputs];
                for &(j, v) in &rows[i] {
                    w[j] += v;
                }
                w
            }
        }
    }

    /// All weight rows, densified.
    pub fn dense_weights(&self) -> Vec<Vec<f64>> {
        (0..self.outputs()).map(|i| self.weight_row(i)).collect()
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn inputs(&self) -> usize {
        match &self.rows {
            Rows::Dense(w) => w[0].len(),
            Rows::Sparse { inputs, .. } => *inputs,
        }
    }

    pub fn outputs(&self) -> usize {
        self.bias.len()
    }

    pub fn unit(&self, i: usize) -> AffineUnit {
        AffineUnit { weights: self.weight_row(i), bias: self.bias[i] }
    }

    pub fn units(&self) -> Vec<AffineUnit> {
        (0..self.outputs()).map(|i| self.unit(i)).collect()
    }

    pub fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        match &self.rows {
            Rows::Dense(w) => w.iter().zip(&self.bias).map(|(w, b)| dot(w, x) + b).collect(),
            Rows::Sparse { rows, .. } => rows
                .iter()
                .zip(&self.bias)
                .map(|(r, b)| r.iter().map(|&(j, w)| w * x[j]).sum::<f64>() + b)
                .collect(),
        }
    }
}

fn check_stack(dim: usize, layers: &[Layer]) -> Result<()> {
    let mut width = dim;
    for (i, layer) in layers.iter().enumerate() {
        if layer.inputs() != width {
            return Err(Error::InvalidNetwork(format!(
                "layer {i} expects {} inputs but receives {width}",
                layer.inputs()
            )));
        }
        width = layer.outputs();
    }
    if width != 1 {
        return Err(Error::InvalidNetwork(format!("final layer has {width} units, expected 1")));
    }
    Ok(())
}

/// Threshold network with one or two hidden layers; every activation is [`sgn`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ThresholdNetworkRepr")]
pub struct ThresholdNetwork {
    dim: usize,
    layers: Vec<Layer>,
}

#[derive(Deserialize)]
struct ThresholdNetworkRepr {
    dim: usize,
    layers: Vec<Layer>,
}

impl TryFrom<ThresholdNetworkRepr> for ThresholdNetwork {
    type Error = Error;
    fn try_from(r: ThresholdNetworkRepr) -> Result<Self> {
        ThresholdNetwork::new(r.dim, r.layers)
    }
}

impl ThresholdNetwork {
    pub fn new(dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidNetwork("input dimension must be at least 1".into()));
        }
        if !(2..=3).contains(&layers.len()) {
            return Err(Error::InvalidNetwork(format!(
                "threshold networks have 2 or 3 layers, got {}",
                layers.len()
            )));
        }
        check_stack(dim, &layers)?;
        Ok(Self { dim, layers })
    }

    /// `sgn(w0 + sum_k w_k sgn(v_k . x + d_k))`
    pub fn two_layer(dim: usize, hidden: &[AffineUnit], out_weights: Vec<f64>, w0: f64) -> Result<Self> {
        Self::new(dim, vec![Layer::from_units(hidden)?, Layer::output(out_weights, w0)?])
    }

    /// Two-layer network that is positive iff at least one hidden unit is.
    pub fn disjunction(dim: usize, hidden: &[AffineUnit]) -> Result<Self> {
        let m = hidden.len();
        Self::two_layer(dim, hidden, vec![1.0; m], m as f64 - 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn is_two_layer(&self) -> bool {
        self.layers.len() == 2
    }

    /// Units of the first hidden layer.
    pub fn first_layer_units(&self) -> Vec<AffineUnit> {
        self.layers[0].units()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Sign> {
        check_dim(self.dim, x.len())?;
        let mut h: Vec<f64> = x.to_vec();
        for layer in &self.layers {
            h = layer
                .pre_activation(&h)
                .into_iter()
                .map(|z| sgn(z).map(Sign::as_f64))
                .collect::<Result<_>>()?;
        }
        Ok(Sign::from_bool(h[0] > 0.0))
    }
}

pub fn eval_threshold(net: &ThresholdNetwork, x: &[f64]) -> Result<Sign> {
    net.eval(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sign,
    /// `tanh(c z)` with `c > 0`.
    CompressedTanh { c: f64 },
}

impl Activation {
    pub fn validate(self) -> Result<()> {
        match self {
            Activation::CompressedTanh { c } if !(c > 0.0 && c.is_finite()) => {
                Err(Error::InvalidArgument(format!("compressed tanh requires c > 0, got {c}")))
            }
            _ => Ok(()),
        }
    }

    /// Real-valued activation; `Sign` maps onto `+-1`.
    pub fn apply(self, z: f64) -> Result<f64> {
        match self {
            Activation::Relu => Ok(relu(z)),
            Activation::Sign => sgn(z).map(Sign::as_f64),
            Activation::CompressedTanh { c } => Ok((c * z).tanh()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralLayer {
    #[serde(flatten)]
    pub layer: Layer,
    pub activation: Activation,
}

/// Layered network with a per-layer activation tag; the output layer is always sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeneralNetworkRepr")]
pub struct GeneralNetwork {
    dim: usize,
    layers: Vec<GeneralLayer>,
}

#[derive(Deserialize)]
struct GeneralNetworkRepr {
    dim: usize,
    layers: Vec<GeneralLayer>,
}

impl TryFrom<GeneralNetworkRepr> for GeneralNetwork {
    type Error = Error;
    fn try_from(r: GeneralNetworkRepr) -> Result<Self> {
        GeneralNetwork::new(r.dim, r.layers)
    }
}

impl GeneralNetwork {
    pub fn new(dim: usize, layers: Vec<GeneralLayer>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidNetwork("input dimension must be at least 1".into()));
        }
        if layers.is_empty() {
            return Err(Error::InvalidNetwork("network has no layers".into()));
        }
        for l in &layers {
            l.activation.validate()?;
        }
        if layers.last().map(|l| l.activation) != Some(Activation::Sign) {
            return Err(Error::InvalidNetwork("output activation must be sign".into()));
        }
        let plain: Vec<Layer> = layers.iter().map(|l| l.layer.clone()).collect();
        check_stack(dim, &plain)?;
        Ok(Self { dim, layers })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layers(&self) -> &[GeneralLayer] {
        &self.layers
    }

    /// Output pre-activation (before the final sign).
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        let mut h: Vec<f64> = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let z = l.layer.pre_activation(&h);
            if i == last {
                return Ok(z[0]);
            }
            h = z.into_iter().map(|v| l.activation.apply(v)).collect::<Result<_>>()?;
        }
        unreachable!("layers is non-empty")
    }

    pub fn eval(&self, x: &[f64]) -> Result<Sign> {
        sgn(self.score(x)?)
    }
}

impl From<&ThresholdNetwork> for GeneralNetwork {
    fn from(net: &ThresholdNetwork) -> Self {
        let layers = net
            .layers
            .iter()
            .map(|l| GeneralLayer { layer: l.clone(), activation: Activation::Sign })
            .collect();
        Self { dim: net.dim, layers }
    }
}

impl From<&ReluNetwork> for GeneralNetwork {
    fn from(net: &ReluNetwork) -> Self {
        let units: Vec<AffineUnit> = net.units().cloned().collect();
        let out: Vec<f64> = std::iter::repeat_n(1.0, net.n1())
            .chain(std::iter::repeat_n(-1.0, net.n2()))
            .collect();
        let mut layers = Vec::new();
        if units.is_empty() {
            // A constant classifier still needs a hidden layer to carry the output.
            layers.push(GeneralLayer {
                layer: Layer { rows: Rows::Dense(vec![vec![0.0; net.dim]]), bias: vec![0.0] },
                activation: Activation::Relu,
            });
            layers.push(GeneralLayer {
                layer: Layer { rows: Rows::Dense(vec![vec![0.0]]), bias: vec![net.w0] },
                activation: Activation::Sign,
            });
        } else {
            layers.push(GeneralLayer {
                layer: Layer {
                    rows: Rows::Dense(units.iter().map(|u| u.weights.clone()).collect()),
                    bias: units.iter().map(|u| u.bias).collect(),
                },
                activation: Activation::Relu,
            });
            layers.push(GeneralLayer {
                layer: Layer { rows: Rows::Dense(vec![out]), bias: vec![net.w0] },
                activation: Activation::Sign,
            });
        }
        Self { dim: net.dim, layers }
    }
}

/// Absorbs output-weight magnitudes into the hidden units (`c R(z) = sgn(c) R(|c| z)`).
///
/// Units with positive output weight land in `P`, negative in `N`, zero weights are dropped.
pub fn normalize_to_general_form(
    dim: usize,
    hidden: &[AffineUnit],
    out_weights: &[f64],
    w0: f64,
) -> Result<ReluNetwork> {
    if hidden.len() != out_weights.len() {
        return Err(Error::DimensionMismatch { expected: hidden.len(), got: out_weights.len() });
    }
    check_finite(out_weights)?;
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    for (unit, &w) in hidden.iter().zip(out_weights) {
        check_dim(dim, unit.dim())?;
        if w > 0.0 {
            positive.push(unit.scaled(w)?);
        } else if w < 0.0 {
            negative.push(unit.scaled(-w)?);
        }
    }
    ReluNetwork::new(dim, positive, negative, w0)
}
