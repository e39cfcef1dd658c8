//! Tensor-LSTM encoder mapping a sentence's feature matrix to edge scores.
//!
//! Every operation is recorded on an [`autodiff::Tape`](crate::autodiff::Tape)
//! so the same code path serves scoring and training. The free functions in
//! this module (`lstm_cell`, `matrix_lstm`, ...) are value-level wrappers that
//! run one forward pass on a scratch tape.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{ParamSet, Tape, Var};
use crate::error::{Error, Result};
use crate::scores::ScoreMatrix;
use crate::tensor::DenseTensor;
use crate::trainer::dropout_mask;

const SWAP_LEADING: [usize; 3] = [1, 0, 2];

/// A sentence as a `w × f` matrix of token features.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    values: DenseTensor,
}

impl FeatureMatrix {
    pub fn new(values: DenseTensor) -> Result<Self> {
        if values.rank() != 2 {
            return Err(Error::shape(format!(
                "feature matrix must be rank 2, got {:?}",
                values.shape()
            )));
        }
        Ok(FeatureMatrix { values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        FeatureMatrix::new(DenseTensor::from_rows(rows)?)
    }

    /// Token count.
    pub fn words(&self) -> usize {
        self.values.rows()
    }

    /// Feature width.
    pub fn width(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &DenseTensor {
        &self.values
    }
}

/// Weights of one LSTM direction. Each `w_*` is `h × (x + h)`, each `b_*`
/// has length `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub w_input: DenseTensor,
    pub w_forget: DenseTensor,
    pub w_output: DenseTensor,
    pub w_cell: DenseTensor,
    pub b_input: DenseTensor,
    pub b_forget: DenseTensor,
    pub b_output: DenseTensor,
    pub b_cell: DenseTensor,
}

const GATE_NAMES: [&str; 4] = ["input", "forget", "output", "cell"];

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let w = DenseTensor::zeros(&[hidden, input + hidden]);
        let b = DenseTensor::zeros(&[hidden]);
        LstmParams {
            w_input: w.clone(),
            w_forget: w.clone(),
            w_output: w.clone(),
            w_cell: w,
            b_input: b.clone(),
            b_forget: b.clone(),
            b_output: b.clone(),
            b_cell: b,
        }
    }

    pub fn hidden(&self) -> usize {
        self.b_input.len()
    }

    pub fn input_width(&self) -> usize {
        self.w_input.cols() - self.hidden()
    }

    fn weights(&self) -> [&DenseTensor; 4] {
        [&self.w_input, &self.w_forget, &self.w_output, &self.w_cell]
    }

    fn biases(&self) -> [&DenseTensor; 4] {
        [&self.b_input, &self.b_forget, &self.b_output, &self.b_cell]
    }

    fn validate(&self) -> Result<()> {
        let h = self.b_input.len();
        let cols = self.w_input.shape().get(1).copied().unwrap_or(0);
        for w in self.weights() {
            if w.shape() != [h, cols] || cols <= h {
                return Err(Error::shape(format!(
                    "LSTM weight {:?} inconsistent with hidden width {h}",
                    w.shape()
                )));
            }
        }
        for b in self.biases() {
            if b.shape() != [h] {
                return Err(Error::shape(format!("LSTM bias {:?} != [{h}]", b.shape())));
            }
        }
        Ok(())
    }

    fn push_into(&self, prefix: &str, set: &mut ParamSet) {
        for (g, w) in GATE_NAMES.iter().zip(self.weights()) {
            set.push(format!("{prefix}.W_{g}"), w.clone());
        }
        for (g, b) in GATE_NAMES.iter().zip(self.biases()) {
            set.push(format!("{prefix}.b_{g}"), b.clone());
        }
    }

    fn take_from(tensors: &mut impl Iterator<Item = DenseTensor>) -> Option<Self> {
        Some(LstmParams {
            w_input: tensors.next()?,
            w_forget: tensors.next()?,
            w_output: tensors.next()?,
            w_cell: tensors.next()?,
            b_input: tensors.next()?,
            b_forget: tensors.next()?,
            b_output: tensors.next()?,
            b_cell: tensors.next()?,
        })
    }
}

/// The four directional LSTMs of one Tensor-LSTM layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub row_fwd: LstmParams,
    pub row_bwd: LstmParams,
    pub col_fwd: LstmParams,
    pub col_bwd: LstmParams,
}

const DIRECTION_NAMES: [&str; 4] = ["row_fwd", "row_bwd", "col_fwd", "col_bwd"];

impl LayerParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let p = LstmParams::zeros(input, hidden);
        LayerParams {
            row_fwd: p.clone(),
            row_bwd: p.clone(),
            col_fwd: p.clone(),
            col_bwd: p,
        }
    }

    pub fn directions(&self) -> [&LstmParams; 4] {
        [&self.row_fwd, &self.row_bwd, &self.col_fwd, &self.col_bwd]
    }

    pub fn directions_mut(&mut self) -> [&mut LstmParams; 4] {
        [
            &mut self.row_fwd,
            &mut self.row_bwd,
            &mut self.col_fwd,
            &mut self.col_bwd,
        ]
    }
}

/// Network dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    /// Feature width `f` of a token.
    pub features: usize,
    /// Units per direction `h`.
    pub hidden: usize,
    /// Number of stacked Tensor-LSTM layers.
    pub layers: usize,
}

impl ModelDims {
    /// Input width of layer `k` (0-based).
    pub fn layer_input(&self, k: usize) -> usize {
        if k == 0 {
            2 * self.features + 1
        } else {
            4 * self.hidden
        }
    }

    fn validate(&self) -> Result<()> {
        if self.features == 0 || self.hidden == 0 || self.layers == 0 {
            return Err(Error::Config(format!("degenerate model dimensions {self:?}")));
        }
        Ok(())
    }
}

/// All learned weights of the parser.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub dims: ModelDims,
    pub layers: Vec<LayerParams>,
    /// Output map weights, length `4h`.
    pub output_weights: DenseTensor,
    pub output_bias: f64,
}

impl ModelParams {
    pub fn zeros(dims: ModelDims) -> Result<Self> {
        dims.validate()?;
        Ok(ModelParams {
            dims,
            layers: (0..dims.layers)
                .map(|k| LayerParams::zeros(dims.layer_input(k), dims.hidden))
                .collect(),
            output_weights: DenseTensor::zeros(&[4 * dims.hidden]),
            output_bias: 0.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        if self.layers.len() != self.dims.layers {
            return Err(Error::shape(format!(
                "{} layers stored, dims say {}",
                self.layers.len(),
                self.dims.layers
            )));
        }
        for (k, layer) in self.layers.iter().enumerate() {
            for p in layer.directions() {
                p.validate()?;
                if p.hidden() != self.dims.hidden || p.input_width() != self.dims.layer_input(k) {
                    return Err(Error::shape(format!(
                        "layer {k} expects input {} and hidden {}, got {} and {}",
                        self.dims.layer_input(k),
                        self.dims.hidden,
                        p.input_width(),
                        p.hidden()
                    )));
                }
            }
        }
        if self.output_weights.shape() != [4 * self.dims.hidden] {
            return Err(Error::shape("output weights must have length 4h"));
        }
        Ok(())
    }

    /// Flattens into named tensors; the order is stable and understood by
    /// [`ModelParams::from_param_set`] and [`ModelVars::new`].
    pub fn to_param_set(&self) -> ParamSet {
        let mut set = ParamSet::new();
        for (k, layer) in self.layers.iter().enumerate() {
            for (name, p) in DIRECTION_NAMES.iter().zip(layer.directions()) {
                p.push_into(&format!("layer{k}.{name}"), &mut set);
            }
        }
        set.push("output.weights", self.output_weights.clone());
        set.push("output.bias", DenseTensor::scalar(self.output_bias));
        set
    }

    pub fn from_param_set(dims: ModelDims, set: &ParamSet) -> Result<Self> {
        let expected = ModelParams::zeros(dims)?.to_param_set();
        if expected.names() != set.names() {
            return Err(Error::shape("parameter names do not match the model layout"));
        }
        let mut tensors = set.tensors().iter().cloned();
        let mut layers = Vec::with_capacity(dims.layers);
        for _ in 0..dims.layers {
            let mut next = || LstmParams::take_from(&mut tensors).expect("layout checked");
            layers.push(LayerParams {
                row_fwd: next(),
                row_bwd: next(),
                col_fwd: next(),
                col_bwd: next(),
            });
        }
        let output_weights = tensors.next().expect("layout checked");
        let bias = tensors.next().expect("layout checked");
        let model = ModelParams {
            dims,
            layers,
            output_weights,
            output_bias: bias.data()[0],
        };
        model.validate()?;
        Ok(model)
    }
}

/// Tape handles for one LSTM direction, gate order input/forget/output/cell.
#[derive(Clone, Copy, Debug)]
pub struct LstmVars {
    w: [Var; 4],
    b: [Var; 4],
}

impl LstmVars {
    pub fn register(tape: &mut Tape, p: &LstmParams) -> Self {
        let w = p.weights().map(|t| tape.leaf(t.clone()));
        let b = p.biases().map(|t| tape.leaf(t.clone()));
        LstmVars { w, b }
    }

    fn from_slice(vars: &[Var]) -> Self {
        LstmVars {
            w: [vars[0], vars[1], vars[2], vars[3]],
            b: [vars[4], vars[5], vars[6], vars[7]],
        }
    }
}

/// Tape handles for a whole model.
#[derive(Clone, Debug)]
pub struct ModelVars {
    layers: Vec<[LstmVars; 4]>,
    output_weights: Var,
    output_bias: Var,
}

impl ModelVars {
    /// Interprets leaves laid out as in [`ModelParams::to_param_set`].
    pub fn new(dims: &ModelDims, vars: &[Var]) -> Result<Self> {
        let per_layer = 4 * 8;
        if vars.len() != dims.layers * per_layer + 2 {
            return Err(Error::shape(format!(
                "{} parameter variables for a {}-layer model",
                vars.len(),
                dims.layers
            )));
        }
        let layers = (0..dims.layers)
            .map(|k| {
                let base = k * per_layer;
                [0, 1, 2, 3].map(|d| LstmVars::from_slice(&vars[base + d * 8..base + d * 8 + 8]))
            })
            .collect();
        Ok(ModelVars {
            layers,
            output_weights: vars[dims.layers * per_layer],
            output_bias: vars[dims.layers * per_layer + 1],
        })
    }

    pub fn register(tape: &mut Tape, model: &ModelParams) -> Self {
        let vars: Vec<Var> = model
            .to_param_set()
            .tensors()
            .iter()
            .map(|t| tape.leaf(t.clone()))
            .collect();
        ModelVars::new(&model.dims, &vars).expect("layout produced by to_param_set")
    }
}

/// Dropout rates and seed applied while training.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DropoutPlan {
    /// Between the edge tensor and the first layer.
    pub input: f64,
    /// After every Tensor-LSTM layer.
    pub hidden: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScoringMode {
    Eval,
    Train(DropoutPlan),
}

/// One LSTM step on a batch of rows: `x: n×c`, `h, c: n×h`.
pub fn cell_step(tape: &mut Tape, x: Var, h: Var, c: Var, p: &LstmVars) -> Result<(Var, Var)> {
    let input = tape.concat(x, h, 1)?;
    let mut pre = [input; 4];
    for g in 0..4 {
        let z = tape.matmul_t(input, p.w[g])?;
        pre[g] = tape.add_bias(z, p.b[g])?;
    }
    let gi = tape.sigmoid(pre[0]);
    let gf = tape.sigmoid(pre[1]);
    let go = tape.sigmoid(pre[2]);
    let cand = tape.tanh(pre[3]);
    let keep = tape.mul(gf, c)?;
    let write = tape.mul(gi, cand)?;
    let c_new = tape.add(keep, write)?;
    let squashed = tape.tanh(c_new);
    let h_new = tape.mul(go, squashed)?;
    Ok((h_new, c_new))
}

/// Runs an LSTM along axis 1 of `t: a×b×c` for each of the `a` slices in
/// parallel, from the last row backwards when `reverse` is set. Output
/// position `j` always holds the state after reading row `j`.
pub fn lstm_along_rows(tape: &mut Tape, t: Var, p: &LstmVars, reverse: bool) -> Result<Var> {
    let shape = tape.shape(t).to_vec();
    if shape.len() != 3 {
        return Err(Error::shape(format!("expected rank-3 input, got {shape:?}")));
    }
    let (a, b) = (shape[0], shape[1]);
    let hidden = tape.shape(p.b[0])[0];
    let zero = tape.leaf(DenseTensor::zeros(&[a, hidden]));
    let (mut h, mut c) = (zero, zero);
    let mut outputs = vec![zero; b];
    let order: Vec<usize> = if reverse {
        (0..b).rev().collect()
    } else {
        (0..b).collect()
    };
    for j in order {
        let x = tape.select(t, 1, j)?;
        (h, c) = cell_step(tape, x, h, c, p)?;
        outputs[j] = h;
    }
    tape.stack(&outputs, 1)
}

/// Bidirectional pass over the rows of every slice: `a×b×c → a×b×2h`.
pub fn bidirectional_rows(tape: &mut Tape, t: Var, fwd: &LstmVars, bwd: &LstmVars) -> Result<Var> {
    let f = lstm_along_rows(tape, t, fwd, false)?;
    let r = lstm_along_rows(tape, t, bwd, true)?;
    tape.concat(f, r, 2)
}

/// Four-directional layer: `a×b×c → a×b×4h`.
pub fn four_directional(tape: &mut Tape, t: Var, layer: &[LstmVars; 4]) -> Result<Var> {
    let rows = bidirectional_rows(tape, t, &layer[0], &layer[1])?;
    let swapped = tape.transpose(t, &SWAP_LEADING)?;
    let cols = bidirectional_rows(tape, swapped, &layer[2], &layer[3])?;
    let cols = tape.transpose(cols, &SWAP_LEADING)?;
    tape.concat(rows, cols, 2)
}

/// Forward pass from features to a `w × (w+1)` score variable.
pub fn encode(
    tape: &mut Tape,
    model: &ModelVars,
    features: &FeatureMatrix,
    mode: ScoringMode,
) -> Result<Var> {
    let edges = build_edge_tensor(features);
    let mut rng = match mode {
        ScoringMode::Train(plan) => Some((plan, ChaCha8Rng::seed_from_u64(plan.seed))),
        ScoringMode::Eval => None,
    };
    let mut h = tape.leaf(edges);
    if let Some((plan, rng)) = rng.as_mut() {
        if plan.input > 0.0 {
            let mask = dropout_mask(tape.shape(h), plan.input, rng);
            h = tape.mul_const(h, mask)?;
        }
    }
    for layer in &model.layers {
        let width = tape.shape(h)[2];
        let expected = tape.shape(layer[0].w[0])[1] - tape.shape(layer[0].b[0])[0];
        if width != expected {
            return Err(Error::shape(format!(
                "layer expects input width {expected}, got {width}"
            )));
        }
        h = four_directional(tape, h, layer)?;
        if let Some((plan, rng)) = rng.as_mut() {
            if plan.hidden > 0.0 {
                let mask = dropout_mask(tape.shape(h), plan.hidden, rng);
                h = tape.mul_const(h, mask)?;
            }
        }
    }
    let scores = tape.contract_last(h, model.output_weights)?;
    tape.add_scalar(scores, model.output_bias)
}

/// The `w × (w+1) × (2f+1)` tensor whose cell `(i, j)` is the features of
/// dependent `i` followed by the extended features of head `j` (head 0 is the
/// root: zero word features, root flag 1).
pub fn build_edge_tensor(s: &FeatureMatrix) -> DenseTensor {
    let (w, f) = (s.words(), s.width());
    let depth = 2 * f + 1;
    let mut data = Vec::with_capacity(w * (w + 1) * depth);
    for i in 0..w {
        let dep = s.values.row(i);
        for j in 0..=w {
            data.extend_from_slice(dep);
            if j == 0 {
                data.extend(std::iter::repeat_n(0.0, f));
                data.push(1.0);
            } else {
                data.extend_from_slice(s.values.row(j - 1));
                data.push(0.0);
            }
        }
    }
    DenseTensor::from_parts(vec![w, w + 1, depth], data)
}

/// Scores every candidate edge of a sentence.
pub fn score_sentence(s: &FeatureMatrix, m: &ModelParams, mode: ScoringMode) -> Result<ScoreMatrix> {
    if s.width() != m.dims.features {
        return Err(Error::shape(format!(
            "sentence has feature width {}, model expects {}",
            s.width(),
            m.dims.features
        )));
    }
    let mut tape = Tape::new();
    let vars = ModelVars::register(&mut tape, m);
    let out = encode(&mut tape, &vars, s, mode)?;
    ScoreMatrix::new(tape.value(out).clone())
}

fn check_cell_input(x: &[f64], h: &[f64], c: &[f64], p: &LstmParams) -> Result<()> {
    p.validate()?;
    if x.len() != p.input_width() || h.len() != p.hidden() || c.len() != p.hidden() {
        return Err(Error::shape(format!(
            "cell expects x={}, h=c={}; got x={}, h={}, c={}",
            p.input_width(),
            p.hidden(),
            x.len(),
            h.len(),
            c.len()
        )));
    }
    Ok(())
}

/// One LSTM step on single vectors.
pub fn lstm_cell(x: &[f64], h_prev: &[f64], c_prev: &[f64], p: &LstmParams) -> Result<(Vec<f64>, Vec<f64>)> {
    check_cell_input(x, h_prev, c_prev, p)?;
    let mut tape = Tape::new();
    let vars = LstmVars::register(&mut tape, p);
    let row = |v: &[f64]| DenseTensor::from_parts(vec![1, v.len()], v.to_vec());
    let x = tape.leaf(row(x));
    let h = tape.leaf(row(h_prev));
    let c = tape.leaf(row(c_prev));
    let (h, c) = cell_step(&mut tape, x, h, c, &vars)?;
    Ok((tape.value(h).data().to_vec(), tape.value(c).data().to_vec()))
}

fn check_width(x: &DenseTensor, axis: usize, p: &LstmParams) -> Result<()> {
    p.validate()?;
    if x.shape()[axis] != p.input_width() {
        return Err(Error::shape(format!(
            "input width {} does not match LSTM input width {}",
            x.shape()[axis],
            p.input_width()
        )));
    }
    Ok(())
}

/// Runs an LSTM over the rows of `x: a×b`, returning the `a×h` hidden states.
pub fn matrix_lstm(x: &DenseTensor, p: &LstmParams) -> Result<DenseTensor> {
    if x.rank() != 2 {
        return Err(Error::shape("matrix_lstm needs a matrix"));
    }
    check_width(x, 1, p)?;
    let mut tape = Tape::new();
    let vars = LstmVars::register(&mut tape, p);
    let t = tape.leaf(x.reshape(&[1, x.rows(), x.cols()])?);
    let out = lstm_along_rows(&mut tape, t, &vars, false)?;
    let v = tape.value(out);
    v.reshape(&v.shape()[1..])
}

/// Forward states concatenated with the re-reversed states of the reversed input.
pub fn bidirectional_matrix_lstm(x: &DenseTensor, fwd: &LstmParams, bwd: &LstmParams) -> Result<DenseTensor> {
    if x.rank() != 2 {
        return Err(Error::shape("bidirectional_matrix_lstm needs a matrix"));
    }
    let t = x.reshape(&[1, x.rows(), x.cols()])?;
    let out = tensor_lstm_2d(&t, fwd, bwd)?;
    out.reshape(&out.shape()[1..])
}

/// Bidirectional Matrix-LSTM applied to every slice along the first axis.
pub fn tensor_lstm_2d(t: &DenseTensor, fwd: &LstmParams, bwd: &LstmParams) -> Result<DenseTensor> {
    if t.rank() != 3 {
        return Err(Error::shape("tensor_lstm_2d needs a rank-3 tensor"));
    }
    check_width(t, 2, fwd)?;
    check_width(t, 2, bwd)?;
    let mut tape = Tape::new();
    let f = LstmVars::register(&mut tape, fwd);
    let b = LstmVars::register(&mut tape, bwd);
    let x = tape.leaf(t.clone());
    let out = bidirectional_rows(&mut tape, x, &f, &b)?;
    Ok(tape.value(out).clone())
}

/// Row-wise and column-wise bidirectional passes concatenated on the last axis.
pub fn tensor_lstm_4d(t: &DenseTensor, layer: &LayerParams) -> Result<DenseTensor> {
    if t.rank() != 3 {
        return Err(Error::shape("tensor_lstm_4d needs a rank-3 tensor"));
    }
    for p in layer.directions() {
        check_width(t, 2, p)?;
    }
    let mut tape = Tape::new();
    let vars = layer.directions().map(|p| LstmVars::register(&mut tape, p));
    let x = tape.leaf(t.clone());
    let out = four_directional(&mut tape, x, &vars)?;
    Ok(tape.value(out).clone())
}
