//! Reverse-mode differentiation over tensor-valued operations.
//!
//! A [`Tape`] records every operation applied to its variables together with
//! the computed value. [`Tape::backward`] walks the record in reverse and
//! accumulates gradients. [`compute_gradients`] wraps the whole cycle for a
//! named parameter collection.

use crate::error::{Error, Result};
use crate::losses;
use crate::tensor::DenseTensor;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMulT(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    MulConst(Var, DenseTensor),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Concat(Var, Var, usize),
    Select(Var, usize, usize),
    Stack(Vec<Var>, usize),
    Transpose(Var, Vec<usize>),
    Reshape(Var),
    ContractLast(Var, Var),
    AddScalar(Var, Var),
    CrossEntropy(Var, Vec<usize>),
    Mse(Var, DenseTensor),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMulT(..) => "matmul",
            Op::AddBias(..) => "add_bias",
            Op::Add(..) => "add",
            Op::Mul(..) => "mul",
            Op::MulConst(..) => "mul_const",
            Op::Scale(..) => "scale",
            Op::Sigmoid(..) => "sigmoid",
            Op::Tanh(..) => "tanh",
            Op::Concat(..) => "concat",
            Op::Select(..) => "select",
            Op::Stack(..) => "stack",
            Op::Transpose(..) => "transpose",
            Op::Reshape(..) => "reshape",
            Op::ContractLast(..) => "output_map",
            Op::AddScalar(..) => "add_scalar",
            Op::CrossEntropy(..) => "cross_entropy",
            Op::Mse(..) => "mse",
        }
    }
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: DenseTensor,
}

/// Operation record for one forward computation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, op: Op, value: DenseTensor) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records an input value (parameter or constant).
    pub fn leaf(&mut self, value: DenseTensor) -> Var {
        self.push(Op::Leaf, value)
    }

    pub fn value(&self, v: Var) -> &DenseTensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// `x · wᵀ` for `x: n×k`, `w: m×k`.
    pub fn matmul_t(&mut self, x: Var, w: Var) -> Result<Var> {
        let value = self.value(x).matmul_t(self.value(w))?;
        Ok(self.push(Op::MatMulT(x, w), value))
    }

    /// Adds vector `b` to every row of matrix `x`.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let xv = self.value(x);
        let bv = self.value(b);
        if xv.rank() != 2 || bv.rank() != 1 || xv.cols() != bv.len() {
            return Err(Error::shape(format!(
                "add_bias of {:?} and {:?}",
                xv.shape(),
                bv.shape()
            )));
        }
        let cols = xv.cols();
        let mut out = xv.clone();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            *v += bv.data()[i % cols];
        }
        Ok(self.push(Op::AddBias(x, b), out))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y)?;
        Ok(self.push(Op::Add(a, b), value))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y)?;
        Ok(self.push(Op::Mul(a, b), value))
    }

    /// Elementwise product with a constant tensor (e.g. a dropout mask).
    pub fn mul_const(&mut self, a: Var, c: DenseTensor) -> Result<Var> {
        let value = self.value(a).zip_map(&c, |x, y| x * y)?;
        Ok(self.push(Op::MulConst(a, c), value))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).scale(c);
        self.push(Op::Scale(a, c), value)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        self.push(Op::Sigmoid(a), value)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::tanh);
        self.push(Op::Tanh(a), value)
    }

    pub fn concat(&mut self, a: Var, b: Var, axis: usize) -> Result<Var> {
        let value = self.value(a).concat(self.value(b), axis)?;
        Ok(self.push(Op::Concat(a, b, axis), value))
    }

    pub fn select(&mut self, a: Var, axis: usize, index: usize) -> Result<Var> {
        let value = self.value(a).select(axis, index)?;
        Ok(self.push(Op::Select(a, axis, index), value))
    }

    pub fn stack(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let values: Vec<DenseTensor> = parts.iter().map(|&p| self.value(p).clone()).collect();
        let value = DenseTensor::stack(&values, axis)?;
        Ok(self.push(Op::Stack(parts.to_vec(), axis), value))
    }

    pub fn transpose(&mut self, a: Var, perm: &[usize]) -> Result<Var> {
        let value = self.value(a).transpose(perm)?;
        Ok(self.push(Op::Transpose(a, perm.to_vec()), value))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(a).reshape(shape)?;
        Ok(self.push(Op::Reshape(a), value))
    }

    /// Contracts the last axis of `x` with vector `w`.
    pub fn contract_last(&mut self, x: Var, w: Var) -> Result<Var> {
        let xv = self.value(x);
        let wv = self.value(w);
        let d = *xv.shape().last().unwrap();
        if wv.rank() != 1 || wv.len() != d || xv.rank() < 2 {
            return Err(Error::shape(format!(
                "contract_last of {:?} with {:?}",
                xv.shape(),
                wv.shape()
            )));
        }
        let data = xv
            .data()
            .chunks(d)
            .map(|c| c.iter().zip(wv.data()).map(|(a, b)| a * b).sum())
            .collect();
        let shape = xv.shape()[..xv.rank() - 1].to_vec();
        Ok(self.push(Op::ContractLast(x, w), DenseTensor::from_parts(shape, data)))
    }

    /// Adds the single element of `b` to every element of `x`.
    pub fn add_scalar(&mut self, x: Var, b: Var) -> Result<Var> {
        let bv = self.value(b);
        if bv.len() != 1 {
            return Err(Error::shape("add_scalar needs a one-element tensor"));
        }
        let c = bv.data()[0];
        let value = self.value(x).map(|v| v + c);
        Ok(self.push(Op::AddScalar(x, b), value))
    }

    /// Masked row-wise softmax cross entropy against gold heads.
    pub fn cross_entropy(&mut self, scores: Var, gold: &[usize]) -> Result<Var> {
        let loss = losses::cross_entropy_raw(self.value(scores), gold)?;
        Ok(self.push(
            Op::CrossEntropy(scores, gold.to_vec()),
            DenseTensor::scalar(loss),
        ))
    }

    /// Mean squared error over unmasked cells.
    pub fn mse(&mut self, scores: Var, target: &DenseTensor) -> Result<Var> {
        let loss = losses::mse_raw(self.value(scores), target)?;
        Ok(self.push(Op::Mse(scores, target.clone()), DenseTensor::scalar(loss)))
    }

    /// Name of the earliest operation whose output holds a non-finite value.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        self.nodes
            .iter()
            .find(|n| !n.value.is_finite())
            .map(|n| n.op.name())
    }

    /// Gradients of the scalar `output` with respect to every recorded node.
    ///
    /// Entry `i` is `None` when node `i` does not influence `output`.
    pub fn backward(&self, output: Var) -> Result<Vec<Option<DenseTensor>>> {
        if self.value(output).len() != 1 {
            return Err(Error::shape("backward needs a scalar output"));
        }
        let mut grads: Vec<Option<DenseTensor>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(DenseTensor::filled(self.value(output).shape(), 1.0));

        for idx in (0..=output.0).rev() {
            let Some(gy) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => grads[idx] = Some(gy),
                Op::MatMulT(x, w) => {
                    let xv = self.value(*x);
                    let wv = self.value(*w);
                    let (n, k) = (xv.rows(), xv.cols());
                    let m = wv.rows();
                    let mut gx = vec![0.0; n * k];
                    let mut gw = vec![0.0; m * k];
                    for i in 0..n {
                        for j in 0..m {
                            let g = gy.data()[i * m + j];
                            if g == 0.0 {
                                continue;
                            }
                            let wrow = &wv.data()[j * k..(j + 1) * k];
                            let xrow = &xv.data()[i * k..(i + 1) * k];
                            for t in 0..k {
                                gx[i * k + t] += g * wrow[t];
                                gw[j * k + t] += g * xrow[t];
                            }
                        }
                    }
                    accumulate(&mut grads, *x, DenseTensor::from_parts(vec![n, k], gx));
                    accumulate(&mut grads, *w, DenseTensor::from_parts(vec![m, k], gw));
                }
                Op::AddBias(x, b) => {
                    let cols = gy.cols();
                    let mut gb = vec![0.0; cols];
                    for (i, g) in gy.data().iter().enumerate() {
                        gb[i % cols] += g;
                    }
                    accumulate(&mut grads, *b, DenseTensor::vector(gb));
                    accumulate(&mut grads, *x, gy);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, gy.clone());
                    accumulate(&mut grads, *b, gy);
                }
                Op::Mul(a, b) => {
                    let ga = gy.zip_map(self.value(*b), |g, v| g * v)?;
                    let gb = gy.zip_map(self.value(*a), |g, v| g * v)?;
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::MulConst(a, c) => {
                    accumulate(&mut grads, *a, gy.zip_map(c, |g, v| g * v)?);
                }
                Op::Scale(a, c) => {
                    accumulate(&mut grads, *a, gy.scale(*c));
                }
                Op::Sigmoid(a) => {
                    let g = gy.zip_map(&node.value, |g, y| g * y * (1.0 - y))?;
                    accumulate(&mut grads, *a, g);
                }
                Op::Tanh(a) => {
                    let g = gy.zip_map(&node.value, |g, y| g * (1.0 - y * y))?;
                    accumulate(&mut grads, *a, g);
                }
                Op::Concat(a, b, axis) => {
                    let na = self.shape(*a)[*axis];
                    let nb = self.shape(*b)[*axis];
                    accumulate(&mut grads, *a, gy.slice(*axis, 0, na)?);
                    accumulate(&mut grads, *b, gy.slice(*axis, na, nb)?);
                }
                Op::Select(a, axis, index) => {
                    let shape = self.shape(*a).to_vec();
                    let n = shape[*axis];
                    let parts: Vec<DenseTensor> = (0..n)
                        .map(|i| {
                            if i == *index {
                                gy.clone()
                            } else {
                                DenseTensor::zeros(gy.shape())
                            }
                        })
                        .collect();
                    accumulate(&mut grads, *a, DenseTensor::stack(&parts, *axis)?);
                }
                Op::Stack(parts, axis) => {
                    for (i, p) in parts.iter().enumerate() {
                        accumulate(&mut grads, *p, gy.select(*axis, i)?);
                    }
                }
                Op::Transpose(a, perm) => {
                    let mut inverse = vec![0; perm.len()];
                    for (k, &p) in perm.iter().enumerate() {
                        inverse[p] = k;
                    }
                    accumulate(&mut grads, *a, gy.transpose(&inverse)?);
                }
                Op::Reshape(a) => {
                    let shape = self.shape(*a).to_vec();
                    accumulate(&mut grads, *a, gy.reshape(&shape)?);
                }
                Op::ContractLast(x, w) => {
                    let xv = self.value(*x);
                    let wv = self.value(*w);
                    let d = wv.len();
                    let mut gx = vec![0.0; xv.len()];
                    let mut gw = vec![0.0; d];
                    for (cell, &g) in gy.data().iter().enumerate() {
                        let xs = &xv.data()[cell * d..(cell + 1) * d];
                        for t in 0..d {
                            gx[cell * d + t] = g * wv.data()[t];
                            gw[t] += g * xs[t];
                        }
                    }
                    accumulate(&mut grads, *x, DenseTensor::from_parts(xv.shape().to_vec(), gx));
                    accumulate(&mut grads, *w, DenseTensor::vector(gw));
                }
                Op::AddScalar(x, b) => {
                    let total = gy.sum();
                    accumulate(&mut grads, *b, DenseTensor::scalar(total));
                    accumulate(&mut grads, *x, gy);
                }
                Op::CrossEntropy(scores, gold) => {
                    let g = losses::cross_entropy_grad_raw(self.value(*scores), gold)?;
                    accumulate(&mut grads, *scores, g.scale(gy.data()[0]));
                }
                Op::Mse(scores, target) => {
                    let g = losses::mse_grad_raw(self.value(*scores), target)?;
                    accumulate(&mut grads, *scores, g.scale(gy.data()[0]));
                }
            }
        }
        Ok(grads)
    }
}

fn accumulate(grads: &mut [Option<DenseTensor>], v: Var, g: DenseTensor) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// An ordered collection of named parameter tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<DenseTensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet {
            names: Vec::new(),
            tensors: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: DenseTensor) {
        self.names.push(name.into());
        self.tensors.push(tensor);
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[DenseTensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [DenseTensor] {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&DenseTensor> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.tensors[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &DenseTensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }
}

impl Default for ParamSet {
    fn default() -> Self {
        ParamSet::new()
    }
}

/// Loss value and per-parameter gradients, aligned with the [`ParamSet`]
/// they were computed for.
#[derive(Clone, Debug)]
pub struct GradientContext {
    pub loss: f64,
    pub grads: Vec<DenseTensor>,
}

impl GradientContext {
    pub fn global_norm(&self) -> f64 {
        self.grads.iter().map(DenseTensor::squared_norm).sum::<f64>().sqrt()
    }
}

/// Evaluates `loss_builder` on a fresh tape with every parameter as a leaf
/// and returns the loss together with its gradient for each parameter.
///
/// The builder receives the leaf variables in [`ParamSet`] order and must
/// return a one-element tensor.
pub fn compute_gradients<F>(params: &ParamSet, loss_builder: F) -> Result<GradientContext>
where
    F: FnOnce(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let leaves: Vec<Var> = params.tensors().iter().map(|t| tape.leaf(t.clone())).collect();
    let loss_var = loss_builder(&mut tape, &leaves)?;
    let loss_value = tape.value(loss_var);
    if loss_value.len() != 1 {
        return Err(Error::shape(format!(
            "loss must be a scalar, got shape {:?}",
            loss_value.shape()
        )));
    }
    let loss = loss_value.data()[0];
    if !loss.is_finite() {
        let op = tape.first_non_finite().unwrap_or("loss");
        return Err(Error::Numeric {
            op: op.to_string(),
            detail: format!("loss evaluated to {loss}"),
        });
    }
    let mut all = tape.backward(loss_var)?;
    let grads = leaves
        .iter()
        .zip(params.tensors())
        .map(|(v, p)| all[v.0].take().unwrap_or_else(|| DenseTensor::zeros(p.shape())))
        .collect();
    Ok(GradientContext { loss, grads })
}
