use super::tensor::{gemm, MatRef};
use super::{ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};

/// Ridge added to every recorded reciprocal denominator (sign preserving).
pub const EPS_DIV: f64 = 1e-12;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elementwise {
    Relu,
    Tanh,
    Square,
    Reciprocal,
    Add(Var),
    Sub(Var),
    Mul(Var),
    Scale(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceKind {
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy)]
enum UnaryKind {
    Relu,
    Tanh,
    Square,
    Reciprocal,
}

/// Which half of the Cauchy kernel `1 / (s - i e)` a node holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CauchyPart {
    /// `s / (s² + e²)`
    Real,
    /// `e / (s² + e²)`
    Imag,
}

#[derive(Debug, Clone, Copy)]
enum BinaryKind {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(ParamId),
    /// `x · wᵀ (+ b)`
    Affine { x: Var, w: Var, b: Option<Var> },
    AddRow { x: Var, row: Var },
    MulRow { x: Var, row: Var },
    ExpandScalar { v: Var },
    TileRows { v: Var },
    Unary { x: Var, kind: UnaryKind },
    Binary { a: Var, b: Var, kind: BinaryKind },
    Scale { x: Var, factor: f64 },
    Reduce { x: Var, kind: ReduceKind, axis: Option<usize> },
    Cauchy { s: Var, e: Var, part: CauchyPart },
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor,
    requires_grad: bool,
}

/// Append-only record of batched tensor operations for reverse-mode
/// differentiation. Parents always precede children, so a reverse sweep over
/// the node list is a valid topological order.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn mismatch(op: &'static str, detail: String) -> Error {
    Error::ShapeMismatch { op, detail }
}

/// Splits `shape` around `axis` into (outer, extent, inner) block sizes.
fn axis_blocks(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

fn column_sums(g: &Tensor) -> Vec<f64> {
    let (rows, cols) = g.as_matrix();
    let mut out = vec![0.0; cols];
    for r in 0..rows {
        for (o, v) in out.iter_mut().zip(&g.data()[r * cols..(r + 1) * cols]) {
            *o += v;
        }
    }
    out
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, op: Op, value: Tensor, requires_grad: bool, name: &'static str) -> Result<Var> {
        value.ensure_finite(name)?;
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn grad_flag(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Records a constant; no gradient flows into it.
    pub fn constant(&mut self, value: Tensor) -> Result<Var> {
        self.push(Op::Constant, value, false, "constant")
    }

    /// Records a parameter leaf whose gradient is accumulated into `store`.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Result<Var> {
        self.push(Op::Param(id), store.value(id).clone(), true, "param")
    }

    /// `x · wᵀ + b` for `x` of shape `[in]` or `[batch, in]`, `w` of shape
    /// `[out, in]` and `b` of shape `[out]`.
    pub fn record_affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        self.affine_impl(x, w, Some(b))
    }

    /// `x · wᵀ` (an affine map without bias).
    pub fn matmul_t(&mut self, x: Var, w: Var) -> Result<Var> {
        self.affine_impl(x, w, None)
    }

    fn affine_impl(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
        let xv = self.value(x);
        let wv = self.value(w);
        if wv.rank() != 2 || xv.rank() > 2 || xv.rank() == 0 {
            return Err(mismatch(
                "affine",
                format!("x {:?}, w {:?}", xv.shape(), wv.shape()),
            ));
        }
        let (rows, d_in) = xv.as_matrix();
        let (d_out, w_in) = (wv.shape()[0], wv.shape()[1]);
        if w_in != d_in {
            return Err(mismatch(
                "affine",
                format!("x {:?} vs w {:?}", xv.shape(), wv.shape()),
            ));
        }
        let mut out = vec![0.0; rows * d_out];
        if let Some(b) = b {
            let bv = self.value(b);
            if bv.shape() != [d_out] {
                return Err(mismatch(
                    "affine",
                    format!("bias {:?}, expected [{d_out}]", bv.shape()),
                ));
            }
            for r in 0..rows {
                out[r * d_out..(r + 1) * d_out].copy_from_slice(bv.data());
            }
        }
        let beta = if b.is_some() { 1.0 } else { 0.0 };
        gemm(
            MatRef::row_major(xv.data(), rows, d_in),
            MatRef::row_major(wv.data(), d_out, d_in).t(),
            beta,
            &mut out,
        );
        let shape = if xv.rank() == 1 {
            vec![d_out]
        } else {
            vec![rows, d_out]
        };
        let mut deps = vec![x, w];
        deps.extend(b);
        let rg = self.grad_flag(&deps);
        self.push(Op::Affine { x, w, b }, Tensor::new(shape, out)?, rg, "affine")
    }

    fn row_operands(&self, x: Var, row: Var, op: &'static str) -> Result<(usize, usize)> {
        let xv = self.value(x);
        let rv = self.value(row);
        let (rows, cols) = xv.as_matrix();
        if xv.rank() != 2 || rv.shape() != [cols] {
            return Err(mismatch(op, format!("x {:?}, row {:?}", xv.shape(), rv.shape())));
        }
        Ok((rows, cols))
    }

    /// Adds a length-`n` row vector to every row of a `[batch, n]` matrix.
    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var> {
        let (rows, cols) = self.row_operands(x, row, "add_row")?;
        let rv = self.value(row).data();
        let mut out = self.value(x).clone();
        for r in 0..rows {
            for (o, b) in out.data_mut()[r * cols..(r + 1) * cols].iter_mut().zip(rv) {
                *o += b;
            }
        }
        let rg = self.grad_flag(&[x, row]);
        self.push(Op::AddRow { x, row }, out, rg, "add_row")
    }

    /// Multiplies every row of a `[batch, n]` matrix by a length-`n` vector.
    pub fn mul_row(&mut self, x: Var, row: Var) -> Result<Var> {
        let (rows, cols) = self.row_operands(x, row, "mul_row")?;
        let rv = self.value(row).data();
        let mut out = self.value(x).clone();
        for r in 0..rows {
            for (o, b) in out.data_mut()[r * cols..(r + 1) * cols].iter_mut().zip(rv) {
                *o *= b;
            }
        }
        let rg = self.grad_flag(&[x, row]);
        self.push(Op::MulRow { x, row }, out, rg, "mul_row")
    }

    /// Real or imaginary part of `1 / (s - i e)` for `s` of shape `[batch, L]`
    /// and a row `e` of length `L`. Same values as composing square, add_row,
    /// reciprocal and mul, in a single node.
    pub fn cauchy(&mut self, s: Var, e: Var, part: CauchyPart) -> Result<Var> {
        let (_, cols) = self.row_operands(s, e, "cauchy")?;
        let ev = self.value(e).data();
        let sv = self.value(s);
        let mut out = Vec::with_capacity(sv.len());
        for row in sv.data().chunks_exact(cols) {
            out.extend(row.iter().zip(ev).map(|(&si, &ei)| {
                let q = 1.0 / (si * si + ei * ei + EPS_DIV);
                match part {
                    CauchyPart::Real => si * q,
                    CauchyPart::Imag => ei * q,
                }
            }));
        }
        let out = Tensor::new(sv.shape().to_vec(), out)?;
        let rg = self.grad_flag(&[s, e]);
        self.push(Op::Cauchy { s, e, part }, out, rg, "cauchy")
    }

    /// Broadcasts a one-element tensor to `shape`.
    pub fn expand_scalar(&mut self, v: Var, shape: &[usize]) -> Result<Var> {
        let value = self
            .value(v)
            .item()
            .ok_or_else(|| mismatch("expand_scalar", format!("{:?}", self.shape(v))))?;
        let rg = self.grad_flag(&[v]);
        self.push(Op::ExpandScalar { v }, Tensor::full(shape, value), rg, "expand_scalar")
    }

    /// Stacks `rows` copies of a `[n]` vector into a `[rows, n]` matrix.
    pub fn tile_rows(&mut self, v: Var, rows: usize) -> Result<Var> {
        let vv = self.value(v);
        if vv.rank() != 1 {
            return Err(mismatch("tile_rows", format!("{:?}", vv.shape())));
        }
        let n = vv.len();
        let mut data = Vec::with_capacity(rows * n);
        for _ in 0..rows {
            data.extend_from_slice(vv.data());
        }
        let rg = self.grad_flag(&[v]);
        self.push(Op::TileRows { v }, Tensor::new(vec![rows, n], data)?, rg, "tile_rows")
    }

    pub fn record_elementwise(&mut self, x: Var, kind: Elementwise) -> Result<Var> {
        match kind {
            Elementwise::Relu => self.unary(x, UnaryKind::Relu),
            Elementwise::Tanh => self.unary(x, UnaryKind::Tanh),
            Elementwise::Square => self.unary(x, UnaryKind::Square),
            Elementwise::Reciprocal => self.unary(x, UnaryKind::Reciprocal),
            Elementwise::Add(b) => self.binary(x, b, BinaryKind::Add),
            Elementwise::Sub(b) => self.binary(x, b, BinaryKind::Sub),
            Elementwise::Mul(b) => self.binary(x, b, BinaryKind::Mul),
            Elementwise::Scale(factor) => {
                let out = self.value(x).map(|v| v * factor);
                let rg = self.grad_flag(&[x]);
                self.push(Op::Scale { x, factor }, out, rg, "scale")
            }
        }
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.unary(x, UnaryKind::Relu)
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        self.unary(x, UnaryKind::Tanh)
    }

    pub fn square(&mut self, x: Var) -> Result<Var> {
        self.unary(x, UnaryKind::Square)
    }

    pub fn reciprocal(&mut self, x: Var) -> Result<Var> {
        self.unary(x, UnaryKind::Reciprocal)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, BinaryKind::Add)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, BinaryKind::Sub)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, BinaryKind::Mul)
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Result<Var> {
        self.record_elementwise(x, Elementwise::Scale(factor))
    }

    fn unary(&mut self, x: Var, kind: UnaryKind) -> Result<Var> {
        let xv = self.value(x);
        let (out, name) = match kind {
            UnaryKind::Relu => (xv.map(|v| v.max(0.0)), "relu"),
            UnaryKind::Tanh => (xv.map(f64::tanh), "tanh"),
            UnaryKind::Square => (xv.map(|v| v * v), "square"),
            UnaryKind::Reciprocal => (
                xv.map(|v| 1.0 / (v + EPS_DIV.copysign(v))),
                "reciprocal",
            ),
        };
        let rg = self.grad_flag(&[x]);
        self.push(Op::Unary { x, kind }, out, rg, name)
    }

    fn binary(&mut self, a: Var, b: Var, kind: BinaryKind) -> Result<Var> {
        let av = self.value(a);
        let bv = self.value(b);
        if av.shape() != bv.shape() {
            return Err(mismatch(
                "elementwise",
                format!("{:?} vs {:?}", av.shape(), bv.shape()),
            ));
        }
        let pairs = av.data().iter().zip(bv.data());
        let data = match kind {
            BinaryKind::Add => pairs.map(|(x, y)| x + y).collect(),
            BinaryKind::Sub => pairs.map(|(x, y)| x - y).collect(),
            BinaryKind::Mul => pairs.map(|(x, y)| x * y).collect(),
        };
        let out = Tensor::new(av.shape().to_vec(), data)?;
        let rg = self.grad_flag(&[a, b]);
        self.push(Op::Binary { a, b, kind }, out, rg, "elementwise")
    }

    /// Sum or mean over one axis, or over everything when `axis` is `None`
    /// (the result then has shape `[1]`).
    pub fn record_reduce(&mut self, x: Var, kind: ReduceKind, axis: Option<usize>) -> Result<Var> {
        let xv = self.value(x);
        let (out, shape) = match axis {
            None => {
                let mut s = xv.sum();
                if kind == ReduceKind::Mean {
                    s /= xv.len() as f64;
                }
                (vec![s], vec![1])
            }
            Some(axis) => {
                if axis >= xv.rank() {
                    return Err(Error::InvalidAxis {
                        axis,
                        rank: xv.rank(),
                    });
                }
                let (outer, extent, inner) = axis_blocks(xv.shape(), axis);
                let d = xv.data();
                let mut out = if inner == 1 {
                    d.chunks_exact(extent).map(|row| row.iter().sum()).collect()
                } else {
                    vec![0.0; outer * inner]
                };
                for o in (0..outer).filter(|_| inner > 1) {
                    for k in 0..extent {
                        let base = (o * extent + k) * inner;
                        for (acc, v) in out[o * inner..(o + 1) * inner]
                            .iter_mut()
                            .zip(&d[base..base + inner])
                        {
                            *acc += v;
                        }
                    }
                }
                if kind == ReduceKind::Mean {
                    out.iter_mut().for_each(|v| *v /= extent as f64);
                }
                let mut shape: Vec<usize> = xv.shape().to_vec();
                shape.remove(axis);
                if shape.is_empty() {
                    shape.push(1);
                }
                (out, shape)
            }
        };
        let rg = self.grad_flag(&[x]);
        self.push(
            Op::Reduce { x, kind, axis },
            Tensor::new(shape, out)?,
            rg,
            "reduce",
        )
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        self.record_reduce(x, ReduceKind::Sum, None)
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        self.record_reduce(x, ReduceKind::Mean, None)
    }

    pub fn sum_axis(&mut self, x: Var, axis: usize) -> Result<Var> {
        self.record_reduce(x, ReduceKind::Sum, Some(axis))
    }

    /// Reverse sweep from a scalar `loss` with seed 1.
    pub fn backward(&mut self, loss: Var, store: &mut ParamStore) -> Result<()> {
        self.backward_with_seed(loss, 1.0, store)
    }

    /// Accumulates `seed · ∂loss/∂p` into the gradient of every parameter
    /// recorded on the tape, then clears the tape.
    pub fn backward_with_seed(&mut self, loss: Var, seed: f64, store: &mut ParamStore) -> Result<()> {
        let loss_shape = self.shape(loss);
        if loss_shape.iter().product::<usize>() != 1 {
            return Err(Error::NonScalarLoss {
                shape: loss_shape.to_vec(),
            });
        }
        let mut adj: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        adj[loss.0] = Some(Tensor::full(loss_shape, seed));

        for i in (0..=loss.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            match node.op {
                Op::Constant => {}
                Op::Param(id) => store.accumulate_grad(id, &g),
                Op::Affine { x, w, b } => {
                    let xv = &self.nodes[x.0].value;
                    let wv = &self.nodes[w.0].value;
                    let (rows, d_in) = xv.as_matrix();
                    let d_out = wv.shape()[0];
                    let gm = MatRef::row_major(g.data(), rows, d_out);
                    if self.nodes[x.0].requires_grad {
                        let mut dx = vec![0.0; rows * d_in];
                        gemm(gm, MatRef::row_major(wv.data(), d_out, d_in), 0.0, &mut dx);
                        accumulate(&mut adj, x, Tensor::new(xv.shape().to_vec(), dx)?);
                    }
                    if self.nodes[w.0].requires_grad {
                        let mut dw = vec![0.0; d_out * d_in];
                        gemm(gm.t(), MatRef::row_major(xv.data(), rows, d_in), 0.0, &mut dw);
                        accumulate(&mut adj, w, Tensor::new(vec![d_out, d_in], dw)?);
                    }
                    if let Some(b) = b {
                        if self.nodes[b.0].requires_grad {
                            accumulate(&mut adj, b, Tensor::vector(column_sums(&g)));
                        }
                    }
                }
                Op::AddRow { x, row } => {
                    if self.nodes[row.0].requires_grad {
                        accumulate(&mut adj, row, Tensor::vector(column_sums(&g)));
                    }
                    if self.nodes[x.0].requires_grad {
                        accumulate(&mut adj, x, g);
                    }
                }
                Op::MulRow { x, row } => {
                    let xv = &self.nodes[x.0].value;
                    let rv = self.nodes[row.0].value.data();
                    let (rows, cols) = xv.as_matrix();
                    if self.nodes[row.0].requires_grad {
                        let mut dr = vec![0.0; cols];
                        for r in 0..rows {
                            let gs = &g.data()[r * cols..(r + 1) * cols];
                            let xs = &xv.data()[r * cols..(r + 1) * cols];
                            for ((d, gi), xi) in dr.iter_mut().zip(gs).zip(xs) {
                                *d += gi * xi;
                            }
                        }
                        accumulate(&mut adj, row, Tensor::vector(dr));
                    }
                    if self.nodes[x.0].requires_grad {
                        let mut dx = g;
                        for r in 0..rows {
                            for (d, ri) in dx.data_mut()[r * cols..(r + 1) * cols].iter_mut().zip(rv) {
                                *d *= ri;
                            }
                        }
                        accumulate(&mut adj, x, dx);
                    }
                }
                Op::ExpandScalar { v } => {
                    let shape = self.nodes[v.0].value.shape().to_vec();
                    accumulate(&mut adj, v, Tensor::full(&shape, g.sum()));
                }
                Op::TileRows { v } => {
                    accumulate(&mut adj, v, Tensor::vector(column_sums(&g)));
                }
                Op::Unary { x, kind } => {
                    let xv = &self.nodes[x.0].value;
                    let yv = &node.value;
                    let mut dx = g;
                    match kind {
                        UnaryKind::Relu => {
                            for (d, xi) in dx.data_mut().iter_mut().zip(xv.data()) {
                                if *xi <= 0.0 {
                                    *d = 0.0;
                                }
                            }
                        }
                        UnaryKind::Tanh => {
                            for (d, yi) in dx.data_mut().iter_mut().zip(yv.data()) {
                                *d *= 1.0 - yi * yi;
                            }
                        }
                        UnaryKind::Square => {
                            for (d, xi) in dx.data_mut().iter_mut().zip(xv.data()) {
                                *d *= 2.0 * xi;
                            }
                        }
                        UnaryKind::Reciprocal => {
                            for (d, yi) in dx.data_mut().iter_mut().zip(yv.data()) {
                                *d *= -yi * yi;
                            }
                        }
                    }
                    accumulate(&mut adj, x, dx);
                }
                Op::Binary { a, b, kind } => {
                    let need_a = self.nodes[a.0].requires_grad;
                    let need_b = self.nodes[b.0].requires_grad;
                    match kind {
                        BinaryKind::Add | BinaryKind::Sub => {
                            if need_b {
                                let gb = if matches!(kind, BinaryKind::Sub) {
                                    g.map(|v| -v)
                                } else {
                                    g.clone()
                                };
                                accumulate(&mut adj, b, gb);
                            }
                            if need_a {
                                accumulate(&mut adj, a, g);
                            }
                        }
                        BinaryKind::Mul => {
                            let av = &self.nodes[a.0].value;
                            let bv = &self.nodes[b.0].value;
                            if need_a {
                                let mut ga = g.clone();
                                for (d, bi) in ga.data_mut().iter_mut().zip(bv.data()) {
                                    *d *= bi;
                                }
                                accumulate(&mut adj, a, ga);
                            }
                            if need_b {
                                let mut gb = g;
                                for (d, ai) in gb.data_mut().iter_mut().zip(av.data()) {
                                    *d *= ai;
                                }
                                accumulate(&mut adj, b, gb);
                            }
                        }
                    }
                }
                Op::Scale { x, factor } => {
                    let mut dx = g;
                    dx.data_mut().iter_mut().for_each(|v| *v *= factor);
                    accumulate(&mut adj, x, dx);
                }
                Op::Cauchy { s, e, part } => {
                    let sv = &self.nodes[s.0].value;
                    let ev = self.nodes[e.0].value.data();
                    let cols = ev.len();
                    let mut ds = g;
                    let mut de = vec![0.0; cols];
                    for (drow, srow) in ds.data_mut().chunks_exact_mut(cols).zip(sv.data().chunks_exact(cols)) {
                        for ((d, &si), (&ei, acc)) in drow.iter_mut().zip(srow).zip(ev.iter().zip(de.iter_mut())) {
                            let q = 1.0 / (si * si + ei * ei + EPS_DIV);
                            let cross = -2.0 * si * ei * q * q;
                            let gi = *d;
                            match part {
                                CauchyPart::Real => {
                                    *d = gi * (q - 2.0 * si * si * q * q);
                                    *acc += gi * cross;
                                }
                                CauchyPart::Imag => {
                                    *d = gi * cross;
                                    *acc += gi * (q - 2.0 * ei * ei * q * q);
                                }
                            }
                        }
                    }
                    if self.nodes[e.0].requires_grad {
                        accumulate(&mut adj, e, Tensor::vector(de));
                    }
                    if self.nodes[s.0].requires_grad {
                        accumulate(&mut adj, s, ds);
                    }
                }
                Op::Reduce { x, kind, axis } => {
                    let xv = &self.nodes[x.0].value;
                    let dx = match axis {
                        None => {
                            let mut s = g.data()[0];
                            if kind == ReduceKind::Mean {
                                s /= xv.len() as f64;
                            }
                            Tensor::full(xv.shape(), s)
                        }
                        Some(axis) => {
                            let (outer, extent, inner) = axis_blocks(xv.shape(), axis);
                            let scale = match kind {
                                ReduceKind::Sum => 1.0,
                                ReduceKind::Mean => 1.0 / extent as f64,
                            };
                            let mut dx = vec![0.0; xv.len()];
                            if inner == 1 {
                                for (row, gi) in dx.chunks_exact_mut(extent).zip(g.data()) {
                                    row.fill(gi * scale);
                                }
                            }
                            for o in (0..outer).filter(|_| inner > 1) {
                                let gs = &g.data()[o * inner..(o + 1) * inner];
                                for k in 0..extent {
                                    let base = (o * extent + k) * inner;
                                    for (d, gi) in dx[base..base + inner].iter_mut().zip(gs) {
                                        *d = gi * scale;
                                    }
                                }
                            }
                            Tensor::new(xv.shape().to_vec(), dx)?
                        }
                    };
                    accumulate(&mut adj, x, dx);
                }
            }
        }
        self.clear();
        Ok(())
    }
}

fn accumulate(adj: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut adj[v.0] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}
