use thiserror::Error;

/// Errors raised at op boundaries.
#[derive(Debug, Error)]
pub enum DiffError {
    #[error("{op}: shape mismatch: {message}")]
    ShapeMismatch { op: &'static str, message: String },
    #[error("{op}: domain error: {message}")]
    Domain { op: &'static str, message: String },
    #[error("{op}: non-finite value in output")]
    NonFinite { op: &'static str },
    #[error("max_over_time: all positions masked")]
    EmptySequence,
    #[error("backward: loss must be scalar, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("gather_rows: index {index} out of range for table with {rows} rows")]
    IndexOutOfRange { index: usize, rows: usize },
    #[error("function is not deterministic: two evaluations gave {first} and {second}")]
    NonDeterministic { first: f64, second: f64 },
}

type Result<T> = std::result::Result<T, DiffError>;

/// Identity of a tensor within one [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorId(pub(crate) usize);

/// A dense row-major tensor recorded on a graph.
///
/// `grad` is populated by [`Graph::backward`] and has the same shape as
/// `values`.
#[derive(Debug, Clone)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub grad: Option<Vec<f64>>,
    op: Op,
}

impl Tensor {
    pub fn numel(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Matmul { a: usize, b: usize },
    Add { a: usize, b: usize },
    Sub { a: usize, b: usize },
    Mul { a: usize, b: usize },
    Sigmoid { x: usize },
    Tanh { x: usize },
    Relu { x: usize },
    Log1p { x: usize },
    Sum { x: usize },
    ConcatCols { parts: Vec<usize> },
    ConcatRows { parts: Vec<usize> },
    SliceRows { x: usize, start: usize },
    SliceCols { x: usize, start: usize },
    Reshape { x: usize },
    RepeatRows { x: usize },
    GatherRows { table: usize, indices: Vec<usize> },
    // argmax per channel is resolved at forward time; ties pick the first
    // unmasked occurrence so gradient routing is deterministic.
    MaxOverTime { x: usize, argmax: Vec<usize> },
}

/// Records form a DAG in insertion order; backward visits them exactly once
/// in reverse insertion order.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Tensor>,
}

fn check_finite(op: &'static str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(DiffError::NonFinite { op })
    }
}

fn dims2(op: &'static str, shape: &[usize]) -> Result<(usize, usize)> {
    if shape.len() == 2 {
        Ok((shape[0], shape[1]))
    } else {
        Err(DiffError::ShapeMismatch {
            op,
            message: format!("expected rank-2 tensor, got shape {shape:?}"),
        })
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn tensor(&self, id: TensorId) -> &Tensor {
        &self.nodes[id.0]
    }

    pub fn values(&self, id: TensorId) -> &[f64] {
        &self.nodes[id.0].values
    }

    pub fn shape(&self, id: TensorId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    /// Value of a single-element tensor.
    pub fn scalar_value(&self, id: TensorId) -> f64 {
        debug_assert_eq!(self.nodes[id.0].values.len(), 1);
        self.nodes[id.0].values[0]
    }

    /// Gradient of a node, once [`Graph::backward`] has run.
    pub fn grad(&self, id: TensorId) -> Option<&[f64]> {
        self.nodes[id.0].grad.as_deref()
    }

    fn push(&mut self, op_name: &'static str, values: Vec<f64>, shape: Vec<usize>, op: Op) -> Result<TensorId> {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        check_finite(op_name, &values)?;
        let id = TensorId(self.nodes.len());
        self.nodes.push(Tensor { shape, values, grad: None, op });
        Ok(id)
    }

    // ── Inputs ───────────────────────────────────────────────────────

    /// Insert an input tensor. Parameters, embeddings and constants all
    /// enter the graph this way.
    pub fn leaf(&mut self, values: Vec<f64>, shape: Vec<usize>) -> Result<TensorId> {
        dims2("leaf", &shape)?;
        if shape.iter().any(|&e| e == 0) {
            return Err(DiffError::ShapeMismatch {
                op: "leaf",
                message: format!("extents must be positive, got {shape:?}"),
            });
        }
        if shape.iter().product::<usize>() != values.len() {
            return Err(DiffError::ShapeMismatch {
                op: "leaf",
                message: format!("shape {shape:?} does not match {} values", values.len()),
            });
        }
        self.push("leaf", values, shape, Op::Leaf)
    }

    pub fn scalar(&mut self, v: f64) -> Result<TensorId> {
        self.leaf(vec![v], vec![1, 1])
    }

    pub fn zeros(&mut self, rows: usize, cols: usize) -> Result<TensorId> {
        self.leaf(vec![0.0; rows * cols], vec![rows, cols])
    }

    // ── Linear algebra ───────────────────────────────────────────────

    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (m, k) = dims2("matmul", self.shape(a))?;
        let (k2, n) = dims2("matmul", self.shape(b))?;
        if k != k2 {
            return Err(DiffError::ShapeMismatch {
                op: "matmul",
                message: format!("inner extents disagree: left {:?} vs right {:?}", self.shape(a), self.shape(b)),
            });
        }
        let av = self.values(a);
        let bv = self.values(b);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let x = av[i * k + p];
                if x == 0.0 {
                    continue;
                }
                let brow = &bv[p * n..(p + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, &bb) in orow.iter_mut().zip(brow) {
                    *o += x * bb;
                }
            }
        }
        self.push("matmul", out, vec![m, n], Op::Matmul { a: a.0, b: b.0 })
    }

    // ── Elementwise ──────────────────────────────────────────────────

    fn binary(
        &mut self,
        op_name: &'static str,
        a: TensorId,
        b: TensorId,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<TensorId> {
        let (av, bv) = (&self.nodes[a.0], &self.nodes[b.0]);
        let (values, shape) = if av.shape == bv.shape {
            (
                av.values.iter().zip(&bv.values).map(|(&x, &y)| f(x, y)).collect(),
                av.shape.clone(),
            )
        } else if bv.numel() == 1 {
            let y = bv.values[0];
            (av.values.iter().map(|&x| f(x, y)).collect(), av.shape.clone())
        } else if av.numel() == 1 {
            let x = av.values[0];
            (bv.values.iter().map(|&y| f(x, y)).collect(), bv.shape.clone())
        } else {
            return Err(DiffError::ShapeMismatch {
                op: op_name,
                message: format!(
                    "operands must have identical shapes (or one scalar): {:?} vs {:?}",
                    av.shape, bv.shape
                ),
            });
        };
        self.push(op_name, values, shape, op)
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.binary("add", a, b, |x, y| x + y, Op::Add { a: a.0, b: b.0 })
    }

    pub fn sub(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub { a: a.0, b: b.0 })
    }

    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul { a: a.0, b: b.0 })
    }

    fn unary(
        &mut self,
        op_name: &'static str,
        x: TensorId,
        f: impl Fn(f64) -> f64,
        op: Op,
    ) -> Result<TensorId> {
        let node = &self.nodes[x.0];
        let values = node.values.iter().map(|&v| f(v)).collect();
        let shape = node.shape.clone();
        self.push(op_name, values, shape, op)
    }

    pub fn sigmoid(&mut self, x: TensorId) -> Result<TensorId> {
        self.unary("sigmoid", x, |v| 1.0 / (1.0 + (-v).exp()), Op::Sigmoid { x: x.0 })
    }

    pub fn tanh(&mut self, x: TensorId) -> Result<TensorId> {
        self.unary("tanh", x, f64::tanh, Op::Tanh { x: x.0 })
    }

    pub fn relu(&mut self, x: TensorId) -> Result<TensorId> {
        self.unary("relu", x, |v| v.max(0.0), Op::Relu { x: x.0 })
    }

    /// Natural log of (1 + x). Inputs are terms in months, hence nonnegative.
    pub fn log1p(&mut self, x: TensorId) -> Result<TensorId> {
        if let Some(v) = self.values(x).iter().find(|v| **v < 0.0) {
            return Err(DiffError::Domain {
                op: "log1p",
                message: format!("input {v} is negative"),
            });
        }
        self.unary("log1p", x, f64::ln_1p, Op::Log1p { x: x.0 })
    }

    // ── Reductions and shape ops ─────────────────────────────────────

    /// Sum of all elements, as a 1x1 tensor.
    pub fn sum(&mut self, x: TensorId) -> Result<TensorId> {
        let total = self.values(x).iter().sum();
        self.push("sum", vec![total], vec![1, 1], Op::Sum { x: x.0 })
    }

    /// Horizontal concatenation: all parts share the row count.
    pub fn concat_cols(&mut self, parts: &[TensorId]) -> Result<TensorId> {
        if parts.is_empty() {
            return Err(DiffError::ShapeMismatch { op: "concat_cols", message: "no parts".into() });
        }
        let (rows, _) = dims2("concat_cols", self.shape(parts[0]))?;
        let mut total_cols = 0;
        for &p in parts {
            let (r, c) = dims2("concat_cols", self.shape(p))?;
            if r != rows {
                return Err(DiffError::ShapeMismatch {
                    op: "concat_cols",
                    message: format!("row counts disagree: {} vs {}", rows, r),
                });
            }
            total_cols += c;
        }
        let mut out = vec![0.0; rows * total_cols];
        let mut col = 0;
        for &p in parts {
            let (_, c) = dims2("concat_cols", self.shape(p))?;
            let pv = self.values(p);
            for r in 0..rows {
                out[r * total_cols + col..r * total_cols + col + c]
                    .copy_from_slice(&pv[r * c..(r + 1) * c]);
            }
            col += c;
        }
        self.push(
            "concat_cols",
            out,
            vec![rows, total_cols],
            Op::ConcatCols { parts: parts.iter().map(|p| p.0).collect() },
        )
    }

    /// Vertical concatenation: all parts share the column count.
    pub fn concat_rows(&mut self, parts: &[TensorId]) -> Result<TensorId> {
        if parts.is_empty() {
            return Err(DiffError::ShapeMismatch { op: "concat_rows", message: "no parts".into() });
        }
        let (_, cols) = dims2("concat_rows", self.shape(parts[0]))?;
        let mut total_rows = 0;
        for &p in parts {
            let (r, c) = dims2("concat_rows", self.shape(p))?;
            if c != cols {
                return Err(DiffError::ShapeMismatch {
                    op: "concat_rows",
                    message: format!("column counts disagree: {} vs {}", cols, c),
                });
            }
            total_rows += r;
        }
        let mut out = Vec::with_capacity(total_rows * cols);
        for &p in parts {
            out.extend_from_slice(self.values(p));
        }
        self.push(
            "concat_rows",
            out,
            vec![total_rows, cols],
            Op::ConcatRows { parts: parts.iter().map(|p| p.0).collect() },
        )
    }

    pub fn slice_rows(&mut self, x: TensorId, start: usize, len: usize) -> Result<TensorId> {
        let (rows, cols) = dims2("slice_rows", self.shape(x))?;
        if len == 0 || start + len > rows {
            return Err(DiffError::ShapeMismatch {
                op: "slice_rows",
                message: format!("rows {start}..{} out of range for {rows} rows", start + len),
            });
        }
        let out = self.values(x)[start * cols..(start + len) * cols].to_vec();
        self.push("slice_rows", out, vec![len, cols], Op::SliceRows { x: x.0, start })
    }

    pub fn slice_cols(&mut self, x: TensorId, start: usize, len: usize) -> Result<TensorId> {
        let (rows, cols) = dims2("slice_cols", self.shape(x))?;
        if len == 0 || start + len > cols {
            return Err(DiffError::ShapeMismatch {
                op: "slice_cols",
                message: format!("cols {start}..{} out of range for {cols} cols", start + len),
            });
        }
        let xv = self.values(x);
        let mut out = Vec::with_capacity(rows * len);
        for r in 0..rows {
            out.extend_from_slice(&xv[r * cols + start..r * cols + start + len]);
        }
        self.push("slice_cols", out, vec![rows, len], Op::SliceCols { x: x.0, start })
    }

    pub fn reshape(&mut self, x: TensorId, shape: Vec<usize>) -> Result<TensorId> {
        dims2("reshape", &shape)?;
        let node = &self.nodes[x.0];
        if shape.iter().product::<usize>() != node.numel() {
            return Err(DiffError::ShapeMismatch {
                op: "reshape",
                message: format!("cannot reshape {:?} into {:?}", node.shape, shape),
            });
        }
        let values = node.values.clone();
        self.push("reshape", values, shape, Op::Reshape { x: x.0 })
    }

    /// Tile a 1xd row vector into n identical rows. The explicit alternative
    /// to row broadcasting.
    pub fn repeat_rows(&mut self, x: TensorId, n: usize) -> Result<TensorId> {
        let (rows, cols) = dims2("repeat_rows", self.shape(x))?;
        if rows != 1 || n == 0 {
            return Err(DiffError::ShapeMismatch {
                op: "repeat_rows",
                message: format!("expected a 1-row tensor and n >= 1, got shape {:?}, n={n}", self.shape(x)),
            });
        }
        let row = self.values(x).to_vec();
        let mut out = Vec::with_capacity(n * cols);
        for _ in 0..n {
            out.extend_from_slice(&row);
        }
        self.push("repeat_rows", out, vec![n, cols], Op::RepeatRows { x: x.0 })
    }

    /// Row gather (embedding lookup). Gradient scatters into the gathered rows.
    pub fn gather_rows(&mut self, table: TensorId, indices: &[usize]) -> Result<TensorId> {
        let (rows, cols) = dims2("gather_rows", self.shape(table))?;
        if indices.is_empty() {
            return Err(DiffError::ShapeMismatch { op: "gather_rows", message: "no indices".into() });
        }
        for &i in indices {
            if i >= rows {
                return Err(DiffError::IndexOutOfRange { index: i, rows });
            }
        }
        let tv = self.values(table);
        let mut out = Vec::with_capacity(indices.len() * cols);
        for &i in indices {
            out.extend_from_slice(&tv[i * cols..(i + 1) * cols]);
        }
        self.push(
            "gather_rows",
            out,
            vec![indices.len(), cols],
            Op::GatherRows { table: table.0, indices: indices.to_vec() },
        )
    }

    /// Per-channel max over unmasked rows. Gradient routes to the argmax row
    /// of each channel; the first occurrence wins on ties.
    pub fn max_over_time(&mut self, x: TensorId, mask: &[bool]) -> Result<TensorId> {
        let (rows, cols) = dims2("max_over_time", self.shape(x))?;
        if mask.len() != rows {
            return Err(DiffError::ShapeMismatch {
                op: "max_over_time",
                message: format!("mask length {} does not match {} rows", mask.len(), rows),
            });
        }
        if !mask.iter().any(|&m| m) {
            return Err(DiffError::EmptySequence);
        }
        let xv = self.values(x);
        let mut out = vec![f64::NEG_INFINITY; cols];
        let mut argmax = vec![0usize; cols];
        for (r, &keep) in mask.iter().enumerate() {
            if !keep {
                continue;
            }
            for c in 0..cols {
                let v = xv[r * cols + c];
                if v > out[c] {
                    out[c] = v;
                    argmax[c] = r;
                }
            }
        }
        self.push("max_over_time", out, vec![1, cols], Op::MaxOverTime { x: x.0, argmax })
    }

    // ── Backward ─────────────────────────────────────────────────────

    /// Reverse accumulation from a scalar loss. Every node at or before the
    /// loss gets a gradient buffer; leaves the loss does not depend on end up
    /// with exactly zero gradient.
    pub fn backward(&mut self, loss: TensorId) -> Result<()> {
        let lid = loss.0;
        if self.nodes[lid].numel() != 1 {
            return Err(DiffError::NonScalarLoss { shape: self.nodes[lid].shape.clone() });
        }
        let mut grads: Vec<Vec<f64>> = self.nodes.iter().map(|n| vec![0.0; n.numel()]).collect();
        grads[lid][0] = 1.0;

        for i in (0..=lid).rev() {
            let g = std::mem::take(&mut grads[i]);
            self.accumulate(i, &g, &mut grads);
            grads[i] = g;
        }

        for (node, g) in self.nodes.iter_mut().zip(grads) {
            check_finite("backward", &g)?;
            node.grad = Some(g);
        }
        Ok(())
    }

    fn accumulate(&self, i: usize, g: &[f64], grads: &mut [Vec<f64>]) {
        let node = &self.nodes[i];
        match &node.op {
            Op::Leaf => {}
            Op::Matmul { a, b } => {
                let (m, k) = (self.nodes[*a].shape[0], self.nodes[*a].shape[1]);
                let n = self.nodes[*b].shape[1];
                let av = &self.nodes[*a].values;
                let bv = &self.nodes[*b].values;
                // dA += dC * B^T
                {
                    let da = &mut grads[*a];
                    for r in 0..m {
                        for p in 0..k {
                            let mut s = 0.0;
                            for c in 0..n {
                                s += g[r * n + c] * bv[p * n + c];
                            }
                            da[r * k + p] += s;
                        }
                    }
                }
                // dB += A^T * dC
                {
                    let db = &mut grads[*b];
                    for r in 0..m {
                        for p in 0..k {
                            let x = av[r * k + p];
                            if x == 0.0 {
                                continue;
                            }
                            for c in 0..n {
                                db[p * n + c] += x * g[r * n + c];
                            }
                        }
                    }
                }
            }
            Op::Add { a, b } => {
                self.binary_back(*a, g, grads, |_, gi| gi);
                self.binary_back(*b, g, grads, |_, gi| gi);
            }
            Op::Sub { a, b } => {
                self.binary_back(*a, g, grads, |_, gi| gi);
                self.binary_back(*b, g, grads, |_, gi| -gi);
            }
            Op::Mul { a, b } => {
                // d(a*b)/da = b, and vice versa; broadcast handled per side.
                let (an, bn) = (&self.nodes[*a], &self.nodes[*b]);
                if an.shape == bn.shape {
                    for (idx, &gi) in g.iter().enumerate() {
                        grads[*a][idx] += gi * bn.values[idx];
                        grads[*b][idx] += gi * an.values[idx];
                    }
                } else if bn.numel() == 1 {
                    let y = bn.values[0];
                    let mut acc = 0.0;
                    for (idx, &gi) in g.iter().enumerate() {
                        grads[*a][idx] += gi * y;
                        acc += gi * an.values[idx];
                    }
                    grads[*b][0] += acc;
                } else {
                    let x = an.values[0];
                    let mut acc = 0.0;
                    for (idx, &gi) in g.iter().enumerate() {
                        grads[*b][idx] += gi * x;
                        acc += gi * bn.values[idx];
                    }
                    grads[*a][0] += acc;
                }
            }
            Op::Sigmoid { x } => {
                for (idx, &gi) in g.iter().enumerate() {
                    let s = node.values[idx];
                    grads[*x][idx] += gi * s * (1.0 - s);
                }
            }
            Op::Tanh { x } => {
                for (idx, &gi) in g.iter().enumerate() {
                    let t = node.values[idx];
                    grads[*x][idx] += gi * (1.0 - t * t);
                }
            }
            Op::Relu { x } => {
                let xv = &self.nodes[*x].values;
                for (idx, &gi) in g.iter().enumerate() {
                    if xv[idx] > 0.0 {
                        grads[*x][idx] += gi;
                    }
                }
            }
            Op::Log1p { x } => {
                let xv = &self.nodes[*x].values;
                for (idx, &gi) in g.iter().enumerate() {
                    grads[*x][idx] += gi / (1.0 + xv[idx]);
                }
            }
            Op::Sum { x } => {
                let gx = &mut grads[*x];
                for v in gx.iter_mut() {
                    *v += g[0];
                }
            }
            Op::ConcatCols { parts } => {
                let rows = node.shape[0];
                let total_cols = node.shape[1];
                let mut col = 0;
                for &p in parts {
                    let c = self.nodes[p].shape[1];
                    let gp = &mut grads[p];
                    for r in 0..rows {
                        for j in 0..c {
                            gp[r * c + j] += g[r * total_cols + col + j];
                        }
                    }
                    col += c;
                }
            }
            Op::ConcatRows { parts } => {
                let mut offset = 0;
                for &p in parts {
                    let len = self.nodes[p].numel();
                    let gp = &mut grads[p];
                    for (j, gv) in g[offset..offset + len].iter().enumerate() {
                        gp[j] += gv;
                    }
                    offset += len;
                }
            }
            Op::SliceRows { x, start } => {
                let cols = node.shape[1];
                let gx = &mut grads[*x];
                for (j, gv) in g.iter().enumerate() {
                    gx[start * cols + j] += gv;
                }
            }
            Op::SliceCols { x, start } => {
                let rows = node.shape[0];
                let len = node.shape[1];
                let xcols = self.nodes[*x].shape[1];
                let gx = &mut grads[*x];
                for r in 0..rows {
                    for j in 0..len {
                        gx[r * xcols + start + j] += g[r * len + j];
                    }
                }
            }
            Op::Reshape { x } => {
                let gx = &mut grads[*x];
                for (j, gv) in g.iter().enumerate() {
                    gx[j] += gv;
                }
            }
            Op::RepeatRows { x } => {
                let cols = node.shape[1];
                let gx = &mut grads[*x];
                for (idx, gv) in g.iter().enumerate() {
                    gx[idx % cols] += gv;
                }
            }
            Op::GatherRows { table, indices } => {
                let cols = node.shape[1];
                let gt = &mut grads[*table];
                for (r, &i) in indices.iter().enumerate() {
                    for j in 0..cols {
                        gt[i * cols + j] += g[r * cols + j];
                    }
                }
            }
            Op::MaxOverTime { x, argmax } => {
                let cols = node.shape[1];
                let gx = &mut grads[*x];
                for (c, &r) in argmax.iter().enumerate() {
                    gx[r * cols + c] += g[c];
                }
            }
        }
    }

    fn binary_back(&self, input: usize, g: &[f64], grads: &mut [Vec<f64>], f: impl Fn(usize, f64) -> f64) {
        let gi = &mut grads[input];
        if gi.len() == g.len() {
            for (idx, &gv) in g.iter().enumerate() {
                gi[idx] += f(idx, gv);
            }
        } else {
            // scalar operand broadcast against the full-shape side
            debug_assert_eq!(gi.len(), 1);
            let mut acc = 0.0;
            for (idx, &gv) in g.iter().enumerate() {
                acc += f(idx, gv);
            }
            gi[0] += acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(g: &mut Graph, values: &[f64], rows: usize, cols: usize) -> TensorId {
        g.leaf(values.to_vec(), vec![rows, cols]).unwrap()
    }

    #[test]
    fn matmul_identity() {
        let mut g = Graph::new();
        let a = leaf(&mut g, &[1.0, 2.0, 3.0, 4.0], 2, 2);
        let eye = leaf(&mut g, &[1.0, 0.0, 0.0, 1.0], 2, 2);
        let c = g.matmul(a, eye).unwrap();
        assert_eq!(g.values(c), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn matmul_hand_product() {
        let mut g = Graph::new();
        let a = leaf(&mut g, &[1.0, 2.0], 1, 2);
        let b = leaf(&mut g, &[3.0, 4.0], 2, 1);
        let c = g.matmul(a, b).unwrap();
        assert_eq!(g.values(c), &[11.0]);
    }

    #[test]
    fn matmul_shape_mismatch_names_both_shapes() {
        let mut g = Graph::new();
        let a = leaf(&mut g, &[1.0, 2.0], 1, 2);
        let b = leaf(&mut g, &[3.0], 1, 1);
        let err = g.matmul(a, b).unwrap_err().to_string();
        assert!(err.contains("[1, 2]") && err.contains("[1, 1]"), "{err}");
    }

    #[test]
    fn sigmoid_at_zero() {
        let mut g = Graph::new();
        let x = g.scalar(0.0).unwrap();
        let y = g.sigmoid(x).unwrap();
        assert_eq!(g.scalar_value(y), 0.5);
    }

    #[test]
    fn relu_dead_region() {
        let mut g = Graph::new();
        let x = g.scalar(-2.0).unwrap();
        let y = g.relu(x).unwrap();
        assert_eq!(g.scalar_value(y), 0.0);
        g.backward(y).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[0.0]);
    }

    #[test]
    fn log1p_analytic() {
        let mut g = Graph::new();
        let x = g.scalar(std::f64::consts::E - 1.0).unwrap();
        let y = g.log1p(x).unwrap();
        assert!((g.scalar_value(y) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn log1p_rejects_negative() {
        let mut g = Graph::new();
        let x = g.scalar(-0.5).unwrap();
        assert!(matches!(g.log1p(x), Err(DiffError::Domain { .. })));
    }

    #[test]
    fn max_over_time_basic_and_mask() {
        let mut g = Graph::new();
        let x = leaf(&mut g, &[1.0, 5.0, 3.0], 3, 1);
        let all = g.max_over_time(x, &[true, true, true]).unwrap();
        assert_eq!(g.values(all), &[5.0]);
        let masked = g.max_over_time(x, &[true, false, true]).unwrap();
        assert_eq!(g.values(masked), &[3.0]);
        assert!(matches!(
            g.max_over_time(x, &[false, false, false]),
            Err(DiffError::EmptySequence)
        ));
    }

    #[test]
    fn max_over_time_routes_one_unit_per_channel() {
        let mut g = Graph::new();
        let x = leaf(&mut g, &[1.0, 4.0, 4.0, 2.0, 3.0, 0.0], 3, 2);
        let m = g.max_over_time(x, &[true, true, true]).unwrap();
        let s = g.sum(m).unwrap();
        g.backward(s).unwrap();
        let gx = g.grad(x).unwrap();
        assert_eq!(gx.iter().filter(|&&v| v == 1.0).count(), 2);
        assert_eq!(gx.iter().filter(|&&v| v == 0.0).count(), 4);
        // channel 1 ties between rows 0 and 1: first occurrence wins
        assert_eq!(gx[1], 1.0);
        assert_eq!(gx[3], 0.0);
    }

    #[test]
    fn backward_square() {
        let mut g = Graph::new();
        let x = g.scalar(3.0).unwrap();
        let y = g.mul(x, x).unwrap();
        g.backward(y).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[6.0]);
    }

    #[test]
    fn backward_sigmoid_at_zero() {
        let mut g = Graph::new();
        let x = g.scalar(0.0).unwrap();
        let y = g.sigmoid(x).unwrap();
        g.backward(y).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[0.25]);
    }

    #[test]
    fn backward_requires_scalar_loss() {
        let mut g = Graph::new();
        let x = leaf(&mut g, &[1.0, 2.0], 1, 2);
        assert!(matches!(g.backward(x), Err(DiffError::NonScalarLoss { .. })));
    }

    #[test]
    fn unreachable_leaf_gets_zero_grad() {
        let mut g = Graph::new();
        let x = g.scalar(3.0).unwrap();
        let unused = leaf(&mut g, &[1.0, 2.0], 1, 2);
        let y = g.mul(x, x).unwrap();
        g.backward(y).unwrap();
        assert_eq!(g.grad(unused).unwrap(), &[0.0, 0.0]);
    }

    #[test]
    fn gather_rows_and_scatter() {
        let mut g = Graph::new();
        let table = leaf(&mut g, &[0.0, 0.0, 0.0, 0.0, 0.1, 0.2], 3, 2);
        let got = g.gather_rows(table, &[2]).unwrap();
        assert_eq!(g.values(got), &[0.1, 0.2]);
        let s = g.sum(got).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(table).unwrap(), &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn gather_rows_out_of_range() {
        let mut g = Graph::new();
        let table = leaf(&mut g, &[0.0, 0.0], 1, 2);
        assert!(matches!(
            g.gather_rows(table, &[1]),
            Err(DiffError::IndexOutOfRange { index: 1, rows: 1 })
        ));
    }

    #[test]
    fn scalar_broadcast() {
        let mut g = Graph::new();
        let x = leaf(&mut g, &[1.0, 2.0, 3.0], 1, 3);
        let two = g.scalar(2.0).unwrap();
        let y = g.mul(x, two).unwrap();
        assert_eq!(g.values(y), &[2.0, 4.0, 6.0]);
        let s = g.sum(y).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(two).unwrap(), &[6.0]);
        assert_eq!(g.grad(x).unwrap(), &[2.0, 2.0, 2.0]);
    }

    #[test]
    fn binary_rejects_non_scalar_broadcast() {
        let mut g = Graph::new();
        let a = leaf(&mut g, &[1.0, 2.0], 1, 2);
        let b = leaf(&mut g, &[1.0, 2.0], 2, 1);
        assert!(g.add(a, b).is_err());
    }

    #[test]
    fn repeat_rows_sums_gradient() {
        let mut g = Graph::new();
        let x = leaf(&mut g, &[1.0, 2.0], 1, 2);
        let r = g.repeat_rows(x, 3).unwrap();
        assert_eq!(g.shape(r), &[3, 2]);
        let s = g.sum(r).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[3.0, 3.0]);
    }

    #[test]
    fn concat_and_slice_roundtrip_gradients() {
        let mut g = Graph::new();
        let a = leaf(&mut g, &[1.0, 2.0], 1, 2);
        let b = leaf(&mut g, &[3.0], 1, 1);
        let cat = g.concat_cols(&[a, b]).unwrap();
        assert_eq!(g.values(cat), &[1.0, 2.0, 3.0]);
        let right = g.slice_cols(cat, 2, 1).unwrap();
        let s = g.sum(right).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(a).unwrap(), &[0.0, 0.0]);
        assert_eq!(g.grad(b).unwrap(), &[1.0]);
    }

    #[test]
    fn forward_is_deterministic() {
        let build = || {
            let mut g = Graph::new();
            let x = leaf(&mut g, &[0.3, -0.7, 1.9, 0.2], 2, 2);
            let w = leaf(&mut g, &[0.11, -0.5, 0.23, 0.9], 2, 2);
            let h = g.matmul(x, w).unwrap();
            let t = g.tanh(h).unwrap();
            let s = g.sum(t).unwrap();
            g.scalar_value(s)
        };
        assert_eq!(build().to_bits(), build().to_bits());
    }

    #[test]
    fn leaf_rejects_non_finite() {
        let mut g = Graph::new();
        assert!(matches!(
            g.leaf(vec![f64::NAN], vec![1, 1]),
            Err(DiffError::NonFinite { .. })
        ));
    }
}
