//! Reverse-mode differentiation over dense `f64` matrices.
//!
//! Every encoder, projection head and loss in the crate is written as a
//! sequence of operations recorded on a [`Tape`]; [`Tape::backward`] then
//! produces exact analytic gradients for every parameter leaf. Vectors are
//! `1×n` matrices and scalars are `1×1`.
//!
//! Attention and the two contrastive losses are fused ops with hand-written
//! backward rules rather than compositions of primitives; the rest is the
//! usual elementwise / matmul / normalization toolkit.

use std::rc::Rc;

use ndarray::{s, Array2, Axis, Zip};

pub type Mat = Array2<f64>;

/// Handle to a node recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// One attention neighbourhood: every row in `queries` attends over `keys`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttentionGroup {
    pub queries: Vec<usize>,
    pub keys: Vec<usize>,
}

/// Which rows attend to which. Rows that appear in no group get a zero output.
#[derive(Clone, Debug, Default)]
pub struct AttentionPlan {
    pub groups: Vec<AttentionGroup>,
}

enum Op {
    Leaf,
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MulRow(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Gelu(Var),
    Select {
        take_new: Rc<[bool]>,
        new: Var,
        old: Var,
    },
    SliceRows(Var, usize),
    SliceCols(Var, usize),
    GatherRows(Var, Rc<[usize]>),
    ConcatCols(Vec<Var>),
    LayerNorm {
        x: Var,
        inv_std: Vec<f64>,
    },
    L2Rows {
        x: Var,
        inv_norm: Vec<f64>,
    },
    Attention {
        q: Var,
        k: Var,
        v: Var,
        plan: Rc<AttentionPlan>,
        heads: usize,
        probs: Vec<Vec<f64>>,
    },
    /// Gradient w.r.t. the similarity matrix and log-temperature is
    /// computed during the forward pass and scaled by the upstream scalar.
    InfoNce {
        sim: Var,
        log_tau: Var,
        d_sim: Mat,
        d_log_tau: f64,
    },
    Triplet {
        sim: Var,
        d_sim: Mat,
    },
}

struct Node {
    value: Mat,
    op: Op,
    needs_grad: bool,
}

pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
pub struct Gradients {
    grads: Vec<Option<Mat>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Mat> {
        self.grads[v.0].as_ref()
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_K: f64 = 0.044_715;

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_K * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_K * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_K * x * x)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Mat, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn value(&self, v: Var) -> &Mat {
        &self.nodes[v.0].value
    }

    /// Leaf that receives a gradient.
    pub fn param(&mut self, value: Mat) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Leaf that is treated as a constant.
    pub fn constant(&mut self, value: Mat) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).dot(self.value(b));
        let ng = self.ng(a) || self.ng(b);
        self.push(v, Op::MatMul(a, b), ng)
    }

    /// `a · bᵀ`
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).dot(&self.value(b).t());
        let ng = self.ng(a) || self.ng(b);
        self.push(v, Op::MatMulT(a, b), ng)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        let ng = self.ng(a) || self.ng(b);
        self.push(v, Op::Add(a, b), ng)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) - self.value(b);
        let ng = self.ng(a) || self.ng(b);
        self.push(v, Op::Sub(a, b), ng)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) * self.value(b);
        let ng = self.ng(a) || self.ng(b);
        self.push(v, Op::Mul(a, b), ng)
    }

    /// Adds the `1×c` row `row` to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        assert_eq!(self.value(row).nrows(), 1, "add_row expects a 1×c row");
        let v = self.value(a) + self.value(row);
        let ng = self.ng(a) || self.ng(row);
        self.push(v, Op::AddRow(a, row), ng)
    }

    /// Multiplies every row of `a` elementwise by the `1×c` row `row`.
    pub fn mul_row(&mut self, a: Var, row: Var) -> Var {
        assert_eq!(self.value(row).nrows(), 1, "mul_row expects a 1×c row");
        let v = self.value(a) * self.value(row);
        let ng = self.ng(a) || self.ng(row);
        self.push(v, Op::MulRow(a, row), ng)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a) * c;
        let ng = self.ng(a);
        self.push(v, Op::Scale(a, c), ng)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(sigmoid);
        let ng = self.ng(a);
        self.push(v, Op::Sigmoid(a), ng)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(f64::tanh);
        let ng = self.ng(a);
        self.push(v, Op::Tanh(a), ng)
    }

    pub fn gelu(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(gelu);
        let ng = self.ng(a);
        self.push(v, Op::Gelu(a), ng)
    }

    /// Row `i` of the result is row `i` of `new` where `take_new[i]`, else of `old`.
    pub fn select_rows(&mut self, take_new: Rc<[bool]>, new: Var, old: Var) -> Var {
        let (n, o) = (self.value(new), self.value(old));
        assert_eq!(n.dim(), o.dim());
        assert_eq!(take_new.len(), n.nrows());
        let mut v = o.clone();
        for (i, &t) in take_new.iter().enumerate() {
            if t {
                v.row_mut(i).assign(&n.row(i));
            }
        }
        let ng = self.ng(new) || self.ng(old);
        self.push(v, Op::Select { take_new, new, old }, ng)
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Var {
        let v = self.value(a).slice(s![start..start + len, ..]).to_owned();
        let ng = self.ng(a);
        self.push(v, Op::SliceRows(a, start), ng)
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let v = self.value(a).slice(s![.., start..start + len]).to_owned();
        let ng = self.ng(a);
        self.push(v, Op::SliceCols(a, start), ng)
    }

    pub fn gather_rows(&mut self, a: Var, idx: Rc<[usize]>) -> Var {
        let src = self.value(a);
        let mut v = Mat::zeros((idx.len(), src.ncols()));
        for (o, &i) in idx.iter().enumerate() {
            v.row_mut(o).assign(&src.row(i));
        }
        let ng = self.ng(a);
        self.push(v, Op::GatherRows(a, idx), ng)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|p| self.value(*p).view()).collect();
        let v = ndarray::concatenate(Axis(1), &views).expect("concat_cols: row counts differ");
        let ng = parts.iter().any(|p| self.ng(*p));
        self.push(v, Op::ConcatCols(parts.to_vec()), ng)
    }

    /// Per-row standardization without affine parameters.
    pub fn layer_norm(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let d = x.ncols() as f64;
        let mut out = x.clone();
        let mut inv_std = Vec::with_capacity(x.nrows());
        for mut row in out.rows_mut() {
            let mean = row.sum() / d;
            row.mapv_inplace(|e| e - mean);
            let var = row.iter().map(|e| e * e).sum::<f64>() / d;
            let is = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            row.mapv_inplace(|e| e * is);
            inv_std.push(is);
        }
        let ng = self.ng(a);
        self.push(out, Op::LayerNorm { x: a, inv_std }, ng)
    }

    /// Scales each row to unit Euclidean norm. Rows must be nonzero.
    pub fn l2_normalize_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut out = x.clone();
        let mut inv_norm = Vec::with_capacity(x.nrows());
        for mut row in out.rows_mut() {
            let n = row.iter().map(|e| e * e).sum::<f64>().sqrt();
            let inv = if n > 0.0 { 1.0 / n } else { 0.0 };
            row.mapv_inplace(|e| e * inv);
            inv_norm.push(inv);
        }
        let ng = self.ng(a);
        self.push(out, Op::L2Rows { x: a, inv_norm }, ng)
    }

    /// Multi-head scaled dot-product attention over the neighbourhoods in `plan`.
    /// `q`, `k`, `v` are `N×d` with `heads` dividing `d`.
    pub fn attention(
        &mut self,
        q: Var,
        k: Var,
        v: Var,
        plan: Rc<AttentionPlan>,
        heads: usize,
    ) -> Var {
        let (qm, km, vm) = (self.value(q), self.value(k), self.value(v));
        let (out, probs) = attention_forward(qm, km, vm, &plan, heads);
        let ng = self.ng(q) || self.ng(k) || self.ng(v);
        self.push(
            out,
            Op::Attention {
                q,
                k,
                v,
                plan,
                heads,
                probs,
            },
            ng,
        )
    }

    /// Symmetric cross-entropy over `sim / exp(log_tau)`; returns a `1×1` node.
    pub fn infonce(&mut self, sim: Var, log_tau: Var) -> Var {
        let s = self.value(sim);
        let lt = self.value(log_tau)[[0, 0]];
        let (loss, d_logits) = crate::space::loss::infonce_with_grad(s, lt.exp());
        let tau = lt.exp();
        let d_sim = &d_logits / tau;
        // logits = sim * exp(-log_tau)  =>  d logits / d log_tau = -logits
        let d_log_tau = -(&d_logits * s).sum() / tau;
        let ng = self.ng(sim) || self.ng(log_tau);
        self.push(
            Mat::from_elem((1, 1), loss),
            Op::InfoNce {
                sim,
                log_tau,
                d_sim,
                d_log_tau,
            },
            ng,
        )
    }

    /// Symmetric hardest-negative triplet loss; returns a `1×1` node.
    pub fn triplet(&mut self, sim: Var, margin: f64) -> Var {
        let (loss, d_sim) = crate::space::loss::triplet_with_grad(self.value(sim), margin);
        let ng = self.ng(sim);
        self.push(
            Mat::from_elem((1, 1), loss),
            Op::Triplet { sim, d_sim },
            ng,
        )
    }

    /// Back-propagates from the `1×1` node `root`.
    pub fn backward(&self, root: Var) -> Gradients {
        assert_eq!(self.value(root).dim(), (1, 1), "backward root must be a scalar");
        let mut grads: Vec<Option<Mat>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(Mat::ones((1, 1)));

        for idx in (0..=root.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            let acc = |v: Var, contrib: Mat, grads: &mut Vec<Option<Mat>>| {
                if !self.nodes[v.0].needs_grad {
                    return;
                }
                match &mut grads[v.0] {
                    Some(existing) => *existing += &contrib,
                    slot @ None => *slot = Some(contrib),
                }
            };
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    if self.ng(*a) {
                        acc(*a, g.dot(&self.value(*b).t()), &mut grads);
                    }
                    if self.ng(*b) {
                        acc(*b, self.value(*a).t().dot(&g), &mut grads);
                    }
                }
                Op::MatMulT(a, b) => {
                    if self.ng(*a) {
                        acc(*a, g.dot(self.value(*b)), &mut grads);
                    }
                    if self.ng(*b) {
                        acc(*b, g.t().dot(self.value(*a)), &mut grads);
                    }
                }
                Op::Add(a, b) => {
                    acc(*a, g.clone(), &mut grads);
                    acc(*b, g.clone(), &mut grads);
                }
                Op::Sub(a, b) => {
                    acc(*a, g.clone(), &mut grads);
                    acc(*b, -&g, &mut grads);
                }
                Op::Mul(a, b) => {
                    if self.ng(*a) {
                        acc(*a, &g * self.value(*b), &mut grads);
                    }
                    if self.ng(*b) {
                        acc(*b, &g * self.value(*a), &mut grads);
                    }
                }
                Op::AddRow(a, r) => {
                    if self.ng(*r) {
                        acc(*r, g.sum_axis(Axis(0)).insert_axis(Axis(0)), &mut grads);
                    }
                    acc(*a, g.clone(), &mut grads);
                }
                Op::MulRow(a, r) => {
                    if self.ng(*r) {
                        let d = (&g * self.value(*a)).sum_axis(Axis(0)).insert_axis(Axis(0));
                        acc(*r, d, &mut grads);
                    }
                    if self.ng(*a) {
                        acc(*a, &g * self.value(*r), &mut grads);
                    }
                }
                Op::Scale(a, c) => acc(*a, &g * *c, &mut grads),
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    let mut d = g.clone();
                    Zip::from(&mut d).and(y).for_each(|d, &y| *d *= y * (1.0 - y));
                    acc(*a, d, &mut grads);
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    let mut d = g.clone();
                    Zip::from(&mut d).and(y).for_each(|d, &y| *d *= 1.0 - y * y);
                    acc(*a, d, &mut grads);
                }
                Op::Gelu(a) => {
                    let x = self.value(*a);
                    let mut d = g.clone();
                    Zip::from(&mut d).and(x).for_each(|d, &x| *d *= gelu_grad(x));
                    acc(*a, d, &mut grads);
                }
                Op::Select { take_new, new, old } => {
                    let mut dn = g.clone();
                    let mut dold = g.clone();
                    for (i, &t) in take_new.iter().enumerate() {
                        if t {
                            dold.row_mut(i).fill(0.0);
                        } else {
                            dn.row_mut(i).fill(0.0);
                        }
                    }
                    acc(*new, dn, &mut grads);
                    acc(*old, dold, &mut grads);
                }
                Op::SliceRows(a, start) => {
                    let mut d = Mat::zeros(self.value(*a).dim());
                    d.slice_mut(s![*start..*start + g.nrows(), ..]).assign(&g);
                    acc(*a, d, &mut grads);
                }
                Op::SliceCols(a, start) => {
                    let mut d = Mat::zeros(self.value(*a).dim());
                    d.slice_mut(s![.., *start..*start + g.ncols()]).assign(&g);
                    acc(*a, d, &mut grads);
                }
                Op::GatherRows(a, idx) => {
                    let mut d = Mat::zeros(self.value(*a).dim());
                    for (o, &i) in idx.iter().enumerate() {
                        let mut row = d.row_mut(i);
                        row += &g.row(o);
                    }
                    acc(*a, d, &mut grads);
                }
                Op::ConcatCols(parts) => {
                    let mut start = 0;
                    for p in parts {
                        let w = self.value(*p).ncols();
                        if self.ng(*p) {
                            acc(*p, g.slice(s![.., start..start + w]).to_owned(), &mut grads);
                        }
                        start += w;
                    }
                }
                Op::LayerNorm { x, inv_std } => {
                    let y = &node.value;
                    let d = y.ncols() as f64;
                    let mut dx = Mat::zeros(y.dim());
                    for (r, is) in inv_std.iter().enumerate() {
                        let gy = g.row(r);
                        let yr = y.row(r);
                        let sum_g = gy.sum();
                        let sum_gy = gy.dot(&yr);
                        for c in 0..y.ncols() {
                            dx[[r, c]] = is / d * (d * gy[c] - sum_g - yr[c] * sum_gy);
                        }
                    }
                    acc(*x, dx, &mut grads);
                }
                Op::L2Rows { x, inv_norm } => {
                    let y = &node.value;
                    let mut dx = Mat::zeros(y.dim());
                    for (r, inv) in inv_norm.iter().enumerate() {
                        let proj = g.row(r).dot(&y.row(r));
                        for c in 0..y.ncols() {
                            dx[[r, c]] = (g[[r, c]] - y[[r, c]] * proj) * inv;
                        }
                    }
                    acc(*x, dx, &mut grads);
                }
                Op::Attention {
                    q,
                    k,
                    v,
                    plan,
                    heads,
                    probs,
                } => {
                    let (dq, dk, dv) = attention_backward(
                        self.value(*q),
                        self.value(*k),
                        self.value(*v),
                        plan,
                        *heads,
                        probs,
                        &g,
                    );
                    acc(*q, dq, &mut grads);
                    acc(*k, dk, &mut grads);
                    acc(*v, dv, &mut grads);
                }
                Op::InfoNce {
                    sim,
                    log_tau,
                    d_sim,
                    d_log_tau,
                } => {
                    let up = g[[0, 0]];
                    acc(*sim, d_sim * up, &mut grads);
                    acc(*log_tau, Mat::from_elem((1, 1), d_log_tau * up), &mut grads);
                }
                Op::Triplet { sim, d_sim } => {
                    let up = g[[0, 0]];
                    acc(*sim, d_sim * up, &mut grads);
                }
            }
            if matches!(node.op, Op::Leaf) {
                grads[idx] = Some(g);
            }
        }
        Gradients { grads }
    }
}

fn head_width(d: usize, heads: usize) -> usize {
    assert!(heads > 0 && d.is_multiple_of(heads), "heads must divide the model width");
    d / heads
}

/// Softmax-normalized attention weights for every group and head, laid out
/// as `probs[group][head * nq * nk + qi * nk + kj]`.
pub fn attention_probs(q: &Mat, k: &Mat, plan: &AttentionPlan, heads: usize) -> Vec<Vec<f64>> {
    let d = q.ncols();
    let dh = head_width(d, heads);
    let scale = 1.0 / (dh as f64).sqrt();
    let (q, k) = (q.as_standard_layout(), k.as_standard_layout());
    let (qs, ks) = (flat(&q), flat(&k));
    plan.groups
        .iter()
        .map(|grp| {
            let (nq, nk) = (grp.queries.len(), grp.keys.len());
            let mut p = vec![0.0; heads * nq * nk];
            for h in 0..heads {
                let off = h * dh;
                for (qi, &qr) in grp.queries.iter().enumerate() {
                    let qrow = &qs[qr * d + off..qr * d + off + dh];
                    let base = h * nq * nk + qi * nk;
                    let scores = &mut p[base..base + nk];
                    for (kj, &kr) in grp.keys.iter().enumerate() {
                        scores[kj] = dot(qrow, &ks[kr * d + off..kr * d + off + dh]) * scale;
                    }
                    softmax_in_place(scores);
                }
            }
            p
        })
        .collect()
}

fn flat<'a>(m: &'a ndarray::CowArray<'_, f64, ndarray::Ix2>) -> &'a [f64] {
    m.as_slice().expect("standard layout")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += alpha * x;
    }
}

fn softmax_in_place(xs: &mut [f64]) {
    if xs.is_empty() {
        return;
    }
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - m).exp();
        z += *x;
    }
    for x in xs.iter_mut() {
        *x /= z;
    }
}

fn attention_forward(
    q: &Mat,
    k: &Mat,
    v: &Mat,
    plan: &AttentionPlan,
    heads: usize,
) -> (Mat, Vec<Vec<f64>>) {
    let dh = head_width(q.ncols(), heads);
    let probs = attention_probs(q, k, plan, heads);
    let dv_ = v.ncols();
    let v = v.as_standard_layout();
    let vs = flat(&v);
    let mut out = Mat::zeros((q.nrows(), dv_));
    let os = out.as_slice_mut().expect("fresh array");
    for (grp, p) in plan.groups.iter().zip(&probs) {
        let (nq, nk) = (grp.queries.len(), grp.keys.len());
        for h in 0..heads {
            let off = h * dh;
            for (qi, &qr) in grp.queries.iter().enumerate() {
                let w = &p[h * nq * nk + qi * nk..h * nq * nk + (qi + 1) * nk];
                let orow = &mut os[qr * dv_ + off..qr * dv_ + off + dh];
                for (kj, &kr) in grp.keys.iter().enumerate() {
                    axpy(w[kj], &vs[kr * dv_ + off..kr * dv_ + off + dh], orow);
                }
            }
        }
    }
    (out, probs)
}

fn attention_backward(
    q: &Mat,
    k: &Mat,
    v: &Mat,
    plan: &AttentionPlan,
    heads: usize,
    probs: &[Vec<f64>],
    g: &Mat,
) -> (Mat, Mat, Mat) {
    let d = q.ncols();
    let dh = head_width(d, heads);
    let scale = 1.0 / (dh as f64).sqrt();
    let (q, k, v, g) = (
        q.as_standard_layout(),
        k.as_standard_layout(),
        v.as_standard_layout(),
        g.as_standard_layout(),
    );
    let (qs, ks, vs, gs) = (flat(&q), flat(&k), flat(&v), flat(&g));
    let mut dq = Mat::zeros(q.dim());
    let mut dk = Mat::zeros(k.dim());
    let mut dv = Mat::zeros(v.dim());
    {
        let dqs = dq.as_slice_mut().expect("fresh array");
        let dks = dk.as_slice_mut().expect("fresh array");
        let dvs = dv.as_slice_mut().expect("fresh array");
        let mut dp = Vec::new();
        for (grp, p) in plan.groups.iter().zip(probs) {
            let (nq, nk) = (grp.queries.len(), grp.keys.len());
            for h in 0..heads {
                let off = h * dh;
                let row = |r: usize| r * d + off..r * d + off + dh;
                for (qi, &qr) in grp.queries.iter().enumerate() {
                    let w = &p[h * nq * nk + qi * nk..h * nq * nk + (qi + 1) * nk];
                    let grow = &gs[row(qr)];
                    dp.clear();
                    dp.extend(grp.keys.iter().map(|&kr| dot(grow, &vs[row(kr)])));
                    let inner: f64 = w.iter().zip(&dp).map(|(a, b)| a * b).sum();
                    for (kj, &kr) in grp.keys.iter().enumerate() {
                        axpy(w[kj], grow, &mut dvs[row(kr)]);
                        let ds = w[kj] * (dp[kj] - inner) * scale;
                        if ds != 0.0 {
                            axpy(ds, &ks[row(kr)], &mut dqs[row(qr)]);
                            axpy(ds, &qs[row(qr)], &mut dks[row(kr)]);
                        }
                    }
                }
            }
        }
    }
    (dq, dk, dv)
}
