use crate::matrix::Matrix;
use crate::scalar::{lit, Scalar};
use crate::{AutodiffError, Result};

/// Index of a node on its tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Recorded operation. Input ids always precede the node that uses them, so
/// insertion order is a topological order.
#[derive(Clone, Copy, Debug)]
enum Op<F: Scalar> {
    /// Input or constant; no inputs, zero adjoint contribution.
    Leaf,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    /// Elementwise product of same-shape matrices.
    Mul(NodeId, NodeId),
    /// RxC plus a 1xC bias broadcast over rows.
    AddBias(NodeId, NodeId),
    /// RxC times a 1x1 scalar node.
    ScalarMul(NodeId, NodeId),
    /// Row i of the matrix scaled by entry i of an Rx1 column.
    RowScale(NodeId, NodeId),
    /// a*x + b elementwise with f64 constants.
    Affine(NodeId, F, F),
    MatMul(NodeId, NodeId),
    Transpose(NodeId),
    Relu(NodeId),
    /// Heaviside step with step(0) = 0; declared derivative is zero, which
    /// makes the ReLU second derivative vanish everywhere.
    Step(NodeId),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Exp(NodeId),
    Log(NodeId),
    Sqrt(NodeId),
    Square(NodeId),
    Recip(NodeId),
    SumAll(NodeId),
    SumRows(NodeId),
    SumCols(NodeId),
    ConcatCols(NodeId, NodeId),
    SliceCols(NodeId, usize, usize),
}

struct Node<F: Scalar> {
    op: Op<F>,
    value: Matrix<F>,
}

/// Append-only record of forward operations with cached values.
pub struct Tape<F: Scalar = f64> {
    nodes: Vec<Node<F>>,
}

impl<F: Scalar> Default for Tape<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> Tape<F> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Matrix<F> {
        &self.nodes[id.0].value
    }

    pub fn scalar_value(&self, id: NodeId) -> F {
        let m = self.value(id);
        debug_assert_eq!(m.shape(), (1, 1));
        m.get(0, 0)
    }

    fn push(&mut self, op: Op<F>, value: Matrix<F>) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { op, value });
        id
    }

    fn check(&self, id: NodeId) -> Result<()> {
        if id.0 < self.nodes.len() {
            Ok(())
        } else {
            Err(AutodiffError::UnknownNode(id.0))
        }
    }

    fn same_shape(&self, op: &'static str, a: NodeId, b: NodeId) -> Result<()> {
        let (ar, ac) = self.value(a).shape();
        let (br, bc) = self.value(b).shape();
        if ar != br || ac != bc {
            return Err(AutodiffError::ShapeMismatch {
                op,
                lhs_rows: ar,
                lhs_cols: ac,
                rhs_rows: br,
                rhs_cols: bc,
            });
        }
        Ok(())
    }

    /// Records a leaf holding an input or constant.
    pub fn input(&mut self, value: Matrix<F>) -> NodeId {
        self.push(Op::Leaf, value)
    }

    pub fn constant(&mut self, value: Matrix<F>) -> NodeId {
        self.push(Op::Leaf, value)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check(a)?;
        self.check(b)?;
        self.same_shape("add", a, b)?;
        let value = self.value(a).add(self.value(b));
        Ok(self.push(Op::Add(a, b), value))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check(a)?;
        self.check(b)?;
        self.same_shape("sub", a, b)?;
        let value = self.value(a).sub(self.value(b));
        Ok(self.push(Op::Sub(a, b), value))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check(a)?;
        self.check(b)?;
        self.same_shape("mul", a, b)?;
        let value = self.value(a).mul_elem(self.value(b));
        Ok(self.push(Op::Mul(a, b), value))
    }

    pub fn add_bias(&mut self, x: NodeId, bias: NodeId) -> Result<NodeId> {
        self.check(x)?;
        self.check(bias)?;
        let (_, xc) = self.value(x).shape();
        let (br, bc) = self.value(bias).shape();
        if br != 1 || bc != xc {
            return Err(AutodiffError::ShapeMismatch {
                op: "add_bias",
                lhs_rows: self.value(x).rows(),
                lhs_cols: xc,
                rhs_rows: br,
                rhs_cols: bc,
            });
        }
        let value = self.value(x).add_bias(self.value(bias));
        Ok(self.push(Op::AddBias(x, bias), value))
    }

    pub fn scalar_mul(&mut self, x: NodeId, s: NodeId) -> Result<NodeId> {
        self.check(x)?;
        self.check(s)?;
        let (sr, sc) = self.value(s).shape();
        if (sr, sc) != (1, 1) {
            return Err(AutodiffError::BadShape {
                op: "scalar_mul",
                expected: "1x1 scalar",
                rows: sr,
                cols: sc,
            });
        }
        let c = self.value(s).get(0, 0);
        let value = self.value(x).scale(c);
        Ok(self.push(Op::ScalarMul(x, s), value))
    }

    pub fn row_scale(&mut self, x: NodeId, col: NodeId) -> Result<NodeId> {
        self.check(x)?;
        self.check(col)?;
        let (xr, xc) = self.value(x).shape();
        let (cr, cc) = self.value(col).shape();
        if cr != xr || cc != 1 {
            return Err(AutodiffError::ShapeMismatch {
                op: "row_scale",
                lhs_rows: xr,
                lhs_cols: xc,
                rhs_rows: cr,
                rhs_cols: cc,
            });
        }
        let value = self.value(x).row_scale(self.value(col));
        Ok(self.push(Op::RowScale(x, col), value))
    }

    pub fn affine(&mut self, x: NodeId, a: f64, b: f64) -> Result<NodeId> {
        self.check(x)?;
        let (fa, fb) = (lit::<F>(a), lit::<F>(b));
        let value = self.value(x).affine(fa, fb);
        Ok(self.push(Op::Affine(x, fa, fb), value))
    }

    pub fn scale(&mut self, x: NodeId, a: f64) -> Result<NodeId> {
        self.affine(x, a, 0.0)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check(a)?;
        self.check(b)?;
        let (ar, ac) = self.value(a).shape();
        let (br, bc) = self.value(b).shape();
        if ac != br {
            return Err(AutodiffError::ShapeMismatch {
                op: "matmul",
                lhs_rows: ar,
                lhs_cols: ac,
                rhs_rows: br,
                rhs_cols: bc,
            });
        }
        let value = self.value(a).matmul(self.value(b));
        Ok(self.push(Op::MatMul(a, b), value))
    }

    pub fn transpose(&mut self, x: NodeId) -> Result<NodeId> {
        self.check(x)?;
        let value = self.value(x).transpose();
        Ok(self.push(Op::Transpose(x), value))
    }

    pub fn relu(&mut self, x: NodeId) -> Result<NodeId> {
        self.check(x)?;
        let value = self.value(x).map(|v| if v > F::zero() { v } else { F::zero() });
        Ok(self.push(Op::Relu(x), value))
    }

    pub fn step(&mut self, x: NodeId) -> Result<NodeId> {
        self.check(x)?;
        let value = self
            .value(x)
            .map(|v| if v > F::zero() { F::one() } else { F::zero() });
        Ok(self.push(Op::Step(x), value))
    }

    pub fn tanh(&mut self, x: NodeId) -> Result<NodeId> {
        self.check(x)?;
        let value = self.value(x).map(|v| v.tanh());
        Ok(self.push(Op::Tanh(x), value))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId> {
        self.check(x)?;
        let one = F::one();
        let value = self.value(x).map(|v| one / (one + (-v).exp()));
        Ok(self.push(Op::Sigmoid(x), value))
    }

    pub fn exp(&mut self, x: NodeId) -> Result<NodeId> {
        self.check(x)?;
        let value = self.value(x).map(|v| v.exp());
        Ok(self.push(Op::Exp(x), value))
    }

    pub fn log(&mut self, x: NodeId) -> Result<NodeId> {
        self.check(x)?;
        let value = self.value(x).map(|v| v.ln());
        Ok(self.push(Op::Log(x), value))
    }

    pub fn sqrt(&mut self, x: NodeId) -> Result<NodeId> {
        self.check(x)?;
        let value = self.value(x).map(|v| v.sqrt());
        Ok(self.push(Op::Sqrt(x), value))
    }

    pub fn square(&mut self, x: NodeId) -> Result<NodeId> {
        self.check(x)?;
        let value = self.value(x).map(|v| v * v);
        Ok(self.push(Op::Square(x), value))
    }

    pub fn recip(&mut self, x: NodeId) -> Result<NodeId> {
        self.check(x)?;
        let value = self.value(x).map(|v| F::one() / v);
        Ok(self.push(Op::Recip(x), value))
    }

    pub fn sum_all(&mut self, x: NodeId) -> Result<NodeId> {
        self.check(x)?;
        let value = Matrix::raw(1, 1, vec![self.value(x).sum()]);
        Ok(self.push(Op::SumAll(x), value))
    }

    pub fn sum_rows(&mut self, x: NodeId) -> Result<NodeId> {
        self.check(x)?;
        let value = self.value(x).sum_rows();
        Ok(self.push(Op::SumRows(x), value))
    }

    pub fn sum_cols(&mut self, x: NodeId) -> Result<NodeId> {
        self.check(x)?;
        let value = self.value(x).sum_cols();
        Ok(self.push(Op::SumCols(x), value))
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check(a)?;
        self.check(b)?;
        let (ar, ac) = self.value(a).shape();
        let (br, bc) = self.value(b).shape();
        if ar != br {
            return Err(AutodiffError::ShapeMismatch {
                op: "concat_cols",
                lhs_rows: ar,
                lhs_cols: ac,
                rhs_rows: br,
                rhs_cols: bc,
            });
        }
        let value = self.value(a).concat_cols(self.value(b));
        Ok(self.push(Op::ConcatCols(a, b), value))
    }

    pub fn slice_cols(&mut self, x: NodeId, start: usize, end: usize) -> Result<NodeId> {
        self.check(x)?;
        let cols = self.value(x).cols();
        if start >= end || end > cols {
            return Err(AutodiffError::BadSlice { start, end, cols });
        }
        let value = self.value(x).slice_cols(start, end);
        Ok(self.push(Op::SliceCols(x, start, end), value))
    }

    // -- composites -------------------------------------------------------

    /// Mean of all entries as a 1x1 node.
    pub fn mean_all(&mut self, x: NodeId) -> Result<NodeId> {
        let n = self.value(x).len() as f64;
        let s = self.sum_all(x)?;
        self.affine(s, 1.0 / n, 0.0)
    }

    /// Frobenius norm of the whole matrix as a 1x1 node.
    pub fn l2_norm(&mut self, x: NodeId) -> Result<NodeId> {
        let sq = self.square(x)?;
        let s = self.sum_all(sq)?;
        self.sqrt(s)
    }

    /// Per-row Euclidean norm as an Rx1 column.
    pub fn row_l2_norm(&mut self, x: NodeId) -> Result<NodeId> {
        let sq = self.square(x)?;
        let s = self.sum_cols(sq)?;
        self.sqrt(s)
    }

    /// Numerically stable log(1 + exp(x)), elementwise.
    pub fn softplus(&mut self, x: NodeId) -> Result<NodeId> {
        // relu(x) + log(1 + exp(-|x|)); |x| = sqrt(x^2 + tiny) keeps it
        // on-tape with a finite reverse pass at x = 0.
        let pos = self.relu(x)?;
        let sq0 = self.square(x)?;
        let sq = self.affine(sq0, 1.0, 1e-24)?;
        let absx = self.sqrt(sq)?;
        let negabs = self.scale(absx, -1.0)?;
        let e = self.exp(negabs)?;
        let one_plus = self.affine(e, 1.0, 1.0)?;
        let log_term = self.log(one_plus)?;
        self.add(pos, log_term)
    }

    // -- reverse pass ------------------------------------------------------

    /// Computes d(output)/d(node) for each requested node, recording the
    /// adjoint computation on the tape so the returned gradients are
    /// themselves differentiable. Output must be 1x1.
    pub fn backward(&mut self, output: NodeId, wrt: &[NodeId]) -> Result<Vec<NodeId>> {
        self.check(output)?;
        for &w in wrt {
            self.check(w)?;
        }
        let (or, oc) = self.value(output).shape();
        if (or, oc) != (1, 1) {
            return Err(AutodiffError::NonScalarOutput { rows: or, cols: oc });
        }

        // Reachable subgraph below the output.
        let mut reach = vec![false; output.0 + 1];
        let mut stack = vec![output.0];
        reach[output.0] = true;
        while let Some(id) = stack.pop() {
            for input in op_inputs(&self.nodes[id].op) {
                if !reach[input.0] {
                    reach[input.0] = true;
                    stack.push(input.0);
                }
            }
        }

        let mut adjoint: Vec<Option<NodeId>> = vec![None; output.0 + 1];
        let seed = self.constant(Matrix::filled(1, 1, F::one()));
        adjoint[output.0] = Some(seed);

        // Reverse insertion order: every consumer of a node has a larger id,
        // so its adjoint is complete by the time we reach it.
        for id in (0..=output.0).rev() {
            if !reach[id] {
                continue;
            }
            let Some(g) = adjoint[id] else { continue };
            let op = self.nodes[id].op;
            match op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    self.accumulate(&mut adjoint, a, g)?;
                    self.accumulate(&mut adjoint, b, g)?;
                }
                Op::Sub(a, b) => {
                    self.accumulate(&mut adjoint, a, g)?;
                    let neg = self.scale(g, -1.0)?;
                    self.accumulate(&mut adjoint, b, neg)?;
                }
                Op::Mul(a, b) => {
                    let da = self.mul(g, b)?;
                    self.accumulate(&mut adjoint, a, da)?;
                    let db = self.mul(g, a)?;
                    self.accumulate(&mut adjoint, b, db)?;
                }
                Op::AddBias(x, bias) => {
                    self.accumulate(&mut adjoint, x, g)?;
                    let db = self.sum_rows(g)?;
                    self.accumulate(&mut adjoint, bias, db)?;
                }
                Op::ScalarMul(x, s) => {
                    let dx = self.scalar_mul(g, s)?;
                    self.accumulate(&mut adjoint, x, dx)?;
                    let gx = self.mul(g, x)?;
                    let ds = self.sum_all(gx)?;
                    self.accumulate(&mut adjoint, s, ds)?;
                }
                Op::RowScale(x, col) => {
                    let dx = self.row_scale(g, col)?;
                    self.accumulate(&mut adjoint, x, dx)?;
                    let gx = self.mul(g, x)?;
                    let dcol = self.sum_cols(gx)?;
                    self.accumulate(&mut adjoint, col, dcol)?;
                }
                Op::Affine(x, a, _) => {
                    let dx = self.scale(g, a.to_f64().unwrap())?;
                    self.accumulate(&mut adjoint, x, dx)?;
                }
                Op::MatMul(a, b) => {
                    let bt = self.transpose(b)?;
                    let da = self.matmul(g, bt)?;
                    self.accumulate(&mut adjoint, a, da)?;
                    let at = self.transpose(a)?;
                    let db = self.matmul(at, g)?;
                    self.accumulate(&mut adjoint, b, db)?;
                }
                Op::Transpose(x) => {
                    let dx = self.transpose(g)?;
                    self.accumulate(&mut adjoint, x, dx)?;
                }
                Op::Relu(x) => {
                    let mask = self.step(x)?;
                    let dx = self.mul(g, mask)?;
                    self.accumulate(&mut adjoint, x, dx)?;
                }
                Op::Step(_) => {}
                Op::Tanh(x) => {
                    let y = NodeId(id);
                    let y2 = self.square(y)?;
                    let one_minus = self.affine(y2, -1.0, 1.0)?;
                    let dx = self.mul(g, one_minus)?;
                    self.accumulate(&mut adjoint, x, dx)?;
                }
                Op::Sigmoid(x) => {
                    let y = NodeId(id);
                    let one_minus = self.affine(y, -1.0, 1.0)?;
                    let yy = self.mul(y, one_minus)?;
                    let dx = self.mul(g, yy)?;
                    self.accumulate(&mut adjoint, x, dx)?;
                }
                Op::Exp(x) => {
                    let dx = self.mul(g, NodeId(id))?;
                    self.accumulate(&mut adjoint, x, dx)?;
                }
                Op::Log(x) => {
                    let rx = self.recip(x)?;
                    let dx = self.mul(g, rx)?;
                    self.accumulate(&mut adjoint, x, dx)?;
                }
                Op::Sqrt(x) => {
                    let ry = self.recip(NodeId(id))?;
                    let half = self.scale(ry, 0.5)?;
                    let dx = self.mul(g, half)?;
                    self.accumulate(&mut adjoint, x, dx)?;
                }
                Op::Square(x) => {
                    let two_x = self.scale(x, 2.0)?;
                    let dx = self.mul(g, two_x)?;
                    self.accumulate(&mut adjoint, x, dx)?;
                }
                Op::Recip(x) => {
                    let y2 = self.square(NodeId(id))?;
                    let gy = self.mul(g, y2)?;
                    let dx = self.scale(gy, -1.0)?;
                    self.accumulate(&mut adjoint, x, dx)?;
                }
                Op::SumAll(x) => {
                    let (r, c) = self.value(x).shape();
                    let ones = self.constant(Matrix::filled(r, c, F::one()));
                    let dx = self.scalar_mul(ones, g)?;
                    self.accumulate(&mut adjoint, x, dx)?;
                }
                Op::SumRows(x) => {
                    let r = self.value(x).rows();
                    let ones = self.constant(Matrix::filled(r, 1, F::one()));
                    let dx = self.matmul(ones, g)?;
                    self.accumulate(&mut adjoint, x, dx)?;
                }
                Op::SumCols(x) => {
                    let c = self.value(x).cols();
                    let ones = self.constant(Matrix::filled(1, c, F::one()));
                    let dx = self.matmul(g, ones)?;
                    self.accumulate(&mut adjoint, x, dx)?;
                }
                Op::ConcatCols(a, b) => {
                    let ac = self.value(a).cols();
                    let total = self.value(NodeId(id)).cols();
                    let da = self.slice_cols(g, 0, ac)?;
                    self.accumulate(&mut adjoint, a, da)?;
                    let db = self.slice_cols(g, ac, total)?;
                    self.accumulate(&mut adjoint, b, db)?;
                }
                Op::SliceCols(x, start, end) => {
                    let (r, cols) = self.value(x).shape();
                    let mut dx = g;
                    if start > 0 {
                        let zeros = self.constant(Matrix::zeros(r, start));
                        dx = self.concat_cols(zeros, dx)?;
                    }
                    if end < cols {
                        let zeros = self.constant(Matrix::zeros(r, cols - end));
                        dx = self.concat_cols(dx, zeros)?;
                    }
                    self.accumulate(&mut adjoint, x, dx)?;
                }
            }
        }

        let mut out = Vec::with_capacity(wrt.len());
        for &w in wrt {
            let id = if w.0 <= output.0 { adjoint[w.0] } else { None };
            match id {
                Some(g) => out.push(g),
                None => {
                    let (r, c) = self.value(w).shape();
                    out.push(self.constant(Matrix::zeros(r, c)));
                }
            }
        }
        Ok(out)
    }

    fn accumulate(
        &mut self,
        adjoint: &mut [Option<NodeId>],
        target: NodeId,
        contribution: NodeId,
    ) -> Result<()> {
        match adjoint[target.0] {
            Some(existing) => {
                adjoint[target.0] = Some(self.add(existing, contribution)?);
            }
            None => adjoint[target.0] = Some(contribution),
        }
        Ok(())
    }
}

fn op_inputs<F: Scalar>(op: &Op<F>) -> Vec<NodeId> {
    match *op {
        Op::Leaf => vec![],
        Op::Add(a, b)
        | Op::Sub(a, b)
        | Op::Mul(a, b)
        | Op::AddBias(a, b)
        | Op::ScalarMul(a, b)
        | Op::RowScale(a, b)
        | Op::MatMul(a, b)
        | Op::ConcatCols(a, b) => vec![a, b],
        Op::Affine(x, _, _)
        | Op::Transpose(x)
        | Op::Relu(x)
        | Op::Step(x)
        | Op::Tanh(x)
        | Op::Sigmoid(x)
        | Op::Exp(x)
        | Op::Log(x)
        | Op::Sqrt(x)
        | Op::Square(x)
        | Op::Recip(x)
        | Op::SumAll(x)
        | Op::SumRows(x)
        | Op::SumCols(x)
        | Op::SliceCols(x, _, _) => vec![x],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_definition() {
        let mut tape: Tape = Tape::new();
        let x = tape.input(Matrix::row_from_f64(&[-1.0, 0.0, 2.0]));
        let y = tape.relu(x).unwrap();
        assert_eq!(tape.value(y).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn tanh_odd_at_zero() {
        let mut tape: Tape = Tape::new();
        let x = tape.input(Matrix::row_from_f64(&[0.0]));
        let y = tape.tanh(x).unwrap();
        assert_eq!(tape.scalar_value(y), 0.0);
    }

    #[test]
    fn l2norm_three_four_five() {
        let mut tape: Tape = Tape::new();
        let x = tape.input(Matrix::row_from_f64(&[3.0, 4.0]));
        let y = tape.l2_norm(x).unwrap();
        assert!((tape.scalar_value(y) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn dtanh_at_zero_is_one() {
        let mut tape: Tape = Tape::new();
        let x = tape.input(Matrix::row_from_f64(&[0.0]));
        let y = tape.tanh(x).unwrap();
        let g = tape.backward(y, &[x]).unwrap();
        assert_eq!(tape.value(g[0]).get(0, 0), 1.0);
    }

    #[test]
    fn linear_form_gradient() {
        // d(x.y)/dx for x=[1,2], y=[3,4]^T is [3,4].
        let mut tape: Tape = Tape::new();
        let x = tape.input(Matrix::row_from_f64(&[1.0, 2.0]));
        let y = tape.input(Matrix::from_vec(2, 1, vec![3.0, 4.0]).unwrap());
        let p = tape.matmul(x, y).unwrap();
        let g = tape.backward(p, &[x]).unwrap();
        assert_eq!(tape.value(g[0]).data(), &[3.0, 4.0]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut tape: Tape = Tape::new();
        let x = tape.input(Matrix::row_from_f64(&[1.0, 2.0]));
        let err = tape.backward(x, &[x]);
        assert!(matches!(err, Err(AutodiffError::NonScalarOutput { .. })));
    }

    #[test]
    fn shape_mismatch_reports_dimensions() {
        let mut tape: Tape = Tape::new();
        let a = tape.input(Matrix::zeros(2, 3));
        let b = tape.input(Matrix::zeros(2, 2));
        let err = tape.matmul(a, b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3") && msg.contains("2x2"), "{msg}");
    }

    #[test]
    fn fan_out_accumulates() {
        // f = x*x + x (elementwise, 1x1): df/dx = 2x + 1.
        let mut tape: Tape = Tape::new();
        let x = tape.input(Matrix::row_from_f64(&[3.0]));
        let sq = tape.mul(x, x).unwrap();
        let f = tape.add(sq, x).unwrap();
        let g = tape.backward(f, &[x]).unwrap();
        assert_eq!(tape.value(g[0]).get(0, 0), 7.0);
    }

    #[test]
    fn unreached_wrt_gets_zero_gradient() {
        let mut tape: Tape = Tape::new();
        let x = tape.input(Matrix::row_from_f64(&[1.0]));
        let unused = tape.input(Matrix::row_from_f64(&[5.0]));
        let f = tape.square(x).unwrap();
        let g = tape.backward(f, &[unused]).unwrap();
        assert_eq!(tape.value(g[0]).get(0, 0), 0.0);
    }

    #[test]
    fn double_backprop_through_square() {
        // f(x) = x^2; g = df/dx = 2x; h = g^2 = 4x^2; dh/dx = 8x.
        let mut tape: Tape = Tape::new();
        let x = tape.input(Matrix::row_from_f64(&[1.5]));
        let f = tape.square(x).unwrap();
        let g = tape.backward(f, &[x]).unwrap()[0];
        let h = tape.square(g).unwrap();
        let hh = tape.backward(h, &[x]).unwrap()[0];
        assert!((tape.value(hh).get(0, 0) - 8.0 * 1.5).abs() < 1e-12);
    }

    #[test]
    fn f32_instantiation_works() {
        let mut tape: Tape<f32> = Tape::new();
        let x = tape.input(Matrix32::from_vec(1, 1, vec![2.0f32]).unwrap());
        let f = tape.square(x).unwrap();
        let g = tape.backward(f, &[x]).unwrap()[0];
        assert!((tape.value(g).get(0, 0) - 4.0).abs() < 1e-6);
    }

    use crate::Matrix32;
}
