//! Gradient verification against central finite differences.
//!
//! A [`GraphProgram`] is a replayable recipe: it can be evaluated as a plain
//! number for finite differencing and recorded on a fresh [`Tape`] for the
//! reverse pass, so the two paths stay independent. Random programs cover
//! the whole op set; generation wraps domain-restricted ops (log, sqrt,
//! recip, exp) in bounded preludes so any leaf values are valid.

use rand::Rng;
use rand_xoshiro::Xoshiro256StarStar;

use crate::matrix::Matrix;
use crate::stream::derived_rng;
use crate::tape::{NodeId, Tape};

/// Relative error with a unit floor, so near-zero gradients are compared
/// absolutely.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Central finite differences of a scalar function at `at`, one matrix of
/// partials per input matrix.
pub fn fd_gradients(
    f: &mut dyn FnMut(&[Matrix]) -> f64,
    at: &[Matrix],
    h: f64,
) -> Vec<Matrix> {
    let mut grads = Vec::with_capacity(at.len());
    for li in 0..at.len() {
        let (rows, cols) = at[li].shape();
        let mut g = Matrix::zeros(rows, cols);
        for k in 0..rows * cols {
            let mut plus = at.to_vec();
            plus[li].data_mut()[k] += h;
            let mut minus = at.to_vec();
            minus[li].data_mut()[k] -= h;
            g.data_mut()[k] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
        grads.push(g);
    }
    grads
}

/// One operation in a replayable program. Operands index previous slots
/// (leaves first, then step outputs in order).
#[derive(Clone, Copy, Debug)]
pub enum StepOp {
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    MatMul(usize, usize),
    AddBias(usize, usize),
    ScalarMul(usize, usize),
    RowScale(usize, usize),
    ConcatCols(usize, usize),
    SliceCols(usize, usize, usize),
    Transpose(usize),
    Relu(usize),
    Tanh(usize),
    Sigmoid(usize),
    Exp(usize),
    Log(usize),
    Sqrt(usize),
    Square(usize),
    Recip(usize),
    Affine(usize, f64, f64),
    SumAll(usize),
    SumRows(usize),
    SumCols(usize),
    L2Norm(usize),
    MeanAll(usize),
}

/// A recorded graph recipe; the final step must produce a 1x1 value.
#[derive(Clone, Debug)]
pub struct GraphProgram {
    pub leaf_shapes: Vec<(usize, usize)>,
    pub steps: Vec<StepOp>,
}

/// A program replayed onto a tape: the tape plus node ids for every slot.
pub struct Recorded {
    pub tape: Tape,
    pub slots: Vec<NodeId>,
    pub n_leaves: usize,
}

impl Recorded {
    pub fn output(&self) -> NodeId {
        *self.slots.last().expect("program has at least one step")
    }

    pub fn leaf_ids(&self) -> &[NodeId] {
        &self.slots[..self.n_leaves]
    }
}

impl GraphProgram {
    /// Replays the program on a fresh tape.
    pub fn record(&self, leaves: &[Matrix]) -> Recorded {
        assert_eq!(leaves.len(), self.leaf_shapes.len());
        let mut tape = Tape::new();
        let mut slots: Vec<NodeId> = Vec::with_capacity(leaves.len() + self.steps.len());
        for leaf in leaves {
            slots.push(tape.input(leaf.clone()));
        }
        for step in &self.steps {
            let id = match *step {
                StepOp::Add(a, b) => tape.add(slots[a], slots[b]),
                StepOp::Sub(a, b) => tape.sub(slots[a], slots[b]),
                StepOp::Mul(a, b) => tape.mul(slots[a], slots[b]),
                StepOp::MatMul(a, b) => tape.matmul(slots[a], slots[b]),
                StepOp::AddBias(a, b) => tape.add_bias(slots[a], slots[b]),
                StepOp::ScalarMul(a, b) => tape.scalar_mul(slots[a], slots[b]),
                StepOp::RowScale(a, b) => tape.row_scale(slots[a], slots[b]),
                StepOp::ConcatCols(a, b) => tape.concat_cols(slots[a], slots[b]),
                StepOp::SliceCols(a, s, e) => tape.slice_cols(slots[a], s, e),
                StepOp::Transpose(a) => tape.transpose(slots[a]),
                StepOp::Relu(a) => tape.relu(slots[a]),
                StepOp::Tanh(a) => tape.tanh(slots[a]),
                StepOp::Sigmoid(a) => tape.sigmoid(slots[a]),
                StepOp::Exp(a) => tape.exp(slots[a]),
                StepOp::Log(a) => tape.log(slots[a]),
                StepOp::Sqrt(a) => tape.sqrt(slots[a]),
                StepOp::Square(a) => tape.square(slots[a]),
                StepOp::Recip(a) => tape.recip(slots[a]),
                StepOp::Affine(a, m, c) => tape.affine(slots[a], m, c),
                StepOp::SumAll(a) => tape.sum_all(slots[a]),
                StepOp::SumRows(a) => tape.sum_rows(slots[a]),
                StepOp::SumCols(a) => tape.sum_cols(slots[a]),
                StepOp::L2Norm(a) => tape.l2_norm(slots[a]),
                StepOp::MeanAll(a) => tape.mean_all(slots[a]),
            }
            .expect("program construction guarantees valid shapes");
            slots.push(id);
        }
        Recorded { tape, slots, n_leaves: leaves.len() }
    }

    pub fn value(&self, leaves: &[Matrix]) -> f64 {
        let rec = self.record(leaves);
        rec.tape.scalar_value(rec.output())
    }

    /// Smallest |pre-activation| across all relu steps; finite differences
    /// are only trustworthy when this margin stays clear of the kink.
    pub fn min_relu_margin(&self, leaves: &[Matrix]) -> f64 {
        let rec = self.record(leaves);
        let mut margin = f64::INFINITY;
        for step in &self.steps {
            if let StepOp::Relu(a) = *step {
                for &v in rec.tape.value(rec.slots[a]).data() {
                    margin = margin.min(v.abs());
                }
            }
        }
        margin
    }
}

/// Builds a random program over the supported op set. Shapes stay small so
/// finite differencing every leaf entry is cheap.
pub fn random_program(rng: &mut Xoshiro256StarStar) -> GraphProgram {
    let n_leaves = rng.random_range(2..=4);
    let mut shapes: Vec<(usize, usize)> = Vec::new();
    for _ in 0..n_leaves {
        shapes.push((rng.random_range(1..=3), rng.random_range(1..=3)));
    }
    let mut steps: Vec<StepOp> = Vec::new();
    // Slot shapes track leaves plus step outputs.
    let mut slot_shapes = shapes.clone();

    let push = |steps: &mut Vec<StepOp>, slot_shapes: &mut Vec<(usize, usize)>, op: StepOp, shape: (usize, usize)| {
        steps.push(op);
        slot_shapes.push(shape);
    };

    let n_ops = rng.random_range(5..=10);
    for _ in 0..n_ops {
        let pick = rng.random_range(0..12);
        let a = rng.random_range(0..slot_shapes.len());
        let (ar, ac) = slot_shapes[a];
        match pick {
            0 => {
                // Same-shape binary op, preferring an existing partner.
                let partner = (0..slot_shapes.len())
                    .filter(|&i| slot_shapes[i] == (ar, ac))
                    .max();
                let b = partner.unwrap_or(a);
                let op = match rng.random_range(0..3) {
                    0 => StepOp::Add(a, b),
                    1 => StepOp::Sub(a, b),
                    _ => StepOp::Mul(a, b),
                };
                push(&mut steps, &mut slot_shapes, op, (ar, ac));
            }
            1 => {
                // MatMul with a transposed copy when no conforming partner exists.
                let partner = (0..slot_shapes.len()).find(|&i| slot_shapes[i].0 == ac);
                match partner {
                    Some(b) => {
                        let bc = slot_shapes[b].1;
                        push(&mut steps, &mut slot_shapes, StepOp::MatMul(a, b), (ar, bc));
                    }
                    None => {
                        push(&mut steps, &mut slot_shapes, StepOp::Transpose(a), (ac, ar));
                        let t = slot_shapes.len() - 1;
                        push(&mut steps, &mut slot_shapes, StepOp::MatMul(a, t), (ar, ar));
                    }
                }
            }
            2 => {
                // Bounded then exponentiated: exp(tanh(x)) keeps values in [1/e, e].
                push(&mut steps, &mut slot_shapes, StepOp::Tanh(a), (ar, ac));
                let t = slot_shapes.len() - 1;
                push(&mut steps, &mut slot_shapes, StepOp::Exp(t), (ar, ac));
            }
            3 => {
                // log(x^2 + 1/2): argument bounded away from zero.
                push(&mut steps, &mut slot_shapes, StepOp::Square(a), (ar, ac));
                let s = slot_shapes.len() - 1;
                push(&mut steps, &mut slot_shapes, StepOp::Affine(s, 1.0, 0.5), (ar, ac));
                let t = slot_shapes.len() - 1;
                push(&mut steps, &mut slot_shapes, StepOp::Log(t), (ar, ac));
            }
            4 => {
                // sqrt(x^2 + 1/2)
                push(&mut steps, &mut slot_shapes, StepOp::Square(a), (ar, ac));
                let s = slot_shapes.len() - 1;
                push(&mut steps, &mut slot_shapes, StepOp::Affine(s, 1.0, 0.5), (ar, ac));
                let t = slot_shapes.len() - 1;
                push(&mut steps, &mut slot_shapes, StepOp::Sqrt(t), (ar, ac));
            }
            5 => {
                // 1 / (x^2 + 1/2)
                push(&mut steps, &mut slot_shapes, StepOp::Square(a), (ar, ac));
                let s = slot_shapes.len() - 1;
                push(&mut steps, &mut slot_shapes, StepOp::Affine(s, 1.0, 0.5), (ar, ac));
                let t = slot_shapes.len() - 1;
                push(&mut steps, &mut slot_shapes, StepOp::Recip(t), (ar, ac));
            }
            6 => push(&mut steps, &mut slot_shapes, StepOp::Relu(a), (ar, ac)),
            7 => push(&mut steps, &mut slot_shapes, StepOp::Tanh(a), (ar, ac)),
            8 => push(&mut steps, &mut slot_shapes, StepOp::Sigmoid(a), (ar, ac)),
            9 => {
                let b = rng.random_range(0..slot_shapes.len());
                let (br, bc) = slot_shapes[b];
                if br == ar {
                    push(&mut steps, &mut slot_shapes, StepOp::ConcatCols(a, b), (ar, ac + bc));
                } else {
                    push(&mut steps, &mut slot_shapes, StepOp::Square(a), (ar, ac));
                }
            }
            10 => {
                if ac >= 2 {
                    let s = rng.random_range(0..ac - 1);
                    let e = rng.random_range(s + 1..=ac);
                    push(&mut steps, &mut slot_shapes, StepOp::SliceCols(a, s, e), (ar, e - s));
                } else {
                    push(&mut steps, &mut slot_shapes, StepOp::Transpose(a), (ac, ar));
                }
            }
            _ => {
                let m = rng.random_range(-2.0..2.0);
                let c = rng.random_range(-1.0..1.0);
                push(&mut steps, &mut slot_shapes, StepOp::Affine(a, m, c), (ar, ac));
            }
        }
    }

    // Fold everything into one scalar so no subgraph is dead: sum a scalar
    // summary of each slot produced so far.
    let n_slots = slot_shapes.len();
    let mut partials: Vec<usize> = Vec::new();
    for s in 0..n_slots {
        let (r, c) = slot_shapes[s];
        if (r, c) == (1, 1) {
            partials.push(s);
        } else {
            push(&mut steps, &mut slot_shapes, StepOp::MeanAll(s), (1, 1));
            partials.push(slot_shapes.len() - 1);
        }
    }
    let mut acc = partials[0];
    for &p in &partials[1..] {
        push(&mut steps, &mut slot_shapes, StepOp::Add(acc, p), (1, 1));
        acc = slot_shapes.len() - 1;
    }
    // Keep the output well-scaled regardless of graph depth.
    push(&mut steps, &mut slot_shapes, StepOp::Tanh(acc), (1, 1));

    GraphProgram { leaf_shapes: shapes, steps }
}

pub fn random_leaves(prog: &GraphProgram, rng: &mut Xoshiro256StarStar) -> Vec<Matrix> {
    prog.leaf_shapes
        .iter()
        .map(|&(r, c)| Matrix::from_fn(r, c, |_, _| rng.random_range(-1.5..1.5)))
        .collect()
}

/// Max relative error between tape gradients and finite differences for one
/// program at one point.
pub fn check_program(prog: &GraphProgram, leaves: &[Matrix], h: f64) -> f64 {
    let mut rec = prog.record(leaves);
    let out = rec.output();
    let leaf_ids = rec.leaf_ids().to_vec();
    let grads = rec.tape.backward(out, &leaf_ids).expect("backward");
    let ad: Vec<Matrix> = grads.iter().map(|&g| rec.tape.value(g).clone()).collect();
    let fd = fd_gradients(&mut |ls: &[Matrix]| prog.value(ls), leaves, h);
    let mut worst = 0.0f64;
    for (a, b) in ad.iter().zip(fd.iter()) {
        for (&x, &y) in a.data().iter().zip(b.data().iter()) {
            worst = worst.max(rel_err(x, y));
        }
    }
    worst
}

/// Runs `count` randomized graph checks; returns the worst relative error.
/// Points too close to a relu kink are redrawn.
pub fn check_random_graphs(seed: u64, count: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..count {
        let mut rng = derived_rng(seed, "gradcheck-graph", i as u64);
        let prog = random_program(&mut rng);
        let mut leaves = random_leaves(&prog, &mut rng);
        let mut tries = 0;
        while prog.min_relu_margin(&leaves) < 1e-3 && tries < 64 {
            leaves = random_leaves(&prog, &mut rng);
            tries += 1;
        }
        if prog.min_relu_margin(&leaves) < 1e-3 {
            continue; // pathological draw; the next graph covers the op mix
        }
        worst = worst.max(check_program(&prog, &leaves, 1e-5));
    }
    worst
}

/// Gradient-penalty style double-backprop check on a two-hidden-layer ReLU
/// network D: g(theta) = (||grad_x D(x)||_2 - 1)^2, d g / d theta compared
/// with finite differences. Returns the max relative error. Inputs are
/// redrawn until every relu pre-activation is at least 1e-3 from zero.
pub fn double_backprop_max_err(seed: u64) -> f64 {
    let (n_in, h1, h2) = (4, 5, 3);
    let mut rng = derived_rng(seed, "gradcheck-double", 0);

    let make_params = |rng: &mut Xoshiro256StarStar| -> Vec<Matrix> {
        vec![
            Matrix::from_fn(n_in, h1, |_, _| rng.random_range(-0.8..0.8)),
            Matrix::from_fn(1, h1, |_, _| rng.random_range(-0.3..0.3)),
            Matrix::from_fn(h1, h2, |_, _| rng.random_range(-0.8..0.8)),
            Matrix::from_fn(1, h2, |_, _| rng.random_range(-0.3..0.3)),
            Matrix::from_fn(h2, 1, |_, _| rng.random_range(-0.8..0.8)),
            Matrix::from_fn(1, 1, |_, _| rng.random_range(-0.3..0.3)),
        ]
    };

    // penalty(theta; x): record D, take grad wrt x on the tape, then the
    // squared norm gap. Also reports the relu margin.
    let penalty = |params: &[Matrix], x: &Matrix| -> (Tape, Vec<NodeId>, NodeId, f64) {
        let mut tape = Tape::new();
        let ids: Vec<NodeId> = params.iter().map(|p| tape.input(p.clone())).collect();
        let x_id = tape.input(x.clone());
        let z1 = tape.matmul(x_id, ids[0]).unwrap();
        let z1 = tape.add_bias(z1, ids[1]).unwrap();
        let a1 = tape.relu(z1).unwrap();
        let z2 = tape.matmul(a1, ids[2]).unwrap();
        let z2 = tape.add_bias(z2, ids[3]).unwrap();
        let a2 = tape.relu(z2).unwrap();
        let out = tape.matmul(a2, ids[4]).unwrap();
        let out = tape.add_bias(out, ids[5]).unwrap();

        let mut margin = f64::INFINITY;
        for id in [z1, z2] {
            for &v in tape.value(id).data() {
                margin = margin.min(v.abs());
            }
        }

        let d_x = tape.backward(out, &[x_id]).unwrap()[0];
        let norm = tape.l2_norm(d_x).unwrap();
        let gap = tape.affine(norm, 1.0, -1.0).unwrap();
        let pen = tape.square(gap).unwrap();
        (tape, ids, pen, margin)
    };

    let params = make_params(&mut rng);
    let mut x = Matrix::from_fn(1, n_in, |_, _| rng.random_range(-1.0..1.0));
    loop {
        let (_, _, _, margin) = penalty(&params, &x);
        if margin >= 1e-3 {
            break;
        }
        x = Matrix::from_fn(1, n_in, |_, _| rng.random_range(-1.0..1.0));
    }

    let (mut tape, ids, pen, _) = penalty(&params, &x);
    let grads = tape.backward(pen, &ids).unwrap();
    let ad: Vec<Matrix> = grads.iter().map(|&g| tape.value(g).clone()).collect();

    let fd = fd_gradients(
        &mut |ps: &[Matrix]| {
            let (tape, _, pen, _) = penalty(ps, &x);
            tape.scalar_value(pen)
        },
        &params,
        1e-5,
    );

    let mut worst = 0.0f64;
    for (a, b) in ad.iter().zip(fd.iter()) {
        for (&p, &q) in a.data().iter().zip(b.data().iter()) {
            worst = worst.max(rel_err(p, q));
        }
    }
    worst
}
