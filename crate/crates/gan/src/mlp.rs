use rand::Rng;

use ecgan_autodiff::init::glorot_uniform;
use ecgan_autodiff::{Matrix, NodeId, Tape};

use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FinalAct {
    Linear,
    Tanh,
    Sigmoid,
}

/// Two-hidden-layer fully connected network with ReLU activations.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub w1: Matrix,
    pub b1: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
    pub w3: Matrix,
    pub b3: Matrix,
}

impl MlpParams {
    pub fn init(d_in: usize, h1: usize, h2: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        Self {
            w1: glorot_uniform(d_in, h1, rng),
            b1: Matrix::zeros(1, h1),
            w2: glorot_uniform(h1, h2, rng),
            b2: Matrix::zeros(1, h2),
            w3: glorot_uniform(h2, d_out, rng),
            b3: Matrix::zeros(1, d_out),
        }
    }

    pub fn matrices(&self) -> [&Matrix; 6] {
        [&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3]
    }

    pub fn matrices_vec(&self) -> Vec<Matrix> {
        self.matrices().into_iter().cloned().collect()
    }

    pub fn set_from(&mut self, ms: Vec<Matrix>) {
        let mut it = ms.into_iter();
        self.w1 = it.next().unwrap();
        self.b1 = it.next().unwrap();
        self.w2 = it.next().unwrap();
        self.b2 = it.next().unwrap();
        self.w3 = it.next().unwrap();
        self.b3 = it.next().unwrap();
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.matrices().iter().map(|m| m.shape()).collect()
    }

    /// Records the parameters as tape inputs (for differentiation).
    pub fn record(&self, tape: &mut Tape) -> [NodeId; 6] {
        [
            tape.input(self.w1.clone()),
            tape.input(self.b1.clone()),
            tape.input(self.w2.clone()),
            tape.input(self.b2.clone()),
            tape.input(self.w3.clone()),
            tape.input(self.b3.clone()),
        ]
    }

    /// Forward pass from recorded parameter nodes.
    pub fn forward_from(
        tape: &mut Tape,
        params: &[NodeId; 6],
        x: NodeId,
        final_act: FinalAct,
    ) -> Result<NodeId> {
        let z1 = tape.matmul(x, params[0])?;
        let z1 = tape.add_bias(z1, params[1])?;
        let a1 = tape.relu(z1)?;
        let z2 = tape.matmul(a1, params[2])?;
        let z2 = tape.add_bias(z2, params[3])?;
        let a2 = tape.relu(z2)?;
        let out = tape.matmul(a2, params[4])?;
        let out = tape.add_bias(out, params[5])?;
        Ok(match final_act {
            FinalAct::Linear => out,
            FinalAct::Tanh => tape.tanh(out)?,
            FinalAct::Sigmoid => tape.sigmoid(out)?,
        })
    }

    /// Plain forward pass without a tape, for sampling.
    pub fn forward_value(&self, x: &Matrix, final_act: FinalAct) -> Matrix {
        let relu = |m: Matrix| m.map(|v| if v > 0.0 { v } else { 0.0 });
        let a1 = relu(x.matmul(&self.w1).add_bias(&self.b1));
        let a2 = relu(a1.matmul(&self.w2).add_bias(&self.b2));
        let out = a2.matmul(&self.w3).add_bias(&self.b3);
        match final_act {
            FinalAct::Linear => out,
            FinalAct::Tanh => out.map(f64::tanh),
            FinalAct::Sigmoid => out.map(|v| 1.0 / (1.0 + (-v).exp())),
        }
    }

    /// Checkpoint entries under a prefix like "gen" or "disc".
    pub fn named_entries(&self, prefix: &str) -> Vec<(String, Matrix)> {
        ["w1", "b1", "w2", "b2", "w3", "b3"]
            .iter()
            .zip(self.matrices())
            .map(|(n, m)| (format!("{prefix}.{n}"), m.clone()))
            .collect()
    }

    pub fn from_entries(
        entries: &[(String, Matrix)],
        prefix: &str,
    ) -> std::result::Result<Self, ecgan_autodiff::checkpoint::CheckpointError> {
        use ecgan_autodiff::checkpoint::find;
        Ok(Self {
            w1: find(entries, &format!("{prefix}.w1"))?.clone(),
            b1: find(entries, &format!("{prefix}.b1"))?.clone(),
            w2: find(entries, &format!("{prefix}.w2"))?.clone(),
            b2: find(entries, &format!("{prefix}.b2"))?.clone(),
            w3: find(entries, &format!("{prefix}.w3"))?.clone(),
            b3: find(entries, &format!("{prefix}.b3"))?.clone(),
        })
    }

    /// Clamps every weight and bias into [-c, c] (critic clipping mode).
    pub fn clamp_all(&mut self, c: f64) {
        for m in [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
        ] {
            *m = m.map(|v| v.clamp(-c, c));
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.matrices()
            .iter()
            .flat_map(|m| m.data().iter())
            .fold(0.0f64, |a, &v| a.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ecgan_autodiff::stream::derived_rng;

    #[test]
    fn tape_and_plain_forward_agree() {
        let mut rng = derived_rng(3, "mlp-test", 0);
        let mlp = MlpParams::init(5, 8, 6, 3, &mut rng);
        let x = Matrix::from_fn(4, 5, |_, _| rng.random_range(-1.0..1.0));

        let plain = mlp.forward_value(&x, FinalAct::Tanh);
        let mut tape = Tape::new();
        let params = mlp.record(&mut tape);
        let xi = tape.input(x);
        let out = MlpParams::forward_from(&mut tape, &params, xi, FinalAct::Tanh).unwrap();
        assert_eq!(tape.value(out), &plain);
    }

    #[test]
    fn clamp_bounds_all_parameters() {
        let mut rng = derived_rng(4, "mlp-clamp", 0);
        let mut mlp = MlpParams::init(5, 8, 6, 3, &mut rng);
        mlp.clamp_all(0.01);
        assert!(mlp.max_abs() <= 0.01);
    }
}
