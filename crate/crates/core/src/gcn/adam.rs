use super::params::ParamSet;

/// Adam with bias correction; β1 = 0.9, β2 = 0.999, ε = 1e-8.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub const BETA1: f64 = 0.9;
    pub const BETA2: f64 = 0.999;
    pub const EPSILON: f64 = 1e-8;

    pub fn new<P: ParamSet>(params: &P) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        Self {
            first: zeros.clone(),
            second: zeros,
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step<P: ParamSet>(&mut self, params: &mut P, grads: &P, learning_rate: f64) {
        self.step += 1;
        let t = self.step as i32;
        let correct1 = 1.0 - Self::BETA1.powi(t);
        let correct2 = 1.0 - Self::BETA2.powi(t);

        let grads = grads.tensors();
        for (((param, grad), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            assert_eq!(param.len(), grad.len(), "gradient shape mismatch");
            for i in 0..param.len() {
                let g = grad[i];
                m[i] = Self::BETA1 * m[i] + (1.0 - Self::BETA1) * g;
                v[i] = Self::BETA2 * v[i] + (1.0 - Self::BETA2) * g * g;
                let m_hat = m[i] / correct1;
                let v_hat = v[i] / correct2;
                param[i] -= learning_rate * m_hat / (v_hat.sqrt() + Self::EPSILON);
            }
        }
    }
}
