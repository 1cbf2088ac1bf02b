use crate::error::{check_len, Error, Result};

/// Bias-corrected adaptive moment optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// One descent step: `params -= lr * m_hat / (sqrt(v_hat) + eps)`.
    ///
    /// A non-finite gradient leaves both the parameters and the state untouched.
    pub fn descend(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        self.apply(params, grad, -1.0)
    }

    /// One ascent step on an objective whose gradient is `grad`.
    pub fn ascend(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        self.apply(params, grad, 1.0)
    }

    fn apply(&mut self, params: &mut [f64], grad: &[f64], sign: f64) -> Result<()> {
        check_len("optimizer parameters", self.m.len(), params.len())?;
        check_len("gradient", self.m.len(), grad.len())?;
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient entry {i}")));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p += sign * self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}
