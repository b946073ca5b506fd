use super::{Network, Scalar};
use crate::error::NetError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam optimizer state: step counter plus first and second moment buffers
/// shaped like the network.
#[derive(Debug, Clone)]
pub struct Adam<T: Scalar = f32> {
    pub config: AdamConfig,
    t: u64,
    m: Network<T>,
    v: Network<T>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(net: &Network<T>, config: AdamConfig) -> Self {
        Adam {
            config,
            t: 0,
            m: Network::zeros(*net.arch()),
            v: Network::zeros(*net.arch()),
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One bias-corrected Adam update of `net` with learning rate `lr`.
    /// Rejects non-finite gradients without touching any state.
    pub fn step(&mut self, net: &mut Network<T>, grads: &Network<T>, lr: f64) -> Result<(), NetError> {
        assert!(lr > 0.0, "learning rate must be positive");
        if grads.arch() != net.arch() {
            return Err(NetError::Shape {
                expected: format!("{:?}", net.arch()),
                found: format!("{:?}", grads.arch()),
            });
        }
        if !grads.all_finite() {
            return Err(NetError::Divergence { step: self.t + 1 });
        }
        self.t += 1;
        let c = self.config;
        let cast = |x: f64| T::from(x).unwrap();
        let (b1, b2) = (cast(c.beta1), cast(c.beta2));
        let correct1 = cast(1.0 - c.beta1.powi(self.t as i32));
        let correct2 = cast(1.0 - c.beta2.powi(self.t as i32));
        let (lr, eps) = (cast(lr), cast(c.eps));
        let one = T::one();

        let params = net.param_slices_mut();
        let moments = self.m.param_slices_mut().zip(self.v.param_slices_mut());
        for ((p, g), (m, v)) in params.zip(grads.param_slices()).zip(moments) {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (one - b1) * g[i];
                v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                let m_hat = m[i] / correct1;
                let v_hat = v[i] / correct2;
                p[i] = p[i] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
