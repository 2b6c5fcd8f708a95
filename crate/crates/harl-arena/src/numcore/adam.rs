//! Bias-corrected Adam, over [`MlpParams`]-shaped bags and flat vectors.

use crate::codec::{Reader, Writer};
use crate::error::{ArenaError, Result};
use crate::numcore::mlp::MlpParams;

/// Adam moments shaped like a network's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: MlpParams,
    pub v: MlpParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &MlpParams) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
        }
    }

    pub fn reset(&mut self) {
        self.m.scale(0.0);
        self.v.scale(0.0);
        self.step = 0;
    }

    pub fn write(&self, w: &mut Writer) {
        self.m.write(w);
        self.v.write(w);
        w.put_u64(self.step);
    }

    pub fn read(r: &mut Reader) -> Result<AdamState> {
        let m = MlpParams::read(r)?;
        let v = MlpParams::read(r)?;
        let step = r.get_u64()?;
        Ok(AdamState { m, v, step })
    }
}

/// Adam moments for a flat parameter vector (e.g. a policy's log-std).
#[derive(Clone, Debug, PartialEq)]
pub struct AdamVec {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamVec {
    pub fn new(len: usize) -> Self {
        AdamVec {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn reset(&mut self) {
        self.m.iter_mut().for_each(|x| *x = 0.0);
        self.v.iter_mut().for_each(|x| *x = 0.0);
        self.step = 0;
    }

    pub fn write(&self, w: &mut Writer) {
        w.put_f64s(&self.m);
        w.put_f64s(&self.v);
        w.put_u64(self.step);
    }

    pub fn read(r: &mut Reader) -> Result<AdamVec> {
        let m = r.get_f64s()?;
        let v = r.get_f64s()?;
        let step = r.get_u64()?;
        Ok(AdamVec { m, v, step })
    }
}

fn adam_apply(
    param: &mut f64,
    grad: f64,
    m: &mut f64,
    v: &mut f64,
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    *m = beta1 * *m + (1.0 - beta1) * grad;
    *v = beta2 * *v + (1.0 - beta2) * grad * grad;
    let m_hat = *m / (1.0 - beta1.powi(t as i32));
    let v_hat = *v / (1.0 - beta2.powi(t as i32));
    *param -= lr * m_hat / (v_hat.sqrt() + eps);
}

/// One bias-corrected Adam update over a full parameter bag. Increments the
/// step counter by one. Errors on a non-finite gradient entry, identifying
/// the parameter by layer and flat offset.
pub fn adam_step(
    params: &mut MlpParams,
    grads: &MlpParams,
    state: &mut AdamState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) -> Result<()> {
    if lr <= 0.0 {
        return Err(ArenaError::Contract("adam learning rate must be positive".into()));
    }
    if params.layers.len() != grads.layers.len() {
        return Err(ArenaError::shape(
            "adam_step grads",
            params.layers.len(),
            grads.layers.len(),
        ));
    }
    for (k, (pl, gl)) in params.layers.iter().zip(grads.layers.iter()).enumerate() {
        if pl.in_dim != gl.in_dim || pl.out_dim != gl.out_dim {
            return Err(ArenaError::shape(
                format!("adam_step layer {k}"),
                pl.weights.len(),
                gl.weights.len(),
            ));
        }
        for (idx, g) in gl.weights.iter().chain(gl.bias.iter()).enumerate() {
            if !g.is_finite() {
                return Err(ArenaError::non_finite(format!(
                    "gradient at layer {k} offset {idx}"
                )));
            }
        }
    }

    state.step += 1;
    let t = state.step;
    for k in 0..params.layers.len() {
        let pl = &mut params.layers[k];
        let gl = &grads.layers[k];
        let ml = &mut state.m.layers[k];
        let vl = &mut state.v.layers[k];
        for i in 0..pl.weights.len() {
            adam_apply(
                &mut pl.weights[i],
                gl.weights[i],
                &mut ml.weights[i],
                &mut vl.weights[i],
                t,
                lr,
                beta1,
                beta2,
                eps,
            );
        }
        for i in 0..pl.bias.len() {
            adam_apply(
                &mut pl.bias[i],
                gl.bias[i],
                &mut ml.bias[i],
                &mut vl.bias[i],
                t,
                lr,
                beta1,
                beta2,
                eps,
            );
        }
    }
    Ok(())
}

/// Adam update over a flat vector parameter.
pub fn adam_step_vec(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamVec,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(ArenaError::shape("adam_step_vec grads", params.len(), grads.len()));
    }
    for (idx, g) in grads.iter().enumerate() {
        if !g.is_finite() {
            return Err(ArenaError::non_finite(format!("gradient at offset {idx}")));
        }
    }
    state.step += 1;
    let t = state.step;
    for i in 0..params.len() {
        adam_apply(
            &mut params[i],
            grads[i],
            &mut state.m[i],
            &mut state.v[i],
            t,
            lr,
            beta1,
            beta2,
            eps,
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::mlp::Linear;

    fn scalar_net(value: f64) -> MlpParams {
        let mut layer = Linear::zeros(1, 1);
        layer.weights[0] = value;
        MlpParams::new(vec![layer]).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut net = scalar_net(0.75);
        let grads = net.zeros_like();
        let mut state = AdamState::new(&net);
        adam_step(&mut net, &grads, &mut state, 0.1, 0.9, 0.999, 1e-8).unwrap();
        assert_eq!(net.layers[0].weights[0], 0.75);
        assert_eq!(net.layers[0].bias[0], 0.0);
        assert_eq!(state.step, 1);
    }

    /// Hand-evaluated first step: m = (1-b1) g, v = (1-b2) g^2, bias
    /// corrections cancel to g/|g| up to eps, so the update is
    /// -lr * g / (|g| + eps') ~= -lr * sign(g).
    #[test]
    fn first_step_moves_by_lr_sign() {
        let mut net = scalar_net(0.0);
        let mut grads = net.zeros_like();
        grads.layers[0].weights[0] = 0.5;
        let mut state = AdamState::new(&net);
        adam_step(&mut net, &grads, &mut state, 0.1, 0.9, 0.999, 1e-8).unwrap();
        let got = net.layers[0].weights[0];
        assert!((got - (-0.1)).abs() < 1e-7, "got {got}");
    }

    /// Independent scalar recurrence oracle for two identical steps.
    #[test]
    fn matches_scalar_recurrence_trace() {
        let (lr, b1, b2, eps) = (0.05, 0.9_f64, 0.999_f64, 1e-8);
        let g = -1.25;

        let mut param_oracle = 2.0;
        let (mut m, mut v) = (0.0, 0.0);
        for t in 1..=2u64 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let m_hat = m / (1.0 - b1.powi(t as i32));
            let v_hat: f64 = v / (1.0 - b2.powi(t as i32));
            param_oracle -= lr * m_hat / (v_hat.sqrt() + eps);
        }

        let mut net = scalar_net(2.0);
        let mut grads = net.zeros_like();
        grads.layers[0].weights[0] = g;
        let mut state = AdamState::new(&net);
        adam_step(&mut net, &grads, &mut state, lr, b1, b2, eps).unwrap();
        adam_step(&mut net, &grads, &mut state, lr, b1, b2, eps).unwrap();

        assert!((net.layers[0].weights[0] - param_oracle).abs() < 1e-15);
        assert_eq!(state.step, 2);
    }

    #[test]
    fn non_finite_gradient_is_rejected_with_location() {
        let mut net = scalar_net(1.0);
        let mut grads = net.zeros_like();
        grads.layers[0].bias[0] = f64::NAN;
        let mut state = AdamState::new(&net);
        let err = adam_step(&mut net, &grads, &mut state, 0.1, 0.9, 0.999, 1e-8).unwrap_err();
        assert!(err.to_string().contains("layer 0"), "{err}");
        // failed update must not advance the step counter
        assert_eq!(state.step, 0);
    }

    #[test]
    fn params_change_iff_gradient_nonzero() {
        let mut net = scalar_net(0.3);
        let mut grads = net.zeros_like();
        grads.layers[0].weights[0] = 1e-9;
        let before = net.clone();
        let mut state = AdamState::new(&net);
        adam_step(&mut net, &grads, &mut state, 0.1, 0.9, 0.999, 1e-8).unwrap();
        assert_ne!(before.layers[0].weights[0], net.layers[0].weights[0]);
    }
}
