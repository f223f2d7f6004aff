//! LSTM cell with a linear head and exact backpropagation through time.
//!
//! Gate pre-activations are stacked `[input, forget, candidate, output]`,
//! each block `hidden` long.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ForecastError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecasterParams {
    pub hidden: usize,
    /// Input weights, `4H` (input size is 1).
    pub w_x: Vec<f64>,
    /// Recurrent weights, `4H x H` row-major.
    pub w_h: Vec<f64>,
    /// Gate biases, `4H`.
    pub b: Vec<f64>,
    /// Output head weights, `H`.
    pub w_out: Vec<f64>,
    pub b_out: f64,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl ForecasterParams {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            hidden,
            w_x: vec![0.0; 4 * hidden],
            w_h: vec![0.0; 4 * hidden * hidden],
            b: vec![0.0; 4 * hidden],
            w_out: vec![0.0; hidden],
            b_out: 0.0,
        }
    }

    /// Uniform in `±1/sqrt(H)`, forget-gate bias 1.
    pub fn init(hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-bound..bound)).collect() };
        let w_x = draw(4 * hidden);
        let w_h = draw(4 * hidden * hidden);
        let mut b = draw(4 * hidden);
        let w_out = draw(hidden);
        b[hidden..2 * hidden].iter_mut().for_each(|x| *x = 1.0);
        let b_out = rng.random_range(-bound..bound);
        Self {
            hidden,
            w_x,
            w_h,
            b,
            w_out,
            b_out,
        }
    }

    pub fn n_params(&self) -> usize {
        self.w_x.len() + self.w_h.len() + self.b.len() + self.w_out.len() + 1
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        v.extend_from_slice(&self.w_x);
        v.extend_from_slice(&self.w_h);
        v.extend_from_slice(&self.b);
        v.extend_from_slice(&self.w_out);
        v.push(self.b_out);
        v
    }

    pub fn unflatten(hidden: usize, flat: &[f64]) -> Self {
        let h4 = 4 * hidden;
        let (w_x, rest) = flat.split_at(h4);
        let (w_h, rest) = rest.split_at(h4 * hidden);
        let (b, rest) = rest.split_at(h4);
        let (w_out, rest) = rest.split_at(hidden);
        assert_eq!(rest.len(), 1, "flat parameter length mismatch");
        Self {
            hidden,
            w_x: w_x.to_vec(),
            w_h: w_h.to_vec(),
            b: b.to_vec(),
            w_out: w_out.to_vec(),
            b_out: rest[0],
        }
    }

    /// Squared norm of the weights (biases excluded).
    pub fn weight_norm_sq(&self) -> f64 {
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        sq(&self.w_x) + sq(&self.w_h) + sq(&self.w_out)
    }

    pub fn check_shapes(&self) -> Result<(), ForecastError> {
        let h = self.hidden;
        let ok = h > 0
            && self.w_x.len() == 4 * h
            && self.w_h.len() == 4 * h * h
            && self.b.len() == 4 * h
            && self.w_out.len() == h;
        if ok {
            Ok(())
        } else {
            Err(ForecastError::Dimension(format!("parameter shapes inconsistent with hidden size {h}")))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForwardMode {
    Eval,
    /// Inverted dropout on the final hidden state, mask drawn from `seed`.
    Train { dropout: f64, seed: u64 },
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub prediction: f64,
    /// `L x H` hidden states, oldest step first.
    pub hidden_trace: Vec<Vec<f64>>,
    cells: Vec<Vec<f64>>,
    /// Post-activation gates per step, stacked like the pre-activations.
    gates: Vec<Vec<f64>>,
    mask: Option<Vec<f64>>,
    inputs: Vec<f64>,
}

fn dropout_mask(hidden: usize, rate: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep = 1.0 - rate;
    (0..hidden)
        .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect()
}

/// Run the recurrence over `window` from zero state and apply the head.
pub fn lstm_forward(params: &ForecasterParams, window: &[f64], mode: ForwardMode) -> Result<ForwardPass, ForecastError> {
    params.check_shapes()?;
    if window.is_empty() {
        return Err(ForecastError::Dimension("empty window".into()));
    }
    if let Some(pos) = window.iter().position(|x| !x.is_finite()) {
        return Err(ForecastError::NonFiniteInput(pos));
    }
    Ok(forward_unchecked(params, window, mode))
}

fn forward_unchecked(p: &ForecasterParams, window: &[f64], mode: ForwardMode) -> ForwardPass {
    let h = p.hidden;
    let mut hidden_trace = Vec::with_capacity(window.len());
    let mut cells = Vec::with_capacity(window.len());
    let mut gates = Vec::with_capacity(window.len());
    let mut h_prev = vec![0.0; h];
    let mut c_prev = vec![0.0; h];
    let mut z = vec![0.0; 4 * h];
    for &x in window {
        for (r, zr) in z.iter_mut().enumerate() {
            let row = &p.w_h[r * h..(r + 1) * h];
            let rec: f64 = row.iter().zip(&h_prev).map(|(w, hp)| w * hp).sum();
            *zr = p.w_x[r] * x + rec + p.b[r];
        }
        let mut act = vec![0.0; 4 * h];
        let mut c = vec![0.0; h];
        let mut hn = vec![0.0; h];
        for j in 0..h {
            let i_g = sigmoid(z[j]);
            let f_g = sigmoid(z[h + j]);
            let g_g = z[2 * h + j].tanh();
            let o_g = sigmoid(z[3 * h + j]);
            act[j] = i_g;
            act[h + j] = f_g;
            act[2 * h + j] = g_g;
            act[3 * h + j] = o_g;
            c[j] = f_g * c_prev[j] + i_g * g_g;
            hn[j] = o_g * c[j].tanh();
        }
        gates.push(act);
        cells.push(c.clone());
        hidden_trace.push(hn.clone());
        h_prev = hn;
        c_prev = c;
    }
    let mask = match mode {
        ForwardMode::Train { dropout, seed } if dropout > 0.0 => Some(dropout_mask(h, dropout, seed)),
        _ => None,
    };
    let last = hidden_trace.last().expect("non-empty window");
    let head_in: f64 = match &mask {
        Some(m) => last.iter().zip(m).zip(&p.w_out).map(|((hv, mv), w)| hv * mv * w).sum(),
        None => last.iter().zip(&p.w_out).map(|(hv, w)| hv * w).sum(),
    };
    ForwardPass {
        prediction: head_in + p.b_out,
        hidden_trace,
        cells,
        gates,
        mask,
        inputs: window.to_vec(),
    }
}

/// Accumulate `d prediction` back through time into `grads`.
fn backward(p: &ForecasterParams, fwd: &ForwardPass, dpred: f64, grads: &mut ForecasterParams) {
    let h = p.hidden;
    let steps = fwd.inputs.len();
    let last = &fwd.hidden_trace[steps - 1];
    let mut dh = vec![0.0; h];
    for j in 0..h {
        let m = fwd.mask.as_ref().map_or(1.0, |m| m[j]);
        grads.w_out[j] += dpred * last[j] * m;
        dh[j] = dpred * p.w_out[j] * m;
    }
    grads.b_out += dpred;

    let zero = vec![0.0; h];
    let mut dc = vec![0.0; h];
    let mut dz = vec![0.0; 4 * h];
    for t in (0..steps).rev() {
        let act = &fwd.gates[t];
        let c = &fwd.cells[t];
        let c_prev = if t > 0 { &fwd.cells[t - 1] } else { &zero };
        let h_prev = if t > 0 { &fwd.hidden_trace[t - 1] } else { &zero };
        for j in 0..h {
            let (i_g, f_g, g_g, o_g) = (act[j], act[h + j], act[2 * h + j], act[3 * h + j]);
            let tc = c[j].tanh();
            let d_o = dh[j] * tc;
            dc[j] += dh[j] * o_g * (1.0 - tc * tc);
            let d_i = dc[j] * g_g;
            let d_g = dc[j] * i_g;
            let d_f = dc[j] * c_prev[j];
            dz[j] = d_i * i_g * (1.0 - i_g);
            dz[h + j] = d_f * f_g * (1.0 - f_g);
            dz[2 * h + j] = d_g * (1.0 - g_g * g_g);
            dz[3 * h + j] = d_o * o_g * (1.0 - o_g);
            dc[j] *= f_g;
        }
        let x = fwd.inputs[t];
        dh.iter_mut().for_each(|v| *v = 0.0);
        for (r, &dzr) in dz.iter().enumerate() {
            grads.w_x[r] += dzr * x;
            grads.b[r] += dzr;
            let row = r * h;
            for k in 0..h {
                grads.w_h[row + k] += dzr * h_prev[k];
                dh[k] += p.w_h[row + k] * dzr;
            }
        }
    }
}

/// Mean squared error over the batch plus `decay * |weights|^2`, and its
/// exact gradient. With `dropout_seed` set and a positive dropout rate, each
/// sample gets its own mask derived from the seed and its batch position.
pub fn loss_and_gradients(
    params: &ForecasterParams,
    batch: &[(&[f64], f64)],
    weight_decay: f64,
    dropout: f64,
    dropout_seed: Option<u64>,
) -> Result<(f64, ForecasterParams), ForecastError> {
    params.check_shapes()?;
    if batch.is_empty() {
        return Err(ForecastError::EmptyBatch);
    }
    let n = batch.len() as f64;
    let mut grads = ForecasterParams::zeros(params.hidden);
    let mut mse = 0.0;
    for (k, (window, target)) in batch.iter().enumerate() {
        let mode = match dropout_seed {
            Some(seed) if dropout > 0.0 => ForwardMode::Train {
                dropout,
                seed: crate::seed::derive(seed, k as u64),
            },
            _ => ForwardMode::Eval,
        };
        let fwd = lstm_forward(params, window, mode)?;
        let err = fwd.prediction - target;
        mse += err * err / n;
        backward(params, &fwd, 2.0 * err / n, &mut grads);
    }
    let loss = mse + weight_decay * params.weight_norm_sq();
    if !loss.is_finite() {
        return Err(ForecastError::Diverged { epoch: 0 });
    }
    if weight_decay != 0.0 {
        let add = |g: &mut [f64], w: &[f64]| g.iter_mut().zip(w).for_each(|(g, w)| *g += 2.0 * weight_decay * w);
        add(&mut grads.w_x, &params.w_x);
        add(&mut grads.w_h, &params.w_h);
        add(&mut grads.w_out, &params.w_out);
    }
    Ok((loss, grads))
}
