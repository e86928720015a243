use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rnneq::{forward_cached, Direction, InputTensor, ParamLayout, RnnShape};

/// Probabilities below this are clamped in the loss.
pub const PROB_FLOOR: f64 = 1e-30;

/// One training string: unrolled inputs and the stage-`s` symbol per `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    pub inputs: InputTensor,
    pub labels: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossValue {
    /// Mean cross-entropy in bits per target symbol.
    pub bits: f64,
    /// Targets whose probability hit [`PROB_FLOOR`].
    pub clamps: usize,
}

/// Gradient of the loss, laid out like the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    pub values: Vec<f64>,
}

impl GradientSet {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

fn sequence_terms(shape: &RnnShape, log_probs: &[f64], labels: &[usize]) -> (f64, usize) {
    let m = shape.alphabet_size;
    let floor = PROB_FLOOR.ln();
    let mut nats = 0.0;
    let mut clamps = 0;
    for (t, &a) in labels.iter().enumerate() {
        let lp = log_probs[t * m + a];
        if lp < floor {
            clamps += 1;
            nats -= floor;
        } else {
            nats -= lp;
        }
    }
    (nats / std::f64::consts::LN_2 / labels.len() as f64, clamps)
}

fn check_batch(shape: &RnnShape, batch: &[Sequence]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Shape("empty training batch".into()));
    }
    for s in batch {
        if s.labels.len() != s.inputs.count {
            return Err(Error::Shape(format!("{} labels for {} targets", s.labels.len(), s.inputs.count)));
        }
        if let Some(&a) = s.labels.iter().find(|&&a| a >= shape.alphabet_size) {
            return Err(Error::Shape(format!("label {a} outside alphabet")));
        }
    }
    Ok(())
}

/// `-(1/N) Σ_t log2 Q(v_t)` averaged over the batch.
pub fn loss(shape: &RnnShape, params: &[f64], batch: &[Sequence]) -> Result<LossValue> {
    check_batch(shape, batch)?;
    let parts: Vec<(f64, usize)> = batch
        .par_iter()
        .map(|s| {
            let act = forward_cached(shape, params, &s.inputs)?;
            Ok(sequence_terms(shape, &act.log_probs, &s.labels))
        })
        .collect::<Result<_>>()?;
    Ok(reduce(&parts, batch.len()))
}

fn reduce(parts: &[(f64, usize)], len: usize) -> LossValue {
    let bits = parts.iter().map(|p| p.0).sum::<f64>() / len as f64;
    LossValue {
        bits,
        clamps: parts.iter().map(|p| p.1).sum(),
    }
}

/// `g += a ⊗ b` for a row-major `g`.
#[inline]
fn outer_add(g: &mut [f64], a: &[f64], b: &[f64]) {
    let cols = b.len();
    for (r, &ar) in a.iter().enumerate() {
        if ar == 0.0 {
            continue;
        }
        for (gv, bv) in g[r * cols..(r + 1) * cols].iter_mut().zip(b) {
            *gv += ar * bv;
        }
    }
}

/// `out += Wᵀ a` for a row-major `W` with `a.len()` rows.
#[inline]
fn transpose_mul_add(w: &[f64], a: &[f64], out: &mut [f64]) {
    let cols = out.len();
    for (r, &ar) in a.iter().enumerate() {
        if ar == 0.0 {
            continue;
        }
        for (o, wv) in out.iter_mut().zip(&w[r * cols..(r + 1) * cols]) {
            *o += ar * wv;
        }
    }
}

/// Loss terms and unscaled gradient (sum over targets of `dCE/dθ` in nats)
/// of one sequence.
fn sequence_gradient(shape: &RnnShape, params: &[f64], layout: &ParamLayout, seq: &Sequence) -> Result<(f64, usize, Vec<f64>)> {
    let act = forward_cached(shape, params, &seq.inputs)?;
    let (bits, clamps) = sequence_terms(shape, &act.log_probs, &seq.labels);
    let mut grad = vec![0.0; layout.total];
    let phases = shape.phases();
    let steps = seq.inputs.steps();
    let m = shape.alphabet_size;
    let floor = PROB_FLOOR.ln();
    let layers = shape.recurrent_layers();
    let l_last = shape.dims[layers];

    let mut d_out = vec![0.0; steps * l_last];
    let last = &act.hidden[layers - 1];
    let mut dz = vec![0.0; m];
    for (t, &label) in seq.labels.iter().enumerate() {
        let lp = &act.log_probs[t * m..(t + 1) * m];
        if lp[label] < floor {
            continue;
        }
        for a in 0..m {
            dz[a] = lp[a].exp() - if a == label { 1.0 } else { 0.0 };
        }
        let tau = t * phases;
        let r = &last[tau * l_last..(tau + 1) * l_last];
        outer_add(&mut grad[layout.w_out..layout.b_out], &dz, r);
        grad[layout.b_out..layout.total].iter_mut().zip(&dz).for_each(|(g, d)| *g += d);
        transpose_mul_add(&params[layout.w_out..layout.b_out], &dz, &mut d_out[tau * l_last..(tau + 1) * l_last]);
    }

    for i in (0..layers).rev() {
        let (l_in, l_out, h) = (shape.dims[i], shape.dims[i + 1], shape.half(i));
        let hid = &act.hidden[i];
        let input = |tau: usize| -> &[f64] {
            if i == 0 {
                seq.inputs.step(tau)
            } else {
                &act.hidden[i - 1][tau * l_in..(tau + 1) * l_in]
            }
        };
        let mut d_in = if i > 0 { vec![0.0; steps * l_in] } else { Vec::new() };
        let zeros = vec![0.0; h];
        let mut carry = vec![0.0; h];
        let mut dpre = vec![0.0; h];

        for tau in (0..steps).rev() {
            let p = tau % phases;
            let c = layout.cell(i, Direction::Forward, p);
            let s = layout.cell(i, Direction::Forward, (p + phases - 1) % phases);
            let state = &hid[tau * l_out..tau * l_out + h];
            for k in 0..h {
                let g = d_out[tau * l_out + k] + carry[k];
                dpre[k] = if state[k] > 0.0 { g } else { 0.0 };
            }
            let prev = if tau == 0 { &zeros[..] } else { &hid[(tau - 1) * l_out..(tau - 1) * l_out + h] };
            outer_add(&mut grad[c.w_in..c.b_in], &dpre, input(tau));
            grad[c.b_in..c.w_state].iter_mut().zip(&dpre).for_each(|(g, d)| *g += d);
            outer_add(&mut grad[s.w_state..s.b_state], &dpre, prev);
            grad[s.b_state..s.b_state + h].iter_mut().zip(&dpre).for_each(|(g, d)| *g += d);
            if i > 0 {
                transpose_mul_add(&params[c.w_in..c.b_in], &dpre, &mut d_in[tau * l_in..(tau + 1) * l_in]);
            }
            carry.fill(0.0);
            transpose_mul_add(&params[s.w_state..s.b_state], &dpre, &mut carry);
        }

        carry.fill(0.0);
        for tau in 0..steps {
            let p = tau % phases;
            let c = layout.cell(i, Direction::Backward, p);
            let s = layout.cell(i, Direction::Backward, (p + 1) % phases);
            let state = &hid[tau * l_out + h..(tau + 1) * l_out];
            for k in 0..h {
                let g = d_out[tau * l_out + h + k] + carry[k];
                dpre[k] = if state[k] > 0.0 { g } else { 0.0 };
            }
            let next = if tau + 1 == steps {
                &zeros[..]
            } else {
                &hid[(tau + 1) * l_out + h..(tau + 2) * l_out]
            };
            outer_add(&mut grad[c.w_in..c.b_in], &dpre, input(tau));
            grad[c.b_in..c.w_state].iter_mut().zip(&dpre).for_each(|(g, d)| *g += d);
            outer_add(&mut grad[s.w_state..s.b_state], &dpre, next);
            grad[s.b_state..s.b_state + h].iter_mut().zip(&dpre).for_each(|(g, d)| *g += d);
            if i > 0 {
                transpose_mul_add(&params[c.w_in..c.b_in], &dpre, &mut d_in[tau * l_in..(tau + 1) * l_in]);
            }
            carry.fill(0.0);
            transpose_mul_add(&params[s.w_state..s.b_state], &dpre, &mut carry);
        }
        d_out = d_in;
    }
    Ok((bits, clamps, grad))
}

/// Human-readable location of a flat parameter index.
pub fn parameter_path(shape: &RnnShape, index: usize) -> String {
    let layout = ParamLayout::new(shape);
    if index >= layout.b_out {
        return format!("b_out[{}]", index - layout.b_out);
    }
    if index >= layout.w_out {
        return format!("W_out[{}]", index - layout.w_out);
    }
    for i in 0..shape.recurrent_layers() {
        let h = shape.half(i);
        for (dir, tag) in [(Direction::Forward, "fwd"), (Direction::Backward, "bwd")] {
            for p in 0..shape.phases() {
                let c = layout.cell(i, dir, p);
                let name = if index < c.w_in || index >= c.b_state + h {
                    continue;
                } else if index < c.b_in {
                    "W_in"
                } else if index < c.w_state {
                    "b_in"
                } else if index < c.b_state {
                    "W_state"
                } else {
                    "b_state"
                };
                return format!("layer {} {tag} phase {} {name}", i + 1, shape.stage + p);
            }
        }
    }
    format!("parameter {index}")
}

/// Exact reverse-mode gradient of [`loss`] (bits) and the loss itself.
pub fn backward(shape: &RnnShape, params: &[f64], batch: &[Sequence]) -> Result<(LossValue, GradientSet)> {
    check_batch(shape, batch)?;
    let layout = ParamLayout::new(shape);
    let parts: Vec<(f64, usize, Vec<f64>)> = batch
        .par_iter()
        .map(|s| sequence_gradient(shape, params, &layout, s))
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; layout.total];
    for (seq, (_, _, g)) in batch.iter().zip(&parts) {
        let scale = 1.0 / (std::f64::consts::LN_2 * seq.labels.len() as f64 * batch.len() as f64);
        values.iter_mut().zip(g).for_each(|(v, gi)| *v += gi * scale);
    }
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite gradient at {}", parameter_path(shape, bad))));
    }
    let loss_parts: Vec<(f64, usize)> = parts.iter().map(|p| (p.0, p.1)).collect();
    Ok((reduce(&loss_parts, batch.len()), GradientSet { values }))
}
