use super::inputs::{assemble_segment, InputTensor};
use super::shape::{count_rnn_multiplications, Direction, ParamLayout, RnnModel, RnnShape};
use crate::detector::{AppDetector, AppMatrix};
use crate::error::{Error, Result};
use crate::sicframe::StageView;
use crate::signalchain::Block;

/// Everything the backward pass needs from one forward pass.
#[derive(Clone, Debug)]
pub struct Activations {
    /// Per recurrent layer, the concatenated states `r^{i+1}_τ = [h_τ; g_τ]`,
    /// `steps x ℓ_{i+1}`.
    pub hidden: Vec<Vec<f64>>,
    /// Normalized log-probabilities (natural log), one row per `t`.
    pub log_probs: Vec<f64>,
    pub muls: u64,
}

/// `out = W x + b` for a row-major `W`.
#[inline]
fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        *o = b[r] + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
    }
}

#[inline]
fn affine_add(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        *o += b[r] + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
    }
}

/// Forward pass on a flat parameter vector.
pub fn forward_cached(shape: &RnnShape, params: &[f64], inputs: &InputTensor) -> Result<Activations> {
    let layout = ParamLayout::new(shape);
    if params.len() != layout.total {
        return Err(Error::Shape(format!("{} parameters, layout needs {}", params.len(), layout.total)));
    }
    if inputs.width != shape.dims[0] || inputs.phases != shape.phases() {
        return Err(Error::Shape(format!(
            "inputs of width {} with {} phases for a network expecting {} and {}",
            inputs.width,
            inputs.phases,
            shape.dims[0],
            shape.phases()
        )));
    }
    let phases = shape.phases();
    let steps = inputs.steps();
    let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(shape.recurrent_layers());
    let mut muls = 0u64;
    for i in 0..shape.recurrent_layers() {
        let (l_in, l_out, h) = (shape.dims[i], shape.dims[i + 1], shape.half(i));
        let mut out = vec![0.0; steps * l_out];
        let zeros = vec![0.0; h];
        let mut buf = vec![0.0; h];
        let input = |tau: usize| -> &[f64] {
            if i == 0 {
                inputs.step(tau)
            } else {
                &hidden[i - 1][tau * l_in..(tau + 1) * l_in]
            }
        };
        for tau in 0..steps {
            let p = tau % phases;
            let c = layout.cell(i, Direction::Forward, p);
            let s = layout.cell(i, Direction::Forward, (p + phases - 1) % phases);
            affine(&params[c.w_in..c.b_in], &params[c.b_in..c.w_state], input(tau), &mut buf);
            let prev = if tau == 0 { &zeros[..] } else { &out[(tau - 1) * l_out..(tau - 1) * l_out + h] };
            affine_add(&params[s.w_state..s.b_state], &params[s.b_state..s.b_state + h], prev, &mut buf);
            for (o, v) in out[tau * l_out..tau * l_out + h].iter_mut().zip(&buf) {
                *o = v.max(0.0);
            }
        }
        for tau in (0..steps).rev() {
            let p = tau % phases;
            let c = layout.cell(i, Direction::Backward, p);
            let s = layout.cell(i, Direction::Backward, (p + 1) % phases);
            affine(&params[c.w_in..c.b_in], &params[c.b_in..c.w_state], input(tau), &mut buf);
            let prev = if tau + 1 == steps {
                &zeros[..]
            } else {
                &out[(tau + 1) * l_out + h..(tau + 2) * l_out]
            };
            affine_add(&params[s.w_state..s.b_state], &params[s.b_state..s.b_state + h], prev, &mut buf);
            for (o, v) in out[tau * l_out + h..(tau + 1) * l_out].iter_mut().zip(&buf) {
                *o = v.max(0.0);
            }
        }
        muls += steps as u64 * 2 * (h * l_in + h * h) as u64;
        hidden.push(out);
    }

    let m = shape.alphabet_size;
    let l_last = *shape.dims.last().unwrap();
    let last = hidden.last().unwrap();
    let mut log_probs = vec![0.0; inputs.count * m];
    for t in 0..inputs.count {
        let tau = t * phases;
        let z = &mut log_probs[t * m..(t + 1) * m];
        affine(
            &params[layout.w_out..layout.b_out],
            &params[layout.b_out..layout.total],
            &last[tau * l_last..(tau + 1) * l_last],
            z,
        );
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() || z.iter().any(|v| v.is_nan()) {
            return Err(Error::Numeric(format!("non-finite network output at step {tau}")));
        }
        let norm = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        z.iter_mut().for_each(|v| *v -= norm);
    }
    muls += (inputs.count * m * l_last) as u64;
    Ok(Activations {
        hidden,
        log_probs,
        muls,
    })
}

/// APP rows for the segment covered by `inputs`.
pub fn forward(model: &RnnModel, inputs: &InputTensor, targets: Vec<usize>) -> Result<AppMatrix> {
    let act = forward_cached(&model.shape, &model.params, inputs)?;
    Ok(AppMatrix::from_log_weights(targets, model.shape.alphabet_size, act.log_probs)?.with_multiplications(act.muls))
}

/// One network per SIC stage (index `s - 1`).
#[derive(Clone, Debug)]
pub struct RnnDetector {
    pub models: Vec<RnnModel>,
}

impl RnnDetector {
    fn model(&self, view: &StageView) -> Result<&RnnModel> {
        let model = self
            .models
            .get(view.stage() - 1)
            .ok_or_else(|| Error::Missing(format!("no network for stage {}", view.stage())))?;
        if model.shape.stage != view.stage() || model.shape.stages != view.plan().stages() {
            return Err(Error::Shape(format!(
                "network slot {} holds stage {}/{}",
                view.stage(),
                model.shape.stage,
                model.shape.stages
            )));
        }
        Ok(model)
    }
}

impl AppDetector for RnnDetector {
    fn id(&self) -> String {
        "rnn".into()
    }

    fn detect(&self, block: &Block, view: &StageView, _seed: u64) -> Result<AppMatrix> {
        let model = self.model(view)?;
        let per_stage = view.plan().per_stage();
        let seg = if model.segment == 0 { per_stage } else { model.segment };
        let m = model.shape.alphabet_size;
        let mut logs = Vec::with_capacity(per_stage * m);
        let mut muls = 0;
        let mut t = 1;
        while t <= per_stage {
            let count = seg.min(per_stage - t + 1);
            let inputs = assemble_segment(&block.y, view, &model.shape, &model.encoding, t, count)?;
            let act = forward_cached(&model.shape, &model.params, &inputs)?;
            logs.extend_from_slice(&act.log_probs);
            muls += act.muls;
            t += count;
        }
        Ok(AppMatrix::from_log_weights(view.targets(), m, logs)?.with_multiplications(muls))
    }

    fn multiplications_per_app(&self, view: &StageView) -> u64 {
        match self.model(view) {
            Ok(m) => count_rnn_multiplications(&m.shape),
            Err(_) => 0,
        }
    }
}
