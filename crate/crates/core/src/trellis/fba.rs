use rayon::prelude::*;

use super::aux::AuxChannel;
use crate::detector::{AppDetector, AppMatrix};
use crate::error::{Error, Result};
use crate::sicframe::StageView;
use crate::signalchain::Block;
use crate::util::{log_sum_exp, mean_and_jackknife_stderr};

/// APPs for the requested rows plus the log-likelihood `ln q(y)` under the
/// priors implied by the pins.
#[derive(Clone, Debug)]
pub struct FbaOutput {
    pub apps: AppMatrix,
    pub log_likelihood: f64,
}

struct Trellis<'a> {
    aux: &'a AuxChannel,
    y: &'a [f64],
    n: usize,
    steps: usize,
    priors: Vec<f64>,
    muls: u64,
}

impl<'a> Trellis<'a> {
    fn new(aux: &'a AuxChannel, y: &'a [f64], pins: &[Option<usize>]) -> Result<Self> {
        let n = pins.len();
        if n <= aux.memory() {
            return Err(Error::Shape(format!(
                "block of {n} symbols is too short for memory {}",
                aux.memory()
            )));
        }
        if y.len() != n * aux.width() {
            return Err(Error::Shape(format!(
                "{} observations for {n} symbols of width {}",
                y.len(),
                aux.width()
            )));
        }
        if !(aux.noise_variance() > 0.0) {
            return Err(Error::Config("the FBA metric needs a positive noise variance".into()));
        }
        let m = aux.size();
        let steps = n + aux.context().1;
        let working = (steps as u128 + 1) * aux.branches() as u128;
        if working > aux.budget() as u128 {
            return Err(Error::TableBudget {
                needed: working,
                budget: aux.budget(),
            });
        }
        let free = -(m as f64).ln();
        let mut priors = vec![f64::NEG_INFINITY; steps * m];
        for b in 0..steps {
            let row = &mut priors[b * m..(b + 1) * m];
            match pins.get(b) {
                Some(Some(a)) if *a >= m => {
                    return Err(Error::Shape(format!("pinned symbol {a} outside alphabet")))
                }
                Some(Some(a)) => row[*a] = 0.0,
                Some(None) => row.fill(free),
                // guard steps after the block carry a dummy digit 0
                None => row[0] = 0.0,
            }
        }
        Ok(Self {
            aux,
            y,
            n,
            steps,
            priors,
            muls: 0,
        })
    }

    /// Branch metrics of step `b`; zero before the first slot is complete.
    fn gamma(&mut self, b: usize, out: &mut [f64]) {
        let post = self.aux.context().1;
        if b < post {
            out.fill(0.0);
            return;
        }
        let c = b - post;
        let w = self.aux.width();
        let var = self.aux.noise_variance();
        let scale = 0.5 / var;
        let offset = 0.5 * w as f64 * (2.0 * std::f64::consts::PI * var).ln();
        let obs = &self.y[c * w..(c + 1) * w];
        for (br, g) in out.iter_mut().enumerate() {
            let mu = self.aux.means(c, self.n, br);
            let mut d2 = 0.0;
            for (y, m) in obs.iter().zip(mu) {
                let e = y - m;
                d2 += e * e;
            }
            *g = -d2 * scale - offset;
        }
        self.muls += out.len() as u64 * (w as u64 + 1);
    }

    /// Log-domain forward pass; `alpha[b]` is the state metric before step `b`.
    fn forward(&mut self, gammas: &mut [f64]) -> Result<Vec<f64>> {
        let states = self.aux.states();
        let branches = self.aux.branches();
        let m = self.aux.size();
        let mut alpha = vec![f64::NEG_INFINITY; (self.steps + 1) * states];
        alpha[0] = 0.0;
        let mut terms = vec![0.0; m];
        for b in 0..self.steps {
            let gamma = &mut gammas[b * branches..(b + 1) * branches];
            self.gamma(b, gamma);
            let (done, rest) = alpha.split_at_mut((b + 1) * states);
            let prev = &done[b * states..];
            let next = &mut rest[..states];
            let prior = &self.priors[b * m..(b + 1) * m];
            for (ns, slot) in next.iter_mut().enumerate() {
                for (k, t) in terms.iter_mut().enumerate() {
                    let br = ns + k * states;
                    *t = prev[br / m] + prior[br % m] + gamma[br];
                }
                *slot = log_sum_exp(&terms);
            }
            if next.iter().all(|v| *v == f64::NEG_INFINITY) {
                return Err(Error::InconsistentPinning { step: b });
            }
        }
        Ok(alpha)
    }
}

/// Full forward-backward pass with APPs for the 1-based serial `targets`.
pub fn fba_posteriors(
    aux: &AuxChannel,
    y: &[f64],
    pins: &[Option<usize>],
    targets: &[usize],
) -> Result<FbaOutput> {
    let mut tr = Trellis::new(aux, y, pins)?;
    let states = aux.states();
    let branches = aux.branches();
    let m = aux.size();
    let mut gammas = vec![0.0; tr.steps * branches];
    let alpha = tr.forward(&mut gammas)?;
    let log_likelihood = log_sum_exp(&alpha[tr.steps * states..]);

    let mut row_of = vec![usize::MAX; tr.n];
    for (r, &k) in targets.iter().enumerate() {
        if k == 0 || k > tr.n {
            return Err(Error::Shape(format!("target {k} outside block of {}", tr.n)));
        }
        row_of[k - 1] = r;
    }
    let mut logs = vec![f64::NEG_INFINITY; targets.len() * m];
    let mut beta = vec![0.0; states];
    let mut prev_beta = vec![0.0; states];
    for b in (0..tr.steps).rev() {
        let gamma = &gammas[b * branches..(b + 1) * branches];
        let prior = &tr.priors[b * m..(b + 1) * m];
        let a_prev = &alpha[b * states..(b + 1) * states];
        if b < tr.n && row_of[b] != usize::MAX {
            let row = &mut logs[row_of[b] * m..(row_of[b] + 1) * m];
            for br in 0..branches {
                let v = a_prev[br / m] + prior[br % m] + gamma[br] + beta[br % states];
                row[br % m] = crate::util::log_add_exp(row[br % m], v);
            }
        }
        for (s, out) in prev_beta.iter_mut().enumerate() {
            let mut acc = f64::NEG_INFINITY;
            for a in 0..m {
                let br = s * m + a;
                acc = crate::util::log_add_exp(acc, prior[a] + gamma[br] + beta[br % states]);
            }
            *out = acc;
        }
        std::mem::swap(&mut beta, &mut prev_beta);
    }
    let muls = tr.muls;
    let apps = AppMatrix::from_log_weights(targets.to_vec(), m, logs)?.with_multiplications(muls);
    Ok(FbaOutput {
        apps,
        log_likelihood,
    })
}

/// APPs of the current stage's targets with earlier stages pinned.
pub fn fba_app(aux: &AuxChannel, y: &[f64], view: &StageView) -> Result<AppMatrix> {
    Ok(fba_posteriors(aux, y, view.pins(), &view.targets())?.apps)
}

/// `ln q(y)` under the pins (free symbols uniform) by the forward pass alone.
pub fn log_likelihood(aux: &AuxChannel, y: &[f64], pins: &[Option<usize>]) -> Result<f64> {
    let mut tr = Trellis::new(aux, y, pins)?;
    let mut gammas = vec![0.0; tr.steps * aux.branches()];
    let alpha = tr.forward(&mut gammas)?;
    Ok(log_sum_exp(&alpha[tr.steps * aux.states()..]))
}

/// Monte-Carlo estimate with its standard error, in bits per channel use.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UbEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Auxiliary-channel upper bound `(1/n) E[log2 q(y|x) - log2 q(y)]`.
pub fn fba_ub(aux: &AuxChannel, blocks: &[Block]) -> Result<UbEstimate> {
    if blocks.is_empty() {
        return Err(Error::Shape("fba_ub needs at least one block".into()));
    }
    let per_block: Vec<f64> = blocks
        .par_iter()
        .map(|blk| {
            let pinned: Vec<Option<usize>> = blk.x.iter().map(|&a| Some(a)).collect();
            let free = vec![None; blk.len()];
            let cond = log_likelihood(aux, &blk.y, &pinned)?;
            let marg = log_likelihood(aux, &blk.y, &free)?;
            Ok((cond - marg) / (blk.len() as f64 * std::f64::consts::LN_2))
        })
        .collect::<Result<_>>()?;
    let (value, stderr) = mean_and_jackknife_stderr(&per_block);
    Ok(UbEstimate { value, stderr })
}

/// Real multiplications per APP: the branch metrics of all `n` slots,
/// `|A|^(Ñ+1) (width + 1)` each, shared by the `n / S` APPs of a stage.
pub fn count_fba_multiplications(aux: &AuxChannel, n: usize, stages: usize) -> u64 {
    let total = n as u64 * aux.branches() as u64 * (aux.width() as u64 + 1);
    total / (n / stages) as u64
}

/// [`count_fba_multiplications`] without building the tables, for `S | n`.
pub fn fba_multiplications_per_app(size: usize, memory: usize, width: usize, stages: usize) -> u64 {
    stages as u64 * (size as u64).pow(memory as u32 + 1) * (width as u64 + 1)
}

/// [`AppDetector`] running the FBA on one auxiliary channel.
#[derive(Clone, Debug)]
pub struct FbaDetector {
    pub aux: AuxChannel,
}

impl AppDetector for FbaDetector {
    fn id(&self) -> String {
        format!("fba-N{}", self.aux.memory())
    }

    fn detect(&self, block: &Block, view: &StageView, _seed: u64) -> Result<AppMatrix> {
        fba_app(&self.aux, &block.y, view)
    }

    fn multiplications_per_app(&self, view: &StageView) -> u64 {
        count_fba_multiplications(&self.aux, view.plan().block_len(), view.plan().stages())
    }
}
