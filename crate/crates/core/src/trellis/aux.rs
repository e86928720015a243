use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::signalchain::DiscreteChannel;

/// Default cap on table entries (f64s) held by one auxiliary channel,
/// including the FBA working set.
pub const DEFAULT_TABLE_BUDGET: usize = 1 << 25;

/// Noiseless slot means for every context of `Ñ + 1` symbols.
///
/// A branch index packs the context with the newest symbol in the lowest
/// base-`M` digit. Slots near the block edges, whose context reaches into the
/// guard zeros, use separate compact tables without the guard digits.
#[derive(Clone, Debug)]
pub struct AuxChannel {
    memory: usize,
    size: usize,
    width: usize,
    pre: usize,
    post: usize,
    variance: f64,
    budget: usize,
    interior: Vec<f64>,
    head: Vec<Vec<f64>>,
    tail: Vec<Vec<f64>>,
}

pub fn build_aux_channel(chan: &DiscreteChannel, memory: usize) -> Result<AuxChannel> {
    AuxChannel::build(chan, memory, DEFAULT_TABLE_BUDGET)
}

impl AuxChannel {
    pub fn build(chan: &DiscreteChannel, memory: usize, budget: usize) -> Result<Self> {
        let size = chan.alphabet().size();
        let width = chan.slot_width();
        let branches = (size as u128).checked_pow(memory as u32 + 1).unwrap_or(u128::MAX);
        // interior table plus the head/tail tables (bounded by 2 M^Ñ / (M-1))
        let needed = branches.saturating_mul(width as u128).saturating_mul(2);
        if needed > budget as u128 {
            return Err(Error::TableBudget { needed, budget });
        }
        let branches = branches as usize;
        let (pre, post) = DiscreteChannel::context_split(memory);
        let levels = chan.alphabet().points().to_vec();

        // context positions run oldest (0) to newest (Ñ); digit k sits at position Ñ - k
        let fill = |zero_old: usize, zero_new: usize, digits_of: &(dyn Fn(usize, usize) -> usize + Sync), entries: usize| {
            let mut table = vec![0.0; entries * width];
            table.par_chunks_mut(width).enumerate().for_each(|(ci, out)| {
                let context: Vec<f64> = (0..=memory)
                    .map(|q| {
                        if q < zero_old || q > memory - zero_new {
                            0.0
                        } else {
                            levels[digits_of(ci, memory - q)]
                        }
                    })
                    .collect();
                let mut muls = 0;
                chan.slot_outputs(&context, pre, out, &mut muls);
            });
            table
        };

        let digit = |ci: usize, k: usize| (ci / size.pow(k as u32)) % size;
        let interior = fill(0, 0, &digit, branches);
        let head = (1..=pre)
            .map(|g| fill(g, 0, &digit, size.pow((memory + 1 - g) as u32)))
            .collect();
        let tail = (1..=post)
            .map(|g| {
                let shifted = move |ci: usize, k: usize| (ci / size.pow((k - g) as u32)) % size;
                fill(0, g, &shifted, size.pow((memory + 1 - g) as u32))
            })
            .collect();

        let variance = chan.noise_variance_per_dim();
        Ok(Self {
            memory,
            size,
            width,
            pre,
            post,
            variance,
            budget,
            interior,
            head,
            tail,
        })
    }

    /// Replaces the metric variance (per real dimension).
    pub fn with_noise_variance(mut self, variance: f64) -> Self {
        self.variance = variance;
        self
    }

    /// `Ñ`.
    pub fn memory(&self) -> usize {
        self.memory
    }

    /// `|A|`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Reals per slot.
    pub fn width(&self) -> usize {
        self.width
    }

    /// `(D_pre, D_post)`.
    pub fn context(&self) -> (usize, usize) {
        (self.pre, self.post)
    }

    pub fn noise_variance(&self) -> f64 {
        self.variance
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// `|A|^Ñ`.
    pub fn states(&self) -> usize {
        self.size.pow(self.memory as u32)
    }

    /// `|A|^(Ñ+1)`.
    pub fn branches(&self) -> usize {
        self.states() * self.size
    }

    /// Noiseless outputs of slot `c` (0-based) in a block of `n` symbols for
    /// the context packed in `branch`. Guard digits are ignored.
    #[inline]
    pub fn means(&self, c: usize, n: usize, branch: usize) -> &[f64] {
        let head = self.pre.saturating_sub(c);
        let tail = (c + self.post).saturating_sub(n - 1);
        let (table, ci) = if head > 0 {
            (&self.head[head - 1], branch % self.size.pow((self.memory + 1 - head) as u32))
        } else if tail > 0 {
            (&self.tail[tail - 1], branch / self.size.pow(tail as u32))
        } else {
            (&self.interior, branch)
        };
        &table[ci * self.width..(ci + 1) * self.width]
    }

    /// Packs a context (oldest first, `Ñ + 1` symbol indices) into a branch index.
    pub fn branch_of(&self, context: &[usize]) -> usize {
        debug_assert_eq!(context.len(), self.memory + 1);
        context.iter().fold(0, |acc, &a| acc * self.size + a)
    }
}
