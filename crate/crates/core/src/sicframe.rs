//! Index algebra of successive interference cancellation.
//!
//! A block of `n` symbols is split into `S` stages of `N = n/S` symbols by
//! taking every `S`-th symbol. Stage `s` and in-stage index `t` (both
//! 1-based) map to the serial position `kappa(s, t) = s + (t-1) S`, also
//! 1-based. Vectors are indexed with `kappa - 1`.

use crate::error::{Error, Result};

/// Serial index of symbol `t` of stage `s`.
pub fn kappa(s: usize, t: usize, stages: usize) -> Result<usize> {
    if s == 0 || s > stages {
        return Err(Error::Shape(format!("stage {s} outside 1..={stages}")));
    }
    if t == 0 {
        return Err(Error::Shape("in-stage index t starts at 1".into()));
    }
    Ok(s + (t - 1) * stages)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SicPlan {
    stages: usize,
    block_len: usize,
}

impl SicPlan {
    pub fn new(stages: usize, block_len: usize) -> Result<Self> {
        if stages == 0 {
            return Err(Error::Config("SIC needs at least one stage".into()));
        }
        if block_len == 0 || block_len % stages != 0 {
            return Err(Error::Config(format!(
                "block length {block_len} is not a positive multiple of S = {stages}"
            )));
        }
        Ok(Self { stages, block_len })
    }

    /// `S`.
    pub fn stages(&self) -> usize {
        self.stages
    }

    /// `n`.
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// `N = n / S`.
    pub fn per_stage(&self) -> usize {
        self.block_len / self.stages
    }

    #[inline]
    pub fn kappa(&self, s: usize, t: usize) -> usize {
        debug_assert!(s >= 1 && s <= self.stages && t >= 1);
        s + (t - 1) * self.stages
    }

    /// Stage of a 1-based serial index.
    #[inline]
    pub fn stage_of(&self, serial: usize) -> usize {
        (serial - 1) % self.stages + 1
    }

    /// 1-based serial indices of stage `s`, in `t` order.
    pub fn stage_indices(&self, s: usize) -> Vec<usize> {
        (1..=self.per_stage()).map(|t| self.kappa(s, t)).collect()
    }
}

/// `V_s[t] = x[kappa(s, t)]` for every stage.
pub fn partition<T: Clone>(x: &[T], stages: usize) -> Result<Vec<Vec<T>>> {
    let plan = SicPlan::new(stages, x.len())?;
    Ok((1..=stages)
        .map(|s| plan.stage_indices(s).into_iter().map(|k| x[k - 1].clone()).collect())
        .collect())
}

/// Inverse of [`partition`].
pub fn interleave<T: Clone>(parts: &[Vec<T>]) -> Result<Vec<T>> {
    let stages = parts.len();
    if stages == 0 {
        return Ok(Vec::new());
    }
    let per = parts[0].len();
    if parts.iter().any(|p| p.len() != per) {
        return Err(Error::Shape("all stages must have equal length".into()));
    }
    Ok((0..per * stages).map(|k| parts[k % stages][k / stages].clone()).collect())
}

/// What stage `s` may use: the decided symbols of stages `1..s` and the
/// positions still to be detected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageView {
    plan: SicPlan,
    stage: usize,
    known: Vec<Option<usize>>,
}

impl StageView {
    /// Pins the true symbols of all earlier stages (ideal decoding).
    pub fn new(plan: SicPlan, stage: usize, x: &[usize]) -> Result<Self> {
        if stage == 0 || stage > plan.stages() {
            return Err(Error::Shape(format!("stage {stage} outside 1..={}", plan.stages())));
        }
        if x.len() != plan.block_len() {
            return Err(Error::Shape(format!(
                "block has {} symbols, plan expects {}",
                x.len(),
                plan.block_len()
            )));
        }
        let known = x
            .iter()
            .enumerate()
            .map(|(k, &v)| (plan.stage_of(k + 1) < stage).then_some(v))
            .collect();
        Ok(Self { plan, stage, known })
    }

    pub fn plan(&self) -> &SicPlan {
        &self.plan
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    /// Phases handled by this stage, `S - s + 1`.
    pub fn phases(&self) -> usize {
        self.plan.stages() - self.stage + 1
    }

    /// Known symbol at a 1-based serial index.
    #[inline]
    pub fn known(&self, serial: usize) -> Option<usize> {
        self.known[serial - 1]
    }

    /// Per-position pins, 0-based.
    pub fn pins(&self) -> &[Option<usize>] {
        &self.known
    }

    /// 1-based serial indices of this stage's targets.
    pub fn targets(&self) -> Vec<usize> {
        self.plan.stage_indices(self.stage)
    }

    pub fn known_count(&self) -> usize {
        self.known.iter().filter(|k| k.is_some()).count()
    }
}

/// The `L_IC` known serial indices closest to `kappa(j, t)`, in ascending
/// order, left-padded with `None` when fewer are available. Ties in distance
/// go to the smaller index.
pub fn ic_window(j: usize, t: usize, view: &StageView, l_ic: usize) -> Vec<Option<usize>> {
    if l_ic == 0 {
        return Vec::new();
    }
    let n = view.plan().block_len();
    let center = view.plan().kappa(j, t);
    let mut picked = Vec::with_capacity(l_ic);
    let mut dist = 1;
    while picked.len() < l_ic && (dist < center || center + dist <= n) {
        if dist < center && view.known(center - dist).is_some() {
            picked.push(center - dist);
        }
        if picked.len() < l_ic && center + dist <= n && view.known(center + dist).is_some() {
            picked.push(center + dist);
        }
        dist += 1;
    }
    picked.sort_unstable();
    let mut window = vec![None; l_ic - picked.len()];
    window.extend(picked.into_iter().map(Some));
    window
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa(1, 1, 3).unwrap(), 1);
        let v1: Vec<usize> = (1..=5).map(|t| kappa(1, t, 3).unwrap()).collect();
        assert_eq!(v1, vec![1, 4, 7, 10, 13]);
        assert_eq!(kappa(3, 5, 3).unwrap(), 15);
        assert!(kappa(4, 1, 3).is_err());
        assert!(kappa(0, 1, 3).is_err());
    }

    #[test]
    fn partition_examples() {
        let x: Vec<usize> = (1..=15).collect();
        assert_eq!(partition(&x, 1).unwrap(), vec![x.clone()]);
        let parts = partition(&x, 3).unwrap();
        assert_eq!(parts[0], vec![1, 4, 7, 10, 13]);
        assert_eq!(parts[1], vec![2, 5, 8, 11, 14]);
        assert_eq!(parts[2], vec![3, 6, 9, 12, 15]);
        let singles = partition(&x, 15).unwrap();
        assert!(singles.iter().all(|p| p.len() == 1));
        assert!(partition(&x, 4).is_err());
    }

    #[test]
    fn stage_view_pins_earlier_stages() {
        let plan = SicPlan::new(3, 9).unwrap();
        let x: Vec<usize> = (0..9).collect();
        let view = StageView::new(plan, 2, &x).unwrap();
        let known: Vec<usize> = (1..=9).filter(|&k| view.known(k).is_some()).collect();
        assert_eq!(known, vec![1, 4, 7]);
        assert_eq!(view.targets(), vec![2, 5, 8]);
        assert_eq!(view.phases(), 2);
    }

    #[test]
    fn stage_one_window_is_empty_prior() {
        let plan = SicPlan::new(2, 10).unwrap();
        let view = StageView::new(plan, 1, &[0; 10]).unwrap();
        assert_eq!(ic_window(1, 3, &view, 4), vec![None; 4]);
        assert!(ic_window(1, 3, &view, 0).is_empty());
    }

    /// Exhaustive argmin over all subsets of known indices of size `l_ic`,
    /// breaking ties by lexicographically smallest sorted subset.
    fn brute_force_window(known: &[usize], center: usize, l_ic: usize) -> Vec<usize> {
        let mut best: Option<(usize, Vec<usize>)> = None;
        let k = known.len();
        for mask in 0u32..(1 << k) {
            if mask.count_ones() as usize != l_ic {
                continue;
            }
            let subset: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| known[i]).collect();
            let cost: usize = subset.iter().map(|&a| a.abs_diff(center)).sum();
            let better = match &best {
                None => true,
                Some((c, s)) => cost < *c || (cost == *c && subset < *s),
            };
            if better {
                best = Some((cost, subset));
            }
        }
        best.map(|b| b.1).unwrap_or_default()
    }

    #[test]
    fn window_matches_brute_force() {
        let plan = SicPlan::new(2, 16).unwrap();
        let view = StageView::new(plan, 2, &[0; 16]).unwrap();
        // target kappa(2, 3) = 6, known = odd indices
        let w: Vec<usize> = ic_window(2, 3, &view, 2).into_iter().flatten().collect();
        assert_eq!(w, vec![5, 7]);
        let known: Vec<usize> = (1..=16).filter(|&k| view.known(k).is_some()).collect();
        for t in 1..=8 {
            for l in 1..=5 {
                let got: Vec<usize> = ic_window(2, t, &view, l).into_iter().flatten().collect();
                assert_eq!(got, brute_force_window(&known, plan.kappa(2, t), l), "t={t} l={l}");
            }
        }
    }

    #[test]
    fn window_pads_on_the_left() {
        let plan = SicPlan::new(4, 8).unwrap();
        let view = StageView::new(plan, 2, &[0; 8]).unwrap();
        // only serial 1 and 5 are known
        assert_eq!(ic_window(2, 1, &view, 3), vec![None, Some(1), Some(5)]);
    }

    proptest! {
        #[test]
        fn partition_is_a_bijection(stages in 1usize..8, per in 1usize..10) {
            let x: Vec<usize> = (0..stages * per).collect();
            let parts = partition(&x, stages).unwrap();
            prop_assert_eq!(interleave(&parts).unwrap(), x);
        }

        #[test]
        fn windows_are_deterministic_and_nested(stages in 2usize..6, per in 2usize..12, s_off in 0usize..4, l in 0usize..8, t0 in 0usize..12, j_off in 0usize..4) {
            let s = 2 + s_off % (stages - 1);
            let plan = SicPlan::new(stages, stages * per).unwrap();
            let view = StageView::new(plan, s, &vec![0; stages * per]).unwrap();
            let j = s + j_off % (stages - s + 1);
            let t = 1 + t0 % per;
            let a = ic_window(j, t, &view, l);
            prop_assert_eq!(&a, &ic_window(j, t, &view, l));
            let b = ic_window(j, t, &view, l + 2);
            let small: Vec<usize> = a.iter().flatten().copied().collect();
            let large: Vec<usize> = b.iter().flatten().copied().collect();
            let kept: Vec<usize> = large.iter().copied().filter(|k| small.contains(k)).collect();
            prop_assert_eq!(kept, small);
            let target = plan.kappa(j, t);
            for k in large {
                prop_assert!(plan.stage_of(k) < s);
                prop_assert!(k != target);
            }
        }
    }
}
