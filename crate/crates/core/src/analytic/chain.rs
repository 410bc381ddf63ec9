//! Transient analysis of the high-to-low load Markov chain.
//!
//! After the switch every arrival sees the whole ledger, so the tip count
//! drops by one per arrival, from `L_h` down to 1. While `j ≥ 2` tips remain
//! the observed transaction gains weight with probability `2/j` (certainly at
//! `j = 2`). Once a single tip is left every arrival adds one.
//!
//! The tip count is deterministic along the chain (`L(k) = max(L_h − k, 1)`),
//! so a step's distribution is stored as a vector over the weight alone.

use serde::Serialize;

use crate::stream::SeededStream;

/// Probability that the next arrival adds weight when `tips` tips are visible.
pub fn approval_probability(tips: u32) -> f64 {
    if tips <= 2 {
        1.0
    } else {
        2.0 / f64::from(tips)
    }
}

/// Tip count after `step` arrivals, starting from `l_h`.
pub fn tips_at(step: u64, l_h: u32) -> u32 {
    if step >= u64::from(l_h) - 1 {
        1
    } else {
        l_h - step as u32
    }
}

/// Probability mass over chain states `{W, L}` at one step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateDistribution {
    step: u64,
    tips: u32,
    /// Smallest weight with an entry in `mass`.
    min_weight: u64,
    mass: Vec<f64>,
}

impl StateDistribution {
    pub fn step(&self) -> u64 {
        self.step
    }

    /// The tip count shared by every state at this step.
    pub fn tips(&self) -> u32 {
        self.tips
    }

    /// `P{W(k) = w, L(k) = tips}`.
    pub fn mass(&self, w: u64) -> f64 {
        w.checked_sub(self.min_weight)
            .and_then(|i| self.mass.get(i as usize))
            .copied()
            .unwrap_or(0.0)
    }

    /// `P{W(k) = w, L(k) = l}`.
    pub fn state_mass(&self, w: u64, l: u32) -> f64 {
        if l == self.tips {
            self.mass(w)
        } else {
            0.0
        }
    }

    /// States `(W, L)` with their probabilities, by increasing weight.
    pub fn iter(&self) -> impl Iterator<Item = ((u64, u32), f64)> + '_ {
        self.mass
            .iter()
            .enumerate()
            .map(move |(i, &p)| ((self.min_weight + i as u64, self.tips), p))
    }

    /// Smallest and largest weight in the stored support.
    pub fn weight_range(&self) -> (u64, u64) {
        (self.min_weight, self.min_weight + self.mass.len() as u64 - 1)
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn expected_weight(&self) -> f64 {
        self.iter().map(|((w, _), p)| w as f64 * p).sum()
    }

    /// Probability vector indexed by weight (index 0 is `W = 0`, always 0).
    pub fn to_weight_vec(&self) -> Vec<f64> {
        let (_, hi) = self.weight_range();
        let mut v = vec![0.0; hi as usize + 1];
        for ((w, _), p) in self.iter() {
            v[w as usize] = p;
        }
        v
    }
}

/// Forward pass of the chain from `{W = 1, L = l_h}` for `k` arrivals.
///
/// Panics if `l_h < 2`.
pub fn h2lr_distribution(k: u64, l_h: u32) -> StateDistribution {
    assert!(l_h >= 2, "initial tip count must be at least 2");
    let lattice_steps = k.min(u64::from(l_h) - 1);
    // mass[w - 1] for w in 1..=step+1
    let mut mass = vec![1.0];
    for step in 0..lattice_steps {
        let a = approval_probability(tips_at(step, l_h));
        let mut next = vec![0.0; mass.len() + 1];
        for (i, &p) in mass.iter().enumerate() {
            next[i] += p * (1.0 - a);
            next[i + 1] += p * a;
        }
        mass = next;
    }
    // every step past the lattice adds one to every state
    let shift = k - lattice_steps;
    let mut min_weight = 1 + shift;
    // drop leading zeros left by the forced approval at two tips
    let lead = mass.iter().take_while(|&&p| p == 0.0).count();
    if lead > 0 && lead < mass.len() {
        mass.drain(..lead);
        min_weight += lead as u64;
    }
    StateDistribution {
        step: k,
        tips: tips_at(k, l_h),
        min_weight,
        mass,
    }
}

/// `E[W(k)]` under the chain.
pub fn expected_weight_at_step(k: u64, l_h: u32) -> f64 {
    h2lr_distribution(k, l_h).expected_weight()
}

/// Distribution of the arrival index at which the weight first reaches `m`.
///
/// Returned as `(k, P{first passage at k})` for every `k` with positive mass,
/// covering `m − 1 ..= m + l_h − 3`.
pub fn first_passage(m: u64, l_h: u32) -> Vec<(u64, f64)> {
    assert!(m >= 2 && l_h >= 2);
    // weights 1..m-1 are transient, W = m absorbs
    let mut mass = vec![0.0; m as usize];
    mass[1] = 1.0;
    let mut out = Vec::new();
    let last = m + u64::from(l_h) - 3;
    let mut k = 0u64;
    while k < last.max(m - 1) {
        let a = approval_probability(tips_at(k, l_h));
        k += 1;
        let hit = mass[m as usize - 1] * a;
        if hit > 0.0 {
            out.push((k, hit));
        }
        for w in (1..m as usize).rev() {
            let stay = mass[w] * (1.0 - a);
            let up = if w > 1 { mass[w - 1] * a } else { 0.0 };
            mass[w] = stay + up;
        }
    }
    out
}

/// Draws the chain for `steps` arrivals and returns the weight reached.
pub fn sample_chain_weight(steps: u64, l_h: u32, stream: &mut SeededStream) -> u64 {
    let mut w = 1;
    for k in 0..steps {
        let tips = tips_at(k, l_h);
        if tips <= 2 {
            // forced approval from here on; the rest is deterministic
            return w + (steps - k);
        }
        if stream.bernoulli(2.0 / f64::from(tips)) {
            w += 1;
        }
    }
    w
}

/// Draws the arrival index at which the chain's weight first reaches `m`.
pub fn sample_chain_first_passage(m: u64, l_h: u32, stream: &mut SeededStream) -> u64 {
    let mut w = 1;
    let mut k = 0;
    while w < m {
        let tips = tips_at(k, l_h);
        if tips <= 2 {
            return k + (m - w);
        }
        if stream.bernoulli(2.0 / f64::from(tips)) {
            w += 1;
        }
        k += 1;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::total_variation;
    use crate::stream::derive_stream;
    use approx::assert_relative_eq;

    #[test]
    fn one_step_from_hundred_tips() {
        let d = h2lr_distribution(1, 100);
        assert_eq!(d.tips(), 99);
        assert_relative_eq!(d.mass(2), 0.02, epsilon = 1e-15);
        assert_relative_eq!(d.mass(1), 0.98, epsilon = 1e-15);
    }

    #[test]
    fn weight_one_unreachable_after_lattice() {
        for l_h in [2u32, 3, 5, 10, 100] {
            let k = u64::from(l_h) - 1;
            let d = h2lr_distribution(k, l_h);
            assert_eq!(d.mass(1), 0.0);
            assert_eq!(d.tips(), 1);
            assert_eq!(d.weight_range(), (2, u64::from(l_h)));
        }
    }

    #[test]
    fn normalized_at_every_step() {
        for l_h in [2u32, 7, 50, 100] {
            for k in 0..=300 {
                let d = h2lr_distribution(k, l_h);
                assert!((d.total_mass() - 1.0).abs() <= 1e-12, "l_h {l_h} k {k}");
                let (lo, hi) = d.weight_range();
                assert!(lo >= 1 && hi <= k + 1);
            }
        }
    }

    #[test]
    fn tip_count_follows_lattice() {
        for k in 0..120 {
            let d = h2lr_distribution(k, 100);
            let want = if k <= 99 { 100 - k as u32 } else { 1 };
            assert_eq!(d.tips(), want);
        }
    }

    #[test]
    fn expected_weight_increments() {
        let l_h = 40;
        let mut prev = expected_weight_at_step(0, l_h);
        assert_eq!(prev, 1.0);
        for k in 1..200 {
            let e = expected_weight_at_step(k, l_h);
            let inc = e - prev;
            if k >= u64::from(l_h) {
                assert_relative_eq!(inc, 1.0, epsilon = 1e-9);
            } else {
                assert!((-1e-12..=1.0 + 1e-12).contains(&inc));
            }
            prev = e;
        }
    }

    #[test]
    fn first_passage_mass_sums_to_one() {
        for l_h in [2u32, 5, 10, 50] {
            for m in [2u64, 3, 5, u64::from(l_h), u64::from(l_h) + 7] {
                let fp = first_passage(m, l_h);
                let total: f64 = fp.iter().map(|&(_, p)| p).sum();
                assert_relative_eq!(total, 1.0, epsilon = 1e-12);
                let lo = fp.first().unwrap().0;
                let hi = fp.last().unwrap().0;
                assert!(lo >= m - 1);
                assert!(hi <= (m + u64::from(l_h)).saturating_sub(3).max(m - 1));
            }
        }
    }

    #[test]
    fn first_passage_small_case_by_enumeration() {
        // L_h = 5, m = 3: enumerate every approve/skip path by hand
        let fp = first_passage(3, 5);
        let a = [2.0 / 5.0, 2.0 / 4.0, 2.0 / 3.0, 1.0, 1.0, 1.0];
        // brute force over 2^6 paths
        let mut brute = [0.0f64; 7];
        for mask in 0u32..64 {
            let mut w = 1;
            let mut p = 1.0;
            for (k, &ak) in a.iter().enumerate() {
                let up = mask >> k & 1 == 1;
                p *= if up { ak } else { 1.0 - ak };
                if up {
                    w += 1;
                }
                if w == 3 {
                    // only count the path prefix once: require remaining bits zero
                    if mask >> (k + 1) == 0 {
                        brute[k + 1] += p;
                    }
                    break;
                }
            }
        }
        for (k, p) in fp {
            assert_relative_eq!(p, brute[k as usize], epsilon = 1e-12);
        }
    }

    #[test]
    fn dp_matches_direct_chain_sampling() {
        let l_h = 20;
        for k in [5u64, 10, 20, 40] {
            let d = h2lr_distribution(k, l_h).to_weight_vec();
            let n = 100_000;
            let mut counts = vec![0.0; k as usize + 2];
            let mut s = derive_stream(77, k);
            for _ in 0..n {
                counts[sample_chain_weight(k, l_h, &mut s) as usize] += 1.0;
            }
            let emp: Vec<f64> = counts.iter().map(|c| c / n as f64).collect();
            assert!(total_variation(&d, &emp) < 0.01);
        }
    }
}
