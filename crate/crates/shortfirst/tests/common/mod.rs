//! Independent oracles and generators shared by the integration tests.
//!
//! Nothing here reuses the implementation paths it checks: the CTC oracle
//! enumerates raw paths in probability space, and the edit-distance oracle
//! is a memoized top-down recursion rather than the library's bottom-up
//! table.

#![allow(dead_code)]

use rand::Rng;
use rand_pcg::Pcg64Mcg;

use shortfirst::ctc::{min_frames, Label, PosteriorLattice};

/// Collapse one raw frame-label path: merge repeats, then drop blanks.
pub fn collapse_path(path: &[Label], blank: Label) -> Vec<Label> {
    let mut out = Vec::new();
    let mut prev = None;
    for &l in path {
        if prev != Some(l) && l != blank {
            out.push(l);
        }
        prev = Some(l);
    }
    out
}

/// Brute-force likelihood: sum of products over all `N^T` paths whose
/// collapse equals `target`. Kahan summation keeps the tally honest when
/// many tiny terms pile up.
pub fn brute_force_likelihood(lattice: &PosteriorLattice, target: &[Label]) -> f64 {
    let t_len = lattice.n_frames();
    let n = lattice.n_labels();
    let blank = lattice.blank();
    let mut path = vec![0 as Label; t_len];
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    loop {
        if collapse_path(&path, blank) == target {
            let mut product = 1.0f64;
            for (t, &l) in path.iter().enumerate() {
                product *= lattice.prob(t, l);
            }
            let y = product - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        // Odometer over base-N digits.
        let mut pos = 0;
        loop {
            if pos == t_len {
                return sum;
            }
            if (path[pos] as usize) < n - 1 {
                path[pos] += 1;
                break;
            }
            path[pos] = 0;
            pos += 1;
        }
    }
}

/// Exhaustive-recursion edit distance with memoization; independent of the
/// iterative two-row implementation under test.
pub fn edit_distance_recursive(a: &[Label], b: &[Label]) -> usize {
    fn rec(a: &[Label], b: &[Label], i: usize, j: usize, memo: &mut [usize], w: usize) -> usize {
        if i == 0 {
            return j;
        }
        if j == 0 {
            return i;
        }
        let at = i * w + j;
        if memo[at] != usize::MAX {
            return memo[at];
        }
        let sub_cost = usize::from(a[i - 1] != b[j - 1]);
        let best = (rec(a, b, i - 1, j, memo, w) + 1)
            .min(rec(a, b, i, j - 1, memo, w) + 1)
            .min(rec(a, b, i - 1, j - 1, memo, w) + sub_cost);
        memo[at] = best;
        best
    }
    let w = b.len() + 1;
    let mut memo = vec![usize::MAX; (a.len() + 1) * w];
    rec(a, b, a.len(), b.len(), &mut memo, w)
}

/// Random row-stochastic lattice with strictly positive entries.
pub fn random_lattice(rng: &mut Pcg64Mcg, t_len: usize, n_labels: usize) -> PosteriorLattice {
    let mut probs = Vec::with_capacity(t_len * n_labels);
    for _ in 0..t_len {
        let row: Vec<f64> = (0..n_labels).map(|_| rng.random::<f64>() + 1e-3).collect();
        let sum: f64 = row.iter().sum();
        probs.extend(row.into_iter().map(|p| p / sum));
    }
    PosteriorLattice::new(t_len, n_labels, probs).unwrap()
}

/// Random target over the character labels (blank excluded) that is
/// feasible for `t_len` frames.
pub fn random_feasible_target(rng: &mut Pcg64Mcg, t_len: usize, n_labels: usize) -> Vec<Label> {
    let alphabet = (n_labels - 1) as u32;
    loop {
        let len = rng.random_range(0..=t_len);
        let target: Vec<Label> = (0..len).map(|_| rng.random_range(0..alphabet)).collect();
        if min_frames(&target) <= t_len {
            return target;
        }
    }
}

/// Softmax the rows of a `T x N` activation matrix into a lattice.
pub fn softmax_lattice(z: &[f64], t_len: usize, n_labels: usize) -> PosteriorLattice {
    let mut probs = vec![0.0; t_len * n_labels];
    for t in 0..t_len {
        let row = &z[t * n_labels..(t + 1) * n_labels];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        for (k, e) in exps.into_iter().enumerate() {
            probs[t * n_labels + k] = e / sum;
        }
    }
    PosteriorLattice::new(t_len, n_labels, probs).unwrap()
}

/// Gradient-check error: absolute difference scaled by the gradient's own
/// magnitude, floored so finite-difference round-off on near-zero entries
/// does not explode the ratio.
pub fn grad_check_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

/// Every label sequence over `alphabet` symbols with length up to
/// `max_len`, shortest first.
pub fn all_sequences(alphabet: u32, max_len: usize) -> Vec<Vec<Label>> {
    let mut out = vec![vec![]];
    let mut frontier: Vec<Vec<Label>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for seq in &frontier {
            for l in 0..alphabet {
                let mut s = seq.clone();
                s.push(l);
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}
