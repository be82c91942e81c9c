use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{EvalError, Result};

/// Scores are rounded to this many decimals before a win/loss/draw
/// comparison.
pub const DRAW_DECIMALS: i32 = 3;

/// Largest pooled sample size handled by the exact null distribution.
const EXACT_MAX_N: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankSumResult {
    /// Rank sum of the first sample (mid-ranks under ties).
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub significant: bool,
    pub exact: bool,
}

fn midranks(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut pooled: Vec<(f64, usize)> = a.iter().chain(b).copied().zip(0..).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j + 1 < pooled.len() && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for item in &pooled[i..=j] {
            ranks[item.1] = r;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Two-sided Wilcoxon rank-sum test of `a` against `b`. Uses the exact null
/// distribution for tie-free samples with `|a| + |b| ≤ 20`, otherwise the
/// normal approximation with tie and continuity corrections.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64], alpha: f64) -> RankSumResult {
    assert!(!a.is_empty() && !b.is_empty(), "rank-sum samples must be nonempty");
    let (ranks, ties) = midranks(a, b);
    let w: f64 = ranks[..a.len()].iter().sum();
    let tie_free = ties.iter().all(|&t| t == 1);
    let (p, exact) = if tie_free && a.len() + b.len() <= EXACT_MAX_N {
        (rank_sum_exact(a.len(), b.len(), w.round() as usize), true)
    } else {
        (rank_sum_normal(a.len(), b.len(), w, &ties), false)
    };
    RankSumResult {
        statistic: w,
        p_value: p,
        significant: p <= alpha,
        exact,
    }
}

/// Exact two-sided p-value `min(1, 2·min(P(W ≤ w), P(W ≥ w)))` for the rank
/// sum `w` of `n` draws from ranks `1..=n+m` without replacement.
pub fn rank_sum_exact(n: usize, m: usize, w: usize) -> f64 {
    let total = n + m;
    let max_sum = total * (total + 1) / 2;
    // ways[k][s]: number of k-subsets of the ranks seen so far summing to s
    let mut ways = vec![vec![0u64; max_sum + 1]; n + 1];
    ways[0][0] = 1;
    for r in 1..=total {
        for k in (1..=n.min(r)).rev() {
            for s in (r..=max_sum).rev() {
                ways[k][s] += ways[k - 1][s - r];
            }
        }
    }
    let counts = &ways[n];
    let all: u64 = counts.iter().sum();
    let w = w.min(max_sum);
    let lower: u64 = counts[..=w].iter().sum();
    let upper: u64 = counts[w..].iter().sum();
    let p = 2.0 * lower.min(upper) as f64 / all as f64;
    p.min(1.0)
}

/// Normal approximation for the rank sum `w` of the first sample; `ties`
/// lists the sizes of the tie groups in the pooled sample.
pub fn rank_sum_normal(n: usize, m: usize, w: f64, ties: &[usize]) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    let total = nf + mf;
    let mean = nf * (total + 1.0) / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let var = if total > 1.0 {
        nf * mf / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)))
    } else {
        0.0
    };
    if var.is_nan() || var <= 0.0 {
        return 1.0;
    }
    let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).clamp(f64::MIN_POSITIVE, 1.0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinLossDraw {
    pub win: usize,
    pub loss: usize,
    pub draw: usize,
}

impl WinLossDraw {
    pub fn units(&self) -> usize {
        self.win + self.loss + self.draw
    }
}

/// Unit-by-unit comparison of method 1 against method 2 after rounding both
/// to [`DRAW_DECIMALS`] decimals.
pub fn win_loss_draw(m1: &[f64], m2: &[f64], lower_is_better: bool) -> Result<WinLossDraw> {
    if m1.len() != m2.len() {
        return Err(EvalError::Metric(format!(
            "{} vs {} scores for win/loss/draw",
            m1.len(),
            m2.len()
        )));
    }
    let scale = 10f64.powi(DRAW_DECIMALS);
    let mut out = WinLossDraw::default();
    for (&a, &b) in m1.iter().zip(m2) {
        let (a, b) = ((a * scale).round(), (b * scale).round());
        let better = if lower_is_better { a < b } else { a > b };
        if a == b {
            out.draw += 1;
        } else if better {
            out.win += 1;
        } else {
            out.loss += 1;
        }
    }
    Ok(out)
}
