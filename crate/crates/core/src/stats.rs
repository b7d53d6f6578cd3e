//! Hypothesis tests and association measures.
//!
//! Distribution tails come from `statrs`; every test statistic is computed
//! here.

use std::collections::HashMap;
use std::hash::Hash;

use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal, StudentsT};

use crate::error::{Error, Result};

/// Significance level used when flagging descriptive tests.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Pooled sample size at or below which Mann-Whitney p-values are exact.
pub const MANN_WHITNEY_EXACT_MAX: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct TestResult {
    /// May be infinite for perfectly separated groups (then `p_value` is 0).
    pub statistic: f64,
    pub p_value: f64,
    pub df: Option<f64>,
    pub method: &'static str,
}

impl TestResult {
    fn new(statistic: f64, p_value: f64, df: Option<f64>, method: &'static str) -> Self {
        TestResult {
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
            df,
            method,
        }
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Standard deviation with denominator `n`.
pub fn population_sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Standard deviation with denominator `n - 1`.
pub fn sample_sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn tie_sizes(sorted: &[f64]) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        sizes.push(j - i + 1);
        i = j + 1;
    }
    sizes
}

/// Two-sided Mann-Whitney U test. The statistic is U for `x`.
///
/// Exact (tie-aware) for `|x| + |y| <= 20`, otherwise the normal
/// approximation with tie and continuity corrections.
pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<TestResult> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidInput("Mann-Whitney U needs two non-empty samples".into()));
    }
    let n = x.len();
    let m = y.len();
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = average_ranks(&pooled);
    let rank_sum_x: f64 = ranks[..n].iter().sum();
    let u = rank_sum_x - (n * (n + 1)) as f64 / 2.0;

    if n + m <= MANN_WHITNEY_EXACT_MAX {
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let p = exact_rank_sum_p(&doubled, n);
        return Ok(TestResult::new(u, p, None, "mann-whitney-u exact"));
    }

    let big_n = (n + m) as f64;
    let mu = (n * m) as f64 / 2.0;
    let mut sorted = pooled;
    sorted.sort_by(f64::total_cmp);
    let ties: f64 = tie_sizes(&sorted)
        .into_iter()
        .map(|t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = (n * m) as f64 / 12.0 * ((big_n + 1.0) - ties / (big_n * (big_n - 1.0)));
    if var <= 0.0 {
        return Ok(TestResult::new(u, 1.0, None, "mann-whitney-u normal"));
    }
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    let p = 2.0 * standard_normal().sf(z);
    Ok(TestResult::new(u, p, None, "mann-whitney-u normal"))
}

/// Two-sided exact p-value of a rank sum over all size-`n` subsets, with
/// ranks given doubled so average ranks stay integral.
fn exact_rank_sum_p(doubled_ranks: &[usize], n: usize) -> f64 {
    let total: usize = doubled_ranks.iter().sum();
    // counts[k][s]: subsets of size k with doubled rank sum s
    let mut counts = vec![vec![0f64; total + 1]; n + 1];
    counts[0][0] = 1.0;
    for &r in doubled_ranks {
        for k in (1..=n).rev() {
            for s in (r..=total).rev() {
                let c = counts[k - 1][s - r];
                if c != 0.0 {
                    counts[k][s] += c;
                }
            }
        }
    }
    let observed: usize = doubled_ranks[..n].iter().sum();
    let big_n = doubled_ranks.len();
    // doubled expected rank sum = n (N + 1)
    let centre = (n * (big_n + 1)) as i64;
    let dist = |s: usize| (s as i64 - centre).abs();
    let obs = dist(observed);
    let all: f64 = counts[n].iter().sum();
    let tail: f64 = counts[n]
        .iter()
        .enumerate()
        .filter(|&(s, _)| dist(s) >= obs)
        .map(|(_, c)| c)
        .sum();
    tail / all
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid normal")
}

/// Pearson chi-square test of independence on an `r x c` count table,
/// without continuity correction.
pub fn chi_square(table: &[Vec<f64>]) -> Result<TestResult> {
    chi_square_with(table, false)
}

/// As [`chi_square`]; `yates` applies the continuity correction to 2x2 tables.
pub fn chi_square_with(table: &[Vec<f64>], yates: bool) -> Result<TestResult> {
    let r = table.len();
    let c = table.first().map_or(0, Vec::len);
    if r < 2 || c < 2 {
        return Err(Error::InvalidInput("chi-square needs at least a 2x2 table".into()));
    }
    if table.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidInput("ragged contingency table".into()));
    }
    if table.iter().flatten().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidInput("negative or non-finite count".into()));
    }
    let row_tot: Vec<f64> = table.iter().map(|row| row.iter().sum()).collect();
    let col_tot: Vec<f64> = (0..c).map(|j| table.iter().map(|row| row[j]).sum()).collect();
    if row_tot.iter().chain(&col_tot).any(|&t| t == 0.0) {
        return Err(Error::Degenerate("contingency table has a zero marginal".into()));
    }
    let total: f64 = row_tot.iter().sum();
    let correct = yates && r == 2 && c == 2;
    let mut stat = 0.0;
    for i in 0..r {
        for j in 0..c {
            let e = row_tot[i] * col_tot[j] / total;
            let mut d = (table[i][j] - e).abs();
            if correct {
                d = (d - 0.5).max(0.0);
            }
            stat += d * d / e;
        }
    }
    let df = ((r - 1) * (c - 1)) as f64;
    let p = ChiSquared::new(df).expect("df > 0").sf(stat);
    Ok(TestResult::new(stat, p, Some(df), "chi-square"))
}

/// Spearman rank correlation; the statistic is rho.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<TestResult> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput("spearman inputs differ in length".into()));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidInput("spearman needs at least 3 pairs".into()));
    }
    let rho = pearson(&average_ranks(x), &average_ranks(y))
        .ok_or_else(|| Error::Degenerate("constant input has no rank correlation".into()))?;
    let df = (n - 2) as f64;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        2.0 * StudentsT::new(0.0, 1.0, df).expect("df > 0").sf(t.abs())
    };
    Ok(TestResult::new(rho, p, Some(df), "spearman"))
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// One-way ANOVA F test of `x` across the two label groups.
pub fn anova_f(x: &[f64], labels: &[u8]) -> Result<TestResult> {
    if x.len() != labels.len() {
        return Err(Error::InvalidInput("anova inputs differ in length".into()));
    }
    let mut groups: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (&v, &l) in x.iter().zip(labels) {
        groups[usize::from(l.min(1))].push(v);
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::Degenerate("anova needs both label groups".into()));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidInput("anova needs at least 3 observations".into()));
    }
    let grand = mean(x);
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in &groups {
        let m = mean(g);
        ssb += g.len() as f64 * (m - grand).powi(2);
        ssw += g.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    }
    let df_b = 1.0;
    let df_w = (n - 2) as f64;
    // relative guard against round-off in "zero" sums of squares
    let scale = x.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let ssb_zero = ssb <= 1e-14 * scale;
    let ssw_zero = ssw <= 1e-14 * scale;
    match (ssb_zero, ssw_zero) {
        (true, true) => Err(Error::Degenerate("no between- or within-group variance".into())),
        (false, true) => Ok(TestResult::new(f64::INFINITY, 0.0, Some(df_w), "anova-f")),
        _ => {
            let f = (ssb / df_b) / (ssw / df_w);
            let p = FisherSnedecor::new(df_b, df_w).expect("df > 0").sf(f);
            Ok(TestResult::new(f, p, Some(df_w), "anova-f"))
        }
    }
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `I(A;B) / sqrt(H(A) H(B))` from plug-in entropies; 0 when either
/// variable is constant.
pub fn normalized_mutual_information<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: Hash + Eq,
    B: Hash + Eq,
{
    if a.len() != b.len() {
        return Err(Error::InvalidInput("mutual information inputs differ in length".into()));
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("mutual information of empty inputs".into()));
    }
    let n = a.len() as f64;
    let mut ca: HashMap<&A, usize> = HashMap::new();
    let mut cb: HashMap<&B, usize> = HashMap::new();
    let mut cab: HashMap<(&A, &B), usize> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *ca.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
        *cab.entry((x, y)).or_default() += 1;
    }
    let ha = entropy(ca.values().copied(), n);
    let hb = entropy(cb.values().copied(), n);
    if ha <= 0.0 || hb <= 0.0 {
        return Ok(0.0);
    }
    let hab = entropy(cab.values().copied(), n);
    let mi = (ha + hb - hab).max(0.0);
    Ok((mi / (ha * hb).sqrt()).clamp(0.0, 1.0))
}

/// Paired t-test over fold-aligned scores, on differences `a - b`.
///
/// Identical scores give statistic 0 and p = 1; a constant non-zero
/// difference gives an infinite statistic and p = 0.
pub fn paired_ttest_cv(scores_a: &[f64], scores_b: &[f64]) -> Result<TestResult> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::InvalidInput(format!(
            "paired t-test needs aligned folds, got {} and {} scores",
            scores_a.len(),
            scores_b.len()
        )));
    }
    let k = scores_a.len();
    if k < 2 {
        return Err(Error::InvalidInput("paired t-test needs at least 2 folds".into()));
    }
    let d: Vec<f64> = scores_a.iter().zip(scores_b).map(|(a, b)| a - b).collect();
    let df = (k - 1) as f64;
    let md = mean(&d);
    let sd = sample_sd(&d);
    const METHOD: &str = "paired t-test (cross-validated)";
    if sd == 0.0 || !sd.is_finite() {
        return Ok(if md == 0.0 {
            TestResult::new(0.0, 1.0, Some(df), METHOD)
        } else {
            TestResult::new(md.signum() * f64::INFINITY, 0.0, Some(df), METHOD)
        });
    }
    let t = md / (sd / (k as f64).sqrt());
    let p = 2.0 * StudentsT::new(0.0, 1.0, df).expect("df > 0").sf(t.abs());
    Ok(TestResult::new(t, p, Some(df), METHOD))
}
