//! Offline scoring: per-chunk log-utility QoE, session aggregates, and the
//! paired Wilcoxon signed-rank test.
//!
//! This is the only floating-point module. It is generic over the float type;
//! the crate root re-exports `f64` aliases.

use num_traits::Float;

use crate::error::{Error, Result};

fn lit<F: Float>(x: f64) -> F {
    F::from(x).expect("literal representable in float type")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QoeParams<F> {
    pub base_kbps: F,
    /// Penalty per second of rebuffering.
    pub lambda: F,
    /// Penalty per unit of |log2 bitrate change|.
    pub mu: F,
}

impl<F: Float> Default for QoeParams<F> {
    fn default() -> Self {
        QoeParams {
            base_kbps: lit(150.0),
            lambda: lit(4.3),
            mu: lit(2.0),
        }
    }
}

impl<F: Float> QoeParams<F> {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.base_kbps > F::zero()) {
            return Err(Error::validation("qoe_base_kbps", "must be positive"));
        }
        if !(self.lambda >= F::zero()) {
            return Err(Error::validation("qoe_lambda", "must be non-negative"));
        }
        if !(self.mu >= F::zero()) {
            return Err(Error::validation("qoe_mu", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChunkQoe<F> {
    pub utility: F,
    pub rebuf_penalty: F,
    pub smooth_penalty: F,
    pub total: F,
}

/// `log2(b / base) - lambda * rebuf - mu * |log2 b - log2 prev|`.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn chunk_qoe<F: Float>(
    b_kbps: F,
    prev_b_kbps: Option<F>,
    rebuf_s: F,
    params: &QoeParams<F>,
) -> Result<ChunkQoe<F>> {
    if !(b_kbps >= params.base_kbps) {
        return Err(Error::Contract("bitrate below the QoE base".into()));
    }
    if !(rebuf_s >= F::zero()) {
        return Err(Error::Contract("negative rebuffering time".into()));
    }
    let utility = (b_kbps / params.base_kbps).log2();
    let rebuf_penalty = params.lambda * rebuf_s;
    let smooth_penalty = match prev_b_kbps {
        Some(prev) => params.mu * (b_kbps.log2() - prev.log2()).abs(),
        None => F::zero(),
    };
    Ok(ChunkQoe {
        utility,
        rebuf_penalty,
        smooth_penalty,
        total: utility - rebuf_penalty - smooth_penalty,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate<F> {
    pub n: usize,
    pub cumulative: F,
    pub mean: F,
    /// Sample standard deviation; 0 for a single value.
    pub std: F,
    pub sem: F,
}

pub fn aggregate<F: Float>(values: &[F]) -> Result<Aggregate<F>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("aggregate of no values"));
    }
    let n = values.len();
    let nf = F::from(n).unwrap();
    let cumulative = values.iter().fold(F::zero(), |acc, &v| acc + v);
    let mean = cumulative / nf;
    let std = if n > 1 {
        let ss = values
            .iter()
            .fold(F::zero(), |acc, &v| acc + (v - mean) * (v - mean));
        (ss / (nf - F::one())).sqrt()
    } else {
        F::zero()
    };
    Ok(Aggregate {
        n,
        cumulative,
        mean,
        std,
        sem: std / nf.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult<F> {
    /// min(W+, W-).
    pub w: F,
    pub p_two_sided: F,
    /// Non-zero differences used.
    pub n: usize,
    pub exact: bool,
}

/// Largest number of non-zero differences handled by exact enumeration.
pub const EXACT_MAX_N: usize = 20;

/// Signed differences with zeros dropped, plus their doubled average ranks
/// (integers even under ties).
fn signed_ranks<F: Float>(diffs: &[F]) -> Result<(Vec<bool>, Vec<u64>, Vec<usize>)> {
    let mut nz: Vec<F> = diffs.iter().copied().filter(|d| *d != F::zero()).collect();
    if nz.is_empty() {
        return Err(Error::EmptyInput("all paired differences are zero"));
    }
    if nz.iter().any(|d| d.is_nan()) {
        return Err(Error::Contract("NaN difference".into()));
    }
    nz.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
    let n = nz.len();
    let mut ranks2 = vec![0u64; n];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && nz[j].abs() == nz[i].abs() {
            j += 1;
        }
        // average of ranks i+1..=j, doubled
        let r2 = (i + 1 + j) as u64;
        ranks2[i..j].fill(r2);
        tie_sizes.push(j - i);
        i = j;
    }
    let positive = nz.iter().map(|d| *d > F::zero()).collect();
    Ok((positive, ranks2, tie_sizes))
}

fn differences<F: Float>(pairs: &[(F, F)]) -> Vec<F> {
    pairs.iter().map(|&(x, y)| x - y).collect()
}

/// Paired signed-rank test on `x - y`. Exact for up to [`EXACT_MAX_N`]
/// non-zero differences, normal approximation beyond.
pub fn wilcoxon_signed_rank<F: Float>(pairs: &[(F, F)]) -> Result<WilcoxonResult<F>> {
    let diffs = differences(pairs);
    let nonzero = diffs.iter().filter(|d| **d != F::zero()).count();
    if nonzero <= EXACT_MAX_N {
        wilcoxon_exact_diffs(&diffs)
    } else {
        wilcoxon_normal_diffs(&diffs)
    }
}

pub fn wilcoxon_exact<F: Float>(pairs: &[(F, F)]) -> Result<WilcoxonResult<F>> {
    wilcoxon_exact_diffs(&differences(pairs))
}

pub fn wilcoxon_normal<F: Float>(pairs: &[(F, F)]) -> Result<WilcoxonResult<F>> {
    wilcoxon_normal_diffs(&differences(pairs))
}

/// Exact null distribution over all 2^n sign assignments, counted by dynamic
/// programming over doubled rank sums. p = min(1, 2 P(T <= W)).
pub fn wilcoxon_exact_diffs<F: Float>(diffs: &[F]) -> Result<WilcoxonResult<F>> {
    let (positive, ranks2, _) = signed_ranks(diffs)?;
    let n = ranks2.len();
    if n > 62 {
        return Err(Error::Contract(format!("{n} differences too many for exact enumeration")));
    }
    let total2: u64 = ranks2.iter().sum();
    let w_plus2: u64 = ranks2.iter().zip(&positive).filter(|(_, p)| **p).map(|(r, _)| r).sum();
    let w2 = w_plus2.min(total2 - w_plus2);

    let mut counts = vec![0u64; total2 as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in &ranks2 {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let at_most: u64 = counts[..=w2 as usize].iter().sum();
    let p = (2.0 * at_most as f64 / (1u64 << n) as f64).min(1.0);
    Ok(WilcoxonResult {
        w: lit(w2 as f64 / 2.0),
        p_two_sided: lit(p),
        n,
        exact: true,
    })
}

/// Normal approximation with tie and continuity corrections.
pub fn wilcoxon_normal_diffs<F: Float>(diffs: &[F]) -> Result<WilcoxonResult<F>> {
    let (positive, ranks2, ties) = signed_ranks(diffs)?;
    let n = ranks2.len();
    let nf = n as f64;
    let w_plus: f64 = ranks2
        .iter()
        .zip(&positive)
        .filter(|(_, p)| **p)
        .map(|(r, _)| *r as f64 / 2.0)
        .sum();
    let total = nf * (nf + 1.0) / 2.0;
    let w = w_plus.min(total - w_plus);
    let mean = total / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
        libm::erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    Ok(WilcoxonResult {
        w: lit(w),
        p_two_sided: lit(p),
        n,
        exact: false,
    })
}
