//! DFT column-subset search for the fixed-pilot schemes.
//!
//! Different K-subsets of the tau DFT columns give different quantized-domain
//! MSE even though all are orthogonal, so the best subset is found by search:
//! exhaustive enumeration when C(tau, K) fits the budget, uniform random
//! sampling of distinct subsets otherwise. Evaluators receive common random
//! numbers (the same derived RNG stream per subset), which makes subset
//! comparisons low-variance and the whole search deterministic.

use std::collections::HashSet;

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::harness::config::OneBitScaling;
use crate::harness::sweep::mse_per_entry;
use crate::channel::vectorize;
use crate::estimators::{blmmse_orthogonal, one_bit_blmmse_weights};
use crate::pilot::{dft_pilot, effective_apply};
use crate::quantizer::{input_sigma, quantize, QuantizerSpec, Resolution};
use crate::rng::{complex_normal, stream};
use num_complex::Complex64;
use rand::Rng;

/// One evaluated subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetScore {
    pub columns: Vec<usize>,
    pub mse: f64,
}

/// C(n, k) with saturation guard.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn lexicographic_subsets(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut current: Option<Vec<usize>> = Some((0..k).collect());
    std::iter::from_fn(move || {
        let out = current.clone()?;
        // advance to the next combination
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                current = None;
                break;
            }
            i -= 1;
            if next[i] < n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                current = Some(next);
                break;
            }
        }
        Some(out)
    })
}

fn argmin(table: &[SubsetScore]) -> Vec<usize> {
    // ties break to the lexicographically smallest column set
    let mut best: Option<&SubsetScore> = None;
    for s in table {
        let better = match best {
            None => true,
            Some(b) => s.mse < b.mse || (s.mse == b.mse && s.columns < b.columns),
        };
        if better {
            best = Some(s);
        }
    }
    best.expect("empty score table").columns.clone()
}

/// Evaluate every K-subset of the tau DFT columns in lexicographic order.
/// Returns the argmin subset and the full score table.
pub fn dft_exhaustive_search<F>(
    tau: usize,
    k: usize,
    budget: usize,
    mut evaluate: F,
) -> Result<(Vec<usize>, Vec<SubsetScore>)>
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    if k == 0 || k > tau {
        return Err(Error::Precondition(format!("need 1 <= K <= tau, got K={k}, tau={tau}")));
    }
    let count = binomial(tau, k);
    if count > budget as u128 {
        return Err(Error::Precondition(format!(
            "C({tau},{k}) = {count} subsets exceeds the budget of {budget}; \
             use dft_random_search instead"
        )));
    }
    let mut table = Vec::with_capacity(count as usize);
    for columns in lexicographic_subsets(tau, k) {
        let mse = evaluate(&columns)?;
        table.push(SubsetScore { columns, mse });
    }
    Ok((argmin(&table), table))
}

/// Evaluate up to `n_candidates` distinct uniformly sampled K-subsets. The
/// sample is deduplicated; if `n_candidates` reaches C(tau, K) every subset is
/// eventually drawn, so the result matches the exhaustive argmin.
pub fn dft_random_search<F, R>(
    tau: usize,
    k: usize,
    n_candidates: usize,
    mut evaluate: F,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<SubsetScore>)>
where
    F: FnMut(&[usize]) -> Result<f64>,
    R: Rng + ?Sized,
{
    if n_candidates == 0 {
        return Err(Error::Precondition("n_candidates must be >= 1".into()));
    }
    if k == 0 || k > tau {
        return Err(Error::Precondition(format!("need 1 <= K <= tau, got K={k}, tau={tau}")));
    }
    let total = binomial(tau, k);
    let target = (n_candidates as u128).min(total) as usize;
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut table = Vec::with_capacity(target);
    while table.len() < target {
        // sorted K-subset via partial Fisher-Yates
        let mut pool: Vec<usize> = (0..tau).collect();
        for i in 0..k {
            let j = rng.random_range(i..tau);
            pool.swap(i, j);
        }
        let mut columns = pool[..k].to_vec();
        columns.sort_unstable();
        if seen.insert(columns.clone()) {
            let mse = evaluate(&columns)?;
            table.push(SubsetScore { columns, mse });
        }
    }
    Ok((argmin(&table), table))
}

/// Fixed-seed Monte-Carlo evaluator: 1-bit BLMMSE per-entry MSE of a DFT
/// column subset at one (channel, SNR) point. Every subset sees the same
/// channel and noise draws.
pub fn blmmse_subset_evaluator(
    channel: ChannelModel,
    tau: usize,
    resolution: Resolution,
    rho: f64,
    n0: f64,
    trials: usize,
    seed: u64,
    scaling: OneBitScaling,
) -> impl FnMut(&[usize]) -> Result<f64> {
    move |columns: &[usize]| {
        let pilot = dft_pilot(tau, columns)?;
        let spec = QuantizerSpec::new(resolution, input_sigma(channel.k, rho, n0)?)?;
        let raw_weights = if resolution == Resolution::OneBit && scaling == OneBitScaling::RawCodes
        {
            Some(one_bit_blmmse_weights(&pilot, rho, n0, channel.m)?)
        } else {
            None
        };
        let mut rng = stream(seed, "dft-search", 0);
        let mut sum = 0.0;
        for _ in 0..trials {
            let hv = vectorize(&channel.sample(&mut rng));
            let mut y = effective_apply(&pilot, rho, &hv, channel.m)?;
            for v in y.iter_mut() {
                *v += complex_normal(&mut rng, n0);
            }
            let est = match &raw_weights {
                Some(w) => {
                    let codes: Vec<Complex64> = y
                        .iter()
                        .map(|z| {
                            Complex64::new(
                                if z.re < 0.0 { -1.0 } else { 1.0 },
                                if z.im < 0.0 { -1.0 } else { 1.0 },
                            )
                        })
                        .collect();
                    (w * nalgebra::DVector::from_vec(codes)).as_slice().to_vec()
                }
                None => {
                    let y_re = crate::channel::real_stack(&y);
                    let (_, codes) = quantize(&y_re, &spec)?;
                    let levels: Vec<f64> =
                        codes.into_iter().map(|c| spec.optimal_level(c)).collect();
                    let r = crate::channel::complex_unstack(&levels)?;
                    blmmse_orthogonal(&r, &pilot, rho, n0, spec.eta, channel.m)?
                }
            };
            sum += mse_per_entry(&hv, &est)?;
        }
        Ok(sum / trials as f64)
    }
}
