//! Entropy and information measures.
//!
//! Two families live here:
//!
//! * the Shannon branch: `H(E) = −Σ P(e) log_λ P(e)`, its partition average
//!   `Σ p_j H(Q_j)` and the information `J = H(before) − H(after)`;
//! * the combinatorial-probabilistic branch: `H_B`, the sum of
//!   `P(e_a) + P(e_b)` over every unordered pair of conditions that still
//!   needs to be told apart, which collapses to `Σ p_j (n_j − 1)` over the
//!   blocks of a partition, and its information `J_B`, the probability mass
//!   of the pairs a refinement separates.
//!
//! Combinatorial measures accept unnormalized weights so that scaling
//! behaviour can be checked directly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{conditional_probs, DiagnosisModel, Partition};

/// Differences above `−CLAMP_EPS` are treated as zero.
pub const CLAMP_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Shannon,
    Combinatorial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureValue {
    pub value: f64,
    pub kind: MeasureKind,
}

impl MeasureValue {
    fn shannon(value: f64) -> Self {
        MeasureValue {
            value,
            kind: MeasureKind::Shannon,
        }
    }

    fn combinatorial(value: f64) -> Self {
        MeasureValue {
            value,
            kind: MeasureKind::Combinatorial,
        }
    }
}

fn clamp(diff: f64) -> f64 {
    if (-CLAMP_EPS..0.0).contains(&diff) {
        0.0
    } else {
        diff
    }
}

// ---------------------------------------------------------------------------
// Shannon branch

/// `−Σ p log_base p`, with `0 · log 0 = 0`.
pub fn shannon_entropy(probs: &[f64], base: u32) -> Result<MeasureValue> {
    if probs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if base < 2 {
        return Err(Error::InvalidBase(base));
    }
    if let Some(&p) = probs.iter().find(|&&p| p < 0.0 || p.is_nan()) {
        return Err(Error::NegativeProbability(p));
    }
    let ln_base = f64::from(base).ln();
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln() / ln_base)
        .sum();
    // −0.0 for a certain outcome
    Ok(MeasureValue::shannon(h.max(0.0)))
}

/// Average entropy left after the partition: `Σ_j p_j · H(Q_j)`.
pub fn shannon_partition_entropy(
    partition: &Partition,
    model: &DiagnosisModel,
    base: u32,
) -> Result<MeasureValue> {
    let mut total = 0.0;
    for (j, block) in partition.blocks().iter().enumerate() {
        if block.is_singleton() {
            continue;
        }
        let q = conditional_probs(partition, j, model)?;
        total += block.prob() * shannon_entropy(&q, base)?.value;
    }
    Ok(MeasureValue::shannon(total))
}

/// `H(before) − H(after)` for a refinement.
pub fn shannon_information(
    before: &Partition,
    after: &Partition,
    model: &DiagnosisModel,
    base: u32,
) -> Result<MeasureValue> {
    refinement_parents(before, after)?;
    let h0 = shannon_partition_entropy(before, model, base)?.value;
    let h1 = shannon_partition_entropy(after, model, base)?.value;
    Ok(MeasureValue::shannon(clamp(h0 - h1)))
}

// ---------------------------------------------------------------------------
// Combinatorial branch

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::EmptyInput);
    }
    match weights.iter().find(|&&w| w.is_nan() || w <= 0.0) {
        Some(&w) => Err(Error::NonpositiveWeight(w)),
        None => Ok(()),
    }
}

/// `Σ_{i<j} (w_i + w_j)` by explicit enumeration of pairs.
pub fn hb_pairwise(weights: &[f64]) -> Result<MeasureValue> {
    check_weights(weights)?;
    let mut total = 0.0;
    for i in 0..weights.len() {
        for j in i + 1..weights.len() {
            total += weights[i] + weights[j];
        }
    }
    Ok(MeasureValue::combinatorial(total))
}

/// Closed form `(n − 1) · Σ w_i`.
pub fn hb_closed(weights: &[f64]) -> Result<MeasureValue> {
    check_weights(weights)?;
    let n = weights.len() as f64;
    Ok(MeasureValue::combinatorial(
        (n - 1.0) * weights.iter().sum::<f64>(),
    ))
}

/// Contribution of one block: `p_j (n_j − 1)`.
pub fn hb_block(prob: f64, size: usize) -> Result<MeasureValue> {
    if prob.is_nan() || prob <= 0.0 || size == 0 {
        return Err(Error::InvalidBlock { p: prob, size });
    }
    Ok(MeasureValue::combinatorial(prob * (size as f64 - 1.0)))
}

/// `Σ_j p_j (n_j − 1)` over the blocks.
pub fn hb_partition(partition: &Partition) -> MeasureValue {
    let total = partition
        .blocks()
        .iter()
        .map(|b| b.prob() * (b.size() as f64 - 1.0))
        .sum();
    MeasureValue::combinatorial(total)
}

/// For each block of `after`, the index of the block of `before` holding it.
///
/// Fails unless both partitions cover the same conditions and every block of
/// `after` lies inside a single block of `before`.
pub fn refinement_parents(before: &Partition, after: &Partition) -> Result<Vec<usize>> {
    let n = before
        .blocks()
        .iter()
        .chain(after.blocks())
        .flat_map(|b| b.members().iter().copied())
        .max()
        .map_or(0, |m| m + 1);
    let lookup = before.block_lookup(n);
    if before.covered() != after.covered() {
        return Err(Error::NotARefinement);
    }
    let mut seen = vec![false; n];
    after
        .blocks()
        .iter()
        .map(|block| {
            let mut parent = None;
            for &i in block.members() {
                let j = lookup[i].ok_or(Error::NotARefinement)?;
                if std::mem::replace(&mut seen[i], true) || parent.is_some_and(|p| p != j) {
                    return Err(Error::NotARefinement);
                }
                parent = Some(j);
            }
            parent.ok_or(Error::NotARefinement)
        })
        .collect()
}

/// `H_B(before) − H_B(after)`.
///
/// From the trivial partition this is a symptom's (or symptom set's)
/// information; from a partition induced by `D_k` it is the conditional
/// information of whatever produced `after`.
pub fn jb_information(before: &Partition, after: &Partition) -> Result<MeasureValue> {
    refinement_parents(before, after)?;
    let diff = hb_partition(before).value - hb_partition(after).value;
    Ok(MeasureValue::combinatorial(clamp(diff)))
}

/// Set-information forms relative to the whole condition set:
/// `(Σ n_j (1 − p_j), Σ p_j (n − n_j))`.
///
/// Both equal `J_B` of the symptoms that induced a full-coverage partition.
pub fn jb_set_forms(partition: &Partition) -> (f64, f64) {
    let n = partition.covered() as f64;
    partition.blocks().iter().fold((0.0, 0.0), |(a, b), block| {
        let nj = block.size() as f64;
        (a + nj * (1.0 - block.prob()), b + block.prob() * (n - nj))
    })
}

/// Conditional-information forms over parent blocks `j` and their
/// sub-blocks `jl`: `(Σ n_jl (p_j − p_jl), Σ p_jl (n_j − n_jl))`.
pub fn jb_conditional_forms(before: &Partition, after: &Partition) -> Result<(f64, f64)> {
    let parents = refinement_parents(before, after)?;
    let mut forms = (0.0, 0.0);
    for (block, &j) in after.blocks().iter().zip(&parents) {
        let parent = &before.blocks()[j];
        let (njl, pjl) = (block.size() as f64, block.prob());
        forms.0 += njl * (parent.prob() - pjl);
        forms.1 += pjl * (parent.size() as f64 - njl);
    }
    Ok(forms)
}

/// Brute-force `J_B`: sums `P(e_a) + P(e_b)` over every unordered pair of
/// conditions sharing a block of `before` but split apart in `after`.
pub fn jb_pairwise_oracle(
    model: &DiagnosisModel,
    before: &Partition,
    after: &Partition,
) -> Result<MeasureValue> {
    refinement_parents(before, after)?;
    let n = model.n();
    let was = before.block_lookup(n);
    let now = after.block_lookup(n);
    let mut total = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            if was[a].is_some() && was[a] == was[b] && now[a] != now[b] {
                total += model.prior(a) + model.prior(b);
            }
        }
    }
    Ok(MeasureValue::combinatorial(total))
}
