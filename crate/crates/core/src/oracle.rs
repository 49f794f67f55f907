//! Brute-force verification of the measures and exhaustive tree search.
//!
//! Random instances come from a ChaCha8 generator (`rand_chacha`) seeded with
//! a 64-bit value, so every instance and every report is reproducible from
//! its seed. The independent side of each identity is computed here by
//! direct enumeration: conditions are grouped by their value tuples, block
//! masses are summed from the priors, and pair sums are explicit double
//! loops. None of that goes through the closed forms being checked.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::entropy::{
    hb_block, hb_closed, hb_pairwise, hb_partition, jb_conditional_forms, jb_information,
    jb_pairwise_oracle, jb_set_forms, shannon_information, shannon_partition_entropy,
};
use crate::error::{Error, Result};
use crate::model::{
    induce_partition, refine_partition, trivial_partition, DiagnosisModel, Partition, RawModel,
};
use crate::planner::{build_tree, path_ledger, Criterion};

/// Largest `n` and `t` accepted by [`exhaustive_optimal_tree`].
pub const EXHAUSTIVE_LIMIT: usize = 8;

/// Smallest component accepted from a random-simplex draw.
pub const PRIOR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorDistribution {
    Uniform,
    RandomSimplex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub t: usize,
    pub lambda: u32,
    pub prior: PriorDistribution,
    pub seed: u64,
}

/// Deterministic random model: uniform matrix entries, priors either uniform
/// or normalized exponential draws (re-drawn while any falls below
/// [`PRIOR_FLOOR`]).
pub fn generate_instance(spec: &InstanceSpec) -> Result<DiagnosisModel> {
    if spec.n == 0 || spec.t == 0 || spec.lambda < 2 {
        return Err(Error::InvalidSpec(format!(
            "need n >= 1, t >= 1, lambda >= 2 (got n = {}, t = {}, lambda = {})",
            spec.n, spec.t, spec.lambda
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let probs = match spec.prior {
        PriorDistribution::Uniform => vec![1.0 / spec.n as f64; spec.n],
        PriorDistribution::RandomSimplex => loop {
            let draws: Vec<f64> = (0..spec.n).map(|_| rng.sample(Exp1)).collect();
            let total: f64 = draws.iter().sum();
            let probs: Vec<f64> = draws.iter().map(|d| d / total).collect();
            if probs.iter().all(|&p| p >= PRIOR_FLOOR) {
                break probs;
            }
        },
    };
    let matrix = (0..spec.n)
        .map(|_| {
            (0..spec.t)
                .map(|_| i64::from(rng.gen_range(0..spec.lambda)))
                .collect()
        })
        .collect();
    RawModel {
        lambda: i64::from(spec.lambda),
        conditions: probs
            .into_iter()
            .enumerate()
            .map(|(i, p)| (format!("e{}", i + 1), p))
            .collect(),
        symptoms: (1..=spec.t).map(|r| format!("d{r}")).collect(),
        matrix,
    }
    .validate(false)
}

/// `count` specs with `n ∈ [1, max_n]`, `t ∈ [1, max_t]`,
/// `λ ∈ [2, max_lambda]`, every fourth with uniform priors, derived from `seed`.
pub fn instance_corpus(
    count: usize,
    max_n: usize,
    max_t: usize,
    max_lambda: u32,
    seed: u64,
) -> Vec<InstanceSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| InstanceSpec {
            n: rng.gen_range(1..=max_n),
            t: rng.gen_range(1..=max_t),
            lambda: rng.gen_range(2..=max_lambda),
            prior: if k % 4 == 3 {
                PriorDistribution::Uniform
            } else {
                PriorDistribution::RandomSimplex
            },
            seed: rng.gen(),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// direct computations

/// Conditions grouped by their value tuple on `symptoms`, each group sorted.
pub fn blocks_by_signature(model: &DiagnosisModel, symptoms: &[usize]) -> Vec<Vec<usize>> {
    let mut groups: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
    for i in 0..model.n() {
        let key = symptoms.iter().map(|&s| model.value(i, s)).collect();
        groups.entry(key).or_default().push(i);
    }
    let mut blocks: Vec<Vec<usize>> = groups.into_values().collect();
    blocks.sort();
    blocks
}

fn mass(model: &DiagnosisModel, members: &[usize]) -> f64 {
    members.iter().map(|&i| model.prior(i)).sum()
}

/// `Σ P(a) + P(b)` over unordered pairs inside `members`.
pub fn within_pair_mass(model: &DiagnosisModel, members: &[usize]) -> f64 {
    let mut total = 0.0;
    for (k, &a) in members.iter().enumerate() {
        for &b in &members[k + 1..] {
            total += model.prior(a) + model.prior(b);
        }
    }
    total
}

/// Information of a symptom set over the whole condition set, through the
/// block sizes and masses of the grouping it induces: `Σ n_j (1 − p_j)`.
pub fn set_information_direct(model: &DiagnosisModel, symptoms: &[usize]) -> f64 {
    blocks_by_signature(model, symptoms)
        .iter()
        .map(|b| b.len() as f64 * (1.0 - mass(model, b)))
        .sum()
}

// ---------------------------------------------------------------------------
// identity report

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub tolerance: f64,
    pub max_deviation: f64,
    pub evaluations: usize,
    pub violations: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub trials: usize,
    pub n: usize,
    pub t: usize,
    pub lambda: u32,
    pub checks: Vec<IdentityCheck>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    max_deviation: f64,
    evaluations: usize,
    violations: usize,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tally {
            name,
            tolerance,
            max_deviation: 0.0,
            evaluations: 0,
            violations: 0,
        }
    }

    /// Records `|a − b|`.
    fn eq(&mut self, a: f64, b: f64) {
        self.deviation((a - b).abs());
    }

    /// Records a nonnegative deviation; NaN counts as a violation.
    fn deviation(&mut self, dev: f64) {
        self.evaluations += 1;
        if dev.is_nan() || dev > self.tolerance {
            self.violations += 1;
        }
        if dev.is_nan() || dev > self.max_deviation {
            self.max_deviation = if dev.is_nan() { f64::INFINITY } else { dev };
        }
    }

    /// Records a boolean condition (deviation 0 or 1).
    fn holds(&mut self, ok: bool) {
        self.deviation(if ok { 0.0 } else { 1.0 });
    }

    fn finish(self) -> IdentityCheck {
        IdentityCheck {
            name: self.name,
            tolerance: self.tolerance,
            max_deviation: self.max_deviation,
            evaluations: self.evaluations,
            violations: self.violations,
            passed: self.violations == 0,
        }
    }
}

/// Closed-form tolerance.
const EXACT: f64 = 1e-12;
/// Tolerance for sums accumulated over many blocks or steps.
const ACCUMULATED: f64 = 1e-9;

/// Runs every identity over `trials` random symptom sequences drawn from
/// `model` with the given seed, plus the model-level checks once.
pub fn check_identities(
    model: &DiagnosisModel,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.n();
    let t = model.t();
    let lambda = model.lambda();
    let base = lambda;
    let priors = model.priors();

    let mut pair_closed = Tally::new("pairwise_equals_closed_form", EXACT);
    let mut initial = Tally::new("initial_entropy_n_minus_one", EXACT);
    let mut cardinality = Tally::new("cardinality_difference", EXACT);
    let mut single = Tally::new("single_condition_zero", 0.0);
    let mut block_form = Tally::new("block_closed_form", EXACT);
    let mut partition_sum = Tally::new("partition_sum_of_blocks", EXACT);
    let mut discrete = Tally::new("discrete_partition_zero", 0.0);
    let mut linearity = Tally::new("scaling_linearity", EXACT);
    let mut dual_forms = Tally::new("set_information_dual_forms", EXACT);
    let mut separated = Tally::new("separated_pair_mass", EXACT);
    let mut cond_forms = Tally::new("conditional_information_forms", EXACT);
    let mut set_plus = Tally::new("set_plus_symptom_additivity", ACCUMULATED);
    let mut sequence = Tally::new("sequence_additivity", ACCUMULATED);
    let mut tree_paths = Tally::new("tree_path_additivity", ACCUMULATED);
    let mut block_bound = Tally::new("block_count_bound", 0.0);
    let mut monotone = Tally::new("entropy_monotone", EXACT);
    let mut nonneg = Tally::new("information_nonnegative", EXACT);
    let mut constant_zero = Tally::new("constant_symptom_zero", 0.0);
    let mut shannon_add = Tally::new("shannon_additivity", ACCUMULATED);

    // model-level checks
    let pairwise = hb_pairwise(priors)?.value;
    pair_closed.eq(pairwise, hb_closed(priors)?.value);
    initial.eq(pairwise, n as f64 - 1.0);
    initial.eq(
        hb_partition(&trivial_partition(model)).value,
        n as f64 - 1.0,
    );
    single.eq(hb_pairwise(&[1.0])?.value, 0.0);
    single.eq(hb_closed(&[1.0])?.value, 0.0);
    if n == 1 {
        single.eq(hb_partition(&trivial_partition(model)).value, 0.0);
    }
    discrete.eq(hb_partition(&Partition::discrete(model)).value, 0.0);
    let all: Vec<usize> = (0..t).collect();
    if blocks_by_signature(model, &all)
        .iter()
        .all(|b| b.len() == 1)
    {
        let p = crate::model::partition_by(model, &all)?;
        discrete.eq(hb_partition(&p).value, 0.0);
    }
    let trivial = trivial_partition(model);
    for r in 0..t {
        let induced = induce_partition(model, r)?;
        let jb = jb_information(&trivial, &induced)?.value;
        let js = shannon_information(&trivial, &induced, model, base)?.value;
        let constant = model.is_constant_column(r);
        constant_zero.holds((jb <= EXACT) == constant);
        constant_zero.holds((js <= EXACT) == constant);
    }
    for criterion in [Criterion::combinatorial(), Criterion::shannon_for(model)] {
        let (tree, report) = build_tree(model, criterion)?;
        for path in tree.paths() {
            let ledger = path_ledger(model, criterion, &path.symptoms)?;
            let sum: f64 = ledger.iter().map(|s| s.information).sum();
            let whole = match criterion.kind {
                crate::planner::CriterionKind::Combinatorial => {
                    set_information_direct(model, &path.symptoms)
                }
                crate::planner::CriterionKind::Shannon => {
                    let p = crate::model::partition_by(model, &path.symptoms)?;
                    shannon_information(&trivial, &p, model, base)?.value
                }
            };
            tree_paths.eq(sum, whole);
        }
        tree_paths.eq(
            report.total_information,
            report.initial_entropy - report.residual_entropy,
        );
    }

    for _ in 0..trials {
        // random positive weights, deliberately unnormalized
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..2.0)).collect();
        let w_pair = hb_pairwise(&weights)?.value;
        pair_closed.eq(w_pair, hb_closed(&weights)?.value);
        for c in [0.25, 1.0, 3.5] {
            let scaled: Vec<f64> = weights.iter().map(|w| c * w).collect();
            linearity.eq(hb_pairwise(&scaled)?.value, c * w_pair);
        }

        // sub-system with renormalized priors
        let mut subset: Vec<usize> = (0..n).collect();
        subset.shuffle(&mut rng);
        subset.truncate(rng.gen_range(1..=n));
        let sub_mass = mass(model, &subset);
        let sub_priors: Vec<f64> = subset.iter().map(|&i| model.prior(i) / sub_mass).collect();
        cardinality.eq(
            hb_closed(priors)?.value - hb_pairwise(&sub_priors)?.value,
            n as f64 - subset.len() as f64,
        );

        // random symptom sequence
        let mut order: Vec<usize> = (0..t).collect();
        order.shuffle(&mut rng);
        order.truncate(rng.gen_range(1..=t));

        let mut prev = trivial_partition(model);
        let mut cb_steps = 0.0;
        let mut sh_steps = 0.0;
        for k in 0..order.len() {
            let ds = order[k];
            let next = refine_partition(&prev, model, ds)?;

            let bound = (lambda as f64).powi(k as i32 + 1).min(n as f64);
            block_bound.holds(next.len() as f64 <= bound);

            for block in next.blocks() {
                block_form.eq(
                    hb_block(block.prob(), block.size())?.value,
                    within_pair_mass(model, block.members()),
                );
            }
            let direct: f64 = blocks_by_signature(model, &order[..=k])
                .iter()
                .map(|b| within_pair_mass(model, b))
                .sum();
            partition_sum.eq(hb_partition(&next).value, direct);

            // raw differences, before any clamping
            let hb_drop = hb_partition(&prev).value - hb_partition(&next).value;
            monotone.deviation((-hb_drop).max(0.0));
            nonneg.deviation((-hb_drop).max(0.0));
            let sh_drop = shannon_partition_entropy(&prev, model, base)?.value
                - shannon_partition_entropy(&next, model, base)?.value;
            monotone.deviation((-sh_drop).max(0.0));
            nonneg.deviation((-sh_drop).max(0.0));

            let jb = jb_information(&prev, &next)?.value;
            separated.eq(jb, jb_pairwise_oracle(model, &prev, &next)?.value);
            let (fa, fb) = jb_conditional_forms(&prev, &next)?;
            cond_forms.eq(fa, jb);
            cond_forms.eq(fb, jb);

            // J(D ∪ d) = J(D) + J(d | D)
            let joint = set_information_direct(model, &order[..=k]);
            set_plus.eq(joint, jb_set_forms(&prev).0 + jb);

            cb_steps += fa;
            sh_steps += shannon_information(&prev, &next, model, base)?.value;
            prev = next;
        }
        sequence.eq(cb_steps, set_information_direct(model, &order));
        shannon_add.eq(
            sh_steps,
            shannon_information(&trivial, &prev, model, base)?.value,
        );

        // a single random symptom against the trivial partition
        let r = rng.gen_range(0..t);
        let induced = induce_partition(model, r)?;
        let (fa, fb) = jb_set_forms(&induced);
        let jb = jb_information(&trivial, &induced)?.value;
        dual_forms.eq(fa, fb);
        dual_forms.eq(fa, jb);
        separated.eq(jb, jb_pairwise_oracle(model, &trivial, &induced)?.value);
    }

    let checks = [
        pair_closed,
        initial,
        cardinality,
        single,
        block_form,
        partition_sum,
        discrete,
        linearity,
        dual_forms,
        separated,
        cond_forms,
        set_plus,
        sequence,
        tree_paths,
        block_bound,
        monotone,
        nonneg,
        constant_zero,
        shannon_add,
    ]
    .into_iter()
    .map(Tally::finish)
    .collect();

    Ok(VerificationReport {
        seed,
        trials,
        n,
        t,
        lambda,
        checks,
    })
}

// ---------------------------------------------------------------------------
// exhaustive search

/// Minimum expected test count over every adaptive tree that splits each
/// block until it is a single condition or no symptom separates it, with at
/// most `depth_cap` tests on any path. `None` when no such tree fits the cap.
///
/// The memo key is the block and the remaining depth: symptoms that split a
/// block were never used above it, so the used set adds nothing.
pub fn exhaustive_optimal_tree(model: &DiagnosisModel, depth_cap: usize) -> Result<Option<f64>> {
    if model.n() > EXHAUSTIVE_LIMIT || model.t() > EXHAUSTIVE_LIMIT {
        return Err(Error::InstanceTooLarge {
            n: model.n(),
            t: model.t(),
        });
    }
    let mut search = Exhaustive {
        model,
        memo: HashMap::new(),
    };
    let all = (1u64 << model.n()) - 1;
    Ok(search.cost(all, depth_cap.min(model.t())))
}

struct Exhaustive<'a> {
    model: &'a DiagnosisModel,
    memo: HashMap<(u64, usize), Option<f64>>,
}

impl Exhaustive<'_> {
    fn cost(&mut self, block: u64, depth_left: usize) -> Option<f64> {
        if block.count_ones() <= 1 {
            return Some(0.0);
        }
        if let Some(&known) = self.memo.get(&(block, depth_left)) {
            return known;
        }
        let members: Vec<usize> = (0..self.model.n())
            .filter(|&i| block >> i & 1 == 1)
            .collect();
        let p: f64 = members.iter().map(|&i| self.model.prior(i)).sum();
        let mut splits = Vec::new();
        for s in 0..self.model.t() {
            let mut children: Vec<(u32, u64)> = Vec::new();
            for &i in &members {
                let v = self.model.value(i, s);
                match children.iter_mut().find(|(cv, _)| *cv == v) {
                    Some((_, mask)) => *mask |= 1 << i,
                    None => children.push((v, 1 << i)),
                }
            }
            if children.len() > 1 {
                children.sort_unstable();
                splits.push(children);
            }
        }
        let best = if splits.is_empty() {
            Some(0.0)
        } else if depth_left == 0 {
            None
        } else {
            let mut best: Option<f64> = None;
            for children in splits {
                let mut total = p;
                let mut feasible = true;
                for (_, child) in children {
                    match self.cost(child, depth_left - 1) {
                        Some(c) => total += c,
                        None => {
                            feasible = false;
                            break;
                        }
                    }
                }
                if feasible && best.is_none_or(|b| total < b) {
                    best = Some(total);
                }
            }
            best
        };
        self.memo.insert((block, depth_left), best);
        best
    }
}

/// Size of the smallest symptom subset that separates every pair of
/// distinguishable conditions, by enumeration of subsets in size order.
pub fn min_separating_set(model: &DiagnosisModel) -> Result<usize> {
    if model.t() > 16 {
        return Err(Error::InstanceTooLarge {
            n: model.n(),
            t: model.t(),
        });
    }
    let all: Vec<usize> = (0..model.t()).collect();
    let finest = blocks_by_signature(model, &all).len();
    let mut best = model.t();
    for mask in 0u32..1 << model.t() {
        let size = mask.count_ones() as usize;
        if size >= best {
            continue;
        }
        let subset: Vec<usize> = all
            .iter()
            .copied()
            .filter(|&s| mask >> s & 1 == 1)
            .collect();
        if blocks_by_signature(model, &subset).len() == finest {
            best = size;
        }
    }
    Ok(best)
}
