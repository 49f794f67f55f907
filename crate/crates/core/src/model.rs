//! Multi-valued diagnostic model and the partition algebra induced by symptoms.
//!
//! A [`DiagnosisModel`] pairs a set of mutually exclusive system conditions
//! (each with a strictly positive prior) with a crisp diagnostic matrix whose
//! entry `(i, r)` is the value symptom `r` takes when the system is in
//! condition `i`. Selecting symptoms groups the conditions into blocks that
//! remain indistinguishable; those groupings are [`Partition`]s.

use std::collections::{BTreeSet, HashSet};

use crate::error::{Error, Result};

/// Absolute tolerance on `|Σ P(e_i) − 1|` accepted by validation.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Conditions `e_i` with their prior probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSet {
    names: Vec<String>,
    probs: Vec<f64>,
}

impl ConditionSet {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// The symptom value alphabet `{0, …, λ−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ValueAlphabet(u32);

impl ValueAlphabet {
    pub fn new(lambda: u32) -> Result<Self> {
        if lambda < 2 {
            return Err(Error::InvalidAlphabet(lambda));
        }
        Ok(ValueAlphabet(lambda))
    }

    pub fn lambda(self) -> u32 {
        self.0
    }

    pub fn contains(self, value: u32) -> bool {
        value < self.0
    }
}

/// `n × t` grid of symptom values, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticMatrix {
    values: Vec<u32>,
    rows: usize,
    symptom_names: Vec<String>,
    alphabet: ValueAlphabet,
}

impl DiagnosticMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.symptom_names.len()
    }

    pub fn alphabet(&self) -> ValueAlphabet {
        self.alphabet
    }

    pub fn symptom_names(&self) -> &[String] {
        &self.symptom_names
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.values[row * self.cols() + col]
    }

    pub fn row(&self, row: usize) -> &[u32] {
        let t = self.cols();
        &self.values[row * t..(row + 1) * t]
    }
}

/// Unvalidated model data, as read from a document.
///
/// Integers are kept signed so that validation, not parsing, reports
/// out-of-alphabet entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawModel {
    pub lambda: i64,
    pub conditions: Vec<(String, f64)>,
    pub symptoms: Vec<String>,
    pub matrix: Vec<Vec<i64>>,
}

impl RawModel {
    /// Validates the data. With `renormalize` the priors are rescaled to sum
    /// to one before the sum check; otherwise they are kept verbatim.
    pub fn validate(self, renormalize: bool) -> Result<DiagnosisModel> {
        let RawModel {
            lambda,
            conditions,
            symptoms,
            matrix,
        } = self;

        if conditions.is_empty() {
            return Err(Error::EmptyConditionSet);
        }
        let lambda = u32::try_from(lambda).map_err(|_| Error::InvalidAlphabet(0))?;
        let alphabet = ValueAlphabet::new(lambda)?;
        if symptoms.is_empty() {
            return Err(Error::NoSymptoms);
        }
        let n = conditions.len();
        let t = symptoms.len();
        if matrix.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} rows but there are {n} conditions",
                matrix.len()
            )));
        }
        if let Some((i, row)) = matrix.iter().enumerate().find(|(_, r)| r.len() != t) {
            return Err(Error::DimensionMismatch(format!(
                "matrix row {i} has {} entries but there are {t} symptoms",
                row.len()
            )));
        }
        check_unique("condition", conditions.iter().map(|(name, _)| name))?;
        check_unique("symptom", symptoms.iter())?;

        let (names, mut probs): (Vec<String>, Vec<f64>) = conditions.into_iter().unzip();
        for (name, &p) in names.iter().zip(&probs) {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::ZeroOrNegativeProbability {
                    name: name.clone(),
                    p,
                });
            }
        }
        if renormalize {
            let total: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= total);
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::ProbabilitySumOutOfTolerance {
                sum,
                tolerance: SUM_TOLERANCE,
            });
        }

        let mut values = Vec::with_capacity(n * t);
        for (row, entries) in matrix.iter().enumerate() {
            for (col, &value) in entries.iter().enumerate() {
                if value < 0 || value >= i64::from(lambda) {
                    return Err(Error::MatrixValueOutOfAlphabet {
                        row,
                        col,
                        value,
                        lambda,
                    });
                }
                values.push(value as u32);
            }
        }

        Ok(DiagnosisModel {
            conditions: ConditionSet { names, probs },
            matrix: DiagnosticMatrix {
                values,
                rows: n,
                symptom_names: symptoms,
                alphabet,
            },
        })
    }
}

fn check_unique<'a>(kind: &'static str, names: impl Iterator<Item = &'a String>) -> Result<()> {
    let mut seen = HashSet::new();
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateName {
                kind,
                name: name.clone(),
            });
        }
    }
    Ok(())
}

/// Validates raw model data without renormalization.
pub fn validate_model(raw: RawModel) -> Result<DiagnosisModel> {
    raw.validate(false)
}

/// A validated diagnostic model. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisModel {
    conditions: ConditionSet,
    matrix: DiagnosticMatrix,
}

impl DiagnosisModel {
    /// Number of conditions `n`.
    pub fn n(&self) -> usize {
        self.conditions.len()
    }

    /// Number of symptoms `t`.
    pub fn t(&self) -> usize {
        self.matrix.cols()
    }

    pub fn lambda(&self) -> u32 {
        self.matrix.alphabet.lambda()
    }

    pub fn alphabet(&self) -> ValueAlphabet {
        self.matrix.alphabet
    }

    pub fn conditions(&self) -> &ConditionSet {
        &self.conditions
    }

    pub fn matrix(&self) -> &DiagnosticMatrix {
        &self.matrix
    }

    pub fn priors(&self) -> &[f64] {
        &self.conditions.probs
    }

    pub fn prior(&self, condition: usize) -> f64 {
        self.conditions.probs[condition]
    }

    pub fn condition_name(&self, condition: usize) -> &str {
        &self.conditions.names[condition]
    }

    pub fn symptom_name(&self, symptom: usize) -> &str {
        &self.matrix.symptom_names[symptom]
    }

    pub fn condition_index(&self, name: &str) -> Option<usize> {
        self.conditions.names.iter().position(|n| n == name)
    }

    pub fn symptom_index(&self, name: &str) -> Option<usize> {
        self.matrix.symptom_names.iter().position(|n| n == name)
    }

    /// The crisp relation `R(d_r / e_i)`.
    #[inline]
    pub fn value(&self, condition: usize, symptom: usize) -> u32 {
        self.matrix.get(condition, symptom)
    }

    pub fn column(&self, symptom: usize) -> impl Iterator<Item = u32> + '_ {
        (0..self.n()).map(move |i| self.value(i, symptom))
    }

    /// True when every condition shows the same value for `symptom`.
    pub fn is_constant_column(&self, symptom: usize) -> bool {
        let first = self.value(0, symptom);
        self.column(symptom).all(|v| v == first)
    }

    /// True when no two rows of the matrix coincide.
    pub fn rows_distinct(&self) -> bool {
        let mut seen = HashSet::new();
        (0..self.n()).all(|i| seen.insert(self.matrix.row(i)))
    }

    pub fn to_raw(&self) -> RawModel {
        RawModel {
            lambda: i64::from(self.lambda()),
            conditions: self
                .conditions
                .names
                .iter()
                .cloned()
                .zip(self.conditions.probs.iter().copied())
                .collect(),
            symptoms: self.matrix.symptom_names.clone(),
            matrix: (0..self.n())
                .map(|i| self.matrix.row(i).iter().map(|&v| i64::from(v)).collect())
                .collect(),
        }
    }

    fn check_symptom(&self, symptom: usize) -> Result<()> {
        if symptom >= self.t() {
            return Err(Error::IndexOutOfRange {
                what: "symptom",
                index: symptom,
                len: self.t(),
            });
        }
        Ok(())
    }
}

/// One block `E_j` of a partition: sorted member indices, cached `p_j`, and
/// the values the inducing symptoms take on every member.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    members: Vec<usize>,
    prob: f64,
    signature: Vec<u32>,
}

impl Block {
    fn new(members: Vec<usize>, signature: Vec<u32>, model: &DiagnosisModel) -> Self {
        let prob = members.iter().map(|&i| model.prior(i)).sum();
        Block {
            members,
            prob,
            signature,
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Block probability `p_j`.
    pub fn prob(&self) -> f64 {
        self.prob
    }

    /// Block size `n_j`.
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Values of the inducing symptoms, in application order.
    pub fn signature(&self) -> &[u32] {
        &self.signature
    }

    pub fn is_singleton(&self) -> bool {
        self.members.len() == 1
    }
}

/// Ordered, disjoint, non-empty blocks of condition indices plus the
/// symptoms (`D_k`) that induced them.
///
/// Partitions built from [`trivial_partition`] cover every condition. A
/// partition obtained through [`Partition::restrict`] covers a single block
/// of a larger one; all measures then report that block's contribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    blocks: Vec<Block>,
    inducing: Vec<usize>,
}

impl Partition {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, index: usize) -> Result<&Block> {
        self.blocks.get(index).ok_or(Error::IndexOutOfRange {
            what: "block",
            index,
            len: self.blocks.len(),
        })
    }

    /// Block count `m_k`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn inducing_symptoms(&self) -> &[usize] {
        &self.inducing
    }

    /// Number of conditions covered.
    pub fn covered(&self) -> usize {
        self.blocks.iter().map(Block::size).sum()
    }

    /// Total probability of the covered conditions.
    pub fn mass(&self) -> f64 {
        self.blocks.iter().map(Block::prob).sum()
    }

    pub fn is_discrete(&self) -> bool {
        self.blocks.iter().all(Block::is_singleton)
    }

    /// Every condition in its own block (no inducing symptoms).
    pub fn discrete(model: &DiagnosisModel) -> Self {
        Partition {
            blocks: (0..model.n())
                .map(|i| Block::new(vec![i], Vec::new(), model))
                .collect(),
            inducing: Vec::new(),
        }
    }

    /// One block holding `members` (any order, no duplicates).
    pub fn from_members(model: &DiagnosisModel, members: &[usize]) -> Result<Partition, String> {
        let mut sorted = members.to_vec();
        sorted.sort_unstable();
        if sorted.is_empty() {
            return Err("empty block".into());
        }
        if sorted.windows(2).any(|w| w[0] == w[1]) || sorted[sorted.len() - 1] >= model.n() {
            return Err(format!("invalid block members {members:?}"));
        }
        Ok(Partition {
            blocks: vec![Block::new(sorted, Vec::new(), model)],
            inducing: Vec::new(),
        })
    }

    /// Full-coverage partition from explicit member lists, in the given order.
    pub fn from_blocks(
        model: &DiagnosisModel,
        blocks: Vec<Vec<usize>>,
    ) -> Result<Partition, String> {
        let partition = Partition {
            blocks: blocks
                .into_iter()
                .map(|mut members| {
                    members.sort_unstable();
                    Block::new(members, Vec::new(), model)
                })
                .collect(),
            inducing: Vec::new(),
        };
        partition.check_full(model)?;
        Ok(partition)
    }

    /// The single-block partition of block `index`'s members, keeping the
    /// inducing symptom list.
    pub fn restrict(&self, index: usize) -> Result<Partition> {
        Ok(Partition {
            blocks: vec![self.block(index)?.clone()],
            inducing: self.inducing.clone(),
        })
    }

    /// Blocks as a set of member lists, ignoring order and signatures.
    pub fn family(&self) -> BTreeSet<Vec<usize>> {
        self.blocks.iter().map(|b| b.members.clone()).collect()
    }

    /// Same blocks regardless of order.
    pub fn same_family(&self, other: &Partition) -> bool {
        self.family() == other.family()
    }

    /// Position of the block holding each covered condition (`None` elsewhere).
    pub fn block_lookup(&self, n: usize) -> Vec<Option<usize>> {
        let mut lookup = vec![None; n];
        for (j, block) in self.blocks.iter().enumerate() {
            for &i in &block.members {
                if i < n {
                    lookup[i] = Some(j);
                }
            }
        }
        lookup
    }

    /// Checks disjointness, full coverage of the model's conditions, cached
    /// block data and the probability sum.
    pub fn check_full(&self, model: &DiagnosisModel) -> Result<(), String> {
        let mut seen = vec![false; model.n()];
        for (j, block) in self.blocks.iter().enumerate() {
            if block.members.is_empty() {
                return Err(format!("block {j} is empty"));
            }
            if !block.members.windows(2).all(|w| w[0] < w[1]) {
                return Err(format!("block {j} members are not sorted"));
            }
            for &i in &block.members {
                if i >= model.n() {
                    return Err(format!("block {j} holds unknown condition {i}"));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(format!("condition {i} appears twice"));
                }
            }
            let p: f64 = block.members.iter().map(|&i| model.prior(i)).sum();
            if (p - block.prob).abs() > 1e-12 {
                return Err(format!(
                    "block {j} caches p = {} but members sum to {p}",
                    block.prob
                ));
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(format!("condition {i} is not covered"));
        }
        if (self.mass() - 1.0).abs() > 1e-12 + SUM_TOLERANCE {
            return Err(format!("block probabilities sum to {}", self.mass()));
        }
        Ok(())
    }
}

/// The pre-selection state: one block holding every condition.
pub fn trivial_partition(model: &DiagnosisModel) -> Partition {
    Partition {
        blocks: vec![Block::new((0..model.n()).collect(), Vec::new(), model)],
        inducing: Vec::new(),
    }
}

/// Groups the conditions by the value of one symptom.
pub fn induce_partition(model: &DiagnosisModel, symptom: usize) -> Result<Partition> {
    refine_partition(&trivial_partition(model), model, symptom)
}

/// Splits every block by the value of `symptom`. Sub-blocks keep the parent
/// order, then ascending value; empty value classes are dropped.
pub fn refine_partition(
    partition: &Partition,
    model: &DiagnosisModel,
    symptom: usize,
) -> Result<Partition> {
    model.check_symptom(symptom)?;
    if partition.inducing.contains(&symptom) {
        return Err(Error::SymptomAlreadyApplied(symptom));
    }
    let lambda = model.lambda() as usize;
    let mut blocks = Vec::with_capacity(partition.blocks.len());
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); lambda];
    for parent in &partition.blocks {
        for &i in &parent.members {
            buckets[model.value(i, symptom) as usize].push(i);
        }
        for (value, bucket) in buckets.iter_mut().enumerate() {
            if bucket.is_empty() {
                continue;
            }
            let mut signature = parent.signature.clone();
            signature.push(value as u32);
            blocks.push(Block::new(std::mem::take(bucket), signature, model));
        }
    }
    let mut inducing = partition.inducing.clone();
    inducing.push(symptom);
    Ok(Partition { blocks, inducing })
}

/// Applies `symptoms` in order starting from the trivial partition.
pub fn partition_by(model: &DiagnosisModel, symptoms: &[usize]) -> Result<Partition> {
    symptoms.iter().try_fold(trivial_partition(model), |p, &s| {
        refine_partition(&p, model, s)
    })
}

/// Posterior `Q(e) = P(e) / p_j` of each member of a block.
pub fn conditional_probs(
    partition: &Partition,
    block: usize,
    model: &DiagnosisModel,
) -> Result<Vec<f64>> {
    let block = partition.block(block)?;
    Ok(block
        .members
        .iter()
        .map(|&i| model.prior(i) / block.prob)
        .collect())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn model(probs: &[f64], lambda: i64, matrix: &[&[i64]]) -> DiagnosisModel {
        let t = matrix.first().map_or(0, |r| r.len());
        RawModel {
            lambda,
            conditions: probs
                .iter()
                .enumerate()
                .map(|(i, &p)| (format!("e{}", i + 1), p))
                .collect(),
            symptoms: (1..=t).map(|r| format!("d{r}")).collect(),
            matrix: matrix.iter().map(|r| r.to_vec()).collect(),
        }
        .validate(false)
        .unwrap()
    }

    pub const E5: [f64; 5] = [0.05, 0.05, 0.84, 0.03, 0.03];
}
