//! Greedy sequential symptom selection and diagnosis trees.
//!
//! At every node holding a block of two or more conditions the planner picks
//! the symptom that delivers the most conditional information on that block,
//! splits the block by the symptom's values and recurses into each branch
//! independently. A branch stops when its block is a single condition or no
//! symptom can split it any further.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::entropy::{
    hb_partition, jb_information, shannon_information, shannon_partition_entropy,
};
use crate::error::{Error, Result};
use crate::model::{refine_partition, trivial_partition, DiagnosisModel, Partition};
use crate::oracle;

/// Information at or below this is treated as zero by the stop rule.
pub const POSITIVE_INFORMATION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    Shannon,
    Combinatorial,
}

/// Selection criterion: Shannon information `J` or combinatorial `J_B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Criterion {
    pub kind: CriterionKind,
    /// Logarithm base; only read by the Shannon criterion.
    pub shannon_base: u32,
}

impl Criterion {
    pub fn combinatorial() -> Self {
        Criterion {
            kind: CriterionKind::Combinatorial,
            shannon_base: 2,
        }
    }

    pub fn shannon(base: u32) -> Result<Self> {
        if base < 2 {
            return Err(Error::InvalidBase(base));
        }
        Ok(Criterion {
            kind: CriterionKind::Shannon,
            shannon_base: base,
        })
    }

    /// Shannon criterion in base `λ` of the model.
    pub fn shannon_for(model: &DiagnosisModel) -> Self {
        Criterion {
            kind: CriterionKind::Shannon,
            shannon_base: model.lambda(),
        }
    }

    /// Entropy the criterion assigns to a partition.
    pub fn entropy(&self, partition: &Partition, model: &DiagnosisModel) -> Result<f64> {
        match self.kind {
            CriterionKind::Combinatorial => Ok(hb_partition(partition).value),
            CriterionKind::Shannon => {
                Ok(shannon_partition_entropy(partition, model, self.shannon_base)?.value)
            }
        }
    }

    /// Information delivered by refining `before` into `after`.
    pub fn information(
        &self,
        before: &Partition,
        after: &Partition,
        model: &DiagnosisModel,
    ) -> Result<f64> {
        match self.kind {
            CriterionKind::Combinatorial => Ok(jb_information(before, after)?.value),
            CriterionKind::Shannon => {
                Ok(shannon_information(before, after, model, self.shannon_base)?.value)
            }
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            CriterionKind::Combinatorial => f.write_str("cb"),
            CriterionKind::Shannon => write!(f, "shannon (base {})", self.shannon_base),
        }
    }
}

/// Picks the symptom with the largest conditional information on
/// `partition`, skipping `excluded` and the partition's own inducing
/// symptoms. Ties go to the smallest index. `None` when nothing delivers
/// more than [`POSITIVE_INFORMATION`].
pub fn select_next(
    partition: &Partition,
    model: &DiagnosisModel,
    criterion: Criterion,
    excluded: &[usize],
) -> Result<Option<(usize, f64)>> {
    let mut best: Option<(usize, f64)> = None;
    for symptom in 0..model.t() {
        if excluded.contains(&symptom) || partition.inducing_symptoms().contains(&symptom) {
            continue;
        }
        let after = refine_partition(partition, model, symptom)?;
        let info = criterion.information(partition, &after, model)?;
        if best.is_none_or(|(_, b)| info > b) {
            best = Some((symptom, info));
        }
    }
    Ok(best.filter(|&(_, info)| info > POSITIVE_INFORMATION))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafStatus {
    Resolved,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Test {
        symptom: usize,
        /// `(value, child)` sorted by value; only realized values appear.
        branches: Vec<(u32, NodeId)>,
        /// Conditions reaching this node.
        members: Vec<usize>,
    },
    Leaf {
        members: Vec<usize>,
        /// `P(e) / p_leaf` for each member.
        posterior: Vec<f64>,
        status: LeafStatus,
    },
}

impl Node {
    pub fn members(&self) -> &[usize] {
        match self {
            Node::Test { members, .. } | Node::Leaf { members, .. } => members,
        }
    }
}

/// A root-to-leaf walk.
#[derive(Debug, Clone, PartialEq)]
pub struct TreePath {
    pub symptoms: Vec<usize>,
    pub values: Vec<u32>,
    pub leaf: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisTree {
    nodes: Vec<Node>,
    root: NodeId,
    lambda: u32,
    criterion: Criterion,
}

impl DiagnosisTree {
    /// Assembles a tree from an arena of nodes. Children must be stored after
    /// their parent. Use [`evaluate_tree`] to check the result against a model.
    pub fn from_nodes(
        nodes: Vec<Node>,
        root: NodeId,
        lambda: u32,
        criterion: Criterion,
    ) -> Result<Self> {
        if root.0 >= nodes.len() {
            return Err(Error::TreeModelMismatch("root is not a node".into()));
        }
        for (id, node) in nodes.iter().enumerate() {
            if let Node::Test { branches, .. } = node {
                if branches
                    .iter()
                    .any(|&(_, c)| c.0 <= id || c.0 >= nodes.len())
                {
                    return Err(Error::TreeModelMismatch(format!(
                        "node {id} has an invalid child"
                    )));
                }
            }
        }
        Ok(DiagnosisTree {
            nodes,
            root,
            lambda,
            criterion,
        })
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    pub fn criterion(&self) -> Criterion {
        self.criterion
    }

    pub fn leaves(&self) -> impl Iterator<Item = (NodeId, &Node)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| matches!(n, Node::Leaf { .. }))
            .map(|(i, n)| (NodeId(i), n))
    }

    /// Every root-to-leaf path, in depth-first order with branches by value.
    pub fn paths(&self) -> Vec<TreePath> {
        let mut out = Vec::new();
        let mut stack = vec![(self.root, Vec::new(), Vec::new())];
        while let Some((id, symptoms, values)) = stack.pop() {
            match self.node(id) {
                Node::Leaf { .. } => out.push(TreePath {
                    symptoms,
                    values,
                    leaf: id,
                }),
                Node::Test {
                    symptom, branches, ..
                } => {
                    for &(value, child) in branches.iter().rev() {
                        let mut s = symptoms.clone();
                        s.push(*symptom);
                        let mut v = values.clone();
                        v.push(value);
                        stack.push((child, s, v));
                    }
                }
            }
        }
        out
    }

    /// Distinct symptoms tested anywhere in the tree.
    pub fn symptoms_used(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Test { symptom, .. } => Some(*symptom),
                Node::Leaf { .. } => None,
            })
            .collect();
        used.sort_unstable();
        used.dedup();
        used
    }

    /// Where a diagnosis session starts.
    pub fn start(&self) -> Cursor {
        self.cursor(self.root)
    }

    fn cursor(&self, id: NodeId) -> Cursor {
        match self.node(id) {
            Node::Test { .. } => Cursor::Test(id),
            Node::Leaf { .. } => Cursor::Leaf(id),
        }
    }
}

/// One line of an information ledger.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Step {
    pub symptom: usize,
    /// Conditional information delivered by this test.
    pub information: f64,
    /// Entropy left after it.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanReport {
    pub criterion: Criterion,
    /// Entropy of the trivial partition under the criterion's measure.
    pub initial_entropy: f64,
    /// One entry per test node, breadth-first; residuals are global.
    pub steps: Vec<Step>,
    /// Ledger over the whole condition set for the symptoms along the
    /// maximum-probability path.
    pub path_ledger: Vec<Step>,
    pub total_information: f64,
    /// Residual entropy of the leaf partition under the criterion's measure.
    pub residual_entropy: f64,
    pub residual_cb: f64,
    pub residual_shannon: f64,
    pub expected_test_count: f64,
    pub worst_case_depth: usize,
    pub leaf_count: usize,
    pub ambiguous_leaves: usize,
}

/// Ledger for applying `symptoms` in order to the whole condition set.
pub fn path_ledger(
    model: &DiagnosisModel,
    criterion: Criterion,
    symptoms: &[usize],
) -> Result<Vec<Step>> {
    let mut current = trivial_partition(model);
    let mut steps = Vec::with_capacity(symptoms.len());
    for &symptom in symptoms {
        let next = refine_partition(&current, model, symptom)?;
        steps.push(Step {
            symptom,
            information: criterion.information(&current, &next, model)?,
            residual: criterion.entropy(&next, model)?,
        });
        current = next;
    }
    Ok(steps)
}

/// Greedy adaptive tree for `model` under `criterion`.
pub fn build_tree(
    model: &DiagnosisModel,
    criterion: Criterion,
) -> Result<(DiagnosisTree, PlanReport)> {
    let mut nodes = Vec::new();
    grow(&trivial_partition(model), model, criterion, &mut nodes)?;
    let tree = DiagnosisTree {
        nodes,
        root: NodeId(0),
        lambda: model.lambda(),
        criterion,
    };
    let report = evaluate_tree(&tree, model)?;
    Ok((tree, report))
}

fn grow(
    sub: &Partition,
    model: &DiagnosisModel,
    criterion: Criterion,
    nodes: &mut Vec<Node>,
) -> Result<NodeId> {
    let block = &sub.blocks()[0];
    let id = NodeId(nodes.len());
    let choice = if block.is_singleton() {
        None
    } else {
        select_next(sub, model, criterion, &[])?
    };
    let Some((symptom, _)) = choice else {
        nodes.push(leaf(block.members().to_vec(), model));
        return Ok(id);
    };
    nodes.push(Node::Test {
        symptom,
        branches: Vec::new(),
        members: block.members().to_vec(),
    });
    let split = refine_partition(sub, model, symptom)?;
    let mut branches = Vec::with_capacity(split.len());
    for (j, child) in split.blocks().iter().enumerate() {
        let value = *child
            .signature()
            .last()
            .expect("refined block has a signature");
        branches.push((value, grow(&split.restrict(j)?, model, criterion, nodes)?));
    }
    if let Node::Test { branches: b, .. } = &mut nodes[id.0] {
        *b = branches;
    }
    Ok(id)
}

fn leaf(members: Vec<usize>, model: &DiagnosisModel) -> Node {
    let mass: f64 = members.iter().map(|&i| model.prior(i)).sum();
    Node::Leaf {
        posterior: members.iter().map(|&i| model.prior(i) / mass).collect(),
        status: if members.len() == 1 {
            LeafStatus::Resolved
        } else {
            LeafStatus::Ambiguous
        },
        members,
    }
}

/// Checks `tree` against `model` and recomputes every report metric.
pub fn evaluate_tree(tree: &DiagnosisTree, model: &DiagnosisModel) -> Result<PlanReport> {
    check_structure(tree, model)?;
    let criterion = tree.criterion;

    // global breadth-first ledger
    let mut contribution = vec![0.0; tree.nodes.len()];
    let block_entropy = |members: &[usize]| -> Result<f64> {
        criterion.entropy(&single_block(model, members)?, model)
    };
    contribution[tree.root.0] = block_entropy(tree.node(tree.root).members())?;
    let initial_entropy = criterion.entropy(&trivial_partition(model), model)?;
    let mut steps = Vec::new();
    // summed afresh over the frontier so resolved branches contribute exact zeros
    let mut frontier = BTreeSet::from([tree.root]);
    let mut queue = VecDeque::from([tree.root]);
    while let Some(id) = queue.pop_front() {
        let Node::Test {
            symptom,
            branches,
            members,
        } = tree.node(id)
        else {
            continue;
        };
        let before = single_block(model, members)?;
        let after = refine_partition(&before, model, *symptom)?;
        let information = criterion.information(&before, &after, model)?;
        frontier.remove(&id);
        for &(_, child) in branches {
            contribution[child.0] = block_entropy(tree.node(child).members())?;
            frontier.insert(child);
            queue.push_back(child);
        }
        let residual = frontier.iter().map(|c| contribution[c.0]).sum();
        steps.push(Step {
            symptom: *symptom,
            information,
            residual,
        });
    }

    let leaf_partition = leaf_partition(tree, model)?;
    let residual_cb = hb_partition(&leaf_partition).value;
    let residual_shannon =
        shannon_partition_entropy(&leaf_partition, model, criterion.shannon_base)?.value;
    let residual_entropy = match criterion.kind {
        CriterionKind::Combinatorial => residual_cb,
        CriterionKind::Shannon => residual_shannon,
    };

    let paths = tree.paths();
    let mut expected_test_count = 0.0;
    let mut worst_case_depth = 0;
    let mut ambiguous_leaves = 0;
    for path in &paths {
        let Node::Leaf {
            members, status, ..
        } = tree.node(path.leaf)
        else {
            unreachable!("paths end in leaves");
        };
        let p: f64 = members.iter().map(|&i| model.prior(i)).sum();
        expected_test_count += p * path.symptoms.len() as f64;
        worst_case_depth = worst_case_depth.max(path.symptoms.len());
        if *status == LeafStatus::Ambiguous {
            ambiguous_leaves += 1;
        }
    }

    let heaviest = max_probability_path(tree, model);
    Ok(PlanReport {
        criterion,
        initial_entropy,
        total_information: steps.iter().map(|s| s.information).sum(),
        path_ledger: path_ledger(model, criterion, &heaviest)?,
        steps,
        residual_entropy,
        residual_cb,
        residual_shannon,
        expected_test_count,
        worst_case_depth,
        leaf_count: paths.len(),
        ambiguous_leaves,
    })
}

fn single_block(model: &DiagnosisModel, members: &[usize]) -> Result<Partition> {
    Partition::from_members(model, members).map_err(Error::TreeModelMismatch)
}

fn leaf_partition(tree: &DiagnosisTree, model: &DiagnosisModel) -> Result<Partition> {
    let blocks: Vec<Vec<usize>> = tree.leaves().map(|(_, n)| n.members().to_vec()).collect();
    Partition::from_blocks(model, blocks).map_err(Error::TreeModelMismatch)
}

fn max_probability_path(tree: &DiagnosisTree, model: &DiagnosisModel) -> Vec<usize> {
    let mass = |id: NodeId| -> f64 {
        tree.node(id)
            .members()
            .iter()
            .map(|&i| model.prior(i))
            .sum()
    };
    let mut symptoms = Vec::new();
    let mut id = tree.root;
    while let Node::Test {
        symptom, branches, ..
    } = tree.node(id)
    {
        symptoms.push(*symptom);
        let mut best = branches[0].1;
        for &(_, child) in &branches[1..] {
            if mass(child) > mass(best) {
                best = child;
            }
        }
        id = best;
    }
    symptoms
}

fn check_structure(tree: &DiagnosisTree, model: &DiagnosisModel) -> Result<()> {
    let mismatch = |msg: String| Err(Error::TreeModelMismatch(msg));
    if tree.lambda != model.lambda() {
        return mismatch(format!(
            "tree alphabet {} vs model {}",
            tree.lambda,
            model.lambda()
        ));
    }
    for path in tree.paths() {
        let mut seen = Vec::with_capacity(path.symptoms.len());
        for &s in &path.symptoms {
            if s >= model.t() {
                return mismatch(format!("symptom index {s} out of range"));
            }
            if seen.contains(&s) {
                return mismatch(format!(
                    "symptom `{}` repeats on a path",
                    model.symptom_name(s)
                ));
            }
            seen.push(s);
        }
        let Node::Leaf {
            members,
            status,
            posterior,
        } = tree.node(path.leaf)
        else {
            unreachable!("paths end in leaves");
        };
        if members.is_empty() {
            return mismatch("empty leaf".into());
        }
        for &i in members {
            if i >= model.n() {
                return mismatch(format!("condition index {i} out of range"));
            }
            for (&s, &v) in path.symptoms.iter().zip(&path.values) {
                if model.value(i, s) != v {
                    return mismatch(format!(
                        "condition `{}` does not show value {v} for `{}`",
                        model.condition_name(i),
                        model.symptom_name(s)
                    ));
                }
            }
        }
        if (*status == LeafStatus::Resolved) != (members.len() == 1) {
            return mismatch("leaf status disagrees with its size".into());
        }
        if posterior.len() != members.len() {
            return mismatch("posterior length differs from leaf size".into());
        }
    }
    for (id, node) in tree.nodes.iter().enumerate() {
        if let Node::Test {
            branches, members, ..
        } = node
        {
            if branches.is_empty() {
                return mismatch(format!("test node {id} has no branches"));
            }
            if branches.windows(2).any(|w| w[0].0 >= w[1].0) {
                return mismatch(format!("test node {id} branches are not sorted by value"));
            }
            let mut below: Vec<usize> = branches
                .iter()
                .flat_map(|&(_, c)| tree.node(c).members().iter().copied())
                .collect();
            below.sort_unstable();
            if &below != members {
                return mismatch(format!("test node {id} members differ from its children"));
            }
        }
    }
    leaf_partition(tree, model)?;
    Ok(())
}

/// Result of [`diagnose_step`] or [`DiagnosisTree::start`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cursor {
    Test(NodeId),
    Leaf(NodeId),
}

/// Follows the edge labelled `observed` out of test node `cursor`.
pub fn diagnose_step(
    tree: &DiagnosisTree,
    model: &DiagnosisModel,
    cursor: NodeId,
    observed: u32,
) -> Result<Cursor> {
    if observed >= tree.lambda {
        return Err(Error::ValueOutOfAlphabet {
            value: observed,
            lambda: tree.lambda,
        });
    }
    let Some(Node::Test {
        symptom, branches, ..
    }) = tree.nodes.get(cursor.0)
    else {
        return Err(Error::NotATestNode(cursor.0));
    };
    branches
        .iter()
        .find(|&&(v, _)| v == observed)
        .map(|&(_, child)| tree.cursor(child))
        .ok_or_else(|| Error::ContradictoryObservation {
            symptom: model.symptom_name(*symptom).to_string(),
            value: observed,
        })
}

/// Both criteria side by side, plus the exhaustive optimum on small models.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriteriaComparison {
    pub combinatorial: PlanReport,
    pub shannon: PlanReport,
    /// Minimum expected test count over all adaptive trees (n, t ≤ 8 only).
    pub optimum: Option<f64>,
}

pub fn compare_criteria(model: &DiagnosisModel) -> Result<CriteriaComparison> {
    let (_, combinatorial) = build_tree(model, Criterion::combinatorial())?;
    let (_, shannon) = build_tree(model, Criterion::shannon_for(model))?;
    let optimum = if model.n() <= oracle::EXHAUSTIVE_LIMIT && model.t() <= oracle::EXHAUSTIVE_LIMIT
    {
        oracle::exhaustive_optimal_tree(model, model.t())?
    } else {
        None
    };
    Ok(CriteriaComparison {
        combinatorial,
        shannon,
        optimum,
    })
}
