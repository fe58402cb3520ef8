//! Pairwise alignment with give-up and the optimal two-sequence tree builder.
//!
//! The alignment generalizes edit distance over sequences of strings: besides
//! substituting, inserting, or deleting whole strings (each also paying the
//! node cost `λ`), the alignment may *give up*, declaring that the two
//! suffixes diverge into separate branches at cost `λ` per remaining string.
//! Backtracing that DP yields a summary tree with at most two leaves whose
//! score equals the alignment cost exactly.
//!
//! The same recurrence runs over sequences of *label sets* (merged working
//! sequences) with the set-merge cost in place of edit distance; the greedy
//! builder drives that variant.

use std::collections::BTreeSet;

use crate::cost::{zero, Cost};
use crate::error::{DssspError, Result};
use crate::metrics::{medoid_cached, EdCache};
use crate::model::{AlignOp, AlignmentTrace, CostModel, StringSequence, SummaryTree};

/// Result of the two-sequence builder: the tree, the alignment that produced
/// it, its cost (equal to the tree's score), and the number of substitutions
/// in the shared section.
#[derive(Debug, Clone)]
pub struct Bifurcation {
    pub tree: SummaryTree,
    pub trace: AlignmentTrace,
    pub cost: Cost,
    pub overlap: usize,
}

// ---------------------------------------------------------------------------
// The give-up DP, generic over per-op costs
// ---------------------------------------------------------------------------

/// Four-case alignment DP with give-up. `sub`, `ins`, `del` price the three
/// continuing ops at positions of `x` and `y`; give-up closes the alignment
/// at `λ` per remaining position. Ties prefer continuing ops (substitution,
/// then insertion, then deletion) over giving up, which keeps shared
/// sections as deep as possible.
pub(crate) fn edg_generic(
    nx: usize,
    ny: usize,
    lambda: Cost,
    mut sub: impl FnMut(usize, usize) -> Cost,
    mut ins: impl FnMut(usize) -> Cost,
    mut del: impl FnMut(usize) -> Cost,
) -> (Cost, AlignmentTrace) {
    let give_up = |i: usize, j: usize| lambda * crate::cost::cost((nx - i) as i64 + (ny - j) as i64);
    let mut dp = vec![vec![zero(); ny + 1]; nx + 1];
    let mut sub_costs = vec![vec![zero(); ny]; nx];
    let mut ins_costs: Vec<Cost> = (0..ny).map(&mut ins).collect();
    let mut del_costs: Vec<Cost> = (0..nx).map(&mut del).collect();
    for i in 0..nx {
        for j in 0..ny {
            sub_costs[i][j] = sub(i, j);
        }
    }
    for i in (0..=nx).rev() {
        for j in (0..=ny).rev() {
            dp[i][j] = if i == nx || j == ny {
                give_up(i, j)
            } else {
                let s = lambda + sub_costs[i][j] + dp[i + 1][j + 1];
                let a = lambda + ins_costs[j] + dp[i][j + 1];
                let d = lambda + del_costs[i] + dp[i + 1][j];
                s.min(a).min(d).min(give_up(i, j))
            };
        }
    }
    let total = dp[0][0];

    let mut ops = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    while i < nx || j < ny {
        let here = dp[i][j];
        if i < nx && j < ny {
            if lambda + sub_costs[i][j] + dp[i + 1][j + 1] == here {
                ops.push(AlignOp::Substitute { i, j });
                i += 1;
                j += 1;
                continue;
            }
            if lambda + ins_costs[j] + dp[i][j + 1] == here {
                ops.push(AlignOp::Insert { j });
                j += 1;
                continue;
            }
            if lambda + del_costs[i] + dp[i + 1][j] == here {
                ops.push(AlignOp::Delete { i });
                i += 1;
                continue;
            }
        }
        ops.push(AlignOp::GiveUp { i, j });
        break;
    }
    // Avoid holding unused buffers over the return.
    ins_costs.clear();
    del_costs.clear();
    (total, AlignmentTrace { ops, total_cost: total })
}

fn check_lambda(lambda: Cost) -> Result<()> {
    if lambda < zero() {
        return Err(DssspError::Input("node cost must be nonnegative".into()));
    }
    Ok(())
}

/// Alignment-with-give-up cost of two string sequences, with its trace.
pub fn edg(x: &[String], y: &[String], lambda: Cost, cm: &CostModel) -> Result<(Cost, AlignmentTrace)> {
    check_lambda(lambda)?;
    let cache = EdCache::new(cm);
    Ok(edg_generic(
        x.len(),
        y.len(),
        lambda,
        |i, j| cache.ed(&x[i], &y[j]),
        |j| cm.string_indel_cost(&y[j]),
        |i| cm.string_indel_cost(&x[i]),
    ))
}

/// Recompute an alignment-with-give-up trace's cost from scratch.
pub fn replay_edg(
    trace: &AlignmentTrace,
    x: &[String],
    y: &[String],
    lambda: Cost,
    cm: &CostModel,
) -> Result<Cost> {
    let mut total = zero();
    let (mut i, mut j) = (0usize, 0usize);
    let mut closed = false;
    for op in &trace.ops {
        match *op {
            AlignOp::Substitute { i: oi, j: oj } if (oi, oj) == (i, j) => {
                total += lambda + crate::metrics::edit_distance(&x[i], &y[j], cm);
                i += 1;
                j += 1;
            }
            AlignOp::Insert { j: oj } if oj == j => {
                total += lambda + cm.string_indel_cost(&y[j]);
                j += 1;
            }
            AlignOp::Delete { i: oi } if oi == i => {
                total += lambda + cm.string_indel_cost(&x[i]);
                i += 1;
            }
            AlignOp::GiveUp { i: oi, j: oj } if (oi, oj) == (i, j) => {
                total += lambda * crate::cost::cost((x.len() - i) as i64 + (y.len() - j) as i64);
                i = x.len();
                j = y.len();
                closed = true;
            }
            _ => return Err(DssspError::Input(format!("op {op:?} invalid at ({i}, {j})"))),
        }
    }
    if !closed && (i != x.len() || j != y.len()) {
        return Err(DssspError::Input("trace does not consume both sequences".into()));
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// BuildBifurcation
// ---------------------------------------------------------------------------

/// Optimal summary tree for exactly two sequences. The tree follows the
/// alignment backtrace: continuing ops extend a shared path (substitution
/// nodes take the first argument's label), give-up hangs the two remaining
/// suffixes as separate branches. Each sequence is assigned to the node where
/// its last string lands, or to the sentinel if it is empty.
pub fn build_bifurcation(
    x: &StringSequence,
    y: &StringSequence,
    lambda: Cost,
    cm: &CostModel,
) -> Result<Bifurcation> {
    check_lambda(lambda)?;
    if x.id == y.id {
        return Err(DssspError::Input(format!("sequences share the id `{}`", x.id)));
    }
    let (cost, trace) = edg(&x.strings, &y.strings, lambda, cm)?;
    let mut tree = SummaryTree::new();
    let mut parent = tree.sentinel();
    let mut x_node = None;
    let mut y_node = None;
    for op in &trace.ops {
        match *op {
            AlignOp::Substitute { i, j } => {
                parent = tree.add_node(parent, x.strings[i].clone());
                if i + 1 == x.strings.len() {
                    x_node = Some(parent);
                }
                if j + 1 == y.strings.len() {
                    y_node = Some(parent);
                }
            }
            AlignOp::Insert { j } => {
                parent = tree.add_node(parent, y.strings[j].clone());
                if j + 1 == y.strings.len() {
                    y_node = Some(parent);
                }
            }
            AlignOp::Delete { i } => {
                parent = tree.add_node(parent, x.strings[i].clone());
                if i + 1 == x.strings.len() {
                    x_node = Some(parent);
                }
            }
            AlignOp::GiveUp { i, j } => {
                let mut px = parent;
                for s in &x.strings[i..] {
                    px = tree.add_node(px, s.clone());
                }
                if i < x.strings.len() {
                    x_node = Some(px);
                }
                let mut py = parent;
                for s in &y.strings[j..] {
                    py = tree.add_node(py, s.clone());
                }
                if j < y.strings.len() {
                    y_node = Some(py);
                }
            }
        }
    }
    tree.assign(x.id.clone(), x_node.unwrap_or(tree.sentinel()));
    tree.assign(y.id.clone(), y_node.unwrap_or(tree.sentinel()));
    let overlap = trace.substitution_count();
    Ok(Bifurcation { tree, trace, cost, overlap })
}

// ---------------------------------------------------------------------------
// Sequences of label sets
// ---------------------------------------------------------------------------

/// One position of a merged working sequence: the set of labels the merged
/// sequences carry here, branches saved from earlier divergences that
/// reattach under this position's node, and the origins whose final string
/// landed here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    labels: Vec<String>,
    pub branches: Vec<BranchSeq>,
    pub assigned: Vec<usize>,
}

impl Entry {
    pub fn new(labels: impl IntoIterator<Item = String>) -> Self {
        let mut labels: Vec<String> = labels.into_iter().collect();
        labels.sort();
        labels.dedup();
        Self { labels, branches: Vec::new(), assigned: Vec::new() }
    }

    /// Sorted, deduplicated label set. The empty string marks positions some
    /// merged-in sequence skipped.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Merge two entries' label sets (set union).
    pub fn merged_labels(a: &Entry, b: &Entry) -> Vec<String> {
        let mut labels: Vec<String> = a.labels.iter().chain(b.labels.iter()).cloned().collect();
        labels.sort();
        labels.dedup();
        labels
    }

    /// Cache key for this entry's label set.
    pub fn label_key(&self) -> String {
        self.labels.join("\u{1f}")
    }
}

/// A post-divergence suffix saved for reattachment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchSeq {
    pub entries: Vec<Entry>,
}

/// A working sequence during greedy merging: entry positions plus the set of
/// original sequence indexes merged into it. Branches whose divergence point
/// was before the first entry hang off `root_branches`.
#[derive(Debug, Clone)]
pub struct ListSequence {
    pub entries: Vec<Entry>,
    pub root_branches: Vec<BranchSeq>,
    pub origins: BTreeSet<usize>,
}

impl ListSequence {
    /// Lift a plain sequence: one singleton entry per string, the origin
    /// assigned at the final entry.
    pub fn from_sequence(origin: usize, seq: &StringSequence) -> Self {
        let mut entries: Vec<Entry> =
            seq.strings.iter().map(|s| Entry::new([s.clone()])).collect();
        if let Some(last) = entries.last_mut() {
            last.assigned.push(origin);
        }
        Self { entries, root_branches: Vec::new(), origins: BTreeSet::from([origin]) }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Tie-break key: the smallest original sequence index merged in.
    pub fn min_origin(&self) -> usize {
        *self.origins.first().expect("list sequence has at least one origin")
    }
}

/// Extra disagreement incurred by merging label sets `a` and `b` into one
/// node: the union's summed distance to its medoid, less each side's own
/// summed distance to its medoid. Inputs are treated as sets (duplicates
/// collapse). Can be negative when the union admits a better representative
/// than one side had alone.
pub fn merge_cost(a: &[String], b: &[String], cm: &CostModel) -> Cost {
    let cache = EdCache::new(cm);
    merge_cost_cached(a, b, &cache)
}

pub(crate) fn merge_cost_cached(a: &[String], b: &[String], cache: &EdCache) -> Cost {
    let dedup = |xs: &[String]| -> Vec<String> {
        let mut v = xs.to_vec();
        v.sort();
        v.dedup();
        v
    };
    let a = dedup(a);
    let b = dedup(b);
    let union = Entry::merged_labels(&Entry::new(a.iter().cloned()), &Entry::new(b.iter().cloned()));
    let sum_to_medoid = |xs: &[String]| -> Cost {
        if xs.is_empty() {
            return zero();
        }
        medoid_cached(xs, cache).expect("nonempty set has a medoid").1
    };
    sum_to_medoid(&union) - sum_to_medoid(&a) - sum_to_medoid(&b)
}

/// The give-up alignment over sequences of label sets. Substitution merges
/// the two entries at the set-merge cost; insertion and deletion merge
/// against the empty-string set. Returns cost, trace, and the overlap
/// (substitution count).
pub fn edg_lists(
    x: &ListSequence,
    y: &ListSequence,
    lambda: Cost,
    cm: &CostModel,
) -> Result<(Cost, AlignmentTrace, usize)> {
    check_lambda(lambda)?;
    let cache = EdCache::new(cm);
    let eps = vec![String::new()];
    let (cost, trace) = edg_generic(
        x.entries.len(),
        y.entries.len(),
        lambda,
        |i, j| merge_cost_cached(x.entries[i].labels(), y.entries[j].labels(), &cache),
        |j| merge_cost_cached(&eps, y.entries[j].labels(), &cache),
        |i| merge_cost_cached(x.entries[i].labels(), &eps, &cache),
    );
    let overlap = trace.substitution_count();
    Ok((cost, trace, overlap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{cost, parse_cost};
    use crate::eval::error_lambda;
    use crate::model::SequenceSet;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn seq(id: &str, v: &[&str]) -> StringSequence {
        StringSequence::new(id, strings(v))
    }

    #[test]
    fn eve_frank_substitutes_above_threshold() {
        let cm = CostModel::unit();
        let x = strings(&["Eve"]);
        let y = strings(&["Frank"]);
        let (c, trace) = edg(&x, &y, cost(6), &cm).unwrap();
        assert_eq!(c, cost(11));
        assert_eq!(trace.ops, vec![AlignOp::Substitute { i: 0, j: 0 }]);
        assert_eq!(replay_edg(&trace, &x, &y, cost(6), &cm).unwrap(), c);
    }

    #[test]
    fn eve_frank_gives_up_below_threshold() {
        let cm = CostModel::unit();
        let x = strings(&["Eve"]);
        let y = strings(&["Frank"]);
        let (c, trace) = edg(&x, &y, cost(4), &cm).unwrap();
        assert_eq!(c, cost(8));
        assert_eq!(trace.ops, vec![AlignOp::GiveUp { i: 0, j: 0 }]);
    }

    #[test]
    fn eve_frank_tie_continues() {
        // At the exact threshold both options cost 10; the continuing op wins.
        let cm = CostModel::unit();
        let (c, trace) = edg(&strings(&["Eve"]), &strings(&["Frank"]), cost(5), &cm).unwrap();
        assert_eq!(c, cost(10));
        assert_eq!(trace.substitution_count(), 1);
    }

    #[test]
    fn empty_side_pays_lambda_per_string() {
        let cm = CostModel::unit();
        let x: Vec<String> = vec![];
        let y = strings(&["a", "b"]);
        let (c, trace) = edg(&x, &y, cost(2), &cm).unwrap();
        assert_eq!(c, cost(4));
        assert_eq!(replay_edg(&trace, &x, &y, cost(2), &cm).unwrap(), c);
    }

    #[test]
    fn identical_sequences_substitute_throughout() {
        let cm = CostModel::unit();
        let x = strings(&["Aaa", "Bbb"]);
        let (c, trace) = edg(&x, &x, cost(1), &cm).unwrap();
        assert_eq!(c, cost(2));
        assert_eq!(trace.substitution_count(), 2);
    }

    #[test]
    fn negative_lambda_rejected() {
        let x = strings(&["a"]);
        assert!(edg(&x, &x, cost(-1), &CostModel::unit()).is_err());
    }

    #[test]
    fn bifurcation_identity_is_a_path() {
        let cm = CostModel::unit();
        let x = seq("x1", &["a", "b", "c"]);
        let y = seq("x2", &["a", "b", "c"]);
        let b = build_bifurcation(&x, &y, cost(1), &cm).unwrap();
        assert_eq!(b.cost, cost(3));
        assert_eq!(b.tree.node_count(), 3);
        assert_eq!(b.overlap, 3);
        let xs = SequenceSet::new("abc".chars(), vec![x, y]).unwrap();
        assert!(crate::model::validate_tree(&b.tree, &xs).is_empty());
        let report = error_lambda(&b.tree, &xs, cost(1), &cm).unwrap();
        assert_eq!(report.error, b.cost);
    }

    #[test]
    fn bifurcation_base_case_single_node() {
        let cm = CostModel::unit();
        let x = seq("x1", &["a"]);
        let y = seq("x2", &[]);
        let b = build_bifurcation(&x, &y, cost(3), &cm).unwrap();
        assert_eq!(b.cost, cost(3));
        assert_eq!(b.tree.node_count(), 1);
        assert_eq!(b.overlap, 0);
        // The empty sequence sits at the sentinel.
        assert_eq!(b.tree.assignment("x2"), Some(b.tree.sentinel()));
        assert_eq!(b.tree.depth(b.tree.assignment("x1").unwrap()), 1);
    }

    #[test]
    fn bifurcation_empty_inputs_give_empty_tree() {
        let cm = CostModel::unit();
        let b = build_bifurcation(&seq("x1", &[]), &seq("x2", &[]), cost(1), &cm).unwrap();
        assert_eq!(b.tree.node_count(), 0);
        assert_eq!(b.cost, zero());
    }

    /// Split-point oracle for two same-length sequences: share a prefix of
    /// `s` nodes (best per-node label drawn from the inputs), then branch.
    fn split_oracle(x: &[String], y: &[String], lambda: Cost, cm: &CostModel) -> (Cost, usize) {
        assert_eq!(x.len(), y.len());
        let n = x.len();
        let mut best: Option<(Cost, usize)> = None;
        for s in 0..=n {
            let mut total = lambda * cost((2 * n - s) as i64);
            for i in 0..s {
                let via_x = crate::metrics::edit_distance(&x[i], &y[i], cm);
                total += via_x;
            }
            match best {
                Some((c, _)) if c <= total => {}
                _ => best = Some((total, s)),
            }
        }
        best.unwrap()
    }

    #[test]
    fn regime_shifts_with_lambda_on_mismatched_pair() {
        let cm = CostModel::unit();
        let x = seq("x1", &["Aaa", "Bbb", "Ccc", "Ddd", "Eee"]);
        let y = seq("x2", &["Aaa", "Bbx", "Ccc", "Dxx", "Fff"]);
        let xs = SequenceSet::new(
            "ABCDEFabcdexf".chars(),
            vec![x.clone(), y.clone()],
        )
        .unwrap();
        // (λ, expected cost, expected shared-prefix length, node count)
        let expectations = [
            (parse_cost("0.2").unwrap(), parse_cost("1.8").unwrap(), 1, 9),
            (cost(1), cost(8), 3, 7),
            (parse_cost("2.5").unwrap(), cost(18), 4, 6),
            (cost(4), cost(26), 5, 5),
        ];
        for (lambda, want_cost, want_overlap, want_nodes) in expectations {
            let b = build_bifurcation(&x, &y, lambda, &cm).unwrap();
            assert_eq!(b.cost, want_cost, "cost at λ={lambda}");
            assert_eq!(b.overlap, want_overlap, "overlap at λ={lambda}");
            assert_eq!(b.tree.node_count(), want_nodes, "nodes at λ={lambda}");
            let (oracle_cost, oracle_split) = split_oracle(&x.strings, &y.strings, lambda, &cm);
            assert_eq!(b.cost, oracle_cost);
            assert_eq!(b.overlap, oracle_split);
            assert!(crate::model::validate_tree(&b.tree, &xs).is_empty());
            let report = error_lambda(&b.tree, &xs, lambda, &cm).unwrap();
            assert_eq!(report.error, b.cost, "tree score equals alignment cost at λ={lambda}");
        }
    }

    // -- merge cost ----------------------------------------------------------

    #[test]
    fn merge_cost_identical_sets_is_zero() {
        let cm = CostModel::unit();
        assert_eq!(merge_cost(&strings(&["abc"]), &strings(&["abc"]), &cm), zero());
    }

    #[test]
    fn merge_cost_singleton_disagreement() {
        let cm = CostModel::unit();
        assert_eq!(merge_cost(&strings(&["abc"]), &strings(&["abd"]), &cm), cost(1));
    }

    #[test]
    fn merge_cost_of_shifted_x_pairs() {
        let cm = CostModel::unit();
        let a = strings(&["XABC", "AXBC"]);
        let b = strings(&["ABXC", "ABCX"]);
        // Union medoid total 6, each side 2: merging adds 2.
        assert_eq!(merge_cost(&a, &b, &cm), cost(2));
    }

    // -- lists ---------------------------------------------------------------

    #[test]
    fn singleton_lists_reduce_to_plain_edg() {
        let cm = CostModel::unit();
        let xs = seq("x1", &["ab", "b", "a"]);
        let ys = seq("x2", &["ab", "a"]);
        let lx = ListSequence::from_sequence(0, &xs);
        let ly = ListSequence::from_sequence(1, &ys);
        for lambda in [zero(), parse_cost("0.5").unwrap(), cost(1), cost(2)] {
            let (plain, _) = edg(&xs.strings, &ys.strings, lambda, &cm).unwrap();
            let (listed, _, _) = edg_lists(&lx, &ly, lambda, &cm).unwrap();
            assert_eq!(plain, listed, "λ={lambda}");
        }
    }

    #[test]
    fn single_cell_list_alignment() {
        let cm = CostModel::unit();
        let lx = ListSequence::from_sequence(0, &seq("x1", &["abc"]));
        let ly = ListSequence::from_sequence(1, &seq("x2", &["abc"]));
        let (c, _, overlap) = edg_lists(&lx, &ly, cost(1), &cm).unwrap();
        assert_eq!(c, cost(1));
        assert_eq!(overlap, 1);
    }

    #[test]
    fn zero_lambda_gives_up_immediately() {
        let cm = CostModel::unit();
        let lx = ListSequence::from_sequence(0, &seq("x1", &["ab", "cd"]));
        let ly = ListSequence::from_sequence(1, &seq("x2", &["ef"]));
        let (c, trace, overlap) = edg_lists(&lx, &ly, zero(), &cm).unwrap();
        assert_eq!(c, zero());
        assert_eq!(overlap, 0);
        assert_eq!(trace.ops, vec![AlignOp::GiveUp { i: 0, j: 0 }]);
    }

    #[test]
    fn edg_cost_is_symmetric_and_monotone() {
        let cm = CostModel::unit();
        let x = strings(&["ab", "ba", "aa"]);
        let y = strings(&["ab", "bb"]);
        let lambdas = [zero(), parse_cost("0.5").unwrap(), cost(1), cost(2), cost(5)];
        let mut prev = None;
        for lambda in lambdas {
            let (cxy, _) = edg(&x, &y, lambda, &cm).unwrap();
            let (cyx, _) = edg(&y, &x, lambda, &cm).unwrap();
            assert_eq!(cxy, cyx);
            if let Some(p) = prev {
                assert!(cxy >= p, "cost must not decrease as λ grows");
            }
            prev = Some(cxy);
        }
    }
}
