//! Scoring and comparison: the node-cost objective, ordered tree edit
//! distance with sibling reordering, node-cost selection bounds, and the CSV
//! emitter for experiment sweeps.

use std::collections::BTreeMap;
use std::time::Instant;

use itertools::Itertools;
use rand::Rng;
use serde_json::json;

use crate::cost::{cost_to_f64, format_cost, zero, Cost};
use crate::error::{DssspError, Result};
use crate::generator::{corrupt_chars, random_string, GenParams};
use crate::metrics::{aed, edit_distance};
use crate::model::{CostModel, NodeId, SequenceSet, SummaryTree};

// ---------------------------------------------------------------------------
// The objective
// ---------------------------------------------------------------------------

/// Exact evaluation of a summary tree against a corpus: the summed
/// sequence-to-path alignment costs plus `λ` per non-sentinel node.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub lambda: Cost,
    pub error: Cost,
    pub node_count: usize,
    pub per_sequence: BTreeMap<String, Cost>,
    pub ted: Option<usize>,
    pub runtime_ms: u128,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let per_sequence: BTreeMap<&String, String> =
            self.per_sequence.iter().map(|(k, v)| (k, format_cost(v))).collect();
        serde_json::to_string_pretty(&json!({
            "lambda": format_cost(&self.lambda),
            "error": format_cost(&self.error),
            "error_value": cost_to_f64(&self.error),
            "node_count": self.node_count,
            "per_sequence": per_sequence,
            "ted": self.ted,
            "runtime_ms": self.runtime_ms,
        }))
        .expect("report serializes")
    }
}

/// Score `t` as a summary of `xs` under node cost `lambda`. Errors if some
/// sequence is unassigned or sits above a path shorter than itself.
pub fn error_lambda(t: &SummaryTree, xs: &SequenceSet, lambda: Cost, cm: &CostModel) -> Result<EvalReport> {
    if lambda < zero() {
        return Err(DssspError::Input("node cost must be nonnegative".into()));
    }
    let started = Instant::now();
    let mut per_sequence = BTreeMap::new();
    let mut total = zero();
    for seq in &xs.sequences {
        let node = t.assignment(&seq.id).ok_or_else(|| {
            DssspError::Input(format!("sequence `{}` has no assigned node", seq.id))
        })?;
        let path = t.path_labels(node);
        let (c, _) = aed(&seq.strings, &path, cm).map_err(|e| match e {
            DssspError::AedUndefined(msg) => {
                DssspError::AedUndefined(format!("sequence `{}`: {msg}", seq.id))
            }
            other => other,
        })?;
        total += c;
        per_sequence.insert(seq.id.clone(), c);
    }
    let node_count = t.node_count();
    let error = total + lambda * crate::cost::cost(node_count as i64);
    Ok(EvalReport {
        lambda,
        error,
        node_count,
        per_sequence,
        ted: None,
        runtime_ms: started.elapsed().as_millis(),
    })
}

// ---------------------------------------------------------------------------
// Ordered tree edit distance
// ---------------------------------------------------------------------------

struct PostorderTree {
    labels: Vec<String>,
    /// 1-based: `lld[i]` is the postorder index of node `i`'s leftmost leaf.
    lld: Vec<usize>,
    keyroots: Vec<usize>,
}

fn postorder_decompose(t: &SummaryTree) -> PostorderTree {
    let mut labels = vec![String::new()];
    let mut lld = vec![0usize];
    fn visit(t: &SummaryTree, id: NodeId, labels: &mut Vec<String>, lld: &mut Vec<usize>) -> usize {
        let kids = t.children(id);
        let mut leftmost = None;
        for k in kids {
            let kl = visit(t, k, labels, lld);
            leftmost.get_or_insert(kl);
        }
        labels.push(t.node(id).label.clone());
        let idx = labels.len() - 1;
        lld.push(leftmost.unwrap_or(idx));
        idx
    }
    visit(t, t.sentinel(), &mut labels, &mut lld);
    let n = labels.len() - 1;
    let mut keyroots = Vec::new();
    for i in 1..=n {
        if (i + 1..=n).all(|j| lld[j] != lld[i]) {
            keyroots.push(i);
        }
    }
    PostorderTree { labels, lld, keyroots }
}

/// Ordered tree edit distance with unit insertions and deletions and binary
/// relabel cost (0 when labels match, 1 otherwise). Children are compared in
/// id order; reorder siblings first when order should not matter.
pub fn ordered_ted(a: &SummaryTree, b: &SummaryTree) -> usize {
    let ta = postorder_decompose(a);
    let tb = postorder_decompose(b);
    let (n1, n2) = (ta.labels.len() - 1, tb.labels.len() - 1);
    let mut td = vec![vec![0usize; n2 + 1]; n1 + 1];
    for &i in &ta.keyroots {
        for &j in &tb.keyroots {
            let (li, lj) = (ta.lld[i], tb.lld[j]);
            let rows = i - li + 2;
            let cols = j - lj + 2;
            let mut fd = vec![vec![0usize; cols]; rows];
            for di in 1..rows {
                fd[di][0] = fd[di - 1][0] + 1;
            }
            for dj in 1..cols {
                fd[0][dj] = fd[0][dj - 1] + 1;
            }
            for i1 in li..=i {
                for j1 in lj..=j {
                    let (di, dj) = (i1 - li + 1, j1 - lj + 1);
                    if ta.lld[i1] == li && tb.lld[j1] == lj {
                        let relabel = usize::from(ta.labels[i1] != tb.labels[j1]);
                        fd[di][dj] = (fd[di - 1][dj] + 1)
                            .min(fd[di][dj - 1] + 1)
                            .min(fd[di - 1][dj - 1] + relabel);
                        td[i1][j1] = fd[di][dj];
                    } else {
                        fd[di][dj] = (fd[di - 1][dj] + 1)
                            .min(fd[di][dj - 1] + 1)
                            .min(fd[ta.lld[i1] - li][tb.lld[j1] - lj] + td[i1][j1]);
                    }
                }
            }
        }
    }
    td[n1][n2]
}

// ---------------------------------------------------------------------------
// Sibling reordering
// ---------------------------------------------------------------------------

fn inversions(a: &[usize], b: &[usize]) -> usize {
    a.iter().map(|&x| b.iter().filter(|&&y| x > y).count()).sum()
}

/// Reorder `candidate`'s sibling groups to minimize leaf-order inversions
/// against `reference`, matching through the shared sequence assignments.
/// Structure and labels are untouched; only the id order (and therefore the
/// sibling order) changes. Groups of up to six siblings are ordered
/// exhaustively, larger ones by a pairwise-inversion comparator.
pub fn reorder_siblings(candidate: &SummaryTree, reference: &SummaryTree) -> SummaryTree {
    // Rank each sequence id by the order its assigned node appears in a
    // depth-first walk of the reference.
    let mut ranks: BTreeMap<String, usize> = BTreeMap::new();
    let mut order = Vec::new();
    fn walk(t: &SummaryTree, id: NodeId, out: &mut Vec<NodeId>) {
        out.push(id);
        for k in t.children(id) {
            walk(t, k, out);
        }
    }
    walk(reference, reference.sentinel(), &mut order);
    for node in order {
        let mut here: Vec<&String> = reference
            .assignments()
            .iter()
            .filter(|(_, v)| **v == node)
            .map(|(k, _)| k)
            .collect();
        here.sort();
        for seq in here {
            let next = ranks.len();
            ranks.entry(seq.clone()).or_insert(next);
        }
    }

    // Sorted rank multiset under every candidate node.
    let n = candidate.nodes().len();
    let mut subtree_ranks: Vec<Vec<usize>> = vec![Vec::new(); n];
    fn collect(
        t: &SummaryTree,
        id: NodeId,
        ranks: &BTreeMap<String, usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let mut mine: Vec<usize> = t
            .assignments()
            .iter()
            .filter(|(_, v)| **v == id)
            .filter_map(|(k, _)| ranks.get(k).copied())
            .collect();
        for k in t.children(id) {
            collect(t, k, ranks, out);
            mine.extend(out[k.0].iter().copied());
        }
        mine.sort_unstable();
        out[id.0] = mine;
    }
    collect(candidate, candidate.sentinel(), &ranks, &mut subtree_ranks);

    let order_children = |kids: &[NodeId]| -> Vec<NodeId> {
        if kids.len() <= 1 {
            return kids.to_vec();
        }
        if kids.len() <= 6 {
            let mut best: Option<(usize, Vec<NodeId>)> = None;
            for perm in kids.iter().copied().permutations(kids.len()) {
                let mut inv = 0;
                for i in 0..perm.len() {
                    for j in i + 1..perm.len() {
                        inv += inversions(&subtree_ranks[perm[i].0], &subtree_ranks[perm[j].0]);
                    }
                }
                match &best {
                    Some((b, _)) if *b <= inv => {}
                    _ => best = Some((inv, perm)),
                }
            }
            best.unwrap().1
        } else {
            let mut sorted = kids.to_vec();
            sorted.sort_by(|a, b| {
                let ab = inversions(&subtree_ranks[a.0], &subtree_ranks[b.0]);
                let ba = inversions(&subtree_ranks[b.0], &subtree_ranks[a.0]);
                ab.cmp(&ba).then(a.0.cmp(&b.0))
            });
            sorted
        }
    };

    // Rebuild depth-first with the chosen orders; the new creation order is
    // the new sibling order, so downstream id-ordered traversals see it.
    let mut rebuilt = SummaryTree::new();
    let mut new_ids: BTreeMap<NodeId, NodeId> = BTreeMap::from([(candidate.sentinel(), rebuilt.sentinel())]);
    fn rebuild(
        t: &SummaryTree,
        id: NodeId,
        target: &mut SummaryTree,
        new_ids: &mut BTreeMap<NodeId, NodeId>,
        order_children: &dyn Fn(&[NodeId]) -> Vec<NodeId>,
    ) {
        for k in order_children(&t.children(id)) {
            let mapped = target.add_node(new_ids[&id], t.node(k).label.clone());
            new_ids.insert(k, mapped);
            rebuild(t, k, target, new_ids, order_children);
        }
    }
    rebuild(candidate, candidate.sentinel(), &mut rebuilt, &mut new_ids, &order_children);
    for (seq, node) in candidate.assignments() {
        rebuilt.assign(seq.clone(), new_ids[node]);
    }
    rebuilt
}

// ---------------------------------------------------------------------------
// Node-cost selection
// ---------------------------------------------------------------------------

/// Monte Carlo bounds for the reconstruction node cost: `lower` estimates the
/// expected distance between two corruptions of the same string, `upper` the
/// expected distance between corruptions of unrelated strings (capped by the
/// random-string approximation `k·(1 − 1/|Σ|)`). A workable node cost sits
/// between the two; `suggestion` is the midpoint either way.
#[derive(Debug, Clone)]
pub struct AlphaBounds {
    pub lower: f64,
    pub upper: f64,
    pub suggestion: f64,
    pub separating: bool,
    pub trials: usize,
}

impl AlphaBounds {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&json!({
            "lower": self.lower,
            "upper": self.upper,
            "suggestion": self.suggestion,
            "separating": self.separating,
            "trials": self.trials,
        }))
        .expect("bounds serialize")
    }

    fn from_samples(lower_mean: f64, upper_mean: f64, cap: f64, trials: usize) -> Self {
        let upper = upper_mean.min(cap);
        AlphaBounds {
            lower: lower_mean,
            upper,
            suggestion: (lower_mean + upper) / 2.0,
            separating: lower_mean < upper,
            trials,
        }
    }
}

/// Estimate node-cost bounds for a corruption process.
pub fn suggest_alpha(p: &GenParams, cm: &CostModel, trials: usize) -> Result<AlphaBounds> {
    if trials == 0 {
        return Err(DssspError::Input("need at least one trial".into()));
    }
    p.validate()?;
    let alphabet = p.alphabet_chars();
    let mut rng = crate::generator::rng_for(p.seed, 5, 0);
    let (mut lower_sum, mut upper_sum) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let u = random_string(p.k, &alphabet, &mut rng);
        let v = random_string(p.k, &alphabet, &mut rng);
        let u1 = corrupt_chars(&u, p, &mut rng);
        let u2 = corrupt_chars(&u, p, &mut rng);
        let v1 = corrupt_chars(&v, p, &mut rng);
        lower_sum += cost_to_f64(&edit_distance(&u1, &u2, cm));
        upper_sum += cost_to_f64(&edit_distance(&u1, &v1, cm));
    }
    let cap = p.k as f64 * (1.0 - 1.0 / alphabet.len() as f64);
    Ok(AlphaBounds::from_samples(lower_sum / trials as f64, upper_sum / trials as f64, cap, trials))
}

/// Estimate node-cost bounds from a corpus: strings at the same position in
/// different sequences stand in for corruptions of one original, strings at
/// different positions for unrelated pairs.
pub fn suggest_alpha_from_corpus(
    xs: &SequenceSet,
    cm: &CostModel,
    trials: usize,
    seed: u64,
) -> Result<AlphaBounds> {
    if trials == 0 {
        return Err(DssspError::Input("need at least one trial".into()));
    }
    let nonempty: Vec<&crate::model::StringSequence> =
        xs.sequences.iter().filter(|s| !s.is_empty()).collect();
    if nonempty.len() < 2 {
        return Err(DssspError::Input("corpus needs at least two nonempty sequences".into()));
    }
    let mut rng = crate::generator::rng_for(seed, 6, 0);
    let (mut lower_sum, mut lower_n) = (0.0f64, 0usize);
    let (mut upper_sum, mut upper_n) = (0.0f64, 0usize);
    for _ in 0..trials {
        let a = &nonempty[rng.gen_range(0..nonempty.len() as u64) as usize];
        let b = &nonempty[rng.gen_range(0..nonempty.len() as u64) as usize];
        let i = rng.gen_range(0..a.strings.len() as u64) as usize;
        let j = rng.gen_range(0..b.strings.len() as u64) as usize;
        let d = cost_to_f64(&edit_distance(&a.strings[i], &b.strings[j], cm));
        if i == j && a.id != b.id {
            lower_sum += d;
            lower_n += 1;
        } else if i != j {
            upper_sum += d;
            upper_n += 1;
        }
    }
    if lower_n == 0 || upper_n == 0 {
        return Err(DssspError::Input("not enough comparable string pairs in the corpus".into()));
    }
    let mean_len = nonempty
        .iter()
        .flat_map(|s| s.strings.iter())
        .map(|s| s.chars().count())
        .sum::<usize>() as f64
        / nonempty.iter().map(|s| s.strings.len()).sum::<usize>() as f64;
    let cap = mean_len * (1.0 - 1.0 / xs.alphabet().len().max(2) as f64);
    Ok(AlphaBounds::from_samples(lower_sum / lower_n as f64, upper_sum / upper_n as f64, cap, trials))
}

// ---------------------------------------------------------------------------
// Sweep CSV
// ---------------------------------------------------------------------------

/// One sweep measurement. `error` is empty when the tree cannot represent
/// some sequence (its assigned path is too short), which threshold methods
/// can produce at coarse settings.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub trial: usize,
    pub seed: u64,
    pub method: String,
    pub param: f64,
    pub lambda: f64,
    pub error: Option<f64>,
    pub nodes: usize,
    pub ted: Option<usize>,
    pub runtime_ms: u128,
}

/// Render rows as CSV, sorted by (trial, method, param) so parallel
/// producers emit identical files.
pub fn write_csv(rows: &[SweepRow]) -> String {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| {
        a.trial
            .cmp(&b.trial)
            .then_with(|| a.method.cmp(&b.method))
            .then(a.param.total_cmp(&b.param))
            .then(a.lambda.total_cmp(&b.lambda))
    });
    let mut out = String::from("trial,seed,method,param,lambda,error,nodes,ted,runtime_ms\n");
    for r in rows {
        let error = r.error.map(|e| e.to_string()).unwrap_or_default();
        let ted = r.ted.map(|t| t.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.trial, r.seed, r.method, r.param, r.lambda, error, r.nodes, ted, r.runtime_ms
        ));
    }
    out
}
