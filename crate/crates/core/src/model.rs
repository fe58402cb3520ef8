//! Shared domain types: cost models, string sequences, summary trees, and
//! alignment traces.
//!
//! All types are immutable after construction and safe to share across
//! threads. Node ids are dense integers assigned in creation order; every
//! deterministic tie-break in the crate refers back to this order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cost::{cost, zero, Cost};
use crate::error::{DssspError, Result};

/// Reserved label for the artificial shared root. Kept out of every declared
/// alphabet so it can never collide with real data.
pub const SENTINEL_LABEL: &str = "\u{2022}";

// ---------------------------------------------------------------------------
// Cost model
// ---------------------------------------------------------------------------

/// Character-level edit costs: a symmetric substitution table with zero
/// diagonal plus per-character indel costs. Defaults are all-unit.
///
/// Entries not present in the tables fall back to unit cost, so the model is
/// total over any alphabet.
#[derive(Debug, Clone, Default)]
pub struct CostModel {
    substitution: BTreeMap<(char, char), Cost>,
    indel: BTreeMap<char, Cost>,
}

impl CostModel {
    /// Unit-cost model: every substitution between distinct characters and
    /// every indel costs 1.
    pub fn unit() -> Self {
        Self::default()
    }

    /// Set a substitution cost. Stores both orientations; rejects negative
    /// costs and nonzero diagonal entries.
    pub fn set_substitution(&mut self, a: char, b: char, c: Cost) -> Result<()> {
        if c < zero() {
            return Err(DssspError::Input(format!(
                "substitution cost for ({a}, {b}) must be nonnegative"
            )));
        }
        if a == b && c != zero() {
            return Err(DssspError::Input(format!(
                "substitution cost for ({a}, {a}) must be zero"
            )));
        }
        self.substitution.insert((a, b), c);
        self.substitution.insert((b, a), c);
        Ok(())
    }

    /// Set the indel cost of one character.
    pub fn set_indel(&mut self, ch: char, c: Cost) -> Result<()> {
        if c < zero() {
            return Err(DssspError::Input(format!(
                "indel cost for {ch} must be nonnegative"
            )));
        }
        self.indel.insert(ch, c);
        Ok(())
    }

    pub fn substitution_cost(&self, a: char, b: char) -> Cost {
        if a == b {
            return zero();
        }
        self.substitution.get(&(a, b)).copied().unwrap_or_else(|| cost(1))
    }

    pub fn indel_cost(&self, ch: char) -> Cost {
        self.indel.get(&ch).copied().unwrap_or_else(|| cost(1))
    }

    /// Cost of inserting (or deleting) a whole string: the sum of its
    /// characters' indel costs. This is the edit distance to the empty string.
    pub fn string_indel_cost(&self, s: &str) -> Cost {
        s.chars().map(|c| self.indel_cost(c)).sum()
    }

    pub fn is_unit(&self) -> bool {
        self.substitution.is_empty() && self.indel.is_empty()
    }

    /// Triangle-inequality spot check over character triples of `alphabet`.
    /// Violations are reported, not rejected: several optimality arguments in
    /// this crate assume the induced string metric is a metric, so callers
    /// should surface these warnings. Exhaustive for alphabets up to 24
    /// characters, sampled beyond that.
    pub fn triangle_warnings(&self, alphabet: &[char]) -> Vec<String> {
        let mut warnings = Vec::new();
        let chars: Vec<char> = if alphabet.len() <= 24 {
            alphabet.to_vec()
        } else {
            alphabet.iter().copied().step_by(alphabet.len() / 24 + 1).collect()
        };
        for &a in &chars {
            for &b in &chars {
                if self.substitution_cost(a, b) != self.substitution_cost(b, a) {
                    warnings.push(format!("substitution cost asymmetric for ({a}, {b})"));
                }
                if self.substitution_cost(a, b) > self.indel_cost(a) + self.indel_cost(b) {
                    warnings.push(format!(
                        "substituting {a}->{b} costs more than deleting and inserting"
                    ));
                }
                for &c in &chars {
                    let direct = self.substitution_cost(a, c);
                    let via = self.substitution_cost(a, b) + self.substitution_cost(b, c);
                    if direct > via {
                        warnings.push(format!("triangle inequality fails on ({a}, {b}, {c})"));
                    }
                }
            }
        }
        warnings
    }
}

// ---------------------------------------------------------------------------
// Sequences
// ---------------------------------------------------------------------------

/// One input sequence: an ordered list of strings under an opaque id.
///
/// The sentinel is never stored; algorithms that need it prepend it
/// implicitly. Empty strings are legal only as artifacts of the synthetic
/// corruption process and are stripped before reconstruction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StringSequence {
    pub id: String,
    pub strings: Vec<String>,
}

impl StringSequence {
    pub fn new(id: impl Into<String>, strings: Vec<String>) -> Self {
        Self { id: id.into(), strings }
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }
}

/// A corpus of sequences over a declared alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceSet {
    alphabet: Vec<char>,
    pub sequences: Vec<StringSequence>,
}

#[derive(Serialize, Deserialize)]
struct SequenceSetWire {
    alphabet: String,
    sequences: Vec<StringSequence>,
}

impl SequenceSet {
    /// Build a sequence set, rejecting out-of-alphabet characters, duplicate
    /// sequence ids, and alphabets that contain the reserved sentinel label.
    pub fn new(alphabet: impl IntoIterator<Item = char>, sequences: Vec<StringSequence>) -> Result<Self> {
        let alphabet: BTreeSet<char> = alphabet.into_iter().collect();
        if alphabet.iter().any(|c| SENTINEL_LABEL.contains(*c)) {
            return Err(DssspError::Input(format!(
                "alphabet may not contain the reserved sentinel character {SENTINEL_LABEL:?}"
            )));
        }
        let mut seen = BTreeSet::new();
        for seq in &sequences {
            if !seen.insert(seq.id.clone()) {
                return Err(DssspError::Input(format!("duplicate sequence id `{}`", seq.id)));
            }
            for s in &seq.strings {
                if let Some(bad) = s.chars().find(|c| !alphabet.contains(c)) {
                    return Err(DssspError::Input(format!(
                        "sequence `{}` contains character {bad:?} outside the declared alphabet",
                        seq.id
                    )));
                }
            }
        }
        Ok(Self { alphabet: alphabet.into_iter().collect(), sequences: sequences.to_vec() })
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Longest sequence length (`n`), 0 for an empty set.
    pub fn max_sequence_len(&self) -> usize {
        self.sequences.iter().map(|s| s.len()).max().unwrap_or(0)
    }

    /// Longest string length (`k`) over the whole corpus.
    pub fn max_string_len(&self) -> usize {
        self.sequences
            .iter()
            .flat_map(|s| s.strings.iter())
            .map(|s| s.chars().count())
            .max()
            .unwrap_or(0)
    }

    /// Copy with empty strings dropped from every sequence. Corruption can
    /// delete every character of a signature; those artifacts carry no
    /// content and are removed before reconstruction.
    pub fn without_empty_strings(&self) -> Self {
        let sequences = self
            .sequences
            .iter()
            .map(|s| StringSequence::new(s.id.clone(), s.strings.iter().filter(|w| !w.is_empty()).cloned().collect()))
            .collect();
        Self { alphabet: self.alphabet.clone(), sequences }
    }

    pub fn to_json(&self) -> String {
        let wire = SequenceSetWire {
            alphabet: self.alphabet.iter().collect(),
            sequences: self.sequences.clone(),
        };
        serde_json::to_string_pretty(&wire).expect("sequence set serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let wire: SequenceSetWire =
            serde_json::from_str(json).map_err(|e| DssspError::Input(format!("bad sequence set JSON: {e}")))?;
        Self::new(wire.alphabet.chars(), wire.sequences)
    }
}

// ---------------------------------------------------------------------------
// Summary trees
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub label: String,
}

/// A rooted labeled tree with an explicit sentinel root plus a map assigning
/// each input sequence to a node. The sentinel does not count toward
/// `node_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryTree {
    nodes: Vec<TreeNode>,
    assignments: BTreeMap<String, NodeId>,
}

#[derive(Serialize, Deserialize)]
struct TreeNodeWire {
    id: usize,
    parent: Option<usize>,
    label: String,
}

#[derive(Serialize, Deserialize)]
struct SummaryTreeWire {
    nodes: Vec<TreeNodeWire>,
    assignments: BTreeMap<String, usize>,
}

impl Default for SummaryTree {
    fn default() -> Self {
        Self::new()
    }
}

impl SummaryTree {
    /// A tree holding only the sentinel root (node 0).
    pub fn new() -> Self {
        Self {
            nodes: vec![TreeNode { id: NodeId(0), parent: None, label: SENTINEL_LABEL.to_string() }],
            assignments: BTreeMap::new(),
        }
    }

    pub fn sentinel(&self) -> NodeId {
        NodeId(0)
    }

    pub fn add_node(&mut self, parent: NodeId, label: impl Into<String>) -> NodeId {
        assert!(parent.0 < self.nodes.len(), "parent id out of range");
        let id = NodeId(self.nodes.len());
        self.nodes.push(TreeNode { id, parent: Some(parent), label: label.into() });
        id
    }

    pub fn assign(&mut self, seq_id: impl Into<String>, node: NodeId) {
        assert!(node.0 < self.nodes.len(), "node id out of range");
        self.assignments.insert(seq_id.into(), node);
    }

    /// Number of non-sentinel nodes.
    pub fn node_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id.0]
    }

    pub fn assignments(&self) -> &BTreeMap<String, NodeId> {
        &self.assignments
    }

    pub fn assignment(&self, seq_id: &str) -> Option<NodeId> {
        self.assignments.get(seq_id).copied()
    }

    /// Children of `id` in id order (creation order).
    pub fn children(&self, id: NodeId) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.parent == Some(id))
            .map(|n| n.id)
            .collect()
    }

    /// Non-sentinel depth: the sentinel has depth 0, its children depth 1.
    pub fn depth(&self, id: NodeId) -> usize {
        let mut d = 0;
        let mut cur = id;
        while let Some(p) = self.nodes[cur.0].parent {
            d += 1;
            cur = p;
        }
        d
    }

    /// Labels on the path from the root to `id`, sentinel excluded.
    pub fn path_labels(&self, id: NodeId) -> Vec<String> {
        let mut labels = Vec::new();
        let mut cur = id;
        while let Some(p) = self.nodes[cur.0].parent {
            labels.push(self.nodes[cur.0].label.clone());
            cur = p;
        }
        labels.reverse();
        labels
    }

    pub fn to_json(&self) -> String {
        let wire = SummaryTreeWire {
            nodes: self
                .nodes
                .iter()
                .map(|n| TreeNodeWire { id: n.id.0, parent: n.parent.map(|p| p.0), label: n.label.clone() })
                .collect(),
            assignments: self.assignments.iter().map(|(k, v)| (k.clone(), v.0)).collect(),
        };
        serde_json::to_string_pretty(&wire).expect("summary tree serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let wire: SummaryTreeWire =
            serde_json::from_str(json).map_err(|e| DssspError::Input(format!("bad summary tree JSON: {e}")))?;
        let mut nodes = Vec::with_capacity(wire.nodes.len());
        for (i, n) in wire.nodes.iter().enumerate() {
            if n.id != i {
                return Err(DssspError::Input(format!(
                    "tree nodes must be listed in dense id order; found id {} at position {i}",
                    n.id
                )));
            }
            if let Some(p) = n.parent {
                if p >= wire.nodes.len() {
                    return Err(DssspError::Input(format!("node {} has out-of-range parent {p}", n.id)));
                }
            }
            nodes.push(TreeNode {
                id: NodeId(n.id),
                parent: n.parent.map(NodeId),
                label: n.label.clone(),
            });
        }
        if nodes.is_empty() {
            return Err(DssspError::Input("tree must contain at least the sentinel".into()));
        }
        // Reject parent cycles: every node must reach a root by parent links.
        for start in 0..nodes.len() {
            let mut hops = 0;
            let mut cur = start;
            while let Some(p) = nodes[cur].parent {
                cur = p.0;
                hops += 1;
                if hops > nodes.len() {
                    return Err(DssspError::Input(format!("parent cycle through node {start}")));
                }
            }
        }
        let assignments = wire
            .assignments
            .into_iter()
            .map(|(k, v)| {
                if v >= nodes.len() {
                    Err(DssspError::Input(format!("assignment of `{k}` points at missing node {v}")))
                } else {
                    Ok((k, NodeId(v)))
                }
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(Self { nodes, assignments })
    }

    /// Deterministic DOT rendering: nodes in id order, sentinel drawn as a
    /// point, assignments noted on node labels.
    pub fn to_dot(&self) -> String {
        let mut by_node: BTreeMap<NodeId, Vec<&str>> = BTreeMap::new();
        for (seq, node) in &self.assignments {
            by_node.entry(*node).or_default().push(seq);
        }
        let mut out = String::from("digraph summary {\n");
        for n in &self.nodes {
            if n.parent.is_none() {
                let _ = writeln!(out, "  n{} [shape=point];", n.id.0);
            } else {
                let mut label = n.label.replace('\\', "\\\\").replace('"', "\\\"");
                if let Some(seqs) = by_node.get(&n.id) {
                    let _ = write!(label, "\\n[{}]", seqs.join(","));
                }
                let _ = writeln!(out, "  n{} [label=\"{}\"];", n.id.0, label);
            }
        }
        for n in &self.nodes {
            if let Some(p) = n.parent {
                let _ = writeln!(out, "  n{} -> n{};", p.0, n.id.0);
            }
        }
        out.push_str("}\n");
        out
    }

    /// Structural equality ignoring node ids and sibling order: same shape,
    /// same labels, same assignments at corresponding nodes.
    pub fn structurally_equal(&self, other: &SummaryTree) -> bool {
        fn canon(t: &SummaryTree, id: NodeId, with_labels: bool) -> String {
            let mut assigned: Vec<&String> =
                t.assignments.iter().filter(|(_, v)| **v == id).map(|(k, _)| k).collect();
            assigned.sort();
            let mut kids: Vec<String> =
                t.children(id).into_iter().map(|c| canon(t, c, with_labels)).collect();
            kids.sort();
            let label = if with_labels { t.node(id).label.as_str() } else { "" };
            format!("({label}|{:?}|{})", assigned, kids.join(","))
        }
        canon(self, self.sentinel(), true) == canon(other, other.sentinel(), true)
    }

    /// Like `structurally_equal` but ignoring labels; used when labels are
    /// only determined up to median tie-breaks.
    pub fn same_shape_and_assignments(&self, other: &SummaryTree) -> bool {
        fn canon(t: &SummaryTree, id: NodeId) -> String {
            let mut assigned: Vec<&String> =
                t.assignments.iter().filter(|(_, v)| **v == id).map(|(k, _)| k).collect();
            assigned.sort();
            let mut kids: Vec<String> = t.children(id).into_iter().map(|c| canon(t, c)).collect();
            kids.sort();
            format!("({:?}|{})", assigned, kids.join(","))
        }
        canon(self, self.sentinel()) == canon(other, other.sentinel())
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Check a tree against a sequence set. Violations are data, not failures:
/// the empty list means the tree is a valid summary of `xs`.
pub fn validate_tree(t: &SummaryTree, xs: &SequenceSet) -> Vec<String> {
    let mut violations = Vec::new();
    let roots: Vec<&TreeNode> = t.nodes().iter().filter(|n| n.parent.is_none()).collect();
    if roots.len() != 1 {
        violations.push(format!("multiple roots: found {} parentless nodes", roots.len()));
    }
    for r in &roots {
        if r.label != SENTINEL_LABEL {
            violations.push(format!("root node {} is not the sentinel", r.id.0));
        }
    }
    for n in t.nodes() {
        if n.parent.is_some() && n.label == SENTINEL_LABEL {
            violations.push(format!("non-root node {} carries the sentinel label", n.id.0));
        }
    }
    for seq in &xs.sequences {
        match t.assignment(&seq.id) {
            None => violations.push(format!("sequence `{}` has no assigned node", seq.id)),
            Some(v) => {
                let depth = t.depth(v);
                if depth < seq.len() {
                    violations.push(format!(
                        "depth < sequence length: `{}` (length {}) assigned at depth {depth}",
                        seq.id,
                        seq.len()
                    ));
                }
            }
        }
    }
    violations
}

pub fn tree_to_dot(t: &SummaryTree) -> String {
    t.to_dot()
}

// ---------------------------------------------------------------------------
// Alignment traces
// ---------------------------------------------------------------------------

/// One decision in a pairwise alignment. Indices are 0-based positions into
/// the two aligned sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlignOp {
    /// Align `x[i]` with `y[j]`.
    Substitute { i: usize, j: usize },
    /// Align `y[j]` with nothing in `x`.
    Insert { j: usize },
    /// Align `x[i]` with nothing in `y`.
    Delete { i: usize },
    /// Stop aligning; the suffixes `x[i..]` and `y[j..]` diverge.
    GiveUp { i: usize, j: usize },
}

/// An ordered list of alignment decisions plus the total cost they incur.
/// Indices increase monotonically and at most one `GiveUp` appears, as the
/// final op.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentTrace {
    pub ops: Vec<AlignOp>,
    pub total_cost: Cost,
}

impl AlignmentTrace {
    /// Structural well-formedness: monotone indices, `GiveUp` terminal.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        let (mut next_i, mut next_j) = (0usize, 0usize);
        for (pos, op) in self.ops.iter().enumerate() {
            if matches!(self.ops.get(pos.wrapping_sub(1)), Some(AlignOp::GiveUp { .. })) {
                violations.push("ops continue after give-up".into());
                break;
            }
            match *op {
                AlignOp::Substitute { i, j } => {
                    if i != next_i || j != next_j {
                        violations.push(format!("op {pos}: expected indices ({next_i}, {next_j})"));
                    }
                    next_i = i + 1;
                    next_j = j + 1;
                }
                AlignOp::Insert { j } => {
                    if j != next_j {
                        violations.push(format!("op {pos}: expected y index {next_j}"));
                    }
                    next_j = j + 1;
                }
                AlignOp::Delete { i } => {
                    if i != next_i {
                        violations.push(format!("op {pos}: expected x index {next_i}"));
                    }
                    next_i = i + 1;
                }
                AlignOp::GiveUp { i, j } => {
                    if i != next_i || j != next_j {
                        violations.push(format!("give-up at ({i}, {j}), expected ({next_i}, {next_j})"));
                    }
                }
            }
        }
        violations
    }

    /// Number of substitutions, which all precede any give-up.
    pub fn substitution_count(&self) -> usize {
        self.ops.iter().filter(|op| matches!(op, AlignOp::Substitute { .. })).count()
    }

    pub fn give_up(&self) -> Option<(usize, usize)> {
        match self.ops.last() {
            Some(AlignOp::GiveUp { i, j }) => Some((*i, *j)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(id: &str, strings: &[&str]) -> StringSequence {
        StringSequence::new(id, strings.iter().map(|s| s.to_string()).collect())
    }

    fn set(alphabet: &str, seqs: Vec<StringSequence>) -> SequenceSet {
        SequenceSet::new(alphabet.chars(), seqs).unwrap()
    }

    #[test]
    fn cost_model_defaults_are_unit() {
        let cm = CostModel::unit();
        assert_eq!(cm.substitution_cost('a', 'b'), cost(1));
        assert_eq!(cm.substitution_cost('a', 'a'), zero());
        assert_eq!(cm.indel_cost('z'), cost(1));
        assert_eq!(cm.string_indel_cost("abc"), cost(3));
        assert!(cm.triangle_warnings(&['a', 'b', 'c']).is_empty());
    }

    #[test]
    fn cost_model_rejects_nonzero_diagonal() {
        let mut cm = CostModel::unit();
        assert!(cm.set_substitution('a', 'a', cost(1)).is_err());
        assert!(cm.set_substitution('a', 'a', zero()).is_ok());
    }

    #[test]
    fn cost_model_flags_triangle_violation() {
        let mut cm = CostModel::unit();
        cm.set_substitution('a', 'c', cost(5)).unwrap();
        let warnings = cm.triangle_warnings(&['a', 'b', 'c']);
        assert!(!warnings.is_empty());
    }

    #[test]
    fn sequence_set_rejects_out_of_alphabet() {
        let err = SequenceSet::new("ab".chars(), vec![seq("x1", &["abc"])]);
        assert!(matches!(err, Err(DssspError::Input(_))));
    }

    #[test]
    fn sequence_set_rejects_duplicate_ids() {
        let err = SequenceSet::new("ab".chars(), vec![seq("x", &["a"]), seq("x", &["b"])]);
        assert!(err.is_err());
    }

    #[test]
    fn depth_violation_reported() {
        // A two-node path cannot represent a three-string sequence.
        let mut t = SummaryTree::new();
        let a = t.add_node(t.sentinel(), "a");
        let b = t.add_node(a, "b");
        t.assign("x1", b);
        let xs = set("abc", vec![seq("x1", &["a", "b", "c"])]);
        let violations = validate_tree(&t, &xs);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("depth < sequence length"));
    }

    #[test]
    fn alice_bob_tree_validates_cleanly() {
        // The branching optimum for the three-petition example: sentinel ->
        // Alice -> Bob -> {Carol -> {Eve, Frank}, Dan}.
        let xs = set(
            "ABCDEFaceiklnoryt",
            vec![
                seq("x1", &["Alice", "Bot", "Carol", "Eve"]),
                seq("x2", &["Alice", "Bob", "Carl", "Frank"]),
                seq("x3", &["Alyce", "Bob", "Dan"]),
            ],
        );
        let mut t = SummaryTree::new();
        let alice = t.add_node(t.sentinel(), "Alice");
        let bob = t.add_node(alice, "Bob");
        let carol = t.add_node(bob, "Carol");
        let dan = t.add_node(bob, "Dan");
        let eve = t.add_node(carol, "Eve");
        let frank = t.add_node(carol, "Frank");
        t.assign("x1", eve);
        t.assign("x2", frank);
        t.assign("x3", dan);
        assert!(validate_tree(&t, &xs).is_empty());
    }

    #[test]
    fn multiple_roots_reported() {
        let mut t = SummaryTree::new();
        t.add_node(t.sentinel(), "a");
        let json = t.to_json().replace("\"parent\": 0", "\"parent\": null");
        let broken = SummaryTree::from_json(&json).unwrap();
        let xs = set("a", vec![]);
        let violations = validate_tree(&broken, &xs);
        assert!(violations.iter().any(|v| v.contains("multiple roots")));
    }

    #[test]
    fn dot_export_is_stable_and_marks_sentinel() {
        let mut t = SummaryTree::new();
        let a = t.add_node(t.sentinel(), "Aaa");
        let b = t.add_node(a, "Bbb");
        let c = t.add_node(b, "Ccc");
        let d = t.add_node(c, "Ddd");
        t.assign("x1", d);
        let dot = t.to_dot();
        assert_eq!(dot, t.to_dot());
        assert!(dot.contains("n0 [shape=point]"));
        assert_eq!(dot.matches("->").count(), 4);

        let empty = SummaryTree::new();
        let dot = empty.to_dot();
        assert!(dot.contains("n0 [shape=point]"));
        assert!(!dot.contains("->"));
    }

    #[test]
    fn tree_json_round_trip() {
        let mut t = SummaryTree::new();
        let a = t.add_node(t.sentinel(), "a");
        let b = t.add_node(t.sentinel(), "b");
        t.add_node(a, "c");
        t.assign("x1", a);
        t.assign("x2", b);
        let back = SummaryTree::from_json(&t.to_json()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn sequence_set_json_round_trip() {
        let xs = set("ab", vec![seq("x1", &["ab", "a"]), seq("x2", &["b", ""])]);
        let back = SequenceSet::from_json(&xs.to_json()).unwrap();
        assert_eq!(xs, back);
    }

    #[test]
    fn tree_json_rejects_cycles() {
        let json = r#"{"nodes":[{"id":0,"parent":1,"label":"a"},{"id":1,"parent":0,"label":"b"}],"assignments":{}}"#;
        assert!(SummaryTree::from_json(json).is_err());
    }

    #[test]
    fn structural_equality_ignores_ids_and_order() {
        let mut t1 = SummaryTree::new();
        let a = t1.add_node(t1.sentinel(), "a");
        let b = t1.add_node(a, "b");
        let c = t1.add_node(a, "c");
        t1.assign("x1", b);
        t1.assign("x2", c);

        let mut t2 = SummaryTree::new();
        let a = t2.add_node(t2.sentinel(), "a");
        let c = t2.add_node(a, "c");
        let b = t2.add_node(a, "b");
        t2.assign("x1", b);
        t2.assign("x2", c);

        assert!(t1.structurally_equal(&t2));
        t2.assign("x2", b);
        assert!(!t1.structurally_equal(&t2));
    }

    #[test]
    fn trace_validation_catches_bad_indices() {
        let trace = AlignmentTrace {
            ops: vec![AlignOp::Substitute { i: 0, j: 0 }, AlignOp::Substitute { i: 2, j: 1 }],
            total_cost: zero(),
        };
        assert!(!trace.validate().is_empty());

        let ok = AlignmentTrace {
            ops: vec![
                AlignOp::Substitute { i: 0, j: 0 },
                AlignOp::Insert { j: 1 },
                AlignOp::GiveUp { i: 1, j: 2 },
            ],
            total_cost: zero(),
        };
        assert!(ok.validate().is_empty());
        assert_eq!(ok.substitution_count(), 1);
        assert_eq!(ok.give_up(), Some((1, 2)));
    }

    #[test]
    fn strip_empty_strings() {
        let xs = set("ab", vec![seq("x1", &["ab", "", "a"])]);
        let stripped = xs.without_empty_strings();
        assert_eq!(stripped.sequences[0].strings, vec!["ab", "a"]);
    }
}
