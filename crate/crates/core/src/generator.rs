//! Seeded synthetic corpora: branching-process trees with uniform random
//! labels, inherited string-level noise, independent character-level noise,
//! and the structure-preserving reference tree used as a reconstruction
//! floor.
//!
//! Randomness is ChaCha12 throughout, with one derived stream per (seed,
//! purpose, node) triple so that editing one part of an instance never
//! reshuffles another's draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DssspError, Result};
use crate::metrics::medoid;
use crate::model::{CostModel, NodeId, SequenceSet, StringSequence, SummaryTree};

const TAG_SHAPE: u64 = 1;
const TAG_LABEL: u64 = 2;
const TAG_STRING: u64 = 3;
const TAG_CHAR: u64 = 4;

/// Generator configuration. Defaults model noisy email-petition data:
/// mostly single-child growth with rare stops and splits, 25-character
/// names, small inherited string error rates, and 10% character noise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenParams {
    pub m: usize,
    pub k: usize,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub sigma_s: f64,
    pub delta_s: f64,
    pub sigma_c: f64,
    pub delta_c: f64,
    pub alphabet: String,
    pub seed: u64,
    pub max_attempts: u32,
}

impl GenParams {
    pub fn defaults(m: usize, seed: u64) -> Self {
        Self {
            m,
            k: 25,
            p0: 0.03,
            p1: 0.94,
            p2: 0.03,
            sigma_s: 0.001,
            delta_s: 0.001,
            sigma_c: 0.1,
            delta_c: 0.1,
            alphabet: ('a'..='z').collect(),
            seed,
            max_attempts: 10_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [self.p0, self.p1, self.p2, self.sigma_s, self.delta_s, self.sigma_c, self.delta_c];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(DssspError::Input("probabilities must lie in [0, 1]".into()));
        }
        if (self.p0 + self.p1 + self.p2 - 1.0).abs() > 1e-9 {
            return Err(DssspError::Input("branching probabilities must sum to 1".into()));
        }
        if self.sigma_s + self.delta_s > 1.0 + 1e-9 || self.sigma_c + self.delta_c > 1.0 + 1e-9 {
            return Err(DssspError::Input("substitution and deletion rates may not sum above 1".into()));
        }
        if self.m == 0 {
            return Err(DssspError::Input("need at least one leaf".into()));
        }
        if self.k == 0 {
            return Err(DssspError::Input("string length must be positive".into()));
        }
        if self.alphabet.chars().count() < 2 {
            return Err(DssspError::Input("alphabet needs at least two characters".into()));
        }
        Ok(())
    }

    pub fn alphabet_chars(&self) -> Vec<char> {
        self.alphabet.chars().collect()
    }

    /// Mean offspring count of one branching draw.
    pub fn mean_offspring(&self) -> f64 {
        self.p1 + 2.0 * self.p2
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for one (seed, purpose, id) triple.
pub(crate) fn rng_for(seed: u64, tag: u64, id: u64) -> ChaCha12Rng {
    let mixed = splitmix64(splitmix64(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)) ^ id);
    ChaCha12Rng::seed_from_u64(mixed)
}

pub(crate) fn random_string(k: usize, alphabet: &[char], rng: &mut impl Rng) -> String {
    (0..k).map(|_| alphabet[rng.gen_range(0..alphabet.len() as u64) as usize]).collect()
}

/// Character-level corruption: each character is substituted with
/// probability `sigma_c` (always by a *different* character) or deleted with
/// probability `delta_c`, the two cases disjoint so both marginals are exact.
pub fn corrupt_chars(s: &str, p: &GenParams, rng: &mut impl Rng) -> String {
    let alphabet = p.alphabet_chars();
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        let u: f64 = rng.gen();
        if u < p.sigma_c {
            let replacement = loop {
                let c = alphabet[rng.gen_range(0..alphabet.len() as u64) as usize];
                if c != ch {
                    break c;
                }
            };
            out.push(replacement);
        } else if u < p.sigma_c + p.delta_c {
            // deleted
        } else {
            out.push(ch);
        }
    }
    out
}

/// What phase-1 noise did to one inherited history entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StringEvent {
    Kept,
    Substituted,
    Deleted,
}

/// A generated instance: the true tree (leaves assigned `x1..xm`), the
/// per-node noisy histories after inherited string errors, the corrupted
/// leaf sequences after character errors, and the event log that produced
/// the histories.
#[derive(Debug, Clone)]
pub struct TrueInstance {
    pub params: GenParams,
    pub tree: SummaryTree,
    pub leaves: Vec<NodeId>,
    /// Indexed by node id; entry 0 (the sentinel) is empty.
    pub histories: Vec<Vec<String>>,
    /// Per node, one event per *inherited* entry (the appended own label is
    /// not part of the log).
    pub phase1_events: Vec<Vec<StringEvent>>,
    pub corrupted: SequenceSet,
}

/// Grow a branching-process tree until it has exactly `m` leaves, restarting
/// when the process dies early; label every node with a fresh uniform
/// random string. Returns the tree (leaves assigned `x1..xm` in creation
/// order) and the leaf ids.
pub fn sample_true_tree(p: &GenParams) -> Result<(SummaryTree, Vec<NodeId>)> {
    p.validate()?;
    let alphabet = p.alphabet_chars();
    for attempt in 0..p.max_attempts {
        let mut rng = rng_for(p.seed, TAG_SHAPE, attempt as u64);
        let mut tree = SummaryTree::new();
        let root = tree.add_node(tree.sentinel(), "");
        let mut queue = std::collections::VecDeque::from([root]);
        let mut leaves: Vec<NodeId> = Vec::new();
        loop {
            if leaves.len() + queue.len() == p.m {
                leaves.extend(queue.drain(..));
                break;
            }
            let Some(node) = queue.pop_front() else { break };
            let u: f64 = rng.gen();
            let children = if u < p.p0 {
                0
            } else if u < p.p0 + p.p1 {
                1
            } else {
                2
            };
            if children == 0 {
                leaves.push(node);
            } else {
                for _ in 0..children {
                    queue.push_back(tree.add_node(node, ""));
                }
            }
        }
        if leaves.len() != p.m {
            continue;
        }
        leaves.sort();
        // Shape fixed; now draw labels from per-node streams.
        let labeled = {
            let mut t = SummaryTree::new();
            for n in tree.nodes().iter().skip(1) {
                let label = random_string(p.k, &alphabet, &mut rng_for(p.seed, TAG_LABEL, n.id.0 as u64));
                let id = t.add_node(n.parent.unwrap(), label);
                debug_assert_eq!(id, n.id);
            }
            for (i, leaf) in leaves.iter().enumerate() {
                t.assign(format!("x{}", i + 1), *leaf);
            }
            t
        };
        return Ok((labeled, leaves));
    }
    Err(DssspError::Capacity(format!(
        "branching process failed to reach {} leaves in {} attempts",
        p.m, p.max_attempts
    )))
}

/// Run both noise phases over a labeled true tree.
///
/// Phase 1 walks the tree top-down: each node inherits its parent's noisy
/// history, substitutes or deletes each inherited entry, then appends its own
/// true label — so corrupted entries are shared verbatim by all descendants.
/// Phase 2 independently corrupts the characters of every leaf history.
pub fn corrupt(tree: &SummaryTree, leaves: &[NodeId], p: &GenParams) -> Result<TrueInstance> {
    p.validate()?;
    let alphabet = p.alphabet_chars();
    let n_nodes = tree.nodes().len();
    let mut histories: Vec<Vec<String>> = vec![Vec::new(); n_nodes];
    let mut events: Vec<Vec<StringEvent>> = vec![Vec::new(); n_nodes];
    // Creation order puts parents before children.
    for node in tree.nodes().iter().skip(1) {
        let parent_history = histories[node.parent.unwrap().0].clone();
        let mut rng = rng_for(p.seed, TAG_STRING, node.id.0 as u64);
        let mut h = Vec::with_capacity(parent_history.len() + 1);
        let mut log = Vec::with_capacity(parent_history.len());
        for entry in parent_history {
            let u: f64 = rng.gen();
            if u < p.sigma_s {
                h.push(random_string(p.k, &alphabet, &mut rng));
                log.push(StringEvent::Substituted);
            } else if u < p.sigma_s + p.delta_s {
                log.push(StringEvent::Deleted);
            } else {
                h.push(entry);
                log.push(StringEvent::Kept);
            }
        }
        h.push(tree.node(node.id).label.clone());
        histories[node.id.0] = h;
        events[node.id.0] = log;
    }

    let mut sequences = Vec::with_capacity(leaves.len());
    for (i, leaf) in leaves.iter().enumerate() {
        let mut rng = rng_for(p.seed, TAG_CHAR, leaf.0 as u64);
        let strings: Vec<String> =
            histories[leaf.0].iter().map(|s| corrupt_chars(s, p, &mut rng)).collect();
        sequences.push(StringSequence::new(format!("x{}", i + 1), strings));
    }
    let corrupted = SequenceSet::new(p.alphabet.chars(), sequences)?;
    Ok(TrueInstance {
        params: p.clone(),
        tree: tree.clone(),
        leaves: leaves.to_vec(),
        histories,
        phase1_events: events,
        corrupted,
    })
}

/// Convenience: sample a tree and corrupt it in one step.
pub fn generate(p: &GenParams) -> Result<TrueInstance> {
    let (tree, leaves) = sample_true_tree(p)?;
    corrupt(&tree, &leaves, p)
}

/// The reference tree: the true structure relabeled from the leaves' noisy
/// histories. Each leaf's history labels its deepest ancestors positionally
/// (deletions leave the shallowest ancestors unlabeled); nodes collecting
/// several labels take the medoid; unlabeled nodes are removed and their
/// children reattached upward.
pub fn build_reference_tree(inst: &TrueInstance, cm: &CostModel) -> Result<SummaryTree> {
    let tree = &inst.tree;
    let n_nodes = tree.nodes().len();
    let mut labels: Vec<Vec<String>> = vec![Vec::new(); n_nodes];
    for (i, leaf) in inst.leaves.iter().enumerate() {
        let history = &inst.histories[leaf.0];
        // Path from root to leaf, sentinel excluded.
        let mut path = Vec::new();
        let mut cur = *leaf;
        while let Some(parent) = tree.node(cur).parent {
            path.push(cur);
            cur = parent;
        }
        path.reverse();
        debug_assert!(history.len() <= path.len(), "sequence x{} outgrew its path", i + 1);
        let offset = path.len() - history.len();
        for (j, label) in history.iter().enumerate() {
            labels[path[offset + j].0].push(label.clone());
        }
    }

    let mut out = SummaryTree::new();
    // Map from true-tree node to its nearest kept counterpart.
    let mut image: Vec<NodeId> = vec![out.sentinel(); n_nodes];
    for node in tree.nodes().iter().skip(1) {
        let parent_image = image[node.parent.unwrap().0];
        if labels[node.id.0].is_empty() {
            image[node.id.0] = parent_image;
        } else {
            let label = medoid(&labels[node.id.0], cm)?;
            image[node.id.0] = out.add_node(parent_image, label);
        }
    }
    for (i, leaf) in inst.leaves.iter().enumerate() {
        out.assign(format!("x{}", i + 1), image[leaf.0]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_leaf_tree() {
        let p = GenParams::defaults(1, 7);
        let (tree, leaves) = sample_true_tree(&p).unwrap();
        assert_eq!(leaves.len(), 1);
        assert_eq!(tree.node_count(), 1);
    }

    #[test]
    fn forced_binary_branching() {
        let mut p = GenParams::defaults(4, 3);
        (p.p0, p.p1, p.p2) = (0.0, 0.0, 1.0);
        let (tree, leaves) = sample_true_tree(&p).unwrap();
        assert_eq!(leaves.len(), 4);
        assert_eq!(tree.node_count(), 7);
        for leaf in &leaves {
            assert_eq!(tree.depth(*leaf), 3);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let p = GenParams::defaults(15, 42);
        let a = generate(&p).unwrap();
        let b = generate(&p).unwrap();
        assert_eq!(a.tree, b.tree);
        assert_eq!(a.corrupted, b.corrupted);
        assert_eq!(a.histories, b.histories);
        let other = generate(&GenParams::defaults(15, 43)).unwrap();
        assert_ne!(a.corrupted, other.corrupted);
    }

    #[test]
    fn zero_noise_reproduces_true_sequences() {
        let mut p = GenParams::defaults(6, 11);
        (p.sigma_s, p.delta_s, p.sigma_c, p.delta_c) = (0.0, 0.0, 0.0, 0.0);
        let inst = generate(&p).unwrap();
        for (i, leaf) in inst.leaves.iter().enumerate() {
            let want = inst.tree.path_labels(*leaf);
            assert_eq!(inst.corrupted.sequences[i].strings, want);
        }
    }

    #[test]
    fn full_string_deletion_leaves_only_own_label() {
        let mut p = GenParams::defaults(5, 19);
        (p.sigma_s, p.delta_s, p.sigma_c, p.delta_c) = (0.0, 1.0, 0.0, 0.0);
        let inst = generate(&p).unwrap();
        for (i, leaf) in inst.leaves.iter().enumerate() {
            let own = inst.tree.node(*leaf).label.clone();
            assert_eq!(inst.corrupted.sequences[i].strings, vec![own]);
        }
    }

    #[test]
    fn phase_one_errors_are_inherited() {
        let mut p = GenParams::defaults(8, 23);
        (p.sigma_s, p.delta_s) = (0.2, 0.2);
        let inst = generate(&p).unwrap();
        for node in inst.tree.nodes().iter().skip(1) {
            let parent = node.parent.unwrap();
            let parent_history = &inst.histories[parent.0];
            let events = &inst.phase1_events[node.id.0];
            assert_eq!(events.len(), parent_history.len());
            // Replay the event log over the parent history; it must equal the
            // child history minus the appended own label.
            let mut replayed = Vec::new();
            let mut child_iter = inst.histories[node.id.0].iter();
            for (entry, ev) in parent_history.iter().zip(events) {
                match ev {
                    StringEvent::Kept => {
                        let kept = child_iter.next().unwrap();
                        assert_eq!(kept, entry);
                        replayed.push(kept.clone());
                    }
                    StringEvent::Substituted => {
                        replayed.push(child_iter.next().unwrap().clone());
                    }
                    StringEvent::Deleted => {}
                }
            }
            let own = child_iter.next().unwrap();
            assert_eq!(own, &inst.tree.node(node.id).label);
            assert!(child_iter.next().is_none());
        }
    }

    #[test]
    fn offspring_mean_matches_analytic_value() {
        let p = GenParams::defaults(2, 5);
        let mut rng = rng_for(p.seed, 99, 0);
        let n = 200_000;
        let mut total = 0u64;
        for _ in 0..n {
            let u: f64 = rng.gen();
            total += if u < p.p0 {
                0
            } else if u < p.p0 + p.p1 {
                1
            } else {
                2
            };
        }
        let mean = total as f64 / n as f64;
        assert!((mean - p.mean_offspring()).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn reference_tree_with_zero_noise_is_the_true_tree() {
        let mut p = GenParams::defaults(7, 31);
        (p.sigma_s, p.delta_s, p.sigma_c, p.delta_c) = (0.0, 0.0, 0.0, 0.0);
        let inst = generate(&p).unwrap();
        let reference = build_reference_tree(&inst, &CostModel::unit()).unwrap();
        assert!(reference.structurally_equal(&inst.tree));
    }

    #[test]
    fn reference_tree_drops_deleted_positions() {
        // One leaf, depth 3, with the middle history entry deleted by hand:
        // the shallowest ancestor loses its label and disappears.
        let p = GenParams::defaults(1, 0);
        let mut tree = SummaryTree::new();
        let a = tree.add_node(tree.sentinel(), "aaa");
        let b = tree.add_node(a, "bbb");
        let c = tree.add_node(b, "ccc");
        tree.assign("x1", c);
        let inst = TrueInstance {
            params: p,
            tree: tree.clone(),
            leaves: vec![c],
            histories: vec![vec![], vec![], vec![], vec!["bbb".into(), "ccc".into()]],
            phase1_events: vec![vec![]; 4],
            corrupted: SequenceSet::new("abc".chars(), vec![]).unwrap(),
        };
        let reference = build_reference_tree(&inst, &CostModel::unit()).unwrap();
        assert_eq!(reference.node_count(), 2);
        let leaf = reference.assignment("x1").unwrap();
        assert_eq!(reference.path_labels(leaf), vec!["bbb", "ccc"]);
    }

    #[test]
    fn character_noise_marginals_are_exact() {
        // With deletion off, substitutions are exactly Binomial(n, sigma_c);
        // with substitution off, deletions are Binomial(n, delta_c).
        let mut p = GenParams::defaults(2, 77);
        (p.sigma_c, p.delta_c) = (0.1, 0.0);
        let mut rng = rng_for(p.seed, 98, 0);
        let alphabet = p.alphabet_chars();
        let trials = 4_000;
        let mut changed = 0usize;
        let mut total = 0usize;
        for _ in 0..trials {
            let s = random_string(p.k, &alphabet, &mut rng);
            let c = corrupt_chars(&s, &p, &mut rng);
            assert_eq!(c.chars().count(), s.chars().count());
            changed += s.chars().zip(c.chars()).filter(|(a, b)| a != b).count();
            total += s.chars().count();
        }
        let freq = changed as f64 / total as f64;
        let sigma = (0.1f64 * 0.9 / total as f64).sqrt();
        assert!((freq - 0.1).abs() < 3.0 * sigma, "substitution frequency {freq}");
    }
}
