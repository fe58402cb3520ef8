//! Character-level edit distance and the sequence-level primitives built on
//! it: asymmetric alignment of a sequence against a label path, exact string
//! median for small sets, and the medoid.

use std::collections::HashMap;
use std::sync::RwLock;

use crate::cost::{zero, Cost};
use crate::error::{DssspError, Result};
use crate::model::{AlignOp, AlignmentTrace, CostModel};

/// Classical edit distance between `a` and `b` under `cm`.
pub fn edit_distance(a: &str, b: &str, cm: &CostModel) -> Cost {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (n, m) = (a.len(), b.len());
    let mut prev: Vec<Cost> = Vec::with_capacity(m + 1);
    prev.push(zero());
    for j in 0..m {
        let c = prev[j] + cm.indel_cost(b[j]);
        prev.push(c);
    }
    let mut cur = vec![zero(); m + 1];
    for i in 0..n {
        cur[0] = prev[0] + cm.indel_cost(a[i]);
        for j in 0..m {
            let sub = prev[j] + cm.substitution_cost(a[i], b[j]);
            let del = prev[j + 1] + cm.indel_cost(a[i]);
            let ins = cur[j] + cm.indel_cost(b[j]);
            cur[j + 1] = sub.min(del).min(ins);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Thread-safe memo for `edit_distance` under one (symmetric) cost model.
/// Pure cache: fill order never changes results.
pub struct EdCache<'a> {
    cm: &'a CostModel,
    map: RwLock<HashMap<(String, String), Cost>>,
}

impl<'a> EdCache<'a> {
    pub fn new(cm: &'a CostModel) -> Self {
        Self { cm, map: RwLock::new(HashMap::new()) }
    }

    pub fn cost_model(&self) -> &CostModel {
        self.cm
    }

    pub fn ed(&self, a: &str, b: &str) -> Cost {
        if a == b {
            return zero();
        }
        let key = if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        };
        if let Some(c) = self.map.read().unwrap().get(&key) {
            return *c;
        }
        let c = edit_distance(a, b, self.cm);
        self.map.write().unwrap().insert(key, c);
        c
    }
}

// ---------------------------------------------------------------------------
// Asymmetric edit distance
// ---------------------------------------------------------------------------

/// Align sequence `x` against label path `y`, allowing substitutions and
/// insertions into `x` but no deletions. Undefined when `|x| > |y|`.
///
/// Substituting `y[j]` for `x[i]` costs their edit distance; inserting `y[j]`
/// costs its distance to the empty string.
pub fn aed(x: &[String], y: &[String], cm: &CostModel) -> Result<(Cost, AlignmentTrace)> {
    if x.len() > y.len() {
        return Err(DssspError::AedUndefined(format!(
            "sequence of length {} cannot align to a path of length {}",
            x.len(),
            y.len()
        )));
    }
    let (nx, ny) = (x.len(), y.len());
    // dp[i][j]: cost of aligning x[i..] to y[j..]; None where impossible.
    let mut dp = vec![vec![None::<Cost>; ny + 1]; nx + 1];
    dp[nx][ny] = Some(zero());
    for j in (0..ny).rev() {
        dp[nx][j] = dp[nx][j + 1].map(|c| c + cm.string_indel_cost(&y[j]));
    }
    for i in (0..nx).rev() {
        for j in (0..ny).rev() {
            let sub = dp[i + 1][j + 1].map(|c| c + edit_distance(&x[i], &y[j], cm));
            let ins = dp[i][j + 1].map(|c| c + cm.string_indel_cost(&y[j]));
            dp[i][j] = match (sub, ins) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
        }
    }
    let total = dp[0][0].expect("alignment exists when |x| <= |y|");
    // Backtrace, preferring substitution over insertion on ties.
    let mut ops = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    while i < nx || j < ny {
        let here = dp[i][j].unwrap();
        if i < nx && j < ny {
            if let Some(rest) = dp[i + 1][j + 1] {
                if rest + edit_distance(&x[i], &y[j], cm) == here {
                    ops.push(AlignOp::Substitute { i, j });
                    i += 1;
                    j += 1;
                    continue;
                }
            }
        }
        ops.push(AlignOp::Insert { j });
        j += 1;
    }
    Ok((total, AlignmentTrace { ops, total_cost: total }))
}

/// Recompute the cost of an asymmetric alignment trace from scratch.
pub fn replay_aed(trace: &AlignmentTrace, x: &[String], y: &[String], cm: &CostModel) -> Result<Cost> {
    let mut total = zero();
    let (mut i, mut j) = (0usize, 0usize);
    for op in &trace.ops {
        match *op {
            AlignOp::Substitute { i: oi, j: oj } if oi == i && oj == j => {
                total += edit_distance(&x[i], &y[j], cm);
                i += 1;
                j += 1;
            }
            AlignOp::Insert { j: oj } if oj == j => {
                total += cm.string_indel_cost(&y[j]);
                j += 1;
            }
            _ => return Err(DssspError::Input(format!("op {op:?} invalid at ({i}, {j})"))),
        }
    }
    if i != x.len() || j != y.len() {
        return Err(DssspError::Input("trace does not consume both sequences".into()));
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// String median
// ---------------------------------------------------------------------------

/// Caps for the exact median computation, which is exponential in the number
/// of input strings.
#[derive(Debug, Clone)]
pub struct MedianConfig {
    pub max_inputs: usize,
    /// Candidate characters for median positions. `None` means the characters
    /// occurring in the inputs, which is exact under unit costs.
    pub candidates: Option<Vec<char>>,
}

impl Default for MedianConfig {
    fn default() -> Self {
        Self { max_inputs: 4, candidates: None }
    }
}

/// A string minimizing the summed edit distance to `s`, computed by dynamic
/// programming over the product of input positions. Among all optimal strings
/// reachable in the DP, returns the lexicographically least.
pub fn string_median(s: &[String], cm: &CostModel, cfg: &MedianConfig) -> Result<String> {
    string_median_with_cost(s, cm, cfg).map(|(m, _)| m)
}

pub fn string_median_with_cost(
    s: &[String],
    cm: &CostModel,
    cfg: &MedianConfig,
) -> Result<(String, Cost)> {
    if s.is_empty() {
        return Err(DssspError::Input("median of an empty set".into()));
    }
    if s.len() > cfg.max_inputs {
        return Err(DssspError::Capacity(format!(
            "median over {} strings exceeds the cap of {}; use the medoid instead",
            s.len(),
            cfg.max_inputs
        )));
    }
    let inputs: Vec<Vec<char>> = s.iter().map(|w| w.chars().collect()).collect();
    let t = inputs.len();
    let mut candidates: Vec<char> = match &cfg.candidates {
        Some(c) => c.clone(),
        None => inputs.iter().flatten().copied().collect(),
    };
    candidates.sort_unstable();
    candidates.dedup();

    // Mixed-radix state over per-string positions.
    let radix: Vec<usize> = inputs.iter().map(|w| w.len() + 1).collect();
    let total_states: usize = radix.iter().product();
    let stride: Vec<usize> = {
        let mut v = vec![1usize; t];
        for i in (0..t.saturating_sub(1)).rev() {
            v[i] = v[i + 1] * radix[i + 1];
        }
        v
    };
    let decode = |state: usize| -> Vec<usize> {
        (0..t).map(|i| state / stride[i] % radix[i]).collect()
    };

    #[derive(Clone)]
    enum Step {
        DeleteFrom(usize),
        Emit { advance: Vec<usize>, ch: char },
    }

    // Suffix cost from each state to the all-consumed state, filled in
    // decreasing order of total progress so successors are ready.
    let mut suffix: Vec<Option<Cost>> = vec![None; total_states];
    let mut order: Vec<usize> = (0..total_states).collect();
    order.sort_by_key(|&st| std::cmp::Reverse(decode(st).iter().sum::<usize>()));

    let transitions = |pos: &[usize]| -> Vec<(Step, usize, Cost)> {
        let pending: Vec<usize> = (0..t).filter(|&i| pos[i] < inputs[i].len()).collect();
        let mut out = Vec::new();
        for &i in &pending {
            let next = (0..t).fold(0usize, |acc, k| {
                acc + (pos[k] + usize::from(k == i)) * stride[k]
            });
            out.push((Step::DeleteFrom(i), next, cm.indel_cost(inputs[i][pos[i]])));
        }
        for mask in 1u32..(1 << pending.len()) {
            let advance: Vec<usize> = pending
                .iter()
                .enumerate()
                .filter(|(bit, _)| mask >> bit & 1 == 1)
                .map(|(_, &i)| i)
                .collect();
            let next = (0..t).fold(0usize, |acc, k| {
                acc + (pos[k] + usize::from(advance.contains(&k))) * stride[k]
            });
            for &c in &candidates {
                let mut step_cost = zero();
                for i in 0..t {
                    if advance.contains(&i) {
                        step_cost += cm.substitution_cost(inputs[i][pos[i]], c);
                    } else {
                        step_cost += cm.indel_cost(c);
                    }
                }
                out.push((Step::Emit { advance: advance.clone(), ch: c }, next, step_cost));
            }
        }
        out
    };

    for st in order {
        let pos = decode(st);
        if pos.iter().zip(&inputs).all(|(&p, w)| p == w.len()) {
            suffix[st] = Some(zero());
            continue;
        }
        let mut best: Option<Cost> = None;
        for (_, next, step_cost) in transitions(&pos) {
            if let Some(rest) = suffix[next] {
                let c = step_cost + rest;
                best = Some(match best {
                    Some(b) => b.min(c),
                    None => c,
                });
            }
        }
        suffix[st] = best;
    }
    let best_cost = suffix[0].expect("median DP always reaches the final state");

    // Walk optimal transitions, memoizing the lexicographically least string
    // emittable from each state.
    fn lexmin(
        st: usize,
        suffix: &[Option<Cost>],
        memo: &mut HashMap<usize, String>,
        decode: &dyn Fn(usize) -> Vec<usize>,
        transitions: &dyn Fn(&[usize]) -> Vec<(Step, usize, Cost)>,
        inputs: &[Vec<char>],
    ) -> String {
        if let Some(s) = memo.get(&st) {
            return s.clone();
        }
        let pos = decode(st);
        if pos.iter().zip(inputs).all(|(&p, w)| p == w.len()) {
            memo.insert(st, String::new());
            return String::new();
        }
        let here = suffix[st].unwrap();
        let mut best: Option<String> = None;
        for (step, next, step_cost) in transitions(&pos) {
            let Some(rest) = suffix[next] else { continue };
            if step_cost + rest != here {
                continue;
            }
            let tail = lexmin(next, suffix, memo, decode, transitions, inputs);
            let candidate = match step {
                Step::DeleteFrom(_) => tail,
                Step::Emit { ch, .. } => {
                    let mut s = String::with_capacity(tail.len() + 1);
                    s.push(ch);
                    s.push_str(&tail);
                    s
                }
            };
            best = Some(match best {
                Some(b) if b <= candidate => b,
                _ => candidate,
            });
        }
        let s = best.expect("optimal state has an optimal transition");
        memo.insert(st, s.clone());
        s
    }

    let mut memo = HashMap::new();
    let median = lexmin(0, &suffix, &mut memo, &decode, &transitions, &inputs);
    Ok((median, best_cost))
}

// ---------------------------------------------------------------------------
// Medoid
// ---------------------------------------------------------------------------

/// The element of `s` minimizing summed edit distance to all of `s` (itself
/// included); ties go to the lexicographically first element.
pub fn medoid(s: &[String], cm: &CostModel) -> Result<String> {
    medoid_with_cost(s, cm).map(|(m, _)| m)
}

pub fn medoid_with_cost(s: &[String], cm: &CostModel) -> Result<(String, Cost)> {
    let cache = EdCache::new(cm);
    medoid_cached(s, &cache)
}

pub(crate) fn medoid_cached(s: &[String], cache: &EdCache) -> Result<(String, Cost)> {
    if s.is_empty() {
        return Err(DssspError::Input("medoid of an empty set".into()));
    }
    let mut candidates: Vec<&String> = s.iter().collect();
    candidates.sort();
    candidates.dedup();
    let mut best: Option<(&String, Cost)> = None;
    for cand in candidates {
        let total: Cost = s.iter().map(|w| cache.ed(cand, w)).sum();
        match &best {
            Some((_, c)) if *c <= total => {}
            _ => best = Some((cand, total)),
        }
    }
    let (m, c) = best.unwrap();
    Ok((m.clone(), c))
}
