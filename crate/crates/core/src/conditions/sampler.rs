//! Samplers for families of pairwise disjoint dyadic subrectangles.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{DisjointFamily, Rect};

/// Default probability of selecting a node during a stopping-time walk.
pub const DEFAULT_STOP_PROBABILITY: f64 = 0.3;

/// Largest family pool the exhaustive enumerator will build.
const EXHAUSTIVE_LIMIT: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerOptions {
    pub stop_probability: f64,
    /// When set, every emitted family satisfies `|∪R_i| ≤ smallness·|root|`.
    pub smallness: Option<f64>,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self { stop_probability: DEFAULT_STOP_PROBABILITY, smallness: None }
    }
}

/// Default walk depth: `min(6, alignment depth)`.
pub fn default_max_depth(alignment_depth: u32) -> u32 {
    alignment_depth.min(6)
}

/// Draws `count` families rooted at `root` with members at most `max_depth` levels down.
///
/// Deterministic families come first: every full level `0..=max_depth` and one single
/// node per level. The remainder are stopping-time walks that select a node with
/// probability `stop_probability` and otherwise recurse into all of its children;
/// unselected nodes at `max_depth` are dropped. With a smallness target, members are
/// removed in random order until the union is small enough, and empty results are
/// discarded.
pub fn sample_disjoint_families(
    root: &Rect,
    count: usize,
    max_depth: u32,
    options: SamplerOptions,
    seed: u64,
) -> Result<Vec<DisjointFamily>> {
    let q = options.stop_probability;
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("stop probability {q} outside [0, 1]")));
    }
    if let Some(small) = options.smallness {
        if !(small > 0.0 && small <= 1.0) {
            return Err(Error::InvalidParameter(format!("smallness target {small} outside (0, 1]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut families = Vec::with_capacity(count);
    let push = |members: Vec<Rect>, rng: &mut ChaCha8Rng, families: &mut Vec<DisjointFamily>| -> Result<()> {
        if families.len() >= count {
            return Ok(());
        }
        let members = match options.smallness {
            Some(small) => thin(members, root.measure() * small, rng),
            None => members,
        };
        if !members.is_empty() {
            families.push(DisjointFamily::new(*root, members)?);
        }
        Ok(())
    };

    const FULL_LEVEL_LIMIT: u32 = 16;
    let dim = root.dim() as u32;
    for level in 0..=max_depth {
        if level * dim > FULL_LEVEL_LIMIT {
            break;
        }
        push(root.descendants(level), &mut rng, &mut families)?;
    }
    for level in 1..=max_depth {
        let mut node = *root;
        for _ in 0..level {
            node = node.child(rng.gen_range(0..1usize << dim));
        }
        push(vec![node], &mut rng, &mut families)?;
    }
    let mut attempts = 0usize;
    while families.len() < count {
        attempts += 1;
        if attempts > 100 * count + 1000 {
            return Err(Error::InvalidParameter(format!(
                "could not draw {count} nonempty families under the smallness target"
            )));
        }
        let members = stopping_time_walk(root, max_depth, q, &mut rng);
        push(members, &mut rng, &mut families)?;
    }
    Ok(families)
}

fn stopping_time_walk(root: &Rect, max_depth: u32, q: f64, rng: &mut ChaCha8Rng) -> Vec<Rect> {
    let mut members = Vec::new();
    let mut stack = vec![*root];
    while let Some(node) = stack.pop() {
        if rng.gen_bool(q) {
            members.push(node);
        } else if node.level() - root.level() < max_depth {
            // Reverse so that children are visited in increasing order.
            stack.extend(node.children().into_iter().rev());
        }
    }
    members
}

fn thin(mut members: Vec<Rect>, target: f64, rng: &mut ChaCha8Rng) -> Vec<Rect> {
    members.shuffle(rng);
    let mut total: f64 = members.iter().map(Rect::measure).sum();
    while total > target * (1.0 + 1e-12) {
        match members.pop() {
            Some(r) => total -= r.measure(),
            None => break,
        }
    }
    members.sort_by_key(|r| (r.level(), r.key().1));
    members
}

/// Every nonempty family with members at most `depth ≤ 2` levels below `root`.
pub fn exhaustive_families(root: &Rect, depth: u32) -> Result<Vec<DisjointFamily>> {
    if depth > 2 {
        return Err(Error::Unsupported(format!("exhaustive enumeration is limited to depth 2, got {depth}")));
    }
    let options = antichains(root, depth)?;
    options
        .into_iter()
        .filter(|m| !m.is_empty())
        .map(|m| DisjointFamily::new(*root, m))
        .collect()
}

/// All antichains (including the empty one) of the subtree below `node`.
fn antichains(node: &Rect, depth: u32) -> Result<Vec<Vec<Rect>>> {
    if depth == 0 {
        return Ok(vec![Vec::new(), vec![*node]]);
    }
    let mut combined: Vec<Vec<Rect>> = vec![Vec::new()];
    for child in node.children() {
        let options = antichains(&child, depth - 1)?;
        if combined.len().saturating_mul(options.len()) > EXHAUSTIVE_LIMIT {
            return Err(Error::Unsupported(format!(
                "exhaustive enumeration exceeds {EXHAUSTIVE_LIMIT} families in dimension {}",
                node.dim()
            )));
        }
        combined = combined
            .iter()
            .flat_map(|prefix| {
                options.iter().map(move |tail| {
                    let mut merged = prefix.clone();
                    merged.extend_from_slice(tail);
                    merged
                })
            })
            .collect();
    }
    combined.push(vec![*node]);
    Ok(combined)
}
