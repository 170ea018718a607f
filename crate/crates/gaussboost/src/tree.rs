//! Depth-limited regression trees fit on binned features.
//!
//! Splits are searched greedily over histogram bins: for every feature
//! the per-bin (count, target-sum) histogram is accumulated in one pass,
//! then each bin boundary is scored by the sum-of-squared-error
//! reduction it would achieve. Internal nodes store raw threshold values
//! (bin boundary midpoints), so prediction never needs the bin tables.

use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::binning::BinnedDataset;
use crate::error::{Error, Result};

/// Stopping rules for tree growth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_gain: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: 6,
            min_samples_leaf: 20,
            min_gain: 0.0,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=32).contains(&self.max_depth) {
            return Err(Error::InvalidInput(format!(
                "max_depth must be in [1, 32], got {}",
                self.max_depth
            )));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::InvalidInput("min_samples_leaf must be >= 1".into()));
        }
        if !self.min_gain.is_finite() || self.min_gain < 0.0 {
            return Err(Error::InvalidInput(format!(
                "min_gain must be finite and >= 0, got {}",
                self.min_gain
            )));
        }
        Ok(())
    }
}

/// One node of a fitted tree. Children are indices into the flat node
/// array; rows with `value < threshold` go left.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
        cover: usize,
    },
    Leaf {
        value: f64,
        cover: usize,
    },
}

impl TreeNode {
    pub fn cover(&self) -> usize {
        match self {
            TreeNode::Internal { cover, .. } | TreeNode::Leaf { cover, .. } => *cover,
        }
    }
}

/// Serialized node shape: internal nodes carry
/// `{feature, threshold, left, right, gain, cover}`, leaves
/// `{leaf_value, cover}`.
#[derive(Serialize, Deserialize)]
struct NodeRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    leaf_value: Option<f64>,
    cover: usize,
}

impl From<&TreeNode> for NodeRepr {
    fn from(node: &TreeNode) -> Self {
        match *node {
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
                gain,
                cover,
            } => NodeRepr {
                feature: Some(feature),
                threshold: Some(threshold),
                left: Some(left),
                right: Some(right),
                gain: Some(gain),
                leaf_value: None,
                cover,
            },
            TreeNode::Leaf { value, cover } => NodeRepr {
                feature: None,
                threshold: None,
                left: None,
                right: None,
                gain: None,
                leaf_value: Some(value),
                cover,
            },
        }
    }
}

impl TryFrom<NodeRepr> for TreeNode {
    type Error = String;

    fn try_from(repr: NodeRepr) -> std::result::Result<Self, String> {
        if let Some(value) = repr.leaf_value {
            return Ok(TreeNode::Leaf {
                value,
                cover: repr.cover,
            });
        }
        let require = |field: Option<f64>, name: &str| {
            field.ok_or_else(|| format!("tree node missing field `{name}`"))
        };
        let require_idx = |field: Option<usize>, name: &str| {
            field.ok_or_else(|| format!("tree node missing field `{name}`"))
        };
        Ok(TreeNode::Internal {
            feature: require_idx(repr.feature, "feature")?,
            threshold: require(repr.threshold, "threshold")?,
            left: require_idx(repr.left, "left")?,
            right: require_idx(repr.right, "right")?,
            gain: require(repr.gain, "gain")?,
            cover: repr.cover,
        })
    }
}

impl Serialize for TreeNode {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        NodeRepr::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TreeNode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = NodeRepr::deserialize(deserializer)?;
        TreeNode::try_from(repr).map_err(D::Error::custom)
    }
}

/// A fitted regression tree stored as a flat node array rooted at
/// index 0 with children after their parent.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
    root: usize,
}

impl Serialize for RegressionTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.nodes.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RegressionTree {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let nodes = Vec::<TreeNode>::deserialize(deserializer)?;
        RegressionTree::from_nodes(nodes).map_err(|e| D::Error::custom(e.to_string()))
    }
}

impl RegressionTree {
    /// Validate and wrap a flat node array (root at index 0).
    pub fn from_nodes(nodes: Vec<TreeNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::ModelFormat("tree has no nodes".into()));
        }
        let mut visited = vec![false; nodes.len()];
        // Children strictly after their parent rules out cycles; the visit
        // count check rules out sharing and orphans.
        let mut stack = vec![0usize];
        let mut seen = 0usize;
        while let Some(idx) = stack.pop() {
            if visited[idx] {
                return Err(Error::ModelFormat(format!(
                    "tree node {idx} reachable more than once"
                )));
            }
            visited[idx] = true;
            seen += 1;
            if let TreeNode::Internal {
                left,
                right,
                threshold,
                gain,
                cover,
                ..
            } = nodes[idx]
            {
                if left >= nodes.len() || right >= nodes.len() {
                    return Err(Error::ModelFormat(format!(
                        "tree node {idx} has a child index out of range ({} nodes)",
                        nodes.len()
                    )));
                }
                if left <= idx || right <= idx {
                    return Err(Error::ModelFormat(format!(
                        "tree node {idx} has a child before itself"
                    )));
                }
                if !threshold.is_finite() || !gain.is_finite() {
                    return Err(Error::ModelFormat(format!(
                        "tree node {idx} has non-finite threshold or gain"
                    )));
                }
                if nodes[left].cover() + nodes[right].cover() != cover {
                    return Err(Error::ModelFormat(format!(
                        "tree node {idx} cover {} does not equal child covers {} + {}",
                        cover,
                        nodes[left].cover(),
                        nodes[right].cover()
                    )));
                }
                stack.push(right);
                stack.push(left);
            } else if let TreeNode::Leaf { value, .. } = nodes[idx] {
                if !value.is_finite() {
                    return Err(Error::ModelFormat(format!(
                        "tree leaf {idx} has non-finite value"
                    )));
                }
            }
        }
        if seen != nodes.len() {
            return Err(Error::ModelFormat(format!(
                "{} of {} tree nodes unreachable from the root",
                nodes.len() - seen,
                nodes.len()
            )));
        }
        Ok(Self { nodes, root: 0 })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Largest feature index referenced by a split, if any.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Internal { feature, .. } => Some(*feature),
                TreeNode::Leaf { .. } => None,
            })
            .max()
    }

    pub fn is_single_leaf(&self) -> bool {
        self.nodes.len() == 1
    }
}

/// Fit a regression tree to `target` on binned features.
///
/// At each node the best (feature, bin) split by SSE reduction is taken,
/// ties broken by lowest feature index then lowest bin index; when no
/// split clears `min_gain` with both sides holding `min_samples_leaf`
/// rows, the node becomes a leaf with the mean target as value.
pub fn fit_tree(
    binned: &BinnedDataset,
    target: &[f64],
    cfg: &TreeConfig,
) -> Result<RegressionTree> {
    cfg.validate()?;
    let n = binned.n_rows();
    if target.len() != n {
        return Err(Error::InvalidInput(format!(
            "target length {} does not match {} binned rows",
            target.len(),
            n
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("cannot fit a tree on zero rows".into()));
    }
    if let Some(pos) = target.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite target at index {pos}"
        )));
    }

    let indices: Vec<u32> = (0..n as u32).collect();
    let mut nodes = Vec::new();
    grow(binned, target, cfg, &indices, 0, &mut nodes);
    Ok(RegressionTree { nodes, root: 0 })
}

struct SplitCandidate {
    gain: f64,
    feature: usize,
    bin: usize,
}

fn grow(
    binned: &BinnedDataset,
    target: &[f64],
    cfg: &TreeConfig,
    indices: &[u32],
    depth: usize,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let count = indices.len();
    let sum: f64 = indices.iter().map(|&i| target[i as usize]).sum();

    let make_leaf = |nodes: &mut Vec<TreeNode>| {
        let idx = nodes.len();
        nodes.push(TreeNode::Leaf {
            value: sum / count as f64,
            cover: count,
        });
        idx
    };

    if depth >= cfg.max_depth || count < 2 * cfg.min_samples_leaf {
        return make_leaf(nodes);
    }

    let best = match best_split(binned, target, cfg, indices, sum) {
        Some(b) if b.gain > cfg.min_gain => b,
        _ => return make_leaf(nodes),
    };

    let threshold = binned.thresholds(best.feature)[best.bin];
    let column = binned.column(best.feature);
    let mut left_idx = Vec::with_capacity(count);
    let mut right_idx = Vec::with_capacity(count);
    for &i in indices {
        if usize::from(column[i as usize]) <= best.bin {
            left_idx.push(i);
        } else {
            right_idx.push(i);
        }
    }

    let node_idx = nodes.len();
    nodes.push(TreeNode::Leaf {
        value: 0.0,
        cover: count,
    });
    let left = grow(binned, target, cfg, &left_idx, depth + 1, nodes);
    let right = grow(binned, target, cfg, &right_idx, depth + 1, nodes);
    nodes[node_idx] = TreeNode::Internal {
        feature: best.feature,
        threshold,
        left,
        right,
        gain: best.gain,
        cover: count,
    };
    node_idx
}

/// Best split over all features by histogram scan. Per-feature searches
/// run in parallel; the reduction walks features in ascending order so
/// the winner is independent of the thread count.
fn best_split(
    binned: &BinnedDataset,
    target: &[f64],
    cfg: &TreeConfig,
    indices: &[u32],
    total_sum: f64,
) -> Option<SplitCandidate> {
    let count = indices.len();
    let parent_score = total_sum * total_sum / count as f64;

    let per_feature: Vec<Option<SplitCandidate>> = (0..binned.n_features())
        .into_par_iter()
        .map(|f| {
            let n_bins = binned.n_bins(f);
            if n_bins < 2 {
                return None;
            }
            let column = binned.column(f);
            let mut counts = vec![0usize; n_bins];
            let mut sums = vec![0.0f64; n_bins];
            for &i in indices {
                let b = usize::from(column[i as usize]);
                counts[b] += 1;
                sums[b] += target[i as usize];
            }
            let mut best: Option<SplitCandidate> = None;
            let mut n_left = 0usize;
            let mut sum_left = 0.0f64;
            for k in 0..n_bins - 1 {
                n_left += counts[k];
                sum_left += sums[k];
                if n_left == count {
                    break;
                }
                let n_right = count - n_left;
                if n_left < cfg.min_samples_leaf || n_right < cfg.min_samples_leaf {
                    continue;
                }
                let sum_right = total_sum - sum_left;
                let gain = sum_left * sum_left / n_left as f64
                    + sum_right * sum_right / n_right as f64
                    - parent_score;
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(SplitCandidate {
                        gain,
                        feature: f,
                        bin: k,
                    });
                }
            }
            best
        })
        .collect();

    let mut best: Option<SplitCandidate> = None;
    for candidate in per_feature.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| candidate.gain > b.gain) {
            best = Some(candidate);
        }
    }
    best
}

/// Predict one row: descend from the root, going left when
/// `row[feature] < threshold`.
pub fn predict_tree(tree: &RegressionTree, row: &[f64]) -> Result<f64> {
    let mut idx = tree.root;
    loop {
        match tree.nodes[idx] {
            TreeNode::Leaf { value, .. } => return Ok(value),
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                let v = *row.get(feature).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "row has {} values but the tree splits on feature {}",
                        row.len(),
                        feature
                    ))
                })?;
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "non-finite value {v} for feature {feature}"
                    )));
                }
                idx = if v < threshold { left } else { right };
            }
        }
    }
}

/// Per-feature split counts and summed gains for one tree.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitStats {
    pub split_count: Vec<u64>,
    pub total_gain: Vec<f64>,
}

impl SplitStats {
    pub fn zeros(n_features: usize) -> Self {
        Self {
            split_count: vec![0; n_features],
            total_gain: vec![0.0; n_features],
        }
    }

    pub fn absorb(&mut self, other: &SplitStats) {
        for (a, b) in self.split_count.iter_mut().zip(&other.split_count) {
            *a += b;
        }
        for (a, b) in self.total_gain.iter_mut().zip(&other.total_gain) {
            *a += b;
        }
    }
}

/// Count internal-node occurrences and accumulate gains per feature.
pub fn tree_importance(tree: &RegressionTree, n_features: usize) -> SplitStats {
    let width = n_features.max(tree.max_feature().map_or(0, |f| f + 1));
    let mut stats = SplitStats::zeros(width);
    for node in tree.nodes() {
        if let TreeNode::Internal { feature, gain, .. } = node {
            stats.split_count[*feature] += 1;
            stats.total_gain[*feature] += gain;
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binning::{build_bins, Dataset};
    use rand::rngs::SmallRng;
    use rand::{Rng, SeedableRng};

    fn make_binned(columns: Vec<Vec<f64>>, max_bins: usize) -> BinnedDataset {
        let n = columns[0].len();
        let d = columns.len();
        let mut features = Vec::with_capacity(n * d);
        for i in 0..n {
            for col in &columns {
                features.push(col[i]);
            }
        }
        let names = (0..d).map(|j| format!("x{}", j + 1)).collect();
        let data = Dataset::new(features, d, vec![0.0; n], names).unwrap();
        build_bins(&data, max_bins).unwrap()
    }

    fn loose_cfg(max_depth: usize) -> TreeConfig {
        TreeConfig {
            max_depth,
            min_samples_leaf: 1,
            min_gain: 0.0,
        }
    }

    /// Brute-force oracle: enumerate every (feature, bin) split at every
    /// node and grow with the same stopping and tie-break rules.
    fn brute_force_fit(binned: &BinnedDataset, target: &[f64], cfg: &TreeConfig) -> Vec<TreeNode> {
        let indices: Vec<u32> = (0..binned.n_rows() as u32).collect();
        let mut nodes = Vec::new();
        brute_grow(binned, target, cfg, &indices, 0, &mut nodes);
        nodes
    }

    fn brute_grow(
        binned: &BinnedDataset,
        target: &[f64],
        cfg: &TreeConfig,
        indices: &[u32],
        depth: usize,
        nodes: &mut Vec<TreeNode>,
    ) -> usize {
        let count = indices.len();
        let sum: f64 = indices.iter().map(|&i| target[i as usize]).sum();
        let mut best: Option<(f64, usize, usize)> = None;
        if depth < cfg.max_depth && count >= 2 * cfg.min_samples_leaf {
            for f in 0..binned.n_features() {
                let n_bins = binned.n_bins(f);
                let column = binned.column(f);
                let mut counts = vec![0usize; n_bins];
                let mut sums = vec![0.0f64; n_bins];
                for &i in indices {
                    counts[usize::from(column[i as usize])] += 1;
                    sums[usize::from(column[i as usize])] += target[i as usize];
                }
                for k in 0..n_bins.saturating_sub(1) {
                    let n_l: usize = counts[..=k].iter().sum();
                    let s_l: f64 = sums[..=k].iter().sum();
                    let n_r = count - n_l;
                    if n_l < cfg.min_samples_leaf || n_r < cfg.min_samples_leaf || n_r == 0 {
                        continue;
                    }
                    let s_r = sum - s_l;
                    let gain =
                        s_l * s_l / n_l as f64 + s_r * s_r / n_r as f64 - sum * sum / count as f64;
                    if best.is_none_or(|(g, _, _)| gain > g) {
                        best = Some((gain, f, k));
                    }
                }
            }
        }
        match best {
            Some((gain, f, k)) if gain > cfg.min_gain => {
                let threshold = binned.thresholds(f)[k];
                let column = binned.column(f);
                let left_idx: Vec<u32> = indices
                    .iter()
                    .copied()
                    .filter(|&i| usize::from(column[i as usize]) <= k)
                    .collect();
                let right_idx: Vec<u32> = indices
                    .iter()
                    .copied()
                    .filter(|&i| usize::from(column[i as usize]) > k)
                    .collect();
                let node_idx = nodes.len();
                nodes.push(TreeNode::Leaf {
                    value: 0.0,
                    cover: count,
                });
                let left = brute_grow(binned, target, cfg, &left_idx, depth + 1, nodes);
                let right = brute_grow(binned, target, cfg, &right_idx, depth + 1, nodes);
                nodes[node_idx] = TreeNode::Internal {
                    feature: f,
                    threshold,
                    left,
                    right,
                    gain,
                    cover: count,
                };
                node_idx
            }
            _ => {
                let idx = nodes.len();
                nodes.push(TreeNode::Leaf {
                    value: sum / count as f64,
                    cover: count,
                });
                idx
            }
        }
    }

    #[test]
    fn constant_features_single_leaf() {
        let binned = make_binned(vec![vec![3.0; 8], vec![-1.0; 8]], 8);
        let target = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let tree = fit_tree(&binned, &target, &loose_cfg(4)).unwrap();
        assert!(tree.is_single_leaf());
        match tree.nodes()[0] {
            TreeNode::Leaf { value, cover } => {
                assert_eq!(value, 4.5);
                assert_eq!(cover, 8);
            }
            _ => panic!("expected leaf"),
        }
    }

    #[test]
    fn binary_feature_split_gain_100() {
        let binned = make_binned(vec![vec![0.0, 0.0, 1.0, 1.0]], 4);
        let target = vec![0.0, 0.0, 10.0, 10.0];
        let tree = fit_tree(&binned, &target, &loose_cfg(1)).unwrap();
        assert_eq!(tree.nodes().len(), 3);
        match tree.nodes()[0] {
            TreeNode::Internal {
                feature,
                threshold,
                gain,
                left,
                right,
                cover,
            } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 0.5);
                assert_eq!(gain, 100.0);
                assert_eq!(cover, 4);
                assert_eq!(
                    tree.nodes()[left],
                    TreeNode::Leaf {
                        value: 0.0,
                        cover: 2
                    }
                );
                assert_eq!(
                    tree.nodes()[right],
                    TreeNode::Leaf {
                        value: 10.0,
                        cover: 2
                    }
                );
            }
            _ => panic!("expected split"),
        }
        assert_eq!(predict_tree(&tree, &[0.0]).unwrap(), 0.0);
        assert_eq!(predict_tree(&tree, &[1.0]).unwrap(), 10.0);
        // Boundary rows route right under the `<` rule.
        assert_eq!(predict_tree(&tree, &[0.5]).unwrap(), 10.0);

        let stats = tree_importance(&tree, 1);
        assert_eq!(stats.split_count, vec![1]);
        assert_eq!(stats.total_gain, vec![100.0]);
    }

    #[test]
    fn single_leaf_predicts_value_everywhere() {
        let tree = RegressionTree::from_nodes(vec![TreeNode::Leaf {
            value: 5.0,
            cover: 3,
        }])
        .unwrap();
        assert_eq!(predict_tree(&tree, &[1.0, 2.0]).unwrap(), 5.0);
        assert_eq!(predict_tree(&tree, &[]).unwrap(), 5.0);
    }

    #[test]
    fn predict_rejects_non_finite() {
        let binned = make_binned(vec![vec![0.0, 0.0, 1.0, 1.0]], 4);
        let target = vec![0.0, 0.0, 10.0, 10.0];
        let tree = fit_tree(&binned, &target, &loose_cfg(1)).unwrap();
        assert!(predict_tree(&tree, &[f64::NAN]).is_err());
    }

    #[test]
    fn length_mismatch_rejected() {
        let binned = make_binned(vec![vec![0.0, 1.0, 2.0, 3.0]], 4);
        assert!(fit_tree(&binned, &[1.0, 2.0], &loose_cfg(2)).is_err());
    }

    /// Dyadic targets make every partial sum exact, so the histogram
    /// route and the brute-force route must agree bit for bit.
    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = SmallRng::seed_from_u64(42);
        for case in 0..200 {
            let n = rng.random_range(4..=32usize);
            let d = rng.random_range(1..=3usize);
            let max_bins = rng.random_range(2..=4usize);
            let depth = rng.random_range(1..=2usize);
            let columns: Vec<Vec<f64>> = (0..d)
                .map(|_| (0..n).map(|_| rng.random_range(0..6) as f64).collect())
                .collect();
            let target: Vec<f64> = (0..n)
                .map(|_| rng.random_range(-128..=128) as f64 / 8.0)
                .collect();
            let cfg = TreeConfig {
                max_depth: depth,
                min_samples_leaf: rng.random_range(1..=2),
                min_gain: 0.0,
            };
            let binned = make_binned(columns, max_bins);
            let tree = fit_tree(&binned, &target, &cfg).unwrap();
            let oracle = brute_force_fit(&binned, &target, &cfg);
            assert_eq!(tree.nodes(), oracle.as_slice(), "case {case} diverged");
        }
    }

    #[test]
    fn fit_never_worse_than_mean_predictor() {
        let mut rng = SmallRng::seed_from_u64(9);
        for _ in 0..20 {
            let n = 64usize;
            let columns: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let target: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let binned = make_binned(columns.clone(), 16);
            let tree = fit_tree(&binned, &target, &loose_cfg(4)).unwrap();
            let mean = target.iter().sum::<f64>() / n as f64;
            let mut sse_tree = 0.0;
            let mut sse_mean = 0.0;
            for i in 0..n {
                let row: Vec<f64> = columns.iter().map(|c| c[i]).collect();
                let p = predict_tree(&tree, &row).unwrap();
                sse_tree += (target[i] - p) * (target[i] - p);
                sse_mean += (target[i] - mean) * (target[i] - mean);
            }
            assert!(sse_tree <= sse_mean + 1e-9);
        }
    }

    #[test]
    fn covers_partition_samples() {
        let mut rng = SmallRng::seed_from_u64(17);
        let n = 128usize;
        let columns: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let target: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let binned = make_binned(columns, 8);
        let cfg = TreeConfig {
            max_depth: 5,
            min_samples_leaf: 4,
            min_gain: 0.0,
        };
        let tree = fit_tree(&binned, &target, &cfg).unwrap();
        assert_eq!(tree.nodes()[tree.root()].cover(), n);
        let mut leaf_total = 0usize;
        for node in tree.nodes() {
            match node {
                TreeNode::Leaf { cover, .. } => {
                    assert!(*cover >= cfg.min_samples_leaf);
                    leaf_total += cover;
                }
                TreeNode::Internal {
                    left,
                    right,
                    cover,
                    gain,
                    ..
                } => {
                    assert!(*gain > 0.0);
                    assert_eq!(
                        tree.nodes()[*left].cover() + tree.nodes()[*right].cover(),
                        *cover
                    );
                }
            }
        }
        assert_eq!(leaf_total, n);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let mut rng = SmallRng::seed_from_u64(31);
        let n = 256usize;
        let columns: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..n).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let target: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let binned = make_binned(columns, 32);
        let cfg = TreeConfig {
            max_depth: 6,
            min_samples_leaf: 2,
            min_gain: 0.0,
        };
        let fit_in_pool = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| fit_tree(&binned, &target, &cfg).unwrap())
        };
        let t1 = fit_in_pool(1);
        let t4 = fit_in_pool(4);
        assert_eq!(
            serde_json::to_string(&t1).unwrap(),
            serde_json::to_string(&t4).unwrap()
        );
    }

    #[test]
    fn importance_accumulates_per_feature() {
        let tree = RegressionTree::from_nodes(vec![
            TreeNode::Internal {
                feature: 2,
                threshold: 0.5,
                left: 1,
                right: 2,
                gain: 4.0,
                cover: 8,
            },
            TreeNode::Internal {
                feature: 2,
                threshold: 0.25,
                left: 3,
                right: 4,
                gain: 6.0,
                cover: 4,
            },
            TreeNode::Leaf {
                value: 1.0,
                cover: 4,
            },
            TreeNode::Leaf {
                value: 0.0,
                cover: 2,
            },
            TreeNode::Leaf {
                value: 2.0,
                cover: 2,
            },
        ])
        .unwrap();
        let stats = tree_importance(&tree, 4);
        assert_eq!(stats.split_count, vec![0, 0, 2, 0]);
        assert_eq!(stats.total_gain, vec![0.0, 0.0, 10.0, 0.0]);

        let leaf = RegressionTree::from_nodes(vec![TreeNode::Leaf {
            value: 0.0,
            cover: 1,
        }])
        .unwrap();
        let stats = tree_importance(&leaf, 3);
        assert_eq!(stats.split_count, vec![0, 0, 0]);
        assert_eq!(stats.total_gain, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn node_array_round_trips_and_validates() {
        let binned = make_binned(vec![vec![0.0, 0.0, 1.0, 1.0]], 4);
        let tree = fit_tree(&binned, &[0.0, 0.0, 10.0, 10.0], &loose_cfg(1)).unwrap();
        let json = serde_json::to_string(&tree).unwrap();
        let back: RegressionTree = serde_json::from_str(&json).unwrap();
        assert_eq!(tree, back);

        // Missing `threshold` on an internal node names the field.
        let bad = r#"[{"feature":0,"left":1,"right":2,"gain":1.0,"cover":4},
                      {"leaf_value":0.0,"cover":2},{"leaf_value":1.0,"cover":2}]"#;
        let err = serde_json::from_str::<RegressionTree>(bad).unwrap_err();
        assert!(err.to_string().contains("threshold"), "{err}");

        // Child index out of range.
        let bad = r#"[{"feature":0,"threshold":0.5,"left":1,"right":9,"gain":1.0,"cover":4},
                      {"leaf_value":0.0,"cover":2}]"#;
        assert!(serde_json::from_str::<RegressionTree>(bad).is_err());
    }
}
