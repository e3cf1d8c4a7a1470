//! Tree tensor networks: coefficient tensors in tree-structured low-rank
//! form, one component per tree node.
//!
//! Component layout, with children always in the tree's sorted child order:
//!
//! * root: one axis per child, sizes (r_child...); the root rank is 1 and
//!   carries no axis;
//! * interior node a: (r_a, r_child...), parent axis first;
//! * leaf for mode v: (r_v, n_v) with n_v the coefficient dimension.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::discretize::{Evaluable, UnivariateBasis};
use crate::error::{Error, Result};
use crate::tensor::{self, FullTensor};
use crate::tree::{DimensionTree, NodeId};

/// Per-node rank choice; the root is always 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankAssignment {
    ranks: Vec<usize>,
}

impl RankAssignment {
    pub fn uniform(tree: &DimensionTree, r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidArgument("ranks must be >= 1".into()));
        }
        let mut ranks = vec![r; tree.node_count()];
        ranks[tree.root().index()] = 1;
        Ok(RankAssignment { ranks })
    }

    /// Ranks keyed by node label ("1-2-3"). Every non-root node must be
    /// listed; the root may be listed only as 1.
    pub fn from_labels(tree: &DimensionTree, by_label: &BTreeMap<String, usize>) -> Result<Self> {
        let mut ranks = vec![0usize; tree.node_count()];
        ranks[tree.root().index()] = 1;
        let mut used = 0;
        for id in tree.node_ids() {
            let label = tree.label(id);
            match (by_label.get(&label), tree.is_root(id)) {
                (Some(&r), true) if r != 1 => {
                    return Err(Error::InvalidArgument(format!(
                        "root rank must be 1, got {r}"
                    )))
                }
                (Some(_), true) => used += 1,
                (Some(&r), false) if r >= 1 => {
                    ranks[id.index()] = r;
                    used += 1;
                }
                (Some(&r), false) => {
                    return Err(Error::InvalidArgument(format!(
                        "rank {r} at node {label} must be >= 1"
                    )))
                }
                (None, true) => {}
                (None, false) => {
                    return Err(Error::InvalidArgument(format!(
                        "no rank given for node {label}"
                    )))
                }
            }
        }
        if used != by_label.len() {
            let known: Vec<String> = tree.node_ids().map(|id| tree.label(id)).collect();
            return Err(Error::InvalidArgument(format!(
                "rank map names nodes outside the tree; tree nodes are {known:?}"
            )));
        }
        Ok(RankAssignment { ranks })
    }

    pub fn from_vec(tree: &DimensionTree, ranks: Vec<usize>) -> Result<Self> {
        if ranks.len() != tree.node_count() {
            return Err(Error::InvalidArgument(format!(
                "{} ranks for {} nodes",
                ranks.len(),
                tree.node_count()
            )));
        }
        if ranks[tree.root().index()] != 1 {
            return Err(Error::InvalidArgument("root rank must be 1".into()));
        }
        if ranks.iter().any(|&r| r == 0) {
            return Err(Error::InvalidArgument("ranks must be >= 1".into()));
        }
        Ok(RankAssignment { ranks })
    }

    pub fn get(&self, id: NodeId) -> usize {
        self.ranks[id.index()]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.ranks
    }

    /// Clamps each rank to the exact-representability cap of its
    /// matricization: min over both index-set sides of the product of leaf
    /// dimensions.
    pub fn capped_to_dims(&self, tree: &DimensionTree, leaf_dims: &[usize]) -> Result<Self> {
        if leaf_dims.len() != tree.d() {
            return Err(Error::ShapeMismatch(format!(
                "{} leaf dims for d = {}",
                leaf_dims.len(),
                tree.d()
            )));
        }
        let side = |modes: &[usize]| -> u128 {
            modes
                .iter()
                .map(|&m| leaf_dims[m - 1] as u128)
                .fold(1u128, |a, b| a.saturating_mul(b))
        };
        let mut ranks = self.ranks.clone();
        for id in tree.non_root_ids() {
            let cap = side(tree.modes(id)).min(side(&tree.complement(id)));
            let cap = usize::try_from(cap).unwrap_or(usize::MAX);
            ranks[id.index()] = ranks[id.index()].min(cap.max(1));
        }
        Ok(RankAssignment { ranks })
    }
}

/// Storage cost of a network: total entry count over all components.
pub fn complexity(tree: &DimensionTree, ranks: &RankAssignment, leaf_dims: &[usize]) -> u128 {
    let mut total = 0u128;
    for id in tree.node_ids() {
        if tree.is_leaf(id) {
            let mode = tree.modes(id)[0];
            total += ranks.get(id) as u128 * leaf_dims[mode - 1] as u128;
        } else {
            let own = if tree.is_root(id) { 1 } else { ranks.get(id) };
            let prod: u128 = tree
                .children(id)
                .iter()
                .map(|&c| ranks.get(c) as u128)
                .product();
            total += own as u128 * prod;
        }
    }
    total
}

#[derive(Debug, Clone)]
pub struct TreeTensorNetwork {
    tree: DimensionTree,
    ranks: RankAssignment,
    components: Vec<FullTensor>,
    leaf_bases: Option<Vec<UnivariateBasis>>,
    coeff_orthonormal: bool,
}

impl TreeTensorNetwork {
    /// Expected component shape at a node for given ranks and leaf dims.
    pub fn component_shape(
        tree: &DimensionTree,
        ranks: &RankAssignment,
        leaf_dims: &[usize],
        id: NodeId,
    ) -> Vec<usize> {
        if tree.is_leaf(id) {
            let mode = tree.modes(id)[0];
            vec![ranks.get(id), leaf_dims[mode - 1]]
        } else {
            let mut shape = if tree.is_root(id) {
                Vec::new()
            } else {
                vec![ranks.get(id)]
            };
            shape.extend(tree.children(id).iter().map(|&c| ranks.get(c)));
            shape
        }
    }

    pub fn new(
        tree: DimensionTree,
        components: Vec<FullTensor>,
        leaf_bases: Option<Vec<UnivariateBasis>>,
        coeff_orthonormal: bool,
    ) -> Result<Self> {
        if components.len() != tree.node_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} components for {} nodes",
                components.len(),
                tree.node_count()
            )));
        }
        // Ranks are read off the parent axes; shapes are then re-checked.
        let mut ranks = vec![1usize; tree.node_count()];
        for id in tree.non_root_ids() {
            ranks[id.index()] = *components[id.index()].shape().first().ok_or_else(|| {
                Error::ShapeMismatch("component with no axes".into())
            })?;
        }
        let ranks = RankAssignment { ranks };
        let mut leaf_dims = vec![0usize; tree.d()];
        for id in tree.leaf_ids() {
            let shape = components[id.index()].shape();
            if shape.len() != 2 {
                return Err(Error::ShapeMismatch(format!(
                    "leaf {} component must have 2 axes, got {:?}",
                    tree.label(id),
                    shape
                )));
            }
            leaf_dims[tree.modes(id)[0] - 1] = shape[1];
        }
        for id in tree.node_ids() {
            let want = Self::component_shape(&tree, &ranks, &leaf_dims, id);
            if components[id.index()].shape() != want.as_slice() {
                return Err(Error::ShapeMismatch(format!(
                    "component at {} has shape {:?}, expected {:?}",
                    tree.label(id),
                    components[id.index()].shape(),
                    want
                )));
            }
        }
        if let Some(bases) = &leaf_bases {
            if bases.len() != tree.d() {
                return Err(Error::ShapeMismatch(format!(
                    "{} leaf bases for d = {}",
                    bases.len(),
                    tree.d()
                )));
            }
            for (k, basis) in bases.iter().enumerate() {
                basis.check_invariants()?;
                if basis.dim() != leaf_dims[k] {
                    return Err(Error::ShapeMismatch(format!(
                        "basis on mode {} has {} functions, leaf stores {}",
                        k + 1,
                        basis.dim(),
                        leaf_dims[k]
                    )));
                }
            }
        }
        Ok(TreeTensorNetwork {
            tree,
            ranks,
            components,
            leaf_bases,
            coeff_orthonormal,
        })
    }

    /// Network with iid standard normal component entries, for testing.
    pub fn random<R: rand::Rng>(
        tree: &DimensionTree,
        ranks: &RankAssignment,
        leaf_dims: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        let mut components = Vec::with_capacity(tree.node_count());
        for id in tree.node_ids() {
            let shape = Self::component_shape(tree, ranks, leaf_dims, id);
            components.push(FullTensor::random_normal(shape, rng)?);
        }
        TreeTensorNetwork::new(tree.clone(), components, None, false)
    }

    pub fn tree(&self) -> &DimensionTree {
        &self.tree
    }

    pub fn d(&self) -> usize {
        self.tree.d()
    }

    pub fn ranks(&self) -> &RankAssignment {
        &self.ranks
    }

    pub fn component(&self, id: NodeId) -> &FullTensor {
        &self.components[id.index()]
    }

    pub fn leaf_bases(&self) -> Option<&[UnivariateBasis]> {
        self.leaf_bases.as_deref()
    }

    pub fn coeff_orthonormal(&self) -> bool {
        self.coeff_orthonormal
    }

    pub fn leaf_dims(&self) -> Vec<usize> {
        let mut dims = vec![0usize; self.d()];
        for id in self.tree.leaf_ids() {
            dims[self.tree.modes(id)[0] - 1] = self.components[id.index()].shape()[1];
        }
        dims
    }

    /// Total stored entries.
    pub fn complexity(&self) -> u128 {
        self.components.iter().map(|c| c.len() as u128).sum()
    }

    /// Attaches (or replaces) the per-mode bases, revalidating dimensions.
    pub fn with_leaf_bases(self, bases: Vec<UnivariateBasis>) -> Result<Self> {
        TreeTensorNetwork::new(
            self.tree,
            self.components,
            Some(bases),
            self.coeff_orthonormal,
        )
    }

    /// Replaces one component; the new tensor must keep the shape.
    pub fn with_component(&self, id: NodeId, component: FullTensor) -> Result<Self> {
        if component.shape() != self.components[id.index()].shape() {
            return Err(Error::ShapeMismatch(format!(
                "replacement at {} has shape {:?}, component is {:?}",
                self.tree.label(id),
                component.shape(),
                self.components[id.index()].shape()
            )));
        }
        let mut out = self.clone();
        out.components[id.index()] = component;
        Ok(out)
    }

    /// Ranks that would not survive a exactness check: entries above the
    /// matricization cap of the stored coefficient dimensions.
    pub fn rank_warnings(&self) -> Vec<String> {
        let dims = self.leaf_dims();
        let capped = self
            .ranks
            .capped_to_dims(&self.tree, &dims)
            .expect("dims from own leaves");
        let mut warnings = Vec::new();
        for id in self.tree.non_root_ids() {
            let r = self.ranks.get(id);
            let cap = capped.get(id);
            if r > cap {
                warnings.push(format!(
                    "rank {r} at node {} exceeds the representable maximum {cap}",
                    self.tree.label(id)
                ));
            }
        }
        warnings
    }

    /// Contracts the network after substituting each leaf's coefficient
    /// axis through `mats[mode-1]` (rows are output points, columns
    /// coefficients). Identity matrices reproduce the coefficient tensor.
    pub fn contract_leafwise(&self, mats: &[DMatrix<f64>]) -> Result<FullTensor> {
        if mats.len() != self.d() {
            return Err(Error::ShapeMismatch(format!(
                "{} leaf matrices for d = {}",
                mats.len(),
                self.d()
            )));
        }
        // carried[i]: tensor with axes [r_node, out(m) for m in sorted modes].
        let mut carried: Vec<Option<FullTensor>> = vec![None; self.tree.node_count()];
        let order: Vec<NodeId> = self.tree.node_ids().collect();
        for &id in order.iter().rev() {
            let t = if self.tree.is_leaf(id) {
                let mode = self.tree.modes(id)[0];
                self.components[id.index()].multiply_mode(2, &mats[mode - 1])?
            } else {
                let mut acc = self.components[id.index()].clone();
                let parent_axes = usize::from(!self.tree.is_root(id));
                let children = self.tree.children(id).to_vec();
                // Contract each child axis with the child's flattened carry,
                // then re-expand the flattened blocks into per-mode axes.
                let mut block_modes: Vec<usize> = Vec::new();
                let mut block_dims: Vec<usize> = Vec::new();
                for (j, &child) in children.iter().enumerate() {
                    let u = carried[child.index()]
                        .take()
                        .expect("children precede parents in reverse order");
                    let r_child = u.shape()[0];
                    let out: usize = u.shape()[1..].iter().product();
                    // Flatten to (out x r_child): transpose of the carry's
                    // row-major (r_child x out) layout.
                    let m =
                        DMatrix::from_row_slice(r_child, out, u.data()).transpose();
                    acc = acc.multiply_mode(parent_axes + j + 1, &m)?;
                    block_modes.extend_from_slice(self.tree.modes(child));
                    block_dims.extend(&u.shape()[1..]);
                }
                // Reinterpret flattened child blocks as per-mode axes.
                let mut shape: Vec<usize> = Vec::new();
                if parent_axes == 1 {
                    shape.push(acc.shape()[0]);
                }
                shape.extend(&block_dims);
                let acc = FullTensor::new(shape, acc.data().to_vec(), false)?;
                // Child mode sets can interleave; restore sorted mode order.
                let modes = self.tree.modes(id);
                let mut perm: Vec<usize> = Vec::with_capacity(acc.ndim());
                if parent_axes == 1 {
                    perm.push(0);
                }
                for &m in modes {
                    let pos = block_modes.iter().position(|&b| b == m).unwrap();
                    perm.push(parent_axes + pos);
                }
                acc.permute_axes(&perm)?
            };
            carried[id.index()] = Some(t);
        }
        let root = carried[self.tree.root().index()]
            .take()
            .expect("root carry");
        Ok(root)
    }

    /// Reconstructs the full coefficient tensor.
    pub fn to_full_tensor(&self) -> Result<FullTensor> {
        let dims = self.leaf_dims();
        let total: u128 = dims.iter().map(|&n| n as u128).product();
        if total > tensor::DENSE_GUARD as u128 {
            return Err(Error::TooLarge {
                entries: total,
                guard: tensor::DENSE_GUARD,
            });
        }
        let mats: Vec<DMatrix<f64>> =
            dims.iter().map(|&n| DMatrix::identity(n, n)).collect();
        Ok(self
            .contract_leafwise(&mats)?
            .with_orthonormal(self.coeff_orthonormal))
    }

    /// Numerical ranks of the reconstructed tensor's matricizations, per
    /// non-root node in canonical order.
    pub fn measured_ranks(&self) -> Result<Vec<usize>> {
        let full = self.to_full_tensor()?;
        let mut out = Vec::new();
        for id in self.tree.non_root_ids() {
            let sigma = full.matricize(self.tree.modes(id))?.singular_values()?;
            out.push(tensor::numerical_rank(&sigma));
        }
        Ok(out)
    }

    fn bases(&self) -> Result<&[UnivariateBasis]> {
        self.leaf_bases.as_deref().ok_or_else(|| {
            Error::InvalidArgument(
                "network carries no leaf bases, only coefficient-space operations apply".into(),
            )
        })
    }

    /// Pointwise evaluation through the leaf bases.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let bases = self.bases()?;
        if x.len() != self.d() {
            return Err(Error::ShapeMismatch(format!(
                "point has {} coordinates, network has {} modes",
                x.len(),
                self.d()
            )));
        }
        let mats: Vec<DMatrix<f64>> = bases
            .iter()
            .zip(x)
            .map(|(b, &xi)| b.eval_matrix(&[xi]))
            .collect();
        Ok(self.contract_leafwise(&mats)?.data()[0])
    }

    /// Values over the row-major product grid of per-mode points.
    pub fn eval_on_grid(&self, pts: &[Vec<f64>]) -> Result<Vec<f64>> {
        let bases = self.bases()?;
        if pts.len() != self.d() {
            return Err(Error::ShapeMismatch(format!(
                "{} point lists for d = {}",
                pts.len(),
                self.d()
            )));
        }
        let mats: Vec<DMatrix<f64>> = bases
            .iter()
            .zip(pts)
            .map(|(b, p)| b.eval_matrix(p))
            .collect();
        Ok(self.contract_leafwise(&mats)?.data().to_vec())
    }

    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        for (i, c) in self.components.iter().enumerate() {
            let name = format!("node_{i:03}.bin");
            std::fs::write(
                dir.join(&name),
                tensor::encode_tensor_bytes(c.shape(), c.data()),
            )?;
            files.push(name);
        }
        let manifest = json!({
            "format": "ttn-dir@1",
            "tree": self.tree.to_json_value(),
            "ranks": self.ranks.as_slice(),
            "coeff_orthonormal": self.coeff_orthonormal,
            "leaf_bases": self.leaf_bases,
            "components": files,
        });
        std::fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)?,
        )?;
        Ok(())
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let manifest: Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
        if manifest["format"] != "ttn-dir@1" {
            return Err(Error::InvalidArgument(format!(
                "unknown manifest format {}",
                manifest["format"]
            )));
        }
        let tree = DimensionTree::from_json_value(&manifest["tree"])?;
        let coeff_orthonormal = manifest["coeff_orthonormal"].as_bool().ok_or_else(|| {
            Error::InvalidArgument("manifest lacks coeff_orthonormal".into())
        })?;
        let leaf_bases: Option<Vec<UnivariateBasis>> =
            serde_json::from_value(manifest["leaf_bases"].clone())?;
        let files = manifest["components"].as_array().ok_or_else(|| {
            Error::InvalidArgument("manifest lacks component list".into())
        })?;
        let mut components = Vec::with_capacity(files.len());
        for f in files {
            let name = f.as_str().ok_or_else(|| {
                Error::InvalidArgument("component entries must be file names".into())
            })?;
            let bytes = std::fs::read(dir.join(name))?;
            let (shape, data) = tensor::decode_tensor_bytes(&bytes)?;
            components.push(FullTensor::new(shape, data, false)?);
        }
        let net = TreeTensorNetwork::new(tree, components, leaf_bases, coeff_orthonormal)?;
        let stored: Vec<usize> = serde_json::from_value(manifest["ranks"].clone())?;
        if stored != net.ranks.as_slice() {
            return Err(Error::ShapeMismatch(
                "manifest ranks disagree with component shapes".into(),
            ));
        }
        Ok(net)
    }
}

impl Evaluable for TreeTensorNetwork {
    fn domain(&self) -> Vec<(f64, f64)> {
        self.leaf_bases
            .as_deref()
            .map(|bs| bs.iter().map(|b| b.interval()).collect())
            .unwrap_or_default()
    }

    fn eval_point(&self, x: &[f64]) -> f64 {
        self.evaluate(x).expect("validated network with leaf bases")
    }

    fn grid_hint(&self) -> Option<Vec<usize>> {
        Some(self.leaf_dims())
    }

    fn eval_grid(&self, pts: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.eval_on_grid(pts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::BasisKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn balanced(d: usize) -> DimensionTree {
        DimensionTree::balanced_binary(d).unwrap()
    }

    #[test]
    fn complexity_matches_hand_counts() {
        let tree = balanced(4);
        let ranks = RankAssignment::uniform(&tree, 2).unwrap();
        assert_eq!(complexity(&tree, &ranks, &[8, 8, 8, 8]), 84);

        let trivial = DimensionTree::trivial(3).unwrap();
        let ranks = RankAssignment::uniform(&trivial, 2).unwrap();
        assert_eq!(complexity(&trivial, &ranks, &[4, 4, 4]), 32);
    }

    #[test]
    fn random_network_reconstructs_with_consistent_shapes() {
        let tree = balanced(4);
        let ranks = RankAssignment::uniform(&tree, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = TreeTensorNetwork::random(&tree, &ranks, &[3, 4, 2, 5], &mut rng).unwrap();
        assert_eq!(net.complexity(), net.components.iter().map(|c| c.len() as u128).sum());
        let full = net.to_full_tensor().unwrap();
        assert_eq!(full.shape(), &[3, 4, 2, 5]);
        // Reconstruction ranks cannot exceed the stored ones.
        for (id, &measured) in tree.non_root_ids().zip(net.measured_ranks().unwrap().iter()) {
            assert!(measured <= net.ranks().get(id));
        }
    }

    #[test]
    fn reconstruction_matches_hand_contraction() {
        // Linear tree on 3 modes: root children {1,2} and {3}; {1,2} splits
        // into leaves. Contract by explicit summation as the oracle.
        let tree = DimensionTree::linear_binary(3).unwrap();
        let ranks = RankAssignment::uniform(&tree, 2).unwrap();
        let dims = [3, 4, 2];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let net = TreeTensorNetwork::random(&tree, &ranks, &dims, &mut rng).unwrap();
        let root = net.component(tree.root());
        let inter = net.component(tree.find(&[1, 2]).unwrap());
        let l1 = net.component(tree.leaf_for_mode(1).unwrap());
        let l2 = net.component(tree.leaf_for_mode(2).unwrap());
        let l3 = net.component(tree.leaf_for_mode(3).unwrap());
        let full = net.to_full_tensor().unwrap();
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..dims[2] {
                    let mut want = 0.0;
                    for a in 0..2 {
                        for c in 0..2 {
                            let mut mid = 0.0;
                            for b1 in 0..2 {
                                for b2 in 0..2 {
                                    mid += inter.get(&[a, b1, b2])
                                        * l1.get(&[b1, i])
                                        * l2.get(&[b2, j]);
                                }
                            }
                            want += root.get(&[a, c]) * mid * l3.get(&[c, k]);
                        }
                    }
                    let got = full.get(&[i, j, k]);
                    assert!(
                        (got - want).abs() < 1e-12,
                        "mismatch at ({i},{j},{k}): {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn contraction_is_linear_in_each_component() {
        let tree = DimensionTree::linear_binary(3).unwrap();
        let ranks = RankAssignment::uniform(&tree, 2).unwrap();
        let dims = [3, 3, 3];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = TreeTensorNetwork::random(&tree, &ranks, &dims, &mut rng).unwrap();
        for id in tree.node_ids() {
            let shape = net.component(id).shape().to_vec();
            let bump = FullTensor::random_normal(shape, &mut rng).unwrap();
            let base = net.to_full_tensor().unwrap();
            let bumped = net
                .with_component(id, {
                    let mut c = net.component(id).clone();
                    for (slot, b) in c.data_mut().iter_mut().zip(bump.data()) {
                        *slot += b;
                    }
                    c
                })
                .unwrap()
                .to_full_tensor()
                .unwrap();
            let alone = net
                .with_component(id, bump)
                .unwrap()
                .to_full_tensor()
                .unwrap();
            for ((s, b), a) in base.data().iter().zip(bumped.data()).zip(alone.data()) {
                assert!(
                    (s + a - b).abs() <= 1e-12 * (s.abs() + a.abs() + b.abs()).max(1.0),
                    "component substitution is not linear at {}",
                    tree.label(id)
                );
            }
        }
    }

    #[test]
    fn evaluation_matches_interpolant_of_reconstruction() {
        let tree = balanced(3);
        let ranks = RankAssignment::uniform(&tree, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let plain = TreeTensorNetwork::random(&tree, &ranks, &[4, 4, 4], &mut rng).unwrap();
        let bases: Vec<UnivariateBasis> = (0..3)
            .map(|_| UnivariateBasis::new(BasisKind::PiecewiseLinear, 4, (0.0, 1.0)).unwrap())
            .collect();
        let net = TreeTensorNetwork::new(
            tree.clone(),
            (0..tree.node_count()).map(|i| plain.components[i].clone()).collect(),
            Some(bases.clone()),
            false,
        )
        .unwrap();
        let full = net.to_full_tensor().unwrap();
        let interp = crate::discretize::Interpolant::new(&full, &bases).unwrap();
        for &x in &[[0.1, 0.5, 0.9], [0.0, 1.0, 0.33], [0.25, 0.25, 0.25]] {
            let a = net.evaluate(&x).unwrap();
            let b = interp.eval_point(&x);
            assert!((a - b).abs() < 1e-12, "{a} vs {b} at {x:?}");
        }
        let pts = vec![vec![0.05, 0.5], vec![0.3], vec![0.7, 0.9, 1.0]];
        let grid = net.eval_on_grid(&pts).unwrap();
        assert_eq!(grid.len(), 6);
        assert!((grid[0] - net.evaluate(&[0.05, 0.3, 0.7]).unwrap()).abs() < 1e-12);
        assert!((grid[5] - net.evaluate(&[0.5, 0.3, 1.0]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn save_load_round_trip() {
        let tree = balanced(4);
        let ranks = RankAssignment::uniform(&tree, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = TreeTensorNetwork::random(&tree, &ranks, &[5, 4, 3, 6], &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        net.save_dir(dir.path()).unwrap();
        let back = TreeTensorNetwork::load_dir(dir.path()).unwrap();
        assert_eq!(back.ranks().as_slice(), net.ranks().as_slice());
        assert_eq!(back.leaf_dims(), net.leaf_dims());
        let a = net.to_full_tensor().unwrap();
        let b = back.to_full_tensor().unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn rank_warnings_flag_unrepresentable_ranks() {
        let tree = DimensionTree::trivial(3).unwrap();
        let ranks = RankAssignment::uniform(&tree, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = TreeTensorNetwork::random(&tree, &ranks, &[2, 8, 8], &mut rng).unwrap();
        let warnings = net.rank_warnings();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("node 1"), "{warnings:?}");

        let capped = ranks.capped_to_dims(&tree, &[2, 8, 8]).unwrap();
        let leaf1 = tree.leaf_for_mode(1).unwrap();
        assert_eq!(capped.get(leaf1), 2);
    }
}
