//! Blocked QR of tall-skinny matrices.
//!
//! The input is split into contiguous row blocks, each block is factored
//! independently, and the stacked R factors are reduced either pairwise
//! through a tree or along sequential chains until a single r x r upper
//! triangular factor remains. Q is never materialized; products with Q and
//! Q^T replay the reduction.
//!
//! The reduction topology is a pure function of (n, r, b, scheme), so the
//! result is bit-identical for any worker count.

mod householder;

pub use householder::{householder_qr, BlockQr};

use crate::error::{dim_mismatch, invalid, Error, Result};
use crate::matrix::DenseMatrix;
use crate::parallel::Workers;

/// Tall matrix: rows >= cols >= 1.
#[derive(Debug, Clone)]
pub struct TallMatrix(DenseMatrix);

impl TallMatrix {
    pub fn new(m: DenseMatrix) -> Result<Self> {
        if m.cols() == 0 || m.rows() < m.cols() {
            return Err(invalid(format!(
                "tall matrix requires rows >= cols >= 1, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(Self(m))
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn cols(&self) -> usize {
        self.0.cols()
    }

    pub fn as_dense(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_dense(self) -> DenseMatrix {
        self.0
    }
}

/// Reduction scheme for the stacked R factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Pairwise reduction tree; ceil(log2 b) merge levels.
    Tree,
    /// `chains` independent chains, each folding its blocks one at a time,
    /// followed by one small merge of the per-chain R factors.
    Sequential { chains: usize },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Tree => "tree",
            Scheme::Sequential { .. } => "seq",
        }
    }
}

enum MergeNode {
    /// Consumes two stacked R factors.
    Merge(BlockQr),
    /// Odd factor passes through to the next level unchanged.
    Pass,
}

struct ChainFactors {
    /// QR of the chain's first block.
    first: BlockQr,
    /// QR of [R_prev; K_next] for each later block, in order.
    steps: Vec<BlockQr>,
    /// Global block indices covered by this chain.
    first_block: usize,
    len: usize,
}

enum Plan {
    Tree {
        leaves: Vec<BlockQr>,
        levels: Vec<Vec<MergeNode>>,
    },
    Sequential {
        chains: Vec<ChainFactors>,
        merge: Option<BlockQr>,
    },
}

/// Implicit Q (reduction tree of small factors) plus the final triangular R.
pub struct TsqrFactors {
    n: usize,
    r: usize,
    scheme: Scheme,
    block_ranges: Vec<(usize, usize)>,
    plan: Plan,
    final_r: DenseMatrix,
}

/// Contiguous partition of [0, n) into b ranges with sizes as equal as possible.
fn partition_rows(n: usize, b: usize) -> Vec<(usize, usize)> {
    let base = n / b;
    let extra = n % b;
    let mut ranges = Vec::with_capacity(b);
    let mut start = 0;
    for i in 0..b {
        let len = base + usize::from(i < extra);
        ranges.push((start, start + len));
        start += len;
    }
    ranges
}

/// Blocked QR factorization of a tall matrix.
pub fn tsqr_factor(
    a: &TallMatrix,
    num_blocks: usize,
    scheme: Scheme,
    workers: &Workers,
) -> Result<TsqrFactors> {
    let n = a.rows();
    let r = a.cols();
    if num_blocks == 0 {
        return Err(invalid("block count must be at least 1"));
    }
    if num_blocks * r > n {
        return Err(invalid(format!(
            "block count {num_blocks} too large: each block needs at least {r} rows of {n}"
        )));
    }
    if let Scheme::Sequential { chains } = scheme {
        if chains == 0 || chains > num_blocks {
            return Err(invalid(format!(
                "chain count must satisfy 1 <= chains <= blocks, got {chains} of {num_blocks}"
            )));
        }
    }

    let block_ranges = partition_rows(n, num_blocks);

    match scheme {
        Scheme::Tree => {
            let leaves: Vec<BlockQr> = workers.map_indexed(num_blocks, |i| {
                let (s, e) = block_ranges[i];
                householder_qr(&a.as_dense().row_slice(s, e))
                    .expect("block shape validated")
            });
            let mut rs: Vec<DenseMatrix> =
                leaves.iter().map(|qr| qr.r_factor().clone()).collect();
            let mut levels = Vec::new();
            while rs.len() > 1 {
                let pairs = rs.len() / 2;
                let merged: Vec<BlockQr> = workers.map_indexed(pairs, |i| {
                    let stacked = DenseMatrix::vstack(&rs[2 * i], &rs[2 * i + 1])
                        .expect("equal column counts");
                    householder_qr(&stacked).expect("2r x r stack is tall")
                });
                let mut nodes = Vec::with_capacity(pairs + rs.len() % 2);
                let mut next = Vec::with_capacity(pairs + rs.len() % 2);
                for qr in merged {
                    next.push(qr.r_factor().clone());
                    nodes.push(MergeNode::Merge(qr));
                }
                if rs.len() % 2 == 1 {
                    next.push(rs[rs.len() - 1].clone());
                    nodes.push(MergeNode::Pass);
                }
                levels.push(nodes);
                rs = next;
            }
            let final_r = rs.pop().expect("at least one block");
            Ok(TsqrFactors {
                n,
                r,
                scheme,
                block_ranges,
                plan: Plan::Tree { leaves, levels },
                final_r,
            })
        }
        Scheme::Sequential { chains } => {
            let chain_split = partition_rows(num_blocks, chains);
            let chain_factors: Vec<ChainFactors> = workers.map_indexed(chains, |c| {
                let (b0, b1) = chain_split[c];
                let (s, e) = block_ranges[b0];
                let first = householder_qr(&a.as_dense().row_slice(s, e))
                    .expect("block shape validated");
                let mut r_cur = first.r_factor().clone();
                let mut steps = Vec::with_capacity(b1 - b0 - 1);
                for bi in b0 + 1..b1 {
                    let (s, e) = block_ranges[bi];
                    let stacked =
                        DenseMatrix::vstack(&r_cur, &a.as_dense().row_slice(s, e))
                            .expect("equal column counts");
                    let step = householder_qr(&stacked).expect("stack is tall");
                    r_cur = step.r_factor().clone();
                    steps.push(step);
                }
                ChainFactors {
                    first,
                    steps,
                    first_block: b0,
                    len: b1 - b0,
                }
            });
            let (merge, final_r) = if chains == 1 {
                let only = &chain_factors[0];
                let r_last = only
                    .steps
                    .last()
                    .map(|s| s.r_factor().clone())
                    .unwrap_or_else(|| only.first.r_factor().clone());
                (None, r_last)
            } else {
                let mut stacked = chain_last_r(&chain_factors[0]);
                for chain in &chain_factors[1..] {
                    stacked = DenseMatrix::vstack(&stacked, &chain_last_r(chain))?;
                }
                let merge = householder_qr(&stacked)?;
                let final_r = merge.r_factor().clone();
                (Some(merge), final_r)
            };
            Ok(TsqrFactors {
                n,
                r,
                scheme,
                block_ranges,
                plan: Plan::Sequential {
                    chains: chain_factors,
                    merge,
                },
                final_r,
            })
        }
    }
}

fn chain_last_r(chain: &ChainFactors) -> DenseMatrix {
    chain
        .steps
        .last()
        .map(|s| s.r_factor().clone())
        .unwrap_or_else(|| chain.first.r_factor().clone())
}

impl TsqrFactors {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn num_blocks(&self) -> usize {
        self.block_ranges.len()
    }

    /// Final r x r upper triangular factor with nonnegative diagonal.
    pub fn final_r(&self) -> &DenseMatrix {
        &self.final_r
    }

    /// Q^T X, replaying the reduction (X is n x m, result r x m).
    pub fn apply_qt(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.rows() != self.n {
            return Err(dim_mismatch(
                format!("{} rows", self.n),
                format!("{} rows", x.rows()),
            ));
        }
        match &self.plan {
            Plan::Tree { leaves, levels } => {
                let mut partials: Vec<DenseMatrix> = Vec::with_capacity(leaves.len());
                for (leaf, &(s, e)) in leaves.iter().zip(&self.block_ranges) {
                    partials.push(leaf.apply_qt(&x.row_slice(s, e))?);
                }
                for level in levels {
                    let mut next = Vec::with_capacity(level.len());
                    let mut input = partials.into_iter();
                    for node in level {
                        match node {
                            MergeNode::Merge(qr) => {
                                let top = input.next().expect("tree shape");
                                let bottom = input.next().expect("tree shape");
                                let stacked = DenseMatrix::vstack(&top, &bottom)?;
                                next.push(qr.apply_qt(&stacked)?);
                            }
                            MergeNode::Pass => {
                                next.push(input.next().expect("tree shape"));
                            }
                        }
                    }
                    partials = next;
                }
                Ok(partials.pop().expect("reduced to one factor"))
            }
            Plan::Sequential { chains, merge } => {
                let mut partials = Vec::with_capacity(chains.len());
                for chain in chains {
                    let (s0, e0) = self.block_ranges[chain.first_block];
                    let mut w = chain.first.apply_qt(&x.row_slice(s0, e0))?;
                    for (k, step) in chain.steps.iter().enumerate() {
                        let (s, e) = self.block_ranges[chain.first_block + 1 + k];
                        let stacked = DenseMatrix::vstack(&w, &x.row_slice(s, e))?;
                        w = step.apply_qt(&stacked)?;
                    }
                    partials.push(w);
                }
                match merge {
                    Some(qr) => {
                        let mut stacked = partials[0].clone();
                        for p in &partials[1..] {
                            stacked = DenseMatrix::vstack(&stacked, p)?;
                        }
                        qr.apply_qt(&stacked)
                    }
                    None => Ok(partials.pop().expect("single chain")),
                }
            }
        }
    }

    /// Q Y, replaying the reduction in reverse (Y is r x m, result n x m).
    pub fn apply_q(&self, y: &DenseMatrix) -> Result<DenseMatrix> {
        if y.rows() != self.r {
            return Err(dim_mismatch(
                format!("{} rows", self.r),
                format!("{} rows", y.rows()),
            ));
        }
        match &self.plan {
            Plan::Tree { leaves, levels } => {
                let mut current = vec![y.clone()];
                for level in levels.iter().rev() {
                    let mut expanded = Vec::with_capacity(current.len() * 2);
                    let mut input = current.into_iter();
                    for node in level {
                        match node {
                            MergeNode::Merge(qr) => {
                                let z = qr.apply_q(&input.next().expect("tree shape"))?;
                                expanded.push(z.row_slice(0, self.r));
                                expanded.push(z.row_slice(self.r, 2 * self.r));
                            }
                            MergeNode::Pass => {
                                expanded.push(input.next().expect("tree shape"));
                            }
                        }
                    }
                    current = expanded;
                }
                debug_assert_eq!(current.len(), leaves.len());
                let mut out = DenseMatrix::zeros(self.n, y.cols());
                for ((leaf, &(s, _)), part) in
                    leaves.iter().zip(&self.block_ranges).zip(&current)
                {
                    let block = leaf.apply_q(part)?;
                    for (offset, i) in (s..s + block.rows()).enumerate() {
                        out.row_mut(i).copy_from_slice(block.row(offset));
                    }
                }
                Ok(out)
            }
            Plan::Sequential { chains, merge } => {
                let chunks: Vec<DenseMatrix> = match merge {
                    Some(qr) => {
                        let z = qr.apply_q(y)?;
                        (0..chains.len())
                            .map(|c| z.row_slice(c * self.r, (c + 1) * self.r))
                            .collect()
                    }
                    None => vec![y.clone()],
                };
                let mut out = DenseMatrix::zeros(self.n, y.cols());
                for (chain, chunk) in chains.iter().zip(chunks) {
                    let mut w = chunk;
                    // Unwind the chain from its last fold back to the first block.
                    let mut tails: Vec<(usize, DenseMatrix)> =
                        Vec::with_capacity(chain.len - 1);
                    for (k, step) in chain.steps.iter().enumerate().rev() {
                        let block_idx = chain.first_block + 1 + k;
                        let z = step.apply_q(&w)?;
                        w = z.row_slice(0, self.r);
                        tails.push((block_idx, z.row_slice(self.r, z.rows())));
                    }
                    let first_block = chain.first.apply_q(&w)?;
                    let (s, _) = self.block_ranges[chain.first_block];
                    for (offset, i) in (s..s + first_block.rows()).enumerate() {
                        out.row_mut(i).copy_from_slice(first_block.row(offset));
                    }
                    for (block_idx, tail) in tails {
                        let (s, _) = self.block_ranges[block_idx];
                        for (offset, i) in (s..s + tail.rows()).enumerate() {
                            out.row_mut(i).copy_from_slice(tail.row(offset));
                        }
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Relative tolerance defining a numerically singular triangular diagonal.
pub const SINGULAR_DIAG_RTOL: f64 = 1e-12;

fn check_diagonal(r: &DenseMatrix) -> Result<()> {
    let k = r.rows();
    let max_diag = (0..k).fold(0.0f64, |m, i| m.max(r.get(i, i).abs()));
    let tol = SINGULAR_DIAG_RTOL * max_diag;
    for i in 0..k {
        let d = r.get(i, i).abs();
        if d <= tol {
            return Err(Error::SingularMatrix {
                index: i,
                value: r.get(i, i),
                tolerance: tol,
            });
        }
    }
    Ok(())
}

/// Solves R X = B by backward substitution (R upper triangular, r x r).
pub fn back_substitute(r: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let k = r.rows();
    if r.cols() != k {
        return Err(invalid("triangular factor must be square"));
    }
    if b.rows() != k {
        return Err(dim_mismatch(
            format!("{k} rows"),
            format!("{} rows", b.rows()),
        ));
    }
    check_diagonal(r)?;
    let m = b.cols();
    let mut x = b.clone();
    for i in (0..k).rev() {
        for c in 0..m {
            let mut acc = x.get(i, c);
            for j in i + 1..k {
                acc -= r.get(i, j) * x.get(j, c);
            }
            x.set(i, c, acc / r.get(i, i));
        }
    }
    Ok(x)
}

/// Solves X R = B (right division by an upper triangular R), column by column.
pub fn back_substitute_right(r: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let k = r.rows();
    if r.cols() != k {
        return Err(invalid("triangular factor must be square"));
    }
    if b.cols() != k {
        return Err(dim_mismatch(
            format!("{k} cols"),
            format!("{} cols", b.cols()),
        ));
    }
    check_diagonal(r)?;
    let m = b.rows();
    let mut x = b.clone();
    for j in 0..k {
        for row in 0..m {
            let mut acc = x.get(row, j);
            for l in 0..j {
                acc -= x.get(row, l) * r.get(l, j);
            }
            x.set(row, j, acc / r.get(j, j));
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_tall(n: usize, r: usize, seed: u64) -> TallMatrix {
        let mut gen = crate::rng::seeded(seed);
        TallMatrix::new(DenseMatrix::from_fn(n, r, |_, _| {
            gen.gen::<f64>() * 2.0 - 1.0
        }))
        .unwrap()
    }

    #[test]
    fn single_block_matches_plain_householder_bitwise() {
        let a = random_tall(48, 6, 1);
        let workers = Workers::new(1).unwrap();
        let blocked = tsqr_factor(&a, 1, Scheme::Tree, &workers).unwrap();
        let plain = householder_qr(a.as_dense()).unwrap();
        assert_eq!(blocked.final_r(), plain.r_factor());
    }

    #[test]
    fn tree_matches_dense_oracle() {
        let a = random_tall(256, 16, 2);
        let workers = Workers::new(2).unwrap();
        let dense = householder_qr(a.as_dense()).unwrap();
        let norm = a.as_dense().frobenius_norm();
        let f = tsqr_factor(&a, 8, Scheme::Tree, &workers).unwrap();
        let diff = f.final_r().sub(dense.r_factor()).unwrap().max_abs();
        assert!(diff < 1e-10 * norm, "entrywise diff {diff:e}");
    }

    #[test]
    fn tree_and_sequential_agree() {
        let a = random_tall(256, 16, 3);
        let workers = Workers::new(2).unwrap();
        let tree = tsqr_factor(&a, 8, Scheme::Tree, &workers).unwrap();
        for chains in [1, 2, 3] {
            let seq =
                tsqr_factor(&a, 8, Scheme::Sequential { chains }, &workers).unwrap();
            let diff = tree.final_r().sub(seq.final_r()).unwrap().max_abs();
            assert!(
                diff < 1e-10 * a.as_dense().frobenius_norm(),
                "chains={chains}: diff {diff:e}"
            );
        }
    }

    #[test]
    fn odd_block_counts_pass_through() {
        let a = random_tall(210, 8, 4);
        let workers = Workers::new(2).unwrap();
        let dense = householder_qr(a.as_dense()).unwrap();
        for b in [3, 5, 7] {
            let f = tsqr_factor(&a, b, Scheme::Tree, &workers).unwrap();
            let diff = f.final_r().sub(dense.r_factor()).unwrap().max_abs();
            assert!(diff < 1e-10 * a.as_dense().frobenius_norm(), "b={b}: {diff:e}");
        }
    }

    #[test]
    fn apply_qt_of_input_is_final_r() {
        let a = random_tall(128, 8, 5);
        let workers = Workers::new(2).unwrap();
        for scheme in [Scheme::Tree, Scheme::Sequential { chains: 2 }] {
            let f = tsqr_factor(&a, 4, scheme, &workers).unwrap();
            let r = f.apply_qt(a.as_dense()).unwrap();
            let diff = r.sub(f.final_r()).unwrap().max_abs();
            assert!(diff < 1e-10 * a.as_dense().frobenius_norm(), "{scheme:?}");
        }
    }

    #[test]
    fn apply_q_of_final_r_reconstructs_input() {
        let a = random_tall(200, 10, 6);
        let workers = Workers::new(2).unwrap();
        for scheme in [Scheme::Tree, Scheme::Sequential { chains: 3 }] {
            let f = tsqr_factor(&a, 5, scheme, &workers).unwrap();
            let rebuilt = f.apply_q(f.final_r()).unwrap();
            let err = rebuilt.sub(a.as_dense()).unwrap().frobenius_norm();
            assert!(err < 1e-10 * a.as_dense().frobenius_norm(), "{scheme:?}: {err:e}");
        }
    }

    #[test]
    fn materialized_q_is_orthonormal() {
        let a = random_tall(512, 12, 7);
        let workers = Workers::new(2).unwrap();
        let f = tsqr_factor(&a, 8, Scheme::Tree, &workers).unwrap();
        let q = f.apply_q(&DenseMatrix::identity(12)).unwrap();
        let gram = q.transpose_matmul(&q).unwrap();
        let err = gram.sub(&DenseMatrix::identity(12)).unwrap().frobenius_norm();
        assert!(err < 1e-10, "orthonormality defect {err:e}");
        // Q^T applied to Q's own first column recovers e_1.
        let first_col = DenseMatrix::from_fn(512, 1, |i, _| q.get(i, 0));
        let e1 = f.apply_qt(&first_col).unwrap();
        assert!((e1.get(0, 0) - 1.0).abs() < 1e-10);
        for i in 1..12 {
            assert!(e1.get(i, 0).abs() < 1e-10);
        }
    }

    #[test]
    fn qt_matches_dense_oracle_exactly_up_to_tolerance() {
        let a = random_tall(128, 8, 8);
        let workers = Workers::new(1).unwrap();
        let x = random_tall(128, 3, 9);
        let f = tsqr_factor(&a, 4, Scheme::Tree, &workers).unwrap();
        let dense = householder_qr(a.as_dense()).unwrap();
        let got = f.apply_qt(x.as_dense()).unwrap();
        let want = dense.apply_qt(x.as_dense()).unwrap();
        let diff = got.sub(&want).unwrap().max_abs();
        assert!(diff < 1e-10, "Q^T X diff {diff:e}");
    }

    #[test]
    fn output_is_bit_identical_across_worker_counts() {
        let a = random_tall(1024, 16, 10);
        let base = tsqr_factor(&a, 16, Scheme::Tree, &Workers::new(1).unwrap()).unwrap();
        for count in [2, 4, 8] {
            let f = tsqr_factor(&a, 16, Scheme::Tree, &Workers::new(count).unwrap()).unwrap();
            assert_eq!(base.final_r(), f.final_r(), "workers={count}");
        }
    }

    #[test]
    fn too_many_blocks_rejected() {
        let a = random_tall(64, 16, 11);
        let workers = Workers::new(1).unwrap();
        assert!(tsqr_factor(&a, 5, Scheme::Tree, &workers).is_err());
        assert!(tsqr_factor(&a, 0, Scheme::Tree, &workers).is_err());
        assert!(
            tsqr_factor(&a, 2, Scheme::Sequential { chains: 3 }, &workers).is_err()
        );
    }

    #[test]
    fn apply_rejects_mismatched_shapes() {
        let a = random_tall(64, 8, 13);
        let workers = Workers::new(1).unwrap();
        let f = tsqr_factor(&a, 4, Scheme::Tree, &workers).unwrap();
        assert!(f.apply_qt(&DenseMatrix::zeros(32, 2)).is_err());
        assert!(f.apply_q(&DenseMatrix::zeros(9, 2)).is_err());
    }

    #[test]
    fn back_substitute_identity_and_hand_case() {
        let b = DenseMatrix::from_vec(2, 1, vec![3.0, 8.0]).unwrap();
        let x = back_substitute(&DenseMatrix::identity(2), &b).unwrap();
        assert_eq!(x, b);
        let r = DenseMatrix::from_vec(2, 2, vec![2.0, 1.0, 0.0, 4.0]).unwrap();
        let x = back_substitute(&r, &b).unwrap();
        assert!((x.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((x.get(1, 0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn back_substitute_residual_on_well_conditioned_system() {
        let k = 16;
        let mut gen = crate::rng::seeded(12);
        let mut r = DenseMatrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let v = gen.gen::<f64>() - 0.5;
                r.set(i, j, if i == j { v.abs() + 1.0 } else { v });
            }
        }
        let b = DenseMatrix::from_fn(k, 4, |_, _| gen.gen::<f64>() - 0.5);
        let x = back_substitute(&r, &b).unwrap();
        let resid = r.matmul(&x).unwrap().sub(&b).unwrap().frobenius_norm();
        assert!(resid < 1e-10 * b.frobenius_norm());
        // Right division against the same oracle.
        let bt = b.transpose();
        let y = back_substitute_right(&r, &bt).unwrap();
        let resid_r = y.matmul(&r).unwrap().sub(&bt).unwrap().frobenius_norm();
        assert!(resid_r < 1e-10 * b.frobenius_norm());
    }

    #[test]
    fn singular_diagonal_reported_with_index() {
        let mut r = DenseMatrix::identity(3);
        r.set(1, 1, 0.0);
        let b = DenseMatrix::zeros(3, 1);
        match back_substitute(&r, &b) {
            Err(Error::SingularMatrix { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected singular error, got {other:?}"),
        }
    }
}
