//! Set partitions of `{0, .., p-1}` and the moment/cumulant transforms built on
//! the partition lattice.
//!
//! Partitions are kept in a canonical form (blocks ordered by least element,
//! elements sorted within a block) so they can be hashed and compared.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Hard cap on the ground-set size for enumeration; Bell(10) = 115975.
pub const MAX_GROUND: usize = 10;

/// Maximum order for Stirling numbers of the second kind.
pub const MAX_STIRLING: usize = 12;

/// A partition of the index set `{0, .., ground_size-1}` into disjoint
/// nonempty blocks, stored in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetPartition {
    blocks: Vec<Vec<usize>>,
    ground_size: usize,
}

impl SetPartition {
    /// Builds a partition from blocks, canonicalizing and validating them.
    pub fn new(blocks: Vec<Vec<usize>>, ground_size: usize) -> Result<Self> {
        let mut seen = vec![false; ground_size];
        let mut count = 0;
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::Contract("empty block".into()));
            }
            for &e in block {
                if e >= ground_size {
                    return Err(Error::Contract(format!(
                        "element {e} outside ground set of size {ground_size}"
                    )));
                }
                if seen[e] {
                    return Err(Error::Contract(format!("element {e} appears twice")));
                }
                seen[e] = true;
                count += 1;
            }
        }
        if count != ground_size {
            return Err(Error::Contract("blocks do not cover the ground set".into()));
        }
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        blocks.sort_by_key(|b| b[0]);
        Ok(Self { blocks, ground_size })
    }

    /// The partition of `{0, .., p-1}` into singletons (the lattice minimum).
    pub fn singletons(p: usize) -> Self {
        Self {
            blocks: (0..p).map(|i| vec![i]).collect(),
            ground_size: p,
        }
    }

    /// The one-block partition `{A}` (the lattice maximum).
    pub fn one_block(p: usize) -> Self {
        Self {
            blocks: vec![(0..p).collect()],
            ground_size: p,
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Block index of each ground element.
    pub fn block_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.ground_size];
        for (bi, block) in self.blocks.iter().enumerate() {
            for &e in block {
                out[e] = bi;
            }
        }
        out
    }

    /// True iff every block of `self` is contained in some block of `coarser`.
    pub fn refines(&self, coarser: &SetPartition) -> Result<bool> {
        if self.ground_size != coarser.ground_size {
            return Err(Error::Contract("mismatched ground sets".into()));
        }
        let cell = coarser.block_of();
        Ok(self
            .blocks
            .iter()
            .all(|b| b.iter().all(|&e| cell[e] == cell[b[0]])))
    }

    /// The partition of `subset` induced by `self`, re-indexed canonically:
    /// element `subset[k]` of the ambient set becomes element `k`.
    ///
    /// `subset` must be a nonempty subset of the ground set.
    pub fn induced(&self, subset: &[usize]) -> Result<SetPartition> {
        if subset.is_empty() {
            return Err(Error::Contract("empty subset".into()));
        }
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != subset.len() {
            return Err(Error::Contract("subset has repeated elements".into()));
        }
        if *sorted.last().unwrap() >= self.ground_size {
            return Err(Error::Contract("subset outside ground set".into()));
        }
        let rank: HashMap<usize, usize> =
            sorted.iter().enumerate().map(|(k, &e)| (e, k)).collect();
        let mut blocks = Vec::new();
        for block in &self.blocks {
            let cut: Vec<usize> = block
                .iter()
                .filter_map(|e| rank.get(e).copied())
                .collect();
            if !cut.is_empty() {
                blocks.push(cut);
            }
        }
        SetPartition::new(blocks, sorted.len())
    }
}

/// All partitions of `{0, .., p-1}`, in canonical form.
///
/// Enumerates restricted-growth strings, so exactly Bell(p) partitions come
/// out with no duplicates.
pub fn enumerate_partitions(p: usize) -> Result<Vec<SetPartition>> {
    if p == 0 || p > MAX_GROUND {
        return Err(Error::SizeLimit(format!(
            "enumerate_partitions requires 1 <= p <= {MAX_GROUND}, got {p}"
        )));
    }
    let mut out = Vec::new();
    let mut assignment = vec![0usize; p];
    rgs_recurse(&mut assignment, 1, 1, p, &mut out);
    Ok(out)
}

fn rgs_recurse(
    assignment: &mut Vec<usize>,
    pos: usize,
    max_used: usize,
    p: usize,
    out: &mut Vec<SetPartition>,
) {
    if pos == p {
        let mut blocks = vec![Vec::new(); max_used];
        for (e, &b) in assignment.iter().enumerate() {
            blocks[b].push(e);
        }
        out.push(SetPartition {
            blocks,
            ground_size: p,
        });
        return;
    }
    for b in 0..=max_used {
        assignment[pos] = b;
        rgs_recurse(assignment, pos + 1, max_used.max(b + 1), p, out);
    }
}

/// Stirling number of the second kind: partitions of `p` elements into `k`
/// nonempty blocks. Exact integer arithmetic, `p <= 12`.
pub fn stirling2(p: usize, k: usize) -> Result<u64> {
    if p > MAX_STIRLING || k > p {
        return Err(Error::SizeLimit(format!(
            "stirling2 requires 0 <= k <= p <= {MAX_STIRLING}, got ({p}, {k})"
        )));
    }
    // S(p, k) = k S(p-1, k) + S(p-1, k-1)
    let mut row = vec![0u64; p + 1];
    row[0] = 1;
    for n in 1..=p {
        for j in (1..=n.min(p)).rev() {
            row[j] = (j as u64) * row[j] + row[j - 1];
        }
        row[0] = 0;
    }
    Ok(row[k])
}

/// Bell number, via the Stirling row sum.
pub fn bell(p: usize) -> Result<u64> {
    let mut total = 0u64;
    for k in 0..=p {
        total += stirling2(p, k)?;
    }
    Ok(total)
}

/// Raw moments m_1..m_p of a real random variable.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector(pub Vec<f64>);

impl MomentVector {
    pub fn order(&self) -> usize {
        self.0.len()
    }
}

fn falling_sign_factorial(num_blocks: usize) -> f64 {
    // (-1)^{|I|-1} (|I|-1)!
    let sign = if num_blocks % 2 == 1 { 1.0 } else { -1.0 };
    let mut fact = 1.0;
    for j in 1..num_blocks {
        fact *= j as f64;
    }
    sign * fact
}

/// Cumulants kappa_1..kappa_p from raw moments, by the partition sum
/// kappa_p = sum over partitions of (-1)^{|I|-1}(|I|-1)! prod m_{|I|}.
pub fn cumulants_from_moments(moments: &MomentVector) -> Result<Vec<f64>> {
    let p = moments.order();
    if p == 0 || p > MAX_GROUND {
        return Err(Error::SizeLimit(format!(
            "moment vector length must be in 1..={MAX_GROUND}, got {p}"
        )));
    }
    let mut kappa = Vec::with_capacity(p);
    for order in 1..=p {
        let mut total = 0.0;
        for part in enumerate_partitions(order)? {
            let mut prod = 1.0;
            for block in part.blocks() {
                prod *= moments.0[block.len() - 1];
            }
            total += falling_sign_factorial(part.num_blocks()) * prod;
        }
        kappa.push(total);
    }
    Ok(kappa)
}

/// Raw moments from cumulants: m_p = sum over partitions of prod kappa_{|I|}.
/// Exact inverse of [`cumulants_from_moments`].
pub fn moments_from_cumulants(kappa: &[f64]) -> Result<MomentVector> {
    let p = kappa.len();
    if p == 0 || p > MAX_GROUND {
        return Err(Error::SizeLimit(format!(
            "cumulant vector length must be in 1..={MAX_GROUND}, got {p}"
        )));
    }
    let mut m = Vec::with_capacity(p);
    for order in 1..=p {
        let mut total = 0.0;
        for part in enumerate_partitions(order)? {
            let mut prod = 1.0;
            for block in part.blocks() {
                prod *= kappa[block.len() - 1];
            }
            total += prod;
        }
        m.push(total);
    }
    Ok(MomentVector(m))
}

/// Nonempty subsets of `{0, .., p-1}` as bitmasks, keying joint moment maps.
pub type SubsetMask = u32;

pub fn mask_of(elements: &[usize]) -> SubsetMask {
    elements.iter().fold(0, |m, &e| m | (1 << e))
}

/// Joint cumulant of a family indexed by `{0, .., ground_size-1}` from its
/// joint moments: kappa_A = sum over partitions of
/// (-1)^{|I|-1}(|I|-1)! prod_{I} m_I.
///
/// `joint_moments` must define a value for every nonempty subset of the
/// ground set.
pub fn joint_cumulant(
    ground_size: usize,
    joint_moments: &HashMap<SubsetMask, f64>,
) -> Result<f64> {
    if ground_size == 0 || ground_size > MAX_GROUND {
        return Err(Error::SizeLimit(format!(
            "joint_cumulant requires 1 <= |A| <= {MAX_GROUND}, got {ground_size}"
        )));
    }
    let full: SubsetMask = (1u32 << ground_size) - 1;
    for mask in 1..=full {
        if !joint_moments.contains_key(&mask) {
            return Err(Error::Contract(format!(
                "missing joint moment for subset mask {mask:#b}"
            )));
        }
    }
    let mut total = 0.0;
    for part in enumerate_partitions(ground_size)? {
        let mut prod = 1.0;
        for block in part.blocks() {
            prod *= joint_moments[&mask_of(block)];
        }
        total += falling_sign_factorial(part.num_blocks()) * prod;
    }
    Ok(total)
}
