//! Node vectors on the line or a circle, and the proximity-graph cluster
//! partition of a node configuration.

use crate::error::{Error, Result};
use crate::partitions::SetPartition;

/// The process domain: the real line or a circle of given circumference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Line,
    Circle { circumference: f64 },
}

impl Domain {
    /// Distance between two points; on the circle the wrap-around distance.
    pub fn distance(&self, a: f64, b: f64) -> f64 {
        match self {
            Domain::Line => (a - b).abs(),
            Domain::Circle { circumference } => {
                let d = (a - b).abs() % circumference;
                d.min(circumference - d)
            }
        }
    }

    pub fn reduce(&self, x: f64) -> f64 {
        match self {
            Domain::Line => x,
            Domain::Circle { circumference } => x.rem_euclid(*circumference),
        }
    }
}

/// An ordered vector of abscissas together with its domain. Indices keep the
/// caller's order; no canonical sort is imposed.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeVector {
    nodes: Vec<f64>,
    domain: Domain,
}

impl NodeVector {
    pub fn new(nodes: Vec<f64>, domain: Domain) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Contract("empty node vector".into()));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::Contract("non-finite node".into()));
        }
        if let Domain::Circle { circumference } = domain {
            if !(circumference > 0.0) {
                return Err(Error::Contract("non-positive circumference".into()));
            }
        }
        let nodes = nodes.iter().map(|&x| domain.reduce(x)).collect();
        Ok(Self { nodes, domain })
    }

    pub fn line(nodes: Vec<f64>) -> Result<Self> {
        Self::new(nodes, Domain::Line)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.domain.distance(self.nodes[i], self.nodes[j])
    }

    /// Largest pairwise distance.
    pub fn span(&self) -> f64 {
        let mut s: f64 = 0.0;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                s = s.max(self.distance(i, j));
            }
        }
        s
    }

    /// Restriction to the given indices (ascending), keeping the domain.
    pub fn subset(&self, indices: &[usize]) -> Result<NodeVector> {
        let picked: Vec<f64> = indices.iter().map(|&i| self.nodes[i]).collect();
        NodeVector::new(picked, self.domain)
    }
}

/// A node configuration grouped by connected components of the eta-proximity
/// graph, together with the radius that produced it.
#[derive(Debug, Clone)]
pub struct ClusterPartition {
    pub partition: SetPartition,
    pub eta: f64,
}

/// Partition of the node indices by connected components of the graph that
/// joins nodes at distance <= eta.
///
/// Fundamental distance property: same-block nodes are at distance at most
/// `|A| * eta`, cross-block nodes at distance greater than `eta`.
pub fn cluster_partition(nodes: &NodeVector, eta: f64) -> Result<ClusterPartition> {
    if eta < 0.0 {
        return Err(Error::Contract("negative eta".into()));
    }
    let n = nodes.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..n {
        for j in i + 1..n {
            if nodes.distance(i, j) <= eta {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut blocks: std::collections::HashMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        blocks.entry(root).or_default().push(i);
    }
    let partition = SetPartition::new(blocks.into_values().collect(), n)?;
    Ok(ClusterPartition { partition, eta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_eta_gives_singletons() {
        let nv = NodeVector::line(vec![0.0, 1.0, 2.5]).unwrap();
        let cp = cluster_partition(&nv, 0.0).unwrap();
        assert_eq!(cp.partition, SetPartition::singletons(3));
    }

    #[test]
    fn one_proximity_edge() {
        let nv = NodeVector::line(vec![0.0, 0.1, 5.0]).unwrap();
        let cp = cluster_partition(&nv, 0.2).unwrap();
        assert_eq!(
            cp.partition,
            SetPartition::new(vec![vec![0, 1], vec![2]], 3).unwrap()
        );
    }

    #[test]
    fn chain_connectivity_merges() {
        let eta = 0.3;
        let nv = NodeVector::line(vec![0.0, eta, 2.0 * eta]).unwrap();
        let cp = cluster_partition(&nv, eta).unwrap();
        assert_eq!(cp.partition, SetPartition::one_block(3));
    }

    #[test]
    fn circle_wraparound_distance() {
        let nv = NodeVector::new(vec![0.05, 6.2], Domain::Circle { circumference: 6.3 })
            .unwrap();
        assert!((nv.distance(0, 1) - 0.15).abs() < 1e-12);
        let cp = cluster_partition(&nv, 0.2).unwrap();
        assert_eq!(cp.partition, SetPartition::one_block(2));
    }

    #[test]
    fn distance_property_on_random_sets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(2..6);
            let eta = rng.gen_range(0.05..0.5);
            let nodes: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let nv = NodeVector::line(nodes).unwrap();
            let cp = cluster_partition(&nv, eta).unwrap();
            let cell = cp.partition.block_of();
            for i in 0..n {
                for j in i + 1..n {
                    let d = nv.distance(i, j);
                    if cell[i] == cell[j] {
                        assert!(d <= n as f64 * eta + 1e-12);
                    } else {
                        assert!(d > eta);
                    }
                }
            }
        }
    }
}
