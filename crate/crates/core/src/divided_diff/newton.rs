//! Divided differences by Newton/Hermite tables, with derivative base cases
//! for repeated or near-coincident nodes, and the Hermite--Genocchi simplex
//! integral as an independent route to the same quantity.

use crate::divided_diff::domain::{Domain, NodeVector};
use crate::error::{Error, Result};
use crate::quad;

/// Relative confluence threshold: nodes closer than this times the domain
/// scale are treated as repeated and routed to derivative formulas.
pub const CONFLUENCE_REL: f64 = 1e-7;

/// A function evaluable together with its derivatives.
pub trait SmoothFn {
    /// `order`-th derivative at `x`; order 0 is the value. `None` when the
    /// derivative is not available.
    fn eval_deriv(&self, order: usize, x: f64) -> Option<f64>;
}

/// Wraps a closure `(order, x) -> Option<value>` as a [`SmoothFn`].
pub struct Differentiable<F: Fn(usize, f64) -> Option<f64>>(pub F);

impl<F: Fn(usize, f64) -> Option<f64>> SmoothFn for Differentiable<F> {
    fn eval_deriv(&self, order: usize, x: f64) -> Option<f64> {
        (self.0)(order, x)
    }
}

/// Dense univariate polynomial, coefficients in ascending degree order.
#[derive(Debug, Clone)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn one() -> Self {
        Self { coeffs: vec![1.0] }
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[f64]) -> Self {
        let mut coeffs = vec![1.0];
        for &r in roots {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= r * c;
            }
            coeffs = next;
        }
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Exact `order`-th derivative at `x`.
    pub fn deriv(&self, order: usize, x: f64) -> f64 {
        let mut acc = 0.0;
        for k in (order..self.coeffs.len()).rev() {
            let mut f = 1.0;
            for j in 0..order {
                f *= (k - j) as f64;
            }
            acc = acc * x + self.coeffs[k] * f;
        }
        acc
    }
}

impl SmoothFn for Polynomial {
    fn eval_deriv(&self, order: usize, x: f64) -> Option<f64> {
        Some(self.deriv(order, x))
    }
}

/// Confluence threshold for a node vector: `CONFLUENCE_REL` times the domain
/// scale (node span on the line, circumference on the circle, floored at 1).
pub(crate) fn confluence_threshold(nodes: &NodeVector) -> f64 {
    let scale = match nodes.domain() {
        Domain::Line => nodes.span().max(1.0),
        Domain::Circle { circumference } => circumference.max(1.0),
    };
    CONFLUENCE_REL * scale
}

/// Hermite divided-difference table over a (possibly repeated) node multiset.
///
/// `z` must be sorted; exact repeats trigger the derivative base case
/// `f[y,..,y] = f^(k)(y)/k!`. Returns `f[z]`.
pub(crate) fn hermite_table(f: &dyn SmoothFn, z: &[f64]) -> Result<f64> {
    let n = z.len();
    let mut col: Vec<f64> = Vec::with_capacity(n);
    for &x in z {
        col.push(f.eval_deriv(0, x).ok_or_else(|| {
            Error::Capability("function value unavailable".into())
        })?);
    }
    let mut fact = 1.0;
    for j in 1..n {
        fact *= j as f64;
        for i in (j..n).rev() {
            let lo = z[i - j];
            let hi = z[i];
            if hi == lo {
                col[i] = f.eval_deriv(j, hi).ok_or_else(|| {
                    Error::Capability(format!("derivative of order {j} unavailable"))
                })? / fact;
            } else {
                col[i] = (col[i] - col[i - 1]) / (hi - lo);
            }
        }
    }
    Ok(col[n - 1])
}

/// Collapses near-coincident nodes to their cluster mean and returns the
/// sorted multiset fed to the Hermite table.
pub(crate) fn confluent_nodes(nodes: &[f64], threshold: f64) -> Vec<f64> {
    let mut sorted = nodes.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = Vec::with_capacity(sorted.len());
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end] - sorted[end - 1] <= threshold {
            end += 1;
        }
        let mean: f64 = sorted[start..end].iter().sum::<f64>() / (end - start) as f64;
        for _ in start..end {
            out.push(mean);
        }
        start = end;
    }
    out
}

/// The divided difference `f[x_A]`.
///
/// Distinct nodes use the Newton table; nodes whose pairwise gaps fall below
/// the confluence threshold are merged and handled through the derivative
/// base case, which requires `f` to expose derivatives up to the largest
/// cluster size minus one.
pub fn divided_difference(f: &dyn SmoothFn, nodes: &NodeVector) -> Result<f64> {
    let z = confluent_nodes(nodes.nodes(), confluence_threshold(nodes));
    hermite_table(f, &z)
}

/// The Hermite--Genocchi simplex integral
/// `int_{C_A} f^(|A|-1)(sum t_a x_a) dm`, evaluated by Duffy-transform
/// tensor Gauss--Legendre quadrature and cross-checked at two orders.
///
/// `f_deriv` is the (|A|-1)-th derivative of the interpolated function.
pub fn hermite_genocchi<F: Fn(f64) -> f64>(
    f_deriv: F,
    nodes: &NodeVector,
    quad_tol: f64,
) -> Result<f64> {
    if nodes.len() > 6 {
        return Err(Error::SizeLimit(format!(
            "hermite_genocchi supports at most 6 nodes, got {}",
            nodes.len()
        )));
    }
    let eval = |order: usize| -> f64 {
        quad::simplex_points(nodes.nodes(), order)
            .into_iter()
            .map(|(x, w)| w * f_deriv(x))
            .sum()
    };
    let coarse = eval(16);
    let fine = eval(24);
    let achieved = (fine - coarse).abs();
    if achieved > quad_tol {
        return Err(Error::Tolerance {
            requested: quad_tol,
            achieved,
            estimate: fine,
        });
    }
    Ok(fine)
}
