//! Composite Gauss–Legendre quadrature over piecewise-smooth integrands.

use gauss_quad::legendre::GaussLegendre;
use std::num::NonZeroUsize;

/// A fixed-order Gauss–Legendre rule with nodes on [-1, 1].
#[derive(Debug, Clone)]
pub struct Rule {
    pairs: Vec<(f64, f64)>,
}

impl Rule {
    pub fn new(order: usize) -> Self {
        let order = NonZeroUsize::new(order.max(1)).unwrap();
        let gl = GaussLegendre::new(order);
        Self {
            pairs: gl.as_node_weight_pairs().to_vec(),
        }
    }

    pub fn order(&self) -> usize {
        self.pairs.len()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.pairs.iter().map(move |&(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Integrates over [a, b], splitting at every breakpoint strictly inside.
    pub fn integrate_split<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        breaks: &[f64],
        mut f: F,
    ) -> f64 {
        pieces(a, b, breaks)
            .windows(2)
            .map(|w| self.integrate(w[0], w[1], &mut f))
            .sum()
    }
}

/// Splits [a, b] at the breakpoints that lie strictly inside, returning the ordered edges.
pub fn pieces(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut edges = vec![a];
    let mut inner: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x > a + 1e-15 && x < b - 1e-15)
        .collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    inner.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    edges.extend(inner);
    edges.push(b);
    edges
}

/// Unit-period breakpoints repeated over [a, b] (for integrands with 1-periodic kinks).
pub fn periodic_breaks(unit_breaks: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let first = a.floor() as i64 - 1;
    let last = b.ceil() as i64 + 1;
    for n in first..=last {
        for &c in unit_breaks {
            let x = n as f64 + c;
            if x > a && x < b {
                out.push(x);
            }
        }
    }
    out
}

/// Cumulative integrals `∫_{grid[0]}^{grid[j]} f` for every grid point.
pub fn cumulative<F: FnMut(f64) -> f64>(rule: &Rule, grid: &[f64], breaks: &[f64], mut f: F) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in grid.windows(2) {
        acc += rule.integrate_split(w[0], w[1], breaks, &mut f);
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_exactness() {
        let r = Rule::new(4);
        assert_abs_diff_eq!(r.integrate(0.0, 2.0, |x| x.powi(7)), 32.0, epsilon = 1e-12);
    }

    #[test]
    fn split_handles_kink() {
        let r = Rule::new(8);
        let v = r.integrate_split(-1.0, 1.0, &[0.0], |x: f64| x.abs());
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let r = Rule::new(8);
        let grid: Vec<f64> = (0..=10).map(|j| j as f64 / 10.0).collect();
        let c = cumulative(&r, &grid, &[], |x| x.cos());
        for (x, v) in grid.iter().zip(c) {
            assert_abs_diff_eq!(v, x.sin(), epsilon = 1e-14);
        }
    }

    #[test]
    fn periodic_breaks_repeat() {
        let b = periodic_breaks(&[0.25], 0.0, 2.0);
        assert_eq!(b, vec![0.25, 1.25]);
    }
}
