//! Reference-square Lagrange elements (Q1, Q2), tensor Gauss quadrature and
//! the bilinear geometry map used by every assembly routine.

use crate::error::{Error, Result};

/// Polynomial degree of the tensor-product Lagrange element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementOrder {
    Q1,
    Q2,
}

impl ElementOrder {
    pub fn from_degree(k: u32) -> Result<Self> {
        match k {
            1 => Ok(Self::Q1),
            2 => Ok(Self::Q2),
            _ => Err(Error::Parameter(format!(
                "element order must be 1 or 2, got {k}"
            ))),
        }
    }

    pub fn degree(self) -> usize {
        match self {
            Self::Q1 => 1,
            Self::Q2 => 2,
        }
    }

    pub fn nodes_per_element(self) -> usize {
        match self {
            Self::Q1 => 4,
            Self::Q2 => 9,
        }
    }

    /// Gauss points per direction: exact for every bilinear form on affine
    /// squares except the convection term with a non-polynomial field.
    pub fn quadrature_points(self) -> usize {
        match self {
            Self::Q1 => 2,
            Self::Q2 => 3,
        }
    }
}

impl std::fmt::Display for ElementOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Q{}", self.degree())
    }
}

/// Local node layout: corners counterclockwise from (-1,-1), then (Q2 only)
/// the bottom, right, top and left edge midpoints and the center.
#[derive(Clone, Debug)]
pub struct ReferenceElement {
    pub order: ElementOrder,
    pub node_count: usize,
    pub local_node_coords: Vec<[f64; 2]>,
    // per local node: 1D Lagrange index along xi and eta
    axis_index: Vec<[usize; 2]>,
}

const Q1_NODES: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
const Q2_NODES: [[f64; 2]; 9] = [
    [-1.0, -1.0],
    [1.0, -1.0],
    [1.0, 1.0],
    [-1.0, 1.0],
    [0.0, -1.0],
    [1.0, 0.0],
    [0.0, 1.0],
    [-1.0, 0.0],
    [0.0, 0.0],
];

impl ReferenceElement {
    pub fn new(order: ElementOrder) -> Self {
        let coords: Vec<[f64; 2]> = match order {
            ElementOrder::Q1 => Q1_NODES.to_vec(),
            ElementOrder::Q2 => Q2_NODES.to_vec(),
        };
        let to_index = |c: f64| -> usize {
            match order {
                ElementOrder::Q1 => usize::from(c > 0.0),
                ElementOrder::Q2 => (c.round() as i64 + 1) as usize,
            }
        };
        let axis_index = coords
            .iter()
            .map(|c| [to_index(c[0]), to_index(c[1])])
            .collect();
        Self {
            order,
            node_count: coords.len(),
            local_node_coords: coords,
            axis_index,
        }
    }

    fn lagrange_1d(&self, t: f64) -> ([f64; 3], [f64; 3]) {
        match self.order {
            ElementOrder::Q1 => ([0.5 * (1.0 - t), 0.5 * (1.0 + t), 0.0], [-0.5, 0.5, 0.0]),
            ElementOrder::Q2 => (
                [0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)],
                [t - 0.5, -2.0 * t, t + 0.5],
            ),
        }
    }

    pub fn shape_values(&self, point: [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.node_count];
        self.shape_values_into(point, &mut out);
        out
    }

    pub fn shape_values_into(&self, point: [f64; 2], out: &mut [f64]) {
        let (lx, _) = self.lagrange_1d(point[0]);
        let (ly, _) = self.lagrange_1d(point[1]);
        for (o, ix) in out.iter_mut().zip(&self.axis_index) {
            *o = lx[ix[0]] * ly[ix[1]];
        }
    }

    /// Gradients with respect to the reference coordinates.
    pub fn shape_gradients(&self, point: [f64; 2]) -> Vec<[f64; 2]> {
        let (lx, dx) = self.lagrange_1d(point[0]);
        let (ly, dy) = self.lagrange_1d(point[1]);
        self.axis_index
            .iter()
            .map(|ix| [dx[ix[0]] * ly[ix[1]], lx[ix[0]] * dy[ix[1]]])
            .collect()
    }
}

/// Tensor-product Gauss-Legendre rule on [-1,1]².
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn gauss_legendre_1d(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = match n {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (0.6f64).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let s = (6.0f64 / 5.0).sqrt();
            let inner = (3.0 / 7.0 - 2.0 / 7.0 * s).sqrt();
            let outer = (3.0 / 7.0 + 2.0 / 7.0 * s).sqrt();
            let wi = (18.0 + 30f64.sqrt()) / 36.0;
            let wo = (18.0 - 30f64.sqrt()) / 36.0;
            (vec![-outer, -inner, inner, outer], vec![wo, wi, wi, wo])
        }
        _ => {
            return Err(Error::Parameter(format!(
                "Gauss rule with {n} points per direction is not supported (1..=4)"
            )))
        }
    };
    Ok(r)
}

pub fn gauss_rule(n: usize) -> Result<QuadratureRule> {
    let (x, w) = gauss_legendre_1d(n)?;
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            points.push([x[i], x[j]]);
            weights.push(w[i] * w[j]);
        }
    }
    Ok(QuadratureRule { points, weights })
}

/// Shape function values and reference gradients tabulated at the points of
/// a quadrature rule.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub element: ReferenceElement,
    pub rule: QuadratureRule,
    pub values: Vec<Vec<f64>>,
    pub ref_grads: Vec<Vec<[f64; 2]>>,
    // bilinear geometry basis at the same points
    geo_values: Vec<[f64; 4]>,
    geo_grads: Vec<[[f64; 2]; 4]>,
}

impl Tabulation {
    pub fn new(order: ElementOrder) -> Self {
        let rule = gauss_rule(order.quadrature_points()).expect("supported rule");
        Self::with_rule(order, rule)
    }

    pub fn with_rule(order: ElementOrder, rule: QuadratureRule) -> Self {
        let element = ReferenceElement::new(order);
        let geo = ReferenceElement::new(ElementOrder::Q1);
        let values = rule.points.iter().map(|&p| element.shape_values(p)).collect();
        let ref_grads = rule
            .points
            .iter()
            .map(|&p| element.shape_gradients(p))
            .collect();
        let geo_values = rule
            .points
            .iter()
            .map(|&p| {
                let v = geo.shape_values(p);
                [v[0], v[1], v[2], v[3]]
            })
            .collect();
        let geo_grads = rule
            .points
            .iter()
            .map(|&p| {
                let g = geo.shape_gradients(p);
                [g[0], g[1], g[2], g[3]]
            })
            .collect();
        Self {
            element,
            rule,
            values,
            ref_grads,
            geo_values,
            geo_grads,
        }
    }

    /// Physical data at every quadrature point of an element given its four
    /// corner coordinates.
    pub fn map(&self, corners: &[[f64; 2]; 4]) -> Vec<MappedPoint> {
        (0..self.rule.len())
            .map(|q| {
                let mut x = [0.0; 2];
                for (a, c) in corners.iter().enumerate() {
                    x[0] += self.geo_values[q][a] * c[0];
                    x[1] += self.geo_values[q][a] * c[1];
                }
                let jac = jacobian(corners, &self.geo_grads[q]);
                let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                // inverse transpose of the Jacobian
                let inv_t = [
                    [jac[1][1] / det, -jac[1][0] / det],
                    [-jac[0][1] / det, jac[0][0] / det],
                ];
                let grads = self.ref_grads[q]
                    .iter()
                    .map(|g| {
                        [
                            inv_t[0][0] * g[0] + inv_t[0][1] * g[1],
                            inv_t[1][0] * g[0] + inv_t[1][1] * g[1],
                        ]
                    })
                    .collect();
                MappedPoint {
                    x,
                    det,
                    weight: self.rule.weights[q] * det,
                    grads,
                }
            })
            .collect()
    }
}

/// One quadrature point after mapping to a physical element.
#[derive(Clone, Debug)]
pub struct MappedPoint {
    pub x: [f64; 2],
    pub det: f64,
    /// quadrature weight times |J|
    pub weight: f64,
    /// physical gradients of the element shape functions
    pub grads: Vec<[f64; 2]>,
}

/// J[r][c] = d x_r / d xi_c for the bilinear corner map.
fn jacobian(corners: &[[f64; 2]; 4], geo_grads: &[[f64; 2]; 4]) -> [[f64; 2]; 2] {
    let mut j = [[0.0; 2]; 2];
    for (a, c) in corners.iter().enumerate() {
        for r in 0..2 {
            for col in 0..2 {
                j[r][col] += c[r] * geo_grads[a][col];
            }
        }
    }
    j
}

/// Jacobian determinant of the bilinear corner map at a reference point.
pub fn jacobian_det(corners: &[[f64; 2]; 4], point: [f64; 2]) -> f64 {
    let geo = ReferenceElement::new(ElementOrder::Q1);
    let g = geo.shape_gradients(point);
    let j = jacobian(corners, &[g[0], g[1], g[2], g[3]]);
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

/// Inverts the bilinear corner map by Newton iteration.
pub fn inverse_map(corners: &[[f64; 2]; 4], x: [f64; 2]) -> Option<[f64; 2]> {
    let geo = ReferenceElement::new(ElementOrder::Q1);
    let mut xi = [0.0, 0.0];
    for _ in 0..30 {
        let v = geo.shape_values(xi);
        let g = geo.shape_gradients(xi);
        let mut f = [-x[0], -x[1]];
        for a in 0..4 {
            f[0] += v[a] * corners[a][0];
            f[1] += v[a] * corners[a][1];
        }
        let j = jacobian(corners, &[g[0], g[1], g[2], g[3]]);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        let dx = [
            (j[1][1] * f[0] - j[0][1] * f[1]) / det,
            (-j[1][0] * f[0] + j[0][0] * f[1]) / det,
        ];
        xi[0] -= dx[0];
        xi[1] -= dx[1];
        if dx[0].abs() + dx[1].abs() < 1e-14 {
            break;
        }
    }
    Some(xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn q1_kronecker_and_center() {
        let e = ReferenceElement::new(ElementOrder::Q1);
        for (j, &p) in e.local_node_coords.iter().enumerate() {
            let v = e.shape_values(p);
            for (i, vi) in v.iter().enumerate() {
                assert_eq!(*vi, if i == j { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(e.shape_values([0.0, 0.0]), vec![0.25; 4]);
    }

    #[test]
    fn q2_kronecker_and_partition_of_unity() {
        let e = ReferenceElement::new(ElementOrder::Q2);
        for (j, &p) in e.local_node_coords.iter().enumerate() {
            let v = e.shape_values(p);
            for (i, vi) in v.iter().enumerate() {
                assert!((vi - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
        let s: f64 = e.shape_values([0.3, -0.7]).iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn q1_gradients() {
        let e = ReferenceElement::new(ElementOrder::Q1);
        let g = e.shape_gradients([0.0, 0.0]);
        assert_eq!(g[0], [-0.25, -0.25]);
        let g = e.shape_gradients([0.37, -0.81]);
        let sx: f64 = g.iter().map(|v| v[0]).sum();
        let sy: f64 = g.iter().map(|v| v[1]).sum();
        assert!(sx.abs() < 1e-15 && sy.abs() < 1e-15);
    }

    #[test]
    fn q2_gradients_match_central_differences() {
        let e = ReferenceElement::new(ElementOrder::Q2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let step = 1e-4;
        for _ in 0..10 {
            let p = [rng.random_range(-0.99..0.99), rng.random_range(-0.99..0.99)];
            let g = e.shape_gradients(p);
            let xp = e.shape_values([p[0] + step, p[1]]);
            let xm = e.shape_values([p[0] - step, p[1]]);
            let yp = e.shape_values([p[0], p[1] + step]);
            let ym = e.shape_values([p[0], p[1] - step]);
            for i in 0..9 {
                let fdx = (xp[i] - xm[i]) / (2.0 * step);
                let fdy = (yp[i] - ym[i]) / (2.0 * step);
                assert!((fdx - g[i][0]).abs() < 1e-6);
                assert!((fdy - g[i][1]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn gauss_rules_integrate_monomials() {
        let integrate = |rule: &QuadratureRule, f: &dyn Fn(f64, f64) -> f64| -> f64 {
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(|(p, w)| w * f(p[0], p[1]))
                .sum()
        };
        let r2 = gauss_rule(2).unwrap();
        assert!(integrate(&r2, &|x, _| x.powi(3)).abs() < 1e-15);
        assert!((integrate(&r2, &|x, y| x * x * y * y) - 4.0 / 9.0).abs() < 1e-15);
        let r3 = gauss_rule(3).unwrap();
        assert!((integrate(&r3, &|x, y| x.powi(4) * y.powi(4)) - 4.0 / 25.0).abs() < 1e-14);
        assert!((r3.weights.iter().sum::<f64>() - 4.0).abs() < 1e-14);
        assert!(gauss_rule(5).is_err());
        assert!(gauss_rule(0).is_err());
    }

    #[test]
    fn gauss_exactness_degree() {
        // exact for x^a y^b with a, b <= 2n-1
        for n in 1..=4 {
            let rule = gauss_rule(n).unwrap();
            for a in 0..=(2 * n - 1) {
                for b in 0..=(2 * n - 1) {
                    let exact_1d = |k: usize| if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                    let exact = exact_1d(a) * exact_1d(b);
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    assert!((q - exact).abs() < 1e-13, "n={n} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn interpolation_reproduces_tensor_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for order in [ElementOrder::Q1, ElementOrder::Q2] {
            let e = ReferenceElement::new(order);
            let k = order.degree() as i32;
            let coef: Vec<f64> = (0..((k + 1) * (k + 1))).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = |x: f64, y: f64| -> f64 {
                let mut s = 0.0;
                for a in 0..=k {
                    for b in 0..=k {
                        s += coef[(a * (k + 1) + b) as usize] * x.powi(a) * y.powi(b);
                    }
                }
                s
            };
            let nodal: Vec<f64> = e.local_node_coords.iter().map(|p| f(p[0], p[1])).collect();
            for _ in 0..20 {
                let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                let v = e.shape_values(p);
                let interp: f64 = v.iter().zip(&nodal).map(|(a, b)| a * b).sum();
                let exact = f(p[0], p[1]);
                assert!((interp - exact).abs() <= 1e-12 * exact.abs().max(1.0));
            }
        }
    }

    #[test]
    fn inverse_map_roundtrip() {
        let corners = [[0.0, 0.0], [1.2, 0.1], [1.0, 0.9], [-0.1, 1.1]];
        let xi = [0.3, -0.4];
        let geo = ReferenceElement::new(ElementOrder::Q1);
        let v = geo.shape_values(xi);
        let x = [
            (0..4).map(|a| v[a] * corners[a][0]).sum::<f64>(),
            (0..4).map(|a| v[a] * corners[a][1]).sum::<f64>(),
        ];
        let back = inverse_map(&corners, x).unwrap();
        assert!((back[0] - xi[0]).abs() < 1e-12 && (back[1] - xi[1]).abs() < 1e-12);
    }
}
