//! Structured triangulations of the unit square.
//!
//! Nodes sit on an `(n+1) x (n+1)` lattice numbered row by row
//! (`k = j*(n+1) + i`), and every lattice cell is cut along its
//! lower-left to upper-right diagonal into two counterclockwise triangles.

use crate::error::{Error, Result};

const BOUNDARY_EPS: f64 = 1e-14;

/// Area and the (constant) physical gradients of the three P1 basis functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

impl ElementGeometry {
    fn from_vertices(p: [[f64; 2]; 3]) -> Self {
        let [a, b, c] = p;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let inv = 1.0 / det;
        // grad(lambda_i) = rot90(opposite edge) / (2 area)
        let grads = [
            [(b[1] - c[1]) * inv, (c[0] - b[0]) * inv],
            [(c[1] - a[1]) * inv, (a[0] - c[0]) * inv],
            [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv],
        ];
        ElementGeometry {
            area: 0.5 * det,
            grads,
        }
    }

    /// Signed area of an arbitrary vertex triple (positive when counterclockwise).
    pub fn signed_area(p: [[f64; 2]; 3]) -> f64 {
        let [a, b, c] = p;
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Geometry of an arbitrary counterclockwise triangle.
    pub fn of_triangle(p: [[f64; 2]; 3]) -> Result<Self> {
        if !(Self::signed_area(p) > 0.0) {
            return Err(Error::invalid("triangle must have positive signed area"));
        }
        Ok(Self::from_vertices(p))
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    subdivisions: usize,
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    on_boundary: Vec<bool>,
    boundary_nodes: Vec<usize>,
    geometry: Vec<ElementGeometry>,
    h: f64,
}

/// Builds the `n x n` structured mesh of the unit square.
pub fn build_unit_square_mesh(n: usize) -> Result<Mesh> {
    Mesh::unit_square(n)
}

impl Mesh {
    pub fn unit_square(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid(
                "mesh needs at least one subdivision per side",
            ));
        }
        let stride = n + 1;
        let step = 1.0 / n as f64;
        let mut nodes = Vec::with_capacity(stride * stride);
        for j in 0..=n {
            for i in 0..=n {
                // exact endpoints so boundary tagging is not at the mercy of i*step
                let x = if i == n { 1.0 } else { i as f64 * step };
                let y = if j == n { 1.0 } else { j as f64 * step };
                nodes.push([x, y]);
            }
        }
        let mut elements = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let a = j * stride + i;
                let b = a + 1;
                let c = a + stride + 1;
                let d = a + stride;
                elements.push([a, b, c]);
                elements.push([a, c, d]);
            }
        }
        let on_boundary: Vec<bool> = nodes
            .iter()
            .map(|&[x, y]| {
                x.abs() <= BOUNDARY_EPS
                    || (x - 1.0).abs() <= BOUNDARY_EPS
                    || y.abs() <= BOUNDARY_EPS
                    || (y - 1.0).abs() <= BOUNDARY_EPS
            })
            .collect();
        let boundary_nodes = (0..nodes.len()).filter(|&k| on_boundary[k]).collect();
        let geometry: Vec<ElementGeometry> = elements
            .iter()
            .map(|el| ElementGeometry::from_vertices(el.map(|k| nodes[k])))
            .collect();
        let h = elements
            .iter()
            .map(|el| {
                let p = el.map(|k| nodes[k]);
                (0..3)
                    .map(|e| {
                        let (u, v) = (p[e], p[(e + 1) % 3]);
                        ((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2)).sqrt()
                    })
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        Ok(Mesh {
            subdivisions: n,
            nodes,
            elements,
            on_boundary,
            boundary_nodes,
            geometry,
            h,
        })
    }

    /// Subdivisions per side (`1/h` up to the diagonal factor).
    pub fn subdivisions(&self) -> usize {
        self.subdivisions
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.on_boundary[node]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Maximum element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn vertices(&self, e: usize) -> [[f64; 2]; 3] {
        self.elements[e].map(|k| self.nodes[k])
    }

    /// Area and basis gradients of element `e`.
    pub fn element_geometry(&self, e: usize) -> Result<ElementGeometry> {
        self.geometry.get(e).copied().ok_or_else(|| {
            Error::invalid(format!(
                "element index {e} out of range ({} elements)",
                self.elements.len()
            ))
        })
    }

    pub(crate) fn geometry(&self, e: usize) -> &ElementGeometry {
        &self.geometry[e]
    }

    /// Physical point of barycentric coordinates `bary` in element `e`.
    pub fn map_point(&self, e: usize, bary: [f64; 3]) -> [f64; 2] {
        let p = self.vertices(e);
        [
            bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
            bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
        ]
    }

    /// Integral of a P1 nodal field over the domain.
    pub fn integrate_nodal(&self, values: &[f64]) -> f64 {
        self.elements
            .iter()
            .zip(&self.geometry)
            .map(|(el, g)| g.area * (values[el[0]] + values[el[1]] + values[el[2]]) / 3.0)
            .sum()
    }

    /// Total area; 1 up to rounding for the unit square.
    pub fn area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn smallest_mesh() {
        let m = Mesh::unit_square(1).unwrap();
        assert_eq!(m.num_nodes(), 4);
        assert_eq!(m.num_elements(), 2);
        assert_eq!(m.boundary_nodes().len(), 4);
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert!(matches!(
            Mesh::unit_square(0),
            Err(Error::InvalidArgument(_))
        ));
    }

    fn brute_force_counts(n: usize) -> (usize, usize, usize) {
        let mut nodes = 0;
        let mut boundary = 0;
        for j in 0..=n {
            for i in 0..=n {
                nodes += 1;
                if i == 0 || j == 0 || i == n || j == n {
                    boundary += 1;
                }
            }
        }
        let mut cells = 0;
        for _ in 0..n {
            for _ in 0..n {
                cells += 2;
            }
        }
        (nodes, cells, boundary)
    }

    #[test]
    fn counts_match_enumeration() {
        for n in [1, 2, 3, 10, 80] {
            let m = Mesh::unit_square(n).unwrap();
            let (nodes, els, bnd) = brute_force_counts(n);
            assert_eq!(m.num_nodes(), nodes);
            assert_eq!(m.num_elements(), els);
            assert_eq!(m.boundary_nodes().len(), bnd);
            assert_eq!(bnd, 4 * n);
        }
        let m = Mesh::unit_square(10).unwrap();
        assert_eq!((m.num_nodes(), m.num_elements()), (121, 200));
        assert_relative_eq!(m.h(), 2f64.sqrt() / 10.0, max_relative = 1e-14);
        let m = Mesh::unit_square(80).unwrap();
        assert_eq!((m.num_nodes(), m.num_elements()), (6561, 12800));
    }

    #[test]
    fn tiling_orientation_and_boundary() {
        for n in [1, 4, 17] {
            let m = Mesh::unit_square(n).unwrap();
            assert!((m.area() - 1.0).abs() <= 1e-12);
            for e in 0..m.num_elements() {
                assert!(ElementGeometry::signed_area(m.vertices(e)) > 0.0);
            }
            for (k, &[x, y]) in m.nodes().iter().enumerate() {
                let expect = x.abs() <= 1e-14
                    || (x - 1.0).abs() <= 1e-14
                    || y.abs() <= 1e-14
                    || (y - 1.0).abs() <= 1e-14;
                assert_eq!(m.is_boundary(k), expect);
            }
        }
    }

    #[test]
    fn interior_nodes_have_six_triangles() {
        let m = Mesh::unit_square(6).unwrap();
        let mut count = vec![0; m.num_nodes()];
        for el in m.elements() {
            for &k in el {
                count[k] += 1;
            }
        }
        for k in 0..m.num_nodes() {
            if !m.is_boundary(k) {
                assert_eq!(count[k], 6);
            }
        }
    }

    #[test]
    fn reference_triangle_geometry() {
        let g = ElementGeometry::of_triangle([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(g.area, 0.5);
        assert_eq!(g.grads, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn gradients_sum_to_zero_and_areas_uniform() {
        let m = Mesh::unit_square(10).unwrap();
        for e in 0..m.num_elements() {
            let g = m.element_geometry(e).unwrap();
            assert_relative_eq!(g.area, 0.005, max_relative = 1e-12);
            let sx: f64 = g.grads.iter().map(|d| d[0]).sum();
            let sy: f64 = g.grads.iter().map(|d| d[1]).sum();
            assert!(sx.abs() < 1e-12 && sy.abs() < 1e-12);
        }
        assert!(m.element_geometry(200).is_err());
    }
}
