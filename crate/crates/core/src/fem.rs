//! P1 kernels: quadrature on triangles and field sampling.

use std::sync::LazyLock;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Quadrature on the reference triangle in barycentric form.
///
/// Weights are reference-area weights (they sum to 1/2); multiply by
/// `2 * area` to integrate over a physical element.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(barycentric point, physical weight)` pairs for an element of `area`.
    pub fn scaled(&self, area: f64) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(&p, &w)| (p, 2.0 * area * w))
    }
}

static EDGE_MIDPOINT: LazyLock<QuadratureRule> = LazyLock::new(|| QuadratureRule {
    degree: 2,
    points: vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
    weights: vec![1.0 / 6.0; 3],
});

// Seven-point degree-5 rule (Radon).
static SEVEN_POINT: LazyLock<QuadratureRule> = LazyLock::new(|| {
    let s = 15f64.sqrt();
    let a1 = (6.0 - s) / 21.0;
    let b1 = (9.0 + 2.0 * s) / 21.0;
    let a2 = (6.0 + s) / 21.0;
    let b2 = (9.0 - 2.0 * s) / 21.0;
    let w0 = 9.0 / 80.0;
    let w1 = (155.0 - s) / 2400.0;
    let w2 = (155.0 + s) / 2400.0;
    QuadratureRule {
        degree: 5,
        points: vec![
            [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            [a1, a1, b1],
            [a1, b1, a1],
            [b1, a1, a1],
            [a2, a2, b2],
            [a2, b2, a2],
            [b2, a2, a2],
        ],
        weights: vec![w0, w1, w1, w1, w2, w2, w2],
    }
});

/// The 3-point edge-midpoint rule (degree 2) or the 7-point rule (degree 5).
pub fn quadrature_rule(degree: usize) -> Result<&'static QuadratureRule> {
    match degree {
        2 => Ok(&EDGE_MIDPOINT),
        5 => Ok(&SEVEN_POINT),
        d => Err(Error::invalid(format!(
            "unsupported quadrature degree {d} (expected 2 or 5)"
        ))),
    }
}

pub(crate) fn rule2() -> &'static QuadratureRule {
    &EDGE_MIDPOINT
}

pub(crate) fn rule5() -> &'static QuadratureRule {
    &SEVEN_POINT
}

pub const BARYCENTER: [f64; 3] = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];

/// Value and physical gradient of a nodal field at one point of an element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementFieldSample {
    pub value: f64,
    pub grad: [f64; 2],
}

/// Samples a P1 nodal field in `element` at barycentric point `bary`.
pub fn sample_field(
    mesh: &Mesh,
    element: usize,
    nodal_values: &[f64],
    bary: [f64; 3],
) -> Result<ElementFieldSample> {
    if nodal_values.len() != mesh.num_nodes() {
        return Err(Error::invalid(format!(
            "nodal field has {} values, mesh has {} nodes",
            nodal_values.len(),
            mesh.num_nodes()
        )));
    }
    let geom = mesh.element_geometry(element)?;
    let nodes = mesh.elements()[element];
    Ok(sample_local(
        &geom.grads,
        nodes.map(|k| nodal_values[k]),
        bary,
    ))
}

#[inline]
pub(crate) fn sample_local(
    grads: &[[f64; 2]; 3],
    v: [f64; 3],
    bary: [f64; 3],
) -> ElementFieldSample {
    ElementFieldSample {
        value: bary[0] * v[0] + bary[1] * v[1] + bary[2] * v[2],
        grad: grad_local(grads, v),
    }
}

#[inline]
pub(crate) fn grad_local(grads: &[[f64; 2]; 3], v: [f64; 3]) -> [f64; 2] {
    [
        grads[0][0] * v[0] + grads[1][0] * v[1] + grads[2][0] * v[2],
        grads[0][1] * v[0] + grads[1][1] * v[1] + grads[2][1] * v[2],
    ]
}
