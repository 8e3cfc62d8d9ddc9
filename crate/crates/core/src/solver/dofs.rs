//! Numbering of the free unknowns and the global sparsity pattern.

use std::sync::Arc;

use super::linear::SparsityPattern;
use super::FieldState;
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Marker for an unknown eliminated by a Dirichlet condition.
pub(crate) const FIXED: u32 = u32::MAX;

/// Field slots within a node: `u1, u2, p, c`.
pub const U1: usize = 0;
pub const U2: usize = 1;
pub const P: usize = 2;
pub const C: usize = 3;

/// Node-major map from `(node, field)` to free-unknown index.
///
/// Velocity and concentration are eliminated on boundary nodes; pressure is
/// kept everywhere.
#[derive(Debug, Clone)]
pub struct DofMap {
    dofs: Vec<[u32; 4]>,
    n_free: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let mut next = 0u32;
        let dofs = (0..mesh.num_nodes())
            .map(|k| {
                let bnd = mesh.is_boundary(k);
                let mut d = [FIXED; 4];
                for (f, slot) in d.iter_mut().enumerate() {
                    if f == P || !bnd {
                        *slot = next;
                        next += 1;
                    }
                }
                d
            })
            .collect();
        DofMap {
            dofs,
            n_free: next as usize,
        }
    }

    pub fn num_free(&self) -> usize {
        self.n_free
    }

    pub fn dof(&self, node: usize, field: usize) -> Option<usize> {
        let d = self.dofs[node][field];
        (d != FIXED).then_some(d as usize)
    }

    /// Local-to-global table of an element, local index `4 * vertex + field`.
    pub(crate) fn element_dofs(&self, el: [usize; 3]) -> [u32; 12] {
        let mut out = [FIXED; 12];
        for (i, &k) in el.iter().enumerate() {
            out[4 * i..4 * i + 4].copy_from_slice(&self.dofs[k]);
        }
        out
    }

    /// Free-unknown vector of a state (Dirichlet values are dropped).
    pub fn gather(&self, state: &FieldState) -> Vec<f64> {
        let mut x = vec![0.0; self.n_free];
        for (k, d) in self.dofs.iter().enumerate() {
            for f in 0..4 {
                if d[f] != FIXED {
                    x[d[f] as usize] = state.field(f)[k];
                }
            }
        }
        x
    }

    /// State from a free-unknown vector, with exact zeros on Dirichlet slots.
    pub fn scatter(&self, x: &[f64], t: f64) -> Result<FieldState> {
        if x.len() != self.n_free {
            return Err(Error::invalid(format!(
                "solution has {} entries, expected {}",
                x.len(),
                self.n_free
            )));
        }
        let mut s = FieldState::zeros(self.dofs.len(), t);
        for (k, d) in self.dofs.iter().enumerate() {
            for f in 0..4 {
                if d[f] != FIXED {
                    s.field_mut(f)[k] = x[d[f] as usize];
                }
            }
        }
        Ok(s)
    }
}

/// CSC pattern of the coupled operator plus, per element, the storage slot
/// of each local `(row, col)` pair (`FIXED` where either side is eliminated).
pub(crate) fn build_pattern(
    mesh: &Mesh,
    dofs: &DofMap,
) -> Result<(Arc<SparsityPattern>, Vec<[u32; 144]>)> {
    let locals: Vec<[u32; 12]> = mesh
        .elements()
        .iter()
        .map(|&el| dofs.element_dofs(el))
        .collect();
    let mut entries = Vec::with_capacity(locals.len() * 144);
    for l in &locals {
        for &r in l.iter().filter(|&&r| r != FIXED) {
            for &c in l.iter().filter(|&&c| c != FIXED) {
                entries.push((r as usize, c as usize));
            }
        }
    }
    let pattern = SparsityPattern::from_entries(dofs.num_free(), entries)?;
    let scatter = locals
        .iter()
        .map(|l| {
            let mut s = [FIXED; 144];
            for i in 0..12 {
                for j in 0..12 {
                    if l[i] != FIXED && l[j] != FIXED {
                        let pos = pattern
                            .position(l[i] as usize, l[j] as usize)
                            .expect("element pair present in pattern");
                        s[12 * i + j] = pos as u32;
                    }
                }
            }
            s
        })
        .collect();
    Ok((Arc::new(pattern), scatter))
}
