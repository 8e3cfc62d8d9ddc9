//! Space-time error norms.
//!
//! With `e^{n,theta} = th1 e^{n+1} + th0 e^n`:
//!
//! ```text
//! ||e||_M^2 = max_n ||e^n||^2 + dt sum_{n<N} (||e^{n,theta}||^2 + ||d_x e^{n,theta}||^2 + ||d_y e^{n,theta}||^2)
//! ||e||_N^2 = dt sum_{n<N} ||e^{n,theta}||^2
//! ```
//!
//! Spatial integrals use the degree-5 rule on every element; the reference
//! field is evaluated pointwise with closed-form gradients and the computed
//! field through its P1 interpolant.

use crate::error::{Error, Result};
use crate::fem::{rule5, sample_local};
use crate::mesh::Mesh;
use crate::model::ExactSolution;
use crate::par::{map_indexed, Exec};
use crate::solver::{FieldState, C, P, U1, U2};

/// A scalar reference field with its gradient.
pub trait ExactField: Sync {
    fn value(&self, x: f64, y: f64, t: f64) -> f64;
    fn grad(&self, x: f64, y: f64, t: f64) -> [f64; 2];
}

/// The zero field, for comparing two discrete solutions.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroField;

impl ExactField for ZeroField {
    fn value(&self, _: f64, _: f64, _: f64) -> f64 {
        0.0
    }
    fn grad(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
        [0.0; 2]
    }
}

/// Reference field built from a pair of closures `(value, gradient)`.
pub struct FnField<V, G>(pub V, pub G);

impl<V, G> ExactField for FnField<V, G>
where
    V: Fn(f64, f64, f64) -> f64 + Sync,
    G: Fn(f64, f64, f64) -> [f64; 2] + Sync,
{
    fn value(&self, x: f64, y: f64, t: f64) -> f64 {
        (self.0)(x, y, t)
    }
    fn grad(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        (self.1)(x, y, t)
    }
}

/// One manufactured field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manufactured {
    U1,
    U2,
    P,
    C,
}

impl ExactField for Manufactured {
    fn value(&self, x: f64, y: f64, t: f64) -> f64 {
        let v = ExactSolution.values(x, y, t);
        match self {
            Manufactured::U1 => v.u1,
            Manufactured::U2 => v.u2,
            Manufactured::P => v.p,
            Manufactured::C => v.c,
        }
    }
    fn grad(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let ex = ExactSolution;
        match self {
            Manufactured::U1 => ex.velocity_grad(x, y, t)[0],
            Manufactured::U2 => ex.velocity_grad(x, y, t)[1],
            Manufactured::P => ex.pressure_grad(x, y, t),
            Manufactured::C => ex.concentration_grad(x, y, t),
        }
    }
}

/// One scalar component: computed nodal values per time level and the
/// reference they are compared with.
pub struct Component<'a> {
    pub computed: Vec<&'a [f64]>,
    pub exact: &'a dyn ExactField,
}

/// Error samples `(value, d_x, d_y)` at every element quadrature point.
fn error_samples(
    mesh: &Mesh,
    nodal: &[f64],
    exact: &dyn ExactField,
    t: f64,
    exec: Exec,
) -> Vec<[f64; 3]> {
    let per_element = map_indexed(exec, mesh.num_elements(), |e| {
        let el = mesh.elements()[e];
        let geom = mesh.geometry(e);
        let v = el.map(|k| nodal[k]);
        rule5()
            .points
            .iter()
            .map(|&q| {
                let s = sample_local(&geom.grads, v, q);
                let [x, y] = mesh.map_point(e, q);
                let g = exact.grad(x, y, t);
                [
                    exact.value(x, y, t) - s.value,
                    g[0] - s.grad[0],
                    g[1] - s.grad[1],
                ]
            })
            .collect::<Vec<_>>()
    });
    per_element.into_iter().flatten().collect()
}

fn weights(mesh: &Mesh) -> Vec<f64> {
    (0..mesh.num_elements())
        .flat_map(|e| {
            rule5()
                .scaled(mesh.geometry(e).area)
                .map(|(_, w)| w)
                .collect::<Vec<_>>()
        })
        .collect()
}

fn check(mesh: &Mesh, comps: &[Component<'_>], dt: f64, theta: f64) -> Result<usize> {
    let Some(first) = comps.first() else {
        return Err(Error::invalid("no components to measure"));
    };
    let levels = first.computed.len();
    if levels < 2 {
        return Err(Error::invalid("need at least two time levels"));
    }
    if comps.iter().any(|c| c.computed.len() != levels) {
        return Err(Error::invalid(
            "components cover different numbers of time levels",
        ));
    }
    if comps
        .iter()
        .flat_map(|c| &c.computed)
        .any(|v| v.len() != mesh.num_nodes())
    {
        return Err(Error::invalid(
            "nodal vector length does not match the mesh",
        ));
    }
    if !(dt > 0.0) || !(0.0..=1.0).contains(&theta) {
        return Err(Error::invalid("dt must be positive and theta in [0, 1]"));
    }
    Ok(levels)
}

/// Squared norms `(max_n ||e^n||^2, dt sum ||e^theta||^2, dt sum ||grad e^theta||^2)`.
fn accumulate(
    mesh: &Mesh,
    comps: &[Component<'_>],
    dt: f64,
    theta: f64,
    exec: Exec,
) -> Result<[f64; 3]> {
    let levels = check(mesh, comps, dt, theta)?;
    let (th1, th0) = (0.5 * (1.0 + theta), 0.5 * (1.0 - theta));
    let w = weights(mesh);
    let mut max_l2 = 0.0f64;
    let mut sum_l2 = 0.0;
    let mut sum_h1 = 0.0;
    let mut prev: Option<Vec<Vec<[f64; 3]>>> = None;
    for n in 0..levels {
        let t = n as f64 * dt;
        let cur: Vec<Vec<[f64; 3]>> = comps
            .iter()
            .map(|c| error_samples(mesh, c.computed[n], c.exact, t, exec))
            .collect();
        let l2: f64 = cur
            .iter()
            .map(|s| s.iter().zip(&w).map(|(e, w)| w * e[0] * e[0]).sum::<f64>())
            .sum();
        max_l2 = max_l2.max(l2);
        if let Some(p) = &prev {
            for (a, b) in p.iter().zip(&cur) {
                for ((ea, eb), wq) in a.iter().zip(b).zip(&w) {
                    let m: [f64; 3] = std::array::from_fn(|k| th1 * eb[k] + th0 * ea[k]);
                    sum_l2 += wq * m[0] * m[0];
                    sum_h1 += wq * (m[1] * m[1] + m[2] * m[2]);
                }
            }
        }
        prev = Some(cur);
    }
    Ok([max_l2, dt * sum_l2, dt * sum_h1])
}

/// `||e||_M` summed over components.
pub fn m_norm_error(
    mesh: &Mesh,
    comps: &[Component<'_>],
    dt: f64,
    theta: f64,
    exec: Exec,
) -> Result<f64> {
    let [a, b, c] = accumulate(mesh, comps, dt, theta, exec)?;
    Ok((a + b + c).sqrt())
}

/// `||e||_N` summed over components.
pub fn n_norm_error(
    mesh: &Mesh,
    comps: &[Component<'_>],
    dt: f64,
    theta: f64,
    exec: Exec,
) -> Result<f64> {
    let [_, b, _] = accumulate(mesh, comps, dt, theta, exec)?;
    Ok(b.sqrt())
}

/// Velocity and concentration in the M-norm, pressure in the N-norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub e_u: f64,
    pub e_c: f64,
    pub e_p: f64,
    pub total: f64,
}

impl ErrorReport {
    pub fn new(e_u: f64, e_c: f64, e_p: f64) -> Self {
        ErrorReport {
            e_u,
            e_c,
            e_p,
            total: (e_u * e_u + e_c * e_c + e_p * e_p).sqrt(),
        }
    }
}

fn check_times(states: &[FieldState], dt: f64) -> Result<()> {
    for (n, s) in states.iter().enumerate() {
        if (s.t - n as f64 * dt).abs() > 1e-9 * (1.0 + s.t.abs()) {
            return Err(Error::invalid(format!(
                "state {n} has t={} but dt={dt}",
                s.t
            )));
        }
    }
    Ok(())
}

/// Errors of a computed run against the manufactured solution.
pub fn compute_errors(
    mesh: &Mesh,
    states: &[FieldState],
    dt: f64,
    theta: f64,
    exec: Exec,
) -> Result<ErrorReport> {
    check_times(states, dt)?;
    let comp = |f: usize, exact: &'static Manufactured| Component {
        computed: states.iter().map(|s| s.field(f)).collect(),
        exact,
    };
    let e_u = m_norm_error(
        mesh,
        &[comp(U1, &Manufactured::U1), comp(U2, &Manufactured::U2)],
        dt,
        theta,
        exec,
    )?;
    let e_c = m_norm_error(mesh, &[comp(C, &Manufactured::C)], dt, theta, exec)?;
    let e_p = n_norm_error(mesh, &[comp(P, &Manufactured::P)], dt, theta, exec)?;
    Ok(ErrorReport::new(e_u, e_c, e_p))
}

/// Errors of `coarse` against `reference` on the same mesh; the reference
/// series must already be sampled at the coarse time levels.
pub fn compare_discrete(
    mesh: &Mesh,
    coarse: &[FieldState],
    reference: &[FieldState],
    dt: f64,
    theta: f64,
    exec: Exec,
) -> Result<ErrorReport> {
    if coarse.len() != reference.len() {
        return Err(Error::invalid(
            "coarse and reference series differ in length",
        ));
    }
    let diffs: Vec<FieldState> = coarse
        .iter()
        .zip(reference)
        .map(|(a, b)| {
            let mut d = a.clone();
            for f in [U1, U2, P, C] {
                for (x, y) in d.field_mut(f).iter_mut().zip(b.field(f)) {
                    *x -= y;
                }
            }
            d
        })
        .collect();
    check_times(&diffs, dt)?;
    let comp = |f: usize| Component {
        computed: diffs.iter().map(|s| s.field(f)).collect(),
        exact: &ZeroField,
    };
    let e_u = m_norm_error(mesh, &[comp(U1), comp(U2)], dt, theta, exec)?;
    let e_c = m_norm_error(mesh, &[comp(C)], dt, theta, exec)?;
    let e_p = n_norm_error(mesh, &[comp(P)], dt, theta, exec)?;
    Ok(ErrorReport::new(e_u, e_c, e_p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_in_x_constant_in_time() {
        let mesh = Mesh::unit_square(4).unwrap();
        let zero = vec![0.0; mesh.num_nodes()];
        let fx = FnField(
            |x: f64, _: f64, _: f64| x,
            |_: f64, _: f64, _: f64| [1.0, 0.0],
        );
        let comps = [Component {
            computed: vec![&zero[..]; 11],
            exact: &fx,
        }];
        let m = m_norm_error(&mesh, &comps, 0.1, 1.0, Exec::Sequential).unwrap();
        assert!((m * m - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_two() {
        let mesh = Mesh::unit_square(3).unwrap();
        let zero = vec![0.0; mesh.num_nodes()];
        let two = FnField(
            |_: f64, _: f64, _: f64| 2.0,
            |_: f64, _: f64, _: f64| [0.0, 0.0],
        );
        for theta in [0.0, 1.0] {
            let comps = [Component {
                computed: vec![&zero[..]; 5],
                exact: &two,
            }];
            let n = n_norm_error(&mesh, &comps, 0.25, theta, Exec::Sequential).unwrap();
            assert!((n - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_interpolant_of_linear_field_has_zero_error() {
        let mesh = Mesh::unit_square(5).unwrap();
        let lin: Vec<f64> = mesh
            .nodes()
            .iter()
            .map(|p| 3.0 * p[0] - p[1] + 1.0)
            .collect();
        let f = FnField(
            |x: f64, y: f64, _: f64| 3.0 * x - y + 1.0,
            |_: f64, _: f64, _: f64| [3.0, -1.0],
        );
        let comps = [Component {
            computed: vec![&lin[..]; 3],
            exact: &f,
        }];
        assert!(m_norm_error(&mesh, &comps, 0.5, 1.0, Exec::Sequential).unwrap() < 1e-12);
    }

    #[test]
    fn mismatched_levels_rejected() {
        let mesh = Mesh::unit_square(2).unwrap();
        let z = vec![0.0; mesh.num_nodes()];
        let comps = [
            Component {
                computed: vec![&z[..]; 3],
                exact: &ZeroField,
            },
            Component {
                computed: vec![&z[..]; 4],
                exact: &ZeroField,
            },
        ];
        assert!(m_norm_error(&mesh, &comps, 0.5, 1.0, Exec::Sequential).is_err());
        let short = [Component {
            computed: vec![&z[..]; 1],
            exact: &ZeroField,
        }];
        assert!(n_norm_error(&mesh, &short, 0.5, 1.0, Exec::Sequential).is_err());
    }

    #[test]
    fn report_total_is_root_sum_square() {
        let r = ErrorReport::new(8.61e-3, 3.43e-3, 1.58e-1);
        // printed table total, three significant digits
        assert!((r.total - 1.58e-1).abs() < 5e-4);
        assert!(
            (r.total.powi(2) - (8.61e-3f64.powi(2) + 3.43e-3f64.powi(2) + 1.58e-1f64.powi(2)))
                .abs()
                < 1e-12
        );
    }
}
