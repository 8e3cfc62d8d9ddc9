//! Element kernels for the theta-weighted, Picard-linearized coupled system.
//!
//! Local unknowns are ordered `4 * vertex + field` with fields `u1, u2, p, c`.
//! With `W = th1 X + th0 U^n` (`th1 = (1+theta)/2`, `th0 = (1-theta)/2`) the
//! local equations read
//!
//! ```text
//! (Km/dt + th1 Kb) X = F + Km U^n / dt - th0 Kb U^n      (+ subscale terms)
//! ```
//!
//! where `Km` is the consistent mass and `Kb` collects convection, viscous,
//! pressure coupling and transport forms with coefficients frozen at the
//! current iterate. Subscales are sampled at the edge-midpoint points and
//! substituted through their update formula, so only coarse unknowns remain.

use super::dofs::{C, FIXED, P, U1, U2};
use super::{DiffusivityPolicy, ForcingKind, Solver, TauSource};
use crate::error::{Error, Result, Term};
use crate::fem::{grad_local, rule2, rule5, BARYCENTER};
use crate::mesh::ElementGeometry;
use crate::model::{
    diffusion_coeffs, manufactured_forcing, shear_invariant, viscosity_from_invariant,
    PhysicalParams,
};
use crate::par::try_map_indexed;
use crate::stab::{compute_tau, subscale_weights, SubscaleField, SubscaleMode, TauInputs, TauSet};

use super::FieldState;

#[inline]
fn at(i: usize, fi: usize, j: usize, fj: usize) -> usize {
    12 * (4 * i + fi) + 4 * j + fj
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn ensure_finite(v: &[f64], term: Term) -> Result<(), Term> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(term)
    }
}

/// Time-level data of one element, fixed during the Picard loop.
#[derive(Debug, Clone)]
pub(crate) struct ElementStepData {
    /// `(F^theta, N_i)` per local unknown.
    load: [f64; 12],
    /// `F^theta` as `(f1, f2, 0, g)` at the edge-midpoint points.
    force_q: [[f64; 4]; 3],
    force_bary: [f64; 4],
    /// `(int D1, int D2)` over the element.
    diff_int: [f64; 2],
    /// Representative diffusivity entering `tau3`.
    d_m: f64,
}

/// Coefficients frozen at the current iterate.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ElementCoeffs {
    adv_q: [[f64; 2]; 3],
    adv_bary: [f64; 2],
    div_adv: f64,
    /// `int_K eta`.
    eta_int: f64,
    pub(crate) tau: TauSet,
}

pub(crate) struct LocalSystem {
    pub(crate) k: [f64; 144],
    pub(crate) f: [f64; 12],
}

fn theta_weights(theta: f64) -> (f64, f64) {
    (0.5 * (1.0 + theta), 0.5 * (1.0 - theta))
}

fn forcing_at(x: f64, y: f64, t: f64, params: &PhysicalParams) -> [f64; 4] {
    let f = manufactured_forcing(x, y, t, params);
    [f.f1, f.f2, 0.0, f.g]
}

impl Solver<'_> {
    pub(crate) fn prepare_step(&self, t_n: f64) -> Result<Vec<ElementStepData>> {
        let cfg = &self.cfg;
        let params = &self.params;
        let (th1, th0) = theta_weights(cfg.theta);
        let t_next = t_n + cfg.dt;
        let t_theta = t_n + th1 * cfg.dt;
        let forcing = |x: f64, y: f64| -> [f64; 4] {
            match cfg.forcing {
                ForcingKind::Zero => [0.0; 4],
                ForcingKind::Manufactured => {
                    let a = forcing_at(x, y, t_next, params);
                    if th0 == 0.0 {
                        a
                    } else {
                        let b = forcing_at(x, y, t_n, params);
                        std::array::from_fn(|k| th1 * a[k] + th0 * b[k])
                    }
                }
            }
        };
        let mesh = self.mesh;
        try_map_indexed(cfg.exec, mesh.num_elements(), |e| {
            let geom = mesh.geometry(e);
            let mut load = [0.0; 12];
            let mut diff_int = [0.0; 2];
            let (mut d_max, mut d_mean) = (0.0f64, 0.0);
            for (q, w) in rule5().scaled(geom.area) {
                let [x, y] = mesh.map_point(e, q);
                let f = forcing(x, y);
                for i in 0..3 {
                    for fi in [U1, U2, C] {
                        load[4 * i + fi] += w * f[fi] * q[i];
                    }
                }
                let (d1, d2) = diffusion_coeffs(x, y, t_theta, params.diffusion);
                diff_int[0] += w * d1;
                diff_int[1] += w * d2;
                d_max = d_max.max(d1).max(d2);
                d_mean += w * d1.max(d2);
            }
            let force_q = std::array::from_fn(|qi| {
                let [x, y] = mesh.map_point(e, rule2().points[qi]);
                forcing(x, y)
            });
            let [xb, yb] = mesh.map_point(e, BARYCENTER);
            let force_bary = forcing(xb, yb);
            let d_m = match cfg.diffusivity {
                DiffusivityPolicy::Max => d_max,
                DiffusivityPolicy::Mean => d_mean / geom.area,
            };
            let data = ElementStepData {
                load,
                force_q,
                force_bary,
                diff_int,
                d_m,
            };
            let check = || -> Result<(), Term> {
                ensure_finite(&data.load, Term::Load)?;
                ensure_finite(data.force_q.as_flattened(), Term::Load)?;
                ensure_finite(&data.force_bary, Term::Load)?;
                ensure_finite(
                    &[data.diff_int[0], data.diff_int[1], data.d_m],
                    Term::Transport,
                )
            };
            check().map_err(|term| Error::NumericalBreakdown { element: e, term })?;
            Ok(data)
        })
    }

    /// Local values `4 * vertex + field` of a state on element `e`.
    pub(crate) fn local_values(&self, e: usize, s: &FieldState) -> [f64; 12] {
        let el = self.mesh.elements()[e];
        let mut v = [0.0; 12];
        for (i, &k) in el.iter().enumerate() {
            v[4 * i] = s.u1[k];
            v[4 * i + 1] = s.u2[k];
            v[4 * i + 2] = s.p[k];
            v[4 * i + 3] = s.c[k];
        }
        v
    }

    pub(crate) fn element_coeffs(
        &self,
        e: usize,
        data: &ElementStepData,
        un: &[f64; 12],
        it: &[f64; 12],
        taus: TauSource,
    ) -> Result<ElementCoeffs, Term> {
        let cfg = &self.cfg;
        let params = &self.params;
        let geom = self.mesh.geometry(e);
        let (th1, th0) = theta_weights(cfg.theta);
        let w: [f64; 12] = std::array::from_fn(|k| th1 * it[k] + th0 * un[k]);
        let nodal = |f: usize| [w[f], w[4 + f], w[8 + f]];
        let (u1, u2, c) = (nodal(U1), nodal(U2), nodal(C));
        let gu1 = grad_local(&geom.grads, u1);
        let gu2 = grad_local(&geom.grads, u2);
        let interp = |v: [f64; 3], q: [f64; 3]| q[0] * v[0] + q[1] * v[1] + q[2] * v[2];
        let velocity = |q: [f64; 3]| [interp(u1, q), interp(u2, q)];
        let adv_q = std::array::from_fn(|qi| velocity(rule2().points[qi]));
        let adv_bary = velocity(BARYCENTER);
        let div_adv = gu1[0] + gu2[1];

        let gamma = shear_invariant(&[gu1, gu2]).max(params.shear_floor);
        let mut eta_int = 0.0;
        for (q, wq) in rule5().scaled(geom.area) {
            eta_int += wq * viscosity_from_invariant(interp(c, q), gamma, params);
        }
        let eta0 = viscosity_from_invariant(interp(c, BARYCENTER), gamma, params);
        if !(eta_int.is_finite() && eta0.is_finite() && eta0 > 0.0)
            || !adv_q.as_flattened().iter().all(|v| v.is_finite())
        {
            return Err(Term::Coefficients);
        }

        let tau = match (cfg.method.subscale_mode(), taus) {
            (None, _) => TauSet::default(),
            (Some(_), TauSource::Fixed(t)) => t,
            (Some(_), TauSource::Computed) => {
                let inputs = TauInputs {
                    h: self.element_h[e],
                    speed: dot(adv_bary, adv_bary).sqrt(),
                    eta0,
                    rho: params.rho,
                    diffusivity: data.d_m,
                    alpha: params.reaction,
                };
                compute_tau(&inputs, &cfg.stab)
                    .and_then(|t| t.time_modify(cfg.dt, params.rho))
                    .map_err(|_| Term::Coefficients)?
            }
        };
        Ok(ElementCoeffs {
            adv_q,
            adv_bary,
            div_adv,
            eta_int,
            tau,
        })
    }

    /// Element matrix and right-hand side.
    pub(crate) fn local_system(
        &self,
        e: usize,
        data: &ElementStepData,
        co: &ElementCoeffs,
        un: &[f64; 12],
        sub_prev: [f64; 4],
    ) -> Result<LocalSystem, Term> {
        let cfg = &self.cfg;
        let rho = self.params.rho;
        let alpha = self.params.reaction;
        let dt = cfg.dt;
        let (th1, th0) = theta_weights(cfg.theta);
        let ElementGeometry { area, grads: g } = *self.mesh.geometry(e);

        let mut km = [0.0; 144];
        let mut kb = [0.0; 144];
        let mass = |i: usize, j: usize| area / 12.0 * if i == j { 2.0 } else { 1.0 };
        for i in 0..3 {
            for j in 0..3 {
                let m = mass(i, j);
                km[at(i, U1, j, U1)] = rho * m;
                km[at(i, U2, j, U2)] = rho * m;
                km[at(i, C, j, C)] = m;
            }
        }
        ensure_finite(&km, Term::Mass)?;

        let conv = convection_local(&co.adv_q, co.div_adv, &g, area, rho);
        for i in 0..3 {
            for j in 0..3 {
                kb[at(i, U1, j, U1)] += conv[i][j];
                kb[at(i, U2, j, U2)] += conv[i][j];
            }
        }
        // non-symmetrized advection of the concentration
        for (qi, (q, w)) in rule2().scaled(area).enumerate() {
            let a = co.adv_q[qi];
            for i in 0..3 {
                for j in 0..3 {
                    kb[at(i, C, j, C)] += w * dot(a, g[j]) * q[i];
                }
            }
        }
        ensure_finite(&kb, Term::Convection)?;

        let eta = co.eta_int;
        for i in 0..3 {
            let [gix, giy] = g[i];
            for j in 0..3 {
                let [gjx, gjy] = g[j];
                kb[at(i, U1, j, U1)] += eta * (2.0 * gjx * gix + gjy * giy);
                kb[at(i, U1, j, U2)] += eta * gjx * giy;
                kb[at(i, U2, j, U1)] += eta * gjy * gix;
                kb[at(i, U2, j, U2)] += eta * (2.0 * gjy * giy + gjx * gix);
            }
        }
        ensure_finite(&kb, Term::Viscous)?;

        let third = area / 3.0;
        for i in 0..3 {
            for j in 0..3 {
                kb[at(i, U1, j, P)] -= g[i][0] * third;
                kb[at(i, U2, j, P)] -= g[i][1] * third;
                kb[at(i, P, j, U1)] += g[j][0] * third;
                kb[at(i, P, j, U2)] += g[j][1] * third;
            }
        }
        ensure_finite(&kb, Term::PressureCoupling)?;

        let [d1, d2] = data.diff_int;
        for i in 0..3 {
            for j in 0..3 {
                kb[at(i, C, j, C)] +=
                    d1 * g[j][0] * g[i][0] + d2 * g[j][1] * g[i][1] + alpha * mass(i, j);
            }
        }
        ensure_finite(&kb, Term::Transport)?;

        let mut k = [0.0; 144];
        let mut f = data.load;
        for r in 0..12 {
            let mut acc = 0.0;
            for s in 0..12 {
                let idx = 12 * r + s;
                k[idx] = km[idx] / dt + th1 * kb[idx];
                acc += (km[idx] / dt - th0 * kb[idx]) * un[s];
            }
            f[r] += acc;
        }

        if let Some(mode) = cfg.method.subscale_mode() {
            self.add_subscale_terms(&mut k, &mut f, e, data, co, un, sub_prev, mode);
            ensure_finite(&k, Term::Stabilization)?;
            ensure_finite(&f, Term::Stabilization)?;
        }
        Ok(LocalSystem { k, f })
    }

    #[allow(clippy::too_many_arguments)]
    fn add_subscale_terms(
        &self,
        k: &mut [f64; 144],
        f: &mut [f64; 12],
        e: usize,
        data: &ElementStepData,
        co: &ElementCoeffs,
        un: &[f64; 12],
        sub_prev: [f64; 4],
        mode: SubscaleMode,
    ) {
        let rho = self.params.rho;
        let alpha = self.params.reaction;
        let dt = self.cfg.dt;
        let (th1, th0) = theta_weights(self.cfg.theta);
        let geom = self.mesh.geometry(e);
        let g = &geom.grads;
        let ([wm, wp, wc], [hm, hc]) = subscale_weights(&co.tau, dt, rho, mode);
        let tw = [wm, wm, wp, wc];
        let hist = [hm * sub_prev[0], hm * sub_prev[1], 0.0, hc * sub_prev[3]];

        for (qi, (q, w)) in rule2().scaled(geom.area).enumerate() {
            let a = co.adv_q[qi];
            let (rm, rl) = residual_rows(q, a, g, rho, alpha);
            let adj = adjoint_rows(q, a, g, rho, alpha);
            for comp in 0..4 {
                if tw[comp] == 0.0 && hist[comp] == 0.0 {
                    continue;
                }
                let rop: [f64; 12] = std::array::from_fn(|j| rm[comp][j] / dt + th1 * rl[comp][j]);
                let r0 = data.force_q[qi][comp]
                    + (0..12)
                        .map(|j| (rm[comp][j] / dt - th0 * rl[comp][j]) * un[j])
                        .sum::<f64>();
                let s0 = tw[comp] * r0 + hist[comp];
                for i in 0..12 {
                    let ai = adj[comp][i];
                    if ai == 0.0 {
                        continue;
                    }
                    let c = w * ai;
                    let ct = c * tw[comp];
                    for j in 0..12 {
                        k[12 * i + j] -= ct * rop[j];
                    }
                    f[i] -= c * s0;
                }
            }
        }
    }

    /// Strong residual `F - M (X - U^n)/dt - L(W)` at the barycenter.
    pub(crate) fn barycenter_residual(
        &self,
        e: usize,
        data: &ElementStepData,
        co: &ElementCoeffs,
        un: &[f64; 12],
        x: &[f64; 12],
    ) -> [f64; 4] {
        let dt = self.cfg.dt;
        let (th1, th0) = theta_weights(self.cfg.theta);
        let g = &self.mesh.geometry(e).grads;
        let (rm, rl) = residual_rows(
            BARYCENTER,
            co.adv_bary,
            g,
            self.params.rho,
            self.params.reaction,
        );
        std::array::from_fn(|comp| {
            data.force_bary[comp]
                - (0..12)
                    .map(|j| {
                        rm[comp][j] * (x[j] - un[j]) / dt + rl[comp][j] * (th1 * x[j] + th0 * un[j])
                    })
                    .sum::<f64>()
        })
    }

    /// Global values and right-hand side over the free unknowns.
    pub(crate) fn assemble_values(
        &self,
        data: &[ElementStepData],
        state_n: &FieldState,
        iterate: &FieldState,
        subs_n: &SubscaleField,
        taus: TauSource,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let locals = try_map_indexed(self.cfg.exec, self.mesh.num_elements(), |e| {
            let un = self.local_values(e, state_n);
            let it = self.local_values(e, iterate);
            self.element_coeffs(e, &data[e], &un, &it, taus)
                .and_then(|co| self.local_system(e, &data[e], &co, &un, subs_n.values[e]))
                .map_err(|term| Error::NumericalBreakdown { element: e, term })
        })?;
        let mut values = vec![0.0; self.pattern.nnz()];
        let mut rhs = vec![0.0; self.dofs.num_free()];
        for (e, loc) in locals.iter().enumerate() {
            let ld = &self.local_dofs[e];
            let sc = &self.scatter[e];
            for i in 0..12 {
                if ld[i] == FIXED {
                    continue;
                }
                rhs[ld[i] as usize] += loc.f[i];
                for j in 0..12 {
                    let pos = sc[12 * i + j];
                    if pos != FIXED {
                        values[pos as usize] += loc.k[12 * i + j];
                    }
                }
            }
        }
        Ok((values, rhs))
    }
}

/// Skew-symmetrized convection `c(a; N_j, N_i)` on one element, `[i][j]`.
pub(crate) fn convection_local(
    adv_q: &[[f64; 2]; 3],
    div_adv: f64,
    g: &[[f64; 2]; 3],
    area: f64,
    rho: f64,
) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (qi, (q, w)) in rule2().scaled(area).enumerate() {
        let a = adv_q[qi];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] += w * rho * (dot(a, g[j]) * q[i] + 0.5 * div_adv * q[j] * q[i]);
            }
        }
    }
    out
}

/// Rows of the time operator `M` and of the P1 spatial operator `L` acting on
/// local unknowns, per residual component `(mom1, mom2, cont, transport)`.
fn residual_rows(
    q: [f64; 3],
    a: [f64; 2],
    g: &[[f64; 2]; 3],
    rho: f64,
    alpha: f64,
) -> ([[f64; 12]; 4], [[f64; 12]; 4]) {
    let mut rm = [[0.0; 12]; 4];
    let mut rl = [[0.0; 12]; 4];
    for j in 0..3 {
        let agj = dot(a, g[j]);
        rm[0][4 * j + U1] = rho * q[j];
        rm[1][4 * j + U2] = rho * q[j];
        rm[3][4 * j + C] = q[j];
        rl[0][4 * j + U1] = rho * agj;
        rl[0][4 * j + P] = g[j][0];
        rl[1][4 * j + U2] = rho * agj;
        rl[1][4 * j + P] = g[j][1];
        rl[2][4 * j + U1] = g[j][0];
        rl[2][4 * j + U2] = g[j][1];
        rl[3][4 * j + C] = agj + alpha * q[j];
    }
    (rm, rl)
}

/// `L*(V)` per subscale component, for each local test function.
fn adjoint_rows(
    q: [f64; 3],
    a: [f64; 2],
    g: &[[f64; 2]; 3],
    rho: f64,
    alpha: f64,
) -> [[f64; 12]; 4] {
    let mut adj = [[0.0; 12]; 4];
    for i in 0..3 {
        let agi = dot(a, g[i]);
        adj[0][4 * i + U1] = -rho * agi;
        adj[0][4 * i + P] = -g[i][0];
        adj[1][4 * i + U2] = -rho * agi;
        adj[1][4 * i + P] = -g[i][1];
        adj[2][4 * i + U1] = -g[i][0];
        adj[2][4 * i + U2] = -g[i][1];
        adj[3][4 * i + C] = -agi + alpha * q[i];
    }
    adj
}
