//! Monolithic time stepping for the coupled flow/transport system.
//!
//! Each step runs a Picard loop: freeze advection velocity, viscosity and
//! stabilization parameters at the current iterate, assemble, solve, repeat
//! until the relative increment drops below `picard_tol`. The pressure is
//! only determined up to constants (and, for the unstabilized method, up to
//! spurious modes of equal-order elements), so a few pressure rows are
//! pinned and the result is shifted to zero mean.

mod assembly;
mod dofs;
mod linear;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use dofs::{DofMap, C, P, U1, U2};
pub use linear::{solve_linear, LinearSolver, LinearSystem, SparsityPattern};

use crate::error::{Error, Result};
use crate::fem::rule2;
use crate::mesh::Mesh;
use crate::model::{exact_solution, PhysicalParams};
use crate::par::{map_indexed, Exec};
use crate::stab::{element_subscale, StabConsts, SubscaleField, SubscaleMode, TauSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Galerkin,
    AsgsStatic,
    AsgsDynamic,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Galerkin, Method::AsgsStatic, Method::AsgsDynamic];

    /// `None` for the unstabilized method.
    pub fn subscale_mode(self) -> Option<SubscaleMode> {
        match self {
            Method::Galerkin => None,
            Method::AsgsStatic => Some(SubscaleMode::QuasiStatic),
            Method::AsgsDynamic => Some(SubscaleMode::Dynamic),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Galerkin => "galerkin",
            Method::AsgsStatic => "asgs-static",
            Method::AsgsDynamic => "asgs-dynamic",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown method '{s}' (galerkin, asgs-static, asgs-dynamic)"
                ))
            })
    }
}

/// Right-hand side used by the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForcingKind {
    /// Forcing that makes the manufactured fields exact.
    #[default]
    Manufactured,
    Zero,
}

/// How the representative diffusivity of `tau3` is taken from the element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiffusivityPolicy {
    /// Largest of `D1, D2` over the element quadrature points.
    #[default]
    Max,
    /// Element mean of `max(D1, D2)`.
    Mean,
}

/// Where assembly takes the stabilization parameters from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauSource {
    Computed,
    /// The same parameters on every element.
    Fixed(TauSet),
}

/// How the coefficients frozen in each linear solve are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Linearization {
    /// Fixed-point iteration on advection, viscosity and `tau` until the
    /// relative increment drops below `picard_tol`.
    #[default]
    Picard,
    /// A single solve with every coefficient taken from the previous level.
    Lagged,
}

impl FromStr for Linearization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "picard" => Ok(Linearization::Picard),
            "lagged" => Ok(Linearization::Lagged),
            _ => Err(Error::invalid(format!(
                "unknown linearization '{s}' (picard, lagged)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// 1 is backward Euler, 0 is Crank-Nicolson.
    pub theta: f64,
    pub dt: f64,
    pub t_final: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub linearization: Linearization,
    /// For `theta < 1`, replace the first step by two backward Euler half
    /// steps, which damps the part of the initial data that is not
    /// discretely divergence free.
    pub smoothed_start: bool,
    pub linear_tol: f64,
    pub stab: StabConsts,
    pub diffusivity: DiffusivityPolicy,
    pub forcing: ForcingKind,
    pub exec: Exec,
}

impl SolverConfig {
    pub fn new(method: Method, theta: f64, dt: f64, t_final: f64) -> Self {
        SolverConfig {
            method,
            theta,
            dt,
            t_final,
            picard_tol: 1e-8,
            picard_max: 50,
            linearization: Linearization::Picard,
            smoothed_start: true,
            linear_tol: 1e-10,
            stab: StabConsts::default(),
            diffusivity: DiffusivityPolicy::Max,
            forcing: ForcingKind::Manufactured,
            exec: Exec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::invalid(format!(
                "theta must lie in [0, 1], got {}",
                self.theta
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid(format!(
                "final time must be positive, got {}",
                self.t_final
            )));
        }
        if !(self.picard_tol > 0.0) || self.picard_max == 0 {
            return Err(Error::invalid(
                "Picard tolerance and iteration cap must be positive",
            ));
        }
        if !(self.linear_tol > 0.0) {
            return Err(Error::invalid("linear tolerance must be positive"));
        }
        self.stab.validate()?;
        self.num_steps().map(|_| ())
    }

    /// `T / dt`, required to be an integer up to 1e-9.
    pub fn num_steps(&self) -> Result<usize> {
        let r = self.t_final / self.dt;
        let n = r.round();
        if (r - n).abs() > 1e-9 || n < 1.0 {
            return Err(Error::invalid(format!(
                "final time {} is not an integer multiple of dt {}",
                self.t_final, self.dt
            )));
        }
        Ok(n as usize)
    }
}

/// Nodal values of all fields at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub p: Vec<f64>,
    pub c: Vec<f64>,
    pub t: f64,
}

impl FieldState {
    pub fn zeros(num_nodes: usize, t: f64) -> Self {
        let z = vec![0.0; num_nodes];
        FieldState {
            u1: z.clone(),
            u2: z.clone(),
            p: z.clone(),
            c: z,
            t,
        }
    }

    /// Nodal interpolant of the manufactured solution, pressure shifted to zero mean.
    pub fn interpolate_exact(mesh: &Mesh, t: f64) -> Self {
        let mut s = FieldState::zeros(mesh.num_nodes(), t);
        for (k, &[x, y]) in mesh.nodes().iter().enumerate() {
            let v = exact_solution(x, y, t);
            s.u1[k] = v.u1;
            s.u2[k] = v.u2;
            s.p[k] = v.p;
            s.c[k] = v.c;
        }
        s.shift_pressure_mean(mesh);
        s
    }

    pub fn num_nodes(&self) -> usize {
        self.u1.len()
    }

    /// Field by slot index ([`U1`], [`U2`], [`P`], [`C`]).
    pub fn field(&self, f: usize) -> &[f64] {
        match f {
            U1 => &self.u1,
            U2 => &self.u2,
            P => &self.p,
            C => &self.c,
            _ => panic!("field slot {f} out of range"),
        }
    }

    pub fn field_mut(&mut self, f: usize) -> &mut Vec<f64> {
        match f {
            U1 => &mut self.u1,
            U2 => &mut self.u2,
            P => &mut self.p,
            C => &mut self.c,
            _ => panic!("field slot {f} out of range"),
        }
    }

    pub fn pressure_mean(&self, mesh: &Mesh) -> f64 {
        mesh.integrate_nodal(&self.p) / mesh.area()
    }

    pub fn shift_pressure_mean(&mut self, mesh: &Mesh) {
        let mean = self.pressure_mean(mesh);
        self.p.iter_mut().for_each(|p| *p -= mean);
    }

    /// `||v_h||^2` of one field, integrated exactly.
    pub fn l2_norm_sq(&self, mesh: &Mesh, f: usize) -> f64 {
        let v = self.field(f);
        mesh.elements()
            .iter()
            .enumerate()
            .map(|(e, el)| {
                let [a, b, c] = el.map(|k| v[k]);
                mesh.geometry(e).area / 12.0 * (a * a + b * b + c * c + (a + b + c).powi(2))
            })
            .sum()
    }

    /// `||u_h||^2 + ||c_h||^2`.
    pub fn energy(&self, mesh: &Mesh) -> f64 {
        self.l2_norm_sq(mesh, U1) + self.l2_norm_sq(mesh, U2) + self.l2_norm_sq(mesh, C)
    }

    fn squared_norm(&self) -> f64 {
        [U1, U2, P, C]
            .iter()
            .flat_map(|&f| self.field(f))
            .map(|v| v * v)
            .sum()
    }

    /// All nodal values of `self - other`, field by field.
    fn difference(&self, other: &FieldState) -> Vec<f64> {
        [U1, U2, P, C]
            .iter()
            .flat_map(|&f| self.field(f).iter().zip(other.field(f)))
            .map(|(a, b)| a - b)
            .collect()
    }

    /// `self += w * d` for `d` laid out as in [`FieldState::difference`].
    fn add_scaled(&mut self, d: &[f64], w: f64) {
        let n = self.num_nodes();
        for (k, f) in [U1, U2, P, C].into_iter().enumerate() {
            for (v, dv) in self.field_mut(f).iter_mut().zip(&d[k * n..(k + 1) * n]) {
                *v += w * dv;
            }
        }
    }

    fn squared_distance(&self, other: &FieldState) -> f64 {
        [U1, U2, P, C]
            .iter()
            .flat_map(|&f| self.field(f).iter().zip(other.field(f)))
            .map(|(a, b)| (a - b).powi(2))
            .sum()
    }
}

/// Lower bound on the Picard relaxation factor.
const MIN_RELAXATION: f64 = 0.05;

/// Result of one time step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: FieldState,
    pub subscales: SubscaleField,
    pub picard_iterations: usize,
    /// Relative increment after each Picard iteration.
    pub increments: Vec<f64>,
}

/// Result of a full run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// `N + 1` states at `t_n = n dt`.
    pub states: Vec<FieldState>,
    pub subscales: SubscaleField,
    /// `(||u~||^2, ||c~||^2)` per state, zero at the start.
    pub subscale_energy: Vec<(f64, f64)>,
    pub picard_iterations: Vec<usize>,
}

/// Solver bound to a mesh, with the sparsity pattern and symbolic
/// factorization shared by all steps.
pub struct Solver<'m> {
    mesh: &'m Mesh,
    params: PhysicalParams,
    cfg: SolverConfig,
    dofs: DofMap,
    pattern: Arc<SparsityPattern>,
    local_dofs: Vec<[u32; 12]>,
    scatter: Vec<[u32; 144]>,
    element_h: Vec<f64>,
    gauge: Vec<usize>,
    linear: LinearSolver,
}

impl<'m> Solver<'m> {
    pub fn new(mesh: &'m Mesh, params: PhysicalParams, cfg: SolverConfig) -> Result<Self> {
        if mesh.subdivisions() < 2 {
            return Err(Error::invalid(
                "solver needs at least 2 subdivisions per side",
            ));
        }
        params.validate()?;
        cfg.validate()?;
        let dofs = DofMap::new(mesh);
        let (pattern, scatter) = dofs::build_pattern(mesh, &dofs)?;
        let local_dofs = mesh
            .elements()
            .iter()
            .map(|&el| dofs.element_dofs(el))
            .collect();
        let element_h = (0..mesh.num_elements())
            .map(|e| {
                let p = mesh.vertices(e);
                (0..3)
                    .map(|k| {
                        let (a, b) = (p[k], p[(k + 1) % 3]);
                        (a[0] - b[0]).hypot(a[1] - b[1])
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        let gauge = gauge_rows(mesh, &dofs, cfg.method)?;
        Ok(Solver {
            mesh,
            params,
            cfg,
            dofs,
            pattern,
            local_dofs,
            scatter,
            element_h,
            gauge,
            linear: LinearSolver::new(),
        })
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    /// Pressure rows replaced by `p = 0` before solving.
    pub fn gauge_rows(&self) -> &[usize] {
        &self.gauge
    }

    /// System for `U^{n+1}` at the given Picard iterate, before gauge pinning.
    pub fn assemble(
        &self,
        state_n: &FieldState,
        iterate: &FieldState,
        subscales_n: &SubscaleField,
    ) -> Result<LinearSystem> {
        self.assemble_with(state_n, iterate, subscales_n, TauSource::Computed)
    }

    pub fn assemble_with(
        &self,
        state_n: &FieldState,
        iterate: &FieldState,
        subscales_n: &SubscaleField,
        taus: TauSource,
    ) -> Result<LinearSystem> {
        self.check_shapes(state_n, subscales_n)?;
        self.check_shapes(iterate, subscales_n)?;
        let data = self.prepare_step(state_n.t)?;
        let (values, rhs) = self.assemble_values(&data, state_n, iterate, subscales_n, taus)?;
        LinearSystem::new(Arc::clone(&self.pattern), values, rhs)
    }

    /// Pins the gauge rows of an assembled system.
    pub fn apply_gauge(&self, system: &mut LinearSystem) -> Result<()> {
        for &r in &self.gauge {
            system.pin_row(r)?;
        }
        Ok(())
    }

    fn check_shapes(&self, s: &FieldState, subs: &SubscaleField) -> Result<()> {
        let n = self.mesh.num_nodes();
        if [U1, U2, P, C].iter().any(|&f| s.field(f).len() != n) {
            return Err(Error::invalid(format!(
                "state fields must have {n} nodal values"
            )));
        }
        if subs.len() != self.mesh.num_elements() {
            return Err(Error::invalid(format!(
                "subscale field has {} entries, mesh has {} elements",
                subs.len(),
                self.mesh.num_elements()
            )));
        }
        Ok(())
    }

    /// Advances `state_n` by one step to `t_next`.
    pub fn step(
        &self,
        state_n: &FieldState,
        subscales_n: &SubscaleField,
        t_next: f64,
    ) -> Result<StepOutcome> {
        self.check_shapes(state_n, subscales_n)?;
        if ((t_next - state_n.t) - self.cfg.dt).abs() > 1e-9 * self.cfg.dt.max(1.0) {
            return Err(Error::invalid(format!(
                "step from t={} to t={} does not match dt={}",
                state_n.t, t_next, self.cfg.dt
            )));
        }
        let data = self.prepare_step(state_n.t)?;
        let mut iterate = FieldState {
            t: t_next,
            ..state_n.clone()
        };
        let mut increments = Vec::new();
        let mut omega = 1.0;
        let mut r_prev: Option<Vec<f64>> = None;
        loop {
            let (values, rhs) =
                self.assemble_values(&data, state_n, &iterate, subscales_n, TauSource::Computed)?;
            let mut system = LinearSystem::new(Arc::clone(&self.pattern), values, rhs)?;
            self.apply_gauge(&mut system)?;
            let x = self.linear.solve(&system, self.cfg.linear_tol)?;
            let mut next = self.dofs.scatter(&x, t_next)?;
            next.shift_pressure_mean(self.mesh);
            let norm = next.squared_norm().sqrt();
            let diff = next.squared_distance(&iterate).sqrt();
            let inc = if norm > 0.0 { diff / norm } else { diff };
            if inc <= self.cfg.picard_tol || self.cfg.linearization == Linearization::Lagged {
                increments.push(inc);
                iterate = next;
                break;
            }
            // Aitken relaxation on the fixed-point update r = next - iterate
            let r = next.difference(&iterate);
            if let Some(prev) = &r_prev {
                let dr: Vec<f64> = r.iter().zip(prev).map(|(a, b)| a - b).collect();
                let den: f64 = dr.iter().map(|v| v * v).sum();
                if den > 0.0 {
                    let num: f64 = prev.iter().zip(&dr).map(|(a, b)| a * b).sum();
                    omega = (-omega * num / den).clamp(MIN_RELAXATION, 1.0);
                }
            }
            increments.push(inc);
            iterate.add_scaled(&r, omega);
            r_prev = Some(r);
            if increments.len() >= self.cfg.picard_max {
                return Err(Error::NonlinearDivergence {
                    history: increments,
                });
            }
        }
        let subscales = self.advance_subscales(&data, state_n, &iterate, subscales_n)?;
        log::debug!("t={t_next:.6}: {} Picard iterations", increments.len());
        Ok(StepOutcome {
            state: iterate,
            subscales,
            picard_iterations: increments.len(),
            increments,
        })
    }

    fn advance_subscales(
        &self,
        data: &[assembly::ElementStepData],
        state_n: &FieldState,
        converged: &FieldState,
        prev: &SubscaleField,
    ) -> Result<SubscaleField> {
        let Some(mode) = self.cfg.method.subscale_mode() else {
            return Ok(SubscaleField::zeros(self.mesh.num_elements()));
        };
        let values = crate::par::try_map_indexed(self.cfg.exec, self.mesh.num_elements(), |e| {
            let un = self.local_values(e, state_n);
            let x = self.local_values(e, converged);
            let co = self
                .element_coeffs(e, &data[e], &un, &x, TauSource::Computed)
                .map_err(|term| Error::NumericalBreakdown { element: e, term })?;
            let r = self.barycenter_residual(e, &data[e], &co, &un, &x);
            Ok::<_, Error>(element_subscale(
                prev.values[e],
                r,
                &co.tau,
                self.cfg.dt,
                self.params.rho,
                mode,
            ))
        })?;
        Ok(SubscaleField { values })
    }

    /// Two backward Euler steps of `dt/2` from `initial` at `t = 0`.
    fn half_steps(&self, initial: &FieldState) -> Result<StepOutcome> {
        let dt = 0.5 * self.cfg.dt;
        let cfg = SolverConfig {
            theta: 1.0,
            dt,
            t_final: self.cfg.dt,
            ..self.cfg.clone()
        };
        let euler = Solver::new(self.mesh, self.params, cfg)?;
        let zero = SubscaleField::zeros(self.mesh.num_elements());
        let first = euler.step(initial, &zero, dt)?;
        let mut second = euler.step(&first.state, &first.subscales, self.cfg.dt)?;
        second.picard_iterations += first.picard_iterations;
        Ok(second)
    }

    /// Runs from the interpolated exact solution at `t = 0`.
    pub fn run(&self) -> Result<RunOutput> {
        self.run_from(FieldState::interpolate_exact(self.mesh, 0.0))
    }

    /// Runs `T/dt` steps from `initial` (whose time must be 0) with zero subscales.
    pub fn run_from(&self, initial: FieldState) -> Result<RunOutput> {
        let n_steps = self.cfg.num_steps()?;
        let areas: Vec<f64> = (0..self.mesh.num_elements())
            .map(|e| self.mesh.geometry(e).area)
            .collect();
        let mut subscales = SubscaleField::zeros(self.mesh.num_elements());
        let mut states = Vec::with_capacity(n_steps + 1);
        let mut energy = vec![(0.0, 0.0)];
        let mut picard = Vec::with_capacity(n_steps);
        states.push(initial);
        for n in 0..n_steps {
            let t_next = (n + 1) as f64 * self.cfg.dt;
            let out = if n == 0 && self.cfg.theta < 1.0 && self.cfg.smoothed_start {
                self.half_steps(&states[0])?
            } else {
                self.step(states.last().expect("initial state"), &subscales, t_next)?
            };
            subscales = out.subscales;
            energy.push(subscales.energy(areas.iter().copied()));
            picard.push(out.picard_iterations);
            states.push(out.state);
        }
        Ok(RunOutput {
            states,
            subscales,
            subscale_energy: energy,
            picard_iterations: picard,
        })
    }
}

/// Pressure unknowns pinned to remove the null space.
///
/// Stabilized methods only leave the constant, fixed by one node. Plain
/// equal-order elements on this lattice admit an eight-dimensional family of
/// spurious pressures (the constant, two decoupled corners and five
/// oscillating patterns) for every `n >= 4`; the nodes below are one set of
/// pivots for a basis of that family, found by elimination in node order.
fn gauge_rows(mesh: &Mesh, dofs: &DofMap, method: Method) -> Result<Vec<usize>> {
    let p = |k: usize| dofs.dof(k, P).expect("pressure is free everywhere");
    if method.subscale_mode().is_some() {
        return Ok(vec![p(0)]);
    }
    let n = mesh.subdivisions();
    if n < 4 {
        return Err(Error::invalid(
            "the unstabilized method needs at least 4 subdivisions per side",
        ));
    }
    let node = |i: usize, j: usize| j * (n + 1) + i;
    let pins = [
        (0, 0),
        (1, 0),
        (2, 0),
        (3, 0),
        (n, 0),
        (0, 1),
        (1, 1),
        (0, n),
    ];
    Ok(pins.iter().map(|&(i, j)| p(node(i, j))).collect())
}

/// One-shot assembly of the system for `U^{n+1}` (no gauge pinning).
pub fn assemble(
    mesh: &Mesh,
    state_n: &FieldState,
    iterate: &FieldState,
    subscales_n: &SubscaleField,
    cfg: &SolverConfig,
    params: &PhysicalParams,
) -> Result<LinearSystem> {
    Solver::new(mesh, *params, cfg.clone())?.assemble(state_n, iterate, subscales_n)
}

/// Discrete convection form `c(a; v, w)` with the assembly's quadrature,
/// for vector fields given nodally.
pub fn convection_form(
    mesh: &Mesh,
    a: [&[f64]; 2],
    v: [&[f64]; 2],
    w: [&[f64]; 2],
    rho: f64,
    exec: Exec,
) -> Result<f64> {
    let n = mesh.num_nodes();
    if a.iter().chain(&v).chain(&w).any(|f| f.len() != n) {
        return Err(Error::invalid(format!("fields must have {n} nodal values")));
    }
    let parts = map_indexed(exec, mesh.num_elements(), |e| {
        let el = mesh.elements()[e];
        let geom = mesh.geometry(e);
        let loc = |f: &[f64]| el.map(|k| f[k]);
        let (a1, a2) = (loc(a[0]), loc(a[1]));
        let adv_q = std::array::from_fn(|qi| {
            let q = rule2().points[qi];
            let i = |v: [f64; 3]| q[0] * v[0] + q[1] * v[1] + q[2] * v[2];
            [i(a1), i(a2)]
        });
        let div =
            crate::fem::grad_local(&geom.grads, a1)[0] + crate::fem::grad_local(&geom.grads, a2)[1];
        let m = assembly::convection_local(&adv_q, div, &geom.grads, geom.area, rho);
        let (v1, v2, w1, w2) = (loc(v[0]), loc(v[1]), loc(w[0]), loc(w[1]));
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += m[i][j] * (v1[j] * w1[i] + v2[j] * w2[i]);
            }
        }
        s
    });
    Ok(parts.iter().sum())
}
