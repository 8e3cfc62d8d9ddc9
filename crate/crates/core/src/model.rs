//! Physical data: power-law rheology, diffusion coefficients, and the
//! manufactured solution together with the forcing that makes it exact.

use crate::error::{Error, Result};

/// How the diffusion coefficients `D1`, `D2` of the transport equation vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionMode {
    /// `D1 = D2 = 0.01` everywhere.
    Constant,
    /// Space-time dependent polynomial coefficients.
    Variable,
}

/// One-way: viscosity independent of concentration, constant diffusion.
/// Strong: `eta = K exp(B c) ...` with variable diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    OneWay,
    Strong,
}

pub const CONSTANT_DIFFUSIVITY: f64 = 0.01;
pub const DEFAULT_REACTION: f64 = 0.01;
pub const DEFAULT_SHEAR_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub rho: f64,
    /// Consistency factor `K`.
    pub consistency: f64,
    /// Dimensionless concentration exponent `B`.
    pub coupling_exponent: f64,
    /// Power-law index `m`.
    pub power_index: f64,
    /// Reaction coefficient `alpha`.
    pub reaction: f64,
    pub diffusion: DiffusionMode,
    pub reynolds: f64,
    /// Lower clamp on the shear-rate invariant.
    pub shear_floor: f64,
}

impl PhysicalParams {
    /// One-way coupling at Reynolds number `re`: unit density and `K = 1/Re`, `B = 0`.
    pub fn one_way(re: f64, power_index: f64) -> Self {
        PhysicalParams {
            rho: 1.0,
            consistency: 1.0 / re,
            coupling_exponent: 0.0,
            power_index,
            reaction: DEFAULT_REACTION,
            diffusion: DiffusionMode::Constant,
            reynolds: re,
            shear_floor: DEFAULT_SHEAR_FLOOR,
        }
    }

    /// Strong coupling with `K = 1`, `B = 1`, `rho = 1` and variable diffusion.
    pub fn strong(power_index: f64) -> Self {
        PhysicalParams {
            rho: 1.0,
            consistency: 1.0,
            coupling_exponent: 1.0,
            power_index,
            reaction: DEFAULT_REACTION,
            diffusion: DiffusionMode::Variable,
            reynolds: 1000.0,
            shear_floor: DEFAULT_SHEAR_FLOOR,
        }
    }

    pub fn coupling(&self) -> Coupling {
        if self.coupling_exponent == 0.0 && self.diffusion == DiffusionMode::Constant {
            Coupling::OneWay
        } else {
            Coupling::Strong
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.rho > 0.0, "density must be positive"),
            (
                self.consistency > 0.0,
                "consistency factor must be positive",
            ),
            (self.power_index > 0.0, "power-law index must be positive"),
            (
                self.reaction >= 0.0,
                "reaction coefficient must be non-negative",
            ),
            (self.shear_floor > 0.0, "shear-rate floor must be positive"),
            (
                self.coupling_exponent.is_finite(),
                "coupling exponent must be finite",
            ),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::invalid(msg));
            }
        }
        Ok(())
    }
}

/// Velocity gradient, `g[i][j] = d u_i / d x_j`.
pub type VelocityGradient = [[f64; 2]; 2];

/// `2 (du1/dx)^2 + 2 (du2/dy)^2 + (du1/dy + du2/dx)^2`, unclamped.
#[inline]
pub fn shear_invariant(g: &VelocityGradient) -> f64 {
    let s = g[0][1] + g[1][0];
    2.0 * g[0][0] * g[0][0] + 2.0 * g[1][1] * g[1][1] + s * s
}

/// Power-law viscosity `K e^{B c} max(gamma, floor)^{(m-1)/2}`.
#[inline]
pub fn power_law_viscosity(c: f64, grad_u: &VelocityGradient, params: &PhysicalParams) -> f64 {
    let gamma = shear_invariant(grad_u).max(params.shear_floor);
    viscosity_from_invariant(c, gamma, params)
}

#[inline]
pub(crate) fn viscosity_from_invariant(c: f64, gamma: f64, params: &PhysicalParams) -> f64 {
    let shear = if params.power_index == 1.0 {
        1.0
    } else {
        gamma.powf(0.5 * (params.power_index - 1.0))
    };
    let conc = if params.coupling_exponent == 0.0 {
        1.0
    } else {
        (params.coupling_exponent * c).exp()
    };
    params.consistency * conc * shear
}

/// `(D1, D2)` at `(x, y, t)`.
pub fn diffusion_coeffs(x: f64, y: f64, t: f64, mode: DiffusionMode) -> (f64, f64) {
    match mode {
        DiffusionMode::Constant => (CONSTANT_DIFFUSIVITY, CONSTANT_DIFFUSIVITY),
        DiffusionMode::Variable => {
            let s = (-t).exp();
            let (px, dpx) = (phi(x), dphi(x));
            let (py, dpy) = (phi(y), dphi(y));
            // y^2(y-1)^2(2y-1)^2 = (phi'(y)/2)^2
            (
                s * 0.25 * dpy * dpy * px * px,
                s * 0.25 * dpx * dpx * py * py,
            )
        }
    }
}

/// `(dD1/dx, dD2/dy)`, the only coefficient derivatives the transport operator needs.
fn diffusion_flux_derivs(x: f64, y: f64, t: f64, mode: DiffusionMode) -> (f64, f64) {
    match mode {
        DiffusionMode::Constant => (0.0, 0.0),
        DiffusionMode::Variable => {
            let s = (-t).exp();
            let (px, dpx) = (phi(x), dphi(x));
            let (py, dpy) = (phi(y), dphi(y));
            (
                s * 0.25 * dpy * dpy * 2.0 * px * dpx,
                s * 0.25 * dpx * dpx * 2.0 * py * dpy,
            )
        }
    }
}

// phi(z) = z^2 (z-1)^2 and its derivatives; the velocity is the curl of
// psi = e^{-t} phi(x) phi(y) / 2.
#[inline]
fn phi(z: f64) -> f64 {
    let q = z * (z - 1.0);
    q * q
}
#[inline]
fn dphi(z: f64) -> f64 {
    2.0 * z * (z - 1.0) * (2.0 * z - 1.0)
}
#[inline]
fn d2phi(z: f64) -> f64 {
    12.0 * z * z - 12.0 * z + 2.0
}
#[inline]
fn d3phi(z: f64) -> f64 {
    24.0 * z - 12.0
}

/// Point values of the manufactured fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactValues {
    pub u1: f64,
    pub u2: f64,
    pub p: f64,
    pub c: f64,
}

/// `u = (e^{-t} x^2(x-1)^2 y(y-1)(2y-1), -e^{-t} x(x-1)(2x-1) y^2(y-1)^2)`,
/// `p = e^{-t}(3x^2 + 3y^2 - 2)`, `c = e^{-t} x y (x-1)(y-1)`.
pub fn exact_solution(x: f64, y: f64, t: f64) -> ExactValues {
    let s = (-t).exp();
    ExactValues {
        u1: 0.5 * s * phi(x) * dphi(y),
        u2: -0.5 * s * dphi(x) * phi(y),
        p: s * (3.0 * x * x + 3.0 * y * y - 2.0),
        c: s * x * y * (x - 1.0) * (y - 1.0),
    }
}

/// Closed-form derivatives of the manufactured solution.
#[derive(Debug, Clone, Copy)]
pub struct ExactSolution;

impl ExactSolution {
    pub fn values(&self, x: f64, y: f64, t: f64) -> ExactValues {
        exact_solution(x, y, t)
    }

    /// `g[i][j] = d u_i / d x_j`.
    pub fn velocity_grad(&self, x: f64, y: f64, t: f64) -> VelocityGradient {
        let s = 0.5 * (-t).exp();
        [
            [s * dphi(x) * dphi(y), s * phi(x) * d2phi(y)],
            [-s * d2phi(x) * phi(y), -s * dphi(x) * dphi(y)],
        ]
    }

    /// `h[i][j][k] = d^2 u_i / dx_j dx_k`.
    pub fn velocity_hessian(&self, x: f64, y: f64, t: f64) -> [[[f64; 2]; 2]; 2] {
        let s = 0.5 * (-t).exp();
        let u1xx = s * d2phi(x) * dphi(y);
        let u1xy = s * dphi(x) * d2phi(y);
        let u1yy = s * phi(x) * d3phi(y);
        let u2xx = -s * d3phi(x) * phi(y);
        let u2xy = -s * d2phi(x) * dphi(y);
        let u2yy = -s * dphi(x) * d2phi(y);
        [[[u1xx, u1xy], [u1xy, u1yy]], [[u2xx, u2xy], [u2xy, u2yy]]]
    }

    pub fn pressure_grad(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let s = (-t).exp();
        [6.0 * s * x, 6.0 * s * y]
    }

    pub fn concentration_grad(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let s = (-t).exp();
        let (qx, qy) = (x * (x - 1.0), y * (y - 1.0));
        [s * (2.0 * x - 1.0) * qy, s * qx * (2.0 * y - 1.0)]
    }

    /// `(d^2 c/dx^2, d^2 c/dy^2)`.
    pub fn concentration_second(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let s = (-t).exp();
        [2.0 * s * y * (y - 1.0), 2.0 * s * x * (x - 1.0)]
    }

    /// Velocity divergence; identically zero.
    pub fn divergence(&self, x: f64, y: f64, t: f64) -> f64 {
        let g = self.velocity_grad(x, y, t);
        g[0][0] + g[1][1]
    }
}

/// Body force and solute source at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forcing {
    pub f1: f64,
    pub f2: f64,
    pub g: f64,
}

/// Residual of the manufactured solution under the strong momentum and
/// transport operators: the forcing for which it is an exact solution.
pub fn manufactured_forcing(x: f64, y: f64, t: f64, params: &PhysicalParams) -> Forcing {
    let ex = ExactSolution;
    let v = ex.values(x, y, t);
    let u = [v.u1, v.u2];
    let gu = ex.velocity_grad(x, y, t);
    let hu = ex.velocity_hessian(x, y, t);
    let gp = ex.pressure_grad(x, y, t);
    let gc = ex.concentration_grad(x, y, t);

    let gamma_raw = shear_invariant(&gu);
    let gamma = gamma_raw.max(params.shear_floor);
    let eta = viscosity_from_invariant(v.c, gamma, params);

    // grad(gamma) through d_k G_ij = h[i][j][k]
    let sym = gu[0][1] + gu[1][0];
    let mut grad_eta = [0.0; 2];
    for (k, ge) in grad_eta.iter_mut().enumerate() {
        let dgamma = 4.0 * gu[0][0] * hu[0][0][k]
            + 4.0 * gu[1][1] * hu[1][1][k]
            + 2.0 * sym * (hu[0][1][k] + hu[1][0][k]);
        let shear_part = if gamma_raw > params.shear_floor {
            0.5 * (params.power_index - 1.0) * dgamma / gamma
        } else {
            0.0
        };
        *ge = eta * (params.coupling_exponent * gc[k] + shear_part);
    }

    let mut f = [0.0; 2];
    for i in 0..2 {
        let dudt = -u[i];
        let conv = u[0] * gu[i][0] + u[1] * gu[i][1];
        // div(2 eta D(u))_i = sum_j d_j[eta (d_j u_i + d_i u_j)]
        let mut visc = 0.0;
        for j in 0..2 {
            visc += grad_eta[j] * (gu[i][j] + gu[j][i]);
            visc += eta * (hu[i][j][j] + hu[j][i][j]);
        }
        f[i] = params.rho * (dudt + conv) + gp[i] - visc;
    }

    let (d1, d2) = diffusion_coeffs(x, y, t, params.diffusion);
    let (d1x, d2y) = diffusion_flux_derivs(x, y, t, params.diffusion);
    let cxx = ex.concentration_second(x, y, t);
    let diffusion = d1x * gc[0] + d1 * cxx[0] + d2y * gc[1] + d2 * cxx[1];
    let g = -v.c - diffusion + u[0] * gc[0] + u[1] * gc[1] + params.reaction * v.c;

    Forcing {
        f1: f[0],
        f2: f[1],
        g,
    }
}
