//! Finite-difference oracle for the manufactured forcing.

use asgs_core::model::{
    diffusion_coeffs, exact_solution, manufactured_forcing, power_law_viscosity, PhysicalParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-3;

/// Fourth-order central difference of `f` at `x`.
fn d(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    (f(x - 2.0 * H) - 8.0 * f(x - H) + 8.0 * f(x + H) - f(x + 2.0 * H)) / (12.0 * H)
}

fn grad_u(x: f64, y: f64, t: f64) -> [[f64; 2]; 2] {
    let u1 = |x: f64, y: f64| exact_solution(x, y, t).u1;
    let u2 = |x: f64, y: f64| exact_solution(x, y, t).u2;
    [
        [d(|s| u1(s, y), x), d(|s| u1(x, s), y)],
        [d(|s| u2(s, y), x), d(|s| u2(x, s), y)],
    ]
}

/// `eta (d_j u_i + d_i u_j)` from differenced velocity gradients.
fn stress(x: f64, y: f64, t: f64, p: &PhysicalParams, i: usize, j: usize) -> f64 {
    let g = grad_u(x, y, t);
    let c = exact_solution(x, y, t).c;
    power_law_viscosity(c, &g, p) * (g[i][j] + g[j][i])
}

pub fn fd_forcing(x: f64, y: f64, t: f64, p: &PhysicalParams) -> [f64; 3] {
    let v = exact_solution(x, y, t);
    let u = [v.u1, v.u2];
    let g = grad_u(x, y, t);
    let comp = |i: usize, x: f64, y: f64, t: f64| {
        let e = exact_solution(x, y, t);
        if i == 0 {
            e.u1
        } else {
            e.u2
        }
    };
    let mut f = [0.0; 3];
    for i in 0..2 {
        let dudt = d(|s| comp(i, x, y, s), t);
        let conv = u[0] * g[i][0] + u[1] * g[i][1];
        let div_stress = d(|s| stress(s, y, t, p, i, 0), x) + d(|s| stress(x, s, t, p, i, 1), y);
        let dp = if i == 0 {
            d(|s| exact_solution(s, y, t).p, x)
        } else {
            d(|s| exact_solution(x, s, t).p, y)
        };
        f[i] = p.rho * (dudt + conv) - div_stress + dp;
    }
    let c = |x: f64, y: f64, t: f64| exact_solution(x, y, t).c;
    let flux_x = |x: f64| diffusion_coeffs(x, y, t, p.diffusion).0 * d(|s| c(s, y, t), x);
    let flux_y = |y: f64| diffusion_coeffs(x, y, t, p.diffusion).1 * d(|s| c(x, s, t), y);
    let dcdt = d(|s| c(x, y, s), t);
    let adv = u[0] * d(|s| c(s, y, t), x) + u[1] * d(|s| c(x, s, t), y);
    f[2] = dcdt - d(flux_x, x) - d(flux_y, y) + adv + p.reaction * v.c;
    f
}

/// Largest relative disagreement (momentum, transport) over 20 random interior points.
pub fn worst_relative_error(params: &PhysicalParams, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let (x, y, t) = (
            rng.gen_range(0.05..0.95),
            rng.gen_range(0.05..0.95),
            rng.gen_range(0.05..0.95),
        );
        let exact = manufactured_forcing(x, y, t, params);
        let fd = fd_forcing(x, y, t, params);
        let mom = ((exact.f1 - fd[0]).powi(2) + (exact.f2 - fd[1]).powi(2)).sqrt();
        let mom_ref = (exact.f1.powi(2) + exact.f2.powi(2)).sqrt();
        worst.0 = f64::max(worst.0, mom / mom_ref);
        worst.1 = f64::max(worst.1, (exact.g - fd[2]).abs() / exact.g.abs());
    }
    worst
}
