//! The closed-form forcing against finite differences of the exact fields
//! pushed through the strong momentum and transport operators.

mod common;

use asgs_core::fem::quadrature_rule;
use asgs_core::model::{exact_solution, manufactured_forcing, ExactSolution, PhysicalParams};
use asgs_core::Mesh;

fn check(params: &PhysicalParams, seed: u64) {
    let (mom, tr) = common::worst_relative_error(params, seed);
    assert!(
        mom <= 1e-5 && tr <= 1e-5,
        "relative errors: momentum {mom:e}, transport {tr:e}"
    );
}

#[test]
fn one_way_forcing_matches_differences() {
    for (k, m) in [0.5, 1.0, 1.5].into_iter().enumerate() {
        for re in [1.0, 1000.0] {
            check(&PhysicalParams::one_way(re, m), 10 + k as u64);
        }
    }
}

#[test]
fn strong_forcing_matches_differences() {
    for (k, m) in [0.5, 1.0, 1.5].into_iter().enumerate() {
        check(&PhysicalParams::strong(m), 20 + k as u64);
    }
}

#[test]
fn exact_velocity_is_divergence_free_at_quadrature_points() {
    let mesh = Mesh::unit_square(10).unwrap();
    let rule = quadrature_rule(5).unwrap();
    for e in 0..mesh.num_elements() {
        for &q in rule.points.iter() {
            let [x, y] = mesh.map_point(e, q);
            for t in [0.0, 0.5, 1.0] {
                assert!(ExactSolution.divergence(x, y, t).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn corners_have_no_convection() {
    // with u = 0 the momentum forcing reduces to -div(stress) + grad p
    let p = PhysicalParams::one_way(1000.0, 1.0);
    for (x, y) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
        let v = exact_solution(x, y, 0.3);
        assert_eq!((v.u1, v.u2), (0.0, 0.0));
        let f = manufactured_forcing(x, y, 0.3, &p);
        let gp = ExactSolution.pressure_grad(x, y, 0.3);
        let hu = ExactSolution.velocity_hessian(x, y, 0.3);
        let eta = p.consistency;
        let visc = |i: usize| {
            (0..2)
                .map(|j| eta * (hu[i][j][j] + hu[j][i][j]))
                .sum::<f64>()
        };
        assert!((f.f1 - (gp[0] - visc(0))).abs() < 1e-14);
        assert!((f.f2 - (gp[1] - visc(1))).abs() < 1e-14);
    }
}
