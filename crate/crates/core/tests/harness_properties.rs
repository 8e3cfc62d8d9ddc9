use asgs_core::harness::convergence::{build_rows, convergence_study, Level};
use asgs_core::harness::norms::{m_norm_error, n_norm_error, Component, ErrorReport, ZeroField};
use asgs_core::harness::table::{read_table, rounded, write_table};
use asgs_core::model::PhysicalParams;
use asgs_core::{Exec, Mesh, Method, SolverConfig};
use proptest::prelude::*;

const LEVELS: usize = 4;

fn mesh() -> Mesh {
    Mesh::unit_square(4).unwrap()
}

fn fields(len: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, len), LEVELS)
}

fn m_norm(mesh: &Mesh, f: &[Vec<f64>]) -> f64 {
    let comps = [Component {
        computed: f.iter().map(|v| v.as_slice()).collect(),
        exact: &ZeroField,
    }];
    m_norm_error(mesh, &comps, 1.0 / 3.0, 1.0, Exec::Sequential).unwrap()
}

fn n_norm(mesh: &Mesh, f: &[Vec<f64>], theta: f64) -> f64 {
    let comps = [Component {
        computed: f.iter().map(|v| v.as_slice()).collect(),
        exact: &ZeroField,
    }];
    n_norm_error(mesh, &comps, 1.0 / 3.0, theta, Exec::Sequential).unwrap()
}

fn combine(a: &[Vec<f64>], b: &[Vec<f64>], wa: f64, wb: f64) -> Vec<Vec<f64>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| wa * p + wb * q).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn norms_are_homogeneous(f in fields(25), lambda in -5.0..5.0f64) {
        let mesh = mesh();
        let scaled = combine(&f, &f, lambda, 0.0);
        let (m, ms) = (m_norm(&mesh, &f), m_norm(&mesh, &scaled));
        prop_assert!((ms - lambda.abs() * m).abs() <= 1e-10 * (1.0 + m));
        let (n, ns) = (n_norm(&mesh, &f, 0.0), n_norm(&mesh, &scaled, 0.0));
        prop_assert!((ns - lambda.abs() * n).abs() <= 1e-10 * (1.0 + n));
    }

    #[test]
    fn norms_satisfy_triangle_inequality(f in fields(25), g in fields(25)) {
        let mesh = mesh();
        let sum = combine(&f, &g, 1.0, 1.0);
        prop_assert!(m_norm(&mesh, &sum) <= m_norm(&mesh, &f) + m_norm(&mesh, &g) + 1e-12);
        for theta in [0.0, 1.0] {
            prop_assert!(n_norm(&mesh, &sum, theta) <= n_norm(&mesh, &f, theta) + n_norm(&mesh, &g, theta) + 1e-12);
        }
    }

    #[test]
    fn norms_are_positive(f in fields(25)) {
        let mesh = mesh();
        let nonzero = f.iter().flatten().any(|&v| v != 0.0);
        prop_assert!(m_norm(&mesh, &f) >= 0.0);
        if nonzero {
            prop_assert!(m_norm(&mesh, &f) > 0.0);
        }
    }

    #[test]
    fn csv_round_trip(errs in prop::collection::vec((1e-8..1.0f64, 1e-8..1.0f64, 1e-8..1.0f64), 1..6)) {
        let levels: Vec<Level> = (0..errs.len()).map(|k| Level::paired(10 << k)).collect();
        let reports: Vec<ErrorReport> = errs.iter().map(|&(u, c, p)| ErrorReport::new(u, c, p)).collect();
        let rows = build_rows(&levels, &reports);
        let mut buf = Vec::new();
        write_table(&mut buf, &rows).unwrap();
        let back = read_table(buf.as_slice()).unwrap();
        let expected: Vec<_> = rows.iter().map(rounded).collect();
        prop_assert_eq!(back, expected);
    }

    #[test]
    fn total_is_root_sum_square(u in 0.0..1.0f64, c in 0.0..1.0f64, p in 0.0..1.0f64) {
        let r = ErrorReport::new(u, c, p);
        prop_assert!((r.total.powi(2) - (u * u + c * c + p * p)).abs() <= 1e-12);
    }
}

fn small_study() -> Vec<asgs_core::harness::convergence::ConvergenceRow> {
    let cfg = SolverConfig::new(Method::AsgsDynamic, 1.0, 0.25, 1.0);
    let levels = [Level::paired(4), Level::paired(8)];
    convergence_study(
        &levels,
        &cfg,
        &PhysicalParams::one_way(1000.0, 1.5),
        Exec::Parallel,
    )
    .unwrap()
}

#[test]
fn study_output_is_deterministic() {
    let write = || {
        let mut buf = Vec::new();
        write_table(&mut buf, &small_study()).unwrap();
        buf
    };
    assert_eq!(write(), write());
}

#[test]
fn study_totals_are_root_sum_square() {
    let rows = small_study();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].roc_total.is_none() && rows[1].roc_total.is_some());
    for r in rows {
        assert!((r.total - (r.e_u * r.e_u + r.e_c * r.e_c + r.e_p * r.e_p).sqrt()).abs() <= 1e-12);
    }
}
