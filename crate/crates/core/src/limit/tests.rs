use std::f64::consts::LN_2;
use std::sync::OnceLock;

use super::*;
use crate::model::presets;

fn solved(file: crate::model::ModelFile, n: usize) -> CharacteristicField {
    let model = ModelSpec::load(&file).unwrap();
    solve(&model, &SolveOptions::with_grid(n, n)).unwrap()
}

fn constant() -> &'static CharacteristicField {
    static F: OnceLock<CharacteristicField> = OnceLock::new();
    F.get_or_init(|| solved(presets::constant(1.0), 400))
}

fn space_time() -> &'static CharacteristicField {
    static F: OnceLock<CharacteristicField> = OnceLock::new();
    F.get_or_init(|| solved(presets::two_type_space_time(1.0), 200))
}

/// Classical RK4 for a scalar ODE, used as an oracle independent of the grid.
fn rk4(mut y: f64, t_end: f64, steps: usize, rhs: impl Fn(f64, f64) -> f64) -> f64 {
    let h = t_end / steps as f64;
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = rhs(t, y);
        let k2 = rhs(t + h / 2.0, y + h / 2.0 * k1);
        let k3 = rhs(t + h / 2.0, y + h / 2.0 * k2);
        let k4 = rhs(t + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

#[test]
fn constant_rate_characteristics() {
    let field = constant();
    let y = field.y_c(Gamma::Initial { y0: 0.0 }, LN_2).unwrap();
    assert!((y - 0.5).abs() < 1e-3, "{y}");
    let grid = field.grid;
    let mut err = 0.0f64;
    for j in (0..grid.mp()).step_by(8) {
        for k in (0..grid.kp()).step_by(8) {
            let (y0, t) = (grid.y(j), grid.t(k));
            let oracle = rk4(y0, t, 200, |_, y| 1.0 - y);
            err = err.max((field.f_at(y0, t).unwrap() - oracle).abs());
            assert!((oracle - (1.0 - (1.0 - y0) * (-t).exp())).abs() < 1e-9);
        }
    }
    assert!(err < 1e-3, "{err}");
    // g(s,t) = 1 - e^{-(t-s)} and g(0,t) = f(0,t)
    let g = field.g_at(0.0, LN_2).unwrap();
    assert!((g - 0.5).abs() < 1e-3);
    assert!((field.g_at(0.3, 0.9).unwrap() - (1.0 - (-0.6f64).exp())).abs() < 1e-3);
    // eta = 1
    for t in [0.0, 0.2, 0.5, 1.0] {
        assert!((field.eta_at(0, t).unwrap() - 1.0).abs() < 1e-3);
    }
}

#[test]
fn trivial_boundary_values() {
    let field = space_time();
    let grid = field.grid;
    for j in 0..grid.mp() {
        assert_eq!(field.f[j * grid.kp()], grid.y(j));
        let y = grid.y(j);
        assert!((field.y_c(Gamma::Initial { y0: y }, 0.0).unwrap() - y).abs() < 1e-15);
        match field.invert(y, 0.0).unwrap() {
            Gamma::Initial { y0 } => assert!((y0 - y).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }
    for k in 1..grid.kp() {
        let t = grid.t(k);
        assert!(field.y_c(Gamma::Boundary { t0: t }, t).unwrap().abs() < 1e-15);
        assert_eq!(field.invert(0.0, t).unwrap(), Gamma::Boundary { t0: t });
    }
}

#[test]
fn corner_inverse_for_constant_rate() {
    let field = constant();
    match field.invert(0.5, LN_2).unwrap() {
        Gamma::Initial { y0 } => assert!(y0 < 2e-3, "{y0}"),
        Gamma::Boundary { t0 } => assert!(t0 < 2e-3, "{t0}"),
    }
}

#[test]
fn field_invariants() {
    let field = space_time();
    let grid = field.grid;
    let kp = grid.kp();
    let tol = 1e-12;
    for j in 0..grid.mp() {
        for k in 0..kp {
            let v = field.f[j * kp + k];
            assert!((-tol..=1.0 + tol).contains(&v));
            if j > 0 {
                assert!(v > field.f[(j - 1) * kp + k], "f not increasing at {j},{k}");
            }
            if k > 0 {
                assert!(v >= field.f[j * kp + k - 1] - tol, "f decreasing in t at {j},{k}");
            }
        }
    }
    for k in 0..kp {
        assert_eq!(field.g[k * kp + k], 0.0);
        assert!((field.g[k] - field.f[k]).abs() < 1e-12 || k == 0);
        for i in 0..k {
            let v = field.g[i * kp + k];
            assert!((0.0..=1.0).contains(&v));
            assert!(field.g[(i + 1) * kp + k] <= v + 1e-9, "g increasing in s at {i},{k}");
            if i < k - 1 {
                assert!(v >= field.g[i * kp + k - 1] - 1e-9, "g decreasing in t at {i},{k}");
            }
        }
    }
    for eta in &field.eta {
        assert!(eta.iter().all(|&e| e >= 0.0));
    }
    for d in &field.diagnostics.identity_defect {
        assert!(*d < 1e-5, "{d}");
    }
    assert!(field.diagnostics.f.converged && field.diagnostics.g.converged);
}

#[test]
fn identity_within_tolerance_on_default_grid() {
    let model = ModelSpec::load(&presets::two_type_space_time(1.0)).unwrap();
    let field = solve(&model, &SolveOptions::default()).unwrap();
    for d in &field.diagnostics.identity_defect {
        assert!(*d < 1e-6, "{d}");
    }
    assert!(field.solidity_defect() < 5.0 / 400.0 + 5.0 / 400.0);
}

#[test]
fn measure_properties() {
    let field = space_time();
    let grid = field.grid;
    let model = field.model();
    for j in 0..grid.mp() {
        let y = grid.y(j);
        let u = field.u_all(y, 0.0).unwrap();
        for (a, ty) in model.types.iter().enumerate() {
            assert!((u[a] - ty.weight * ty.profile.value(y, 0.0)).abs() < 1e-9);
        }
    }
    for &t in &[0.1, 0.37, 0.8, 1.0] {
        let mut prev = vec![f64::INFINITY; 2];
        for i in 0..=300 {
            let y = i as f64 / 300.0;
            let u = field.u_all(y, t).unwrap();
            let total: f64 = u.iter().sum();
            assert!((total - (1.0 - y)).abs() < 1e-6, "solidity at ({y},{t}): {total}");
            for a in 0..2 {
                assert!((-1e-12..=1.0).contains(&u[a]));
                assert!(u[a] <= prev[a] + 1e-9, "U_{a} increasing at ({y},{t})");
            }
            prev = u;
        }
    }
    assert!(field.solidity_defect() < 1e-5);
}

#[test]
fn duality_and_inverse_consistency() {
    let field = space_time();
    let anchors = [
        Gamma::Initial { y0: 0.0 },
        Gamma::Initial { y0: 0.3 },
        Gamma::Initial { y0: 0.77 },
        Gamma::Boundary { t0: 0.25 },
        Gamma::Boundary { t0: 0.6 },
    ];
    for gamma in anchors {
        let t0 = gamma.point().1;
        for i in 0..=20 {
            let t = t0 + (1.0 - t0) * i as f64 / 20.0;
            let y = field.y_c(gamma, t).unwrap();
            let mass: f64 = (0..2).map(|a| field.phi(a, gamma, t).unwrap()).sum();
            // on the diagonal the gap is the discrete identity defect
            assert!(
                (y - (1.0 - mass)).abs() < 1e-5,
                "{gamma:?} t={t}: {y} vs {}",
                1.0 - mass
            );
        }
    }
    let m = field.grid.m as f64;
    for i in 0..=40 {
        for k in 0..=10 {
            let (y, t) = (i as f64 / 40.0, k as f64 / 10.0);
            let back = field.y_c(field.invert(y, t).unwrap(), t).unwrap();
            assert!((back - y).abs() <= 2.0 / m, "({y},{t}) -> {back}");
        }
    }
}

#[test]
fn characteristic_speed_matches_velocity() {
    let field = space_time();
    let grid = field.grid;
    let dt = grid.dt();
    for y0 in [0.0, 0.2, 0.5, 0.9] {
        let gamma = Gamma::Initial { y0 };
        for k in (2..grid.k - 1).step_by(7) {
            let t = grid.t(k);
            let fd = (field.y_c(gamma, t + dt).unwrap() - field.y_c(gamma, t - dt).unwrap()) / (2.0 * dt);
            let y = field.y_c(gamma, t).unwrap();
            let v = field.v(&[1.0, 1.0], y, t).unwrap();
            assert!((fd - v).abs() < 1e-4, "y0={y0} t={t}: {fd} vs {v}");
        }
    }
}

#[test]
fn balance_law_along_characteristics() {
    let field = space_time();
    for gamma in [Gamma::Initial { y0: 0.4 }, Gamma::Boundary { t0: 0.3 }] {
        let (y0, t0) = gamma.point();
        let steps = 400;
        for a in 0..2 {
            let mut h = [0.0; 2];
            h[a] = 1.0;
            let va = |s: f64| field.v(&h, field.y_c(gamma, s).unwrap(), s).unwrap();
            let t = 1.0;
            let ds = (t - t0) / steps as f64;
            let integral: f64 = (0..steps)
                .map(|i| {
                    let s = t0 + i as f64 * ds;
                    0.5 * ds * (va(s) + va(s + ds))
                })
                .sum();
            let start = field.u(a, y0, t0).unwrap();
            let end = field.u(a, field.y_c(gamma, t).unwrap(), t).unwrap();
            assert!(
                (end - start + integral).abs() < 1e-4,
                "{gamma:?} a={a}: {}",
                end - start + integral
            );
        }
    }
}

#[test]
fn two_constant_types_decay_along_characteristics() {
    let field = solved(presets::two_constant(1.0), 200);
    let rates = [1.0, 2.0];
    let mut worst = 0.0f64;
    for y0 in [0.0, 0.1, 0.25, 0.5, 0.75, 0.9] {
        let gamma = Gamma::Initial { y0 };
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            let y = field.y_c(gamma, t).unwrap();
            for a in 0..2 {
                let oracle = rk4(0.5 * (1.0 - y0), t, 100, |_, u| -rates[a] * u);
                worst = worst.max((field.u(a, y, t).unwrap() - oracle).abs());
            }
        }
    }
    assert!(worst < 2e-3, "{worst}");
    // integral term vanishes for constant rates
    let u = field.u_all(0.4, 0.7).unwrap();
    let v = field.v(&[1.0, 1.0], 0.4, 0.7).unwrap();
    assert!((v - (u[0] + 2.0 * u[1])).abs() < 1e-12);
}

#[test]
fn constant_rate_velocity_is_one_minus_y() {
    let field = constant();
    for (y, t) in [(0.1, 0.2), (0.5, 0.5), (0.9, 1.0), (0.01, 0.9)] {
        assert!((field.v(&[1.0], y, t).unwrap() - (1.0 - y)).abs() < 1e-6);
    }
}

#[test]
fn picard_differences_contract() {
    let field = space_time();
    let d = &field.diagnostics;
    let floor = 1e-14;
    assert!(d.f.worst_ratio(5, floor).unwrap() <= 0.6);
    assert!(d.g.worst_ratio(5, floor).unwrap() <= 0.6);
    for log in &d.eta {
        if let Some(r) = log.worst_ratio(5, floor) {
            assert!(r <= 0.6, "{:?}", log.diffs);
        }
    }
}

#[test]
fn out_of_domain_queries() {
    let field = constant();
    assert!(matches!(field.f_at(1.5, 0.2), Err(SolveError::OutOfDomain(_))));
    assert!(matches!(field.u(0, 0.5, 1.2), Err(SolveError::OutOfDomain(_))));
    assert!(matches!(
        field.y_c(Gamma::Boundary { t0: 0.5 }, 0.2),
        Err(SolveError::OutOfDomain(_))
    ));
    assert!(Gamma::from_point(0.3, 0.2, 1.0).is_err());
    assert_eq!(Gamma::from_point(0.0, 0.0, 1.0).unwrap(), Gamma::Initial { y0: 0.0 });
    // t = T exactly uses the last column
    assert!(field.f_at(0.2, 1.0).is_ok());
}

#[test]
fn huge_rates_on_coarse_grids_are_reported() {
    let mut file = presets::constant(4.0);
    file.types[0].rate = "60".into();
    let model = ModelSpec::load(&file).unwrap();
    let err = solve(&model, &SolveOptions::with_grid(10, 10)).unwrap_err();
    assert!(matches!(err, SolveError::NonContraction { .. }), "{err}");
}

#[test]
fn sequential_and_parallel_agree() {
    let model = ModelSpec::load(&presets::two_type_space_time(1.0)).unwrap();
    let mut opts = SolveOptions::with_grid(60, 50);
    opts.exec = crate::Exec::Sequential;
    let a = solve(&model, &opts).unwrap();
    opts.exec = crate::Exec::Parallel;
    let b = solve(&model, &opts).unwrap();
    assert_eq!(a.f, b.f);
    assert_eq!(a.g, b.g);
    assert_eq!(a.eta, b.eta);
}
