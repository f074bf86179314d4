use proptest::prelude::*;
use pxlap_core::exponent::{ExponentField, Profile};
use pxlap_core::geometry::{norm, Ball};
use pxlap_core::grid::{Grid, GridFunction};
use pxlap_core::harness::harnack_mu;
use pxlap_core::lebesgue::{luxemburg_norm, modular, NormConfig};
use pxlap_core::solver::pointwise::Gaussian;
use pxlap_core::solver::{energy, p_laplacian_pointwise, solve_dirichlet, ProblemSpec, SmoothFunction};

fn grid_2d(n: usize) -> Grid {
    Grid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[n, n]).unwrap()
}

fn affine(grid: &Grid, offset: f64, gx: f64, gy: f64) -> ExponentField {
    ExponentField::fit(Profile::Affine { offset, gradient: vec![gx, gy] }, grid).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn solution_minimizes_energy(
        offset in 1.6f64..3.5,
        gx in -0.4f64..0.4,
        f in -3.0f64..3.0,
        bump in prop::collection::vec(-0.05f64..0.05, 9),
    ) {
        let g = grid_2d(8);
        let field = affine(&g, offset, gx, 0.2);
        let rhs = GridFunction::constant(g.clone(), f);
        let data = GridFunction::from_fn(g.clone(), |x| x[0] - 0.5 * x[1]).unwrap();
        let res = solve_dirichlet(&ProblemSpec::new(field.clone(), rhs.clone(), data)).unwrap();
        prop_assert!(res.converged);
        let e0 = energy(&res.solution, &field, &rhs, 1e-8).unwrap();
        let mut other = res.solution.clone();
        for (k, b) in bump.iter().enumerate() {
            let i = g.index(&[2 + (k % 3) * 2, 2 + (k / 3) * 2]);
            other.values_mut()[i] += b;
        }
        let e1 = energy(&other, &field, &rhs, 1e-8).unwrap();
        prop_assert!(e1 >= e0 - 1e-12 * e0.abs().max(1.0), "perturbed {e1} < minimum {e0}");
    }

    #[test]
    fn discrete_maximum_principle(
        offset in 1.5f64..4.0,
        gy in -0.5f64..0.5,
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
    ) {
        let g = grid_2d(10);
        let field = affine(&g, offset, 0.0, gy);
        let data = GridFunction::from_fn(g.clone(), |x| a * x[0] * x[0] + b * x[1]).unwrap();
        let (lo, hi) = (0..g.len())
            .filter(|&i| g.is_boundary(i))
            .map(|i| data.values()[i])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
        let res = solve_dirichlet(&ProblemSpec::new(field, GridFunction::zeros(g.clone()), data)).unwrap();
        prop_assert!(res.converged);
        let slack = 1e-8 * (hi - lo).abs().max(1.0);
        for &v in res.solution.values() {
            prop_assert!(v >= lo - slack && v <= hi + slack, "{v} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn pxgrid_round_trip(values in prop::collection::vec(-1e300f64..1e300, 20)) {
        let g = Grid::uniform(&[-1.0, 0.5], &[2.0, 3.0], &[4, 3]).unwrap();
        let u = GridFunction::new(g, values).unwrap();
        let back = GridFunction::read_pxgrid(u.to_pxgrid().as_bytes()).unwrap();
        prop_assert!(back.grid().same_lattice(u.grid()));
        prop_assert_eq!(back.values(), u.values());
    }

    #[test]
    fn norm_sits_on_unit_modular(scale in 1e-6f64..1e6, offset in 1.1f64..6.0) {
        let g = grid_2d(12);
        let field = affine(&g, offset, 0.3, 0.6);
        let u = GridFunction::from_fn(g, |x| scale * (x[0] - 0.3).sin() * (1.0 + x[1])).unwrap();
        let lam = luxemburg_norm(&u, &field, &NormConfig::default()).unwrap();
        let m = modular(&u, &field, lam).unwrap();
        prop_assert!((m - 1.0).abs() <= 1e-9, "modular at the norm is {m}");
    }

    #[test]
    fn norm_is_monotone(
        vals in prop::collection::vec(-5.0f64..5.0, 25),
        shrink in prop::collection::vec(0.0f64..1.0, 25),
    ) {
        let g = grid_2d(4);
        let field = affine(&g, 2.0, 1.0, -0.5);
        let v = GridFunction::new(g.clone(), vals.clone()).unwrap();
        let u = GridFunction::new(g, vals.iter().zip(&shrink).map(|(a, s)| a * s).collect()).unwrap();
        let cfg = NormConfig::default();
        let (nu, nv) = (luxemburg_norm(&u, &field, &cfg).unwrap(), luxemburg_norm(&v, &field, &cfg).unwrap());
        prop_assert!(nu <= nv * (1.0 + 1e-10), "{nu} > {nv}");
    }

    #[test]
    fn mu_grows_with_the_source(t in 1.0f64..100.0, p in 1.3f64..4.0) {
        let g = grid_2d(16);
        let field = ExponentField::constant(p).unwrap();
        let f = GridFunction::from_fn(g, |x| 1.0 + x[0] * x[1]).unwrap();
        let ball = Ball::new(vec![0.5, 0.5], 0.1).unwrap();
        let base = harnack_mu(&f, &ball, 4.0, &field).unwrap();
        let big = harnack_mu(&f.scaled(t).unwrap(), &ball, 4.0, &field).unwrap();
        prop_assert!(big >= base);
        let expect = base * t.powf(1.0 / (p - 1.0));
        prop_assert!((big - expect).abs() <= 1e-10 * expect);
    }

    #[test]
    fn pointwise_operator_matches_flux_divergence(
        x0 in -0.5f64..0.5,
        x1 in -0.5f64..0.5,
        mu in 0.5f64..3.0,
        gx in -0.5f64..0.5,
    ) {
        let field = ExponentField::new(
            Profile::Affine { offset: 2.5, gradient: vec![gx, 0.25] }, 1.1, 10.0,
        ).unwrap();
        let w = Gaussian { center: vec![0.1, -0.2], scale: 1.0, rate: mu };
        let x = [x0, x1];
        prop_assume!(norm(&w.gradient(&x)) > 1e-3);
        let flux = |y: &[f64]| -> Vec<f64> {
            let gr = w.gradient(y);
            let m = norm(&gr).powf(field.value(y) - 2.0);
            gr.iter().map(|c| m * c).collect()
        };
        let h = 1e-5;
        let mut div = 0.0;
        for k in 0..2 {
            let mut a = x;
            let mut b = x;
            a[k] += h;
            b[k] -= h;
            div += (flux(&a)[k] - flux(&b)[k]) / (2.0 * h);
        }
        let exact = p_laplacian_pointwise(&w, &field, &x, 0.0).unwrap();
        prop_assert!((exact - div).abs() <= 1e-5 * div.abs().max(1.0), "{exact} vs {div}");
    }
}

#[test]
fn energy_trace_never_increases() {
    let g = grid_2d(12);
    let field = affine(&g, 1.4, 0.5, 0.5);
    let rhs = GridFunction::from_fn(g.clone(), |x| (6.0 * x[0]).cos()).unwrap();
    let mut spec = ProblemSpec::new(field, rhs, GridFunction::zeros(g));
    spec.continuation_from = Some(1e-2);
    let res = solve_dirichlet(&spec).unwrap();
    assert!(res.converged, "residual {:e} after {} iterations", res.residual, res.iterations);
    assert!(res.energy_trace.windows(2).all(|w| w[1] <= w[0]), "{:?}", res.energy_trace);
}

#[test]
fn pxgrid_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::uniform(&[0.0, -2.0, 1.0], &[1.0, 2.0, 1.5], &[3, 4, 2]).unwrap();
    let u = GridFunction::from_fn(g, |x| x[0] * 1e-7 - x[1] / 3.0 + x[2].exp()).unwrap();
    let path = dir.path().join("u.pxgrid");
    u.save(&path).unwrap();
    let back = GridFunction::load(&path).unwrap();
    assert!(back.grid().same_lattice(u.grid()));
    assert_eq!(back.values(), u.values());
    assert!(GridFunction::load(dir.path().join("missing.pxgrid")).is_err());
}
