use approx::assert_relative_eq;
use gordonvar::valuation::{
    ComparisonConfig, ComparisonRegime, EngineConfig, ForecastContext, PricingEngine, SeriesConfig,
    SimulationConfig,
};
use gordonvar::var::{companion, VarModel};
use gordonvar::{Error, Layout, PricingEngine32, VarModel32};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const K: f64 = 0.1;
const G: f64 = 0.05;

fn deterministic(k: f64, g: f64) -> VarModel<f64> {
    VarModel::new(
        DVector::from_vec(vec![(1.0 + k).ln(), (1.0 + g).ln()]),
        vec![DMatrix::zeros(2, 2)],
        DMatrix::zeros(2, 2),
        Layout::new(1, 0),
    )
    .unwrap()
}

fn deterministic_ctx(k: f64, g: f64, price: f64) -> ForecastContext<f64> {
    ForecastContext::new(
        DVector::from_vec(vec![(1.0 + k).ln(), (1.0 + g).ln()]),
        DVector::from_vec(vec![0.0]),
        Some(DVector::from_vec(vec![price])),
        None,
    )
    .unwrap()
}

fn engine(model: VarModel<f64>) -> PricingEngine<f64> {
    PricingEngine::new(model, &EngineConfig::default()).unwrap()
}

/// `[k̃, g̃]` with persistence and correlated noise.
fn noisy_one_company() -> (VarModel<f64>, ForecastContext<f64>) {
    let a = DMatrix::from_row_slice(2, 2, &[0.4, 0.1, 0.05, 0.3]);
    let mu = DVector::from_vec(vec![0.09, 0.03]);
    let nu = (DMatrix::identity(2, 2) - &a) * mu;
    let sigma = DMatrix::from_row_slice(2, 2, &[0.0016, 0.0004, 0.0004, 0.0009]);
    let model = VarModel::new(nu, vec![a], sigma, Layout::new(1, 0)).unwrap();
    let ctx = ForecastContext::new(
        DVector::from_vec(vec![0.1, 0.02]),
        DVector::from_vec(vec![0.5f64.ln()]),
        Some(DVector::from_vec(vec![9.0])),
        None,
    )
    .unwrap();
    (model, ctx)
}

/// Two companies, one factor, two lags.
fn two_company_var2() -> (VarModel<f64>, ForecastContext<f64>) {
    let a1 = DMatrix::from_row_slice(
        5,
        5,
        &[
            0.3, 0.05, 0.0, 0.0, 0.04, //
            0.0, 0.25, 0.0, 0.02, 0.03, //
            0.0, 0.0, 0.2, 0.0, 0.02, //
            0.03, 0.0, 0.0, 0.15, 0.01, //
            0.0, 0.0, 0.0, 0.0, 0.6,
        ],
    );
    let a2 = DMatrix::from_diagonal(&DVector::from_vec(vec![0.1, 0.05, 0.05, 0.0, -0.1]));
    let mu = DVector::from_vec(vec![0.08, 0.085, 0.03, 0.02, 0.0]);
    let nu = (DMatrix::identity(5, 5) - &a1 - &a2) * mu;
    let l = DMatrix::from_row_slice(
        5,
        5,
        &[
            0.04, 0.0, 0.0, 0.0, 0.0, //
            0.01, 0.03, 0.0, 0.0, 0.0, //
            0.005, 0.0, 0.03, 0.0, 0.0, //
            0.0, 0.004, 0.002, 0.025, 0.0, //
            0.01, 0.01, 0.0, 0.0, 0.08,
        ],
    );
    let model = VarModel::new(nu, vec![a1, a2], &l * l.transpose(), Layout::new(2, 1)).unwrap();
    let ctx = ForecastContext::new(
        DVector::from_vec(vec![0.09, 0.07, 0.035, 0.025, 0.05, 0.08, 0.09, 0.03, 0.02, -0.02]),
        DVector::from_vec(vec![0.0, 1.5f64.ln()]),
        Some(DVector::from_vec(vec![15.0, 25.0])),
        None,
    )
    .unwrap();
    (model, ctx)
}

#[test]
fn gordon_price_and_second_moment() {
    let e = engine(deterministic(K, G));
    let ctx = deterministic_ctx(K, G, 21.0).without_prices();
    let cfg = SeriesConfig {
        tol: 1e-13,
        ..SeriesConfig::default()
    };
    let res = e.value(&ctx, &cfg, true).unwrap();
    let gordon = (1.0 + G) / (K - G);
    assert_relative_eq!(res.price[0], gordon, max_relative = 1e-12);
    let sm = res.second_moment.unwrap()[0][0].unwrap();
    assert_relative_eq!(sm, gordon * gordon, max_relative = 1e-11);
    assert!(res.truncation_error_bound[0] > 0.0);
    assert!(res.truncation_error_bound[0] <= 1e-13 * res.price[0]);
}

#[test]
fn gordon_limit_as_noise_vanishes() {
    let gordon = (1.0 + G) / (K - G);
    for scale in [1e-6, 1e-8, 1e-10] {
        let model = deterministic(K, G).with_sigma(DMatrix::identity(2, 2) * scale).unwrap();
        let e = engine(model);
        let cfg = SeriesConfig {
            tol: 1e-13,
            ..SeriesConfig::default()
        };
        let p = e.theoretical_price(&deterministic_ctx(K, G, 21.0), &cfg).unwrap().price[0];
        // Noise of variance s raises the price by O(s) relative.
        assert!((p - gordon).abs() / gordon < 1e-9 + 1e4 * scale, "scale {scale}: {p}");
    }
}

#[test]
fn nonconvergent_gordon_is_refused() {
    for (k, g) in [(0.05, 0.1), (0.07, 0.07)] {
        let e = engine(deterministic(k, g));
        let report = e.check_convergence().unwrap();
        assert!(!report.first_ok[0]);
        let err = e
            .theoretical_price(&deterministic_ctx(k, g, 21.0), &SeriesConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::NotConvergent { company: 0, .. }), "{err}");
    }
    let e = engine(deterministic(K, G));
    let report = e.check_convergence().unwrap();
    assert_relative_eq!(report.first_moment_lhs[0], (1.05f64 / 1.1).ln(), epsilon = 1e-15);
    assert!(report.all_first_ok());
}

#[test]
fn divergent_series_without_gate_hits_tail_cap() {
    let e = engine(deterministic(0.05, 0.1));
    let cfg = SeriesConfig {
        skip_gate: true,
        max_terms: 500,
        ..SeriesConfig::default()
    };
    let err = e.theoretical_price(&deterministic_ctx(0.05, 0.1, 1.0), &cfg).unwrap_err();
    assert!(matches!(err, Error::TailBoundNotReached { .. }));
}

#[test]
fn noisy_gate_adds_variance() {
    // A = 0, Σ = σ² I: J_gk Γ(0) J_gk' = 2σ², Γ = 0, so the gate is gap + σ².
    let s2 = 0.01;
    let model = deterministic(K, G).with_sigma(DMatrix::identity(2, 2) * s2).unwrap();
    let report = engine(model).check_convergence().unwrap();
    let gap = (1.05f64).ln() - (1.1f64).ln();
    assert_relative_eq!(report.first_moment_lhs[0], gap + s2, epsilon = 1e-14);
    assert_relative_eq!(report.second_moment_lhs[(0, 0)], gap + 2.0 * s2, epsilon = 1e-14);
}

#[test]
fn unstable_models_are_refused() {
    let model = VarModel::new(
        DVector::zeros(2),
        vec![DMatrix::identity(2, 2)],
        DMatrix::identity(2, 2) * 1e-4,
        Layout::new(1, 0),
    )
    .unwrap();
    let e = engine(model);
    assert!(!e.spectral().stable);
    assert!(matches!(e.check_convergence(), Err(Error::UnstableModel { .. })));
    let ctx = deterministic_ctx(K, G, 21.0);
    assert!(matches!(
        e.theoretical_price(&ctx, &SeriesConfig::default()),
        Err(Error::UnstableModel { .. })
    ));
    // Finite-horizon quantities stay defined.
    assert!(e.price_forecast(&ctx, 3).is_ok());
}

#[test]
fn deterministic_forecast_matches_recursion() {
    let e = engine(deterministic(K, G));
    let ctx = deterministic_ctx(K, G, 21.0);
    let f = e.price_forecast(&ctx, 1).unwrap();
    assert_relative_eq!(f.forecast[0], 22.05, epsilon = 1e-12);

    // Off-equilibrium price, several horizons, against the one-step rule.
    let ctx = deterministic_ctx(K, G, 30.0);
    for r in [1, 2, 5, 17] {
        let f = e.price_forecast(&ctx, r).unwrap().forecast[0];
        let (mut p, mut d) = (30.0, 1.0);
        for _ in 0..r {
            d *= 1.0 + G;
            p = (1.0 + K) * p - d;
        }
        assert_relative_eq!(f, p, max_relative = 1e-12);
    }
    assert!(matches!(e.price_forecast(&ctx, 0), Err(Error::HorizonZero)));
    assert!(matches!(e.price_forecast(&ctx.without_prices(), 1), Err(Error::MissingPrices)));
}

#[test]
fn zero_noise_forecast_follows_mean_path() {
    let (model, ctx) = two_company_var2();
    let model = model.with_sigma(DMatrix::zeros(5, 5)).unwrap();
    let e = engine(model);
    for r in [1, 3, 10] {
        let f = e.price_forecast(&ctx, r).unwrap().forecast;
        let path = e.mean_path(&ctx, r).unwrap();
        let p = e.prices_along_path(&ctx, &path).unwrap();
        assert!((f - p).amax() < 1e-10);
    }
}

#[test]
fn zero_noise_simulation_is_deterministic_value() {
    let (model, ctx) = two_company_var2();
    let e = engine(model.with_sigma(DMatrix::zeros(5, 5)).unwrap());
    let cfg = SimulationConfig {
        horizon: 6,
        n_paths: 50,
        seed: 3,
        keep_paths: true,
    };
    let sim = e.simulate_prices(&ctx, &cfg).unwrap();
    let expected = e.prices_along_path(&ctx, &e.mean_path(&ctx, 6).unwrap()).unwrap();
    for p in 0..50 {
        for i in 0..2 {
            assert_relative_eq!(sim.terminal[(p, i)], expected[i], max_relative = 1e-13);
        }
    }
    assert_eq!(sim.paths.as_ref().unwrap().len(), 50);
    assert_eq!(sim.negativity_fraction, 0.0);
}

#[test]
fn simulation_is_reproducible_and_prefix_stable() {
    let (model, ctx) = noisy_one_company();
    let e = engine(model);
    let cfg = SimulationConfig {
        horizon: 5,
        n_paths: 300,
        seed: 11,
        keep_paths: false,
    };
    let a = e.simulate_prices(&ctx, &cfg).unwrap();
    let b = e.simulate_prices(&ctx, &cfg).unwrap();
    assert_eq!(a, b);
    // More paths never reshuffle the earlier ones.
    let more = e.simulate_prices(&ctx, &SimulationConfig { n_paths: 500, ..cfg }).unwrap();
    assert_eq!(a.terminal.rows(0, 300), more.terminal.rows(0, 300));
    let other = e.simulate_prices(&ctx, &SimulationConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a.terminal, other.terminal);
}

#[test]
fn forecast_matches_simulated_mean() {
    let (model, ctx) = two_company_var2();
    let e = engine(model);
    for r in [1, 6] {
        let f = e.price_forecast(&ctx, r).unwrap().forecast;
        let sim = e
            .simulate_prices(
                &ctx,
                &SimulationConfig {
                    horizon: r,
                    n_paths: 100_000,
                    seed: 99,
                    keep_paths: false,
                },
            )
            .unwrap();
        for i in 0..2 {
            let z = (sim.mean[i] - f[i]).abs() / sim.std_error[i];
            assert!(z < 3.0, "r = {r}, company {i}: z = {z}");
        }
    }
}

#[test]
fn trace_terms_are_positive_and_sum_to_price() {
    let (model, ctx) = two_company_var2();
    let e = engine(model);
    let cfg = SeriesConfig {
        keep_trace: true,
        ..SeriesConfig::default()
    };
    let res = e.theoretical_price(&ctx, &cfg).unwrap();
    let trace = res.trace.unwrap();
    for i in 0..2 {
        assert_eq!(trace[i].len(), res.terms_used[i]);
        assert!(trace[i].iter().all(|&t| t > 0.0));
        let s: f64 = trace[i].iter().sum();
        assert_relative_eq!(s, res.price[i], max_relative = 1e-12);
    }
}

#[test]
fn cross_moment_is_symmetric_and_bounded() {
    let (model, ctx) = two_company_var2();
    let e = engine(model);
    let cfg = SeriesConfig::default();
    let price = e.theoretical_price(&ctx, &cfg).unwrap().price;
    let sm = e.second_moments(&ctx, &cfg).unwrap();
    let v = |a: usize, b: usize| sm[a][b].unwrap();
    assert_eq!(v(0, 1), v(1, 0));
    for i in 0..2 {
        assert!(price[i] * price[i] <= v(i, i) * (1.0 + 1e-9));
    }
    assert!(v(0, 1) * v(0, 1) <= v(0, 0) * v(1, 1) * (1.0 + 1e-9));
    let direct = e.mixed_moment(&ctx, 1, 0, &cfg).unwrap();
    assert_relative_eq!(direct.value, v(0, 1), max_relative = 1e-9);
}

#[test]
fn phi_sum_identity() {
    let (model, _) = two_company_var2();
    let comp = companion(&model);
    let dim = comp.dim();
    let id = DMatrix::<f64>::identity(dim, dim);
    let inv = (&id - &comp.a_star).try_inverse().unwrap();
    for r in [1usize, 4, 12, 40] {
        let mut sum = DMatrix::zeros(model.n(), model.n());
        for q in 1..=r {
            sum += comp.phi(q);
        }
        let mut pow = id.clone();
        for _ in 0..r {
            pow = &pow * &comp.a_star;
        }
        let closed = &comp.j_selector * (&comp.a_star * &inv * (&id - pow)) * comp.j_selector.transpose();
        assert!((sum - closed).amax() < 1e-10, "r = {r}");
    }
}

#[test]
fn irf_is_zero_without_persistence() {
    let e = engine(deterministic(K, G));
    let irf = e.price_irf(&deterministic_ctx(K, G, 21.0), 1).unwrap();
    assert!(irf.matrix.amax() == 0.0);
}

#[test]
fn per_path_irf_equals_mean_path_irf_on_mean_path() {
    let (model, ctx) = two_company_var2();
    let e = engine(model);
    let path = e.mean_path(&ctx, 7).unwrap();
    assert_eq!(e.price_irf(&ctx, 7).unwrap(), e.price_irf_along(&ctx, &path).unwrap());
}

#[test]
fn representation_equivalence_at_zero_noise() {
    // Start at the theoretical price; the shifted series and the
    // price-anchored recursion must agree at every horizon.
    let (model, ctx) = two_company_var2();
    let e = engine(model.with_sigma(DMatrix::zeros(5, 5)).unwrap());
    let cfg = SeriesConfig {
        tol: 1e-14,
        ..SeriesConfig::default()
    };
    let f_ctx = ctx.without_prices();
    let p0 = e.theoretical_price(&f_ctx, &cfg).unwrap().price;
    let g_ctx = ctx.with_prices(p0.clone()).unwrap();
    let cmp = e
        .forecast_comparison(
            &g_ctx,
            &ComparisonConfig {
                horizon: 5,
                n_paths: 4,
                seed: 0,
                regime: ComparisonRegime::Observed,
                series: cfg,
            },
        )
        .unwrap();
    let anchored = e.price_forecast(&g_ctx, 5).unwrap().forecast;
    for i in 0..2 {
        assert_relative_eq!(cmp.series_forecast[i], anchored[i], max_relative = 1e-11);
        assert!(cmp.mse_f[i] < 1e-18 * anchored[i].powi(2));
        assert!(cmp.mse_g[i] < 1e-18 * anchored[i].powi(2));
    }

    // Truncation residual of the origin series decays geometrically.
    let trace = e
        .theoretical_price(
            &f_ctx,
            &SeriesConfig {
                keep_trace: true,
                ..cfg
            },
        )
        .unwrap()
        .trace
        .unwrap();
    for (i, terms) in trace.iter().enumerate() {
        let mut tail: Vec<f64> = terms.iter().rev().scan(0.0, |s, t| {
            *s += t;
            Some(*s)
        }).collect();
        tail.reverse();
        let ratios: Vec<f64> = tail.windows(2).skip(20).map(|w| w[1] / w[0]).collect();
        let last = *ratios.last().unwrap();
        assert!(ratios.iter().all(|&r| r < 1.0), "company {i}");
        assert!(last < 0.99);
    }
}

#[test]
fn nested_comparison_orders_mse() {
    let (model, ctx) = noisy_one_company();
    let e = engine(model);
    let cfg = ComparisonConfig {
        horizon: 3,
        n_paths: 20_000,
        seed: 5,
        regime: ComparisonRegime::Nested,
        series: SeriesConfig::default(),
    };
    let rep = e.forecast_comparison(&ctx, &cfg).unwrap();
    assert!(rep.dominance_holds(3.0), "{rep:?}");
    assert!(rep.mse_g[0] < rep.mse_f[0]);
    let observed = e
        .forecast_comparison(
            &ctx,
            &ComparisonConfig {
                regime: ComparisonRegime::Observed,
                ..cfg
            },
        )
        .unwrap();
    assert!(observed.mse_g[0] <= observed.mse_f[0] + 3.0 * observed.mse_diff_se[0]);
    assert_eq!(observed.origin_terms, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gate_is_monotone_in_innovation_variance(
        a in prop::collection::vec(-0.4f64..0.4, 9),
        diag in prop::collection::vec(1e-4f64..1e-2, 3),
        bump in 1e-4f64..1e-2,
        which in 0usize..3,
    ) {
        let a = DMatrix::from_row_slice(3, 3, &a) * 0.6;
        let base = DMatrix::from_diagonal(&DVector::from_vec(diag));
        let nu = DVector::from_vec(vec![0.05, 0.02, 0.0]);
        let model = VarModel::new(nu, vec![a], base.clone(), Layout::new(1, 1)).unwrap();
        let Ok(e0) = PricingEngine::new(model.clone(), &EngineConfig::default()) else { return Ok(()); };
        let Ok(r0) = e0.check_convergence() else { return Ok(()); };
        let mut bumped = base;
        bumped[(which, which)] += bump;
        let e1 = PricingEngine::new(model.with_sigma(bumped).unwrap(), &EngineConfig::default()).unwrap();
        let r1 = e1.check_convergence().unwrap();
        prop_assert!(r1.first_moment_lhs[0] >= r0.first_moment_lhs[0] - 1e-15);
    }

    #[test]
    fn jensen_and_cauchy_schwarz(
        a in prop::collection::vec(-0.3f64..0.3, 25),
        noise in 0.005f64..0.03,
    ) {
        let a = DMatrix::from_row_slice(5, 5, &a);
        let mu = DVector::from_vec(vec![0.1, 0.09, 0.02, 0.03, 0.0]);
        let nu = (DMatrix::identity(5, 5) - &a) * mu;
        let sigma = DMatrix::from_fn(5, 5, |r, c| if r == c { noise * noise } else { 0.2 * noise * noise });
        let model = VarModel::new(nu, vec![a], sigma, Layout::new(2, 1)).unwrap();
        let Ok(e) = PricingEngine::new(model, &EngineConfig::default()) else { return Ok(()); };
        let Ok(report) = e.check_convergence() else { return Ok(()); };
        prop_assume!(report.second_ok[0][0] && report.second_ok[1][1]);
        let ctx = ForecastContext::new(
            DVector::from_vec(vec![0.1, 0.08, 0.03, 0.03, 0.01]),
            DVector::zeros(2),
            None,
            None,
        ).unwrap();
        let cfg = SeriesConfig::default();
        let price = e.theoretical_price(&ctx, &cfg).unwrap().price;
        let v = |i, j| e.mixed_moment(&ctx, i, j, &cfg).unwrap().value;
        let (m00, m11, m01) = (v(0, 0), v(1, 1), v(0, 1));
        prop_assert!(price[0] * price[0] <= m00 * (1.0 + 1e-9));
        prop_assert!(price[1] * price[1] <= m11 * (1.0 + 1e-9));
        prop_assert!(m01 * m01 <= m00 * m11 * (1.0 + 1e-9));
    }
}

#[test]
fn single_precision_engine_prices_gordon() {
    let model = VarModel32::new(
        DVector::from_vec(vec![1.1f32.ln(), 1.05f32.ln()]),
        vec![DMatrix::zeros(2, 2)],
        DMatrix::zeros(2, 2),
        Layout::new(1, 0),
    )
    .unwrap();
    let e = PricingEngine32::new(model, &EngineConfig::default()).unwrap();
    let ctx = ForecastContext::new(
        DVector::from_vec(vec![1.1f32.ln(), 1.05f32.ln()]),
        DVector::from_vec(vec![0.0f32]),
        Some(DVector::from_vec(vec![21.0f32])),
        None,
    )
    .unwrap();
    let cfg = SeriesConfig {
        tol: 1e-6,
        ..SeriesConfig::default()
    };
    let p = e.theoretical_price(&ctx, &cfg).unwrap().price[0];
    assert!((p - 21.0).abs() / 21.0 < 1e-4, "{p}");
    let f = e.price_forecast(&ctx, 1).unwrap().forecast[0];
    assert!((f - 22.05).abs() < 1e-3);
}
