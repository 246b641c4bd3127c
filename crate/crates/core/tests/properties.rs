use kslab::cli_io::{fmt_num, RunConfig};
use kslab::diagnostics::phi_moment;
use kslab::params::{alpha_of_gamma, check_conditions, gamma_interval, k_threshold, ModelParams};
use kslab::quadrature::GridMomentRule;
use kslab::solver::{RadialGrid, State};
use proptest::prelude::*;

fn grid() -> RadialGrid {
    RadialGrid::new(3, 1.0, 96, 3.0).unwrap()
}

fn model(n: u32, m: f64, k: f64) -> ModelParams {
    ModelParams { dim: n, radius: 1.0, m, chi0: 1.0, a: 0.0, k, total_mass: 1.0, inner_mass: 0.5, envelope: 1.0 }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn alpha_shifts_gamma_by_the_sensitivity_term(n in 3u32..=8, gamma in 0.01f64..0.99, k in 0.0f64..1.0) {
        let expect = gamma - (1.0 - 2.0 / f64::from(n)) * k;
        match alpha_of_gamma(gamma, n, k) {
            Ok(a) => prop_assert!((a - expect).abs() <= 1e-15 && a > 0.0 && a < 1.0),
            Err(_) => prop_assert!(expect <= 0.0 || expect >= 1.0),
        }
    }

    #[test]
    fn admissible_windows_give_valid_alpha(n in 3u32..=8, fm in 0.0f64..1.0, fk in 0.01f64..0.99) {
        let m = 1.0 + fm * (1.0 - 2.0 / f64::from(n));
        let k = fk * k_threshold(n, m).unwrap();
        prop_assert!(check_conditions(&model(n, m, k)).unwrap().admissible);
        let (lo, hi) = gamma_interval(n, m, k, 1e-3).unwrap();
        let alpha = alpha_of_gamma(0.5 * (lo + hi), n, k);
        prop_assert!(alpha.is_ok(), "{alpha:?}");
    }

    #[test]
    fn moment_is_monotone_under_domination(
        incs in prop::collection::vec(0.0f64..1.0, 96),
        extra in prop::collection::vec(0.0f64..1.0, 96),
        gamma in 0.05f64..0.95,
        frac in 0.05f64..1.0,
    ) {
        let g = grid();
        let mut w1 = vec![0.0];
        let mut w2 = vec![0.0];
        for (a, b) in incs.iter().zip(&extra) {
            w1.push(w1.last().unwrap() + a);
            w2.push(w2.last().unwrap() + a + b);
        }
        let s0 = frac * g.extent();
        let p1 = phi_moment(&w1, &g, gamma, s0).unwrap();
        let p2 = phi_moment(&w2, &g, gamma, s0).unwrap();
        prop_assert!(p1 >= 0.0 && p1 <= p2, "{p1} > {p2}");
    }

    #[test]
    fn moment_weights_are_positive(gamma in 0.05f64..0.95, frac in 0.01f64..1.0) {
        let g = grid();
        let rule = GridMomentRule::new(&g.s_nodes, gamma, frac * g.extent()).unwrap();
        prop_assert!(rule.weights().iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn numbers_round_trip(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let s = fmt_num(x);
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{}", s);
    }

    #[test]
    fn config_round_trip(cells in 8usize..4096, grading in 1.0f64..4.0, m in 1.0f64..1.3, t_end in 1e-6f64..10.0, seed in any::<u64>()) {
        let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/blowup.toml")).unwrap();
        let mut cfg = RunConfig::from_toml(&text).unwrap();
        cfg.grid.cells = cells;
        cfg.grid.grading = grading;
        cfg.model.m = m;
        cfg.control.t_end = t_end;
        cfg.output.seed = seed;
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml().unwrap(), cfg.to_toml().unwrap());
    }

    #[test]
    fn states_from_monotone_w_are_nonnegative(incs in prop::collection::vec(0.0f64..2.0, 96)) {
        let g = grid();
        let mut w = vec![0.0];
        for a in &incs {
            w.push(w.last().unwrap() + a);
        }
        let st = State::from_w(0.0, w, &g, 1e-12).unwrap();
        prop_assert!(st.u.iter().all(|&u| u >= 0.0));
        prop_assert!(st.v.iter().all(|&v| v >= 0.0));
    }
}
