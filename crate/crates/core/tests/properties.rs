use std::f64::consts::PI;

use mildcone::config::{ConfigDocument, PAPER_EXAMPLE};
use mildcone::eigensolver::{solve, InitialGuess, SolverConfig};
use mildcone::expr::{Bindings, Expression, Var};
use mildcone::lattice::{
    clamp_to_cone, is_in_cone, norm_c, order_leq, rescale_to_norm, trajectory_cone_status, ConeStatus, ConeTolerance,
    GridFunction, Trajectory,
};
use mildcone::mild::{duhamel, Quadrature};
use mildcone::output::{read_trajectory_csv, write_trajectory_csv};
use mildcone::problem::presets::{heat_example, linear_average};
use mildcone::problem::random_sphere_trajectory;
use mildcone::semigroup::SemigroupHandle;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N: usize = 31;

fn gf(values: Vec<f64>) -> GridFunction {
    GridFunction::new(PI, values).unwrap()
}

fn nonneg(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![3 => 0.0..5.0f64, 1 => Just(0.0)], n)
}

fn signed(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn clamp_is_idempotent_and_lands_in_cone(v in signed(N)) {
        let tol = ConeTolerance::new(10.0, 10.0).unwrap();
        let once = clamp_to_cone(&gf(v), tol).unwrap();
        prop_assert_eq!(is_in_cone(&once, ConeTolerance::EXACT), ConeStatus::Inside);
        prop_assert_eq!(clamp_to_cone(&once, tol).unwrap(), once);
    }

    #[test]
    fn order_is_transitive(a in nonneg(N), b in nonneg(N), c in nonneg(N)) {
        let u = gf(a);
        let v = u.add(&gf(b)).unwrap();
        let w = v.add(&gf(c)).unwrap();
        let exact = ConeTolerance::EXACT;
        prop_assert!(order_leq(&u, &u, exact).unwrap());
        prop_assert!(order_leq(&u, &v, exact).unwrap() && order_leq(&v, &w, exact).unwrap());
        prop_assert!(order_leq(&u, &w, exact).unwrap());
    }

    #[test]
    fn rescaling_pins_the_norm(data in prop::collection::vec(nonneg(N), 2..6), rho in 1e-3..1e3f64) {
        let y = Trajectory::new(data.into_iter().map(gf).collect()).unwrap();
        match rescale_to_norm(&y, rho) {
            Some(z) => {
                prop_assert!((norm_c(&z) - rho).abs() <= 1e-12 * rho);
                prop_assert_eq!(trajectory_cone_status(&z, ConeTolerance::EXACT), ConeStatus::Inside);
            }
            None => prop_assert_eq!(norm_c(&y), 0.0),
        }
    }

    #[test]
    fn spectral_semigroup_is_positive_and_composes(v in nonneg(63), t in 0.01..1.0f64, s in 0.0..1.0f64) {
        let u = SemigroupHandle::spectral_heat(PI, 63).unwrap();
        let v = GridFunction::new(PI, v).unwrap();
        let scale = mildcone::norm_sup(&v).max(1.0);
        let w = u.apply(t, &v).unwrap();
        prop_assert!(w.min_value() >= -1e-10 * scale);
        let direct = u.apply(t + s, &v).unwrap();
        let composed = u.apply(t, &u.apply(s, &v).unwrap()).unwrap();
        prop_assert!(mildcone::norm_sup(&direct.sub(&composed).unwrap()) <= 1e-10 * scale);
    }

    #[test]
    fn recurrence_matches_direct(data in nonneg(N * 17), simpson in any::<bool>()) {
        let u = SemigroupHandle::spectral_heat(PI, N).unwrap();
        let samples: Vec<GridFunction> = data.chunks_exact(N).map(|c| gf(c.to_vec())).collect();
        let (rec, direct) = if simpson {
            (Quadrature::SimpsonRecurrence, Quadrature::SimpsonDirect)
        } else {
            (Quadrature::TrapezoidRecurrence, Quadrature::TrapezoidDirect)
        };
        let a = duhamel(&u, &samples, 16, rec).unwrap();
        let b = duhamel(&u, &samples, 16, direct).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(mildcone::norm_sup(&x.sub(y).unwrap()) <= 1e-12 * mildcone::norm_sup(y).max(1.0));
        }
    }

    #[test]
    fn source_and_initial_operators_map_cone_to_cone(seed in any::<u64>(), rho in 0.05..2.0f64) {
        let p = heat_example(N, 16, 1.0).unwrap().with_rho(rho).unwrap();
        let y = random_sphere_trajectory(&p.grid, rho, &mut ChaCha8Rng::seed_from_u64(seed));
        for (j, v) in y.nodes().iter().enumerate() {
            let f = p.eval_f(y.t(j), v).unwrap();
            prop_assert_eq!(is_in_cone(&f, ConeTolerance::EXACT), ConeStatus::Inside);
        }
        let b = p.eval_b(&y).unwrap();
        prop_assert_eq!(is_in_cone(&b, ConeTolerance::EXACT), ConeStatus::Inside);
        // the exponential integral of a nonnegative series is at least 1
        prop_assert!(b.sub(&p.grid.profile(f64::sin).unwrap()).unwrap().min_value() >= -1e-15);
    }

    #[test]
    fn h4_is_monotone_in_its_data(d in nonneg(N), e in nonneg(N), extra_d in nonneg(N), extra_e in nonneg(N), j0 in 1..=16usize) {
        let mut p = heat_example(N, 16, 1.0).unwrap();
        p.certificate.t0_index = j0;
        p.certificate.delta_rho = Trajectory::constant(&gf(d.clone()), 16);
        p.certificate.eta_rho = gf(e.clone());
        let small = p.compute_h4().unwrap();
        p.certificate.delta_rho = Trajectory::constant(&gf(d).add(&gf(extra_d)).unwrap(), 16);
        p.certificate.eta_rho = gf(e).add(&gf(extra_e)).unwrap();
        let big = p.compute_h4().unwrap();
        prop_assert!(big >= small * (1.0 - 1e-12));
    }

    #[test]
    fn trajectory_csv_round_trips(data in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 5), 2..5)) {
        let y = Trajectory::new(data.into_iter().map(gf).collect()).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &y).unwrap();
        prop_assert_eq!(read_trajectory_csv(buf.as_slice(), PI).unwrap(), y);
    }

    #[test]
    fn printed_expressions_evaluate_identically(a in -10.0..10.0f64, b in 0.1..10.0f64, t in 0.0..1.0f64, x in 0.0..3.0f64, u in 0.0..2.0f64) {
        let src = format!("{a}*t*x^2 - sin(u)/({b}) + exp(-x)*sqrt(abs(u - t))");
        let vars = [Var::T, Var::X, Var::U];
        let e = Expression::parse(&src, &vars).unwrap();
        let again = Expression::parse(&e.to_string(), &vars).unwrap();
        prop_assert_eq!(&again, &e);
        let at = Bindings { t, x, u };
        prop_assert_eq!(e.eval(at).unwrap().to_bits(), again.eval(at).unwrap().to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn converged_certificates_are_lambda_consistent(seed in any::<u64>(), rho in 0.05..1.5f64) {
        let p = heat_example(15, 16, rho).unwrap();
        let cfg = SolverConfig {
            initial_guess: InitialGuess::RandomCone { seed },
            hypothesis_samples: 0,
            ..SolverConfig::default()
        };
        let cert = solve(&p, &cfg).unwrap();
        prop_assert!(cert.converged);
        let tn = norm_c(&p.apply_t(&cert.y).unwrap());
        prop_assert!((cert.lambda * tn - rho).abs() <= 1e-10 * rho);
    }

    #[test]
    fn linear_problem_is_scale_covariant(rho in 0.01..10.0f64) {
        let cfg = SolverConfig { hypothesis_samples: 0, ..SolverConfig::default() };
        let a = solve(&linear_average(15, 16, rho).unwrap(), &cfg).unwrap();
        let b = solve(&linear_average(15, 16, 2.0 * rho).unwrap(), &cfg).unwrap();
        prop_assert!((a.lambda - b.lambda).abs() <= 1e-8 * a.lambda);
        prop_assert!(norm_c(&b.y.sub(&a.y.scale(2.0)).unwrap()) <= 1e-8 * 2.0 * rho);
    }
}

#[test]
fn config_loading_is_deterministic() {
    let text = r#"{"preset": "paper-example", "domain": {"n": 15}, "time": {"m": 16}}"#;
    let a = ConfigDocument::from_json_str(text).unwrap();
    let b = ConfigDocument::from_json_str(text).unwrap();
    assert_eq!(a, b);
    let (pa, pb) = (a.build_instance().unwrap(), b.build_instance().unwrap());
    assert_eq!(pa.compute_h4().unwrap().to_bits(), pb.compute_h4().unwrap().to_bits());
    assert_eq!(
        pa.check_hypotheses(32, 4).unwrap(),
        pb.check_hypotheses(32, 4).unwrap()
    );
    assert!(ConfigDocument::preset(PAPER_EXAMPLE).is_ok());
}
