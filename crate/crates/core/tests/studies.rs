//! Small seeded simulation studies and cross-module checks.

use statforge::estimation::{exponential_asymptotic_ks, monte_carlo_mean_with};
use statforge::exec;
use statforge::glm::{gaussian_design, irt_ability_study, standard_item_bank, wald_coverage_study, GlmFamily};
use statforge::hypothesis::{anova_null_ks, rejection_study, SizeTest};
use statforge::io::{read_points, write_brownian_csv};
use statforge::stochastic::{
    brownian_sample, euler_gap_study, feynman_kac_mc, gbm_sample, GbmMethod, TimeGrid,
};
use statforge::{stats, RandomStream};

fn within(x: f64, target: f64, se: f64, k: f64) -> bool {
    (x - target).abs() <= k * se
}

#[test]
fn score_variance_matches_item_information() {
    let bank = standard_item_bank(30).unwrap();
    let s = irt_ability_study(&bank, 0.5, 4000, &RandomStream::new(3)).unwrap();
    assert!(within(s.score_variance, s.information, s.score_variance_se, 4.0), "{s:?}");
    assert!(s.within_three_se > 0.97);
}

#[test]
fn tests_hold_their_size_and_gain_power() {
    let root = RandomStream::new(5);
    for (i, t) in [SizeTest::ZMean, SizeTest::TMean, SizeTest::FVariances, SizeTest::Anova].into_iter().enumerate() {
        let size = rejection_study(t, 12, 0.05, 0.0, 20_000, &root.split(i as u64)).unwrap();
        assert!(within(size.rejection_rate, 0.05, size.std_error.max(0.0015), 4.0), "{size:?}");
        let power = rejection_study(t, 12, 0.05, 1.5, 4000, &root.split(10 + i as u64)).unwrap();
        assert!(power.rejection_rate > 0.2, "{power:?}");
    }
    assert!(anova_null_ks(3, 6, 5000, &root.split(99)).unwrap() < 0.03);
}

#[test]
fn brownian_covariance_is_min_of_times() {
    let g = TimeGrid::new(vec![0.0, 0.3, 1.0, 1.6]).unwrap();
    let paths = exec::replicate(&RandomStream::new(8), 40_000, |_, s| brownian_sample(&g, 1, s).unwrap());
    let col = |j: usize| paths.iter().map(|p| p.value(j, 0)).collect::<Vec<_>>();
    for (a, b) in [(1, 2), (1, 3), (2, 3), (3, 3)] {
        let c = stats::covariance(&col(a), &col(b));
        let t = g.times()[a].min(g.times()[b]);
        assert!((c - t).abs() < 0.05 * (1.0 + t), "cov({a},{b}) = {c}, want {t}");
    }
}

#[test]
fn gbm_mean_and_euler_gap() {
    let (mu, sigma, s0) = (0.4, 0.3, 2.0);
    let g = TimeGrid::uniform(1.0, 8).unwrap();
    let ends = exec::replicate(&RandomStream::new(13), 40_000, |_, s| {
        *gbm_sample(mu, sigma, s0, &g, s, GbmMethod::Exact).unwrap().values.last().unwrap()
    });
    assert!(within(stats::mean(&ends), s0 * mu.exp(), stats::std_error(&ends), 4.0));

    let coarse = euler_gap_study(mu, sigma, s0, 1.0, 4, 20_000, &RandomStream::new(14)).unwrap();
    let fine = euler_gap_study(mu, sigma, s0, 1.0, 64, 20_000, &RandomStream::new(14)).unwrap();
    assert!(coarse.mean_gap < 0.0);
    assert!(fine.mean_gap.abs() < 0.25 * coarse.mean_gap.abs(), "{coarse:?} {fine:?}");
}

#[test]
fn exponential_mle_is_asymptotically_normal() {
    assert!(exponential_asymptotic_ks(2.0, 400, 4000, &RandomStream::new(21)).unwrap() < 0.04);
}

#[test]
fn poisson_wald_intervals_cover() {
    let x = gaussian_design(300, 2, &RandomStream::new(30)).unwrap();
    let w = wald_coverage_study(&GlmFamily::PoissonLog, &x, &[0.5, 0.3, -0.2], 0.05, 2000, &RandomStream::new(31)).unwrap();
    for (c, se) in w.coverage.iter().zip(&w.coverage_se) {
        assert!(within(*c, 0.95, *se, 4.0), "{w:?}");
    }
}

#[test]
fn zero_potential_is_plain_monte_carlo() {
    let f = |x: &[f64]| (-x[0] * x[0]).exp();
    let root = RandomStream::new(40);
    let fk = feynman_kac_mc(|_: &[f64]| 0.0, f, 0.5, &[0.2], 5000, 20, &root).unwrap();
    let mc = monte_carlo_mean_with(
        |s: &mut RandomStream| statforge::stochastic::brownian_endpoint(&[0.2], 0.5, 20, s),
        f,
        5000,
        0.05,
        None,
        &root,
    )
    .unwrap();
    assert_eq!(fk.estimate, mc.estimate);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let run = || irt_ability_study(&standard_item_bank(10).unwrap(), -0.3, 500, &RandomStream::new(50)).unwrap();
    let one = exec::with_workers(1, run);
    let four = exec::with_workers(4, run);
    assert_eq!(one, four);
}

#[test]
fn brownian_csv_round_trips() {
    let g = TimeGrid::uniform(1.0, 50).unwrap();
    let b = brownian_sample(&g, 2, &mut RandomStream::new(60)).unwrap();
    let file = tempfile::NamedTempFile::new().unwrap();
    write_brownian_csv(&b, std::fs::File::create(file.path()).unwrap()).unwrap();
    let m = read_points(std::fs::File::open(file.path()).unwrap()).unwrap();
    assert_eq!((m.nrows(), m.ncols()), (51, 3));
    for j in 0..=50 {
        assert_eq!(m[(j, 1)], b.value(j, 0));
        assert_eq!(m[(j, 2)], b.value(j, 1));
    }
}
