use pathweight::manifold::CurvatureModel;
use pathweight::montecarlo::*;

fn h2() -> CurvatureModel<f64> {
    CurvatureModel::hyperbolic(2, -1.0).unwrap()
}

#[test]
fn flat_campaign_contributes_one_per_sample() {
    let c = Campaign::new(CurvatureModel::euclidean(2).unwrap(), vec![4, 16], 500, 11);
    for row in run_campaign(&c).unwrap() {
        assert!((row.mean - 1.0).abs() <= 1e-12);
        assert!(row.stderr <= 1e-12);
        assert_eq!(row.failures, 0);
        assert_eq!(row.n_effective, 500);
        assert_eq!(row.target, Some(1.0));
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let mut c = Campaign::new(h2(), vec![3, 8], 300, 5);
    c.functional = Functional::EndpointRadius;
    let one = with_workers(Some(1), || run_campaign_detailed(&c).unwrap());
    let three = with_workers(Some(3), || run_campaign_detailed(&c).unwrap());
    assert_eq!(one.rows, three.rows);
    assert_eq!(one.records, three.records);
    for (a, b) in one.rows.iter().zip(&three.rows) {
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }
}

#[test]
fn hyperbolic_campaign_is_near_target() {
    let rows = run_campaign(&Campaign::new(h2(), vec![16], 4000, 1)).unwrap();
    let r = &rows[0];
    assert!((r.target.unwrap() - 1.2404448358048137).abs() < 1e-15);
    assert!(r.z_score.unwrap().abs() < 6.0, "{r:?}");
    assert!(r.mean > 1.0);
}

#[test]
fn cutoff_removes_mass() {
    let mut c = Campaign::new(h2(), vec![8], 2000, 2);
    c.eps = 0.5;
    let cut = run_campaign(&c).unwrap()[0].mean;
    c.eps = 0.0;
    let full = run_campaign(&c).unwrap()[0].mean;
    assert!(cut < full);
    assert!(Campaign { eps: 0.5, ..c.clone() }.target().is_none());
}

#[test]
fn invalid_campaigns_are_rejected() {
    assert!(run_campaign(&Campaign::new(h2(), vec![], 10, 0)).is_err());
    assert!(run_campaign(&Campaign::new(h2(), vec![4], 0, 0)).is_err());
    let mut c = Campaign::new(h2(), vec![4], 10, 0);
    c.eps = -1.0;
    assert!(run_campaign(&c).is_err());
}

#[test]
fn energy_mgf_product_formula() {
    let r = check_energy_mgf(2, 10, 1.0, 1.0, 20_000, 4).unwrap();
    assert!((r.exact.unwrap() - 0.9f64.powi(-10)).abs() < 1e-12);
    assert!((r.exact.unwrap() - 2.86797).abs() < 1e-5);
    assert!(r.pass, "{r:?}");
}

#[test]
fn gauss_tail_examples() {
    assert_eq!(check_gauss_tail(10.0, 0.0, 2, 100_000, 1).unwrap().mean, 0.0);
    let r = check_gauss_tail(2.0, 0.0, 1, 100_000, 1).unwrap();
    assert!((r.mean - 0.0455).abs() < 4.0 * r.stderr + 1e-4, "{r:?}");
    assert!(r.pass);
    let means: Vec<f64> = [1.0, 2.0, 3.0].iter().map(|&a| check_gauss_tail(a, 0.5, 3, 20_000, 2).unwrap().mean).collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]));
    for &(a, k, d) in &[(0.5, 0.0, 1usize), (1.0, 1.0, 2), (3.0, 2.0, 4), (5.0, 0.5, 3)] {
        assert!(check_gauss_tail(a, k, d, 20_000, 3).unwrap().pass, "a={a} k={k} d={d}");
    }
}

#[test]
fn ito_trace_band() {
    let flat = check_ito_trace(&CurvatureModel::euclidean(3).unwrap(), 16, 1.0, 100, 0).unwrap();
    assert_eq!((flat.mean, flat.stderr), (1.0, 0.0));
    let r = check_ito_trace(&h2(), 64, 1.0, 20_000, 6).unwrap();
    assert!(r.pass, "{r:?}");
    let u: Vec<f64> = [16usize, 32, 64].iter().map(|&n| (2.0 * 2.0 / n as f64).exp()).collect();
    assert!(u.windows(2).all(|w| w[1] < w[0]));
    let bands: Vec<f64> = [16usize, 32]
        .iter()
        .map(|&n| check_ito_trace(&h2(), n, 1.0, 50, 0).unwrap().upper - 1.0)
        .collect();
    assert!(bands[1] < bands[0]);
}

#[test]
fn fancy_band_on_products() {
    let prod = CurvatureModel::product(vec![
        pathweight::manifold::Factor { dim: 2, k: -1.0 },
        pathweight::manifold::Factor { dim: 2, k: -0.5 },
    ])
    .unwrap();
    for m in [h2(), prod] {
        let r = check_fancy_band(&m, 16, 20_000, 8).unwrap();
        assert!(r.pass, "{r:?}");
    }
    assert_eq!(fancy_band_constant(&h2()), 4.0);
}

#[test]
fn hpe_mass_examples() {
    let big = check_hpe_mass(&h2(), 8, &[50.0], 500, 0).unwrap();
    assert_eq!(big.rows[0].mass, 0.0);
    let n = 8usize;
    let eps = 0.6f64;
    let flat = check_hpe_mass(&CurvatureModel::euclidean(2).unwrap(), n, &[eps], 40_000, 3).unwrap();
    let p = 1.0 - (1.0 - (-eps * eps * n as f64 / 2.0).exp()).powi(n as i32);
    let row = &flat.rows[0];
    assert!((row.mass - p).abs() <= 4.0 * row.stderr, "{row:?} vs {p}");
    let r = check_hpe_mass(&h2(), 16, &[0.5, 0.75, 1.0], 40_000, 9).unwrap();
    assert!(r.decreasing && r.pass, "{r:?}");
}

#[test]
fn unweighted_endpoint_means_settle() {
    let ns = [8usize, 16, 32, 64];
    let stats: Vec<(f64, f64)> = ns
        .iter()
        .map(|&n| unweighted_mean(&h2(), Functional::EndpointRadius, n, 8000, 13).unwrap())
        .collect();
    let diff = |i: usize| {
        let (a, sa) = stats[i];
        let (b, sb) = stats[i + 1];
        ((b - a).abs(), (sa * sa + sb * sb).sqrt())
    };
    let (first, _) = diff(0);
    let (last, s_last) = diff(2);
    assert!(last <= first + 3.0 * s_last, "{stats:?}");
}

#[test]
fn second_moment_has_no_growth_trend() {
    let m = second_moments(&h2(), &[8, 16, 32, 64], 3000, 17).unwrap();
    let (_, first, s0) = m[0];
    let (_, last, s3) = m[3];
    assert!(last <= first + 4.0 * (s0 * s0 + s3 * s3).sqrt(), "{m:?}");
    assert!(m.iter().all(|&(_, v, _)| v.is_finite() && v > 1.0));
}
