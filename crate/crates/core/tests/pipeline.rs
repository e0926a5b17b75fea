use pathweight::density::{DensityContext, EvalOptions};
use pathweight::development::{antidevelop, develop};
use pathweight::manifold::{CurvatureModel, Factor};
use pathweight::paths::{IncrementSampler, IncrementVector, Partition};

#[test]
fn single_precision_pipeline() {
    let h2 = CurvatureModel::<f32>::hyperbolic(2, -1.0).unwrap();
    let inc = IncrementVector::<f32>::from_rows(&[vec![1.0, 0.0]]).unwrap();
    let s = DensityContext::new(&h2, 1).unwrap().evaluate(&inc, EvalOptions::default()).unwrap();
    assert!((s.rho - 1.1046019).abs() < 1e-4);
}

#[test]
fn development_round_trip_on_products() {
    let m = CurvatureModel::product(vec![Factor { dim: 2, k: -1.0 }, Factor { dim: 1, k: 0.0 }, Factor { dim: 3, k: -2.5 }]).unwrap();
    let p = Partition::<f64>::uniform(12).unwrap();
    let inc = IncrementSampler::new(4).sample(&p, 6, 0).unwrap();
    let path = develop(&inc, &m).unwrap();
    assert!(path.constraint_error() < 1e-10 && path.frame_error() < 1e-10);
    let back = antidevelop(&path).unwrap();
    for (a, b) in back.deltas().iter().zip(inc.deltas()) {
        assert!((a - b).norm() < 1e-9);
    }
    let s = DensityContext::new(&m, 12).unwrap().evaluate(&inc, EvalOptions { x_p: true, decomposition: true }).unwrap();
    assert!(s.rho > 0.0 && s.rho.is_finite());
    assert!((s.fancy_s - m.scal()).abs() < 1e-12);
}

#[test]
fn density_grows_with_curvature() {
    let inc = IncrementSampler::new(9).sample(&Partition::<f64>::uniform(6).unwrap(), 2, 3).unwrap();
    let rho = |k: f64| {
        let m = CurvatureModel::hyperbolic(2, k).unwrap();
        DensityContext::new(&m, 6).unwrap().evaluate(&inc, EvalOptions::default()).unwrap().rho
    };
    assert!(rho(-0.5) < rho(-1.0) && rho(-1.0) < rho(-2.0));
}
