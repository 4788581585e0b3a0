use lasched::channel::{MmseCurve, MmsePolicy};
use lasched::functionals::{apx_error, combined_objective, disc_error, mmse_integral, ReportBuilder};
use lasched::grid::SnrGrid;
use lasched::loss::LossProfile;
use lasched::schedule::{grid_geometric, grid_time_uniform};
use lasched::target::TargetDistribution;

fn gauss(dim: usize, sigma: f64) -> TargetDistribution {
    TargetDistribution::single_gaussian(vec![0.0; dim], sigma).unwrap()
}

#[test]
fn closed_form_and_quadrature_agree_on_gaussian() {
    let d = gauss(2, 0.7);
    let exact = MmseCurve::new(d.clone(), MmsePolicy::ClosedForm).unwrap();
    let quad = MmseCurve::new(d, MmsePolicy::Quadrature { nodes: 200 }).unwrap();
    let grid = grid_geometric(4.0, 1e-2, 6).unwrap();
    let a = disc_error(&exact, &grid).unwrap().value;
    let b = disc_error(&quad, &grid).unwrap().value;
    assert!((a - b).abs() <= 1e-7 * a, "{a} vs {b}");
    // Left Riemann sum minus d·ln(1 + σ²γ) differences, summed here by hand.
    let s2: f64 = 0.49;
    let g = grid.gammas();
    let hand: f64 = g
        .windows(2)
        .map(|w| (w[1] - w[0]) * 2.0 * s2 / (1.0 + s2 * w[0]) - 2.0 * ((1.0 + s2 * w[1]) / (1.0 + s2 * w[0])).ln())
        .sum();
    assert!((a - hand).abs() <= 1e-12 * hand);
}

#[test]
fn geometric_beats_time_uniform_on_gaussian() {
    let curve = MmseCurve::new(gauss(1, 1.0), MmsePolicy::ClosedForm).unwrap();
    let geo = disc_error(&curve, &grid_geometric(1.0, 1e-3, 8).unwrap())
        .unwrap()
        .value;
    let uni = disc_error(&curve, &grid_time_uniform(1.0, 1e-3, 8).unwrap())
        .unwrap()
        .value;
    assert!(geo < uni, "{geo} vs {uni}");
}

#[test]
fn exact_loss_has_no_approximation_error() {
    let d = TargetDistribution::two_point(1.0).unwrap();
    let curve = MmseCurve::new(d, MmsePolicy::Quadrature { nodes: 400 }).unwrap();
    let grid = grid_geometric(10.0, 1e-2, 7).unwrap();
    let loss = LossProfile::from_x0(grid.gammas().iter().map(|&g| (g, curve.eval(g).unwrap().value))).unwrap();
    let apx = apx_error(&loss, &curve, &grid).unwrap();
    assert_eq!(apx.value.value, 0.0);
    assert!(apx.geometric_form.unwrap().abs() <= 1e-300);
}

#[test]
fn split_identity_holds_without_clamping() {
    let d = gauss(1, 1.3);
    let curve = MmseCurve::new(d, MmsePolicy::ClosedForm).unwrap();
    let grid = SnrGrid::new(vec![0.2, 0.9, 3.0, 20.0, 150.0]).unwrap();
    let loss = LossProfile::from_x0(grid.gammas().iter().map(|&g| (g, 1.69 / (1.0 + 1.69 * g) + 0.05 / g))).unwrap();
    let e_disc = disc_error(&curve, &grid).unwrap().value;
    let apx = apx_error(&loss, &curve, &grid).unwrap();
    assert_eq!(apx.clamped, 0);
    let area = mmse_integral(&curve, 0.2, 150.0).unwrap().value;
    let lhs = e_disc + apx.value.value;
    let rhs = combined_objective(&loss, &grid).unwrap() - area;
    assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs(), "{lhs} vs {rhs}");
}

#[test]
fn report_builder_fills_every_field() {
    let d = TargetDistribution::discrete_on_line(&[0.5, 0.25, 0.25]).unwrap();
    let h = d.shannon_entropy().unwrap();
    let curve = MmseCurve::new(d, MmsePolicy::Quadrature { nodes: 200 }).unwrap();
    let g = grid_geometric(5.0, 1e-2, 6).unwrap();
    let loss = LossProfile::from_x0(g.gammas().iter().map(|&x| (x, 1.1 * curve.eval(x).unwrap().value))).unwrap();
    let mut builder = ReportBuilder::new(&curve).with_loss(&loss).with_entropy_fit(h, 1.0);
    let r = builder.report(&g).unwrap();
    assert_eq!(r.steps, 6);
    assert!(r.e_disc.value > 0.0 && r.e_apx.value > 0.0);
    assert!((r.kl_path_bound.value - 0.5 * (r.e_disc.value + r.e_apx.value)).abs() <= 1e-15);
    assert!(r.two_term.statistical.is_some());
    let fb = r.final_bounds.clone().unwrap();
    assert!((fb.disc_bound - fb.geo_disc_bound).abs() <= 1e-9 * fb.geo_disc_bound);
    // A second grid on the same endpoints reuses the cached area.
    let r2 = builder.report(&grid_time_uniform(5.0, 1e-2, 6).unwrap()).unwrap();
    assert_eq!(r2.mmse_integral, r.mmse_integral);
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["provenance"], "mmse_functional");
}
