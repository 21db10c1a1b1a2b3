use pdem_core::evolution::{FaceMean, TraceSource};
use pdem_core::experiments::{run_energy, run_moderateness, write_report};
use pdem_core::{
    duhamel_compose, fine_grid_reference, fourier_constant_solution, regularize, solve_forced, solve_homogeneous,
    CoefficientSpec, DataSpec, EpsilonLadder, Grid, Mollifier, MollifierKind, Problem, SpatialOperator, StepperConfig,
    TimeSettings, TimeStep,
};

fn spec(text: &str) -> CoefficientSpec {
    text.parse().unwrap()
}

#[test]
fn planar_delta_conserves_through_iterative_solves() {
    let grid = Grid::new(2, 2.0, 32).unwrap();
    let data: DataSpec = "gaussian(a=2, center=(0.3, -0.2), k=(1, 2))".parse().unwrap();
    let problem = Problem::new(grid, spec("background=1; delta(center=(0, 0), weight=0.5)"), data, TimeSettings::new(TimeStep::Auto, 10.0))
        .with_epsilon(0.5);
    let solved = problem.solve().unwrap();
    assert!(solved.trace.len() > 1000, "{} steps", solved.trace.len());
    assert!(solved.trace.max_drift() <= 1e-10, "{:e}", solved.trace.max_drift());
    assert!(solved.trace.max_energy_drift() <= 1e-8);
    assert!(solved.trace.iterations() > 0);
}

#[test]
fn harmonic_faces_also_conserve() {
    let grid = Grid::new(1, 4.0, 256).unwrap();
    let mut problem = Problem::new(
        grid,
        spec("background=1; jump(center=0, height=3)"),
        DataSpec::gaussian(1.0, -1.0, 3.0),
        TimeSettings::new(TimeStep::Auto, 0.5),
    )
    .with_epsilon(0.125);
    problem.mean = FaceMean::Harmonic;
    let ledger = run_energy(&problem).unwrap();
    assert!(ledger.max_drift <= 1e-10 && ledger.max_energy_drift <= 1e-8);
}

/// Crank–Nicolson differences of two families satisfy the forced scheme
/// exactly, so the forced solve reproduces `u - ũ` to solver tolerance.
#[test]
fn forced_solve_reproduces_direct_difference() {
    let grid = Grid::new(1, 4.0, 128).unwrap();
    let p = Problem::new(grid, spec("background=1; delta(center=0, weight=1)"), DataSpec::gaussian(1.0, 0.0, 2.0), TimeSettings::new(TimeStep::Auto, 0.1))
        .with_epsilon(0.25);
    let q = p.clone().with_mollifier(MollifierKind::Polynomial);
    let (a, b) = (p.operator().unwrap(), q.operator().unwrap());
    let cfg = StepperConfig::auto(&a, 0.1).unwrap().with_stride(1);
    let (u0, v0) = (p.initial_data().unwrap(), q.initial_data().unwrap());
    let u = solve_homogeneous(&a, &u0, &cfg).unwrap();
    let v = solve_homogeneous(&b, &v0, &cfg.with_stride(0)).unwrap();
    let source = TraceSource::from_trace(&u, |w| &b.apply(w) - &a.apply(w)).unwrap();
    let forced = solve_forced(&b, &(&u0 - &v0), &source, &cfg.with_stride(0)).unwrap();
    let direct = u.final_field() - v.final_field();
    let gap = (forced.final_field() - &direct).l2_norm() / direct.l2_norm();
    assert!(gap <= 1e-9, "{gap:e}");
}

#[test]
fn duhamel_quadrature_converges_to_forced_solve() {
    let grid = Grid::new(1, 4.0, 128).unwrap();
    let g = regularize(&spec("background=1; bump(center=0, width=2, height=1)"), &Mollifier::new(MollifierKind::Standard), 0.25, &grid).unwrap();
    let op = SpatialOperator::assemble(&g, Default::default());
    let u0 = DataSpec::gaussian(1.0, 0.0, 1.0).sample(&grid).unwrap();
    let f = pdem_core::evolution::FnSource::new(grid, move |t| {
        pdem_core::ComplexField::from_fn(grid, |x| num_complex::Complex64::from_polar((-x[0] * x[0]).exp(), 3.0 * t))
    });
    let gaps: Vec<f64> = [0.01, 0.005, 0.0025]
        .iter()
        .map(|&dt| {
            let cfg = StepperConfig::new(dt, 0.3).unwrap();
            let a = duhamel_compose(&op, &u0, &f, &cfg).unwrap();
            let b = solve_forced(&op, &u0, &f, &cfg).unwrap();
            (a.final_field() - b.final_field()).l2_norm()
        })
        .collect();
    for w in gaps.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.8, "{gaps:?}");
    }
}

#[test]
fn fine_grid_reference_agrees_with_fourier_oracle() {
    let grid = Grid::new(1, 8.0, 256).unwrap();
    let dt = TimeStep::Fixed(0.25 * grid.h() * grid.h());
    let problem = Problem::new(grid, spec("background=1"), DataSpec::default(), TimeSettings::new(dt, 0.5));
    let reference = fine_grid_reference(&problem, 2).unwrap();
    let exact = fourier_constant_solution(1.0, &problem.initial_data().unwrap(), 0.5).unwrap();
    let coarse = problem.solve().unwrap();
    let ref_err = (&reference.field - &exact.field).l2_norm();
    let coarse_err = (coarse.trace.final_field() - &exact.field).l2_norm();
    // second order in h: the ×2 reference is about four times closer
    assert!(ref_err < coarse_err / 3.0, "{ref_err:e} vs {coarse_err:e}");
    assert!(reference.error_estimate.unwrap() > 0.0);
}

#[test]
fn planar_delta_moderateness_has_exponent_three() {
    // ψ_ε = ε^{-2} ψ(x/ε) in two dimensions: ‖∇ψ_ε‖_∞ ~ ε^{-3}
    let grid = Grid::new(2, 1.0, 256).unwrap();
    let ladder = EpsilonLadder::geometric(0.5, 0.5, 4).unwrap();
    let r = run_moderateness(&spec("background=1; delta(center=(0, 0), weight=1)"), &Mollifier::new(MollifierKind::Polynomial), &ladder, &grid)
        .unwrap();
    let rate = r.coefficient.rate().unwrap();
    assert!((rate - 3.0).abs() <= 0.15, "{rate}");
}

#[test]
fn reports_embed_their_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(1, 4.0, 128).unwrap();
    let problem = Problem::new(grid, spec("background=1; delta(center=0, weight=1)"), DataSpec::default(), TimeSettings::new(TimeStep::Auto, 0.05))
        .with_epsilon(0.25);
    let ledger = run_energy(&problem).unwrap();
    let files = write_report(&ledger, dir.path()).unwrap();
    assert_eq!(files.len(), 3);
    let csv = std::fs::read_to_string(dir.path().join("energy.csv")).unwrap();
    assert!(csv.starts_with("t,drift,energy_form\n"));
    assert_eq!(csv.lines().count(), ledger.times.len() + 1);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("energy.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["epsilon"], 0.25);
    assert_eq!(meta["config"]["mollifier"], "standard");
}
