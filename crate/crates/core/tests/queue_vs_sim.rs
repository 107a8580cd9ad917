//! The simulator against the closed-form M/M/m results on a handful of
//! stable operating points, including one large enough to exercise the
//! log-space path.

use cybertwin::queueing::{analyze, QueueParams};
use cybertwin::sim::{empirical_metrics, run, Scenario};

fn agree(lambda_r: f64, mu: f64, m: u32, completions: f64, tol: f64) {
    let params = QueueParams::new(lambda_r, mu, m).unwrap();
    let analytic = analyze(&params).unwrap();
    let trace = run(&Scenario::new(params, completions / lambda_r, 11)).unwrap();
    let emp = empirical_metrics(&trace).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    assert!(
        rel(emp.t_q, analytic.t_q) < tol,
        "t_q {} vs {}",
        emp.t_q,
        analytic.t_q
    );
    assert!(
        rel(emp.n_q, analytic.n_q) < tol,
        "n_q {} vs {}",
        emp.n_q,
        analytic.n_q
    );
    assert!(rel(emp.t_total, analytic.t_total) < tol);
    assert!(rel(emp.n_r, analytic.n_r) < tol);
}

#[test]
fn light_load_single_channel() {
    agree(0.5, 1.0, 1, 100_000.0, 0.05);
}

#[test]
fn moderate_load_three_channels() {
    agree(2.1, 1.0, 3, 150_000.0, 0.06);
}

#[test]
fn many_channels() {
    agree(20.0, 1.0, 25, 300_000.0, 0.08);
}

#[test]
fn littles_law_holds_empirically() {
    let params = QueueParams::new(1.5, 1.0, 2).unwrap();
    let trace = run(&Scenario::new(params, 50_000.0, 3)).unwrap();
    let emp = empirical_metrics(&trace).unwrap();
    assert!((emp.n_q - emp.arrival_rate * emp.t_q).abs() / emp.n_q < 0.02);
}
