use dysonlab_xlab::spec::{Dist, ExperimentSpec, Mode};
use dysonlab_xlab::{run, Cell};

#[test]
fn single_time_t1_scaling_has_one_row_and_no_fit() {
    let mut spec = ExperimentSpec::defaults(Mode::T1Scaling);
    spec.size = 32;
    spec.radius = 4;
    spec.trials = 1;
    spec.tgrid = vec![1.0];
    let record = run(&spec).unwrap();
    assert_eq!(record.table("t1_scaling").unwrap().rows.len(), 1);
    assert!(record.summary["fit"].is_null());
    assert!(record.check("slope").is_none());
    assert!(record.passed());
}

#[test]
fn free_floquet_state_sits_on_the_level_sets() {
    let mut spec = ExperimentSpec::defaults(Mode::FloquetLocalization);
    spec.size = 32;
    spec.radius = 4;
    spec.lambda = vec![0.0];
    let record = run(&spec).unwrap();
    let per = &record.summary["per_lambda"][0];
    let mass = per["levelset_mass"].as_f64().unwrap();
    assert!(mass > 1.0 - 1e-9, "mass {mass}");
    let table = record.table("floquet_localization").unwrap();
    assert_eq!(table.header, ["kx", "ky", "abs_psi_hat_sq"]);
    assert_eq!(table.rows.len(), 32 * 32);
    let total: f64 = table
        .rows
        .iter()
        .map(|r| match r[2] {
            Cell::Float(v) => v,
            _ => panic!("magnitude cell"),
        })
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn floquet_rows_follow_flat_frequency_order() {
    let mut spec = ExperimentSpec::defaults(Mode::FloquetLocalization);
    spec.size = 16;
    spec.radius = 2;
    spec.lambda = vec![0.0];
    spec.dist = Dist::Gauss;
    let record = run(&spec).unwrap();
    let rows = &record.table("floquet_localization").unwrap().rows;
    assert_eq!(rows[0][..2], [Cell::Int(0), Cell::Int(0)]);
    assert_eq!(rows[1][..2], [Cell::Int(0), Cell::Int(1)]);
    assert_eq!(rows[16][..2], [Cell::Int(1), Cell::Int(0)]);
}

#[test]
fn validation_rejects_bad_specs() {
    let mut spec = ExperimentSpec::defaults(Mode::DysonTruncation);
    spec.trials = 0;
    assert!(spec.validate().is_err());

    let mut spec = ExperimentSpec::defaults(Mode::DysonTruncation);
    spec.allow_wraparound = false;
    spec.tgrid = vec![10.0];
    assert!(spec.validate().unwrap_err().to_string().contains("wrap-around"));
    spec.allow_wraparound = true;
    assert!(spec.validate().is_ok());

    let mut spec = ExperimentSpec::defaults(Mode::ProjectionCompare);
    spec.delta_grid.clear();
    assert!(spec.validate().is_err());

    let mut spec = ExperimentSpec::defaults(Mode::FloquetLocalization);
    spec.dim = 1;
    assert!(spec.validate().is_err());

    let mut spec = ExperimentSpec::defaults(Mode::T1Scaling);
    spec.tgrid = vec![f64::NAN];
    assert!(spec.validate().is_err());
}

#[test]
fn free_comparison_guard_accounts_for_derived_times() {
    let mut spec = ExperimentSpec::defaults(Mode::FreeComparison);
    spec.allow_wraparound = false;
    // t = 1 / (4 lambda^2) = 156.25 at lambda = 0.04.
    assert!(spec.validate().is_err());
}

#[test]
fn truncation_gaps_shrink_with_order_on_a_small_lattice() {
    let mut spec = ExperimentSpec::defaults(Mode::DysonTruncation);
    spec.size = 64;
    spec.radius = 6;
    spec.tgrid = vec![3.0];
    spec.trials = 2;
    spec.lambda = vec![0.1];
    let record = run(&spec).unwrap();
    assert_eq!(record.table("dyson_truncation").unwrap().rows.len(), 2 * 6);
    assert!(record.check("median_gap_monotone").unwrap().pass);
}

#[test]
fn tj_orders_reports_one_row_per_order() {
    let mut spec = ExperimentSpec::defaults(Mode::TjOrders);
    spec.size = 32;
    spec.radius = 4;
    spec.tgrid = vec![4.0];
    spec.trials = 2;
    let record = run(&spec).unwrap();
    assert_eq!(record.table("tj_orders").unwrap().rows.len(), 2 * 5);
    assert!(record.check("decreasing_ratio_share_t4").is_some());
}
