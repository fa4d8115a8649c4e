use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use mgalerkin::basis::delta;
use mgalerkin::harness::{self, analysis, load_config, ErrorMetric, ErrorTable};
use mgalerkin::persist::read_ladder;
use mgalerkin::{
    run_ladder, LadderOptions, ModeIndex, NormKind, Provenance, SpecialKind, SpecialSolution, Trajectory, Variant,
};

const SMALL: &str = r#"
output_dir = "out"

[problem]
nu = 0.8
t_end = 0.1
h = 0.01
levels = 1

[problem.forcing]
kind = "band"
lo = 1
hi = 2
amplitude = 4.0

[problem.initial]
kind = "random"
cutoff = 4
decay = 1.0
seed = 3

[sweep]
m = [2, 3]
"#;

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    fs::write(&path, SMALL).unwrap();
    path
}

#[test]
fn shipped_benchmark_loads() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/bench.toml");
    let cfg = load_config(&path).unwrap();
    assert_eq!(cfg.sweep_cutoffs(), vec![4, 8, 12, 16]);
    assert_eq!(cfg.m_ref(), 64);
    assert_eq!(cfg.t_skip(), 1.0);
    assert_eq!(cfg.problem.levels, 2);
}

#[test]
fn identical_trajectories_give_zero_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = load_config(&small_config(tmp.path())).unwrap();
    let ladder = run_ladder(&cfg.problem_spec(2).unwrap()).unwrap();
    let reference = ladder.levels[1].u.clone();
    let table = analysis::error_table(&ladder, &reference, 0.0, &NormKind::ALL).unwrap();
    for row in table.rows.iter().filter(|r| r.k == 1) {
        assert_eq!(row.err_t, 0.0);
        assert_eq!(row.err_sup, 0.0);
    }
    assert!(table.rows.iter().any(|r| r.k == 0 && r.err_t > 0.0));
    for row in &table.rows {
        assert_eq!(row.delta, delta(row.m));
        assert_eq!(row.delta, 1.0 / 9.0);
    }
}

#[test]
fn steady_problem_errors_are_negligible() {
    let mode = ModeIndex::new(1, 1, Variant::SinPlus).unwrap();
    let s = SpecialSolution::new(SpecialKind::Steady, mode, 1.1, 1.0, TAU);
    let spec = s.problem(2, 0.5, 0.005, 2).unwrap();
    let ladder = run_ladder(&spec).unwrap();
    let exact = s.trajectory(0.005, 101, 8).unwrap();
    let table = analysis::error_table(&ladder, &exact, 0.25, &NormKind::ALL).unwrap();
    assert_eq!(table.rows.len(), 9);
    assert!(table.rows.iter().all(|r| r.err_sup <= 1e-10), "{:?}", table.rows);
}

#[test]
fn error_table_interpolates_a_finer_reference() {
    let mode = ModeIndex::new(2, 0, Variant::CosPlus).unwrap();
    let s = SpecialSolution::new(SpecialKind::Decay, mode, 1.0, 0.5, TAU);
    let spec = s.problem(2, 0.2, 0.01, 0).unwrap();
    let ladder = run_ladder(&spec).unwrap();
    let fine = s.trajectory(0.0025, 81, 4).unwrap();
    let table = analysis::error_table(&ladder, &fine, 0.0, &[NormKind::L2]).unwrap();
    assert!(table.rows[0].err_sup <= 1e-12);
    let short = s.trajectory(0.01, 11, 4).unwrap();
    assert!(analysis::error_table(&ladder, &short, 0.0, &[NormKind::L2]).is_err());
}

#[test]
fn diagnostics_vanish_inside_the_large_scales() {
    let mode = ModeIndex::new(2, 1, Variant::SinMinus).unwrap();
    let s = SpecialSolution::new(SpecialKind::Decay, mode, 1.0, 1.0, TAU);
    let traj = s.trajectory(0.01, 51, 8).unwrap();
    let d = analysis::smallscale_diagnostics(&traj, &[2, 4], 0.1, true).unwrap();
    for r in &d.rows {
        assert_eq!((r.q_l2, r.q_h1, r.q_lap, r.dq_l2), (0.0, 0.0, 0.0, 0.0));
    }
    assert_eq!(d.slopes.q_l2, None);
    assert!(analysis::smallscale_diagnostics(&traj, &[8], 0.1, false).is_err());
    assert!(analysis::smallscale_diagnostics(&traj, &[3], 0.1, true).is_err());
}

#[test]
fn derivative_column_matches_closed_form() {
    let mode = ModeIndex::new(3, 1, Variant::CosPlus).unwrap();
    let s = SpecialSolution::new(SpecialKind::Decay, mode, 1.0, 0.2, TAU);
    let rate = 0.2 * mode.eigenvalue(TAU);
    let t_skip = 0.1;
    let want = rate * s.amplitude_at(t_skip);
    let mut errs = Vec::new();
    for h in [0.004, 0.002] {
        let n = (0.5 / h) as usize + 1;
        let traj = s.trajectory(h, n, 6).unwrap();
        let d = analysis::smallscale_diagnostics(&traj, &[2], t_skip, false).unwrap();
        errs.push((d.rows[0].dq_l2 - want).abs());
        assert!((d.rows[0].q_l2 - s.amplitude_at(t_skip)).abs() <= 1e-14);
    }
    let ratio = errs[0] / errs[1];
    assert!((1.8..=2.2).contains(&ratio), "{errs:?}");
}

#[test]
fn run_writes_a_readable_ladder() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = load_config(&small_config(tmp.path())).unwrap();
    let out = tmp.path().join("run");
    let res = harness::run_to_dir(&cfg, LadderOptions::default(), &out).unwrap();
    let back = read_ladder(&out).unwrap();
    assert_eq!(back.levels.len(), 2);
    for (a, b) in back.levels.iter().zip(&res.ladder.levels) {
        assert_eq!(a.p.samples(), b.p.samples());
        assert_eq!(a.q.samples(), b.q.samples());
        assert_eq!(a.u.samples(), b.u.samples());
        assert_eq!(a.u.meta, b.u.meta);
    }
    assert_eq!(back.spec.fingerprint(), res.ladder.spec.fingerprint());
    let csv = fs::read_to_string(out.join("errors.csv")).unwrap();
    assert_eq!(ErrorTable::from_csv(&csv, &out).unwrap(), res.table);
}

#[test]
fn converge_writes_tables_and_manifests() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = load_config(&small_config(tmp.path())).unwrap();
    let out = tmp.path().join("conv");
    let res = harness::converge_to_dir(&cfg, &out).unwrap();
    let csv = fs::read_to_string(out.join("errors.csv")).unwrap();
    assert!(csv.starts_with("m,delta,k,norm,err_T,err_sup\n"));
    assert!(csv.ends_with('\n') && !csv.contains('\r'));
    assert_eq!(res.table.rows.len(), 2 * 2 * 3);
    assert!(out.join("runs/m2/ladder.json").is_file());
    assert!(out.join("runs/m3/ladder.json").is_file());
    let eoc: harness::EocReport = serde_json::from_str(&fs::read_to_string(out.join("eoc.json")).unwrap()).unwrap();
    assert_eq!(eoc, res.eoc);
    let fit = analysis::eoc_fit(&res.table, 0, NormKind::L2, ErrorMetric::AtEnd).unwrap();
    assert!(eoc.fits.contains(&fit));
}

#[test]
fn diag_writes_csv_and_json() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = load_config(&small_config(tmp.path())).unwrap();
    let out = tmp.path().join("diag");
    let d = harness::diag_to_dir(&cfg, &out).unwrap();
    let json: analysis::SmallScaleDiagnostics =
        serde_json::from_str(&fs::read_to_string(out.join("diag.json")).unwrap()).unwrap();
    assert_eq!(json, d);
    let csv = fs::read_to_string(out.join("diag.csv")).unwrap();
    assert_eq!(csv, d.to_csv());
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn trajectories_reject_mismatched_samples() {
    let a = mgalerkin::SpectralField::zeros(TAU, 2).unwrap();
    let b = mgalerkin::SpectralField::zeros(TAU, 3).unwrap();
    assert!(Trajectory::new(0.0, 0.1, vec![a, b], Provenance::new("test")).is_err());
    assert!(Trajectory::new(0.0, 0.1, vec![], Provenance::new("test")).is_err());
}
