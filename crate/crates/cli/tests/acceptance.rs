//! Acceptance criteria, one line each. Runs the bundled reference comparison
//! at the default grid resolution, so build with optimisations.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use vrrjump::config::load_config;
use vrrjump::report::emit_report;
use vrrjump::run::build_comparison;
use vrrjump::RunConfig;
use vrrjump_core::mechanism::THETA_GUARD_MIN;
use vrrjump_core::units::{mm_to_m, rad_s_to_rpm};
use vrrjump_core::{
    ballistic_check, optimize_vrr, ratio_curve, simulate_takeoff, AngleComparison, AxisRange, DesignOutcome,
    KneeState, SearchBox, Transmission, VrrParams, Workers,
};

const ANGLES: [f64; 3] = [-2.6180, -2.2689, -1.9199];
const TABLE_H_VRR: [f64; 3] = [0.62, 0.51, 0.37];
const TABLE_H_FRR: [f64; 3] = [0.47, 0.40, 0.34];
const HEIGHT_BAND: f64 = 0.20;
const IMPROVEMENT_PCT: (f64, f64) = (20.0, 40.0);
const TABLE_R_MM: f64 = 47.0;
const TABLE_S0_MM: f64 = 150.0;
const R_TOL_MM: f64 = 4.0;
const S0_TOL_MM: f64 = 20.0;
const TABLE_K: f64 = 22.0;
const K_TOL: f64 = 3.0;
const RATIO_WORKING_RANGE: (f64, f64) = (-2.618, -0.05);
const MONOTONE_SLACK: f64 = 1e-9;
const VRR_RPM_MAX: f64 = 3000.0;
const FRR_RPM_MIN: f64 = 4000.0;
const DRIFT_MAX: f64 = 1e-8;
const DRIFT_WINDOW_S: f64 = 0.5;
const DRIFT_DT: f64 = 1e-4;
const HALVING_MAX_M: f64 = 1e-3;
const ENERGY_REL: f64 = 0.005;
const PLATFORM_BAND: (f64, f64) = (0.4, 0.8);

struct Line {
    pass: bool,
    detail: String,
}

/// Collects sub-checks of one criterion.
#[derive(Default)]
struct Parts(Vec<(bool, String)>);

impl Parts {
    fn check(&mut self, ok: bool, msg: impl Into<String>) {
        self.0.push((ok, msg.into()));
    }

    fn line(self) -> Line {
        let pass = !self.0.is_empty() && self.0.iter().all(|p| p.0);
        let detail = self
            .0
            .into_iter()
            .map(|(ok, m)| format!("{}{m}", if ok { "" } else { "FAIL " }))
            .collect::<Vec<_>>()
            .join("; ");
        Line { pass, detail }
    }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x - target).abs() <= rel * target
}

fn row(report: &[AngleComparison], q2: f64) -> Option<&AngleComparison> {
    report.iter().find(|c| c.q2_init == q2)
}

fn outcomes(c: &AngleComparison) -> Option<(&DesignOutcome, &DesignOutcome)> {
    Some((c.vrr.as_ref().ok()?, c.frr.as_ref().ok()?))
}

fn vrr_params(t: &Transmission) -> VrrParams {
    match t {
        Transmission::Variable(p) => *p,
        Transmission::Fixed(_) => unreachable!("variable-ratio optimum"),
    }
}

fn k_fixed(t: &Transmission) -> f64 {
    match t {
        Transmission::Fixed(p) => p.k_fixed,
        Transmission::Variable(_) => unreachable!("fixed-ratio optimum"),
    }
}

fn csv_payloads(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn criterion_1(rows: &[AngleComparison], summary_csv: &str, wall: f64) -> Line {
    let mut parts = Parts::default();
    let mut h_vrr = Vec::new();
    let mut all_rows = true;
    for (i, &q2) in ANGLES.iter().enumerate() {
        let Some((v, f)) = row(rows, q2).and_then(outcomes) else {
            all_rows = false;
            parts.check(false, format!("angle {q2}: optimisation failed"));
            continue;
        };
        h_vrr.push(v.opt.h_jump);
        parts.check(
            v.opt.h_jump > f.opt.h_jump,
            format!("(b) {q2}: EVRR {:.4} > FRR {:.4}", v.opt.h_jump, f.opt.h_jump),
        );
        parts.check(
            within(v.opt.h_jump, TABLE_H_VRR[i], HEIGHT_BAND),
            format!("(c) {q2}: EVRR {:.4} vs {} ±20%", v.opt.h_jump, TABLE_H_VRR[i]),
        );
        parts.check(
            within(f.opt.h_jump, TABLE_H_FRR[i], HEIGHT_BAND),
            format!("(c) {q2}: FRR {:.4} vs {} ±20%", f.opt.h_jump, TABLE_H_FRR[i]),
        );
    }
    if all_rows {
        parts.check(
            h_vrr[0] > h_vrr[1] && h_vrr[1] > h_vrr[2],
            format!("(a) EVRR ordering {:.4} > {:.4} > {:.4}", h_vrr[0], h_vrr[1], h_vrr[2]),
        );
    }
    if let Some(p) = row(rows, ANGLES[0]).and_then(AngleComparison::improvement_pct) {
        parts.check(
            (IMPROVEMENT_PCT.0..=IMPROVEMENT_PCT.1).contains(&p),
            format!("(d) improvement at {} = {p:.1}% in [20, 40]", ANGLES[0]),
        );
    }
    let n_evrr = summary_csv.lines().filter(|l| l.contains(",EVRR-K,")).count();
    let n_frr = summary_csv.lines().filter(|l| l.contains(",FRR-K,")).count();
    parts.check(n_evrr == 3 && n_frr == 3, format!("summary rows {n_evrr} EVRR + {n_frr} FRR"));
    parts.check(true, format!("compare wall time {wall:.1} s"));
    parts.line()
}

fn criterion_2(rows: &[AngleComparison]) -> Line {
    let mut parts = Parts::default();
    match row(rows, ANGLES[0]).and_then(outcomes) {
        Some((v, f)) => {
            let p = vrr_params(&v.opt.best_params);
            let (r, s0) = (p.r * 1e3, p.s0 * 1e3);
            parts.check(
                (r - TABLE_R_MM).abs() <= R_TOL_MM,
                format!("EVRR r = {r:.0} mm vs 47 ± 4"),
            );
            parts.check(
                (s0 - TABLE_S0_MM).abs() <= S0_TOL_MM,
                format!("EVRR S0 = {s0:.0} mm vs 150 ± 20"),
            );
            let k = k_fixed(&f.opt.best_params);
            parts.check((k - TABLE_K).abs() <= K_TOL, format!("FRR k = {k} vs 22 ± 3"));
        }
        None => parts.check(false, "optimisation failed"),
    }
    parts.line()
}

fn criterion_3(rows: &[AngleComparison]) -> Line {
    let mut parts = Parts::default();
    match row(rows, ANGLES[0]).and_then(outcomes) {
        Some((v, _)) => {
            let p = vrr_params(&v.opt.best_params);
            match ratio_curve(&p, RATIO_WORKING_RANGE.0, RATIO_WORKING_RANGE.1, 256) {
                Ok(curve) => {
                    let worst = curve
                        .samples
                        .windows(2)
                        .map(|w| w[1].1 - w[0].1)
                        .fold(f64::NEG_INFINITY, f64::max);
                    parts.check(
                        worst <= MONOTONE_SLACK,
                        format!(
                            "largest sample increase {worst:.4} (peak k = {:.2} at q2 = {:.3})",
                            curve.k_max, curve.argmax_q2
                        ),
                    );
                }
                Err(e) => parts.check(false, format!("ratio curve: {e}")),
            }
        }
        None => parts.check(false, "optimisation failed"),
    }
    parts.line()
}

fn criterion_4(rows: &[AngleComparison]) -> Line {
    let mut parts = Parts::default();
    match row(rows, ANGLES[0]).and_then(outcomes) {
        Some((v, f)) => {
            let rv = rad_s_to_rpm(v.takeoff.max_motor_speed);
            let rf = rad_s_to_rpm(f.takeoff.max_motor_speed);
            parts.check(rv < VRR_RPM_MAX, format!("EVRR max {rv:.0} rpm < 3000"));
            parts.check(rf > FRR_RPM_MIN, format!("FRR max {rf:.0} rpm > 4000"));
        }
        None => parts.check(false, "optimisation failed"),
    }
    parts.line()
}

fn full_crank_peak(p: &VrrParams) -> Option<(f64, f64)> {
    let lo = p.joint_angle(THETA_GUARD_MIN).max(-PI);
    let hi = p.joint_angle(PI - 0.001).min(0.0);
    ratio_curve(p, lo, hi, 1024).ok().map(|c| (c.argmax_q2, c.k_max))
}

fn criterion_5() -> Line {
    let mut parts = Parts::default();
    let ks: Vec<f64> = [25.0, 37.5, 50.0, 62.5, 75.0]
        .iter()
        .filter_map(|&r| full_crank_peak(&VrrParams::from_mm_deg(r, 250.0, 0.0)).map(|p| p.1))
        .collect();
    parts.check(
        ks.len() == 5 && ks.windows(2).all(|w| w[1] > w[0]),
        format!("k_max over r = {ks:.2?}"),
    );
    let qs: Vec<f64> = [150.0, 175.0, 200.0, 225.0, 250.0]
        .iter()
        .filter_map(|&s0| full_crank_peak(&VrrParams::from_mm_deg(30.0, s0, 0.0)).map(|p| p.0))
        .collect();
    let monotone = qs.windows(2).all(|w| w[1] > w[0]) || qs.windows(2).all(|w| w[1] < w[0]);
    let contained = qs.iter().all(|q| (-PI..=-FRAC_PI_2).contains(q));
    parts.check(
        qs.len() == 5 && monotone && contained,
        format!("argmax_q2 over S0 = {qs:.4?}"),
    );
    parts.line()
}

fn criterion_6(cfg: &RunConfig, rows: &[AngleComparison]) -> Line {
    let mut parts = Parts::default();
    let leg = &cfg.leg;
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for q2 in [-2.9, -2.6, -2.2, -1.8, -1.4, -1.0, -0.5] {
        for dq2 in [0.5, 1.0, 2.0, 4.0, 6.0, 8.0] {
            let s = KneeState::new(q2, dq2).unwrap();
            let y = leg.com_height(q2).unwrap();
            let v = leg.com_jacobian(q2).unwrap() * dq2;
            if y + v * v / (2.0 * leg.g) >= leg.standing_height() {
                continue;
            }
            let d = ballistic_check(leg, &s, DRIFT_WINDOW_S, DRIFT_DT).unwrap().max_rel_drift;
            worst = worst.max(d);
            n += 1;
        }
    }
    parts.check(worst < DRIFT_MAX, format!("ballistic drift max {worst:.2e} over {n} states"));

    let mut designs: Vec<Transmission> = vec![VrrParams::from_mm_deg(47.0, 150.0, 0.0).into()];
    if let Some((v, f)) = row(rows, ANGLES[0]).and_then(outcomes) {
        designs.push(v.opt.best_params);
        designs.push(f.opt.best_params);
    }
    for t in designs {
        let c = cfg.sim_at(ANGLES[0]);
        let h1 = simulate_takeoff(leg, &cfg.motor, &t, &c).map(|r| r.h_jump);
        let h2 = simulate_takeoff(leg, &cfg.motor, &t, &c.with_dt(DRIFT_DT / 2.0)).map(|r| r.h_jump);
        match (h1, h2) {
            (Ok(a), Ok(b)) => parts.check(
                (a - b).abs() < HALVING_MAX_M,
                format!("{} step halving |dH| = {:.2e} m", t.label(), (a - b).abs()),
            ),
            _ => parts.check(false, format!("{} simulation failed", t.label())),
        }
    }
    parts.line()
}

fn criterion_7(cfg: &RunConfig, rows: &[AngleComparison]) -> Line {
    let mut parts = Parts::default();
    let m = cfg.leg.total_mass();
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for &q2 in &ANGLES {
        let Some((v, f)) = row(rows, q2).and_then(outcomes) else {
            parts.check(false, format!("{q2}: optimisation failed"));
            continue;
        };
        for o in [v, f] {
            let pe0 = m * cfg.leg.g * cfg.leg.com_height(q2).unwrap();
            let lhs = o.takeoff.w_motor * cfg.motor.eta_j + pe0;
            worst = worst.max((lhs - o.takeoff.w_takeoff).abs() / o.takeoff.w_takeoff);
            runs += 1;
        }
    }
    parts.check(worst <= ENERGY_REL, format!("worst relative gap {worst:.2e} over {runs} runs"));
    parts.line()
}

fn criterion_8(cfg: &RunConfig) -> Line {
    let mut parts = Parts::default();
    let b = SearchBox {
        r: AxisRange::new(mm_to_m(40.0), mm_to_m(54.0), mm_to_m(7.0)),
        s0: AxisRange::new(mm_to_m(120.0), mm_to_m(180.0), mm_to_m(30.0)),
        delta_theta: AxisRange::new((-1f64).to_radians(), 1f64.to_radians(), 1f64.to_radians()),
        ..SearchBox::reference()
    };
    let sim = cfg.sim_at(ANGLES[0]);
    let seq = optimize_vrr(&cfg.leg, &cfg.motor, &sim, &b, Workers(1));
    let par = optimize_vrr(&cfg.leg, &cfg.motor, &sim, &b, Workers(4));
    let (Ok(seq), Ok(par)) = (seq, par) else {
        parts.check(false, "optimisation failed");
        return parts.line();
    };

    let mut best: Option<(f64, VrrParams)> = None;
    for &r in &b.r.values() {
        for &s0 in &b.s0.values() {
            for &dt in &b.delta_theta.values() {
                let p = VrrParams { r, s0, delta_theta: dt, lead: b.lead };
                let Ok(res) = simulate_takeoff(&cfg.leg, &cfg.motor, &p.into(), &sim) else { continue };
                let key = (r, s0, dt.abs(), dt);
                let better = best.map_or(true, |(w, q)| {
                    res.w_takeoff > w || (res.w_takeoff == w && key < (q.r, q.s0, q.delta_theta.abs(), q.delta_theta))
                });
                if better {
                    best = Some((res.w_takeoff, p));
                }
            }
        }
    }
    let brute = best.map(|(_, p)| Transmission::Variable(p));
    parts.check(
        brute == Some(seq.best_params) && seq.evaluations.len() == 27,
        format!("3x3x3 argmax {:?} matches brute force", seq.best_params),
    );
    parts.check(seq == par, "1 vs 4 workers identical OptResult");
    parts.line()
}

fn criterion_9() -> Line {
    let mut parts = Parts::default();
    match load_config(&configs().join("platform_v_a.json")) {
        Ok(cfg) => {
            parts.check(
                (cfg.leg.total_mass() - 24.93).abs() < 1e-9,
                format!("platform mass {:.2} kg", cfg.leg.total_mass()),
            );
            for &q2 in &cfg.angles {
                match simulate_takeoff(&cfg.leg, &cfg.motor, &cfg.mechanism, &cfg.sim_at(q2)) {
                    Ok(r) => parts.check(
                        (PLATFORM_BAND.0..=PLATFORM_BAND.1).contains(&r.h_jump),
                        format!("H = {:.4} m from {q2} in [0.4, 0.8]", r.h_jump),
                    ),
                    Err(e) => parts.check(false, format!("simulation failed: {e}")),
                }
            }
        }
        Err(e) => parts.check(false, format!("config: {e}")),
    }
    parts.line()
}

fn criterion_10(cfg: &RunConfig, first: &Path, second: &Path) -> Line {
    let mut parts = Parts::default();
    let report = build_comparison(cfg, Workers::default());
    match emit_report(&report, second) {
        Ok(_) => {
            let (a, b) = (csv_payloads(first), csv_payloads(second));
            let differing: Vec<&str> = a
                .iter()
                .zip(&b)
                .filter(|(x, y)| x != y)
                .map(|(x, _)| x.0.as_str())
                .collect();
            parts.check(
                a.len() == b.len() && !a.is_empty() && differing.is_empty(),
                format!("{} CSV files compared, differing: {differing:?}", a.len()),
            );
        }
        Err(e) => parts.check(false, format!("second run: {e}")),
    }
    parts.line()
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let (first, second) = (tmp.path().join("run1"), tmp.path().join("run2"));
    let cfg = load_config(&configs().join("paper_iv_b.json")).expect("bundled config");

    let start = Instant::now();
    let report = build_comparison(&cfg, Workers::default());
    let wall = start.elapsed().as_secs_f64();
    emit_report(&report, &first).expect("report written");
    let summary = fs::read_to_string(first.join("summary.csv")).unwrap_or_default();
    let rows = &report.comparisons;

    let lines = [
        ("1 table reproduction", criterion_1(rows, &summary, wall)),
        ("2 optimum locality", criterion_2(rows)),
        ("3 ratio curve monotone on working range", criterion_3(rows)),
        ("4 motor speed bounds", criterion_4(rows)),
        ("5 ratio sensitivity to r and S0", criterion_5()),
        ("6 integrator quality", criterion_6(&cfg, rows)),
        ("7 energy bookkeeping", criterion_7(&cfg, rows)),
        ("8 oracle equivalence", criterion_8(&cfg)),
        ("9 single-joint platform sanity", criterion_9()),
        ("10 determinism", criterion_10(&cfg, &first, &second)),
    ];

    let mut passed = 0;
    for (name, line) in &lines {
        println!("[{}] {name}: {}", if line.pass { "PASS" } else { "FAIL" }, line.detail);
        passed += usize::from(line.pass);
    }
    println!("acceptance: {passed}/{} criteria passed", lines.len());
    if passed != lines.len() {
        std::process::exit(1);
    }
}
