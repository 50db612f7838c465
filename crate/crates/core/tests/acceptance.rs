//! Acceptance suite: one test per criterion, each printing a single
//! `[criterion N] PASS|FAIL` line with the measured values and the tolerance.
//!
//! The expensive stages (steady states, eigensolves, probe sweeps) run once
//! per configuration through the same stage pipeline the CLI uses, and are
//! shared between tests. Set `HORIZON_ACCEPTANCE_DIR` to keep checkpoints
//! between invocations; stale ones are recomputed because they carry the
//! config hash.

use std::path::PathBuf;
use std::sync::{Mutex, OnceLock};

use horizon_core::gpe::{FieldState, Stepper};
use horizon_core::io::{
    run_stage, BdgResult, DispersionResult, FitResult, RunConfig, RunOptions, Stage, StageStatus, SteadyResult,
    SweepStageResult, Workspace,
};
use horizon_core::model::{
    bistability_turning_points, channel_map, dispersion_lab_frame, drive_intensity, ChannelLabel, Direction,
    LocalHydro, PolaritonParams, Regime,
};
use horizon_core::scatter::{probe_response, SweepOutcome};
use horizon_core::units::{mev_to_rate, rate_to_mev};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;

/// The line goes to the stderr handle directly, which the test harness does
/// not capture, so passing criteria are reported without `--nocapture`.
fn verdict(id: &str, title: &str, pass: bool, detail: &str) {
    use std::io::Write;
    let line = format!("[criterion {id}] {} {title}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {id} ({title}) failed: {detail}");
}

fn repro(name: &str) -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../repro").join(name);
    RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display())).config
}

fn workers() -> usize {
    let available = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let cap = std::env::var("HORIZON_MAX_WORKERS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|c| *c > 0);
    cap.map_or(available, |c| available.min(c))
}

/// A configuration's workspace whose stages are computed on first use.
struct Run {
    ws: Workspace,
    _tmp: Option<tempfile::TempDir>,
    lock: Mutex<()>,
}

impl Run {
    fn new(name: &str) -> Run {
        let config = repro(name);
        let (dir, tmp) = match std::env::var_os("HORIZON_ACCEPTANCE_DIR") {
            Some(root) => (PathBuf::from(root).join(name.trim_end_matches(".conf")), None),
            None => {
                let t = tempfile::tempdir().unwrap();
                (t.path().to_path_buf(), Some(t))
            }
        };
        std::fs::create_dir_all(&dir).unwrap();
        Run { ws: Workspace::new(config, dir), _tmp: tmp, lock: Mutex::new(()) }
    }

    fn get<T: DeserializeOwned>(&self, stage: Stage) -> T {
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        let options = RunOptions { workers: workers(), overwrite: false };
        for s in self.ws.plan(Some(stage)) {
            if self.ws.status(s) != StageStatus::Valid {
                let report = run_stage(&self.ws, s, &options).unwrap_or_else(|e| panic!("stage {s}: {e}"));
                for line in report.lines {
                    eprintln!("    {line}");
                }
            }
        }
        self.ws.load_optional(stage).expect("checkpoint just written")
    }
}

fn supported() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| Run::new("fig2.conf"))
}

fn unsupported() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| Run::new("nosupport.conf"))
}

fn lossless() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| Run::new("gamma0-check.conf"))
}

fn fmt_mev(rate: f64) -> String {
    format!("{:.4} meV", rate_to_mev(rate))
}

// 1. Bistability

/// Extremum of |F|²(n) by bisection on a central-difference slope, seeded
/// from a sign change on a uniform scan.
fn scanned_extrema(delta: f64, p: &PolaritonParams) -> Vec<(f64, f64)> {
    let curve = |n: f64| drive_intensity(n, delta, p);
    let top = 2.0 * delta / p.g();
    let slope = |n: f64| {
        let h = 1e-6 * top;
        (curve(n + h) - curve(n - h)) / (2.0 * h)
    };
    let steps = 100_000;
    let mut out = Vec::new();
    let mut prev = slope(top / steps as f64);
    for i in 2..=steps {
        let (a, b) = (top * (i - 1) as f64 / steps as f64, top * i as f64 / steps as f64);
        let cur = slope(b);
        if prev * cur < 0.0 {
            let (mut lo, mut hi, s_lo) = (a, b, prev);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if slope(mid) * s_lo > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let n = 0.5 * (lo + hi);
            out.push((n, curve(n)));
        }
        prev = cur;
    }
    out
}

#[test]
fn criterion_1_bistability_turning_points() {
    let mut p = repro("fig1.conf").polariton_params();
    p.hbar_omega_p = p.hbar_omega0 + 0.39;
    p.hbar_gamma = 47.0;
    let delta = p.delta_eff(0.0);
    let analytic = bistability_turning_points(0.0, &p);
    let scanned = scanned_extrema(delta, &p);
    let Some(points) = analytic else {
        return verdict("1", "bistability", false, "analytic formula found no turning points");
    };
    let mut worst: f64 = 0.0;
    for (tp, (n, f)) in points.iter().zip(&scanned) {
        worst = worst.max((tp.n0 - n).abs() / n).max((tp.drive_sq - f).abs() / f);
    }
    let pass = scanned.len() == 2 && worst <= 1e-8;
    verdict(
        "1",
        "bistability",
        pass,
        &format!(
            "{} scanned extrema, turning points n = {:.3}/{:.3} /um, worst relative deviation {worst:.2e} (tol 1e-8)",
            scanned.len(),
            points[0].n0,
            points[1].n0
        ),
    );
}

// 2. Transcritical steady state

#[test]
fn criterion_2_transcritical_steady_state() {
    let run = supported();
    let steady: SteadyResult = run.get(Stage::Steady);
    let cfg = &run.ws.config;
    let cavity = cfg.cavity().unwrap();
    let b = &steady.background;
    let x_switch = cfg.pump.x_switch;
    let x_d = cfg.defect.center;
    let down = steady.downstream.expect("downstream plateau hydrodynamics");

    let horizon_ok = b.horizon_x.is_some_and(|x| (x - x_switch).abs() <= 3.0);
    let unique = b.sonic_crossings.len() == 1;
    let c_ok = (down.c_b - 0.81).abs() <= 0.05 * 0.81;
    let v_ok = (down.v0 - 2.07).abs() <= 0.10 * 2.07;

    let at = |x: f64| cavity.grid.index_of(x);
    let near = cavity.grid.indices_between(x_d - 2.0, x_d + 2.0);
    let n_dip = near.clone().map(|i| b.n0[i]).fold(f64::INFINITY, f64::min);
    let v_spike = near.map(|i| b.v0[i].abs()).fold(0.0, f64::max);
    let (left, right) = (at(x_d - 10.0), at(x_d + 10.0));
    let dip = n_dip < b.n0[left].min(b.n0[right]);
    let spike = v_spike > b.v0[left].abs().max(b.v0[right].abs());

    let pass = horizon_ok && unique && c_ok && v_ok && dip && spike;
    verdict(
        "2",
        "transcritical steady state",
        pass,
        &format!(
            "horizon {} (want {x_switch} ± 3 um, {} crossing(s)), downstream c_B = {:.4} (0.81 ± 5%), v = {:.4} \
             (2.07 ± 10%), defect dip {dip}, velocity spike {spike}",
            b.horizon_x.map_or("none".into(), |x| format!("{x:.2} um")),
            b.sonic_crossings.len(),
            down.c_b,
            down.v0
        ),
    );
}

// 3. Dispersion maps

#[test]
fn criterion_3_dispersion_ridges() {
    let run = supported();
    let maps: DispersionResult = run.get(Stage::DispersionMap);
    let up_worst = maps.upstream.ridges.iter().map(|r| r.offset_bins.abs()).fold(0.0, f64::max);
    let up_ok = !maps.upstream.ridges.is_empty() && up_worst <= 2.0;

    let Some(down) = &maps.downstream else {
        return verdict("3", "dispersion ridges", false, "no downstream map");
    };
    // A 5% offset is only resolvable where it spans at least one k-bin.
    let k_res = down.map.resolution.0;
    let resolvable: Vec<_> = down.ridges.iter().filter(|r| 0.05 * r.k_lda.abs() >= k_res).collect();
    let down_worst = resolvable.iter().map(|r| r.relative).fold(0.0, f64::max);
    let failing: Vec<String> = resolvable
        .iter()
        .filter(|r| r.relative > 0.05)
        .map(|r| format!("{:.3} meV/k={:.3} ({:.1}%)", rate_to_mev(r.omega), r.k_lda, 100.0 * r.relative))
        .collect();
    let down_ok = !resolvable.is_empty() && down_worst <= 0.05;
    verdict(
        "3",
        "dispersion ridges",
        up_ok && down_ok,
        &format!(
            "upstream worst {up_worst:.2} bins over {} points (tol 2); downstream worst {:.1}% over {} resolvable \
             points (tol 5%, {} below resolution skipped){}",
            maps.upstream.ridges.len(),
            100.0 * down_worst,
            resolvable.len(),
            down.ridges.len() - resolvable.len(),
            if failing.is_empty() { String::new() } else { format!("; over tolerance: {}", failing.join(", ")) }
        ),
    );
}

// 4. Channel regimes

/// Independent root finder: sign changes of ω±(k) − ω on a dense k grid,
/// refined by bisection. Crossings where the comoving frequency is imaginary
/// are discarded: there the plotted branches sit on the Doppler line and the
/// true roots are complex.
fn scanned_roots(omega: f64, hydro: &LocalHydro) -> Vec<(f64, i8)> {
    let span = 6.0 * (hydro.v0.abs() + hydro.c_b + omega.sqrt()) / hydro.hbar_over_m + 2.0;
    let steps = 400_000;
    let mut out = Vec::new();
    for sign in [1i8, -1] {
        let f = |k: f64| {
            let (p, m) = dispersion_lab_frame(k, hydro);
            (if sign > 0 { p } else { m }) - omega
        };
        let mut prev = f(-span);
        for i in 1..=steps {
            let (a, b) = (-span + 2.0 * span * (i - 1) as f64 / steps as f64, -span + 2.0 * span * i as f64 / steps as f64);
            let cur = f(b);
            if prev == 0.0 || prev * cur < 0.0 {
                let (mut lo, mut hi, f_lo) = (a, b, prev);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if f(mid) * f_lo > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let k = 0.5 * (lo + hi);
                if hydro.comoving_sq(k) >= -1e-9 * omega * omega {
                    out.push((k, sign));
                }
            }
            prev = cur;
        }
    }
    out
}

#[test]
fn criterion_4_channel_regimes() {
    let run = supported();
    let steady: SteadyResult = run.get(Stage::Steady);
    let hydro = steady.sweep_hydro().expect("transcritical plateaus");
    let window = steady.window.unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut problems = Vec::new();
    let (mut inside, mut above) = (0, 0);
    let mut failing_window = Vec::new();
    for i in 0..50 {
        let omega = if i % 2 == 0 {
            inside += 1;
            rng.gen_range(window.omega_min * 1.001..window.omega_max * 0.999)
        } else {
            above += 1;
            rng.gen_range(window.omega_max * 1.001..3.0 * window.omega_max)
        };
        let set = channel_map(omega, &hydro.upstream, &hydro.downstream).unwrap();
        let (n_in, n_out) = (set.count(Direction::Incoming), set.count(Direction::Outgoing));
        let expect = if omega < window.omega_max { (Regime::HawkingWindow, 3) } else { (Regime::AboveWindow, 2) };
        if set.regime != expect.0 || n_in != expect.1 || n_out != expect.1 {
            if omega < window.omega_max {
                failing_window.push(omega);
            }
            problems.push(format!("{}: {:?} {n_in} in / {n_out} out", fmt_mev(omega), set.regime));
        }
        if expect.0 == Regime::AboveWindow && set.channels.iter().any(|c| c.norm_sign < 0) {
            problems.push(format!("{}: negative-norm channel above the window", fmt_mev(omega)));
        }
        // Every channel and band edge must be a scanned root and vice versa.
        for (side, h) in [(horizon_core::model::Side::Upstream, &hydro.upstream), (horizon_core::model::Side::Downstream, &hydro.downstream)] {
            let mut mine: Vec<(f64, i8)> = set
                .channels
                .iter()
                .filter(|c| c.side == side)
                .map(|c| (c.k, c.norm_sign))
                .chain(set.band_edges.iter().filter(|e| e.side == side).map(|e| (e.k, e.norm_sign)))
                .collect();
            let mut scan = scanned_roots(omega, h);
            mine.sort_by(|a, b| a.0.total_cmp(&b.0));
            scan.sort_by(|a, b| a.0.total_cmp(&b.0));
            let matched = mine.len() == scan.len()
                && mine.iter().zip(&scan).all(|(a, b)| a.1 == b.1 && (a.0 - b.0).abs() <= 1e-6 * (1.0 + b.0.abs()));
            if !matched {
                problems.push(format!("{} {side:?}: roots {mine:?} vs scan {scan:?}", fmt_mev(omega)));
            }
        }
    }
    for p in &problems {
        eprintln!("    {p}");
    }
    let short = if failing_window.is_empty() {
        String::new()
    } else {
        let lo = failing_window.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = failing_window.iter().copied().fold(0.0, f64::max);
        format!(", window frequencies without the full 3x3 set span {} to {}", fmt_mev(lo), fmt_mev(hi))
    };
    verdict(
        "4",
        "channel regimes",
        problems.is_empty(),
        &format!(
            "{inside} frequencies in the window, {above} above, {} mismatches{short}{}",
            problems.len(),
            problems.first().map(|p| format!(" (first: {p})")).unwrap_or_default()
        ),
    );
}

// 5. Stimulated Hawking signature

struct Readout {
    omega: f64,
    hr: Option<f64>,
    down: Option<f64>,
    dn: Option<f64>,
    dn_conj: Option<f64>,
    /// Some outputs shared one spectral peak, so their order is unknown.
    unresolved: bool,
}

fn readouts(sweep: &SweepStageResult) -> Vec<Readout> {
    sweep
        .sweep
        .entries
        .iter()
        .filter_map(|e| match &e.outcome {
            SweepOutcome::Measured { amplitudes, .. } => Some(Readout {
                omega: e.omega,
                hr: amplitudes.magnitude(ChannelLabel::Hr),
                down: amplitudes.magnitude(ChannelLabel::Down),
                dn: amplitudes.magnitude(ChannelLabel::Dn),
                dn_conj: amplitudes.conjugate_magnitude(ChannelLabel::Dn),
                unresolved: !amplitudes.unresolved().is_empty(),
            }),
            SweepOutcome::Gap { .. } => None,
        })
        .collect()
}

/// Lowest frequency at which |HR| stops being the largest output, linearly
/// interpolated between the bracketing samples. `None` when |HR| does not
/// dominate at the first sample or never yields. Callers pass resolved rows.
fn hr_crossover(rows: &[&Readout]) -> Option<f64> {
    let lead = |r: &Readout| r.hr.unwrap_or(0.0) - r.down.unwrap_or(0.0).max(r.dn.unwrap_or(0.0));
    if lead(rows.first()?) <= 0.0 {
        return None;
    }
    rows.windows(2).find(|w| lead(&w[1]) <= 0.0).map(|w| {
        let (a, b) = (lead(&w[0]), lead(&w[1]));
        w[0].omega + (w[1].omega - w[0].omega) * a / (a - b)
    })
}

#[test]
fn criterion_5_stimulated_hawking_signature() {
    let run = supported();
    let sweep: SweepStageResult = run.get(Stage::Sweep);
    let all_rows = readouts(&sweep);
    let rows: Vec<&Readout> = all_rows.iter().filter(|r| !r.unresolved).collect();
    let skipped = all_rows.len() - rows.len();
    let omega_max = sweep.hydro.omega_max;
    let inside: Vec<&Readout> = all_rows.iter().filter(|r| r.omega < omega_max).collect();
    let above: Vec<&Readout> = all_rows.iter().filter(|r| r.omega > omega_max).collect();

    // (a) |HR| leads below ≈ 0.25 meV, |down| after.
    let target = mev_to_rate(0.25);
    let crossover = hr_crossover(&rows);
    let a_ok = crossover.is_some_and(|c| (c - target).abs() <= 0.15 * target)
        && rows.iter().filter(|r| r.omega > crossover.unwrap_or(f64::INFINITY)).all(|r| {
            r.down.unwrap_or(0.0) >= r.hr.unwrap_or(0.0)
        });
    let first = rows.first().map(|r| (r.hr.unwrap_or(0.0), r.down.unwrap_or(0.0)));

    // (b) |dn| present and nonzero in the window, with |dn*| ≥ |dn|.
    let b_bad: Vec<String> = inside
        .iter()
        .filter(|r| !matches!((r.dn, r.dn_conj), (Some(d), Some(c)) if d > 0.0 && c >= d))
        .map(|r| format!("{} (|dn| {:?}, |dn*| {:?})", fmt_mev(r.omega), r.dn, r.dn_conj))
        .collect();
    let b_ok = !inside.is_empty() && b_bad.is_empty();

    // (c) |HR| ≤ 5e-3 above ω_max.
    let hr_above = above.iter().filter_map(|r| r.hr).fold(0.0, f64::max);
    let c_ok = !above.is_empty() && hr_above <= 5e-3;

    verdict(
        "5",
        "stimulated Hawking signature",
        a_ok && b_ok && c_ok,
        &format!(
            "(a) {} crossover at {} (want 0.25 meV ± 15%; first resolved sample |HR| {:.3} vs |down| {:.3}; \
             {skipped} samples with unresolved outputs left out); \
             (b) {} {}/{} window samples with 0 < |dn| ≤ |dn*|{}; (c) {} max |HR| above ω_max = {hr_above:.3e} (tol 5e-3)",
            if a_ok { "ok" } else { "FAIL" },
            crossover.map_or("none".into(), fmt_mev),
            first.map_or(f64::NAN, |f| f.0),
            first.map_or(f64::NAN, |f| f.1),
            if b_ok { "ok" } else { "FAIL" },
            inside.len() - b_bad.len(),
            inside.len(),
            b_bad.first().map(|b| format!(", first failure {b}")).unwrap_or_default(),
            if c_ok { "ok" } else { "FAIL" },
        ),
    );
}

// 6. QNM spectroscopy

/// Resonance location on |down| above ω_max: the largest excess over a
/// least-squares straight baseline. T_down rises across the whole band, so the
/// plain maximum lands on whichever end of the sweep is highest. Also returns
/// the local sample spacing and the plain maximum for the printout.
fn transmission_peak(sweep: &SweepStageResult) -> Option<(f64, f64, f64)> {
    let om = sweep.sweep.omegas();
    let t = sweep.sweep.t_down();
    let idx: Vec<usize> = (0..om.len()).filter(|&i| om[i] > sweep.hydro.omega_max && t[i].is_some()).collect();
    if idx.len() < 3 {
        return None;
    }
    let n = idx.len() as f64;
    let (sx, sy) = idx.iter().fold((0.0, 0.0), |(a, b), &i| (a + om[i], b + t[i].unwrap()));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) =
        idx.iter().fold((0.0, 0.0), |(a, b), &i| (a + (om[i] - mx) * (t[i].unwrap() - my), b + (om[i] - mx).powi(2)));
    let slope = sxy / sxx;
    let excess = |i: usize| t[i].unwrap() - (my + slope * (om[i] - mx));
    let best = *idx.iter().max_by(|&&a, &&b| excess(a).total_cmp(&excess(b)))?;
    let highest = *idx.iter().max_by(|&&a, &&b| t[a].unwrap().total_cmp(&t[b].unwrap()))?;
    let spacing = match (best.checked_sub(1), om.get(best + 1)) {
        (Some(l), Some(r)) => 0.5 * (r - om[l]),
        (Some(l), None) => om[best] - om[l],
        (None, Some(r)) => r - om[best],
        (None, None) => 0.0,
    };
    Some((om[best], spacing, om[highest]))
}

fn qnm_checks(run: &Run) -> (bool, String, Option<f64>) {
    let bdg: BdgResult = run.get(Stage::Bdg);
    let Some(qnm) = &bdg.qnm else {
        return (false, format!("no unique QNM: {}", bdg.qnm_error.unwrap_or_default()), None);
    };
    let gamma = bdg.search.gamma;
    let width_ok = (0.5 * qnm.gamma_qnm - 0.5 * gamma).abs() <= 0.5 * (0.5 * gamma);

    let sweep: SweepStageResult = run.get(Stage::Sweep);
    let fit: FitResult = run.get(Stage::Fit);
    let (peak_ok, peak_text) = match transmission_peak(&sweep) {
        Some((peak, spacing, highest)) => {
            let tol = (0.05 * qnm.omega_qnm).max(2.0 * spacing);
            (
                (peak - qnm.omega_qnm).abs() <= tol,
                format!(
                    "|down| peaks at {} above its linear trend (allowed ± {}; plain maximum at {})",
                    fmt_mev(peak),
                    fmt_mev(tol),
                    fmt_mev(highest)
                ),
            )
        }
        None => (false, "no transmission above ω_max".into()),
    };
    let (fit_ok, fit_text) = match (&fit.fit, &fit.error) {
        // The criterion asks for convergence and residual only; the offset
        // from the eigenvalue is printed for the record.
        (Some(f), _) => (
            f.residual < 0.05,
            format!(
                "fit Ω = {} (off eigenvalue by {}), Γ = {}, residual {:.2}%",
                fmt_mev(f.omega_qnm),
                fmt_mev((f.omega_qnm - qnm.omega_qnm).abs()),
                fmt_mev(f.gamma_qnm),
                100.0 * f.residual
            ),
        ),
        (None, e) => (false, format!("fit failed: {}", e.clone().unwrap_or_default())),
    };
    let pass = width_ok && peak_ok && fit_ok;
    let text = format!(
        "QNM {} with Γ/2 = {} vs γ/2 = {} ({}, tol 50%); {} ({}); {} ({})",
        fmt_mev(qnm.omega_qnm),
        fmt_mev(0.5 * qnm.gamma_qnm),
        fmt_mev(0.5 * gamma),
        if width_ok { "ok" } else { "FAIL" },
        peak_text,
        if peak_ok { "ok" } else { "FAIL" },
        fit_text,
        if fit_ok { "ok" } else { "FAIL" },
    );
    (pass, text, Some(qnm.omega_qnm))
}

#[test]
fn criterion_6_qnm_spectroscopy() {
    let (pass, text, _) = qnm_checks(supported());
    verdict("6", "QNM spectroscopy", pass, &text);
}

// 7. Support independence

/// Which outputs are measured at each frequency, as a regime signature.
fn regime_structure(sweep: &SweepStageResult) -> (bool, String) {
    let rows = readouts(sweep);
    let omega_max = sweep.hydro.omega_max;
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| {
            let three = r.hr.is_some() && r.down.is_some() && r.dn.is_some();
            let two = r.hr.is_some() && r.down.is_some() && r.dn.is_none();
            if r.omega < omega_max { !three } else { !two }
        })
        .map(|r| fmt_mev(r.omega))
        .collect();
    (bad.is_empty() && !rows.is_empty(), format!("{}/{} samples with the expected channel set", rows.len() - bad.len(), rows.len()))
}

#[test]
fn criterion_7_support_independence() {
    let (_, _, with_support) = qnm_checks(supported());
    let (qnm_pass, qnm_text, without) = qnm_checks(unsupported());
    let sweep: SweepStageResult = unsupported().get(Stage::Sweep);
    let (structure_ok, structure_text) = regime_structure(&sweep);
    let shift = match (with_support, without) {
        (Some(a), Some(b)) => Some((b - a).abs() / a),
        _ => None,
    };
    let shift_ok = shift.is_some_and(|s| s < 0.10);
    verdict(
        "7",
        "support independence",
        qnm_pass && structure_ok && shift_ok,
        &format!(
            "without support: {qnm_text}; {structure_text}; Ω shift {} (tol 10%)",
            shift.map_or("n/a".into(), |s| format!("{:.2}%", 100.0 * s))
        ),
    );
}

// 8. Pseudo-unitarity with the loss switched off

#[test]
fn criterion_8_lossless_flux_balance() {
    let run = lossless();
    let sweep: SweepStageResult = run.get(Stage::Sweep);
    assert_eq!(sweep.loss_rate, 0.0);
    let omega_max = sweep.hydro.omega_max;
    let mut lines = Vec::new();
    let (mut three, mut two, mut ok) = (0, 0, true);
    for (e, b) in sweep.sweep.entries.iter().zip(sweep.balance()) {
        let Some(b) = b else {
            if e.amplitudes().is_some() {
                ok = false;
                lines.push(format!("{} unresolved channels", fmt_mev(e.omega)));
            }
            continue;
        };
        let port = if b.omega < omega_max { three += 1; 3 } else { two += 1; 2 };
        ok &= b.imbalance.abs() <= 0.05;
        lines.push(format!("{} {port}-port {:.2}%", fmt_mev(b.omega), 100.0 * b.imbalance.abs()));
    }
    let gaps = sweep.sweep.gaps();
    verdict(
        "8",
        "lossless flux balance",
        ok && three > 0 && two > 0 && gaps == 0,
        &format!("{} (tol 5%, {gaps} gaps)", lines.join(", ")),
    );
}

// 9. Numerical hygiene

fn small_run_config() -> RunConfig {
    let mut cfg = repro("fig1.conf");
    cfg.grid.n_points = 512;
    cfg
}

fn field_distance(a: &[horizon_core::C64], b: &[horizon_core::C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn criterion_9_numerical_hygiene() {
    // (a) Second order under dt halving: full pumped, lossy, defect dynamics.
    let cavity = small_run_config().cavity().unwrap();
    let t_end = 4.0;
    let evolve = |dt: f64| {
        let mut c = cavity.clone();
        c.grid = c.grid.with_dt(dt);
        let mut stepper = Stepper::new(&c);
        let mut state = FieldState { psi: c.initial_field(), t: 0.0 };
        stepper.advance(&mut state, (t_end / dt).round() as usize).unwrap();
        state.psi
    };
    let dt0 = t_end / (t_end / cavity.grid.dt).ceil();
    let fields: Vec<_> = (0..4).map(|j| evolve(dt0 / f64::from(1 << j))).collect();
    let e1 = field_distance(&fields[0], &fields[1]);
    let e2 = field_distance(&fields[1], &fields[2]);
    let e3 = field_distance(&fields[2], &fields[3]);
    let orders = [(e1 / e2).log2(), (e2 / e3).log2()];
    let order_ok = orders.iter().all(|p| (p - 2.0).abs() <= 0.2);

    // (b) Lossless, undriven evolution conserves the norm.
    let mut c = cavity.clone();
    c.absorber.strength = 0.0;
    let mut stepper = Stepper::new(&c);
    stepper.set_loss_rate(&c, 0.0);
    stepper.disable_pump();
    let mut state = FieldState { psi: c.initial_field(), t: 0.0 };
    let norm = |psi: &[horizon_core::C64]| psi.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let n0 = norm(&state.psi);
    stepper.advance(&mut state, 1000).unwrap();
    let drift = (norm(&state.psi) - n0).abs() / n0;
    let norm_ok = drift <= 1e-10;

    // (c) Linear response over a decade of probe amplitudes.
    let run = supported();
    let steady: SteadyResult = run.get(Stage::Steady);
    let hydro = steady.sweep_hydro().unwrap();
    let full = run.ws.config.cavity().unwrap();
    let base = run.ws.config.sweep_config().unwrap();
    let omega = mev_to_rate(0.2);
    let respond = |fraction: f64| {
        let mut cfg = base.clone();
        cfg.probe_fraction = fraction;
        probe_response(&full, &steady.background, &hydro, omega, &cfg).unwrap()
    };
    let (weak, strong) = (respond(1e-4), respond(1e-3));
    // Maps are normalised by the probe amplitude, so linear response leaves
    // even the raw incident reading unchanged.
    let gain = strong.incident / weak.incident - 1.0;
    let mut worst = gain.abs();
    for label in [ChannelLabel::Hr, ChannelLabel::Down, ChannelLabel::Dn] {
        if let (Some(a), Some(b)) = (weak.magnitude(label), strong.magnitude(label)) {
            worst = worst.max((b / a - 1.0).abs());
        }
    }
    let linear_ok = worst <= 0.02;

    verdict(
        "9",
        "numerical hygiene",
        order_ok && norm_ok && linear_ok,
        &format!(
            "dt-halving orders {:.3}, {:.3} (2 ± 0.2); norm drift {drift:.2e} over 1000 steps (tol 1e-10); \
             linear response worst deviation {:.2e}% over 1e-4..1e-3 (tol 2%)",
            orders[0],
            orders[1],
            100.0 * worst
        ),
    );
}
