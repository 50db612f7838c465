use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bdg::{assemble_bdg, diagonalize, find_qnm, NormClass, QnmEstimate, QnmSearch};
use crate::error::{Error, Result};
use crate::gpe::{find_steady_state, run_with_noise, BackgroundState, Cavity, DriveTerm};
use crate::io::files::{format_number, write_history, CsvTable};
use crate::io::pipeline::{Stage, StageStatus, Workspace};
use crate::io::report::write_report;
use crate::model::{
    bistability_turning_points, dispersion_lab_frame, drive_intensity, frequency_window, metric_at, FrequencyWindow,
    LocalHydro, Side, TurningPoint,
};
use crate::scatter::{
    breit_wigner_fit, energy_balance_check, lda_ridge_offsets, probe_frequencies, prominent_peak, run_sweep, windowed_spectrum,
    AnalysisRegion, BreitWignerFit, EnergyBalance, RidgePoint, ScatterSweepResult, SpectrumMap, SweepHydro, Transmission,
};
use crate::units::{mev_to_rate, rate_to_mev};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SteadyResult {
    pub background: BackgroundState,
    pub upstream_span: (f64, f64),
    pub downstream_span: (f64, f64),
    pub upstream: LocalHydro,
    /// `None` when the downstream plateau is gapped or empty.
    pub downstream: Option<LocalHydro>,
    pub window: Option<FrequencyWindow>,
}

impl SteadyResult {
    pub fn sweep_hydro(&self) -> Result<SweepHydro> {
        let downstream = self
            .downstream
            .ok_or_else(|| Error::NotTranscritical("downstream plateau has no sound speed".into()))?;
        let window = self.window.ok_or_else(|| Error::NotTranscritical("no Hawking window".into()))?;
        Ok(SweepHydro { upstream: self.upstream, downstream, omega_max: window.omega_max })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BistabilityResult {
    /// Effective detunings up- and downstream [1/ps].
    pub delta_eff: (f64, f64),
    pub upstream: Option<[TurningPoint; 2]>,
    pub downstream: Option<[TurningPoint; 2]>,
    /// Applied |F|² on each side [1/(μm·ps²)].
    pub applied: (f64, f64),
}

/// Largest |k| kept in the stored noise maps [1/μm].
pub const MAP_K_MAX: f64 = 3.0;

/// Magnitude map cropped for storage and plotting.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CroppedMap {
    pub region: AnalysisRegion,
    pub k: Vec<f64>,
    pub omega: Vec<f64>,
    /// Row-major, one row per ω.
    pub magnitude: Vec<f64>,
    pub resolution: (f64, f64),
}

impl CroppedMap {
    /// Keeps |k| ≤ `k_max` and |ω| ≤ `omega_max`, every `k_stride`-th column.
    fn from_map(map: &SpectrumMap, k_max: f64, omega_max: f64, k_stride: usize) -> Self {
        let ks: Vec<usize> =
            (0..map.k_axis.len()).step_by(k_stride.max(1)).filter(|&q| map.k_axis[q].abs() <= k_max).collect();
        let ws: Vec<usize> = (0..map.omega_axis.len()).filter(|&w| map.omega_axis[w].abs() <= omega_max).collect();
        let magnitude = ws.iter().flat_map(|&w| ks.iter().map(move |&q| (w, q))).map(|(w, q)| map.value(w, q).norm()).collect();
        CroppedMap {
            region: map.region,
            k: ks.iter().map(|&q| map.k_axis[q]).collect(),
            omega: ws.iter().map(|&w| map.omega_axis[w]).collect(),
            magnitude,
            resolution: map.resolution,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DispersionSide {
    pub map: CroppedMap,
    pub hydro: LocalHydro,
    pub ridges: Vec<RidgePoint>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DispersionResult {
    pub upstream: DispersionSide,
    pub downstream: Option<DispersionSide>,
    /// Highest frequency kept [1/ps].
    pub omega_top: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ModeRow {
    pub omega_re: f64,
    pub omega_im: f64,
    pub norm: f64,
    pub localization: f64,
    pub center: f64,
    pub class: NormClass,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BdgResult {
    pub modes: Vec<ModeRow>,
    pub search: QnmSearch,
    pub zero_tol: f64,
    pub qnm: Option<QnmEstimate>,
    pub qnm_error: Option<String>,
    pub candidates: Vec<QnmEstimate>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepStageResult {
    pub sweep: ScatterSweepResult,
    pub hydro: SweepHydro,
    /// Loss rate acting on the probe response [1/ps].
    pub loss_rate: f64,
    pub horizon_x: f64,
}

impl SweepStageResult {
    /// Flux bookkeeping per frequency; `None` for gaps and for frequencies
    /// with channels too close to separate.
    pub fn balance(&self) -> Vec<Option<EnergyBalance>> {
        let check = |a| energy_balance_check(a, self.horizon_x, self.loss_rate);
        self.sweep.entries.iter().map(|e| e.amplitudes().and_then(check)).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitResult {
    pub fit: Option<BreitWignerFit>,
    pub error: Option<String>,
    /// Sweep frequency with the largest |down| above the window [1/ps].
    pub peak_omega: Option<f64>,
    /// Re ω of the QNM eigenvalue [1/ps].
    pub eigen_omega: Option<f64>,
    /// |Ω_fit − Re ω_qnm| [1/ps] and the allowed deviation.
    pub deviation: Option<f64>,
    pub tolerance: Option<f64>,
    pub band: (f64, f64),
    pub samples: usize,
}

/// Options shared by every stage invocation.
#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub workers: usize,
    /// Recompute even when a valid checkpoint exists.
    pub overwrite: bool,
}

#[derive(Clone, Debug, Default)]
pub struct StageReport {
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
    pub skipped: bool,
}

impl StageReport {
    fn say(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }
}

/// Runs one stage, or reports it up to date.
pub fn run_stage(ws: &Workspace, stage: Stage, options: &RunOptions) -> Result<StageReport> {
    if stage != Stage::Report && !options.overwrite && ws.status(stage) == StageStatus::Valid {
        return Ok(StageReport {
            lines: vec![format!("{stage}: up to date ({})", ws.checkpoint_path(stage).display())],
            files: vec![],
            skipped: true,
        });
    }
    let mut report = StageReport::default();
    match stage {
        Stage::Steady => steady(ws, &mut report)?,
        Stage::Bistability => bistability(ws, &mut report)?,
        Stage::DispersionMap => dispersion_map(ws, &mut report)?,
        Stage::Bdg => bdg(ws, &mut report)?,
        Stage::Sweep => sweep(ws, options.workers, &mut report)?,
        Stage::Fit => fit(ws, &mut report)?,
        Stage::Report => {
            let files = write_report(ws)?;
            report.say(format!("report: {} files, summary in {}", files.len(), ws.path("report.md").display()));
            report.files = files;
        }
    }
    Ok(report)
}

fn mev(rate: f64) -> String {
    format!("{:.4} meV", rate_to_mev(rate))
}

fn steady(ws: &Workspace, report: &mut StageReport) -> Result<()> {
    let cfg = &ws.config;
    let cavity = cfg.cavity()?;
    let background = find_steady_state(&cavity, &cfg.steady_options())?;
    let upstream_span = cfg.analysis.upstream_plateau.unwrap_or(BackgroundState::plateau_span(&cavity, Side::Upstream));
    let downstream_span =
        cfg.analysis.downstream_plateau.unwrap_or(BackgroundState::plateau_span(&cavity, Side::Downstream));
    let upstream = background.hydro_over(&cavity, upstream_span)?;
    let downstream = background.hydro_over(&cavity, downstream_span).ok();
    let window = downstream.and_then(|d| frequency_window(&upstream, &d).ok());
    let result = SteadyResult { background, upstream_span, downstream_span, upstream, downstream, window };

    let b = &result.background;
    let mut csv = CsvTable::new(&[
        ("x", "um"),
        ("density", "1/um"),
        ("velocity", "um/ps"),
        ("sound_speed", "um/ps"),
        ("mach", "1"),
        ("g_tt", "um^2/ps^2"),
        ("rest_mass", "kg"),
        ("re_psi", "um^-1/2"),
        ("im_psi", "um^-1/2"),
    ]);
    csv.note("horizon_x_um", format_number(b.horizon_x));
    for (i, x) in cavity.grid.xs().into_iter().enumerate() {
        let c = b.c_b[i];
        let g_tt = c * c - b.v0[i] * b.v0[i];
        csv.push_numbers(&[
            Some(x),
            Some(b.n0[i]),
            Some(b.v0[i]),
            Some(c),
            (c > 0.0).then(|| b.v0[i].abs() / c),
            Some(g_tt),
            b.m_det[i],
            Some(b.psi0[i].re),
            Some(b.psi0[i].im),
        ]);
    }
    let profile = ws.path("steady_profile.csv");
    csv.write(&profile, &ws.hash)?;
    report.files.push(profile);
    report.files.push(ws.save(Stage::Steady, &result)?);

    report.say(format!("steady: converged at t = {:.1} ps, residual {:.2e} 1/ps", b.t, b.residual));
    match b.horizon_x {
        Some(x) => report.say(format!("steady: horizon at x = {x:.2} um ({} sonic crossing(s))", b.sonic_crossings.len())),
        None => report.say("steady: no horizon"),
    }
    let up = &result.upstream;
    report.say(format!("steady: upstream plateau n = {:.1} /um, v = {:.3}, c_B = {:.3} um/ps", up.n0, up.v0, up.c_b));
    if let Some(d) = &result.downstream {
        let m = metric_at(d);
        report.say(format!(
            "steady: downstream plateau n = {:.1} /um, v = {:.3}, c_B = {:.3} um/ps, g_tt = {:.3}",
            d.n0, d.v0, d.c_b, m.g_tt
        ));
    }
    if let Some(w) = &result.window {
        report.say(format!("steady: Hawking window {} to {}", mev(w.omega_min), mev(w.omega_max)));
    }
    Ok(())
}

fn bistability(ws: &Workspace, report: &mut StageReport) -> Result<()> {
    let cfg = &ws.config;
    let cavity = cfg.cavity()?;
    let p = &cavity.params;
    let (v_up, v_down) = (p.velocity_of(cavity.pump.k_up), p.velocity_of(cavity.pump.k_down));
    let delta_eff = (p.delta_eff(v_up), p.delta_eff(v_down));
    let result = BistabilityResult {
        delta_eff,
        upstream: bistability_turning_points(v_up, p),
        downstream: bistability_turning_points(v_down, p),
        applied: (cavity.pump.f_up.powi(2), cavity.pump.f_down.powi(2)),
    };
    let top = [result.upstream, result.downstream]
        .iter()
        .flatten()
        .map(|t| t[1].n0)
        .fold(2.0 * delta_eff.0.max(delta_eff.1) / p.g(), f64::max)
        * 1.3;
    let mut csv = CsvTable::new(&[("density", "1/um"), ("drive_sq_up", "1/(um ps^2)"), ("drive_sq_down", "1/(um ps^2)")]);
    for t in [&result.upstream, &result.downstream] {
        if let Some([lo, hi]) = t {
            csv.note("turning_points", format!("n = {:.6e}, {:.6e} /um", lo.n0, hi.n0));
        }
    }
    let samples = 2000;
    for i in 0..=samples {
        let n = top * i as f64 / samples as f64;
        csv.push_numbers(&[Some(n), Some(drive_intensity(n, delta_eff.0, p)), Some(drive_intensity(n, delta_eff.1, p))]);
    }
    let path = ws.path("bistability.csv");
    csv.write(&path, &ws.hash)?;
    report.files.push(path);
    report.files.push(ws.save(Stage::Bistability, &result)?);
    report.say(format!("bistability: delta_eff up {} / down {}", mev(delta_eff.0), mev(delta_eff.1)));
    for (side, t) in [("up", &result.upstream), ("down", &result.downstream)] {
        match t {
            Some([lo, hi]) => report.say(format!("bistability: {side}stream turning points at n = {:.2} and {:.2} /um", lo.n0, hi.n0)),
            None => report.say(format!("bistability: {side}stream response is single-valued")),
        }
    }
    Ok(())
}

/// Frequencies at which ridges are compared with the plane-wave dispersion.
fn ridge_frequencies(omega_lo: f64, omega_top: f64) -> Vec<f64> {
    let n = 12;
    (0..n).map(|i| omega_lo + (omega_top - omega_lo) * (0.1 + 0.8 * i as f64 / (n - 1) as f64)).collect()
}

fn dispersion_map(ws: &Workspace, report: &mut StageReport) -> Result<()> {
    let cfg = &ws.config;
    let cavity = cfg.cavity()?;
    let steady: SteadyResult = ws.load(Stage::DispersionMap, Stage::Steady)?;
    let omega_max = steady.window.map(|w| w.omega_max).unwrap_or(steady.upstream.c_b);
    let omega_top = 3.0 * omega_max;
    // White noise excites every branch; sample fast enough that nothing with
    // |k| ≤ MAP_K_MAX folds back into the displayed band.
    let fastest = [Some(steady.upstream), steady.downstream]
        .iter()
        .flatten()
        .flat_map(|h| lda_curves(h, MAP_K_MAX, 600))
        .map(|(_, p, m)| p.abs().max(m.abs()))
        .fold(omega_top, f64::max);
    let stride = ((std::f64::consts::PI / (1.1 * fastest * cavity.grid.dt)).floor() as usize).max(1);
    let amplitude = cfg.analysis.noise_fraction * cavity.upstream_solution().norm();
    let noise = DriveTerm::white_noise(&cavity.grid, amplitude, cfg.seed);
    let history = run_with_noise(&cavity, &steady.background, &noise, cfg.analysis.noise_duration, stride)?
        .to_comoving(&steady.background.phase_factor());
    if cfg.output.save_histories {
        let p = ws.path("noise_history.bin");
        write_history(&p, &history, &ws.hash)?;
        report.files.push(p.clone());
        report.files.push(p.with_extension("json"));
    }
    let build = |side: Side, (lo, hi): (f64, f64), hydro: LocalHydro| -> Result<DispersionSide> {
        let map = windowed_spectrum(&history, AnalysisRegion::new(side, lo, hi), 4, amplitude)?;
        let omegas = ridge_frequencies(hydro.gap().max(0.0), omega_top);
        let ridges = lda_ridge_offsets(&map, &hydro, &omegas, 2)?;
        Ok(DispersionSide { map: CroppedMap::from_map(&map, MAP_K_MAX, omega_top, 4), hydro, ridges })
    };
    let upstream = build(Side::Upstream, cfg.analysis.dispersion_upstream, steady.upstream)?;
    let downstream = match steady.downstream {
        Some(h) => Some(build(Side::Downstream, cfg.analysis.dispersion_downstream, h)?),
        None => None,
    };
    let result = DispersionResult { upstream, downstream, omega_top };

    let mut csv = CsvTable::new(&[
        ("side", "-"),
        ("omega", "meV"),
        ("branch", "1"),
        ("k_lda", "1/um"),
        ("k_ridge", "1/um"),
        ("offset", "bins"),
        ("relative", "1"),
    ]);
    for (name, side) in [("upstream", Some(&result.upstream)), ("downstream", result.downstream.as_ref())] {
        let Some(side) = side else { continue };
        for r in &side.ridges {
            let nums = [Some(rate_to_mev(r.omega)), Some(f64::from(r.branch)), Some(r.k_lda), Some(r.k_ridge), Some(r.offset_bins), Some(r.relative)];
            let mut cells = vec![name.to_string()];
            cells.extend(nums.iter().map(|v| format_number(*v)));
            csv.push_row(cells);
        }
        let worst = side.ridges.iter().map(|r| r.offset_bins.abs()).fold(0.0, f64::max);
        let worst_rel = side.ridges.iter().map(|r| r.relative).fold(0.0, f64::max);
        report.say(format!(
            "dispersion-map: {name} {} ridge points, worst offset {:.2} bins ({:.1}%)",
            side.ridges.len(),
            worst,
            100.0 * worst_rel
        ));
    }
    let path = ws.path("dispersion_ridges.csv");
    csv.write(&path, &ws.hash)?;
    report.files.push(path);
    report.files.push(ws.save(Stage::DispersionMap, &result)?);
    Ok(())
}

fn bdg(ws: &Workspace, report: &mut StageReport) -> Result<()> {
    let cfg = &ws.config;
    let cavity = cfg.cavity()?;
    let steady: SteadyResult = ws.load(Stage::Bdg, Stage::Steady)?;
    let horizon_x = steady.background.horizon_x.ok_or_else(|| Error::NotTranscritical("no horizon".into()))?;
    let omega_max = steady.window.map(|w| w.omega_max).ok_or_else(|| Error::NotTranscritical("no Hawking window".into()))?;
    let op = assemble_bdg(&steady.background, &cavity);
    let modes = diagonalize(&op, cfg.analysis.zero_tol)?;
    let search = QnmSearch {
        omega_max,
        omega_cutoff: mev_to_rate(cfg.analysis.qnm_cutoff),
        horizon_x,
        max_distance: cfg.analysis.qnm_max_distance,
        max_localization: cfg.analysis.qnm_max_localization,
        gamma: cavity.params.gamma(),
    };
    let (qnm, qnm_error, candidates) = match find_qnm(&modes, &search) {
        Ok(q) => (Some(q), None, vec![]),
        Err(Error::MultipleQnmCandidates(all)) => (None, Some(format!("{} QNM candidates", all.len())), all),
        Err(e) => (None, Some(e.to_string()), vec![]),
    };
    let rows: Vec<ModeRow> = modes
        .iter()
        .map(|m| ModeRow {
            omega_re: m.omega.re,
            omega_im: m.omega.im,
            norm: m.norm,
            localization: m.localization,
            center: m.center,
            class: m.classification,
        })
        .collect();
    let mut csv = CsvTable::new(&[
        ("re_omega_meV", "meV"),
        ("im_omega_meV", "meV"),
        ("norm", "1"),
        ("localization_um", "um"),
        ("center_um", "um"),
        ("classification", "-"),
    ]);
    csv.note("zero_tol", cfg.analysis.zero_tol);
    csv.note("loss", "factored out; add -gamma/2 to im_omega for the lab-frame decay");
    for r in &rows {
        let mut cells: Vec<String> = [rate_to_mev(r.omega_re), rate_to_mev(r.omega_im), r.norm, r.localization, r.center]
            .iter()
            .map(|v| format_number(Some(*v)))
            .collect();
        cells.push(r.class.as_str().into());
        csv.push_row(cells);
    }
    let table = ws.path("bdg_modes.csv");
    csv.write(&table, &ws.hash)?;
    report.files.push(table);

    let qnm_record = serde_json::json!({
        "config_hash": ws.hash,
        "found": qnm.is_some(),
        "error": qnm_error,
        "omega_qnm_meV": qnm.as_ref().map(|q| rate_to_mev(q.omega_qnm)),
        "gamma_qnm_meV": qnm.as_ref().map(|q| rate_to_mev(q.gamma_qnm)),
        "gamma_radiative_meV": qnm.as_ref().map(|q| rate_to_mev(q.gamma_radiative)),
        "gamma_intrinsic_meV": rate_to_mev(search.gamma),
        "q": qnm.as_ref().map(|q| q.q),
        "center_um": qnm.as_ref().map(|q| q.mode.center),
        "localization_um": qnm.as_ref().map(|q| q.mode.localization),
        "omega_max_meV": rate_to_mev(omega_max),
        "tolerances": {
            "zero_tol": cfg.analysis.zero_tol,
            "max_distance_um": search.max_distance,
            "max_localization_um": search.max_localization,
            "cutoff_meV": cfg.analysis.qnm_cutoff,
        },
    });
    let qnm_path = ws.path("qnm.json");
    crate::io::files::write_json(&qnm_path, &qnm_record)?;
    report.files.push(qnm_path);

    let zero = rows.iter().filter(|r| r.class == NormClass::Zero).count();
    report.say(format!("bdg: {} modes, {zero} zero-norm", rows.len()));
    match &qnm {
        Some(q) => report.say(format!(
            "bdg: QNM at {} with Gamma = {} (Q = {:.2}), centred at x = {:.1} um",
            mev(q.omega_qnm),
            mev(q.gamma_qnm),
            q.q,
            q.mode.center
        )),
        None => report.say(format!("bdg: no QNM ({})", qnm_error.as_deref().unwrap_or("?"))),
    }
    let result = BdgResult { modes: rows, search, zero_tol: cfg.analysis.zero_tol, qnm, qnm_error, candidates };
    report.files.push(ws.save(Stage::Bdg, &result)?);
    Ok(())
}

fn sweep(ws: &Workspace, workers: usize, report: &mut StageReport) -> Result<()> {
    let cfg = &ws.config;
    let sweep_cfg = cfg
        .sweep_config()
        .ok_or_else(|| Error::validation("probe", "the sweep stage needs a [probe] section"))?;
    let cavity: Cavity = cfg.cavity()?;
    let steady: SteadyResult = ws.load(Stage::Sweep, Stage::Steady)?;
    let hydro = steady.sweep_hydro()?;
    let omegas = match &cfg.sweep.energies {
        Some(e) => e.iter().map(|x| mev_to_rate(*x)).collect(),
        None => {
            let bdg: BdgResult = ws.load(Stage::Sweep, Stage::Bdg)?;
            let omega_min = hydro.upstream.gap();
            match &bdg.qnm {
                Some(q) => probe_frequencies(
                    omega_min,
                    q.omega_qnm,
                    cfg.sweep.halfspan_linewidths * q.gamma_qnm,
                    cfg.sweep.points,
                    cfg.sweep.densify,
                ),
                // Without a resonance estimate, cover up to the search cutoff evenly.
                None => probe_frequencies(omega_min, bdg.search.omega_cutoff / 1.5, 0.0, cfg.sweep.points, 1),
            }
        }
    };
    let horizon_x = steady.background.horizon_x.unwrap_or(cfg.pump.x_switch);
    let result = run_sweep(&cavity, &steady.background, &hydro, &omegas, &sweep_cfg, workers)?;
    let loss_rate = cfg.probe_loss_rate();
    let stage = SweepStageResult { sweep: result, hydro, loss_rate, horizon_x };
    let result = &stage.sweep;
    let balance = stage.balance();

    let mut csv = CsvTable::new(&[
        ("omega_meV", "meV"),
        ("abs_HR", "1"),
        ("abs_down", "1"),
        ("abs_dn", "1"),
        ("abs_down_star", "1"),
        ("abs_dn_star", "1"),
        ("gap_flag", "0/1"),
        ("unresolved", "labels"),
    ]);
    csv.note("normalisation", "amplitudes relative to the incident trace |A_in(k_in, omega)|");
    csv.note("unresolved", "channels closer than two window bins in k on one side; their amplitudes are left blank");
    csv.note("window", format!("hann x hann, k padding {}", sweep_cfg.k_padding));
    csv.note("upstream_region_um", format!("{:?}", sweep_cfg.upstream_region));
    csv.note("downstream_region_um", format!("{:?}", sweep_cfg.downstream_region));
    csv.note("omega_max_meV", format_number(Some(rate_to_mev(hydro.omega_max))));
    use crate::model::ChannelLabel as L;
    for e in &result.entries {
        let a = e.amplitudes();
        let direct = |l: L| a.and_then(|a| a.magnitude(l));
        let conj = |l: L| a.and_then(|a| a.conjugate_magnitude(l));
        let mut cells: Vec<String> = [
            Some(rate_to_mev(e.omega)),
            direct(L::Hr),
            direct(L::Down),
            direct(L::Dn),
            conj(L::Down),
            conj(L::Dn),
        ]
        .iter()
        .map(|v| format_number(*v))
        .collect();
        cells.push(if a.is_some() { "0".into() } else { "1".into() });
        cells.push(a.map(|a| a.unresolved().iter().map(|l| l.as_str()).collect::<Vec<_>>().join(";")).unwrap_or_default());
        csv.push_row(cells);
    }
    let path = ws.path("sweep.csv");
    csv.write(&path, &ws.hash)?;
    report.files.push(path);

    let mut bal = CsvTable::new(&[
        ("omega_meV", "meV"),
        ("influx", "um/ps"),
        ("outflux", "um/ps"),
        ("imbalance", "1"),
        ("loss_budget", "um/ps"),
    ]);
    bal.note("loss_rate_per_ps", loss_rate);
    for b in balance.iter().flatten() {
        bal.push_numbers(&[Some(rate_to_mev(b.omega)), Some(b.influx), Some(b.outflux), Some(b.imbalance), Some(b.loss_budget)]);
    }
    let path = ws.path("energy_balance.csv");
    bal.write(&path, &ws.hash)?;
    report.files.push(path);

    report.say(format!("sweep: {} frequencies, {} gaps", result.entries.len(), result.gaps()));
    for e in result.entries.iter().filter(|e| e.amplitudes().is_none()) {
        if let crate::scatter::SweepOutcome::Gap { reason } = &e.outcome {
            report.say(format!("sweep: gap at {}: {reason}", mev(e.omega)));
        }
    }
    report.files.push(ws.save(Stage::Sweep, &stage)?);
    Ok(())
}

fn fit(ws: &Workspace, report: &mut StageReport) -> Result<()> {
    let cfg = &ws.config;
    let sweep: SweepStageResult = ws.load(Stage::Fit, Stage::Sweep)?;
    let bdg: BdgResult = ws.load(Stage::Fit, Stage::Bdg)?;
    let result = fit_transmission(&sweep, &bdg, cfg.analysis.fit_halfspan_linewidths);
    match (&result.fit, &result.error) {
        (Some(f), _) => {
            report.say(format!(
                "fit: Omega = {} Gamma = {} residual {:.2}%",
                mev(f.omega_qnm),
                mev(f.gamma_qnm),
                100.0 * f.residual
            ));
            if let (Some(d), Some(t)) = (result.deviation, result.tolerance) {
                report.say(format!("fit: eigenvalue deviation {} (allowed {})", mev(d), mev(t)));
            }
        }
        (None, Some(e)) => report.say(format!("fit: failed: {e}")),
        _ => {}
    }
    let path = ws.path("fit.json");
    crate::io::files::write_json(&path, &serde_json::json!({ "config_hash": ws.hash, "result": &result }))?;
    report.files.push(path);
    report.files.push(ws.save(Stage::Fit, &result)?);
    Ok(())
}

/// Breit-Wigner fit of |down| around its peak above the Hawking window.
pub fn fit_transmission(sweep: &SweepStageResult, bdg: &BdgResult, halfspan_linewidths: f64) -> FitResult {
    let omegas = sweep.sweep.omegas();
    let t_down = sweep.sweep.t_down();
    let samples: Vec<(f64, f64)> = omegas
        .iter()
        .zip(&t_down)
        .filter(|(w, _)| **w > sweep.hydro.omega_max)
        .filter_map(|(w, t)| t.map(|t| (*w, t)))
        .collect();
    let magnitudes: Vec<f64> = samples.iter().map(|p| p.1).collect();
    let peak = prominent_peak(&magnitudes).map(|i| samples[i].0);
    let eigen_omega = bdg.qnm.as_ref().map(|q| q.omega_qnm);
    let width = bdg.qnm.as_ref().map(|q| q.gamma_qnm).unwrap_or(0.1 * peak.unwrap_or(1.0));
    let center = peak.unwrap_or(0.0);
    let band = (center - halfspan_linewidths * width, center + halfspan_linewidths * width);
    let inside: Vec<(f64, f64)> = samples.iter().copied().filter(|(w, _)| *w >= band.0 && *w <= band.1).collect();
    let ws: Vec<f64> = inside.iter().map(|p| p.0).collect();
    let ts: Vec<f64> = inside.iter().map(|p| p.1).collect();
    let spacing = {
        let mut d: Vec<f64> = omegas.windows(2).map(|w| w[1] - w[0]).collect();
        d.sort_by(f64::total_cmp);
        d.get(d.len() / 2).copied().unwrap_or(0.0)
    };
    let (fit, error) = match breit_wigner_fit(&ws, Transmission::Magnitude(&ts)) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let deviation = match (&fit, eigen_omega) {
        (Some(f), Some(e)) => Some((f.omega_qnm - e).abs()),
        _ => None,
    };
    let tolerance = eigen_omega.map(|e| (0.05 * e).max(2.0 * spacing));
    FitResult { fit, error, peak_omega: peak, eigen_omega, deviation, tolerance, band, samples: ws.len() }
}

/// Positive and negative branches of the plane-wave dispersion over k.
pub fn lda_curves(hydro: &LocalHydro, k_max: f64, samples: usize) -> Vec<(f64, f64, f64)> {
    (0..=samples)
        .map(|i| {
            let k = -k_max + 2.0 * k_max * i as f64 / samples as f64;
            let (p, m) = dispersion_lab_frame(k, hydro);
            (k, p, m)
        })
        .collect()
}
