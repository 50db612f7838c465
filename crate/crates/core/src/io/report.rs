//! Figures and a markdown summary assembled from whatever checkpoints exist.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::Result;
use crate::io::files::write_atomic;
use crate::io::pipeline::{Stage, StageStatus, Workspace};
use crate::io::stages::{
    lda_curves, BdgResult, BistabilityResult, CroppedMap, DispersionResult, DispersionSide, FitResult, SteadyResult,
    SweepStageResult,
};
use crate::io::svg::{Heatmap, Plot, Series};
use crate::bdg::NormClass;
use crate::model::{drive_intensity, ChannelLabel};
use crate::units::rate_to_mev;

const BLUE: &str = "#1f77b4";
const ORANGE: &str = "#ff7f0e";
const GREEN: &str = "#2ca02c";
const RED: &str = "#d62728";
const GREY: &str = "#7f7f7f";

struct Writer<'a> {
    ws: &'a Workspace,
    files: Vec<PathBuf>,
    plots: bool,
}

impl Writer<'_> {
    fn figure(&mut self, name: &str, svg: String) -> Result<()> {
        if !self.plots {
            return Ok(());
        }
        let path = self.ws.path(&format!("{name}.svg"));
        write_atomic(&path, svg.as_bytes())?;
        self.files.push(path);
        Ok(())
    }
}

fn collect(values: &[f64], ys: &[Option<f64>]) -> Vec<(f64, f64)> {
    values.iter().zip(ys).filter_map(|(x, y)| y.map(|y| (rate_to_mev(*x), y))).collect()
}

fn heatmap(title: &str, side: &DispersionSide) -> Heatmap {
    let CroppedMap { k, omega, magnitude, .. } = &side.map;
    let curves = lda_curves(&side.hydro, k.iter().fold(0.0, |m, x| f64::max(m, x.abs())), 400);
    let top = omega.iter().fold(0.0, |m, w| f64::max(m, w.abs()));
    let clip = |pts: Vec<(f64, f64)>| pts.into_iter().filter(|p| p.1.abs() <= top).map(|(k, w)| (k, rate_to_mev(w))).collect();
    Heatmap {
        title: title.into(),
        x_label: "k [1/um]".into(),
        y_label: "energy [meV]".into(),
        x: k.clone(),
        y: omega.iter().map(|w| rate_to_mev(*w)).collect(),
        values: magnitude.clone(),
        decades: 4.0,
        overlay: vec![
            Series::points("omega+", clip(curves.iter().map(|c| (c.0, c.1)).collect()), "#ffffff"),
            Series::points("omega-", clip(curves.iter().map(|c| (c.0, c.2)).collect()), "#ff4040"),
        ],
    }
}

/// Writes every figure the available checkpoints support plus `report.md`.
pub fn write_report(ws: &Workspace) -> Result<Vec<PathBuf>> {
    let mut w = Writer { ws, files: Vec::new(), plots: ws.config.output.plots };
    let mut md = String::new();
    let _ = writeln!(md, "# Horizon run report\n\nconfig hash `{}`\n", ws.hash);

    let mut absent = Vec::new();
    let mut load = |stage: Stage| -> bool {
        let ok = ws.status(stage) == StageStatus::Valid;
        if !ok {
            absent.push(stage);
        }
        ok
    };
    let steady: Option<SteadyResult> = if load(Stage::Steady) { ws.load_optional(Stage::Steady) } else { None };
    let bist: Option<BistabilityResult> = if load(Stage::Bistability) { ws.load_optional(Stage::Bistability) } else { None };
    let disp: Option<DispersionResult> = if load(Stage::DispersionMap) { ws.load_optional(Stage::DispersionMap) } else { None };
    let bdg: Option<BdgResult> = if load(Stage::Bdg) { ws.load_optional(Stage::Bdg) } else { None };
    let sweep: Option<SweepStageResult> = if load(Stage::Sweep) { ws.load_optional(Stage::Sweep) } else { None };
    let fit: Option<FitResult> = if load(Stage::Fit) { ws.load_optional(Stage::Fit) } else { None };

    if let Some(s) = &steady {
        let cavity = ws.config.cavity()?;
        let (lo, hi) = cavity.interior();
        let all = cavity.grid.xs();
        let keep: Vec<usize> = (0..all.len()).filter(|&i| all[i] >= lo && all[i] <= hi).collect();
        let b = &s.background;
        let xs: Vec<f64> = keep.iter().map(|&i| all[i]).collect();
        let (n0, v0, c_b): (Vec<f64>, Vec<f64>, Vec<f64>) =
            (keep.iter().map(|&i| b.n0[i]).collect(), keep.iter().map(|&i| b.v0[i]).collect(), keep.iter().map(|&i| b.c_b[i]).collect());
        let scale = n0.iter().fold(0.0, |m: f64, n| m.max(*n));
        w.figure(
            "fig1a_profile",
            Plot {
                title: "Background flow".into(),
                x_label: "x [um]".into(),
                y_label: "n/n_max, v and c_B [um/ps]".into(),
                series: vec![
                    Series::line("n / n_max", xs.iter().zip(&n0).map(|(x, n)| (*x, n / scale)).collect(), GREY),
                    Series::line("|v|", xs.iter().zip(&v0).map(|(x, v)| (*x, v.abs())).collect(), BLUE),
                    Series::line("c_B", xs.iter().zip(&c_b).map(|(x, c)| (*x, *c)).collect(), ORANGE),
                ],
                ..Default::default()
            }
            .render(),
        )?;
        w.figure(
            "fig1b_metric",
            Plot {
                title: "Acoustic metric g_tt = c_B^2 - v^2".into(),
                x_label: "x [um]".into(),
                y_label: "g_tt [um^2/ps^2]".into(),
                series: vec![Series::line(
                    "g_tt",
                    xs.iter().enumerate().map(|(i, x)| (*x, c_b[i].powi(2) - v0[i].powi(2))).collect(),
                    BLUE,
                )],
                ..Default::default()
            }
            .render(),
        )?;
        let _ = writeln!(md, "## Steady state\n");
        let _ = writeln!(md, "- residual {:.3e} 1/ps at t = {:.1} ps", b.residual, b.t);
        match b.horizon_x {
            Some(x) => {
                let _ = writeln!(md, "- horizon at x = {x:.2} um");
            }
            None => {
                let _ = writeln!(md, "- no horizon");
            }
        }
        let u = &s.upstream;
        let _ = writeln!(md, "- upstream: n = {:.2} /um, v = {:.4}, c_B = {:.4} um/ps", u.n0, u.v0, u.c_b);
        if let Some(d) = &s.downstream {
            let _ = writeln!(md, "- downstream: n = {:.2} /um, v = {:.4}, c_B = {:.4} um/ps", d.n0, d.v0, d.c_b);
        }
        if let Some(win) = &s.window {
            let _ = writeln!(
                md,
                "- Hawking window {:.4} to {:.4} meV",
                rate_to_mev(win.omega_min),
                rate_to_mev(win.omega_max)
            );
        }
        md.push('\n');
    }

    if let Some(bi) = &bist {
        let params = ws.config.polariton_params();
        let mut series = Vec::new();
        for (name, delta, t, color) in
            [("upstream", bi.delta_eff.0, bi.upstream, BLUE), ("downstream", bi.delta_eff.1, bi.downstream, ORANGE)]
        {
            let top = t.map(|t| 1.5 * t[1].n0).unwrap_or(2.0 * delta.abs() / params.g()).max(1.0);
            series.push(Series::line(
                name,
                (0..=400).map(|i| top * i as f64 / 400.0).map(|n| (n, drive_intensity(n, delta, &params))).collect(),
                color,
            ));
        }
        series.push(Series::points("applied |F|^2", vec![(0.0, bi.applied.0), (0.0, bi.applied.1)], RED));
        w.figure(
            "fig1c_bistability",
            Plot {
                title: "Pump intensity versus density".into(),
                x_label: "n [1/um]".into(),
                y_label: "|F|^2 [1/(um ps^2)]".into(),
                series,
                ..Default::default()
            }
            .render(),
        )?;
    }

    if let Some(d) = &disp {
        w.figure("fig1d_dispersion_upstream", heatmap("Upstream fluctuation spectrum", &d.upstream).render())?;
        if let Some(down) = &d.downstream {
            w.figure("fig1e_dispersion_downstream", heatmap("Downstream fluctuation spectrum", down).render())?;
        }
        let _ = writeln!(md, "## Dispersion maps\n");
        for (name, side) in [("upstream", Some(&d.upstream)), ("downstream", d.downstream.as_ref())] {
            if let Some(side) = side {
                let worst = side.ridges.iter().map(|r| r.offset_bins.abs()).fold(0.0, f64::max);
                let _ = writeln!(md, "- {name}: {} ridge points, worst offset {worst:.2} k-bins", side.ridges.len());
            }
        }
        md.push('\n');
    }

    if let Some(b) = &bdg {
        let pick = |pred: &dyn Fn(&crate::io::stages::ModeRow) -> bool| -> Vec<(f64, f64)> {
            b.modes.iter().filter(|m| pred(m)).map(|m| (rate_to_mev(m.omega_re), rate_to_mev(m.omega_im))).collect()
        };
        let mut series = vec![
            Series::points("positive norm", pick(&|m| m.class == NormClass::Positive), BLUE),
            Series::points("negative norm", pick(&|m| m.class == NormClass::Negative), ORANGE),
            Series::points("zero norm", pick(&|m| m.class == NormClass::Zero), GREEN),
        ];
        if let Some(q) = &b.qnm {
            series.push(Series::points("QNM", vec![(rate_to_mev(q.omega_qnm), rate_to_mev(q.mode.omega.im))], RED));
        }
        w.figure(
            "fig1f_bdg_spectrum",
            Plot {
                title: "Bogoliubov spectrum (loss factored out)".into(),
                x_label: "Re energy [meV]".into(),
                y_label: "Im energy [meV]".into(),
                series,
                x_range: Some((-1.0, 1.0)),
                ..Default::default()
            }
            .render(),
        )?;
        let _ = writeln!(md, "## Bogoliubov spectrum\n");
        match &b.qnm {
            Some(q) => {
                let _ = writeln!(
                    md,
                    "- QNM at {:.5} meV, linewidth {:.5} meV, Q = {:.2}, centred at {:.1} um\n",
                    rate_to_mev(q.omega_qnm),
                    rate_to_mev(q.gamma_qnm),
                    q.q,
                    q.mode.center
                );
            }
            None => {
                let _ = writeln!(md, "- no QNM: {}\n", b.qnm_error.as_deref().unwrap_or("unknown"));
            }
        }
    }

    if let Some(s) = &sweep {
        let om = s.sweep.omegas();
        let wmax = rate_to_mev(s.hydro.omega_max);
        let curves = vec![
            Series::points("|HR|", collect(&om, &s.sweep.r_hr()), BLUE),
            Series::points("|down|", collect(&om, &s.sweep.t_down()), ORANGE),
            Series::points("|dn|", collect(&om, &s.sweep.t_dn()), GREEN),
            Series::line("omega_max", vec![(wmax, 1e-4), (wmax, 10.0)], GREY),
        ];
        w.figure(
            "fig2a_scattering",
            Plot {
                title: "Scattering amplitudes".into(),
                x_label: "energy [meV]".into(),
                y_label: "|amplitude|".into(),
                series: curves,
                log_y: true,
                y_range: Some((1e-4, 10.0)),
                ..Default::default()
            }
            .render(),
        )?;
        w.figure(
            "fig2b_conjugates",
            Plot {
                title: "Conjugate (negative-frequency) traces".into(),
                x_label: "energy [meV]".into(),
                y_label: "|amplitude|".into(),
                series: vec![
                    Series::points("|down*|", collect(&om, &s.sweep.conjugate_spectrum(ChannelLabel::Down)), ORANGE),
                    Series::points("|dn*|", collect(&om, &s.sweep.conjugate_spectrum(ChannelLabel::Dn)), GREEN),
                ],
                log_y: true,
                ..Default::default()
            }
            .render(),
        )?;
        // Stack the per-frequency slices into a picture of the response.
        let rows: Vec<_> = s.sweep.entries.iter().filter_map(|e| e.slices().map(|sl| (e.omega, sl))).collect();
        if let Some((_, first)) = rows.first() {
            for (name, k, pick) in [
                ("fig2c_response_upstream", &first.k_up, 0usize),
                ("fig2d_response_downstream", &first.k_down, 1usize),
            ] {
                let mut values = Vec::new();
                for (_, sl) in &rows {
                    values.extend(if pick == 0 { &sl.up } else { &sl.down }.iter().copied());
                }
                let consistent = rows.iter().all(|(_, sl)| if pick == 0 { sl.up.len() } else { sl.down.len() } == k.len());
                if consistent {
                    w.figure(
                        name,
                        Heatmap {
                            title: format!("Probe response, {}", if pick == 0 { "upstream" } else { "downstream" }),
                            x_label: "k [1/um]".into(),
                            y_label: "energy [meV]".into(),
                            x: k.clone(),
                            y: rows.iter().map(|r| rate_to_mev(r.0)).collect(),
                            values,
                            decades: 4.0,
                            overlay: vec![],
                        }
                        .render(),
                    )?;
                }
            }
        }
        let balance: Vec<(f64, f64)> =
            s.balance().iter().flatten().map(|b| (rate_to_mev(b.omega), b.imbalance.abs().max(1e-6))).collect();
        let _ = writeln!(md, "## Probe sweep\n");
        let _ = writeln!(md, "- {} frequencies, {} gaps", om.len(), s.sweep.gaps());
        let _ = writeln!(md, "- probe loss rate {:.4} 1/ps\n", s.loss_rate);
        if let Some(f) = &fit {
            let mut series = vec![Series::points("|down|", collect(&om, &s.sweep.t_down()), ORANGE)];
            if let Some(bw) = &f.fit {
                let (a, b) = f.band;
                series.push(Series::line(
                    "Breit-Wigner",
                    (0..=200)
                        .map(|i| a + (b - a) * i as f64 / 200.0)
                        .map(|x| (rate_to_mev(x), bw.evaluate(x).norm()))
                        .collect(),
                    RED,
                ));
            }
            w.figure(
                "fig2e_resonance_fit",
                Plot {
                    title: "Transmission near the resonance".into(),
                    x_label: "energy [meV]".into(),
                    y_label: "|down|".into(),
                    series,
                    x_range: Some((rate_to_mev(f.band.0), rate_to_mev(f.band.1))),
                    ..Default::default()
                }
                .render(),
            )?;
            let _ = writeln!(md, "## Resonance fit\n");
            match (&f.fit, &f.error) {
                (Some(bw), _) => {
                    let _ = writeln!(
                        md,
                        "- Omega = {:.5} meV, Gamma = {:.5} meV, residual {:.2}% over {} samples",
                        rate_to_mev(bw.omega_qnm),
                        rate_to_mev(bw.gamma_qnm),
                        100.0 * bw.residual,
                        f.samples
                    );
                    if let (Some(d), Some(t)) = (f.deviation, f.tolerance) {
                        let _ = writeln!(
                            md,
                            "- deviation from the eigenvalue {:.5} meV (allowed {:.5} meV)",
                            rate_to_mev(d),
                            rate_to_mev(t)
                        );
                    }
                }
                (None, Some(e)) => {
                    let _ = writeln!(md, "- fit failed: {e}");
                }
                _ => {}
            }
            md.push('\n');
        }
        w.figure(
            "fig2f_energy_balance",
            Plot {
                title: "Norm-flux imbalance".into(),
                x_label: "energy [meV]".into(),
                y_label: "|imbalance|".into(),
                series: vec![Series::points("imbalance", balance, BLUE)],
                log_y: true,
                ..Default::default()
            }
            .render(),
        )?;
    }

    if !absent.is_empty() {
        let _ = writeln!(md, "## Missing stages\n");
        for s in &absent {
            let why = match s {
                Stage::Sweep | Stage::Fit if ws.config.probe.is_none() => " (no [probe] section)".to_string(),
                _ => String::new(),
            };
            let _ = writeln!(md, "- `{s}`: {:?}{why}", ws.status(*s));
        }
    }
    let path = ws.path("report.md");
    write_atomic(&path, md.as_bytes())?;
    w.files.push(path);
    Ok(w.files)
}
