use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gpe::{stability_bound, Absorber, Cavity, ResponseModel, SimGrid, SteadyOptions};
use crate::model::{DefectPotential, PolaritonParams, PumpProfile};
use crate::scatter::SweepConfig;
use crate::units::{mev_to_rate, ELECTRON_MASS_KG};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    /// [kg]
    pub m_star: f64,
    /// [meV]
    pub hbar_omega0: f64,
    /// [μeV]
    pub hbar_gamma: f64,
    /// [meV·μm]
    pub hbar_g: f64,
    /// [meV]
    pub hbar_omega_p: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        ParamsSection {
            m_star: 3e-5 * ELECTRON_MASS_KG,
            hbar_omega0: 1473.36,
            hbar_gamma: 47.0,
            hbar_g: 3e-4,
            hbar_omega_p: 1473.85,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n_points: usize,
    /// [μm]
    pub length: f64,
    /// [μm]
    pub x0: f64,
    /// Time step as a fraction of the kinetic stability bound.
    pub dt_fraction: f64,
    /// Absorbing layer width [μm].
    pub absorber_margin: f64,
    /// Peak absorber rate [1/ps].
    pub absorber_strength: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n_points: 2048, length: 800.0, x0: 0.0, dt_fraction: 0.8, absorber_margin: 40.0, absorber_strength: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpSection {
    /// [1/μm]
    pub k_up: f64,
    /// [1/μm]
    pub k_down: f64,
    /// [μm]
    pub x_switch: f64,
    /// [μm]
    pub switch_width: f64,
    /// Upstream amplitude above its bistability turning point, relative.
    pub up_offset: f64,
    /// Whether the downstream region is pumped at all.
    pub supported: bool,
    /// Downstream amplitude above its turning point, relative.
    pub down_offset: f64,
}

impl Default for PumpSection {
    fn default() -> Self {
        PumpSection {
            k_up: 0.27,
            k_down: 0.539,
            x_switch: 393.0,
            switch_width: 1.0,
            up_offset: 8e-4,
            supported: true,
            down_offset: 8e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DefectSection {
    pub enabled: bool,
    /// [meV], negative for a well.
    pub depth: f64,
    /// [μm]
    pub width: f64,
    /// [μm]
    pub center: f64,
}

impl Default for DefectSection {
    fn default() -> Self {
        DefectSection { enabled: true, depth: -0.85, width: 0.75, center: 400.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Nonlinear,
    Linearized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    /// [μm]
    pub center: f64,
    /// Gaussian standard deviation [μm].
    pub width: f64,
    /// Amplitude relative to the upstream pump amplitude.
    pub fraction: f64,
    /// [ps]
    pub ramp_time: f64,
    /// [ps]
    pub relax_time: f64,
    /// [ps]
    pub min_record: f64,
    pub min_samples: usize,
    pub nyquist_factor: f64,
    pub model: ModelChoice,
    /// Keep the homogeneous loss during the probe stage. Only the linearized
    /// model can switch it off.
    pub lossy: bool,
}

impl Default for ProbeSection {
    fn default() -> Self {
        ProbeSection {
            center: 300.0,
            width: 12.0,
            fraction: 1e-3,
            ramp_time: 50.0,
            relax_time: 250.0,
            min_record: 400.0,
            min_samples: 8,
            nyquist_factor: 3.0,
            model: ModelChoice::Nonlinear,
            lossy: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub points: usize,
    pub densify: usize,
    /// Densified band around the resonance, in linewidths Γ.
    pub halfspan_linewidths: f64,
    /// Explicit probe energies [meV]; replaces the generated grid when set.
    pub energies: Option<Vec<f64>>,
    pub workers: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { points: 60, densify: 3, halfspan_linewidths: 5.0, energies: None, workers: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Probe analysis windows [μm].
    pub upstream_region: (f64, f64),
    pub downstream_region: (f64, f64),
    /// Spans averaged for the plateau hydrodynamics [μm]; the middle half
    /// of each side when unset.
    pub upstream_plateau: Option<(f64, f64)>,
    pub downstream_plateau: Option<(f64, f64)>,
    pub k_padding: usize,
    /// Steady-state residual threshold [1/ps].
    pub steady_tol: f64,
    /// [ps]
    pub steady_t_max: f64,
    /// Noise kick rms per step relative to the upstream field amplitude.
    pub noise_fraction: f64,
    /// [ps]
    pub noise_duration: f64,
    /// Noise-map windows [μm].
    pub dispersion_upstream: (f64, f64),
    pub dispersion_downstream: (f64, f64),
    pub zero_tol: f64,
    /// Highest QNM search energy [meV].
    pub qnm_cutoff: f64,
    /// [μm]
    pub qnm_max_distance: f64,
    /// [μm]
    pub qnm_max_localization: f64,
    /// Fit band around the transmission peak, in linewidths Γ.
    pub fit_halfspan_linewidths: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            upstream_region: (336.0, 388.0),
            downstream_region: (410.0, 510.0),
            upstream_plateau: None,
            downstream_plateau: None,
            k_padding: 8,
            steady_tol: 1e-7,
            steady_t_max: 4000.0,
            noise_fraction: 1e-4,
            noise_duration: 600.0,
            dispersion_upstream: (60.0, 350.0),
            dispersion_downstream: (440.0, 740.0),
            zero_tol: 1e-3,
            qnm_cutoff: 1.0,
            qnm_max_distance: 20.0,
            qnm_max_localization: 100.0,
            fit_halfspan_linewidths: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub plots: bool,
    /// Also write the noise-run field histories.
    pub save_histories: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out"), plots: true, save_histories: false }
    }
}

/// Resolved run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub pump: PumpSection,
    #[serde(default)]
    pub defect: DefectSection,
    /// Absent means a steady-state-only configuration.
    #[serde(default)]
    pub probe: Option<ProbeSection>,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_seed() -> u64 {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: default_seed(),
            params: ParamsSection::default(),
            grid: GridSection::default(),
            pump: PumpSection::default(),
            defect: DefectSection::default(),
            probe: Some(ProbeSection::default()),
            sweep: SweepSection::default(),
            analysis: AnalysisSection::default(),
            output: OutputSection::default(),
        }
    }
}

/// A loaded configuration and the keys that fell back to defaults.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub defaults_used: Vec<String>,
    pub source: Option<PathBuf>,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map(|l| l.chars().count()).unwrap_or(0) + 1;
    (line, column)
}

/// Keys of `defaults` missing from `given`, as `section.key = value`.
fn missing_keys(prefix: &str, defaults: &toml::Table, given: Option<&toml::Table>, out: &mut Vec<String>) {
    for (key, value) in defaults {
        if given.is_some_and(|g| g.contains_key(key)) {
            continue;
        }
        let name = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        match value {
            toml::Value::Table(_) => {}
            _ => out.push(format!("{name} = {value}")),
        }
    }
}

impl RunConfig {
    /// Parses a configuration document and validates it.
    pub fn from_toml_str(text: &str) -> Result<LoadedConfig> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            let (line, column) = e.span().map(|s| line_column(text, s.start)).unwrap_or((0, 0));
            Error::Parse { line, column, message: e.message().to_string() }
        })?;
        let config: RunConfig = toml::from_str(text).map_err(|e: toml::de::Error| {
            let (line, column) = e.span().map(|s| line_column(text, s.start)).unwrap_or((0, 0));
            Error::Parse { line, column, message: e.message().to_string() }
        })?;
        config.validate()?;

        let defaults = toml::Table::try_from(RunConfig::default()).map_err(|e| Error::Serde(e.to_string()))?;
        let mut defaults_used = Vec::new();
        missing_keys("", &defaults, Some(&table), &mut defaults_used);
        for (section, value) in &defaults {
            if let toml::Value::Table(d) = value {
                if section == "probe" && !table.contains_key("probe") {
                    continue;
                }
                missing_keys(section, d, table.get(section).and_then(|v| v.as_table()), &mut defaults_used);
            }
        }
        Ok(LoadedConfig { config, defaults_used, source: None })
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut loaded = Self::from_toml_str(&text)?;
        loaded.source = Some(path.to_path_buf());
        Ok(loaded)
    }

    /// Checks every field before any computation starts.
    pub fn validate(&self) -> Result<()> {
        self.polariton_params().validate()?;
        let g = &self.grid;
        if g.n_points < 16 || !g.n_points.is_power_of_two() {
            return Err(Error::validation("grid.n_points", "must be a power of two ≥ 16"));
        }
        if !(g.length > 0.0) {
            return Err(Error::validation("grid.length", "must be > 0"));
        }
        if !(g.dt_fraction > 0.0 && g.dt_fraction <= 1.0) {
            return Err(Error::validation("grid.dt_fraction", "must lie in (0, 1]"));
        }
        if !(g.absorber_margin >= 0.0 && g.absorber_margin < g.length / 4.0) {
            return Err(Error::validation("grid.absorber_margin", "must lie in [0, length/4)"));
        }
        if !(g.absorber_strength >= 0.0) {
            return Err(Error::validation("grid.absorber_strength", "must be ≥ 0"));
        }
        let inside = |x: f64| x > g.x0 && x < g.x0 + g.length;
        if !inside(self.pump.x_switch) {
            return Err(Error::validation("pump.x_switch", "must lie inside the box"));
        }
        if self.pump.up_offset < 0.0 || self.pump.down_offset < 0.0 {
            return Err(Error::validation("pump", "offsets must be ≥ 0"));
        }
        if self.defect.enabled {
            self.defect_potential().unwrap().validate()?;
        }
        if let Some(p) = &self.probe {
            if !(p.width > 0.0) {
                return Err(Error::validation("probe.width", format!("must be > 0, got {}", p.width)));
            }
            if !(p.fraction > 0.0) {
                return Err(Error::validation("probe.fraction", "must be > 0"));
            }
            if !inside(p.center) {
                return Err(Error::validation("probe.center", "must lie inside the box"));
            }
            if p.relax_time < 0.0 || p.ramp_time < 0.0 || !(p.min_record > 0.0) {
                return Err(Error::validation("probe", "times must be ≥ 0 and min_record > 0"));
            }
            if p.min_samples < 4 || !(p.nyquist_factor >= 1.0) {
                return Err(Error::validation("probe", "min_samples ≥ 4 and nyquist_factor ≥ 1"));
            }
            if p.model == ModelChoice::Nonlinear && !p.lossy {
                return Err(Error::validation("probe.lossy", "loss can only be removed with model = \"linearized\""));
            }
        }
        let s = &self.sweep;
        if s.points < 2 || s.densify == 0 || s.workers == 0 {
            return Err(Error::validation("sweep", "points ≥ 2, densify ≥ 1, workers ≥ 1"));
        }
        if let Some(e) = &s.energies {
            if e.windows(2).any(|w| !(w[1] > w[0])) || e.iter().any(|x| !(*x > 0.0)) {
                return Err(Error::validation("sweep.energies", "must be positive and strictly increasing"));
            }
        }
        let a = &self.analysis;
        for (name, (lo, hi)) in [
            ("analysis.upstream_region", a.upstream_region),
            ("analysis.downstream_region", a.downstream_region),
            ("analysis.dispersion_upstream", a.dispersion_upstream),
            ("analysis.dispersion_downstream", a.dispersion_downstream),
        ]
        .into_iter()
        .chain(a.upstream_plateau.map(|r| ("analysis.upstream_plateau", r)))
        .chain(a.downstream_plateau.map(|r| ("analysis.downstream_plateau", r)))
        {
            if !(lo < hi) || !inside(lo) || !inside(hi) {
                return Err(Error::validation(name, "must be an increasing pair inside the box"));
            }
        }
        if a.k_padding == 0 || !(a.zero_tol > 0.0) || !(a.steady_tol > 0.0) || !(a.steady_t_max > 0.0) {
            return Err(Error::validation("analysis", "k_padding ≥ 1, tolerances and t_max > 0"));
        }
        if !(a.noise_fraction > 0.0 && a.noise_duration > 0.0) {
            return Err(Error::validation("analysis.noise_fraction", "noise amplitude and duration must be > 0"));
        }
        if !(a.qnm_cutoff > 0.0 && a.qnm_max_distance > 0.0 && a.qnm_max_localization > 0.0) {
            return Err(Error::validation("analysis.qnm_cutoff", "QNM search bounds must be > 0"));
        }
        if !(a.fit_halfspan_linewidths > 0.0) {
            return Err(Error::validation("analysis.fit_halfspan_linewidths", "must be > 0"));
        }
        Ok(())
    }

    pub fn polariton_params(&self) -> PolaritonParams {
        let p = &self.params;
        PolaritonParams {
            m_star: p.m_star,
            hbar_omega0: p.hbar_omega0,
            hbar_gamma: p.hbar_gamma,
            hbar_g: p.hbar_g,
            hbar_omega_p: p.hbar_omega_p,
        }
    }

    pub fn defect_potential(&self) -> Option<DefectPotential> {
        let d = &self.defect;
        d.enabled.then_some(DefectPotential { depth: d.depth, width: d.width, center: d.center })
    }

    pub fn cavity(&self) -> Result<Cavity> {
        let params = self.polariton_params();
        let g = &self.grid;
        let dx = g.length / g.n_points as f64;
        let dt = g.dt_fraction * stability_bound(dx, params.hbar_over_m());
        let grid = SimGrid::new(g.n_points, g.length, g.x0, dt)?;
        let p = &self.pump;
        let pump = PumpProfile::calibrated(
            &params,
            p.k_up,
            p.k_down,
            p.x_switch,
            p.switch_width,
            p.up_offset,
            p.supported.then_some(p.down_offset),
        )?;
        let cavity = Cavity {
            grid,
            params,
            pump,
            defect: self.defect_potential(),
            absorber: Absorber { margin: g.absorber_margin, strength: g.absorber_strength },
        };
        cavity.validate()?;
        Ok(cavity)
    }

    pub fn steady_options(&self) -> SteadyOptions {
        SteadyOptions {
            tol: self.analysis.steady_tol,
            t_max: self.analysis.steady_t_max,
            check_interval: None,
            require_horizon: true,
        }
    }

    /// Probe-stage settings; `None` for a steady-state-only configuration.
    pub fn sweep_config(&self) -> Option<SweepConfig> {
        let p = self.probe.as_ref()?;
        let model = match (p.model, p.lossy) {
            (ModelChoice::Nonlinear, _) => ResponseModel::Nonlinear,
            (ModelChoice::Linearized, true) => ResponseModel::Linearized { loss_rate: mev_to_rate(self.params.hbar_gamma * 1e-3) },
            (ModelChoice::Linearized, false) => ResponseModel::Linearized { loss_rate: 0.0 },
        };
        Some(SweepConfig {
            probe_center: p.center,
            probe_width: p.width,
            probe_fraction: p.fraction,
            ramp_time: p.ramp_time,
            relax_time: p.relax_time,
            min_record: p.min_record,
            min_samples: p.min_samples,
            nyquist_factor: p.nyquist_factor,
            upstream_region: self.analysis.upstream_region,
            downstream_region: self.analysis.downstream_region,
            k_padding: self.analysis.k_padding,
            model,
        })
    }

    /// Loss rate [1/ps] acting during the probe stage.
    pub fn probe_loss_rate(&self) -> f64 {
        match self.probe.as_ref() {
            Some(p) if !p.lossy => 0.0,
            _ => mev_to_rate(self.params.hbar_gamma * 1e-3),
        }
    }

    /// SHA-256 of the canonical JSON form, as lowercase hex. The output
    /// directory and worker count are excluded: neither changes the numbers.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output.dir = PathBuf::new();
        canonical.sweep.workers = 1;
        let json = serde_json::to_string(&canonical).expect("config serialises");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// TOML rendering of the resolved configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}
