use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpe::{FieldHistory, SimGrid};

/// Writes through a temporary sibling and renames it over `path`, so readers
/// never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Serde(e.to_string()))?;
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))
}

/// 12 significant digits, fixed exponent form; empty for missing values.
pub fn format_number(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.11e}"),
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}

/// CSV table with `#` header lines carrying the config hash and units.
pub struct CsvTable {
    columns: Vec<String>,
    units: Vec<String>,
    rows: Vec<Vec<String>>,
    notes: Vec<String>,
}

impl CsvTable {
    /// `columns` pairs each column name with its unit.
    pub fn new(columns: &[(&str, &str)]) -> Self {
        CsvTable {
            columns: columns.iter().map(|(c, _)| c.to_string()).collect(),
            units: columns.iter().map(|(_, u)| u.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Extra `# key: value` header line.
    pub fn note(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.notes.push(format!("{key}: {value}"));
        self
    }

    pub fn push_numbers(&mut self, values: &[Option<f64>]) {
        self.push_row(values.iter().map(|v| format_number(*v)).collect());
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn render(&self, config_hash: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# config_hash: {config_hash}");
        let units: Vec<String> = self.columns.iter().zip(&self.units).map(|(c, u)| format!("{c}[{u}]")).collect();
        let _ = writeln!(out, "# units: {}", units.join(" "));
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path, config_hash: &str) -> Result<()> {
        write_atomic(path, self.render(config_hash).as_bytes())
    }
}

/// Sidecar describing a raw field-history file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryHeader {
    pub grid: SimGrid,
    pub frames: usize,
    pub dt_record_ps: f64,
    pub t_start_ps: f64,
    pub omega_p_per_ps: f64,
    pub comoving: bool,
    pub layout: String,
    pub units: String,
    pub config_hash: String,
}

/// Writes frames as little-endian f64 pairs (re, im), row-major in time, with
/// a JSON sidecar next to it.
pub fn write_history(path: &Path, history: &FieldHistory, config_hash: &str) -> Result<()> {
    let mut bytes = Vec::with_capacity(history.data.len() * 16);
    for z in &history.data {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    write_atomic(path, &bytes)?;
    let header = HistoryHeader {
        grid: history.grid.clone(),
        frames: history.n_frames(),
        dt_record_ps: history.dt_record,
        t_start_ps: history.t_start,
        omega_p_per_ps: history.omega_p,
        comoving: history.comoving,
        layout: "rows = frames, columns = grid points, interleaved re/im little-endian f64".into(),
        units: "field [μm^-1/2], x [μm], t [ps]".into(),
        config_hash: config_hash.into(),
    };
    write_json(&path.with_extension("json"), &header)
}

pub fn read_history(path: &Path) -> Result<FieldHistory> {
    let header: HistoryHeader = read_json(&path.with_extension("json"))?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = header.frames * header.grid.n_points * 16;
    if bytes.len() != expected {
        return Err(Error::InvalidInput(format!("{}: {} bytes, expected {expected}", path.display(), bytes.len())));
    }
    let mut h = FieldHistory::new(header.grid, header.dt_record_ps, header.t_start_ps, header.omega_p_per_ps);
    h.comoving = header.comoving;
    h.data = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            crate::C64::new(re, im)
        })
        .collect();
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    #[test]
    fn numbers_have_twelve_significant_digits() {
        assert_eq!(format_number(Some(1.0 / 3.0)), "3.33333333333e-1");
        assert_eq!(format_number(Some(-1234.5)), "-1.23450000000e3");
        assert_eq!(format_number(None), "");
    }

    #[test]
    fn csv_header_carries_hash_and_units() {
        let mut t = CsvTable::new(&[("omega", "meV"), ("abs_HR", "1")]);
        t.note("window", "hann");
        t.push_numbers(&[Some(0.1), None]);
        let text = t.render("abc");
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# config_hash: abc");
        assert_eq!(lines[1], "# units: omega[meV] abs_HR[1]");
        assert_eq!(lines[3], "omega,abs_HR");
        assert_eq!(lines[4], "1.00000000000e-1,");
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn history_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let grid = SimGrid::new(16, 8.0, 0.0, 0.01).unwrap();
        let mut h = FieldHistory::new(grid, 0.5, 1.0, 2.0);
        for j in 0..3 {
            h.push((0..16).map(|i| C64::new(i as f64, -(j as f64))));
        }
        let p = dir.path().join("h.bin");
        write_history(&p, &h, "hash").unwrap();
        assert_eq!(read_history(&p).unwrap(), h);
    }
}
