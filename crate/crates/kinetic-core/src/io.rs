//! File emission and reload: CSV time series and keyed JSON reports.
//!
//! Two CSV layouts are emitted per run: the spectrum series (one row per
//! cell per sample, plus a `cell_index = -1` row carrying the condensate
//! atom) and the scalar diagnostics series (one row per sample). Reports
//! are JSON documents of the form `{report, definitions, data}` where
//! `definitions` maps every numeric key in `data` to a plain-language
//! meaning, so downstream tooling never guesses semantics.
//!
//! All numbers are written in shortest round-trip form, which makes the
//! files byte-identical across runs and thread counts.

use crate::error::{Error, Result};
use crate::integrator::{SampleDiagnostics, Termination, Trajectory, TrajectorySample};
use crate::spectrum::{Grid, Spectrum};
use serde::Serialize;
use std::path::Path;

/// Creates a directory (and parents) if missing.
pub fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    Error::Parse(format!("{}: {e}", path.display()))
}

/// Writes the spectrum time series: rows `(t, cell_index, omega_center,
/// f_value)` for every cell of every sample, with one extra row per
/// sample (`cell_index = -1`, `omega_center = 0`) holding the condensate.
pub fn write_spectrum_csv(trajectory: &Trajectory, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["t", "cell_index", "omega_center", "f_value"])
        .map_err(|e| csv_io(path, e))?;
    for sample in &trajectory.samples {
        let grid = sample.spectrum.grid();
        w.write_record([
            format!("{}", sample.t),
            "-1".to_string(),
            "0".to_string(),
            format!("{}", sample.spectrum.condensate()),
        ])
        .map_err(|e| csv_io(path, e))?;
        for (i, &f) in sample.spectrum.values().iter().enumerate() {
            w.write_record([
                format!("{}", sample.t),
                format!("{i}"),
                format!("{}", grid.center(i)),
                format!("{f}"),
            ])
            .map_err(|e| csv_io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Writes the scalar diagnostics series: one row per sample with mass,
/// energy, the Lyapunov functional, dissipation, condensate, and the
/// recorded dyadic interval masses.
pub fn write_diagnostics_csv(trajectory: &Trajectory, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let (n_lo, n_hi) = trajectory.dyadic_n;
    let mut header = vec![
        "t".to_string(),
        "mass".to_string(),
        "energy".to_string(),
        "lyapunov_phi".to_string(),
        "dissipation".to_string(),
        "condensate".to_string(),
    ];
    for n in n_lo..=n_hi {
        header.push(format!("dyadic_mass_{n}"));
    }
    w.write_record(&header).map_err(|e| csv_io(path, e))?;
    for sample in &trajectory.samples {
        let d = &sample.diagnostics;
        let mut row = vec![
            format!("{}", sample.t),
            format!("{}", d.mass),
            format!("{}", d.energy),
            format!("{}", d.phi),
            format!("{}", d.dissipation),
            format!("{}", d.condensate),
        ];
        for m in &d.dyadic_masses {
            row.push(format!("{m}"));
        }
        w.write_record(&row).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Reads a spectrum series back into a trajectory.
///
/// The grid and recorded dyadic range are not stored in the CSV and must
/// be supplied (normally from the run config). Scalar diagnostics are
/// recomputed from the reloaded spectra; the dissipation functional is
/// not reconstructed (it would need the kernel table) and is set to 0.
/// The reloaded termination is `Horizon` — detection analysis is re-run
/// offline by the caller when needed.
pub fn read_spectrum_series(path: &Path, grid: Grid, dyadic_n: (u32, u32)) -> Result<Trajectory> {
    let file =
        std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);

    let headers = reader.headers().map_err(|e| csv_io(path, e))?.clone();
    let expected = ["t", "cell_index", "omega_center", "f_value"];
    if headers.iter().ne(expected) {
        return Err(Error::Parse(format!(
            "{}: unexpected header {:?}, expected {:?}",
            path.display(),
            headers,
            expected
        )));
    }

    struct Pending {
        t: f64,
        condensate: f64,
        values: Vec<f64>,
        next_cell: usize,
    }
    let mut samples: Vec<TrajectorySample> = Vec::new();
    let mut pending: Option<Pending> = None;

    let finish =
        |p: Pending, samples: &mut Vec<TrajectorySample>| -> Result<()> {
            if p.next_cell != grid.n_cells {
                return Err(Error::Parse(format!(
                    "{}: sample at t={} has {} cells, expected {}",
                    path.display(),
                    p.t,
                    p.next_cell,
                    grid.n_cells
                )));
            }
            let spectrum = Spectrum::new(grid, p.values, p.condensate, p.t)?;
            if let Some(last) = samples.last() {
                if p.t <= last.t {
                    return Err(Error::Parse(format!(
                        "{}: sample times not strictly increasing at t={}",
                        path.display(),
                        p.t
                    )));
                }
            }
            samples.push(TrajectorySample {
                t: p.t,
                diagnostics: sample_scalars(&spectrum, dyadic_n)?,
                spectrum,
            });
            Ok(())
        };

    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_io(path, e))?;
        let parse_field = |idx: usize, name: &str| -> Result<f64> {
            record
                .get(idx)
                .ok_or_else(|| {
                    Error::Parse(format!(
                        "{}: row {}: missing {name}",
                        path.display(),
                        line + 2
                    ))
                })?
                .parse::<f64>()
                .map_err(|e| {
                    Error::Parse(format!(
                        "{}: row {}: bad {name}: {e}",
                        path.display(),
                        line + 2
                    ))
                })
        };
        let t = parse_field(0, "t")?;
        let cell = record
            .get(1)
            .ok_or_else(|| {
                Error::Parse(format!("{}: row {}: missing cell_index", path.display(), line + 2))
            })?
            .parse::<i64>()
            .map_err(|e| {
                Error::Parse(format!(
                    "{}: row {}: bad cell_index: {e}",
                    path.display(),
                    line + 2
                ))
            })?;
        let value = parse_field(3, "f_value")?;

        let start_new = pending.as_ref().map(|p| p.t != t).unwrap_or(true);
        if start_new {
            if let Some(p) = pending.take() {
                finish(p, &mut samples)?;
            }
            pending = Some(Pending {
                t,
                condensate: 0.0,
                values: vec![0.0; grid.n_cells],
                next_cell: 0,
            });
        }
        let p = pending.as_mut().expect("pending sample exists");
        if cell == -1 {
            p.condensate = value;
        } else {
            let idx = usize::try_from(cell).map_err(|_| {
                Error::Parse(format!(
                    "{}: row {}: negative cell index {cell}",
                    path.display(),
                    line + 2
                ))
            })?;
            if idx != p.next_cell || idx >= grid.n_cells {
                return Err(Error::Parse(format!(
                    "{}: row {}: cell index {idx} out of order (expected {})",
                    path.display(),
                    line + 2,
                    p.next_cell
                )));
            }
            p.values[idx] = value;
            p.next_cell += 1;
        }
    }
    if let Some(p) = pending.take() {
        finish(p, &mut samples)?;
    }
    if samples.is_empty() {
        return Err(Error::Parse(format!(
            "{}: no samples in spectrum series",
            path.display()
        )));
    }
    Ok(Trajectory {
        samples,
        termination: Termination::Horizon,
        condensation_t: None,
        dyadic_n,
    })
}

/// Recomputes the scalar diagnostics of a reloaded spectrum (dissipation
/// excepted; see [`read_spectrum_series`]).
fn sample_scalars(spectrum: &Spectrum, dyadic_n: (u32, u32)) -> Result<SampleDiagnostics> {
    let (lo, hi) = dyadic_n;
    let mut dyadic_masses = Vec::with_capacity((hi.saturating_sub(lo) + 1) as usize);
    for n in lo..=hi {
        dyadic_masses.push(spectrum.interval_mass(0.0, 2f64.powi(-(n as i32)))?);
    }
    Ok(SampleDiagnostics {
        mass: spectrum.mass(),
        energy: spectrum.energy(),
        phi: spectrum.lyapunov_phi(),
        dissipation: 0.0,
        condensate: spectrum.condensate(),
        dyadic_masses,
    })
}

/// Renders a keyed JSON report: `{report, definitions, data}`.
///
/// `definitions` must cover every numeric key emitted in `data`; the map
/// is written in the given order so output bytes are stable.
pub fn report_document<T: Serialize>(
    report_name: &str,
    definitions: &[(&str, &str)],
    data: &T,
) -> Result<String> {
    let mut defs = serde_json::Map::new();
    for (key, meaning) in definitions {
        defs.insert(
            (*key).to_string(),
            serde_json::Value::String((*meaning).to_string()),
        );
    }
    let document = serde_json::json!({
        "report": report_name,
        "definitions": serde_json::Value::Object(defs),
        "data": data,
    });
    let mut text = serde_json::to_string_pretty(&document)
        .map_err(|e| Error::Parse(format!("report {report_name}: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Writes a keyed JSON report (see [`report_document`]) to a file.
pub fn write_report<T: Serialize>(
    path: &Path,
    report_name: &str,
    definitions: &[(&str, &str)],
    data: &T,
) -> Result<()> {
    let text = report_document(report_name, definitions, data)?;
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}
