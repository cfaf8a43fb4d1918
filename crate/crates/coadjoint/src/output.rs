//! Trajectory tables, CSV export and JSON reports.

use std::io::Write;
use std::path::{Path, PathBuf};

use coadjoint_core::gaudin;
use coadjoint_core::linalg::{self, RealMatrix};
use coadjoint_core::multitime::{integrate_flow, FlowId, FlowSystem};
use coadjoint_core::scalar::Complex64;
use coadjoint_core::toda_aks;
use coadjoint_core::toda_cartan;
use coadjoint_core::Error as CoreError;
use serde::{Deserialize, Serialize};

use crate::config::ModelInstance;
use crate::harness::{residue_system, ModelKind, VerificationReport};

/// Sampled flow with one row per integration step.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationTable {
    pub flow: FlowId,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SimulationTable {
    /// Index of a named column.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// `flow_<level>_<site>.csv`.
    pub fn file_name(&self) -> String {
        format!("flow_{}_{}.csv", self.flow.level, self.flow.site)
    }
}

fn complex_columns(name: &str) -> [String; 2] {
    [format!("{name}_re"), format!("{name}_im")]
}

fn charpoly_names(n: usize) -> impl Iterator<Item = String> {
    (1..=n).map(|i| format!("charpoly_c{i}"))
}

fn toda_header(kind: ModelKind, sites: usize) -> Vec<String> {
    let (x, y) = if kind == ModelKind::TodaAks {
        ("u", "b")
    } else {
        ("w", "z")
    };
    let mut h = vec!["t".to_owned()];
    h.extend((1..=sites).map(|i| format!("{x}{i}")));
    h.extend((1..=sites).map(|i| format!("{y}{i}")));
    h.extend(["H1".to_owned(), "H2".to_owned()]);
    h.extend(charpoly_names(sites + 1));
    h
}

fn gaudin_header(sites: usize, dim: usize) -> Vec<String> {
    let mut h = vec!["t".to_owned()];
    for s in 1..=sites {
        for i in 1..=dim {
            for j in 1..=dim {
                h.extend(complex_columns(&format!("A{s}_{i}{j}")));
            }
        }
    }
    h.extend(complex_columns("H1"));
    h.extend(complex_columns("H2"));
    for c in charpoly_names(dim) {
        h.extend(complex_columns(&c));
    }
    h
}

fn push_complex(row: &mut Vec<f64>, values: impl IntoIterator<Item = Complex64>) {
    for v in values {
        row.push(v.re);
        row.push(v.im);
    }
}

/// Integrates `flow` for the configured span and tabulates the chart
/// coordinates, the first two Hamiltonians and the characteristic
/// polynomial. Gaudin rows use the Hamiltonians of the flow's pole and
/// `L(λ₀)` at the first spectral sample point.
pub fn simulate(
    instance: &ModelInstance,
    flow: FlowId,
    duration: f64,
    step: f64,
) -> Result<SimulationTable, CoreError> {
    match instance {
        ModelInstance::TodaAks { chart, start } => {
            let table = toda_rows(
                chart,
                start,
                flow,
                duration,
                step,
                |x| chart.lax(x),
                toda_aks::hamiltonian,
            )?;
            Ok(SimulationTable {
                flow,
                header: toda_header(ModelKind::TodaAks, chart.sites),
                rows: table,
            })
        }
        ModelInstance::TodaCartan { chart, start } => {
            let table = toda_rows(
                chart,
                start,
                flow,
                duration,
                step,
                |x| chart.lax(x),
                toda_cartan::hamiltonian_cartan,
            )?;
            Ok(SimulationTable {
                flow,
                header: toda_header(ModelKind::TodaCartan, chart.sites),
                rows: table,
            })
        }
        ModelInstance::Gaudin { orbit } => {
            let residues = &residue_system(orbit)?;
            let lax0 = orbit.lax()?;
            let lambda0 = gaudin::spectral_sample_points(lax0.poles())[0];
            let traj = integrate_flow(residues, flow, &lax0.state(), duration, step)?;
            let mut rows = Vec::with_capacity(traj.times.len());
            for (t, x) in traj.times.iter().zip(&traj.states) {
                let lax = residues.lax(x)?;
                let mut row = vec![*t];
                push_complex(&mut row, x.iter().copied());
                push_complex(
                    &mut row,
                    [
                        gaudin::hamiltonian(&lax, 1, flow.site)?,
                        gaudin::hamiltonian(&lax, 2, flow.site)?,
                    ],
                );
                push_complex(
                    &mut row,
                    linalg::charpoly_coeffs(&lax.eval(lambda0)?)[1..].iter().copied(),
                );
                rows.push(row);
            }
            Ok(SimulationTable {
                flow,
                header: gaudin_header(lax0.sites(), lax0.dim()),
                rows,
            })
        }
    }
}

fn toda_rows<M: FlowSystem<Scalar = f64>>(
    chart: &M,
    start: &[f64],
    flow: FlowId,
    duration: f64,
    step: f64,
    lax: impl Fn(&[f64]) -> Result<RealMatrix, CoreError>,
    hamiltonian: fn(usize, &RealMatrix) -> Result<f64, CoreError>,
) -> Result<Vec<Vec<f64>>, CoreError> {
    let traj = integrate_flow(chart, flow, start, duration, step)?;
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(t, x)| {
            let l = lax(x)?;
            let mut row = vec![*t];
            row.extend_from_slice(x);
            row.push(hamiltonian(1, &l)?);
            row.push(hamiltonian(2, &l)?);
            row.extend_from_slice(&linalg::charpoly_coeffs(&l)[1..]);
            Ok(row)
        })
        .collect()
}

/// Writes one CSV per table into `dir`, returning the paths.
pub fn write_tables(dir: &Path, tables: &[SimulationTable]) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    tables
        .iter()
        .map(|t| {
            let path = dir.join(t.file_name());
            let file = std::fs::File::create(&path)?;
            t.write_csv(std::io::BufWriter::new(file))
                .map_err(std::io::Error::other)?;
            Ok(path)
        })
        .collect()
}

/// Per-check entry of the JSON report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub id: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// The `verify` output document. Timing is left out so reruns compare
/// byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub model: ModelKind,
    pub checks: Vec<CheckEntry>,
    pub seed: u64,
}

impl ReportDocument {
    pub fn new(model: ModelKind, seed: u64, reports: &[VerificationReport]) -> Self {
        let checks = reports
            .iter()
            .map(|r| CheckEntry {
                id: r.check.to_string(),
                samples: r.samples,
                max_residual: r.max_residual,
                tolerance: r.tolerance,
                pass: r.pass,
            })
            .collect();
        Self { model, checks, seed }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}
