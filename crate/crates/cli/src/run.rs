//! Experiment dispatch.

use std::io::Write;

use rayon::prelude::*;
use serde_json::{Map, Value};

use polariton_core::hubbard::{build_bh_hamiltonian, ground_state, site_statistics};
use polariton_core::lindblad::{evolve, initial_mott_state, EvolutionControl};
use polariton_core::micro::extract_kappa_shift;
use polariton_core::params::{adiabatic_margin, effective_parameters, validity_report_with};
use polariton_core::{BHParams, FockBasis, IntegratorSettings, ValidityReport};

use crate::config::{ExperimentConfig, ExperimentKind, OutputFormat};
use crate::output::{write_series, write_table, Table};
use crate::CliError;

/// Caps the worker threads of parameter scans.
pub const THREADS_ENV: &str = "POLARITON_BH_THREADS";

/// Validity checks made during a run.
#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub checks: Vec<(String, ValidityReport)>,
}

impl RunOutcome {
    pub fn validity_passed(&self) -> bool {
        self.checks.iter().all(|(_, r)| r.passes())
    }

    /// One line per failed check.
    pub fn warnings(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|(_, r)| !r.passes())
            .map(|(label, r)| {
                format!(
                    "validity {:?} at {label}: worst ratio {:.4} exceeds threshold {}",
                    r.verdict(),
                    r.max_ratio(),
                    r.threshold
                )
            })
            .collect()
    }

    /// 0 on success; 2 when `strict` and a validity check failed.
    pub fn exit_code(&self, strict: bool) -> u8 {
        if strict && !self.validity_passed() {
            2
        } else {
            0
        }
    }
}

pub fn run_experiment(
    config: &ExperimentConfig,
    kind: ExperimentKind,
    out: &mut dyn Write,
) -> Result<RunOutcome, CliError> {
    match kind {
        ExperimentKind::Params => run_params(config, out),
        ExperimentKind::GroundScan => run_ground_scan(config, out),
        ExperimentKind::Ramp => run_ramp(config, out),
        ExperimentKind::ValidateMicro => run_validate_micro(config, out),
    }
}

/// Ordered `quantity → value` report.
#[derive(Debug, Default)]
struct Report(Vec<(String, Value)>);

impl Report {
    fn num(&mut self, key: &str, v: f64) {
        self.0.push((key.to_string(), Value::from(v)));
    }

    fn text(&mut self, key: &str, v: impl Into<String>) {
        self.0.push((key.to_string(), Value::from(v.into())));
    }

    fn validity(&mut self, prefix: &str, r: &ValidityReport) {
        self.num(&format!("{prefix}.species_mixing"), r.species_mixing);
        self.num(&format!("{prefix}.perturbative"), r.perturbative);
        self.num(&format!("{prefix}.hopping_mixing"), r.hopping_mixing);
        self.num(&format!("{prefix}.pair_resonance"), r.pair_resonance);
        self.num(&format!("{prefix}.max_ratio"), r.max_ratio());
        self.num(&format!("{prefix}.threshold"), r.threshold);
        self.text(&format!("{prefix}.verdict"), format!("{:?}", r.verdict()));
    }

    fn write(&self, format: OutputFormat, out: &mut dyn Write) -> Result<(), CliError> {
        match format {
            OutputFormat::Csv => {
                writeln!(out, "quantity,value")?;
                for (k, v) in &self.0 {
                    match v {
                        Value::Number(n) => writeln!(out, "{k},{:e}", n.as_f64().unwrap_or(f64::NAN))?,
                        Value::String(s) => writeln!(out, "{k},{s}")?,
                        // non-finite floats
                        _ => writeln!(out, "{k},inf")?,
                    }
                }
            }
            OutputFormat::Json => {
                let map: Map<String, Value> = self.0.iter().cloned().collect();
                serde_json::to_writer_pretty(&mut *out, &Value::Object(map))?;
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

fn run_params(config: &ExperimentConfig, out: &mut dyn Write) -> Result<RunOutcome, CliError> {
    let p = &config.params;
    let e = effective_parameters(p)?;
    let validity = validity_report_with(p, config.n_polaritons, config.validity_threshold)?;
    let slope = config.ramp.slope_at(0.0)?;

    let mut report = Report::default();
    report.text("preset", config.preset.name());
    report.num("omega_l", e.omega_l);
    report.num("g", e.g);
    report.num("b", e.b);
    report.num("a", e.a);
    report.num("mu_plus", e.mu_plus);
    report.num("mu_minus", e.mu_minus);
    report.num("kappa", e.kappa);
    report.num("j", e.hopping);
    report.num("gamma", e.gamma);
    report.num("kappa_over_gamma", e.kappa_over_gamma());
    report.num("chem_shift", e.chem_shift);
    report.num("dark_atomic_amp", e.dark_atomic_amp);
    report.num("dark_photonic_amp", e.dark_photonic_amp);
    report.num("adiabatic_margin", adiabatic_margin(p, slope)?);
    report.num("n_polaritons", config.n_polaritons as f64);
    report.validity("validity", &validity);
    report.write(config.format, out)?;

    Ok(RunOutcome {
        checks: vec![(format!("Omega_L = {:e}", p.omega_l), validity)],
    })
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))
}

/// Equally spaced grid; a single point sits at `min`.
pub fn scan_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![min],
        n => (0..n)
            .map(|k| {
                if k == n - 1 {
                    max
                } else {
                    min + (max - min) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

fn run_ground_scan(config: &ExperimentConfig, out: &mut dyn Write) -> Result<RunOutcome, CliError> {
    let e = effective_parameters(&config.params)?;
    if e.kappa == 0.0 {
        return Err(CliError::Usage("ground-scan needs a nonzero kappa".into()));
    }
    let particles: u32 = config.initial.iter().sum();
    let basis = FockBasis::new(config.graph.site_count(), config.n_max)?;
    let grid = scan_grid(config.scan_min, config.scan_max, config.scan_points);
    let points = thread_pool()?.install(|| {
        grid.par_iter()
            .map(|&ratio| {
                let bh = BHParams::new(e.kappa, ratio * e.kappa, e.chem_shift);
                let h = build_bh_hamiltonian(&basis, &config.graph, &bh)?;
                let gs = ground_state(&h, &basis, particles)?;
                let stats = site_statistics(&gs.vector, &basis, 0)?;
                Ok((stats.fluctuation, stats.mean_n, gs.energy))
            })
            .collect::<Result<Vec<_>, polariton_core::Error>>()
    })?;

    let table = Table {
        columns: vec![
            ("j_over_kappa".into(), grid),
            ("f_1".into(), points.iter().map(|p| p.0).collect()),
            ("n_1".into(), points.iter().map(|p| p.1).collect()),
            ("energy".into(), points.iter().map(|p| p.2).collect()),
        ],
    };
    write_table(&table, config.format, out)?;
    let validity = validity_report_with(&config.params, config.n_max, config.validity_threshold)?;
    Ok(RunOutcome {
        checks: vec![(format!("Omega_L = {:e}", config.params.omega_l), validity)],
    })
}

fn run_ramp(config: &ExperimentConfig, out: &mut dyn Write) -> Result<RunOutcome, CliError> {
    let basis = FockBasis::new(config.graph.site_count(), config.n_max)?;
    let rho0 = initial_mott_state(&basis, &config.initial)?;
    let control = EvolutionControl {
        integrator: IntegratorSettings {
            rtol: config.rtol,
            atol: config.atol,
            ..Default::default()
        },
        samples: config.samples,
        ..Default::default()
    };
    let series = evolve(&rho0, &config.params, &config.ramp, &config.graph, &basis, &control)?;
    write_series(&series, config.format, out)?;

    let mut checks = Vec::new();
    for (label, omega) in [("ramp start", config.ramp.omega_start), ("ramp end", config.ramp.omega_end)] {
        let r = validity_report_with(
            &config.params.with_omega_l(omega),
            config.n_max,
            config.validity_threshold,
        )?;
        checks.push((format!("{label} (Omega_L = {omega:e})"), r));
    }
    Ok(RunOutcome { checks })
}

fn run_validate_micro(config: &ExperimentConfig, out: &mut dyn Write) -> Result<RunOutcome, CliError> {
    let p = &config.params;
    let m = extract_kappa_shift(p, config.n_polaritons)?;
    let validity = validity_report_with(p, config.n_polaritons, config.validity_threshold)?;

    let mut report = Report::default();
    report.num("n_atoms", p.n_atoms as f64);
    report.num("n_polaritons", config.n_polaritons as f64);
    report.num("omega_l", p.omega_l);
    report.num("kappa", m.kappa);
    report.num("measured_shift", m.shift);
    report.num("predicted_shift", m.predicted);
    report.num("relative_error", m.relative_error());
    report.num("dark_overlap", m.overlap);
    report.validity("validity", &validity);
    report.write(config.format, out)?;

    Ok(RunOutcome {
        checks: vec![(format!("Omega_L = {:e}", p.omega_l), validity)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        assert_eq!(scan_grid(0.0, 1.0, 5), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(scan_grid(0.3, 1.0, 1), vec![0.3]);
        assert!(scan_grid(0.0, 1.0, 0).is_empty());
        assert_eq!(*scan_grid(0.0, 0.7, 7).last().unwrap(), 0.7);
    }

    #[test]
    fn report_csv_and_json() {
        let mut r = Report::default();
        r.num("x", 0.5);
        r.num("y", f64::INFINITY);
        r.text("z", "Valid");
        let mut csv = Vec::new();
        r.write(OutputFormat::Csv, &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "quantity,value\nx,5e-1\ny,inf\nz,Valid\n");
        let mut json = Vec::new();
        r.write(OutputFormat::Json, &mut json).unwrap();
        let v: Value = serde_json::from_slice(&json).unwrap();
        assert_eq!(v["x"], 0.5);
        assert!(v["y"].is_null());
    }
}
