//! CSV and JSON serialization of results.
//!
//! Floats are written in shortest round-trip scientific notation, so parsing
//! an emitted file reproduces every number bit for bit.

use std::io::Write;

use polariton_core::ObservableSeries;
use serde_json::{Map, Value};

use crate::config::OutputFormat;
use crate::CliError;

/// Named columns of equal length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<(String, Vec<f64>)>,
}

impl Table {
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, c)| c.len())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_slice())
    }

    fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.columns.push((name.into(), values));
    }
}

/// Columns `t,omega_l,kappa,j,gamma,n_1..n_M,f_1..f_M,trace,purity`.
pub fn series_table(series: &ObservableSeries) -> Table {
    let mut table = Table::default();
    table.push("t", series.times.clone());
    table.push("omega_l", series.omega_l.clone());
    table.push("kappa", series.kappa.clone());
    table.push("j", series.hopping.clone());
    table.push("gamma", series.gamma.clone());
    for i in 0..series.sites {
        table.push(format!("n_{}", i + 1), series.mean_n.iter().map(|r| r[i]).collect());
    }
    for i in 0..series.sites {
        table.push(
            format!("f_{}", i + 1),
            series.fluctuation.iter().map(|r| r[i]).collect(),
        );
    }
    table.push("trace", series.trace.clone());
    table.push("purity", series.purity.clone());
    table
}

pub fn write_series(
    series: &ObservableSeries,
    format: OutputFormat,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if !series.is_consistent() {
        return Err(CliError::Inconsistent("observable series has ragged records".into()));
    }
    write_table(&series_table(series), format, out)
}

pub fn write_table(table: &Table, format: OutputFormat, out: &mut dyn Write) -> Result<(), CliError> {
    match format {
        OutputFormat::Csv => {
            let header: Vec<&str> = table.columns.iter().map(|(n, _)| n.as_str()).collect();
            writeln!(out, "{}", header.join(","))?;
            for r in 0..table.rows() {
                let row: Vec<String> = table.columns.iter().map(|(_, c)| format!("{:e}", c[r])).collect();
                writeln!(out, "{}", row.join(","))?;
            }
        }
        OutputFormat::Json => {
            let map: Map<String, Value> = table
                .columns
                .iter()
                .map(|(n, c)| (n.clone(), Value::from(c.clone())))
                .collect();
            serde_json::to_writer_pretty(&mut *out, &Value::Object(map))?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Reads a table written by [`write_table`] in CSV form.
pub fn read_csv(text: &str) -> Result<Table, CliError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::Inconsistent("empty CSV".into()))?;
    let mut table = Table {
        columns: header.split(',').map(|n| (n.to_string(), Vec::new())).collect(),
    };
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != table.columns.len() {
            return Err(CliError::Inconsistent(format!(
                "CSV line {} has {} fields, header has {}",
                idx + 1,
                fields.len(),
                table.columns.len()
            )));
        }
        for ((_, col), field) in table.columns.iter_mut().zip(fields) {
            col.push(field.parse().map_err(|e| {
                CliError::Inconsistent(format!("CSV line {}: `{field}`: {e}", idx + 1))
            })?);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_reader_rejects_malformed_rows() {
        assert!(read_csv("").is_err());
        assert!(read_csv("a,b\n1e0\n").is_err());
        assert!(read_csv("a,b\n1e0,x\n").is_err());
        let t = read_csv("a,b\n1e0,-2.5e-3\n").unwrap();
        assert_eq!(t.column("b").unwrap(), &[-2.5e-3]);
        assert_eq!(t.rows(), 1);
        assert!(t.column("c").is_none());
    }
}
