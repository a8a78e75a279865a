use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }
}

pub enum Output {
    Json(Value),
    Csv(Table),
    Empty,
}

pub fn unsupported(command: &str, format: Format) -> CliError {
    CliError::Invalid(format!("format {format:?} is not supported by `{command}`").to_lowercase())
}

pub fn write(output: &Output, dest: Option<&Path>) -> Result<(), CliError> {
    let mut sink: Box<dyn Write> = match dest {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match output {
        Output::Json(v) => {
            serde_json::to_writer_pretty(&mut sink, v)?;
            writeln!(sink)?;
        }
        Output::Csv(t) => {
            let mut w = csv::Writer::from_writer(&mut sink);
            w.write_record(&t.header)?;
            for row in &t.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        Output::Empty => {}
    }
    sink.flush()?;
    Ok(())
}

/// Column names `x_1, …, x_n`.
pub fn state_columns(n: usize) -> impl Iterator<Item = String> {
    (1..=n).map(|i| format!("x_{i}"))
}
