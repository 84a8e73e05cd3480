use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Twelve significant digits, so identical runs give identical bytes.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.11e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn list(xs: &[f64]) -> String {
    xs.iter().map(|&x| num(x)).collect::<Vec<_>>().join(";")
}

/// CSV table preceded by a `# spinrpa <kind> v<version>` line.
pub struct Table {
    writer: csv::Writer<Box<dyn Write>>,
    target: PathBuf,
}

impl Table {
    pub fn create(
        path: Option<&Path>,
        kind: &str,
        version: u32,
        header: &[&str],
    ) -> Result<Self, CliError> {
        let target = path
            .map(Path::to_path_buf)
            .unwrap_or_else(|| "<stdout>".into());
        let fail = |source| CliError::Output {
            path: target.clone(),
            source,
        };
        let mut sink: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p).map_err(fail)?)),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        writeln!(sink, "# spinrpa {kind} v{version}").map_err(fail)?;
        let mut table = Self {
            writer: csv::Writer::from_writer(sink),
            target,
        };
        table.row(header)?;
        Ok(table)
    }

    pub fn row<S: AsRef<[u8]>>(&mut self, fields: &[S]) -> Result<(), CliError> {
        self.writer
            .write_record(fields)
            .map_err(|e| CliError::Output {
                path: self.target.clone(),
                source: e.into(),
            })
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.writer.flush().map_err(|source| CliError::Output {
            path: self.target,
            source,
        })
    }
}
