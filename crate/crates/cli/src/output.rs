//! CSV and JSON writers. Numbers carry 17 significant digits; every file
//! starts with a `# seed=<u64>` line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvWriter {
    inner: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, seed: u64, header: &[String]) -> std::io::Result<Self> {
        let mut inner = BufWriter::new(File::create(path)?);
        writeln!(inner, "# seed={seed}")?;
        writeln!(inner, "{}", header.join(","))?;
        Ok(Self { inner })
    }

    pub fn row(&mut self, cells: &[String]) -> std::io::Result<()> {
        writeln!(self.inner, "{}", cells.join(","))
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> std::io::Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()
}

/// JSON number, or `null` when not finite.
pub fn jnum(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x).map_or(serde_json::Value::Null, serde_json::Value::Number)
}
