//! CSV helpers shared by the modules that emit tabular artifacts.

use std::io::Write;

use crate::error::Result;

/// Version tag written into every CSV header comment.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Opens a CSV writer after emitting `# schema=<kind>/v<N>` plus any extra
/// comment line (typically the config hash).
pub fn csv_writer<W: Write>(mut out: W, kind: &str, comment: Option<&str>) -> Result<csv::Writer<W>> {
    write!(out, "# schema={kind}/v{CSV_SCHEMA_VERSION}")?;
    if let Some(c) = comment {
        write!(out, " {c}")?;
    }
    writeln!(out)?;
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(out))
}

/// Shortest round-trip representation; keeps CSVs byte-identical across runs.
pub fn fmt(v: f64) -> String {
    format!("{v:e}")
}
