//! JSON and CSV report emission.
//!
//! Reports are serialized with every float printed at 17 significant
//! digits, which round-trips f64 exactly; identical runs produce
//! byte-identical output.

use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

pub const SCHEMA_VERSION: &str = "1";

struct SeventeenDigits;

impl serde_json::ser::Formatter for SeventeenDigits {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            // JSON has no infinities; emit a string marker
            write!(writer, "\"{value}\"")
        }
    }
}

/// Serialize with 17-significant-digit floats and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SeventeenDigits);
    value.serialize(&mut ser).expect("report serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("report is utf-8")
}

/// One row per sweep point: parameter, value, error estimate.
pub fn sweep_csv(rows: &[(f64, f64, f64)]) -> String {
    let mut s = String::from("parameter,value,error_estimate\n");
    for (p, v, e) in rows {
        s.push_str(&format!("{p:.16e},{v:.16e},{e:.16e}\n"));
    }
    s
}

pub fn write_output(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents.as_bytes())
}
