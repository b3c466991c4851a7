//! CSV datasets, round-trip number formatting and atomic file output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::data::{Dataset, Unit};
use crate::error::{invalid, Error, Result};

/// Scientific notation with 17 significant digits; parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Four significant digits for human-readable tables.
pub fn fmt_short(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor();
    if (-4.0..6.0).contains(&mag) {
        let decimals = (3.0 - mag).max(0.0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.3e}")
    }
}

/// JSON formatter writing every float with [`fmt_f64`].
struct Sig17<F>(F);

impl<F: serde_json::ser::Formatter> serde_json::ser::Formatter for Sig17<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty-printed JSON with 17-significant-digit floats. Non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(serde_json::ser::PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(|e| Error::Io(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Writes `contents` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error.to_string()))?;
    Ok(())
}

fn parse_error(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses `y,t,z1,...,zp` CSV text. Line numbers in errors count the header as line 1.
pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| parse_error(1, e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names.len() < 3 || names[0] != "y" || names[1] != "t" {
        return Err(parse_error(1, "header must be y,t,z1,...,zp with p >= 1"));
    }
    for (k, name) in names[2..].iter().enumerate() {
        if *name != format!("z{}", k + 1) {
            return Err(parse_error(1, format!("expected column z{}, found {name:?}", k + 1)));
        }
    }
    let width = names.len();
    let mut units = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != width {
            return Err(parse_error(line, format!("expected {width} fields, found {}", record.len())));
        }
        let field = |k: usize| -> Result<f64> {
            let raw = record[k].trim();
            if raw.is_empty() {
                return Err(parse_error(line, format!("missing value in column {}", names[k])));
            }
            let v: f64 = raw.parse().map_err(|_| parse_error(line, format!("{raw:?} is not a number in column {}", names[k])))?;
            if !v.is_finite() {
                return Err(parse_error(line, format!("non-finite value in column {}", names[k])));
            }
            Ok(v)
        };
        let y = field(0)?;
        let treated = match field(1) {
            Ok(0.0) => false,
            Ok(1.0) => true,
            Ok(_) => return Err(parse_error(line, "t must be 0 or 1")),
            Err(e) => return Err(e),
        };
        let z = (2..width).map(field).collect::<Result<Vec<_>>>()?;
        units.push(Unit::new(y, treated, z));
    }
    if units.is_empty() {
        return invalid("input has no data rows");
    }
    let data = Dataset::new(units)?;
    data.require_both_groups()?;
    Ok(data)
}

pub fn ingest_csv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_csv(&text)
}

pub fn to_csv_string(data: &Dataset) -> String {
    let mut out = String::from("y,t");
    for k in 1..=data.p() {
        out.push_str(&format!(",z{k}"));
    }
    out.push('\n');
    for u in data.units() {
        out.push_str(&fmt_f64(u.y));
        out.push_str(if u.treated { ",1" } else { ",0" });
        for v in &u.z {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(data: &Dataset, path: &Path) -> Result<()> {
    write_atomic(path, to_csv_string(data).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_file() {
        let d = parse_csv("y,t,z1\n1.0,1,0.5\n0.0,0,0.4\n").unwrap();
        assert_eq!((d.n0(), d.n1(), d.p()), (1, 1, 1));
    }

    #[test]
    fn bad_treatment_reports_line() {
        let e = parse_csv("y,t,z1\n1.0,2,0.5\n0.0,0,0.4\n").unwrap_err();
        assert_eq!(e, Error::Parse { line: 2, msg: "t must be 0 or 1".into() });
    }

    #[test]
    fn malformed_rows() {
        assert!(matches!(parse_csv("y,t,z1\n1.0,1,0.5\n0.0,0\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_csv("y,t,z1\n1.0,1,\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_csv("y,t,z1\n1.0,1,abc\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_csv("y,t,x\n1.0,1,0.2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_csv("y,t,z1\n1.0,1,0.5\n2.0,1,0.4\n"), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn formatting() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt_short(2.329e-5), "2.329e-5");
        assert_eq!(fmt_short(0.5), "0.5000");
        assert_eq!(fmt_short(123.456), "123.5");
        let json = to_json(&serde_json::json!({"a": 0.25, "b": [1.5]})).unwrap();
        assert!(json.contains("2.5000000000000000e-1"));
        let back: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(back["a"], 0.25);
    }
}
