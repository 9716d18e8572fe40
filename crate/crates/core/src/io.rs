//! CSV and JSON input/output, and flat key=value configuration files.
//!
//! Floats are written with 17 significant digits so that every value reads
//! back bit for bit.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::distance::UnitTable;
use crate::error::{Error, Result};
use crate::inference::{aggregate_clusters, Cluster, ClusteredStudy, TestResult};
use crate::subclass::Subclassification;

/// Formats like C's `%.17g`: 17 significant digits, trailing zeros dropped.
pub fn fmt_f64(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Column names for [`load_units`]. Without `covariates`, every column other
/// than the id and dose columns is a covariate. Without `id`, ids are row
/// numbers starting at 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub id: Option<String>,
    pub dose: String,
    pub covariates: Option<Vec<String>>,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        ColumnSpec {
            id: Some("id".into()),
            dose: "dose".into(),
            covariates: None,
        }
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

fn parse_number(field: &str, line: usize, row: usize, name: &str) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("column {name:?}: {field:?} is not a number"),
    })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteValue {
            row,
            column: name.to_string(),
        })
    }
}

/// Reads units from a CSV file with a header row. Row order is preserved.
pub fn load_units(path: impl AsRef<Path>, spec: &ColumnSpec) -> Result<UnitTable> {
    let file = File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_units(file, spec)
}

pub fn read_units(reader: impl std::io::Read, spec: &ColumnSpec) -> Result<UnitTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let id_col = spec.id.as_deref().map(|n| column(&headers, n)).transpose()?;
    let dose_col = column(&headers, &spec.dose)?;
    let cov_names: Vec<String> = match &spec.covariates {
        Some(names) => names.clone(),
        None => headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| Some(i) != id_col && i != dose_col)
            .map(|(_, h)| h.to_string())
            .collect(),
    };
    let cov_cols = cov_names
        .iter()
        .map(|n| column(&headers, n))
        .collect::<Result<Vec<_>>>()?;

    let mut ids = Vec::new();
    let mut dose = Vec::new();
    let mut values = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(row + 2);
        let get = |i: usize| {
            record.get(i).ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected {} fields, found {}", headers.len(), record.len()),
            })
        };
        ids.push(match id_col {
            Some(i) => get(i)?.to_string(),
            None => (row + 1).to_string(),
        });
        dose.push(parse_number(get(dose_col)?, line, row + 1, &spec.dose)?);
        for (k, &c) in cov_cols.iter().enumerate() {
            values.push(parse_number(get(c)?, line, row + 1, &cov_names[k])?);
        }
    }
    let x = DMatrix::from_row_slice(ids.len(), cov_cols.len(), &values);
    UnitTable::new(ids, dose, x)
}

/// Writes units as `id,dose,<covariates...>`; extra columns are appended.
pub fn write_units(
    path: impl AsRef<Path>,
    u: &UnitTable,
    covariate_names: &[String],
    extra: &[(&str, &[f64])],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string(), "dose".to_string()];
    header.extend(covariate_names.iter().cloned());
    header.extend(extra.iter().map(|(n, _)| n.to_string()));
    w.write_record(&header)?;
    for i in 0..u.len() {
        let mut rec = vec![u.ids[i].clone(), fmt_f64(u.dose[i])];
        rec.extend((0..u.dim()).map(|c| fmt_f64(u.covariates[(i, c)])));
        rec.extend(extra.iter().map(|(_, v)| fmt_f64(v[i])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `unit_id,subclass_id,is_reference`, one row per matched unit in subclass order.
pub fn write_subclasses(path: impl AsRef<Path>, pi: &Subclassification, ids: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["unit_id", "subclass_id", "is_reference"])?;
    for (k, s) in pi.subclasses().iter().enumerate() {
        for &m in &s.members {
            let is_ref = if m == s.reference { "1" } else { "0" };
            w.write_record([ids[m].as_str(), &(k + 1).to_string(), is_ref])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an assignment written by [`write_subclasses`] against the given ids.
/// Units absent from the file are treated as discarded.
pub fn read_subclasses(path: impl AsRef<Path>, ids: &[String]) -> Result<Subclassification> {
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(Error::from)?;
    let headers = rdr.headers()?.clone();
    let (cu, cs, cr) = (
        column(&headers, "unit_id")?,
        column(&headers, "subclass_id")?,
        column(&headers, "is_reference")?,
    );
    let mut groups: BTreeMap<String, (Vec<usize>, Option<usize>)> = BTreeMap::new();
    let mut seen = vec![false; ids.len()];
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(row + 2);
        let field = |i: usize| record.get(i).unwrap_or("");
        let unit = *index.get(field(cu)).ok_or_else(|| Error::Parse {
            line,
            msg: format!("unknown unit id {:?}", field(cu)),
        })?;
        if std::mem::replace(&mut seen[unit], true) {
            return Err(Error::DuplicateId(field(cu).to_string()));
        }
        let entry = groups.entry(field(cs).to_string()).or_default();
        entry.0.push(unit);
        match field(cr) {
            "1" | "true" => {
                if entry.1.replace(unit).is_some() {
                    return Err(Error::InvalidSubclassification(format!(
                        "subclass {:?} has two reference units",
                        field(cs)
                    )));
                }
            }
            "0" | "false" => {}
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("is_reference must be 0 or 1, got {other:?}"),
                })
            }
        }
    }
    let subclasses = groups
        .into_iter()
        .map(|(name, (members, r))| {
            let r = r.ok_or_else(|| {
                Error::InvalidSubclassification(format!("subclass {name:?} has no reference unit"))
            })?;
            Ok((members, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let discarded = (0..ids.len()).filter(|&i| !seen[i]).collect();
    Subclassification::new(ids.len(), subclasses, discarded)
}

/// Reads `set_id,cluster_id,dose,response`. Several rows for one cluster are
/// individual records and are averaged; their doses must agree. Sets and
/// clusters keep their order of first appearance.
pub fn load_clustered_study(path: impl AsRef<Path>) -> Result<ClusteredStudy> {
    let file = File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_clustered_study(file)
}

pub fn read_clustered_study(reader: impl std::io::Read) -> Result<ClusteredStudy> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let (cs, cc, cd, cr) = (
        column(&headers, "set_id")?,
        column(&headers, "cluster_id")?,
        column(&headers, "dose")?,
        column(&headers, "response")?,
    );
    // set -> ordered clusters -> (dose, responses)
    let mut set_order: Vec<String> = Vec::new();
    let mut sets: HashMap<String, Vec<(String, f64, Vec<f64>)>> = HashMap::new();
    let mut cluster_set: HashMap<String, String> = HashMap::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(row + 2);
        let field = |i: usize| record.get(i).unwrap_or("");
        let set = field(cs).to_string();
        let cluster = field(cc).to_string();
        let dose = parse_number(field(cd), line, row + 1, "dose")?;
        let response = parse_number(field(cr), line, row + 1, "response")?;
        if let Some(s) = cluster_set.get(&cluster) {
            if *s != set {
                return Err(Error::InvalidStudy(format!(
                    "cluster {cluster:?} appears in sets {s:?} and {set:?}"
                )));
            }
        } else {
            cluster_set.insert(cluster.clone(), set.clone());
        }
        let clusters = sets.entry(set.clone()).or_insert_with(|| {
            set_order.push(set.clone());
            Vec::new()
        });
        match clusters.iter_mut().find(|c| c.0 == cluster) {
            Some(c) if c.1 != dose => {
                return Err(Error::InvalidStudy(format!(
                    "cluster {cluster:?} has more than one dose"
                )))
            }
            Some(c) => c.2.push(response),
            None => clusters.push((cluster, dose, vec![response])),
        }
    }
    let mut out = Vec::with_capacity(set_order.len());
    for set in set_order {
        let clusters = sets.remove(&set).expect("set recorded");
        let records: Vec<(String, Vec<f64>)> =
            clusters.iter().map(|(id, _, r)| (id.clone(), r.clone())).collect();
        let means = aggregate_clusters(&records)?;
        out.push(
            clusters
                .iter()
                .zip(means)
                .map(|((id, dose, _), (_, response))| Cluster {
                    id: id.clone(),
                    dose: *dose,
                    response,
                })
                .collect(),
        );
    }
    ClusteredStudy::new(out)
}

/// `draw,statistic` rows of the reference distribution.
pub fn write_reference_distribution(path: impl AsRef<Path>, r: &TestResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["draw", "statistic"])?;
    for (i, t) in r.reference_draws.iter().enumerate() {
        w.write_record([(i + 1).to_string(), fmt_f64(*t)])?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON whose numbers carry 17 significant digits.
struct PreciseFormatter(serde_json::ser::PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> std::io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for PreciseFormatter {
    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );

    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        let s = fmt_f64(value);
        // keep integral floats recognisable as floats
        if s.contains(['.', 'e']) || s.contains("inf") || s.contains("NaN") {
            w.write_all(s.as_bytes())
        } else {
            write!(w, "{s}.0")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        PreciseFormatter(serde_json::ser::PrettyFormatter::new()),
    );
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(to_json_string(value)?.as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Parses `key = value` lines. Blank lines, `#`/`;` comments and `[section]`
/// headers are skipped; later keys override earlier ones.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: format!("expected key = value, found {line:?}"),
        })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                msg: "empty key".into(),
            });
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "0.10000000000000001");
        assert_eq!(fmt_f64(1.25), "1.25");
        assert_eq!(fmt_f64(100000.0), "100000");
        assert_eq!(fmt_f64(1e-7), "9.9999999999999995e-8");
        assert_eq!(fmt_f64(1e300), "1.0000000000000001e300");
        for x in [0.1, 2.0 / 3.0, -1e-300, 123456789.123456789, f64::MIN_POSITIVE, f64::MAX] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn reads_three_units() {
        let text = "id,dose,x1,x2\na,0.1,1,2\nb,0.2,3,4\nc,0.3,5,7\n";
        let u = read_units(text.as_bytes(), &ColumnSpec::default()).unwrap();
        assert_eq!(u.len(), 3);
        assert_eq!(u.dim(), 2);
        assert_eq!(u.covariates[(2, 1)], 7.0);
        assert_eq!(u.ids, vec!["a", "b", "c"]);
    }

    #[test]
    fn reports_missing_and_bad_values() {
        let text = "id,x1\na,1\nb,2\n";
        assert_eq!(
            read_units(text.as_bytes(), &ColumnSpec::default()),
            Err(Error::MissingColumn("dose".into()))
        );
        let text = "id,dose,x1\na,0.1,1\nb,zz,2\n";
        assert!(matches!(
            read_units(text.as_bytes(), &ColumnSpec::default()),
            Err(Error::Parse { line: 3, .. })
        ));
        let text = "id,dose,x1\na,0.1,1\nb,0.2,inf\n";
        assert_eq!(
            read_units(text.as_bytes(), &ColumnSpec::default()),
            Err(Error::NonFiniteValue {
                row: 2,
                column: "x1".into()
            })
        );
        let text = "id,dose,x1\na,0.1,1\na,0.2,2\n";
        assert_eq!(
            read_units(text.as_bytes(), &ColumnSpec::default()),
            Err(Error::DuplicateId("a".into()))
        );
    }

    #[test]
    fn clustered_records_are_averaged() {
        let text = "set_id,cluster_id,dose,response\n1,h1,0.2,0\n1,h1,0.2,1\n1,h1,0.2,1\n1,h2,0.5,3\n";
        let s = read_clustered_study(text.as_bytes()).unwrap();
        assert_eq!(s.sets().len(), 1);
        assert!((s.sets()[0][0].response - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.sets()[0][1].response, 3.0);
    }

    #[test]
    fn config_lines() {
        let cfg = parse_config("# comment\n[match]\ntau0 = 0.3\nC=5\n\nC = 7\n").unwrap();
        assert_eq!(cfg["tau0"], "0.3");
        assert_eq!(cfg["C"], "7");
        assert!(matches!(parse_config("oops"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn json_uses_full_precision() {
        let s = to_json_string(&serde_json::json!({"x": 0.1, "n": 3, "y": 2.0})).unwrap();
        assert!(s.contains("0.10000000000000001"), "{s}");
        assert!(s.contains("\"y\": 2.0"), "{s}");
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["x"].as_f64(), Some(0.1));
    }
}
