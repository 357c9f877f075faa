//! Deterministic JSON and CSV output.
//!
//! Floats are written with 17 significant digits ("{:.16e}"), fields in a fixed
//! order, metrics in insertion order. Non-finite values are written as null in
//! JSON and as NaN / inf in CSV.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use lhk_core::multipliers::ConditionReport;
use lhk_core::quadrature::{GridFunction, PhysicalGrid};
use lhk_core::report::EstimateReport;
use lhk_core::transform::SpectralFunction;
use sha2::{Digest, Sha256};

use crate::suites::multiplier::NamedCondition;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format '{other}' (expected json or csv)")),
        }
    }
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

pub const REPORT_CSV_HEADER: &str = "suite,metric,value,comparison,reference,tolerance,status";
pub const SPECTRAL_CSV_HEADER: &str = "lambda,m,re,im";
pub const GRID_CSV_HEADER: &str = "x,t,re,im";
/// One row per defect, exponent, slope and gap, per level m and per shell radius r.
pub const CONDITION_CSV_HEADER: &str = "multiplier,alpha,condition,order,row,m,r,value,integral,flags";

/// 17 significant digits.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn json_num(v: f64) -> String {
    if v.is_finite() {
        num(v)
    } else {
        "null".into()
    }
}

fn json_opt(v: Option<f64>) -> String {
    v.map_or("null".into(), json_num)
}

pub fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn json_pairs(out: &mut String, pairs: &[(String, String)], indent: &str) {
    if pairs.is_empty() {
        out.push_str("[]");
        return;
    }
    out.push_str("[\n");
    for (i, (k, v)) in pairs.iter().enumerate() {
        let sep = if i + 1 < pairs.len() { "," } else { "" };
        let _ = writeln!(out, "{indent}  {{\"name\": {}, \"value\": {}}}{sep}", json_str(k), json_str(v));
    }
    let _ = write!(out, "{indent}]");
}

pub fn report_json(r: &EstimateReport) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"suite\": {},", json_str(&r.suite));
    let _ = writeln!(out, "  \"note\": {},", json_str(&r.note));
    out.push_str("  \"parameters\": ");
    json_pairs(&mut out, &r.parameters, "  ");
    out.push_str(",\n  \"metrics\": [");
    for (i, m) in r.metrics.iter().enumerate() {
        let (reference, tolerance) = m.reference_and_tolerance();
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        let _ = write!(
            out,
            "    {{\"name\": {}, \"value\": {}, \"comparison\": {}, \"reference\": {}, \"tolerance\": {}, \"status\": {}}}",
            json_str(&m.name),
            json_num(m.value),
            json_str(m.comparison()),
            json_opt(reference),
            json_opt(tolerance),
            json_str(m.status.as_str())
        );
    }
    out.push_str(if r.metrics.is_empty() { "],\n" } else { "\n  ],\n" });
    out.push_str("  \"provenance\": ");
    json_pairs(&mut out, &r.provenance, "  ");
    out.push_str("\n}\n");
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Rows of all reports under one header.
pub fn reports_csv(reports: &[EstimateReport]) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for r in reports {
        for m in &r.metrics {
            let (reference, tolerance) = m.reference_and_tolerance();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                csv_field(&r.suite),
                csv_field(&m.name),
                num(m.value),
                m.comparison(),
                reference.map_or(String::new(), num),
                tolerance.map_or(String::new(), num),
                m.status.as_str()
            );
        }
    }
    out
}

pub fn reports_json(reports: &[EstimateReport]) -> String {
    if reports.len() == 1 {
        return report_json(&reports[0]);
    }
    let mut out = String::from("[\n");
    for (i, r) in reports.iter().enumerate() {
        out.push_str(report_json(r).trim_end());
        out.push_str(if i + 1 < reports.len() { ",\n" } else { "\n" });
    }
    out.push_str("]\n");
    out
}

pub fn render(reports: &[EstimateReport], format: Format) -> String {
    match format {
        Format::Json => reports_json(reports),
        Format::Csv => reports_csv(reports),
    }
}

fn shell_flags(divergent: bool, clipped: bool, empty: bool) -> String {
    let names = [(divergent, "divergent"), (clipped, "clipped"), (empty, "empty")];
    names.iter().filter(|(on, _)| *on).map(|(_, n)| *n).collect::<Vec<_>>().join(";")
}

fn condition_json(out: &mut String, c: &NamedCondition) {
    let r: &ConditionReport = &c.report;
    let _ = write!(
        out,
        "  {{\"multiplier\": {}, \"alpha\": {}, \"condition\": {}, \"order\": {}, \"degree\": {}, \"defect\": {}, \"exponent\": {}, \"slope\": {}, \"exponent_gap\": {}",
        json_str(&c.multiplier),
        json_num(c.alpha),
        json_str(r.condition.as_str()),
        r.order,
        r.degree,
        json_num(r.defect),
        json_num(r.exponent),
        json_opt(r.slope),
        json_opt(r.exponent_gap())
    );
    let per_m: Vec<String> = r.per_m.iter().map(|v| json_num(*v)).collect();
    let _ = write!(out, ", \"per_m\": [{}], \"shells\": [", per_m.join(", "));
    for (i, row) in r.shells.iter().enumerate() {
        let _ = write!(
            out,
            "{}{{\"r\": {}, \"integral\": {}, \"normalized\": {}, \"divergent\": {}, \"clipped\": {}, \"empty\": {}}}",
            if i == 0 { "" } else { ", " },
            json_num(row.r),
            json_num(row.integral),
            json_num(row.normalized),
            row.divergent,
            row.clipped,
            row.empty
        );
    }
    out.push_str("]}");
}

/// Condition tables as a JSON array, in the order given.
pub fn conditions_json(conditions: &[NamedCondition]) -> String {
    let mut out = String::from("[");
    for (i, c) in conditions.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        condition_json(&mut out, c);
    }
    out.push_str(if conditions.is_empty() { "]\n" } else { "\n]\n" });
    out
}

pub fn conditions_csv(conditions: &[NamedCondition]) -> String {
    let mut out = String::from(CONDITION_CSV_HEADER);
    out.push('\n');
    for c in conditions {
        let r = &c.report;
        let head = format!("{},{},{},{}", csv_field(&c.multiplier), num(c.alpha), r.condition.as_str(), r.order);
        let _ = writeln!(out, "{head},defect,,,{},,", num(r.defect));
        let _ = writeln!(out, "{head},exponent,,,{},,", num(r.exponent));
        if let (Some(slope), Some(gap)) = (r.slope, r.exponent_gap()) {
            let _ = writeln!(out, "{head},slope,,,{},,", num(slope));
            let _ = writeln!(out, "{head},exponent_gap,,,{},,", num(gap));
        }
        for (m, v) in r.per_m.iter().enumerate() {
            let _ = writeln!(out, "{head},per_m,{m},,{},,", num(*v));
        }
        for row in &r.shells {
            let _ = writeln!(
                out,
                "{head},shell,,{},{},{},{}",
                num(row.r),
                num(row.normalized),
                num(row.integral),
                shell_flags(row.divergent, row.clipped, row.empty)
            );
        }
    }
    out
}

pub fn render_conditions(conditions: &[NamedCondition], format: Format) -> String {
    match format {
        Format::Json => conditions_json(conditions),
        Format::Csv => conditions_csv(conditions),
    }
}

pub fn spectral_csv(f: &SpectralFunction) -> String {
    let mut out = String::from(SPECTRAL_CSV_HEADER);
    out.push('\n');
    for (idx, v) in f.values().iter().enumerate() {
        let d = f.grid().dual(idx);
        let _ = writeln!(out, "{},{},{},{}", num(d.lambda), d.m, num(v.re), num(v.im));
    }
    out
}

pub fn grid_csv(f: &GridFunction) -> String {
    let mut out = String::from(GRID_CSV_HEADER);
    out.push('\n');
    for (idx, v) in f.values().iter().enumerate() {
        let p = f.grid().node(idx);
        let _ = writeln!(out, "{},{},{},{}", num(p.x), num(p.t), num(v.re), num(v.im));
    }
    out
}

/// Hex SHA-256 over the grid nodes and weights.
pub fn grid_checksum(grids: &[&PhysicalGrid]) -> String {
    let mut h = Sha256::new();
    for g in grids {
        for (x, t, w) in g.iter() {
            h.update(x.to_le_bytes());
            h.update(t.to_le_bytes());
            h.update(w.to_le_bytes());
        }
    }
    format!("{:x}", h.finalize())
}

/// Hex SHA-256 of arbitrary text, e.g. a normalized configuration.
pub fn text_checksum(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> std::io::Result<()> {
    let wrap = |e: std::io::Error| std::io::Error::new(e.kind(), format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(wrap)?;
        }
    }
    let mut f = std::fs::File::create(path).map_err(wrap)?;
    f.write_all(contents.as_bytes()).map_err(wrap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lhk_core::report::{Check, Metric};

    fn sample() -> EstimateReport {
        let mut r = EstimateReport::new("core");
        r.note = "note, with comma".into();
        r.param("alpha", 0);
        r.push(Metric::new("a", 0.1, Check::AtMost(1.0)));
        r.push(Metric::new("b", f64::NAN, Check::Finite));
        r.push(Metric::measured("c", 2.0));
        r.provenance.push(("code_version".into(), "0.1.0".into()));
        r
    }

    proptest::proptest! {
        #[test]
        fn num_round_trips(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            proptest::prop_assert_eq!(num(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.5), "-2.5000000000000000e0");
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn json_is_valid_and_ordered() {
        let text = report_json(&sample());
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["metrics"][0]["status"], "pass");
        assert!(v["metrics"][1]["value"].is_null());
        assert_eq!(v["metrics"][1]["status"], "fail");
        assert_eq!(v["metrics"][2]["status"], "measured");
        let (i, j) = (text.find("\"suite\"").unwrap(), text.find("\"provenance\"").unwrap());
        assert!(i < j);
        let both: serde_json::Value = serde_json::from_str(&reports_json(&[sample(), sample()])).unwrap();
        assert_eq!(both.as_array().unwrap().len(), 2);
    }

    #[test]
    fn csv_rows() {
        let text = reports_csv(&[sample()]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], REPORT_CSV_HEADER);
        assert_eq!(lines[1], "core,a,1.0000000000000001e-1,le,1.0000000000000000e0,,pass");
        assert_eq!(lines.len(), 4);
    }

    fn condition() -> NamedCondition {
        use lhk_core::multipliers::{Condition, ShellRow};
        let shell = ShellRow { r: 2.0, integral: 8.0, normalized: 0.5, divergent: false, clipped: true, empty: false };
        NamedCondition {
            multiplier: "fractional_L(s=1)".into(),
            alpha: 0.0,
            report: ConditionReport {
                condition: Condition::Hormander,
                order: 0,
                degree: 0,
                defect: 0.5,
                per_m: vec![],
                shells: vec![shell],
                exponent: 4.0,
                slope: Some(2.0),
            },
        }
    }

    #[test]
    fn condition_tables() {
        let c = condition();
        let v: serde_json::Value = serde_json::from_str(&conditions_json(&[c.clone(), c.clone()])).unwrap();
        assert_eq!(v[1]["condition"], "hormander");
        assert_eq!(v[0]["exponent_gap"].as_f64(), Some(-2.0));
        assert_eq!(v[0]["shells"][0]["clipped"], true);
        let text = conditions_csv(&[c]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CONDITION_CSV_HEADER);
        assert_eq!(lines.len(), 6);
        assert!(lines[5].ends_with(",clipped"));
        assert!(lines.iter().all(|l| l.matches(',').count() == 9));
        assert_eq!(conditions_json(&[]), "[]\n");
        let quoted = NamedCondition { multiplier: "constant(re=1,im=0)".into(), ..condition() };
        assert!(conditions_csv(&[quoted]).lines().nth(1).unwrap().starts_with("\"constant(re=1,im=0)\","));
    }

    #[test]
    fn unknown_format_is_rejected() {
        assert_eq!("csv".parse::<Format>(), Ok(Format::Csv));
        assert!("xml".parse::<Format>().is_err());
    }
}
