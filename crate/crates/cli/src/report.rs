//! Report rows and their CSV / JSON encodings.
//!
//! Column order is fixed: see [`COLUMNS`]. Floats are printed in scientific
//! notation with 17 significant digits, infinite exponents as `inf`, and
//! missing values as empty fields.

use std::io::Write;

use dirint::Exponent;

use crate::CliError;

pub const COLUMNS: [&str; 16] = [
    "scenario",
    "check",
    "p",
    "q",
    "alpha",
    "beta",
    "kappa",
    "lower",
    "upper",
    "oracle",
    "metric",
    "equality",
    "certificates",
    "status",
    "detail",
    "wall_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// An asserted invariant failed.
    Fail,
    /// The exponent tuple is outside the supported range; not an error.
    Rejected,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Fail => "fail",
            Status::Rejected => "rejected",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub scenario: String,
    pub check: String,
    pub p: Option<Exponent>,
    pub q: Option<Exponent>,
    pub alpha: Option<Exponent>,
    pub beta: Option<Exponent>,
    pub kappa: Option<Exponent>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub oracle: Option<f64>,
    pub metric: Option<f64>,
    pub equality: Option<bool>,
    pub certificates: String,
    pub status: Status,
    pub detail: String,
    pub wall_ms: u128,
}

impl Row {
    pub fn new(scenario: &str, check: &str) -> Self {
        Row {
            scenario: scenario.to_string(),
            check: check.to_string(),
            p: None,
            q: None,
            alpha: None,
            beta: None,
            kappa: None,
            lower: None,
            upper: None,
            oracle: None,
            metric: None,
            equality: None,
            certificates: String::new(),
            status: Status::Ok,
            detail: String::new(),
            wall_ms: 0,
        }
    }

    fn fields(&self) -> [String; 16] {
        let exp = |e: Option<Exponent>| e.map(fmt_exponent).unwrap_or_default();
        let num = |x: Option<f64>| x.map(fmt_float).unwrap_or_default();
        [
            self.scenario.clone(),
            self.check.clone(),
            exp(self.p),
            exp(self.q),
            exp(self.alpha),
            exp(self.beta),
            exp(self.kappa),
            num(self.lower),
            num(self.upper),
            num(self.oracle),
            num(self.metric),
            self.equality.map(|b| b.to_string()).unwrap_or_default(),
            self.certificates.clone(),
            self.status.as_str().to_string(),
            self.detail.clone(),
            self.wall_ms.to_string(),
        ]
    }
}

pub fn fmt_float(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_exponent(e: Exponent) -> String {
    match e {
        Exponent::Infinite => "inf".to_string(),
        Exponent::Finite(v) => fmt_float(v),
    }
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush().map_err(|e| CliError::Io { path: "<output>".into(), source: e })?;
    Ok(())
}

/// One JSON object per row, keyed by column name, values as in the CSV.
pub fn write_json<W: Write>(rows: &[Row], mut out: W) -> Result<(), CliError> {
    let records: Vec<serde_json::Map<String, serde_json::Value>> = rows
        .iter()
        .map(|r| {
            COLUMNS
                .iter()
                .zip(r.fields())
                .map(|(k, v)| (k.to_string(), serde_json::Value::String(v)))
                .collect()
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &records)?;
    writeln!(out).map_err(|e| CliError::Io { path: "<output>".into(), source: e })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_17_significant_digits() {
        assert_eq!(fmt_float(2.0), "2.0000000000000000e0");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        assert_eq!(fmt_exponent(Exponent::Infinite), "inf");
        let x = 17f64.powf(0.25);
        assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_has_fixed_header() {
        let mut buf = Vec::new();
        let mut row = Row::new("s", "sandwich");
        row.detail = "a, b".into();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(&COLUMNS.join(",")));
        assert!(text.contains("\"a, b\""));
    }
}
