//! Report rows and the scatter tables derived from them.
//!
//! Every scatter table is computed from a slice of [`ReportRow`]s alone, so
//! any figure analogue can be rebuilt from a saved report.

use crate::aep::AepEstimate;
use crate::error::{Error, Result};
use crate::fitting::FitResult;
use crate::seasonal::Season;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gev,
    Pot,
    #[serde(rename = "seasonal-1")]
    Seasonal1,
    #[serde(rename = "seasonal-2")]
    Seasonal2,
    Empirical,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Gev, Method::Pot, Method::Seasonal1, Method::Seasonal2, Method::Empirical];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gev => "gev",
            Method::Pot => "pot",
            Method::Seasonal1 => "seasonal-1",
            Method::Seasonal2 => "seasonal-2",
            Method::Empirical => "empirical",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}; expected one of gev, pot, seasonal-1, seasonal-2, empirical")))
    }
}

/// One (cell, method, threshold, T) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub cell: String,
    pub method: Method,
    /// Schedule tail probability; `None` for annual-maximum methods.
    #[serde(with = "annual_or_value")]
    pub tail_probability: Option<f64>,
    pub threshold: Option<f64>,
    pub n_used: usize,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub xi: Option<f64>,
    pub se_xi: Option<f64>,
    pub period: f64,
    pub value: Option<f64>,
    pub se: Option<f64>,
    pub rel_unc: Option<f64>,
    pub converged: bool,
    /// Season supplying a combined seasonal value.
    pub season: Option<Season>,
    pub note: String,
}

mod annual_or_value {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Value(f64),
        Label(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => Repr::Value(*x).serialize(s),
            None => Repr::Label("annual".into()).serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Value(x) => Ok(Some(x)),
            Repr::Label(l) if l == "annual" => Ok(None),
            Repr::Label(l) => Err(serde::de::Error::custom(format!("expected a number or \"annual\", got {l:?}"))),
        }
    }
}

impl ReportRow {
    /// A row carrying only identification; callers fill in the rest.
    pub fn blank(cell: &str, method: Method, tail_probability: Option<f64>, period: f64) -> Self {
        ReportRow {
            cell: cell.to_string(),
            method,
            tail_probability,
            threshold: None,
            n_used: 0,
            mu: None,
            sigma: None,
            xi: None,
            se_xi: None,
            period,
            value: None,
            se: None,
            rel_unc: None,
            converged: false,
            season: None,
            note: String::new(),
        }
    }

    pub fn with_fit(mut self, fit: &FitResult) -> Self {
        self.n_used = fit.n_used;
        self.threshold = fit.threshold.or(self.threshold);
        self.mu = Some(fit.params.mu);
        self.sigma = Some(fit.params.sigma);
        self.xi = Some(fit.params.xi);
        self.se_xi = fit.standard_errors().map(|s| s[2]);
        self.converged = fit.converged;
        self
    }

    pub fn with_estimate(mut self, est: &AepEstimate) -> Self {
        self.value = Some(est.value);
        self.se = est.se;
        self.rel_unc = est.relative_uncertainty;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    fn order_key(&self, other: &Self) -> Ordering {
        let q = |r: &Self| r.tail_probability.unwrap_or(f64::NEG_INFINITY);
        self.cell
            .cmp(&other.cell)
            .then(self.method.cmp(&other.method))
            .then(q(self).total_cmp(&q(other)))
            .then(self.period.total_cmp(&other.period))
    }
}

/// Sorts by (cell, method, tail probability with "annual" first, T).
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| a.order_key(b));
}

pub const CSV_HEADER: &str =
    "cell,method,tail_probability,threshold,n_used,mu,sigma,xi,se_xi,period,value,se,rel_unc,converged,season,note";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV text with floats printed in shortest round-trip form.
pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let q = r.tail_probability.map(|q| q.to_string()).unwrap_or_else(|| "annual".into());
        let season = r.season.map(|s| s.name()).unwrap_or("");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            quote(&r.cell),
            r.method,
            q,
            opt(r.threshold),
            r.n_used,
            opt(r.mu),
            opt(r.sigma),
            opt(r.xi),
            opt(r.se_xi),
            r.period,
            opt(r.value),
            opt(r.se),
            opt(r.rel_unc),
            r.converged,
            season,
            quote(&r.note)
        );
    }
    out
}

pub fn rows_to_json(rows: &[ReportRow]) -> Result<String> {
    serde_json::to_string_pretty(rows).map_err(|e| Error::Config(format!("cannot serialise report: {e}")))
}

pub fn rows_from_json(text: &str) -> Result<Vec<ReportRow>> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed report JSON: {e}")))
}

/// A named table of numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Scatter {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Scatter {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

fn ratio(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if b != 0.0 => Some(a / b),
        _ => None,
    }
}

fn usable(r: &ReportRow) -> bool {
    r.converged && r.value.is_some()
}

/// Fitted AEP values (GEV and POT) against the empirical value at the same T.
pub fn fit_vs_empirical(rows: &[ReportRow]) -> Scatter {
    let mut out = Vec::new();
    for r in rows.iter().filter(|r| matches!(r.method, Method::Gev | Method::Pot) && usable(r)) {
        let emp = rows
            .iter()
            .find(|e| e.method == Method::Empirical && e.cell == r.cell && e.period == r.period && usable(e));
        if let Some(e) = emp {
            out.push(vec![
                quote(&r.cell),
                r.method.to_string(),
                r.tail_probability.map(|q| q.to_string()).unwrap_or_else(|| "annual".into()),
                r.period.to_string(),
                opt(r.value),
                opt(e.value),
                opt(ratio(r.value, e.value)),
            ]);
        }
    }
    Scatter {
        name: "fit_vs_empirical",
        header: vec!["cell", "method", "tail_probability", "period", "fitted", "empirical", "ratio"],
        rows: out,
    }
}

/// POT shape and AEP at each threshold against the reference threshold.
pub fn stability_vs_reference(rows: &[ReportRow], reference_tail_probability: f64) -> Scatter {
    let mut out = Vec::new();
    for r in rows.iter().filter(|r| r.method == Method::Pot && usable(r)) {
        let reference = rows.iter().find(|x| {
            x.method == Method::Pot
                && x.cell == r.cell
                && x.period == r.period
                && x.tail_probability == Some(reference_tail_probability)
                && usable(x)
        });
        if let Some(x) = reference {
            out.push(vec![
                quote(&r.cell),
                opt(r.tail_probability),
                r.n_used.to_string(),
                r.period.to_string(),
                opt(r.xi),
                opt(x.xi),
                opt(r.value),
                opt(x.value),
                opt(ratio(r.value, x.value)),
            ]);
        }
    }
    Scatter {
        name: "stability_vs_reference",
        header: vec![
            "cell",
            "tail_probability",
            "n_used",
            "period",
            "xi",
            "xi_reference",
            "value",
            "value_reference",
            "ratio",
        ],
        rows: out,
    }
}

/// Combined seasonal values against the full-year POT value at the same threshold.
pub fn seasonal_vs_full_year(rows: &[ReportRow]) -> Scatter {
    let mut out = Vec::new();
    for r in rows.iter().filter(|r| matches!(r.method, Method::Seasonal1 | Method::Seasonal2) && usable(r)) {
        let full = rows.iter().find(|x| {
            x.method == Method::Pot
                && x.cell == r.cell
                && x.period == r.period
                && x.tail_probability == r.tail_probability
                && usable(x)
        });
        if let Some(x) = full {
            out.push(vec![
                quote(&r.cell),
                r.method.to_string(),
                opt(r.tail_probability),
                r.period.to_string(),
                r.season.map(|s| s.name().to_string()).unwrap_or_default(),
                opt(r.value),
                opt(x.value),
                opt(ratio(r.value, x.value)),
            ]);
        }
    }
    Scatter {
        name: "seasonal_vs_full_year",
        header: vec!["cell", "method", "tail_probability", "period", "season", "seasonal", "full_year", "ratio"],
        rows: out,
    }
}

/// Relative uncertainty of fitted AEP values against the fitted shape.
pub fn relative_uncertainty_vs_shape(rows: &[ReportRow]) -> Scatter {
    let out = rows
        .iter()
        .filter(|r| r.method != Method::Empirical && usable(r) && r.rel_unc.is_some())
        .map(|r| {
            vec![
                quote(&r.cell),
                r.method.to_string(),
                r.tail_probability.map(|q| q.to_string()).unwrap_or_else(|| "annual".into()),
                r.period.to_string(),
                opt(r.xi),
                opt(r.se_xi),
                opt(r.rel_unc),
            ]
        })
        .collect();
    Scatter {
        name: "relative_uncertainty_vs_shape",
        header: vec!["cell", "method", "tail_probability", "period", "xi", "se_xi", "rel_unc"],
        rows: out,
    }
}

pub fn all_scatters(rows: &[ReportRow], reference_tail_probability: f64) -> Vec<Scatter> {
    vec![
        fit_vs_empirical(rows),
        stability_vs_reference(rows, reference_tail_probability),
        seasonal_vs_full_year(rows),
        relative_uncertainty_vs_shape(rows),
    ]
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(())
}

/// Files written by [`write_report`], relative to the output directory.
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_JSON: &str = "report.json";

/// Writes `report.csv`, `report.json` and one CSV per scatter table.
pub fn write_report(dir: &Path, rows: &[ReportRow], reference_tail_probability: f64) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let csv_path = dir.join(REPORT_CSV);
    write_file(&csv_path, &rows_to_csv(rows))?;
    written.push(csv_path);
    let json_path = dir.join(REPORT_JSON);
    write_file(&json_path, &rows_to_json(rows)?)?;
    written.push(json_path);
    for s in all_scatters(rows, reference_tail_probability) {
        let p = dir.join(format!("{}.csv", s.name));
        write_file(&p, &s.to_csv())?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(cell: &str, method: Method, q: Option<f64>, t: f64, value: f64, xi: f64) -> ReportRow {
        let mut r = ReportRow::blank(cell, method, q, t);
        r.value = Some(value);
        r.xi = Some(xi);
        r.rel_unc = Some(0.1);
        r.converged = true;
        r
    }

    #[test]
    fn ordering_is_deterministic() {
        let mut rows = vec![
            row("b", Method::Gev, None, 100.0, 1.0, 0.0),
            row("a", Method::Pot, Some(1e-4), 1000.0, 1.0, 0.0),
            row("a", Method::Pot, Some(1e-4), 100.0, 1.0, 0.0),
            row("a", Method::Pot, Some(1e-5), 100.0, 1.0, 0.0),
            row("a", Method::Gev, None, 100.0, 1.0, 0.0),
        ];
        let mut rev = rows.clone();
        rev.reverse();
        sort_rows(&mut rows);
        sort_rows(&mut rev);
        assert_eq!(rows, rev);
        assert_eq!(rows[0].method, Method::Gev);
        assert_eq!(rows[1].tail_probability, Some(1e-5));
        assert_eq!(rows[4].cell, "b");
    }

    #[test]
    fn json_roundtrip_with_annual_label() {
        let rows = vec![
            row("a", Method::Gev, None, 100.0, 12.5, 0.1),
            row("a", Method::Seasonal2, Some(1e-4), 100.0, 11.0, -0.1).with_note("x, \"y\""),
        ];
        let text = rows_to_json(&rows).unwrap();
        assert!(text.contains("\"annual\""));
        assert!(text.contains("\"seasonal-2\""));
        assert_eq!(rows_from_json(&text).unwrap(), rows);
    }

    #[test]
    fn csv_layout() {
        let csv = rows_to_csv(&[row("a", Method::Gev, None, 100.0, 12.5, 0.1).with_note("a,b")]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "a,gev,annual,,0,,,0.1,,100,12.5,,0.1,true,,\"a,b\"");
    }

    #[test]
    fn scatters_join_rows() {
        let rows = vec![
            row("a", Method::Gev, None, 100.0, 12.0, 0.1),
            row("a", Method::Empirical, None, 100.0, 10.0, 0.0),
            row("a", Method::Pot, Some(1e-3), 100.0, 11.0, 0.2),
            row("a", Method::Pot, Some(1e-4), 100.0, 10.0, 0.0),
            row("a", Method::Seasonal2, Some(1e-4), 100.0, 10.5, 0.0),
        ];
        let f = fit_vs_empirical(&rows);
        assert_eq!(f.rows.len(), 3);
        assert_eq!(f.rows[0][6], "1.2");
        let s = stability_vs_reference(&rows, 1e-4);
        assert_eq!(s.rows.len(), 2);
        assert_eq!(s.rows[0][8], "1.1");
        let sv = seasonal_vs_full_year(&rows);
        assert_eq!(sv.rows.len(), 1);
        assert_eq!(sv.rows[0][7], "1.05");
        assert_eq!(relative_uncertainty_vs_shape(&rows).rows.len(), 4);
    }

    #[test]
    fn method_parse() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("bogus".parse::<Method>().is_err());
    }
}
