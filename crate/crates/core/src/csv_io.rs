//! Long-format CSV daily data: one row per (date, cell).
//!
//! Columns `date` (ISO-8601), `cell_id`, `value`. Rows may come in any
//! order. A record containing any Feb 29 is read on the Gregorian calendar;
//! otherwise it is taken to be a 365-day record.

use crate::calendar::{Calendar, DailySeries};
use crate::error::{Error, Result};
use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

/// Missing dates listed in a gap error before it is cut short.
const MAX_LISTED_GAPS: usize = 20;

#[derive(Debug, Deserialize, Serialize)]
struct Row {
    date: NaiveDate,
    cell_id: String,
    value: f64,
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Csv(format!("{other:?}")),
    }
}

/// Reads CSV rows and groups them into series ordered by cell id.
pub fn read_csv_from<R: Read>(input: R, variable: &str, units: &str) -> Result<Vec<DailySeries>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut cells: BTreeMap<String, Vec<(NaiveDate, f64)>> = BTreeMap::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| match csv_err(e) {
            Error::Csv(m) => Error::Csv(format!("row {}: {m}", i + 1)),
            other => other,
        })?;
        cells.entry(row.cell_id).or_default().push((row.date, row.value));
    }
    if cells.is_empty() {
        return Err(Error::EmptyInput);
    }
    cells
        .into_iter()
        .map(|(id, rows)| assemble(id, rows, variable, units))
        .collect()
}

pub fn read_csv(path: &Path, variable: &str, units: &str) -> Result<Vec<DailySeries>> {
    read_csv_from(std::fs::File::open(path)?, variable, units)
}

fn assemble(id: String, mut rows: Vec<(NaiveDate, f64)>, variable: &str, units: &str) -> Result<DailySeries> {
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Csv(format!("duplicate row for cell {id}, {}", w[0].0)));
    }
    let first = rows[0].0;
    let last = rows[rows.len() - 1].0;
    let leap_days = rows.iter().any(|(d, _)| d.month() == 2 && d.day() == 29);
    let calendar = Calendar {
        start_year: first.year(),
        n_years: (last.year() - first.year() + 1) as u32,
        leap_days,
    };
    let mut values = Vec::with_capacity(calendar.n_days());
    let mut missing = Vec::new();
    let mut next = rows.iter().peekable();
    for day in calendar.days() {
        let date = NaiveDate::from_ymd_opt(day.year, day.month, day.day).expect("calendar days are valid dates");
        match next.peek() {
            Some((d, v)) if *d == date => {
                values.push(*v);
                next.next();
            }
            _ => missing.push(date),
        }
    }
    if !missing.is_empty() {
        let n = missing.len();
        let listed: Vec<String> = missing.iter().take(MAX_LISTED_GAPS).map(|d| format!("cell {id}, {d}")).collect();
        let more = if n > MAX_LISTED_GAPS { format!(" and {} more", n - MAX_LISTED_GAPS) } else { String::new() };
        return Err(Error::Csv(format!("missing dates: {}{more}", listed.join("; "))));
    }
    DailySeries::new(id, values, calendar, variable, units)
}

/// Writes series in long format, cells in the given order, dates ascending.
pub fn write_csv_to<W: Write>(out: W, cells: &[DailySeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in cells {
        for (day, value) in s.days() {
            let date = NaiveDate::from_ymd_opt(day.year, day.month, day.day).expect("calendar days are valid dates");
            w.serialize(Row { date, cell_id: s.id.clone(), value }).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(path: &Path, cells: &[DailySeries]) -> Result<()> {
    write_csv_to(std::io::BufWriter::new(std::fs::File::create(path)?), cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows_for(cell: &str, year: i32, skip: Option<NaiveDate>) -> Vec<String> {
        Calendar::noleap(year, 1)
            .days()
            .map(|d| NaiveDate::from_ymd_opt(d.year, d.month, d.day).unwrap())
            .filter(|d| Some(*d) != skip)
            .enumerate()
            .map(|(i, d)| format!("{d},{cell},{}", i as f64 * 0.5))
            .collect()
    }

    fn parse(lines: &[String]) -> Result<Vec<DailySeries>> {
        let text = format!("date,cell_id,value\n{}\n", lines.join("\n"));
        read_csv_from(text.as_bytes(), "pr", "mm/day")
    }

    #[test]
    fn two_cells() {
        let mut lines = rows_for("A", 2001, None);
        lines.extend(rows_for("B", 2001, None));
        let out = parse(&lines).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|s| s.values.len() == 365 && !s.calendar.leap_days));
        assert_eq!(out[0].values[10], 5.0);
    }

    #[test]
    fn shuffled_rows_same_result() {
        let mut lines = rows_for("A", 2001, None);
        lines.extend(rows_for("B", 2001, None));
        let sorted = parse(&lines).unwrap();
        // deterministic shuffle
        let n = lines.len();
        let mut shuffled = Vec::with_capacity(n);
        for i in 0..n {
            shuffled.push(lines[(i * 277) % n].clone());
        }
        assert_eq!(parse(&shuffled).unwrap(), sorted);
    }

    #[test]
    fn gap_names_cell_and_date() {
        let gap = NaiveDate::from_ymd_opt(2001, 2, 3).unwrap();
        let err = parse(&rows_for("A", 2001, Some(gap))).unwrap_err().to_string();
        assert!(err.contains("cell A, 2001-02-03"), "{err}");
    }

    #[test]
    fn duplicates_rejected() {
        let mut lines = rows_for("A", 2001, None);
        lines.push(lines[5].clone());
        let err = parse(&lines).unwrap_err().to_string();
        assert!(err.contains("duplicate"), "{err}");
    }

    #[test]
    fn leap_calendar_detected_and_roundtrips() {
        let cal = Calendar { start_year: 2003, n_years: 2, leap_days: true };
        let s = DailySeries::new("c1", (0..cal.n_days()).map(|i| i as f64).collect(), cal, "pr", "mm/day").unwrap();
        let mut buf = Vec::new();
        write_csv_to(&mut buf, std::slice::from_ref(&s)).unwrap();
        let back = read_csv_from(buf.as_slice(), "pr", "mm/day").unwrap();
        assert_eq!(back, vec![s]);
    }

    #[test]
    fn bad_rows() {
        assert!(parse(&["2001-13-01,A,1".to_string()]).is_err());
        assert!(parse(&["2001-01-01,A,abc".to_string()]).is_err());
        assert!(matches!(parse(&[]), Err(Error::EmptyInput)));
    }
}
