//! Calendars and daily series.

use crate::error::{Error, Result};
use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

pub const NOLEAP_MONTH_LENGTHS: [u32; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

pub fn is_leap_year(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

/// Calendar metadata of a daily record covering whole years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calendar {
    pub start_year: i32,
    pub n_years: u32,
    /// Gregorian calendar with Feb 29 present; otherwise 365-day years.
    pub leap_days: bool,
}

/// One calendar day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Day {
    pub year: i32,
    /// 1..=12
    pub month: u32,
    /// 1..=31
    pub day: u32,
}

impl Day {
    pub fn is_feb29(&self) -> bool {
        self.month == 2 && self.day == 29
    }
}

impl Calendar {
    pub fn noleap(start_year: i32, n_years: u32) -> Self {
        Calendar { start_year, n_years, leap_days: false }
    }

    pub fn days_in_year(&self, year: i32) -> usize {
        if self.leap_days && is_leap_year(year) {
            366
        } else {
            365
        }
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        let start = self.start_year;
        (0..self.n_years as i32).map(move |i| start + i)
    }

    pub fn n_days(&self) -> usize {
        self.years().map(|y| self.days_in_year(y)).sum()
    }

    /// Checks that `n_days` values cover whole years of this calendar.
    pub fn check_length(&self, n_days: usize) -> Result<()> {
        let mut seen = 0usize;
        for year in self.years() {
            let len = self.days_in_year(year);
            if seen + len > n_days {
                return Err(Error::Calendar(format!(
                    "partial year {year}: {} of {len} days present",
                    n_days - seen
                )));
            }
            seen += len;
        }
        if seen != n_days {
            let year = self.start_year + self.n_years as i32;
            return Err(Error::Calendar(format!(
                "partial year {year}: {} trailing days beyond {} whole years",
                n_days - seen,
                self.n_years
            )));
        }
        Ok(())
    }

    /// Every day of the record in order.
    pub fn days(&self) -> impl Iterator<Item = Day> + '_ {
        self.years().flat_map(move |year| {
            let leap = self.leap_days && is_leap_year(year);
            (1..=12u32).flat_map(move |month| {
                let len = if month == 2 && leap { 29 } else { NOLEAP_MONTH_LENGTHS[month as usize - 1] };
                (1..=len).map(move |day| Day { year, month, day })
            })
        })
    }

    /// Calendar of a record spanning `first..=last` dates, if it is whole years.
    pub fn from_dates(first: NaiveDate, last: NaiveDate, n_days: usize) -> Result<Self> {
        if first.month() != 1 || first.day() != 1 {
            return Err(Error::Calendar(format!("record must start on Jan 1, starts {first}")));
        }
        if last.month() != 12 || last.day() != 31 {
            return Err(Error::Calendar(format!("partial year {}: record ends {last}", last.year())));
        }
        let n_years = (last.year() - first.year() + 1) as u32;
        let gregorian = Calendar { start_year: first.year(), n_years, leap_days: true };
        if gregorian.n_days() == n_days {
            return Ok(gregorian);
        }
        let noleap = Calendar { leap_days: false, ..gregorian };
        if noleap.n_days() == n_days {
            return Ok(noleap);
        }
        Err(Error::Calendar(format!(
            "{n_days} days do not fill {n_years} years starting {}",
            first.year()
        )))
    }
}

/// Day of the 365-day year (1..=365) for a month/day; `None` for Feb 29.
pub fn noleap_day_of_year(month: u32, day: u32) -> Option<u32> {
    if month == 2 && day == 29 {
        return None;
    }
    let before: u32 = NOLEAP_MONTH_LENGTHS[..month as usize - 1].iter().sum();
    Some(before + day)
}

/// Month (1..=12) of a 365-day-calendar day of year.
pub fn noleap_month(day_of_year: u32) -> Result<u32> {
    if !(1..=365).contains(&day_of_year) {
        return Err(Error::domain(format!("day of year must be in 1..=365, got {day_of_year}")));
    }
    let mut remaining = day_of_year;
    for (i, &len) in NOLEAP_MONTH_LENGTHS.iter().enumerate() {
        if remaining <= len {
            return Ok(i as u32 + 1);
        }
        remaining -= len;
    }
    unreachable!()
}

/// One grid cell's daily record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    pub id: String,
    pub values: Vec<f64>,
    pub calendar: Calendar,
    pub variable: String,
    pub units: String,
}

impl DailySeries {
    pub fn new(
        id: impl Into<String>,
        values: Vec<f64>,
        calendar: Calendar,
        variable: impl Into<String>,
        units: impl Into<String>,
    ) -> Result<Self> {
        let s = DailySeries {
            id: id.into(),
            values,
            calendar,
            variable: variable.into(),
            units: units.into(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.calendar.check_length(self.values.len())?;
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("cell {}: non-finite value at day {i}", self.id)));
        }
        if self.is_precipitation() {
            if let Some(i) = self.values.iter().position(|&v| v < 0.0) {
                return Err(Error::domain(format!("cell {}: negative precipitation at day {i}", self.id)));
            }
        }
        Ok(())
    }

    pub fn is_precipitation(&self) -> bool {
        let v = self.variable.to_ascii_lowercase();
        v.starts_with("pr") || v.contains("precip")
    }

    pub fn n_years(&self) -> u32 {
        self.calendar.n_years
    }

    /// Values paired with their calendar days.
    pub fn days(&self) -> impl Iterator<Item = (Day, f64)> + '_ {
        self.calendar.days().zip(self.values.iter().copied())
    }
}
