//! Binary multi-cell daily store.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "EVA1"            4 bytes magic
//! version           u16 (= 1)
//! cell count        u32
//! per cell:
//!   id length       u32, then UTF-8 id
//!   n_days          u32
//!   start year      i32
//!   leap flag       u8 (1 = Gregorian with Feb 29, 0 = 365-day)
//!   units length    u32, then UTF-8 units
//!   variable length u32, then UTF-8 variable label
//!   values          n_days × f64
//! ```
//!
//! Cells are read one at a time so a store never has to fit in memory.

use crate::calendar::{is_leap_year, Calendar, DailySeries};
use crate::error::{Error, Result};
use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"EVA1";
pub const VERSION: u16 = 1;
const MAX_STRING: u32 = 1 << 20;

pub struct StoreWriter<W: Write> {
    out: W,
    declared: u32,
    written: u32,
}

impl StoreWriter<BufWriter<File>> {
    pub fn create(path: &Path, cell_count: u32) -> Result<Self> {
        StoreWriter::new(BufWriter::new(File::create(path)?), cell_count)
    }
}

impl<W: Write> StoreWriter<W> {
    pub fn new(mut out: W, cell_count: u32) -> Result<Self> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&cell_count.to_le_bytes())?;
        Ok(StoreWriter { out, declared: cell_count, written: 0 })
    }

    fn write_str(&mut self, s: &str) -> Result<()> {
        self.out.write_all(&(s.len() as u32).to_le_bytes())?;
        self.out.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn write_cell(&mut self, series: &DailySeries) -> Result<()> {
        if self.written == self.declared {
            return Err(Error::Format {
                offset: 0,
                message: format!("store declared {} cells; cannot write more", self.declared),
            });
        }
        series.calendar.check_length(series.values.len())?;
        let n_days = u32::try_from(series.values.len())
            .map_err(|_| Error::domain(format!("cell {} has too many days", series.id)))?;
        self.write_str(&series.id)?;
        self.out.write_all(&n_days.to_le_bytes())?;
        self.out.write_all(&series.calendar.start_year.to_le_bytes())?;
        self.out.write_all(&[series.calendar.leap_days as u8])?;
        self.write_str(&series.units)?;
        self.write_str(&series.variable)?;
        let mut buf = Vec::with_capacity(series.values.len() * 8);
        for v in &series.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        self.out.write_all(&buf)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.written != self.declared {
            return Err(Error::Format {
                offset: 0,
                message: format!("store declared {} cells but {} were written", self.declared, self.written),
            });
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn write_store(path: &Path, cells: &[DailySeries]) -> Result<()> {
    let mut w = StoreWriter::create(path, cells.len() as u32)?;
    for c in cells {
        w.write_cell(c)?;
    }
    w.finish()?;
    Ok(())
}

/// Streaming reader; yields one cell at a time.
pub struct StoreReader<R: Read> {
    input: R,
    offset: u64,
    cell_count: u32,
    read: u32,
    failed: bool,
}

impl StoreReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        StoreReader::new(BufReader::new(File::open(path)?))
    }
}

impl<R: Read> StoreReader<R> {
    pub fn new(input: R) -> Result<Self> {
        let mut r = StoreReader { input, offset: 0, cell_count: 0, read: 0, failed: false };
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic, "magic")?;
        if &magic != MAGIC {
            return Err(Error::Format { offset: 0, message: format!("bad magic {magic:?}") });
        }
        let version = u16::from_le_bytes(r.array("version")?);
        if version != VERSION {
            return Err(Error::Format { offset: 4, message: format!("unsupported version {version}") });
        }
        r.cell_count = u32::from_le_bytes(r.array("cell count")?);
        Ok(r)
    }

    pub fn cell_count(&self) -> u32 {
        self.cell_count
    }

    /// Bytes consumed so far.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    fn read_exact(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        match self.input.read_exact(buf) {
            Ok(()) => {
                self.offset += buf.len() as u64;
                Ok(())
            }
            Err(e) if e.kind() == ErrorKind::UnexpectedEof => Err(Error::Format {
                offset: self.offset,
                message: format!("truncated while reading {what}"),
            }),
            Err(e) => Err(e.into()),
        }
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.read_exact(&mut b, what)?;
        Ok(b)
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let at = self.offset;
        let len = u32::from_le_bytes(self.array(what)?);
        if len > MAX_STRING {
            return Err(Error::Format { offset: at, message: format!("{what} length {len} is implausible") });
        }
        let mut b = vec![0u8; len as usize];
        self.read_exact(&mut b, what)?;
        String::from_utf8(b).map_err(|_| Error::Format { offset: at + 4, message: format!("{what} is not UTF-8") })
    }

    fn read_cell(&mut self) -> Result<DailySeries> {
        let id = self.string("cell id")?;
        let days_at = self.offset;
        let n_days = u32::from_le_bytes(self.array("n_days")?) as usize;
        let start_year = i32::from_le_bytes(self.array("start year")?);
        let flag_at = self.offset;
        let leap_days = match self.array::<1>("leap flag")?[0] {
            0 => false,
            1 => true,
            other => return Err(Error::Format { offset: flag_at, message: format!("bad leap flag {other}") }),
        };
        let units = self.string("units")?;
        let variable = self.string("variable")?;
        let n_years = years_spanned(start_year, leap_days, n_days).ok_or_else(|| Error::Format {
            offset: days_at,
            message: format!("cell {id}: {n_days} days are not a whole number of years"),
        })?;
        let mut raw = vec![0u8; n_days * 8];
        self.read_exact(&mut raw, "values")?;
        let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let calendar = Calendar { start_year, n_years, leap_days };
        Ok(DailySeries { id, values, calendar, variable, units })
    }

    /// Fails if bytes remain after the last declared cell.
    fn check_end(&mut self) -> Result<()> {
        let mut probe = [0u8; 1];
        match self.input.read(&mut probe)? {
            0 => Ok(()),
            _ => Err(Error::Format { offset: self.offset, message: "trailing bytes after last cell".into() }),
        }
    }
}

fn years_spanned(start_year: i32, leap_days: bool, n_days: usize) -> Option<u32> {
    let mut remaining = n_days;
    let mut years = 0u32;
    while remaining > 0 {
        let len = if leap_days && is_leap_year(start_year + years as i32) { 366 } else { 365 };
        remaining = remaining.checked_sub(len)?;
        years += 1;
    }
    Some(years)
}

impl<R: Read> Iterator for StoreReader<R> {
    type Item = Result<DailySeries>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        if self.read == self.cell_count {
            self.failed = true;
            return match self.check_end() {
                Ok(()) => None,
                Err(e) => Some(Err(e)),
            };
        }
        let out = self.read_cell();
        match &out {
            Ok(_) => self.read += 1,
            Err(_) => self.failed = true,
        }
        Some(out)
    }
}

/// Reads every cell; on any error nothing is returned.
pub fn read_store(path: &Path) -> Result<Vec<DailySeries>> {
    StoreReader::open(path)?.collect()
}
