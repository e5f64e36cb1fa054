//! Daily case counts.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{ensure, Error, Result};

/// One count per consecutive day starting at `first_day`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseSeries {
    pub first_day: i64,
    pub counts: Vec<u64>,
    /// True where the count was filled in by interpolation.
    pub interpolated: Vec<bool>,
}

impl CaseSeries {
    pub fn from_counts(first_day: i64, counts: Vec<u64>) -> Self {
        let interpolated = vec![false; counts.len()];
        Self {
            first_day,
            counts,
            interpolated,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn days(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.counts.len() as i64).map(move |k| self.first_day + k)
    }

    /// Writes `day,count` with a header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["day", "count"])?;
        for (day, count) in self.days().zip(&self.counts) {
            w.write_record([day.to_string(), count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn load_case_series(path: &Path, interpolate: bool) -> Result<CaseSeries> {
    let file = std::fs::File::open(path)?;
    parse_case_series(file, &path.display().to_string(), interpolate)
}

/// Parses a headed CSV whose first two columns are day and count; later
/// columns are ignored and `#` starts a comment line. Interior gaps are
/// filled by linear interpolation rounded to the nearest integer when
/// `interpolate` is set and rejected otherwise.
pub fn parse_case_series<R: Read>(reader: R, source: &str, interpolate: bool) -> Result<CaseSeries> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let load = |line: u64, message: String| Error::Load {
        path: source.to_string(),
        line: line as usize,
        message,
    };
    let mut points: Vec<(i64, u64)> = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        ensure_columns(&record, line, &load)?;
        let day: i64 = record[0]
            .parse()
            .map_err(|_| load(line, format!("day {:?} is not an integer", &record[0])))?;
        let count: i64 = record[1]
            .parse()
            .map_err(|_| load(line, format!("count {:?} is not an integer", &record[1])))?;
        if count < 0 {
            return Err(load(line, format!("negative count {count}")));
        }
        if let Some(&(prev, _)) = points.last() {
            if day <= prev {
                return Err(load(line, format!("day {day} does not increase on day {prev}")));
            }
            if day > prev + 1 && !interpolate {
                return Err(load(line, format!("days {prev} to {day} leave a gap")));
            }
        }
        points.push((day, count as u64));
    }
    ensure!(!points.is_empty(), "{source}: no data rows");

    let first_day = points[0].0;
    let mut counts = Vec::new();
    let mut interpolated = Vec::new();
    for pair in points.windows(2) {
        let ((d0, c0), (d1, c1)) = (pair[0], pair[1]);
        counts.push(c0);
        interpolated.push(false);
        let span = (d1 - d0) as f64;
        for k in 1..(d1 - d0) {
            let value = c0 as f64 + (c1 as f64 - c0 as f64) * k as f64 / span;
            counts.push(value.round() as u64);
            interpolated.push(true);
        }
    }
    counts.push(points[points.len() - 1].1);
    interpolated.push(false);
    Ok(CaseSeries {
        first_day,
        counts,
        interpolated,
    })
}

fn ensure_columns(record: &csv::StringRecord, line: u64, load: &impl Fn(u64, String) -> Error) -> Result<()> {
    if record.len() < 2 {
        return Err(load(
            line,
            format!("expected at least 2 columns, found {}", record.len()),
        ));
    }
    Ok(())
}
