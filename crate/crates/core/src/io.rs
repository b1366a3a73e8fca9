//! CSV ingestion, scale-list parsing and result tables.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gc::{validate_scales, MultiscaleGcResult};
use crate::linalg::Matrix;
use crate::series::TimeSeriesSet;
use crate::surrogate::SignificanceBands;

/// Longest scale list `parse_scales` will expand.
pub const MAX_SCALES: usize = 100_000;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CsvOptions {
    /// Treat the first column as a strictly monotone time axis.
    pub time_column: bool,
}

fn parse_cell(raw: &str, line: usize, column: &str) -> Result<f64> {
    let field = raw.trim();
    let parse_err = |message: String| Error::Parse {
        line,
        column: column.to_string(),
        message,
    };
    if field.is_empty() {
        return Err(parse_err("empty cell".into()));
    }
    let v: f64 = field
        .parse()
        .map_err(|_| parse_err(format!("'{field}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(format!("'{field}' is not finite")));
    }
    Ok(v)
}

/// Parses comma-separated UTF-8 text with a mandatory header row.
pub fn parse_csv(bytes: &[u8], opts: &CsvOptions) -> Result<TimeSeriesSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(Error::InvalidInput("empty CSV file".into())),
        Some(r) => r.map_err(|e| Error::Csv(e.to_string()))?,
    };
    let names: Vec<String> = header.iter().map(str::to_string).collect();
    if names.iter().all(|h| h.parse::<f64>().is_ok()) {
        return Err(Error::InvalidInput(
            "first CSV row must be a header with channel names".into(),
        ));
    }
    if names.iter().any(String::is_empty) {
        return Err(Error::InvalidInput("header has an empty column name".into()));
    }
    let width = names.len();
    let min_width = if opts.time_column { 2 } else { 1 };
    if width < min_width {
        return Err(Error::InvalidInput(format!(
            "need at least {min_width} column(s), header has {width}"
        )));
    }

    let mut cells: Vec<f64> = Vec::new();
    let mut rows = 0;
    for rec in records {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        let line = rec.position().map_or(rows + 2, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != width {
            return Err(Error::Parse {
                line,
                column: String::new(),
                message: format!("row has {} fields, header has {width}", rec.len()),
            });
        }
        for (raw, name) in rec.iter().zip(&names) {
            cells.push(parse_cell(raw, line, name)?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::InvalidInput("CSV has a header but no data rows".into()));
    }

    let start = usize::from(opts.time_column);
    let values = Matrix::from_fn(rows, width - start, |i, j| cells[i * width + j + start]);
    let labels = names[start..].to_vec();
    let set = TimeSeriesSet::new(values, labels)?;
    if !opts.time_column {
        return Ok(set);
    }
    let time: Vec<f64> = (0..rows).map(|i| cells[i * width]).collect();
    check_monotone(&time)?;
    let set = set.with_time(time.clone())?;
    match uniform_step(&time) {
        Some(dt) => set.with_dt(dt),
        None => Ok(set),
    }
}

fn check_monotone(time: &[f64]) -> Result<()> {
    if time.len() < 2 {
        return Ok(());
    }
    let increasing = time[1] > time[0];
    for (k, w) in time.windows(2).enumerate() {
        let ok = if increasing { w[1] > w[0] } else { w[1] < w[0] };
        if !ok {
            return Err(Error::NonMonotoneTime { row: k + 1 });
        }
    }
    Ok(())
}

fn uniform_step(time: &[f64]) -> Option<f64> {
    if time.len() < 2 {
        return None;
    }
    let step = (time[time.len() - 1] - time[0]) / (time.len() - 1) as f64;
    let tol = 1e-9 * step.abs().max(time[0].abs());
    let uniform = time.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= tol);
    (uniform && step > 0.0).then_some(step)
}

pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<TimeSeriesSet> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
    parse_csv(&bytes, opts).map_err(|e| e.context(path.display().to_string()))
}

fn parse_positive(token: &str) -> Result<usize> {
    let v: usize = token
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("'{}' is not a positive integer", token.trim())))?;
    if v == 0 {
        return Err(Error::InvalidConfig("scales must be at least 1".into()));
    }
    Ok(v)
}

/// Parses a scale list such as `1..10`, `1,2,5` or `1..5,8,10..12`.
/// Ranges are inclusive (`a..b` and `a..=b` are the same); the result must be
/// strictly increasing.
pub fn parse_scales(spec: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in spec.split(',') {
        let item = item.trim();
        if item.is_empty() {
            return Err(Error::InvalidConfig(format!("empty item in scale list '{spec}'")));
        }
        if let Some((a, b)) = item.split_once("..") {
            let b = b.strip_prefix('=').unwrap_or(b);
            let (a, b) = (parse_positive(a)?, parse_positive(b)?);
            if a > b {
                return Err(Error::InvalidConfig(format!("empty scale range '{item}'")));
            }
            if b - a >= MAX_SCALES || out.len() + (b - a + 1) > MAX_SCALES {
                return Err(Error::InvalidConfig(format!("more than {MAX_SCALES} scales")));
            }
            out.extend(a..=b);
        } else {
            out.push(parse_positive(item)?);
            if out.len() > MAX_SCALES {
                return Err(Error::InvalidConfig(format!("more than {MAX_SCALES} scales")));
            }
        }
    }
    validate_scales(&out)?;
    Ok(out)
}

/// Column name for a surrogate percentile, e.g. `surr_p05`, `surr_p2.5`.
pub fn percentile_column(p: f64) -> String {
    if p.fract() == 0.0 {
        format!("surr_p{:02}", p as u64)
    } else {
        format!("surr_p{p}")
    }
}

/// Writes `tau,source,target,gc,lambda_full,lambda_restricted` plus, when
/// bands are given, one column per percentile and `significant`. Skipped
/// scales produce no rows.
pub fn write_gc_csv<W: Write>(
    out: W,
    result: &MultiscaleGcResult,
    labels: &[String],
    bands: Option<&SignificanceBands>,
) -> Result<()> {
    if labels.len() != result.channels {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} channels",
            labels.len(),
            result.channels
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["tau", "source", "target", "gc", "lambda_full", "lambda_restricted"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if let Some(b) = bands {
        header.extend(b.percentiles.iter().map(|&p| percentile_column(p)));
        header.push("significant".into());
    }
    w.write_record(&header).map_err(|e| Error::Csv(e.to_string()))?;
    for scale in &result.scales {
        let Some(values) = scale.values() else { continue };
        for v in values {
            let mut row = vec![
                scale.tau.to_string(),
                labels[v.source].clone(),
                labels[v.target].clone(),
                v.gc.to_string(),
                v.lambda_full.to_string(),
                v.lambda_restricted.to_string(),
            ];
            if let Some(b) = bands {
                match b.get(scale.tau, v.source, v.target) {
                    Some(cell) => {
                        row.extend(cell.bands.iter().map(f64::to_string));
                        row.push(cell.significant.to_string());
                    }
                    None => {
                        row.extend(b.percentiles.iter().map(|_| "NaN".to_string()));
                        row.push("false".into());
                    }
                }
            }
            w.write_record(&row).map_err(|e| Error::Csv(e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the series with a header; the time axis, when present, goes first as `t`.
pub fn write_series_csv<W: Write>(out: W, data: &TimeSeriesSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = Vec::new();
    if data.time().is_some() {
        header.push("t");
    }
    header.extend(data.labels().iter().map(String::as_str));
    w.write_record(&header).map_err(|e| Error::Csv(e.to_string()))?;
    for i in 0..data.len() {
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        if let Some(t) = data.time() {
            row.push(t[i].to_string());
        }
        row.extend(data.values().row(i).iter().map(f64::to_string));
        w.write_record(&row).map_err(|e| Error::Csv(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
