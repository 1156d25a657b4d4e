//! Data pipeline for the hourly PV dataset schema: ingestion, cleaning,
//! scaling, windowing, purged k-fold planning and synthetic generation.
//!
//! The canonical CSV schema is `timestamp,Ta,Tm,I3,I15,P` with ISO-8601
//! timestamps: ambient and module temperature, irradiance on two tilted
//! planes, and mean PV power.

use std::io::Write;
use std::ops::Range;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_FEATURES: usize = 5;
pub const COLUMN_NAMES: [&str; N_FEATURES] = ["Ta", "Tm", "I3", "I15", "P"];
/// Index of the power column inside every row.
pub const POWER_COL: usize = 4;

/// The date excluded outright during cleaning; its rows are all-zero
/// collection errors in the source dataset.
const EXCLUDED_DATE: (i32, u32, u32) = (2013, 12, 31);

const HOUR: chrono::Duration = chrono::Duration::hours(1);

/// Hourly multivariate series. After cleaning, timestamps are strictly
/// increasing with exact hourly spacing and no missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesFrame {
    timestamps: Vec<NaiveDateTime>,
    /// Row-major values, `N_FEATURES` per row.
    values: Vec<f64>,
}

impl TimeSeriesFrame {
    pub fn new(timestamps: Vec<NaiveDateTime>, values: Vec<f64>) -> Result<Self> {
        if values.len() != timestamps.len() * N_FEATURES {
            return Err(Error::shape(format!(
                "frame expects {} values for {} rows, got {}",
                timestamps.len() * N_FEATURES,
                timestamps.len(),
                values.len()
            )));
        }
        Ok(TimeSeriesFrame { timestamps, values })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * N_FEATURES..(i + 1) * N_FEATURES]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * N_FEATURES + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(N_FEATURES)
    }

    pub fn slice_rows(&self, range: Range<usize>) -> TimeSeriesFrame {
        TimeSeriesFrame {
            timestamps: self.timestamps[range.clone()].to_vec(),
            values: self.values[range.start * N_FEATURES..range.end * N_FEATURES].to_vec(),
        }
    }

    /// Serializes back to the canonical CSV schema.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "timestamp,Ta,Tm,I3,I15,P")?;
        for (ts, row) in self.timestamps.iter().zip(self.rows()) {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                ts.format("%Y-%m-%dT%H:%M:%S"),
                row[0],
                row[1],
                row[2],
                row[3],
                row[4]
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn parse_timestamp(text: &str) -> Option<NaiveDateTime> {
    for fmt in [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(ts) = NaiveDateTime::parse_from_str(text, fmt) {
            return Some(ts);
        }
    }
    None
}

/// Loads the canonical CSV. Rows come back in file order; duplicates and
/// gaps are preserved for [`clean`].
pub fn load_csv(path: impl AsRef<Path>) -> Result<TimeSeriesFrame> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file)
}

/// Reader-based variant of [`load_csv`].
pub fn read_csv(reader: impl std::io::Read) -> Result<TimeSeriesFrame> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header: {e}")))?
        .clone();
    let mut col_of = [usize::MAX; N_FEATURES];
    let mut ts_col = usize::MAX;
    for (idx, name) in headers.iter().enumerate() {
        if name == "timestamp" {
            ts_col = idx;
        } else if let Some(pos) = COLUMN_NAMES.iter().position(|c| *c == name) {
            col_of[pos] = idx;
        } else {
            return Err(Error::Schema(format!("unknown column `{name}`")));
        }
    }
    if ts_col == usize::MAX {
        return Err(Error::Schema("missing column `timestamp`".into()));
    }
    for (pos, idx) in col_of.iter().enumerate() {
        if *idx == usize::MAX {
            return Err(Error::Schema(format!(
                "missing column `{}`",
                COLUMN_NAMES[pos]
            )));
        }
    }

    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2; // 1-based, after the header
        let record = record.map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        let ts_text = record.get(ts_col).unwrap_or("");
        let ts = parse_timestamp(ts_text).ok_or_else(|| Error::Parse {
            line,
            msg: format!("bad timestamp `{ts_text}`"),
        })?;
        timestamps.push(ts);
        for (pos, &idx) in col_of.iter().enumerate() {
            let cell = record.get(idx).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("non-numeric {} cell `{cell}`", COLUMN_NAMES[pos]),
            })?;
            values.push(v);
        }
    }
    TimeSeriesFrame::new(timestamps, values)
}

/// What [`clean`] did, for operator reports.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CleaningReport {
    pub rows_dropped_excluded_date: usize,
    pub duplicates_removed: usize,
    pub gaps_filled_day_mean: usize,
    pub gaps_filled_linear: usize,
    pub span_start: Option<NaiveDateTime>,
    pub span_end: Option<NaiveDateTime>,
    pub rows_out: usize,
}

impl CleaningReport {
    pub fn summary(&self) -> String {
        format!(
            "rows dropped (excluded date): {}\nduplicates removed: {}\ngaps filled (day-neighbor mean): {}\ngaps filled (linear): {}\ndetected span: {} .. {}\nrows out: {}\n",
            self.rows_dropped_excluded_date,
            self.duplicates_removed,
            self.gaps_filled_day_mean,
            self.gaps_filled_linear,
            self.span_start.map(|t| t.to_string()).unwrap_or_default(),
            self.span_end.map(|t| t.to_string()).unwrap_or_default(),
            self.rows_out
        )
    }
}

/// Cleans a raw frame into an uninterrupted hourly series.
///
/// Steps: drop the excluded all-zero date, drop duplicate timestamps (first
/// occurrence wins), then fill each missing hour with the arithmetic mean of
/// the values one day earlier and one day later; gaps whose day-neighbors are
/// also missing fall back to piecewise-linear interpolation. Cleaning an
/// already-clean frame is the identity.
pub fn clean(frame: &TimeSeriesFrame) -> Result<(TimeSeriesFrame, CleaningReport)> {
    let mut report = CleaningReport::default();
    let excluded =
        NaiveDate::from_ymd_opt(EXCLUDED_DATE.0, EXCLUDED_DATE.1, EXCLUDED_DATE.2).unwrap();

    // Sort and dedupe while dropping the excluded date.
    let mut order: Vec<usize> = (0..frame.len()).collect();
    order.sort_by_key(|&i| frame.timestamps[i]);
    let mut kept: Vec<usize> = Vec::with_capacity(order.len());
    for i in order {
        if frame.timestamps[i].date() == excluded {
            report.rows_dropped_excluded_date += 1;
            continue;
        }
        if let Some(&last) = kept.last() {
            if frame.timestamps[last] == frame.timestamps[i] {
                report.duplicates_removed += 1;
                continue;
            }
        }
        kept.push(i);
    }
    if kept.is_empty() {
        return Err(Error::contract("cleaning left no rows"));
    }

    let start = frame.timestamps[kept[0]];
    let end = frame.timestamps[*kept.last().unwrap()];
    let n_hours = (end - start).num_hours() as usize + 1;

    // Place known rows on the hourly grid.
    let mut grid: Vec<Option<[f64; N_FEATURES]>> = vec![None; n_hours];
    for &i in &kept {
        let slot = (frame.timestamps[i] - start).num_hours() as usize;
        let mut row = [0.0; N_FEATURES];
        row.copy_from_slice(frame.row(i));
        grid[slot] = Some(row);
    }

    // First pass: day-neighbor mean, using originally present values only.
    let present: Vec<bool> = grid.iter().map(Option::is_some).collect();
    for h in 0..n_hours {
        if present[h] {
            continue;
        }
        let before = h.checked_sub(24).filter(|b| present[*b]);
        let after = (h + 24 < n_hours && present[h + 24]).then_some(h + 24);
        if let (Some(b), Some(a)) = (before, after) {
            let (rb, ra) = (grid[b].unwrap(), grid[a].unwrap());
            let mut row = [0.0; N_FEATURES];
            for c in 0..N_FEATURES {
                row[c] = (rb[c] + ra[c]) / 2.0;
            }
            grid[h] = Some(row);
            report.gaps_filled_day_mean += 1;
        }
    }

    // Second pass: piecewise-linear interpolation over what is left.
    let mut h = 0;
    while h < n_hours {
        if grid[h].is_some() {
            h += 1;
            continue;
        }
        let run_start = h;
        while h < n_hours && grid[h].is_none() {
            h += 1;
        }
        let run_end = h; // exclusive
        let left = run_start.checked_sub(1).and_then(|i| grid[i]);
        let right = grid.get(run_end).copied().flatten();
        let (Some(lv), Some(rv)) = (left, right) else {
            let stamps: Vec<String> = (run_start..run_end)
                .map(|i| (start + HOUR * i as i32).to_string())
                .collect();
            return Err(Error::Cleaning(stamps.join(", ")));
        };
        let gap = (run_end - run_start + 1) as f64;
        for (step, slot) in (run_start..run_end).enumerate() {
            let t = (step + 1) as f64 / gap;
            let mut row = [0.0; N_FEATURES];
            for c in 0..N_FEATURES {
                row[c] = lv[c] + (rv[c] - lv[c]) * t;
            }
            grid[slot] = Some(row);
            report.gaps_filled_linear += 1;
        }
    }

    let timestamps: Vec<NaiveDateTime> = (0..n_hours).map(|i| start + HOUR * i as i32).collect();
    let mut values = Vec::with_capacity(n_hours * N_FEATURES);
    for row in grid {
        values.extend_from_slice(&row.expect("all gaps filled"));
    }

    report.span_start = Some(start);
    report.span_end = Some(end);
    report.rows_out = n_hours;
    Ok((TimeSeriesFrame { timestamps, values }, report))
}

/// Per-column min/max computed on a training partition only; stored with
/// every trained model so inference can invert predictions exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalerStats {
    pub mins: [f64; N_FEATURES],
    pub maxs: [f64; N_FEATURES],
}

impl ScalerStats {
    /// `x' = (x - min) / (max - min)` for one column.
    pub fn apply(&self, col: usize, x: f64) -> f64 {
        (x - self.mins[col]) / (self.maxs[col] - self.mins[col])
    }

    pub fn invert(&self, col: usize, scaled: f64) -> f64 {
        self.mins[col] + scaled * (self.maxs[col] - self.mins[col])
    }

    /// Applies the transform to every column of a frame.
    pub fn scale_frame(&self, frame: &TimeSeriesFrame) -> TimeSeriesFrame {
        let mut values = Vec::with_capacity(frame.values.len());
        for row in frame.rows() {
            for (c, &v) in row.iter().enumerate() {
                values.push(self.apply(c, v));
            }
        }
        TimeSeriesFrame {
            timestamps: frame.timestamps.clone(),
            values,
        }
    }
}

/// Min/max over `rows` of the frame (typically the training partition).
pub fn fit_scaler(frame: &TimeSeriesFrame, rows: Range<usize>) -> Result<ScalerStats> {
    if rows.is_empty() || rows.end > frame.len() {
        return Err(Error::contract(format!(
            "scaler range {rows:?} invalid for {} rows",
            frame.len()
        )));
    }
    fit_scaler_rows(frame, rows)
}

/// Min/max over an arbitrary row subset; used by purged folds whose training
/// rows are not contiguous.
pub fn fit_scaler_indices(frame: &TimeSeriesFrame, rows: impl Iterator<Item = usize>) -> Result<ScalerStats> {
    let mut mins = [f64::INFINITY; N_FEATURES];
    let mut maxs = [f64::NEG_INFINITY; N_FEATURES];
    let mut any = false;
    for r in rows {
        any = true;
        let row = frame.row(r);
        for c in 0..N_FEATURES {
            mins[c] = mins[c].min(row[c]);
            maxs[c] = maxs[c].max(row[c]);
        }
    }
    if !any {
        return Err(Error::contract("scaler fitted on empty row set"));
    }
    for c in 0..N_FEATURES {
        if maxs[c] <= mins[c] {
            return Err(Error::Scaling(format!(
                "column {} is constant over the training partition",
                COLUMN_NAMES[c]
            )));
        }
    }
    Ok(ScalerStats { mins, maxs })
}

fn fit_scaler_rows(frame: &TimeSeriesFrame, rows: Range<usize>) -> Result<ScalerStats> {
    fit_scaler_indices(frame, rows)
}

/// Supervised samples cut from a (scaled) series by a sliding window.
#[derive(Debug, Clone)]
pub struct WindowedDataset {
    /// `[n_samples, window, N_FEATURES]`, row-major.
    inputs: Vec<f64>,
    /// `[n_samples, horizon]` power targets.
    targets: Vec<f64>,
    pub n_samples: usize,
    pub window: usize,
    pub horizon: usize,
    pub stride: usize,
}

impl WindowedDataset {
    pub fn input(&self, i: usize) -> &[f64] {
        let len = self.window * N_FEATURES;
        &self.inputs[i * len..(i + 1) * len]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.horizon..(i + 1) * self.horizon]
    }

    /// All targets, row-major `[n_samples * horizon]`.
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Restriction to a sample subset, preserving order.
    pub fn select(&self, indices: &[usize]) -> WindowedDataset {
        let mut inputs = Vec::with_capacity(indices.len() * self.window * N_FEATURES);
        let mut targets = Vec::with_capacity(indices.len() * self.horizon);
        for &i in indices {
            inputs.extend_from_slice(self.input(i));
            targets.extend_from_slice(self.target(i));
        }
        WindowedDataset {
            inputs,
            targets,
            n_samples: indices.len(),
            window: self.window,
            horizon: self.horizon,
            stride: self.stride,
        }
    }
}

/// Number of sliding-window samples for a series of length `t`.
pub fn window_count(t: usize, w: usize, h: usize, s: usize) -> Option<usize> {
    if t < w + h || s == 0 {
        return None;
    }
    Some((t - w - h) / s + 1)
}

/// Cuts supervised samples: sample `i` reads rows `[i*s, i*s + w)` as input
/// (all columns) and the power column of rows `[i*s + w, i*s + w + h)` as
/// target.
pub fn window(frame: &TimeSeriesFrame, w: usize, h: usize, s: usize) -> Result<WindowedDataset> {
    let t = frame.len();
    let n = window_count(t, w, h, s).ok_or_else(|| {
        Error::contract(format!(
            "series of {t} rows cannot produce windows with w={w}, h={h}, s={s}"
        ))
    })?;
    let mut inputs = Vec::with_capacity(n * w * N_FEATURES);
    let mut targets = Vec::with_capacity(n * h);
    for i in 0..n {
        let base = i * s;
        for r in base..base + w {
            inputs.extend_from_slice(frame.row(r));
        }
        for r in base + w..base + w + h {
            targets.push(frame.value(r, POWER_COL));
        }
    }
    Ok(WindowedDataset {
        inputs,
        targets,
        n_samples: n,
        window: w,
        horizon: h,
        stride: s,
    })
}

/// Purged k-fold layout over sample indices: contiguous test blocks with a
/// buffer of excluded samples on each side of every block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_samples: usize,
    pub k: usize,
    pub buffer: usize,
    bounds: Vec<(usize, usize)>,
}

impl FoldPlan {
    pub fn test_range(&self, fold: usize) -> Range<usize> {
        let (s, e) = self.bounds[fold];
        s..e
    }

    /// All samples outside the test block and its two-sided buffer.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let (s, e) = self.bounds[fold];
        let lo = s.saturating_sub(self.buffer);
        let hi = (e + self.buffer).min(self.n_samples);
        (0..self.n_samples).filter(|i| *i < lo || *i >= hi).collect()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.test_range(fold).collect()
    }

    /// Audit document: one line per fold with test and excluded ranges.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,test_start,test_end,excluded_start,excluded_end\n");
        for (f, (s, e)) in self.bounds.iter().enumerate() {
            let lo = s.saturating_sub(self.buffer);
            let hi = (e + self.buffer).min(self.n_samples);
            out.push_str(&format!("{f},{s},{e},{lo},{hi}\n"));
        }
        out
    }
}

/// Plans `k` contiguous test blocks of roughly `n/k` samples each.
pub fn kfold_plan(n_samples: usize, k: usize, buffer: usize) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::contract(format!(
            "k-fold needs k >= 2 to hold out structure, got {k}"
        )));
    }
    if n_samples <= k * (2 * buffer + 1) {
        return Err(Error::contract(format!(
            "{n_samples} samples are too few for k={k} with buffer {buffer}"
        )));
    }
    let bounds: Vec<(usize, usize)> = (0..k)
        .map(|f| (f * n_samples / k, (f + 1) * n_samples / k))
        .collect();
    Ok(FoldPlan {
        n_samples,
        k,
        buffer,
        bounds,
    })
}

/// Strict time-ordered split at a timestamp: rows strictly before `boundary`
/// train, the rest test.
pub fn chronological_split(
    frame: &TimeSeriesFrame,
    boundary: NaiveDateTime,
) -> Result<(TimeSeriesFrame, TimeSeriesFrame)> {
    let split = frame.timestamps.partition_point(|t| *t < boundary);
    if split == 0 || split == frame.len() {
        return Err(Error::contract(format!(
            "boundary {boundary} outside the series span"
        )));
    }
    Ok((frame.slice_rows(0..split), frame.slice_rows(split..frame.len())))
}

/// Deterministic pseudo-PV series: clipped sinusoidal diurnal irradiance
/// under seasonal modulation and a slowly varying per-day cloud factor, with
/// power proportional to irradiance minus a temperature-dependent
/// attenuation. Power is exactly zero at night.
pub fn synth_generate(days: usize, seed: u64) -> Result<TimeSeriesFrame> {
    if days < 2 {
        return Err(Error::contract(format!(
            "synthetic series needs at least 2 days, got {days}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2020, 1, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap();

    // Per-day cloud factor: AR(1) walk clamped to [0.15, 1].
    let mut cloud = Vec::with_capacity(days);
    let mut c: f64 = 0.7;
    for _ in 0..days {
        let shock: f64 = rng.gen_range(-1.0..1.0);
        c = (0.55 + 0.8 * (c - 0.55) + 0.22 * shock).clamp(0.15, 1.0);
        cloud.push(c);
    }

    let n = days * 24;
    let mut timestamps = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n * N_FEATURES);
    for t in 0..n {
        let ts = start + HOUR * t as i32;
        let day = t / 24;
        let hour = (t % 24) as f64;
        let season = 0.8 + 0.2 * (2.0 * std::f64::consts::PI * day as f64 / 365.0).sin();

        // Daylight between 06:00 and 18:00.
        let diurnal = if (6.0..=18.0).contains(&hour) {
            (std::f64::consts::PI * (hour - 6.0) / 12.0).sin().max(0.0)
        } else {
            0.0
        };

        let wiggle: f64 = 1.0 + 0.05 * rng.gen_range(-1.0..1.0);
        let i3 = 950.0 * season * cloud[day] * diurnal * wiggle;
        let i15 = i3 * (0.95 + 0.04 * rng.gen_range(-1.0..1.0_f64));
        let ta = 12.0
            + 9.0 * season
            + 5.0 * (2.0 * std::f64::consts::PI * (hour - 14.0) / 24.0).cos()
            + 0.8 * rng.gen_range(-1.0..1.0_f64);
        let tm = ta + 0.028 * i3 + 0.4 * rng.gen_range(-1.0..1.0_f64);
        let p = if diurnal > 0.0 {
            (0.85 * i3 * (1.0 - 0.004 * (tm - 25.0))).max(0.0)
        } else {
            0.0
        };

        timestamps.push(ts);
        values.extend_from_slice(&[ta, tm, i3, i15, p]);
    }
    TimeSeriesFrame::new(timestamps, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Timelike;

    fn ts(text: &str) -> NaiveDateTime {
        parse_timestamp(text).unwrap()
    }

    fn frame_from(rows: &[(&str, [f64; 5])]) -> TimeSeriesFrame {
        let timestamps = rows.iter().map(|(t, _)| ts(t)).collect();
        let values = rows.iter().flat_map(|(_, v)| v.iter().copied()).collect();
        TimeSeriesFrame::new(timestamps, values).unwrap()
    }

    #[test]
    fn read_csv_well_formed() {
        let text = "timestamp,Ta,Tm,I3,I15,P\n\
                    2012-06-01T00:00:00,10,11,0,0,0\n\
                    2012-06-01T01:00:00,10.5,11.5,0,0,0\n\
                    2012-06-01T02:00:00,11,12,0,0,0\n";
        let frame = read_csv(text.as_bytes()).unwrap();
        assert_eq!(frame.len(), 3);
        assert_eq!(frame.value(1, 0), 10.5);
    }

    #[test]
    fn read_csv_reports_bad_cell_line() {
        let text = "timestamp,Ta,Tm,I3,I15,P\n\
                    2012-06-01T00:00:00,10,11,0,0,0\n\
                    2012-06-01T01:00:00,10,11,0,0,oops\n";
        match read_csv(text.as_bytes()) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("P"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn read_csv_rejects_missing_and_unknown_columns() {
        let missing = "timestamp,Ta,Tm,I3,P\n2012-01-01T00:00:00,1,2,3,4\n";
        assert!(matches!(read_csv(missing.as_bytes()), Err(Error::Schema(_))));
        let unknown = "timestamp,Ta,Tm,I3,I15,P,extra\n2012-01-01T00:00:00,1,2,3,4,5,6\n";
        assert!(matches!(read_csv(unknown.as_bytes()), Err(Error::Schema(_))));
    }

    #[test]
    fn clean_fills_gap_with_day_neighbor_mean() {
        // 3 full days with hour 13:00 of the middle day missing.
        let mut rows = Vec::new();
        for day in 9..12 {
            for hour in 0..24 {
                if day == 10 && hour == 13 {
                    continue;
                }
                let stamp = format!("2012-06-{day:02}T{hour:02}:00:00");
                let v = if hour == 13 {
                    if day == 9 {
                        4.0
                    } else {
                        6.0
                    }
                } else {
                    1.0
                };
                rows.push((stamp, [v; 5]));
            }
        }
        let refs: Vec<(&str, [f64; 5])> = rows.iter().map(|(s, v)| (s.as_str(), *v)).collect();
        let frame = frame_from(&refs);
        let (cleaned, report) = clean(&frame).unwrap();
        assert_eq!(report.gaps_filled_day_mean, 1);
        assert_eq!(report.gaps_filled_linear, 0);
        let idx = cleaned
            .timestamps()
            .iter()
            .position(|t| *t == ts("2012-06-10T13:00:00"))
            .unwrap();
        assert_eq!(cleaned.value(idx, POWER_COL), 5.0);
    }

    #[test]
    fn clean_drops_excluded_date() {
        let frame = frame_from(&[
            ("2013-12-30T22:00:00", [1.0; 5]),
            ("2013-12-30T23:00:00", [1.0; 5]),
            ("2013-12-31T00:00:00", [0.0; 5]),
            ("2013-12-31T01:00:00", [0.0; 5]),
        ]);
        let (cleaned, report) = clean(&frame).unwrap();
        assert_eq!(report.rows_dropped_excluded_date, 2);
        assert_eq!(cleaned.len(), 2);
        assert!(cleaned
            .timestamps()
            .iter()
            .all(|t| t.date() != NaiveDate::from_ymd_opt(2013, 12, 31).unwrap()));
    }

    #[test]
    fn clean_is_idempotent() {
        let frame = frame_from(&[
            ("2012-06-01T00:00:00", [1.0, 2.0, 3.0, 4.0, 5.0]),
            ("2012-06-01T01:00:00", [1.5, 2.5, 3.5, 4.5, 5.5]),
            ("2012-06-01T02:00:00", [2.0, 3.0, 4.0, 5.0, 6.0]),
        ]);
        let (once, _) = clean(&frame).unwrap();
        let (twice, report) = clean(&once).unwrap();
        assert_eq!(once, twice);
        assert_eq!(report.gaps_filled_day_mean + report.gaps_filled_linear, 0);
    }

    #[test]
    fn clean_interior_gap_falls_back_to_linear() {
        // Two hours only, with one missing between them: no day neighbors.
        let frame = frame_from(&[
            ("2012-06-01T00:00:00", [2.0; 5]),
            ("2012-06-01T02:00:00", [4.0; 5]),
        ]);
        let (cleaned, report) = clean(&frame).unwrap();
        assert_eq!(report.gaps_filled_linear, 1);
        assert_eq!(cleaned.len(), 3);
        assert_eq!(cleaned.value(1, 0), 3.0);
    }

    #[test]
    fn scaler_formula_and_round_trip() {
        let frame = frame_from(&[
            ("2012-06-01T00:00:00", [2.0; 5]),
            ("2012-06-01T01:00:00", [10.0; 5]),
        ]);
        let stats = fit_scaler(&frame, 0..2).unwrap();
        assert_eq!(stats.apply(0, 6.0), 0.5);
        for x in [2.0, 3.7, 10.0, 12.0] {
            assert!((stats.invert(0, stats.apply(0, x)) - x).abs() < 1e-12);
        }
        // A test value above the training max scales past 1, unclipped.
        assert!(stats.apply(0, 12.0) > 1.0);
    }

    #[test]
    fn scaler_rejects_constant_column() {
        let frame = frame_from(&[
            ("2012-06-01T00:00:00", [1.0, 2.0, 3.0, 4.0, 7.0]),
            ("2012-06-01T01:00:00", [2.0, 3.0, 4.0, 5.0, 7.0]),
        ]);
        assert!(matches!(fit_scaler(&frame, 0..2), Err(Error::Scaling(_))));
    }

    #[test]
    fn window_counts() {
        let days_needed = 5; // 120 hours
        let frame = synth_generate(days_needed, 1).unwrap();
        let ds = window(&frame.slice_rows(0..100), 24, 1, 1).unwrap();
        assert_eq!(ds.n_samples, 76);
        let ds = window(&frame.slice_rows(0..25), 24, 1, 1).unwrap();
        assert_eq!(ds.n_samples, 1);
        assert!(window(&frame.slice_rows(0..24), 24, 1, 1).is_err());
    }

    #[test]
    fn window_sample_layout() {
        let frame = frame_from(&[
            ("2012-06-01T00:00:00", [1.0, 1.1, 1.2, 1.3, 1.4]),
            ("2012-06-01T01:00:00", [2.0, 2.1, 2.2, 2.3, 2.4]),
            ("2012-06-01T02:00:00", [3.0, 3.1, 3.2, 3.3, 3.4]),
        ]);
        let ds = window(&frame, 2, 1, 1).unwrap();
        assert_eq!(ds.n_samples, 1);
        assert_eq!(ds.input(0), &[1.0, 1.1, 1.2, 1.3, 1.4, 2.0, 2.1, 2.2, 2.3, 2.4]);
        assert_eq!(ds.target(0), &[3.4]);
    }

    #[test]
    fn kfold_geometry() {
        let plan = kfold_plan(1000, 5, 24).unwrap();
        let mut covered = vec![false; 1000];
        for f in 0..5 {
            let test = plan.test_range(f);
            assert_eq!(test.len(), 200);
            for i in test.clone() {
                assert!(!covered[i], "test blocks overlap at {i}");
                covered[i] = true;
            }
            let train = plan.train_indices(f);
            let expect = if f == 0 || f == 4 { 776 } else { 752 };
            assert_eq!(train.len(), expect, "fold {f}");
            for &i in &train {
                assert!(
                    i + 24 < test.start || i >= test.end + 24,
                    "train index {i} inside buffer of {test:?}"
                );
            }
        }
        assert!(covered.iter().all(|c| *c), "test blocks must cover all samples");
    }

    #[test]
    fn kfold_rejects_degenerate() {
        assert!(kfold_plan(1000, 1, 24).is_err());
        assert!(kfold_plan(100, 5, 24).is_err());
    }

    #[test]
    fn chronological_split_ordering() {
        let frame = synth_generate(3, 9).unwrap();
        let boundary = frame.timestamps()[48];
        let (train, test) = chronological_split(&frame, boundary).unwrap();
        assert_eq!(train.len(), 48);
        assert_eq!(test.len(), 24);
        assert!(train.timestamps().last().unwrap() < test.timestamps().first().unwrap());
        assert!(chronological_split(&frame, frame.timestamps()[0]).is_err());
    }

    #[test]
    fn synth_is_deterministic_and_dark_at_night() {
        let a = synth_generate(10, 77).unwrap();
        let b = synth_generate(10, 77).unwrap();
        assert_eq!(a, b);
        for (ts, row) in a.timestamps().iter().zip(a.rows()) {
            let hour = ts.time().hour();
            if !(6..=18).contains(&hour) {
                assert_eq!(row[POWER_COL], 0.0, "night power must be exactly zero");
            }
        }
        let c = synth_generate(10, 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synth_power_tracks_irradiance() {
        let frame = synth_generate(30, 5).unwrap();
        let n = frame.len() as f64;
        let mean = |col: usize| (0..frame.len()).map(|r| frame.value(r, col)).sum::<f64>() / n;
        let (mp, mi) = (mean(POWER_COL), mean(2));
        let mut cov = 0.0;
        let mut vp = 0.0;
        let mut vi = 0.0;
        for r in 0..frame.len() {
            let dp = frame.value(r, POWER_COL) - mp;
            let di = frame.value(r, 2) - mi;
            cov += dp * di;
            vp += dp * dp;
            vi += di * di;
        }
        let corr = cov / (vp.sqrt() * vi.sqrt());
        assert!(corr > 0.9, "corr(P, I3) = {corr}");
    }

    #[test]
    fn synth_rejects_too_short() {
        assert!(synth_generate(1, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let frame = synth_generate(2, 3).unwrap();
        let mut buf = Vec::new();
        frame.write_csv(&mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(frame.len(), back.len());
        for r in 0..frame.len() {
            for c in 0..N_FEATURES {
                assert!((frame.value(r, c) - back.value(r, c)).abs() < 1e-9);
            }
        }
    }
}
