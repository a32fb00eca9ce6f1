use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::stats::{summary, Summary};
use super::AnalyticsError;
use crate::calibration::MeasuredDelays;
use crate::netsim::{DelayRecord, Stage};

/// Tolerance on |sum of stage means - total mean|, ms.
const ADDITIVITY_TOL_MS: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayRow {
    pub label: String,
    pub stages: [Summary; 6],
    pub total: Summary,
}

impl DelayRow {
    pub fn from_records(label: &str, records: &[DelayRecord]) -> Result<Self, AnalyticsError> {
        if records.is_empty() {
            return Err(AnalyticsError::Input(format!(
                "no delay records for {label:?}"
            )));
        }
        let col =
            |f: &dyn Fn(&DelayRecord) -> f64| summary(&records.iter().map(f).collect::<Vec<_>>());
        let mut stages = Vec::with_capacity(6);
        for stage in Stage::ALL {
            stages.push(col(&|r| r.stage_ms(stage))?);
        }
        Ok(Self {
            label: label.to_string(),
            stages: stages.try_into().expect("six stages"),
            total: col(&|r| r.total_ms())?,
        })
    }

    /// A row carrying only published mean/p95 pairs.
    pub fn from_measured(m: &MeasuredDelays) -> Self {
        let s = |mean: f64, p95: f64| Summary {
            mean,
            p95,
            min: f64::NAN,
            max: f64::NAN,
            count: 0,
        };
        Self {
            label: m.label.to_string(),
            stages: m.stages.map(|x| s(x.mean, x.p95)),
            total: s(m.total.mean, m.total.p95),
        }
    }

    pub fn stage_mean_sum(&self) -> f64 {
        self.stages.iter().map(|s| s.mean).sum()
    }

    pub fn additive(&self) -> bool {
        (self.stage_mean_sum() - self.total.mean).abs() < ADDITIVITY_TOL_MS
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayTable {
    pub rows: Vec<DelayRow>,
}

/// One row per labelled group of records.
pub fn delay_table<'a>(
    groups: impl IntoIterator<Item = (&'a str, &'a [DelayRecord])>,
) -> Result<DelayTable, AnalyticsError> {
    let rows = groups
        .into_iter()
        .map(|(label, recs)| DelayRow::from_records(label, recs))
        .collect::<Result<_, _>>()?;
    Ok(DelayTable { rows })
}

impl DelayTable {
    pub fn headings() -> Vec<String> {
        let mut h = vec!["scenario".to_string()];
        for stage in Stage::ALL {
            h.push(format!("{} mean", stage.heading()));
            h.push(format!("{} p95", stage.heading()));
        }
        h.push("Total mean".into());
        h.push("Total p95".into());
        h.push("additive".into());
        h
    }

    fn cells(row: &DelayRow) -> Vec<String> {
        let mut c = vec![row.label.clone()];
        for s in row.stages.iter().chain(std::iter::once(&row.total)) {
            c.push(format!("{:.3}", s.mean));
            c.push(format!("{:.3}", s.p95));
        }
        c.push(row.additive().to_string());
        c
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::headings()).expect("in-memory write");
        for row in &self.rows {
            w.write_record(Self::cells(row)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
    }

    /// Plain-text table with `mean/p95` cells.
    pub fn to_text(&self) -> String {
        let mut header = vec!["Scenario".to_string()];
        header.extend(Stage::ALL.iter().map(|s| s.heading().to_string()));
        header.push("Total".into());
        let mut lines = vec![header];
        for row in &self.rows {
            let mut l = vec![row.label.clone()];
            for s in row.stages.iter().chain(std::iter::once(&row.total)) {
                l.push(format!("{:.2}/{:.2}", s.mean, s.p95));
            }
            lines.push(l);
        }
        let widths: Vec<usize> = (0..lines[0].len())
            .map(|i| lines.iter().map(|l| l[i].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for l in &lines {
            let cells: Vec<String> = l
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| {
                    if i == 0 {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: u64, stages_us: [i64; 6]) -> DelayRecord {
        DelayRecord {
            frame_id: id,
            ti_id: None,
            render_start_us: 0,
            display_us: 0,
            size_bytes: 1,
            stages_us,
            total_us: stages_us.iter().sum(),
        }
    }

    #[test]
    fn constant_run_has_mean_equal_p95() {
        let recs: Vec<_> = (0..50)
            .map(|i| rec(i, [1000, 2000, 3000, 4000, 5000, 6000]))
            .collect();
        let t = delay_table([("c", recs.as_slice())]).unwrap();
        let row = &t.rows[0];
        for s in row.stages.iter().chain([&row.total]) {
            assert_eq!(s.mean, s.p95);
        }
        assert_eq!(row.total.mean, 21.0);
        assert!(row.additive());
    }

    #[test]
    fn column_order() {
        let h = DelayTable::headings();
        assert_eq!(h[1], "TI (UL) + Render mean");
        assert_eq!(h[12], "Render2 (Eyes) p95");
        assert_eq!(h[13], "Total mean");
        let recs = vec![rec(0, [1, 2, 3, 4, 5, 6])];
        let t = delay_table([("x", recs.as_slice())]).unwrap();
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 2);
        assert!(t.to_text().lines().nth(1).unwrap().starts_with('x'));
    }

    #[test]
    fn empty_group_rejected() {
        assert!(delay_table([("none", &[][..])]).is_err());
    }
}
