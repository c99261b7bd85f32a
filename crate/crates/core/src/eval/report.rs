use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Intra,
    Inter,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::Intra => "intra",
            EvalMode::Inter => "inter",
        }
    }

    fn title(self) -> &'static str {
        match self {
            EvalMode::Intra => "Intra-session classification accuracy",
            EvalMode::Inter => "Inter-session classification accuracy",
        }
    }
}

impl std::str::FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "intra" => Ok(Self::Intra),
            "inter" => Ok(Self::Inter),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub trial_acc: f64,
    pub window_acc: f64,
    pub n_trials: usize,
}

/// One subject's fold results under one protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub subject: String,
    pub mode: EvalMode,
    pub folds: Vec<FoldSummary>,
}

/// Arithmetic mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl ReportRow {
    pub fn trial_accuracies(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.trial_acc).collect()
    }

    /// Mean ± population std of fold trial accuracies.
    pub fn mean_std(&self) -> (f64, f64) {
        mean_std(&self.trial_accuracies())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn modes(&self) -> Vec<EvalMode> {
        let mut modes = Vec::new();
        for r in &self.rows {
            if !modes.contains(&r.mode) {
                modes.push(r.mode);
            }
        }
        modes
    }

    /// Mean ± population std of per-subject means for `mode`.
    pub fn grand_mean_std(&self, mode: EvalMode) -> Option<(f64, f64)> {
        let means: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.mode == mode && !r.folds.is_empty())
            .map(|r| r.mean_std().0)
            .collect();
        (!means.is_empty()).then(|| mean_std(&means))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
}

pub const REPORT_CSV_HEADER: &str = "subject,mode,fold,trial_acc,window_acc,n_trials";

fn pct(mean: f64, std: f64) -> String {
    format!("{:.2}% (± {:.2})", 100.0 * mean, 100.0 * std)
}

pub fn render_report(report: &Report, format: ReportFormat) -> Result<String, EvalError> {
    if report.rows.is_empty() {
        return Err(EvalError::EmptyReport);
    }
    if let Some(r) = report.rows.iter().find(|r| r.folds.is_empty()) {
        return Err(EvalError::EmptyFolds(r.subject.clone()));
    }
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(REPORT_CSV_HEADER);
            out.push('\n');
            for r in &report.rows {
                for f in &r.folds {
                    writeln!(
                        out,
                        "{},{},{},{:.6},{:.6},{}",
                        r.subject,
                        r.mode.as_str(),
                        f.fold,
                        f.trial_acc,
                        f.window_acc,
                        f.n_trials
                    )
                    .expect("write to String");
                }
            }
        }
        ReportFormat::Text => {
            for (k, mode) in report.modes().into_iter().enumerate() {
                if k > 0 {
                    out.push('\n');
                }
                let rows: Vec<&ReportRow> = report.rows.iter().filter(|r| r.mode == mode).collect();
                let width = rows.iter().map(|r| r.subject.len()).max().unwrap_or(0).max(8);
                writeln!(out, "{} (trial level)", mode.title()).expect("write to String");
                writeln!(out, "mean over folds (± population std), Avg. over subjects")
                    .expect("write to String");
                writeln!(out, "{:<width$}  Proposed Method", "Subject").expect("write to String");
                for r in &rows {
                    let (m, s) = r.mean_std();
                    writeln!(out, "{:<width$}  {}", r.subject, pct(m, s)).expect("write to String");
                }
                let (m, s) = report.grand_mean_std(mode).expect("rows present");
                writeln!(out, "{:<width$}  {}", "Avg.", pct(m, s)).expect("write to String");
            }
        }
    }
    Ok(out)
}

/// Reads rows written by [`render_report`] in CSV form; rows of the same
/// subject and mode are merged in file order.
pub fn parse_report_csv(text: &str) -> Result<Report, EvalError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| EvalError::ReportFormat(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>().join(",") != REPORT_CSV_HEADER {
        return Err(EvalError::ReportFormat(format!("expected header {REPORT_CSV_HEADER}")));
    }
    let mut report = Report::default();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| EvalError::ReportFormat(e.to_string()))?;
        let bad = |what: &str| EvalError::ReportFormat(format!("row {}: bad {what}", line + 1));
        let subject = rec.get(0).ok_or_else(|| bad("subject"))?.to_string();
        let mode: EvalMode = rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("mode"))?;
        let fold = FoldSummary {
            fold: rec.get(2).and_then(|s| s.parse().ok()).ok_or_else(|| bad("fold"))?,
            trial_acc: rec.get(3).and_then(|s| s.parse().ok()).ok_or_else(|| bad("trial_acc"))?,
            window_acc: rec.get(4).and_then(|s| s.parse().ok()).ok_or_else(|| bad("window_acc"))?,
            n_trials: rec.get(5).and_then(|s| s.parse().ok()).ok_or_else(|| bad("n_trials"))?,
        };
        match report.rows.iter_mut().find(|r| r.subject == subject && r.mode == mode) {
            Some(row) => row.folds.push(fold),
            None => report.rows.push(ReportRow { subject, mode, folds: vec![fold] }),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(subject: &str, accs: &[f64]) -> ReportRow {
        ReportRow {
            subject: subject.into(),
            mode: EvalMode::Intra,
            folds: accs
                .iter()
                .enumerate()
                .map(|(fold, &a)| FoldSummary { fold, trial_acc: a, window_acc: a, n_trials: 30 })
                .collect(),
        }
    }

    #[test]
    fn population_std_in_text() {
        let report = Report { rows: vec![row("Sub 1", &[0.60, 0.70, 0.80, 0.60, 0.70])] };
        let text = render_report(&report, ReportFormat::Text).unwrap();
        assert!(text.contains("Sub 1     68.00% (± 7.48)"), "{text}");
    }

    #[test]
    fn average_row() {
        let report = Report { rows: vec![row("Sub 1", &[0.6]), row("Sub 2", &[0.7])] };
        let (m, _) = report.grand_mean_std(EvalMode::Intra).unwrap();
        assert!((m - 0.65).abs() < 1e-12);
        let text = render_report(&report, ReportFormat::Text).unwrap();
        assert!(text.lines().last().unwrap().starts_with("Avg."));
        assert!(text.contains("65.00% (± 5.00)"));
    }

    #[test]
    fn empty_inputs_are_errors() {
        assert!(matches!(render_report(&Report::default(), ReportFormat::Text), Err(EvalError::EmptyReport)));
        let r = Report { rows: vec![row("s", &[])] };
        assert!(matches!(render_report(&r, ReportFormat::Csv), Err(EvalError::EmptyFolds(_))));
    }

    #[test]
    fn csv_round_trip() {
        let report = Report { rows: vec![row("a", &[0.5, 0.75]), row("b", &[1.0])] };
        let csv = render_report(&report, ReportFormat::Csv).unwrap();
        assert!(csv.starts_with("subject,mode,fold,trial_acc,window_acc,n_trials\na,intra,0,0.500000"));
        assert_eq!(parse_report_csv(&csv).unwrap(), report);
    }
}
