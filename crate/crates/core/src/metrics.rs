//! Correlation metrics and cross-run comparison tables.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annealer::{Objective, OptimizationReport};
use crate::eval::FinalMetrics;
use crate::thermal::ScalarField;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("samples have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("correlation is undefined for a constant sample")]
    Undefined,
    #[error("fields are not sampled on the same plane grid")]
    GridMismatch,
    #[error("cannot compare runs of different architectures (`{0}` and `{1}`)")]
    MixedArchitectures(String, String),
    #[error("no runs to compare")]
    Empty,
    #[error("comparison table: {0}")]
    Table(String),
}

/// Pearson product-moment correlation.
///
/// Uses a single pass with running co-moments. A constant sample is an
/// error, not zero.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(MetricsError::TooFewSamples(x.len()));
    }
    let (mut mx, mut my) = (0.0, 0.0);
    let (mut cxx, mut cyy, mut cxy) = (0.0, 0.0, 0.0);
    for (n, (&a, &b)) in x.iter().zip(y).enumerate() {
        let k = (n + 1) as f64;
        let (da, db) = (a - mx, b - my);
        mx += da / k;
        my += db / k;
        cxx += da * (a - mx);
        cyy += db * (b - my);
        cxy += da * (b - my);
    }
    if cxx <= 0.0 || cyy <= 0.0 {
        return Err(MetricsError::Undefined);
    }
    Ok((cxy / (cxx.sqrt() * cyy.sqrt())).clamp(-1.0, 1.0))
}

/// Temperature–stress and gradient–stress correlations on one plane.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    /// `None` when undefined (a constant field).
    pub ts: Option<f64>,
    pub gs: Option<f64>,
}

fn same_plane(a: &ScalarField, b: &ScalarField) -> bool {
    let (ga, gb) = (&a.geometry, &b.geometry);
    ga.nx == gb.nx
        && ga.ny == gb.ny
        && ga.dx == gb.dx
        && ga.dy == gb.dy
        && ga.nz() == 1
        && gb.nz() == 1
        && a.values.len() == b.values.len()
}

/// Correlations of σ_vm with T and with |∇T|, all sampled on one plane.
pub fn field_correlations(
    t: &ScalarField,
    svm: &ScalarField,
    grad: &ScalarField,
) -> Result<Correlations, MetricsError> {
    if !same_plane(t, svm) || !same_plane(grad, svm) {
        return Err(MetricsError::GridMismatch);
    }
    Ok(Correlations {
        ts: Some(pearson(&t.values, &svm.values)?),
        gs: Some(pearson(&grad.values, &svm.values)?),
    })
}

impl Correlations {
    /// Like [`field_correlations`] but leaves undefined coefficients empty.
    pub fn where_defined(
        t: &ScalarField,
        svm: &ScalarField,
        grad: &ScalarField,
    ) -> Result<Correlations, MetricsError> {
        if !same_plane(t, svm) || !same_plane(grad, svm) {
            return Err(MetricsError::GridMismatch);
        }
        Ok(Correlations {
            ts: pearson(&t.values, &svm.values).ok(),
            gs: pearson(&grad.values, &svm.values).ok(),
        })
    }
}

/// Final metrics of one optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub architecture: String,
    pub objective: Objective,
    pub seed: u64,
    pub metrics: FinalMetrics,
}

impl RunSummary {
    /// `None` when the report has no final metrics.
    pub fn from_report(r: &OptimizationReport) -> Option<RunSummary> {
        Some(RunSummary {
            architecture: r.architecture.clone(),
            objective: r.objective,
            seed: r.seed,
            metrics: r.final_metrics?,
        })
    }
}

/// Median metrics of all runs of one objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub objective: Objective,
    pub runs: usize,
    pub peak_temp: f64,
    pub peak_stress: f64,
    pub wirelength: f64,
    pub grad_mean: f64,
    pub grad_std: f64,
    pub grad_max: f64,
    pub ts_corr: Option<f64>,
    pub gs_corr: Option<f64>,
    /// Percent change against the baseline row; zero on the baseline itself.
    pub delta_temp_pct: f64,
    pub delta_stress_pct: f64,
    pub delta_wirelength_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunComparison {
    pub architecture: String,
    pub baseline: Objective,
    /// Rows in WT, WS, WST order; only objectives that have runs.
    pub rows: Vec<ComparisonRow>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn median_of(values: impl Iterator<Item = f64>) -> f64 {
    median(&mut values.collect::<Vec<_>>())
}

fn median_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| median(&mut v))
}

/// Percent change of `candidate` relative to `baseline`.
pub fn percent_delta(baseline: f64, candidate: f64) -> f64 {
    (candidate - baseline) / baseline * 100.0
}

/// Median row per objective plus percent deltas against `baseline`
/// (WT when `None`, or the first objective present if WT has no runs).
pub fn compare_runs(runs: &[RunSummary], baseline: Option<Objective>) -> Result<RunComparison, MetricsError> {
    let first = runs.first().ok_or(MetricsError::Empty)?;
    if let Some(other) = runs.iter().find(|r| r.architecture != first.architecture) {
        return Err(MetricsError::MixedArchitectures(
            first.architecture.clone(),
            other.architecture.clone(),
        ));
    }
    let mut rows = Vec::new();
    for objective in Objective::ALL {
        let group: Vec<&FinalMetrics> = runs
            .iter()
            .filter(|r| r.objective == objective)
            .map(|r| &r.metrics)
            .collect();
        if group.is_empty() {
            continue;
        }
        rows.push(ComparisonRow {
            objective,
            runs: group.len(),
            peak_temp: median_of(group.iter().map(|m| m.peak_temp)),
            peak_stress: median_of(group.iter().map(|m| m.peak_stress)),
            wirelength: median_of(group.iter().map(|m| m.wirelength)),
            grad_mean: median_of(group.iter().map(|m| m.gradient.mean)),
            grad_std: median_of(group.iter().map(|m| m.gradient.std)),
            grad_max: median_of(group.iter().map(|m| m.gradient.max)),
            ts_corr: median_defined(group.iter().map(|m| m.correlations.ts)),
            gs_corr: median_defined(group.iter().map(|m| m.correlations.gs)),
            delta_temp_pct: 0.0,
            delta_stress_pct: 0.0,
            delta_wirelength_pct: 0.0,
        });
    }
    let wanted = baseline.unwrap_or(Objective::Wt);
    let base = rows
        .iter()
        .find(|r| r.objective == wanted)
        .or(if baseline.is_none() { rows.first() } else { None })
        .ok_or_else(|| MetricsError::Table(format!("no runs for baseline objective {wanted}")))?
        .clone();
    for row in &mut rows {
        row.delta_temp_pct = percent_delta(base.peak_temp, row.peak_temp);
        row.delta_stress_pct = percent_delta(base.peak_stress, row.peak_stress);
        row.delta_wirelength_pct = percent_delta(base.wirelength, row.wirelength);
    }
    Ok(RunComparison {
        architecture: first.architecture.clone(),
        baseline: base.objective,
        rows,
    })
}

/// Flat CSV record; one per comparison row.
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    architecture: String,
    role: String,
    objective: Objective,
    runs: usize,
    peak_temp: f64,
    peak_stress: f64,
    wirelength: f64,
    grad_mean: f64,
    grad_std: f64,
    grad_max: f64,
    ts_corr: Option<f64>,
    gs_corr: Option<f64>,
    delta_temp_pct: f64,
    delta_stress_pct: f64,
    delta_wirelength_pct: f64,
}

impl CsvRow {
    fn new(architecture: &str, role: &str, r: &ComparisonRow) -> Self {
        Self {
            architecture: architecture.to_string(),
            role: role.to_string(),
            objective: r.objective,
            runs: r.runs,
            peak_temp: r.peak_temp,
            peak_stress: r.peak_stress,
            wirelength: r.wirelength,
            grad_mean: r.grad_mean,
            grad_std: r.grad_std,
            grad_max: r.grad_max,
            ts_corr: r.ts_corr,
            gs_corr: r.gs_corr,
            delta_temp_pct: r.delta_temp_pct,
            delta_stress_pct: r.delta_stress_pct,
            delta_wirelength_pct: r.delta_wirelength_pct,
        }
    }

    fn row(&self) -> ComparisonRow {
        ComparisonRow {
            objective: self.objective,
            runs: self.runs,
            peak_temp: self.peak_temp,
            peak_stress: self.peak_stress,
            wirelength: self.wirelength,
            grad_mean: self.grad_mean,
            grad_std: self.grad_std,
            grad_max: self.grad_max,
            ts_corr: self.ts_corr,
            gs_corr: self.gs_corr,
            delta_temp_pct: self.delta_temp_pct,
            delta_stress_pct: self.delta_stress_pct,
            delta_wirelength_pct: self.delta_wirelength_pct,
        }
    }
}

impl RunComparison {
    pub fn row(&self, objective: Objective) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.objective == objective)
    }

    pub fn to_csv(&self) -> Result<String, MetricsError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            let role = if row.objective == self.baseline { "baseline" } else { "candidate" };
            w.serialize(CsvRow::new(&self.architecture, role, row))
            .map_err(|e| MetricsError::Table(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| MetricsError::Table(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| MetricsError::Table(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<RunComparison, MetricsError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        let mut architecture: Option<String> = None;
        let mut baseline = None;
        for rec in r.deserialize::<CsvRow>() {
            let rec = rec.map_err(|e| MetricsError::Table(e.to_string()))?;
            if let Some(a) = &architecture {
                if *a != rec.architecture {
                    return Err(MetricsError::MixedArchitectures(a.clone(), rec.architecture));
                }
            }
            if rec.role == "baseline" {
                baseline = Some(rec.objective);
            }
            rows.push(rec.row());
            architecture = Some(rec.architecture);
        }
        Ok(RunComparison {
            architecture: architecture.ok_or(MetricsError::Empty)?,
            baseline: baseline.ok_or_else(|| MetricsError::Table("no baseline row".into()))?,
            rows,
        })
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |r| format!("{r:.3}"));
        let header = [
            "objective", "runs", "T_peak[C]", "S_peak[MPa]", "L[mm]", "grad_mean", "grad_std", "grad_max",
            "T-S", "G-S", "dT[%]", "dS[%]", "dL[%]",
        ];
        let mut cells: Vec<Vec<String>> = vec![header.iter().map(|h| h.to_string()).collect()];
        for r in &self.rows {
            cells.push(vec![
                r.objective.to_string(),
                r.runs.to_string(),
                format!("{:.2}", r.peak_temp),
                format!("{:.2}", r.peak_stress),
                format!("{:.1}", r.wirelength),
                format!("{:.3}", r.grad_mean),
                format!("{:.3}", r.grad_std),
                format!("{:.3}", r.grad_max),
                opt(r.ts_corr),
                opt(r.gs_corr),
                format!("{:+.2}", r.delta_temp_pct),
                format!("{:+.2}", r.delta_stress_pct),
                format!("{:+.2}", r.delta_wirelength_pct),
            ]);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = format!("{} (deltas vs {})\n", self.architecture, self.baseline);
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (v, w))| if c == 0 { format!("{v:<w$}") } else { format!("{v:>w$}") })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}
