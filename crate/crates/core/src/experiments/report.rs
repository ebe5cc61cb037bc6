//! Aggregates and serialization of experiment reports.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{round9, ExperimentError, ExperimentReport, InstanceRow, PAYOFF_SCALE};
use crate::game::Layer;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LayerHistogram {
    #[serde(rename = "L1")]
    pub l1: usize,
    #[serde(rename = "L2")]
    pub l2: usize,
    #[serde(rename = "L3")]
    pub l3: usize,
    pub l1_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    /// `max(|X_L|, |X_F|)`.
    pub size: usize,
    pub n: usize,
    pub median_t_exact_s: Option<f64>,
    pub median_t_approx_s: Option<f64>,
    pub mean_approx_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoSensitivity {
    pub info: String,
    pub n: usize,
    pub improvement_rate: f64,
    pub mean_welfare_delta: f64,
    pub max_abs_welfare_delta: f64,
    /// Fraction of instances whose path of play matches perfect information.
    pub same_outcome_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcurementSummary {
    pub n_honest: usize,
    pub n_opportunistic: usize,
    /// Mean procurement cost, `10 - agency payoff`.
    pub scne_mean_cost: f64,
    pub classical_mean_cost: f64,
    /// Relative cost reduction of S-CNE over classical, in percent.
    pub cost_savings_pct: f64,
    pub cost_savings_delta: f64,
    pub scne_compliance: f64,
    pub classical_compliance: f64,
    pub compliance_delta: f64,
    pub scne_cost_variance: f64,
    pub classical_cost_variance: f64,
    pub variance_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n_instances: usize,
    pub n_errors: usize,
    pub improvement_rate: f64,
    pub mean_welfare_delta: f64,
    pub max_abs_welfare_delta: f64,
    pub layer_histogram: LayerHistogram,
    pub timing_table: Vec<TimingRow>,
    pub info_structure_sensitivity: Vec<InfoSensitivity>,
    pub info_invariance_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub procurement: Option<ProcurementSummary>,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    Some(if xs.len() % 2 == 1 { xs[m] } else { 0.5 * (xs[m - 1] + xs[m]) })
}

fn rate(hits: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        round9(hits as f64 / n as f64)
    }
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl Aggregate {
    /// Recomputes every aggregate from rows; a pure fold, independent of
    /// row order.
    pub fn from_rows(rows: &[InstanceRow]) -> Self {
        let ok: Vec<&InstanceRow> = rows.iter().filter(|r| r.error.is_none()).collect();
        let deltas: Vec<f64> = ok.iter().filter_map(|r| r.welfare_delta).collect();
        let improved = ok.iter().filter(|r| r.pareto_improved == Some(true)).count();

        let mut hist = LayerHistogram::default();
        for r in &ok {
            match r.leader_layer {
                Some(Layer::L1) => hist.l1 += 1,
                Some(Layer::L2) => hist.l2 += 1,
                Some(Layer::L3) => hist.l3 += 1,
                None => {}
            }
        }
        hist.l1_fraction = rate(hist.l1, ok.len());

        let mut by_size: BTreeMap<usize, Vec<&InstanceRow>> = BTreeMap::new();
        for r in &ok {
            by_size.entry(r.nxl.max(r.nxf)).or_default().push(r);
        }
        let timing_table = by_size
            .into_iter()
            .map(|(size, rs)| {
                let errors: Vec<f64> = rs.iter().filter_map(|r| r.approx_error).collect();
                TimingRow {
                    size,
                    n: rs.len(),
                    median_t_exact_s: median(rs.iter().filter_map(|r| r.t_exact_s).collect()).map(round9),
                    median_t_approx_s: median(rs.iter().filter_map(|r| r.t_approx_s).collect()).map(round9),
                    mean_approx_error: (!errors.is_empty()).then(|| round9(mean(&errors))),
                }
            })
            .collect();

        let mut labels: Vec<String> = Vec::new();
        for r in &ok {
            for c in &r.sensitivity {
                if !labels.contains(&c.info) {
                    labels.push(c.info.clone());
                }
            }
        }
        let info_structure_sensitivity = labels
            .into_iter()
            .map(|info| {
                let cells: Vec<_> = ok.iter().flat_map(|r| r.sensitivity.iter().filter(|c| c.info == info)).collect();
                let d: Vec<f64> = cells.iter().map(|c| c.welfare_delta).collect();
                InfoSensitivity {
                    n: cells.len(),
                    improvement_rate: rate(cells.iter().filter(|c| c.pareto_improved).count(), cells.len()),
                    mean_welfare_delta: round9(mean(&d)),
                    max_abs_welfare_delta: round9(max_abs(&d)),
                    same_outcome_rate: rate(cells.iter().filter(|c| c.same_outcome_as_perfect).count(), cells.len()),
                    info,
                }
            })
            .collect();

        let invariant = ok.iter().filter(|r| r.info_invariant == Some(true)).count();
        Aggregate {
            n_instances: rows.len(),
            n_errors: rows.len() - ok.len(),
            improvement_rate: rate(improved, ok.len()),
            mean_welfare_delta: round9(mean(&deltas)),
            max_abs_welfare_delta: round9(max_abs(&deltas)),
            layer_histogram: hist,
            timing_table,
            info_structure_sensitivity,
            info_invariance_rate: rate(invariant, ok.len()),
            procurement: None,
        }
    }
}

fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    mean(&xs.iter().map(|x| (x - m) * (x - m)).collect::<Vec<_>>())
}

impl ProcurementSummary {
    pub fn from_rows(rows: &[InstanceRow]) -> Self {
        let ok: Vec<&InstanceRow> = rows.iter().filter(|r| r.error.is_none()).collect();
        let cost = |f: fn(&InstanceRow) -> Option<f64>| -> Vec<f64> {
            ok.iter().filter_map(|r| f(r)).map(|p| PAYOFF_SCALE - p).collect()
        };
        let sc = cost(|r| r.scne_leader_payoff);
        let cc = cost(|r| r.classical_leader_payoff);
        let s_comp = mean(&ok.iter().filter_map(|r| r.scne_compliance).collect::<Vec<_>>());
        let c_comp = mean(&ok.iter().filter_map(|r| r.classical_compliance).collect::<Vec<_>>());
        let (sm, cm) = (mean(&sc), mean(&cc));
        let (sv, cv) = (variance(&sc), variance(&cc));
        ProcurementSummary {
            n_honest: ok.iter().filter(|r| r.topology.ends_with("honest")).count(),
            n_opportunistic: ok.iter().filter(|r| r.topology.ends_with("opportunistic")).count(),
            scne_mean_cost: round9(sm),
            classical_mean_cost: round9(cm),
            cost_savings_pct: round9(if cm != 0.0 { 100.0 * (cm - sm) / cm } else { 0.0 }),
            cost_savings_delta: round9(cm - sm),
            scne_compliance: round9(s_comp),
            classical_compliance: round9(c_comp),
            compliance_delta: round9(s_comp - c_comp),
            scne_cost_variance: round9(sv),
            classical_cost_variance: round9(cv),
            variance_delta: round9(sv - cv),
        }
    }
}

/// Column order of the CSV report.
pub const CSV_COLUMNS: [&str; 16] = [
    "instance_id",
    "seed",
    "topology",
    "nxl",
    "nxf",
    "info",
    "payoff_dist",
    "instinct_quality",
    "scne_welfare",
    "classical_welfare",
    "welfare_delta",
    "pareto_improved",
    "leader_layer",
    "t_exact_s",
    "t_approx_s",
    "approx_error",
];

#[derive(Serialize)]
struct CsvRow<'a> {
    instance_id: usize,
    seed: u64,
    topology: &'a str,
    nxl: usize,
    nxf: usize,
    info: &'a str,
    payoff_dist: &'a str,
    instinct_quality: Option<f64>,
    scne_welfare: Option<f64>,
    classical_welfare: Option<f64>,
    welfare_delta: Option<f64>,
    pareto_improved: Option<bool>,
    leader_layer: Option<String>,
    t_exact_s: Option<f64>,
    t_approx_s: Option<f64>,
    approx_error: Option<f64>,
}

impl ExperimentReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(CsvRow {
                instance_id: r.instance_id,
                seed: r.seed,
                topology: &r.topology,
                nxl: r.nxl,
                nxf: r.nxf,
                info: &r.info,
                payoff_dist: &r.payoff_dist,
                instinct_quality: r.instinct_quality,
                scne_welfare: r.scne_welfare,
                classical_welfare: r.classical_welfare,
                welfare_delta: r.welfare_delta,
                pareto_improved: r.pareto_improved,
                leader_layer: r.leader_layer.map(|l| l.to_string()),
                t_exact_s: r.t_exact_s,
                t_approx_s: r.t_approx_s,
                approx_error: r.approx_error,
            })?;
        }
        if self.rows.is_empty() {
            w.write_record(CSV_COLUMNS)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<(), ExperimentError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn write_json_file(&self, path: &Path) -> Result<(), ExperimentError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}
