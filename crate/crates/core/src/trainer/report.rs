use crate::generator::Task;

use super::condition::ConditionSummary;
use super::grid::Sweep;

pub const REPORT_HEADER: &str = "param_value,model,task,mean_alc,min_alc,max_alc,non_learned";

/// One point of an ALC-versus-parameter panel.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param_value: usize,
    pub model: String,
    pub task: Task,
    pub mean_alc: Option<f64>,
    pub min_alc: Option<f64>,
    pub max_alc: Option<f64>,
    pub non_learned: usize,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Rows of `summaries` lying on `sweep`, ordered by model, task and value,
/// and the same rows rendered as CSV. ALC cells are empty where no trial
/// learned.
pub fn sweep_report(summaries: &[ConditionSummary], sweep: Sweep) -> (Vec<SweepRow>, String) {
    let mut rows: Vec<SweepRow> = summaries
        .iter()
        .filter_map(|s| {
            sweep.value_of(&s.params).map(|v| SweepRow {
                param_value: v,
                model: s.arch.clone(),
                task: s.task,
                mean_alc: s.mean_alc,
                min_alc: s.min_alc,
                max_alc: s.max_alc,
                non_learned: s.non_learned,
            })
        })
        .collect();
    rows.sort_by(|a, b| (&a.model, a.task, a.param_value).cmp(&(&b.model, b.task, b.param_value)));
    let mut csv = String::from(REPORT_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.param_value,
            r.model,
            r.task,
            cell(r.mean_alc),
            cell(r.min_alc),
            cell(r.max_alc),
            r.non_learned
        ));
    }
    (rows, csv)
}
