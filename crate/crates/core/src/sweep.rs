//! Config-matrix driver: trains and evaluates one model per
//! `d_common × loss × motion encoder` cell.

use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::eval::{render_table, MetricsReport, RelevanceMatrix};
use crate::motion_encoder::MotionVariant;
use crate::pipeline::{evaluate_split, training_pairs, TextInputs};
use crate::space::{fit, LossKind, TrainState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub d_common: Vec<usize>,
    pub losses: Vec<LossKind>,
    pub encoders: Vec<MotionVariant>,
}

impl SweepGrid {
    pub fn cells(&self) -> Vec<(usize, LossKind, MotionVariant)> {
        let mut out = Vec::new();
        for &e in &self.encoders {
            for &l in &self.losses {
                for &d in &self.d_common {
                    out.push((d, l, e));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub d_common: usize,
    pub loss: LossKind,
    pub encoder: MotionVariant,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub report: MetricsReport,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
}

fn loss_name(l: LossKind) -> &'static str {
    match l {
        LossKind::Triplet => "triplet",
        LossKind::Infonce => "infonce",
    }
}

fn encoder_name(e: MotionVariant) -> &'static str {
    match e {
        MotionVariant::Bigru => "bigru",
        MotionVariant::UpperLowerGru => "upper-lower-gru",
        MotionVariant::Mot => "mot",
    }
}

impl SweepResult {
    fn rows(&self) -> Vec<(Vec<String>, &MetricsReport)> {
        self.cells
            .iter()
            .map(|c| {
                (
                    vec![
                        encoder_name(c.encoder).to_string(),
                        loss_name(c.loss).to_string(),
                        c.d_common.to_string(),
                    ],
                    &c.report,
                )
            })
            .collect()
    }

    /// Delimiter-separated table with a header row, one line per cell.
    pub fn to_delimited(&self, sep: char) -> String {
        let rows = self.rows();
        let Some((_, first)) = rows.first() else {
            return String::new();
        };
        let mut header = vec!["encoder".to_string(), "loss".into(), "d_common".into()];
        header.extend(first.table_header());
        header.push("final_loss".into());
        let mut out = header.join(&sep.to_string());
        out.push('\n');
        for ((labels, report), cell) in rows.iter().zip(&self.cells) {
            let mut line = labels.clone();
            line.extend(report.recall.iter().map(|r| r.percent.to_string()));
            line.push(report.mean_rank.to_string());
            line.push(report.median_rank.to_string());
            for n in &report.ndcg {
                line.push(n.at_10.to_string());
                line.push(n.full.to_string());
            }
            line.push(cell.final_loss.to_string());
            out.push_str(&line.join(&sep.to_string()));
            out.push('\n');
        }
        out
    }

    pub fn to_table(&self) -> String {
        render_table(&["encoder", "loss", "d_common"], &self.rows())
    }
}

/// Trains every cell on `train` and evaluates on `eval`. `on_cell` sees
/// each finished cell.
pub fn run_sweep(
    base: &TrainConfig,
    grid: &SweepGrid,
    dataset: &Dataset,
    inputs: &TextInputs,
    eval: Split,
    relevance: &[RelevanceMatrix],
    mut on_cell: impl FnMut(&SweepCell),
) -> Result<SweepResult> {
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(Error::Invalid("empty sweep grid".into()));
    }
    let mut result = SweepResult::default();
    for (d_common, loss, encoder) in cells {
        let mut cfg = base.clone();
        cfg.d_common = d_common;
        cfg.loss = loss;
        cfg.motion.variant = encoder;
        let model = cfg.init_model(dataset, inputs)?;
        let data = training_pairs(&model, dataset, Split::Train, inputs)?;
        let mut state = TrainState::new(model, cfg.adam, cfg.seed);
        let log = fit(&mut state, &data, cfg.schedule(data.len()))?;
        let report = evaluate_split(&state.model, dataset, eval, inputs, relevance, true)?;
        let cell = SweepCell {
            d_common,
            loss,
            encoder,
            initial_loss: log.first().unwrap_or(f64::NAN),
            final_loss: log.losses.last().copied().unwrap_or(f64::NAN),
            report,
        };
        on_cell(&cell);
        result.cells.push(cell);
    }
    Ok(result)
}
