use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::{bleu, exact_match, rouge_l};
use crate::clock::Clock;
use crate::corpus::QaItem;
use crate::generation::{answer_query, AnswerStyle, AnswerTemplate};
use crate::hig::HierarchicalIndexGraph;
use crate::providers::{CallCounter, CompletionProvider, EmbeddingProvider};
use crate::retrieval::{Accounting, RetrievalParams};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no QA items to evaluate")]
    NoItems,
    #[error("report failed its self-consistency check: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub id: String,
    pub prediction: String,
    pub em: f64,
    pub bleu: f64,
    pub rouge_l: f64,
    pub wall_ms: f64,
    /// The item has no gold answers; its metrics are 0.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub no_gold: bool,
    /// Provider failure; the item is excluded from the aggregates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ItemRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// Items that contributed to the means.
    pub count: usize,
    pub em: f64,
    pub bleu: f64,
    pub rouge_l: f64,
    pub mean_wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub params: RetrievalParams,
    pub style: AnswerStyle,
    pub items: Vec<ItemRecord>,
    pub aggregates: Aggregates,
    pub failed_count: usize,
    pub accounting: Accounting,
}

fn aggregate(items: &[ItemRecord]) -> Aggregates {
    let ok: Vec<&ItemRecord> = items.iter().filter(|i| !i.failed()).collect();
    if ok.is_empty() {
        return Aggregates::default();
    }
    let n = ok.len() as f64;
    let mean = |f: fn(&ItemRecord) -> f64| ok.iter().map(|i| f(i)).sum::<f64>() / n;
    Aggregates {
        count: ok.len(),
        em: mean(|i| i.em),
        bleu: mean(|i| i.bleu),
        rouge_l: mean(|i| i.rouge_l),
        mean_wall_ms: mean(|i| i.wall_ms),
    }
}

impl EvalReport {
    /// Recomputes the aggregates and failure count from the item records
    /// and checks every metric lies in `[0, 1]`.
    pub fn verify(&self) -> Result<(), EvalError> {
        for it in &self.items {
            for (name, v) in [("em", it.em), ("bleu", it.bleu), ("rouge_l", it.rouge_l)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(EvalError::Inconsistent(format!("{name} of item {} is {v}", it.id)));
                }
            }
        }
        let failed = self.items.iter().filter(|i| i.failed()).count();
        if failed != self.failed_count {
            return Err(EvalError::Inconsistent(format!(
                "failed_count {} but {failed} failed items",
                self.failed_count
            )));
        }
        let again = aggregate(&self.items);
        let same = again.count == self.aggregates.count
            && [
                (again.em, self.aggregates.em),
                (again.bleu, self.aggregates.bleu),
                (again.rouge_l, self.aggregates.rouge_l),
                (again.mean_wall_ms, self.aggregates.mean_wall_ms),
            ]
            .iter()
            .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0));
        if !same {
            return Err(EvalError::Inconsistent(format!(
                "aggregates {:?} do not match recomputed {again:?}",
                self.aggregates
            )));
        }
        Ok(())
    }

    /// Aligned plain-text table: one row per item, then the means.
    pub fn table(&self) -> String {
        let id_w = self
            .items
            .iter()
            .map(|i| i.id.chars().count())
            .chain(["id".len(), "mean".len()])
            .max()
            .unwrap_or(4);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<id_w$}  {:>6}  {:>6}  {:>7}  {:>10}  status",
            "id", "em", "bleu", "rouge_l", "wall_ms"
        );
        for it in &self.items {
            let status = match (&it.error, it.no_gold) {
                (Some(e), _) => format!("failed: {e}"),
                (None, true) => "no gold".to_string(),
                (None, false) => "ok".to_string(),
            };
            let _ = writeln!(
                out,
                "{:<id_w$}  {:>6.4}  {:>6.4}  {:>7.4}  {:>10.3}  {status}",
                it.id, it.em, it.bleu, it.rouge_l, it.wall_ms
            );
        }
        let a = &self.aggregates;
        let _ = writeln!(
            out,
            "{:<id_w$}  {:>6.4}  {:>6.4}  {:>7.4}  {:>10.3}  {} ok, {} failed",
            "mean", a.em, a.bleu, a.rouge_l, a.mean_wall_ms, a.count, self.failed_count
        );
        let acc = &self.accounting;
        let _ = writeln!(
            out,
            "calls: {} embedding, {} completion",
            acc.embed_calls, acc.completion_calls
        );
        out
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkOptions {
    pub style: AnswerStyle,
    pub template: AnswerTemplate,
    /// Items evaluated at once. `None` uses the smaller of the two
    /// providers' in-flight limits.
    pub workers: Option<usize>,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            style: AnswerStyle::ShortForm,
            template: AnswerTemplate::default(),
            workers: None,
        }
    }
}

/// Retrieves, generates and scores every item.
///
/// An item whose retrieval or generation fails is recorded with its error
/// and left out of the aggregates. Wall time is measured per item; the
/// report's total is the sum over items.
pub fn run_benchmark(
    items: &[QaItem],
    graph: &HierarchicalIndexGraph,
    params: &RetrievalParams,
    embed: &dyn EmbeddingProvider,
    completion: &dyn CompletionProvider,
    options: &BenchmarkOptions,
    clock: &dyn Clock,
) -> Result<EvalReport, EvalError> {
    if items.is_empty() {
        return Err(EvalError::NoItems);
    }
    let embed = CallCounter::new(embed);
    let completion = CallCounter::new(completion);
    let workers = options
        .workers
        .unwrap_or_else(|| embed.max_in_flight().min(completion.max_in_flight()))
        .clamp(1, items.len());

    let evaluate = |item: &QaItem| -> ItemRecord {
        let start = clock.now();
        let outcome = answer_query(
            &item.question,
            graph,
            params,
            &embed,
            &completion,
            &options.template,
            options.style,
            clock,
        );
        match outcome {
            Ok(answered) => {
                let pred = answered.answer;
                let no_gold = item.gold_answers.is_empty();
                ItemRecord {
                    id: item.id.clone(),
                    em: exact_match(&pred, &item.gold_answers),
                    bleu: bleu(&pred, &item.gold_answers),
                    rouge_l: rouge_l(&pred, &item.gold_answers),
                    prediction: pred,
                    wall_ms: answered.context.accounting.wall_ms,
                    no_gold,
                    error: None,
                }
            }
            Err(e) => ItemRecord {
                id: item.id.clone(),
                prediction: String::new(),
                em: 0.0,
                bleu: 0.0,
                rouge_l: 0.0,
                wall_ms: crate::clock::elapsed_ms(clock, start),
                no_gold: item.gold_answers.is_empty(),
                error: Some(e.to_string()),
            },
        }
    };

    let records: Vec<ItemRecord> = if workers == 1 {
        items.iter().map(evaluate).collect()
    } else {
        let slots: Mutex<Vec<Option<ItemRecord>>> = Mutex::new(vec![None; items.len()]);
        let next = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= items.len() {
                        break;
                    }
                    let rec = evaluate(&items[i]);
                    slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(rec);
                });
            }
        });
        slots
            .into_inner()
            .unwrap_or_else(|e| e.into_inner())
            .into_iter()
            .map(|r| r.expect("every item evaluated"))
            .collect()
    };

    let report = EvalReport {
        params: *params,
        style: options.style,
        aggregates: aggregate(&records),
        failed_count: records.iter().filter(|r| r.failed()).count(),
        accounting: Accounting {
            embed_calls: embed.calls(),
            completion_calls: completion.calls(),
            wall_ms: records.iter().map(|r| r.wall_ms).sum(),
        },
        items: records,
    };
    report.verify()?;
    Ok(report)
}
