//! Best-first branch and bound over the partition enumeration tree.

mod greedy;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use ordered_float::OrderedFloat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use greedy::mondrian_greedy;

use crate::bounds::{global_theoretical_bound, BoundContext, DEFAULT_CACHE_BYTES};
use crate::constraints::{ConstraintSet, Constraints};
use crate::enumeration::children;
use crate::error::{Error, Result};
use crate::metrics::{block_cost, Metric, MetricParams};
use crate::partition::PartitionTree;
use crate::space::Space;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "alpha")]
pub enum Mode {
    Optimal,
    /// Stop refining once the incumbent is provably within this factor.
    Approx(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Priority {
    Lb,
    Cost,
    LbOverCost,
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub mode: Mode,
    pub priority: Priority,
    pub max_queue: usize,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    pub metric: Metric,
    /// Defaults to the smallest finest-cell volume.
    pub unit_volume: Option<f64>,
    pub constraints: ConstraintSet,
    pub seed: Option<PartitionTree>,
    pub workers: usize,
    pub cache_bytes: usize,
}

impl SearchConfig {
    pub fn new(metric: Metric, constraints: ConstraintSet) -> Self {
        SearchConfig {
            mode: Mode::Optimal,
            priority: Priority::Lb,
            max_queue: 1_000_000,
            time_limit: None,
            node_limit: None,
            metric,
            unit_volume: None,
            constraints,
            seed: None,
            workers: 1,
            cache_bytes: DEFAULT_CACHE_BYTES,
        }
    }

    pub fn metric_params(&self, space: &Space) -> MetricParams {
        MetricParams {
            metric: self.metric,
            k: self.constraints.k.unwrap_or(1).max(1),
            unit_volume: self.unit_volume.unwrap_or_else(|| space.min_cell_volume()),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Mode::Approx(a) = self.mode {
            if a.is_nan() || a <= 1.0 {
                return Err(Error::InvalidParameter("alpha must exceed 1".into()));
            }
        }
        if self.max_queue < 2 {
            return Err(Error::InvalidParameter("max queue size must be at least 2".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidParameter("at least one worker is needed".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub expanded: u64,
    pub generated: u64,
    pub pruned_by_bound: u64,
    pub pruned_infeasible: u64,
    pub probes: u64,
    pub forced_drops: u64,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub tree: PartitionTree,
    pub cost: f64,
    /// No feasible partition costs less than this.
    pub lower_bound: f64,
    pub ratio: f64,
    /// The queue drained without forced drops or budget expiry: the cost is
    /// optimal (or within alpha in approximate mode).
    pub certificate: bool,
    pub budget_exhausted: bool,
    pub stats: SearchStats,
}

/// One incumbent improvement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Progress {
    pub elapsed_ms: u64,
    pub best: f64,
    pub lower_bound: f64,
    pub ratio: f64,
    pub queue: usize,
}

fn ratio(cost: f64, lower: f64) -> f64 {
    if lower > 0.0 {
        cost / lower
    } else if cost == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

struct Eval {
    tree: PartitionTree,
    cost: f64,
    lb: f64,
    feasible: bool,
    prunable: bool,
}

/// Shared read-only pieces of a run.
pub(crate) struct Evaluator<'a> {
    pub space: &'a Space,
    pub params: MetricParams,
    pub constraints: Constraints,
    pub bounds: BoundContext<'a>,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(space: &'a Space, cfg: &SearchConfig) -> Result<Self> {
        cfg.validate()?;
        let params = cfg.metric_params(space);
        params.validate(space)?;
        let constraints = Constraints::new(space, &cfg.constraints)?;
        Ok(Evaluator {
            space,
            params,
            constraints,
            bounds: BoundContext::with_cache_bytes(space, params, cfg.cache_bytes),
        })
    }

    pub(crate) fn cost(&self, tree: &PartitionTree) -> f64 {
        tree.leaves().iter().map(|b| block_cost(b, &self.params)).sum()
    }

    fn evaluate(&self, tree: PartitionTree) -> Eval {
        let prunable = self.constraints.check_prunable(self.space, &tree).is_some();
        let feasible = !prunable && self.constraints.check_all(self.space, &tree).is_none();
        let cost = self.cost(&tree);
        let lb = if prunable { f64::INFINITY } else { self.bounds.lb(&tree) };
        Eval {
            tree,
            cost,
            lb,
            feasible,
            prunable,
        }
    }

    fn expand(&self, tree: &PartitionTree) -> Vec<Eval> {
        children(self.space, tree).into_iter().map(|c| self.evaluate(c.tree)).collect()
    }

    /// Bound valid for every partition of the space.
    pub(crate) fn static_bound(&self) -> f64 {
        global_theoretical_bound(self.space, &self.params).max(self.bounds.min_cost(&self.space.root_block()))
    }
}

struct Entry {
    tree: PartitionTree,
    lb: f64,
}

struct Search<'a, 'p> {
    ev: &'a Evaluator<'a>,
    alpha: f64,
    exact: bool,
    priority: Priority,
    max_queue: usize,
    best: Option<(f64, PartitionTree)>,
    queue: BTreeMap<(OrderedFloat<f64>, u64), Entry>,
    lbs: BTreeSet<(OrderedFloat<f64>, u64)>,
    seq: u64,
    /// Smallest bound among subtrees given up without proof they are worse.
    given_up: f64,
    in_flight: f64,
    certificate: bool,
    stats: SearchStats,
    start: Instant,
    on_progress: &'p mut dyn FnMut(&Progress),
}

impl Search<'_, '_> {
    fn best_cost(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.0)
    }

    /// Whether nothing below a node with this bound can beat the incumbent
    /// by more than the allowed factor.
    fn dominated(&self, lb: f64) -> bool {
        let best = self.best_cost();
        if self.exact {
            self.alpha * lb >= best
        } else {
            self.alpha * lb * (1.0 - 1e-12) >= best
        }
    }

    fn prune(&mut self, lb: f64) {
        self.stats.pruned_by_bound += 1;
        if lb < self.best_cost() {
            self.given_up = self.given_up.min(lb);
        }
    }

    fn lower_bound(&self) -> f64 {
        let live = self.lbs.first().map_or(f64::INFINITY, |k| k.0 .0);
        let best = self.best_cost();
        let lower = best.min(live).min(self.given_up).min(self.in_flight);
        lower.max(self.ev.static_bound()).min(best)
    }

    fn offer(&mut self, cost: f64, tree: &PartitionTree) {
        if cost < self.best_cost() {
            self.best = Some((cost, tree.clone()));
            let lower = self.lower_bound();
            let p = Progress {
                elapsed_ms: self.start.elapsed().as_millis() as u64,
                best: cost,
                lower_bound: lower,
                ratio: ratio(cost, lower),
                queue: self.queue.len(),
            };
            (self.on_progress)(&p);
        }
    }

    fn key(&self, e: &Eval) -> f64 {
        match self.priority {
            Priority::Lb => e.lb,
            Priority::Cost => e.cost,
            Priority::LbOverCost => {
                if e.cost > 0.0 {
                    e.lb / e.cost
                } else {
                    1.0
                }
            }
        }
    }

    fn insert(&mut self, e: Eval) {
        let key = OrderedFloat(self.key(&e));
        self.seq += 1;
        self.lbs.insert((OrderedFloat(e.lb), self.seq));
        self.queue.insert((key, self.seq), Entry { tree: e.tree, lb: e.lb });
    }

    fn pop(&mut self) -> Option<Entry> {
        let ((_, seq), e) = self.queue.pop_first()?;
        self.lbs.remove(&(OrderedFloat(e.lb), seq));
        Some(e)
    }

    fn process(&mut self, evals: Vec<Eval>) {
        for e in evals {
            self.stats.generated += 1;
            if e.prunable {
                self.stats.pruned_infeasible += 1;
                continue;
            }
            if e.feasible {
                self.offer(e.cost, &e.tree);
            }
            if self.dominated(e.lb) {
                self.prune(e.lb);
                continue;
            }
            self.insert(e);
            if self.queue.len() > self.max_queue {
                self.probe();
            }
        }
    }

    /// Dives greedily below the most promising node to improve the
    /// incumbent, then trims the queue.
    fn probe(&mut self) {
        self.stats.probes += 1;
        if let Some(first) = self.queue.values().next() {
            let mut cur = first.tree.clone();
            loop {
                let next = self
                    .ev
                    .expand(&cur)
                    .into_iter()
                    .filter(|e| e.feasible)
                    .min_by(|a, b| a.cost.total_cmp(&b.cost));
                match next {
                    Some(e) => {
                        self.offer(e.cost, &e.tree);
                        cur = e.tree;
                    }
                    None => break,
                }
            }
        }
        let doomed: Vec<_> = self
            .queue
            .iter()
            .filter(|(_, e)| self.dominated(e.lb))
            .map(|(k, e)| (*k, e.lb))
            .collect();
        for (k, lb) in doomed {
            self.queue.remove(&k);
            self.lbs.remove(&(OrderedFloat(lb), k.1));
            self.prune(lb);
        }
        let target = self.max_queue / 2;
        let round = (self.max_queue / 10).max(1);
        while self.queue.len() > target {
            for _ in 0..round.min(self.queue.len() - target) {
                let ((_, seq), e) = self.queue.pop_last().expect("queue is above target");
                self.lbs.remove(&(OrderedFloat(e.lb), seq));
                self.given_up = self.given_up.min(e.lb);
                self.stats.forced_drops += 1;
            }
            self.certificate = false;
        }
    }
}

/// Runs the prioritized search, reporting each incumbent improvement.
pub fn prioritized_enumerate(
    space: &Space,
    cfg: &SearchConfig,
    on_progress: &mut dyn FnMut(&Progress),
) -> Result<SearchResult> {
    let ev = Evaluator::new(space, cfg)?;
    let pool = if cfg.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.workers)
                .build()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?,
        )
    } else {
        None
    };
    let mut s = Search {
        ev: &ev,
        alpha: match cfg.mode {
            Mode::Optimal => 1.0,
            Mode::Approx(a) => a,
        },
        exact: cfg.metric != Metric::Vm,
        priority: cfg.priority,
        max_queue: cfg.max_queue,
        best: None,
        queue: BTreeMap::new(),
        lbs: BTreeSet::new(),
        seq: 0,
        given_up: f64::INFINITY,
        in_flight: f64::INFINITY,
        certificate: true,
        stats: SearchStats::default(),
        start: Instant::now(),
        on_progress,
    };

    let root = ev.evaluate(PartitionTree::new(space));
    s.stats.generated += 1;
    if let Some(seed) = &cfg.seed {
        seed.validate(space).map_err(|e| Error::InvalidSeed(e.to_string()))?;
        if let Some(v) = ev.constraints.check_all(space, seed) {
            return Err(Error::InvalidSeed(format!("block {} violates {}", v.block, v.constraint)));
        }
    }
    if root.prunable {
        return Err(Error::Infeasible);
    }
    // The root's bound covers every partition until the root is queued.
    s.in_flight = root.lb;
    if let Some(seed) = &cfg.seed {
        s.offer(ev.cost(seed), seed);
    }
    if root.feasible {
        s.offer(root.cost, &root.tree);
    }
    if s.dominated(root.lb) {
        s.prune(root.lb);
    } else {
        s.insert(root);
    }
    s.in_flight = f64::INFINITY;

    let mut exhausted = false;
    loop {
        if cfg.time_limit.is_some_and(|t| s.start.elapsed() >= t)
            || cfg.node_limit.is_some_and(|n| s.stats.expanded >= n)
        {
            exhausted = !s.queue.is_empty();
            break;
        }
        let mut batch = Vec::with_capacity(cfg.workers);
        while batch.len() < cfg.workers {
            let Some(e) = s.pop() else { break };
            if s.dominated(e.lb) {
                s.prune(e.lb);
            } else {
                batch.push(e);
            }
        }
        if batch.is_empty() {
            break;
        }
        s.in_flight = batch.iter().map(|e| e.lb).fold(f64::INFINITY, f64::min);
        s.stats.expanded += batch.len() as u64;
        let results: Vec<Vec<Eval>> = match &pool {
            Some(pool) => pool.install(|| batch.par_iter().map(|e| ev.expand(&e.tree)).collect()),
            None => batch.iter().map(|e| ev.expand(&e.tree)).collect(),
        };
        for evals in results {
            s.process(evals);
        }
        s.in_flight = f64::INFINITY;
    }

    let lower = s.lower_bound();
    let certificate = s.certificate && !exhausted;
    let mut stats = s.stats.clone();
    stats.elapsed_ms = s.start.elapsed().as_millis() as u64;
    let (cost, tree) = s.best.take().ok_or(Error::Infeasible)?;
    Ok(SearchResult {
        ratio: ratio(cost, lower),
        tree,
        cost,
        lower_bound: lower,
        certificate,
        budget_exhausted: exhausted,
        stats,
    })
}

pub fn search(space: &Space, cfg: &SearchConfig) -> Result<SearchResult> {
    prioritized_enumerate(space, cfg, &mut |_| {})
}

/// Search seeded with a known feasible partition; the result is never worse.
pub fn improve_from_seed(space: &Space, cfg: &SearchConfig, seed: PartitionTree) -> Result<SearchResult> {
    let cfg = SearchConfig {
        seed: Some(seed),
        ..cfg.clone()
    };
    search(space, &cfg)
}

#[cfg(test)]
mod tests;
