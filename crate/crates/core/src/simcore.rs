//! Discrete-event simulation of a continuous-review (ROP, ROQ) policy.
//!
//! The event loop runs on a monthly grid. Within one month, in order:
//! deliveries due this month join on-hand stock, demand consumes on-hand
//! (unmet demand is lost and charged the shortage rate), and then orders
//! are placed while the inventory position (on-hand plus on-order) sits at
//! or below the reorder point. At each year end the remaining on-hand
//! stock is charged one year of holding cost; a time-averaged monthly
//! holding rule is available behind a config flag.
//!
//! Shortage semantics are lost sales: unmet demand never backorders and
//! never goes negative on stock.

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demandgen::{self, ConsumptionHistogram, MonthlyDemandSchedule};
use crate::distfit::Distribution;
use crate::rng;

pub const MONTHS_PER_YEAR: u64 = 12;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("reorder quantity must be at least 1")]
    ZeroReorderQuantity,
    #[error("horizon must cover at least one year")]
    ZeroHorizon,
    #[error("cost rate {name} = {value} must be finite and nonnegative")]
    BadCostRate { name: &'static str, value: f64 },
    #[error("demand schedule exhausted: year {year} requested but only {available} supplied")]
    DemandExhausted { year: u64, available: usize },
    #[error("lead-time model produced a negative value: {0}")]
    NegativeLeadTime(f64),
    #[error("replication count must be at least 1")]
    ZeroReplications,
}

/// The policy under evaluation: order `roq` units whenever the inventory
/// position is at or below `rop`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InventoryPolicy {
    pub rop: u64,
    pub roq: u64,
}

impl InventoryPolicy {
    pub fn new(rop: u64, roq: u64) -> Result<Self, SimError> {
        if roq == 0 {
            return Err(SimError::ZeroReorderQuantity);
        }
        Ok(InventoryPolicy { rop, roq })
    }
}

/// Cost rates: holding per unit per year, ordering per order placed,
/// shortage per unit of lost demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostRates {
    pub holding: f64,
    pub ordering: f64,
    pub shortage: f64,
}

impl CostRates {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, value) in [
            ("holding", self.holding),
            ("ordering", self.ordering),
            ("shortage", self.shortage),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(SimError::BadCostRate { name, value });
            }
        }
        Ok(())
    }
}

/// When holding cost is charged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldingRule {
    /// End-of-year on-hand times the annual rate. The default.
    #[default]
    YearEnd,
    /// Each month-end on-hand times one twelfth of the annual rate.
    MonthlyAverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon_years: u64,
    /// Starting stock; `None` defaults to `rop + roq` so runs do not begin
    /// in an artificial stockout.
    pub initial_on_hand: Option<u64>,
    pub seed: u64,
    #[serde(default)]
    pub holding_rule: HoldingRule,
    /// Years simulated before statistics start accumulating.
    #[serde(default)]
    pub warmup_years: u64,
}

impl SimConfig {
    pub fn new(horizon_years: u64, seed: u64) -> Self {
        SimConfig {
            horizon_years,
            initial_on_hand: None,
            seed,
            holding_rule: HoldingRule::YearEnd,
            warmup_years: 0,
        }
    }
}

/// Where monthly demand comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DemandModel {
    /// No demand at all.
    None,
    /// The same quantity every month.
    ConstantMonthly { qty: u64 },
    /// A fixed list of yearly schedules; errors if the horizon outruns it.
    Schedule { years: Vec<MonthlyDemandSchedule> },
    /// Roulette-wheel resampling of a consumption histogram, one spin per
    /// year, spread over months.
    Roulette { histogram: ConsumptionHistogram },
    /// Twelve independent monthly draws per year from a fitted
    /// distribution, negative draws truncated to zero, rounded to units.
    Fitted { distribution: Distribution },
    /// One annual draw per year from a fitted distribution, spread over
    /// months the same way roulette draws are.
    FittedAnnual { distribution: Distribution },
}

impl DemandModel {
    fn year_schedule(
        &self,
        year: u64,
        rng: &mut ChaCha12Rng,
    ) -> Result<MonthlyDemandSchedule, SimError> {
        match self {
            DemandModel::None => Ok(MonthlyDemandSchedule::zero()),
            DemandModel::ConstantMonthly { qty } => {
                Ok(MonthlyDemandSchedule::from_quantities([*qty; 12]))
            }
            DemandModel::Schedule { years } => {
                years
                    .get(year as usize)
                    .cloned()
                    .ok_or(SimError::DemandExhausted {
                        year: year + 1,
                        available: years.len(),
                    })
            }
            DemandModel::Roulette { histogram } => Ok(demandgen::synthesize_year(histogram, rng)),
            DemandModel::Fitted { distribution } => {
                let mut quantities = [0u64; 12];
                for q in &mut quantities {
                    let draw = distribution.sample(rng);
                    *q = draw.max(0.0).round() as u64;
                }
                Ok(MonthlyDemandSchedule::from_quantities(quantities))
            }
            DemandModel::FittedAnnual { distribution } => {
                let annual = distribution.sample(rng).max(0.0).round() as u64;
                Ok(demandgen::monthly_spread(annual, rng))
            }
        }
    }
}

/// Where replenishment lead times come from, in months.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LeadTimeModel {
    ConstantMonths {
        months: u64,
    },
    /// Sampled per order and rounded half-up to whole months. A negative
    /// sample is a model error, not something to clamp silently.
    Fitted {
        distribution: Distribution,
    },
}

impl LeadTimeModel {
    fn sample_months(&self, rng: &mut ChaCha12Rng) -> Result<u64, SimError> {
        match self {
            LeadTimeModel::ConstantMonths { months } => Ok(*months),
            LeadTimeModel::Fitted { distribution } => {
                let draw = distribution.sample(rng);
                if draw < 0.0 {
                    return Err(SimError::NegativeLeadTime(draw));
                }
                Ok((draw + 0.5).floor() as u64)
            }
        }
    }
}

/// Aggregated result of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub total_cost: f64,
    pub holding_cost: f64,
    pub ordering_cost: f64,
    pub shortage_cost: f64,
    pub units_demanded: u64,
    pub units_met: u64,
    pub units_short: u64,
    pub orders_placed: u64,
    pub cycles: u64,
    pub stockout_cycles: u64,
    /// Units satisfied over units demanded; 1 when nothing was demanded.
    pub fill_rate: f64,
    /// Fraction of replenishment cycles with no lost demand between order
    /// placement and delivery; 1 when no cycle completed.
    pub cycle_service_level: f64,
    /// Mean month-end on-hand over the measured horizon.
    pub avg_on_hand: f64,
    pub final_on_hand: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Arrival,
    Demand,
    Order,
    YearEnd,
}

impl EventKind {
    fn name(self) -> &'static str {
        match self {
            EventKind::Arrival => "arrival",
            EventKind::Demand => "demand",
            EventKind::Order => "order",
            EventKind::YearEnd => "year_end",
        }
    }
}

/// One trace row: state after the event applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub t_month: u64,
    pub event: EventKind,
    pub qty: u64,
    pub on_hand: u64,
    pub on_order: u64,
    pub cost_delta: f64,
}

pub type EventTrace = Vec<TraceEvent>;

struct PendingOrder {
    due: u64,
    qty: u64,
    /// Index into the cycle table.
    cycle: usize,
}

struct Cycle {
    delivered: bool,
    stockout: bool,
}

/// Run one replication. See the module docs for the event ordering.
pub fn simulate(
    policy: InventoryPolicy,
    demand: &DemandModel,
    lead: &LeadTimeModel,
    costs: &CostRates,
    config: &SimConfig,
) -> Result<SimOutcome, SimError> {
    run(policy, demand, lead, costs, config, None)
}

/// Run one replication and keep the full event trace.
pub fn simulate_traced(
    policy: InventoryPolicy,
    demand: &DemandModel,
    lead: &LeadTimeModel,
    costs: &CostRates,
    config: &SimConfig,
) -> Result<(SimOutcome, EventTrace), SimError> {
    let mut trace = EventTrace::new();
    let outcome = run(policy, demand, lead, costs, config, Some(&mut trace))?;
    Ok((outcome, trace))
}

fn run(
    policy: InventoryPolicy,
    demand: &DemandModel,
    lead: &LeadTimeModel,
    costs: &CostRates,
    config: &SimConfig,
    mut trace: Option<&mut EventTrace>,
) -> Result<SimOutcome, SimError> {
    if policy.roq == 0 {
        return Err(SimError::ZeroReorderQuantity);
    }
    if config.horizon_years == 0 {
        return Err(SimError::ZeroHorizon);
    }
    costs.validate()?;

    let mut demand_rng = rng::stream(config.seed, "demand");
    let mut lead_rng = rng::stream(config.seed, "lead");

    let total_years = config.warmup_years + config.horizon_years;
    let warmup_months = config.warmup_years * MONTHS_PER_YEAR;

    let mut on_hand = config.initial_on_hand.unwrap_or(policy.rop + policy.roq);
    let mut on_order = 0u64;
    let mut pending: Vec<PendingOrder> = Vec::new();
    let mut cycles: Vec<Cycle> = Vec::new();

    let mut holding_cost = 0.0f64;
    let mut ordering_cost = 0.0f64;
    let mut shortage_cost = 0.0f64;
    let mut units_demanded = 0u64;
    let mut units_met = 0u64;
    let mut units_short = 0u64;
    let mut orders_placed = 0u64;
    let mut measured_months = 0u64;
    let mut on_hand_month_sum = 0u64;
    let mut window_open = config.warmup_years == 0;
    let mut cycles_before_window = 0usize;

    for year in 0..total_years {
        let schedule = demand.year_schedule(year, &mut demand_rng)?;
        for month in 0..MONTHS_PER_YEAR {
            let t = year * MONTHS_PER_YEAR + month;
            if !window_open && t >= warmup_months {
                window_open = true;
                cycles_before_window = cycles.len();
            }
            let measuring = t >= warmup_months;

            // 1. Deliveries due this month arrive first.
            let mut i = 0;
            while i < pending.len() {
                if pending[i].due == t {
                    let order = pending.remove(i);
                    on_hand += order.qty;
                    on_order -= order.qty;
                    cycles[order.cycle].delivered = true;
                    if let Some(tr) = trace.as_deref_mut() {
                        if measuring {
                            tr.push(TraceEvent {
                                t_month: t,
                                event: EventKind::Arrival,
                                qty: order.qty,
                                on_hand,
                                on_order,
                                cost_delta: 0.0,
                            });
                        }
                    }
                } else {
                    i += 1;
                }
            }

            // 2. Demand consumes on-hand; the unmet remainder is lost.
            let qty = schedule.quantities[month as usize];
            if qty > 0 {
                let met = qty.min(on_hand);
                let short = qty - met;
                on_hand -= met;
                let cost_delta = short as f64 * costs.shortage;
                if measuring {
                    units_demanded += qty;
                    units_met += met;
                    units_short += short;
                    shortage_cost += cost_delta;
                }
                if short > 0 {
                    // Every open cycle was exposed to this stockout.
                    for order in &pending {
                        cycles[order.cycle].stockout = true;
                    }
                }
                if let Some(tr) = trace.as_deref_mut() {
                    if measuring {
                        tr.push(TraceEvent {
                            t_month: t,
                            event: EventKind::Demand,
                            qty,
                            on_hand,
                            on_order,
                            cost_delta,
                        });
                    }
                }
            }

            // 3. Reorder while the position sits at or below the ROP. A
            //    deep demand spike can trigger several orders at once.
            while on_hand + on_order <= policy.rop {
                let lead_months = lead.sample_months(&mut lead_rng)?;
                if measuring {
                    orders_placed += 1;
                    ordering_cost += costs.ordering;
                }
                cycles.push(Cycle {
                    delivered: false,
                    stockout: false,
                });
                let cycle = cycles.len() - 1;
                if lead_months == 0 {
                    // Instantaneous replenishment joins stock in place.
                    if let Some(tr) = trace.as_deref_mut() {
                        if measuring {
                            tr.push(TraceEvent {
                                t_month: t,
                                event: EventKind::Order,
                                qty: policy.roq,
                                on_hand,
                                on_order: on_order + policy.roq,
                                cost_delta: costs.ordering,
                            });
                        }
                    }
                    on_hand += policy.roq;
                    cycles[cycle].delivered = true;
                    if let Some(tr) = trace.as_deref_mut() {
                        if measuring {
                            tr.push(TraceEvent {
                                t_month: t,
                                event: EventKind::Arrival,
                                qty: policy.roq,
                                on_hand,
                                on_order,
                                cost_delta: 0.0,
                            });
                        }
                    }
                } else {
                    on_order += policy.roq;
                    pending.push(PendingOrder {
                        due: t + lead_months,
                        qty: policy.roq,
                        cycle,
                    });
                    if let Some(tr) = trace.as_deref_mut() {
                        if measuring {
                            tr.push(TraceEvent {
                                t_month: t,
                                event: EventKind::Order,
                                qty: policy.roq,
                                on_hand,
                                on_order,
                                cost_delta: costs.ordering,
                            });
                        }
                    }
                }
            }

            // 4. Month-end accounting.
            if measuring {
                on_hand_month_sum += on_hand;
                measured_months += 1;
                if config.holding_rule == HoldingRule::MonthlyAverage {
                    holding_cost += on_hand as f64 * costs.holding / MONTHS_PER_YEAR as f64;
                }
                if month == MONTHS_PER_YEAR - 1 {
                    let charge = match config.holding_rule {
                        HoldingRule::YearEnd => on_hand as f64 * costs.holding,
                        HoldingRule::MonthlyAverage => 0.0,
                    };
                    holding_cost += charge;
                    if let Some(tr) = trace.as_deref_mut() {
                        tr.push(TraceEvent {
                            t_month: t,
                            event: EventKind::YearEnd,
                            qty: on_hand,
                            on_hand,
                            on_order,
                            cost_delta: charge,
                        });
                    }
                }
            }
        }
    }

    let measured_cycles = &cycles[cycles_before_window.min(cycles.len())..];
    let cycle_count = measured_cycles.len() as u64;
    let stockout_cycles = measured_cycles.iter().filter(|c| c.stockout).count() as u64;

    let fill_rate = if units_demanded == 0 {
        1.0
    } else {
        units_met as f64 / units_demanded as f64
    };
    let cycle_service_level = if cycle_count == 0 {
        1.0
    } else {
        1.0 - stockout_cycles as f64 / cycle_count as f64
    };

    let outcome = SimOutcome {
        total_cost: holding_cost + ordering_cost + shortage_cost,
        holding_cost,
        ordering_cost,
        shortage_cost,
        units_demanded,
        units_met,
        units_short,
        orders_placed,
        cycles: cycle_count,
        stockout_cycles,
        fill_rate,
        cycle_service_level,
        avg_on_hand: on_hand_month_sum as f64 / measured_months.max(1) as f64,
        final_on_hand: on_hand,
    };
    Ok(outcome)
}

/// Measured service levels of an outcome: `(fill_rate, cycle_service_level)`.
pub fn measured_service_levels(outcome: &SimOutcome) -> (f64, f64) {
    (outcome.fill_rate, outcome.cycle_service_level)
}

/// Mean, sample standard deviation, and 95% confidence half-width of one
/// metric across replications. The half-width is undefined for a single
/// replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std_dev: f64,
    pub ci_half_width: Option<f64>,
}

fn summarize(samples: &[f64]) -> MetricSummary {
    let r = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / r;
    if samples.len() < 2 {
        return MetricSummary {
            mean,
            std_dev: 0.0,
            ci_half_width: None,
        };
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (r - 1.0);
    let std_dev = var.sqrt();
    MetricSummary {
        mean,
        std_dev,
        ci_half_width: Some(1.96 * std_dev / r.sqrt()),
    }
}

/// Replication statistics over the fields of [`SimOutcome`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationStats {
    pub replications: u32,
    pub total_cost: MetricSummary,
    pub holding_cost: MetricSummary,
    pub ordering_cost: MetricSummary,
    pub shortage_cost: MetricSummary,
    pub fill_rate: MetricSummary,
    pub cycle_service_level: MetricSummary,
    pub avg_on_hand: MetricSummary,
    pub orders_placed: MetricSummary,
}

/// Run `r` independent replications. Replication `i` runs under the child
/// seed `derive_seed(config.seed, i)`, so the statistics are a pure
/// function of `(inputs, config.seed, r)` and candidates evaluated with
/// the same master seed share their random-number streams.
pub fn replicate(
    policy: InventoryPolicy,
    demand: &DemandModel,
    lead: &LeadTimeModel,
    costs: &CostRates,
    config: &SimConfig,
    r: u32,
) -> Result<ReplicationStats, SimError> {
    if r == 0 {
        return Err(SimError::ZeroReplications);
    }
    let mut outcomes = Vec::with_capacity(r as usize);
    for i in 0..r {
        let mut child = config.clone();
        child.seed = rng::derive_seed(config.seed, i as u64);
        outcomes.push(simulate(policy, demand, lead, costs, &child)?);
    }
    let field = |f: fn(&SimOutcome) -> f64| -> Vec<f64> { outcomes.iter().map(f).collect() };
    Ok(ReplicationStats {
        replications: r,
        total_cost: summarize(&field(|o| o.total_cost)),
        holding_cost: summarize(&field(|o| o.holding_cost)),
        ordering_cost: summarize(&field(|o| o.ordering_cost)),
        shortage_cost: summarize(&field(|o| o.shortage_cost)),
        fill_rate: summarize(&field(|o| o.fill_rate)),
        cycle_service_level: summarize(&field(|o| o.cycle_service_level)),
        avg_on_hand: summarize(&field(|o| o.avg_on_hand)),
        orders_placed: summarize(&field(|o| o.orders_placed as f64)),
    })
}

/// Write an event trace as CSV:
/// `t_month,event,qty,on_hand,on_order,cost_delta`.
pub fn write_trace_csv<W: std::io::Write>(out: W, trace: &EventTrace) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t_month",
        "event",
        "qty",
        "on_hand",
        "on_order",
        "cost_delta",
    ])?;
    for e in trace {
        w.write_record([
            &e.t_month.to_string(),
            e.event.name(),
            &e.qty.to_string(),
            &e.on_hand.to_string(),
            &e.on_order.to_string(),
            &e.cost_delta.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Write replication summaries, one row per (item, policy):
/// `item_id,rop,roq,replications,mean_total_cost,ci_half_width,mean_holding,mean_ordering,mean_shortage,mean_fill_rate,mean_cycle_service_level,mean_avg_on_hand`.
pub fn write_outcome_csv<W: std::io::Write>(
    out: W,
    rows: &[(String, InventoryPolicy, ReplicationStats)],
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "item_id",
        "rop",
        "roq",
        "replications",
        "mean_total_cost",
        "ci_half_width",
        "mean_holding",
        "mean_ordering",
        "mean_shortage",
        "mean_fill_rate",
        "mean_cycle_service_level",
        "mean_avg_on_hand",
    ])?;
    for (id, policy, stats) in rows {
        w.write_record([
            id.as_str(),
            &policy.rop.to_string(),
            &policy.roq.to_string(),
            &stats.replications.to_string(),
            &stats.total_cost.mean.to_string(),
            &stats.total_cost.ci_half_width.unwrap_or(0.0).to_string(),
            &stats.holding_cost.mean.to_string(),
            &stats.ordering_cost.mean.to_string(),
            &stats.shortage_cost.mean.to_string(),
            &stats.fill_rate.mean.to_string(),
            &stats.cycle_service_level.mean.to_string(),
            &stats.avg_on_hand.mean.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
