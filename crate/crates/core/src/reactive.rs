//! Constraint-driven network selection and deterministic stream simulation.
//!
//! Selection is stateless: the chosen profile is a pure function of the
//! registry and the active constraints. The simulator replays a scenario of
//! context changes frame by frame and logs what was selected.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AccuracyMetric, NetworkId, NetworkProfile};

#[derive(Debug, Error, PartialEq)]
pub enum ReactiveError {
    #[error("profile registry is empty")]
    EmptyRegistry,
    #[error("no profile satisfies {0}")]
    Infeasible(String),
    #[error("profile {profile} carries no `{metric}` accuracy")]
    UnknownMetric { metric: String, profile: String },
    #[error("invalid scenario: {0}")]
    BadScenario(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfeasiblePolicy {
    /// Run the fastest profile and flag the frame as unsatisfied.
    #[default]
    FastestFallback,
    Reject,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSpec {
    /// `None` is unbounded.
    pub max_latency_ms: Option<f64>,
    pub min_accuracy: Option<f64>,
    pub objective_metric: AccuracyMetric,
    pub infeasible_policy: InfeasiblePolicy,
}

impl ConstraintSpec {
    pub fn maximize(metric: AccuracyMetric) -> Self {
        Self {
            max_latency_ms: None,
            min_accuracy: None,
            objective_metric: metric,
            infeasible_policy: InfeasiblePolicy::default(),
        }
    }

    pub fn with_max_latency(mut self, ms: f64) -> Self {
        self.max_latency_ms = Some(ms);
        self
    }

    pub fn with_min_accuracy(mut self, acc: f64) -> Self {
        self.min_accuracy = Some(acc);
        self
    }

    pub fn with_policy(mut self, policy: InfeasiblePolicy) -> Self {
        self.infeasible_policy = policy;
        self
    }

    pub fn latency_ok(&self, latency_ms: f64) -> bool {
        self.max_latency_ms.is_none_or(|max| latency_ms <= max)
    }

    pub fn accuracy_ok(&self, objective: f64) -> bool {
        self.min_accuracy.is_none_or(|min| objective >= min)
    }

    fn describe(&self) -> String {
        let latency = self
            .max_latency_ms
            .map_or_else(|| "unbounded latency".to_string(), |ms| format!("latency <= {ms} ms"));
        match self.min_accuracy {
            Some(min) => format!("{latency} and {} >= {min}", self.objective_metric),
            None => latency,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContextEvent {
    pub frame_index: u64,
    pub label: String,
    pub constraints: ConstraintSpec,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Selection<'a> {
    pub profile: &'a NetworkProfile,
    pub objective: f64,
    /// False when the profile is a fallback for an infeasible constraint set.
    pub satisfied: bool,
}

fn objective_of(p: &NetworkProfile, metric: AccuracyMetric) -> Result<f64, ReactiveError> {
    p.accuracy(metric).ok_or_else(|| ReactiveError::UnknownMetric {
        metric: metric.to_string(),
        profile: p.key().to_string(),
    })
}

/// Most accurate feasible profile; ties go to the lower latency, then the
/// smaller key. With nothing feasible, [`InfeasiblePolicy`] decides.
pub fn select_network<'a>(registry: &'a [NetworkProfile], c: &ConstraintSpec) -> Result<Selection<'a>, ReactiveError> {
    if registry.is_empty() {
        return Err(ReactiveError::EmptyRegistry);
    }
    let scored = registry
        .iter()
        .map(|p| Ok((p, objective_of(p, c.objective_metric)?)))
        .collect::<Result<Vec<_>, ReactiveError>>()?;

    let best = scored
        .iter()
        .filter(|(p, obj)| c.latency_ok(p.latency_ms) && c.accuracy_ok(*obj))
        .min_by(|(a, oa), (b, ob)| {
            ob.total_cmp(oa)
                .then(a.latency_ms.total_cmp(&b.latency_ms))
                .then_with(|| a.key().cmp(&b.key()))
        });
    if let Some(&(profile, objective)) = best {
        return Ok(Selection {
            profile,
            objective,
            satisfied: true,
        });
    }
    match c.infeasible_policy {
        InfeasiblePolicy::Reject => Err(ReactiveError::Infeasible(c.describe())),
        InfeasiblePolicy::FastestFallback => {
            let &(profile, objective) = scored
                .iter()
                .min_by(|(a, oa), (b, ob)| {
                    a.latency_ms
                        .total_cmp(&b.latency_ms)
                        .then(ob.total_cmp(oa))
                        .then_with(|| a.key().cmp(&b.key()))
                })
                .expect("registry is non-empty");
            Ok(Selection {
                profile,
                objective,
                satisfied: false,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub frame_index: u64,
    pub label: String,
    pub network_id: NetworkId,
    pub latency_ms: f64,
    /// Accuracy of the selected profile under the active objective metric.
    pub objective: f64,
    /// Overall mAP of the selected profile.
    pub overall: f64,
    pub constraint_satisfied: bool,
    /// Non-zero only on frames where the network changed.
    pub switch_cost_ms: f64,
}

pub type SelectionTrace = Vec<TraceEntry>;

#[derive(Clone, Debug, Default)]
pub struct SimulationOptions<'a> {
    /// Measured per-frame latencies replacing the profile latency.
    pub latency_trace: Option<&'a BTreeMap<u64, f64>>,
    pub switch_cost_ms: f64,
}

/// Replays `n_frames` frames. The constraints of the latest event at or
/// before each frame are active; selection is redone only when they change.
/// Constraint flags are recomputed per frame against the latency actually
/// recorded for that frame.
pub fn simulate_stream(
    registry: &[NetworkProfile],
    events: &[ContextEvent],
    n_frames: u64,
    options: &SimulationOptions,
) -> Result<SelectionTrace, ReactiveError> {
    match events.first() {
        None => return Err(ReactiveError::BadScenario("no context events".into())),
        Some(e) if e.frame_index != 0 => {
            return Err(ReactiveError::BadScenario(format!(
                "first event is at frame {}, expected frame 0",
                e.frame_index
            )))
        }
        _ => {}
    }
    if let Some(w) = events.windows(2).find(|w| w[1].frame_index <= w[0].frame_index) {
        return Err(ReactiveError::BadScenario(format!(
            "event frames must increase ({} then {})",
            w[0].frame_index, w[1].frame_index
        )));
    }
    if options.switch_cost_ms < 0.0 || !options.switch_cost_ms.is_finite() {
        return Err(ReactiveError::BadScenario("switch cost must be finite and non-negative".into()));
    }

    let mut trace = Vec::with_capacity(n_frames as usize);
    let mut active = 0usize;
    let mut selection = select_network(registry, &events[0].constraints)?;
    let mut previous: Option<NetworkId> = None;
    for frame in 0..n_frames {
        let mut next = active;
        while next + 1 < events.len() && events[next + 1].frame_index <= frame {
            next += 1;
        }
        if next != active {
            active = next;
            selection = select_network(registry, &events[active].constraints)?;
        }
        let event = &events[active];
        let c = &event.constraints;
        let latency_ms = options
            .latency_trace
            .and_then(|t| t.get(&frame).copied())
            .unwrap_or(selection.profile.latency_ms);
        let network_id = selection.profile.network_id();
        let switched = previous.as_ref().is_some_and(|p| *p != network_id);
        trace.push(TraceEntry {
            frame_index: frame,
            label: event.label.clone(),
            latency_ms,
            objective: selection.objective,
            overall: selection.profile.map_overall,
            constraint_satisfied: c.latency_ok(latency_ms) && c.accuracy_ok(selection.objective),
            switch_cost_ms: if switched { options.switch_cost_ms } else { 0.0 },
            network_id: network_id.clone(),
        });
        previous = Some(network_id);
    }
    Ok(trace)
}

pub const TRACE_HEADER: [&str; 8] = [
    "frame",
    "label",
    "network_id",
    "latency_ms",
    "objective",
    "overall",
    "satisfied",
    "switch_cost_ms",
];

pub fn write_trace_to(trace: &[TraceEntry], w: &mut impl Write) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_HEADER)?;
    for e in trace {
        out.write_record([
            e.frame_index.to_string(),
            e.label.clone(),
            e.network_id.to_string(),
            e.latency_ms.to_string(),
            e.objective.to_string(),
            e.overall.to_string(),
            e.constraint_satisfied.to_string(),
            e.switch_cost_ms.to_string(),
        ])?;
    }
    out.flush()
}

/// Frames at which the selected network differs from the previous frame.
pub fn switch_frames(trace: &[TraceEntry]) -> Vec<u64> {
    trace
        .windows(2)
        .filter(|w| w[0].network_id != w[1].network_id)
        .map(|w| w[1].frame_index)
        .collect()
}
