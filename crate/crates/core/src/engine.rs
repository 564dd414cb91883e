//! The round loop: TDMA framing, sensing and events, protocol dispatch,
//! energy charging and per-round metrics.
//!
//! A round runs in three phases:
//!
//! 1. **Control.** Protocol overhead for the round is charged: AMHRP's one-off
//!    setup exchange in round 0, M-ATTEMPT's hello flood plus schedule
//!    broadcast, SIMPLE's status report plus forwarder announcement.
//! 2. **Data.** Slots are visited in id order. The slot's node, if alive,
//!    senses its due readings and Poisson events and routes each packet over
//!    its full path within the round.
//! 3. **Close.** SIMPLE's forwarder uploads its aggregate, M-ATTEMPT
//!    temperatures are updated, and the metric row is recorded.
//!
//! Readings and events are drawn for every node in every round, alive or not,
//! so the event stream of a seed is identical across protocols.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::channel::path_loss;
use crate::config::SimConfig;
use crate::energy::{charge, Action, ActionCounts};
use crate::error::{ConfigError, SimError};
use crate::events::{is_critical, is_scheduled, sample_event_count, sample_reading};
use crate::protocols::equilibrium::{equilibrium_ok, EquilibriumProfile};
use crate::protocols::mattempt::{self, MattemptState};
use crate::protocols::{amhrp, neighbors, simple, ProtocolId, RouteAction, RoutingDecision};
use crate::rng::{Purpose, StreamSet};
use crate::topology::{build_topology, NodeId, Packet, PacketKind, SensorNode, Sink};

/// One row of the per-round time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: u64,
    pub alive_count: usize,
    pub packets_sent: u64,
    pub packets_received_at_sink: u64,
    pub critical_received: u64,
    /// Joules over all nodes.
    pub total_residual: f64,
    /// Joules per node, dead nodes included.
    pub mean_residual: f64,
    /// Mean over the round's distinct links, in dB; `None` when nothing was
    /// transmitted.
    pub mean_path_loss: Option<f64>,
    pub equilibrium_flag: bool,
}

/// Figures derived from one run's metric series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub protocol: ProtocolId,
    pub seed: u64,
    pub rounds: u64,
    pub node_count: usize,
    /// First round with a dead node; `rounds` when none died.
    pub stability_period: u64,
    /// First round with every node dead; `rounds` when any survived.
    pub network_lifetime: u64,
    pub packets_sent: u64,
    pub packets_received: u64,
    /// `None` when nothing was sent.
    pub throughput_pct: Option<f64>,
    pub final_total_residual: f64,
    pub residual_pct_at_end: f64,
    /// Mean of the per-round means over rounds with traffic.
    pub mean_path_loss_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub metrics: Vec<RoundMetrics>,
    pub summary: RunSummary,
    /// Everything drained from node batteries, in joules.
    pub energy_charged: f64,
}

/// Receiving end of one transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Node(NodeId),
    Sink,
    ExternalWsn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hop {
    pub from: NodeId,
    pub to: Endpoint,
    /// Whether `from` was alive when it started the transmission.
    pub sender_alive: bool,
}

/// What happened to a packet by the end of its round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fate {
    Delivered,
    /// Handed to the external WSN gateway; counts as delivered.
    Escalated,
    /// Lost after the originator transmitted.
    Dropped,
    /// No route at the originator; never transmitted.
    Held,
    /// Waiting in the SIMPLE forwarder's aggregate (only seen mid-round).
    Buffered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketTrace {
    pub source: NodeId,
    pub slot: usize,
    pub kind: PacketKind,
    pub hops: Vec<Hop>,
    pub fate: Fate,
}

/// Detailed record of one round, kept only when tracing is enabled.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoundTrace {
    pub round: u64,
    pub slots: BTreeMap<NodeId, usize>,
    /// Slot of every packet origination, in processing order.
    pub origination_slots: Vec<usize>,
    pub packets: Vec<PacketTrace>,
}

/// TDMA frame: node `i` owns slot `i`, so the frame length equals the node
/// count and slot order equals id order.
pub fn assign_tdma(nodes: &[SensorNode]) -> BTreeMap<NodeId, usize> {
    let mut ids: Vec<NodeId> = nodes.iter().map(|n| n.id).collect();
    ids.sort_unstable();
    ids.into_iter().enumerate().map(|(slot, id)| (id, slot)).collect()
}

/// Eq. 7.4: `100 · received / sent`.
pub fn throughput(received: u64, sent: u64) -> Result<f64, SimError> {
    if sent == 0 {
        return Err(SimError::Domain("throughput undefined: no packets sent".into()));
    }
    if received > sent {
        return Err(SimError::Domain(format!("received {received} exceeds sent {sent}")));
    }
    Ok(100.0 * received as f64 / sent as f64)
}

pub fn summarize_run(metrics: &[RoundMetrics], config: &SimConfig) -> RunSummary {
    let first_round =
        |pred: &dyn Fn(&RoundMetrics) -> bool| metrics.iter().find(|m| pred(m)).map_or(config.rounds, |m| m.round);
    let stability_period = first_round(&|m| m.alive_count < config.node_count);
    let network_lifetime = first_round(&|m| m.alive_count == 0);
    let packets_sent: u64 = metrics.iter().map(|m| m.packets_sent).sum();
    let packets_received: u64 = metrics.iter().map(|m| m.packets_received_at_sink).sum();
    let initial_total = config.node_count as f64 * config.initial_energy;
    let final_total_residual = metrics.last().map_or(initial_total, |m| m.total_residual);
    let losses: Vec<f64> = metrics.iter().filter_map(|m| m.mean_path_loss).collect();
    RunSummary {
        protocol: config.protocol,
        seed: config.seed,
        rounds: config.rounds,
        node_count: config.node_count,
        stability_period,
        network_lifetime,
        packets_sent,
        packets_received,
        throughput_pct: throughput(packets_received, packets_sent).ok(),
        final_total_residual,
        residual_pct_at_end: 100.0 * final_total_residual / initial_total,
        mean_path_loss_db: (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64),
    }
}

enum ProtocolState {
    Amhrp,
    Mattempt(MattemptState),
    Simple { forwarder: Option<NodeId> },
}

/// Per-round scratch state.
#[derive(Default)]
struct RoundTally {
    sent: u64,
    received: u64,
    critical_received: u64,
    /// Distinct (transmitter, receiver) links; `None` is the sink.
    links: BTreeSet<(NodeId, Option<NodeId>)>,
    /// Per node, data transmissions and receptions this round (heating).
    tx: Vec<u64>,
    rx: Vec<u64>,
    /// Packets waiting at the SIMPLE forwarder, as trace indices or kinds.
    buffer: Vec<(PacketKind, Option<usize>)>,
}

/// A run in progress.
pub struct Simulation {
    config: SimConfig,
    nodes: Vec<SensorNode>,
    sink: Sink,
    slots: BTreeMap<NodeId, usize>,
    state: ProtocolState,
    events: ChaCha8Rng,
    shadowing: ChaCha8Rng,
    shadow: Option<Normal<f64>>,
    round: u64,
    energy_charged: f64,
    window: ActionCounts,
    windows: VecDeque<ActionCounts>,
    tracing: bool,
    last_trace: Option<RoundTrace>,
}

impl Simulation {
    /// Validates `config` and places the nodes.
    pub fn new(config: &SimConfig) -> Result<Self, SimError> {
        let violations = config.validate();
        if !violations.is_empty() {
            return Err(ConfigError::Constraints(violations).into());
        }
        let streams = StreamSet::new(config.seed);
        let (nodes, sink) = build_topology(config, &mut streams.stream(Purpose::Topology))?;
        let state = match config.protocol {
            ProtocolId::Amhrp => ProtocolState::Amhrp,
            ProtocolId::Mattempt => ProtocolState::Mattempt(MattemptState {
                hop_counts: vec![None; nodes.len()],
                hotspots: vec![BTreeSet::new(); nodes.len()],
            }),
            ProtocolId::Simple => ProtocolState::Simple { forwarder: None },
        };
        let shadow = (config.channel.sigma_db > 0.0)
            .then(|| Normal::new(0.0, config.channel.sigma_db))
            .transpose()
            .map_err(|e| SimError::Domain(format!("shadowing distribution: {e}")))?;
        Ok(Self {
            slots: assign_tdma(&nodes),
            config: config.clone(),
            nodes,
            sink,
            state,
            events: streams.stream(Purpose::Events),
            shadowing: streams.stream(Purpose::Shadowing),
            shadow,
            round: 0,
            energy_charged: 0.0,
            window: ActionCounts::default(),
            windows: VecDeque::new(),
            tracing: false,
            last_trace: None,
        })
    }

    /// Keep a [`RoundTrace`] of the most recent round.
    pub fn with_tracing(mut self, on: bool) -> Self {
        self.tracing = on;
        self
    }

    pub fn nodes(&self) -> &[SensorNode] {
        &self.nodes
    }

    pub fn sink(&self) -> &Sink {
        &self.sink
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn energy_charged(&self) -> f64 {
        self.energy_charged
    }

    pub fn last_trace(&self) -> Option<&RoundTrace> {
        self.last_trace.as_ref()
    }

    pub fn is_finished(&self) -> bool {
        self.round >= self.config.rounds
    }

    /// Charges `action` to `id`. Returns whether the action took effect: a
    /// node that dies paying for it completes it only under `last_gasp`.
    fn spend(&mut self, id: NodeId, action: Action) -> Result<bool, SimError> {
        let cost = self.config.energy.cost_of(action);
        let outcome = charge(&mut self.nodes[id], cost, &self.config.energy)?;
        self.energy_charged += outcome.drained();
        self.window.record(action);
        Ok(!outcome.died() || self.config.last_gasp)
    }

    fn spend_control(&mut self, id: NodeId, exchanges: u64) -> Result<(), SimError> {
        for _ in 0..exchanges {
            if !self.nodes[id].alive {
                break;
            }
            self.spend(id, Action::Control)?;
        }
        Ok(())
    }

    fn control_phase(&mut self) -> Result<(), SimError> {
        match &mut self.state {
            ProtocolState::Amhrp => {
                if self.round == 0 && self.config.amhrp.setup_control {
                    for id in 0..self.nodes.len() {
                        self.spend_control(id, 1)?;
                    }
                }
            }
            ProtocolState::Mattempt(state) => {
                let flood = mattempt::build_hopcounts(&self.nodes, &self.sink, &self.config.mattempt);
                state.hop_counts = flood.hop_counts;
                state.hotspots.iter_mut().for_each(BTreeSet::clear);
                for (id, exchanges) in flood.control_exchanges.into_iter().enumerate() {
                    self.spend_control(id, exchanges)?;
                }
            }
            ProtocolState::Simple { .. } => {
                let per_node = self.config.simple.control_per_round;
                for id in 0..self.nodes.len() {
                    self.spend_control(id, per_node)?;
                }
                let elected = simple::select_forwarder(&self.nodes, &self.sink);
                self.state = ProtocolState::Simple { forwarder: elected };
            }
        }
        Ok(())
    }

    /// Every node's readings for this round, in id order.
    fn draw_packets(&mut self) -> Result<Vec<Vec<Packet>>, SimError> {
        let round = self.round;
        let mut out = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let mut packets = Vec::new();
            let mut push = |critical_event: bool, rng: &mut ChaCha8Rng| -> Result<(), SimError> {
                let reading = sample_reading(node.kind, critical_event, &self.config.vitals, rng)?;
                let kind = if is_critical(node.kind, reading, &self.config.vitals)? {
                    PacketKind::Critical
                } else {
                    PacketKind::Normal
                };
                packets.push(Packet::new(kind, node.id, round, reading));
                Ok(())
            };
            if is_scheduled(node.kind, round, &self.config.schedule) {
                push(false, &mut self.events)?;
            }
            for _ in 0..sample_event_count(self.config.events.lambda, &mut self.events) {
                let alarm = self.events.random_bool(self.config.events.critical_fraction);
                push(alarm, &mut self.events)?;
            }
            out.push(packets);
        }
        Ok(out)
    }

    fn decide(&self, holder: NodeId, kind: PacketKind) -> RoutingDecision {
        let node = &self.nodes[holder];
        match &self.state {
            ProtocolState::Amhrp => amhrp::select_forwarder(node, neighbors(&self.nodes, node), &self.sink, kind),
            ProtocolState::Mattempt(state) => {
                mattempt::next_hop(node, kind, state, neighbors(&self.nodes, node), &self.sink)
            }
            ProtocolState::Simple { forwarder } => simple::next_hop(node, kind, *forwarder),
        }
    }

    fn running_temperature(&self, id: NodeId, tally: &RoundTally) -> f64 {
        let p = &self.config.mattempt;
        self.nodes[id].temperature + tally.tx[id] as f64 * p.delta_tx + tally.rx[id] as f64 * p.delta_rx
    }

    /// Carries one packet from its originator as far as it gets this round.
    fn route(
        &mut self,
        mut packet: Packet,
        tally: &mut RoundTally,
        trace: &mut Option<RoundTrace>,
    ) -> Result<(), SimError> {
        let kind = packet.kind();
        let source = packet.source;
        let trace_idx = trace.as_mut().map(|t| {
            t.origination_slots.push(self.slots[&source]);
            t.packets.push(PacketTrace {
                source,
                slot: self.slots[&source],
                kind,
                hops: Vec::new(),
                fate: Fate::Held,
            });
            t.packets.len() - 1
        });
        let log_hop = |trace: &mut Option<RoundTrace>, from, to, sender_alive| {
            if let (Some(t), Some(i)) = (trace.as_mut(), trace_idx) {
                t.packets[i].hops.push(Hop { from, to, sender_alive });
            }
        };
        let mut holder = source;
        let mut originating = true;
        let fate = loop {
            if packet.hop_count() as usize > self.nodes.len() {
                return Err(SimError::Domain(format!("routing loop for packet from node {source}")));
            }
            let decision = self.decide(holder, kind);
            let transmit = if originating {
                if decision.boosted {
                    Action::BoostedSend {
                        multiplier: self.config.mattempt.boost_multiplier,
                    }
                } else {
                    Action::DestinedSend
                }
            } else {
                Action::Forward
            };
            match decision.action {
                RouteAction::Hold if originating => break Fate::Held,
                RouteAction::Hold => break Fate::Dropped,
                RouteAction::Aggregate => {
                    if originating {
                        tally.sent += 1;
                    } else if !self.spend(holder, Action::Forward)? {
                        break Fate::Dropped;
                    }
                    tally.buffer.push((kind, trace_idx));
                    break Fate::Buffered;
                }
                RouteAction::SendToExternalWSN
                    if !originating
                        && matches!(self.state, ProtocolState::Amhrp)
                        && !self.config.amhrp.relay_escalation =>
                {
                    break Fate::Dropped;
                }
                RouteAction::SendToExternalWSN => {
                    if originating {
                        tally.sent += 1;
                    }
                    log_hop(trace, holder, Endpoint::ExternalWsn, self.nodes[holder].alive);
                    if !self.spend(holder, Action::WsnSend)? {
                        break Fate::Dropped;
                    }
                    break Fate::Escalated;
                }
                RouteAction::SendToSink => {
                    if originating {
                        tally.sent += 1;
                    }
                    log_hop(trace, holder, Endpoint::Sink, self.nodes[holder].alive);
                    tally.links.insert((holder, None));
                    tally.tx[holder] += 1;
                    if !self.spend(holder, transmit)? {
                        break Fate::Dropped;
                    }
                    break Fate::Delivered;
                }
                RouteAction::SendToForwarder(next) => {
                    if originating {
                        tally.sent += 1;
                    }
                    log_hop(trace, holder, Endpoint::Node(next), self.nodes[holder].alive);
                    tally.links.insert((holder, Some(next)));
                    tally.tx[holder] += 1;
                    if !self.spend(holder, transmit)? || !self.nodes[next].alive {
                        break Fate::Dropped;
                    }
                    tally.rx[next] += 1;
                    if matches!(self.state, ProtocolState::Mattempt(_))
                        && self.running_temperature(next, tally) > self.config.mattempt.temp_threshold
                    {
                        // Over-threshold relay bounces the packet back.
                        self.spend(next, Action::Forward)?;
                        if let ProtocolState::Mattempt(state) = &mut self.state {
                            state.hotspots[holder].insert(next);
                        }
                        break Fate::Dropped;
                    }
                    packet.relayed();
                    holder = next;
                    originating = false;
                }
            }
        };
        if matches!(fate, Fate::Delivered | Fate::Escalated) {
            tally.received += 1;
            if kind == PacketKind::Critical {
                tally.critical_received += 1;
            }
        }
        if let (Some(t), Some(i)) = (trace.as_mut(), trace_idx) {
            t.packets[i].fate = fate;
        }
        Ok(())
    }

    /// SIMPLE's end-of-round aggregate upload.
    fn flush_aggregate(&mut self, tally: &mut RoundTally, trace: &mut Option<RoundTrace>) -> Result<(), SimError> {
        let ProtocolState::Simple { forwarder: Some(f) } = self.state else {
            return Ok(());
        };
        if tally.buffer.is_empty() {
            return Ok(());
        }
        let buffer = std::mem::take(&mut tally.buffer);
        let alive = self.nodes[f].alive;
        let delivered = alive && {
            tally.links.insert((f, None));
            self.spend(f, Action::DestinedSend)?
        };
        for (kind, idx) in buffer {
            if delivered {
                tally.received += 1;
                if kind == PacketKind::Critical {
                    tally.critical_received += 1;
                }
            }
            if let (Some(t), Some(i)) = (trace.as_mut(), idx) {
                let p = &mut t.packets[i];
                if alive {
                    p.hops.push(Hop {
                        from: f,
                        to: Endpoint::Sink,
                        sender_alive: true,
                    });
                }
                p.fate = if delivered { Fate::Delivered } else { Fate::Dropped };
            }
        }
        Ok(())
    }

    fn mean_path_loss(&mut self, links: &BTreeSet<(NodeId, Option<NodeId>)>) -> Result<Option<f64>, SimError> {
        if links.is_empty() {
            return Ok(None);
        }
        let ch = &self.config.channel;
        let mut sum = 0.0;
        for &(a, b) in links {
            let to = b.map_or(self.sink.position, |b| self.nodes[b].position);
            // The log-distance model starts at the reference distance.
            let d = self.nodes[a].distance_to(to).max(ch.d0);
            let shadow = self.shadow.map_or(0.0, |n| n.sample(&mut self.shadowing));
            sum += path_loss(ch, d, ch.classify(a, b), shadow)?;
        }
        Ok(Some(sum / links.len() as f64))
    }

    fn equilibrium_flag(&self) -> Result<bool, SimError> {
        let share = |part: u64, c: &ActionCounts| {
            let total = c.total();
            if total == 0 {
                0.0
            } else {
                part as f64 / total as f64
            }
        };
        let a: Vec<f64> = self.windows.iter().rev().map(|c| share(c.forwards, c)).collect();
        let b: Vec<f64> = self
            .windows
            .iter()
            .rev()
            .map(|c| share(c.destined_sends + c.wsn_sends, c))
            .collect();
        let n = self.nodes.len() as f64;
        let a0 = self.nodes.iter().map(|n| n.residual_energy).sum::<f64>() / (n * self.config.initial_energy);
        let profile = EquilibriumProfile::new(a0, a, b, self.config.rounds.max(1), self.config.equilibrium.alpha_star)?;
        equilibrium_ok(&profile, self.round as f64)
    }

    /// Advances one round.
    pub fn run_round(&mut self) -> Result<RoundMetrics, SimError> {
        if self.is_finished() {
            return Err(SimError::Usage(format!(
                "run already has {} rounds",
                self.config.rounds
            )));
        }
        let n = self.nodes.len();
        let mut trace = self.tracing.then(|| RoundTrace {
            round: self.round,
            slots: self.slots.clone(),
            ..RoundTrace::default()
        });
        let mut tally = RoundTally {
            tx: vec![0; n],
            rx: vec![0; n],
            ..RoundTally::default()
        };

        self.control_phase()?;
        let packets = self.draw_packets()?;

        let frame: Vec<NodeId> = self.slots.keys().copied().collect();
        let mut packets: Vec<Option<Vec<Packet>>> = packets.into_iter().map(Some).collect();
        for id in frame {
            for packet in packets[id].take().unwrap_or_default() {
                if !self.nodes[id].alive {
                    break;
                }
                if !self.spend(id, Action::SelfComputation)? || !self.nodes[id].alive {
                    continue;
                }
                self.route(packet, &mut tally, &mut trace)?;
            }
        }
        self.flush_aggregate(&mut tally, &mut trace)?;

        if matches!(self.state, ProtocolState::Mattempt(_)) {
            for id in 0..n {
                let t = self.nodes[id].temperature;
                self.nodes[id].temperature =
                    mattempt::temperature_step(&self.config.mattempt, t, tally.tx[id], tally.rx[id]);
            }
        }

        let mean_path_loss = self.mean_path_loss(&tally.links)?;
        let equilibrium_flag = self.equilibrium_flag()?;
        if (self.round + 1).is_multiple_of(self.config.equilibrium.window_rounds) {
            self.windows.push_back(std::mem::take(&mut self.window));
            while self.windows.len() > self.config.equilibrium.windows {
                self.windows.pop_front();
            }
        }

        let total_residual: f64 = self.nodes.iter().map(|n| n.residual_energy).sum();
        let metrics = RoundMetrics {
            round: self.round,
            alive_count: self.nodes.iter().filter(|n| n.alive).count(),
            packets_sent: tally.sent,
            packets_received_at_sink: tally.received,
            critical_received: tally.critical_received,
            total_residual,
            mean_residual: total_residual / n as f64,
            mean_path_loss,
            equilibrium_flag,
        };
        self.last_trace = trace;
        self.round += 1;
        Ok(metrics)
    }
}

/// Runs `config.rounds` rounds, or until every node is dead when
/// `stop_on_all_dead` is set.
pub fn run_simulation(config: &SimConfig) -> Result<RunOutput, SimError> {
    let mut sim = Simulation::new(config)?;
    let mut metrics = Vec::with_capacity(config.rounds as usize);
    while !sim.is_finished() {
        let row = sim.run_round()?;
        let all_dead = row.alive_count == 0;
        metrics.push(row);
        if all_dead && config.stop_on_all_dead {
            break;
        }
    }
    Ok(RunOutput {
        summary: summarize_run(&metrics, config),
        energy_charged: sim.energy_charged(),
        metrics,
    })
}
