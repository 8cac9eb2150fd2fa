//! V2V layer: unit-disk connectivity over vehicle positions, an AODV
//! subset (RREQ flood / RREP reverse path / RERR on link break), CBR
//! traffic sources and delivery metrics.

use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

#[derive(Debug, Clone, PartialEq)]
pub struct RadioConfig {
    pub range: f64,
    pub per_hop_latency: f64,
    pub packet_size_bits: u64,
    pub cbr_rate: f64,
    pub rreq_ttl: u32,
    pub route_lifetime: f64,
    /// Per-hop loss probability hook; 0 disables.
    pub loss_prob: f64,
    /// Explicit CBR source/destination pairs. Empty means the
    /// first-inserted vehicle sends to the most recently inserted one.
    pub pairs: Vec<(String, String)>,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            range: 250.0,
            per_hop_latency: 0.01,
            packet_size_bits: 4096,
            cbr_rate: 4.0,
            rreq_ttl: 16,
            route_lifetime: 10.0,
            loss_prob: 0.0,
            pairs: Vec::new(),
        }
    }
}

pub type Positions = BTreeMap<String, (f64, f64)>;
pub type Adjacency = BTreeMap<String, Vec<String>>;

/// Undirected unit-disk graph: an edge iff Euclidean distance <= range.
pub fn connectivity_graph(positions: &Positions, range: f64) -> Adjacency {
    let mut adj: Adjacency = positions.keys().map(|k| (k.clone(), Vec::new())).collect();
    let items: Vec<(&String, &(f64, f64))> = positions.iter().collect();
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            let (a, &(ax, ay)) = items[i];
            let (b, &(bx, by)) = items[j];
            let d2 = (ax - bx).powi(2) + (ay - by).powi(2);
            if d2 <= range * range {
                adj.get_mut(a).unwrap().push(b.clone());
                adj.get_mut(b).unwrap().push(a.clone());
            }
        }
    }
    adj
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteEntry {
    pub destination: String,
    pub next_hop: String,
    pub hop_count: u32,
    pub dest_sequence_number: u64,
    pub expires_at: f64,
    /// Upstream nodes routing through this entry; notified on RERR.
    pub precursors: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Sent,
    Forwarded,
    Delivered,
    Dropped,
    Rreq,
    Rrep,
    Rerr,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Sent => "SENT",
            EventKind::Forwarded => "FORWARDED",
            EventKind::Delivered => "DELIVERED",
            EventKind::Dropped => "DROPPED",
            EventKind::Rreq => "RREQ",
            EventKind::Rrep => "RREP",
            EventKind::Rerr => "RERR",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "SENT" => EventKind::Sent,
            "FORWARDED" => EventKind::Forwarded,
            "DELIVERED" => EventKind::Delivered,
            "DROPPED" => EventKind::Dropped,
            "RREQ" => EventKind::Rreq,
            "RREP" => EventKind::Rrep,
            "RERR" => EventKind::Rerr,
            other => return Err(Error::Validation(format!("unknown event '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetEvent {
    pub t: f64,
    pub kind: EventKind,
    pub packet_src: String,
    pub packet_seq: u64,
    pub node: String,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetMetrics {
    pub sent: u64,
    pub received: u64,
    pub pdf: f64,
    pub avg_packets_per_s: f64,
    pub avg_bits_per_s: f64,
}

/// Delivery metrics from the counters the event log captures.
/// `pdf` is 0 by convention when nothing was sent.
pub fn compute_metrics(sent: u64, received: u64, delivered_bits: u64, duration: f64) -> NetMetrics {
    NetMetrics {
        sent,
        received,
        pdf: if sent > 0 { received as f64 / sent as f64 } else { 0.0 },
        avg_packets_per_s: received as f64 / duration,
        avg_bits_per_s: delivered_bits as f64 / duration,
    }
}

/// Recompute metrics from a persisted event log.
pub fn metrics_from_events(events: &[NetEvent], duration: f64) -> NetMetrics {
    let sent = events.iter().filter(|e| e.kind == EventKind::Sent).count() as u64;
    let mut received = 0u64;
    let mut bits = 0u64;
    for e in events.iter().filter(|e| e.kind == EventKind::Delivered) {
        received += 1;
        for part in e.detail.split(';') {
            if let Some(v) = part.strip_prefix("bits=") {
                bits += v.parse::<u64>().unwrap_or(0);
            }
        }
    }
    compute_metrics(sent, received, bits, duration)
}

/// Per-node routing tables plus AODV sequence-number state.
#[derive(Debug, Default)]
pub struct AodvState {
    pub tables: BTreeMap<String, BTreeMap<String, RouteEntry>>,
    seq: BTreeMap<String, u64>,
    rreq_id: u64,
}

impl AodvState {
    pub fn route(&self, node: &str, dst: &str, clock: f64) -> Option<&RouteEntry> {
        self.tables
            .get(node)
            .and_then(|t| t.get(dst))
            .filter(|e| e.expires_at > clock)
    }

    fn install(&mut self, node: &str, entry: RouteEntry) {
        self.tables
            .entry(node.to_string())
            .or_default()
            .insert(entry.destination.clone(), entry);
    }

    /// RREQ flood as a TTL-bounded breadth-first search with duplicate
    /// suppression; equal-hop ties resolve to the lexicographically
    /// smallest upstream neighbor. On success the RREP unicast installs
    /// forward routes along the discovered path and reverse routes back
    /// to the origin. Returns the path when found.
    #[allow(clippy::too_many_arguments)]
    pub fn discover(
        &mut self,
        src: &str,
        dst: &str,
        graph: &Adjacency,
        clock: f64,
        ttl: u32,
        lifetime: f64,
        events: &mut Vec<NetEvent>,
        packet: (&str, u64),
    ) -> Option<Vec<String>> {
        assert_ne!(src, dst);
        self.rreq_id += 1;
        let origin_seq = {
            let s = self.seq.entry(src.to_string()).or_insert(0);
            *s += 1;
            *s
        };
        events.push(NetEvent {
            t: clock,
            kind: EventKind::Rreq,
            packet_src: packet.0.to_string(),
            packet_seq: packet.1,
            node: src.to_string(),
            detail: format!("dst={dst};rreq_id={};ttl={ttl}", self.rreq_id),
        });

        if !graph.contains_key(src) || !graph.contains_key(dst) {
            events.push(drop_discovery(clock, packet, src, dst));
            return None;
        }

        // BFS with parent tracking; queue kept in insertion order, and
        // neighbors visited in lexicographic order.
        let mut parent: HashMap<&str, &str> = HashMap::new();
        let mut depth: HashMap<&str, u32> = HashMap::new();
        let mut queue: VecDeque<&str> = VecDeque::new();
        depth.insert(src, 0);
        queue.push_back(src);
        let mut responder: Option<&str> = None;
        'bfs: while let Some(u) = queue.pop_front() {
            let d = depth[u];
            if d >= ttl {
                continue;
            }
            let mut neighbors: Vec<&String> = graph[u].iter().collect();
            neighbors.sort();
            for v in neighbors {
                if depth.contains_key(v.as_str()) {
                    continue; // duplicate (origin, rreq_id) suppressed
                }
                depth.insert(v, d + 1);
                parent.insert(v, u);
                // The destination, or an intermediate node holding a
                // fresh route to it, answers the flood.
                if v == dst || self.route(v, dst, clock).is_some() {
                    responder = Some(v);
                    break 'bfs;
                }
                queue.push_back(v);
            }
        }
        let Some(responder) = responder else {
            events.push(drop_discovery(clock, packet, src, dst));
            return None;
        };

        // Reconstruct src -> responder, then extend over the responder's
        // stored next hops to the destination.
        let mut path: Vec<String> = Vec::new();
        let mut cur = responder;
        path.push(cur.to_string());
        while cur != src {
            cur = parent[cur];
            path.push(cur.to_string());
        }
        path.reverse();
        if path.last().map(String::as_str) != Some(dst) {
            let mut node = path.last().unwrap().clone();
            while node != dst {
                let next = self.route(&node, dst, clock).unwrap().next_hop.clone();
                path.push(next.clone());
                node = next;
            }
        }

        let dst_seq = {
            let s = self.seq.entry(dst.to_string()).or_insert(0);
            *s += 1;
            *s
        };
        let total = (path.len() - 1) as u32;
        for (i, node) in path.iter().enumerate() {
            if i + 1 < path.len() {
                // forward route toward dst
                let mut entry = RouteEntry {
                    destination: dst.to_string(),
                    next_hop: path[i + 1].clone(),
                    hop_count: total - i as u32,
                    dest_sequence_number: dst_seq,
                    expires_at: clock + lifetime,
                    precursors: BTreeSet::new(),
                };
                if i > 0 {
                    entry.precursors.insert(path[i - 1].clone());
                }
                self.install(node, entry);
            }
            if i > 0 {
                // reverse route toward the origin
                let mut entry = RouteEntry {
                    destination: src.to_string(),
                    next_hop: path[i - 1].clone(),
                    hop_count: i as u32,
                    dest_sequence_number: origin_seq,
                    expires_at: clock + lifetime,
                    precursors: BTreeSet::new(),
                };
                if i + 1 < path.len() {
                    entry.precursors.insert(path[i + 1].clone());
                }
                self.install(node, entry);
            }
        }
        events.push(NetEvent {
            t: clock,
            kind: EventKind::Rrep,
            packet_src: packet.0.to_string(),
            packet_seq: packet.1,
            node: dst.to_string(),
            detail: format!("src={src};hops={total}"),
        });
        Some(path)
    }

    /// Invalidate the route toward `dst` at `node` and propagate RERR to
    /// precursors recursively.
    pub fn invalidate(
        &mut self,
        node: &str,
        dst: &str,
        clock: f64,
        events: &mut Vec<NetEvent>,
        packet: (&str, u64),
    ) {
        let mut stack = vec![node.to_string()];
        while let Some(n) = stack.pop() {
            let removed = self.tables.get_mut(&n).and_then(|t| t.remove(dst));
            if let Some(entry) = removed {
                events.push(NetEvent {
                    t: clock,
                    kind: EventKind::Rerr,
                    packet_src: packet.0.to_string(),
                    packet_seq: packet.1,
                    node: n.clone(),
                    detail: format!("dst={dst}"),
                });
                stack.extend(entry.precursors);
            }
        }
    }
}

fn drop_discovery(clock: f64, packet: (&str, u64), src: &str, dst: &str) -> NetEvent {
    NetEvent {
        t: clock,
        kind: EventKind::Dropped,
        packet_src: packet.0.to_string(),
        packet_seq: packet.1,
        node: src.to_string(),
        detail: format!("no_route;dst={dst}"),
    }
}

#[derive(Debug, Clone)]
struct InFlight {
    src: String,
    seq: u64,
    dst: String,
    size: u64,
    created_at: f64,
    at_node: String,
    ready_at: f64,
    hops: u32,
    retried: bool,
}

/// The network layer stepped synchronously with mobility.
#[derive(Debug)]
pub struct NetLayer {
    pub config: RadioConfig,
    pub aodv: AodvState,
    pub events: Vec<NetEvent>,
    pub sent: u64,
    pub received: u64,
    pub delivered_bits: u64,
    in_flight: Vec<InFlight>,
    cbr_credit: HashMap<String, f64>,
    next_seq: HashMap<String, u64>,
}

impl NetLayer {
    pub fn new(config: RadioConfig) -> Self {
        NetLayer {
            config,
            aodv: AodvState::default(),
            events: Vec::new(),
            sent: 0,
            received: 0,
            delivered_bits: 0,
            in_flight: Vec::new(),
            cbr_credit: HashMap::new(),
            next_seq: HashMap::new(),
        }
    }

    fn active_pairs(&self, positions: &Positions, insertion_order: &[String]) -> Vec<(String, String)> {
        if !self.config.pairs.is_empty() {
            return self
                .config
                .pairs
                .iter()
                .filter(|(a, b)| positions.contains_key(a) && positions.contains_key(b))
                .cloned()
                .collect();
        }
        // Default pairing: first inserted active vehicle sends to the
        // most recently inserted active one.
        let active: Vec<&String> = insertion_order
            .iter()
            .filter(|id| positions.contains_key(*id))
            .collect();
        match (active.first(), active.last()) {
            (Some(&a), Some(&b)) if a != b => vec![(a.clone(), b.clone())],
            _ => Vec::new(),
        }
    }

    /// Advance the network layer across [clock, clock+dt): emit CBR
    /// packets, forward in-flight packets hop by hop, handle breaks.
    pub fn step(
        &mut self,
        positions: &Positions,
        insertion_order: &[String],
        clock: f64,
        dt: f64,
    ) {
        let graph = connectivity_graph(positions, self.config.range);

        for (src, dst) in self.active_pairs(positions, insertion_order) {
            let credit = self.cbr_credit.entry(src.clone()).or_insert(0.0);
            *credit += self.config.cbr_rate * dt;
            while *credit >= 1.0 {
                *credit -= 1.0;
                let seq = {
                    let s = self.next_seq.entry(src.clone()).or_insert(0);
                    *s += 1;
                    *s
                };
                self.sent += 1;
                self.events.push(NetEvent {
                    t: clock,
                    kind: EventKind::Sent,
                    packet_src: src.clone(),
                    packet_seq: seq,
                    node: src.clone(),
                    detail: format!("dst={dst};bits={}", self.config.packet_size_bits),
                });
                self.in_flight.push(InFlight {
                    src: src.clone(),
                    seq,
                    dst: dst.clone(),
                    size: self.config.packet_size_bits,
                    created_at: clock,
                    at_node: src.clone(),
                    ready_at: clock + self.config.per_hop_latency,
                    hops: 0,
                    retried: false,
                });
            }
        }

        let horizon = clock + dt;
        let mut still: Vec<InFlight> = Vec::new();
        let mut packets = std::mem::take(&mut self.in_flight);
        'packets: for mut p in packets.drain(..) {
            // Each iteration performs one hop at time p.ready_at.
            while p.ready_at <= horizon {
                let hop_time = p.ready_at;
                let key = (p.src.clone(), p.seq);
                let next = match self.aodv.route(&p.at_node, &p.dst, clock) {
                    Some(e) => e.next_hop.clone(),
                    None => {
                        if self.rediscover(&mut p, &graph, clock) {
                            continue;
                        }
                        self.events.push(NetEvent {
                            t: hop_time,
                            kind: EventKind::Dropped,
                            packet_src: key.0.clone(),
                            packet_seq: key.1,
                            node: p.at_node.clone(),
                            detail: "no_route".into(),
                        });
                        continue 'packets;
                    }
                };
                let connected = graph
                    .get(&p.at_node)
                    .map(|ns| ns.contains(&next))
                    .unwrap_or(false);
                if !connected {
                    // Link break: invalidate, RERR, one rediscovery.
                    let at = p.at_node.clone();
                    let dst = p.dst.clone();
                    self.aodv.invalidate(&at, &dst, clock, &mut self.events, (key.0.as_str(), key.1));
                    if self.rediscover(&mut p, &graph, clock) {
                        continue;
                    }
                    self.events.push(NetEvent {
                        t: hop_time,
                        kind: EventKind::Dropped,
                        packet_src: key.0.clone(),
                        packet_seq: key.1,
                        node: p.at_node.clone(),
                        detail: "link_break".into(),
                    });
                    continue 'packets;
                }
                p.at_node = next;
                p.hops += 1;
                if p.at_node == p.dst {
                    self.received += 1;
                    self.delivered_bits += p.size;
                    self.events.push(NetEvent {
                        t: hop_time,
                        kind: EventKind::Delivered,
                        packet_src: p.src.clone(),
                        packet_seq: p.seq,
                        node: p.dst.clone(),
                        detail: format!(
                            "hops={};bits={};latency={:.3}",
                            p.hops,
                            p.size,
                            hop_time - p.created_at
                        ),
                    });
                    continue 'packets;
                }
                self.events.push(NetEvent {
                    t: hop_time,
                    kind: EventKind::Forwarded,
                    packet_src: key.0.clone(),
                    packet_seq: key.1,
                    node: p.at_node.clone(),
                    detail: format!("hops={}", p.hops),
                });
                p.ready_at = hop_time + self.config.per_hop_latency;
            }
            still.push(p);
        }
        self.in_flight = still;
    }

    fn rediscover(&mut self, p: &mut InFlight, graph: &Adjacency, clock: f64) -> bool {
        if p.retried {
            return false;
        }
        p.retried = true;
        if p.at_node == p.dst {
            return true;
        }
        self.aodv
            .discover(
                &p.at_node.clone(),
                &p.dst.clone(),
                graph,
                clock,
                self.config.rreq_ttl,
                self.config.route_lifetime,
                &mut self.events,
                (&p.src.clone(), p.seq),
            )
            .is_some()
    }

    pub fn metrics(&self, duration: f64) -> NetMetrics {
        compute_metrics(self.sent, self.received, self.delivered_bits, duration)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_positions(n: usize, spacing: f64) -> Positions {
        (0..n)
            .map(|i| (format!("v{i}"), (i as f64 * spacing, 0.0)))
            .collect()
    }

    #[test]
    fn single_vehicle_has_empty_adjacency() {
        let g = connectivity_graph(&line_positions(1, 0.0), 250.0);
        assert!(g["v0"].is_empty());
    }

    #[test]
    fn range_boundary_is_inclusive() {
        let mut pos = Positions::new();
        pos.insert("a".into(), (0.0, 0.0));
        pos.insert("b".into(), (250.0, 0.0));
        let g = connectivity_graph(&pos, 250.0);
        assert_eq!(g["a"], vec!["b".to_string()]);
        pos.insert("b".into(), (250.0001, 0.0));
        let g = connectivity_graph(&pos, 250.0);
        assert!(g["a"].is_empty());
    }

    #[test]
    fn line_of_five_is_a_path_graph() {
        let g = connectivity_graph(&line_positions(5, 200.0), 250.0);
        assert_eq!(g["v0"].len(), 1);
        assert_eq!(g["v1"].len(), 2);
        assert_eq!(g["v2"].len(), 2);
        assert_eq!(g["v4"].len(), 1);
    }

    #[test]
    fn graph_is_symmetric_and_irreflexive() {
        let g = connectivity_graph(&line_positions(6, 180.0), 250.0);
        for (n, neigh) in &g {
            assert!(!neigh.contains(n));
            for m in neigh {
                assert!(g[m].contains(n));
            }
        }
    }

    #[test]
    fn discover_on_a_line_installs_bfs_routes() {
        let g = connectivity_graph(&line_positions(3, 200.0), 250.0);
        let mut aodv = AodvState::default();
        let mut ev = Vec::new();
        let path = aodv
            .discover("v0", "v2", &g, 0.0, 16, 10.0, &mut ev, ("v0", 1))
            .unwrap();
        assert_eq!(path, vec!["v0", "v1", "v2"]);
        let e = aodv.route("v0", "v2", 0.0).unwrap();
        assert_eq!(e.next_hop, "v1");
        assert_eq!(e.hop_count, 2);
        // Reverse route installed at the destination.
        let r = aodv.route("v2", "v0", 0.0).unwrap();
        assert_eq!(r.next_hop, "v1");
    }

    #[test]
    fn direct_neighbor_discovery() {
        let g = connectivity_graph(&line_positions(2, 100.0), 250.0);
        let mut aodv = AodvState::default();
        let mut ev = Vec::new();
        aodv.discover("v0", "v1", &g, 0.0, 16, 10.0, &mut ev, ("v0", 1))
            .unwrap();
        let e = aodv.route("v0", "v1", 0.0).unwrap();
        assert_eq!(e.hop_count, 1);
        assert_eq!(e.next_hop, "v1");
    }

    #[test]
    fn disconnected_pair_fails_without_table_change() {
        let mut pos = Positions::new();
        pos.insert("a".into(), (0.0, 0.0));
        pos.insert("b".into(), (1000.0, 0.0));
        let g = connectivity_graph(&pos, 250.0);
        let mut aodv = AodvState::default();
        let mut ev = Vec::new();
        assert!(aodv.discover("a", "b", &g, 0.0, 16, 10.0, &mut ev, ("a", 1)).is_none());
        assert!(aodv.route("a", "b", 0.0).is_none());
        assert!(ev.iter().any(|e| e.kind == EventKind::Dropped));
    }

    #[test]
    fn routes_expire() {
        let g = connectivity_graph(&line_positions(2, 100.0), 250.0);
        let mut aodv = AodvState::default();
        let mut ev = Vec::new();
        aodv.discover("v0", "v1", &g, 0.0, 16, 10.0, &mut ev, ("v0", 1));
        assert!(aodv.route("v0", "v1", 9.9).is_some());
        assert!(aodv.route("v0", "v1", 10.1).is_none());
    }

    #[test]
    fn static_pair_cbr_is_lossless() {
        let mut pos = Positions::new();
        pos.insert("a".into(), (0.0, 0.0));
        pos.insert("b".into(), (100.0, 0.0));
        let order = vec!["a".to_string(), "b".to_string()];
        let mut net = NetLayer::new(RadioConfig::default());
        let dt = 0.1;
        let mut clock = 0.0;
        for _ in 0..100 {
            net.step(&pos, &order, clock, dt);
            clock += dt;
        }
        assert_eq!(net.sent, 40);
        assert_eq!(net.received, 40);
        let m = net.metrics(10.0);
        assert_eq!(m.pdf, 1.0);
        assert_eq!(m.avg_packets_per_s, 4.0);
        assert_eq!(m.avg_bits_per_s, 16384.0);
    }

    #[test]
    fn three_hop_latency() {
        let pos = line_positions(4, 200.0);
        let order: Vec<String> = (0..4).map(|i| format!("v{i}")).collect();
        let mut net = NetLayer::new(RadioConfig {
            pairs: vec![("v0".into(), "v3".into())],
            ..Default::default()
        });
        let dt = 0.1;
        let mut clock = 0.0;
        for _ in 0..20 {
            net.step(&pos, &order, clock, dt);
            clock += dt;
        }
        let delivered: Vec<&NetEvent> = net
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Delivered)
            .collect();
        assert!(!delivered.is_empty());
        for e in delivered {
            assert!(e.detail.contains("hops=3"), "{}", e.detail);
            let latency: f64 = e
                .detail
                .split(';')
                .find_map(|p| p.strip_prefix("latency="))
                .unwrap()
                .parse()
                .unwrap();
            assert!((latency - 0.03).abs() <= dt + 1e-9);
        }
    }

    #[test]
    fn partition_drops_in_flight_packets() {
        let mut pos = line_positions(3, 200.0);
        let order: Vec<String> = (0..3).map(|i| format!("v{i}")).collect();
        let mut net = NetLayer::new(RadioConfig {
            pairs: vec![("v0".into(), "v2".into())],
            ..Default::default()
        });
        let dt = 0.1;
        let mut clock = 0.0;
        for _ in 0..10 {
            net.step(&pos, &order, clock, dt);
            clock += dt;
        }
        assert!(net.received > 0);
        // Move the relay out of range: the path breaks.
        pos.insert("v1".into(), (10_000.0, 0.0));
        let received_before = net.received;
        for _ in 0..10 {
            net.step(&pos, &order, clock, dt);
            clock += dt;
        }
        assert_eq!(net.received, received_before);
        assert!(net.events.iter().any(|e| e.kind == EventKind::Rerr || e.kind == EventKind::Dropped));
        let m = net.metrics(clock);
        assert!(m.pdf < 1.0);
        assert!(m.received <= m.sent);
    }

    #[test]
    fn metrics_match_table_ratio() {
        let m = compute_metrics(10_000, 8626, 0, 1.0);
        assert_eq!(m.pdf, 0.8626);
    }

    #[test]
    fn zero_sent_pdf_is_zero() {
        assert_eq!(compute_metrics(0, 0, 0, 10.0).pdf, 0.0);
    }

    #[test]
    fn event_log_metrics_match_counters() {
        let pos = line_positions(4, 200.0);
        let order: Vec<String> = (0..4).map(|i| format!("v{i}")).collect();
        let mut net = NetLayer::new(RadioConfig {
            pairs: vec![("v0".into(), "v3".into())],
            ..Default::default()
        });
        let mut clock = 0.0;
        for _ in 0..50 {
            net.step(&pos, &order, clock, 0.1);
            clock += 0.1;
        }
        let a = net.metrics(5.0);
        let b = metrics_from_events(&net.events, 5.0);
        assert_eq!(a, b);
    }
}
