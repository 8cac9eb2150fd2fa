//! Vehicle demand and fixed-timestep longitudinal dynamics under a
//! Krauss-style safe-speed rule, honoring signal permissions.

use crate::error::{Error, Result};
use crate::netmodel::RoadNetwork;
use crate::signals::LinkPermission;
use crate::xml;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, VecDeque};

pub const DEFAULT_ACCEL: f64 = 2.6;
pub const DEFAULT_DECEL: f64 = 4.5;
pub const DEFAULT_TAU: f64 = 1.0;
pub const DEFAULT_LENGTH: f64 = 5.0;
pub const DEFAULT_SIGMA: f64 = 0.0;
/// Cap on vehicle speed independent of edge limits.
pub const DEFAULT_MAX_SPEED: f64 = 55.0;
/// Below this speed a vehicle counts as waiting / queued.
pub const WAIT_SPEED: f64 = 0.1;
/// Minimum clear gap required at insertion.
pub const MIN_GAP: f64 = 2.5;

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleRoute {
    pub id: String,
    pub edges: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub id: String,
    pub route: String,
    pub begin: f64,
    pub end: f64,
    pub vehicles_per_hour: f64,
}

impl Flow {
    /// Uniform headway between departures, in seconds.
    pub fn period(&self) -> f64 {
        3600.0 / self.vehicles_per_hour
    }
}

pub fn parse_routes(text: &str) -> Result<(Vec<VehicleRoute>, Vec<Flow>)> {
    let doc = xml::parse_doc(text)?;
    let mut routes = Vec::new();
    for r in xml::elements(&doc, "route") {
        let id = xml::req_attr(&r, "id")?.to_string();
        let edges: Vec<String> = xml::req_attr(&r, "edges")?
            .split_whitespace()
            .map(str::to_string)
            .collect();
        if edges.is_empty() {
            return Err(Error::schema("route", format!("route '{id}' has no edges")));
        }
        routes.push(VehicleRoute { id, edges });
    }
    let mut flows = Vec::new();
    for f in xml::elements(&doc, "flow") {
        let id = xml::req_attr(&f, "id")?.to_string();
        let route = xml::req_attr(&f, "route")?.to_string();
        if !routes.iter().any(|r| r.id == route) {
            return Err(Error::schema("flow", format!("flow '{id}' references unknown route '{route}'")));
        }
        let begin: f64 = xml::req_parse(&f, "begin")?;
        let end: f64 = xml::req_parse(&f, "end")?;
        let vehicles_per_hour: f64 = xml::req_parse(&f, "vehsPerHour")?;
        if begin >= end {
            return Err(Error::schema("flow", format!("flow '{id}': begin must be < end")));
        }
        if !(vehicles_per_hour > 0.0) {
            return Err(Error::schema("flow", format!("flow '{id}': vehsPerHour must be > 0")));
        }
        flows.push(Flow { id, route, begin, end, vehicles_per_hour });
    }
    Ok((routes, flows))
}

/// Krauss safe speed: the fastest speed from which the follower can
/// still avoid hitting a leader that brakes at `b`.
pub fn safe_speed(v: f64, v_leader: f64, gap: f64, b: f64, tau: f64) -> f64 {
    let gap = gap.max(0.0);
    let v_safe = v_leader + (gap - v_leader * tau) / (tau + (v + v_leader) / (2.0 * b));
    v_safe.max(0.0)
}

#[derive(Debug, Clone)]
pub struct Vehicle {
    pub num: u32,
    pub id: String,
    pub route_idx: usize,
    pub route_pos: usize,
    pub edge_idx: usize,
    pub lane: usize,
    /// Front bumper position, meters from edge start.
    pub pos: f64,
    pub speed: f64,
    pub length: f64,
    pub accel: f64,
    pub decel: f64,
    pub tau: f64,
    pub sigma: f64,
    pub max_speed: f64,
    pub accumulated_wait: f64,
}

/// Per-link signal permission view used while stepping vehicles.
pub trait SignalView {
    fn state_char(&self, tl_id: &str, link_index: usize) -> char;
}

/// Treats every link as priority green (no active lights).
pub struct AllGreen;

impl SignalView for AllGreen {
    fn state_char(&self, _: &str, _: usize) -> char {
        'G'
    }
}

impl<F: Fn(&str, usize) -> char> SignalView for F {
    fn state_char(&self, tl_id: &str, link_index: usize) -> char {
        self(tl_id, link_index)
    }
}

#[derive(Debug)]
pub struct SimState {
    pub clock: f64,
    pub network: RoadNetwork,
    pub routes: Vec<VehicleRoute>,
    pub flows: Vec<Flow>,
    pub vehicles: BTreeMap<u32, Vehicle>,
    /// (edge index, lane) -> vehicle nums, front of the lane first.
    pub lanes: BTreeMap<(usize, usize), Vec<u32>>,
    pub inserted: u64,
    pub arrived: u64,
    pub total_wait: f64,
    pub rng: ChaCha8Rng,
    next_num: u32,
    /// Departures already scheduled per flow.
    flow_emitted: Vec<u64>,
    /// Blocked insertions waiting for space, FIFO.
    pending: VecDeque<(usize, String)>,
    route_index: BTreeMap<String, usize>,
}

impl SimState {
    pub fn new(network: RoadNetwork, routes: Vec<VehicleRoute>, flows: Vec<Flow>, seed: u64) -> Self {
        use rand::SeedableRng;
        let route_index = routes
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.clone(), i))
            .collect();
        let flow_emitted = vec![0; flows.len()];
        SimState {
            clock: 0.0,
            network,
            routes,
            flows,
            vehicles: BTreeMap::new(),
            lanes: BTreeMap::new(),
            inserted: 0,
            arrived: 0,
            total_wait: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_num: 0,
            flow_emitted,
            pending: VecDeque::new(),
            route_index,
        }
    }

    pub fn active_count(&self) -> u64 {
        self.vehicles.len() as u64
    }

    fn entry_blocked(&self, edge_idx: usize, lane: usize) -> bool {
        let front = DEFAULT_LENGTH;
        self.lanes
            .get(&(edge_idx, lane))
            .map(|v| {
                v.iter().any(|num| {
                    let veh = &self.vehicles[num];
                    veh.pos - veh.length < front + MIN_GAP
                })
            })
            .unwrap_or(false)
    }

    fn insert_vehicle(&mut self, flow_idx: usize, id: String) {
        let route_idx = self.route_index[&self.flows[flow_idx].route];
        let first_edge = self.network.edge_idx(&self.routes[route_idx].edges[0]).unwrap();
        let lane = 0;
        let num = self.next_num;
        self.next_num += 1;
        let veh = Vehicle {
            num,
            id,
            route_idx,
            route_pos: 0,
            edge_idx: first_edge,
            lane,
            pos: DEFAULT_LENGTH,
            speed: 0.0,
            length: DEFAULT_LENGTH,
            accel: DEFAULT_ACCEL,
            decel: DEFAULT_DECEL,
            tau: DEFAULT_TAU,
            sigma: DEFAULT_SIGMA,
            max_speed: DEFAULT_MAX_SPEED,
            accumulated_wait: 0.0,
        };
        self.lanes.entry((first_edge, lane)).or_default().push(num);
        self.vehicles.insert(num, veh);
        self.inserted += 1;
    }

    /// Schedule and perform due flow departures at the current clock.
    /// Blocked insertions are deferred, never dropped. Returns the nums
    /// of the vehicles inserted this call.
    pub fn spawn_from_flows(&mut self) -> Vec<u32> {
        let mut inserted = Vec::new();

        // Retry deferred insertions first, preserving order per entry lane.
        let mut still_pending = VecDeque::new();
        let mut blocked_lanes: Vec<(usize, usize)> = Vec::new();
        while let Some((flow_idx, id)) = self.pending.pop_front() {
            let route_idx = self.route_index[&self.flows[flow_idx].route];
            let edge_idx = self.network.edge_idx(&self.routes[route_idx].edges[0]).unwrap();
            let key = (edge_idx, 0);
            if blocked_lanes.contains(&key) || self.entry_blocked(edge_idx, 0) {
                blocked_lanes.push(key);
                still_pending.push_back((flow_idx, id));
            } else {
                inserted.push(self.next_num);
                self.insert_vehicle(flow_idx, id);
                // Freshly inserted vehicle occupies the entry zone.
                blocked_lanes.push(key);
            }
        }
        self.pending = still_pending;

        for flow_idx in 0..self.flows.len() {
            loop {
                let flow = &self.flows[flow_idx];
                let k = self.flow_emitted[flow_idx];
                let depart = flow.begin + k as f64 * flow.period();
                if depart > self.clock || depart >= flow.end {
                    break;
                }
                let id = format!("{}.{}", flow.id, k);
                self.flow_emitted[flow_idx] += 1;
                let route_idx = self.route_index[&flow.route];
                let edge_idx = self.network.edge_idx(&self.routes[route_idx].edges[0]).unwrap();
                if self.entry_blocked(edge_idx, 0)
                    || self.pending.iter().any(|(f, _)| {
                        let r = self.route_index[&self.flows[*f].route];
                        self.network.edge_idx(&self.routes[r].edges[0]).unwrap() == edge_idx
                    })
                {
                    self.pending.push_back((flow_idx, id));
                } else {
                    inserted.push(self.next_num);
                    self.insert_vehicle(flow_idx, id);
                }
            }
        }
        inserted
    }

    /// Advance all vehicles by one step of `dt` seconds under the given
    /// signal view. Returns nums of vehicles that arrived this step.
    pub fn step_vehicles(&mut self, view: &dyn SignalView, dt: f64) -> Vec<u32> {
        // Pass 1: new speeds and crossing permissions from the pre-step
        // snapshot, so the update is synchronous.
        let mut decisions: BTreeMap<u32, (f64, bool)> = BTreeMap::new();
        for (&(edge_idx, lane), nums) in &self.lanes {
            let edge = &self.network.edges[edge_idx];
            for (i, &num) in nums.iter().enumerate() {
                let veh = &self.vehicles[&num];
                let mut v_des = (veh.speed + veh.accel * dt)
                    .min(veh.max_speed)
                    .min(edge.speed_limit);
                let mut may_cross = true;

                if i > 0 {
                    let leader = &self.vehicles[&nums[i - 1]];
                    let gap = leader.pos - leader.length - veh.pos;
                    v_des = v_des.min(safe_speed(veh.speed, leader.speed, gap, veh.decel, veh.tau));
                } else {
                    // Lane front: stop line and next-lane tail.
                    let dist_to_end = edge.length - veh.pos;
                    let route = &self.routes[veh.route_idx];
                    if veh.route_pos + 1 < route.edges.len() {
                        let next_idx = self.network.edge_idx(&route.edges[veh.route_pos + 1]).unwrap();
                        let conn = self
                            .network
                            .connection_between(edge_idx, lane, next_idx)
                            .or_else(|| self.network.any_connection(&edge.id, &route.edges[veh.route_pos + 1]));
                        let permission = conn
                            .and_then(|c| c.tl_id.as_ref().map(|tl| (tl, c.link_index.unwrap_or(0))))
                            .map(|(tl, li)| {
                                crate::signals::link_permission(view.state_char(tl, li))
                                    .unwrap_or(LinkPermission::Red)
                            })
                            .unwrap_or(LinkPermission::GreenPriority);
                        let go = match permission {
                            LinkPermission::GreenPriority | LinkPermission::GreenYield => true,
                            // Cross on yellow only when stopping at decel b
                            // before the line is no longer possible.
                            LinkPermission::Yellow => {
                                veh.speed * veh.speed / (2.0 * veh.decel) > dist_to_end
                            }
                            LinkPermission::Red => false,
                        };
                        if go {
                            let to_lane = conn.map(|c| c.to_lane).unwrap_or(0);
                            if let Some(next_nums) = self.lanes.get(&(next_idx, to_lane)) {
                                if let Some(&tail) = next_nums.last() {
                                    let t = &self.vehicles[&tail];
                                    let gap = dist_to_end + t.pos - t.length;
                                    v_des = v_des
                                        .min(safe_speed(veh.speed, t.speed, gap, veh.decel, veh.tau));
                                }
                            }
                        } else {
                            may_cross = false;
                            v_des = v_des
                                .min(safe_speed(veh.speed, 0.0, dist_to_end, veh.decel, veh.tau));
                        }
                    }
                }

                if veh.sigma > 0.0 {
                    v_des -= veh.sigma * veh.accel * dt * self.rng.gen::<f64>();
                }
                decisions.insert(num, (v_des.max(0.0), may_cross));
            }
        }

        // Pass 2: apply positions, lane transfers and arrivals.
        let snapshot: Vec<((usize, usize), Vec<u32>)> =
            self.lanes.iter().map(|(k, v)| (*k, v.clone())).collect();
        let mut arrived_now = Vec::new();
        for ((edge_idx, lane), nums) in snapshot {
            let edge_len = self.network.edges[edge_idx].length;
            let edge_id = self.network.edges[edge_idx].id.clone();
            for num in nums {
                let (new_speed, may_cross) = decisions[&num];
                let veh = self.vehicles.get_mut(&num).unwrap();
                veh.speed = new_speed;
                let mut new_pos = veh.pos + new_speed * dt;
                if !may_cross {
                    new_pos = new_pos.min(edge_len);
                }
                if new_speed < WAIT_SPEED {
                    veh.accumulated_wait += dt;
                    self.total_wait += dt;
                }
                if new_pos < edge_len {
                    veh.pos = new_pos;
                    continue;
                }
                let route = &self.routes[veh.route_idx];
                if veh.route_pos + 1 >= route.edges.len() {
                    // Finished the last route edge.
                    self.remove_from_lane(edge_idx, lane, num);
                    self.vehicles.remove(&num);
                    self.arrived += 1;
                    arrived_now.push(num);
                    continue;
                }
                let next_edge = route.edges[veh.route_pos + 1].clone();
                let next_idx = self.network.edge_idx(&next_edge).unwrap();
                let to_lane = self
                    .network
                    .connection_between(edge_idx, lane, next_idx)
                    .or_else(|| self.network.any_connection(&edge_id, &next_edge))
                    .map(|c| c.to_lane)
                    .unwrap_or(0);
                let veh = self.vehicles.get_mut(&num).unwrap();
                veh.route_pos += 1;
                veh.edge_idx = next_idx;
                veh.lane = to_lane;
                veh.pos = new_pos - edge_len;
                self.remove_from_lane(edge_idx, lane, num);
                self.lanes.entry((next_idx, to_lane)).or_default().push(num);
            }
        }
        arrived_now
    }

    fn remove_from_lane(&mut self, edge_idx: usize, lane: usize, num: u32) {
        if let Some(v) = self.lanes.get_mut(&(edge_idx, lane)) {
            v.retain(|&n| n != num);
            if v.is_empty() {
                self.lanes.remove(&(edge_idx, lane));
            }
        }
    }

    /// Vehicles on a lane that are queued (slower than the waiting
    /// threshold) within `zone` meters of the lane end.
    pub fn queue_length(&self, edge_idx: usize, lane: usize, zone: f64) -> usize {
        let edge_len = self.network.edges[edge_idx].length;
        self.lanes
            .get(&(edge_idx, lane))
            .map(|nums| {
                nums.iter()
                    .filter(|num| {
                        let v = &self.vehicles[num];
                        v.speed < WAIT_SPEED && v.pos >= edge_len - zone
                    })
                    .count()
            })
            .unwrap_or(0)
    }

    /// Conservation invariant: every inserted vehicle is active or arrived.
    pub fn conserved(&self) -> bool {
        self.inserted == self.active_count() + self.arrived
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::netmodel::build_network;

    fn line_state(rate: f64, seed: u64) -> SimState {
        let nodes = crate::netmodel::parse_nodes(fixtures::LINE_NODES).unwrap();
        let edges = crate::netmodel::parse_edges(fixtures::LINE_EDGES).unwrap();
        let net = build_network(nodes, edges, vec![]).unwrap();
        let (routes, flows) = parse_routes(&format!(
            "<routes><route id=\"r\" edges=\"main\"/><flow id=\"f\" route=\"r\" begin=\"0\" end=\"1000\" vehsPerHour=\"{rate}\"/></routes>"
        ))
        .unwrap();
        SimState::new(net, routes, flows, seed)
    }

    #[test]
    fn flow_period_from_rate() {
        let (_, flows) = parse_routes(
            r#"<routes><route id="r1" edges="main"/><flow id="f1" route="r1" begin="0" end="1000" vehsPerHour="600"/></routes>"#,
        )
        .unwrap();
        assert_eq!(flows[0].period(), 6.0);
    }

    #[test]
    fn empty_route_rejected() {
        assert!(parse_routes(r#"<routes><route id="r" edges=""/></routes>"#).is_err());
    }

    #[test]
    fn unknown_route_in_flow_rejected() {
        let err = parse_routes(
            r#"<routes><route id="r" edges="main"/><flow id="f" route="zz" begin="0" end="10" vehsPerHour="1"/></routes>"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("zz"), "{err}");
    }

    #[test]
    fn two_flows_share_a_route() {
        let (routes, flows) = parse_routes(
            r#"<routes><route id="r" edges="main"/>
               <flow id="f1" route="r" begin="0" end="10" vehsPerHour="10"/>
               <flow id="f2" route="r" begin="0" end="10" vehsPerHour="20"/></routes>"#,
        )
        .unwrap();
        assert_eq!(routes.len(), 1);
        assert_eq!(flows.len(), 2);
    }

    #[test]
    fn safe_speed_hand_values() {
        assert!((safe_speed(10.0, 8.0, 20.0, 4.0, 1.0) - 11.6923).abs() < 1e-4);
        assert!((safe_speed(10.0, 0.0, 12.5, 4.0, 1.0) - 5.5556).abs() < 1e-4);
        assert_eq!(safe_speed(5.0, 0.0, 0.0, 4.0, 1.0), 0.0);
    }

    #[test]
    fn uniform_departures() {
        let mut state = line_state(600.0, 1);
        let dt = 0.1;
        let mut departures = Vec::new();
        for i in 0..180 {
            state.clock = i as f64 * dt;
            for num in state.spawn_from_flows() {
                departures.push((state.clock, num));
            }
            state.step_vehicles(&AllGreen, dt);
        }
        let times: Vec<f64> = departures.iter().map(|(t, _)| *t).collect();
        assert_eq!(times.len(), 3);
        assert!((times[0] - 0.0).abs() < 1e-9);
        assert!((times[1] - 6.0).abs() < 1e-6);
        assert!((times[2] - 12.0).abs() < 1e-6);
    }

    #[test]
    fn blocked_insertion_is_deferred_not_dropped() {
        let mut state = line_state(3600.0, 1); // 1 s period, entry saturates
        let dt = 0.1;
        for _ in 0..300 {
            state.spawn_from_flows();
            state.step_vehicles(&AllGreen, dt);
            state.clock += dt;
            assert!(state.conserved());
        }
        assert!(state.inserted > 0);
    }

    #[test]
    fn free_vehicle_accelerates_by_a_dt_per_step() {
        let mut state = line_state(3600.0, 1);
        let dt = 0.1;
        state.spawn_from_flows();
        let num = *state.vehicles.keys().next().unwrap();
        let mut expect = 0.0;
        for _ in 0..80 {
            state.step_vehicles(&AllGreen, dt);
            expect = (expect + 2.6 * dt).min(13.89);
            let v = &state.vehicles[&num];
            assert!((v.speed - expect).abs() < 1e-9);
            state.clock += dt;
        }
        assert!((state.vehicles[&num].speed - 13.89).abs() < 1e-9);
    }

    #[test]
    fn red_light_holds_vehicle_before_stop_line() {
        let (nodes, edges, conns) = fixtures::cross_plain();
        let net = build_network(nodes, edges, conns).unwrap();
        let (routes, flows) = parse_routes(&fixtures::cross_routes_xml(600.0, 0.1, 1.0)).unwrap();
        let mut state = SimState::new(net, routes, flows, 7);
        let all_red = |_: &str, _: usize| 'r';
        let dt = 0.1;
        for _ in 0..2000 {
            state.spawn_from_flows();
            state.step_vehicles(&all_red, dt);
            state.clock += dt;
        }
        assert!(state.arrived == 0);
        let edge_len = 500.0;
        for v in state.vehicles.values() {
            assert!(v.pos <= edge_len + 1e-9, "vehicle {} beyond stop line: {}", v.id, v.pos);
        }
        // The first-inserted vehicle stopped at the line.
        let first = state.vehicles.values().min_by_key(|v| v.num).unwrap();
        assert!(first.speed < WAIT_SPEED);
        assert!(first.pos > edge_len - 1.0);
    }

    #[test]
    fn platoon_never_collides() {
        let mut state = line_state(1800.0, 3);
        let dt = 0.1;
        for _ in 0..1000 {
            state.spawn_from_flows();
            state.step_vehicles(&AllGreen, dt);
            state.clock += dt;
            for nums in state.lanes.values() {
                for pair in nums.windows(2) {
                    let leader = &state.vehicles[&pair[0]];
                    let follower = &state.vehicles[&pair[1]];
                    let gap = leader.pos - leader.length - follower.pos;
                    assert!(gap >= 0.0, "collision: gap {gap}");
                }
            }
        }
    }

    #[test]
    fn speeds_stay_bounded() {
        let mut state = line_state(1200.0, 5);
        let dt = 0.1;
        for _ in 0..2000 {
            state.spawn_from_flows();
            state.step_vehicles(&AllGreen, dt);
            state.clock += dt;
            for v in state.vehicles.values() {
                assert!(v.speed >= 0.0 && v.speed <= 13.89 + 1e-9);
            }
        }
    }
}
