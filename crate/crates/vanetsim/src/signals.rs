//! Traffic-light phase programs: tlLogic parsing, cyclic schedule
//! evaluation, per-link permissions, and lane detectors.

use crate::error::{Error, Result};
use crate::xml;
use std::collections::HashSet;
use std::fmt::Write as _;

pub const STATE_ALPHABET: [char; 4] = ['G', 'g', 'y', 'r'];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkPermission {
    GreenPriority,
    GreenYield,
    Yellow,
    Red,
}

pub fn link_permission(c: char) -> Result<LinkPermission> {
    match c {
        'G' => Ok(LinkPermission::GreenPriority),
        'g' => Ok(LinkPermission::GreenYield),
        'y' => Ok(LinkPermission::Yellow),
        'r' => Ok(LinkPermission::Red),
        other => Err(Error::schema("phase", format!("invalid state character '{other}'"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub duration: f64,
    pub state: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProgramOrigin {
    StaticFile,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProgram {
    pub tl_id: String,
    pub program_id: String,
    pub offset: f64,
    pub phases: Vec<Phase>,
    pub origin: ProgramOrigin,
}

/// How to reconcile phase state lengths against the controlled link count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthMode {
    Strict,
    Permissive,
}

impl PhaseProgram {
    pub fn cycle(&self) -> f64 {
        self.phases.iter().map(|p| p.duration).sum()
    }

    pub fn phase_index_at(&self, t: f64) -> usize {
        let cycle = self.cycle();
        let mut u = (t + self.offset) % cycle;
        if u < 0.0 {
            u += cycle;
        }
        let mut acc = 0.0;
        for (i, p) in self.phases.iter().enumerate() {
            acc += p.duration;
            if u < acc {
                return i;
            }
        }
        self.phases.len() - 1
    }

    /// State string active at time `t` (half-open phase intervals).
    pub fn state_at(&self, t: f64) -> &str {
        &self.phases[self.phase_index_at(t)].state
    }

    /// First cycle-start instant strictly after `t`.
    pub fn next_cycle_start(&self, t: f64) -> f64 {
        let cycle = self.cycle();
        let into = (t + self.offset).rem_euclid(cycle);
        // A clock sitting exactly on a boundary is already at a cycle start.
        if into < 1e-9 || cycle - into < 1e-9 {
            return t;
        }
        let k = ((t + self.offset) / cycle).floor() + 1.0;
        k * cycle - self.offset
    }

    /// Check state lengths against `link_count`. Strict mode errors on any
    /// mismatch; permissive mode pads with 'r' or truncates, returning
    /// one warning per adjusted phase.
    pub fn normalize(&self, link_count: usize, mode: LengthMode) -> Result<(PhaseProgram, Vec<String>)> {
        let mut out = self.clone();
        let mut warnings = Vec::new();
        for (i, p) in out.phases.iter_mut().enumerate() {
            let len = p.state.chars().count();
            if len == link_count {
                continue;
            }
            match mode {
                LengthMode::Strict => {
                    return Err(Error::Validation(format!(
                        "tl '{}' program '{}' phase {}: state '{}' has length {} but the light controls {} links",
                        self.tl_id, self.program_id, i, p.state, len, link_count
                    )));
                }
                LengthMode::Permissive => {
                    warnings.push(format!(
                        "tl '{}' program '{}' phase {}: state length {} adjusted to {}",
                        self.tl_id, self.program_id, i, len, link_count
                    ));
                    if len < link_count {
                        p.state.extend(std::iter::repeat_n('r', link_count - len));
                    } else {
                        p.state = p.state.chars().take(link_count).collect();
                    }
                }
            }
        }
        Ok((out, warnings))
    }
}

pub fn parse_tl_programs(text: &str) -> Result<Vec<PhaseProgram>> {
    let doc = xml::parse_doc(text)?;
    let mut out: Vec<PhaseProgram> = Vec::new();
    let mut seen = HashSet::new();
    for tl in xml::elements(&doc, "tlLogic") {
        let tl_id = xml::req_attr(&tl, "id")?.to_string();
        let program_id = xml::req_attr(&tl, "programID")?.to_string();
        let offset: f64 = xml::opt_parse(&tl, "offset")?.unwrap_or(0.0);
        if !seen.insert((tl_id.clone(), program_id.clone())) {
            return Err(Error::schema(
                "tlLogic",
                format!("duplicate program '{program_id}' for tl '{tl_id}'"),
            ));
        }
        let mut phases = Vec::new();
        for ph in tl.children().filter(|n| n.has_tag_name("phase")) {
            let duration: f64 = xml::req_parse(&ph, "duration")?;
            if !(duration > 0.0) {
                return Err(Error::schema("phase", format!("duration must be > 0, got {duration}")));
            }
            let state = xml::req_attr(&ph, "state")?.to_string();
            if state.is_empty() {
                return Err(Error::schema("phase", "empty state string"));
            }
            for c in state.chars() {
                link_permission(c)?;
            }
            phases.push(Phase { duration, state });
        }
        if phases.is_empty() {
            return Err(Error::schema("tlLogic", format!("tl '{tl_id}': no phases")));
        }
        out.push(PhaseProgram {
            tl_id,
            program_id,
            offset,
            phases,
            origin: ProgramOrigin::StaticFile,
        });
    }
    Ok(out)
}

pub fn write_tl_programs(programs: &[PhaseProgram]) -> String {
    let mut s = String::from("<additional>\n");
    for p in programs {
        writeln!(
            s,
            "  <tlLogic id=\"{}\" type=\"static\" programID=\"{}\" offset=\"{}\">",
            p.tl_id, p.program_id, p.offset
        )
        .unwrap();
        for ph in &p.phases {
            writeln!(s, "    <phase duration=\"{}\" state=\"{}\"/>", ph.duration, ph.state).unwrap();
        }
        s.push_str("  </tlLogic>\n");
    }
    s.push_str("</additional>\n");
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detector {
    pub id: String,
    pub edge: String,
    pub lane: usize,
    pub pos: f64,
    pub window: f64,
    pub queue_zone: f64,
}

pub const DEFAULT_WINDOW: f64 = 60.0;
pub const DEFAULT_QUEUE_ZONE: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DetectorReading {
    pub count: usize,
    pub mean_speed: f64,
    pub occupancy: f64,
    pub queue_length: usize,
}

/// Lane references use the SUMO convention `<edge id>_<lane index>`.
fn split_lane_ref(lane: &str) -> Result<(String, usize)> {
    let (edge, idx) = lane
        .rsplit_once('_')
        .ok_or_else(|| Error::schema("detector", format!("bad lane reference '{lane}'")))?;
    let idx = idx
        .parse()
        .map_err(|_| Error::schema("detector", format!("bad lane index in '{lane}'")))?;
    Ok((edge.to_string(), idx))
}

pub fn parse_detectors(text: &str) -> Result<Vec<Detector>> {
    let doc = xml::parse_doc(text)?;
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for d in doc
        .descendants()
        .filter(|n| n.has_tag_name("detector") || n.has_tag_name("e1Detector"))
    {
        let id = xml::req_attr(&d, "id")?.to_string();
        if !ids.insert(id.clone()) {
            return Err(Error::schema("detector", format!("duplicate id '{id}'")));
        }
        let (edge, lane) = split_lane_ref(xml::req_attr(&d, "lane")?)?;
        let pos: f64 = xml::req_parse(&d, "pos")?;
        let window: f64 = xml::opt_parse(&d, "window")?.unwrap_or(DEFAULT_WINDOW);
        let queue_zone: f64 = xml::opt_parse(&d, "queueZone")?.unwrap_or(DEFAULT_QUEUE_ZONE);
        if !(window > 0.0) {
            return Err(Error::schema("detector", format!("'{id}': window must be > 0")));
        }
        out.push(Detector {
            id,
            edge,
            lane,
            pos,
            window,
            queue_zone,
        });
    }
    Ok(out)
}

/// Read a detector against the current vehicle state. `crossings` holds
/// the timestamps at which vehicle fronts passed the detector position.
/// count covers the trailing `window`; speed/occupancy/queue cover the
/// zone [pos - queue_zone, pos] on the detector's lane.
pub fn read_detector(
    d: &Detector,
    state: &crate::mobility::SimState,
    crossings: &[f64],
    clock: f64,
) -> DetectorReading {
    let count = crossings
        .iter()
        .filter(|&&t| t > clock - d.window && t <= clock)
        .count();
    let mut reading = DetectorReading {
        count,
        ..Default::default()
    };
    let Some(edge_idx) = state.network.edge_idx(&d.edge) else {
        return reading;
    };
    let zone_start = d.pos - d.queue_zone;
    let mut speeds = 0.0;
    let mut n = 0usize;
    let mut occupied = 0.0;
    if let Some(nums) = state.lanes.get(&(edge_idx, d.lane)) {
        for num in nums {
            let v = &state.vehicles[num];
            if v.pos >= zone_start && v.pos <= d.pos {
                n += 1;
                speeds += v.speed;
                occupied += v.length;
                if v.speed < crate::mobility::WAIT_SPEED {
                    reading.queue_length += 1;
                }
            }
        }
    }
    if n > 0 {
        reading.mean_speed = speeds / n as f64;
    }
    reading.occupancy = (occupied / d.queue_zone).clamp(0.0, 1.0);
    reading
}
