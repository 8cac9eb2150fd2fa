//! Scenario configuration: the top-level XML config referencing the
//! plain input files, plus cross-file validation of the whole bundle.

use crate::adaptive::{AdaptiveConfig, ApproachSpec, LoadMetric};
use crate::error::{Error, Result};
use crate::mobility::{self, Flow, VehicleRoute};
use crate::netmodel::{self, RoadNetwork};
use crate::signals::{self, Detector, LengthMode, PhaseProgram};
use crate::vanet::RadioConfig;
use crate::xml;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub nodes_path: PathBuf,
    pub edges_path: PathBuf,
    pub connections_path: PathBuf,
    pub routes_path: PathBuf,
    pub detectors_path: PathBuf,
    pub tllogic_path: PathBuf,
    pub begin: f64,
    pub end: f64,
    pub step_length: f64,
    pub seed: u64,
    pub radio: Option<RadioConfig>,
    pub adaptive: Option<AdaptiveConfig>,
}

/// A fully loaded and cross-validated scenario.
#[derive(Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub network: RoadNetwork,
    pub routes: Vec<VehicleRoute>,
    pub flows: Vec<Flow>,
    pub detectors: Vec<Detector>,
    pub programs: Vec<PhaseProgram>,
    /// Permissive-mode length adjustments, if any.
    pub warnings: Vec<String>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display(), e))
}

fn parse_config(text: &str, base: &Path) -> Result<ScenarioConfig> {
    let doc = xml::parse_doc(text)?;
    let input = xml::elements(&doc, "input")
        .next()
        .ok_or_else(|| Error::schema("scenario", "missing <input> element"))?;
    let resolve = |name: &str| -> Result<PathBuf> {
        Ok(base.join(xml::req_attr(&input, name)?))
    };
    let time = xml::elements(&doc, "time")
        .next()
        .ok_or_else(|| Error::schema("scenario", "missing <time> element"))?;
    let begin: f64 = xml::req_parse(&time, "begin")?;
    let end: f64 = xml::req_parse(&time, "end")?;
    let step_length: f64 = xml::req_parse(&time, "step")?;
    if begin >= end {
        return Err(Error::Validation(format!("begin ({begin}) must be < end ({end})")));
    }
    if !(step_length > 0.0) {
        return Err(Error::Validation(format!("step length must be > 0, got {step_length}")));
    }
    let seed = match xml::elements(&doc, "seed").next() {
        Some(s) => xml::req_parse(&s, "value")?,
        None => 0,
    };

    let radio = match xml::elements(&doc, "radio").next() {
        None => None,
        Some(r) => {
            let d = RadioConfig::default();
            let mut pairs = Vec::new();
            for c in r.children().filter(|n| n.has_tag_name("cbr")) {
                pairs.push((
                    xml::req_attr(&c, "src")?.to_string(),
                    xml::req_attr(&c, "dst")?.to_string(),
                ));
            }
            Some(RadioConfig {
                range: xml::opt_parse(&r, "range")?.unwrap_or(d.range),
                per_hop_latency: xml::opt_parse(&r, "perHopLatency")?.unwrap_or(d.per_hop_latency),
                packet_size_bits: xml::opt_parse(&r, "packetSize")?.unwrap_or(d.packet_size_bits),
                cbr_rate: xml::opt_parse(&r, "cbrRate")?.unwrap_or(d.cbr_rate),
                rreq_ttl: xml::opt_parse(&r, "rreqTtl")?.unwrap_or(d.rreq_ttl),
                route_lifetime: xml::opt_parse(&r, "routeLifetime")?.unwrap_or(d.route_lifetime),
                loss_prob: xml::opt_parse(&r, "lossProb")?.unwrap_or(0.0),
                pairs,
            })
        }
    };

    let adaptive = match xml::elements(&doc, "adaptive").next() {
        None => None,
        Some(a) => {
            let d = AdaptiveConfig::default();
            let mut approaches = Vec::new();
            for ap in a.children().filter(|n| n.has_tag_name("approach")) {
                approaches.push(ApproachSpec {
                    phase_index: xml::req_parse(&ap, "phase")?,
                    detectors: xml::req_attr(&ap, "detectors")?
                        .split_whitespace()
                        .map(str::to_string)
                        .collect(),
                });
            }
            Some(AdaptiveConfig {
                tl_id: xml::req_attr(&a, "tl")?.to_string(),
                control_interval: xml::opt_parse(&a, "interval")?.unwrap_or(d.control_interval),
                g_min: xml::opt_parse(&a, "gMin")?.unwrap_or(d.g_min),
                g_max: xml::opt_parse(&a, "gMax")?.unwrap_or(d.g_max),
                yellow: xml::opt_parse(&a, "yellow")?.unwrap_or(d.yellow),
                cycle_green_budget: xml::opt_parse(&a, "budget")?,
                load_metric: match a.attribute("metric") {
                    Some(m) => LoadMetric::parse(m)?,
                    None => d.load_metric,
                },
                approaches,
            })
        }
    };

    Ok(ScenarioConfig {
        nodes_path: resolve("nodes")?,
        edges_path: resolve("edges")?,
        connections_path: resolve("connections")?,
        routes_path: resolve("routes")?,
        detectors_path: resolve("detectors")?,
        tllogic_path: resolve("tllogic")?,
        begin,
        end,
        step_length,
        seed,
        radio,
        adaptive,
    })
}

/// Load a scenario config and every file it references, validating
/// cross-references. `mode` controls tlLogic state-length handling.
pub fn load_scenario(config_path: &Path, mode: LengthMode) -> Result<Scenario> {
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    let config = parse_config(&read(config_path)?, base)?;

    let (nodes, edges, connections) = netmodel::parse_plain_network(
        &read(&config.nodes_path)?,
        &read(&config.edges_path)?,
        &read(&config.connections_path)?,
    )?;
    let network = netmodel::build_network(nodes, edges, connections)?;
    let (routes, flows) = mobility::parse_routes(&read(&config.routes_path)?)?;
    let detectors = signals::parse_detectors(&read(&config.detectors_path)?)?;
    let raw_programs = signals::parse_tl_programs(&read(&config.tllogic_path)?)?;

    // Routes must name real, consecutively connected edges.
    for r in &routes {
        for e in &r.edges {
            if network.edge(e).is_none() {
                return Err(Error::Validation(format!(
                    "{}: route '{}' references unknown edge '{e}'",
                    config.routes_path.display(),
                    r.id
                )));
            }
        }
        for pair in r.edges.windows(2) {
            if network.any_connection(&pair[0], &pair[1]).is_none() {
                return Err(Error::Validation(format!(
                    "route '{}': no connection from '{}' to '{}'",
                    r.id, pair[0], pair[1]
                )));
            }
        }
    }

    // Detectors must sit on real lanes, within the edge.
    for d in &detectors {
        let edge = network.edge(&d.edge).ok_or_else(|| {
            Error::Validation(format!("detector '{}' references unknown edge '{}'", d.id, d.edge))
        })?;
        if d.lane >= edge.lane_count {
            return Err(Error::Validation(format!(
                "detector '{}': lane {} out of range on edge '{}'",
                d.id, d.lane, d.edge
            )));
        }
        if d.pos < 0.0 || d.pos > edge.length {
            return Err(Error::Validation(format!(
                "detector '{}': pos {} outside edge '{}' (length {})",
                d.id, d.pos, d.edge, edge.length
            )));
        }
    }

    // tlLogic state lengths against controlled link counts.
    let mut programs = Vec::new();
    let mut warnings = Vec::new();
    for p in raw_programs {
        match network.link_counts.get(&p.tl_id) {
            Some(&count) => {
                let (norm, warn) = p.normalize(count, mode)?;
                warnings.extend(warn);
                programs.push(norm);
            }
            None => {
                return Err(Error::Validation(format!(
                    "tlLogic '{}' does not match any traffic light in the network",
                    p.tl_id
                )))
            }
        }
    }
    for tl in network.link_counts.keys() {
        if !programs.iter().any(|p| &p.tl_id == tl) {
            return Err(Error::Validation(format!("traffic light '{tl}' has no tlLogic program")));
        }
    }

    // Adaptive config against template and detectors.
    if let Some(a) = &config.adaptive {
        let template = programs
            .iter()
            .find(|p| p.tl_id == a.tl_id)
            .ok_or_else(|| Error::Validation(format!("adaptive config names unknown tl '{}'", a.tl_id)))?;
        let greens = crate::adaptive::green_phases(template)?;
        if a.approaches.len() != greens.len() {
            return Err(Error::Validation(format!(
                "adaptive config maps {} approaches but template has {} green phases",
                a.approaches.len(),
                greens.len()
            )));
        }
        for ap in &a.approaches {
            if !greens.contains(&ap.phase_index) {
                return Err(Error::Validation(format!(
                    "adaptive approach phase {} is not a green phase of the template",
                    ap.phase_index
                )));
            }
            if ap.detectors.is_empty() {
                return Err(Error::Validation(format!(
                    "adaptive approach phase {} has no detectors",
                    ap.phase_index
                )));
            }
            for d in &ap.detectors {
                if !detectors.iter().any(|x| &x.id == d) {
                    return Err(Error::Validation(format!(
                        "adaptive approach phase {} names unknown detector '{d}'",
                        ap.phase_index
                    )));
                }
            }
        }
        if a.control_interval + 1e-9 < template.cycle() {
            return Err(Error::Validation(format!(
                "control interval {} shorter than template cycle {}",
                a.control_interval,
                template.cycle()
            )));
        }
    }

    Ok(Scenario {
        config,
        network,
        routes,
        flows,
        detectors,
        programs,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, CrossScenario};

    #[test]
    fn full_cross_bundle_loads() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = fixtures::write_cross_scenario(dir.path(), &CrossScenario::default()).unwrap();
        let sc = load_scenario(&cfg, LengthMode::Strict).unwrap();
        assert_eq!(sc.config.begin, 0.0);
        assert_eq!(sc.config.end, 1000.0);
        assert_eq!(sc.config.step_length, 0.1);
        assert_eq!(sc.network.link_counts["c"], 12);
        assert_eq!(sc.flows.len(), 4);
        assert!(sc.config.adaptive.is_some());
        assert!(sc.warnings.is_empty());
    }

    #[test]
    fn short_state_string_is_a_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = fixtures::write_cross_scenario(dir.path(), &CrossScenario::default()).unwrap();
        std::fs::write(
            dir.path().join("cross.tll.xml"),
            r#"<additional><tlLogic id="c" programID="0"><phase duration="31" state="GG"/><phase duration="9" state="yy"/><phase duration="31" state="rG"/><phase duration="9" state="ry"/></tlLogic></additional>"#,
        )
        .unwrap();
        let err = load_scenario(&cfg, LengthMode::Strict).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("'c'") && msg.contains('2') && msg.contains("12"), "{msg}");
        // Permissive mode pads instead, with warnings.
        let sc = load_scenario(&cfg, LengthMode::Permissive).unwrap();
        assert!(!sc.warnings.is_empty());
        assert!(sc.programs[0].phases.iter().all(|p| p.state.len() == 12));
    }

    #[test]
    fn dangling_route_edge_names_file_and_edge() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = fixtures::write_cross_scenario(dir.path(), &CrossScenario::default()).unwrap();
        std::fs::write(
            dir.path().join("cross.rou.xml"),
            r#"<routes><route id="r" edges="missing"/><flow id="f" route="r" begin="0" end="10" vehsPerHour="1"/></routes>"#,
        )
        .unwrap();
        let err = load_scenario(&cfg, LengthMode::Strict).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("missing") && msg.contains("cross.rou.xml"), "{msg}");
    }

    #[test]
    fn begin_after_end_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = fixtures::write_cross_scenario(
            dir.path(),
            &CrossScenario { begin: 0.0, end: 0.0, ..Default::default() },
        );
        // begin == end is caught at parse time.
        assert!(cfg.is_ok());
        let err = load_scenario(&cfg.unwrap(), LengthMode::Strict).unwrap_err();
        assert!(err.to_string().contains("begin"), "{err}");
    }

    #[test]
    fn missing_routes_file_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = fixtures::write_cross_scenario(dir.path(), &CrossScenario::default()).unwrap();
        std::fs::remove_file(dir.path().join("cross.rou.xml")).unwrap();
        assert!(matches!(
            load_scenario(&cfg, LengthMode::Strict),
            Err(Error::Io { .. })
        ));
    }
}
