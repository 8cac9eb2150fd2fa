//! Scenario runner and static-vs-adaptive comparison harness, plus the
//! CSV artifacts every run emits.

use crate::engine::{QueueStats, Simulation};
use crate::error::{Error, Result};
use crate::scenario::{self, Scenario};
use crate::signals::LengthMode;
use crate::vanet::{EventKind, NetEvent, NetMetrics};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub trace: bool,
    pub adaptive: bool,
    pub length_mode: LengthMode,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: None,
            out_dir: PathBuf::from("out"),
            trace: false,
            adaptive: true,
            length_mode: LengthMode::Strict,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario_id: String,
    pub seed: u64,
    pub duration: f64,
    pub inserted: u64,
    pub arrived: u64,
    pub total_waiting: f64,
    pub queue_stats: BTreeMap<String, QueueStats>,
    pub net: NetMetrics,
    pub files: Vec<PathBuf>,
}

fn load(config_path: &Path, opts: &RunOptions) -> Result<Scenario> {
    let mut sc = scenario::load_scenario(config_path, opts.length_mode)?;
    if let Some(seed) = opts.seed {
        sc.config.seed = seed;
    }
    Ok(sc)
}

/// Run a scenario start to end, writing trace, controller, event and
/// metrics CSVs plus a plain-text summary into `opts.out_dir`.
pub fn run(config_path: &Path, opts: &RunOptions) -> Result<RunReport> {
    let sc = load(config_path, opts)?;
    fs::create_dir_all(&opts.out_dir).map_err(|e| Error::io(opts.out_dir.display(), e))?;
    let scenario_id = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    let seed = sc.config.seed;

    let mut sim = Simulation::new(sc, opts.adaptive)?;
    let mut files = Vec::new();

    let trace_path = opts.out_dir.join("trace.csv");
    if opts.trace {
        let f = fs::File::create(&trace_path).map_err(|e| Error::io(trace_path.display(), e))?;
        let mut w = BufWriter::new(f);
        writeln!(w, "t,vehicle_id,edge,lane,pos,speed").map_err(|e| Error::io("trace", e))?;
        sim.trace = Some(Box::new(w));
        files.push(trace_path);
    }

    sim.run_to_end()?;
    if let Some(w) = sim.trace.as_mut() {
        w.flush().map_err(|e| Error::io("trace", e))?;
    }
    sim.trace = None;

    let controller_path = opts.out_dir.join("controller.csv");
    write_file(&controller_path, &controller_csv(&sim))?;
    files.push(controller_path);

    let events_path = opts.out_dir.join("events.csv");
    write_file(&events_path, &events_csv(sim.net_events()))?;
    files.push(events_path);

    let duration = sim.clock() - sim.begin;
    let net = sim.net_metrics();
    let metrics_path = opts.out_dir.join("metrics.csv");
    write_file(
        &metrics_path,
        &metrics_csv(&[(sim.insertion_order.len() as u64, net)]),
    )?;
    files.push(metrics_path);

    let report = RunReport {
        scenario_id,
        seed,
        duration,
        inserted: sim.state.inserted,
        arrived: sim.state.arrived,
        total_waiting: sim.state.total_wait,
        queue_stats: sim.queue_stats.clone(),
        net,
        files: files.clone(),
    };

    let summary_path = opts.out_dir.join("report.txt");
    write_file(&summary_path, &summary_text(&report))?;

    Ok(RunReport {
        files: {
            let mut f = files;
            f.push(summary_path);
            f
        },
        ..report
    })
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub static_run: RunReport,
    pub adaptive_run: RunReport,
}

impl CompareReport {
    /// Percentage change of adaptive total waiting time vs static.
    pub fn waiting_change_pct(&self) -> f64 {
        if self.static_run.total_waiting == 0.0 {
            0.0
        } else {
            100.0 * (self.adaptive_run.total_waiting - self.static_run.total_waiting)
                / self.static_run.total_waiting
        }
    }
}

/// Run the identical scenario twice with the same seed: once on the
/// static file programs, once under the adaptive controller.
pub fn compare(config_path: &Path, opts: &RunOptions) -> Result<CompareReport> {
    let sc = load(config_path, opts)?;
    if sc.network.link_counts.is_empty() {
        return Err(Error::Validation("compare requires at least one traffic light".into()));
    }
    if sc.config.adaptive.is_none() {
        return Err(Error::Validation("compare requires an adaptive config in the scenario".into()));
    }
    drop(sc);
    let static_run = run(
        config_path,
        &RunOptions {
            adaptive: false,
            out_dir: opts.out_dir.join("static"),
            ..opts.clone()
        },
    )?;
    let adaptive_run = run(
        config_path,
        &RunOptions {
            adaptive: true,
            out_dir: opts.out_dir.join("adaptive"),
            ..opts.clone()
        },
    )?;
    let report = CompareReport {
        static_run,
        adaptive_run,
    };
    write_file(&opts.out_dir.join("compare.txt"), &compare_text(&report))?;
    Ok(report)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path.display(), e))
}

pub fn controller_csv(sim: &Simulation) -> String {
    let mut s = String::from("t,tl_id,loads,green_splits\n");
    let tl = sim.controller_tl_id().unwrap_or("");
    for (t, loads, splits) in sim.controller_decisions() {
        let loads: Vec<String> = loads.iter().map(|l| format!("{l:.3}")).collect();
        let splits: Vec<String> = splits.iter().map(|g| g.to_string()).collect();
        writeln!(s, "{t:.3},{tl},{},{}", loads.join(";"), splits.join(";")).unwrap();
    }
    s
}

pub fn events_csv(events: &[NetEvent]) -> String {
    let mut s = String::from("t,event,packet_src,packet_seq,node,detail\n");
    for e in events {
        writeln!(
            s,
            "{:.3},{},{},{},{},{}",
            e.t,
            e.kind.as_str(),
            e.packet_src,
            e.packet_seq,
            e.node,
            e.detail
        )
        .unwrap();
    }
    s
}

pub fn parse_events_csv(text: &str) -> Result<Vec<NetEvent>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.splitn(6, ',').collect();
        if parts.len() != 6 {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected 6 fields, got {}", parts.len()),
            });
        }
        out.push(NetEvent {
            t: parts[0].parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("bad time '{}'", parts[0]),
            })?,
            kind: EventKind::parse(parts[1])?,
            packet_src: parts[2].to_string(),
            packet_seq: parts[3].parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("bad sequence '{}'", parts[3]),
            })?,
            node: parts[4].to_string(),
            detail: parts[5].to_string(),
        });
    }
    Ok(out)
}

pub fn metrics_csv(rows: &[(u64, NetMetrics)]) -> String {
    let mut s = String::from("nodes,sent,received,pdf,avg_pkts_s,avg_bits_s\n");
    for (nodes, m) in rows {
        writeln!(
            s,
            "{nodes},{},{},{:.4},{:.3},{:.3}",
            m.sent, m.received, m.pdf, m.avg_packets_per_s, m.avg_bits_per_s
        )
        .unwrap();
    }
    s
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<(u64, NetMetrics)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 6 {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected 6 fields, got {}", parts.len()),
            });
        }
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("bad number '{s}'"),
            })
        };
        out.push((
            num(parts[0])? as u64,
            NetMetrics {
                sent: num(parts[1])? as u64,
                received: num(parts[2])? as u64,
                pdf: num(parts[3])?,
                avg_packets_per_s: num(parts[4])?,
                avg_bits_per_s: num(parts[5])?,
            },
        ));
    }
    Ok(out)
}

pub fn summary_text(r: &RunReport) -> String {
    let mut s = String::new();
    writeln!(s, "scenario: {}", r.scenario_id).unwrap();
    writeln!(s, "seed: {}", r.seed).unwrap();
    writeln!(s, "duration_s: {:.1}", r.duration).unwrap();
    writeln!(s, "inserted: {}", r.inserted).unwrap();
    writeln!(s, "arrived: {}", r.arrived).unwrap();
    writeln!(s, "total_waiting_s: {:.1}", r.total_waiting).unwrap();
    for (edge, q) in &r.queue_stats {
        writeln!(s, "queue[{edge}]: max={} mean={:.2}", q.max, q.mean()).unwrap();
    }
    writeln!(
        s,
        "net: sent={} received={} pdf={:.4} avg_pkts_s={:.3} avg_bits_s={:.3}",
        r.net.sent, r.net.received, r.net.pdf, r.net.avg_packets_per_s, r.net.avg_bits_per_s
    )
    .unwrap();
    s
}

pub fn compare_text(r: &CompareReport) -> String {
    let mut s = String::new();
    writeln!(s, "metric,static,adaptive,change_pct").unwrap();
    let pct = |a: f64, b: f64| if a == 0.0 { 0.0 } else { 100.0 * (b - a) / a };
    writeln!(
        s,
        "total_waiting_s,{:.1},{:.1},{:.1}",
        r.static_run.total_waiting,
        r.adaptive_run.total_waiting,
        r.waiting_change_pct()
    )
    .unwrap();
    writeln!(
        s,
        "arrived,{},{},{:.1}",
        r.static_run.arrived,
        r.adaptive_run.arrived,
        pct(r.static_run.arrived as f64, r.adaptive_run.arrived as f64)
    )
    .unwrap();
    for (edge, sq) in &r.static_run.queue_stats {
        let aq = r.adaptive_run.queue_stats.get(edge).cloned().unwrap_or_default();
        writeln!(
            s,
            "max_queue[{edge}],{},{},{:.1}",
            sq.max,
            aq.max,
            pct(sq.max as f64, aq.max as f64)
        )
        .unwrap();
    }
    s
}
