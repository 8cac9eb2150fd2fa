//! Text-over-TCP control service: one client steps the simulation,
//! reads detectors and signal states, and commands signal changes.
//!
//! Wire format: newline-delimited UTF-8, space-separated tokens.
//! Responses are `OK[ <payload>]` or `ERR <code> <message>`, one per
//! command, in order.

use crate::engine::Simulation;
use crate::error::{Error, Result};
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

pub const DEFAULT_PORT: u16 = 8813;

pub const ERR_MALFORMED: u8 = 1;
pub const ERR_UNKNOWN_ID: u8 = 2;
pub const ERR_STATE_LENGTH: u8 = 3;
pub const ERR_PAST_END: u8 = 4;
pub const ERR_BUSY: u8 = 5;

/// Handle one command line against the simulation, returning the full
/// response line (without trailing newline). Never panics on bad input.
pub fn handle_command(line: &str, sim: &mut Simulation) -> String {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    match tokens.as_slice() {
        ["STEP", n] => match n.parse::<u64>() {
            Err(_) => format!("ERR {ERR_MALFORMED} STEP takes a non-negative integer"),
            Ok(n) => match sim.step_n(n) {
                Err(e) => format!("ERR {ERR_MALFORMED} {e}"),
                Ok(taken) if taken < n => {
                    format!("ERR {ERR_PAST_END} clamped at end after {taken} steps")
                }
                Ok(_) => "OK".to_string(),
            },
        },
        ["GET", "SIM_TIME"] => format!("OK {:.3}", sim.clock()),
        ["GET", "TL_STATE", id] => match sim.tl_state(id) {
            Some(s) => format!("OK {s}"),
            None => format!("ERR {ERR_UNKNOWN_ID} unknown tl '{id}'"),
        },
        ["SET", "TL_STATE", id, state] => match sim.set_tl_state(id, state) {
            Ok(()) => "OK".to_string(),
            Err(e) => {
                let code = if sim.tl_state(id).is_none() {
                    ERR_UNKNOWN_ID
                } else {
                    ERR_STATE_LENGTH
                };
                format!("ERR {code} {e}")
            }
        },
        ["SET", "TL_PROGRAM", id, program] => match sim.set_tl_program(id, program) {
            Ok(()) => "OK".to_string(),
            Err(e) => format!("ERR {ERR_UNKNOWN_ID} {e}"),
        },
        ["GET", "DETECTOR", id] => match sim.read_detector(id) {
            Ok(r) => format!(
                "OK count={} mean_speed={:.3} occupancy={:.3} queue={}",
                r.count, r.mean_speed, r.occupancy, r.queue_length
            ),
            Err(e) => format!("ERR {ERR_UNKNOWN_ID} {e}"),
        },
        ["GET", "VEHICLES"] => {
            let mut parts = vec![sim.state.vehicles.len().to_string()];
            for v in sim.state.vehicles.values() {
                let edge = &sim.state.network.edges[v.edge_idx];
                parts.push(format!(
                    "{},{},{},{:.3},{:.3}",
                    v.id, edge.id, v.lane, v.pos, v.speed
                ));
            }
            format!("OK {}", parts.join(" "))
        }
        ["GET", "METRICS"] => {
            let m = sim.net_metrics();
            format!(
                "OK sent={} received={} pdf={:.3} avg_pkts_s={:.3} avg_bits_s={:.3}",
                m.sent, m.received, m.pdf, m.avg_packets_per_s, m.avg_bits_per_s
            )
        }
        ["BYE"] => "OK bye".to_string(),
        _ => format!("ERR {ERR_MALFORMED} malformed command"),
    }
}

/// Serve a single client session over an already-bound listener.
/// Commands are processed strictly in order; the session ends on BYE or
/// disconnect, leaving the simulation in a valid state. Concurrent
/// connection attempts are refused with `ERR 5`.
pub fn serve(listener: TcpListener, sim: &mut Simulation) -> Result<()> {
    let (stream, _) = listener.accept().map_err(|e| Error::io("accept", e))?;

    // Refuse further connections while the session is active.
    let busy = Arc::new(AtomicBool::new(true));
    let reject_listener = listener
        .try_clone()
        .map_err(|e| Error::io("listener", e))?;
    reject_listener
        .set_nonblocking(true)
        .map_err(|e| Error::io("listener", e))?;
    let reject_busy = busy.clone();
    let rejector = std::thread::spawn(move || {
        while reject_busy.load(Ordering::SeqCst) {
            match reject_listener.accept() {
                Ok((mut extra, _)) => {
                    let _ = extra.write_all(format!("ERR {ERR_BUSY} busy\n").as_bytes());
                }
                Err(_) => std::thread::sleep(std::time::Duration::from_millis(5)),
            }
        }
    });

    let result = session(stream, sim);
    busy.store(false, Ordering::SeqCst);
    rejector.join().ok();
    result
}

fn session(stream: TcpStream, sim: &mut Simulation) -> Result<()> {
    let mut writer = stream.try_clone().map_err(|e| Error::io("stream", e))?;
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        let line = match line {
            Ok(l) => l,
            Err(_) => break, // client disconnected mid-line
        };
        let response = handle_command(&line, sim);
        let bye = line.trim() == "BYE";
        writer
            .write_all(format!("{response}\n").as_bytes())
            .map_err(|e| Error::io("stream", e))?;
        if bye {
            break;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, CrossScenario};
    use crate::scenario::load_scenario;
    use crate::signals::LengthMode;

    fn sim(end: f64) -> Simulation {
        let dir = tempfile::tempdir().unwrap();
        let cfg = fixtures::write_cross_scenario(
            dir.path(),
            &CrossScenario { end, ..Default::default() },
        )
        .unwrap();
        Simulation::new(load_scenario(&cfg, LengthMode::Strict).unwrap(), false).unwrap()
    }

    #[test]
    fn step_advances_sim_time() {
        let mut s = sim(100.0);
        assert_eq!(handle_command("STEP 10", &mut s), "OK");
        assert_eq!(handle_command("GET SIM_TIME", &mut s), "OK 1.000");
    }

    #[test]
    fn step_beyond_end_clamps_with_err4() {
        let mut s = sim(1.0);
        let resp = handle_command("STEP 100", &mut s);
        assert!(resp.starts_with("ERR 4"), "{resp}");
        assert_eq!(handle_command("GET SIM_TIME", &mut s), "OK 1.000");
    }

    #[test]
    fn tl_state_get_set_cycle() {
        let mut s = sim(100.0);
        assert_eq!(handle_command("GET TL_STATE c", &mut s), "OK GGGrrrGGGrrr");
        assert_eq!(handle_command("SET TL_STATE c rrrGGGrrrGGG", &mut s), "OK");
        assert_eq!(handle_command("GET TL_STATE c", &mut s), "OK rrrGGGrrrGGG");
        assert!(handle_command("SET TL_STATE c GG", &mut s).starts_with("ERR 3"));
        assert!(handle_command("GET TL_STATE nope", &mut s).starts_with("ERR 2"));
        assert!(handle_command("SET TL_STATE nope rrrrrrrrrrrr", &mut s).starts_with("ERR 2"));
    }

    #[test]
    fn empty_detector_payload() {
        let mut s = sim(100.0);
        assert_eq!(
            handle_command("GET DETECTOR d_e", &mut s),
            "OK count=0 mean_speed=0.000 occupancy=0.000 queue=0"
        );
        assert!(handle_command("GET DETECTOR nope", &mut s).starts_with("ERR 2"));
    }

    #[test]
    fn malformed_lines_do_not_change_state() {
        let mut s = sim(100.0);
        assert!(handle_command("FROB x", &mut s).starts_with("ERR 1"));
        assert!(handle_command("STEP many", &mut s).starts_with("ERR 1"));
        assert_eq!(handle_command("GET SIM_TIME", &mut s), "OK 0.000");
    }

    #[test]
    fn program_switch_over_the_wire() {
        let mut s = sim(200.0);
        assert_eq!(handle_command("SET TL_PROGRAM c 0", &mut s), "OK");
        assert!(handle_command("SET TL_PROGRAM c nope", &mut s).starts_with("ERR 2"));
    }

    #[test]
    fn vehicles_and_metrics_payloads() {
        let mut s = sim(100.0);
        handle_command("STEP 100", &mut s);
        let v = handle_command("GET VEHICLES", &mut s);
        assert!(v.starts_with("OK "), "{v}");
        let m = handle_command("GET METRICS", &mut s);
        assert!(m.starts_with("OK sent=0"), "{m}");
    }
}
