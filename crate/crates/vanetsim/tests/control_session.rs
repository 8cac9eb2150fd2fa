//! End-to-end TCP tests for the control service: a full session over a
//! real socket, and refusal of a second client while one is connected.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::time::Duration;

use vanetsim::engine::Simulation;
use vanetsim::fixtures::{self, CrossScenario};
use vanetsim::scenario::load_scenario;
use vanetsim::signals::LengthMode;

fn spawn_server() -> (std::net::SocketAddr, std::thread::JoinHandle<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = std::thread::spawn(move || {
        let dir = tempfile::tempdir().unwrap();
        let cfg = fixtures::write_cross_scenario(
            dir.path(),
            &CrossScenario { end: 100.0, ..Default::default() },
        )
        .unwrap();
        let mut sim =
            Simulation::new(load_scenario(&cfg, LengthMode::Strict).unwrap(), false).unwrap();
        vanetsim::control::serve(listener, &mut sim).unwrap();
    });
    (addr, handle)
}

fn exchange(stream: &TcpStream, reader: &mut BufReader<TcpStream>, cmd: &str) -> String {
    let mut writer = stream.try_clone().unwrap();
    writer.write_all(format!("{cmd}\n").as_bytes()).unwrap();
    let mut line = String::new();
    reader.read_line(&mut line).unwrap();
    line.trim_end().to_string()
}

#[test]
fn session_over_tcp_steps_and_reads() {
    let (addr, server) = spawn_server();
    let stream = TcpStream::connect(addr).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());

    assert_eq!(exchange(&stream, &mut reader, "GET SIM_TIME"), "OK 0.000");
    assert_eq!(exchange(&stream, &mut reader, "STEP 10"), "OK");
    assert_eq!(exchange(&stream, &mut reader, "GET SIM_TIME"), "OK 1.000");
    assert_eq!(exchange(&stream, &mut reader, "GET TL_STATE c"), "OK GGGrrrGGGrrr");
    assert!(exchange(&stream, &mut reader, "GET TL_STATE zz").starts_with("ERR 2"));
    assert_eq!(exchange(&stream, &mut reader, "BYE"), "OK bye");

    server.join().unwrap();
}

#[test]
fn second_client_is_refused_while_busy() {
    let (addr, server) = spawn_server();
    let first = TcpStream::connect(addr).unwrap();
    let mut first_reader = BufReader::new(first.try_clone().unwrap());
    assert_eq!(exchange(&first, &mut first_reader, "GET SIM_TIME"), "OK 0.000");

    // A concurrent client gets a busy error, not a hung socket.
    let second = TcpStream::connect(addr).unwrap();
    second.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let mut line = String::new();
    BufReader::new(second).read_line(&mut line).unwrap();
    assert_eq!(line.trim_end(), "ERR 5 busy");

    // The first session is unaffected.
    assert_eq!(exchange(&first, &mut first_reader, "STEP 5"), "OK");
    assert_eq!(exchange(&first, &mut first_reader, "BYE"), "OK bye");
    server.join().unwrap();
}
