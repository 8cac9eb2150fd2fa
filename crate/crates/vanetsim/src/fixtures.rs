//! Hand-built scenario fixtures shared by unit, integration and
//! acceptance tests, plus the tlLogic snippets used as parser fixtures.

use crate::error::Result;
use crate::netmodel::{self, Connection, Edge, Node};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const STATIC_LOGIC_TLLOGIC: &str = r#"<additional>
<tlLogic id="1274361397" type="static" programID="0"
offset="0">
  <phase duration="31" state="GG"/>
  <phase duration="9" state="yy"/>
</tlLogic>
<tlLogic id="1284510665" type="static" programID="0"
offset="0">
  <phase duration="31" state="GGGrrr"/>
  <phase duration="9" state="yyrrrr"/>
  <phase duration="31" state="rrrggg"/>
  <phase duration="9" state="rrrryy"/>
</tlLogic>
<tlLogic id="1284510687" type="static" programID="0"
offset="0">
  <phase duration="31" state="GGGG"/>
  <phase duration="9" state="yyyy"/>
</tlLogic>
<tlLogic id="1274361418" type="static" programID="0"
offset="0">
  <phase duration="31" state="rrrrGGGggg"/>
  <phase duration="9" state="rrrryyggg"/>
  <phase duration="6" state="rrrrrrggg"/>
  <phase duration="9" state="rrrrrryyyy"/>
  <phase duration="31" state="ggggrrrrrr"/>
  <phase duration="9" state="yyyyrrrrrr"/>
</tlLogic>
<tlLogic id="748825800" type="static" programID="0"
offset="0">
  <phase duration="31" state="gggrrr"/>
  <phase duration="9" state="yyrrrr"/>
  <phase duration="31" state="rrrGGG"/>
  <phase duration="9" state="rrrryy"/>
</tlLogic>
</additional>
"#;

pub const DYNAMIC_LOGIC_TLLOGIC: &str = r#"<additional>
<tlLogic id="1274361397" type="static" programID="0" offset="0">
  <phase duration="31" state="GG"/>
  <phase duration="9" state="yy"/>
</tlLogic>
<tlLogic id="1284510665" type="static" programID="0"
offset="0">
  <phase duration="31" state="GGGrrr"/>
  <phase duration="9" state="yyrrrr"/>
  <phase duration="31" state="rrrggg"/>
  <phase duration="9" state="rrrryy"/>
</tlLogic>
<tlLogic id="1284510687" type="static" programID="0"
offset="0">
  <phase duration="31" state="gggg"/>
  <phase duration="9" state="yyyy"/>
</tlLogic>
<tlLogic id="1274361418" type="static" programID="0"
offset="0">
  <phase duration="31" state="rrrrGGGrrr"/>
  <phase duration="9" state="rrrryyrrrr"/>
  <phase duration="6" state="rrrrGGGrrr"/>
  <phase duration="9" state="rrrrGGGrrr"/>
  <phase duration="31" state="ggggrrrrGGG"/>
  <phase duration="9" state="yyyyrrrggg"/>
</tlLogic>
<tlLogic id="748825800" type="static" programID="0"
offset="0">
  <phase duration="31" state="GGGrrr"/>
  <phase duration="9" state="yyrrrr"/>
  <phase duration="31" state="rrrggg"/>
  <phase duration="9" state="GGGrrr"/>
</tlLogic>
</additional>
"#;

pub const CROSS_NODES: &str = r#"<nodes>
  <node id="c" x="0" y="0" type="traffic_light"/>
  <node id="e" x="500" y="0"/>
  <node id="w" x="-500" y="0"/>
  <node id="n" x="0" y="500"/>
  <node id="s" x="0" y="-500"/>
</nodes>
"#;

pub const CROSS_EDGES: &str = r#"<edges>
  <edge id="in_e" from="e" to="c" length="500" speed="3.5"/>
  <edge id="out_e" from="c" to="e" length="500" speed="3.5"/>
  <edge id="in_w" from="w" to="c" length="500" speed="3.5"/>
  <edge id="out_w" from="c" to="w" length="500" speed="3.5"/>
  <edge id="in_n" from="n" to="c" length="500" speed="3.5"/>
  <edge id="out_n" from="c" to="n" length="500" speed="3.5"/>
  <edge id="in_s" from="s" to="c" length="500" speed="3.5"/>
  <edge id="out_s" from="c" to="s" length="500" speed="3.5"/>
</edges>
"#;

/// Link index order: E approach 0-2, N 3-5, W 6-8, S 9-11.
pub const CROSS_CONNECTIONS: &str = r#"<connections>
  <connection from="in_e" to="out_w" fromLane="0" toLane="0" tl="c" linkIndex="0"/>
  <connection from="in_e" to="out_n" fromLane="0" toLane="0" tl="c" linkIndex="1"/>
  <connection from="in_e" to="out_s" fromLane="0" toLane="0" tl="c" linkIndex="2"/>
  <connection from="in_n" to="out_s" fromLane="0" toLane="0" tl="c" linkIndex="3"/>
  <connection from="in_n" to="out_e" fromLane="0" toLane="0" tl="c" linkIndex="4"/>
  <connection from="in_n" to="out_w" fromLane="0" toLane="0" tl="c" linkIndex="5"/>
  <connection from="in_w" to="out_e" fromLane="0" toLane="0" tl="c" linkIndex="6"/>
  <connection from="in_w" to="out_n" fromLane="0" toLane="0" tl="c" linkIndex="7"/>
  <connection from="in_w" to="out_s" fromLane="0" toLane="0" tl="c" linkIndex="8"/>
  <connection from="in_s" to="out_n" fromLane="0" toLane="0" tl="c" linkIndex="9"/>
  <connection from="in_s" to="out_e" fromLane="0" toLane="0" tl="c" linkIndex="10"/>
  <connection from="in_s" to="out_w" fromLane="0" toLane="0" tl="c" linkIndex="11"/>
</connections>
"#;

/// Symmetric 31/31 split over the 12 cross links (E-W then N-S).
pub const CROSS_TLLOGIC: &str = r#"<additional>
  <tlLogic id="c" type="static" programID="0" offset="0">
    <phase duration="31" state="GGGrrrGGGrrr"/>
    <phase duration="9" state="yyyrrryyyrrr"/>
    <phase duration="31" state="rrrGGGrrrGGG"/>
    <phase duration="9" state="rrryyyrrryyy"/>
  </tlLogic>
</additional>
"#;

pub const CROSS_DETECTORS: &str = r#"<additional>
  <detector id="d_e" lane="in_e_0" pos="500" queueZone="500"/>
  <detector id="d_w" lane="in_w_0" pos="500" queueZone="500"/>
  <detector id="d_n" lane="in_n_0" pos="500" queueZone="500"/>
  <detector id="d_s" lane="in_s_0" pos="500" queueZone="500"/>
</additional>
"#;

pub fn cross_routes_xml(ew_rate: f64, ns_rate: f64, end: f64) -> String {
    format!(
        r#"<routes>
  <route id="r_ew" edges="in_e out_w"/>
  <route id="r_we" edges="in_w out_e"/>
  <route id="r_ns" edges="in_n out_s"/>
  <route id="r_sn" edges="in_s out_n"/>
  <flow id="f_ew" route="r_ew" begin="0" end="{end}" vehsPerHour="{ew_rate}"/>
  <flow id="f_we" route="r_we" begin="0" end="{end}" vehsPerHour="{ew_rate}"/>
  <flow id="f_ns" route="r_ns" begin="0" end="{end}" vehsPerHour="{ns_rate}"/>
  <flow id="f_sn" route="r_sn" begin="0" end="{end}" vehsPerHour="{ns_rate}"/>
</routes>
"#
    )
}

pub fn cross_plain() -> (Vec<Node>, Vec<Edge>, Vec<Connection>) {
    (
        netmodel::parse_nodes(CROSS_NODES).unwrap(),
        netmodel::parse_edges(CROSS_EDGES).unwrap(),
        netmodel::parse_connections(CROSS_CONNECTIONS).unwrap(),
    )
}

/// Options for writing a complete cross-intersection scenario bundle.
#[derive(Debug, Clone)]
pub struct CrossScenario {
    pub begin: f64,
    pub end: f64,
    pub step: f64,
    pub seed: u64,
    pub ew_rate: f64,
    pub ns_rate: f64,
    pub adaptive: bool,
    pub radio: bool,
}

impl Default for CrossScenario {
    fn default() -> Self {
        CrossScenario {
            begin: 0.0,
            end: 1000.0,
            step: 0.1,
            seed: 42,
            ew_rate: 300.0,
            ns_rate: 300.0,
            adaptive: true,
            radio: false,
        }
    }
}

/// Write all scenario files into `dir`; returns the config path.
pub fn write_cross_scenario(dir: &Path, opts: &CrossScenario) -> Result<PathBuf> {
    let write = |name: &str, text: &str| -> Result<()> {
        std::fs::write(dir.join(name), text)
            .map_err(|e| crate::error::Error::io(dir.join(name).display(), e))
    };
    write("cross.nod.xml", CROSS_NODES)?;
    write("cross.edg.xml", CROSS_EDGES)?;
    write("cross.con.xml", CROSS_CONNECTIONS)?;
    write("cross.tll.xml", CROSS_TLLOGIC)?;
    write("cross.det.xml", CROSS_DETECTORS)?;
    write(
        "cross.rou.xml",
        &cross_routes_xml(opts.ew_rate, opts.ns_rate, opts.end),
    )?;

    let mut cfg = String::from("<scenario>\n");
    cfg.push_str(
        "  <input nodes=\"cross.nod.xml\" edges=\"cross.edg.xml\" connections=\"cross.con.xml\" \
         routes=\"cross.rou.xml\" detectors=\"cross.det.xml\" tllogic=\"cross.tll.xml\"/>\n",
    );
    writeln!(
        cfg,
        "  <time begin=\"{}\" end=\"{}\" step=\"{}\"/>",
        opts.begin, opts.end, opts.step
    )
    .unwrap();
    writeln!(cfg, "  <seed value=\"{}\"/>", opts.seed).unwrap();
    if opts.radio {
        cfg.push_str("  <radio range=\"250\" perHopLatency=\"0.01\" packetSize=\"4096\" cbrRate=\"4\"/>\n");
    }
    if opts.adaptive {
        cfg.push_str("  <adaptive tl=\"c\" interval=\"80\" gMin=\"5\" gMax=\"60\" yellow=\"9\" metric=\"queue_length\">\n");
        cfg.push_str("    <approach phase=\"0\" detectors=\"d_e d_w\"/>\n");
        cfg.push_str("    <approach phase=\"2\" detectors=\"d_n d_s\"/>\n");
        cfg.push_str("  </adaptive>\n");
    }
    cfg.push_str("</scenario>\n");
    write("cross.cfg.xml", &cfg)?;
    Ok(dir.join("cross.cfg.xml"))
}

pub const LINE_NODES: &str = r#"<nodes>
  <node id="a" x="0" y="0"/>
  <node id="b" x="2000" y="0"/>
</nodes>
"#;

pub const LINE_EDGES: &str = r#"<edges>
  <edge id="main" from="a" to="b" length="2000" speed="13.89"/>
</edges>
"#;

/// Single-road scenario: no lights, one flow. Used for free-flow and
/// platoon dynamics tests.
pub fn write_line_scenario(dir: &Path, rate: f64, end: f64, seed: u64) -> Result<PathBuf> {
    let write = |name: &str, text: &str| -> Result<()> {
        std::fs::write(dir.join(name), text)
            .map_err(|e| crate::error::Error::io(dir.join(name).display(), e))
    };
    write("line.nod.xml", LINE_NODES)?;
    write("line.edg.xml", LINE_EDGES)?;
    write("line.con.xml", "<connections>\n</connections>\n")?;
    write("line.tll.xml", "<additional>\n</additional>\n")?;
    write(
        "line.det.xml",
        "<additional>\n  <detector id=\"d_m\" lane=\"main_0\" pos=\"1000\"/>\n</additional>\n",
    )?;
    write(
        "line.rou.xml",
        &format!(
            "<routes>\n  <route id=\"r\" edges=\"main\"/>\n  <flow id=\"f\" route=\"r\" begin=\"0\" end=\"{end}\" vehsPerHour=\"{rate}\"/>\n</routes>\n"
        ),
    )?;
    let cfg = format!(
        "<scenario>\n  <input nodes=\"line.nod.xml\" edges=\"line.edg.xml\" connections=\"line.con.xml\" routes=\"line.rou.xml\" detectors=\"line.det.xml\" tllogic=\"line.tll.xml\"/>\n  <time begin=\"0\" end=\"{end}\" step=\"0.1\"/>\n  <seed value=\"{seed}\"/>\n</scenario>\n"
    );
    write("line.cfg.xml", &cfg)?;
    Ok(dir.join("line.cfg.xml"))
}
