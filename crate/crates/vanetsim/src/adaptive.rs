//! RSU-style adaptive signal control: measure per-approach load and
//! reallocate the cycle's green budget proportionally.

use crate::error::{Error, Result};
use crate::signals::{DetectorReading, PhaseProgram, ProgramOrigin};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMetric {
    QueueLength,
    Occupancy,
    Count,
}

impl LoadMetric {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "queue_length" => Ok(LoadMetric::QueueLength),
            "occupancy" => Ok(LoadMetric::Occupancy),
            "count" => Ok(LoadMetric::Count),
            other => Err(Error::Config(format!("unknown load metric '{other}'"))),
        }
    }

    pub fn of(&self, r: &DetectorReading) -> f64 {
        match self {
            LoadMetric::QueueLength => r.queue_length as f64,
            LoadMetric::Occupancy => r.occupancy,
            LoadMetric::Count => r.count as f64,
        }
    }
}

/// Detectors feeding one green phase of the template program.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproachSpec {
    /// Index of the green phase in the template program.
    pub phase_index: usize,
    pub detectors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub tl_id: String,
    pub control_interval: f64,
    pub g_min: f64,
    pub g_max: f64,
    pub yellow: f64,
    /// Total green seconds per cycle; defaults to the template's.
    pub cycle_green_budget: Option<f64>,
    pub load_metric: LoadMetric,
    pub approaches: Vec<ApproachSpec>,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            tl_id: String::new(),
            control_interval: 120.0,
            g_min: 5.0,
            g_max: 60.0,
            yellow: 9.0,
            cycle_green_budget: None,
            load_metric: LoadMetric::QueueLength,
            approaches: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproachLoad {
    pub phase_index: usize,
    pub load: f64,
}

/// Sum the configured metric over each approach's detectors.
pub fn measure_loads(
    config: &AdaptiveConfig,
    mut read: impl FnMut(&str) -> Result<DetectorReading>,
) -> Result<Vec<ApproachLoad>> {
    let mut out = Vec::with_capacity(config.approaches.len());
    for a in &config.approaches {
        if a.detectors.is_empty() {
            return Err(Error::Config(format!(
                "approach for phase {} has no detectors",
                a.phase_index
            )));
        }
        let mut load = 0.0;
        for d in &a.detectors {
            load += config.load_metric.of(&read(d)?);
        }
        out.push(ApproachLoad {
            phase_index: a.phase_index,
            load,
        });
    }
    Ok(out)
}

/// Indices of the template's green phases (a phase is yellow iff it
/// contains 'y'); validates the green/yellow alternation.
pub fn green_phases(template: &PhaseProgram) -> Result<Vec<usize>> {
    let mut greens = Vec::new();
    for (i, p) in template.phases.iter().enumerate() {
        let yellow = p.state.contains('y');
        if i % 2 == 0 {
            if yellow {
                return Err(Error::Config(format!(
                    "template '{}' phase {i}: expected green, got yellow state '{}'",
                    template.tl_id, p.state
                )));
            }
            greens.push(i);
        } else if !yellow {
            return Err(Error::Config(format!(
                "template '{}' phase {i}: expected yellow state, got '{}'",
                template.tl_id, p.state
            )));
        }
    }
    Ok(greens)
}

/// Proportional green split with clamping and largest-remainder
/// rounding. Returns whole-second durations summing exactly to `budget`.
pub fn split_green(loads: &[f64], budget: u64, g_min: u64, g_max: u64) -> Result<Vec<u64>> {
    let n = loads.len();
    if n == 0 {
        return Err(Error::Config("no green phases to allocate".into()));
    }
    if budget < n as u64 * g_min {
        return Err(Error::Config(format!(
            "green budget {budget} below minimum {} for {n} approaches",
            n as u64 * g_min
        )));
    }
    if budget > n as u64 * g_max {
        return Err(Error::Config(format!(
            "green budget {budget} above maximum {} for {n} approaches",
            n as u64 * g_max
        )));
    }

    let gmin = g_min as f64;
    let gmax = g_max as f64;
    let total = budget as f64;
    let mut raw = vec![0.0; n];
    let mut clamped = vec![false; n];
    loop {
        let free: Vec<usize> = (0..n).filter(|&i| !clamped[i]).collect();
        let fixed: f64 = (0..n).filter(|&i| clamped[i]).map(|i| raw[i]).sum();
        let spare = total - fixed - free.len() as f64 * gmin;
        let sum_load: f64 = free.iter().map(|&i| loads[i]).sum();
        for &i in &free {
            raw[i] = if sum_load > 0.0 {
                gmin + spare * loads[i] / sum_load
            } else {
                gmin + spare / free.len() as f64
            };
        }
        let over: Vec<usize> = free.iter().copied().filter(|&i| raw[i] > gmax).collect();
        if over.is_empty() {
            break;
        }
        for i in over {
            raw[i] = gmax;
            clamped[i] = true;
        }
    }

    // Largest-remainder rounding; ties go to the lower phase index.
    let mut out: Vec<u64> = raw.iter().map(|&r| r.floor() as u64).collect();
    let mut leftover = budget - out.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for i in order {
        if leftover == 0 {
            break;
        }
        if out[i] < g_max {
            out[i] += 1;
            leftover -= 1;
        }
    }
    debug_assert_eq!(out.iter().sum::<u64>(), budget);
    Ok(out)
}

/// Regenerate the template with green durations proportional to loads.
/// State strings and phase order are preserved; yellows keep the
/// configured duration.
pub fn reallocate_green(
    loads: &[f64],
    config: &AdaptiveConfig,
    template: &PhaseProgram,
) -> Result<PhaseProgram> {
    let greens = green_phases(template)?;
    if loads.len() != greens.len() {
        return Err(Error::Config(format!(
            "{} loads for {} green phases",
            loads.len(),
            greens.len()
        )));
    }
    let budget = config
        .cycle_green_budget
        .unwrap_or_else(|| greens.iter().map(|&i| template.phases[i].duration).sum())
        .round() as u64;
    let splits = split_green(loads, budget, config.g_min.round() as u64, config.g_max.round() as u64)?;

    let mut out = template.clone();
    out.program_id = "adaptive".to_string();
    out.origin = ProgramOrigin::Adaptive;
    for (k, &i) in greens.iter().enumerate() {
        out.phases[i].duration = splits[k] as f64;
    }
    for (i, p) in out.phases.iter_mut().enumerate() {
        if i % 2 == 1 {
            p.duration = config.yellow;
        }
    }
    Ok(out)
}

/// Cycle-boundary installation state for one controlled light.
#[derive(Debug, Default)]
pub struct ControllerState {
    pub next_control_at: Option<f64>,
    pub pending: Option<PhaseProgram>,
    /// Decision log rows: (t, loads, green splits).
    pub decisions: Vec<(f64, Vec<f64>, Vec<u64>)>,
}

impl ControllerState {
    /// Run one controller tick. At each control-interval boundary a new
    /// program is computed and left pending; the caller installs it at
    /// the next cycle start of the active program.
    pub fn tick(
        &mut self,
        clock: f64,
        config: &AdaptiveConfig,
        template: &PhaseProgram,
        read: impl FnMut(&str) -> Result<DetectorReading>,
    ) -> Result<()> {
        let next = *self
            .next_control_at
            .get_or_insert(config.control_interval);
        if clock + 1e-9 < next {
            return Ok(());
        }
        self.next_control_at = Some(next + config.control_interval);
        let loads = measure_loads(config, read)?;
        let load_values: Vec<f64> = loads.iter().map(|l| l.load).collect();
        let program = reallocate_green(&load_values, config, template)?;
        let greens = green_phases(template)?;
        let splits: Vec<u64> = greens.iter().map(|&i| program.phases[i].duration as u64).collect();
        self.decisions.push((clock, load_values, splits));
        self.pending = Some(program);
        Ok(())
    }
}
