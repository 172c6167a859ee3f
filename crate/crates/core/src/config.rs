//! Scenario configuration: the static tables of a module, parsed from a
//! line-oriented `key = value` text format and validated before a state can
//! be built from it.
//!
//! ```text
//! schedule.mtf = 10
//! schedule.window.1 = P1:0:5
//! schedule.window.2 = P2:5:10
//! partition.P1.period = 10
//! process.A = P1:5:aperiodic::inf
//! process.B = P1:3:periodic:10:4
//! port.QS = queuing:src:2:fifo
//! port.QS.partition = P1
//! channel.C1 = QS->QD
//! hm.P1.DEADLINE_MISSED = PROCESS:PARTITION_COLD_RESTART
//! variant.resume = corrected
//! script.1 = 12:A:SEND_QUEUING_MESSAGE:QS:5
//! ```
//!
//! `#` starts a comment line. Keys are case-sensitive; enumeration values
//! are not.

use crate::ids::*;
use crate::services::{Request, ServiceName};
use crate::types::*;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    /// 1-based source line, 0 when the problem is not tied to one line.
    pub line: usize,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: ", self.line)?;
        }
        if !self.key.is_empty() {
            write!(f, "`{}`: ", self.key)?;
        }
        f.write_str(&self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub partition: PartitionId,
    pub start: u64,
    pub end: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduleTable {
    pub mtf: u64,
    pub windows: Vec<Window>,
}

impl ScheduleTable {
    /// The window covering `clock`, if any.
    pub fn active_window(&self, clock: u64) -> Option<&Window> {
        let offset = clock % self.mtf;
        self.windows
            .iter()
            .find(|w| w.start <= offset && offset < w.end)
    }

    /// True when `clock` is the first tick of a window or the first tick
    /// after one.
    pub fn is_boundary(&self, clock: u64) -> bool {
        let offset = clock % self.mtf;
        self.windows
            .iter()
            .any(|w| w.start == offset || w.end % self.mtf == offset)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HmEntry {
    pub level: ErrorLevel,
    pub action: RecoveryAction,
}

pub type HmTable = BTreeMap<ErrorCode, HmEntry>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionCfg {
    pub name: String,
    pub period: u64,
    /// Process slot reserved for the error handler, when one is configured.
    pub handler: Option<ProcessId>,
    pub hm: HmTable,
    pub multi_hm: HmTable,
}

/// What the automatic initialization does with a process after creating it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StartPolicy {
    Start,
    Delayed(u64),
    None,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessCfg {
    pub name: String,
    pub partition: PartitionId,
    pub priority: u32,
    pub periodicity: Periodicity,
    pub capacity: Duration,
    pub start: StartPolicy,
    pub is_handler: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PortKind {
    Sampling,
    Queuing,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PortCfg {
    pub name: String,
    pub partition: PartitionId,
    pub kind: PortKind,
    pub direction: Direction,
    pub max_msg: u32,
    pub discipline: Discipline,
    pub channel: Option<ChannelId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelCfg {
    pub name: String,
    pub source: PortId,
    pub dests: Vec<PortId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BufferCfg {
    pub name: String,
    pub partition: PartitionId,
    pub max_msg: u32,
    pub discipline: Discipline,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlackboardCfg {
    pub name: String,
    pub partition: PartitionId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemaphoreCfg {
    pub name: String,
    pub partition: PartitionId,
    pub initial: u32,
    pub max: u32,
    pub discipline: Discipline,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventCfg {
    pub name: String,
    pub partition: PartitionId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Caller {
    /// An application process; it must be the running process.
    Process(ProcessId),
    /// The initialization flow of a partition.
    Main(PartitionId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScriptCall {
    pub tick: u64,
    pub caller: Caller,
    pub request: Request,
    pub line: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitPolicy {
    /// Initialization runs as one atomic step.
    Auto,
    /// Each creation is its own step, then the main flow freely starts,
    /// suspends, resumes or stops processes before entering NORMAL.
    Free,
}

/// Finite parameter domains for free exploration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExploreCfg {
    /// Upper bound on message ids consumed by sends.
    pub messages: u32,
    pub timeouts: Vec<Duration>,
    pub delays: Vec<u64>,
    pub priorities: Vec<u32>,
    /// Services a running process may call; absent means the default menu.
    pub menu: BTreeMap<ProcessId, Vec<ServiceName>>,
    pub main_ops: Vec<ServiceName>,
    pub init: InitPolicy,
}

impl Default for ExploreCfg {
    fn default() -> Self {
        ExploreCfg {
            messages: 3,
            timeouts: vec![Duration::Ticks(0), Duration::Ticks(3)],
            delays: vec![0, 3],
            priorities: Vec::new(),
            menu: BTreeMap::new(),
            main_ops: vec![
                ServiceName::Start,
                ServiceName::DelayedStart,
                ServiceName::Suspend,
                ServiceName::Resume,
                ServiceName::Stop,
                ServiceName::SetPartitionMode,
            ],
            init: InitPolicy::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub schedule: ScheduleTable,
    pub tick_len: u64,
    pub max_priority: u32,
    pub max_lock_level: u32,
    pub partitions: Vec<PartitionCfg>,
    pub processes: Vec<ProcessCfg>,
    pub ports: Vec<PortCfg>,
    pub channels: Vec<ChannelCfg>,
    pub buffers: Vec<BufferCfg>,
    pub blackboards: Vec<BlackboardCfg>,
    pub semaphores: Vec<SemaphoreCfg>,
    pub events: Vec<EventCfg>,
    pub module_hm: HmTable,
    pub variants: VariantToggles,
    pub script: Vec<ScriptCall>,
    pub explore: ExploreCfg,
}

fn find<T>(items: &[T], name: &str, get: impl Fn(&T) -> &str) -> Option<usize> {
    items.iter().position(|x| get(x) == name)
}

impl Scenario {
    pub fn partition(&self, p: PartitionId) -> &PartitionCfg {
        &self.partitions[p.index()]
    }

    pub fn process(&self, p: ProcessId) -> &ProcessCfg {
        &self.processes[p.index()]
    }

    pub fn port(&self, p: PortId) -> &PortCfg {
        &self.ports[p.index()]
    }

    pub fn partition_id(&self, name: &str) -> Option<PartitionId> {
        find(&self.partitions, name, |x| &x.name).map(|i| PartitionId(i as u16))
    }

    pub fn process_id(&self, name: &str) -> Option<ProcessId> {
        find(&self.processes, name, |x| &x.name).map(|i| ProcessId(i as u16))
    }

    pub fn port_id(&self, name: &str) -> Option<PortId> {
        find(&self.ports, name, |x| &x.name).map(|i| PortId(i as u16))
    }

    pub fn buffer_id(&self, name: &str) -> Option<BufferId> {
        find(&self.buffers, name, |x| &x.name).map(|i| BufferId(i as u16))
    }

    pub fn blackboard_id(&self, name: &str) -> Option<BlackboardId> {
        find(&self.blackboards, name, |x| &x.name).map(|i| BlackboardId(i as u16))
    }

    pub fn semaphore_id(&self, name: &str) -> Option<SemaphoreId> {
        find(&self.semaphores, name, |x| &x.name).map(|i| SemaphoreId(i as u16))
    }

    pub fn event_id(&self, name: &str) -> Option<EventId> {
        find(&self.events, name, |x| &x.name).map(|i| EventId(i as u16))
    }

    pub fn partition_ids(&self) -> impl Iterator<Item = PartitionId> {
        (0..self.partitions.len() as u16).map(PartitionId)
    }

    pub fn process_ids(&self) -> impl Iterator<Item = ProcessId> {
        (0..self.processes.len() as u16).map(ProcessId)
    }

    /// Processes configured for a partition, handler slot excluded.
    pub fn processes_of(&self, part: PartitionId) -> impl Iterator<Item = ProcessId> + '_ {
        self.process_ids().filter(move |&p| {
            let cfg = self.process(p);
            cfg.partition == part && !cfg.is_handler
        })
    }

    pub fn channel_of(&self, port: PortId) -> Option<&ChannelCfg> {
        self.port(port).channel.map(|c| &self.channels[c.index()])
    }

    pub fn partition_name(&self, p: PartitionId) -> &str {
        &self.partition(p).name
    }

    pub fn process_name(&self, p: ProcessId) -> &str {
        &self.process(p).name
    }

    pub fn parse(text: &str) -> Result<Scenario, ConfigError> {
        Builder::default().build(text)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Scenario, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: 0,
            key: String::new(),
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Scenario::parse(&text)
    }

    /// Checks the static tables for consistency.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |key: &str, message: String| ConfigError {
            line: 0,
            key: key.to_string(),
            message,
        };
        if self.schedule.mtf == 0 {
            return Err(err("schedule.mtf", "major time frame must be positive".into()));
        }
        if self.partitions.is_empty() {
            return Err(err("partition", "no partition configured".into()));
        }
        if self.schedule.windows.is_empty() {
            return Err(err("schedule.window", "schedule has no windows".into()));
        }
        let mut prev_end = 0;
        for w in &self.schedule.windows {
            if w.start >= w.end || w.end > self.schedule.mtf {
                return Err(err(
                    "schedule.window",
                    format!("window {}..{} not inside 0..{}", w.start, w.end, self.schedule.mtf),
                ));
            }
            if w.start < prev_end {
                return Err(err(
                    "schedule.window",
                    format!("window starting at {} overlaps its predecessor", w.start),
                ));
            }
            prev_end = w.end;
        }
        for p in self.partition_ids() {
            if !self.schedule.windows.iter().any(|w| w.partition == p) {
                return Err(err(
                    "schedule.window",
                    format!("partition {} has no window", self.partition_name(p)),
                ));
            }
        }
        if self.tick_len == 0 {
            return Err(err("tick_len", "tick length must be positive".into()));
        }
        if self.max_lock_level == 0 {
            return Err(err("max_lock_level", "must be positive".into()));
        }
        for cfg in &self.processes {
            let key = format!("process.{}", cfg.name);
            if cfg.priority > self.max_priority {
                return Err(err(&key, format!("priority above max_priority {}", self.max_priority)));
            }
            if let Periodicity::Periodic { period } = cfg.periodicity {
                if period == 0 {
                    return Err(err(&key, "periodic process needs a positive period".into()));
                }
                if let StartPolicy::Delayed(d) = cfg.start {
                    if d >= period {
                        return Err(err(&key, "start delay must be below the period".into()));
                    }
                }
                if let Duration::Ticks(c) = cfg.capacity {
                    if c > period {
                        return Err(err(&key, "time capacity exceeds the period".into()));
                    }
                }
            }
        }
        for cfg in &self.ports {
            if cfg.kind == PortKind::Queuing && cfg.max_msg == 0 {
                return Err(err(
                    &format!("port.{}", cfg.name),
                    "queuing port needs a positive message bound".into(),
                ));
            }
        }
        for ch in &self.channels {
            let key = format!("channel.{}", ch.name);
            let src = self.port(ch.source);
            if src.direction != Direction::Source {
                return Err(err(&key, format!("port {} is not a source port", src.name)));
            }
            if ch.dests.is_empty() {
                return Err(err(&key, "channel has no destination".into()));
            }
            for &d in &ch.dests {
                let dst = self.port(d);
                if dst.direction != Direction::Destination {
                    return Err(err(&key, format!("port {} is not a destination port", dst.name)));
                }
                if dst.kind != src.kind {
                    return Err(err(&key, "channel mixes sampling and queuing ports".into()));
                }
            }
            if src.kind == PortKind::Queuing && ch.dests.len() != 1 {
                return Err(err(&key, "queuing channels have exactly one destination".into()));
            }
        }
        for b in &self.buffers {
            if b.max_msg == 0 {
                return Err(err(&format!("buffer.{}", b.name), "buffer needs a positive bound".into()));
            }
        }
        for (code, e) in &self.module_hm {
            if !e.action.is_module_level() {
                return Err(err(
                    &format!("hm.module.{code}"),
                    "module table actions are MODULE_SHUTDOWN or MODULE_RESET".into(),
                ));
            }
        }
        for s in &self.semaphores {
            if s.initial > s.max {
                return Err(err(
                    &format!("semaphore.{}", s.name),
                    "initial value exceeds maximum".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Default)]
struct Builder {
    mtf: Option<u64>,
    windows: Vec<(u64, usize, String, u64, u64)>,
    tick_len: Option<u64>,
    max_priority: Option<u32>,
    max_lock_level: Option<u32>,
    partitions: Vec<(String, Option<u64>, Option<Duration>)>,
    processes: Vec<(usize, String, String)>,
    process_start: BTreeMap<String, (usize, String)>,
    ports: Vec<(usize, String, String)>,
    port_partition: BTreeMap<String, (usize, String)>,
    channels: Vec<(usize, String, String)>,
    buffers: Vec<(usize, String, String)>,
    blackboards: Vec<(usize, String, String)>,
    semaphores: Vec<(usize, String, String)>,
    events: Vec<(usize, String, String)>,
    hm: Vec<(usize, String, String, String)>,
    variants: VariantToggles,
    script: Vec<(u64, usize, String)>,
    explore: Vec<(usize, String, String)>,
}

fn bad(line: usize, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

fn num<T: FromStr>(line: usize, key: &str, text: &str) -> Result<T, ConfigError> {
    text.trim()
        .parse()
        .map_err(|_| bad(line, key, format!("expected a number, found `{text}`")))
}

fn token<T: FromStr<Err = UnknownToken>>(line: usize, key: &str, text: &str) -> Result<T, ConfigError> {
    text.parse().map_err(|e: UnknownToken| bad(line, key, e.to_string()))
}

impl Builder {
    fn declare_partition(&mut self, name: &str) -> usize {
        if let Some(i) = self.partitions.iter().position(|p| p.0 == name) {
            return i;
        }
        self.partitions.push((name.to_string(), None, None));
        self.partitions.len() - 1
    }

    fn build(mut self, text: &str) -> Result<Scenario, ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(bad(line, content, "expected `key = value`"));
            };
            self.entry(line, key.trim(), value.trim())?;
        }
        self.finish()
    }

    fn entry(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        let parts: Vec<&str> = key.split('.').collect();
        match parts.as_slice() {
            ["schedule", "mtf"] => self.mtf = Some(num(line, key, value)?),
            ["schedule", "window", k] => {
                let order: u64 = num(line, key, k)?;
                let f: Vec<&str> = value.split(':').collect();
                let [part, start, end] = f.as_slice() else {
                    return Err(bad(line, key, "expected <partition>:<start>:<end>"));
                };
                self.declare_partition(part.trim());
                self.windows.push((
                    order,
                    line,
                    part.trim().to_string(),
                    num(line, key, start)?,
                    num(line, key, end)?,
                ));
            }
            ["tick_len"] => self.tick_len = Some(num(line, key, value)?),
            ["max_priority"] => self.max_priority = Some(num(line, key, value)?),
            ["max_lock_level"] => self.max_lock_level = Some(num(line, key, value)?),
            ["partition", name, "period"] => {
                let i = self.declare_partition(name);
                self.partitions[i].1 = Some(num(line, key, value)?);
            }
            ["partition", name, "error_handler"] => {
                let i = self.declare_partition(name);
                let cap = if value.eq_ignore_ascii_case("yes") {
                    Duration::Infinite
                } else {
                    token(line, key, value)?
                };
                self.partitions[i].2 = Some(cap);
            }
            ["partition", name] => {
                self.declare_partition(name);
            }
            ["process", name] => self.processes.push((line, name.to_string(), value.to_string())),
            ["process", name, "start"] => {
                self.process_start.insert(name.to_string(), (line, value.to_string()));
            }
            ["port", name] => self.ports.push((line, name.to_string(), value.to_string())),
            ["port", name, "partition"] => {
                self.port_partition.insert(name.to_string(), (line, value.to_string()));
            }
            ["channel", name] => self.channels.push((line, name.to_string(), value.to_string())),
            ["buffer", name] => self.buffers.push((line, name.to_string(), value.to_string())),
            ["blackboard", name] => self.blackboards.push((line, name.to_string(), value.to_string())),
            ["semaphore", name] => self.semaphores.push((line, name.to_string(), value.to_string())),
            ["event", name] => self.events.push((line, name.to_string(), value.to_string())),
            ["hm", "module", code] => {
                self.hm.push((line, "module".into(), code.to_string(), value.to_string()))
            }
            ["hm", "multi", part, code] => {
                self.hm.push((line, format!("multi.{part}"), code.to_string(), value.to_string()))
            }
            ["hm", part, code] => self.hm.push((line, part.to_string(), code.to_string(), value.to_string())),
            ["variant", which] => {
                let v: Variant = token(line, key, value)?;
                match *which {
                    "resume" => self.variants.resume = v,
                    "send_queuing" => self.variants.send_queuing = v,
                    "receive_buffer" => self.variants.receive_buffer = v,
                    _ => return Err(bad(line, key, "unknown variant toggle")),
                }
            }
            ["script", k] => self.script.push((num(line, key, k)?, line, value.to_string())),
            ["explore", ..] => self.explore.push((line, parts[1..].join("."), value.to_string())),
            _ => return Err(bad(line, key, "unknown key")),
        }
        Ok(())
    }

    fn finish(self) -> Result<Scenario, ConfigError> {
        let mtf = self.mtf.ok_or_else(|| bad(0, "schedule.mtf", "missing"))?;
        let max_priority = self.max_priority.unwrap_or(63);
        let part_index = |line: usize, key: &str, name: &str| -> Result<PartitionId, ConfigError> {
            self.partitions
                .iter()
                .position(|p| p.0 == name.trim())
                .map(|i| PartitionId(i as u16))
                .ok_or_else(|| bad(line, key, format!("unknown partition `{}`", name.trim())))
        };

        let mut windows = self.windows.clone();
        windows.sort_by_key(|w| (w.0, w.3));
        let mut wins = Vec::new();
        for (_, line, part, start, end) in &windows {
            wins.push(Window {
                partition: part_index(*line, "schedule.window", part)?,
                start: *start,
                end: *end,
            });
        }
        wins.sort_by_key(|w| w.start);

        let mut processes = Vec::new();
        for (line, name, value) in &self.processes {
            let key = format!("process.{name}");
            let f: Vec<&str> = value.split(':').collect();
            let [part, prio, kind, period, cap] = f.as_slice() else {
                return Err(bad(
                    *line,
                    &key,
                    "expected <partition>:<priority>:<periodic|aperiodic>:<period>:<capacity>",
                ));
            };
            let periodicity = match kind.trim().to_ascii_lowercase().as_str() {
                "periodic" => Periodicity::Periodic {
                    period: num(*line, &key, period)?,
                },
                "aperiodic" => {
                    let p = period.trim();
                    if !(p.is_empty() || p.eq_ignore_ascii_case("inf")) {
                        return Err(bad(*line, &key, "aperiodic processes have no period"));
                    }
                    Periodicity::Aperiodic
                }
                other => return Err(bad(*line, &key, format!("unknown periodicity `{other}`"))),
            };
            let start = match self.process_start.get(name) {
                None => StartPolicy::Start,
                Some((l, v)) => {
                    let v = v.trim().to_ascii_lowercase();
                    if v == "start" {
                        StartPolicy::Start
                    } else if v == "none" {
                        StartPolicy::None
                    } else if let Some(d) = v.strip_prefix("delayed:") {
                        StartPolicy::Delayed(num(*l, &format!("process.{name}.start"), d)?)
                    } else {
                        return Err(bad(*l, &format!("process.{name}.start"), "expected start|none|delayed:<ticks>"));
                    }
                }
            };
            if processes.iter().any(|p: &ProcessCfg| &p.name == name) {
                return Err(bad(*line, &key, "duplicate process"));
            }
            processes.push(ProcessCfg {
                name: name.clone(),
                partition: part_index(*line, &key, part)?,
                priority: num(*line, &key, prio)?,
                periodicity,
                capacity: token(*line, &key, cap)?,
                start,
                is_handler: false,
            });
        }
        for name in self.process_start.keys() {
            if !processes.iter().any(|p| &p.name == name) {
                let (l, _) = &self.process_start[name];
                return Err(bad(*l, &format!("process.{name}.start"), "unknown process"));
            }
        }

        let mut partitions = Vec::new();
        for (i, (name, period, handler)) in self.partitions.iter().enumerate() {
            if name == "module" || name == "multi" {
                return Err(bad(0, &format!("partition.{name}"), "reserved partition name"));
            }
            let handler = handler.map(|cap| {
                processes.push(ProcessCfg {
                    name: format!("{name}.handler"),
                    partition: PartitionId(i as u16),
                    priority: max_priority,
                    periodicity: Periodicity::Aperiodic,
                    capacity: cap,
                    start: StartPolicy::None,
                    is_handler: true,
                });
                ProcessId((processes.len() - 1) as u16)
            });
            partitions.push(PartitionCfg {
                name: name.clone(),
                period: period.unwrap_or(mtf),
                handler,
                hm: HmTable::new(),
                multi_hm: HmTable::new(),
            });
        }

        let mut module_hm = HmTable::new();
        for (line, scope, code, value) in &self.hm {
            let key = format!("hm.{scope}.{code}");
            let code: ErrorCode = token(*line, &key, code)?;
            let (level, action) = value
                .split_once(':')
                .ok_or_else(|| bad(*line, &key, "expected <level>:<action>"))?;
            let entry = HmEntry {
                level: token(*line, &key, level)?,
                action: token(*line, &key, action)?,
            };
            let table = if scope == "module" {
                &mut module_hm
            } else if let Some(p) = scope.strip_prefix("multi.") {
                &mut partitions[part_index(*line, &key, p)?.index()].multi_hm
            } else {
                &mut partitions[part_index(*line, &key, scope)?.index()].hm
            };
            table.insert(code, entry);
        }

        let mut ports = Vec::new();
        for (line, name, value) in &self.ports {
            let key = format!("port.{name}");
            let f: Vec<&str> = value.split(':').map(str::trim).collect();
            if f.len() < 2 || f.len() > 4 {
                return Err(bad(*line, &key, "expected <sampling|queuing>:<src|dst>:<max>:<fifo|priority>"));
            }
            let kind = match f[0].to_ascii_lowercase().as_str() {
                "sampling" => PortKind::Sampling,
                "queuing" => PortKind::Queuing,
                other => return Err(bad(*line, &key, format!("unknown port kind `{other}`"))),
            };
            let direction: Direction = token(*line, &key, f[1])?;
            let max_msg = match f.get(2) {
                Some(m) if !m.is_empty() => num(*line, &key, m)?,
                _ if kind == PortKind::Sampling => 1,
                _ => return Err(bad(*line, &key, "queuing port needs a message bound")),
            };
            let discipline = match f.get(3) {
                Some(d) if !d.is_empty() => token(*line, &key, d)?,
                _ => Discipline::Fifo,
            };
            let Some((pl, pname)) = self.port_partition.get(name) else {
                return Err(bad(*line, &key, format!("missing port.{name}.partition")));
            };
            ports.push(PortCfg {
                name: name.clone(),
                partition: part_index(*pl, &format!("{key}.partition"), pname)?,
                kind,
                direction,
                max_msg,
                discipline,
                channel: None,
            });
        }
        for (name, (line, _)) in &self.port_partition {
            if !ports.iter().any(|p| &p.name == name) {
                return Err(bad(*line, &format!("port.{name}.partition"), "unknown port"));
            }
        }

        let port_index = |line: usize, key: &str, name: &str, ports: &[PortCfg]| -> Result<PortId, ConfigError> {
            ports
                .iter()
                .position(|p| p.name == name.trim())
                .map(|i| PortId(i as u16))
                .ok_or_else(|| bad(line, key, format!("unknown port `{}`", name.trim())))
        };
        let mut channels = Vec::new();
        for (line, name, value) in &self.channels {
            let key = format!("channel.{name}");
            let (src, dsts) = value
                .split_once("->")
                .ok_or_else(|| bad(*line, &key, "expected <src>-><dst,...>"))?;
            let source = port_index(*line, &key, src, &ports)?;
            let mut dests = Vec::new();
            for d in dsts.split(',').filter(|d| !d.trim().is_empty()) {
                dests.push(port_index(*line, &key, d, &ports)?);
            }
            let id = ChannelId(channels.len() as u16);
            for p in std::iter::once(source).chain(dests.iter().copied()) {
                if ports[p.index()].channel.is_some() {
                    return Err(bad(*line, &key, format!("port {} is already connected", ports[p.index()].name)));
                }
                ports[p.index()].channel = Some(id);
            }
            channels.push(ChannelCfg {
                name: name.clone(),
                source,
                dests,
            });
        }

        let fields = |line: usize, key: &str, value: &str, n: usize, shape: &str| -> Result<Vec<String>, ConfigError> {
            let f: Vec<String> = value.split(':').map(|s| s.trim().to_string()).collect();
            if f.len() != n {
                return Err(bad(line, key, format!("expected {shape}")));
            }
            Ok(f)
        };
        let mut buffers = Vec::new();
        for (line, name, value) in &self.buffers {
            let key = format!("buffer.{name}");
            let f = fields(*line, &key, value, 3, "<partition>:<max>:<fifo|priority>")?;
            buffers.push(BufferCfg {
                name: name.clone(),
                partition: part_index(*line, &key, &f[0])?,
                max_msg: num(*line, &key, &f[1])?,
                discipline: token(*line, &key, &f[2])?,
            });
        }
        let mut blackboards = Vec::new();
        for (line, name, value) in &self.blackboards {
            let key = format!("blackboard.{name}");
            blackboards.push(BlackboardCfg {
                name: name.clone(),
                partition: part_index(*line, &key, value)?,
            });
        }
        let mut semaphores = Vec::new();
        for (line, name, value) in &self.semaphores {
            let key = format!("semaphore.{name}");
            let f = fields(*line, &key, value, 4, "<partition>:<initial>:<max>:<fifo|priority>")?;
            semaphores.push(SemaphoreCfg {
                name: name.clone(),
                partition: part_index(*line, &key, &f[0])?,
                initial: num(*line, &key, &f[1])?,
                max: num(*line, &key, &f[2])?,
                discipline: token(*line, &key, &f[3])?,
            });
        }
        let mut events = Vec::new();
        for (line, name, value) in &self.events {
            let key = format!("event.{name}");
            events.push(EventCfg {
                name: name.clone(),
                partition: part_index(*line, &key, value)?,
            });
        }

        let mut scn = Scenario {
            schedule: ScheduleTable { mtf, windows: wins },
            tick_len: self.tick_len.unwrap_or(1),
            max_priority,
            max_lock_level: self.max_lock_level.unwrap_or(16),
            partitions,
            processes,
            ports,
            channels,
            buffers,
            blackboards,
            semaphores,
            events,
            module_hm,
            variants: self.variants,
            script: Vec::new(),
            explore: ExploreCfg::default(),
        };
        scn.validate().map_err(|mut e| {
            e.line = self.line_of(&e.key);
            e
        })?;

        let mut script = self.script.clone();
        script.sort_by_key(|s| (s.0, s.1));
        for (_, line, value) in &script {
            let key = "script";
            let f: Vec<&str> = value.split(':').map(str::trim).collect();
            if f.len() < 3 {
                return Err(bad(*line, key, "expected <tick>:<caller>:<service>:<args...>"));
            }
            let tick = num(*line, key, f[0])?;
            let caller = if let Some(p) = f[1].strip_prefix('@') {
                Caller::Main(part_index(*line, key, p)?)
            } else {
                Caller::Process(
                    scn.process_id(f[1])
                        .ok_or_else(|| bad(*line, key, format!("unknown process `{}`", f[1])))?,
                )
            };
            let service: ServiceName = token(*line, key, f[2])?;
            let request = Request::parse(&scn, service, &f[3..]).map_err(|m| bad(*line, key, m))?;
            scn.script.push(ScriptCall {
                tick,
                caller,
                request,
                line: *line,
            });
        }

        for (line, key, value) in &self.explore {
            let full = format!("explore.{key}");
            let list = || value.split(',').map(str::trim).filter(|s| !s.is_empty());
            match key.split('.').collect::<Vec<_>>().as_slice() {
                ["messages"] => scn.explore.messages = num(*line, &full, value)?,
                ["timeouts"] => {
                    scn.explore.timeouts = list().map(|t| token(*line, &full, t)).collect::<Result<_, _>>()?
                }
                ["delays"] => {
                    scn.explore.delays = list().map(|t| num(*line, &full, t)).collect::<Result<_, _>>()?
                }
                ["priorities"] => {
                    scn.explore.priorities = list().map(|t| num(*line, &full, t)).collect::<Result<_, _>>()?
                }
                ["menu", rest @ ..] if !rest.is_empty() => {
                    let proc = rest.join(".");
                    let proc = proc.as_str();
                    let pid = scn
                        .process_id(proc)
                        .ok_or_else(|| bad(*line, &full, format!("unknown process `{proc}`")))?;
                    let menu = list().map(|t| token(*line, &full, t)).collect::<Result<_, _>>()?;
                    scn.explore.menu.insert(pid, menu);
                }
                ["main_ops"] => {
                    scn.explore.main_ops = list().map(|t| token(*line, &full, t)).collect::<Result<_, _>>()?
                }
                ["init"] => {
                    scn.explore.init = match value.to_ascii_lowercase().as_str() {
                        "auto" => InitPolicy::Auto,
                        "free" => InitPolicy::Free,
                        _ => return Err(bad(*line, &full, "expected auto|free")),
                    }
                }
                _ => return Err(bad(*line, &full, "unknown key")),
            }
        }
        Ok(scn)
    }

    /// Best-effort line lookup for validation errors keyed by name.
    fn line_of(&self, key: &str) -> usize {
        let mut it = key.splitn(2, '.');
        let (head, name) = (it.next().unwrap_or(""), it.next().unwrap_or(""));
        let lookup = |v: &[(usize, String, String)]| v.iter().find(|e| e.1 == name).map(|e| e.0);
        match head {
            "process" => lookup(&self.processes),
            "port" => lookup(&self.ports),
            "channel" => lookup(&self.channels),
            "buffer" => lookup(&self.buffers),
            "semaphore" => lookup(&self.semaphores),
            "schedule" => self.windows.first().map(|w| w.1),
            _ => None,
        }
        .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "schedule.mtf = 10\nschedule.window.1 = P1:0:10\n";

    #[test]
    fn minimal_scenario() {
        let scn = Scenario::parse(MINIMAL).unwrap();
        assert_eq!(scn.partitions.len(), 1);
        assert_eq!(scn.partitions[0].period, 10);
        assert_eq!(scn.schedule.active_window(13).unwrap().partition, PartitionId(0));
    }

    #[test]
    fn empty_schedule_rejected() {
        let err = Scenario::parse("schedule.mtf = 10\npartition.P1.period = 10\n").unwrap_err();
        assert_eq!(err.key, "schedule.window");
    }

    #[test]
    fn overlapping_windows_rejected() {
        let text = "schedule.mtf = 10\nschedule.window.1 = P1:0:6\nschedule.window.2 = P2:5:10\n";
        let err = Scenario::parse(text).unwrap_err();
        assert!(err.message.contains("overlaps"), "{err}");
        assert_eq!(err.line, 2);
    }

    #[test]
    fn unknown_key_has_line() {
        let err = Scenario::parse(&format!("{MINIMAL}bogus.key = 1\n")).unwrap_err();
        assert_eq!((err.line, err.key.as_str()), (3, "bogus.key"));
    }

    #[test]
    fn queuing_channel_wiring() {
        let text = format!(
            "{MINIMAL}port.S = queuing:src:2:fifo\nport.S.partition = P1\nport.D = queuing:dst:2:priority\nport.D.partition = P1\nchannel.C = S->D\n"
        );
        let scn = Scenario::parse(&text).unwrap();
        assert_eq!(scn.channels[0].dests, vec![PortId(1)]);
        assert_eq!(scn.ports[1].discipline, Discipline::Priority);
        assert_eq!(scn.channel_of(PortId(0)).unwrap().name, "C");
    }

    #[test]
    fn reversed_channel_rejected() {
        let text = format!(
            "{MINIMAL}port.S = queuing:src:2\nport.S.partition = P1\nport.D = queuing:dst:2\nport.D.partition = P1\nchannel.C = D->S\n"
        );
        assert!(Scenario::parse(&text).is_err());
    }

    #[test]
    fn handler_slot_gets_max_priority() {
        let text = format!("{MINIMAL}max_priority = 20\npartition.P1.error_handler = inf\nprocess.A = P1:5:aperiodic::inf\n");
        let scn = Scenario::parse(&text).unwrap();
        let h = scn.partitions[0].handler.unwrap();
        assert_eq!(scn.process(h).priority, 20);
        assert!(scn.process(h).is_handler);
        assert_eq!(scn.processes_of(PartitionId(0)).count(), 1);
    }
}
