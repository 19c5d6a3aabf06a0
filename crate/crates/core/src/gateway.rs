//! Steering commands, frame encoding and the transport-independent session
//! controller used by the live service.

use std::collections::VecDeque;
use std::hash::Hasher;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engine::recording::RecordLine;
use crate::engine::{snapshot, stats, PatternFile, SimConfig, Simulation, Stats, WorldState};
use crate::error::{Error, Result};
use crate::evolution::EventRecord;
use crate::genome::{Param, N_GENES};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    Restart {
        #[serde(default)]
        seed: Option<u64>,
    },
    Pause,
    Resume,
    SetSpeed {
        steps_per_frame: u32,
    },
    SetGammaMut {
        value: f64,
    },
    SetGammaPen {
        value: f64,
    },
    ToggleWalls {
        on: bool,
    },
    Dropper {
        x: usize,
        y: usize,
        radius: usize,
    },
    SaveSnapshot {
        path: String,
    },
}

pub const COMMAND_KINDS: [&str; 9] = [
    "restart",
    "pause",
    "resume",
    "set_speed",
    "set_gamma_mut",
    "set_gamma_pen",
    "toggle_walls",
    "dropper",
    "save_snapshot",
];

impl Command {
    pub fn kind(&self) -> &'static str {
        match self {
            Command::Restart { .. } => "restart",
            Command::Pause => "pause",
            Command::Resume => "resume",
            Command::SetSpeed { .. } => "set_speed",
            Command::SetGammaMut { .. } => "set_gamma_mut",
            Command::SetGammaPen { .. } => "set_gamma_pen",
            Command::ToggleWalls { .. } => "toggle_walls",
            Command::Dropper { .. } => "dropper",
            Command::SaveSnapshot { .. } => "save_snapshot",
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        match *self {
            Command::SetSpeed { steps_per_frame } if steps_per_frame < 1 => Err("steps_per_frame must be >= 1".into()),
            Command::SetGammaMut { value } | Command::SetGammaPen { value } if !(value >= 0.0 && value.is_finite()) => {
                Err(format!("rate must be a finite value >= 0, got {value}"))
            }
            Command::Dropper { radius, .. } if radius < 1 => Err("dropper radius must be >= 1".into()),
            Command::SaveSnapshot { ref path } if path.is_empty() => Err("snapshot path is empty".into()),
            _ => Ok(()),
        }
    }

    /// Whether applying the command can change the simulated state.
    pub fn affects_state(&self) -> bool {
        matches!(
            self,
            Command::Restart { .. }
                | Command::SetGammaMut { .. }
                | Command::SetGammaPen { .. }
                | Command::ToggleWalls { .. }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    MalformedJson,
    UnknownKind,
    InvalidPayload,
    OutOfRange,
    QueueFull,
    Failed,
}

/// Server-to-client messages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Ack {
        #[serde(default)]
        id: Value,
        kind: String,
        /// Controller tick at whose boundary the command applies.
        apply_tick: u64,
    },
    Error {
        #[serde(default)]
        id: Value,
        code: ErrorCode,
        message: String,
    },
    Frame(Box<FrameMessage>),
    Dropper {
        #[serde(default)]
        id: Value,
        step: u64,
        pattern: Box<PatternFile>,
    },
    Saved {
        #[serde(default)]
        id: Value,
        step: u64,
        path: String,
    },
}

impl ServerMessage {
    fn error(id: Value, code: ErrorCode, message: impl Into<String>) -> Self {
        ServerMessage::Error {
            id,
            code,
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueuedCommand {
    pub id: Value,
    /// Session the command came from, for routing deferred replies.
    pub origin: u64,
    pub command: Command,
}

/// A command together with the tick it was applied at. Ticks count steps
/// taken by the controller and do not reset on restart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduledCommand {
    pub tick: u64,
    pub command: Command,
}

#[derive(Clone, Debug)]
pub struct CommandQueue {
    items: VecDeque<QueuedCommand>,
    capacity: usize,
}

impl CommandQueue {
    pub fn new(capacity: usize) -> Self {
        CommandQueue {
            items: VecDeque::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, item: QueuedCommand) -> std::result::Result<(), QueuedCommand> {
        if self.items.len() >= self.capacity {
            return Err(item);
        }
        self.items.push_back(item);
        Ok(())
    }

    pub fn drain(&mut self) -> impl Iterator<Item = QueuedCommand> + '_ {
        self.items.drain(..)
    }
}

/// Parses one raw client message. `Err` carries the error reply.
pub fn parse_command(raw: &str) -> std::result::Result<QueuedCommand, ServerMessage> {
    let value: Value = serde_json::from_str(raw)
        .map_err(|e| ServerMessage::error(Value::Null, ErrorCode::MalformedJson, e.to_string()))?;
    let Value::Object(mut obj) = value else {
        return Err(ServerMessage::error(
            Value::Null,
            ErrorCode::MalformedJson,
            "expected a JSON object",
        ));
    };
    let id = obj.remove("id").unwrap_or(Value::Null);
    match obj.get("kind") {
        Some(Value::String(k)) if COMMAND_KINDS.contains(&k.as_str()) => {}
        Some(Value::String(k)) => {
            return Err(ServerMessage::error(
                id,
                ErrorCode::UnknownKind,
                format!("unknown command kind {k:?}"),
            ));
        }
        _ => return Err(ServerMessage::error(id, ErrorCode::UnknownKind, "missing command kind")),
    }
    let command: Command = serde_json::from_value(Value::Object(obj))
        .map_err(|e| ServerMessage::error(id.clone(), ErrorCode::InvalidPayload, e.to_string()))?;
    command
        .validate()
        .map_err(|m| ServerMessage::error(id.clone(), ErrorCode::OutOfRange, m))?;
    Ok(QueuedCommand { id, origin: 0, command })
}

/// Validates and enqueues a raw message; the reply is an ack naming the
/// tick the command applies at, or a structured error.
pub fn handle_command(queue: &mut CommandQueue, raw: &str, next_tick: u64) -> ServerMessage {
    handle_command_from(queue, 0, raw, next_tick)
}

pub fn handle_command_from(queue: &mut CommandQueue, origin: u64, raw: &str, next_tick: u64) -> ServerMessage {
    match parse_command(raw) {
        Ok(mut item) => {
            item.origin = origin;
            let (id, kind) = (item.id.clone(), item.command.kind().to_string());
            match queue.push(item) {
                Ok(()) => ServerMessage::Ack {
                    id,
                    kind,
                    apply_tick: next_tick,
                },
                Err(item) => ServerMessage::error(item.id, ErrorCode::QueueFull, "command queue is full"),
            }
        }
        Err(reply) => reply,
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = fnv::FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// FNV-1a over the phenospace as little-endian f32 in snapshot order.
pub fn state_checksum(state: &WorldState) -> String {
    format!("{:016x}", fnv1a64(&snapshot::f32_bytes(state.phenospace.as_slice())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    pub paused: bool,
    pub steps_per_frame: u32,
    pub gamma_mut: f64,
    pub gamma_pen: f64,
    pub walls: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerImage {
    pub param: Param,
    pub kernel: usize,
    /// Base64 of 8-bit grayscale, row-major.
    pub image: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameMessage {
    pub step: u64,
    pub tick: u64,
    pub stats: Stats,
    pub downsample: usize,
    pub width: usize,
    pub height: usize,
    /// Base64 of RGB8, row-major: pixel `(u, v)` at byte `3·(v·width + u)`.
    pub image: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<LayerImage>,
    pub events: Vec<EventRecord>,
    /// Hex FNV-1a 64 of the full-resolution phenospace.
    pub checksum: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controls: Option<Controls>,
}

#[inline]
fn to_byte(mean: f64) -> u8 {
    (mean * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Block means of `layers`, row-major, interleaved.
fn downsample_layers(layers: &[&[f32]], width: usize, height: usize, factor: usize) -> Vec<u8> {
    let (w, h) = (width / factor, height / factor);
    let mut out = vec![0u8; w * h * layers.len()];
    let norm = (factor * factor) as f64;
    for u in 0..w {
        for v in 0..h {
            for (c, layer) in layers.iter().enumerate() {
                let mut sum = 0.0f64;
                for x in u * factor..(u + 1) * factor {
                    let col = &layer[x * height..(x + 1) * height];
                    sum += col[v * factor..(v + 1) * factor].iter().map(|&a| a as f64).sum::<f64>();
                }
                out[(v * w + u) * layers.len() + c] = to_byte(sum / norm);
            }
        }
    }
    out
}

/// RGB8 image of the phenospace, row-major, `(width, height, bytes)`.
pub fn phenospace_rgb(state: &WorldState, downsample: usize) -> Result<(usize, usize, Vec<u8>)> {
    let dims = state.dims();
    if downsample == 0 || dims.width % downsample != 0 || dims.height % downsample != 0 {
        return Err(Error::config(format!("downsample {downsample} does not divide {dims}")));
    }
    let channels: Vec<&[f32]> = state.phenospace.layers().collect();
    Ok((
        dims.width / downsample,
        dims.height / downsample,
        downsample_layers(&channels, dims.width, dims.height, downsample),
    ))
}

pub fn encode_frame(
    state: &WorldState,
    config: &SimConfig,
    downsample: usize,
    layer: Option<(Param, usize)>,
    recent_events: usize,
) -> Result<FrameMessage> {
    let dims = state.dims();
    let (width, height, rgb) = phenospace_rgb(state, downsample)?;
    let layer = match layer {
        Some((param, kernel)) => {
            let index = crate::genome::gene_layer(param, kernel);
            if kernel >= crate::genome::N_KERNELS || index >= N_GENES {
                return Err(Error::config(format!("no genospace layer for kernel {kernel}")));
            }
            let gray = downsample_layers(&[state.genospace.layer(index)], dims.width, dims.height, downsample);
            Some(LayerImage {
                param,
                kernel,
                image: STANDARD.encode(gray),
            })
        }
        None => None,
    };
    let skip = state.events.len().saturating_sub(recent_events);
    Ok(FrameMessage {
        step: state.step,
        tick: 0,
        stats: stats(state, config.epsilon),
        downsample,
        width,
        height,
        image: STANDARD.encode(rgb),
        layer,
        events: state.events.iter().skip(skip).cloned().collect(),
        checksum: state_checksum(state),
        controls: None,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameOptions {
    pub downsample: usize,
    pub layer: Option<(Param, usize)>,
    pub recent_events: usize,
}

impl Default for FrameOptions {
    fn default() -> Self {
        FrameOptions {
            downsample: 1,
            layer: None,
            recent_events: 32,
        }
    }
}

/// Owns the simulation, drains commands at step boundaries and produces
/// frames. The same apply path serves live sessions and replays.
#[derive(Debug)]
pub struct Controller {
    sim: Simulation,
    queue: CommandQueue,
    paused: bool,
    steps_per_frame: u32,
    tick: u64,
    applied: Vec<ScheduledCommand>,
    pub frame_options: FrameOptions,
}

impl Controller {
    pub fn new(sim: Simulation) -> Self {
        Controller {
            sim,
            queue: CommandQueue::new(256),
            paused: false,
            steps_per_frame: 1,
            tick: 0,
            applied: Vec::new(),
            frame_options: FrameOptions::default(),
        }
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn paused(&self) -> bool {
        self.paused
    }

    pub fn steps_per_frame(&self) -> u32 {
        self.steps_per_frame
    }

    /// Every command applied so far, with its tick.
    pub fn schedule(&self) -> &[ScheduledCommand] {
        &self.applied
    }

    pub fn submit(&mut self, raw: &str) -> ServerMessage {
        handle_command(&mut self.queue, raw, self.tick)
    }

    pub fn submit_from(&mut self, origin: u64, raw: &str) -> ServerMessage {
        handle_command_from(&mut self.queue, origin, raw, self.tick)
    }

    pub fn enqueue(&mut self, command: Command) -> std::result::Result<(), String> {
        command.validate()?;
        self.queue
            .push(QueuedCommand {
                id: Value::Null,
                origin: 0,
                command,
            })
            .map_err(|_| "command queue is full".to_string())
    }

    pub fn controls(&self) -> Controls {
        let cfg = self.sim.config();
        Controls {
            paused: self.paused,
            steps_per_frame: self.steps_per_frame,
            gamma_mut: cfg.gamma_mut,
            gamma_pen: cfg.gamma_pen,
            walls: cfg.walls.enabled,
        }
    }

    /// Applies queued commands; returns `(origin, reply)` for those that
    /// produce a deferred reply.
    pub fn apply_pending(&mut self) -> Vec<(u64, ServerMessage)> {
        let pending: Vec<QueuedCommand> = self.queue.drain().collect();
        let mut replies = Vec::new();
        for QueuedCommand { id, origin, command } in pending {
            if let Some(reply) = self.apply(id, &command) {
                replies.push((origin, reply));
            }
            self.applied.push(ScheduledCommand {
                tick: self.tick,
                command,
            });
        }
        replies
    }

    fn apply(&mut self, id: Value, command: &Command) -> Option<ServerMessage> {
        match command {
            Command::Restart { seed } => {
                let seed = seed.unwrap_or(self.sim.config().seed);
                self.sim.restart(seed);
            }
            Command::Pause => self.paused = true,
            Command::Resume => self.paused = false,
            Command::SetSpeed { steps_per_frame } => self.steps_per_frame = *steps_per_frame,
            Command::SetGammaMut { value } => {
                if let Err(e) = self.sim.set_gamma_mut(*value) {
                    return Some(ServerMessage::error(id, ErrorCode::OutOfRange, e.to_string()));
                }
            }
            Command::SetGammaPen { value } => {
                if let Err(e) = self.sim.set_gamma_pen(*value) {
                    return Some(ServerMessage::error(id, ErrorCode::OutOfRange, e.to_string()));
                }
            }
            Command::ToggleWalls { on } => self.sim.set_walls_enabled(*on),
            Command::Dropper { x, y, radius } => {
                return Some(match self.sim.dropper(*x, *y, *radius) {
                    Ok(sample) => ServerMessage::Dropper {
                        id,
                        step: self.sim.state().step,
                        pattern: Box::new(sample.to_pattern_file(&self.sim.config().schema, self.sim.dims())),
                    },
                    Err(e) => ServerMessage::error(id, ErrorCode::OutOfRange, e.to_string()),
                });
            }
            Command::SaveSnapshot { path } => {
                return Some(match snapshot::save(path, self.sim.state(), self.sim.config()) {
                    Ok(()) => ServerMessage::Saved {
                        id,
                        step: self.sim.state().step,
                        path: path.clone(),
                    },
                    Err(e) => ServerMessage::error(id, ErrorCode::Failed, e.to_string()),
                });
            }
        }
        None
    }

    /// One simulation step at the current tick, returning the record line
    /// (commands applied at this tick are included).
    pub fn step_once(&mut self) -> Result<RecordLine> {
        let commands: Vec<ScheduledCommand> = self
            .applied
            .iter()
            .rev()
            .take_while(|c| c.tick == self.tick)
            .cloned()
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect();
        let report = self.sim.step()?;
        self.tick += 1;
        Ok(RecordLine {
            stats: self.sim.stats(),
            events: report.events,
            commands,
        })
    }

    /// Drains commands, then runs one frame's worth of steps unless paused.
    pub fn advance(&mut self) -> Result<(Vec<(u64, ServerMessage)>, Vec<RecordLine>)> {
        let replies = self.apply_pending();
        let mut lines = Vec::new();
        if !self.paused {
            for _ in 0..self.steps_per_frame {
                lines.push(self.step_once()?);
            }
        }
        Ok((replies, lines))
    }

    pub fn frame(&self) -> Result<FrameMessage> {
        let o = &self.frame_options;
        let mut frame = encode_frame(
            self.sim.state(),
            self.sim.config(),
            o.downsample,
            o.layer,
            o.recent_events,
        )?;
        frame.tick = self.tick;
        frame.controls = Some(self.controls());
        Ok(frame)
    }

    /// Runs `ticks` steps applying `schedule` at the recorded ticks.
    pub fn replay(&mut self, schedule: &[ScheduledCommand], ticks: u64) -> Result<()> {
        let mut next = 0;
        while self.tick < ticks {
            while next < schedule.len() && schedule[next].tick <= self.tick {
                self.enqueue(schedule[next].command.clone()).map_err(Error::Config)?;
                next += 1;
            }
            self.apply_pending();
            self.step_once()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Dims, StackedField};

    fn world(dims: Dims) -> (WorldState, SimConfig) {
        let cfg = SimConfig {
            width: dims.width,
            height: dims.height,
            radius: 3,
            n_ring: 6,
            r_oxy: 3,
            ..SimConfig::default()
        };
        (WorldState::empty(dims, 0), cfg)
    }

    fn rgb(frame: &FrameMessage) -> Vec<u8> {
        STANDARD.decode(&frame.image).unwrap()
    }

    #[test]
    fn frames_black_and_white() {
        let (mut st, cfg) = world(Dims::new(8, 12));
        let f = encode_frame(&st, &cfg, 2, None, 8).unwrap();
        assert_eq!((f.width, f.height), (4, 6));
        assert!(rgb(&f).iter().all(|&b| b == 0));
        st.phenospace = StackedField::filled(st.dims(), 3, 1.0);
        let f = encode_frame(&st, &cfg, 4, Some((Param::H, 3)), 8).unwrap();
        assert!(rgb(&f).iter().all(|&b| b == 255));
        let gray = STANDARD.decode(&f.layer.unwrap().image).unwrap();
        assert_eq!(gray.len(), 2 * 3);
        assert!(encode_frame(&st, &cfg, 3, None, 8).is_err());
        assert!(encode_frame(&st, &cfg, 0, None, 8).is_err());
    }

    #[test]
    fn frame_block_mean_rounds_half_up() {
        let (mut st, cfg) = world(Dims::new(8, 8));
        st.phenospace.set(0, 0, 0, 0.0);
        st.phenospace.set(0, 0, 1, 0.0);
        st.phenospace.set(0, 1, 0, 1.0);
        st.phenospace.set(0, 1, 1, 1.0);
        let f = encode_frame(&st, &cfg, 2, None, 8).unwrap();
        assert_eq!(&rgb(&f)[..3], &[128, 0, 0]);
    }

    #[test]
    fn frame_layout_row_major() {
        let (mut st, cfg) = world(Dims::new(8, 6));
        st.phenospace.set(2, 5, 1, 1.0);
        let f = encode_frame(&st, &cfg, 1, None, 8).unwrap();
        let img = rgb(&f);
        assert_eq!(img[(8 + 5) * 3 + 2], 255);
        assert_eq!(img.iter().filter(|&&b| b != 0).count(), 1);
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn parse_errors_are_structured() {
        let cases = [
            ("{not json", ErrorCode::MalformedJson),
            ("[1,2]", ErrorCode::MalformedJson),
            (r#"{"id": 4, "kind": "explode"}"#, ErrorCode::UnknownKind),
            (r#"{"id": 4}"#, ErrorCode::UnknownKind),
            (r#"{"id": 4, "kind": "set_gamma_mut"}"#, ErrorCode::InvalidPayload),
            (
                r#"{"id": 4, "kind": "set_gamma_mut", "value": -1}"#,
                ErrorCode::OutOfRange,
            ),
            (
                r#"{"id": 4, "kind": "set_speed", "steps_per_frame": 0}"#,
                ErrorCode::OutOfRange,
            ),
            (
                r#"{"id": 4, "kind": "dropper", "x": 1, "y": 1, "radius": 0}"#,
                ErrorCode::OutOfRange,
            ),
        ];
        for (raw, code) in cases {
            match parse_command(raw) {
                Err(ServerMessage::Error { code: c, id, .. }) => {
                    assert_eq!(c, code, "{raw}");
                    if code != ErrorCode::MalformedJson {
                        assert_eq!(id, Value::from(4));
                    }
                }
                other => panic!("{raw}: {other:?}"),
            }
        }
    }

    #[test]
    fn ack_echoes_id() {
        let mut q = CommandQueue::new(1);
        let reply = handle_command(&mut q, r#"{"id": "abc", "kind": "set_gamma_mut", "value": 5.0}"#, 7);
        assert_eq!(
            reply,
            ServerMessage::Ack {
                id: Value::from("abc"),
                kind: "set_gamma_mut".into(),
                apply_tick: 7
            }
        );
        let reply = handle_command(&mut q, r#"{"id": "x", "kind": "pause"}"#, 7);
        assert!(matches!(
            reply,
            ServerMessage::Error {
                code: ErrorCode::QueueFull,
                ..
            }
        ));
    }

    #[test]
    fn command_json_shape() {
        let c: Command = serde_json::from_str(r#"{"kind": "toggle_walls", "on": true}"#).unwrap();
        assert_eq!(c, Command::ToggleWalls { on: true });
        let c: Command = serde_json::from_str(r#"{"kind": "restart"}"#).unwrap();
        assert_eq!(c, Command::Restart { seed: None });
    }
}
