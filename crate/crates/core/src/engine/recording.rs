//! JSON-lines recording: one line per step with stats, the step's events and
//! any commands applied before it.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::Stats;
use crate::error::Result;
use crate::evolution::EventRecord;
use crate::gateway::ScheduledCommand;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordLine {
    pub stats: Stats,
    #[serde(default)]
    pub events: Vec<EventRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub commands: Vec<ScheduledCommand>,
}

pub struct Recorder<W: Write> {
    out: W,
}

impl<W: Write> Recorder<W> {
    pub fn new(out: W) -> Self {
        Recorder { out }
    }

    pub fn record(&mut self, line: &RecordLine) -> Result<()> {
        serde_json::to_writer(&mut self.out, line)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub fn read_recording(input: impl BufRead) -> Result<Vec<RecordLine>> {
    let mut lines = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push(serde_json::from_str(&line)?);
        }
    }
    Ok(lines)
}

/// All commands in a recording, in application order.
pub fn command_schedule(lines: &[RecordLine]) -> Vec<ScheduledCommand> {
    lines.iter().flat_map(|l| l.commands.iter().cloned()).collect()
}
