//! Live session over TCP. Each line in either direction is one JSON message.
//!
//! The simulation runs on the calling thread. Each client gets a reader
//! thread feeding a bounded command channel and a writer thread that sends
//! its replies plus whatever frame is newest when it is ready; frames a slow
//! client misses are skipped.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::mpsc::{self, Receiver, SyncSender, TryRecvError, TrySendError};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use anyhow::Context;
use clap::Args;
use lenia_evo::engine::recording::Recorder;
use lenia_evo::engine::{snapshot, Simulation};
use lenia_evo::gateway::{Controller, ServerMessage};
use lenia_evo::genome::Param;

#[derive(Args)]
pub struct ServeArgs {
    #[arg(long)]
    config: PathBuf,
    /// Address to listen on, e.g. 127.0.0.1:7878 (port 0 picks a free port).
    #[arg(long)]
    listen: String,
    #[arg(long = "seed-pattern")]
    seed_pattern: Vec<PathBuf>,
    #[arg(long, default_value_t = 1)]
    downsample: usize,
    /// Genospace layer shown next to the phenospace, as `param:kernel` (e.g. `h:3`).
    #[arg(long)]
    layer: Option<String>,
    #[arg(long, default_value_t = 1)]
    steps_per_frame: u32,
    /// Upper bound on published frames per second (0 = unbounded).
    #[arg(long, default_value_t = 30.0)]
    max_fps: f64,
    /// Record stats, events and applied commands to this JSON-lines file.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Stop after this many ticks (0 = run until killed).
    #[arg(long, default_value_t = 0)]
    max_ticks: u64,
}

/// Latest-value slot shared by all writers.
struct FrameSlot {
    latest: Mutex<(u64, Option<Arc<String>>)>,
    ready: Condvar,
}

impl FrameSlot {
    fn publish(&self, msg: String) {
        let mut g = self.latest.lock().expect("frame slot poisoned");
        g.0 += 1;
        g.1 = Some(Arc::new(msg));
        self.ready.notify_all();
    }

    fn newer_than(&self, seen: u64, wait: Duration) -> Option<(u64, Arc<String>)> {
        let g = self.latest.lock().expect("frame slot poisoned");
        let (g, _) = self
            .ready
            .wait_timeout_while(g, wait, |g| g.0 <= seen)
            .expect("frame slot poisoned");
        match &g.1 {
            Some(msg) if g.0 > seen => Some((g.0, msg.clone())),
            _ => None,
        }
    }
}

type Clients = Arc<Mutex<HashMap<u64, SyncSender<String>>>>;

fn parse_layer(s: &str) -> anyhow::Result<(Param, usize)> {
    let (p, k) = s.split_once(':').context("layer must look like h:3")?;
    Ok((p.parse().map_err(anyhow::Error::msg)?, k.parse()?))
}

pub fn serve(args: ServeArgs) -> anyhow::Result<u8> {
    let config = crate::load_config(&args.config)?;
    let seeds = crate::load_seeds(&args.seed_pattern, &config)?;
    let mut ctl = Controller::new(Simulation::new(config, &seeds)?);
    ctl.frame_options.downsample = args.downsample;
    ctl.frame_options.layer = args.layer.as_deref().map(parse_layer).transpose()?;
    ctl.enqueue(lenia_evo::gateway::Command::SetSpeed {
        steps_per_frame: args.steps_per_frame,
    })
    .map_err(anyhow::Error::msg)?;
    ctl.frame()?; // rejects a bad downsample before anyone connects

    let listener = TcpListener::bind(&args.listen).with_context(|| format!("binding {}", args.listen))?;
    println!("listening on {}", listener.local_addr()?);
    std::io::stdout().flush()?;

    let slot = Arc::new(FrameSlot {
        latest: Mutex::new((0, None)),
        ready: Condvar::new(),
    });
    let clients: Clients = Arc::new(Mutex::new(HashMap::new()));
    let (cmd_tx, cmd_rx) = mpsc::sync_channel::<(u64, String)>(256);
    {
        let (slot, clients) = (slot.clone(), clients.clone());
        thread::spawn(move || accept_loop(listener, slot, clients, cmd_tx));
    }

    let mut recorder = match &args.record {
        Some(p) => Some(Recorder::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        ))),
        None => None,
    };
    let frame_interval = if args.max_fps > 0.0 {
        Duration::from_secs_f64(1.0 / args.max_fps)
    } else {
        Duration::ZERO
    };
    slot.publish(ServerMessage::Frame(Box::new(ctl.frame()?)).to_json());

    loop {
        let started = Instant::now();
        drain_commands(&mut ctl, &cmd_rx, &clients);
        let (replies, lines) = match ctl.advance() {
            Ok(r) => r,
            Err(e) => {
                let dump = PathBuf::from("fault.loee");
                let sim = ctl.simulation();
                snapshot::save(&dump, sim.state(), sim.config())?;
                let msg = ServerMessage::Error {
                    id: serde_json::Value::Null,
                    code: lenia_evo::gateway::ErrorCode::Failed,
                    message: format!("simulation fault: {e}"),
                };
                slot.publish(msg.to_json());
                eprintln!("fault: {e}; state dumped to {}", dump.display());
                thread::sleep(Duration::from_millis(200));
                return Ok(3);
            }
        };
        for (origin, reply) in replies {
            send_to(&clients, origin, reply.to_json());
        }
        if let Some(rec) = recorder.as_mut() {
            for line in &lines {
                rec.record(line)?;
            }
            rec.flush()?;
        }
        slot.publish(ServerMessage::Frame(Box::new(ctl.frame()?)).to_json());
        if args.max_ticks > 0 && ctl.tick() >= args.max_ticks {
            thread::sleep(Duration::from_millis(100));
            return Ok(0);
        }
        let pause = if ctl.paused() {
            Duration::from_millis(20)
        } else {
            frame_interval.saturating_sub(started.elapsed())
        };
        if !pause.is_zero() {
            thread::sleep(pause);
        }
    }
}

fn drain_commands(ctl: &mut Controller, rx: &Receiver<(u64, String)>, clients: &Clients) {
    loop {
        match rx.try_recv() {
            Ok((origin, raw)) => {
                let reply = ctl.submit_from(origin, &raw);
                send_to(clients, origin, reply.to_json());
            }
            Err(TryRecvError::Empty | TryRecvError::Disconnected) => return,
        }
    }
}

fn send_to(clients: &Clients, origin: u64, msg: String) {
    let map = clients.lock().expect("client map poisoned");
    if let Some(tx) = map.get(&origin) {
        if let Err(TrySendError::Full(_)) = tx.try_send(msg) {
            log::warn!("client {origin} is not reading replies; dropping one");
        }
    }
}

fn accept_loop(listener: TcpListener, slot: Arc<FrameSlot>, clients: Clients, cmd_tx: SyncSender<(u64, String)>) {
    let mut next_id = 1u64;
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                log::warn!("accept failed: {e}");
                continue;
            }
        };
        let id = next_id;
        next_id += 1;
        log::info!("client {id} connected from {:?}", stream.peer_addr().ok());
        let (reply_tx, reply_rx) = mpsc::sync_channel::<String>(64);
        clients.lock().expect("client map poisoned").insert(id, reply_tx);
        let reader = match stream.try_clone() {
            Ok(r) => r,
            Err(e) => {
                log::warn!("client {id}: {e}");
                continue;
            }
        };
        {
            let (clients, cmd_tx) = (clients.clone(), cmd_tx.clone());
            thread::spawn(move || {
                read_commands(id, reader, &cmd_tx);
                clients.lock().expect("client map poisoned").remove(&id);
                log::info!("client {id} disconnected");
            });
        }
        let slot = slot.clone();
        thread::spawn(move || write_messages(stream, &slot, reply_rx));
    }
}

fn read_commands(id: u64, stream: TcpStream, cmd_tx: &SyncSender<(u64, String)>) {
    for line in BufReader::new(stream).lines() {
        let Ok(line) = line else { return };
        if line.trim().is_empty() {
            continue;
        }
        if cmd_tx.send((id, line)).is_err() {
            return;
        }
    }
}

fn write_messages(stream: TcpStream, slot: &FrameSlot, replies: Receiver<String>) {
    let mut out = BufWriter::new(stream);
    let mut seen = 0u64;
    loop {
        loop {
            match replies.try_recv() {
                Ok(msg) => {
                    if writeln!(out, "{msg}").is_err() {
                        return;
                    }
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => return,
            }
        }
        if let Some((version, frame)) = slot.newer_than(seen, Duration::from_millis(20)) {
            seen = version;
            if writeln!(out, "{frame}").is_err() {
                return;
            }
        }
        if out.flush().is_err() {
            return;
        }
    }
}
