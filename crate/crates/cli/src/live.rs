//! Live mode: sockets and worker threads around one event-loop writer.

use crate::config::{ConfigError, RuntimeConfig};
use crate::pipeline::{make_adapter, run_detection, DetectionFailure, LogSink, Pipeline, Summary};
use spice_core::bridge::{ingest_tracker_stream, EventBus, IngestStats, UdpSource, UiCommand, UiServer};
use spice_core::detection::DetectionResult;
use spice_core::tracking::PoseFrame;
use std::net::{SocketAddr, TcpListener, UdpSocket};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, Sender, TrySendError};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

/// Capacity of the reader → loop queue.
pub const INPUT_QUEUE: usize = 1024;
const POLL: Duration = Duration::from_millis(20);

pub enum Input {
    Frame(PoseFrame, Instant),
    Command(UiCommand),
    Detected {
        image_ref: String,
        result: Result<DetectionResult, DetectionFailure>,
    },
}

impl From<UiCommand> for Input {
    fn from(c: UiCommand) -> Self {
        Input::Command(c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiveOutcome {
    pub summary: Summary,
    pub ingest: IngestStats,
    /// Datagram arrival to display publication, for frames that changed the display.
    pub latencies: Vec<Duration>,
    /// Frames discarded because the event loop fell behind.
    pub queue_drops: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum LiveError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("binding {what} on {addr}: {source}")]
    Bind {
        what: &'static str,
        addr: SocketAddr,
        source: std::io::Error,
    },
}

pub struct LiveHandle {
    pub tracker_addr: SocketAddr,
    pub ui_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    event_loop: JoinHandle<LiveOutcome>,
}

impl LiveHandle {
    pub fn stop(self) -> LiveOutcome {
        self.stop.store(true, Ordering::Relaxed);
        self.event_loop.join().expect("event loop panicked")
    }
}

fn bind_err(what: &'static str, addr: SocketAddr) -> impl FnOnce(std::io::Error) -> LiveError {
    move |source| LiveError::Bind { what, addr, source }
}

/// Binds every socket and starts the threads. Returns once all are listening.
pub fn start_live(config: &RuntimeConfig) -> Result<LiveHandle, LiveError> {
    let peers = &config.file.peers;
    let tracker = UdpSource::bind(peers.tracker_listen, POLL).map_err(bind_err("tracker socket", peers.tracker_listen))?;
    let tracker_addr = tracker.local_addr().map_err(bind_err("tracker socket", peers.tracker_listen))?;
    let ui_listener = TcpListener::bind(peers.ui_listen).map_err(bind_err("UI channel", peers.ui_listen))?;

    let mut bus = EventBus::new();
    if let Some(dest) = peers.event_publish {
        let any: SocketAddr = if dest.is_ipv4() { "0.0.0.0:0" } else { "[::]:0" }.parse().unwrap();
        let out = UdpSocket::bind(any).map_err(bind_err("event socket", any))?;
        bus = bus.with_udp_peers(out, vec![dest]);
    }
    let log = match &config.file.event_log {
        Some(p) => {
            let path = config.resolve(p);
            let f = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(|source| ConfigError::Io { path, source })?;
            LogSink::Writer(Box::new(std::io::LineWriter::new(f)))
        }
        None => LogSink::Discard,
    };
    let mut adapter = make_adapter(config)?;

    let stop = Arc::new(AtomicBool::new(false));
    let (input_tx, input_rx) = mpsc::sync_channel::<Input>(INPUT_QUEUE);
    let (cmd_tx, cmd_rx) = mpsc::channel::<Input>();
    let queue_drops = Arc::new(AtomicU64::new(0));

    let ui = UiServer::start(ui_listener, bus.subscribe_handle(), bus.latest(), cmd_tx.clone())
        .map_err(bind_err("UI channel", peers.ui_listen))?;
    let ui_addr = ui.local_addr();

    let reader = {
        let (stop, tx, drops) = (stop.clone(), input_tx.clone(), queue_drops.clone());
        let mut tracker = tracker;
        std::thread::spawn(move || {
            let sink = |frame, arrived| match tx.try_send(Input::Frame(frame, arrived)) {
                Ok(()) => {}
                Err(TrySendError::Full(_)) => {
                    drops.fetch_add(1, Ordering::Relaxed);
                }
                Err(TrySendError::Disconnected(_)) => {}
            };
            ingest_tracker_stream(&mut tracker, sink, || !stop.load(Ordering::Relaxed)).unwrap_or_default()
        })
    };

    // detection is slow; it runs beside the loop and reports back as input
    let (detect_tx, detect_rx) = mpsc::channel::<String>();
    let detector = {
        let (tx, cfg) = (cmd_tx, config.clone());
        std::thread::spawn(move || {
            for image_ref in detect_rx {
                let path = cfg.resolve(std::path::Path::new(&image_ref));
                let result = run_detection(
                    adapter.as_mut(),
                    &path,
                    &image_ref,
                    cfg.file.distortion.as_ref(),
                    cfg.detection_deadline(),
                );
                if tx.send(Input::Detected { image_ref, result }).is_err() {
                    break;
                }
            }
        })
    };

    let mut pipeline = Pipeline::new(config, bus, log);
    let camera = config.file.camera_image.as_ref().map(|p| p.to_string_lossy().into_owned());
    pipeline.set_default_image(camera.clone());
    let event_loop = {
        let stop = stop.clone();
        std::thread::spawn(move || {
            let mut state = LoopState {
                pipeline,
                start: Instant::now(),
                latencies: Vec::new(),
                detect_tx,
                camera,
            };
            state.run(&input_rx, &cmd_rx, &stop);
            drop(input_tx);
            let ingest = reader.join().unwrap_or_default();
            drop(state.detect_tx);
            let _ = detector.join();
            ui.shutdown();
            LiveOutcome {
                summary: state.pipeline.summary(),
                ingest,
                latencies: state.latencies,
                queue_drops: queue_drops.load(Ordering::Relaxed),
            }
        })
    };
    Ok(LiveHandle {
        tracker_addr,
        ui_addr,
        stop,
        event_loop,
    })
}

struct LoopState {
    pipeline: Pipeline,
    start: Instant,
    latencies: Vec<Duration>,
    detect_tx: Sender<String>,
    camera: Option<String>,
}

impl LoopState {
    fn now(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn run(&mut self, frames: &Receiver<Input>, commands: &Receiver<Input>, stop: &AtomicBool) {
        self.pipeline.publish_display(0.0);
        if let Some(c) = self.camera.clone() {
            let _ = self.detect_tx.send(c);
        }
        while !stop.load(Ordering::Relaxed) {
            while let Ok(input) = commands.try_recv() {
                self.handle(input);
            }
            match frames.recv_timeout(Duration::from_millis(5)) {
                Ok(input) => self.handle(input),
                Err(mpsc::RecvTimeoutError::Timeout) => {}
                Err(mpsc::RecvTimeoutError::Disconnected) => break,
            }
        }
    }

    fn handle(&mut self, input: Input) {
        match input {
            Input::Frame(frame, arrived) => {
                if self.pipeline.handle_frame(&frame) {
                    self.latencies.push(arrived.elapsed());
                }
            }
            Input::Command(cmd) => {
                let t = self.now();
                if let Some(image) = self.pipeline.handle_command(t, &cmd) {
                    let _ = self.detect_tx.send(image);
                }
            }
            Input::Detected { image_ref, result } => {
                let t = self.now();
                self.pipeline.handle_detection(t, &image_ref, result);
            }
        }
    }
}

/// Nearest-rank percentile of a latency sample.
pub fn percentile(samples: &[Duration], p: f64) -> Option<Duration> {
    if samples.is_empty() {
        return None;
    }
    let mut v = samples.to_vec();
    v.sort_unstable();
    let rank = ((p / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    Some(v[rank.min(v.len()) - 1])
}
