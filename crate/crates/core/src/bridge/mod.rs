//! Transport between the core, the tracker and the projected interface.

mod bus;
mod envelope;
mod framing;
mod ingest;
mod peers;
mod ui;

pub use bus::{EventBus, LatestEvents, RecvError, SubscribeHandle, Subscription, TopicFilter, SUBSCRIBER_QUEUE_LIMIT};
pub use envelope::{
    canonical_json, decode_event, encode_event, encode_frame, EventEnvelope, MalformedEvent, Topic, MAX_FRAME_LEN,
};
pub use framing::{decode_stream, FrameDecoder};
pub use ingest::{
    ingest_tracker_stream, DatagramSource, IngestOutcome, IngestStats, ScriptedSource, SourceError, TrackerIngest,
    UdpSource, MAX_DATAGRAM,
};
pub use peers::{PeerConfig, PeerConfigError};
pub use ui::{parse_ui_message, UiCommand, UiMessageError, UiServer};
