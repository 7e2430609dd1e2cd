//! Single-writer event bus with bounded, drop-oldest subscriber queues.

use super::envelope::{encode_event, EventEnvelope, Topic};
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::net::{SocketAddr, UdpSocket};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

pub const SUBSCRIBER_QUEUE_LIMIT: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopicFilter {
    All,
    Only(BTreeSet<Topic>),
    Except(BTreeSet<Topic>),
}

impl TopicFilter {
    pub fn only(topics: &[Topic]) -> Self {
        Self::Only(topics.iter().copied().collect())
    }

    pub fn except(topics: &[Topic]) -> Self {
        Self::Except(topics.iter().copied().collect())
    }

    pub fn accepts(&self, topic: Topic) -> bool {
        match self {
            Self::All => true,
            Self::Only(set) => set.contains(&topic),
            Self::Except(set) => !set.contains(&topic),
        }
    }
}

#[derive(Debug)]
struct Queue {
    items: VecDeque<EventEnvelope>,
    dropped: u64,
    closed: bool,
}

#[derive(Debug)]
struct Shared {
    queue: Mutex<Queue>,
    ready: Condvar,
    limit: usize,
}

/// Receiving end of a subscription. Cloning is not offered; each
/// subscriber owns one queue.
#[derive(Debug)]
pub struct Subscription {
    shared: Arc<Shared>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum RecvError {
    #[error("no event within the timeout")]
    Timeout,
    #[error("the bus has shut down")]
    Closed,
}

impl Subscription {
    pub fn try_recv(&self) -> Option<EventEnvelope> {
        self.shared.queue.lock().unwrap().items.pop_front()
    }

    pub fn recv_timeout(&self, timeout: Duration) -> Result<EventEnvelope, RecvError> {
        let deadline = Instant::now() + timeout;
        let mut q = self.shared.queue.lock().unwrap();
        loop {
            if let Some(e) = q.items.pop_front() {
                return Ok(e);
            }
            if q.closed {
                return Err(RecvError::Closed);
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(RecvError::Timeout);
            }
            q = self.shared.ready.wait_timeout(q, deadline - now).unwrap().0;
        }
    }

    pub fn drain(&self) -> Vec<EventEnvelope> {
        self.shared.queue.lock().unwrap().items.drain(..).collect()
    }

    /// Events discarded because this subscriber fell behind.
    pub fn dropped(&self) -> u64 {
        self.shared.queue.lock().unwrap().dropped
    }

    pub fn is_closed(&self) -> bool {
        self.shared.queue.lock().unwrap().closed
    }
}

#[derive(Debug)]
struct Subscriber {
    filter: TopicFilter,
    shared: Arc<Shared>,
}

/// Latest envelope per topic, readable from other threads.
#[derive(Debug, Clone, Default)]
pub struct LatestEvents(Arc<Mutex<BTreeMap<Topic, EventEnvelope>>>);

impl LatestEvents {
    pub fn get(&self, topic: Topic) -> Option<EventEnvelope> {
        self.0.lock().unwrap().get(&topic).cloned()
    }
}

/// Handle for registering subscribers from other threads.
#[derive(Debug, Clone, Default)]
pub struct SubscribeHandle {
    pending: Arc<Mutex<Vec<Subscriber>>>,
    limit: usize,
}

impl SubscribeHandle {
    pub fn subscribe(&self, filter: TopicFilter) -> Subscription {
        let (sub, handle) = new_subscriber(filter, self.limit);
        self.pending.lock().unwrap().push(sub);
        handle
    }
}

fn new_subscriber(filter: TopicFilter, limit: usize) -> (Subscriber, Subscription) {
    let shared = Arc::new(Shared {
        queue: Mutex::new(Queue {
            items: VecDeque::new(),
            dropped: 0,
            closed: false,
        }),
        ready: Condvar::new(),
        limit,
    });
    (
        Subscriber {
            filter,
            shared: shared.clone(),
        },
        Subscription { shared },
    )
}

/// Publishes envelopes with a strictly increasing `seq`.
///
/// Only the owner publishes. Subscriptions (also those added through a
/// [`SubscribeHandle`]) see every accepted topic in publication order.
#[derive(Debug)]
pub struct EventBus {
    next_seq: u64,
    subscribers: Vec<Subscriber>,
    handle: SubscribeHandle,
    latest: LatestEvents,
    udp: Option<(UdpSocket, Vec<SocketAddr>)>,
    udp_errors: u64,
}

impl Default for EventBus {
    fn default() -> Self {
        Self::new()
    }
}

impl EventBus {
    pub fn new() -> Self {
        Self::with_queue_limit(SUBSCRIBER_QUEUE_LIMIT)
    }

    pub fn with_queue_limit(limit: usize) -> Self {
        assert!(limit > 0, "queue limit must be positive");
        Self {
            next_seq: 0,
            subscribers: Vec::new(),
            handle: SubscribeHandle {
                pending: Arc::default(),
                limit,
            },
            latest: LatestEvents::default(),
            udp: None,
            udp_errors: 0,
        }
    }

    /// Also send every envelope as one bare-JSON datagram to each peer.
    pub fn with_udp_peers(mut self, socket: UdpSocket, peers: Vec<SocketAddr>) -> Self {
        self.udp = Some((socket, peers));
        self
    }

    pub fn subscribe(&mut self, filter: TopicFilter) -> Subscription {
        let (sub, handle) = new_subscriber(filter, self.handle.limit);
        self.subscribers.push(sub);
        handle
    }

    pub fn subscribe_handle(&self) -> SubscribeHandle {
        self.handle.clone()
    }

    pub fn latest(&self) -> LatestEvents {
        self.latest.clone()
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn udp_errors(&self) -> u64 {
        self.udp_errors
    }

    pub fn publish(&mut self, topic: Topic, timestamp: f64, payload: Value) -> EventEnvelope {
        let env = EventEnvelope::new(self.next_seq, timestamp, topic, payload);
        self.next_seq += 1;
        self.subscribers.append(&mut self.handle.pending.lock().unwrap());
        self.latest.0.lock().unwrap().insert(topic, env.clone());
        // subscribers whose handle was dropped are pruned here
        self.subscribers.retain(|s| Arc::strong_count(&s.shared) > 1);
        for s in &self.subscribers {
            if !s.filter.accepts(topic) {
                continue;
            }
            let mut q = s.shared.queue.lock().unwrap();
            if q.items.len() >= s.shared.limit {
                q.items.pop_front();
                q.dropped += 1;
            }
            q.items.push_back(env.clone());
            drop(q);
            s.shared.ready.notify_one();
        }
        if let Some((socket, peers)) = &self.udp {
            if let Ok(bytes) = encode_event(&env) {
                for p in peers {
                    if socket.send_to(&bytes, p).is_err() {
                        self.udp_errors += 1;
                    }
                }
            }
        }
        env
    }

    /// Wakes all subscribers; further receives report [`RecvError::Closed`] once drained.
    pub fn close(&mut self) {
        self.subscribers.append(&mut self.handle.pending.lock().unwrap());
        for s in &self.subscribers {
            s.shared.queue.lock().unwrap().closed = true;
            s.shared.ready.notify_all();
        }
    }
}

impl Drop for EventBus {
    fn drop(&mut self) {
        self.close();
    }
}
