//! One replication: a single sequential timeline of churn, broadcasts and
//! requests.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Exp1, Poisson, Zipf};
use serde::Serialize;

use crate::cluster::{Cluster, NodeKind};
use crate::config::SimConfig;

/// Independent random streams of a replication. Churn paths depend only on
/// the seed, the replication and the rates, so runs that differ in the
/// update interval or the code see the same arrivals and departures.
#[derive(Debug, Clone, Copy)]
enum Stream {
    Init = 0,
    Arrivals = 1,
    Departures = 2,
    Requests = 3,
    Files = 4,
    Choice = 5,
}

fn stream(seed: u64, replication: usize, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((replication as u64) << 3) | purpose as u64);
    rng
}

/// One measured request, as written to the trace file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestRecord {
    pub replication: usize,
    pub time: f64,
    pub rank: u64,
    pub hit: bool,
    pub idle: bool,
    #[serde(rename = "R")]
    pub request_type: u8,
    pub attempts: u32,
    pub symbols_d2d: u32,
    pub delay: f64,
}

/// Raw sums of one replication.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Tally {
    pub requests: u64,
    pub delay_sum: f64,
    pub hits: u64,
    pub idle: u64,
    pub list_requests: u64,
    pub x1_sum: u64,
    pub sessions: u64,
    pub symbols_sum: u64,
    pub channel_time_sum: f64,
    /// `histograms[i][s]`: D2D sessions of request type `i` that obtained
    /// `s` symbols.
    pub histograms: [Vec<u64>; 2],
    pub node_time: f64,
    pub storage_time: f64,
    pub span: f64,
}

impl Tally {
    fn new(k: usize) -> Self {
        Self {
            requests: 0,
            delay_sum: 0.0,
            hits: 0,
            idle: 0,
            list_requests: 0,
            x1_sum: 0,
            sessions: 0,
            symbols_sum: 0,
            channel_time_sum: 0.0,
            histograms: [vec![0; k + 1], vec![0; k]],
            node_time: 0.0,
            storage_time: 0.0,
            span: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Departure {
    time: f64,
    node: usize,
}

impl PartialEq for Departure {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Departure {}

impl PartialOrd for Departure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Departure {
    // Reversed so that the max-heap pops the earliest departure.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.node.cmp(&self.node))
    }
}

/// Result of a serial D2D download.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Session {
    pub attempts: u32,
    pub symbols: u32,
}

/// Serial download of `needed` symbols starting at `start`.
///
/// `candidates` holds the departure times of the listed storage nodes alive
/// at the request; each attempt picks uniformly among those not yet
/// contacted and still present when the attempt starts.
pub(crate) fn d2d_session(
    start: f64,
    needed: u32,
    requester_departure: f64,
    mut candidates: Vec<f64>,
    t_d: f64,
    rng: &mut impl Rng,
) -> Session {
    let mut session = Session { attempts: 0, symbols: 0 };
    while session.symbols < needed {
        let begin = start + f64::from(session.attempts) * t_d;
        let end = begin + t_d;
        session.attempts += 1;
        candidates.retain(|&d| d > begin);
        if candidates.is_empty() {
            break;
        }
        let chosen = candidates.swap_remove(rng.random_range(0..candidates.len()));
        if chosen > end && requester_departure > end {
            session.symbols += 1;
        } else {
            break;
        }
    }
    session
}

pub(crate) fn run_replication(config: &SimConfig, replication: usize, mut trace: Option<&mut Vec<RequestRecord>>) -> Tally {
    let p = &config.params;
    let k = config.code.k;
    let refresh = p.is_instantaneous();
    let cached = config.popularity.cached_files() as u64;
    // With no storage population there is nothing to download from.
    let library_reachable = p.mean_storage > 0.0;

    let mut init_rng = stream(config.seed, replication, Stream::Init);
    let mut arrival_rng = stream(config.seed, replication, Stream::Arrivals);
    let mut departure_rng = stream(config.seed, replication, Stream::Departures);
    let mut request_rng = stream(config.seed, replication, Stream::Requests);
    let mut file_rng = stream(config.seed, replication, Stream::Files);
    let mut choice_rng = stream(config.seed, replication, Stream::Choice);

    let lifetime = Exp::new(p.mu).expect("validated departure rate");
    let zipf = Zipf::new(config.popularity.library_size() as f64, config.popularity.sigma()).expect("validated popularity");
    let interarrival = |rate: f64| (rate > 0.0).then(|| Exp::new(rate).expect("positive rate"));
    let regular_gap = interarrival(p.mean_regular() * p.lambda);
    let storage_gap = interarrival(p.mean_storage * p.lambda);

    let mut cluster = Cluster::default();
    let mut departures = BinaryHeap::new();
    // Stationary start: Poisson populations with memoryless residual lifetimes.
    for (kind, mean) in [(NodeKind::Regular, p.mean_regular()), (NodeKind::Storage, p.mean_storage)] {
        let count = if mean > 0.0 { Poisson::new(mean).expect("positive mean").sample(&mut init_rng) as usize } else { 0 };
        for _ in 0..count {
            let leave = lifetime.sample(&mut departure_rng);
            let node = cluster.insert(kind, 0.0, leave);
            departures.push(Departure { time: leave, node });
        }
    }

    let mut now = 0.0;
    let mut next_regular = regular_gap.map_or(f64::INFINITY, |e| e.sample(&mut arrival_rng));
    let mut next_storage = storage_gap.map_or(f64::INFINITY, |e| e.sample(&mut arrival_rng));
    let mut next_broadcast = if refresh {
        f64::INFINITY
    } else {
        cluster.broadcast();
        p.delta
    };
    // Remaining integrated request hazard; the request rate m * omega changes
    // with every arrival and departure.
    let mut hazard: f64 = Exp1.sample(&mut request_rng);
    let mut busy_until = f64::NEG_INFINITY;

    let warmup_time = config.warmup_time();
    let mut served = 0u64;
    let mut measuring = false;
    let mut t_start = 0.0;
    let mut tally = Tally::new(k as usize);

    loop {
        let m = cluster.len() as f64;
        let rate = m * p.omega;
        let next_request = if rate > 0.0 { now + hazard / rate } else { f64::INFINITY };
        let next_departure = departures.peek().map_or(f64::INFINITY, |d| d.time);
        let next = next_request.min(next_departure).min(next_regular).min(next_storage).min(next_broadcast);

        if measuring {
            tally.node_time += m * (next - now);
            tally.storage_time += cluster.storage_count() as f64 * (next - now);
        }

        if next == next_request {
            now = next;
            hazard = Exp1.sample(&mut request_rng);
            served += 1;
            if !measuring && served > config.warmup_requests && now >= warmup_time {
                measuring = true;
                t_start = now;
            }

            let requester = cluster.nth_present(choice_rng.random_range(0..cluster.len()));
            let req = *cluster.get(requester);
            let is_listed = req.kind == NodeKind::Storage && (refresh || req.in_ds_list);
            let r = u32::from(is_listed);
            let listed = cluster.listed_storage(refresh);
            let (x1, candidates) = listed.fold((0u64, Vec::new()), |(x, mut c), (id, node)| {
                if id != requester {
                    c.push(node.departure_time);
                }
                (x + 1, c)
            });

            let rank = zipf.sample(&mut file_rng) as u64;
            let hit = library_reachable && rank <= cached;
            let idle = now >= busy_until;
            let (session, delay) = if !hit {
                (None, f64::from(k) * p.t_bs)
            } else if !idle {
                (None, f64::from(k - r) * p.t_bs)
            } else {
                let needed = k - r;
                let s = d2d_session(now, needed, req.departure_time, candidates, p.t_d, &mut choice_rng);
                let channel = f64::from(s.attempts) * p.t_d;
                busy_until = now + channel;
                (Some(s), channel + f64::from(needed - s.symbols) * p.t_bs)
            };

            if measuring {
                tally.requests += 1;
                tally.delay_sum += delay;
                tally.hits += u64::from(hit);
                tally.idle += u64::from(idle);
                tally.list_requests += u64::from(r);
                tally.x1_sum += x1;
                if let Some(s) = session {
                    tally.sessions += 1;
                    tally.symbols_sum += u64::from(s.symbols);
                    tally.channel_time_sum += f64::from(s.attempts) * p.t_d;
                    tally.histograms[r as usize][s.symbols as usize] += 1;
                }
                if let Some(records) = trace.as_deref_mut() {
                    records.push(RequestRecord {
                        replication,
                        time: now,
                        rank,
                        hit,
                        idle,
                        request_type: r as u8,
                        attempts: session.map_or(0, |s| s.attempts),
                        symbols_d2d: session.map_or(0, |s| s.symbols),
                        delay,
                    });
                }
                if tally.requests == config.measured_requests {
                    tally.span = now - t_start;
                    return tally;
                }
            }
            continue;
        }

        hazard = (hazard - rate * (next - now)).max(0.0);
        now = next;
        if next == next_departure {
            let d = departures.pop().expect("peeked");
            cluster.remove(d.node);
        } else if next == next_regular || next == next_storage {
            let (kind, gap, slot) = if next == next_regular {
                (NodeKind::Regular, &regular_gap, &mut next_regular)
            } else {
                (NodeKind::Storage, &storage_gap, &mut next_storage)
            };
            *slot = now + gap.as_ref().expect("finite arrival time").sample(&mut arrival_rng);
            let leave = now + lifetime.sample(&mut departure_rng);
            let node = cluster.insert(kind, now, leave);
            departures.push(Departure { time: leave, node });
        } else {
            cluster.broadcast();
            next_broadcast += p.delta;
        }
    }
}
