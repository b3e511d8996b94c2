//! Acceptance report: one pass/fail line per criterion, non-zero exit if any
//! criterion fails.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use streamforge::metrics::{classify, export, AckStatus, ExportTables, Fate, Flag};
use streamforge::model::{
    BrokerConfig, Component, ConsistencyMode, ExperimentSpec, FaultKind, FaultSpec, LinkSpec, NodeKind, NodeSpec,
    ProducerConfig, ProducerMode, TopicSpec, TopicWeight,
};
use streamforge::net::{DropReason, Frame, FrameClass, Hop, Network};
use streamforge::scenarios;
use streamforge::sim::{SimDuration, SimTime};
use streamforge::world::{run, Role, SimOptions, World};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn scenario(name: &str) -> (tempfile::TempDir, ExperimentSpec) {
    let dir = tempfile::tempdir().expect("tempdir");
    let spec = scenarios::load(name, dir.path()).expect("bundled scenario loads");
    (dir, spec)
}

fn seeded(seed: u64) -> SimOptions {
    SimOptions {
        seed: Some(seed),
        ..SimOptions::default()
    }
}

fn tables(w: &World) -> ExportTables {
    ExportTables::build(w.metrics(), w.directory(), w.network())
}

fn secs(t: f64) -> u64 {
    (t * 1e6) as u64
}

// 1. Determinism and runtime.
fn determinism() -> Outcome {
    let files = ["events.log", "latency.csv", "delivery_matrix.csv"];
    let mut outputs = Vec::new();
    let mut slowest = 0.0f64;
    for _ in 0..2 {
        let (_d, spec) = scenario("partition");
        let out = tempfile::tempdir().expect("tempdir");
        let start = Instant::now();
        let w = run(spec, &seeded(7)).expect("run");
        slowest = slowest.max(start.elapsed().as_secs_f64());
        export(&tables(&w), out.path()).expect("export");
        let bytes: Vec<Vec<u8>> = files.iter().map(|f| fs::read(out.path().join(f)).expect("read")).collect();
        outputs.push(bytes);
    }
    let identical = outputs[0] == outputs[1];
    let non_empty = outputs[0].iter().all(|b| !b.is_empty());
    outcome(
        identical && non_empty && slowest < 60.0,
        format!("outputs identical: {identical}; slowest run {slowest:.2} s (limit 60 s)"),
    )
}

struct PartitionRun {
    world: World,
    tables: ExportTables,
}

fn partition(mode: ConsistencyMode, sample_ms: u64) -> PartitionRun {
    let (_d, mut spec) = scenario("partition");
    for t in &mut spec.topics {
        t.consistency = mode;
    }
    let opts = SimOptions {
        seed: Some(7),
        sample_interval: SimDuration::from_millis(sample_ms),
        ..SimOptions::default()
    };
    let world = run(spec, &opts).expect("run");
    let tables = tables(&world);
    PartitionRun { world, tables }
}

fn fault_window(spec: &ExperimentSpec) -> (u64, u64, String) {
    let down = spec.faults.iter().find(|f| f.kind == FaultKind::LinkDown).expect("linkDown");
    let up = spec.faults.iter().find(|f| f.kind == FaultKind::LinkUp).expect("linkUp");
    let node = spec.link(&down.target).expect("link").source.clone();
    (down.at.as_micros(), up.at.as_micros(), node)
}

fn first_event(t: &ExportTables, kind: &str) -> Option<(u64, String, String)> {
    t.events
        .iter()
        .find(|e| e.kind == kind)
        .map(|e| (e.time.as_micros(), e.component.clone(), e.detail.clone()))
}

// 2. Partition reproduction.
fn partition_reproduction() -> Outcome {
    let run = partition(ConsistencyMode::Zk, 10);
    let spec = &run.world.spec;
    let t = &run.tables;
    let (down, up, cut) = fault_window(spec);
    let a_topic = spec
        .topics
        .iter()
        .find(|x| x.preferred_leader == cut)
        .expect("topic led by the cut node")
        .name
        .clone();
    let horizon = spec.duration.as_micros().saturating_sub(secs(5.0));
    let produce_time: BTreeMap<(&str, &str, u64), u64> = t
        .records
        .iter()
        .map(|r| ((r.topic.as_str(), r.producer.as_str(), r.producer_seq), r.produce_time_us))
        .collect();

    // (a) every missing cell belongs to the cut topic, cut producer, cut window.
    let mut missing = BTreeSet::new();
    let mut stray = 0usize;
    for d in &t.delivery {
        let pt = produce_time[&(d.topic.as_str(), d.producer.as_str(), d.producer_seq)];
        if d.delivered == Flag::N && pt < horizon {
            missing.insert((d.topic.clone(), d.producer.clone(), d.producer_seq));
            if d.topic != a_topic || d.producer != cut || pt < down || pt > up {
                stray += 1;
            }
        }
    }
    let a_ok = stray == 0 && !missing.is_empty();

    // (b) healthy topic from healthy producers is fully delivered.
    let healthy: Vec<_> = t
        .delivery
        .iter()
        .filter(|d| d.topic != a_topic && d.producer != cut)
        .filter(|d| produce_time[&(d.topic.as_str(), d.producer.as_str(), d.producer_seq)] < horizon)
        .collect();
    let b_ok = !healthy.is_empty() && healthy.iter().all(|d| d.delivered == Flag::Y);

    // (c) event sequence.
    let seq = ["LeaderDisconnectDetected", "LeaderElected", "BacklogServed", "LeadershipRestored"];
    let times: Vec<Option<u64>> = seq.iter().map(|k| first_event(t, k).map(|e| e.0)).collect();
    let c_ok = times.iter().all(|x| x.is_some()) && times.windows(2).all(|w| w[0] < w[1]);

    // (d) burst conservation at the new leader's access port.
    let (d_ok, d_detail) = burst_conservation(&run, &a_topic, &cut, down);

    outcome(
        a_ok && b_ok && c_ok && d_ok,
        format!(
            "(a) {} lost msgs, {stray} outside cut topic/producer/window; (b) {} healthy cells all delivered: {b_ok}; (c) order ok: {c_ok}; (d) {d_detail}",
            missing.len(),
            healthy.len()
        ),
    )
}

fn burst_conservation(run: &PartitionRun, topic: &str, cut: &str, down: u64) -> (bool, String) {
    let t = &run.tables;
    let w = &run.world;
    let Some((elected, leader, _)) = first_event(t, "LeaderElected") else {
        return (false, "no election".into());
    };
    let leader_node = leader.split('/').next().expect("node").to_string();
    // Records held back while the topic had no reachable leader.
    let held: HashSet<(&str, u64)> = t
        .records
        .iter()
        .filter(|r| r.topic == topic && r.producer != cut && r.produce_time_us >= down && r.produce_time_us < elected)
        .map(|r| (r.producer.as_str(), r.producer_seq))
        .collect();
    let size: BTreeMap<(&str, u64), u64> = t
        .records
        .iter()
        .filter(|r| r.topic == topic)
        .map(|r| ((r.producer.as_str(), r.producer_seq), u64::from(r.size_bytes)))
        .collect();
    // Consumers reached over the leader's access port.
    let remote: BTreeSet<&str> = t
        .latency
        .iter()
        .map(|l| l.consumer.as_str())
        .filter(|c| *c != cut && *c != leader_node)
        .collect();
    let burst_end = t
        .latency
        .iter()
        .filter(|l| l.topic == topic && remote.contains(l.consumer.as_str()))
        .filter(|l| held.contains(&(l.producer.as_str(), l.producer_seq)))
        .map(|l| l.deliver_time_us)
        .max()
        .unwrap_or(elected);

    let net = w.network();
    let node = net.node_index(&leader_node).expect("leader node");
    let link = (0..w.spec.links.len())
        .find(|i| {
            let l = &net.link(*i).spec;
            l.source == leader_node || l.target == leader_node
        })
        .expect("access link");
    let port = net.port_of(link, node).expect("port");
    let samples = net.port_counters(&leader_node, port).expect("series");
    let before = samples
        .iter()
        .rev()
        .find(|s| s.time.as_micros() <= elected)
        .expect("sample before election");
    let after = samples
        .iter()
        .find(|s| s.time.as_micros() >= burst_end)
        .expect("sample after burst");
    let (lo, hi) = (before.time.as_micros(), after.time.as_micros());
    let port_bytes = after.tx.get(FrameClass::FetchResponse) - before.tx.get(FrameClass::FetchResponse);
    // Non-held records of the same topic served to remote consumers in the same window.
    let other: u64 = t
        .latency
        .iter()
        .filter(|l| l.topic == topic && remote.contains(l.consumer.as_str()))
        .filter(|l| l.deliver_time_us > lo && l.deliver_time_us <= hi)
        .filter(|l| !held.contains(&(l.producer.as_str(), l.producer_seq)))
        .map(|l| {
            t.records
                .iter()
                .find(|r| r.topic == l.topic && r.producer == l.producer && r.producer_seq == l.producer_seq)
                .map_or(0, |r| u64::from(r.size_bytes))
        })
        .sum();
    let burst = port_bytes.saturating_sub(other);
    let expected: u64 = held.iter().map(|k| size[k]).sum::<u64>() * remote.len() as u64;
    let err = (burst as f64 - expected as f64).abs() / expected.max(1) as f64;
    (
        expected > 0 && err <= 0.02,
        format!(
            "burst {burst} B vs held {} msgs x {} consumers = {expected} B, error {:.2}% (limit 2%)",
            held.len(),
            remote.len(),
            err * 100.0
        ),
    )
}

/// Acked records missing from the final merged log of the cut topic.
fn acked_lost(run: &PartitionRun, topic: &str) -> usize {
    let w = &run.world;
    let tid = w.directory().topic_id(topic).expect("topic");
    let leader = w
        .controller()
        .and_then(|c| c.assignment(tid).leader)
        .expect("leader at end");
    let name = w.directory().name(leader).to_string();
    let node = name.split('/').next().expect("node");
    let log: HashSet<(u32, u64)> = w
        .broker(node)
        .and_then(|b| b.log(tid))
        .expect("log")
        .entries()
        .iter()
        .map(|e| (e.record.producer.0, e.record.seq))
        .collect();
    w.metrics()
        .records
        .iter()
        .filter(|r| r.topic == tid && r.status == AckStatus::Acked)
        .filter(|r| !log.contains(&(r.producer.0, r.seq)))
        .count()
}

// 3. Raft versus zk.
fn raft_vs_zk() -> Outcome {
    let zk = partition(ConsistencyMode::Zk, 500);
    let raft = partition(ConsistencyMode::Raft, 500);
    let (_, _, cut) = fault_window(&zk.world.spec);
    let topic = zk
        .world
        .spec
        .topics
        .iter()
        .find(|t| t.preferred_leader == cut)
        .expect("cut topic")
        .name
        .clone();
    let zk_lost = acked_lost(&zk, &topic);
    let raft_lost = acked_lost(&raft, &topic);
    let classified = |r: &PartitionRun| {
        classify(&r.tables)
            .iter()
            .zip(&r.tables.records)
            .filter(|(f, rec)| **f == Fate::Lost && rec.ack_status == "acked")
            .count()
    };
    let consistent = classified(&zk) == zk_lost && classified(&raft) == raft_lost;
    outcome(
        raft_lost == 0 && zk_lost >= 1 && consistent,
        format!("acked records lost: zk {zk_lost}, raft {raft_lost}; classification agrees: {consistent}"),
    )
}

/// Broker-link traversals on a record's path through the pipeline, counted
/// from topology: every hop between a client and the broker crosses the
/// broker's access link once if the client lives on another node.
fn traversal_oracle(spec: &ExperimentSpec) -> (usize, String) {
    let broker = spec.broker_ids()[0].to_string();
    let link = spec
        .links
        .iter()
        .find(|l| l.source == broker || l.target == broker)
        .expect("broker link")
        .id
        .clone();
    let crosses = |node: &str| usize::from(node != broker);
    let source = spec.nodes.iter().find(|n| n.producer.is_some()).expect("producer");
    let mut topic = source.producer.as_ref().unwrap().config.topics[0].topic.clone();
    let mut count = crosses(&source.id);
    loop {
        if let Some(job) = spec
            .nodes
            .iter()
            .find(|n| n.stream_proc.as_ref().is_some_and(|j| j.config.in_topics.contains(&topic)))
        {
            let cfg = &job.stream_proc.as_ref().unwrap().config;
            count += crosses(&job.id);
            match &cfg.out_topic {
                Some(next) => {
                    count += crosses(&job.id);
                    topic = next.clone();
                }
                None => break,
            }
        } else {
            let consumer = spec
                .nodes
                .iter()
                .find(|n| n.consumer.as_ref().is_some_and(|c| c.config.topics.contains(&topic)))
                .expect("terminal consumer");
            count += crosses(&consumer.id);
            break;
        }
    }
    (count, link)
}

// 4. Delay sweep.
fn delay_sweep() -> Outcome {
    let (_d, base) = scenario("delaysweep");
    let (hops, link) = traversal_oracle(&base);
    let delays = [10.0, 50.0, 100.0, 150.0];
    let mut means = Vec::new();
    for d in delays {
        let mut spec = base.clone();
        spec.link_mut(&link).expect("link").lat_ms = d;
        let w = run(spec, &SimOptions::default()).expect("run");
        let s = streamforge::metrics::summarize(&tables(&w));
        means.push(s.pipeline.mean_ms);
    }
    let increasing = means.windows(2).all(|w| w[0] < w[1]);
    let mut worst = 0.0f64;
    for i in 1..delays.len() {
        let slope = (means[i] - means[i - 1]) / (delays[i] - delays[i - 1]);
        worst = worst.max((slope - hops as f64).abs() / hops as f64);
    }
    outcome(
        increasing && worst <= 0.10,
        format!(
            "mean e2e {:?} ms; oracle {hops} traversals/record; worst slope error {:.2}% (limit 10%)",
            means.iter().map(|m| (m * 10.0).round() / 10.0).collect::<Vec<_>>(),
            worst * 100.0
        ),
    )
}

fn single_broker_spec(producer: ProducerConfig, faults: Vec<FaultSpec>, duration: u64) -> ExperimentSpec {
    let mut h1 = NodeSpec::new("h1", NodeKind::Host);
    h1.producer = Some(Component {
        type_name: None,
        cfg_ref: "producer.yaml".into(),
        config: producer,
    });
    let mut h2 = NodeSpec::new("h2", NodeKind::Host);
    h2.broker = Some(Component {
        type_name: None,
        cfg_ref: "broker.yaml".into(),
        config: BrokerConfig::default(),
    });
    let mut l1 = LinkSpec::new("h1-s1", "h1", "s1");
    l1.lat_ms = 1.0;
    let mut l2 = LinkSpec::new("h2-s1", "h2", "s1");
    l2.lat_ms = 1.0;
    ExperimentSpec {
        nodes: vec![h1, h2, NodeSpec::new("s1", NodeKind::Switch)],
        links: vec![l1, l2],
        topics: vec![TopicSpec {
            name: "T".into(),
            preferred_leader: "h2".into(),
            replication_factor: 1,
            consistency: ConsistencyMode::Zk,
        }],
        faults,
        seed: 1,
        duration: SimTime::from_secs(duration),
        topic_cfg: None,
        fault_cfg: None,
        config_dir: ".".into(),
    }
}

fn synthetic(rate_kbps: f64, buffer_bytes: u64, timeout_ms: u64) -> ProducerConfig {
    ProducerConfig {
        mode: ProducerMode::SyntheticRate,
        path: None,
        rate_kbps,
        record_size_bytes: 750,
        buffer_bytes,
        topics: vec![TopicWeight {
            topic: "T".into(),
            weight: 1.0,
        }],
        retry_interval: SimDuration::from_secs(2),
        produce_timeout: SimDuration::from_millis(timeout_ms),
    }
}

// 5. Throughput accuracy.
fn throughput() -> Outcome {
    let spec = single_broker_spec(synthetic(30.0, 16 << 20, 30_000), vec![], 300);
    let w = run(spec, &SimOptions::default()).expect("run");
    let net = w.network();
    let link = net.link_index("h2-s1").expect("link");
    let port = net.port_of(link, net.node_index("h2").unwrap()).expect("port");
    let s = net.port_counters("h2", port).expect("series");
    let warm = s.iter().find(|x| x.time >= SimTime::from_secs(60)).expect("warm sample");
    let last = s.last().expect("last");
    let dt = (last.time.as_micros() - warm.time.as_micros()) as f64 / 1e6;
    let kbps = (last.rx.total() - warm.rx.total()) as f64 * 8.0 / dt / 1e3;
    let err = (kbps - 30.0).abs() / 30.0;
    outcome(
        err <= 0.05,
        format!("broker access-port rx {kbps:.3} Kbps over {dt:.0} s after warm-up, error {:.2}% (limit 5%)", err * 100.0),
    )
}

// 6. Loss statistics.
fn loss_statistics() -> Outcome {
    let n = 10_000u64;
    let p = 0.1;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    let mut worst = 0.0f64;
    let mut counts = Vec::new();
    for seed in 1..=10u64 {
        let mut l = LinkSpec::new("h1-h2", "h1", "h2");
        l.loss_pct = 10.0;
        let mut h1 = NodeSpec::new("h1", NodeKind::Host);
        h1.broker = Some(Component {
            type_name: None,
            cfg_ref: "b".into(),
            config: BrokerConfig::default(),
        });
        let spec = ExperimentSpec {
            nodes: vec![h1, NodeSpec::new("h2", NodeKind::Host)],
            links: vec![l],
            topics: vec![],
            faults: vec![],
            seed,
            duration: SimTime::from_secs(1),
            topic_cfg: None,
            fault_cfg: None,
            config_dir: ".".into(),
        };
        let mut net = Network::new(&spec).expect("network");
        let mut dropped = 0u64;
        for i in 0..n {
            let frame = Frame::new(0, 1, 100, FrameClass::Produce, ());
            if let Hop::Dropped(DropReason::Loss, _) = net.send(SimTime::from_micros(i * 10), frame) {
                dropped += 1;
            }
        }
        worst = worst.max((dropped as f64 - n as f64 * p).abs() / sigma);
        counts.push(dropped);
    }
    outcome(
        worst <= 3.0,
        format!("drops per seed {counts:?}; worst deviation {worst:.2} sigma (limit 3)"),
    )
}

// 7. Word count oracle.
fn word_count() -> Outcome {
    let (dir, spec) = scenario("wordcount");
    let mut oracle: BTreeMap<String, f64> = BTreeMap::new();
    let corpus = dir.path().join(scenarios::CORPUS_DIR);
    let mut files: Vec<_> = fs::read_dir(&corpus).expect("corpus").map(|e| e.unwrap().path()).collect();
    files.sort();
    for f in &files {
        for word in fs::read_to_string(f).expect("file").split_whitespace() {
            *oracle.entry(word.to_string()).or_default() += 1.0;
        }
    }
    let w = run(spec, &SimOptions::default()).expect("run");
    let job = w.directory().find("h3/job").expect("word count job");
    let got: BTreeMap<String, f64> = w
        .metrics()
        .sink_state
        .iter()
        .filter(|((c, _), _)| *c == job)
        .map(|((_, k), v)| (k.clone(), *v))
        .collect();
    let total: f64 = oracle.values().sum();
    outcome(
        got == oracle && files.len() == scenarios::CORPUS_FILES,
        format!(
            "{} files, {} distinct words, {total} tokens; pipeline output identical: {}",
            files.len(),
            oracle.len(),
            got == oracle
        ),
    )
}

fn stall_point(buffer: u64) -> Option<u64> {
    let fault = FaultSpec {
        kind: FaultKind::LinkDown,
        target: "h2-s1".into(),
        at: SimTime::ZERO,
        param: None,
    };
    let spec = single_broker_spec(synthetic(100_000.0, buffer, 10_000_000), vec![fault], 10);
    let w = run(spec, &SimOptions::default()).expect("run");
    let p = w.producer("h1").expect("producer");
    if !p.is_stalled() {
        return None;
    }
    let stall = w.metrics().events.iter().find(|e| e.kind == "BufferFullStall")?;
    let unacked = stall.detail.split_whitespace().find_map(|kv| kv.strip_prefix("unacked="))?;
    let unacked: u64 = unacked.parse().ok()?;
    (unacked == p.unacked_records() as u64).then_some(unacked)
}

// 8. Buffer stall.
fn buffer_stall() -> Outcome {
    let small = 16u64 << 20;
    let big = 32u64 << 20;
    let expect = |b: u64| b / 750;
    let s = stall_point(small);
    let b = stall_point(big);
    let exact = s == Some(expect(small)) && b == Some(expect(big));
    let doubled = match (s, b) {
        (Some(s), Some(b)) => b.abs_diff(2 * s) <= 1,
        _ => false,
    };
    outcome(
        exact && doubled,
        format!(
            "stall at {s:?} (16 MiB, expect {}) and {b:?} (32 MiB, expect {}); doubled within one record: {doubled}",
            expect(small),
            expect(big)
        ),
    )
}

fn peak_rss_kib() -> Option<u64> {
    let status = fs::read_to_string(Path::new("/proc/self/status")).ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
}

// 9. Scalability smoke test.
fn scalability() -> Outcome {
    let (_d, spec) = scenario("partition");
    let start = Instant::now();
    let w = run(spec, &seeded(7)).expect("run");
    let wall = start.elapsed().as_secs_f64();
    let app = w
        .directory()
        .components
        .iter()
        .filter(|c| matches!(c.role, Role::Broker | Role::Producer | Role::Consumer))
        .count();
    let sites = w.spec.nodes.iter().filter(|n| n.kind == NodeKind::Host).count();
    let simulated = w.now().as_secs_f64();
    let rss = peak_rss_kib();
    let mem_ok = rss.is_some_and(|k| k < 1024 * 1024);
    outcome(
        sites == 10 && app == 30 && simulated >= 600.0 && wall < 300.0 && mem_ok,
        format!(
            "{sites} sites, {app} components, {simulated:.0} s simulated in {wall:.2} s wall (limit 300 s); peak RSS {} MiB (limit 1024)",
            rss.map_or("unknown".to_string(), |k| (k / 1024).to_string())
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("determinism", determinism),
        ("partition reproduction", partition_reproduction),
        ("raft vs zk loss", raft_vs_zk),
        ("delay sweep shape", delay_sweep),
        ("throughput accuracy", throughput),
        ("loss statistics", loss_statistics),
        ("word count oracle", word_count),
        ("buffer stall", buffer_stall),
        ("scalability", scalability),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {} [{}] {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
