//! GraphML reader and writer for experiment descriptions.
//!
//! Node kind follows the emulator naming convention: ids of the form `s<N>`
//! are switches, everything else is a host.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use roxmltree::{Document, Node};

use crate::sim::SimTime;

use super::components::{BrokerConfig, ConsumerConfig, JobConfig, ProducerConfig, ProducerMode, StoreConfig};
use super::config::{load_component_config, load_rows, ConfigMap};
use super::error::{ConfigError, SpecError};
use super::types::*;

pub const GRAPH_KEYS: &[&str] = &["topicCfg", "faultCfg", "seed", "duration"];
pub const NODE_KEYS: &[&str] = &[
    "prodType",
    "prodCfg",
    "consType",
    "consCfg",
    "streamProcType",
    "streamProcCfg",
    "storeType",
    "storeCfg",
    "brokerCfg",
    "cpuPercentage",
];
pub const EDGE_KEYS: &[&str] = &["lat", "bw", "loss", "st", "dt"];

const TOPIC_ROW_KEYS: &[&str] = &["name", "preferredLeader", "replicationFactor", "consistencyMode"];
const FAULT_ROW_KEYS: &[&str] = &["kind", "target", "atTime", "param"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Domain {
    Graph,
    Node,
    Edge,
}

struct KeyDef {
    name: String,
    domain: Option<Domain>,
    default: Option<String>,
}

/// Attribute values of one element, by attribute name.
struct Attrs {
    element: String,
    location: String,
    values: BTreeMap<String, String>,
}

impl Attrs {
    fn take(&mut self, name: &str) -> Option<String> {
        self.values.remove(name)
    }

    fn parse<T: std::str::FromStr>(&mut self, name: &str) -> Result<Option<T>, SpecError> {
        match self.take(name) {
            None => Ok(None),
            Some(raw) => raw.trim().parse::<T>().map(Some).map_err(|_| {
                SpecError::parse(
                    &self.location,
                    format!("invalid value `{raw}` for `{name}` on {}", self.element),
                )
            }),
        }
    }
}

fn is_switch_id(id: &str) -> bool {
    id.strip_prefix('s')
        .is_some_and(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()))
}

fn location(doc: &Document, node: Node) -> String {
    let pos = doc.text_pos_at(node.range().start);
    format!("line {}:{}", pos.row, pos.col)
}

fn children<'a, 'input>(node: Node<'a, 'input>, tag: &'a str) -> impl Iterator<Item = Node<'a, 'input>> + 'a {
    node.children()
        .filter(move |c| c.is_element() && c.tag_name().name() == tag)
}

/// Read a GraphML file; config references resolve against its directory.
pub fn load_experiment(path: &Path) -> Result<ExperimentSpec, SpecError> {
    let text = fs::read_to_string(path).map_err(|e| {
        SpecError::Config(ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    })?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    parse_experiment(&text, dir).map_err(|e| match e {
        SpecError::Parse { location, message } => SpecError::Parse {
            location: format!("{}:{location}", path.display()),
            message,
        },
        other => other,
    })
}

pub fn parse_experiment(graphml_text: &str, config_dir: &Path) -> Result<ExperimentSpec, SpecError> {
    let doc = Document::parse(graphml_text)
        .map_err(|e| SpecError::parse("document", format!("malformed XML: {e}")))?;
    let root = doc.root_element();
    if root.tag_name().name() != "graphml" {
        return Err(SpecError::parse(location(&doc, root), "root element must be <graphml>"));
    }

    let mut keys: BTreeMap<String, KeyDef> = BTreeMap::new();
    for key in children(root, "key") {
        let loc = location(&doc, key);
        let id = key
            .attribute("id")
            .ok_or_else(|| SpecError::parse(&loc, "<key> without id"))?;
        let name = key.attribute("attr.name").unwrap_or(id).to_string();
        let domain = match key.attribute("for").unwrap_or("all") {
            "graph" => Some(Domain::Graph),
            "node" => Some(Domain::Node),
            "edge" => Some(Domain::Edge),
            "all" => None,
            other => return Err(SpecError::parse(&loc, format!("unsupported key domain `{other}`"))),
        };
        let known = |d: Domain| match d {
            Domain::Graph => GRAPH_KEYS.contains(&name.as_str()),
            Domain::Node => NODE_KEYS.contains(&name.as_str()),
            Domain::Edge => EDGE_KEYS.contains(&name.as_str()),
        };
        let ok = match domain {
            Some(d) => known(d),
            None => [Domain::Graph, Domain::Node, Domain::Edge].into_iter().any(known),
        };
        if !ok {
            return Err(SpecError::parse(&loc, format!("unknown attribute key `{name}`")));
        }
        let default = children(key, "default")
            .next()
            .map(|d| d.text().unwrap_or("").trim().to_string());
        if keys.insert(id.to_string(), KeyDef { name, domain, default }).is_some() {
            return Err(SpecError::parse(&loc, format!("duplicate key id `{id}`")));
        }
    }

    let mut graphs = children(root, "graph");
    let graph = graphs
        .next()
        .ok_or_else(|| SpecError::parse(location(&doc, root), "no <graph> element"))?;
    if graphs.next().is_some() {
        return Err(SpecError::parse(location(&doc, root), "multiple <graph> elements"));
    }

    let read_attrs = |el: Node, domain: Domain, element: String| -> Result<Attrs, SpecError> {
        let loc = location(&doc, el);
        let mut values = BTreeMap::new();
        for data in children(el, "data") {
            let dloc = location(&doc, data);
            let key_id = data
                .attribute("key")
                .ok_or_else(|| SpecError::parse(&dloc, "<data> without key"))?;
            let def = keys
                .get(key_id)
                .ok_or_else(|| SpecError::parse(&dloc, format!("undeclared key `{key_id}`")))?;
            if def.domain.is_some_and(|d| d != domain) {
                return Err(SpecError::parse(&dloc, format!("key `{}` not valid on {element}", def.name)));
            }
            let allowed = match domain {
                Domain::Graph => GRAPH_KEYS,
                Domain::Node => NODE_KEYS,
                Domain::Edge => EDGE_KEYS,
            };
            if !allowed.contains(&def.name.as_str()) {
                return Err(SpecError::parse(&dloc, format!("attribute `{}` not valid on {element}", def.name)));
            }
            let text = data.text().unwrap_or("").trim().to_string();
            if values.insert(def.name.clone(), text).is_some() {
                return Err(SpecError::parse(&dloc, format!("attribute `{}` given twice on {element}", def.name)));
            }
        }
        for def in keys.values() {
            if def.domain.is_none_or(|d| d == domain) {
                if let Some(default) = &def.default {
                    values.entry(def.name.clone()).or_insert_with(|| default.clone());
                }
            }
        }
        Ok(Attrs {
            element,
            location: loc,
            values,
        })
    };

    let mut gattrs = read_attrs(graph, Domain::Graph, "graph".to_string())?;
    let seed = gattrs.parse::<u64>("seed")?.unwrap_or(DEFAULT_SEED);
    let duration = match gattrs.parse::<f64>("duration")? {
        None => DEFAULT_DURATION,
        Some(s) if s.is_finite() && s >= 0.0 => SimTime::from_secs_f64(s),
        Some(s) => return Err(SpecError::validation("graph", format!("duration {s} must be >= 0"))),
    };
    let topic_cfg = gattrs.take("topicCfg");
    let fault_cfg = gattrs.take("faultCfg");

    let mut nodes = Vec::new();
    for el in children(graph, "node") {
        let loc = location(&doc, el);
        let id = el
            .attribute("id")
            .ok_or_else(|| SpecError::parse(&loc, "<node> without id"))?
            .to_string();
        let attrs = read_attrs(el, Domain::Node, format!("node `{id}`"))?;
        nodes.push(parse_node(id, attrs, config_dir)?);
    }

    let mut links = Vec::new();
    for el in children(graph, "edge") {
        let loc = location(&doc, el);
        let source = el
            .attribute("source")
            .ok_or_else(|| SpecError::parse(&loc, "<edge> without source"))?;
        let target = el
            .attribute("target")
            .ok_or_else(|| SpecError::parse(&loc, "<edge> without target"))?;
        let id = el
            .attribute("id")
            .map(str::to_string)
            .unwrap_or_else(|| format!("{source}-{target}"));
        let mut attrs = read_attrs(el, Domain::Edge, format!("link `{id}`"))?;
        let mut link = LinkSpec::new(id, source, target);
        link.lat_ms = attrs.parse("lat")?.unwrap_or(0.0);
        link.bw_mbps = attrs.parse("bw")?.unwrap_or(DEFAULT_BW_MBPS);
        link.loss_pct = attrs.parse("loss")?.unwrap_or(0.0);
        link.src_port = attrs.parse("st")?;
        link.dst_port = attrs.parse("dt")?;
        links.push(link);
    }

    let topics = match &topic_cfg {
        Some(r) => load_topics(&resolve(config_dir, r, "graph topicCfg")?)?,
        None => Vec::new(),
    };
    let faults = match &fault_cfg {
        Some(r) => load_faults(&resolve(config_dir, r, "graph faultCfg")?)?,
        None => Vec::new(),
    };

    let spec = ExperimentSpec {
        nodes,
        links,
        topics,
        faults,
        seed,
        duration,
        topic_cfg,
        fault_cfg,
        config_dir: config_dir.to_path_buf(),
    };
    validate(&spec)?;
    Ok(spec)
}

fn resolve(dir: &Path, reference: &str, element: &str) -> Result<std::path::PathBuf, SpecError> {
    let path = dir.join(reference);
    if !path.is_file() {
        return Err(SpecError::MissingConfig {
            element: element.to_string(),
            reference: reference.to_string(),
            path: path.display().to_string(),
        });
    }
    Ok(path)
}

fn load_config(dir: &Path, reference: &str, element: &str) -> Result<ConfigMap, SpecError> {
    let path = resolve(dir, reference, element)?;
    Ok(load_component_config(&path)?)
}

fn component<C>(
    attrs: &mut Attrs,
    type_key: Option<&str>,
    cfg_key: &str,
    dir: &Path,
    build: impl FnOnce(&ConfigMap) -> Result<C, ConfigError>,
) -> Result<Option<Component<C>>, SpecError> {
    let type_name = type_key.and_then(|k| attrs.take(k));
    let Some(cfg_ref) = attrs.take(cfg_key) else {
        if let (Some(k), Some(_)) = (type_key, &type_name) {
            return Err(SpecError::validation(
                &attrs.element,
                format!("`{k}` is set but `{cfg_key}` is missing"),
            ));
        }
        return Ok(None);
    };
    let element = format!("{} {cfg_key}", attrs.element);
    let map = load_config(dir, &cfg_ref, &element)?;
    let config = build(&map)?;
    Ok(Some(Component {
        type_name,
        cfg_ref,
        config,
    }))
}

fn parse_node(id: String, mut attrs: Attrs, dir: &Path) -> Result<NodeSpec, SpecError> {
    let kind = if is_switch_id(&id) {
        NodeKind::Switch
    } else {
        NodeKind::Host
    };
    if kind == NodeKind::Switch {
        if let Some(key) = attrs.values.keys().next() {
            return Err(SpecError::validation(
                format!("node `{id}`"),
                format!("a switch carries no component attributes (found `{key}`)"),
            ));
        }
    }
    let mut node = NodeSpec::new(id, kind);
    node.cpu_percentage = attrs.parse("cpuPercentage")?.unwrap_or(1.0);
    node.producer = component(&mut attrs, Some("prodType"), "prodCfg", dir, ProducerConfig::from_map)?;
    node.consumer = component(&mut attrs, Some("consType"), "consCfg", dir, ConsumerConfig::from_map)?;
    node.stream_proc = component(&mut attrs, Some("streamProcType"), "streamProcCfg", dir, JobConfig::from_map)?;
    node.store = component(&mut attrs, Some("storeType"), "storeCfg", dir, StoreConfig::from_map)?;
    node.broker = component(&mut attrs, None, "brokerCfg", dir, BrokerConfig::from_map)?;
    debug_assert!(attrs.values.is_empty(), "unconsumed attributes {:?}", attrs.values);
    Ok(node)
}

fn load_topics(path: &Path) -> Result<Vec<TopicSpec>, SpecError> {
    let mut out = Vec::new();
    for row in load_rows(path)? {
        row.reject_unknown(TOPIC_ROW_KEYS)?;
        let consistency = match row.get("consistencyMode").unwrap_or("zk") {
            "zk" => ConsistencyMode::Zk,
            "raft" => ConsistencyMode::Raft,
            other => return Err(row.error_at("consistencyMode", format!("unknown consistency mode `{other}`")).into()),
        };
        out.push(TopicSpec {
            name: row.require("name")?.to_string(),
            preferred_leader: row.require("preferredLeader")?.to_string(),
            replication_factor: row.parse_or("replicationFactor", 1)?,
            consistency,
        });
    }
    Ok(out)
}

fn load_faults(path: &Path) -> Result<Vec<FaultSpec>, SpecError> {
    let mut out = Vec::new();
    for row in load_rows(path)? {
        row.reject_unknown(FAULT_ROW_KEYS)?;
        let raw = row.require("kind")?;
        let kind = FaultKind::parse(raw)
            .ok_or_else(|| row.error_at("kind", format!("unknown fault kind `{raw}`")))?;
        let at: f64 = row
            .parse_opt("atTime")?
            .ok_or_else(|| row.error_at("kind", "missing required key `atTime`"))?;
        out.push(FaultSpec {
            kind,
            target: row.require("target")?.to_string(),
            at: SimTime::from_secs_f64(at),
            param: row.parse_opt("param")?,
        });
        if !(at.is_finite() && at >= 0.0) {
            return Err(SpecError::validation(
                format!("fault {} on `{}`", kind.as_str(), out.last().expect("pushed").target),
                format!("atTime {at} must be >= 0"),
            ));
        }
    }
    Ok(out)
}

/// Check every cross-element invariant of a spec.
pub fn validate(spec: &ExperimentSpec) -> Result<(), SpecError> {
    let mut node_ids = BTreeSet::new();
    for n in &spec.nodes {
        if !node_ids.insert(n.id.as_str()) {
            return Err(SpecError::validation(format!("node `{}`", n.id), "duplicate node id"));
        }
        if !(n.cpu_percentage.is_finite() && n.cpu_percentage > 0.0 && n.cpu_percentage <= 1.0) {
            return Err(SpecError::validation(
                format!("node `{}`", n.id),
                format!("cpuPercentage {} outside (0, 1]", n.cpu_percentage),
            ));
        }
        if n.kind == NodeKind::Switch && n.has_components() {
            return Err(SpecError::validation(
                format!("node `{}`", n.id),
                "a switch carries no component attributes",
            ));
        }
    }

    let mut link_ids = BTreeSet::new();
    let mut ports = BTreeSet::new();
    for l in &spec.links {
        let element = format!("link `{}`", l.id);
        if !link_ids.insert(l.id.as_str()) {
            return Err(SpecError::validation(element, "duplicate link id"));
        }
        for end in [&l.source, &l.target] {
            if !node_ids.contains(end.as_str()) {
                return Err(SpecError::validation(&element, format!("endpoint `{end}` is not a node")));
            }
        }
        if l.source == l.target {
            return Err(SpecError::validation(&element, "self-loop"));
        }
        if !(l.lat_ms.is_finite() && l.lat_ms >= 0.0) {
            return Err(SpecError::validation(&element, format!("lat {} must be >= 0 ms", l.lat_ms)));
        }
        if !(l.bw_mbps.is_finite() && l.bw_mbps > 0.0) {
            return Err(SpecError::validation(&element, format!("bw {} must be > 0 Mbps", l.bw_mbps)));
        }
        if !(l.loss_pct.is_finite() && (0.0..=100.0).contains(&l.loss_pct)) {
            return Err(SpecError::validation(
                &element,
                format!("loss {} outside the [0,100] percent bound", l.loss_pct),
            ));
        }
        for (node, port) in [(&l.source, l.src_port), (&l.target, l.dst_port)] {
            if let Some(p) = port {
                if !ports.insert((node.as_str(), p)) {
                    return Err(SpecError::validation(&element, format!("port {p} on `{node}` already in use")));
                }
            }
        }
    }

    let brokers = spec.broker_ids();
    if !spec.topics.is_empty() && brokers.is_empty() {
        return Err(SpecError::validation("topics", "topics are declared but no node hosts a broker"));
    }
    let mut topic_names = BTreeSet::new();
    for t in &spec.topics {
        let element = format!("topic `{}`", t.name);
        if !topic_names.insert(t.name.as_str()) {
            return Err(SpecError::validation(element, "duplicate topic name"));
        }
        if !brokers.contains(&t.preferred_leader.as_str()) {
            return Err(SpecError::validation(
                &element,
                format!("preferred leader `{}` is not a broker node", t.preferred_leader),
            ));
        }
        if t.replication_factor == 0 || t.replication_factor as usize > brokers.len() {
            return Err(SpecError::validation(
                &element,
                format!(
                    "replicationFactor {} outside [1, {}] (broker count)",
                    t.replication_factor,
                    brokers.len()
                ),
            ));
        }
    }

    let topic_exists = |element: &str, name: &str| -> Result<(), SpecError> {
        if topic_names.contains(name) {
            Ok(())
        } else {
            Err(SpecError::validation(element, format!("references unknown topic `{name}`")))
        }
    };
    for n in &spec.nodes {
        if let Some(p) = &n.producer {
            let element = format!("node `{}` prodCfg", n.id);
            for w in &p.config.topics {
                topic_exists(&element, &w.topic)?;
            }
            if let Some(path) = &p.config.path {
                let full = spec.config_dir.join(path);
                let ok = match p.config.mode {
                    ProducerMode::LineOfFile => full.is_file(),
                    ProducerMode::FileOfDirectory => full.is_dir(),
                    ProducerMode::SyntheticRate => true,
                };
                if !ok {
                    return Err(SpecError::validation(element, format!("data path `{path}` not found")));
                }
            }
        }
        if let Some(c) = &n.consumer {
            for t in &c.config.topics {
                topic_exists(&format!("node `{}` consCfg", n.id), t)?;
            }
        }
        if let Some(j) = &n.stream_proc {
            let element = format!("node `{}` streamProcCfg", n.id);
            for t in j.config.in_topics.iter().chain(j.config.out_topic.iter()) {
                topic_exists(&element, t)?;
            }
            if let Some(store) = &j.config.store {
                if spec.node(store).and_then(|s| s.store.as_ref()).is_none() {
                    return Err(SpecError::validation(element, format!("store `{store}` is not a store node")));
                }
            }
        }
    }

    for f in &spec.faults {
        let element = format!("fault {} on `{}`", f.kind.as_str(), f.target);
        if f.at > spec.duration {
            return Err(SpecError::validation(
                element,
                format!("atTime {} outside [0, duration={}]", f.at, spec.duration),
            ));
        }
        let exists = if f.kind.targets_link() {
            link_ids.contains(f.target.as_str())
        } else {
            node_ids.contains(f.target.as_str())
        };
        if !exists {
            let what = if f.kind.targets_link() { "link" } else { "node" };
            return Err(SpecError::validation(element, format!("target is not a {what} in the graph")));
        }
        match (f.kind, f.param) {
            (FaultKind::SetLoss, Some(p)) if (0.0..=100.0).contains(&p) => {}
            (FaultKind::SetLoss, _) => {
                return Err(SpecError::validation(element, "setLoss needs param in [0,100]"))
            }
            (_, Some(_)) => return Err(SpecError::validation(element, "param is only valid for setLoss")),
            _ => {}
        }
    }
    Ok(())
}

fn escape(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Serialize back to GraphML. Config references are written as given, so the
/// output re-parses against the same `config_dir`.
pub fn to_graphml(spec: &ExperimentSpec) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    let typed = |name: &str| match name {
        "seed" => "long",
        "duration" | "cpuPercentage" | "lat" | "bw" | "loss" => "double",
        "st" | "dt" => "int",
        _ => "string",
    };
    for (domain, names) in [("graph", GRAPH_KEYS), ("node", NODE_KEYS), ("edge", EDGE_KEYS)] {
        for name in names {
            let _ = writeln!(
                out,
                "  <key id=\"{name}\" for=\"{domain}\" attr.name=\"{name}\" attr.type=\"{}\"/>",
                typed(name)
            );
        }
    }
    out.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
    let data = |out: &mut String, indent: &str, key: &str, value: &str| {
        let _ = writeln!(out, "{indent}<data key=\"{key}\">{}</data>", escape(value));
    };
    if let Some(t) = &spec.topic_cfg {
        data(&mut out, "    ", "topicCfg", t);
    }
    if let Some(f) = &spec.fault_cfg {
        data(&mut out, "    ", "faultCfg", f);
    }
    data(&mut out, "    ", "seed", &spec.seed.to_string());
    data(&mut out, "    ", "duration", &spec.duration.as_secs_f64().to_string());

    for n in &spec.nodes {
        let _ = writeln!(out, "    <node id=\"{}\">", escape(&n.id));
        let ind = "      ";
        fn typed_component<C>(
            out: &mut String,
            ind: &str,
            c: &Option<Component<C>>,
            type_key: &str,
            cfg_key: &str,
            data: &dyn Fn(&mut String, &str, &str, &str),
        ) {
            if let Some(c) = c {
                if let Some(t) = &c.type_name {
                    data(out, ind, type_key, t);
                }
                data(out, ind, cfg_key, &c.cfg_ref);
            }
        }
        typed_component(&mut out, ind, &n.producer, "prodType", "prodCfg", &data);
        typed_component(&mut out, ind, &n.consumer, "consType", "consCfg", &data);
        typed_component(&mut out, ind, &n.stream_proc, "streamProcType", "streamProcCfg", &data);
        typed_component(&mut out, ind, &n.store, "storeType", "storeCfg", &data);
        if let Some(b) = &n.broker {
            data(&mut out, ind, "brokerCfg", &b.cfg_ref);
        }
        if n.cpu_percentage != 1.0 {
            data(&mut out, ind, "cpuPercentage", &n.cpu_percentage.to_string());
        }
        out.push_str("    </node>\n");
    }
    for l in &spec.links {
        let _ = writeln!(
            out,
            "    <edge id=\"{}\" source=\"{}\" target=\"{}\">",
            escape(&l.id),
            escape(&l.source),
            escape(&l.target)
        );
        let ind = "      ";
        data(&mut out, ind, "lat", &l.lat_ms.to_string());
        data(&mut out, ind, "bw", &l.bw_mbps.to_string());
        data(&mut out, ind, "loss", &l.loss_pct.to_string());
        if let Some(p) = l.src_port {
            data(&mut out, ind, "st", &p.to_string());
        }
        if let Some(p) = l.dst_port {
            data(&mut out, ind, "dt", &p.to_string());
        }
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}
