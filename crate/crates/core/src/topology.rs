//! Device coupling graphs, link hop distances and isolated region allocation.
//!
//! A [`Device`] is an undirected coupling graph. Distances between qubits are
//! shortest-path edge counts; the distance between two links is the minimum
//! over their four endpoint pairs, so links sharing a qubit are 0 hops apart.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Marks an unreachable qubit pair in the distance tables.
pub const UNREACHABLE: usize = usize::MAX;

/// An unordered qubit pair, stored with the smaller index first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Link(pub usize, pub usize);

impl Link {
    pub fn new(a: usize, b: usize) -> Self {
        if a <= b {
            Link(a, b)
        } else {
            Link(b, a)
        }
    }

    pub fn shares_qubit(&self, other: &Link) -> bool {
        self.0 == other.0 || self.0 == other.1 || self.1 == other.0 || self.1 == other.1
    }

    pub fn qubits(&self) -> [usize; 2] {
        [self.0, self.1]
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}-Q{}", self.0, self.1)
    }
}

/// On-disk topology format, shared by presets and custom files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TopologyFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub version: Option<u32>,
    pub n_qubits: usize,
    pub links: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Preset {
    Hanoi27,
    Osaka127,
    Sherbrooke127,
    Custom(PathBuf),
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hanoi27" => Ok(Preset::Hanoi27),
            "osaka127" => Ok(Preset::Osaka127),
            "sherbrooke127" => Ok(Preset::Sherbrooke127),
            other => match other.strip_prefix("custom:") {
                Some(path) => Ok(Preset::Custom(PathBuf::from(path))),
                None if other.ends_with(".json") => Ok(Preset::Custom(PathBuf::from(other))),
                None => Err(Error::UnknownPreset(other.to_string())),
            },
        }
    }
}

const HANOI27: &str = include_str!("../fixtures/topologies/hanoi27.json");
const OSAKA127: &str = include_str!("../fixtures/topologies/osaka127.json");
const SHERBROOKE127: &str = include_str!("../fixtures/topologies/sherbrooke127.json");

/// Builds the device for a preset. Presets come from the bundled coupling-map
/// fixtures; `Custom` reads a topology file from disk.
pub fn make_device(preset: &Preset) -> Result<Device> {
    match preset {
        Preset::Hanoi27 => Device::from_json(HANOI27, Some("hanoi27")),
        Preset::Osaka127 => Device::from_json(OSAKA127, Some("osaka127")),
        Preset::Sherbrooke127 => Device::from_json(SHERBROOKE127, Some("sherbrooke127")),
        Preset::Custom(path) => Device::from_file(path),
    }
}

#[derive(Clone, Debug)]
pub struct Device {
    name: String,
    n_qubits: usize,
    links: Vec<Link>,
    link_index: HashMap<Link, usize>,
    adjacency: Vec<Vec<usize>>,
    qubit_dist: Vec<usize>,
    link_dist: Vec<usize>,
}

impl Device {
    pub fn new(name: impl Into<String>, n_qubits: usize, links: &[Link]) -> Result<Self> {
        let name = name.into();
        let mut sorted = Vec::with_capacity(links.len());
        for &Link(a, b) in links {
            if a == b {
                return Err(Error::MalformedTopology(format!("self-loop on qubit {a}")));
            }
            if a >= n_qubits || b >= n_qubits {
                return Err(Error::MalformedTopology(format!(
                    "link ({a}, {b}) out of range for {n_qubits} qubits"
                )));
            }
            sorted.push(Link::new(a, b));
        }
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::MalformedTopology(format!(
                "duplicate link ({}, {})",
                w[0].0, w[0].1
            )));
        }

        let mut adjacency = vec![Vec::new(); n_qubits];
        for l in &sorted {
            adjacency[l.0].push(l.1);
            adjacency[l.1].push(l.0);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }

        let mut qubit_dist = vec![UNREACHABLE; n_qubits * n_qubits];
        for src in 0..n_qubits {
            let row = &mut qubit_dist[src * n_qubits..(src + 1) * n_qubits];
            row[src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(q) = queue.pop_front() {
                for &nb in &adjacency[q] {
                    if row[nb] == UNREACHABLE {
                        row[nb] = row[q] + 1;
                        queue.push_back(nb);
                    }
                }
            }
        }

        let n_links = sorted.len();
        let mut link_dist = vec![0; n_links * n_links];
        for i in 0..n_links {
            for j in 0..n_links {
                let (a, b) = (sorted[i], sorted[j]);
                link_dist[i * n_links + j] = a
                    .qubits()
                    .iter()
                    .flat_map(|&x| b.qubits().map(|y| qubit_dist[x * n_qubits + y]))
                    .min()
                    .unwrap_or(UNREACHABLE);
            }
        }

        let link_index = sorted.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        Ok(Device {
            name,
            n_qubits,
            links: sorted,
            link_index,
            adjacency,
            qubit_dist,
            link_dist,
        })
    }

    pub fn from_json(text: &str, fallback_name: Option<&str>) -> Result<Self> {
        let file: TopologyFile = serde_json::from_str(text)
            .map_err(|e| Error::MalformedTopology(e.to_string()))?;
        let name = file
            .name
            .clone()
            .or_else(|| fallback_name.map(str::to_string))
            .unwrap_or_else(|| "custom".to_string());
        let links: Vec<Link> = file.links.iter().map(|[a, b]| Link(*a, *b)).collect();
        Device::new(name, file.n_qubits, &links)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let stem = path.file_stem().and_then(|s| s.to_str());
        Device::from_json(&text, stem)
    }

    pub fn to_topology_file(&self) -> TopologyFile {
        TopologyFile {
            name: Some(self.name.clone()),
            version: Some(1),
            n_qubits: self.n_qubits,
            links: self.links.iter().map(|l| [l.0, l.1]).collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    pub fn link_index(&self, link: Link) -> Option<usize> {
        self.link_index.get(&Link::new(link.0, link.1)).copied()
    }

    pub fn has_link(&self, a: usize, b: usize) -> bool {
        self.link_index.contains_key(&Link::new(a, b))
    }

    pub fn qubit_distance(&self, a: usize, b: usize) -> usize {
        self.qubit_dist[a * self.n_qubits + b]
    }

    /// Hop distance between two links by index; see [`hop_distance`].
    pub fn link_distance(&self, i: usize, j: usize) -> usize {
        self.link_dist[i * self.links.len() + j]
    }

    pub fn is_connected(&self) -> bool {
        self.n_qubits == 0 || (0..self.n_qubits).all(|q| self.qubit_distance(0, q) != UNREACHABLE)
    }

    /// Returns true if `qubits` induce a connected subgraph.
    pub fn is_connected_subset(&self, qubits: &[usize]) -> bool {
        if qubits.is_empty() {
            return true;
        }
        let mut inside = vec![false; self.n_qubits];
        for &q in qubits {
            inside[q] = true;
        }
        let mut seen = vec![false; self.n_qubits];
        let mut queue = VecDeque::from([qubits[0]]);
        seen[qubits[0]] = true;
        let mut count = 1;
        while let Some(q) = queue.pop_front() {
            for &nb in &self.adjacency[q] {
                if inside[nb] && !seen[nb] {
                    seen[nb] = true;
                    count += 1;
                    queue.push_back(nb);
                }
            }
        }
        count == qubits.len()
    }

    /// Shortest path from `a` to `b` that only visits qubits with `allowed[q]`.
    /// Neighbors are expanded in ascending order, so the path is deterministic.
    pub fn path_within(&self, a: usize, b: usize, allowed: &[bool]) -> Option<Vec<usize>> {
        if a == b {
            return Some(vec![a]);
        }
        let mut prev = vec![UNREACHABLE; self.n_qubits];
        prev[a] = a;
        let mut queue = VecDeque::from([a]);
        while let Some(q) = queue.pop_front() {
            for &nb in &self.adjacency[q] {
                if allowed[nb] && prev[nb] == UNREACHABLE {
                    prev[nb] = q;
                    if nb == b {
                        let mut path = vec![b];
                        let mut cur = b;
                        while cur != a {
                            cur = prev[cur];
                            path.push(cur);
                        }
                        path.reverse();
                        return Some(path);
                    }
                    queue.push_back(nb);
                }
            }
        }
        None
    }

    /// Number of ordered pairs of links that share no qubit.
    pub fn disjoint_ordered_link_pairs(&self) -> usize {
        let l = self.links.len();
        let mut count = 0;
        for i in 0..l {
            for j in 0..l {
                if i != j && !self.links[i].shares_qubit(&self.links[j]) {
                    count += 1;
                }
            }
        }
        count
    }
}

/// Minimum shortest-path distance between the endpoints of two links.
/// Links sharing a qubit are 0 hops apart.
pub fn hop_distance(dev: &Device, a: Link, b: Link) -> Result<usize> {
    let ia = dev.link_index(a).ok_or_else(|| Error::UnknownLink {
        device: dev.name().to_string(),
        link: a,
    })?;
    let ib = dev.link_index(b).ok_or_else(|| Error::UnknownLink {
        device: dev.name().to_string(),
        link: b,
    })?;
    Ok(dev.link_distance(ia, ib))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub qubits: Vec<usize>,
    pub owner: String,
}

impl Region {
    pub fn new(qubits: Vec<usize>, owner: impl Into<String>) -> Result<Self> {
        let mut sorted = qubits.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!(
                "region has repeated qubits: {qubits:?}"
            )));
        }
        Ok(Region {
            qubits,
            owner: owner.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn contains(&self, q: usize) -> bool {
        self.qubits.contains(&q)
    }
}

// Upper bound on region growths tried while backtracking over seeds.
const ALLOCATION_BUDGET: usize = 200_000;

/// Allocates one connected region per requested size, with every pair of
/// regions at least `buffer + 1` hops apart.
///
/// Regions grow greedily from a seed qubit, seeds tried in ascending order.
/// Without weights growth is breadth-first; with per-link `error_weights`
/// (indexed like [`Device::links`]) the frontier qubit reachable through the
/// cheapest link is taken next. Returned regions are unowned; callers set
/// `owner`.
pub fn allocate_regions(
    dev: &Device,
    sizes: &[usize],
    buffer: usize,
    error_weights: Option<&[f64]>,
) -> Result<Vec<Region>> {
    if let Some(w) = error_weights {
        if w.len() != dev.n_links() {
            return Err(Error::InvalidArgument(format!(
                "expected {} link weights, got {}",
                dev.n_links(),
                w.len()
            )));
        }
    }
    let total: usize = sizes.iter().sum();
    if total > dev.n_qubits() {
        return Err(Error::InfeasibleAllocation(format!(
            "{total} qubits requested on a {}-qubit device",
            dev.n_qubits()
        )));
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidArgument("region size must be positive".into()));
    }

    let mut blocked = vec![0u32; dev.n_qubits()];
    let mut regions = Vec::with_capacity(sizes.len());
    let mut budget = ALLOCATION_BUDGET;
    if place(dev, sizes, buffer, error_weights, &mut blocked, &mut regions, &mut budget) {
        Ok(regions
            .into_iter()
            .map(|qubits| Region {
                qubits,
                owner: String::new(),
            })
            .collect())
    } else {
        Err(Error::InfeasibleAllocation(format!(
            "no placement of sizes {sizes:?} with buffer {buffer} on {}",
            dev.name()
        )))
    }
}

fn place(
    dev: &Device,
    sizes: &[usize],
    buffer: usize,
    weights: Option<&[f64]>,
    blocked: &mut [u32],
    regions: &mut Vec<Vec<usize>>,
    budget: &mut usize,
) -> bool {
    let Some((&size, rest)) = sizes.split_first() else {
        return true;
    };
    let free = blocked.iter().filter(|&&b| b == 0).count();
    if free < size {
        return false;
    }
    let mut tried_sets: Vec<Vec<usize>> = Vec::new();
    for seed in 0..dev.n_qubits() {
        if blocked[seed] != 0 {
            continue;
        }
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        let Some(region) = grow(dev, seed, size, blocked, weights) else {
            continue;
        };
        let mut key = region.clone();
        key.sort_unstable();
        if tried_sets.contains(&key) {
            continue;
        }
        tried_sets.push(key);

        let shadow = shadow_of(dev, &region, buffer);
        for &q in &shadow {
            blocked[q] += 1;
        }
        regions.push(region);
        if place(dev, rest, buffer, weights, blocked, regions, budget) {
            return true;
        }
        regions.pop();
        for &q in &shadow {
            blocked[q] -= 1;
        }
    }
    false
}

/// Qubits within `buffer` hops of the region, the region included.
fn shadow_of(dev: &Device, region: &[usize], buffer: usize) -> Vec<usize> {
    (0..dev.n_qubits())
        .filter(|&q| region.iter().any(|&r| dev.qubit_distance(r, q) <= buffer))
        .collect()
}

fn grow(
    dev: &Device,
    seed: usize,
    size: usize,
    blocked: &[u32],
    weights: Option<&[f64]>,
) -> Option<Vec<usize>> {
    let mut inside = vec![false; dev.n_qubits()];
    inside[seed] = true;
    let mut region = vec![seed];
    match weights {
        None => {
            let mut queue = VecDeque::from([seed]);
            while region.len() < size {
                let q = queue.pop_front()?;
                for &nb in dev.neighbors(q) {
                    if region.len() == size {
                        break;
                    }
                    if blocked[nb] == 0 && !inside[nb] {
                        inside[nb] = true;
                        region.push(nb);
                        queue.push_back(nb);
                    }
                }
            }
        }
        Some(w) => {
            while region.len() < size {
                let mut best: Option<(f64, usize)> = None;
                for &q in &region {
                    for &nb in dev.neighbors(q) {
                        if blocked[nb] != 0 || inside[nb] {
                            continue;
                        }
                        let li = dev.link_index(Link::new(q, nb)).expect("adjacent qubits");
                        let cand = (w[li], nb);
                        best = match best {
                            Some(b) if (b.0, b.1) <= cand => Some(b),
                            _ => Some(cand),
                        };
                    }
                }
                let (_, q) = best?;
                inside[q] = true;
                region.push(q);
            }
        }
    }
    Some(region)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_device(n: usize) -> Device {
        let links: Vec<Link> = (0..n - 1).map(|i| Link(i, i + 1)).collect();
        Device::new("path", n, &links).unwrap()
    }

    #[test]
    fn hanoi_has_27_qubits_and_fixture_link_count() {
        let dev = make_device(&Preset::Hanoi27).unwrap();
        assert_eq!(dev.n_qubits(), 27);
        let fixture: TopologyFile = serde_json::from_str(HANOI27).unwrap();
        assert_eq!(dev.n_links(), fixture.links.len());
        assert_eq!(dev.n_links(), 28);
        assert!(dev.is_connected());
    }

    #[test]
    fn hanoi_disjoint_link_pairs_match_profiled_count() {
        // 682 ordered link pairs were profiled on the 27-qubit machine.
        let dev = make_device(&Preset::Hanoi27).unwrap();
        assert_eq!(dev.disjoint_ordered_link_pairs(), 682);
    }

    #[test]
    fn eagle_presets_are_connected_heavy_hex() {
        for p in [Preset::Osaka127, Preset::Sherbrooke127] {
            let dev = make_device(&p).unwrap();
            assert_eq!(dev.n_qubits(), 127);
            assert_eq!(dev.n_links(), 144);
            assert!(dev.is_connected());
            assert!((0..127).all(|q| dev.neighbors(q).len() <= 3));
        }
    }

    #[test]
    fn minimal_custom_device() {
        let dev = Device::from_json(r#"{"n_qubits": 2, "links": [[0, 1]]}"#, None).unwrap();
        assert_eq!(dev.n_links(), 1);
        assert_eq!(dev.name(), "custom");
    }

    #[test]
    fn malformed_topologies_are_rejected() {
        for text in [
            r#"{"n_qubits": 2, "links": [[0, 0]]}"#,
            r#"{"n_qubits": 2, "links": [[0, 2]]}"#,
            r#"{"n_qubits": 3, "links": [[0, 1], [1, 0]]}"#,
            r#"{"n_qubits": 3, "links": "nope"}"#,
            "not json",
        ] {
            assert!(
                matches!(Device::from_json(text, None), Err(Error::MalformedTopology(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(
            "hanoi28".parse::<Preset>(),
            Err(Error::UnknownPreset(_))
        ));
        assert_eq!("osaka127".parse::<Preset>().unwrap(), Preset::Osaka127);
    }

    #[test]
    fn hop_distance_examples() {
        let dev = make_device(&Preset::Hanoi27).unwrap();
        let a = Link(10, 12);
        assert_eq!(hop_distance(&dev, a, a).unwrap(), 0);
        assert_eq!(hop_distance(&dev, a, Link(15, 18)).unwrap(), 1);
        assert_eq!(hop_distance(&dev, Link(12, 10), Link(18, 15)).unwrap(), 1);
        assert!(matches!(
            hop_distance(&dev, a, Link(0, 26)),
            Err(Error::UnknownLink { .. })
        ));

        let path = path_device(6);
        assert_eq!(hop_distance(&path, Link(0, 1), Link(4, 5)).unwrap(), 3);
        assert_eq!(hop_distance(&path, Link(0, 1), Link(1, 2)).unwrap(), 0);
    }

    #[test]
    fn hop_distance_is_a_symmetric_triangle_respecting_measure() {
        let dev = make_device(&Preset::Hanoi27).unwrap();
        let l = dev.n_links();
        for i in 0..l {
            for j in 0..l {
                assert_eq!(dev.link_distance(i, j), dev.link_distance(j, i));
            }
        }
        // The minimum-over-endpoints measure relaxes the triangle inequality by
        // the length of the middle link (one edge).
        for i in 0..l {
            for j in 0..l {
                for k in 0..l {
                    assert!(
                        dev.link_distance(i, k) <= dev.link_distance(i, j) + dev.link_distance(j, k) + 1
                    );
                }
            }
        }
    }

    fn assert_isolated(dev: &Device, regions: &[Region], buffer: usize) {
        for r in regions {
            assert!(dev.is_connected_subset(&r.qubits));
        }
        for (i, a) in regions.iter().enumerate() {
            for b in &regions[i + 1..] {
                for &x in &a.qubits {
                    for &y in &b.qubits {
                        assert_ne!(x, y);
                        assert!(dev.qubit_distance(x, y) > buffer, "{x} {y}");
                        if buffer >= 1 {
                            assert!(!dev.has_link(x, y));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn two_nine_qubit_regions_on_hanoi() {
        let dev = make_device(&Preset::Hanoi27).unwrap();
        let regions = allocate_regions(&dev, &[9, 9], 1, None).unwrap();
        assert_eq!(regions.len(), 2);
        assert!(regions.iter().all(|r| r.len() == 9));
        assert_isolated(&dev, &regions, 1);
    }

    #[test]
    fn whole_device_region() {
        let dev = make_device(&Preset::Hanoi27).unwrap();
        let regions = allocate_regions(&dev, &[27], 0, None).unwrap();
        let mut q = regions[0].qubits.clone();
        q.sort_unstable();
        assert_eq!(q, (0..27).collect::<Vec<_>>());
    }

    #[test]
    fn oversubscribed_allocation_is_infeasible() {
        let dev = make_device(&Preset::Hanoi27).unwrap();
        assert!(matches!(
            allocate_regions(&dev, &[14, 14], 1, None),
            Err(Error::InfeasibleAllocation(_))
        ));
        // Fits by count but not once the buffer is accounted for.
        let path = path_device(5);
        assert!(allocate_regions(&path, &[2, 3], 1, None).is_err());
        assert!(allocate_regions(&path, &[2, 2], 1, None).is_ok());
    }

    #[test]
    fn weighted_growth_prefers_cheap_links() {
        // Star-ish graph: 0 connects to 1 (expensive) and 2 (cheap).
        let dev = Device::new("w", 4, &[Link(0, 1), Link(0, 2), Link(2, 3)]).unwrap();
        let w: Vec<f64> = dev
            .links()
            .iter()
            .map(|l| if *l == Link(0, 1) { 0.9 } else { 0.01 })
            .collect();
        let r = allocate_regions(&dev, &[3], 0, Some(&w)).unwrap();
        assert_eq!(r[0].qubits, vec![0, 2, 3]);
        let r = allocate_regions(&dev, &[3], 0, None).unwrap();
        assert_eq!(r[0].qubits, vec![0, 1, 2]);
    }

    #[test]
    fn allocation_is_deterministic() {
        let dev = make_device(&Preset::Osaka127).unwrap();
        let a = allocate_regions(&dev, &[11, 8, 9], 1, None).unwrap();
        let b = allocate_regions(&dev, &[11, 8, 9], 1, None).unwrap();
        assert_eq!(a, b);
        assert_isolated(&dev, &a, 1);
    }

    #[test]
    fn path_within_respects_mask() {
        let dev = make_device(&Preset::Hanoi27).unwrap();
        let mut allowed = vec![true; 27];
        let p = dev.path_within(0, 3, &allowed).unwrap();
        assert_eq!(p, vec![0, 1, 2, 3]);
        allowed[2] = false;
        assert!(dev.path_within(0, 3, &allowed).unwrap().len() > 4);
    }
}
