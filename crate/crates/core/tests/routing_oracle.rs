use std::collections::BTreeMap;

use manet_energy::routing::codec::collision_probability_slots;
use manet_energy::routing::select::COST_QUANTUM;
use manet_energy::rng::rng_from_seed;
use manet_energy::{
    decode_energy, encode_delay, select_route, EnergyTable, HelloCodec, NetworkGraph, NodeId,
    Route, RouteQuery,
};
use rand::Rng;

type Tables = BTreeMap<NodeId, EnergyTable>;

struct Instance {
    graph: NetworkGraph,
    tables: Tables,
    query: RouteQuery,
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("n{i}")).collect()
}

fn random_instance(rng: &mut impl Rng) -> Instance {
    let n = rng.random_range(2..=8);
    let ids = names(n);
    let mut links = Vec::new();
    // Random spanning tree, then extra chords.
    for i in 1..n {
        let j = rng.random_range(0..i);
        links.push((ids[i].as_str(), ids[j].as_str()));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.3) && !links.contains(&(ids[j].as_str(), ids[i].as_str())) {
                links.push((ids[i].as_str(), ids[j].as_str()));
            }
        }
    }
    links.sort();
    links.dedup();
    let graph = NetworkGraph::from_links(ids.iter().map(String::as_str), links).unwrap();

    let now = 10.0;
    let mut tables = Tables::new();
    for owner in graph.nodes() {
        let mut table = EnergyTable::new(2.0).unwrap();
        for nb in graph.neighbors(owner) {
            match rng.random_range(0..10) {
                0 => continue,
                1 => table.insert(nb.clone(), rng.random(), now - 5.0),
                // Coarse energies so that ties actually occur.
                _ => table.insert(nb.clone(), rng.random_range(0..=10) as f64 / 10.0, now - 1.0),
            }
        }
        tables.insert(owner.clone(), table);
    }
    let src = rng.random_range(0..n);
    let mut dst = rng.random_range(0..n - 1);
    if dst >= src {
        dst += 1;
    }
    let query = RouteQuery {
        src: ids[src].as_str().into(),
        dst: ids[dst].as_str().into(),
        beta: [0.0, 0.5, 1.0, 3.0, rng.random_range(0.0..10.0)][rng.random_range(0..5)],
        exhaust_threshold: [0.0, 0.25][rng.random_range(0..2)],
        now,
    };
    Instance { graph, tables, query }
}

fn step_energy(inst: &Instance, from: &NodeId, to: &NodeId) -> Option<f64> {
    let q = &inst.query;
    let record = inst.tables[from].get(to).filter(|r| q.now - r.timestamp <= 2.0);
    let energy = match record {
        Some(r) => r.energy,
        None if *to == q.dst => 0.0,
        None => return None,
    };
    if *to != q.dst && energy <= q.exhaust_threshold {
        return None;
    }
    Some(energy)
}

fn step_cost(inst: &Instance, from: &NodeId, to: &NodeId) -> Option<f64> {
    step_energy(inst, from, to).map(|e| 1.0 + inst.query.beta * (1.0 - e))
}

/// Every admissible simple path with its cost, by depth-first enumeration.
fn all_paths(inst: &Instance) -> Vec<(f64, Vec<NodeId>)> {
    fn walk(inst: &Instance, path: &mut Vec<NodeId>, cost: f64, out: &mut Vec<(f64, Vec<NodeId>)>) {
        let here = path.last().unwrap().clone();
        if here == inst.query.dst {
            out.push((cost, path.clone()));
            return;
        }
        for nb in inst.graph.neighbors(&here) {
            if path.contains(nb) {
                continue;
            }
            if let Some(c) = step_cost(inst, &here, nb) {
                path.push(nb.clone());
                walk(inst, path, cost + c, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(inst, &mut vec![inst.query.src.clone()], 0.0, &mut out);
    out
}

fn brute_force(inst: &Instance) -> Option<(f64, Vec<NodeId>)> {
    let key = |c: f64| (c / COST_QUANTUM).round() as i64;
    all_paths(inst)
        .into_iter()
        .min_by(|a, b| key(a.0).cmp(&key(b.0)).then_with(|| a.1.cmp(&b.1)))
}

fn penalty(inst: &Instance, route: &Route) -> f64 {
    route
        .nodes
        .windows(2)
        .map(|w| 1.0 - step_energy(inst, &w[0], &w[1]).unwrap())
        .sum::<f64>()
}

#[test]
fn matches_brute_force_on_random_graphs() {
    let mut rng = rng_from_seed(7);
    let mut routed = 0;
    for case in 0..100 {
        let inst = random_instance(&mut rng);
        let got = select_route(&inst.graph, &inst.tables, &inst.query).unwrap();
        let want = brute_force(&inst);
        match (&got, &want) {
            (None, None) => {}
            (Some(r), Some((cost, path))) => {
                routed += 1;
                assert_eq!(&r.nodes, path, "case {case}");
                assert_eq!(r.cost, *cost, "case {case}");
                let resum: f64 = r
                    .nodes
                    .windows(2)
                    .map(|w| step_cost(&inst, &w[0], &w[1]).unwrap())
                    .sum();
                assert!((resum - r.cost).abs() < 1e-12);
            }
            _ => panic!("case {case}: {got:?} vs {want:?}"),
        }
    }
    assert!(routed > 50, "suite too degenerate: {routed}");
}

#[test]
fn larger_beta_trades_hops_for_energy() {
    // Along beta the optimum's hop count never falls and its summed energy
    // penalty never rises (exchange argument on two optimal costs).
    let mut rng = rng_from_seed(11);
    for case in 0..100 {
        let mut inst = random_instance(&mut rng);
        let mut prev: Option<(usize, f64)> = None;
        for beta in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            inst.query.beta = beta;
            let Some(r) = select_route(&inst.graph, &inst.tables, &inst.query).unwrap() else {
                break;
            };
            let now = (r.hops(), penalty(&inst, &r));
            if let Some((hops, pen)) = prev {
                assert!(now.0 >= hops, "case {case} beta {beta}");
                assert!(now.1 <= pen + 1e-9, "case {case} beta {beta}");
            }
            prev = Some(now);
        }
    }
}

#[test]
fn larger_beta_can_lower_the_weakest_relay() {
    // Two relays at 0.5 against three relays whose weakest is 0.45: summed
    // penalties 1.0 and 0.55, so the longer path wins once beta > 1/0.45.
    let graph = NetworkGraph::from_links(
        ["A", "X1", "X2", "Y1", "Y2", "Y3", "D"],
        [
            ("A", "X1"),
            ("X1", "X2"),
            ("X2", "D"),
            ("A", "Y1"),
            ("Y1", "Y2"),
            ("Y2", "Y3"),
            ("Y3", "D"),
        ],
    )
    .unwrap();
    let mut tables = Tables::new();
    for (owner, nb, e) in [
        ("A", "X1", 0.5),
        ("X1", "X2", 0.5),
        ("X2", "D", 1.0),
        ("A", "Y1", 0.45),
        ("Y1", "Y2", 1.0),
        ("Y2", "Y3", 1.0),
        ("Y3", "D", 1.0),
    ] {
        tables
            .entry(NodeId::from(owner))
            .or_insert_with(|| EnergyTable::new(1.0).unwrap())
            .insert(nb.into(), e, 0.0);
    }
    let route = |beta: f64| {
        let q = RouteQuery {
            src: "A".into(),
            dst: "D".into(),
            beta,
            exhaust_threshold: 0.0,
            now: 0.0,
        };
        select_route(&graph, &tables, &q).unwrap().unwrap().display_path()
    };
    let flip = 1.0 / 0.45;
    assert_eq!(route(flip - 1e-6), "A>X1>X2>D");
    assert_eq!(route(flip + 1e-6), "A>Y1>Y2>Y3>D");
}

fn diamond(side_c: &[(&str, &str, f64)], links: &[(&'static str, &'static str)]) -> (NetworkGraph, Tables) {
    let mut nodes: Vec<&str> = links.iter().flat_map(|(a, b)| [*a, *b]).collect();
    nodes.sort();
    nodes.dedup();
    let graph = NetworkGraph::from_links(nodes, links.iter().copied()).unwrap();
    let mut tables = Tables::new();
    for &(owner, nb, e) in [("A", "B", 0.1), ("B", "D", 1.0)].iter().chain(side_c) {
        tables
            .entry(NodeId::from(owner))
            .or_insert_with(|| EnergyTable::new(1.0).unwrap())
            .insert(nb.into(), e, 0.0);
    }
    (graph, tables)
}

fn best(graph: &NetworkGraph, tables: &Tables, beta: f64) -> String {
    let q = RouteQuery {
        src: "A".into(),
        dst: "D".into(),
        beta,
        exhaust_threshold: 0.05,
        now: 0.0,
    };
    select_route(graph, tables, &q).unwrap().unwrap().display_path()
}

#[test]
fn balanced_diamond_flips_at_zero() {
    let (g, t) = diamond(
        &[("A", "C", 0.9), ("C", "D", 1.0)],
        &[("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")],
    );
    // Equal hop counts: threshold beta* = 0, tie broken lexicographically.
    assert_eq!(best(&g, &t, 0.0), "A>B>D");
    assert_eq!(best(&g, &t, 1e-6), "A>C>D");
    assert_eq!(best(&g, &t, 5.0), "A>C>D");
}

#[test]
fn unbalanced_diamond_flips_at_hop_to_penalty_ratio() {
    // A-B-D: 2 hops, penalty 0.9. A-C-E-D: 3 hops, penalty 0.2.
    // Costs 2 + 0.9 beta and 3 + 0.2 beta meet at beta* = 1/0.7.
    let (g, t) = diamond(
        &[("A", "C", 0.9), ("C", "E", 0.9), ("E", "D", 1.0)],
        &[("A", "B"), ("A", "C"), ("B", "D"), ("C", "E"), ("E", "D")],
    );
    let flip = 1.0 / 0.7;
    assert_eq!(best(&g, &t, 0.0), "A>B>D");
    assert_eq!(best(&g, &t, flip - 1e-6), "A>B>D");
    assert_eq!(best(&g, &t, flip + 1e-6), "A>C>E>D");
}

#[test]
fn codec_round_trip_within_half_slot() {
    let mut rng = rng_from_seed(3);
    for (slots, mapping) in [
        (11, manet_energy::routing::codec::DelayMapping::Direct),
        (16, manet_energy::routing::codec::DelayMapping::Inverse),
        (2, manet_energy::routing::codec::DelayMapping::Direct),
    ] {
        let codec = HelloCodec::new(0.05, 0.4, slots).unwrap().with_mapping(mapping);
        let half = 1.0 / (2.0 * (slots - 1) as f64);
        for _ in 0..10_000 {
            let e: f64 = rng.random();
            let d = encode_delay(&codec, e).unwrap();
            let back = decode_energy(&codec, d).unwrap();
            assert!((back - e).abs() <= half + 1e-15, "{e} -> {back}");
            assert_eq!(decode_energy(&codec, encode_delay(&codec, back).unwrap()).unwrap(), back);
        }
    }
}

#[test]
fn every_slot_survives_a_round_trip() {
    for slots in 2..=64 {
        let codec = HelloCodec::new(0.0, 1.0, slots).unwrap();
        let top = (slots - 1) as f64;
        let mut last = f64::NEG_INFINITY;
        for s in 0..slots {
            let e = s as f64 / top;
            let d = encode_delay(&codec, e).unwrap();
            assert!(d > last);
            last = d;
            assert!((decode_energy(&codec, d).unwrap() - e).abs() < 1e-15);
        }
        assert_eq!(encode_delay(&codec, 1.0).unwrap(), 1.0);
        assert_eq!(decode_energy(&codec, 1.0).unwrap(), 1.0);
    }
}

#[test]
fn collision_probability_matches_enumeration() {
    for slots in 1..=12usize {
        for n in 2..=6usize {
            let total = (slots as u64).pow(n as u32);
            let mut colliding = 0u64;
            let mut digits = vec![0usize; n];
            for mut code in 0..total {
                for d in digits.iter_mut() {
                    *d = (code % slots as u64) as usize;
                    code /= slots as u64;
                }
                let mut seen = 0u32;
                let clash = digits.iter().any(|&d| {
                    let bit = 1 << d;
                    let dup = seen & bit != 0;
                    seen |= bit;
                    dup
                });
                colliding += clash as u64;
            }
            let want = colliding as f64 / total as f64;
            assert_eq!(collision_probability_slots(slots, n).unwrap(), want, "L={slots} n={n}");
        }
    }
}
