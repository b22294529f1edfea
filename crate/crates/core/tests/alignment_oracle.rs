//! Alignment costs checked against an exhaustive 0-1 breadth-first search over
//! the synchronous product, written without reference to the A* engine.

use std::collections::{HashMap, VecDeque};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shopfloor_core::conformance::{align, fitness, EventKey, MappedTrace, MoveKind};
use shopfloor_core::model::{Phase, TransitionOrigin};
use shopfloor_core::{Marking, PetriNet, PlaceId, TransitionId};

/// Minimum cost by 0-1 BFS over (marking, position); `None` when no final
/// state is reachable.
fn oracle_cost(net: &PetriNet, candidates: &[Vec<usize>]) -> Option<u32> {
    let n = candidates.len();
    let finals: Vec<Vec<u32>> = net.final_markings.iter().map(|m| m.0.to_vec()).collect();
    let start = (net.initial_marking.clone(), 0usize);
    let mut dist: HashMap<(Vec<u32>, usize), u32> = HashMap::new();
    let mut deque = VecDeque::new();
    dist.insert(start.clone(), 0);
    deque.push_back((0u32, start));
    while let Some((d, state)) = deque.pop_front() {
        if dist.get(&state).is_some_and(|&best| best < d) {
            continue;
        }
        let (marking, pos) = state;
        if pos == n && finals.contains(&marking) {
            return Some(d);
        }
        let mut next: Vec<(u32, Vec<u32>, usize)> = Vec::new();
        if pos < n {
            next.push((1, marking.clone(), pos + 1));
        }
        for (ti, t) in net.transitions.iter().enumerate() {
            if !t.inputs.iter().all(|p| marking[p.0] > 0) {
                continue;
            }
            let mut m = marking.clone();
            for p in &t.inputs {
                m[p.0] -= 1;
            }
            for p in &t.outputs {
                m[p.0] += 1;
            }
            next.push((u32::from(t.visible), m.clone(), pos));
            if pos < n && candidates[pos].contains(&ti) {
                next.push((0, m, pos + 1));
            }
        }
        for (w, m, p) in next {
            let nd = d + w;
            let key = (m, p);
            if dist.get(&key).is_none_or(|&old| nd < old) {
                dist.insert(key.clone(), nd);
                if w == 0 {
                    deque.push_front((nd, key));
                } else {
                    deque.push_back((nd, key));
                }
            }
        }
    }
    None
}

/// Random net with at most 8 transitions. Invisible transitions never add
/// tokens, so zero-cost cycles cannot grow the state space. The final marking
/// is reached by a random walk, so it is reachable.
fn random_net(rng: &mut ChaCha8Rng) -> PetriNet {
    let mut net = PetriNet::default();
    let places = rng.gen_range(2..=6);
    for i in 0..places {
        net.add_place(format!("p{i}"));
    }
    net.initial_marking[0] = 1;
    let transitions = rng.gen_range(1..=8);
    for t in 0..transitions {
        let pick = |rng: &mut ChaCha8Rng, k: usize| {
            let mut v: Vec<PlaceId> = (0..places).map(PlaceId).collect();
            for i in 0..v.len() {
                let j = rng.gen_range(i..v.len());
                v.swap(i, j);
            }
            v.truncate(k);
            v
        };
        let k_in = rng.gen_range(1..=2);
        let ins = pick(rng, k_in);
        let visible = rng.gen_bool(0.75);
        let k_out = if visible { rng.gen_range(0..=2) } else { rng.gen_range(0..=ins.len()) };
        let outs = pick(rng, k_out);
        let id = net.add_transition(format!("t{t}"), false, ins, outs, TransitionOrigin::Unknown);
        net.transitions[id.0].visible = visible;
    }
    let mut m = net.initial();
    for _ in 0..rng.gen_range(0..6) {
        let enabled: Vec<TransitionId> = net.enabled(&m).map(|t| t.uid).collect();
        if enabled.is_empty() {
            break;
        }
        let t = enabled[rng.gen_range(0..enabled.len())];
        m = net.fire(net.transition(t), &m).unwrap();
    }
    net.final_markings.push(m);
    net
}

fn random_trace(rng: &mut ChaCha8Rng, net: &PetriNet) -> MappedTrace {
    let len = rng.gen_range(0..=8);
    let visible: Vec<TransitionId> = net.transitions.iter().filter(|t| t.visible).map(|t| t.uid).collect();
    let candidates: Vec<Vec<TransitionId>> = (0..len)
        .map(|_| {
            if visible.is_empty() || rng.gen_bool(0.15) {
                vec![]
            } else {
                let mut c = vec![visible[rng.gen_range(0..visible.len())]];
                if rng.gen_bool(0.2) {
                    c.push(visible[rng.gen_range(0..visible.len())]);
                    c.sort();
                    c.dedup();
                }
                c
            }
        })
        .collect();
    MappedTrace {
        keys: (0..len).map(|i| EventKey { key: format!("e{i}"), phase: None }).collect(),
        candidates,
    }
}

fn indices(trace: &MappedTrace) -> Vec<Vec<usize>> {
    trace.candidates.iter().map(|c| c.iter().map(|t| t.0).collect()).collect()
}

#[test]
fn astar_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_24);
    for _ in 0..60 {
        let net = random_net(&mut rng);
        for _ in 0..40 {
            let trace = random_trace(&mut rng, &net);
            let expected = oracle_cost(&net, &indices(&trace)).expect("final marking reachable");
            let a = align(&net, &trace).unwrap();
            assert_eq!(a.raw_cost, expected);
            // Model projection is a firing sequence ending in a final marking.
            let mut m = net.initial();
            for t in a.model_projection() {
                m = net.fire(net.transition(t), &m).expect("projection fires");
            }
            assert!(net.is_final(&m));
            assert_eq!(a.log_projection(), (0..trace.len()).collect::<Vec<_>>());
        }
    }
}

/// start -> complete of one call, final marking on the last place.
fn one_call() -> PetriNet {
    let mut net = PetriNet::default();
    let p: Vec<PlaceId> = (0..3).map(|i| net.add_place(format!("p{i}"))).collect();
    net.initial_marking[0] = 1;
    for (i, phase) in ["start", "complete"].iter().enumerate() {
        let name = format!("A_a1_https://h/_{phase}");
        let origin = TransitionOrigin::from_name(&name, true);
        net.add_transition(name, true, vec![p[i]], vec![p[i + 1]], origin);
    }
    net.final_markings.push(Marking::single(3, p[2]));
    net
}

fn call_trace(phases: &[Phase]) -> MappedTrace {
    MappedTrace {
        keys: phases.iter().map(|&p| EventKey { key: "A".into(), phase: Some(p) }).collect(),
        candidates: phases.iter().map(|&p| vec![TransitionId(if p == Phase::Start { 0 } else { 1 })]).collect(),
    }
}

#[test]
fn one_call_fitness_examples() {
    let net = one_call();
    type Case = (&'static [Phase], u32, (f64, f64, f64));
    let cases: [Case; 3] = [
        (&[Phase::Start, Phase::Complete], 0, (1.0, 1.0, 1.0)),
        (&[Phase::Start], 1, (0.5, 1.0, 1.0 - 1.0 / 3.0)),
        (&[], 2, (0.0, 1.0, 0.0)),
    ];
    for (phases, cost, (mm, ml, tr)) in cases {
        let trace = call_trace(phases);
        let a = align(&net, &trace).unwrap();
        assert_eq!(a.raw_cost, cost);
        let f = fitness(&a, &net, &trace).unwrap();
        assert!((f.move_model - mm).abs() < 1e-12, "{phases:?}: {f:?}");
        assert!((f.move_log - ml).abs() < 1e-12, "{phases:?}: {f:?}");
        assert!((f.trace - tr).abs() < 1e-12, "{phases:?}: {f:?}");
    }
    let a = align(&net, &call_trace(&[Phase::Start, Phase::Complete, Phase::Start])).unwrap();
    assert_eq!(a.raw_cost, 1);
    assert_eq!(a.moves.last().unwrap().kind, MoveKind::Log);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unmappable_event_costs_exactly_one(seed in any::<u64>(), at in 0usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_net(&mut rng);
        let trace = random_trace(&mut rng, &net);
        let base = align(&net, &trace).unwrap();
        let base_f = fitness(&base, &net, &trace).unwrap();

        let mut longer = trace.clone();
        let at = at.min(longer.len());
        longer.keys.insert(at, EventKey { key: "unmapped".into(), phase: None });
        longer.candidates.insert(at, vec![]);
        let a = align(&net, &longer).unwrap();
        let f = fitness(&a, &net, &longer).unwrap();
        prop_assert_eq!(a.raw_cost, base.raw_cost + 1);
        prop_assert!(f.move_log <= base_f.move_log + 1e-12);
        for v in [f.move_model, f.move_log, f.trace] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert_eq!(f.trace == 1.0, a.raw_cost == 0);
    }
}
