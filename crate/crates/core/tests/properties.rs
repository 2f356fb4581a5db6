mod common;

use std::collections::BTreeMap;

use geoagent_core::canonical::canonical_value;
use geoagent_core::corpus::{parse_corpus, to_jsonl};
use geoagent_core::evaluator::metrics::{category_f1, numeric_match, order_metrics, score_step};
use geoagent_core::geotools::bundle::RasterGrid;
use geoagent_core::geotools::geodesy::{haversine_m, nearest, EARTH_RADIUS_M};
use geoagent_core::geotools::geometry::point_in_polygon;
use geoagent_core::geotools::spectral::{compute_index, index_change, IndexKind, INDEX_BAND};
use geoagent_core::orchestrator::render_action;
use geoagent_core::{parse_action, Action, Category, FormatError, FormatErrorKind, ToolCall, ToolRegistry};
use proptest::prelude::*;
use serde_json::{json, Value};

fn lonlat() -> impl Strategy<Value = [f64; 2]> {
    (-180.0..180.0f64, -85.0..85.0f64).prop_map(|(a, b)| [a, b])
}

fn cosine_law_m(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (p1, p2) = (a[1].to_radians(), b[1].to_radians());
    let dl = (b[0] - a[0]).to_radians();
    let c = (p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos()).clamp(-1.0, 1.0);
    EARTH_RADIUS_M * c.acos()
}

proptest! {
    #[test]
    fn haversine_is_a_metric(a in lonlat(), b in lonlat(), c in lonlat()) {
        let (ab, ba) = (haversine_m(a, b), haversine_m(b, a));
        prop_assert_eq!(ab, ba);
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(haversine_m(a, a), 0.0);
        prop_assert!(ab <= haversine_m(a, c) + haversine_m(c, b) + 1e-6);
    }

    #[test]
    fn haversine_agrees_with_cosine_law_for_short_pairs(
        a in (-179.0..179.0f64, -80.0..80.0f64),
        d in (-0.9..0.9f64, -0.9..0.9f64),
    ) {
        let p = [a.0, a.1];
        let q = [a.0 + d.0, a.1 + d.1];
        let h = haversine_m(p, q);
        prop_assume!(h < 100_000.0);
        prop_assert!((h - cosine_law_m(p, q)).abs() < 0.5);
    }

    #[test]
    fn nearest_matches_brute_force(
        sources in prop::collection::vec(lonlat(), 1..=10),
        targets in prop::collection::vec(lonlat(), 1..=10),
    ) {
        for s in &sources {
            let (j, d) = nearest(*s, &targets).unwrap();
            let brute = targets.iter().map(|t| haversine_m(*s, *t)).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(d, brute);
            prop_assert_eq!(haversine_m(*s, targets[j]), brute);
        }
    }
}

fn grid(bands: [Vec<f64>; 4]) -> RasterGrid {
    let names = ["nir", "red", "swir1", "swir2"];
    RasterGrid {
        width: 8,
        height: 8,
        origin: [0.0, 1.0],
        pixel_size: [0.125, -0.125],
        nodata: -9999.0,
        bands: names.iter().map(|n| n.to_string()).zip(bands).collect(),
    }
}

fn band() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001..1.0f64, 64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn index_bands_match_the_scalar_formula(nir in band(), red in band(), swir1 in band(), swir2 in band()) {
        let g = grid([nir.clone(), red.clone(), swir1.clone(), swir2.clone()]);
        let oracle = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| (a - b) / (a + b)).collect() };
        for (kind, want) in [
            (IndexKind::Ndvi, oracle(&nir, &red)),
            (IndexKind::Nbr, oracle(&nir, &swir2)),
            (IndexKind::Ndbi, oracle(&swir1, &nir)),
        ] {
            let got = compute_index(&g, kind).unwrap();
            for (x, y) in got.iter().zip(&want) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn index_change_is_later_minus_earlier(e in prop::collection::vec(-1.0..1.0f64, 64), l in prop::collection::vec(-1.0..1.0f64, 64)) {
        let mut a = grid([vec![0.5; 64], vec![0.5; 64], vec![0.5; 64], vec![0.5; 64]]);
        let mut b = a.clone();
        a.bands = BTreeMap::from([(INDEX_BAND.to_string(), e.clone())]);
        b.bands = BTreeMap::from([(INDEX_BAND.to_string(), l.clone())]);
        let d = index_change(&a, &b).unwrap();
        for i in 0..64 {
            prop_assert_eq!(d[i], l[i] - e[i]);
        }
    }
}

/// Winding number, independent of the ray-casting implementation.
fn winding_number(p: [f64; 2], ring: &[[f64; 2]]) -> i32 {
    let cross = |a: [f64; 2], b: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]);
    let mut wn = 0;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a[1] <= p[1] {
            if b[1] > p[1] && cross(a, b) > 0.0 {
                wn += 1;
            }
        } else if b[1] <= p[1] && cross(a, b) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) };
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

/// Star-shaped, hence simple, closed ring around the origin.
fn star_ring() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec(0.2..1.0f64, 3..12).prop_map(|radii| {
        let n = radii.len();
        let mut ring: Vec<[f64; 2]> = radii
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let t = i as f64 * std::f64::consts::TAU / n as f64;
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        ring.push(ring[0]);
        ring
    })
}

proptest! {
    #[test]
    fn ray_casting_agrees_with_winding_number(ring in star_ring(), x in -1.2..1.2f64, y in -1.2..1.2f64) {
        let p = [x, y];
        let near_edge = ring.windows(2).any(|w| segment_distance(p, w[0], w[1]) < 1e-9);
        prop_assume!(!near_edge);
        prop_assert_eq!(point_in_polygon(p, &ring), winding_number(p, &ring) != 0);
    }
}

proptest! {
    #[test]
    fn order_verdicts_nest(p in prop::collection::vec(0..3usize, 0..6), g in prop::collection::vec(0..3usize, 0..6)) {
        let v = order_metrics(&p, &g);
        prop_assert!(!v.same_order || v.any_order);
        prop_assert!(!v.any_order || v.unique);
        prop_assert_eq!(v, order_metrics(&g, &p));
    }

    #[test]
    fn category_f1_is_bounded_and_symmetric(
        p in prop::collection::vec(0..6usize, 0..8),
        g in prop::collection::vec(0..6usize, 0..8),
        set_mode in any::<bool>(),
    ) {
        let reg = ToolRegistry::default_registry();
        let names: Vec<String> = ["OCR", "TextToBbox", "Calculator", "Solver", "DrawBox", "AddPoisLayer"]
            .iter().map(|s| s.to_string()).collect();
        let pick = |ix: &[usize]| -> Vec<String> { ix.iter().map(|i| names[*i].clone()).collect() };
        let (ps, gs) = (pick(&p), pick(&g));
        let map = reg.category_map();
        let a = category_f1(&ps, &gs, &map, set_mode);
        let b = category_f1(&gs, &ps, &map, set_mode);
        prop_assert_eq!(&a, &b);
        for c in Category::ALL {
            if let Some(f) = a.get(c) {
                prop_assert!((0.0..=1.0).contains(&f));
            }
        }
        prop_assert_eq!(a.unmapped, 0);
    }

    #[test]
    fn numeric_band_is_inclusive(g in prop_oneof![-1e6..-1e-3f64, 1e-3..1e6f64]) {
        let eps = 1e-6;
        prop_assert!(numeric_match(g * 1.1, g));
        prop_assert!(numeric_match(g * 0.9, g));
        prop_assert!(numeric_match(g, g));
        prop_assert!(!numeric_match(g * (1.1 + eps), g));
        prop_assert!(!numeric_match(g * (0.9 - eps), g));
    }
}

fn json_leaf() -> impl Strategy<Value = Value> {
    prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::from),
        any::<i32>().prop_map(Value::from),
        (-1e9..1e9f64).prop_map(Value::from),
        "[a-z ]{0,8}".prop_map(Value::from),
    ]
}

fn json_value() -> impl Strategy<Value = Value> {
    json_leaf().prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(Value::from),
            prop::collection::btree_map("[a-z]{1,5}", inner, 0..4)
                .prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

proptest! {
    #[test]
    fn canonical_form_is_a_fixed_point(v in json_value()) {
        let once = canonical_value(&v);
        let back: Value = serde_json::from_str(&once).unwrap();
        prop_assert_eq!(&back, &v);
        prop_assert_eq!(canonical_value(&back), once);
    }

    #[test]
    fn rendered_actions_parse_back(
        thought in "[A-Za-z0-9][A-Za-z0-9 ,.]{0,30}[A-Za-z0-9.]",
        tool in "[A-Z][A-Za-z]{1,12}",
        args in prop::collection::btree_map("[a-z_]{1,8}", json_leaf(), 0..4),
        with_call in any::<bool>(),
    ) {
        let action = if with_call {
            Action::call(thought, ToolCall::new(tool, Value::Object(args.into_iter().collect())))
        } else {
            Action::thought_only(thought)
        };
        let parsed = parse_action(&render_action(&action), 1, false).unwrap();
        prop_assert_eq!(parsed, action);
    }

    #[test]
    fn corpus_text_round_trips(pick in prop::collection::vec(0..25usize, 1..6)) {
        let all = common::golden();
        let mut seen = std::collections::BTreeSet::new();
        let subset: Vec<_> = pick.into_iter().filter(|i| seen.insert(*i)).map(|i| all[i].clone()).collect();
        let text = to_jsonl(&subset);
        let back = parse_corpus(&text).unwrap();
        prop_assert_eq!(&back, &subset);
        prop_assert_eq!(to_jsonl(&back), text);
    }
}

#[derive(Debug, Clone)]
enum Mutation {
    Keep,
    OtherTool,
    DropArg(usize),
    ChangeValue(usize),
    Format(FormatErrorKind),
}

fn mutation() -> impl Strategy<Value = Mutation> {
    prop_oneof![
        Just(Mutation::Keep),
        Just(Mutation::OtherTool),
        (0..4usize).prop_map(Mutation::DropArg),
        (0..4usize).prop_map(Mutation::ChangeValue),
        prop_oneof![
            Just(FormatErrorKind::NoAction),
            Just(FormatErrorKind::WrongFormat),
            Just(FormatErrorKind::MultipleCalls)
        ]
        .prop_map(Mutation::Format),
    ]
}

fn mutate(gold: &Action, m: &Mutation) -> Result<Action, FormatError> {
    let mut a = gold.clone();
    let call = a.call.as_mut().expect("call step");
    let nth_key = |c: &ToolCall, i: usize| c.args.as_object().and_then(|o| o.keys().nth(i % o.len().max(1)).cloned());
    match m {
        Mutation::Keep => {}
        Mutation::OtherTool => call.tool = if call.tool == "Calculator" { "Solver".into() } else { "Calculator".into() },
        Mutation::DropArg(i) => {
            if let Some(k) = nth_key(call, *i) {
                call.args.as_object_mut().unwrap().remove(&k);
            }
        }
        Mutation::ChangeValue(i) => {
            if let Some(k) = nth_key(call, *i) {
                call.args[&k] = json!("something else");
            }
        }
        Mutation::Format(kind) => {
            return Err(FormatError {
                kind: *kind,
                step: 2,
                detail: String::new(),
            })
        }
    }
    Ok(a)
}

proptest! {
    #[test]
    fn step_ladder_is_monotone(rec in 0..25usize, step in 0..8usize, m in mutation()) {
        let reg = ToolRegistry::default_registry();
        let all = common::golden();
        let calls: Vec<Action> = all[rec]
            .steps
            .iter()
            .map(|s| s.as_action())
            .filter(|a| a.call.as_ref().is_some_and(|c| c.tool != "Terminate"))
            .collect();
        prop_assume!(!calls.is_empty());
        let gold = &calls[step % calls.len()];
        let s = score_step(&mutate(gold, &m), gold, 2, &reg);
        prop_assert!(s.is_monotone());
        if matches!(m, Mutation::Keep) {
            prop_assert!(s.inst && s.tool && s.argn && s.argv);
        }
        if matches!(m, Mutation::Format(_)) {
            prop_assert!(!s.inst);
        }
    }
}
