use std::collections::BTreeMap;

use proptest::prelude::*;

use ltlnav_core::buchi::{translate, LassoChecker};
use ltlnav_core::ltl::{eval_word, normalize, AtomSet, Formula, UltimatelyPeriodicWord};
use ltlnav_core::workspace::{validate, AgentSpec, FTerm, Gains, Point, Region, Workspace};

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::True),
        Just(Formula::False),
        Just(Formula::atom("a")),
        Just(Formula::atom("b")),
    ];
    leaf.prop_recursive(3, 8, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            inner.clone().prop_map(Formula::next),
            inner.clone().prop_map(Formula::always),
            inner.clone().prop_map(Formula::eventually),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::until(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::release(a, b)),
        ]
    })
}

fn letter() -> impl Strategy<Value = AtomSet> {
    (any::<bool>(), any::<bool>()).prop_map(|(a, b)| {
        let mut s = AtomSet::new();
        if a {
            s.insert("a".into());
        }
        if b {
            s.insert("b".into());
        }
        s
    })
}

fn word() -> impl Strategy<Value = UltimatelyPeriodicWord> {
    (prop::collection::vec(letter(), 0..4), prop::collection::vec(letter(), 1..4))
        .prop_map(|(p, c)| UltimatelyPeriodicWord::new(p, c).unwrap())
}

proptest! {
    #[test]
    fn print_parse_round_trip(f in formula()) {
        let back: Formula = f.to_string().parse().unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn normal_form_is_equivalent(f in formula(), w in word()) {
        let n = normalize(&f);
        prop_assert!(n.is_nnf());
        prop_assert_eq!(eval_word(&n, &w), eval_word(&f, &w));
    }

    #[test]
    fn dualities(f in formula(), g in formula(), w in word()) {
        let ev = |x: &Formula| eval_word(x, &w);
        let not = |x: &Formula| Formula::not(x.clone());
        prop_assert_eq!(ev(&not(&Formula::next(f.clone()))), ev(&Formula::next(not(&f))));
        prop_assert_eq!(
            ev(&not(&Formula::until(f.clone(), g.clone()))),
            ev(&Formula::release(not(&f), not(&g)))
        );
        prop_assert_eq!(ev(&Formula::always(f.clone())), ev(&not(&Formula::eventually(not(&f)))));
        prop_assert_eq!(ev(&Formula::eventually(f.clone())), ev(&Formula::until(Formula::True, f.clone())));
    }

    #[test]
    fn automaton_agrees_with_evaluation(f in formula(), w in word()) {
        let b = translate(&normalize(&f));
        let checker = LassoChecker::new(&b);
        prop_assert_eq!(checker.accepts_word(&w), eval_word(&f, &w), "{}", f);
    }
}

fn agent(id: u32, radius: f64, sensing: f64) -> AgentSpec {
    AgentSpec {
        id,
        radius,
        sensing,
        start: Point::zeros(),
        formula: "true".into(),
        labels: BTreeMap::new(),
        props: None,
        gains: Gains { kg: 1.0, lambda: 2.0 },
        fterm: FTerm::default(),
    }
}

fn layout() -> impl Strategy<Value = (f64, Vec<(f64, f64)>, Vec<f64>)> {
    (
        5.0..12.0f64,
        prop::collection::vec((-8.0..8.0f64, -8.0..8.0f64), 1..5),
        prop::collection::vec(0.05..0.5f64, 1..4),
    )
}

proptest! {
    #[test]
    fn validation_is_monotone((r0, centers, radii) in layout(), grow in 0.0..3.0f64, shrink in 0.1..1.0f64) {
        let regions: Vec<Region> = centers
            .iter()
            .enumerate()
            .map(|(k, &(x, y))| Region { id: k as u32 + 1, center: Point::new(x, y, 0.0), radius: 0.4 })
            .collect();
        let team = |scale: f64| -> Vec<AgentSpec> {
            radii.iter().enumerate().map(|(i, &r)| agent(i as u32 + 1, r * scale, 0.65)).collect()
        };
        let ws = |r| Workspace { dim: 2, center: Point::zeros(), radius: r };
        let base = validate(&ws(r0), &regions, &team(1.0), false).unwrap();
        let roomier = validate(&ws(r0 + grow), &regions, &team(shrink), false).unwrap();
        for c in &base.checks {
            let other = roomier.get(&c.name).unwrap();
            prop_assert!(other.margin >= c.margin - 1e-12, "{}", c.name);
            prop_assert!(!c.passed || other.passed, "{}", c.name);
        }
    }

    #[test]
    fn region_centres_host_smaller_agents(x in -5.0..5.0f64, y in -5.0..5.0f64, rpi in 0.1..1.0f64, frac in 0.01..0.99f64) {
        let region = Region { id: 1, center: Point::new(x, y, 1.0), radius: rpi };
        prop_assert!(ltlnav_core::workspace::in_region(&region.center, frac * rpi, &region));
    }
}
