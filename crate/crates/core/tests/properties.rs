use proptest::prelude::*;

use rpl_core::synthesis::{synthesize_all, EntryMode};
use rpl_core::{
    build_language_graph, builtin_catalog, export_dot, run_simulation, Capability, DesignQuery, EdgeOverlay,
    FaultModelClass, PatternClass, PatternInstance, RelationKind, SimConfig, SolutionCandidate, SynthesisError,
    SystemModel, Workload,
};

const NS: f64 = 1e9;

fn instance_mix() -> impl Strategy<Value = Vec<PatternInstance>> {
    let rollback = (50.0f64..400.0, 1.0f64..20.0, 0.0f64..60.0).prop_map(|(t, d, r)| {
        PatternInstance::new("rollback")
            .with("interval", t)
            .with("checkpoint_cost", d)
            .with("restart_cost", r)
    });
    let extras = proptest::sample::subsequence(
        vec!["monitoring", "prediction", "rollforward", "reinitialization", "recovery-block", "rejuvenation"],
        0..3,
    );
    (proptest::option::of(rollback), extras, proptest::option::of(prop_oneof![Just(3.0), Just(5.0)])).prop_map(
        |(rb, extras, nmr)| {
            let mut v: Vec<PatternInstance> = extras.into_iter().map(PatternInstance::new).collect();
            v.extend(rb);
            if let Some(n) = nmr {
                v.push(PatternInstance::new("n-modular-redundancy").with("N", n));
            }
            v
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn accounting_identity_is_exact(
        insts in instance_mix(),
        mtbe in 200.0f64..5000.0,
        p_act in 0.1f64..1.0,
        seed in any::<u64>(),
        binding in prop_oneof![Just("dynamic-state"), Just("stateless")],
    ) {
        let sys = SystemModel { p_activation: p_act, ..SystemModel::fail_stop(mtbe) };
        let mut cfg = SimConfig::new(sys, Workload::new(1500.0), SolutionCandidate::bare(binding, insts))
            .with_seed(seed)
            .with_trials(8);
        cfg.per_trial = true;
        let r = run_simulation(&cfg).unwrap();
        for t in r.per_trial.unwrap() {
            prop_assert_eq!(t.makespan_ns, t.useful_ns + t.overhead_ns.iter().sum::<u64>());
            prop_assert!(t.makespan_ns >= t.useful_ns);
        }
        prop_assert!(r.makespan_p50 <= r.makespan_p95);
    }

    #[test]
    fn fault_free_rollback_matches_closed_form(
        tau in 10u32..2000,
        delta in 1u32..9,
        work in 100u32..20_000,
    ) {
        let (tau, delta, w) = (tau as f64, delta as f64, work as f64);
        let sys = SystemModel { fault_rate_per_node: 0.0, ..SystemModel::reference() };
        let inst = PatternInstance::new("rollback").with("interval", tau).with("checkpoint_cost", delta);
        let cfg = SimConfig::new(sys, Workload::new(w), SolutionCandidate::bare("dynamic-state", vec![inst]));
        let r = run_simulation(&cfg).unwrap();
        let want = w + ((w / tau).ceil() - 1.0) * delta;
        prop_assert!((r.makespan_mean - want).abs() * NS < 1.0, "{} vs {}", r.makespan_mean, want);
    }

    #[test]
    fn same_seed_same_report(insts in instance_mix(), seed in any::<u64>()) {
        let cfg = SimConfig::new(SystemModel::fail_stop(700.0), Workload::new(1000.0), SolutionCandidate::bare("dynamic-state", insts))
            .with_seed(seed)
            .with_trials(6);
        prop_assert_eq!(run_simulation(&cfg).unwrap(), run_simulation(&cfg).unwrap());
    }
}

fn fault_models() -> impl Strategy<Value = Vec<FaultModelClass>> {
    proptest::sample::subsequence(FaultModelClass::ALL.to_vec(), 1..=3)
}

fn capabilities() -> impl Strategy<Value = Vec<Capability>> {
    proptest::sample::subsequence(Capability::ALL.to_vec(), 1..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn candidates_are_valid_and_minimal(fm in fault_models(), caps in capabilities()) {
        let catalog = builtin_catalog();
        let g = build_language_graph(&catalog, &EdgeOverlay::empty()).unwrap();
        let q = DesignQuery::new(fm.clone(), caps.clone());
        let cands = match synthesize_all(&g, &catalog, &q) {
            Ok(c) => c,
            Err(SynthesisError::Unsatisfiable(_)) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        for c in &cands {
            prop_assert!(!c.instances.is_empty() && c.instances.len() <= q.max_instances);
            for f in &fm {
                prop_assert!(c.covered_fault_models.contains(f));
            }
            for cap in &caps {
                prop_assert!(c.covered_capabilities.contains(cap));
            }
            if caps.contains(&Capability::Containment) {
                prop_assert_ne!(c.state_binding.as_str(), "stateless");
            }
            let ids: Vec<String> = c.instance_set().into_iter().collect();
            for (i, a) in ids.iter().enumerate() {
                prop_assert!(!g.has_edge(a, &c.state_binding, RelationKind::Conflict));
                for b in &ids[i + 1..] {
                    prop_assert!(!g.has_edge(a, b, RelationKind::Conflict));
                }
            }
            prop_assert_eq!(c.sequence.first(), Some(&c.state_binding));
        }
        prop_assert!(cands.windows(2).all(|w| w[0].score <= w[1].score));
    }

    #[test]
    fn excluding_a_member_removes_it(fm in fault_models(), caps in capabilities(), pick in 0usize..11) {
        let catalog = builtin_catalog();
        let g = build_language_graph(&catalog, &EdgeOverlay::empty()).unwrap();
        let victim = catalog.of_class(PatternClass::Structural).nth(pick).unwrap().id.clone();
        let mut q = DesignQuery::new(fm, caps).with_mode(EntryMode::CapabilityFirst);
        q.exclude.insert(victim.clone());
        if let Ok(cands) = synthesize_all(&g, &catalog, &q) {
            prop_assert!(cands.iter().all(|c| !c.instance_set().contains(&victim)));
        }
    }

    #[test]
    fn overlays_keep_exports_deterministic(a in 0usize..11, b in 0usize..11) {
        prop_assume!(a != b);
        let catalog = builtin_catalog();
        let ids: Vec<String> = catalog.of_class(PatternClass::Structural).map(|p| p.id.clone()).collect();
        let overlay = EdgeOverlay::empty().with(&ids[a], &ids[b], RelationKind::UsedWith);
        let once = build_language_graph(&catalog, &overlay);
        let twice = build_language_graph(&catalog, &overlay);
        match (once, twice) {
            (Ok(x), Ok(y)) => {
                prop_assert_eq!(export_dot(&x), export_dot(&y));
                prop_assert_eq!(x.to_json(), y.to_json());
                prop_assert!(x.has_edge(&ids[a], &ids[b], RelationKind::UsedWith));
            }
            (Err(x), Err(y)) => prop_assert_eq!(x.to_string(), y.to_string()),
            _ => prop_assert!(false, "graph construction is not deterministic"),
        }
    }
}
