use proptest::prelude::*;
use qvul_core::oracle::run_with_noise;
use qvul_core::*;

fn gate(n: usize) -> impl Strategy<Value = Gate> {
    let q = 0..n;
    let pair = (0..n, 0..n - 1).prop_map(|(a, b)| (a, if b >= a { b + 1 } else { b }));
    prop_oneof![
        q.clone().prop_map(Gate::Id),
        q.clone().prop_map(Gate::X),
        q.clone().prop_map(Gate::Sx),
        (q.clone(), -6.3f64..6.3).prop_map(|(q, a)| Gate::Rz(q, a)),
        q.clone().prop_map(Gate::H),
        q.clone().prop_map(Gate::Z),
        pair.clone().prop_map(|(a, b)| Gate::Cx(a, b)),
        pair.clone().prop_map(|(a, b)| Gate::Cx(a, b)),
        pair.prop_map(|(a, b)| Gate::Swap(a, b)),
        proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=n).prop_map(Gate::Barrier),
    ]
}

/// A random circuit on `n` qubits that measures a random non-empty subset
/// at the end (and sometimes one qubit early).
fn circuit(max_qubits: usize, max_ops: usize) -> impl Strategy<Value = LogicalCircuit> {
    (2..=max_qubits)
        .prop_flat_map(move |n| {
            (
                Just(n),
                proptest::collection::vec(gate(n), 0..max_ops),
                proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=n),
                proptest::option::of(0..n),
            )
        })
        .prop_map(|(n, mut ops, measured, early)| {
            if let Some(q) = early {
                let at = ops.len() / 2;
                ops.insert(at, Gate::Measure { qubit: q, clbit: q });
            }
            ops.extend(measured.iter().map(|&q| Gate::Measure { qubit: q, clbit: q }));
            LogicalCircuit::new(n, n, ops).unwrap()
        })
}

fn on_line(c: &LogicalCircuit) -> CompiledCircuit {
    transpile(c, &DeviceTopology::line(c.num_qubits()), &CompileConfig::default()).unwrap()
}

fn calibration(device: &DeviceTopology, e: (f64, f64, f64, f64)) -> CalibrationSnapshot {
    CalibrationSnapshot::uniform_with_idle(device, e.0, e.1, e.2, e.3).unwrap()
}

fn errors() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.0..0.01, 0.0..0.02, 0.0..0.05, 0.0..0.05)
}

fn slot_width(g: &Gate) -> usize {
    match g {
        Gate::Barrier(_) => 0,
        Gate::Swap(..) => 6,
        other => other.qubits().len(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qasm_round_trip(c in circuit(5, 30)) {
        prop_assert_eq!(parse_qasm(&serialize_qasm(&c)).unwrap(), c.clone());
        let compiled = on_line(&c);
        let back = parse_compiled(&serialize_compiled(&compiled), compiled.device()).unwrap();
        prop_assert_eq!(back, compiled);
    }

    #[test]
    fn classes_partition_virtual_qubits(c in circuit(5, 30)) {
        let compiled = on_line(&c);
        let classes = classify_virtual_qubits(&compiled);
        let total: usize = [
            QubitClass::OutputtingLogical,
            QubitClass::AssistingLogical,
            QubitClass::UsedAncilla,
            QubitClass::UnusedAncilla,
        ]
        .iter()
        .map(|&k| classes.count(k))
        .sum();
        prop_assert_eq!(total, classes.len());
        prop_assert_eq!(classes.len(), compiled.num_physical());
    }

    #[test]
    fn schedule_conserves_slots(c in circuit(5, 30)) {
        let compiled = CompiledCircuit::from_logical(&c);
        let s = schedule(&compiled);
        prop_assert_eq!(s.total_slots(), s.depth() * s.num_physical());
        let busy = (0..s.depth())
            .flat_map(|t| s.cycle_slots(t).iter())
            .filter(|slot| !matches!(slot, Slot::Idle))
            .count();
        prop_assert_eq!(busy, c.ops().iter().map(slot_width).sum::<usize>());
    }

    #[test]
    fn cqv_is_monotone_and_traces_decay(c in circuit(4, 25), e in errors(), w in 0.0f64..1.0) {
        let compiled = on_line(&c);
        let snap = calibration(compiled.device(), e);
        let a = analyze(&compiled, None).unwrap();
        let plan = CqvPlan::new(&a.ace, &a.table, &snap).unwrap();
        let lo = plan.evaluate(w).unwrap();
        let hi = plan.evaluate((w + 0.25).min(1.0)).unwrap();
        prop_assert!(hi <= lo);
        prop_assert!((0.0..=1.0).contains(&lo));
        let out = plan.evaluate_with_traces(w).unwrap();
        for trace in out.traces.unwrap() {
            prop_assert!(trace.values.iter().all(|&v| v > 0.0 && v <= 1.0), "{:?}", trace.values);
            prop_assert!(trace.values.windows(2).all(|p| p[1] <= p[0]), "{:?}", trace.values);
        }
    }

    #[test]
    fn analysis_is_deterministic(c in circuit(5, 30)) {
        let compiled = on_line(&c);
        let a = analyze(&compiled, None).unwrap();
        let b = analyze(&compiled, None).unwrap();
        prop_assert_eq!(&a.ace, &b.ace);
        let mut x = Vec::new();
        let mut y = Vec::new();
        a.table.write_csv(&mut x, Some(&a.ace)).unwrap();
        b.table.write_csv(&mut y, Some(&b.ace)).unwrap();
        prop_assert_eq!(x, y);
    }

    /// Without CNOTs every gate acts on its own output qubit, so the two
    /// estimators charge exactly the same slots.
    #[test]
    fn cnot_free_cqv_equals_esp(n in 1usize..5, raw in proptest::collection::vec((0usize..4, 0usize..5), 0..20), e in errors(), w in 0.0f64..1.0) {
        let mut ops: Vec<Gate> = raw
            .into_iter()
            .map(|(q, k)| {
                let q = q % n;
                match k {
                    0 => Gate::X(q),
                    1 => Gate::Sx(q),
                    2 => Gate::Rz(q, 0.3),
                    3 => Gate::H(q),
                    _ => Gate::Z(q),
                }
            })
            .collect();
        ops.extend((0..n).map(|q| Gate::Measure { qubit: q, clbit: q }));
        let compiled = CompiledCircuit::from_logical(&LogicalCircuit::new(n, n, ops).unwrap());
        let snap = calibration(compiled.device(), (e.0, 0.0, e.2, e.3));
        let a = analyze(&compiled, None).unwrap();
        let one_minus_cqv = CqvPlan::new(&a.ace, &a.table, &snap).unwrap().evaluate(w).unwrap();
        let esp = esp(&compiled, &snap).unwrap();
        prop_assert!((one_minus_cqv - esp).abs() < 1e-12, "{} vs {}", one_minus_cqv, esp);
    }

    #[test]
    fn seeded_oracle_is_repeatable(c in circuit(4, 15), e in errors(), seed in any::<u64>()) {
        let compiled = on_line(&c);
        let snap = calibration(compiled.device(), e);
        let s = schedule(&compiled);
        let noise = NoiseSpec::from_snapshot(&s, &snap).unwrap();
        let expected = "0".repeat(compiled.num_output_bits());
        let a = run_with_noise(&s, &noise, 300, seed, &expected).unwrap();
        let b = run_with_noise(&s, &noise, 300, seed, &expected).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn weight_fit_is_idempotent(raw in proptest::collection::vec((1usize..300, 0.0f64..=1.0), 1..40)) {
        let exps: Vec<Experiment> = raw
            .iter()
            .enumerate()
            .map(|(i, &(depth, best_weight))| Experiment { id: format!("e{i}"), depth, best_weight })
            .collect();
        let m = WeightModel::fit("dev", &exps).unwrap();
        prop_assert_eq!(WeightModel::fit("dev", &m.experiments).unwrap(), m.clone());
        prop_assert_eq!(WeightModel::from_json(&m.to_json()).unwrap(), m.clone());
        for &(depth, _) in &raw {
            let w = m.choose(depth);
            prop_assert!((0.001 - 1e-15..=1.0).contains(&w));
        }
        let lo = raw.iter().map(|r| r.1.max(0.001)).fold(f64::INFINITY, f64::min);
        let hi = raw.iter().map(|r| r.1.max(0.001)).fold(0.0, f64::max);
        for b in &m.bins {
            prop_assert!(b.weight >= lo - 1e-12 && b.weight <= hi + 1e-12);
        }
    }
}
