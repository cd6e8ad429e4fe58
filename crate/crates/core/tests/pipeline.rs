use hyperstab::feedback::DeviceSpec;
use hyperstab::{
    batch_run, energy_trace, load_corpus, run_closed_loop, seed_corpus, Hold, RationalFunction,
    Scenario, Trace, Verdict,
};

fn sspr_scenario(x0: f64) -> Scenario {
    Scenario {
        name: Some(format!("sspr_{x0}")),
        plant: RationalFunction::new(&[2.0, 1.0], &[1.0, 1.0]).unwrap(),
        device: DeviceSpec::StaticSector {
            k1: 1.0,
            k2: 1.0,
            slope: None,
        },
        x0: vec![x0],
        excitation: None,
        dt: 1e-3,
        horizon: 10.0,
        hold: Hold::Foh,
    }
}

#[test]
fn trace_file_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_closed_loop(&sspr_scenario(2.0)).unwrap();
    let path = dir.path().join("traces.csv");
    let trace = run.trace().unwrap();
    trace.write_path(&path).unwrap();
    let back = Trace::read_path(&path).unwrap();
    assert_eq!(back, trace);
    assert_eq!(back.column("y").unwrap(), run.y.values());
}

#[test]
fn energy_recomputed_from_csv_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_closed_loop(&sspr_scenario(1.5)).unwrap();
    let path = dir.path().join("traces.csv");
    run.trace().unwrap().write_path(&path).unwrap();
    let back = Trace::read_path(&path).unwrap();
    let u = back.signal("u").unwrap().unwrap();
    let y_zs = back.signal("y_zs").unwrap().unwrap();
    let e = energy_trace(&u, &y_zs).unwrap();
    assert_eq!(e.values(), back.column("E_zs").unwrap());
}

#[test]
fn batch_matches_sequential_runs_in_order() {
    let scenarios: Vec<Scenario> = [0.5, 1.0, 2.0, -1.0]
        .iter()
        .map(|&x| sspr_scenario(x))
        .collect();
    let batch = batch_run(&scenarios);
    assert_eq!(batch.len(), scenarios.len());
    for (sc, got) in scenarios.iter().zip(&batch) {
        let got = got.as_ref().unwrap();
        let alone = run_closed_loop(sc).unwrap();
        assert_eq!(got.scenario.name, sc.name);
        assert_eq!(got.y.values(), alone.y.values());
        assert_eq!(got.verdict, Verdict::AsymptoticallyHyperstableEvidence);
    }
}

#[test]
fn report_json_is_deterministic() {
    let a = serde_json::to_string(&run_closed_loop(&sspr_scenario(2.0)).unwrap().report()).unwrap();
    let b = serde_json::to_string(&run_closed_loop(&sspr_scenario(2.0)).unwrap().report()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn corpus_file_on_disk_matches_seed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.json");
    std::fs::write(&path, hyperstab::corpus::SEED_CORPUS).unwrap();
    assert_eq!(load_corpus(&path).unwrap(), seed_corpus());
    assert!(load_corpus(&dir.path().join("absent.json")).is_err());
}

#[test]
fn scaled_initial_state_scales_the_trajectory() {
    let one = run_closed_loop(&sspr_scenario(1.0)).unwrap();
    let three = run_closed_loop(&sspr_scenario(3.0)).unwrap();
    let worst = one
        .y
        .values()
        .iter()
        .zip(three.y.values())
        .map(|(a, b)| (3.0 * a - b).abs())
        .fold(0.0, f64::max);
    // Each step solves the loop only to LOOP_RESIDUAL_TOL (1 + |y|).
    let tol = 10.0 * hyperstab::harness::LOOP_RESIDUAL_TOL * (1.0 + three.y.max_abs());
    assert!(worst < tol, "{worst}");
}
