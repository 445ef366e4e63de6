use advscc::continuous::SccConfig;
use advscc::continuous::train_scc;
use advscc::game::{solve_dual, solve_hard_ldrs, solve_soft};
use advscc::io::{
    from_json, parse_points_csv, parse_points_jsonl, points_to_csv, to_json, ModelFile,
    RejectionFile, ResultFile, SpecFile,
};
use advscc::{DivergenceKind, Error, RejectionFunction};
use proptest::prelude::*;

fn tied_spec(lambda: f64) -> SpecFile {
    let mut p = vec![0.05; 16];
    p.push(0.2);
    SpecFile::new(p, 0.2, lambda, DivergenceKind::Kl2)
}

#[test]
fn spec_files_parse_to_games() {
    let text = r#"{"version": 1, "p": [0.1, 0.0, 0.9], "delta": 0.1, "lambda": 1.0, "divergence": "sqeuclid", "delta_q": 0.5}"#;
    let spec: SpecFile = from_json(text).unwrap();
    assert_eq!(spec.game_spec().unwrap().p().len(), 2);
    assert_eq!(spec.dual_spec().unwrap().delta_q, 0.5);
    let no_delta: SpecFile = from_json(r#"{"version": 1, "p": [1.0], "lambda": 1.0, "divergence": "kl2"}"#).unwrap();
    assert!(no_delta.game_spec().is_err());
    assert!(no_delta.dual_spec().is_err());
    assert!(matches!(
        from_json::<SpecFile>(r#"{"version": 1, "p": [1.0], "lambda": 1.0, "divergence": "kl"}"#),
        Err(Error::Parse(_))
    ));
    assert!(matches!(
        from_json::<SpecFile>(r#"{"version": 1, "p": [1.0], "lambda": 1.0, "divergence": "kl2", "extra": 3}"#),
        Err(Error::Parse(_))
    ));
}

#[test]
fn unknown_versions_are_rejected() {
    for v in ["0", "2", "\"1\"", "1.5"] {
        let text = format!(r#"{{"version": {v}, "r": [0.5]}}"#);
        assert!(from_json::<RejectionFile>(&text).is_err(), "{v}");
    }
    assert_eq!(
        from_json::<RejectionFile>(r#"{"version": 7, "r": [0.5]}"#),
        Err(Error::UnsupportedVersion { found: 7, expected: 1 })
    );
}

#[test]
fn result_files_round_trip() {
    for lambda in [3.0, 3.2, 60.0] {
        let spec = tied_spec(lambda);
        let game = spec.game_spec().unwrap();
        let mut soft = ResultFile::from_soft(&solve_soft(&game).unwrap());
        soft.seed = Some(42);
        soft.timing_ms = Some(0.125);
        let hard = ResultFile::from_hard(&solve_hard_ldrs(&game).unwrap());
        for r in [soft, hard] {
            let text = to_json(&r);
            assert_eq!(from_json::<ResultFile>(&text).unwrap(), r);
            assert_eq!(to_json(&from_json::<ResultFile>(&text).unwrap()), text);
        }
    }
    let mut spec = tied_spec(3.0);
    spec.delta_q = Some(0.8);
    let dual = ResultFile::from_dual(&solve_dual(&spec.dual_spec().unwrap()).unwrap());
    assert_eq!(from_json::<ResultFile>(&to_json(&dual)).unwrap(), dual);
}

#[test]
fn tied_fixture_result() {
    let r = ResultFile::from_soft(&solve_soft(&tied_spec(3.0).game_spec().unwrap()).unwrap());
    assert!((r.z.unwrap() - 0.2).abs() < 1e-6);
    assert_eq!(r.vulnerable, Some(true));
    let text = to_json(&r);
    assert!(text.contains("\"status\": \"solved\"") || text.contains("\"status\": \"constraint_vacuous\""));
}

#[test]
fn model_files_round_trip() {
    let pts: Vec<Vec<f64>> = (0..200).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
    let model = train_scc(&pts, 0.1, &SccConfig::default(), 5).unwrap();
    let file = ModelFile::new(model);
    let back: ModelFile = from_json(&to_json(&file)).unwrap();
    assert_eq!(back, file);
}

#[test]
fn rejection_files() {
    let r = RejectionFunction::soft(vec![0.25, 1.0, 0.0]).unwrap();
    let f = RejectionFile::new(&r);
    let back: RejectionFile = from_json(&to_json(&f)).unwrap();
    assert_eq!(back.rejection().unwrap(), r);
    let bad: RejectionFile = from_json(r#"{"version": 1, "r": [1.5]}"#).unwrap();
    assert!(bad.rejection().is_err());
}

proptest! {
    #[test]
    fn floats_survive_json(values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 1..20)) {
        let f = RejectionFile { version: 1, r: values.clone() };
        let back: RejectionFile = from_json(&to_json(&f)).unwrap();
        prop_assert_eq!(back.r.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), values.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn points_survive_csv(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 1..30)) {
        prop_assert_eq!(parse_points_csv(&points_to_csv(&rows)).unwrap(), rows.clone());
        let jsonl: String = rows.iter().map(|r| format!("[{},{},{}]\n", r[0], r[1], r[2])).collect();
        prop_assert_eq!(parse_points_jsonl(&jsonl).unwrap(), rows);
    }
}
