use nalgebra::DVector;
use proptest::prelude::*;
use secure_logreg::data::{generate_synthetic, partition_horizontal, SyntheticSpec};
use secure_logreg::protocol::{privacy_audit, run_protocol, MessageType, ProtocolConfig, SharePolicy, Transcript};
use secure_logreg::regression::{centralized_fit, FitOptions, LocalDataset, Penalty};
use secure_logreg::sharing::SharingParams;

fn options(cfg: &ProtocolConfig) -> FitOptions {
    FitOptions {
        penalty: Penalty {
            lambda: cfg.lambda,
            penalize_intercept: cfg.penalize_intercept,
        },
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    }
}

fn pooled(n: usize, d: usize, seed: u64) -> LocalDataset {
    let (parts, _) = generate_synthetic(&SyntheticSpec::even(n, d, 1, seed)).unwrap();
    parts.into_iter().next().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn federated_equals_centralized(
        n in 60usize..400,
        d in 2usize..7,
        s in 1usize..6,
        lambda in prop::sample::select(vec![0.01, 1.0, 100.0]),
        (t, w) in prop::sample::select(vec![(2usize, 3usize), (2, 5), (3, 5), (4, 4)]),
        seed in 0u64..1000,
    ) {
        let parts = partition_horizontal(&pooled(n, d, seed), s, seed).unwrap();
        let cfg = ProtocolConfig {
            lambda,
            sharing: SharingParams::new(t, w).unwrap(),
            rng_seed: seed,
            record_bodies: false,
            ..Default::default()
        };
        let fed = run_protocol(&parts, &cfg).unwrap();
        let central = centralized_fit(&parts, &options(&cfg)).unwrap();
        prop_assert!(fed.model.converged);
        let diff = (&fed.model.beta - &central.beta).amax();
        prop_assert!(diff <= 1e-6, "max diff {diff}");
    }
}

#[test]
fn repartitioning_does_not_move_beta() {
    let rows = pooled(3000, 6, 21);
    let cfg = ProtocolConfig {
        record_bodies: false,
        ..Default::default()
    };
    let betas: Vec<DVector<f64>> = [1, 2, 5, 10]
        .iter()
        .map(|&s| {
            let parts = partition_horizontal(&rows, s, 5).unwrap();
            run_protocol(&parts, &cfg).unwrap().model.beta
        })
        .collect();
    for b in &betas[1..] {
        assert!((b - &betas[0]).amax() <= 1e-8);
    }
}

#[test]
fn share_policy_does_not_change_the_estimate() {
    let parts = partition_horizontal(&pooled(800, 4, 3), 4, 3).unwrap();
    let all = run_protocol(&parts, &ProtocolConfig::default()).unwrap();
    let grad = run_protocol(
        &parts,
        &ProtocolConfig {
            share_policy: SharePolicy::GradientOnly,
            ..Default::default()
        },
    )
    .unwrap();
    assert!((&all.model.beta - &grad.model.beta).amax() <= 1e-9);
    // the plaintext Hessian costs fewer bytes than its shares
    assert!(grad.bytes_transmitted < all.bytes_transmitted);
}

#[test]
fn quorum_choice_and_seed_are_irrelevant_to_the_estimate() {
    let parts = partition_horizontal(&pooled(500, 3, 8), 3, 8).unwrap();
    let base = ProtocolConfig {
        sharing: SharingParams::new(3, 5).unwrap(),
        ..Default::default()
    };
    let a = run_protocol(&parts, &base).unwrap();
    let b = run_protocol(
        &parts,
        &ProtocolConfig {
            quorum: Some(vec![5, 2, 4]),
            rng_seed: 99,
            ..base.clone()
        },
    )
    .unwrap();
    assert_eq!(a.model.beta, b.model.beta);
    assert_eq!(b.quorum, vec![5, 2, 4]);
}

#[test]
fn runs_are_deterministic() {
    let parts = partition_horizontal(&pooled(400, 4, 2), 3, 2).unwrap();
    let cfg = ProtocolConfig::default();
    let a = run_protocol(&parts, &cfg).unwrap();
    let b = run_protocol(&parts, &cfg).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.bytes_transmitted, b.bytes_transmitted);
}

#[test]
fn transcript_survives_a_jsonl_roundtrip() {
    let parts = partition_horizontal(&pooled(300, 3, 4), 2, 4).unwrap();
    let fit = run_protocol(&parts, &ProtocolConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("transcript.jsonl");
    fit.transcript.write_jsonl(&path).unwrap();
    let back = Transcript::read_jsonl(&path).unwrap();
    assert_eq!(back.len(), fit.transcript.len());
    assert_eq!(back.total_bytes(), fit.bytes_transmitted);
    for ty in [MessageType::Submission, MessageType::Aggregate, MessageType::BetaBroadcast] {
        assert_eq!(back.bytes_by_type(ty), fit.transcript.bytes_by_type(ty));
    }
    let rep = privacy_audit(&back, &[2], 2, SharePolicy::AllSummaries, Some(&parts)).unwrap();
    assert!(rep.passed);
}

#[test]
fn minority_coalitions_see_nothing_in_plaintext() {
    let parts = partition_horizontal(&pooled(1200, 5, 6), 4, 6).unwrap();
    let cfg = ProtocolConfig {
        sharing: SharingParams::new(3, 5).unwrap(),
        ..Default::default()
    };
    let fit = run_protocol(&parts, &cfg).unwrap();
    for a in 1..=5u64 {
        for b in a + 1..=5 {
            let rep = privacy_audit(&fit.transcript, &[a, b], 3, SharePolicy::AllSummaries, Some(&parts)).unwrap();
            assert!(rep.passed, "{rep:?}");
            assert_eq!(rep.plaintext_summary_values, 0);
            assert_eq!(rep.raw_rows_found, 0);
            assert_eq!(rep.reconstructable_institution_values, 0);
        }
    }
}

#[test]
fn no_raw_covariate_appears_in_any_message() {
    let parts = partition_horizontal(&pooled(200, 3, 9), 2, 9).unwrap();
    let fit = run_protocol(&parts, &ProtocolConfig::default()).unwrap();
    let records = fit.transcript.records();
    let text: String = records
        .iter()
        .map(|r| serde_json::to_string(r.body.as_ref().unwrap()).unwrap())
        .collect();
    for ds in &parts {
        for i in 0..ds.rows() {
            for v in &ds.row(i)[1..] {
                assert!(!text.contains(&format!("{v:.16e}")));
                assert!(!text.contains(&v.to_string()));
            }
        }
    }
}

#[test]
fn mismatched_dimensions_are_rejected() {
    let parts = partition_horizontal(&pooled(100, 3, 1), 2, 1).unwrap();
    let bad = vec![parts[0].clone(), LocalDataset::with_intercept(1, &nalgebra::DMatrix::zeros(3, 1), DVector::zeros(3)).unwrap()];
    let err = run_protocol(&bad, &ProtocolConfig::default()).unwrap_err();
    assert!(matches!(err, secure_logreg::Error::DimensionMismatch { expected: 3, got: 2 }));
}
