use ener::corpus::{LabelSchema, Origin};
use ener::metrics::{
    auc, auc_pairwise, auc_ranked, decode_entities, detection_sets, dump_cases, ece, encode_entities, reliability_csv,
    span_f1, CaseKind, PredictionRecord, Span, TieRule,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rec(id: usize, gold: usize, predicted: usize, confidence: f64, uncertainty: f64, origin: Origin) -> PredictionRecord {
    PredictionRecord {
        sentence_id: id,
        token_index: 0,
        gold,
        predicted,
        confidence,
        uncertainty,
        origin,
    }
}

fn tags(schema: &LabelSchema, names: &[&str]) -> Vec<usize> {
    names.iter().map(|n| schema.tag_id(n).unwrap()).collect()
}

#[test]
fn two_bin_ece_is_a_tenth() {
    let mut records = Vec::new();
    for i in 0..60 {
        let wrong = usize::from(i >= 48);
        records.push(rec(i, 1, 1 + wrong, 0.9, 0.1, Origin::Id));
    }
    for i in 0..40 {
        let wrong = usize::from(i >= 28);
        records.push(rec(60 + i, 1, 1 + wrong, 0.6, 0.1, Origin::Id));
    }
    let (value, table) = ece(&records, 10).unwrap();
    assert!((value - 0.10).abs() <= 1e-15, "{value}");
    assert_eq!(table.len(), 10);
    assert_eq!(table.iter().map(|b| b.count).sum::<usize>(), 100);
    assert!(ece(&[], 10).is_err());
}

#[test]
fn ece_degenerate_cases() {
    assert_eq!(ece(&[rec(0, 1, 1, 1.0, 0.0, Origin::Id)], 10).unwrap().0, 0.0);
    let (_, table) = ece(&[rec(0, 1, 1, 1.0, 0.0, Origin::Id)], 10).unwrap();
    assert_eq!(table[9].count, 1);
    let half: Vec<_> = (0..10).map(|i| rec(i, 1, 1 + i % 2, 0.5, 0.5, Origin::Id)).collect();
    assert!(ece(&half, 10).unwrap().0.abs() < 1e-15);
}

#[test]
fn reliability_csv_layout() {
    let records: Vec<_> = (0..4).map(|i| rec(i, 1, 1, 0.25 * i as f64 + 0.1, 0.5, Origin::Id)).collect();
    let (_, table) = ece(&records, 10).unwrap();
    let csv = reliability_csv(&table);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "bin,lo,hi,count,avg_conf,accuracy");
    assert_eq!(lines.len(), 11);
    assert_eq!(lines[1], "0,0.000000,0.100000,0,0.000000,0.000000");
    assert_eq!(lines[2], "1,0.100000,0.200000,1,0.100000,1.000000");
}

#[test]
fn auc_examples() {
    assert_eq!(auc(&[0.1, 0.4], &[0.3, 0.9], TieRule::Literal).unwrap(), 0.75);
    assert_eq!(auc(&[0.1, 0.2], &[0.3, 0.9], TieRule::Literal).unwrap(), 1.0);
    assert_eq!(auc(&[0.5, 0.5], &[0.5], TieRule::Literal).unwrap(), 0.0);
    assert_eq!(auc(&[0.5, 0.5], &[0.5], TieRule::Standard).unwrap(), 0.5);
    assert!(auc(&[], &[0.5], TieRule::Literal).is_err());
    assert!(auc(&[0.5], &[], TieRule::Literal).is_err());
}

#[test]
fn ranked_auc_equals_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..1000 {
        let n0 = rng.gen_range(1..=200);
        let n1 = rng.gen_range(1..=200);
        // Coarse grids in some cases force many ties.
        let levels = if case % 3 == 0 { 7.0 } else { 1e6 };
        let mut draw = |_| (rng.gen::<f64>() * levels).floor() / levels;
        let neg: Vec<f64> = (0..n0).map(&mut draw).collect();
        let pos: Vec<f64> = (0..n1).map(&mut draw).collect();
        for rule in [TieRule::Literal, TieRule::Standard] {
            let brute = auc_pairwise(&neg, &pos, rule).unwrap();
            let fast = auc_ranked(&neg, &pos, rule).unwrap();
            assert_eq!(brute.to_bits(), fast.to_bits(), "case {case} {rule:?}");
            assert!((0.0..=1.0).contains(&fast));
        }
    }
}

#[test]
fn detection_set_examples() {
    let records = vec![
        rec(0, 1, 1, 0.9, 0.1, Origin::Id),
        rec(1, 1, 3, 0.6, 0.9, Origin::OovTypo),
    ];
    let sets = detection_sets(&records);
    assert_eq!(sets.unc_auc(TieRule::Literal).unwrap(), 1.0);

    let over = vec![rec(0, 1, 1, 0.9, 0.1, Origin::Id), rec(1, 1, 3, 0.95, 0.1, Origin::Id)];
    assert_eq!(detection_sets(&over).con_auc(TieRule::Literal).unwrap(), 0.0);

    let clean = vec![rec(0, 1, 1, 0.9, 0.1, Origin::Id), rec(1, 0, 0, 0.9, 0.1, Origin::Id)];
    let err = detection_sets(&clean).unc_auc(TieRule::Literal).unwrap_err().to_string();
    assert!(err.contains("Unc positives"), "{err}");

    // O/O tokens take part in neither setting.
    let sets = detection_sets(&[rec(0, 0, 0, 0.9, 0.1, Origin::Id), rec(1, 0, 0, 0.2, 0.9, Origin::Ood)]);
    assert!(sets.con_positive.is_empty() && sets.unc_negative.is_empty());
}

#[test]
fn span_examples() {
    let schema = LabelSchema::default();
    let per = schema.type_id("PER").unwrap();
    let loc = schema.type_id("LOC").unwrap();
    let span = |start, end, entity_type| Span {
        start,
        end,
        entity_type,
    };
    assert_eq!(decode_entities(&schema, &tags(&schema, &["B-PER", "I-PER", "O"])), vec![span(0, 1, per)]);
    assert_eq!(decode_entities(&schema, &tags(&schema, &["O", "I-LOC", "I-LOC"])), vec![span(1, 2, loc)]);
    assert_eq!(
        decode_entities(&schema, &tags(&schema, &["B-PER", "B-PER"])),
        vec![span(0, 0, per), span(1, 1, per)]
    );

    let gold = vec![tags(&schema, &["B-PER", "I-PER", "O", "O", "O"])];
    let pred = vec![tags(&schema, &["B-PER", "I-PER", "O", "B-ORG", "I-ORG"])];
    let s = span_f1(&schema, &gold, &pred).unwrap();
    assert_eq!((s.precision, s.recall), (0.5, 1.0));
    assert!((s.f1 - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(span_f1(&schema, &gold, &gold).unwrap().f1, 1.0);
    let none = vec![vec![0; 5]];
    let s = span_f1(&schema, &gold, &none).unwrap();
    assert_eq!((s.precision, s.f1), (0.0, 0.0));
    assert!(span_f1(&schema, &gold, &[]).is_err());
    assert!(span_f1(&schema, &gold, &[vec![0; 4]]).is_err());
}

#[test]
fn case_dump_formatting() {
    let schema = LabelSchema::default();
    let records = vec![
        rec(0, 1, 1, 0.5, 0.708, Origin::Id),
        rec(1, 1, 3, 0.99, 0.2, Origin::Id),
        rec(2, 0, 0, 0.9, 0.708, Origin::Id),
    ];
    let tokens = vec![vec!["Smith".to_string()], vec!["Acme".to_string()], vec!["said".to_string()]];
    assert!(dump_cases(&records, &tokens, &schema, 0).is_empty());
    let table = dump_cases(&records, &tokens, &schema, 2);
    let kinds: Vec<CaseKind> = table.rows.iter().map(|r| r.kind).collect();
    assert_eq!(kinds.iter().filter(|k| **k == CaseKind::HighUncertainty).count(), 2);
    assert_eq!(table.rows[0].token, "Smith");
    assert_eq!(table.rows[1].token, "said");
    assert!(table.to_text().contains("70.8"));
    assert!(table.to_csv().lines().nth(1).unwrap().contains("70.8"));
    let errors: Vec<_> = table.rows.iter().filter(|r| r.kind == CaseKind::ConfidentError).collect();
    assert_eq!(errors.len(), 1);
    assert_eq!(errors[0].predicted, "B-LOC");
}

fn span_strategy() -> impl Strategy<Value = (usize, Vec<Span>)> {
    (1usize..30).prop_flat_map(|len| {
        prop::collection::vec((0usize..len, 1usize..4, 0usize..4), 0..6).prop_map(move |raw| {
            let mut spans: Vec<Span> = Vec::new();
            let mut sorted = raw;
            sorted.sort();
            let mut next_free = 0;
            for (start, width, ty) in sorted {
                if start < next_free {
                    continue;
                }
                let end = (start + width - 1).min(len - 1);
                spans.push(Span {
                    start,
                    end,
                    entity_type: ty,
                });
                next_free = end + 1;
            }
            (len, spans)
        })
    })
}

proptest! {
    #[test]
    fn decode_inverts_encode((len, spans) in span_strategy()) {
        let schema = LabelSchema::default();
        let tags = encode_entities(&schema, &spans, len);
        prop_assert_eq!(decode_entities(&schema, &tags), spans);
    }

    #[test]
    fn metric_ranges(
        conf in prop::collection::vec(0.05f64..=1.0, 1..200),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let records: Vec<_> = conf
            .iter()
            .enumerate()
            .map(|(i, c)| rec(i, rng.gen_range(0..9), rng.gen_range(0..9), *c, rng.gen(), Origin::Id))
            .collect();
        let (e, table) = ece(&records, 10).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        prop_assert_eq!(table.iter().map(|b| b.count).sum::<usize>(), records.len());
    }

    #[test]
    fn raising_confidence_never_shrinks_top_bin_gap(n in 10usize..100, wrong in 0usize..10, bump in 0.0f64..0.05) {
        // A fixed-accuracy population sitting in the top bin.
        let records: Vec<_> = (0..n).map(|i| rec(i, 1, if i < wrong { 2 } else { 1 }, 0.9, 0.1, Origin::Id)).collect();
        let acc = (n - wrong.min(n)) as f64 / n as f64;
        prop_assume!(acc <= 0.9);
        let raised: Vec<_> = records.iter().map(|r| PredictionRecord { confidence: r.confidence + bump, ..r.clone() }).collect();
        prop_assert!(ece(&raised, 10).unwrap().0 >= ece(&records, 10).unwrap().0);
    }
}
