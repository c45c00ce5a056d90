use std::io::Write;

use infoflow::corpus::domain_share_timeseries;
use infoflow::corpus::{load_corpus, LoadOptions, PlatformRegistry};
use infoflow::synth::{synth_corpus, SynthConfig};
use infoflow::vectors::{read_block, validate_file, write_block, ReadOptions};

fn small() -> infoflow::synth::SynthCorpus {
    synth_corpus(&SynthConfig { topics: 30, ..Default::default() }).unwrap()
}

#[test]
fn unit_count_matches_ingest_report() {
    let corpus = small();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let mut f = std::fs::File::create(&path).unwrap();
    for r in &corpus.records {
        writeln!(f, "{}", serde_json::to_string(r).unwrap()).unwrap();
    }
    drop(f);
    let (store, report) = load_corpus(&path, PlatformRegistry::new(), &LoadOptions::default()).unwrap();
    let admitted: usize = report.per_platform.values().map(|p| p.admitted_messages + p.paragraphs).sum();
    assert_eq!(store.len(), admitted);
    assert_eq!(report.units, admitted);
    assert!(report.dropped_short > 0);
    let mut ids: Vec<u64> = store.units().iter().map(|u| u.unit_id).collect();
    ids.sort_unstable();
    assert_eq!(ids, corpus.embeddings.ids());
}

#[test]
fn embeddings_roundtrip_through_file() {
    let corpus = small();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("units.emb");
    write_block(&path, &corpus.embeddings).unwrap();
    let (dim, count, findings) = validate_file(&path).unwrap();
    assert_eq!((dim, count), (corpus.embeddings.dim(), corpus.embeddings.len()));
    assert!(findings.is_empty());
    let back = read_block(&path, ReadOptions::default()).unwrap();
    assert_eq!(back.ids(), corpus.embeddings.ids());
    assert_eq!(back.data(), corpus.embeddings.data());
}

#[test]
fn domain_shares_are_fractions() {
    let corpus = small();
    let mut b = infoflow::corpus::CorpusBuilder::new(PlatformRegistry::new(), LoadOptions::default());
    for (i, r) in corpus.records.iter().enumerate() {
        b.add_record(i + 1, r.clone()).unwrap();
    }
    let (store, _) = b.finish();
    let all: Vec<_> = store.registry().platforms().iter().map(|p| p.id).collect();
    for top_n in [1, 3, 50] {
        for day in domain_share_timeseries(&store, &all, top_n).unwrap() {
            let s: f64 = day.shares.iter().map(|x| x.1).sum();
            assert!(day.shares.iter().all(|x| (0.0..=1.0).contains(&x.1)));
            assert!(s <= 1.0 + 1e-12);
            if top_n == 50 && day.external_links > 0 {
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }
}
