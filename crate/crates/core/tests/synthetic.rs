// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::PathBuf;

use gendergap::civil::YearRange;
use gendergap::refdata::{RefData, Region};
use gendergap::report::{run_pipeline, PipelineConfig};
use gendergap::synth::{generate, CorpusSpec};

fn refdata_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../refdata")
}

#[test]
fn pipeline_reproduces_ledger() {
    let refs = RefData::load(&refdata_dir()).unwrap();
    let spec = CorpusSpec {
        commits: 12_000,
        years: YearRange::new(2010, 2020).unwrap(),
        seed: 7,
        dip_regions: vec![Region::Europe, Region::China],
        ..CorpusSpec::default()
    };
    let corpus = generate(&spec, &refs).unwrap();
    let dir = tempfile::tempdir().unwrap();
    corpus.write_all(&dir.path().join("gen")).unwrap();

    let config = PipelineConfig {
        input: dir.path().join("gen/corpus.ndjson"),
        refdata: refdata_dir(),
        out_dir: dir.path().join("out"),
        ..PipelineConfig::default()
    };
    let summary = run_pipeline(&config).unwrap();
    assert_eq!(summary.stats, corpus.ledger.ingest);
    let expected = fs::read_to_string(dir.path().join("gen/ledger_cells.csv")).unwrap();
    let actual = fs::read_to_string(dir.path().join("out/cells.csv")).unwrap();
    assert!(expected == actual, "cells differ from ledger");
    assert_eq!(
        summary.coverage.conservation.unresolved_region,
        corpus.ledger.unresolved.values().sum::<u64>()
    );
}

#[test]
fn generation_is_deterministic() {
    let refs = RefData::load(&refdata_dir()).unwrap();
    let spec = CorpusSpec {
        commits: 3_000,
        years: YearRange::new(2015, 2020).unwrap(),
        dip_regions: vec![],
        ..CorpusSpec::default()
    };
    let render = || {
        let corpus = generate(&spec, &refs).unwrap();
        let mut out = Vec::new();
        corpus.write_ndjson(&mut out).unwrap();
        out
    };
    assert_eq!(render(), render());
}
