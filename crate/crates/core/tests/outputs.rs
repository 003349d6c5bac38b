// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};

use gendergap::civil::YearRange;
use gendergap::refdata::{RefData, Region};
use gendergap::report::{run_pipeline, PipelineConfig};
use gendergap::synth::{generate, CorpusSpec};

fn refdata_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../refdata")
}

fn run(input: &Path, out: &Path) -> gendergap::report::PipelineSummary {
    run_pipeline(&PipelineConfig {
        input: input.to_owned(),
        refdata: refdata_dir(),
        out_dir: out.to_owned(),
        ..PipelineConfig::default()
    })
    .unwrap()
}

fn attr<T: std::str::FromStr>(node: roxmltree::Node, name: &str) -> T {
    node.attribute(name)
        .unwrap_or_else(|| panic!("missing {name}"))
        .parse()
        .unwrap_or_else(|_| panic!("bad {name}"))
}

#[test]
fn charts_are_well_formed_and_ordered() {
    let refs = RefData::load(&refdata_dir()).unwrap();
    let spec = CorpusSpec {
        commits: 6_000,
        years: YearRange::new(2012, 2020).unwrap(),
        dip_regions: vec![Region::Africa],
        ..CorpusSpec::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("corpus.ndjson");
    generate(&spec, &refs)
        .unwrap()
        .write_ndjson(fs::File::create(&input).unwrap())
        .unwrap();
    run(&input, &dir.path().join("out"));

    for name in ["offset_commits", "offset_authors", "region_commits", "region_authors"] {
        let text = fs::read_to_string(dir.path().join(format!("out/charts/{name}.svg"))).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        let panels: Vec<_> = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("panel"))
            .collect();
        assert!(!panels.is_empty(), "{name}");
        let volumes: Vec<u64> = panels.iter().map(|p| attr(*p, "data-volume")).collect();
        assert!(volumes.windows(2).all(|w| w[0] >= w[1]), "{name}: {volumes:?}");
        let mut share_total = 0.0;
        for panel in &panels {
            let ymax: f64 = attr(*panel, "data-ymax");
            let bars: Vec<_> = panel
                .descendants()
                .filter(|n| n.attribute("class") == Some("bar"))
                .collect();
            assert!(!bars.is_empty());
            for bar in &bars {
                let ratio: f64 = attr(*bar, "data-ratio");
                assert!((0.0..=1.0).contains(&ratio));
                assert!(ratio <= ymax + 1e-9, "{name}: ratio {ratio} above panel max {ymax}");
            }
            let share = panel
                .descendants()
                .find(|n| n.attribute("class") == Some("share"))
                .expect("share inset");
            share_total += attr::<f64>(share, "data-share");
            if bars.len() >= 3 {
                assert!(panel.descendants().any(|n| n.attribute("class") == Some("loess")));
            }
        }
        assert!(share_total <= 1.0 + 1e-6, "{name}: shares sum to {share_total}");
    }
}

#[test]
fn empty_corpus_yields_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.ndjson");
    fs::write(&input, "").unwrap();
    let summary = run(&input, &dir.path().join("out"));
    assert_eq!(summary.stats.records_read, 0);
    let cells = fs::read_to_string(dir.path().join("out/cells.csv")).unwrap();
    assert_eq!(cells.lines().count(), 1);
    let growth = fs::read_to_string(dir.path().join("out/growth.csv")).unwrap();
    assert!(growth.lines().skip(1).all(|l| l.contains("NA")), "{growth}");
    assert!(summary.coverage.conservation.balanced);
    let charts = dir.path().join("out/charts");
    assert!(!charts.exists() || fs::read_dir(charts).unwrap().next().is_none());
}

#[test]
fn coverage_and_config_are_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("one.ndjson");
    fs::write(
        &input,
        r#"{"id":"0123456789abcdef0123456789abcdef01234567","author_name":"Maria Rossi","author_email":"maria@example.it","author_date_unix":1500000000,"author_tz_offset_min":120}"#,
    )
    .unwrap();
    run(&input, &dir.path().join("out"));
    for file in ["coverage.json", "config.json"] {
        let text = fs::read_to_string(dir.path().join("out").join(file)).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(value.is_object(), "{file}");
    }
    let config: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/config.json")).unwrap()).unwrap();
    assert_eq!(config["threshold"], 5);
    assert_eq!(config["years"], "1970:2020");
    assert_eq!(config["strategy"], "mixed");
}
