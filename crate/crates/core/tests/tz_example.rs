// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::path::PathBuf;

use gendergap::geo::compatible_places;
use gendergap::refdata::RefData;

fn at(refs: &RefData, ts: i64) -> BTreeSet<String> {
    compatible_places(ts, 240, &refs.tz)
        .into_iter()
        .map(|p| refs.places.get(p).id.clone())
        .collect()
}

#[test]
fn plus_240_sets_follow_dst_and_reforms() {
    let refs = RefData::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../refdata")).unwrap();
    let winter_2012 = at(&refs, 1_325_404_800);
    let expected: BTreeSet<String> = [
        "Europe/Moscow",
        "Asia/Baku",
        "Asia/Dubai",
        "Europe/Samara",
        "Asia/Muscat",
        "Asia/Tbilisi",
        "Asia/Yerevan",
        "Indian/Mauritius",
    ]
    .map(String::from)
    .into();
    assert_eq!(winter_2012, expected);

    let mut summer_2012 = expected.clone();
    summer_2012.remove("Asia/Baku");
    assert_eq!(at(&refs, 1_343_808_000), summer_2012);

    let summer_2016 = at(&refs, 1_470_038_400);
    assert!(!summer_2016.contains("Europe/Moscow"));
    let mut without_moscow = expected;
    without_moscow.remove("Europe/Moscow");
    assert_eq!(summer_2016, without_moscow);
}

#[test]
fn samara_2016() {
    let refs = RefData::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../refdata")).unwrap();
    let samara = refs.places.idx("Europe/Samara").unwrap();
    assert_eq!(refs.tz.offset_at(samara, 1_470_038_400), 240);
}
