// SPDX-License-Identifier: Apache-2.0

//! Regenerates `tz_rules.tsv` from a compiled zoneinfo tree.
//!
//! ```text
//! cargo run -p gendergap-core --example extract_tz -- refdata /usr/share/zoneinfo
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use gendergap::civil::YearRange;
use gendergap::refdata::{load_places, TzRuleSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args_os().skip(1);
    let refdata = PathBuf::from(args.next().unwrap_or_else(|| "refdata".into()));
    let zoneinfo = PathBuf::from(args.next().unwrap_or_else(|| "/usr/share/zoneinfo".into()));

    let places = load_places(&refdata.join("places.tsv"))?;
    let rules = TzRuleSet::from_zoneinfo(&zoneinfo, &places, YearRange::STUDY)?;
    let out_path = refdata.join("tz_rules.tsv");
    let mut out = BufWriter::new(File::create(&out_path)?);
    writeln!(
        out,
        "# Offsets extracted from {} for {}.",
        zoneinfo.display(),
        YearRange::STUDY
    )?;
    writeln!(
        out,
        "# Regenerate with: cargo run -p gendergap-core --example extract_tz -- <refdata> <zoneinfo>"
    )?;
    rules.write_tsv(&mut out)?;
    out.flush()?;
    eprintln!("wrote {} places to {}", places.len(), out_path.display());
    Ok(())
}
