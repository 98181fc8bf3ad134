// SPDX-License-Identifier: Apache-2.0

//! The broker matches opaque tags. These checks keep it that way: it may
//! not link against anything that knows about labels, keys or pairings.

use std::fs;
use std::path::Path;

const ALLOWED: &[&str] = &["pepsi-wire", "thiserror"];

fn manifest() -> toml::Table {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("Cargo.toml");
    fs::read_to_string(path).unwrap().parse().unwrap()
}

#[test]
fn runtime_dependencies_are_wire_only() {
    let m = manifest();
    let deps = m["dependencies"].as_table().unwrap();
    let mut names: Vec<&str> = deps.keys().map(String::as_str).collect();
    names.sort_unstable();
    assert_eq!(names, ALLOWED);
    for section in ["build-dependencies", "target"] {
        assert!(!m.contains_key(section), "unexpected [{section}]");
    }
}

#[test]
fn sources_do_not_mention_secret_material() {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("src");
    let banned = ["pepsi_core", "ark_", "Label", "NodeKey", "QuerierKey", "GtElement", "decrypt"];
    for entry in fs::read_dir(src).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        for word in banned {
            assert!(!text.contains(word), "{} mentions {word}", path.display());
        }
    }
}
