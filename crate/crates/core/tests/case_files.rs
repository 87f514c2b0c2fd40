//! The files under `cases/` must match what the case builders produce.
//! Set `QUALNET_BLESS=1` to rewrite them.

use std::fs;
use std::path::PathBuf;

use qualnet::engine::{compile, BayesianNetwork};
use qualnet::ingestion::cases::case_files;
use qualnet::model::parse_model;
use qualnet::netgen::GoalDocument;
use qualnet::scenarios::Scenario;

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../cases")
}

#[test]
fn bundled_case_files_are_current() {
    let bless = std::env::var_os("QUALNET_BLESS").is_some();
    if bless {
        fs::create_dir_all(dir()).unwrap();
    }
    let mut stale = Vec::new();
    for (name, contents) in case_files() {
        let path = dir().join(&name);
        if bless {
            fs::write(&path, &contents).unwrap();
        } else if fs::read_to_string(&path).ok().as_deref() != Some(contents.as_str()) {
            stale.push(name);
        }
    }
    assert!(stale.is_empty(), "stale case files {stale:?}; rerun with QUALNET_BLESS=1");
}

#[test]
fn case_files_parse() {
    for (name, contents) in case_files() {
        match name.rsplit('.').next().unwrap() {
            "model" => drop(parse_model(&contents).unwrap()),
            "goal" => drop(GoalDocument::parse(&contents).unwrap()),
            "net" => drop(compile(&BayesianNetwork::parse(&contents).unwrap()).unwrap()),
            "scen" => drop(Scenario::parse(&contents).unwrap()),
            other => panic!("unexpected extension {other}"),
        }
    }
}
