//! Scenario fixtures shipped with the crate.

use super::{parse_scenario, Scenario, SimError};

#[derive(Debug, Clone, Copy)]
pub struct Fixture {
    /// File stem, e.g. `cv-1`.
    pub id: &'static str,
    pub text: &'static str,
}

impl Fixture {
    pub fn file_name(&self) -> String {
        format!("{}.toml", self.id)
    }

    pub fn scenario(&self) -> Result<Scenario, SimError> {
        parse_scenario(self.text)
    }
}

const FIXTURES: &[Fixture] = &[
    Fixture {
        id: "cv-1",
        text: include_str!("../../fixtures/cv-1.toml"),
    },
    Fixture {
        id: "sens-v",
        text: include_str!("../../fixtures/sens-v.toml"),
    },
    Fixture {
        id: "bms-i",
        text: include_str!("../../fixtures/bms-i.toml"),
    },
    Fixture {
        id: "gd-1",
        text: include_str!("../../fixtures/gd-1.toml"),
    },
    Fixture {
        id: "gd-1-intertwined",
        text: include_str!("../../fixtures/gd-1-intertwined.toml"),
    },
];

pub fn fixtures() -> &'static [Fixture] {
    FIXTURES
}

/// Looks a fixture up by id (`cv-1`) or scenario name (`CV-1`).
pub fn fixture(name: &str) -> Option<&'static Fixture> {
    FIXTURES.iter().find(|f| f.id.eq_ignore_ascii_case(name))
}
