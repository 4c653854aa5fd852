//! Bundled scenario traces, compiled into the library so tools and tests
//! need no fixture files at run time.

use crate::error::ParseError;
use crate::trace::{parse_trace, Trace};

#[derive(Debug, Clone, Copy)]
pub struct Scenario {
    pub name: &'static str,
    pub text: &'static str,
    pub readme: &'static str,
}

impl Scenario {
    pub fn trace(&self) -> Result<Trace, ParseError> {
        parse_trace(self.text)
    }
}

macro_rules! scenario {
    ($name:literal) => {
        Scenario {
            name: $name,
            text: include_str!(concat!("../scenarios/", $name, ".trace")),
            readme: include_str!(concat!("../scenarios/", $name, ".md")),
        }
    };
}

pub const SCENARIOS: [Scenario; 6] = [
    scenario!("usb-rootkit"),
    scenario!("local-ptrace"),
    scenario!("network-rootkit"),
    scenario!("benign-webserver"),
    scenario!("admin-remote-upgrade"),
    scenario!("self-revocation"),
];

pub fn scenario(name: &str) -> Option<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.name == name)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    SCENARIOS.iter().map(|s| s.name)
}
