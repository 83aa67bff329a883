//! The bundled regression scenarios.

use crate::workspace::Scenario;

/// Three agents among five regions in a 10 m sphere.
pub const SIMULATION: &str = include_str!("../../../fixtures/simulation.json");
/// Two planar agents, four regions, an obstacle region in the middle.
pub const EXPERIMENT_1: &str = include_str!("../../../fixtures/experiment1.json");
/// Two planar agents ferrying resources to a base.
pub const EXPERIMENT_2: &str = include_str!("../../../fixtures/experiment2.json");

/// Bundled scenarios by name.
pub const ALL: [(&str, &str); 3] =
    [("simulation", SIMULATION), ("experiment1", EXPERIMENT_1), ("experiment2", EXPERIMENT_2)];

pub fn load(name: &str) -> Option<Scenario> {
    let text = ALL.iter().find(|(n, _)| *n == name)?.1;
    Some(Scenario::from_json(text).expect("bundled fixtures parse"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_load_and_validate() {
        for (name, _) in ALL {
            let s = load(name).unwrap();
            s.validate(false).unwrap();
            for a in &s.agents {
                a.parse_formula().unwrap();
            }
        }
        assert!(load("nope").is_none());
    }
}
