//! Configs shipped with the tool.

pub struct ShippedConfig {
    pub name: &'static str,
    pub command: &'static str,
    pub summary: &'static str,
    pub toml: &'static str,
}

pub const SHIPPED: &[ShippedConfig] = &[
    ShippedConfig {
        name: "axes_crossover",
        command: "sweep",
        summary: "S_cross/S_self vs l/d for x, y, z motion over a 20d square, y dipoles",
        toml: include_str!("../configs/axes_crossover.toml"),
    },
    ShippedConfig {
        name: "orientation_table",
        command: "sweep",
        summary: "segmented trap, y and z motion for x, y, z dipoles (orientation truth table)",
        toml: include_str!("../configs/orientation_table.toml"),
    },
    ShippedConfig {
        name: "scaling_orientations",
        command: "scaling",
        summary: "one-ion noise vs d for three dipole orientations",
        toml: include_str!("../configs/scaling_orientations.toml"),
    },
    ShippedConfig {
        name: "scaling_correlated",
        command: "scaling",
        summary: "one-ion noise vs d with exponentially correlated dipoles",
        toml: include_str!("../configs/scaling_correlated.toml"),
    },
    ShippedConfig {
        name: "segmented_correlated",
        command: "sweep",
        summary: "segmented trap x-motion crossover with correlated dipoles",
        toml: include_str!("../configs/segmented_correlated.toml"),
    },
    ShippedConfig {
        name: "chain_modes",
        command: "chain",
        summary: "per-mode noise of a 10-ion chain vs spacing",
        toml: include_str!("../configs/chain_modes.toml"),
    },
    ShippedConfig {
        name: "square_electrode",
        command: "sweep",
        summary: "square electrode, ratio vs l at d = 1.2 L",
        toml: include_str!("../configs/square_electrode.toml"),
    },
    ShippedConfig {
        name: "stylus_trap",
        command: "sweep",
        summary: "stylus trap, ratio vs l at d = 1.5 R",
        toml: include_str!("../configs/stylus_trap.toml"),
    },
    ShippedConfig {
        name: "oracle",
        command: "oracle-check",
        summary: "Monte-Carlo check of the noise sums on a 30 x 30 grid",
        toml: include_str!("../configs/oracle.toml"),
    },
];

pub fn find(name: &str) -> Option<&'static ShippedConfig> {
    SHIPPED.iter().find(|c| c.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RunConfig;

    #[test]
    fn every_shipped_config_resolves() {
        for c in SHIPPED {
            RunConfig::from_toml(c.toml)
                .and_then(RunConfig::resolve)
                .unwrap_or_else(|e| panic!("{}: {e}", c.name));
        }
    }
}
