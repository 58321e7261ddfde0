//! Scenario files compiled into the binary, addressable by name.

pub const NAMES: [&str; 5] = ["table1", "fig2_ideal", "fig3_single_slit", "fig4_two_slit", "protocol_default"];

const TEXTS: [&str; 5] = [
    include_str!("../../scenarios/table1.scenario"),
    include_str!("../../scenarios/fig2_ideal.scenario"),
    include_str!("../../scenarios/fig3_single_slit.scenario"),
    include_str!("../../scenarios/fig4_two_slit.scenario"),
    include_str!("../../scenarios/protocol_default.scenario"),
];

/// Text of a bundled scenario; the `.scenario` suffix is optional.
pub(crate) fn get(name: &str) -> Option<&'static str> {
    let stem = name.strip_suffix(".scenario").unwrap_or(name);
    NAMES.iter().position(|n| *n == stem).map(|i| TEXTS[i])
}

/// Public accessor used by the CLI to list or export bundled files.
pub fn bundled_text(name: &str) -> Option<&'static str> {
    get(name)
}
