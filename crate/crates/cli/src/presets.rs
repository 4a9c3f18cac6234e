//! Configs bundled into the binary; `run <name>` resolves them when no file
//! of that name exists.

pub const PRESETS: &[(&str, &str)] = &[
    ("gender-toy", include_str!("../presets/gender-toy.json")),
    ("ethnic-toy", include_str!("../presets/ethnic-toy.json")),
    ("occupation-ceo", include_str!("../presets/occupation-ceo.json")),
    ("occupation-politician", include_str!("../presets/occupation-politician.json")),
    ("occupation-professor", include_str!("../presets/occupation-professor.json")),
    ("occupation-cashier", include_str!("../presets/occupation-cashier.json")),
    ("occupation-housekeeper", include_str!("../presets/occupation-housekeeper.json")),
    ("occupation-teacher", include_str!("../presets/occupation-teacher.json")),
    ("ida-sim", include_str!("../presets/ida-sim.json")),
    ("rs-sim", include_str!("../presets/rs-sim.json")),
    ("remote-example", include_str!("../presets/remote-example.json")),
];

/// Preset text by name, with or without a `.json` suffix.
pub fn find(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".json").unwrap_or(name);
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}
