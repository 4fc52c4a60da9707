//! The flood response network: four GIS-informed roots, one deterministic
//! accessibility node, and the risk target.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ConditionalTable, DiscreteNetwork, Evidence, NetworkError, NetworkSpec, NodeSpec, STOCHASTIC_TOL};
use crate::evidence::EvidenceBundle;

pub const REMOTE: &str = "remote_accessibility";
pub const IMMEDIATE: &str = "immediate_accessibility";
pub const UNEXPOSED: &str = "unexposed_accessibility";
pub const DENSITY: &str = "exposed_building_density";
pub const FACILITY: &str = "exposed_care_facilities";
pub const RISK: &str = "people_in_need_risk";

pub const BOOL_STATES: [&str; 2] = ["True", "False"];
pub const UNEXPOSED_STATES: [&str; 3] = ["False", "Limited", "True"];
pub const LEVEL_STATES: [&str; 4] = ["None", "Low", "Medium", "High"];
pub const FACILITY_STATES: [&str; 2] = ["Present", "Not present"];

/// Parent order of the risk table. Rows run accessibility-major, facility fastest.
pub const RISK_PARENTS: [&str; 3] = [UNEXPOSED, DENSITY, FACILITY];
pub const RISK_ROWS: usize = 3 * 4 * 2;

/// Tolerance of the dominance and override checks.
pub const VALIDATION_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RiskNetworkError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid table configuration: {0}")]
    Config(String),
    #[error("risk table violates {} rule(s): {}", .0.violations.len(), .0)]
    Validation(ValidationReport),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Parameters of the default risk table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub base_low: [f64; 4],
    pub base_medium: [f64; 4],
    pub base_high: [f64; 4],
    /// Share of each state's mass moved one step toward High per accessibility step.
    pub shift_fraction: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            base_low: [0.20, 0.55, 0.20, 0.05],
            base_medium: [0.05, 0.30, 0.45, 0.20],
            base_high: [0.00, 0.10, 0.40, 0.50],
            shift_fraction: 0.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplicitRow {
    pub accessibility: String,
    pub density: String,
    pub facility: String,
    pub probabilities: [f64; 4],
}

/// Risk table configuration, stored as TOML with a `mode` key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CptConfig {
    Generator(GeneratorParams),
    Explicit { rows: Vec<ExplicitRow> },
}

impl Default for CptConfig {
    fn default() -> Self {
        CptConfig::Generator(GeneratorParams::default())
    }
}

impl CptConfig {
    pub fn from_toml_str(s: &str) -> Result<CptConfig, RiskNetworkError> {
        toml::from_str(s).map_err(|e| RiskNetworkError::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("table configuration serialises")
    }

    pub fn load(path: &Path) -> Result<CptConfig, RiskNetworkError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| RiskNetworkError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_toml_string())
    }

    /// Explicit form listing every row of `table`.
    pub fn explicit_from_table(table: &ConditionalTable) -> CptConfig {
        let rows = table
            .rows
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let (a, d, f) = (i / 8, (i / 2) % 4, i % 2);
                ExplicitRow {
                    accessibility: UNEXPOSED_STATES[a].to_owned(),
                    density: LEVEL_STATES[d].to_owned(),
                    facility: FACILITY_STATES[f].to_owned(),
                    probabilities: [p[0], p[1], p[2], p[3]],
                }
            })
            .collect();
        CptConfig::Explicit { rows }
    }

    /// The 24-row risk table this configuration describes (unvalidated).
    pub fn risk_table(&self) -> Result<ConditionalTable, RiskNetworkError> {
        match self {
            CptConfig::Generator(p) => generate_risk_table(p),
            CptConfig::Explicit { rows } => explicit_table(rows),
        }
    }
}

fn position(states: &[&str], label: &str, what: &str) -> Result<usize, RiskNetworkError> {
    states
        .iter()
        .position(|s| *s == label)
        .ok_or_else(|| RiskNetworkError::Config(format!("unknown {what} state `{label}`")))
}

fn explicit_table(rows: &[ExplicitRow]) -> Result<ConditionalTable, RiskNetworkError> {
    let mut table: Vec<Option<Vec<f64>>> = vec![None; RISK_ROWS];
    for r in rows {
        let a = position(&UNEXPOSED_STATES, &r.accessibility, "accessibility")?;
        let d = position(&LEVEL_STATES, &r.density, "density")?;
        let f = position(&FACILITY_STATES, &r.facility, "facility")?;
        let slot = &mut table[a * 8 + d * 2 + f];
        if slot.is_some() {
            return Err(RiskNetworkError::Config(format!(
                "row ({}, {}, {}) listed twice",
                r.accessibility, r.density, r.facility
            )));
        }
        *slot = Some(r.probabilities.to_vec());
    }
    let rows = table
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.ok_or_else(|| {
                RiskNetworkError::Config(format!(
                    "missing row ({}, {}, {})",
                    UNEXPOSED_STATES[i / 8],
                    LEVEL_STATES[(i / 2) % 4],
                    FACILITY_STATES[i % 2]
                ))
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(ConditionalTable::new(RISK, rows))
}

/// Moves `fraction` of each state's mass one step toward High.
pub fn shift_toward_high(p: [f64; 4], fraction: f64) -> [f64; 4] {
    let keep = 1.0 - fraction;
    [keep * p[0], keep * p[1] + fraction * p[0], keep * p[2] + fraction * p[1], p[3] + fraction * p[2]]
}

pub fn generate_risk_table(p: &GeneratorParams) -> Result<ConditionalTable, RiskNetworkError> {
    if !(0.0..=1.0).contains(&p.shift_fraction) {
        return Err(RiskNetworkError::Config(format!("shift_fraction {} outside [0, 1]", p.shift_fraction)));
    }
    for (name, base) in [("base_low", &p.base_low), ("base_medium", &p.base_medium), ("base_high", &p.base_high)] {
        let sum: f64 = base.iter().sum();
        if base.iter().any(|v| !v.is_finite() || *v < 0.0) || (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(RiskNetworkError::Config(format!("{name} is not a probability vector")));
        }
    }
    let mut rows = Vec::with_capacity(RISK_ROWS);
    for accessibility in 0..3 {
        // states are [False, Limited, True]: False takes two shifts, True none
        let shifts = 2 - accessibility;
        for density in 0..4 {
            for facility in 0..2 {
                let row = if facility == 0 {
                    [0.0, 0.0, 0.0, 1.0]
                } else if density == 0 {
                    [1.0, 0.0, 0.0, 0.0]
                } else {
                    let mut v = [p.base_low, p.base_medium, p.base_high][density - 1];
                    for _ in 0..shifts {
                        v = shift_toward_high(v, p.shift_fraction);
                    }
                    v
                };
                rows.push(row.to_vec());
            }
        }
    }
    Ok(ConditionalTable::new(RISK, rows))
}

/// Deterministic accessibility table over parents (immediate, remote).
pub fn unexposed_table() -> ConditionalTable {
    let mut rows = Vec::with_capacity(4);
    for immediate in BOOL_STATES {
        for remote in BOOL_STATES {
            let state = match (immediate == "True", remote == "True") {
                (true, true) => "True",
                (false, false) => "False",
                _ => "Limited",
            };
            rows.push(UNEXPOSED_STATES.iter().map(|s| if *s == state { 1.0 } else { 0.0 }).collect());
        }
    }
    ConditionalTable::new(UNEXPOSED, rows)
}

fn uniform(n: usize) -> Vec<Vec<f64>> {
    vec![vec![1.0 / n as f64; n]]
}

/// Network description with the given risk table and uniform root priors.
pub fn risk_network_spec(risk_table: ConditionalTable) -> NetworkSpec {
    NetworkSpec {
        nodes: vec![
            NodeSpec::new(REMOTE, &BOOL_STATES, &[]),
            NodeSpec::new(IMMEDIATE, &BOOL_STATES, &[]),
            NodeSpec::new(UNEXPOSED, &UNEXPOSED_STATES, &[IMMEDIATE, REMOTE]),
            NodeSpec::new(DENSITY, &LEVEL_STATES, &[]),
            NodeSpec::new(FACILITY, &FACILITY_STATES, &[]),
            NodeSpec::new(RISK, &LEVEL_STATES, &RISK_PARENTS),
        ],
        tables: vec![
            ConditionalTable::new(REMOTE, uniform(2)),
            ConditionalTable::new(IMMEDIATE, uniform(2)),
            unexposed_table(),
            ConditionalTable::new(DENSITY, uniform(4)),
            ConditionalTable::new(FACILITY, uniform(2)),
            risk_table,
        ],
        target: RISK.to_owned(),
    }
}

/// Builds the risk network, rejecting tables that break the ordering rules.
pub fn build_risk_network(cfg: &CptConfig) -> Result<DiscreteNetwork, RiskNetworkError> {
    let table = cfg.risk_table()?;
    let report = validate_cpt(&table, &CptOrdering::risk());
    if !report.is_valid() {
        return Err(RiskNetworkError::Validation(report));
    }
    Ok(DiscreteNetwork::build(&risk_network_spec(table))?)
}

/// One parent of a validated table. `severity` lists state indices from
/// least to most severe; empty means the parent is not ordered.
#[derive(Clone, Debug, PartialEq)]
pub struct ParentOrdering {
    pub name: String,
    pub states: Vec<String>,
    pub severity: Vec<usize>,
}

/// Layout and severity orderings of a table. Target states are listed from
/// least to most severe.
#[derive(Clone, Debug, PartialEq)]
pub struct CptOrdering {
    pub parents: Vec<ParentOrdering>,
    pub target_states: Vec<String>,
}

fn strings(s: &[&str]) -> Vec<String> {
    s.iter().map(|x| x.to_string()).collect()
}

impl CptOrdering {
    pub fn risk() -> Self {
        CptOrdering {
            parents: vec![
                ParentOrdering { name: UNEXPOSED.into(), states: strings(&UNEXPOSED_STATES), severity: vec![2, 1, 0] },
                ParentOrdering { name: DENSITY.into(), states: strings(&LEVEL_STATES), severity: vec![0, 1, 2, 3] },
                ParentOrdering { name: FACILITY.into(), states: strings(&FACILITY_STATES), severity: vec![] },
            ],
            target_states: strings(&LEVEL_STATES),
        }
    }

    fn cards(&self) -> Vec<usize> {
        self.parents.iter().map(|p| p.states.len()).collect()
    }

    fn decode(&self, mut row: usize) -> Vec<usize> {
        let cards = self.cards();
        let mut out = vec![0; cards.len()];
        for k in (0..cards.len()).rev() {
            out[k] = row % cards[k];
            row /= cards[k];
        }
        out
    }

    fn encode(&self, states: &[usize]) -> usize {
        self.cards().iter().zip(states).fold(0, |acc, (c, s)| acc * c + s)
    }

    pub fn describe(&self, row: usize) -> String {
        self.decode(row)
            .iter()
            .zip(&self.parents)
            .map(|(s, p)| format!("{}={}", p.name, p.states[*s]))
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn parent_state(&self, name: &str, state: &str) -> Option<(usize, usize)> {
        let k = self.parents.iter().position(|p| p.name == name)?;
        let s = self.parents[k].states.iter().position(|x| x == state)?;
        Some((k, s))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationClass {
    Shape,
    NonStochastic,
    /// A care facility is exposed but High is not certain.
    FacilityOverride,
    /// No exposed buildings and no facility, but None is not certain.
    NoExposureOverride,
    /// A more severe state of this parent does not stochastically dominate a milder one.
    Dominance {
        parent: String,
    },
}

impl fmt::Display for ViolationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationClass::Shape => f.write_str("shape"),
            ViolationClass::NonStochastic => f.write_str("non-stochastic"),
            ViolationClass::FacilityOverride => f.write_str("facility override"),
            ViolationClass::NoExposureOverride => f.write_str("no-exposure override"),
            ViolationClass::Dominance { parent } => write!(f, "dominance in {parent}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub class: ViolationClass,
    pub cell: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, class: &ViolationClass) -> bool {
        self.violations.iter().any(|v| &v.class == class)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{} at [{}]: {}", v.class, v.cell, v.detail)?;
        }
        Ok(())
    }
}

/// Upper tail sums: `t[k] = P(state >= k)`.
fn tails(p: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; p.len()];
    let mut acc = 0.0;
    for k in (0..p.len()).rev() {
        acc += p[k];
        t[k] = acc;
    }
    t
}

/// True if `hi` first-order stochastically dominates `lo`.
pub fn dominates(hi: &[f64], lo: &[f64]) -> bool {
    tails(hi).iter().zip(tails(lo)).all(|(h, l)| *h >= l - VALIDATION_TOL)
}

fn is_point_mass(row: &[f64], state: usize) -> bool {
    row.iter().enumerate().all(|(k, v)| (v - if k == state { 1.0 } else { 0.0 }).abs() <= VALIDATION_TOL)
}

/// Checks a table against its ordering. Besides shape, stochasticity and
/// stochastic dominance along every ordered parent, the risk overrides
/// apply whenever the ordering names the facility and density parents.
pub fn validate_cpt(table: &ConditionalTable, ordering: &CptOrdering) -> ValidationReport {
    let mut violations = Vec::new();
    let expected: usize = ordering.cards().iter().product();
    let width = ordering.target_states.len();
    if table.rows.len() != expected || table.rows.iter().any(|r| r.len() != width) {
        violations.push(Violation {
            class: ViolationClass::Shape,
            cell: table.child.clone(),
            detail: format!("expected {expected} rows of {width} entries"),
        });
        return ValidationReport { violations };
    }

    for (i, row) in table.rows.iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) || (sum - 1.0).abs() > STOCHASTIC_TOL {
            violations.push(Violation {
                class: ViolationClass::NonStochastic,
                cell: ordering.describe(i),
                detail: format!("{row:?} sums to {sum}"),
            });
        }
    }

    let present = ordering.parent_state(FACILITY, "Present");
    let absent = ordering.parent_state(FACILITY, "Not present");
    let no_density = ordering.parent_state(DENSITY, "None");
    let high = ordering.target_states.iter().position(|s| s == "High");
    let none = ordering.target_states.iter().position(|s| s == "None");
    for (i, row) in table.rows.iter().enumerate() {
        let states = ordering.decode(i);
        if let (Some((fk, fs)), Some(h)) = (present, high) {
            if states[fk] == fs && !is_point_mass(row, h) {
                violations.push(Violation {
                    class: ViolationClass::FacilityOverride,
                    cell: ordering.describe(i),
                    detail: format!("{row:?} is not certain High"),
                });
            }
        }
        if let (Some((fk, fs)), Some((dk, ds)), Some(n)) = (absent, no_density, none) {
            if states[fk] == fs && states[dk] == ds && !is_point_mass(row, n) {
                violations.push(Violation {
                    class: ViolationClass::NoExposureOverride,
                    cell: ordering.describe(i),
                    detail: format!("{row:?} is not certain None"),
                });
            }
        }
    }

    for (k, parent) in ordering.parents.iter().enumerate() {
        for pair in parent.severity.windows(2) {
            for i in 0..table.rows.len() {
                let mut states = ordering.decode(i);
                if states[k] != pair[0] {
                    continue;
                }
                states[k] = pair[1];
                let j = ordering.encode(&states);
                if !dominates(&table.rows[j], &table.rows[i]) {
                    violations.push(Violation {
                        class: ViolationClass::Dominance { parent: parent.name.clone() },
                        cell: ordering.describe(j),
                        detail: format!("does not dominate [{}]", ordering.describe(i)),
                    });
                }
            }
        }
    }
    ValidationReport { violations }
}

/// Target posterior in (None, Low, Medium, High) order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RiskPosterior(pub [f64; 4]);

impl RiskPosterior {
    pub fn none(&self) -> f64 {
        self.0[0]
    }
    pub fn low(&self) -> f64 {
        self.0[1]
    }
    pub fn medium(&self) -> f64 {
        self.0[2]
    }
    pub fn high(&self) -> f64 {
        self.0[3]
    }
}

/// Evidence for one tile: density, facility and remote reachability are
/// hard; the unflooded neighbourhood fraction is soft evidence on immediate
/// accessibility.
pub fn tile_evidence(b: &EvidenceBundle) -> Evidence {
    let f = b.immediate_unexposed.clamp(0.0, 1.0);
    Evidence::new()
        .hard(DENSITY, b.density.label())
        .hard(FACILITY, FACILITY_STATES[if b.facility_exposed { 0 } else { 1 }])
        .hard(REMOTE, BOOL_STATES[if b.remote_accessible { 0 } else { 1 }])
        .soft(IMMEDIATE, vec![f, 1.0 - f])
}

pub fn infer_risk(net: &DiscreteNetwork, ev: &Evidence) -> Result<RiskPosterior, NetworkError> {
    let post = net.infer(ev)?;
    let p = &post.probabilities;
    if p.len() != 4 {
        return Err(NetworkError::UnknownNode(format!("target with {} states", p.len())));
    }
    Ok(RiskPosterior([p[0], p[1], p[2], p[3]]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesnet::enumerate_joint;

    fn default_net() -> DiscreteNetwork {
        build_risk_network(&CptConfig::default()).unwrap()
    }

    #[test]
    fn nodes_and_states_as_documented() {
        let net = default_net();
        assert_eq!(net.node_count(), 6);
        assert_eq!(net.states(UNEXPOSED).unwrap(), &strings(&UNEXPOSED_STATES)[..]);
        assert_eq!(net.parents(RISK).unwrap(), RISK_PARENTS.to_vec());
        let risk = net.table(RISK).unwrap();
        assert_eq!(risk.rows.iter().map(Vec::len).sum::<usize>(), 96);
    }

    #[test]
    fn deterministic_accessibility_rules() {
        let net = default_net();
        for (i, r, want) in [
            ("True", "True", "True"),
            ("True", "False", "Limited"),
            ("False", "True", "Limited"),
            ("False", "False", "False"),
        ] {
            let row = net.conditional(UNEXPOSED, &[i, r]).unwrap();
            let k = UNEXPOSED_STATES.iter().position(|s| *s == want).unwrap();
            assert!(is_point_mass(&row, k), "{i},{r} -> {row:?}");
        }
    }

    #[test]
    fn shift_preserves_mass() {
        let v = shift_toward_high([0.2, 0.55, 0.2, 0.05], 0.3);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((v[0] - 0.14).abs() < 1e-15);
        assert!((v[3] - 0.11).abs() < 1e-15);
    }

    #[test]
    fn default_table_is_valid() {
        let t = CptConfig::default().risk_table().unwrap();
        let report = validate_cpt(&t, &CptOrdering::risk());
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn corrupted_tables_flagged_by_class() {
        let base = CptConfig::default().risk_table().unwrap();
        let ord = CptOrdering::risk();
        let row = |a: usize, d: usize, f: usize| a * 8 + d * 2 + f;

        let mut t = base.clone();
        t.rows[row(2, 2, 0)] = vec![0.0, 0.0, 0.5, 0.5];
        let r = validate_cpt(&t, &ord);
        assert!(r.has(&ViolationClass::FacilityOverride));

        let mut t = base.clone();
        t.rows.swap(row(1, 2, 1), row(1, 3, 1));
        let r = validate_cpt(&t, &ord);
        assert!(r.has(&ViolationClass::Dominance { parent: DENSITY.into() }), "{r}");
        assert!(!r.has(&ViolationClass::FacilityOverride));

        let mut t = base.clone();
        t.rows.swap(row(0, 1, 1), row(2, 1, 1));
        let r = validate_cpt(&t, &ord);
        assert!(r.has(&ViolationClass::Dominance { parent: UNEXPOSED.into() }), "{r}");

        let mut t = base;
        t.rows[row(2, 0, 1)] = vec![0.9, 0.1, 0.0, 0.0];
        assert!(validate_cpt(&t, &ord).has(&ViolationClass::NoExposureOverride));
        assert!(matches!(
            build_risk_network(&CptConfig::explicit_from_table(&t)),
            Err(RiskNetworkError::Validation(_))
        ));
    }

    #[test]
    fn explicit_round_trip_is_bit_exact() {
        let table = CptConfig::default().risk_table().unwrap();
        let cfg = CptConfig::explicit_from_table(&table);
        let back = CptConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
        let again = back.risk_table().unwrap();
        for (a, b) in again.rows.iter().flatten().zip(table.rows.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let gen = CptConfig::default();
        assert_eq!(CptConfig::from_toml_str(&gen.to_toml_string()).unwrap(), gen);
    }

    #[test]
    fn explicit_config_errors() {
        let table = CptConfig::default().risk_table().unwrap();
        let CptConfig::Explicit { mut rows } = CptConfig::explicit_from_table(&table) else { unreachable!() };
        rows.pop();
        assert!(CptConfig::Explicit { rows: rows.clone() }.risk_table().is_err());
        rows.push(rows[0].clone());
        assert!(CptConfig::Explicit { rows: rows.clone() }.risk_table().is_err());
        rows.pop();
        rows.push(ExplicitRow { accessibility: "Maybe".into(), ..rows[0].clone() });
        assert!(CptConfig::Explicit { rows }.risk_table().is_err());
        assert!(CptConfig::from_toml_str("mode = \"other\"").is_err());
    }

    #[test]
    fn facility_forces_high_and_no_exposure_forces_none() {
        let net = default_net();
        for d in LEVEL_STATES {
            let ev = Evidence::new().hard(FACILITY, "Present").hard(DENSITY, d).soft(IMMEDIATE, vec![0.3, 0.7]);
            assert_eq!(infer_risk(&net, &ev).unwrap().high(), 1.0);
        }
        let ev = Evidence::new().hard(DENSITY, "None").hard(FACILITY, "Not present");
        assert_eq!(infer_risk(&net, &ev).unwrap().none(), 1.0);
    }

    #[test]
    fn soft_immediate_mixture() {
        let net = default_net();
        let with = |imm: Evidence| imm.hard(REMOTE, "True").hard(DENSITY, "Medium").hard(FACILITY, "Not present");
        let soft = infer_risk(&net, &with(Evidence::new().soft(IMMEDIATE, vec![0.7, 0.3]))).unwrap();
        let t = infer_risk(&net, &with(Evidence::new().hard(IMMEDIATE, "True"))).unwrap();
        let f = infer_risk(&net, &with(Evidence::new().hard(IMMEDIATE, "False"))).unwrap();
        for k in 0..4 {
            assert!((soft.0[k] - (0.7 * t.0[k] + 0.3 * f.0[k])).abs() < 1e-12);
        }

        let mut spec = risk_network_spec(CptConfig::default().risk_table().unwrap());
        spec.target = UNEXPOSED.into();
        let net = DiscreteNetwork::build(&spec).unwrap();
        let ev = Evidence::new().soft(IMMEDIATE, vec![0.7, 0.3]).hard(REMOTE, "True");
        let post = net.infer(&ev).unwrap();
        assert!((post.probability("True").unwrap() - 0.7).abs() < 1e-12);
        assert!((post.probability("Limited").unwrap() - 0.3).abs() < 1e-12);
        let (oracle, joint) = enumerate_joint(&net, &ev).unwrap();
        assert!((joint.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (a, b) in oracle.probabilities.iter().zip(&post.probabilities) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
