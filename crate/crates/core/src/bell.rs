//! Correlation-type Bell expressions: construction, quantum evaluation,
//! deterministic local-hidden-variable bounds and the built-in catalog.
//!
//! An expression is a signed sum of correlation terms. Every term names,
//! for each party, either one of two setting labels (`1` or `2`) or no
//! measurement. Parties are A, B, C, D in that order.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::qstate::{local_expectation, MeasurementDirection, PartySetting, QuantumState};

pub const PARTY_NAMES: [char; 4] = ['A', 'B', 'C', 'D'];

/// Upper limit on distinct `(party, label)` observables for LHV enumeration.
pub const MAX_ENUMERATED_OBSERVABLES: usize = 16;

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 7] = ["chsh", "mabk4", "sasa", "bi1", "bi2", "bi3", "bi4"];

/// Keys accepted by [`named_settings`].
pub const SETTINGS_KEYS: [&str; 4] = ["mabk_chi", "sasa_chi", "bi1_chi", "bi1_cluster"];

/// Identifies one local observable: a party and one of its two labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Observable {
    pub party: usize,
    pub label: u8,
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", PARTY_NAMES[self.party], self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellTerm {
    #[serde(rename = "coef")]
    pub coefficient: f64,
    /// One entry per party; `None` means that party does not measure.
    pub labels: Vec<Option<u8>>,
}

impl BellTerm {
    fn observables(&self) -> impl Iterator<Item = Observable> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(party, l)| l.map(|label| Observable { party, label }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellExpression {
    name: String,
    n_parties: usize,
    terms: Vec<BellTerm>,
}

impl BellExpression {
    pub fn new(name: impl Into<String>, n_parties: usize, terms: Vec<BellTerm>) -> Result<Self> {
        if !(2..=4).contains(&n_parties) {
            return Err(validation(format!("{n_parties} parties; expected 2 to 4")));
        }
        if terms.is_empty() {
            return Err(validation("expression has no terms"));
        }
        for t in &terms {
            if t.labels.len() != n_parties {
                return Err(validation(format!(
                    "term has {} label slots for {n_parties} parties",
                    t.labels.len()
                )));
            }
            if t.labels.iter().all(Option::is_none) {
                return Err(validation("term measures no party"));
            }
            if t.labels.iter().flatten().any(|l| !matches!(l, 1 | 2)) {
                return Err(validation("setting labels must be 1 or 2"));
            }
            if !t.coefficient.is_finite() {
                return Err(validation("non-finite coefficient"));
            }
        }
        Ok(Self {
            name: name.into(),
            n_parties,
            terms,
        })
    }

    /// Parses the compact notation `A1B1C1D1 + B1C2D2 - A1B2C2D1`.
    /// A term may carry a numeric factor, as in `0.5*A1B2`.
    pub fn parse(name: impl Into<String>, n_parties: usize, text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        for token in text.split_whitespace() {
            match token {
                "+" => continue,
                "-" => {
                    sign = -sign;
                    continue;
                }
                _ => {}
            }
            let (s, body) = match token.as_bytes()[0] {
                b'+' => (1.0, &token[1..]),
                b'-' => (-1.0, &token[1..]),
                _ => (1.0, token),
            };
            let (factor, body) = match body.split_once('*') {
                Some((f, rest)) => (
                    f.parse::<f64>()
                        .map_err(|_| validation(format!("bad factor in '{token}'")))?,
                    rest,
                ),
                None => (1.0, body),
            };
            let mut labels = vec![None; n_parties];
            let chars: Vec<char> = body.chars().collect();
            if chars.is_empty() || !chars.len().is_multiple_of(2) {
                return Err(validation(format!("malformed term '{token}'")));
            }
            for pair in chars.chunks(2) {
                let party = PARTY_NAMES
                    .iter()
                    .position(|&p| p == pair[0])
                    .filter(|&p| p < n_parties)
                    .ok_or_else(|| validation(format!("unknown party in '{token}'")))?;
                let label = match pair[1] {
                    '1' => 1,
                    '2' => 2,
                    _ => return Err(validation(format!("bad label in '{token}'"))),
                };
                if labels[party].replace(label).is_some() {
                    return Err(validation(format!("party repeated in '{token}'")));
                }
            }
            terms.push(BellTerm {
                coefficient: sign * s * factor,
                labels,
            });
            sign = 1.0;
        }
        Self::new(name, n_parties, terms)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn terms(&self) -> &[BellTerm] {
        &self.terms
    }

    /// Distinct observables referenced by any term, sorted by party then label.
    pub fn observables(&self) -> Vec<Observable> {
        let mut obs: Vec<Observable> = self.terms.iter().flat_map(|t| t.observables()).collect();
        obs.sort();
        obs.dedup();
        obs
    }

    /// Expression obtained by handing party `i`'s role to party `perm[i]`.
    pub fn permute_parties(&self, perm: &[usize], name: impl Into<String>) -> Result<Self> {
        check_perm(perm, self.n_parties)?;
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut labels = vec![None; self.n_parties];
                for (i, l) in t.labels.iter().enumerate() {
                    labels[perm[i]] = *l;
                }
                BellTerm {
                    coefficient: t.coefficient,
                    labels,
                }
            })
            .collect();
        Self::new(name, self.n_parties, terms)
    }

    /// Exchanges labels 1 and 2 of `party`.
    pub fn swap_labels(&self, party: usize) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            if let Some(l) = t.labels.get_mut(party).and_then(Option::as_mut) {
                *l = 3 - *l;
            }
        }
        out
    }

    /// Replaces observable `obs` by its negation, flipping every term that uses it.
    pub fn negate_observable(&self, obs: Observable) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            if t.labels.get(obs.party).copied().flatten() == Some(obs.label) {
                t.coefficient = -t.coefficient;
            }
        }
        out
    }

    /// True when both expressions carry the same multiset of terms.
    pub fn same_terms(&self, other: &Self) -> bool {
        let key = |e: &Self| {
            let mut v: Vec<(Vec<Option<u8>>, i64)> = e
                .terms
                .iter()
                .map(|t| (t.labels.clone(), (t.coefficient * 1e9).round() as i64))
                .collect();
            v.sort();
            v
        };
        self.n_parties == other.n_parties && key(self) == key(other)
    }

    /// Value of the polynomial for a deterministic ±1 assignment.
    fn deterministic_value(&self, outcome: impl Fn(Observable) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coefficient * t.observables().map(&outcome).product::<f64>())
            .sum()
    }

    fn enumerate_assignments(&self) -> Result<Vec<f64>> {
        let obs = self.observables();
        if obs.len() > MAX_ENUMERATED_OBSERVABLES {
            return Err(validation(format!(
                "{} distinct observables exceed the enumeration limit of {MAX_ENUMERATED_OBSERVABLES}",
                obs.len()
            )));
        }
        let index: BTreeMap<Observable, usize> =
            obs.iter().enumerate().map(|(i, o)| (*o, i)).collect();
        Ok((0u32..1 << obs.len())
            .map(|mask| {
                self.deterministic_value(|o| {
                    if mask >> index[&o] & 1 == 1 {
                        -1.0
                    } else {
                        1.0
                    }
                })
            })
            .collect())
    }
}

impl fmt::Display for BellExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            let sign = if t.coefficient < 0.0 { "-" } else { "+" };
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{sign}")?;
            let mag = t.coefficient.abs();
            if mag != 1.0 {
                write!(f, "{mag}*")?;
            }
            for o in t.observables() {
                write!(f, "{o}")?;
            }
        }
        Ok(())
    }
}

fn check_perm(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n
        || perm
            .iter()
            .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
    {
        return Err(validation(format!(
            "{perm:?} is not a permutation of {n} parties"
        )));
    }
    Ok(())
}

/// The built-in expressions: CHSH, four-party MABK, SASA and the
/// single-setting-party family `bi1`…`bi4` (each a cyclic relabeling
/// `A→B→C→D→A` of the previous one).
pub fn builtin(name: &str) -> Result<BellExpression> {
    let (n, text) = match name {
        "chsh" => (2, "A1B1 + A1B2 + A2B1 - A2B2"),
        "mabk4" => (
            4,
            "A1B1C1D1 - A1B1C1D2 - A1B1C2D1 - A1B2C1D1 - A2B1C1D1 \
             - A1B1C2D2 - A1B2C1D2 - A2B1C1D2 - A1B2C2D1 - A2B1C2D1 - A2B2C1D1 \
             + A2B2C2D2 + A2B2C2D1 + A2B2C1D2 + A2B1C2D2 + A1B2C2D2",
        ),
        "sasa" => (4, "A2B1C1D1 + A1C1D2 + A1C2D1 - A2B1C2D2"),
        "bi1" => (4, "A1B1C1D1 + B1C2D2 + B2C1D2 - A1B2C2D1"),
        "bi2" => (4, "A1B1C1D1 + A2C1D2 + A2C2D1 - A1B1C2D2"),
        "bi3" => (4, "A1B1C1D1 + A2B2D1 + A1B2D2 - A2B1C1D2"),
        "bi4" => (4, "A1B1C1D1 + A1B2C2 + A2B1C2 - A2B2C1D1"),
        _ => {
            return Err(Error::Unknown {
                kind: "expression",
                name: name.to_string(),
            })
        }
    };
    BellExpression::parse(name, n, text)
}

/// Maximum over deterministic ±1 strategies. Deterministic strategies are
/// the extreme points of the local polytope, so this is the LHV bound.
pub fn classical_bound(expr: &BellExpression) -> Result<f64> {
    Ok(expr
        .enumerate_assignments()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Every value the polynomial attains over deterministic assignments,
/// ascending, with values closer than 1e-9 merged.
pub fn verify_sign_identity(expr: &BellExpression) -> Result<Vec<f64>> {
    let mut values = expr.enumerate_assignments()?;
    values.sort_by(f64::total_cmp);
    values.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(values)
}

/// `Σ|coefficient|`: each correlation is bounded by 1 in any theory.
pub fn algebraic_max(expr: &BellExpression) -> f64 {
    expr.terms.iter().map(|t| t.coefficient.abs()).sum()
}

/// Measurement directions bound to each party's setting labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SettingsMap", into = "SettingsMap")]
pub struct SettingsAssignment {
    directions: Vec<[Option<MeasurementDirection>; 2]>,
}

type SettingsMap = BTreeMap<String, BTreeMap<String, MeasurementDirection>>;

impl SettingsAssignment {
    pub fn empty(n_parties: usize) -> Self {
        Self {
            directions: vec![[None, None]; n_parties],
        }
    }

    pub fn n_parties(&self) -> usize {
        self.directions.len()
    }

    pub fn with(mut self, party: usize, label: u8, d: MeasurementDirection) -> Self {
        self.bind(Observable { party, label }, d);
        self
    }

    pub fn bind(&mut self, obs: Observable, d: MeasurementDirection) {
        assert!(matches!(obs.label, 1 | 2), "label must be 1 or 2");
        if obs.party >= self.directions.len() {
            self.directions.resize(obs.party + 1, [None, None]);
        }
        self.directions[obs.party][obs.label as usize - 1] = Some(d);
    }

    pub fn get(&self, obs: Observable) -> Option<MeasurementDirection> {
        self.directions
            .get(obs.party)
            .and_then(|p| p[obs.label as usize - 1])
    }

    /// Settings for the party-permuted expression: party `i`'s directions
    /// move to party `perm[i]`.
    pub fn permute_parties(&self, perm: &[usize]) -> Result<Self> {
        check_perm(perm, self.directions.len())?;
        let mut directions = vec![[None, None]; self.directions.len()];
        for (i, d) in self.directions.iter().enumerate() {
            directions[perm[i]] = *d;
        }
        Ok(Self { directions })
    }

    /// Checks that every label `expr` references is bound.
    pub fn check_covers(&self, expr: &BellExpression) -> Result<()> {
        if self.directions.len() != expr.n_parties() {
            return Err(validation(format!(
                "settings describe {} parties, expression has {}",
                self.directions.len(),
                expr.n_parties()
            )));
        }
        for o in expr.observables() {
            if self.get(o).is_none() {
                return Err(validation(format!("setting {o} is not bound")));
            }
        }
        Ok(())
    }
}

impl TryFrom<SettingsMap> for SettingsAssignment {
    type Error = Error;

    fn try_from(map: SettingsMap) -> Result<Self> {
        let mut out = Self::empty(0);
        let mut max_party = 0;
        for (party, labels) in map {
            let mut chars = party.chars();
            let p = match (chars.next(), chars.next()) {
                (Some(c), None) => PARTY_NAMES.iter().position(|&n| n == c),
                _ => None,
            }
            .ok_or_else(|| validation(format!("unknown party '{party}'")))?;
            max_party = max_party.max(p + 1);
            for (label, d) in labels {
                let l = match label.as_str() {
                    "1" => 1,
                    "2" => 2,
                    _ => return Err(validation(format!("unknown label '{label}'"))),
                };
                out.bind(Observable { party: p, label: l }, d);
            }
        }
        out.directions.resize(max_party, [None, None]);
        Ok(out)
    }
}

impl From<SettingsAssignment> for SettingsMap {
    fn from(s: SettingsAssignment) -> Self {
        let mut map = SettingsMap::new();
        for (p, dirs) in s.directions.iter().enumerate() {
            let entry = map.entry(PARTY_NAMES[p].to_string()).or_default();
            for (i, d) in dirs.iter().enumerate() {
                if let Some(d) = d {
                    entry.insert((i + 1).to_string(), *d);
                }
            }
        }
        map
    }
}

/// Quantum value `Σ c·⟨⊗ n̂·σ⃗⟩`; parties absent from a term contribute the identity.
pub fn evaluate(
    expr: &BellExpression,
    state: &QuantumState,
    settings: &SettingsAssignment,
) -> Result<f64> {
    if state.n_qubits() != expr.n_parties() {
        return Err(validation(format!(
            "{}-qubit state for a {}-party expression",
            state.n_qubits(),
            expr.n_parties()
        )));
    }
    settings.check_covers(expr)?;
    let mut total = 0.0;
    for t in expr.terms() {
        let slots = resolve_slots(t, settings)?;
        total += t.coefficient * local_expectation(state, &slots)?;
    }
    Ok(total)
}

/// Per-party slots of one term under `settings`.
pub fn resolve_slots(term: &BellTerm, settings: &SettingsAssignment) -> Result<Vec<PartySetting>> {
    term.labels
        .iter()
        .enumerate()
        .map(|(party, l)| match l {
            None => Ok(PartySetting::NoMeasurement),
            Some(label) => settings
                .get(Observable {
                    party,
                    label: *label,
                })
                .map(PartySetting::Direction)
                .ok_or_else(|| {
                    validation(format!(
                        "setting {}{label} is not bound",
                        PARTY_NAMES[party]
                    ))
                }),
        })
        .collect()
}

/// Reference measurement settings by key.
pub fn named_settings(key: &str) -> Result<SettingsAssignment> {
    let x = MeasurementDirection::x();
    let y = MeasurementDirection::y();
    let z = MeasurementDirection::z();
    let xz = |sx: f64, sz: f64| {
        MeasurementDirection::new(sx * FRAC_1_SQRT_2, 0.0, sz * FRAC_1_SQRT_2).expect("unit")
    };
    let s = SettingsAssignment::empty(4);
    let out = match key {
        "mabk_chi" => s
            .with(0, 1, x)
            .with(0, 2, z)
            .with(1, 1, y)
            .with(1, 2, z)
            .with(2, 1, y)
            .with(2, 2, z)
            .with(3, 1, xz(-1.0, 1.0))
            .with(3, 2, xz(1.0, 1.0)),
        "sasa_chi" => s
            .with(0, 1, x)
            .with(0, 2, z)
            .with(1, 1, z)
            .with(2, 1, xz(1.0, 1.0))
            .with(2, 2, xz(1.0, -1.0))
            .with(3, 1, z)
            .with(3, 2, z),
        "bi1_chi" => s
            .with(0, 1, x)
            .with(1, 1, z)
            .with(1, 2, y)
            .with(2, 1, z)
            .with(2, 2, y)
            .with(3, 1, x)
            .with(3, 2, y),
        "bi1_cluster" => s
            .with(0, 1, x)
            .with(1, 1, z)
            .with(1, 2, z)
            .with(2, 1, xz(1.0, 1.0))
            .with(2, 2, xz(1.0, -1.0))
            .with(3, 1, x)
            .with(3, 2, z),
        _ => {
            return Err(Error::Unknown {
                kind: "settings key",
                name: key.to_string(),
            })
        }
    };
    Ok(out)
}

/// JSON form of an expression with optional settings:
/// `{name, parties, terms: [{coef, labels}], settings: {party: {label: [nx,ny,nz]}}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionDocument {
    pub name: String,
    pub parties: usize,
    pub terms: Vec<BellTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<SettingsAssignment>,
}

impl ExpressionDocument {
    pub fn new(expr: &BellExpression, settings: Option<SettingsAssignment>) -> Self {
        Self {
            name: expr.name.clone(),
            parties: expr.n_parties,
            terms: expr.terms.clone(),
            settings,
        }
    }

    pub fn expression(&self) -> Result<BellExpression> {
        BellExpression::new(self.name.clone(), self.parties, self.terms.clone())
    }
}
