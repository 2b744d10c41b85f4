// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Scenario files: flat `key = value` lines, `#` comments, dotted keys.
//!
//! ```text
//! model = pauli
//! grid.t_end = 5
//! grid.steps = 1000
//! pauli.gamma1 = 1
//! pauli.gamma2 = 1
//! pauli.gamma3 = neg_tanh
//! analyses = divisibility, backflow
//! sampler.seed = 7
//! ```

use std::collections::BTreeMap;
use std::fmt;

use qdiv_core::models::{CompositionModel, ManiscalcoModel, MixingProfile, Model, PauliModel, RateFn};
use qdiv_core::propagation::StochasticMatrix;
use qdiv_core::tol;

use crate::error::{ScenarioError, ScenarioErrors};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Analysis {
    ImageProfile,
    Divisibility,
    Backflow,
    Certify,
}

impl Analysis {
    /// Execution order.
    pub const ALL: [Analysis; 4] = [Analysis::ImageProfile, Analysis::Divisibility, Analysis::Backflow, Analysis::Certify];

    pub fn name(self) -> &'static str {
        match self {
            Analysis::ImageProfile => "image-profile",
            Analysis::Divisibility => "divisibility",
            Analysis::Backflow => "backflow",
            Analysis::Certify => "certify",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub t_end: f64,
    pub steps: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self { t_end: 5.0, steps: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassicalChain {
    /// `[I, T, T², …, T^length]`; `T` drawn from the sampler seed when absent.
    Powers { dim: usize, base: Option<StochasticMatrix>, length: usize },
    Explicit(Vec<StochasticMatrix>),
}

impl ClassicalChain {
    pub fn build(&self, seed: u64) -> Vec<StochasticMatrix> {
        match self {
            ClassicalChain::Explicit(chain) => chain.clone(),
            ClassicalChain::Powers { dim, base, length } => {
                let t = base.clone().unwrap_or_else(|| {
                    use rand::SeedableRng;
                    StochasticMatrix::random(*dim, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))
                });
                (0..=*length).map(|k| t.power(k)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Quantum(Model),
    Classical(ClassicalChain),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Quantum(m) => m.name(),
            ModelSpec::Classical(_) => "classical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sampler {
    pub n_pairs: usize,
    pub ancilla_dim: usize,
    pub biased: bool,
    pub seed: u64,
}

impl Default for Sampler {
    fn default() -> Self {
        Self { n_pairs: 100, ancilla_dim: 1, biased: false, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub rank: f64,
    pub cp: f64,
    pub tp_domain: f64,
    pub backflow: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rank: tol::RANK, cp: tol::CP, tp_domain: tol::TP_DOMAIN, backflow: tol::BACKFLOW }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifySettings {
    /// Random density-spanned subspaces tested for CPTP projectors.
    pub subspaces: usize,
    /// Diagonal values of the constructed subspaces tested for PTP projectors.
    pub p_values: Vec<f64>,
    /// Sampled pairs for the per-interval two-state test.
    pub au_pairs: usize,
}

impl Default for CertifySettings {
    fn default() -> Self {
        Self { subspaces: 20, p_values: vec![0.3, 0.5, 0.7], au_pairs: 4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: ModelSpec,
    pub grid: Grid,
    pub analyses: Vec<Analysis>,
    pub sampler: Sampler,
    pub tolerances: Tolerances,
    pub certify: CertifySettings,
}

impl Scenario {
    pub fn new(model: ModelSpec) -> Self {
        Self {
            model,
            grid: Grid::default(),
            analyses: Analysis::ALL.to_vec(),
            sampler: Sampler::default(),
            tolerances: Tolerances::default(),
            certify: CertifySettings::default(),
        }
    }

    pub fn with_analyses(mut self, analyses: &[Analysis]) -> Self {
        let mut a = analyses.to_vec();
        a.sort();
        a.dedup();
        self.analyses = a;
        self
    }

    pub fn runs(&self, a: Analysis) -> bool {
        self.analyses.contains(&a)
    }
}

struct Entry {
    line: usize,
    value: String,
}

struct Reader {
    entries: BTreeMap<String, Entry>,
    errors: Vec<ScenarioError>,
    last_line: usize,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn bad(&mut self, line: usize, key: &str, reason: impl Into<String>) {
        self.errors.push(ScenarioError::BadValue { line, key: key.to_owned(), reason: reason.into() });
    }

    fn parsed<T>(&mut self, key: &str, f: impl FnOnce(&str) -> Result<T, String>) -> Option<T> {
        let e = self.take(key)?;
        match f(&e.value) {
            Ok(v) => Some(v),
            Err(reason) => {
                self.bad(e.line, key, reason);
                None
            }
        }
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str) -> Option<T> {
        self.parsed(key, |v| v.parse::<T>().map_err(|_| format!("`{v}` is not a valid number")))
    }

    fn rate(&mut self, key: &str) -> Option<RateFn> {
        self.parsed(key, |v| v.parse::<RateFn>().map_err(|e| e.to_string()))
    }

    fn required_rate(&mut self, key: &str, model_line: usize) -> RateFn {
        if !self.entries.contains_key(key) {
            self.errors.push(ScenarioError::MissingRequired { line: model_line, key: key.to_owned() });
            return RateFn::zero();
        }
        self.rate(key).unwrap_or_else(RateFn::zero)
    }
}

fn parse_matrix(s: &str) -> Result<StochasticMatrix, String> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(|r| r.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", x.trim()))).collect())
        .collect::<Result<_, _>>()?;
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err("matrix rows must have equal length matching the row count".into());
    }
    StochasticMatrix::new(d, rows.concat()).map_err(|e| e.to_string())
}

fn print_matrix(m: &StochasticMatrix) -> String {
    let d = m.dim();
    (0..d)
        .map(|i| (0..d).map(|j| format!("{:?}", m.get(i, j))).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("; ")
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{v}` is not a boolean")),
    }
}

fn positive(v: &str) -> Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("`{v}` is not a positive number")),
    }
}

const MODEL_SECTIONS: [&str; 4] = ["pauli", "maniscalco", "composition", "classical"];

/// Parses and validates a scenario; every problem found is reported.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioErrors> {
    let mut r = Reader { entries: BTreeMap::new(), errors: Vec::new(), last_line: 0 };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        r.last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            r.bad(line, content, "expected `key = value`");
            continue;
        };
        let (key, value) = (key.trim().to_owned(), value.trim().to_owned());
        if let Some(prev) = r.entries.get(&key) {
            let first = prev.line;
            r.bad(line, &key, format!("duplicate key (first set on line {first})"));
            continue;
        }
        r.entries.insert(key, Entry { line, value });
    }

    let model = match r.take("model") {
        None => {
            r.errors.push(ScenarioError::MissingRequired { line: r.last_line.max(1), key: "model".into() });
            None
        }
        Some(e) if MODEL_SECTIONS.contains(&e.value.as_str()) => Some((e.value, e.line)),
        Some(e) => {
            r.errors.push(ScenarioError::UnknownKey { line: e.line, key: e.value });
            None
        }
    };

    let model = model.and_then(|(name, line)| parse_model(&mut r, &name, line));

    let mut grid = Grid::default();
    if let Some(t) = r.parsed("grid.t_end", positive) {
        grid.t_end = t;
    }
    if let Some(n) = r.parsed("grid.steps", |v| match v.parse::<usize>() {
        Ok(n) if n >= 10 => Ok(n),
        _ => Err(format!("`{v}` must be an integer ≥ 10")),
    }) {
        grid.steps = n;
    }

    let analyses = r
        .parsed("analyses", |v| {
            let mut out = Vec::new();
            for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                if item == "all" {
                    out.extend(Analysis::ALL);
                } else {
                    out.push(Analysis::parse(item).ok_or_else(|| format!("unknown analysis `{item}`"))?);
                }
            }
            out.sort();
            out.dedup();
            Ok(out)
        })
        .unwrap_or_else(|| Analysis::ALL.to_vec());

    let mut sampler = Sampler::default();
    if let Some(n) = r.number("sampler.n_pairs") {
        sampler.n_pairs = n;
    }
    if let Some(d) = r.parsed("sampler.ancilla_dim", |v| match v.parse::<usize>() {
        Ok(d) if (1..=3).contains(&d) => Ok(d),
        _ => Err(format!("`{v}` is not an ancilla dimension in 1..=3")),
    }) {
        sampler.ancilla_dim = d;
    }
    if let Some(b) = r.parsed("sampler.biased", parse_bool) {
        sampler.biased = b;
    }
    if let Some(s) = r.number("sampler.seed") {
        sampler.seed = s;
    }

    let mut tolerances = Tolerances::default();
    for (key, slot) in [
        ("tolerances.rank", &mut tolerances.rank),
        ("tolerances.cp", &mut tolerances.cp),
        ("tolerances.tp_domain", &mut tolerances.tp_domain),
        ("tolerances.backflow", &mut tolerances.backflow),
    ] {
        if let Some(v) = r.parsed(key, positive) {
            *slot = v;
        }
    }

    let mut certify = CertifySettings::default();
    if let Some(n) = r.number("certify.subspaces") {
        certify.subspaces = n;
    }
    if let Some(n) = r.number("certify.au_pairs") {
        certify.au_pairs = n;
    }
    if let Some(p) = r.parsed("certify.p", |v| {
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|x| match x.parse::<f64>() {
                Ok(p) if p > 0.0 && p < 1.0 => Ok(p),
                _ => Err(format!("`{x}` is not in (0, 1)")),
            })
            .collect()
    }) {
        certify.p_values = p;
    }

    let leftovers: Vec<(String, usize)> = r.entries.iter().map(|(k, e)| (k.clone(), e.line)).collect();
    for (key, line) in leftovers {
        r.errors.push(ScenarioError::UnknownKey { line, key });
    }

    r.errors.sort_by_key(|e| e.line());
    match model {
        Some(model) if r.errors.is_empty() => Ok(Scenario { model, grid, analyses, sampler, tolerances, certify }),
        _ => Err(ScenarioErrors(r.errors)),
    }
}

fn parse_model(r: &mut Reader, name: &str, line: usize) -> Option<ModelSpec> {
    let before = r.errors.len();
    let spec = match name {
        "pauli" => {
            let g1 = r.required_rate("pauli.gamma1", line);
            let g2 = r.required_rate("pauli.gamma2", line);
            let g3 = r.required_rate("pauli.gamma3", line);
            ModelSpec::Quantum(Model::Pauli(PauliModel::new(g1, g2, g3)))
        }
        "maniscalco" => {
            let omega = r.rate("maniscalco.omega").unwrap_or_else(RateFn::zero);
            let gamma_plus = r.required_rate("maniscalco.gamma_plus", line);
            let gamma_minus = r.required_rate("maniscalco.gamma_minus", line);
            let gamma3 = r.rate("maniscalco.gamma3").unwrap_or_else(RateFn::zero);
            ModelSpec::Quantum(Model::Maniscalco(ManiscalcoModel { omega, gamma_plus, gamma_minus, gamma3 }))
        }
        "composition" => {
            if !r.entries.contains_key("composition.profile") {
                r.errors.push(ScenarioError::MissingRequired { line, key: "composition.profile".into() });
            }
            let profile = r.parsed("composition.profile", |v| v.parse::<MixingProfile>().map_err(|e| e.to_string()))?;
            ModelSpec::Quantum(Model::Composition(CompositionModel::new(profile)))
        }
        _ => {
            let chain = r.parsed("classical.chain", |v| v.split('|').map(parse_matrix).collect::<Result<Vec<_>, _>>());
            let dim = r.parsed("classical.dim", |v| match v.parse::<usize>() {
                Ok(d) if (1..=3).contains(&d) => Ok(d),
                _ => Err(format!("`{v}` is not a dimension in 1..=3")),
            });
            let base = r.parsed("classical.matrix", parse_matrix);
            let length = r.number::<usize>("classical.length");
            match chain {
                Some(chain) => {
                    if let Some(d) = chain.windows(2).find(|w| w[0].dim() != w[1].dim()) {
                        r.bad(line, "classical.chain", format!("mixed dimensions {} and {}", d[0].dim(), d[1].dim()));
                    }
                    if dim.is_some() || base.is_some() || length.is_some() {
                        r.bad(line, "classical.chain", "an explicit chain excludes classical.dim/matrix/length");
                    }
                    ModelSpec::Classical(ClassicalChain::Explicit(chain))
                }
                None => {
                    let dim = match (&base, dim) {
                        (Some(b), Some(d)) if b.dim() != d => {
                            r.bad(line, "classical.matrix", format!("matrix is {}x{}, classical.dim is {d}", b.dim(), b.dim()));
                            d
                        }
                        (Some(b), _) => b.dim(),
                        (None, d) => d.unwrap_or(3),
                    };
                    ModelSpec::Classical(ClassicalChain::Powers { dim, base, length: length.unwrap_or(8) })
                }
            }
        }
    };
    // Keys of the other model sections are left for the unknown-key sweep.
    (r.errors.len() == before).then_some(spec)
}

/// Canonical text form; [`parse_scenario`] reads it back to an equal value.
pub fn print_scenario(s: &Scenario) -> String {
    s.to_string()
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model = {}", self.model.name())?;
        writeln!(f, "grid.t_end = {:?}", self.grid.t_end)?;
        writeln!(f, "grid.steps = {}", self.grid.steps)?;
        match &self.model {
            ModelSpec::Quantum(Model::Pauli(m)) => {
                for (k, g) in m.rates.iter().enumerate() {
                    writeln!(f, "pauli.gamma{} = {g}", k + 1)?;
                }
            }
            ModelSpec::Quantum(Model::Maniscalco(m)) => {
                writeln!(f, "maniscalco.omega = {}", m.omega)?;
                writeln!(f, "maniscalco.gamma_plus = {}", m.gamma_plus)?;
                writeln!(f, "maniscalco.gamma_minus = {}", m.gamma_minus)?;
                writeln!(f, "maniscalco.gamma3 = {}", m.gamma3)?;
            }
            ModelSpec::Quantum(Model::Composition(m)) => writeln!(f, "composition.profile = {}", m.profile)?,
            ModelSpec::Classical(ClassicalChain::Explicit(chain)) => {
                let parts: Vec<String> = chain.iter().map(print_matrix).collect();
                writeln!(f, "classical.chain = {}", parts.join(" | "))?;
            }
            ModelSpec::Classical(ClassicalChain::Powers { dim, base, length }) => {
                match base {
                    Some(b) => writeln!(f, "classical.matrix = {}", print_matrix(b))?,
                    None => writeln!(f, "classical.dim = {dim}")?,
                }
                writeln!(f, "classical.length = {length}")?;
            }
        }
        let names: Vec<&str> = self.analyses.iter().map(|a| a.name()).collect();
        writeln!(f, "analyses = {}", names.join(", "))?;
        writeln!(f, "sampler.n_pairs = {}", self.sampler.n_pairs)?;
        writeln!(f, "sampler.ancilla_dim = {}", self.sampler.ancilla_dim)?;
        writeln!(f, "sampler.biased = {}", self.sampler.biased)?;
        writeln!(f, "sampler.seed = {}", self.sampler.seed)?;
        writeln!(f, "tolerances.rank = {:?}", self.tolerances.rank)?;
        writeln!(f, "tolerances.cp = {:?}", self.tolerances.cp)?;
        writeln!(f, "tolerances.tp_domain = {:?}", self.tolerances.tp_domain)?;
        writeln!(f, "tolerances.backflow = {:?}", self.tolerances.backflow)?;
        writeln!(f, "certify.subspaces = {}", self.certify.subspaces)?;
        writeln!(f, "certify.au_pairs = {}", self.certify.au_pairs)?;
        let ps: Vec<String> = self.certify.p_values.iter().map(|p| format!("{p:?}")).collect();
        writeln!(f, "certify.p = {}", ps.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_pauli_gets_defaults() {
        let s = parse_scenario("model = pauli\npauli.gamma1 = 1\npauli.gamma2 = 1\npauli.gamma3 = 1\n").unwrap();
        assert_eq!(s.grid, Grid::default());
        assert_eq!(s.sampler, Sampler::default());
        assert_eq!(s.analyses, Analysis::ALL.to_vec());
        assert_eq!(s.model, ModelSpec::Quantum(Model::Pauli(PauliModel::constant(1.0, 1.0, 1.0))));
    }

    #[test]
    fn eternal_witness_round_trip() {
        let text = "# eternal\nmodel = pauli\npauli.gamma1 = 1\npauli.gamma2 = 1\npauli.gamma3 = -tanh  # witness\n";
        let s = parse_scenario(text).unwrap();
        let ModelSpec::Quantum(Model::Pauli(m)) = &s.model else { panic!() };
        assert_eq!(m.rates[2], RateFn::neg_tanh());
        let printed = print_scenario(&s);
        assert!(printed.contains("pauli.gamma3 = neg_tanh"));
        assert_eq!(parse_scenario(&printed).unwrap(), s);
    }

    #[test]
    fn misspelled_model_is_an_unknown_key() {
        let err = parse_scenario("# x\nmodel = paulli\n").unwrap_err();
        assert_eq!(err.0, vec![ScenarioError::UnknownKey { line: 2, key: "paulli".into() }]);
    }

    #[test]
    fn errors_are_collected_with_lines() {
        let text = "model = pauli\npauli.gamma1 = 1\npauli.gamma2 = cosh(1)\ngrid.steps = 5\nfoo.bar = 1\nmaniscalco.omega = 1\n";
        let err = parse_scenario(text).unwrap_err();
        let lines: Vec<usize> = err.0.iter().map(ScenarioError::line).collect();
        assert_eq!(lines, vec![1, 3, 4, 5, 6]);
        assert!(matches!(&err.0[0], ScenarioError::MissingRequired { key, .. } if key == "pauli.gamma3"));
        assert!(matches!(&err.0[1], ScenarioError::BadValue { key, .. } if key == "pauli.gamma2"));
        assert!(matches!(&err.0[3], ScenarioError::UnknownKey { key, .. } if key == "foo.bar"));
    }

    #[test]
    fn missing_model_and_duplicates() {
        let err = parse_scenario("grid.steps = 20\ngrid.steps = 30\n").unwrap_err();
        assert!(err.0.iter().any(|e| matches!(e, ScenarioError::MissingRequired { key, .. } if key == "model")));
        assert!(err.0.iter().any(|e| matches!(e, ScenarioError::BadValue { line: 2, .. })));
    }

    #[test]
    fn classical_forms() {
        let s = parse_scenario("model = classical\nclassical.matrix = 0.9, 0.2; 0.1, 0.8\nclassical.length = 4\n").unwrap();
        let chain = match &s.model {
            ModelSpec::Classical(c) => c.build(0),
            _ => panic!(),
        };
        assert_eq!(chain.len(), 5);
        assert_eq!(parse_scenario(&print_scenario(&s)).unwrap(), s);

        let s = parse_scenario("model = classical\nclassical.chain = 1,0;0,1 | 0.5,0.5;0.5,0.5\n").unwrap();
        assert_eq!(parse_scenario(&print_scenario(&s)).unwrap(), s);
        assert!(parse_scenario("model = classical\nclassical.matrix = 0.5, 0.2; 0.1, 0.8\n").is_err());
    }

    #[test]
    fn empty_analyses_list() {
        let s = parse_scenario("model = composition\ncomposition.profile = ramp(1)\nanalyses =\n").unwrap();
        assert!(s.analyses.is_empty());
        assert_eq!(parse_scenario(&print_scenario(&s)).unwrap(), s);
    }
}
