use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::solver::{SolverConfig, SpectrumSource, StepSize, StopRule, Variant};

/// Which solver variants each (cell, seed) runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantSelection {
    Vanilla,
    Projected,
    Both,
}

impl VariantSelection {
    pub fn name(self) -> &'static str {
        match self {
            VariantSelection::Vanilla => "vanilla",
            VariantSelection::Projected => "projected",
            VariantSelection::Both => "both",
        }
    }

    pub fn variants(self) -> &'static [Variant] {
        match self {
            VariantSelection::Vanilla => &[Variant::Vanilla],
            VariantSelection::Projected => &[Variant::Projected],
            VariantSelection::Both => &[Variant::Vanilla, Variant::Projected],
        }
    }
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub n1: usize,
    pub n2: usize,
    pub r: usize,
    pub kappa: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n1: Vec<usize>,
    pub n2: Vec<usize>,
    pub r: Vec<usize>,
    pub kappa: Vec<f64>,
    pub p: Vec<f64>,
    pub seeds: Vec<u64>,
    pub solver: SolverConfig,
    pub variant: VariantSelection,
    pub success_threshold: f64,
    pub loo_enabled: bool,
    pub loo_cap: usize,
    pub loo_iters: usize,
    pub hessian_check: bool,
    pub hessian_samples: usize,
    pub output_dir: Option<PathBuf>,
}

pub const OUTPUT_DIR_ENV: &str = "LRMC_OUTPUT_DIR";
pub const FALLBACK_OUTPUT_DIR: &str = "lrmc-out";

const KNOWN_KEYS: &[&str] = &[
    "n1",
    "n2",
    "r",
    "kappa",
    "p",
    "seeds",
    "variant",
    "step",
    "max_iters",
    "stop_tol",
    "record_every",
    "stop_rule",
    "projection_slack",
    "success_threshold",
    "loo_enabled",
    "loo_cap",
    "loo_iters",
    "hessian_check",
    "hessian_samples",
    "output_dir",
];

impl ExperimentConfig {
    /// Config with the given grid and seeds and every other key at its default.
    pub fn with_grid(cell: Cell, seeds: Vec<u64>) -> Self {
        Self {
            n1: vec![cell.n1],
            n2: vec![cell.n2],
            r: vec![cell.r],
            kappa: vec![cell.kappa],
            p: vec![cell.p],
            seeds,
            solver: SolverConfig::default(),
            variant: VariantSelection::Vanilla,
            success_threshold: 1e-4,
            loo_enabled: false,
            loo_cap: 400,
            loo_iters: 500,
            hessian_check: false,
            hessian_samples: 50,
            output_dir: None,
        }
    }

    /// Cartesian product, `n1` outermost and `p` innermost.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &n1 in &self.n1 {
            for &n2 in &self.n2 {
                for &r in &self.r {
                    for &kappa in &self.kappa {
                        for &p in &self.p {
                            out.push(Cell { n1, n2, r, kappa, p });
                        }
                    }
                }
            }
        }
        out
    }

    /// Solver runs a sweep performs: cells × seeds × variants.
    pub fn planned_runs(&self) -> usize {
        self.cells().len() * self.seeds.len() * self.variant.variants().len()
    }

    /// `--out` if given, then `output_dir`, then `$LRMC_OUTPUT_DIR`, then
    /// `lrmc-out`.
    pub fn resolve_output_dir(&self, cli: Option<&Path>) -> PathBuf {
        if let Some(p) = cli {
            return p.to_path_buf();
        }
        if let Some(p) = &self.output_dir {
            return p.clone();
        }
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => PathBuf::from(FALLBACK_OUTPUT_DIR),
        }
    }

    /// Every violated constraint, by key.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                errs.push(msg);
            }
        };
        need(!self.n1.is_empty() && self.n1.iter().all(|&v| v >= 1), "n1: need a nonempty list of positive integers".into());
        need(!self.n2.is_empty() && self.n2.iter().all(|&v| v >= 1), "n2: need a nonempty list of positive integers".into());
        need(!self.r.is_empty() && self.r.iter().all(|&v| v >= 1), "r: need a nonempty list of positive integers".into());
        let min_dim = self.n1.iter().chain(&self.n2).copied().min().unwrap_or(0);
        need(self.r.iter().all(|&r| r <= min_dim), format!("r: every rank must be at most min(n1, n2) = {min_dim}"));
        need(
            !self.kappa.is_empty() && self.kappa.iter().all(|&k| k.is_finite() && k >= 1.0),
            "kappa: need a nonempty list of values >= 1".into(),
        );
        need(
            !(self.r.contains(&1) && self.kappa.iter().any(|&k| k != 1.0)),
            "kappa: rank-1 cells require kappa = 1".into(),
        );
        need(
            !self.p.is_empty() && self.p.iter().all(|&p| p > 0.0 && p <= 1.0),
            "p: need a nonempty list of values in (0, 1]".into(),
        );
        need(!self.seeds.is_empty(), "seeds: need at least one seed".into());
        if let StepSize::Fixed(eta) = self.solver.step {
            need(eta > 0.0 && eta.is_finite(), format!("step: must be positive, got {eta}"));
        }
        need(self.solver.max_iters >= 1, "max_iters: must be at least 1".into());
        need(self.solver.stop_tol >= 0.0 && self.solver.stop_tol.is_finite(), "stop_tol: must be nonnegative".into());
        need(self.solver.record_every >= 1, "record_every: must be at least 1".into());
        need(
            self.solver.projection_slack >= 0.0 && self.solver.projection_slack.is_finite(),
            "projection_slack: must be nonnegative".into(),
        );
        need(
            self.success_threshold > 0.0 && self.success_threshold.is_finite(),
            "success_threshold: must be positive".into(),
        );
        need(self.hessian_samples >= 1, "hessian_samples: must be at least 1".into());
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Canonical text form; [`parse_config_str`] reads it back unchanged.
    pub fn to_config_string(&self) -> String {
        fn list<T: std::fmt::Debug>(v: &[T]) -> String {
            let items: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
            format!("[{}]", items.join(", "))
        }
        let s = &self.solver;
        let step = match s.step {
            StepSize::Fixed(eta) => format!("{eta:?}"),
            StepSize::Theory(SpectrumSource::Init) => "\"theory\"".into(),
            StepSize::Theory(SpectrumSource::Oracle) => "\"theory_oracle\"".into(),
        };
        let stop_rule = match s.stop_rule {
            StopRule::Oracle => "oracle",
            StopRule::Plateau => "plateau",
        };
        let mut out = String::new();
        let _ = writeln!(out, "n1 = {}", list(&self.n1));
        let _ = writeln!(out, "n2 = {}", list(&self.n2));
        let _ = writeln!(out, "r = {}", list(&self.r));
        let _ = writeln!(out, "kappa = {}", list(&self.kappa));
        let _ = writeln!(out, "p = {}", list(&self.p));
        let _ = writeln!(out, "seeds = {}", list(&self.seeds));
        let _ = writeln!(out, "variant = \"{}\"", self.variant.name());
        let _ = writeln!(out, "step = {step}");
        let _ = writeln!(out, "max_iters = {}", s.max_iters);
        let _ = writeln!(out, "stop_tol = {:?}", s.stop_tol);
        let _ = writeln!(out, "record_every = {}", s.record_every);
        let _ = writeln!(out, "stop_rule = \"{stop_rule}\"");
        let _ = writeln!(out, "projection_slack = {:?}", s.projection_slack);
        let _ = writeln!(out, "success_threshold = {:?}", self.success_threshold);
        let _ = writeln!(out, "loo_enabled = {}", self.loo_enabled);
        let _ = writeln!(out, "loo_cap = {}", self.loo_cap);
        let _ = writeln!(out, "loo_iters = {}", self.loo_iters);
        let _ = writeln!(out, "hessian_check = {}", self.hessian_check);
        let _ = writeln!(out, "hessian_samples = {}", self.hessian_samples);
        if let Some(dir) = &self.output_dir {
            let _ = writeln!(out, "output_dir = {}", Value::String(dir.display().to_string()));
        }
        out
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn as_u64(v: &Value) -> Option<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Some(*i as u64),
        _ => None,
    }
}

/// A scalar or a list of scalars.
fn list_of<T>(v: &Value, conv: impl Fn(&Value) -> Option<T>) -> Option<Vec<T>> {
    match v {
        Value::Array(items) => items.iter().map(conv).collect(),
        other => conv(other).map(|x| vec![x]),
    }
}

struct Reader<'a> {
    table: &'a Table,
    errs: Vec<String>,
}

impl Reader<'_> {
    fn get<T>(&mut self, key: &str, what: &str, conv: impl Fn(&Value) -> Option<T>) -> Option<T> {
        let v = self.table.get(key)?;
        let out = conv(v);
        if out.is_none() {
            self.errs.push(format!("{key}: expected {what}, got {v}"));
        }
        out
    }

    fn required<T>(&mut self, key: &str, what: &str, conv: impl Fn(&Value) -> Option<T>) -> Option<T> {
        if !self.table.contains_key(key) {
            self.errs.push(format!("{key}: missing"));
            return None;
        }
        self.get(key, what, conv)
    }
}

/// Parses and validates the config text. Every offending key is reported.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let table: Table = toml::from_str(text).map_err(|e| Error::Config(vec![format!("syntax: {}", e.message())]))?;
    let mut rd = Reader { table: &table, errs: Vec::new() };
    for key in table.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            rd.errs.push(format!("{key}: unknown key"));
        }
    }

    let usize_list = |v: &Value| list_of(v, |x| as_u64(x).map(|u| u as usize));
    let n1 = rd.required("n1", "positive integer(s)", usize_list);
    let n2 = rd.required("n2", "positive integer(s)", usize_list);
    let r = rd.required("r", "positive integer(s)", usize_list);
    let kappa = rd.required("kappa", "number(s)", |v| list_of(v, as_f64));
    let p = rd.required("p", "number(s)", |v| list_of(v, as_f64));
    let seeds = rd.required("seeds", "nonnegative integer(s)", |v| list_of(v, as_u64));

    let mut cfg = ExperimentConfig::with_grid(Cell { n1: 1, n2: 1, r: 1, kappa: 1.0, p: 1.0 }, vec![]);
    if let Some(v) = rd.get("variant", "\"vanilla\", \"projected\" or \"both\"", |v| match v.as_str()? {
        "vanilla" => Some(VariantSelection::Vanilla),
        "projected" => Some(VariantSelection::Projected),
        "both" => Some(VariantSelection::Both),
        _ => None,
    }) {
        cfg.variant = v;
    }
    if let Some(v) = rd.get("step", "\"theory\", \"theory_oracle\" or a number", |v| match v {
        Value::String(s) if s == "theory" => Some(StepSize::Theory(SpectrumSource::Init)),
        Value::String(s) if s == "theory_oracle" => Some(StepSize::Theory(SpectrumSource::Oracle)),
        other => as_f64(other).map(StepSize::Fixed),
    }) {
        cfg.solver.step = v;
    }
    if let Some(v) = rd.get("max_iters", "integer", as_u64) {
        cfg.solver.max_iters = v as usize;
    }
    if let Some(v) = rd.get("stop_tol", "number", as_f64) {
        cfg.solver.stop_tol = v;
    }
    if let Some(v) = rd.get("record_every", "integer", as_u64) {
        cfg.solver.record_every = v as usize;
    }
    if let Some(v) = rd.get("stop_rule", "\"oracle\" or \"plateau\"", |v| match v.as_str()? {
        "oracle" => Some(StopRule::Oracle),
        "plateau" => Some(StopRule::Plateau),
        _ => None,
    }) {
        cfg.solver.stop_rule = v;
    }
    if let Some(v) = rd.get("projection_slack", "number", as_f64) {
        cfg.solver.projection_slack = v;
    }
    if let Some(v) = rd.get("success_threshold", "number", as_f64) {
        cfg.success_threshold = v;
    }
    if let Some(v) = rd.get("loo_enabled", "boolean", Value::as_bool) {
        cfg.loo_enabled = v;
    }
    if let Some(v) = rd.get("loo_cap", "integer", as_u64) {
        cfg.loo_cap = v as usize;
    }
    if let Some(v) = rd.get("loo_iters", "integer", as_u64) {
        cfg.loo_iters = v as usize;
    }
    if let Some(v) = rd.get("hessian_check", "boolean", Value::as_bool) {
        cfg.hessian_check = v;
    }
    if let Some(v) = rd.get("hessian_samples", "integer", as_u64) {
        cfg.hessian_samples = v as usize;
    }
    if let Some(v) = rd.get("output_dir", "string", |v| v.as_str().map(PathBuf::from)) {
        cfg.output_dir = Some(v);
    }

    let mut errs = rd.errs;
    match (n1, n2, r, kappa, p, seeds) {
        (Some(n1), Some(n2), Some(r), Some(kappa), Some(p), Some(seeds)) if errs.is_empty() => {
            cfg.n1 = n1;
            cfg.n2 = n2;
            cfg.r = r;
            cfg.kappa = kappa;
            cfg.p = p;
            cfg.seeds = seeds;
            cfg.validate()?;
            Ok(cfg)
        }
        (n1, n2, r, kappa, p, seeds) => {
            // Report value-range problems alongside type problems.
            cfg.n1 = n1.unwrap_or_else(|| vec![1]);
            cfg.n2 = n2.unwrap_or_else(|| vec![1]);
            cfg.r = r.unwrap_or_else(|| vec![1]);
            cfg.kappa = kappa.unwrap_or_else(|| vec![1.0]);
            cfg.p = p.unwrap_or_else(|| vec![1.0]);
            cfg.seeds = seeds.unwrap_or_else(|| vec![0]);
            if let Err(Error::Config(more)) = cfg.validate() {
                errs.extend(more);
            }
            Err(Error::Config(errs))
        }
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "n1 = 20\nn2 = 15\nr = 2\nkappa = 2\np = 0.5\nseeds = [1]\n";

    #[test]
    fn minimal_defaults_and_round_trip() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.variant, VariantSelection::Vanilla);
        assert_eq!(cfg.success_threshold, 1e-4);
        assert_eq!(cfg.loo_cap, 400);
        assert_eq!(cfg.planned_runs(), 1);
        let text = cfg.to_config_string();
        assert_eq!(parse_config_str(&text).unwrap(), cfg);
    }

    #[test]
    fn every_offending_key_is_named() {
        let text = "n1 = [20]\nn2 = [15]\nr = [2]\nkappa = [2.0]\np = [1.5]\nseeds = []\nstep = -1\nbogus = 3\n";
        let Err(Error::Config(errs)) = parse_config_str(text) else { panic!("expected config error") };
        for key in ["p:", "seeds:", "step:", "bogus:"] {
            assert!(errs.iter().any(|e| e.starts_with(key)), "{key} missing from {errs:?}");
        }
    }

    #[test]
    fn type_errors_and_missing_keys() {
        let Err(Error::Config(errs)) = parse_config_str("n1 = \"big\"\nn2 = [15]\nr = 2\np = 0.3\nseeds = 1\n") else {
            panic!()
        };
        assert!(errs.iter().any(|e| e.starts_with("n1:")));
        assert!(errs.iter().any(|e| e == "kappa: missing"));
        assert!(parse_config_str("n1 = [").is_err());
    }

    #[test]
    fn grid_count() {
        let text = "n1 = [20, 30]\nn2 = [15, 25]\nr = [2]\nkappa = [1.0, 2.0]\np = [0.5]\nseeds = [1, 2, 3]\n";
        let cfg = parse_config_str(text).unwrap();
        assert_eq!(cfg.cells().len(), 8);
        assert_eq!(cfg.planned_runs(), 24);
        let both = parse_config_str(&format!("{text}variant = \"both\"\n")).unwrap();
        assert_eq!(both.planned_runs(), 48);
    }

    #[test]
    fn output_dir_precedence() {
        let mut cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.resolve_output_dir(Some(Path::new("a"))), PathBuf::from("a"));
        cfg.output_dir = Some("b".into());
        assert_eq!(cfg.resolve_output_dir(None), PathBuf::from("b"));
        let again = parse_config_str(&cfg.to_config_string()).unwrap();
        assert_eq!(again.output_dir, Some(PathBuf::from("b")));
    }
}
