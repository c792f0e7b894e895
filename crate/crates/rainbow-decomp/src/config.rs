//! Flat run configuration, readable from `key=value` text.
//!
//! Every constant the asymptotic arguments leave free lives here with a
//! desk-scale default; none of them is principled beyond "works at n ~ 100".

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::hamilton::{HamiltonConfig, TwoFactorConfig};
use crate::matchings::{DecompositionConfig, PerfectConfig, TransversalConfig};
use crate::nibble::{BSchedule, NibbleConfig};
use crate::trees::TreeConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub trials: usize,

    // nibble
    pub alpha: f64,
    pub p: f64,
    pub gamma: Option<f64>,
    pub ell: usize,
    pub b_schedule: BSchedule,
    pub rounds: Option<usize>,
    pub stop_on_violation: bool,

    // near-decomposition
    pub k: usize,
    pub nu: f64,
    /// Nibble `p` inside the near-decomposition.
    pub decomposition_p: f64,
    pub stop_on_unbounded: bool,
    pub pad_irregular: bool,

    // completion
    pub spread_p: f64,
    pub split_e: f64,
    pub split_dx: f64,
    pub split_dy: f64,

    // transversals
    pub eps: f64,
    pub reserve_share: f64,

    // 2-factors and Hamiltonian cycles
    pub cycle_k: usize,
    pub lambda: f64,
    pub anchor_cap: usize,
    pub hamilton_eps: f64,
    pub j1_share: f64,
    pub j2_share: f64,
    pub hamilton_gate: bool,
    pub design_s: usize,
    pub design_eps: f64,

    // trees
    pub tree_eps: f64,
    pub eta: f64,
    pub cover_k: usize,

    pub retry_cap: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let n = NibbleConfig::default();
        let d = DecompositionConfig::default();
        let pc = PerfectConfig::default();
        let t = TransversalConfig::default();
        PipelineConfig {
            seed: 0,
            trials: 1,
            alpha: n.alpha,
            p: n.p,
            gamma: n.gamma,
            ell: n.ell,
            b_schedule: n.b_schedule,
            rounds: n.rounds,
            stop_on_violation: n.stop_on_violation,
            k: d.k,
            nu: d.nu,
            decomposition_p: d.nibble.p,
            stop_on_unbounded: d.stop_on_unbounded,
            pad_irregular: d.pad_irregular,
            spread_p: pc.spread_p,
            split_e: pc.split[0],
            split_dx: pc.split[1],
            split_dy: pc.split[2],
            eps: t.eps,
            reserve_share: t.reserve_share,
            cycle_k: 5,
            lambda: 0.1,
            anchor_cap: 10,
            hamilton_eps: 0.05,
            j1_share: 0.55,
            j2_share: 0.15,
            hamilton_gate: true,
            design_s: 4,
            design_eps: 0.2,
            tree_eps: 0.1,
            eta: 0.15,
            cover_k: 8,
            retry_cap: 20,
        }
    }
}

impl PipelineConfig {
    pub fn nibble(&self) -> NibbleConfig {
        NibbleConfig {
            alpha: self.alpha,
            p: self.p,
            gamma: self.gamma,
            ell: self.ell,
            b_schedule: self.b_schedule,
            rounds: self.rounds,
            seed: self.seed,
            stop_on_violation: self.stop_on_violation,
        }
    }

    pub fn decomposition(&self) -> DecompositionConfig {
        DecompositionConfig {
            k: self.k,
            nu: self.nu,
            nibble: NibbleConfig { p: self.decomposition_p, rounds: None, ..self.nibble() },
            stop_on_unbounded: self.stop_on_unbounded,
            pad_irregular: self.pad_irregular,
        }
    }

    pub fn perfect(&self) -> PerfectConfig {
        PerfectConfig {
            decomposition: self.decomposition(),
            spread_p: self.spread_p,
            split: [self.split_e, self.split_dx, self.split_dy],
        }
    }

    pub fn transversal(&self) -> TransversalConfig {
        TransversalConfig { eps: self.eps, reserve_share: self.reserve_share, perfect: self.perfect() }
    }

    pub fn two_factor(&self) -> TwoFactorConfig {
        TwoFactorConfig { k: self.cycle_k, perfect: self.perfect(), s_hat: self.design_s, design_eps: self.design_eps }
    }

    pub fn hamilton(&self) -> HamiltonConfig {
        HamiltonConfig {
            eps: self.hamilton_eps,
            enforce_gate: self.hamilton_gate,
            j1_share: self.j1_share,
            j2_share: self.j2_share,
            two_factor: self.two_factor(),
            lambda: self.lambda,
            anchor_cap: self.anchor_cap,
            ..HamiltonConfig::default()
        }
    }

    pub fn trees(&self) -> TreeConfig {
        TreeConfig { eps: self.tree_eps, eta: self.eta, cover_k: self.cover_k, hamilton: self.hamilton(), ..TreeConfig::default() }
    }

    /// Parses `key=value` lines over the defaults; `#` starts a comment.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let Value::Object(mut map) = serde_json::to_value(&*self)? else {
            unreachable!("config serializes to an object")
        };
        let old = map.get(key).ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
        let new = parse_like(key, old, value)?;
        map.insert(key.to_string(), new);
        *self = serde_json::from_value(Value::Object(map))
            .map_err(|e| Error::Config(format!("bad value `{value}` for `{key}`: {e}")))?;
        Ok(())
    }

    pub fn to_kv(&self) -> String {
        let Value::Object(map) = serde_json::to_value(self).expect("serializable") else {
            unreachable!()
        };
        kv_lines(&map)
    }

    pub fn keys() -> Vec<String> {
        match serde_json::to_value(PipelineConfig::default()).expect("serializable") {
            Value::Object(map) => map.keys().cloned().collect(),
            _ => unreachable!(),
        }
    }
}

fn kv_lines(map: &Map<String, Value>) -> String {
    let mut out = String::new();
    for (k, v) in map {
        let text = match v {
            Value::String(s) => s.clone(),
            Value::Null => "none".to_string(),
            other => other.to_string(),
        };
        out.push_str(&format!("{k}={text}\n"));
    }
    out
}

fn parse_like(key: &str, old: &Value, value: &str) -> Result<Value> {
    let bad = || Error::Config(format!("bad value `{value}` for `{key}`"));
    if value.eq_ignore_ascii_case("none") {
        return Ok(Value::Null);
    }
    Ok(match old {
        Value::Bool(_) => Value::Bool(value.parse().map_err(|_| bad())?),
        Value::String(_) => Value::String(value.to_string()),
        Value::Number(n) if n.is_u64() && !value.contains('.') => Value::from(value.parse::<u64>().map_err(|_| bad())?),
        // `None` defaults: integer if it parses as one, else float
        Value::Null => match value.parse::<u64>() {
            Ok(v) => Value::from(v),
            Err(_) => Value::from(value.parse::<f64>().map_err(|_| bad())?),
        },
        _ => Value::from(value.parse::<f64>().map_err(|_| bad())?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_kv(&cfg.to_kv()).unwrap(), cfg);
    }

    #[test]
    fn overrides_and_errors() {
        let cfg = PipelineConfig::from_kv("alpha = 0.1\n# comment\nk=20\nrounds=30\nb_schedule=max-class\ngamma=0.2").unwrap();
        assert_eq!(cfg.alpha, 0.1);
        assert_eq!(cfg.k, 20);
        assert_eq!(cfg.rounds, Some(30));
        assert_eq!(cfg.gamma, Some(0.2));
        assert_eq!(cfg.b_schedule, BSchedule::MaxClass);
        assert!(PipelineConfig::from_kv("nope=1").is_err());
        assert!(PipelineConfig::from_kv("alpha").is_err());
        assert!(PipelineConfig::from_kv("k=lots").is_err());
    }
}
