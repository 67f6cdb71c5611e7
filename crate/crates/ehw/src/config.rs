//! Inference session configuration: the homing sequence, the
//! characterization sequences, the nested input sets the learner may use,
//! which registers it tracks, and the exploration budgets.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::abstraction::Interface;
use crate::dsl::{parse_concrete_input, ParseError};
use crate::efsm::ConcreteInput;

#[derive(Debug, Clone)]
pub struct LearnerConfig {
    /// Homing sequence.
    pub h: Vec<ConcreteInput>,
    /// Characterization sequences.
    pub w: Vec<Vec<ConcreteInput>>,
    /// Learning inputs: everything the learner explores systematically.
    pub i1: Vec<ConcreteInput>,
    /// i1 plus the inputs used to probe tracked/guard registers.
    pub i2: Vec<ConcreteInput>,
    /// Full sampling set (contains i2).
    pub i_s: Vec<ConcreteInput>,
    /// Registers that take part in state identity.
    pub rw: Vec<String>,
    /// Registers guards may depend on (contains rw).
    pub rg: Vec<String>,
    /// Seed for every random choice the session makes.
    pub seed: u64,
    /// Bounded-transfer depth; default 2·|known states| + |h|.
    pub transfer_bound: Option<usize>,
    /// Disable the optimistic bounded transfer search entirely (always
    /// rehome between targets). Mostly for experiments.
    pub no_bounded_transfer: bool,
    /// Random-walk budget for counterexample search on the sampled machine.
    pub nfsm_walks: usize,
    pub nfsm_walk_len: usize,
    /// Random-walk budget for counterexample search on generalised models.
    pub efsm_walks: usize,
    pub efsm_walk_len: usize,
}

impl Default for LearnerConfig {
    fn default() -> LearnerConfig {
        LearnerConfig {
            h: Vec::new(),
            w: Vec::new(),
            i1: Vec::new(),
            i2: Vec::new(),
            i_s: Vec::new(),
            rw: Vec::new(),
            rg: Vec::new(),
            seed: 0,
            transfer_bound: None,
            no_bounded_transfer: false,
            nfsm_walks: 20,
            nfsm_walk_len: 50,
            efsm_walks: 50,
            efsm_walk_len: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("config line {line}: {source}")]
    Event {
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: {message}")]
    Value { line: usize, message: String },
    #[error("missing `{0}` in config")]
    Missing(&'static str),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl LearnerConfig {
    /// Inputs of i2 beyond i1 that can write a tracked register.
    pub fn rw_stage_extras(&self, iface: &Interface) -> Vec<ConcreteInput> {
        self.stage_extras(iface, &self.rw)
    }

    /// Inputs of i2 beyond i1 that can write a guard register.
    pub fn rg_stage_extras(&self, iface: &Interface) -> Vec<ConcreteInput> {
        self.stage_extras(iface, &self.rg)
    }

    fn stage_extras(&self, iface: &Interface, regs: &[String]) -> Vec<ConcreteInput> {
        self.i2
            .iter()
            .filter(|x| !self.i1.contains(x))
            .filter(|x| {
                iface
                    .input_signature(&x.name)
                    .map(|sig| sig.param_names().any(|p| regs.iter().any(|r| r == p)))
                    .unwrap_or(false)
            })
            .cloned()
            .collect()
    }

    pub fn validate(&self, iface: &Interface) -> Result<(), ConfigError> {
        if self.h.is_empty() {
            return Err(ConfigError::Missing("h"));
        }
        if self.w.is_empty() || self.w.iter().any(|seq| seq.is_empty()) {
            return Err(ConfigError::Missing("w"));
        }
        if self.i1.is_empty() {
            return Err(ConfigError::Missing("i1"));
        }
        let i1: BTreeSet<&ConcreteInput> = self.i1.iter().collect();
        for x in self.h.iter().chain(self.w.iter().flatten()) {
            if !i1.contains(x) {
                return Err(ConfigError::Invalid(format!(
                    "{x} is used by h or w but is not in i1"
                )));
            }
        }
        let i2: BTreeSet<&ConcreteInput> = self.i2.iter().collect();
        let i_s: BTreeSet<&ConcreteInput> = self.i_s.iter().collect();
        if !i1.iter().all(|x| i2.contains(*x)) {
            return Err(ConfigError::Invalid("i2 must contain i1".into()));
        }
        if !i2.iter().all(|x| i_s.contains(*x)) {
            return Err(ConfigError::Invalid("is must contain i2".into()));
        }
        let params: BTreeSet<String> = iface.parameter_names().into_iter().collect();
        for name in &self.rg {
            if !params.contains(name) {
                return Err(ConfigError::Invalid(format!(
                    "rg names unknown parameter `{name}`"
                )));
            }
        }
        for name in &self.rw {
            if !self.rg.contains(name) {
                return Err(ConfigError::Invalid(format!(
                    "rw register `{name}` must also be in rg"
                )));
            }
        }
        for x in &self.i_s {
            if iface.input_signature(&x.name).is_none() {
                return Err(ConfigError::Invalid(format!("unknown input event {x}")));
            }
        }
        if self.nfsm_walks == 0 || self.nfsm_walk_len == 0 || self.efsm_walks == 0
            || self.efsm_walk_len == 0
        {
            return Err(ConfigError::Invalid("walk budgets must be positive".into()));
        }
        Ok(())
    }
}

/// Split a dot-joined input sequence like `coin(100).vend().select(coffee)`
/// at the top level (dots never occur inside argument lists).
fn split_sequence(text: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            '.' if depth == 0 => {
                parts.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(text[start..].trim());
    parts
}

/// Parse the flat key/value session file. `i1` lines list the learning
/// inputs one per line; `i2` and `is` lines add further inputs on top of
/// the previous level. `h` and `w` take dot-joined sequences (`w` may
/// repeat). `rw`/`rg` take comma-separated register names.
///
/// ```text
/// h = coin(100).vend().select(coffee)
/// w = select(coffee)
/// i1 = coin(100)
/// i1 = select(coffee)
/// i1 = vend()
/// is = coin(50)
/// rw = i1
/// rg = i1, i2, t, b
/// seed = 1
/// ```
pub fn parse_config(text: &str, iface: &Interface) -> Result<LearnerConfig, ConfigError> {
    let mut cfg = LearnerConfig::default();
    let mut i2_extra: Vec<ConcreteInput> = Vec::new();
    let mut is_extra: Vec<ConcreteInput> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        let body = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let body = body.trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Value {
            line,
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        let value = value.trim();
        let event = |v: &str| -> Result<ConcreteInput, ConfigError> {
            parse_concrete_input(v, iface).map_err(|source| ConfigError::Event { line, source })
        };
        let sequence = |v: &str| -> Result<Vec<ConcreteInput>, ConfigError> {
            split_sequence(v).into_iter().map(event).collect()
        };
        let names = |v: &str| -> Vec<String> {
            v.split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        };
        let number = |v: &str| -> Result<u64, ConfigError> {
            v.parse().map_err(|_| ConfigError::Value {
                line,
                message: format!("expected a number, found `{v}`"),
            })
        };
        match key {
            "h" => cfg.h = sequence(value)?,
            "w" => cfg.w.push(sequence(value)?),
            "i1" => cfg.i1.push(event(value)?),
            "i2" => i2_extra.push(event(value)?),
            "is" => is_extra.push(event(value)?),
            "rw" => cfg.rw = names(value),
            "rg" => cfg.rg = names(value),
            "seed" => cfg.seed = number(value)?,
            "transfer_bound" => cfg.transfer_bound = Some(number(value)? as usize),
            "nfsm_walks" => cfg.nfsm_walks = number(value)? as usize,
            "nfsm_walk_len" => cfg.nfsm_walk_len = number(value)? as usize,
            "efsm_walks" => cfg.efsm_walks = number(value)? as usize,
            "efsm_walk_len" => cfg.efsm_walk_len = number(value)? as usize,
            other => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: other.to_string(),
                })
            }
        }
    }
    cfg.i2 = cfg.i1.iter().cloned().chain(i2_extra).collect();
    cfg.i_s = cfg.i2.iter().cloned().chain(is_extra).collect();
    cfg.validate(iface)?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{blowup_machine, vending_machine};
    use crate::value::Value;

    const VENDING_CONFIG: &str = "\
# session for the drinks dispenser
h = coin(100).vend().select(coffee)
w = select(coffee)
i1 = coin(100)
i1 = select(coffee)
i1 = vend()
is = coin(50)
is = coin(200)
is = select(tea)
rw = i1
rg = i1, i2, b, t
seed = 1
";

    #[test]
    fn parses_the_dispenser_session() {
        let iface = Interface::of(&vending_machine());
        let cfg = parse_config(VENDING_CONFIG, &iface).unwrap();
        assert_eq!(cfg.h.len(), 3);
        assert_eq!(cfg.h[0], ConcreteInput::new("coin", vec![Value::Int(100)]));
        assert_eq!(cfg.h[2], ConcreteInput::new("select", vec![Value::sym("coffee")]));
        assert_eq!(cfg.w.len(), 1);
        assert_eq!(cfg.i1.len(), 3);
        assert_eq!(cfg.i2, cfg.i1);
        assert_eq!(cfg.i_s.len(), 6);
        assert_eq!(cfg.rw, vec!["i1"]);
        assert_eq!(cfg.rg, vec!["i1", "i2", "b", "t"]);
        assert_eq!(cfg.seed, 1);
        // No i2 extras, so the intermediate stages add nothing.
        assert!(cfg.rw_stage_extras(&iface).is_empty());
        assert!(cfg.rg_stage_extras(&iface).is_empty());
    }

    #[test]
    fn stage_extras_pick_inputs_writing_tracked_registers() {
        let iface = Interface::of(&blowup_machine());
        let text = "\
h = a(0).b(0)
w = b(0).a(0)
i1 = a(0)
i1 = b(0)
i2 = a(1)
i2 = b(1)
is = a(-5)
is = b(-5)
rw = ia, ib
rg = ia, ib
seed = 7
";
        let cfg = parse_config(text, &iface).unwrap();
        assert_eq!(cfg.i1.len(), 2);
        assert_eq!(cfg.i2.len(), 4);
        assert_eq!(cfg.i_s.len(), 6);
        let extras = cfg.rw_stage_extras(&iface);
        assert_eq!(extras.len(), 2);
        assert_eq!(extras[0], ConcreteInput::new("a", vec![Value::Int(1)]));
        assert_eq!(cfg.rg_stage_extras(&iface), extras);
    }

    #[test]
    fn rejects_h_outside_i1() {
        let iface = Interface::of(&vending_machine());
        let bad = VENDING_CONFIG.replace("h = coin(100).vend().select(coffee)",
                                         "h = coin(75).vend().select(coffee)");
        let err = parse_config(&bad, &iface).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_events() {
        let iface = Interface::of(&vending_machine());
        let bad = format!("{VENDING_CONFIG}wat = 3\n");
        assert!(matches!(
            parse_config(&bad, &iface).unwrap_err(),
            ConfigError::UnknownKey { line: 13, .. }
        ));
        let bad2 = VENDING_CONFIG.replace("i1 = coin(100)", "i1 = coin(tea)");
        assert!(matches!(
            parse_config(&bad2, &iface).unwrap_err(),
            ConfigError::Event { .. }
        ));
    }

    #[test]
    fn rw_must_be_inside_rg() {
        let iface = Interface::of(&vending_machine());
        let bad = VENDING_CONFIG.replace("rg = i1, i2, b, t", "rg = i2, b, t");
        assert!(matches!(
            parse_config(&bad, &iface).unwrap_err(),
            ConfigError::Invalid(_)
        ));
    }
}
