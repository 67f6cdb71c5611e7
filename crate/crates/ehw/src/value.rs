//! Runtime values and parameter domains.
//!
//! Values are integers, enumeration symbols, the unit value of parameterless
//! events, and the "unassigned" marker that every register starts from.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A concrete parameter or register value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Sym(String),
    Unit,
    /// Unassigned; never legal inside arithmetic or comparisons.
    Bottom,
}

impl Value {
    pub fn is_bottom(&self) -> bool {
        matches!(self, Value::Bottom)
    }

    pub fn sym(s: &str) -> Value {
        Value::Sym(s.to_string())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Sym(s) => write!(f, "{s}"),
            Value::Unit => write!(f, "()"),
            Value::Bottom => write!(f, "_"),
        }
    }
}

/// The domain a parameter or register draws its values from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Int,
    /// Finite symbol set, in declaration order.
    Enum(Vec<String>),
}

impl Domain {
    /// Whether `v` is a member of this domain. `Bottom` belongs to every
    /// domain (it is the initial content of any register).
    pub fn admits(&self, v: &Value) -> bool {
        match (self, v) {
            (_, Value::Bottom) => true,
            (Domain::Int, Value::Int(_)) => true,
            (Domain::Enum(syms), Value::Sym(s)) => syms.iter().any(|x| x == s),
            _ => false,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Int => write!(f, "int"),
            Domain::Enum(syms) => write!(f, "enum{{{}}}", syms.join(", ")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_membership() {
        let drink = Domain::Enum(vec!["tea".into(), "coffee".into()]);
        assert!(drink.admits(&Value::sym("tea")));
        assert!(!drink.admits(&Value::sym("cocoa")));
        assert!(!drink.admits(&Value::Int(3)));
        assert!(drink.admits(&Value::Bottom));
        assert!(Domain::Int.admits(&Value::Int(-5)));
        assert!(!Domain::Int.admits(&Value::sym("tea")));
    }

    #[test]
    fn display_forms() {
        assert_eq!(Value::Int(-5).to_string(), "-5");
        assert_eq!(Value::sym("coffee").to_string(), "coffee");
        assert_eq!(Value::Bottom.to_string(), "_");
    }
}
