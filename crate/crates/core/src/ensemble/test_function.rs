use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::types::TypeVector;
use crate::error::{Error, Result};

/// A symmetric test function `f: A^r -> B`.
///
/// Symmetry is structural: the table is keyed on the input type vector, so
/// the ordering of a pool's members can never affect the outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    input_alphabet: Vec<f64>,
    output_alphabet: Vec<f64>,
    arity: usize,
    table: BTreeMap<TypeVector, usize>,
}

/// On-disk form:
/// `{"input_alphabet":[..],"output_alphabet":[..],"arity":r,"table":[{"type":[..],"output":k},..]}`
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TestFunctionFile {
    input_alphabet: Vec<f64>,
    output_alphabet: Vec<f64>,
    arity: usize,
    table: Vec<TableEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableEntry {
    #[serde(rename = "type")]
    ty: Vec<usize>,
    output: usize,
}

fn violation(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::TestFunction {
        location: location.into(),
        message: message.into(),
    }
}

fn check_alphabet(name: &str, symbols: &[f64]) -> Result<()> {
    if symbols.is_empty() {
        return Err(violation(name, "alphabet is empty"));
    }
    for (i, a) in symbols.iter().enumerate() {
        if !a.is_finite() {
            return Err(violation(format!("{name}[{i}]"), "symbol is not finite"));
        }
        if symbols[..i].contains(a) {
            return Err(violation(format!("{name}[{i}]"), format!("duplicate symbol {a}")));
        }
    }
    Ok(())
}

impl TestFunction {
    /// Builds a test function by evaluating `rule` on every input type.
    pub fn from_rule<F>(input_alphabet: Vec<f64>, output_alphabet: Vec<f64>, arity: usize, rule: F) -> Result<Self>
    where
        F: Fn(&TypeVector) -> usize,
    {
        let table = TypeVector::all(input_alphabet.len(), arity)
            .into_iter()
            .map(|t| {
                let k = rule(&t);
                (t, k)
            })
            .collect();
        Self::from_table(input_alphabet, output_alphabet, arity, table)
    }

    pub fn from_table(
        input_alphabet: Vec<f64>,
        output_alphabet: Vec<f64>,
        arity: usize,
        table: BTreeMap<TypeVector, usize>,
    ) -> Result<Self> {
        check_alphabet("input_alphabet", &input_alphabet)?;
        check_alphabet("output_alphabet", &output_alphabet)?;
        if arity == 0 {
            return Err(violation("arity", "arity must be positive"));
        }
        let u = input_alphabet.len();
        let v = output_alphabet.len();
        for (t, &k) in &table {
            if t.alphabet_size() != u || t.len() != arity {
                return Err(violation(
                    format!("table type {t}"),
                    format!("type must have {u} entries summing to {arity}"),
                ));
            }
            if k >= v {
                return Err(violation(
                    format!("table type {t}"),
                    format!("output index {k} out of range 0..{v}"),
                ));
            }
        }
        for t in TypeVector::all(u, arity) {
            if !table.contains_key(&t) {
                return Err(violation("table", format!("missing entry for type {t}")));
            }
        }
        Ok(Self {
            input_alphabet,
            output_alphabet,
            arity,
            table,
        })
    }

    /// Logical OR over `{0, 1}`: 1 iff at least one input is 1.
    pub fn or(arity: usize) -> Result<Self> {
        Self::from_rule(vec![0.0, 1.0], vec![0.0, 1.0], arity, |t| {
            usize::from(t.counts()[1] > 0)
        })
    }

    /// Outputs 1 iff at least `k` of the binary inputs are 1.
    pub fn threshold(arity: usize, k: usize) -> Result<Self> {
        Self::from_rule(vec![0.0, 1.0], vec![0.0, 1.0], arity, |t| {
            usize::from(t.counts()[1] >= k)
        })
    }

    /// Number of ones in the pool, with output alphabet `{0, .., r}`.
    pub fn count(arity: usize) -> Result<Self> {
        let outputs = (0..=arity).map(|k| k as f64).collect();
        Self::from_rule(vec![0.0, 1.0], outputs, arity, |t| t.counts()[1])
    }

    pub fn parity(arity: usize) -> Result<Self> {
        Self::from_rule(vec![0.0, 1.0], vec![0.0, 1.0], arity, |t| t.counts()[1] % 2)
    }

    /// Largest symbol present in the pool, over the input alphabet `{0, .., levels-1}`.
    pub fn max_level(arity: usize, levels: usize) -> Result<Self> {
        let alphabet: Vec<f64> = (0..levels).map(|k| k as f64).collect();
        Self::from_rule(alphabet.clone(), alphabet, arity, |t| {
            t.counts().iter().rposition(|&c| c > 0).unwrap_or(0)
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: TestFunctionFile = serde_json::from_str(text)
            .map_err(|e| violation(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        let mut table = BTreeMap::new();
        for (i, entry) in file.table.into_iter().enumerate() {
            let location = format!("table[{i}]");
            if entry.ty.len() != file.input_alphabet.len() {
                return Err(violation(
                    location,
                    format!(
                        "type has {} entries, expected {}",
                        entry.ty.len(),
                        file.input_alphabet.len()
                    ),
                ));
            }
            let t = TypeVector::new(entry.ty);
            if t.len() != file.arity {
                return Err(violation(
                    location,
                    format!("type sums to {}, expected arity {}", t.len(), file.arity),
                ));
            }
            if entry.output >= file.output_alphabet.len() {
                return Err(violation(
                    location,
                    format!("output index {} out of range", entry.output),
                ));
            }
            if table.insert(t.clone(), entry.output).is_some() {
                return Err(violation(location, format!("duplicate entry for type {t}")));
            }
        }
        Self::from_table(file.input_alphabet, file.output_alphabet, file.arity, table)
    }

    pub fn to_json_string(&self) -> String {
        let file = TestFunctionFile {
            input_alphabet: self.input_alphabet.clone(),
            output_alphabet: self.output_alphabet.clone(),
            arity: self.arity,
            table: self
                .table
                .iter()
                .map(|(t, &k)| TableEntry {
                    ty: t.counts().to_vec(),
                    output: k,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("plain data serializes")
    }

    pub fn input_alphabet(&self) -> &[f64] {
        &self.input_alphabet
    }

    pub fn output_alphabet(&self) -> &[f64] {
        &self.output_alphabet
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// `u`
    pub fn input_size(&self) -> usize {
        self.input_alphabet.len()
    }

    /// `v`
    pub fn output_size(&self) -> usize {
        self.output_alphabet.len()
    }

    pub fn is_binary_input(&self) -> bool {
        self.input_alphabet == [0.0, 1.0]
    }

    /// Output index for an input type of length `arity`.
    pub fn output_index(&self, t: &TypeVector) -> Result<usize> {
        self.table
            .get(t)
            .copied()
            .ok_or_else(|| Error::Input(format!("type {t} is not an input type of this function")))
    }

    pub fn symbol_index(&self, symbol: f64) -> Option<usize> {
        self.input_alphabet.iter().position(|&a| a == symbol)
    }

    /// `(type, output index)` pairs in lexicographic type order.
    pub fn entries(&self) -> impl Iterator<Item = (&TypeVector, usize)> {
        self.table.iter().map(|(t, &k)| (t, k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_or_table() {
        let f = TestFunction::or(3).unwrap();
        assert_eq!(f.output_index(&TypeVector::binary(3, 0)).unwrap(), 0);
        for w in 1..=3 {
            assert_eq!(f.output_index(&TypeVector::binary(3, w)).unwrap(), 1);
        }
        assert!(f.is_binary_input());
    }

    #[test]
    fn json_round_trip() {
        let f = TestFunction::max_level(4, 3).unwrap();
        let g = TestFunction::from_json_str(&f.to_json_string()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn missing_type_is_reported() {
        let text = r#"{"input_alphabet":[0,1],"output_alphabet":[0,1],"arity":2,
            "table":[{"type":[2,0],"output":0},{"type":[1,1],"output":1}]}"#;
        let err = TestFunction::from_json_str(text).unwrap_err();
        assert!(
            matches!(err, Error::TestFunction { ref message, .. } if message.contains("(0,2)")),
            "{err}"
        );
    }

    #[test]
    fn bad_entry_location() {
        let text = r#"{"input_alphabet":[0,1],"output_alphabet":[0,1],"arity":2,
            "table":[{"type":[2,0],"output":0},{"type":[1,1],"output":5},{"type":[0,2],"output":1}]}"#;
        match TestFunction::from_json_str(text).unwrap_err() {
            Error::TestFunction { location, .. } => assert_eq!(location, "table[1]"),
            e => panic!("unexpected {e}"),
        }
        let text = r#"{"input_alphabet":[0,1],"output_alphabet":[0,1],"arity":2,
            "table":[{"type":[2,0,0],"output":0}]}"#;
        match TestFunction::from_json_str(text).unwrap_err() {
            Error::TestFunction { location, .. } => assert_eq!(location, "table[0]"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn syntax_error_has_line() {
        let err = TestFunction::from_json_str("{\n\"arity\": }").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn duplicate_symbol_rejected() {
        assert!(TestFunction::from_rule(vec![0.0, 0.0], vec![0.0], 2, |_| 0).is_err());
    }
}
