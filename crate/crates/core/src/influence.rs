//! Logic distribution factors (ldf) from gate truth tables.
//!
//! The raw influence of input `i` is the fraction of the `2^n` input
//! assignments for which toggling input `i` toggles the output. Both
//! directions of a flip are counted, so for a 3-input AND each input has raw
//! influence `2/8`. Normalizing the raw vector to unit sum gives the ldf.

use num_rational::Ratio;
use thiserror::Error;

/// Largest fan-in accepted for truth-table gates.
pub const MAX_TABLE_FANIN: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TruthTableError {
    #[error("fan-in must be at least 1")]
    ZeroFanin,
    #[error("fan-in {0} exceeds the limit of {MAX_TABLE_FANIN}")]
    FaninTooLarge(usize),
    #[error("truth table has {got} rows, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("invalid truth-table character {0:?}")]
    BadCharacter(char),
}

/// Output column of a Boolean function of `n` inputs.
///
/// Row `r` holds the output for the assignment whose binary expansion is `r`,
/// with input 0 as the most significant bit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    fanin: usize,
    bits: Vec<bool>,
}

impl TruthTable {
    pub fn new(fanin: usize, bits: Vec<bool>) -> Result<Self, TruthTableError> {
        if fanin == 0 {
            return Err(TruthTableError::ZeroFanin);
        }
        if fanin > MAX_TABLE_FANIN {
            return Err(TruthTableError::FaninTooLarge(fanin));
        }
        let expected = 1usize << fanin;
        if bits.len() != expected {
            return Err(TruthTableError::WrongLength { expected, got: bits.len() });
        }
        Ok(TruthTable { fanin, bits })
    }

    /// Parses a `0`/`1` string of length `2^n`.
    pub fn from_bitstring(fanin: usize, s: &str) -> Result<Self, TruthTableError> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(TruthTableError::BadCharacter(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(fanin, bits)
    }

    /// Builds a table by evaluating `f` on every assignment (input 0 first).
    pub fn from_fn(fanin: usize, f: impl Fn(&[bool]) -> bool) -> Result<Self, TruthTableError> {
        if fanin == 0 {
            return Err(TruthTableError::ZeroFanin);
        }
        if fanin > MAX_TABLE_FANIN {
            return Err(TruthTableError::FaninTooLarge(fanin));
        }
        let mut args = vec![false; fanin];
        let bits = (0..1usize << fanin)
            .map(|row| {
                for (i, a) in args.iter_mut().enumerate() {
                    *a = row >> (fanin - 1 - i) & 1 == 1;
                }
                f(&args)
            })
            .collect();
        Self::new(fanin, bits)
    }

    pub fn fanin(&self) -> usize {
        self.fanin
    }

    pub fn rows(&self) -> usize {
        self.bits.len()
    }

    pub fn bit(&self, row: usize) -> bool {
        self.bits[row]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Evaluates the function on explicit argument values.
    pub fn eval(&self, args: &[bool]) -> bool {
        debug_assert_eq!(args.len(), self.fanin);
        let row = args.iter().fold(0usize, |acc, &a| acc << 1 | a as usize);
        self.bits[row]
    }

    pub fn to_bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// Row mask for input `i` (input 0 is the MSB).
    fn input_mask(&self, input: usize) -> usize {
        1 << (self.fanin - 1 - input)
    }
}

/// Per-input influence of a gate, exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfluenceVector {
    /// Fraction of assignments where toggling the input toggles the output.
    pub raw: Vec<Ratio<u64>>,
    /// `raw` normalized to unit sum; all zero for constant functions.
    pub ldf: Vec<Ratio<u64>>,
}

impl InfluenceVector {
    fn from_raw(raw: Vec<Ratio<u64>>) -> Self {
        let total = raw.iter().fold(Ratio::from_integer(0u64), |acc, r| acc + r);
        let ldf = if total == Ratio::from_integer(0) {
            vec![Ratio::from_integer(0); raw.len()]
        } else {
            raw.iter().map(|r| r / total).collect()
        };
        InfluenceVector { raw, ldf }
    }

    pub fn fanin(&self) -> usize {
        self.ldf.len()
    }

    /// True when the output does not depend on any input.
    pub fn is_constant(&self) -> bool {
        self.raw.iter().all(|r| *r.numer() == 0)
    }

    pub fn raw_f64(&self) -> Vec<f64> {
        self.raw.iter().map(ratio_to_f64).collect()
    }

    pub fn ldf_f64(&self) -> Vec<f64> {
        self.ldf.iter().map(ratio_to_f64).collect()
    }
}

pub(crate) fn ratio_to_f64(r: &Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Exhaustive influence of every input of `table`.
pub fn influence(table: &TruthTable) -> InfluenceVector {
    let rows = table.rows();
    let raw = (0..table.fanin())
        .map(|i| {
            let mask = table.input_mask(i);
            let toggles = (0..rows).filter(|&r| table.bit(r) != table.bit(r ^ mask)).count();
            Ratio::new(toggles as u64, rows as u64)
        })
        .collect();
    InfluenceVector::from_raw(raw)
}

/// ldf of a gate whose inputs are interchangeable: `1/n` each.
pub fn influence_symmetric(fanin: usize) -> Vec<Ratio<u64>> {
    assert!(fanin >= 1, "symmetric gate needs at least one input");
    vec![Ratio::new(1, fanin as u64); fanin]
}

/// Builds an influence vector with uniform raw influence `raw` per input.
pub(crate) fn uniform_influence(fanin: usize, raw: Ratio<u64>) -> InfluenceVector {
    InfluenceVector { raw: vec![raw; fanin], ldf: influence_symmetric(fanin) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: u64, d: u64) -> Ratio<u64> {
        Ratio::new(n, d)
    }

    #[test]
    fn and3_matches_worked_example() {
        let t = TruthTable::from_fn(3, |a| a.iter().all(|&x| x)).unwrap();
        let inf = influence(&t);
        assert_eq!(inf.raw, vec![r(2, 8); 3]);
        assert_eq!(inf.ldf, vec![r(1, 3); 3]);
    }

    #[test]
    fn not_gate_always_propagates() {
        let t = TruthTable::from_bitstring(1, "10").unwrap();
        let inf = influence(&t);
        assert_eq!(inf.raw, vec![r(1, 1)]);
        assert_eq!(inf.ldf, vec![r(1, 1)]);
    }

    #[test]
    fn mux_and_xor_by_enumeration() {
        let mux = TruthTable::from_fn(3, |a| if a[0] { a[2] } else { a[1] }).unwrap();
        let inf = influence(&mux);
        assert_eq!(inf.raw, vec![r(1, 2); 3]);
        assert_eq!(inf.ldf, vec![r(1, 3); 3]);

        let xor = TruthTable::from_fn(2, |a| a[0] ^ a[1]).unwrap();
        let inf = influence(&xor);
        assert_eq!(inf.raw, vec![r(1, 1); 2]);
        assert_eq!(inf.ldf, vec![r(1, 2); 2]);
    }

    #[test]
    fn constant_table_has_zero_ldf() {
        let t = TruthTable::from_bitstring(2, "1111").unwrap();
        let inf = influence(&t);
        assert!(inf.is_constant());
        assert_eq!(inf.ldf, vec![r(0, 1); 2]);
    }

    #[test]
    fn ignored_input_has_zero_raw() {
        // output = input 1
        let t = TruthTable::from_fn(2, |a| a[1]).unwrap();
        let inf = influence(&t);
        assert_eq!(inf.raw, vec![r(0, 1), r(1, 1)]);
        assert_eq!(inf.ldf, vec![r(0, 1), r(1, 1)]);
    }

    #[test]
    fn symmetric_fast_path() {
        assert_eq!(influence_symmetric(3), vec![r(1, 3); 3]);
        assert_eq!(influence_symmetric(1), vec![r(1, 1)]);
        let or2 = TruthTable::from_fn(2, |a| a[0] || a[1]).unwrap();
        assert_eq!(influence(&or2).ldf, influence_symmetric(2));
    }

    #[test]
    fn table_validation() {
        assert_eq!(TruthTable::from_bitstring(2, "010"), Err(TruthTableError::WrongLength { expected: 4, got: 3 }));
        assert_eq!(TruthTable::from_bitstring(1, "0x"), Err(TruthTableError::BadCharacter('x')));
        assert_eq!(TruthTable::new(0, vec![true]), Err(TruthTableError::ZeroFanin));
        assert_eq!(TruthTable::new(17, vec![]), Err(TruthTableError::FaninTooLarge(17)));
    }

    #[test]
    fn eval_uses_first_argument_as_msb() {
        let t = TruthTable::from_bitstring(2, "0010").unwrap();
        assert!(t.eval(&[true, false]));
        assert!(!t.eval(&[false, true]));
        assert_eq!(t.to_bitstring(), "0010");
    }
}
