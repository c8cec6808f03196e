use std::fmt;
use std::ops::{Mul, Neg};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::QsimError;

/// A measurement outcome, `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    /// Bit encoding used throughout: `+1 -> false`, `-1 -> true`.
    pub fn is_minus(self) -> bool {
        self == Sign::Minus
    }

    pub fn from_bit(minus: bool) -> Sign {
        if minus {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn from_value(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn product<I: IntoIterator<Item = Sign>>(signs: I) -> Sign {
        signs.into_iter().fold(Sign::Plus, |acc, s| acc * s)
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs { Sign::Plus } else { Sign::Minus }
    }
}

impl Neg for Sign {
    type Output = Sign;

    fn neg(self) -> Sign {
        Sign::from_bit(!self.is_minus())
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

impl FromStr for Sign {
    type Err = QsimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "+1" | "1" | "+" => Ok(Sign::Plus),
            "-1" | "-" => Ok(Sign::Minus),
            other => Err(QsimError::Parse(format!("not a sign: {other:?}"))),
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Sign::from_value(v).ok_or_else(|| serde::de::Error::custom(format!("outcome {v} is not ±1")))
    }
}

/// Single-qubit Pauli measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObservableKind {
    X,
    Y,
    Z,
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

impl ObservableKind {
    pub const ALL: [ObservableKind; 3] = [ObservableKind::X, ObservableKind::Y, ObservableKind::Z];

    /// Normalized eigenvector for the given eigenvalue, in the `|0⟩, |1⟩` basis.
    pub fn eigenvector(self, sign: Sign) -> [Complex64; 2] {
        let h = FRAC_1_SQRT_2;
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match (self, sign) {
            (ObservableKind::X, Sign::Plus) => [c(h, 0.0), c(h, 0.0)],
            (ObservableKind::X, Sign::Minus) => [c(h, 0.0), c(-h, 0.0)],
            (ObservableKind::Y, Sign::Plus) => [c(h, 0.0), c(0.0, h)],
            (ObservableKind::Y, Sign::Minus) => [c(h, 0.0), c(0.0, -h)],
            (ObservableKind::Z, Sign::Plus) => [c(1.0, 0.0), c(0.0, 0.0)],
            (ObservableKind::Z, Sign::Minus) => [c(0.0, 0.0), c(1.0, 0.0)],
        }
    }

    /// Eigenprojector `|e⟩⟨e|` as a row-major 2×2 matrix.
    pub fn projector(self, sign: Sign) -> [[Complex64; 2]; 2] {
        let e = self.eigenvector(sign);
        [
            [e[0] * e[0].conj(), e[0] * e[1].conj()],
            [e[1] * e[0].conj(), e[1] * e[1].conj()],
        ]
    }

    /// The operator itself, row-major.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            ObservableKind::X => [[z, one], [one, z]],
            ObservableKind::Y => [[z, -i], [i, z]],
            ObservableKind::Z => [[one, z], [z, -one]],
        }
    }

    pub fn letter(self) -> char {
        match self {
            ObservableKind::X => 'X',
            ObservableKind::Y => 'Y',
            ObservableKind::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Option<ObservableKind> {
        match c.to_ascii_uppercase() {
            'X' => Some(ObservableKind::X),
            'Y' => Some(ObservableKind::Y),
            'Z' => Some(ObservableKind::Z),
            _ => None,
        }
    }
}

impl fmt::Display for ObservableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// A Pauli measurement on one qubit (1-based index).
///
/// The same pair also names the outcome variable of that measurement, so
/// `X1` the observable and `x1` its ±1 outcome share this type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SiteObservable {
    pub qubit: usize,
    pub kind: ObservableKind,
}

impl SiteObservable {
    pub const fn new(kind: ObservableKind, qubit: usize) -> Self {
        SiteObservable { qubit, kind }
    }

    pub const fn x(qubit: usize) -> Self {
        Self::new(ObservableKind::X, qubit)
    }

    pub const fn y(qubit: usize) -> Self {
        Self::new(ObservableKind::Y, qubit)
    }

    pub const fn z(qubit: usize) -> Self {
        Self::new(ObservableKind::Z, qubit)
    }

    /// Lower-case outcome symbol, e.g. `x1`.
    pub fn symbol(&self) -> String {
        format!("{}{}", self.kind.letter().to_ascii_lowercase(), self.qubit)
    }
}

impl fmt::Display for SiteObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind, self.qubit)
    }
}

/// Accepts `x1`, `X1`, `z4`, ...
impl FromStr for SiteObservable {
    type Err = QsimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let mut chars = s.chars();
        let kind = chars
            .next()
            .and_then(ObservableKind::from_letter)
            .ok_or_else(|| QsimError::Parse(format!("not an outcome variable: {s:?}")))?;
        let qubit: usize = chars
            .as_str()
            .parse()
            .map_err(|_| QsimError::Parse(format!("not an outcome variable: {s:?}")))?;
        if qubit == 0 {
            return Err(QsimError::Parse(format!("qubit indices start at 1: {s:?}")));
        }
        Ok(SiteObservable::new(kind, qubit))
    }
}

/// Observed values for a list of commuting single-site observables.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutcomeTuple {
    pub entries: Vec<(SiteObservable, Sign)>,
}

impl OutcomeTuple {
    pub fn new(entries: Vec<(SiteObservable, Sign)>) -> Result<Self, QsimError> {
        for (i, (a, _)) in entries.iter().enumerate() {
            if entries[..i].iter().any(|(b, _)| b.qubit == a.qubit) {
                return Err(QsimError::DuplicateQubit(a.qubit));
            }
        }
        Ok(OutcomeTuple { entries })
    }

    pub fn value_of(&self, obs: SiteObservable) -> Option<Sign> {
        self.entries.iter().find(|(o, _)| *o == obs).map(|(_, s)| *s)
    }

    pub fn values(&self) -> Vec<Sign> {
        self.entries.iter().map(|(_, s)| *s).collect()
    }
}

impl fmt::Display for OutcomeTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.entries.iter().map(|(o, s)| format!("{}={}", o.symbol(), s)).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn sign_algebra() {
        assert_eq!(Sign::Minus * Sign::Minus, Sign::Plus);
        assert_eq!(-Sign::Plus, Sign::Minus);
        assert_eq!(Sign::product([Sign::Minus, Sign::Plus, Sign::Minus]), Sign::Plus);
        assert_eq!("-1".parse::<Sign>().unwrap(), Sign::Minus);
        assert!("0".parse::<Sign>().is_err());
    }

    #[test]
    fn eigenvectors_match_operators() {
        for kind in ObservableKind::ALL {
            let m = kind.matrix();
            for sign in Sign::BOTH {
                let e = kind.eigenvector(sign);
                let lam = f64::from(sign.value());
                for row in 0..2 {
                    let me = m[row][0] * e[0] + m[row][1] * e[1];
                    assert!(close(me, e[row] * lam), "{kind} {sign}");
                }
                let norm: f64 = e.iter().map(|c| c.norm_sqr()).sum();
                assert!((norm - 1.0).abs() < 1e-12);
                if kind != ObservableKind::Z {
                    for c in e {
                        assert!((c.norm() - FRAC_1_SQRT_2).abs() < 1e-12);
                    }
                }
            }
            let p = kind.eigenvector(Sign::Plus);
            let q = kind.eigenvector(Sign::Minus);
            let overlap = p[0].conj() * q[0] + p[1].conj() * q[1];
            assert!(overlap.norm() < 1e-12);
        }
    }

    #[test]
    fn projectors_are_idempotent_and_complete() {
        for kind in ObservableKind::ALL {
            let plus = kind.projector(Sign::Plus);
            let minus = kind.projector(Sign::Minus);
            for p in [plus, minus] {
                for r in 0..2 {
                    for c in 0..2 {
                        let sq = p[r][0] * p[0][c] + p[r][1] * p[1][c];
                        assert!(close(sq, p[r][c]));
                    }
                }
            }
            for r in 0..2 {
                for c in 0..2 {
                    let id = if r == c { 1.0 } else { 0.0 };
                    assert!(close(plus[r][c] + minus[r][c], Complex64::new(id, 0.0)));
                }
            }
        }
    }

    #[test]
    fn site_observable_parsing() {
        assert_eq!("x1".parse::<SiteObservable>().unwrap(), SiteObservable::x(1));
        assert_eq!("Z4".parse::<SiteObservable>().unwrap(), SiteObservable::z(4));
        assert!("w1".parse::<SiteObservable>().is_err());
        assert!("x0".parse::<SiteObservable>().is_err());
        assert_eq!(SiteObservable::y(3).symbol(), "y3");
        assert_eq!(SiteObservable::y(3).to_string(), "Y3");
    }

    #[test]
    fn outcome_tuple_rejects_shared_qubit() {
        let r = OutcomeTuple::new(vec![
            (SiteObservable::x(1), Sign::Plus),
            (SiteObservable::z(1), Sign::Plus),
        ]);
        assert!(matches!(r, Err(QsimError::DuplicateQubit(1))));
    }
}
