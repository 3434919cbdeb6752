//! Constellations, label-set enumeration and the negation/rotation symmetry
//! structure that the training and decoding stages rely on.
//!
//! A *label* is one of the `K = M^Nt` transmit vectors. Labels are ordered so
//! that each symmetry orbit occupies fixed index offsets: with negation
//! symmetry `labels[k + K/2] = -labels[k]`, with quadrant symmetry
//! `labels[k + K/4] = -labels[k]`, `labels[k + K/2] = j·labels[k]` and
//! `labels[k + 3K/4] = -j·labels[k]` for every generator index `k`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest label set the enumerator will build.
pub const MAX_LABELS: usize = 1 << 20;

const POINT_TOL: f64 = 1e-9;

const IDENTITY: [Complex64; 1] = [Complex64::new(1.0, 0.0)];
const NEGATION: [Complex64; 2] = [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
const QUADRANT: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(0.0, -1.0),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Psk8,
    Qam8,
    Qam16,
}

impl Modulation {
    pub fn name(self) -> &'static str {
        match self {
            Modulation::Bpsk => "bpsk",
            Modulation::Qpsk => "qpsk",
            Modulation::Psk8 => "8psk",
            Modulation::Qam8 => "8qam",
            Modulation::Qam16 => "16qam",
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Modulation::Bpsk),
            "qpsk" => Ok(Modulation::Qpsk),
            "8psk" | "psk8" => Ok(Modulation::Psk8),
            "8qam" | "qam8" => Ok(Modulation::Qam8),
            "16qam" | "qam16" => Ok(Modulation::Qam16),
            other => Err(Error::UnknownModulation(other.to_string())),
        }
    }
}

/// Symmetry class of a constellation or label subset.
///
/// `Negation` is closure under `x -> -x`; `Quadrant` is closure under
/// multiplication by `-1`, `j` and `-j` (and therefore implies `Negation`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symmetry {
    None,
    Negation,
    Quadrant,
}

impl Symmetry {
    /// Multipliers mapping a generator label onto the members of its orbit,
    /// in block order.
    pub fn orbit_factors(self) -> &'static [Complex64] {
        match self {
            Symmetry::None => &IDENTITY,
            Symmetry::Negation => &NEGATION,
            Symmetry::Quadrant => &QUADRANT,
        }
    }

    pub fn orbit_size(self) -> usize {
        self.orbit_factors().len()
    }
}

/// Unit-average-power constellation. Point `i` carries the bit pattern `i`
/// (MSB first); point placement makes that pattern a Gray code per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    modulation: Modulation,
    points: Vec<Complex64>,
    bits_per_symbol: usize,
}

fn gray_position(pattern: usize) -> usize {
    let mut p = pattern;
    let mut shift = pattern >> 1;
    while shift != 0 {
        p ^= shift;
        shift >>= 1;
    }
    p
}

/// Gray-coded PAM level for a bit pattern on an `levels`-point axis.
fn pam_level(pattern: usize, levels: usize) -> f64 {
    2.0 * gray_position(pattern) as f64 - (levels as f64 - 1.0)
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        let points: Vec<Complex64> = match modulation {
            Modulation::Bpsk => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            Modulation::Qpsk => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                (0..4)
                    .map(|i| {
                        let re = if i & 0b10 == 0 { s } else { -s };
                        let im = if i & 0b01 == 0 { s } else { -s };
                        Complex64::new(re, im)
                    })
                    .collect()
            }
            Modulation::Psk8 => (0..8)
                .map(|i| {
                    let angle = std::f64::consts::FRAC_PI_4 * gray_position(i) as f64;
                    Complex64::from_polar(1.0, angle)
                })
                .collect(),
            Modulation::Qam8 => {
                let scale = 1.0 / 6f64.sqrt();
                (0..8)
                    .map(|i| Complex64::new(pam_level(i >> 1, 4) * scale, pam_level(i & 1, 2) * scale))
                    .collect()
            }
            Modulation::Qam16 => {
                let scale = 1.0 / 10f64.sqrt();
                (0..16)
                    .map(|i| Complex64::new(pam_level(i >> 2, 4) * scale, pam_level(i & 3, 4) * scale))
                    .collect()
            }
        };
        let bits_per_symbol = points.len().trailing_zeros() as usize;
        Constellation {
            modulation,
            points,
            bits_per_symbol,
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(Self::new(name.parse()?))
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Bit pattern of point `index`, MSB first.
    pub fn bits_of(&self, index: usize) -> Vec<u8> {
        (0..self.bits_per_symbol)
            .rev()
            .map(|b| ((index >> b) & 1) as u8)
            .collect()
    }

    /// Inverse of [`Constellation::bits_of`].
    pub fn index_of_bits(&self, bits: &[u8]) -> Result<usize> {
        if bits.len() != self.bits_per_symbol {
            return Err(Error::LengthMismatch {
                expected: self.bits_per_symbol,
                actual: bits.len(),
            });
        }
        Ok(bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize))
    }

    pub fn find(&self, point: Complex64) -> Option<usize> {
        self.points.iter().position(|p| (p - point).norm() < POINT_TOL)
    }

    pub fn symmetry(&self) -> Symmetry {
        detect_symmetry(&self.points)
    }
}

/// Symmetry class of an arbitrary finite point set.
pub fn detect_symmetry(points: &[Complex64]) -> Symmetry {
    let contains = |z: Complex64| points.iter().any(|p| (p - z).norm() < POINT_TOL);
    let closed = |alpha: Complex64| points.iter().all(|&p| contains(alpha * p));
    if QUADRANT[1..].iter().all(|&a| closed(a)) {
        Symmetry::Quadrant
    } else if closed(NEGATION[1]) {
        Symmetry::Negation
    } else {
        Symmetry::None
    }
}

/// Real-domain label: real parts of all antennas, then imaginary parts.
#[derive(Clone, Debug, PartialEq)]
pub struct RealLabel(pub Vec<f64>);

impl RealLabel {
    pub fn from_complex(x: &[Complex64]) -> Self {
        RealLabel(x.iter().map(|z| z.re).chain(x.iter().map(|z| z.im)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Number of coordinates in which two real-domain labels differ.
pub fn hamming_distance(a: &RealLabel, b: &RealLabel) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(a.0.iter().zip(&b.0).filter(|(x, y)| (*x - *y).abs() > 1e-12).count())
}

#[derive(Clone, Debug)]
enum BitMap {
    /// Per-antenna constellation bits; `lookup` maps the mixed-radix symbol
    /// code (antenna 0 most significant) to a label index.
    PerSymbol {
        constellation: Constellation,
        symbols: Vec<Vec<usize>>,
        lookup: Vec<usize>,
    },
    /// Natural binary of the label's position in the set.
    Positional { bits: usize },
}

/// Ordered set of transmit vectors with its orbit structure.
#[derive(Clone, Debug)]
pub struct LabelSet {
    nt: usize,
    vectors: Vec<Vec<Complex64>>,
    symmetry: Symmetry,
    bit_map: BitMap,
    parent_indices: Option<Vec<usize>>,
}

impl LabelSet {
    /// All `M^Nt` labels of `constellation`, in orbit order.
    pub fn enumerate(constellation: &Constellation, nt: usize) -> Result<Self> {
        if nt == 0 {
            return Err(Error::InvalidParameter("Nt must be at least 1".into()));
        }
        let m = constellation.len();
        let count = (m as u128).checked_pow(nt as u32).unwrap_or(u128::MAX);
        if count > MAX_LABELS as u128 {
            return Err(Error::TooManyLabels {
                count,
                limit: MAX_LABELS,
            });
        }
        let k = count as usize;
        let symmetry = constellation.symmetry();
        let factors = symmetry.orbit_factors();

        // per-symbol index maps for each orbit multiplier
        let maps: Vec<Vec<usize>> = factors
            .iter()
            .map(|&a| {
                constellation
                    .points()
                    .iter()
                    .map(|&p| constellation.find(a * p).expect("orbit closed"))
                    .collect()
            })
            .collect();

        let decode = |code: usize| -> Vec<usize> {
            let mut digits = vec![0; nt];
            let mut c = code;
            for d in digits.iter_mut().rev() {
                *d = c % m;
                c /= m;
            }
            digits
        };
        let encode = |digits: &[usize]| digits.iter().fold(0, |acc, &d| acc * m + d);

        let mut covered = vec![false; k];
        let mut generators: Vec<Vec<usize>> = Vec::with_capacity(k / factors.len());
        for code in 0..k {
            if covered[code] {
                continue;
            }
            let digits = decode(code);
            for map in &maps {
                let image: Vec<usize> = digits.iter().map(|&d| map[d]).collect();
                covered[encode(&image)] = true;
            }
            generators.push(digits);
        }

        let g = generators.len();
        let mut symbols = vec![Vec::new(); k];
        for (q, map) in maps.iter().enumerate() {
            for (i, gen) in generators.iter().enumerate() {
                symbols[q * g + i] = gen.iter().map(|&d| map[d]).collect();
            }
        }
        let mut lookup = vec![0; k];
        for (label, s) in symbols.iter().enumerate() {
            lookup[encode(s)] = label;
        }
        let vectors = symbols
            .iter()
            .map(|s| s.iter().map(|&d| constellation.points()[d]).collect())
            .collect();

        Ok(LabelSet {
            nt,
            vectors,
            symmetry,
            bit_map: BitMap::PerSymbol {
                constellation: constellation.clone(),
                symbols,
                lookup,
            },
            parent_indices: None,
        })
    }

    /// Label set restricted to `indices` of `self`, reordered into orbit
    /// order for whichever symmetry the subset is closed under. Bits are the
    /// natural binary code of the position in the new set.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let n = indices.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "subset size {n} must be a power of two and at least 2"
            )));
        }
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::DuplicateLabels);
        }
        if let Some(&bad) = sorted.iter().find(|&&i| i >= self.len()) {
            return Err(Error::InvalidParameter(format!("label index {bad} out of range")));
        }

        let find = |v: &[Complex64]| {
            sorted
                .iter()
                .copied()
                .find(|&i| self.vectors[i].iter().zip(v).all(|(a, b)| (a - b).norm() < POINT_TOL))
        };
        let closed_under = |alpha: Complex64| {
            sorted.iter().all(|&i| {
                let img: Vec<Complex64> = self.vectors[i].iter().map(|z| alpha * z).collect();
                find(&img).is_some()
            })
        };
        let symmetry = if QUADRANT[1..].iter().all(|&a| closed_under(a)) {
            Symmetry::Quadrant
        } else if closed_under(NEGATION[1]) {
            Symmetry::Negation
        } else {
            Symmetry::None
        };

        let factors = symmetry.orbit_factors();
        let mut taken = vec![false; self.len()];
        let mut orbits: Vec<Vec<usize>> = Vec::new();
        for &i in &sorted {
            if taken[i] {
                continue;
            }
            let orbit: Vec<usize> = factors
                .iter()
                .map(|&a| {
                    let img: Vec<Complex64> = self.vectors[i].iter().map(|z| a * z).collect();
                    find(&img).expect("subset closed under its symmetry")
                })
                .collect();
            for &j in &orbit {
                taken[j] = true;
            }
            orbits.push(orbit);
        }
        let g = orbits.len();
        let mut parent = vec![0; n];
        for (i, orbit) in orbits.iter().enumerate() {
            for (q, &j) in orbit.iter().enumerate() {
                parent[q * g + i] = j;
            }
        }
        let vectors = parent.iter().map(|&j| self.vectors[j].clone()).collect();
        let parent_indices = match &self.parent_indices {
            Some(pp) => parent.iter().map(|&j| pp[j]).collect(),
            None => parent,
        };
        Ok(LabelSet {
            nt: self.nt,
            vectors,
            symmetry,
            bit_map: BitMap::Positional {
                bits: n.trailing_zeros() as usize,
            },
            parent_indices: Some(parent_indices),
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn label(&self, k: usize) -> &[Complex64] {
        &self.vectors[k]
    }

    pub fn labels(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    /// Index of each label in the set this one was cut from, if any.
    pub fn parent_indices(&self) -> Option<&[usize]> {
        self.parent_indices.as_deref()
    }

    pub fn constellation(&self) -> Option<&Constellation> {
        match &self.bit_map {
            BitMap::PerSymbol { constellation, .. } => Some(constellation),
            BitMap::Positional { .. } => None,
        }
    }

    /// Size of the generator subset (`K`, `K/2` or `K/4`).
    pub fn generator_count(&self) -> usize {
        self.len() / self.symmetry.orbit_size()
    }

    /// Generator index of label `k` and the factor with `label(k) = factor · label(gen)`.
    pub fn orbit_position(&self, k: usize) -> (usize, Complex64) {
        let g = self.generator_count();
        (k % g, self.symmetry.orbit_factors()[k / g])
    }

    /// All members of the orbit of generator `gen`, paired with their factors.
    pub fn orbit(&self, gen: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let g = self.generator_count();
        self.symmetry
            .orbit_factors()
            .iter()
            .enumerate()
            .map(move |(q, &a)| (gen + q * g, a))
    }

    pub fn bits_per_label(&self) -> usize {
        match &self.bit_map {
            BitMap::PerSymbol { constellation, .. } => self.nt * constellation.bits_per_symbol(),
            BitMap::Positional { bits } => *bits,
        }
    }

    pub fn bits_of(&self, k: usize) -> Vec<u8> {
        match &self.bit_map {
            BitMap::PerSymbol {
                constellation, symbols, ..
            } => symbols[k].iter().flat_map(|&s| constellation.bits_of(s)).collect(),
            BitMap::Positional { bits } => (0..*bits).rev().map(|b| ((k >> b) & 1) as u8).collect(),
        }
    }

    pub fn index_of_bits(&self, bits: &[u8]) -> Result<usize> {
        let expected = self.bits_per_label();
        if bits.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: bits.len(),
            });
        }
        match &self.bit_map {
            BitMap::PerSymbol {
                constellation, lookup, ..
            } => {
                let m = constellation.len();
                let mut code = 0;
                for chunk in bits.chunks(constellation.bits_per_symbol()) {
                    code = code * m + constellation.index_of_bits(chunk)?;
                }
                Ok(lookup[code])
            }
            BitMap::Positional { .. } => Ok(bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)),
        }
    }

    pub fn real_label(&self, k: usize) -> RealLabel {
        RealLabel::from_complex(&self.vectors[k])
    }

    /// Number of differing bits between the bit patterns of two labels.
    pub fn bit_errors(&self, sent: usize, decoded: usize) -> usize {
        if sent == decoded {
            return 0;
        }
        self.bits_of(sent)
            .iter()
            .zip(self.bits_of(decoded))
            .filter(|(a, b)| **a != *b)
            .count()
    }
}
