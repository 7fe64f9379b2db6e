//! Topological Markov chains over a finite (or truncated countable) alphabet.
//!
//! A [`Tmc`] is a 0/1 incidence matrix; its phase space is the set of
//! one-sided sequences whose consecutive symbols are allowed by the matrix.
//! Finite [`Word`]s define [`CylinderSpec`]s, and [`PeriodicWord`]s stand for
//! periodic orbits (one full minimal period, admissible including the wrap
//! transition).
//!
//! Periodic orbits are enumerated period first, then lexicographically by
//! their representative, where the representative of an orbit is its
//! lexicographically least rotation.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Symbol = u32;

/// Finite string of symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Word(v)
    }
}

impl From<&[Symbol]> for Word {
    fn from(v: &[Symbol]) -> Self {
        Word(v.to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&s| s < 10) {
            for s in &self.0 {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Accepts either a run of decimal digits (`"0110"`) or dot/comma
    /// separated integers (`"0.12.3"`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Word::empty());
        }
        let parse = |t: &str| {
            t.trim()
                .parse::<Symbol>()
                .map_err(|_| Error::Input(format!("bad symbol {t:?} in word {s:?}")))
        };
        if s.contains('.') || s.contains(',') {
            s.split(['.', ',']).map(parse).collect::<Result<Vec<_>>>().map(Word)
        } else {
            s.chars()
                .map(|c| {
                    c.to_digit(10)
                        .ok_or_else(|| Error::Input(format!("bad symbol {c:?} in word {s:?}")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Word)
        }
    }
}

/// Topological Markov chain: alphabet `{0, .., S-1}` and a 0/1 incidence
/// matrix with no dead symbols.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TmcJson", into = "TmcJson")]
pub struct Tmc {
    incidence: Vec<Vec<bool>>,
}

#[derive(Serialize, Deserialize)]
struct TmcJson {
    #[serde(rename = "S")]
    s: usize,
    incidence: Vec<Vec<u8>>,
}

impl TryFrom<TmcJson> for Tmc {
    type Error = Error;

    fn try_from(j: TmcJson) -> Result<Self> {
        if j.incidence.len() != j.s {
            return Err(Error::Input(format!(
                "S = {} but incidence has {} rows",
                j.s,
                j.incidence.len()
            )));
        }
        Tmc::new(j.incidence)
    }
}

impl From<Tmc> for TmcJson {
    fn from(t: Tmc) -> Self {
        TmcJson { s: t.alphabet_size(), incidence: t.incidence_matrix() }
    }
}

impl Tmc {
    /// Builds a chain from a square 0/1 matrix. Every row and every column
    /// must contain at least one 1.
    pub fn new(incidence: Vec<Vec<u8>>) -> Result<Self> {
        let s = incidence.len();
        if s == 0 {
            return Err(Error::Input("empty incidence matrix".into()));
        }
        let mut rows = Vec::with_capacity(s);
        for (i, row) in incidence.iter().enumerate() {
            if row.len() != s {
                return Err(Error::Input(format!("row {i} has length {}, expected {s}", row.len())));
            }
            let mut r = Vec::with_capacity(s);
            for &e in row {
                match e {
                    0 => r.push(false),
                    1 => r.push(true),
                    _ => return Err(Error::Input(format!("incidence entry {e} is not 0/1"))),
                }
            }
            if !r.iter().any(|&b| b) {
                return Err(Error::Structural(format!("symbol {i} has no successor")));
            }
            rows.push(r);
        }
        for j in 0..s {
            if !rows.iter().any(|r| r[j]) {
                return Err(Error::Structural(format!("symbol {j} has no predecessor")));
            }
        }
        Ok(Tmc { incidence: rows })
    }

    pub fn full_shift(s: usize) -> Self {
        Tmc { incidence: vec![vec![true; s]; s] }
    }

    /// Two symbols, `1 -> 1` forbidden.
    pub fn golden_mean() -> Self {
        Tmc { incidence: vec![vec![true, true], vec![true, false]] }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tmc serialization")
    }

    pub fn alphabet_size(&self) -> usize {
        self.incidence.len()
    }

    pub fn allows(&self, from: Symbol, to: Symbol) -> bool {
        self.incidence[from as usize][to as usize]
    }

    pub fn incidence_matrix(&self) -> Vec<Vec<u8>> {
        self.incidence.iter().map(|r| r.iter().map(|&b| b as u8).collect()).collect()
    }

    /// Wielandt's bound: a primitive `S x S` matrix has `A^N > 0` for some
    /// `N <= (S-1)^2 + 1`.
    pub fn wielandt_bound(&self) -> usize {
        let s = self.alphabet_size();
        (s - 1) * (s - 1) + 1
    }

    fn check_symbols(&self, symbols: &[Symbol]) -> Result<()> {
        let s = self.alphabet_size();
        match symbols.iter().find(|&&x| x as usize >= s) {
            Some(x) => Err(Error::Input(format!("symbol {x} outside alphabet of size {s}"))),
            None => Ok(()),
        }
    }

    /// Boolean product `a * b` of two incidence-shaped matrices.
    fn bool_mul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
        let s = a.len();
        let mut out = vec![vec![false; s]; s];
        for i in 0..s {
            for k in 0..s {
                if a[i][k] {
                    for j in 0..s {
                        out[i][j] |= b[k][j];
                    }
                }
            }
        }
        out
    }

    /// `reach[k][x]` is true iff `x` reaches `target` in exactly `k` steps,
    /// for `k = 0..=max_steps`.
    pub(crate) fn exact_step_reachability(&self, target: Symbol, max_steps: usize) -> Vec<Vec<bool>> {
        let s = self.alphabet_size();
        let mut reach = Vec::with_capacity(max_steps + 1);
        let mut cur = vec![false; s];
        cur[target as usize] = true;
        reach.push(cur.clone());
        for _ in 0..max_steps {
            let next: Vec<bool> = (0..s).map(|x| (0..s).any(|y| self.incidence[x][y] && cur[y])).collect();
            reach.push(next.clone());
            cur = next;
        }
        reach
    }
}

/// True iff every consecutive transition of `word` is allowed.
pub fn is_admissible(word: &Word, tmc: &Tmc) -> Result<bool> {
    tmc.check_symbols(word.symbols())?;
    Ok(word.0.windows(2).all(|w| tmc.allows(w[0], w[1])))
}

/// Least `N <= max_n` with `A^N` entrywise positive.
pub fn aperiodicity_index(tmc: &Tmc, max_n: usize) -> Result<Option<usize>> {
    if max_n == 0 {
        return Err(Error::Input("max_n must be at least 1".into()));
    }
    let mut power = tmc.incidence.clone();
    for n in 1..=max_n {
        if power.iter().all(|r| r.iter().all(|&b| b)) {
            return Ok(Some(n));
        }
        if n < max_n {
            power = Tmc::bool_mul(&power, &tmc.incidence);
        }
    }
    Ok(None)
}

/// Least `p` such that rotating the word by `p` leaves it unchanged.
pub fn minimal_period(word: &Word) -> Result<usize> {
    let w = word.symbols();
    let n = w.len();
    if n == 0 {
        return Err(Error::Input("minimal period of the empty word".into()));
    }
    Ok((1..=n)
        .filter(|p| n.is_multiple_of(*p))
        .find(|&p| (0..n).all(|i| w[i] == w[(i + p) % n]))
        .unwrap_or(n))
}

/// One full minimal period of a periodic orbit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PeriodicWord {
    word: Word,
    minimal_period: usize,
}

impl PeriodicWord {
    /// Accepts any nonempty word whose cyclic closure is admissible; a word
    /// consisting of several copies of its period is reduced to one period.
    pub fn new(word: Word, tmc: &Tmc) -> Result<Self> {
        let p = minimal_period(&word)?;
        if !is_admissible(&word, tmc)? {
            return Err(Error::Input(format!("periodic word {word} is not admissible")));
        }
        let (&first, &last) = (word.0.first().unwrap(), word.0.last().unwrap());
        if !tmc.allows(last, first) {
            return Err(Error::Input(format!("wrap transition of periodic word {word} is forbidden")));
        }
        Ok(PeriodicWord { word: Word(word.0[..p].to_vec()), minimal_period: p })
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn period(&self) -> usize {
        self.minimal_period
    }

    /// Symbol at position `i` of the infinite periodic sequence.
    pub fn symbol_at(&self, i: usize) -> Symbol {
        self.word.0[i % self.minimal_period]
    }

    /// First `len` symbols of the periodic sequence shifted by `shift`.
    pub fn window(&self, shift: usize, len: usize) -> Word {
        Word((0..len).map(|i| self.symbol_at(shift + i)).collect())
    }

    /// The cylinder `[p]_m` around the periodic point.
    pub fn cylinder(&self, m: usize) -> CylinderSpec {
        CylinderSpec { base: self.window(0, m) }
    }

    pub fn rotation(&self, shift: usize) -> PeriodicWord {
        PeriodicWord { word: self.window(shift, self.minimal_period), minimal_period: self.minimal_period }
    }
}

impl fmt::Display for PeriodicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})^inf", self.word)
    }
}

/// All periodic orbits of minimal period `q` having a point in the cylinder
/// `[prefix]`, one per orbit, sorted lexicographically.
///
/// The representative of an orbit is its lexicographically least rotation
/// among those starting with `prefix`; for the empty prefix this is the
/// least rotation overall. The prefix must fit inside one period.
pub fn enumerate_periodic_words(tmc: &Tmc, q: usize, prefix: &Word) -> Result<Vec<PeriodicWord>> {
    if q == 0 {
        return Err(Error::Precondition("period must be positive".into()));
    }
    if !is_admissible(prefix, tmc)? {
        return Err(Error::Precondition(format!("prefix {prefix} is not admissible")));
    }
    if prefix.len() > q {
        return Err(Error::Precondition(format!(
            "period {q} is too small for a prefix of length {}",
            prefix.len()
        )));
    }
    let mut buf: Vec<Symbol> = prefix.0.clone();
    let mut out = Vec::new();
    extend_cyclic(tmc, q, prefix.symbols(), &mut buf, &mut out);
    Ok(out)
}

fn extend_cyclic(tmc: &Tmc, q: usize, prefix: &[Symbol], buf: &mut Vec<Symbol>, out: &mut Vec<PeriodicWord>) {
    if buf.len() == q {
        if !tmc.allows(buf[q - 1], buf[0]) {
            return;
        }
        let word = Word(buf.clone());
        if minimal_period(&word).ok() != Some(q) {
            return;
        }
        if is_representative(buf, prefix) {
            out.push(PeriodicWord { word, minimal_period: q });
        }
        return;
    }
    for s in 0..tmc.alphabet_size() as Symbol {
        if buf.last().is_none_or(|&l| tmc.allows(l, s)) {
            buf.push(s);
            extend_cyclic(tmc, q, prefix, buf, out);
            buf.pop();
        }
    }
}

fn is_representative(w: &[Symbol], prefix: &[Symbol]) -> bool {
    let q = w.len();
    let at = |r: usize, i: usize| w[(r + i) % q];
    for r in 1..q {
        if !(0..prefix.len()).all(|i| at(r, i) == prefix[i]) {
            continue;
        }
        let mut ord = Ordering::Equal;
        for i in 0..q {
            ord = at(r, i).cmp(&w[i]);
            if ord != Ordering::Equal {
                break;
            }
        }
        if ord == Ordering::Less {
            return false;
        }
    }
    true
}

/// Lazily extended list `p_1, p_2, ...` of all periodic orbits, ordered by
/// period and then lexicographically.
#[derive(Clone, Debug)]
pub struct PeriodicEnumeration {
    tmc: Tmc,
    words: Vec<PeriodicWord>,
    next_period: usize,
    max_period: usize,
}

impl PeriodicEnumeration {
    pub fn new(tmc: &Tmc) -> Self {
        PeriodicEnumeration { tmc: tmc.clone(), words: Vec::new(), next_period: 1, max_period: 40 }
    }

    /// The `h`-th periodic orbit, 1-based.
    pub fn get(&mut self, h: usize) -> Result<&PeriodicWord> {
        if h == 0 {
            return Err(Error::Input("periodic orbits are indexed from 1".into()));
        }
        while self.words.len() < h {
            if self.next_period > self.max_period {
                return Err(Error::Resource(format!(
                    "periodic orbit #{h} lies beyond period {}",
                    self.max_period
                )));
            }
            let level = enumerate_periodic_words(&self.tmc, self.next_period, &Word::empty())?;
            self.words.extend(level);
            self.next_period += 1;
        }
        Ok(&self.words[h - 1])
    }

    /// Position (1-based) of the orbit of `p` in the enumeration.
    pub fn index_of(&mut self, p: &PeriodicWord) -> Result<usize> {
        let canon = canonical_rotation(p);
        let mut h = 1;
        loop {
            let w = self.get(h)?;
            if w.period() > p.period() {
                return Err(Error::Input(format!("{p} is not an orbit of this chain")));
            }
            if *w == canon {
                return Ok(h);
            }
            h += 1;
        }
    }

    pub fn known(&self) -> &[PeriodicWord] {
        &self.words
    }
}

/// Lexicographically least rotation.
pub fn canonical_rotation(p: &PeriodicWord) -> PeriodicWord {
    (0..p.period()).map(|r| p.rotation(r)).min_by(|a, b| a.word.cmp(&b.word)).unwrap()
}

/// Cylinder `[a]_m`: all admissible sequences starting with `base`. The
/// empty base is the whole space (generation 0).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CylinderSpec {
    pub base: Word,
}

impl CylinderSpec {
    pub fn new(base: Word, tmc: &Tmc) -> Result<Self> {
        if !is_admissible(&base, tmc)? {
            return Err(Error::Input(format!("cylinder base {base} is not admissible")));
        }
        Ok(CylinderSpec { base })
    }

    /// Cylinder without an admissibility check, for callers that already
    /// hold an admissible word.
    pub fn from_word(base: Word) -> Self {
        CylinderSpec { base }
    }

    pub fn whole_space() -> Self {
        CylinderSpec { base: Word::empty() }
    }

    pub fn generation(&self) -> usize {
        self.base.len()
    }

    /// Whether a sequence starting with `seq` lies in the cylinder.
    pub fn contains(&self, seq: &[Symbol]) -> bool {
        seq.len() >= self.base.len() && seq[..self.base.len()] == self.base.0[..]
    }

    pub fn is_disjoint_from(&self, other: &CylinderSpec) -> bool {
        let n = self.generation().min(other.generation());
        self.base.0[..n] != other.base.0[..n]
    }
}

impl fmt::Display for CylinderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]_{}", self.base, self.generation())
    }
}

/// Generation-`g` cylinders contained in `cyl`, in lexicographic order.
pub fn subcylinders(cyl: &CylinderSpec, g: usize, tmc: &Tmc) -> Result<Vec<CylinderSpec>> {
    if g < cyl.generation() {
        return Err(Error::Precondition(format!(
            "target generation {g} is below cylinder generation {}",
            cyl.generation()
        )));
    }
    if !is_admissible(&cyl.base, tmc)? {
        return Err(Error::Input(format!("cylinder base {} is not admissible", cyl.base)));
    }
    let mut out = Vec::new();
    let mut buf = cyl.base.0.clone();
    extend_linear(tmc, g, &mut buf, &mut out);
    Ok(out)
}

fn extend_linear(tmc: &Tmc, g: usize, buf: &mut Vec<Symbol>, out: &mut Vec<CylinderSpec>) {
    if buf.len() == g {
        out.push(CylinderSpec { base: Word(buf.clone()) });
        return;
    }
    for s in 0..tmc.alphabet_size() as Symbol {
        if buf.last().is_none_or(|&l| tmc.allows(l, s)) {
            buf.push(s);
            extend_linear(tmc, g, buf, out);
            buf.pop();
        }
    }
}

/// All admissible words of length `g`.
pub fn admissible_words(tmc: &Tmc, g: usize) -> Vec<Word> {
    subcylinders(&CylinderSpec::whole_space(), g, tmc)
        .expect("whole space is admissible")
        .into_iter()
        .map(|c| c.base)
        .collect()
}

/// A real number evaluated from a finite prefix of an infinite coding,
/// with a bound on the distance to any completion of the prefix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodedReal {
    pub value: f64,
    pub truncation_error: f64,
}

impl CodedReal {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.truncation_error + 4.0 * f64::EPSILON
    }
}

/// `sum digits[i] * b^-(i+1)`; any infinite continuation of the digits
/// lies within `b^-len` above the returned value.
pub fn encode_base_b(digits: &[Symbol], b: u32) -> Result<CodedReal> {
    if b < 2 {
        return Err(Error::Input(format!("base {b} must be at least 2")));
    }
    if let Some(d) = digits.iter().find(|&&d| d >= b) {
        return Err(Error::Input(format!("digit {d} out of range for base {b}")));
    }
    let bf = b as f64;
    let value = digits.iter().rev().fold(0.0, |acc, &d| (acc + d as f64) / bf);
    let truncation_error = bf.powi(-(digits.len().min(i32::MAX as usize) as i32));
    Ok(CodedReal { value, truncation_error })
}

/// Finite continued fraction `[0; a_1, ..., a_n]`. The error bound is the
/// length of the continued-fraction cylinder of the prefix.
pub fn gauss_value(partial_quotients: &[u64]) -> Result<CodedReal> {
    if partial_quotients.is_empty() {
        return Err(Error::Input("continued fraction needs at least one partial quotient".into()));
    }
    if let Some(a) = partial_quotients.iter().find(|&&a| a < 1) {
        return Err(Error::Input(format!("partial quotient {a} must be at least 1")));
    }
    let value = partial_quotients.iter().rev().fold(0.0, |acc, &a| 1.0 / (a as f64 + acc));
    // continuants q_n = a_n q_{n-1} + q_{n-2}
    let (mut q_prev, mut q) = (0.0f64, 1.0f64);
    for &a in partial_quotients {
        let next = a as f64 * q + q_prev;
        q_prev = q;
        q = next;
    }
    Ok(CodedReal { value, truncation_error: 1.0 / (q * (q + q_prev)) })
}
