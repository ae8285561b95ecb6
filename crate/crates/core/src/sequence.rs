//! Truncated sequences, index sets and lacunary block schemes.
//!
//! Everything here is 1-indexed: `x_1..x_N`, index sets are subsets of
//! `{1, 2, ...}` and block `r` of a scheme is the integer interval
//! `(k_{r-1}, k_r]`.

use std::fmt;
use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

pub type Predicate = Arc<dyn Fn(usize) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum IndexSource {
    All,
    Evens,
    Odds,
    Squares,
    /// `{start, start + step, start + 2 step, ...}`
    Arith { start: usize, step: usize },
    /// Finite set, sorted and deduplicated.
    List(Arc<[usize]>),
    Predicate { name: String, test: Predicate },
}

impl fmt::Debug for IndexSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSource::All => write!(f, "All"),
            IndexSource::Evens => write!(f, "Evens"),
            IndexSource::Odds => write!(f, "Odds"),
            IndexSource::Squares => write!(f, "Squares"),
            IndexSource::Arith { start, step } => write!(f, "Arith({start}, {step})"),
            IndexSource::List(items) => write!(f, "List(len={})", items.len()),
            IndexSource::Predicate { name, .. } => write!(f, "Predicate({name})"),
        }
    }
}

/// A subset of the natural numbers with prefix counting `|A(n)|`.
#[derive(Debug, Clone)]
pub struct IndexSet {
    source: IndexSource,
    n_max: usize,
}

impl IndexSet {
    pub fn all() -> Self {
        Self::builtin(IndexSource::All)
    }

    pub fn evens() -> Self {
        Self::builtin(IndexSource::Evens)
    }

    pub fn odds() -> Self {
        Self::builtin(IndexSource::Odds)
    }

    pub fn squares() -> Self {
        Self::builtin(IndexSource::Squares)
    }

    pub fn arith(start: usize, step: usize) -> Result<Self> {
        if start == 0 || step == 0 {
            return Err(Error::Invalid(format!(
                "arithmetic set needs start >= 1 and step >= 1, got ({start}, {step})"
            )));
        }
        Ok(Self::builtin(IndexSource::Arith { start, step }))
    }

    /// Finite set from an arbitrary list; the list is sorted and deduplicated.
    pub fn from_list(mut items: Vec<usize>) -> Result<Self> {
        if items.contains(&0) {
            return Err(Error::Invalid("index sets are 1-indexed; 0 is not allowed".into()));
        }
        items.sort_unstable();
        items.dedup();
        Ok(Self::builtin(IndexSource::List(items.into())))
    }

    /// Set given by a membership test, materialisable up to `n_max`.
    pub fn from_predicate(
        name: impl Into<String>,
        n_max: usize,
        test: impl Fn(usize) -> bool + Send + Sync + 'static,
    ) -> Self {
        IndexSet {
            source: IndexSource::Predicate {
                name: name.into(),
                test: Arc::new(test),
            },
            n_max,
        }
    }

    fn builtin(source: IndexSource) -> Self {
        IndexSet {
            source,
            n_max: usize::MAX,
        }
    }

    pub fn source(&self) -> &IndexSource {
        &self.source
    }

    /// Largest index that may be materialised.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn contains(&self, i: usize) -> bool {
        if i == 0 {
            return false;
        }
        match &self.source {
            IndexSource::All => true,
            IndexSource::Evens => i % 2 == 0,
            IndexSource::Odds => i % 2 == 1,
            IndexSource::Squares => {
                let r = i.isqrt();
                r * r == i
            }
            IndexSource::Arith { start, step } => i >= *start && (i - start) % step == 0,
            IndexSource::List(items) => items.binary_search(&i).is_ok(),
            IndexSource::Predicate { test, .. } => test(i),
        }
    }

    /// `|A(n)| = #{i in A : i <= n}`.
    pub fn count(&self, n: usize) -> usize {
        match &self.source {
            IndexSource::All => n,
            IndexSource::Evens => n / 2,
            IndexSource::Odds => n.div_ceil(2),
            IndexSource::Squares => n.isqrt(),
            IndexSource::Arith { start, step } => {
                if n < *start {
                    0
                } else {
                    (n - start) / step + 1
                }
            }
            IndexSource::List(items) => items.partition_point(|&i| i <= n),
            IndexSource::Predicate { test, .. } => (1..=n).filter(|&i| test(i)).count(),
        }
    }

    /// Prefix count of the complement `N \ A`.
    pub fn count_complement(&self, n: usize) -> usize {
        n - self.count(n)
    }

    /// All members `<= upto`, strictly increasing.
    pub fn materialize(&self, upto: usize) -> Result<Vec<usize>> {
        if upto > self.n_max {
            return Err(Error::OutOfRange {
                index: upto,
                max: self.n_max,
            });
        }
        Ok(match &self.source {
            IndexSource::List(items) => items[..items.partition_point(|&i| i <= upto)].to_vec(),
            IndexSource::Squares => (1..=upto.isqrt()).map(|r| r * r).collect(),
            _ => (1..=upto).filter(|&i| self.contains(i)).collect(),
        })
    }

    /// Prefix counts `|A(1)|, ..., |A(n)|` in one pass.
    pub fn prefix_counts(&self, n: usize) -> Vec<usize> {
        let mut acc = 0;
        (1..=n)
            .map(|i| {
                if self.contains(i) {
                    acc += 1;
                }
                acc
            })
            .collect()
    }

    pub fn describe(&self) -> String {
        match &self.source {
            IndexSource::All => "all".into(),
            IndexSource::Evens => "evens".into(),
            IndexSource::Odds => "odds".into(),
            IndexSource::Squares => "squares".into(),
            IndexSource::Arith { start, step } => format!("arith:{start},{step}"),
            IndexSource::List(items) => format!("list[{}]", items.len()),
            IndexSource::Predicate { name, .. } => format!("predicate:{name}"),
        }
    }
}

/// Parses a set spec: `all`, `evens`, `odds`, `squares`, `arith:a,d`,
/// `list:1,4,9` or `file:PATH` (one index per line).
pub fn make_index_set(spec: &str) -> Result<IndexSet> {
    let spec = spec.trim();
    let (head, arg) = split_spec(spec);
    match (head, arg) {
        ("all", None) => Ok(IndexSet::all()),
        ("evens", None) => Ok(IndexSet::evens()),
        ("odds", None) => Ok(IndexSet::odds()),
        ("squares", None) => Ok(IndexSet::squares()),
        ("arith", Some(arg)) => {
            let parts = parse_list::<usize>(spec, arg)?;
            match parts.as_slice() {
                [a, d] => IndexSet::arith(*a, *d).map_err(|e| Error::spec(spec, e.to_string())),
                _ => Err(Error::spec(spec, "expected `arith:a,d`")),
            }
        }
        ("list", Some(arg)) => {
            let items = parse_list::<usize>(spec, arg)?;
            IndexSet::from_list(items).map_err(|e| Error::spec(spec, e.to_string()))
        }
        ("file", Some(path)) => {
            let items = read_lines::<usize>(Path::new(path))?;
            if items.is_empty() {
                return Err(Error::spec(spec, "index file is empty"));
            }
            IndexSet::from_list(items).map_err(|e| Error::spec(spec, e.to_string()))
        }
        _ => Err(Error::spec(spec, "unknown set spec")),
    }
}

/// The first `N` terms of a real sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequencePrefix {
    values: Vec<f64>,
    label: String,
}

impl SequencePrefix {
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid("a sequence prefix needs N >= 1".into()));
        }
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: k + 1,
                value: *v,
            });
        }
        Ok(SequencePrefix {
            values,
            label: label.into(),
        })
    }

    /// Builds `x_i = term(i)` for `i = 1..=n`.
    pub fn from_fn(n: usize, label: impl Into<String>, term: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new((1..=n).map(term).collect(), label)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `x_i`, 1-indexed.
    pub fn get(&self, i: usize) -> Option<f64> {
        i.checked_sub(1).and_then(|k| self.values.get(k)).copied()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Parses a sequence spec into a prefix of length `n`.
///
/// Forms: `const:c`, `list:v1,v2,...`, `spike:set=SPEC,base=b,delta=d`,
/// `alternating` (0, 1, 0, 1, ...), `harmonic[:L]` (`L + 1/i`), `signs`
/// (`(-1)^i`), and `file:PATH` (CSV with header `i,value`). `list:` and
/// `file:` carry their own length and ignore `n`.
pub fn make_sequence(spec: &str, n: usize) -> Result<SequencePrefix> {
    let spec = spec.trim();
    let (head, arg) = split_spec(spec);
    if n == 0 && !matches!(head, "list" | "file") {
        return Err(Error::spec(spec, "truncation must be >= 1"));
    }
    match (head, arg) {
        ("const", Some(arg)) => {
            let c = parse_num::<f64>(spec, arg)?;
            SequencePrefix::from_fn(n, spec, |_| c)
        }
        ("list", Some(arg)) => SequencePrefix::new(parse_list::<f64>(spec, arg)?, spec),
        ("alternating", None) => SequencePrefix::from_fn(n, spec, |i| (i % 2 == 0) as u8 as f64),
        ("signs", None) => SequencePrefix::from_fn(n, spec, |i| if i % 2 == 0 { 1.0 } else { -1.0 }),
        ("harmonic", arg) => {
            let l = arg.map(|a| parse_num::<f64>(spec, a)).transpose()?.unwrap_or(0.0);
            SequencePrefix::from_fn(n, spec, |i| l + 1.0 / i as f64)
        }
        ("spike", Some(arg)) => {
            let opts = parse_options(arg);
            let mut set = None;
            let mut base = 0.0;
            let mut delta = 1.0;
            for (k, v) in &opts {
                match k.as_str() {
                    "set" => set = Some(make_index_set(v)?),
                    "base" => base = parse_num(spec, v)?,
                    "delta" => delta = parse_num(spec, v)?,
                    other => return Err(Error::spec(spec, format!("unknown spike option `{other}`"))),
                }
            }
            let set = set.ok_or_else(|| Error::spec(spec, "spike needs `set=`"))?;
            SequencePrefix::from_fn(n, spec, |i| if set.contains(i) { base + delta } else { base })
        }
        ("file", Some(path)) => read_sequence_csv(Path::new(path)).map(|s| s.with_label(spec)),
        _ => Err(Error::spec(spec, "unknown sequence spec")),
    }
}

/// Reads a CSV with header `i,value`; indices must run 1, 2, 3, ... without gaps.
pub fn read_sequence_csv(path: &Path) -> Result<SequencePrefix> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parse_err = |line: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.replace(' ', "") == "i,value" => {}
        Some((n, _)) => return Err(parse_err(n + 1, "expected header `i,value`".into())),
        None => return Err(parse_err(1, "empty sequence file".into())),
    }
    let mut values = Vec::new();
    for (n, line) in lines {
        let (i, v) = line
            .split_once(',')
            .ok_or_else(|| parse_err(n + 1, "expected `i,value`".into()))?;
        let i: usize = i
            .trim()
            .parse()
            .map_err(|_| parse_err(n + 1, format!("bad index `{}`", i.trim())))?;
        if i != values.len() + 1 {
            return Err(parse_err(
                n + 1,
                format!("expected index {}, found {i} (gaps are not allowed)", values.len() + 1),
            ));
        }
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| parse_err(n + 1, format!("bad value `{}`", v.trim())))?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    SequencePrefix::new(values, path.display().to_string())
}

/// Cut points `0 = k_0 < k_1 < ... < k_R` of a lacunary sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LacunaryScheme {
    cuts: Vec<usize>,
}

impl LacunaryScheme {
    /// Accepts cuts with or without the leading `k_0 = 0`.
    pub fn from_cuts(cuts: &[usize]) -> Result<Self> {
        let rest = cuts.strip_prefix(&[0]).unwrap_or(cuts);
        let mut all = Vec::with_capacity(rest.len() + 1);
        all.push(0);
        all.extend_from_slice(rest);
        if all.len() < 2 {
            return Err(Error::Invalid("a scheme needs at least one block".into()));
        }
        if let Some(w) = all.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Invalid(format!(
                "cuts must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
        Ok(LacunaryScheme { cuts: all })
    }

    /// `k_r = 2^r`.
    pub fn powers2(blocks: usize) -> Result<Self> {
        if blocks == 0 || blocks >= usize::BITS as usize - 1 {
            return Err(Error::Invalid(format!("powers2 needs 1 <= R < 63, got {blocks}")));
        }
        Self::from_cuts(&(1..=blocks).map(|r| 1usize << r).collect::<Vec<_>>())
    }

    /// `k_r = max(k_{r-1} + 1, ceil(q^r))`.
    pub fn geometric(q: f64, blocks: usize) -> Result<Self> {
        if !(q > 1.0) || !q.is_finite() {
            return Err(Error::Invalid(format!("geometric ratio must be > 1, got {q}")));
        }
        if blocks == 0 {
            return Err(Error::Invalid("a scheme needs at least one block".into()));
        }
        let mut cuts = Vec::with_capacity(blocks);
        let mut prev = 0usize;
        for r in 1..=blocks {
            let target = q.powi(r as i32).ceil();
            if target >= 2f64.powi(53) {
                return Err(Error::Invalid(format!("geometric:{q} overflows at block {r}")));
            }
            prev = (prev + 1).max(target as usize);
            cuts.push(prev);
        }
        Self::from_cuts(&cuts)
    }

    /// Number of blocks `R`.
    pub fn blocks(&self) -> usize {
        self.cuts.len() - 1
    }

    /// All cuts including `k_0 = 0`.
    pub fn cuts(&self) -> &[usize] {
        &self.cuts
    }

    /// `k_r`.
    pub fn cut(&self, r: usize) -> usize {
        self.cuts[r]
    }

    /// `k_R`, the last covered index.
    pub fn end(&self) -> usize {
        *self.cuts.last().expect("scheme has cuts")
    }

    /// `h_r = k_r - k_{r-1}` for `1 <= r <= R`.
    pub fn h(&self, r: usize) -> usize {
        self.cuts[r] - self.cuts[r - 1]
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.cuts.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `J_r = (k_{r-1}, k_r]`.
    pub fn block(&self, r: usize) -> RangeInclusive<usize> {
        self.cuts[r - 1] + 1..=self.cuts[r]
    }

    /// `phi_r = k_r / k_{r-1}`, defined for `r >= 2`.
    pub fn phi(&self, r: usize) -> Option<f64> {
        (r >= 2 && r <= self.blocks()).then(|| self.cuts[r] as f64 / self.cuts[r - 1] as f64)
    }

    /// The unique `r` with `i` in `J_r`.
    pub fn block_of(&self, i: usize) -> Result<usize> {
        if i == 0 || i > self.end() {
            return Err(Error::OutOfRange {
                index: i,
                max: self.end(),
            });
        }
        Ok(self.cuts.partition_point(|&k| k < i))
    }

    /// Errors unless the scheme fits inside a prefix of length `n`.
    pub fn require_within(&self, n: usize) -> Result<()> {
        if self.end() > n {
            return Err(Error::SchemeBeyondTruncation {
                needed: self.end(),
                have: n,
            });
        }
        Ok(())
    }
}

/// Parses a theta spec: `powers2`, `geometric:q`, `explicit:k1,k2,...` or
/// `file:PATH`. Generated schemes have exactly `blocks` blocks; explicit and
/// file schemes are capped at `blocks`.
pub fn make_lacunary(spec: &str, blocks: usize) -> Result<LacunaryScheme> {
    let spec = spec.trim();
    let (head, arg) = split_spec(spec);
    let wrap = |e: Error| Error::spec(spec, e.to_string());
    match (head, arg) {
        ("powers2", None) => LacunaryScheme::powers2(blocks).map_err(wrap),
        ("geometric", Some(arg)) => LacunaryScheme::geometric(parse_num(spec, arg)?, blocks).map_err(wrap),
        ("explicit", Some(arg)) => {
            let cuts = parse_list::<usize>(spec, arg)?;
            capped(LacunaryScheme::from_cuts(&cuts).map_err(wrap)?, blocks)
        }
        ("file", Some(path)) => {
            let cuts = read_lines::<usize>(Path::new(path))?;
            if cuts.is_empty() {
                return Err(Error::spec(spec, "cut file is empty"));
            }
            capped(LacunaryScheme::from_cuts(&cuts).map_err(wrap)?, blocks)
        }
        _ => Err(Error::spec(spec, "unknown theta spec")),
    }
}

fn capped(scheme: LacunaryScheme, blocks: usize) -> Result<LacunaryScheme> {
    if blocks == 0 || blocks >= scheme.blocks() {
        return Ok(scheme);
    }
    LacunaryScheme::from_cuts(&scheme.cuts[..=blocks])
}

pub(crate) fn split_spec(spec: &str) -> (&str, Option<&str>) {
    match spec.split_once(':') {
        Some((h, a)) => (h.trim(), Some(a.trim())),
        None => (spec.trim(), None),
    }
}

pub(crate) fn parse_num<T: std::str::FromStr>(spec: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::spec(spec, format!("cannot parse `{}`", s.trim())))
}

pub(crate) fn parse_list<T: std::str::FromStr>(spec: &str, s: &str) -> Result<Vec<T>> {
    let items: Vec<T> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_num(spec, t))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::spec(spec, "empty list"));
    }
    Ok(items)
}

/// Splits `k1=v1,k2=v2` where values may themselves contain commas
/// (`set=arith:3,5,base=2`): a token without `=` continues the previous value.
pub(crate) fn parse_options(s: &str) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for tok in s.split(',') {
        match tok.split_once('=') {
            Some((k, v)) => out.push((k.trim().to_string(), v.trim().to_string())),
            None => {
                if let Some(last) = out.last_mut() {
                    last.1.push(',');
                    last.1.push_str(tok.trim());
                }
            }
        }
    }
    out
}

pub(crate) fn read_lines<T: std::str::FromStr>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            l.trim().parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                reason: format!("cannot parse `{}`", l.trim()),
            })
        })
        .collect()
}
