//! Exact item sizes, instances and the online packing state.
//!
//! Every size is an integer numerator over a per-instance denominator (the bin
//! capacity), so feasibility checks never round.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{ModelError, ParseError};

/// Denominator used when continuous sizes are quantized.
pub const CONTINUOUS_DEN: u64 = 1_000_000_000;

/// An item size, as a numerator over the capacity of the instance it belongs to.
///
/// Valid sizes satisfy `0 < value <= capacity`. A size equal to the capacity is a
/// full-bin item; those only arise from the `F^{-1}(1) = 1` quantile convention
/// and from ground-set padding.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
pub struct Size(u64);

impl Size {
    pub fn new(value: u64, capacity: u64) -> Result<Self, ModelError> {
        if value == 0 || value > capacity {
            return Err(ModelError::InvalidSize { value, capacity });
        }
        Ok(Size(value))
    }

    /// Builds a size without checking it against a capacity.
    pub(crate) const fn raw(value: u64) -> Self {
        Size(value)
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite multiset of sizes together with the bin capacity.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Instance {
    capacity: u64,
    sizes: Vec<Size>,
}

impl Instance {
    pub fn new(capacity: u64, values: impl IntoIterator<Item = u64>) -> Result<Self, ModelError> {
        if capacity == 0 {
            return Err(ModelError::ZeroCapacity);
        }
        let sizes = values
            .into_iter()
            .map(|v| Size::new(v, capacity))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Instance { capacity, sizes })
    }

    pub fn empty(capacity: u64) -> Self {
        Instance {
            capacity,
            sizes: Vec::new(),
        }
    }

    pub(crate) fn from_sizes_unchecked(capacity: u64, sizes: Vec<Size>) -> Self {
        debug_assert!(sizes.iter().all(|s| s.0 > 0 && s.0 <= capacity));
        Instance { capacity, sizes }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn sizes(&self) -> &[Size] {
        &self.sizes
    }

    pub fn values(&self) -> impl Iterator<Item = u64> + '_ {
        self.sizes.iter().map(|s| s.0)
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn total_size(&self) -> u128 {
        self.sizes.iter().map(|s| s.0 as u128).sum()
    }

    /// `ceil(sum of sizes / capacity)`.
    pub fn volume_bound(&self) -> usize {
        let c = self.capacity as u128;
        self.total_size().div_ceil(c) as usize
    }

    /// The first `n` items (or all of them).
    pub fn prefix(&self, n: usize) -> Instance {
        Instance {
            capacity: self.capacity,
            sizes: self.sizes[..n.min(self.sizes.len())].to_vec(),
        }
    }

    pub fn push(&mut self, size: Size) -> Result<(), ModelError> {
        if size.0 == 0 || size.0 > self.capacity {
            return Err(ModelError::InvalidSize {
                value: size.0,
                capacity: self.capacity,
            });
        }
        self.sizes.push(size);
        Ok(())
    }

    pub fn sorted(&self) -> Instance {
        let mut sizes = self.sizes.clone();
        sizes.sort_unstable();
        Instance {
            capacity: self.capacity,
            sizes,
        }
    }

    /// Distinct sizes ascending with their multiplicities.
    pub fn size_counts(&self) -> Vec<(Size, usize)> {
        let mut counts: BTreeMap<Size, usize> = BTreeMap::new();
        for &s in &self.sizes {
            *counts.entry(s).or_default() += 1;
        }
        counts.into_iter().collect()
    }

    /// Concatenation of two instances over the same capacity.
    pub fn union(&self, other: &Instance) -> Result<Instance, ModelError> {
        if self.capacity != other.capacity {
            return Err(ModelError::CapacityMismatch {
                left: self.capacity,
                right: other.capacity,
            });
        }
        let mut sizes = self.sizes.clone();
        sizes.extend_from_slice(&other.sizes);
        Ok(Instance {
            capacity: self.capacity,
            sizes,
        })
    }

    /// Writes the plain-text instance format: `capacity <DEN>` then one value per line.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "capacity {}", self.capacity)?;
        for s in &self.sizes {
            writeln!(w, "{}", s.0)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Instance, ParseError> {
        let mut lines = r.lines().enumerate();
        let capacity = loop {
            let Some((no, line)) = lines.next() else {
                return Err(ParseError::Syntax {
                    line: 1,
                    msg: "missing capacity header".into(),
                });
            };
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let rest = line
                .strip_prefix("capacity")
                .ok_or_else(|| ParseError::Syntax {
                    line: no + 1,
                    msg: "expected `capacity <DEN>`".into(),
                })?;
            break rest.trim().parse::<u64>().map_err(|e| ParseError::Syntax {
                line: no + 1,
                msg: format!("bad capacity: {e}"),
            })?;
        };
        let mut values = Vec::new();
        for (no, line) in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let v = line.parse::<u64>().map_err(|e| ParseError::Syntax {
                line: no + 1,
                msg: format!("bad size: {e}"),
            })?;
            values.push(v);
        }
        Ok(Instance::new(capacity, values)?)
    }

    pub fn from_text(text: &str) -> Result<Instance, ParseError> {
        Instance::read_from(text.as_bytes())
    }
}

/// Where the next item goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Placement {
    ExistingBin(usize),
    NewBin,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Bin {
    pub load: u64,
    pub items: Vec<usize>,
}

/// Open bins of an online run.
///
/// Bins are append-only: full bins stay in the list so indices remain stable.
/// `levels` indexes the bins that are neither empty nor full by their load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackingState {
    capacity: u64,
    pub(crate) bins: Vec<Bin>,
    pub(crate) levels: BTreeMap<u64, BTreeSet<usize>>,
    opened_total: usize,
    placed: usize,
}

/// First inconsistency found by [`PackingState::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    BinOverCapacity {
        bin: usize,
        load: u64,
    },
    LoadMismatch {
        bin: usize,
        recorded: u64,
        recomputed: u64,
    },
    EmptyBin {
        bin: usize,
    },
    Histogram {
        level: u64,
        recorded: usize,
        recomputed: usize,
    },
    OpenedTotal {
        recorded: usize,
        bins: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BinOverCapacity { bin, load } => {
                write!(f, "bin {bin} has load {load} above capacity")
            }
            Violation::LoadMismatch {
                bin,
                recorded,
                recomputed,
            } => {
                write!(
                    f,
                    "bin {bin} records load {recorded} but its items sum to {recomputed}"
                )
            }
            Violation::EmptyBin { bin } => write!(f, "bin {bin} holds no items"),
            Violation::Histogram {
                level,
                recorded,
                recomputed,
            } => {
                write!(
                    f,
                    "level {level} records {recorded} bins but {recomputed} bins sit there"
                )
            }
            Violation::OpenedTotal { recorded, bins } => {
                write!(f, "opened_total {recorded} differs from bin count {bins}")
            }
        }
    }
}

impl PackingState {
    pub fn new(capacity: u64) -> Self {
        PackingState {
            capacity,
            bins: Vec::new(),
            levels: BTreeMap::new(),
            opened_total: 0,
            placed: 0,
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    /// Number of bins opened so far (every opened bin holds at least one item).
    pub fn bins_used(&self) -> usize {
        self.opened_total
    }

    pub fn items_placed(&self) -> usize {
        self.placed
    }

    /// `N(h)`: bins with load exactly `h`, for `0 < h < capacity`.
    pub fn level_count(&self, level: u64) -> usize {
        self.levels.get(&level).map_or(0, BTreeSet::len)
    }

    /// Nonempty, non-full levels ascending with their bin counts.
    pub fn level_histogram(&self) -> impl Iterator<Item = (u64, usize)> + '_ {
        self.levels.iter().map(|(&h, set)| (h, set.len()))
    }

    /// Lowest-index bin at load `level`.
    pub fn first_bin_at_level(&self, level: u64) -> Option<usize> {
        self.levels.get(&level).and_then(|set| set.first().copied())
    }

    /// Fullest partially-filled bin that can still take `size`, lowest index among ties.
    pub fn fullest_bin_fitting(&self, size: Size) -> Option<usize> {
        let max_level = self.capacity.checked_sub(size.0)?;
        self.levels
            .range(..=max_level)
            .next_back()
            .and_then(|(_, set)| set.first().copied())
    }

    pub fn residual(&self, bin: usize) -> Option<u64> {
        self.bins.get(bin).map(|b| self.capacity - b.load)
    }

    /// Places the next arriving item and returns the index of the bin it went to.
    pub fn place(&mut self, size: Size, placement: Placement) -> Result<usize, ModelError> {
        if size.0 == 0 || size.0 > self.capacity {
            return Err(ModelError::InvalidSize {
                value: size.0,
                capacity: self.capacity,
            });
        }
        let item = self.placed;
        let index = match placement {
            Placement::NewBin => {
                self.bins.push(Bin {
                    load: 0,
                    items: Vec::new(),
                });
                self.opened_total += 1;
                self.bins.len() - 1
            }
            Placement::ExistingBin(index) => {
                let bin = self.bins.get(index).ok_or(ModelError::BadIndex {
                    index,
                    bins: self.bins.len(),
                })?;
                if bin.load + size.0 > self.capacity {
                    return Err(ModelError::CapacityExceeded {
                        bin: index,
                        load: bin.load,
                        size: size.0,
                        capacity: self.capacity,
                    });
                }
                index
            }
        };
        let old = self.bins[index].load;
        self.unindex(index, old);
        let bin = &mut self.bins[index];
        bin.load += size.0;
        bin.items.push(item);
        let new = bin.load;
        self.index(index, new);
        self.placed += 1;
        Ok(index)
    }

    fn unindex(&mut self, bin: usize, load: u64) {
        if let Some(set) = self.levels.get_mut(&load) {
            set.remove(&bin);
            if set.is_empty() {
                self.levels.remove(&load);
            }
        }
    }

    fn index(&mut self, bin: usize, load: u64) {
        if load > 0 && load < self.capacity {
            self.levels.entry(load).or_default().insert(bin);
        }
    }

    /// Recomputes loads and the level histogram from scratch, given the sizes of the
    /// placed items in arrival order.
    pub fn validate(&self, item_sizes: &[Size]) -> Result<(), Violation> {
        if self.opened_total != self.bins.len() {
            return Err(Violation::OpenedTotal {
                recorded: self.opened_total,
                bins: self.bins.len(),
            });
        }
        let mut recount: BTreeMap<u64, usize> = BTreeMap::new();
        for (i, bin) in self.bins.iter().enumerate() {
            if bin.load > self.capacity {
                return Err(Violation::BinOverCapacity {
                    bin: i,
                    load: bin.load,
                });
            }
            if bin.items.is_empty() {
                return Err(Violation::EmptyBin { bin: i });
            }
            let sum: u64 = bin
                .items
                .iter()
                .map(|&id| item_sizes.get(id).map_or(0, |s| s.0))
                .sum();
            if sum != bin.load {
                return Err(Violation::LoadMismatch {
                    bin: i,
                    recorded: bin.load,
                    recomputed: sum,
                });
            }
            if bin.load > 0 && bin.load < self.capacity {
                *recount.entry(bin.load).or_default() += 1;
            }
        }
        let levels: BTreeSet<u64> = recount.keys().chain(self.levels.keys()).copied().collect();
        for level in levels {
            let recorded = self.level_count(level);
            let recomputed = recount.get(&level).copied().unwrap_or(0);
            if recorded != recomputed {
                return Err(Violation::Histogram {
                    level,
                    recorded,
                    recomputed,
                });
            }
        }
        Ok(())
    }
}
