use crate::error::OracleError;
use crate::model::Size;

/// Refusal threshold for [`enumerate_configurations`].
pub const CONFIG_HARD_LIMIT: usize = 1_000_000;

/// Multiplicity of each distinct size (ascending) in one bin.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub counts: Vec<u32>,
}

impl Configuration {
    pub fn load(&self, sizes: &[Size]) -> u64 {
        self.counts
            .iter()
            .zip(sizes)
            .map(|(&c, s)| c as u64 * s.value())
            .sum()
    }
}

/// All maximal configurations over `sizes` (distinct, ascending): tuples that fit
/// in `capacity` and admit no further item. Every feasible tuple is dominated by
/// one of them, so the covering LP and IP keep their optima.
///
/// Fails with `TooManyConfigurations` once more than `limit` (capped at
/// [`CONFIG_HARD_LIMIT`]) have been produced. Sizes above the capacity yield an
/// empty set.
pub fn enumerate_configurations(
    sizes: &[Size],
    capacity: u64,
    limit: usize,
) -> Result<Vec<Configuration>, OracleError> {
    let limit = limit.min(CONFIG_HARD_LIMIT);
    if sizes.is_empty() || sizes[0].value() > capacity {
        return Ok(Vec::new());
    }
    debug_assert!(sizes.windows(2).all(|w| w[0] < w[1]));
    // An m-tuple is maximal iff the leftover space is below the smallest size, so
    // the count of the smallest size is forced once the others are chosen.
    let mut out = Vec::new();
    let mut counts = vec![0u32; sizes.len()];
    recurse(
        sizes,
        sizes.len() - 1,
        capacity,
        &mut counts,
        &mut out,
        limit,
    )?;
    out.sort();
    Ok(out)
}

fn recurse(
    sizes: &[Size],
    i: usize,
    rem: u64,
    counts: &mut Vec<u32>,
    out: &mut Vec<Configuration>,
    limit: usize,
) -> Result<(), OracleError> {
    let s = sizes[i].value();
    if i == 0 {
        counts[0] = (rem / s) as u32;
        if counts.iter().any(|&c| c > 0) {
            if out.len() >= limit {
                return Err(OracleError::TooManyConfigurations(out.len() as u128 + 1));
            }
            out.push(Configuration {
                counts: counts.clone(),
            });
        }
        counts[0] = 0;
        return Ok(());
    }
    for t in (0..=rem / s).rev() {
        counts[i] = t as u32;
        recurse(sizes, i - 1, rem - t * s, counts, out, limit)?;
    }
    counts[i] = 0;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sizes(v: &[u64]) -> Vec<Size> {
        v.iter().map(|&x| Size::raw(x)).collect()
    }

    #[test]
    fn single_half_size() {
        let c = enumerate_configurations(&sizes(&[5]), 10, 100).unwrap();
        assert_eq!(c, vec![Configuration { counts: vec![2] }]);
    }

    #[test]
    fn oversize_gives_nothing() {
        assert!(enumerate_configurations(&sizes(&[7]), 5, 100)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn limit_is_enforced() {
        let s = sizes(&(1..=11).collect::<Vec<_>>());
        assert!(matches!(
            enumerate_configurations(&s, 12, 10),
            Err(OracleError::TooManyConfigurations(_))
        ));
    }
}
