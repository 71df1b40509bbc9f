use std::path::Path;

use adaptive_binpack::distributions::{DistributionSpec, GroundSet};
use adaptive_binpack::harness::{capacity_sweep, named_source, type_sweep, Source};
use adaptive_binpack::model::Instance;
use anyhow::{bail, Context};

use crate::args::SourceArgs;

pub fn read_instance(path: &Path) -> anyhow::Result<Instance> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Instance::from_text(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_distribution(path: &Path) -> anyhow::Result<DistributionSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    DistributionSpec::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
}

/// The arrival source described by the flags, or `default` when none is given.
pub fn resolve(args: &SourceArgs, default: Option<&str>) -> anyhow::Result<Source> {
    let source = match (&args.ground_set, &args.dist) {
        (Some(_), Some(_)) => bail!("--dist and --ground-set are exclusive"),
        (Some(path), None) => Source::Ground(GroundSet::new(read_instance(path)?)),
        (None, Some(d)) => match named_source(d) {
            Some(s) => s,
            None => Source::Distribution(read_distribution(Path::new(d))?),
        },
        (None, None) => match (args.b, args.j, default) {
            (Some(b), None, _) => Source::Distribution(capacity_sweep(b)),
            (Some(b), Some(j), _) => Source::Distribution(type_sweep(b, j)),
            (None, Some(_), _) => bail!("--J needs --B"),
            (None, None, Some(name)) => named_source(name).expect("built-in default"),
            (None, None, None) => bail!("no source: pass --dist, --ground-set or --B"),
        },
    };
    if let Some(b) = args.b {
        if source.capacity() != b {
            bail!("source capacity {} does not match --B {b}", source.capacity());
        }
    }
    Ok(source)
}
