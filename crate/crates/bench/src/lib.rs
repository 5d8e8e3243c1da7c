//! Fixtures shared by the benchmarks in `benches/`.

use xyent::ChainSpec;

/// Homogeneous chain, left reservoir hotter.
pub fn free() -> ChainSpec {
    ChainSpec::free(1.0, 2.0)
}

/// Weak bond between sites 0 and 1 inside a five-site center.
pub fn defect() -> ChainSpec {
    ChainSpec::free(1.0, 2.0).with_center(2).with_site(0, 0.5, 0.0)
}
