//! Grand canonical, slowly varying and canonical ensembles, and relative entropies.

mod canonical;
mod entropy;
mod pmf;
mod profile;

pub use canonical::{canonical_marginal, canonical_table, sample_canonical, CanonicalTable, Marginal};
pub use entropy::{product_relative_entropy, relative_entropy_discrete, RelativeEntropy};
pub use pmf::{sample_product, site_pmf, ProductSampler, SitePmf};
pub use profile::{ProfileShape, ProfileSpec};
