//! Bundled data: the 33-node feeder with its critical loads and the
//! published minimum-ELC matrix.

use crate::enumeration::ElcMatrix;
use crate::network::{load_network, Network};

pub const IEEE33_BRANCHES: &str = include_str!("../data/ieee33_branches.csv");
pub const IEEE33_LOADS: &str = include_str!("../data/ieee33_loads.csv");
pub const TABLE2_MIN_ELC: &str = include_str!("../data/table2_min_elc.csv");

/// The 33-node radial feeder: 32 sections, ties 33–37, 3715 kW of load,
/// 1265 kW of it critical at 20 nodes. Node 1 is the substation.
pub fn ieee33() -> Network {
    load_network(IEEE33_BRANCHES.as_bytes(), IEEE33_LOADS.as_bytes())
        .expect("bundled 33-node fixture is valid")
}

/// Published minimum-ELC matrix for 500–1900 kW and 1–10 MERs.
pub fn table2() -> ElcMatrix {
    ElcMatrix::from_csv(TABLE2_MIN_ELC.as_bytes()).expect("bundled matrix is valid")
}
