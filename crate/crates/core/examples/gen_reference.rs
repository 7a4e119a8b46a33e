//! Regenerates the packaged oracle reference table
//! (crates/core/data/chsh_reference.json): the CHSH grid-search optimum, the
//! quadrant-integrated correlators at those settings (sign-binned and
//! finite-gain smoothed), and the Born band weights of the acceptance
//! superposition. Deterministic; run with
//! `cargo run -p qamp-core --example gen_reference`.

use qamp_core::oracle::{born_reference, chsh_grid_search, chsh_reference, ChshSettings};
use qamp_core::states::{PairCoherentSpec, SuperpositionSpec};

fn main() {
    let search = chsh_grid_search((0.5, 2.0), 30, (0.05, 1.2), 46).expect("grid search");
    eprintln!(
        "search optimum: zeta = {:.4}, chi = {:.4}, S = {:.6} (violates: {})",
        search.zeta, search.chi, search.s, search.violates
    );
    let spec = PairCoherentSpec::auto(search.zeta).expect("pair-coherent spec");
    let settings = ChshSettings::from_chi(search.chi);
    // Gain of the acceptance Bell run: g = 1, t_f = 3.
    let gain = 3.0f64.exp();
    let chsh = chsh_reference(&spec, settings, gain, 512).expect("reference");
    eprintln!(
        "reference: S = {:.6}, smoothed S at G = {:.2}: {:.6}",
        chsh.s, gain, chsh.s_smoothed
    );
    let born_spec = SuperpositionSpec::new(0.6, 0.8, 0.8, -0.8, 2.0).expect("born spec");
    let born = born_reference(&born_spec).expect("born reference");
    eprintln!("born band fraction for x1: {:.12}", born.band_fraction_x1);

    let table = qamp_core::oracle::ReferenceTable {
        version: 1,
        search,
        chsh,
        born,
    };
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/chsh_reference.json");
    std::fs::write(path, serde_json::to_string_pretty(&table).unwrap()).expect("write table");
    eprintln!("wrote {path}");
}
