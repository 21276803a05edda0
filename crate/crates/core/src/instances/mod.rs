//! Instance families: the small counterexamples, the matching gadget, the
//! transit frequency-setting model and random games.

mod classic;
mod io;
mod random;
mod transit;

pub use classic::{gen_3dm_gadget, gen_cyclic, gen_empty_core_example, random_3dm_instance, ThreeDMGadget, ThreeDMInstance};
pub use io::{load_game, read_scenario, save_game, write_scenario};
pub use random::{gen_random_game, RandomGameSpec};
pub use transit::{
    accessibility, gen_grid_city, gen_transit_game, motivating_scenario, rider_valuation, GridCitySpec, Line, Rider,
    TransitScenario,
};
