//! One step of public learning: who plays what, and how much the public
//! ratio moves after each action.

use herding::belief::{d_minus, d_plus, decide, public_belief, Action, BeliefState};
use herding::signal::GaussianSignalModel;

fn main() -> herding::Result<()> {
    let model = GaussianSignalModel::new(2.0)?;

    // an agent facing ell = 1 plays +1 iff ell + L > 0
    for llr in [-1.5, -1.0, -0.5, 0.5] {
        println!("ell = 1, L = {llr:+}: plays {:?}", decide(1.0, llr));
    }

    println!("\n{:>6} {:>10} {:>10}", "x", "D+(x)", "D-(x)");
    for x in [-4.0, -1.0, 0.0, 1.0, 4.0, 20.0] {
        println!("{x:>6} {:>10.6} {:>10.6}", d_plus(&model, x), d_minus(&model, x));
    }

    let mut state = BeliefState::new(0.0);
    for a in [Action::Plus, Action::Plus, Action::Minus, Action::Plus] {
        state.observe(&model, a);
        println!("after {a:?}: ell = {:.6}, mu = {:.6}", state.ell(), public_belief(state.ell()));
    }
    Ok(())
}
