//! Prints the strong and weak hierarchical sets for one Brownian component,
//! together with their remainder sets.

use msdej::multiindex::{remainder_set, strong_hierarchical_set, weak_hierarchical_set, HalfInteger, IndexSet};

fn show(label: &str, set: &IndexSet) {
    let items: Vec<String> = set.iter().map(|a| format!("({a})")).collect();
    println!("{label} [{}]: {}", set.len(), items.join(" "));
}

fn main() -> msdej::Result<()> {
    for gamma in ["0.5", "1.0", "1.5"] {
        let set = strong_hierarchical_set(gamma.parse::<HalfInteger>()?, 1)?;
        show(&format!("A_{gamma}"), &set);
        show(&format!("B(A_{gamma})"), &remainder_set(&set)?);
    }
    for eta in [1, 2] {
        let set = weak_hierarchical_set(eta, 1)?;
        show(&format!("G_{eta}"), &set);
        show(&format!("B(G_{eta})"), &remainder_set(&set)?);
    }
    Ok(())
}
