//! Contractions between m creators and n annihilators, their counts, and
//! the scattering factor R_C for one of them.

use zflab::combinatorics::{contraction_count, enumerate_contractions, r_c, Permutation};
use zflab::scattering::ScatteringFunction;
use zflab::C;

fn main() -> zflab::Result<()> {
    for m in 0..=4 {
        let row: Vec<String> = (0..=4)
            .map(|n| format!("{:>4}", enumerate_contractions(m, n).len()))
            .collect();
        let want: Vec<String> = (0..=4).map(|n| format!("{:>4}", contraction_count(m, n))).collect();
        println!("m={m}: {}   formula: {}", row.join(""), want.join(""));
    }

    let s = ScatteringFunction::exponential(0.7)?;
    let theta = [C::new(0.3, 0.0), C::new(-0.4, 0.0)];
    for c in enumerate_contractions(2, 2).iter().filter(|c| c.len() == 1) {
        // R_C lives on the support of the deltas, so contracted η's copy their θ
        let mut eta = [C::new(0.1, 0.0), C::new(0.9, 0.0)];
        for (l, r) in c.delta_pairs() {
            eta[r] = theta[l];
        }
        println!("pairs {:?}: R_C = {:.6}", c.delta_pairs(), r_c(&s, c, &theta, &eta)?);
    }

    let p = Permutation::from_one_line(&[3, 1, 2])?;
    println!("{:?}: sign {}, inversions {:?}", p.one_line(), p.sign(), p.inversions());
    Ok(())
}
