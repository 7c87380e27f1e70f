//! Prints the comfort penalty on a vertical slice in front of the mouth.
use bite_transfer::costs::{cost_comfort_spatial, CostWeights};

fn main() {
    let w = CostWeights::default();
    println!("comfort cost at x = 0; rows are y (m), columns are z (m)");
    let zs = [0.02, 0.05, 0.1, 0.2, 0.4];
    print!("{:>7}", "");
    for z in zs {
        print!("{z:>8.2}");
    }
    println!();
    for i in 0..9 {
        let y = 0.08 - 0.02 * i as f64;
        print!("{y:>+7.2}");
        for z in zs {
            print!("{:>8.4}", cost_comfort_spatial([0.0, y], z, &w));
        }
        println!();
    }
}
