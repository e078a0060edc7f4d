use hoqmc::cbc::{cbc_naive, cbc_product, cbc_spod};
use hoqmc::weights::{BetaSequence, WeightFamily, WeightSpec};

#[test]
fn fast_matches_naive_on_grid() {
    let mut worst = 0.0f64;
    let mut mismatches = Vec::new();
    for b in [2u32, 3] {
        for m in 2..=5 {
            for alpha in [2usize, 3] {
                for family in [WeightFamily::Spod, WeightFamily::Product] {
                    let beta = BetaSequence::power(0.5, 2.0, 0.6).unwrap();
                    let spec = WeightSpec::new(family, b, Some(alpha), beta).unwrap();
                    let s = 3;
                    let fast = match family {
                        WeightFamily::Spod => cbc_spod(m, s, &spec).unwrap(),
                        WeightFamily::Product => cbc_product(m, s, &spec).unwrap(),
                    };
                    let naive = cbc_naive(m, s, &spec).unwrap();
                    if fast.q != naive.q {
                        mismatches.push(format!("{b} {m} {alpha} {family}: {:?} vs {:?}", fast.q, naive.q));
                    }
                    for (x, y) in fast.criterion.iter().zip(&naive.criterion) {
                        worst = worst.max((x - y).abs() / y.abs());
                    }
                }
            }
        }
    }
    println!("worst relative criterion difference {worst:e}");
    assert!(mismatches.is_empty(), "{mismatches:#?}");
    assert!(worst <= 1e-10);
}
