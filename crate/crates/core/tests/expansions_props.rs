use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use nnlab_core::expansions::{
    cf_digits, cf_reconstruct, Cylinder, gauss_block_measure, lueroth_digits, lueroth_reconstruct, sample_uniform,
    ExpansionError, RealInput,
};
use nnlab_core::words::Word;

type Rebuild = fn(&Word) -> Result<Cylinder, ExpansionError>;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// `r + s sqrt(d)`, exact.
#[derive(Clone, Debug)]
struct Surd {
    r: BigRational,
    s: BigRational,
    d: BigInt,
}

impl Surd {
    fn sign(&self) -> Ordering {
        let (r, s) = (self.r.signum(), self.s.signum());
        if r.is_zero() || s.is_zero() || r == s {
            return (&r + &s).cmp(&BigRational::zero());
        }
        // opposite signs: compare r^2 with s^2 d
        let lhs = &self.r * &self.r;
        let rhs = &self.s * &self.s * BigRational::from_integer(self.d.clone());
        if r.is_positive() {
            lhs.cmp(&rhs)
        } else {
            rhs.cmp(&lhs)
        }
    }

    fn sub_int(&self, a: u64) -> Surd {
        Surd { r: &self.r - BigRational::from_integer(a.into()), ..self.clone() }
    }

    fn scale(&self, c: &BigRational) -> Surd {
        Surd { r: &self.r * c, s: &self.s * c, d: self.d.clone() }
    }

    fn recip(&self) -> Surd {
        let norm = &self.r * &self.r - &self.s * &self.s * BigRational::from_integer(self.d.clone());
        Surd { r: &self.r / &norm, s: -&self.s / &norm, d: self.d.clone() }
    }

    /// `1/(a+1) < x < 1/a`, i.e. `a < 1/x < a+1`.
    fn in_element(&self, a: u64) -> bool {
        let inv = self.recip();
        inv.sub_int(a).sign() == Ordering::Greater && inv.sub_int(a + 1).sign() == Ordering::Less
    }
}

fn surd_input(x: &Surd) -> RealInput {
    RealInput::parse_value(&format!("{} + {}*sqrt({})", x.r, x.s, x.d).replace("+ -", "- ")).unwrap()
}

/// Up to `count` Lüroth digits; some surds have doubly exponential digits
/// that leave the 64-bit range early.
fn lueroth_up_to(x: &RealInput, count: usize) -> Word {
    match lueroth_digits(x, count) {
        Err(ExpansionError::DigitOverflow { index: 0 }) => Word::empty(),
        Err(ExpansionError::DigitOverflow { index }) => lueroth_digits(x, index).unwrap(),
        other => other.unwrap(),
    }
}

fn surd_strategy() -> impl Strategy<Value = Surd> {
    (prop::sample::select(vec![2i64, 3, 5, 6, 7, 10, 11, 13]), -20i64..20, 1i64..6, 1i64..30)
        .prop_map(|(d, a, b, c)| Surd { r: rat(a, c), s: rat(b, c), d: d.into() })
        .prop_filter("inside (0, 1)", |x| x.sign() == Ordering::Greater && x.sub_int(1).sign() == Ordering::Less)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn certified_cf_digits_satisfy_their_inequalities(x in surd_strategy()) {
        let digits = cf_digits(&surd_input(&x), 60).unwrap();
        let mut y = x;
        for &a in digits.digits() {
            prop_assert!(y.in_element(a), "digit {} for {:?}", a, y);
            y = y.recip().sub_int(a);
        }
    }

    #[test]
    fn certified_lueroth_digits_satisfy_their_inequalities(x in surd_strategy()) {
        let digits = lueroth_up_to(&surd_input(&x), 40);
        let mut y = x;
        for &a in digits.digits() {
            prop_assert!(y.in_element(a), "digit {} for {:?}", a, y);
            let n = BigRational::from_integer(BigInt::from(a) * BigInt::from(a + 1));
            y = y.scale(&n).sub_int(a);
        }
    }

    #[test]
    fn cylinders_nest_and_shrink(x in surd_strategy()) {
        let input = surd_input(&x);
        for (digits, rebuild) in [
            (cf_digits(&input, 25).unwrap(), cf_reconstruct as Rebuild),
            (lueroth_up_to(&input, 25), lueroth_reconstruct as Rebuild),
        ] {
            if digits.is_empty() {
                continue;
            }
            let mut prev = rebuild(&digits.prefix(1).unwrap()).unwrap();
            for n in 2..=digits.len() {
                let cur = rebuild(&digits.prefix(n).unwrap()).unwrap();
                prop_assert!(cur.is_within(&prev));
                prop_assert!(cur.width() < prev.width());
                prev = cur;
            }
        }
    }

    #[test]
    fn lueroth_rationals_land_in_their_cylinders(num in 1i64..200, den in 2i64..200) {
        prop_assume!(num < den);
        let x = rat(num, den);
        match lueroth_digits(&RealInput::Rational(x.clone()), 30) {
            Ok(digits) => {
                for n in 1..=digits.len() {
                    prop_assert!(lueroth_reconstruct(&digits.prefix(n).unwrap()).unwrap().contains(&x));
                }
            }
            Err(ExpansionError::NotInUInfinity { index }) => prop_assert!(index < 30),
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn uniform_samples_extend_consistently(seed in 0u64..1000, count in 1usize..200) {
        let short = sample_uniform(seed, count).unwrap();
        let long = sample_uniform(seed, count + 50).unwrap();
        prop_assert_eq!(short.digits(), &long.digits()[..count]);
    }
}

#[test]
fn quadratic_surds_are_periodic() {
    for (text, period) in [("sqrt(2)-1", vec![2]), ("(sqrt(5)-1)/2", vec![1]), ("sqrt(3)-1", vec![1, 2])] {
        let digits = cf_digits(&RealInput::parse_value(text).unwrap(), 500).unwrap();
        for (i, &d) in digits.digits().iter().enumerate() {
            assert_eq!(d, period[i % period.len()], "{text} at {i}");
        }
    }
    // sqrt(7) - 2 = [1, 1, 1, 4] repeating
    let digits = cf_digits(&RealInput::parse_value("sqrt(7)-2").unwrap(), 200).unwrap();
    assert!(digits.digits().chunks(4).all(|c| c == [1, 1, 1, 4]));
}

#[test]
fn gauss_measure_shape() {
    let values: Vec<f64> = (1..=2000).map(|b| gauss_block_measure(b).value).collect();
    assert!(values.iter().all(|&v| v > 0.0));
    assert!(values.windows(2).all(|w| w[1] < w[0]));
    let mut partial = 0.0;
    for v in values {
        partial += v;
        assert!(partial < 1.0);
    }
    let m = gauss_block_measure(3);
    assert_eq!((m.num, m.den), (BigInt::from(16), BigInt::from(15)));
}

#[test]
fn decimal_round_trip_within_error() {
    let x = RealInput::parse_decimal("0.7071067811865475244~19").unwrap();
    let digits = cf_digits(&x, 10).unwrap();
    let cyl = cf_reconstruct(&digits).unwrap();
    assert!(cyl.contains(&rat(7071067811865475, 10_000_000_000_000_000)));
    assert!(cyl.width() < BigRational::one());
}
