use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symgrand::gf2::BinaryWord;
use symgrand::modem::{awgn, ebn0_to_n0, CandidateSet, ChannelParams, Constellation, SymbolBlock};
use symgrand::patterns::rank;

fn all_constellations() -> Vec<Constellation> {
    let mut v = vec![Constellation::bpsk()];
    for m in [2, 4, 6, 8] {
        v.push(Constellation::square_qam(m).unwrap());
    }
    v
}

/// A sample drawn uniformly from a box a little larger than the
/// constellation, so edge and outside points are exercised.
fn random_sample(c: &Constellation, rng: &mut impl Rng) -> Complex64 {
    let r = c.points().iter().map(|p| p.re.abs().max(p.im.abs())).fold(0.0, f64::max) * 1.3;
    Complex64::new(rng.random_range(-r..r), rng.random_range(-r..r))
}

/// Bit-LLRs straight from the definition: log of the ratio of the two
/// likelihood sums, with no rescaling. `None` when a sum underflows out of
/// the normal range, where the direct form loses its precision.
fn naive_llrs(c: &Constellation, y: Complex64, n0: f64) -> Option<Vec<f64>> {
    let m = c.bits_per_symbol();
    (0..m)
        .map(|l| {
            let (mut ones, mut zeros) = (0.0f64, 0.0f64);
            for (i, &p) in c.points().iter().enumerate() {
                let lik = (-(y - p).norm_sqr() / n0).exp();
                if c.label(i) >> (m - 1 - l) & 1 == 1 {
                    ones += lik;
                } else {
                    zeros += lik;
                }
            }
            (ones.is_normal() && zeros.is_normal()).then(|| ones.ln() - zeros.ln())
        })
        .collect()
}

#[test]
fn unit_energy_and_gray_labels() {
    for c in all_constellations() {
        assert!((c.average_energy() - 1.0).abs() < 1e-12);
        let mut labels: Vec<u32> = (0..c.size()).map(|i| c.label(i)).collect();
        labels.sort_unstable();
        assert_eq!(labels, (0..c.size() as u32).collect::<Vec<_>>());
        for i in 0..c.size() {
            assert_eq!(c.index_of_label(c.label(i)), i);
        }
    }
}

#[test]
fn nearest_neighbours_differ_in_one_bit() {
    for c in all_constellations().into_iter().skip(1) {
        let dmin = c
            .points()
            .iter()
            .enumerate()
            .flat_map(|(i, &a)| c.points()[i + 1..].iter().map(move |&b| (a - b).norm_sqr()))
            .fold(f64::INFINITY, f64::min);
        let mut pairs = 0;
        for i in 0..c.size() {
            for j in i + 1..c.size() {
                if (c.point(i) - c.point(j)).norm_sqr() < dmin * (1.0 + 1e-9) {
                    assert_eq!((c.label(i) ^ c.label(j)).count_ones(), 1);
                    pairs += 1;
                }
            }
        }
        let (mi, mq) = c.axis_levels();
        assert_eq!(pairs, mi * (mq - 1) + mq * (mi - 1));
    }
}

#[test]
fn sixteen_qam_modulation_table() {
    // Per-axis Gray map, amplitudes in units of 1/sqrt(10).
    let level = |b: &str| match b {
        "00" => -3.0,
        "01" => -1.0,
        "11" => 1.0,
        "10" => 3.0,
        _ => unreachable!(),
    };
    let c = Constellation::square_qam(4).unwrap();
    let s = 10f64.sqrt();
    for word in ["0001 1110", "1011 0100", "0000 1111"] {
        let bits = BinaryWord::from_str_bits(word);
        let text = bits.to_string();
        let block = c.modulate(&bits).unwrap();
        assert_eq!(block.len(), 2);
        for (sym, chunk) in block.samples().iter().zip([&text[..4], &text[4..]]) {
            let want = Complex64::new(level(&chunk[..2]) / s, level(&chunk[2..]) / s);
            assert!((sym - want).norm() < 1e-12, "{chunk}: {sym} vs {want}");
        }
        assert_eq!(c.hard_bits(&block), bits);
    }
}

#[test]
fn hard_detection_matches_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for c in all_constellations() {
        for _ in 0..20_000 {
            let y = random_sample(&c, &mut rng);
            assert_eq!(c.hard_detect(y), c.hard_detect_exhaustive(y), "{y}");
        }
    }
}

#[test]
fn candidates_match_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for c in all_constellations() {
        for _ in 0..3_000 {
            let y = random_sample(&c, &mut rng);
            let mu = rng.random_range(1..=c.size().min(20));
            let fast = c.candidates(y, mu).unwrap();
            let slow = c.candidates_exhaustive(y, mu).unwrap();
            assert_eq!(fast, slow, "y = {y}, mu = {mu}");
            assert_eq!(fast[0].index, c.hard_detect(y));
            assert_eq!(fast[0].delta, 0.0);
            assert!(fast.windows(2).all(|w| w[0].delta <= w[1].delta));
            assert!(fast.iter().all(|x| x.delta >= 0.0));
        }
    }
}

#[test]
fn candidates_on_lattice_ties() {
    // Exactly between points: every tie is resolved by index, and fast and
    // exhaustive paths agree.
    let c = Constellation::square_qam(4).unwrap();
    let s = 1.0 / 10f64.sqrt();
    for (re, im) in [(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (-4.0, 1.0), (0.0, -3.0)] {
        let y = Complex64::new(re * s, im * s);
        for mu in 1..=16 {
            assert_eq!(c.candidates(y, mu).unwrap(), c.candidates_exhaustive(y, mu).unwrap());
        }
    }
}

#[test]
fn total_exceedance_orders_likelihood() {
    // For any two choices of one candidate per position, the difference of
    // total exceedance distances equals the difference of squared
    // Euclidean distances to the received block.
    let c = Constellation::square_qam(6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let block = SymbolBlock((0..6).map(|_| random_sample(&c, &mut rng)).collect());
        let set = CandidateSet::build(&c, &block, 5).unwrap();
        let pick = |rng: &mut ChaCha8Rng| -> (f64, f64) {
            (0..6).fold((0.0, 0.0), |(sd, se), i| {
                let cand = set.at(i)[rng.random_range(0..5)];
                (sd + cand.delta, se + (block.samples()[i] - c.point(cand.index)).norm_sqr())
            })
        };
        let (da, ea) = pick(&mut rng);
        let (db, eb) = pick(&mut rng);
        assert!(((da - db) - (ea - eb)).abs() < 1e-9);
    }
}

#[test]
fn bpsk_exceedance_order_is_llr_order() {
    let c = Constellation::bpsk();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let n0 = rng.random_range(0.05..2.0);
        let params = ChannelParams::from_n0(n0).unwrap();
        let tx = c.modulate(&BinaryWord::from_bits((0..64).map(|_| rng.random::<bool>()))).unwrap();
        let rx = awgn(&tx, &params, &mut rng);
        let set = CandidateSet::build(&c, &rx, 2).unwrap();
        let deltas: Vec<f64> = (0..64).map(|i| set.at(i)[1].delta).collect();
        let llrs = c.demap_block(&rx, n0);
        let mags: Vec<f64> = llrs.values().iter().map(|l| l.abs()).collect();
        for (d, m) in deltas.iter().zip(&mags) {
            assert!((d - n0 * m).abs() <= 1e-12 * d.max(1.0));
        }
        assert_eq!(rank(&deltas).unwrap().perm(), rank(&mags).unwrap().perm());
    }
}

#[test]
fn logmap_matches_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut compared = 0;
    for c in all_constellations() {
        let mut axiswise = vec![0.0; c.bits_per_symbol()];
        for _ in 0..20_000 {
            let y = random_sample(&c, &mut rng);
            let n0 = 10f64.powf(rng.random_range(-2.5..1.0));
            let Some(naive) = naive_llrs(&c, y, n0) else {
                continue;
            };
            let full = c.logmap_demap(y, n0);
            c.logmap_demap_axiswise(y, n0, &mut axiswise);
            for ((a, b), e) in full.iter().zip(&axiswise).zip(&naive) {
                let tol = 1e-9 * e.abs().max(1.0);
                assert!((a - e).abs() <= tol, "logmap {a} vs {e} at y={y}, n0={n0}");
                assert!((b - e).abs() <= tol, "axiswise {b} vs {e} at y={y}, n0={n0}");
            }
            compared += 1;
        }
    }
    assert!(compared > 50_000, "only {compared} finite draws");
}

#[test]
fn qpsk_closed_form() {
    let c = Constellation::square_qam(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10_000 {
        let y = random_sample(&c, &mut rng);
        let n0 = rng.random_range(0.05..4.0);
        let llr = c.logmap_demap(y, n0);
        let want = [2.0 * 2f64.sqrt() * y.re / n0, 2.0 * 2f64.sqrt() * y.im / n0];
        for (a, b) in llr.iter().zip(want) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
        }
    }
}

#[test]
fn high_snr_llr_signs_follow_transmitted_bits() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for c in all_constellations() {
        let bits = BinaryWord::from_bits((0..c.bits_per_symbol() * 200).map(|_| rng.random::<bool>()));
        let tx = c.modulate(&bits).unwrap();
        let params = ChannelParams::from_n0(1e-6).unwrap();
        let rx = awgn(&tx, &params, &mut rng);
        let llrs = c.demap_block(&rx, params.n0);
        for (j, l) in llrs.values().iter().enumerate() {
            assert_eq!(*l > 0.0, bits.get(j));
        }
    }
}

#[test]
fn awgn_has_the_requested_variance() {
    let params = ChannelParams::from_n0(0.3).unwrap();
    let zero = SymbolBlock(vec![Complex64::new(0.0, 0.0); 1_000_000]);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let noise = awgn(&zero, &params, &mut rng);
    let n = noise.len() as f64;
    let (mut mr, mut mi, mut vr, mut vi) = (0.0, 0.0, 0.0, 0.0);
    for z in noise.samples() {
        mr += z.re;
        mi += z.im;
        vr += z.re * z.re;
        vi += z.im * z.im;
    }
    let target = params.n0 / 2.0;
    assert!((mr / n).abs() < 0.003 && (mi / n).abs() < 0.003);
    assert!(((vr / n) / target - 1.0).abs() < 0.01, "{}", vr / n);
    assert!(((vi / n) / target - 1.0).abs() < 0.01, "{}", vi / n);
}

#[test]
fn ebn0_conversion() {
    // Rate 1/2 QPSK at 0 dB: Es/N0 = 1 so N0 = 1.
    assert!((ebn0_to_n0(0.0, 0.5, 2).unwrap() - 1.0).abs() < 1e-15);
    let n0 = ebn0_to_n0(10.0, 104.0 / 128.0, 4).unwrap();
    assert!((n0 - 1.0 / (10.0 * 4.0 * 104.0 / 128.0)).abs() < 1e-15);
    assert!(ebn0_to_n0(3.0, 0.0, 4).is_err());
    assert!(ebn0_to_n0(3.0, 0.5, 0).is_err());
    assert!(ChannelParams::from_n0(0.0).is_err());
}
