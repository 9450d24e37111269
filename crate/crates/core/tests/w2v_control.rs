use cpmi::w2v::{pmi_matrix, train_sgns, TrainConfig};
use cpmi::{eisner_projective, max_spanning_tree, StreamSeed, Symmetrization, Variant};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

const V: usize = 8;

fn name(k: usize) -> String {
    format!("w{k}")
}

/// Row-stochastic transition matrix where each symbol strongly prefers a
/// couple of successors.
fn transitions() -> Vec<Vec<f64>> {
    let mut rng = StreamSeed::new(77, 0).rng();
    (0..V)
        .map(|a| {
            let mut row: Vec<f64> = (0..V).map(|_| rng.gen_range(0.05..0.3)).collect();
            row[(a + 1) % V] += 2.0;
            row[(a * 3 + 2) % V] += 1.0;
            let z: f64 = row.iter().sum();
            row.iter().map(|x| x / z).collect()
        })
        .collect()
}

fn stationary(t: &[Vec<f64>]) -> Vec<f64> {
    let mut pi = vec![1.0 / V as f64; V];
    for _ in 0..2000 {
        let mut next = vec![0.0; V];
        for a in 0..V {
            for b in 0..V {
                next[b] += pi[a] * t[a][b];
            }
        }
        pi = next;
    }
    pi
}

fn sample_corpus(t: &[Vec<f64>], sentences: usize, len: usize) -> Vec<Vec<String>> {
    let pi = stationary(t);
    let mut rng = StreamSeed::new(78, 0).rng();
    let start = WeightedIndex::new(&pi).unwrap();
    let steps: Vec<WeightedIndex<f64>> = t.iter().map(|r| WeightedIndex::new(r).unwrap()).collect();
    (0..sentences)
        .map(|_| {
            let mut w = start.sample(&mut rng);
            let mut s = vec![name(w)];
            for _ in 1..len {
                w = steps[w].sample(&mut rng);
                s.push(name(w));
            }
            s
        })
        .collect()
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut e = k;
        while e + 1 < idx.len() && xs[idx[e + 1]] == xs[idx[k]] {
            e += 1;
        }
        let avg = (k + e) as f64 / 2.0;
        for &i in &idx[k..=e] {
            r[i] = avg;
        }
        k = e + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

#[test]
fn dot_products_track_true_pmi() {
    let t = transitions();
    let pi = stationary(&t);
    let corpus = sample_corpus(&t, 2000, 20);
    let config = TrainConfig {
        dim: 16,
        window: 1,
        negative: 5,
        epochs: 5,
        seed: 3,
        ..TrainConfig::default()
    };
    let table = train_sgns(&corpus, &config).unwrap();

    // With a window of one, a (center, context) pair is an adjacent pair
    // in either order.
    let mut truth = Vec::new();
    let mut est = Vec::new();
    for a in 0..V {
        for b in 0..V {
            let joint = 0.5 * (pi[a] * t[a][b] + pi[b] * t[b][a]);
            if joint < 0.01 {
                continue;
            }
            truth.push((joint / (pi[a] * pi[b])).ln());
            est.push(table.pmi(&name(a), &name(b)));
        }
    }
    assert!(truth.len() >= 20, "{} frequent pairs", truth.len());
    let rho = spearman(&truth, &est);
    assert!(rho >= 0.6, "spearman {rho}");
}

#[test]
fn planted_collocations_outscore_cross_stream_pairs() {
    // Two interleaved independent streams: even positions draw from
    // {x0..x3}, odd from {y0..y3}; within the x stream, x0 is always
    // followed (two positions later) by x1.
    let mut rng = StreamSeed::new(5, 0).rng();
    let mut corpus = Vec::new();
    for _ in 0..1500 {
        let mut s = Vec::new();
        let mut prev_x0 = false;
        for k in 0..16 {
            if k % 2 == 0 {
                let w = if prev_x0 { 1 } else { rng.gen_range(0..4) };
                prev_x0 = w == 0;
                s.push(format!("x{w}"));
            } else {
                s.push(format!("y{}", rng.gen_range(0..4)));
            }
        }
        corpus.push(s);
    }
    let config = TrainConfig {
        dim: 12,
        window: 2,
        epochs: 4,
        seed: 9,
        ..TrainConfig::default()
    };
    let table = train_sgns(&corpus, &config).unwrap();
    let planted = table.pmi("x0", "x1") + table.pmi("x1", "x0");
    let mut cross = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            let (x, y) = (format!("x{a}"), format!("y{b}"));
            cross.push(table.pmi(&x, &y) + table.pmi(&y, &x));
        }
    }
    let max_cross = cross.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(
        planted > max_cross,
        "planted {planted} vs cross {max_cross}"
    );
}

#[test]
fn decoded_trees_ignore_global_shift() {
    let corpus = sample_corpus(&transitions(), 300, 12);
    let config = TrainConfig {
        dim: 8,
        window: 2,
        epochs: 2,
        seed: 1,
        ..TrainConfig::default()
    };
    let table = train_sgns(&corpus, &config).unwrap();
    let mut sentence: Vec<String> = corpus[0].clone();
    sentence.push("unseen".into());
    let m = pmi_matrix(&sentence, &table, Symmetrization::Sum, Variant::Signed).unwrap();
    for k in [1.0f64, 5.0, 15.0] {
        let shifted = m.map(|x| x - k.ln()).unwrap();
        assert_eq!(
            max_spanning_tree(&m).unwrap().tree,
            max_spanning_tree(&shifted).unwrap().tree
        );
        assert_eq!(
            eisner_projective(&m).unwrap().tree,
            eisner_projective(&shifted).unwrap().tree
        );
    }
}
