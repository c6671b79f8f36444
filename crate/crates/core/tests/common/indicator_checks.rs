//! Indicator outputs against direct-definition oracles. Each check panics on
//! the first mismatch.

use rand::Rng;
use sepindex::features::indicators::{self as ind, EmaSeed, MaKind};

use super::{random_walk, rng};

pub fn close_series(r: &mut rand_chacha::ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut p: f64 = 100.0;
    (0..len)
        .map(|_| {
            p += r.gen_range(-1.0..1.0);
            if r.gen::<f64>() < 0.05 {
                p = (p * 100.0).round() / 100.0;
            }
            p
        })
        .collect()
}

pub fn assert_close(got: &ind::Indicator, want: &[Option<f64>], tol: f64, what: &str) {
    assert_eq!(got.len(), want.len(), "{what}: length");
    for (t, (g, w)) in got.values.iter().zip(want).enumerate() {
        match (g, w) {
            (Some(g), Some(w)) => assert!((g - w).abs() <= tol, "{what}[{t}]: {g} vs {w}"),
            (None, None) => {}
            _ => panic!("{what}[{t}]: defined-ness differs ({g:?} vs {w:?})"),
        }
    }
}

pub fn ema_oracle(x: &[Option<f64>], p: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; x.len()];
    let Some(start) = x.iter().position(Option::is_some) else { return out };
    if x.len() < start + p {
        return out;
    }
    let a = 2.0 / (p as f64 + 1.0);
    let mut e = (start..start + p).map(|t| x[t].unwrap()).sum::<f64>() / p as f64;
    out[start + p - 1] = Some(e);
    for t in start + p..x.len() {
        e += a * (x[t].unwrap() - e);
        out[t] = Some(e);
    }
    out
}

pub fn wilder_rsi_oracle(close: &[f64], p: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; close.len()];
    let ups: Vec<f64> = close.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    let downs: Vec<f64> = close.windows(2).map(|w| (w[0] - w[1]).max(0.0)).collect();
    if ups.len() < p {
        return out;
    }
    let mut au = ups[..p].iter().sum::<f64>() / p as f64;
    let mut ad = downs[..p].iter().sum::<f64>() / p as f64;
    let f = |au: f64, ad: f64| {
        if ad == 0.0 {
            if au == 0.0 {
                50.0
            } else {
                100.0
            }
        } else {
            100.0 * au / (au + ad)
        }
    };
    out[p] = Some(f(au, ad));
    for k in p..ups.len() {
        au += (ups[k] - au) / p as f64;
        ad += (downs[k] - ad) / p as f64;
        out[k + 1] = Some(f(au, ad));
    }
    out
}

pub fn window_oracle(len: usize, w: usize, f: impl Fn(usize, usize) -> Option<f64>) -> Vec<Option<f64>> {
    (0..len).map(|t| if t + 1 >= w { f(t + 1 - w, t) } else { None }).collect()
}

pub fn ema_matches_recursion() {
    let mut r = rng(20);
    let c = close_series(&mut r, 400);
    let lifted: Vec<Option<f64>> = c.iter().copied().map(Some).collect();
    for p in [1, 3, 8, 21, 200] {
        assert_close(&ind::ema(&c, p), &ema_oracle(&lifted, p), 1e-9, "ema");
    }
    let c = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
    let hand = [None, None, Some(2.0), Some(3.0), Some(4.0), Some(5.0), Some(6.0), Some(7.0), Some(8.0), Some(9.0)];
    assert_close(&ind::ema(&c, 3), &hand, 1e-12, "ema hand");
    let lifted: Vec<Option<f64>> = c.iter().copied().map(Some).collect();
    let first = ind::ema_with(&lifted[..3], 3, EmaSeed::FirstValue);
    assert_eq!(first.get(0), Some(1.0));
    assert_eq!(first.get(1), Some(1.5));
}

pub fn rsi_reference_sequence() {
    let closes = [
        44.34, 44.09, 44.15, 43.61, 44.33, 44.83, 45.10, 45.42, 45.84, 46.08, 45.89, 46.03, 45.61, 46.28, 46.28, 46.00,
        46.03, 46.41, 46.22, 45.64, 46.21, 46.25, 45.71, 46.46, 45.78, 45.35, 44.03, 44.18, 44.22, 44.57, 43.42, 42.66,
        43.13,
    ];
    // exact rational evaluation of the Wilder recursion on these closes
    let frozen = [
        70.46413502,
        66.24961855,
        66.48094183,
        69.34685316,
        66.29471266,
        57.91502067,
        62.88071831,
        63.20878872,
        56.01158479,
        62.41300244,
        54.64795529,
        50.37953295,
        40.04043946,
        41.50942073,
        41.91807144,
        45.50572079,
        37.34365237,
        33.11623071,
        37.80524430,
    ];
    let got = ind::rsi(&closes, 14);
    assert_close(&got, &wilder_rsi_oracle(&closes, 14), 1e-6, "rsi reference");
    assert_eq!(got.first_defined(), Some(14));
    for (k, want) in frozen.iter().enumerate() {
        let v = got.get(14 + k).unwrap();
        assert!((v - want).abs() <= 1e-6, "rsi[{}] = {v}, expected {want}", 14 + k);
    }
}

pub fn rsi_and_connors_match_oracles() {
    let mut r = rng(21);
    let c = close_series(&mut r, 600);
    for p in [2, 3, 14] {
        assert_close(&ind::rsi(&c, p), &wilder_rsi_oracle(&c, p), 1e-9, "rsi");
    }
    let mut streak = vec![0.0f64; c.len()];
    for t in 1..c.len() {
        streak[t] = match c[t].partial_cmp(&c[t - 1]).unwrap() {
            std::cmp::Ordering::Greater => streak[t - 1].max(0.0) + 1.0,
            std::cmp::Ordering::Less => streak[t - 1].min(0.0) - 1.0,
            std::cmp::Ordering::Equal => 0.0,
        };
    }
    assert_eq!(ind::streak(&c), streak);
    let rsi3 = wilder_rsi_oracle(&c, 3);
    let srsi = wilder_rsi_oracle(&streak, 2);
    let rank: Vec<Option<f64>> = (0..c.len())
        .map(|t| {
            if t < 101 {
                return None;
            }
            let now = c[t] / c[t - 1] - 1.0;
            let below = (t - 100..t).filter(|&s| c[s] / c[s - 1] - 1.0 < now).count();
            Some(below as f64)
        })
        .collect();
    let crsi: Vec<Option<f64>> = (0..c.len()).map(|t| Some((rsi3[t]? + srsi[t]? + rank[t]?) / 3.0)).collect();
    assert_close(&ind::connors_rsi(&c, 3, 2, 100), &crsi, 1e-9, "crsi");
}

pub fn window_indicators_match_direct_formulas() {
    let mut r = rng(22);
    let s = random_walk(&mut r, 500);
    let (h, l, c, v) = (s.high(), s.low(), s.close(), s.volume());
    let len = c.len();

    for p in [1, 14, 96] {
        let want = window_oracle(len, p, |a, b| {
            let hh = h[a..=b].iter().cloned().fold(f64::MIN, f64::max);
            let ll = l[a..=b].iter().cloned().fold(f64::MAX, f64::min);
            Some(if hh == ll { 0.0 } else { -100.0 * (hh - c[b]) / (hh - ll) })
        });
        assert_close(&ind::williams_r(&h, &l, &c, p), &want, 1e-9, "williams_r");
    }

    for p in [2, 12, 40] {
        let want = window_oracle(len, p, |a, b| {
            let xs: Vec<f64> = (1..=p).map(|k| k as f64).collect();
            let ys = &c[a..=b];
            let mx = xs.iter().sum::<f64>() / p as f64;
            let my = ys.iter().sum::<f64>() / p as f64;
            let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
            let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
            Some(if vy == 0.0 { 0.0 } else { cov / (vx.sqrt() * vy.sqrt()) })
        });
        assert_close(&ind::cti(&c, p), &want, 1e-9, "cti");
    }

    let want = window_oracle(len, 20, |a, b| {
        let mut flow = 0.0;
        let mut vol = 0.0;
        for t in a..=b {
            let mult = if h[t] == l[t] { 0.0 } else { (2.0 * c[t] - l[t] - h[t]) / (h[t] - l[t]) };
            flow += mult * v[t];
            vol += v[t];
        }
        Some(if vol == 0.0 { 0.0 } else { flow / vol })
    });
    assert_close(&ind::cmf(&h, &l, &c, &v, 20), &want, 1e-9, "cmf");

    let want = window_oracle(len, 14, |a, b| {
        let vol: f64 = v[a..=b].iter().sum();
        let pv: f64 = (a..=b).map(|t| v[t] * (h[t] + l[t] + c[t]) / 3.0).sum();
        (vol != 0.0).then(|| pv / vol)
    });
    assert_close(&ind::vwap(&h, &l, &c, &v, 14), &want, 1e-9, "vwap");

    let want: Vec<Option<f64>> = (0..len).map(|t| (t >= 1).then(|| 100.0 * (c[t] - c[t - 1]) / c[t - 1])).collect();
    assert_close(&ind::roc(&c, 1), &want, 1e-9, "roc");

    let want: Vec<Option<f64>> =
        (0..len).map(|t| (t >= 5).then(|| (1..=5).map(|k| c[t] / c[t - k] - 1.0).fold(f64::MIN, f64::max))).collect();
    assert_close(&ind::rolling_pct_change_max(&c, 5), &want, 1e-9, "pct_change_max");

    let want: Vec<Option<f64>> =
        (0..len).map(|t| (t >= 5).then(|| l[t - 5..t].iter().cloned().fold(f64::MAX, f64::min))).collect();
    assert_close(&ind::rolling_low(&l, 5, 1), &want, 0.0, "low_5");
}

pub fn t3_matches_cascade_oracle() {
    let ramp: Vec<f64> = (0..120).map(|t| 50.0 + 0.5 * t as f64).collect();
    let mut r = rng(23);
    let noisy = close_series(&mut r, 300);
    for c in [ramp, noisy] {
        for (p, a) in [(5, 0.7), (3, 0.0), (8, 1.0)] {
            let mut e: Vec<Vec<Option<f64>>> = vec![c.iter().copied().map(Some).collect()];
            for _ in 0..6 {
                e.push(ema_oracle(e.last().unwrap(), p));
            }
            let c1 = -a * a * a;
            let c2 = 3.0 * a * a + 3.0 * a * a * a;
            let c3 = -6.0 * a * a - 3.0 * a - 3.0 * a * a * a;
            let c4 = 1.0 + 3.0 * a + a * a * a + 3.0 * a * a;
            let want: Vec<Option<f64>> =
                (0..c.len()).map(|t| Some(c1 * e[6][t]? + c2 * e[5][t]? + c3 * e[4][t]? + c4 * e[3][t]?)).collect();
            assert_close(&ind::t3(&c, p, a), &want, 1e-9, "t3");
        }
    }
}

pub fn ewo_matches_two_average_oracle() {
    let mut r = rng(24);
    let c = close_series(&mut r, 300);
    let lifted: Vec<Option<f64>> = c.iter().copied().map(Some).collect();
    let sma = |p: usize| window_oracle(c.len(), p, |a, b| Some(c[a..=b].iter().sum::<f64>() / p as f64));
    let (f, s) = (sma(5), sma(35));
    let want: Vec<Option<f64>> = (0..c.len()).map(|t| Some((f[t]? - s[t]?) / c[t] * 100.0)).collect();
    assert_close(&ind::ewo(&c, 5, 35, MaKind::Simple), &want, 1e-9, "ewo simple");
    let (f, s) = (ema_oracle(&lifted, 5), ema_oracle(&lifted, 35));
    let want: Vec<Option<f64>> = (0..c.len()).map(|t| Some((f[t]? - s[t]?) / c[t] * 100.0)).collect();
    assert_close(&ind::ewo(&c, 5, 35, MaKind::Exponential), &want, 1e-9, "ewo exponential");
}

pub fn hourly_change_uses_only_completed_hours() {
    let mut r = rng(25);
    let s = random_walk(&mut r, 60 * 12 + 17);
    let (ts, c) = (s.timestamps(), s.close());
    let got = ind::hourly_pct_change_max(&ts, &c, 5);
    for t in 0..c.len() {
        // hours fully completed at row t, each represented by its last close
        let done: Vec<f64> =
            (0..=t).filter(|&k| k + 1 == c.len() || ts[k + 1] / 3_600_000 != ts[k] / 3_600_000).map(|k| c[k]).collect();
        let want = (done.len() >= 6).then(|| {
            let h = done.len() - 1;
            (1..=5).map(|k| done[h] / done[h - k] - 1.0).fold(f64::MIN, f64::max)
        });
        match (got.get(t), want) {
            (Some(g), Some(w)) => assert!((g - w).abs() <= 1e-12, "row {t}"),
            (None, None) => {}
            other => panic!("row {t}: {other:?}"),
        }
    }
}

/// Every check above, in order.
pub fn all() {
    ema_matches_recursion();
    rsi_reference_sequence();
    rsi_and_connors_match_oracles();
    window_indicators_match_direct_formulas();
    t3_matches_cascade_oracle();
    ewo_matches_two_average_oracle();
    hourly_change_uses_only_completed_hours();
}
