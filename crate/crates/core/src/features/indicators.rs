//! Technical indicators over minute bars.
//!
//! Outputs are [`Indicator`]s: one `Option<f64>` per input bar, `None` while
//! the lookback is not yet filled. Points where a degenerate window forced a
//! conventional value (flat range, zero volume, zero price) are listed in
//! `flagged`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Indicator {
    pub values: Vec<Option<f64>>,
    pub flagged: Vec<usize>,
}

impl Indicator {
    fn undefined(len: usize) -> Self {
        Indicator { values: vec![None; len], flagged: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.values[i]
    }

    pub fn first_defined(&self) -> Option<usize> {
        self.values.iter().position(Option::is_some)
    }

    /// Defined values only.
    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }
}

impl From<Vec<Option<f64>>> for Indicator {
    fn from(values: Vec<Option<f64>>) -> Self {
        Indicator { values, flagged: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmaSeed {
    /// First output at `period - 1`, equal to the SMA of the first `period` values.
    #[default]
    Sma,
    /// First output at 0, equal to the first value.
    FirstValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaKind {
    #[default]
    Simple,
    Exponential,
}

fn lift(values: &[f64]) -> Vec<Option<f64>> {
    values.iter().copied().map(Some).collect()
}

/// Trailing mean over windows whose values are all defined.
pub fn sma(values: &[Option<f64>], period: usize) -> Indicator {
    assert!(period >= 1, "period must be >= 1");
    let mut out = Indicator::undefined(values.len());
    for t in period.saturating_sub(1)..values.len() {
        let window = &values[t + 1 - period..=t];
        if window.iter().all(Option::is_some) {
            out.values[t] = Some(window.iter().flatten().sum::<f64>() / period as f64);
        }
    }
    out
}

/// EMA with `alpha = 2 / (period + 1)`.
pub fn ema(close: &[f64], period: usize) -> Indicator {
    ema_with(&lift(close), period, EmaSeed::Sma)
}

/// EMA over a possibly partially defined input; the recursion (re)starts at
/// the first run of defined values.
pub fn ema_with(values: &[Option<f64>], period: usize, seed: EmaSeed) -> Indicator {
    assert!(period >= 1, "period must be >= 1");
    let alpha = 2.0 / (period as f64 + 1.0);
    let mut out = Indicator::undefined(values.len());
    let mut state: Option<f64> = None;
    let mut warmup: Vec<f64> = Vec::with_capacity(period);
    for (t, v) in values.iter().enumerate() {
        let Some(v) = *v else {
            state = None;
            warmup.clear();
            continue;
        };
        state = match (state, seed) {
            (Some(prev), _) => Some(alpha * v + (1.0 - alpha) * prev),
            (None, EmaSeed::FirstValue) => Some(v),
            (None, EmaSeed::Sma) => {
                warmup.push(v);
                if warmup.len() == period {
                    let s = warmup.iter().sum::<f64>() / period as f64;
                    warmup.clear();
                    Some(s)
                } else {
                    None
                }
            }
        };
        out.values[t] = state;
    }
    out
}

/// `((close_t / close_{t-period}) - 1) * 100`.
pub fn roc(close: &[f64], period: usize) -> Indicator {
    assert!(period >= 1, "period must be >= 1");
    let mut out = Indicator::undefined(close.len());
    for t in period..close.len() {
        let prev = close[t - period];
        if prev == 0.0 {
            out.flagged.push(t);
        } else {
            out.values[t] = Some((close[t] / prev - 1.0) * 100.0);
        }
    }
    out
}

/// Wilder's RSI: averages seeded by the plain mean of the first `period`
/// changes, then smoothed with weight `1 / period`. Defined from index
/// `period`. A window with neither gains nor losses reads 50 (flagged).
pub fn rsi(close: &[f64], period: usize) -> Indicator {
    assert!(period >= 1, "period must be >= 1");
    let mut out = Indicator::undefined(close.len());
    if close.len() <= period {
        return out;
    }
    let p = period as f64;
    let (mut gain, mut loss) = (0.0, 0.0);
    for t in 1..=period {
        let d = close[t] - close[t - 1];
        if d > 0.0 {
            gain += d;
        } else {
            loss -= d;
        }
    }
    gain /= p;
    loss /= p;
    let mut emit = |t: usize, gain: f64, loss: f64| {
        out.values[t] = Some(if loss == 0.0 {
            if gain == 0.0 {
                out.flagged.push(t);
                50.0
            } else {
                100.0
            }
        } else {
            100.0 - 100.0 / (1.0 + gain / loss)
        });
    };
    emit(period, gain, loss);
    for t in period + 1..close.len() {
        let d = close[t] - close[t - 1];
        gain = (gain * (p - 1.0) + d.max(0.0)) / p;
        loss = (loss * (p - 1.0) + (-d).max(0.0)) / p;
        emit(t, gain, loss);
    }
    out
}

/// Williams %R in `[-100, 0]` over the trailing `period` bars.
pub fn williams_r(high: &[f64], low: &[f64], close: &[f64], period: usize) -> Indicator {
    assert!(period >= 1, "period must be >= 1");
    let mut out = Indicator::undefined(close.len());
    for t in period.saturating_sub(1)..close.len() {
        let hh = high[t + 1 - period..=t].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ll = low[t + 1 - period..=t].iter().copied().fold(f64::INFINITY, f64::min);
        let range = hh - ll;
        out.values[t] = Some(if range == 0.0 {
            out.flagged.push(t);
            0.0
        } else {
            (hh - close[t]) / range * -100.0
        });
    }
    out
}

/// Correlation trend indicator: Pearson correlation of the trailing `period`
/// closes against `0..period`.
pub fn cti(close: &[f64], period: usize) -> Indicator {
    assert!(period >= 2, "period must be >= 2");
    let mut out = Indicator::undefined(close.len());
    let p = period as f64;
    let mean_x = (p - 1.0) / 2.0;
    let sxx: f64 = (0..period).map(|k| (k as f64 - mean_x).powi(2)).sum();
    for t in period - 1..close.len() {
        let w = &close[t + 1 - period..=t];
        let mean_y = w.iter().sum::<f64>() / p;
        let (mut sxy, mut syy) = (0.0, 0.0);
        for (k, &y) in w.iter().enumerate() {
            let dy = y - mean_y;
            sxy += (k as f64 - mean_x) * dy;
            syy += dy * dy;
        }
        out.values[t] = Some(if syy == 0.0 {
            out.flagged.push(t);
            0.0
        } else {
            (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
        });
    }
    out
}

/// Up/down streak length: +k after k consecutive rises, -k after k falls, 0 on
/// an unchanged close.
pub fn streak(close: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; close.len()];
    for t in 1..close.len() {
        let prev = out[t - 1];
        out[t] = if close[t] > close[t - 1] {
            if prev > 0.0 {
                prev + 1.0
            } else {
                1.0
            }
        } else if close[t] < close[t - 1] {
            if prev < 0.0 {
                prev - 1.0
            } else {
                -1.0
            }
        } else {
            0.0
        };
    }
    out
}

/// Share (in percent) of the previous `window` values strictly below the
/// current one.
pub fn percent_rank(values: &[Option<f64>], window: usize) -> Indicator {
    assert!(window >= 1, "window must be >= 1");
    let mut out = Indicator::undefined(values.len());
    for t in window..values.len() {
        let Some(cur) = values[t] else { continue };
        let past = &values[t - window..t];
        if past.iter().all(Option::is_some) {
            let below = past.iter().flatten().filter(|&&v| v < cur).count();
            out.values[t] = Some(below as f64 / window as f64 * 100.0);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnorsComponents {
    pub price_rsi: Indicator,
    pub streak_rsi: Indicator,
    pub roc_rank: Indicator,
}

pub fn connors_components(
    close: &[f64],
    rsi_period: usize,
    streak_period: usize,
    rank_period: usize,
) -> ConnorsComponents {
    ConnorsComponents {
        price_rsi: rsi(close, rsi_period),
        streak_rsi: rsi(&streak(close), streak_period),
        roc_rank: percent_rank(&roc(close, 1).values, rank_period),
    }
}

/// Connors RSI: mean of RSI(close), RSI(streak) and the percent rank of the
/// one-bar rate of change.
pub fn connors_rsi(close: &[f64], rsi_period: usize, streak_period: usize, rank_period: usize) -> Indicator {
    let c = connors_components(close, rsi_period, streak_period, rank_period);
    let values = (0..close.len())
        .map(|t| Some((c.price_rsi.get(t)? + c.streak_rsi.get(t)? + c.roc_rank.get(t)?) / 3.0))
        .collect();
    let mut flagged: Vec<usize> = c.price_rsi.flagged.into_iter().chain(c.streak_rsi.flagged).collect();
    flagged.sort_unstable();
    flagged.dedup();
    Indicator { values, flagged }
}

/// Chaikin money flow over the trailing `period` bars.
pub fn cmf(high: &[f64], low: &[f64], close: &[f64], volume: &[f64], period: usize) -> Indicator {
    assert!(period >= 1, "period must be >= 1");
    let mut out = Indicator::undefined(close.len());
    let mut flat_bar = vec![false; close.len()];
    let mfv: Vec<f64> = (0..close.len())
        .map(|t| {
            let range = high[t] - low[t];
            if range == 0.0 {
                flat_bar[t] = true;
                0.0
            } else {
                ((close[t] - low[t]) - (high[t] - close[t])) / range * volume[t]
            }
        })
        .collect();
    for t in period.saturating_sub(1)..close.len() {
        let lo = t + 1 - period;
        let vol: f64 = volume[lo..=t].iter().sum();
        let flow: f64 = mfv[lo..=t].iter().sum();
        if vol == 0.0 || flat_bar[t] {
            out.flagged.push(t);
        }
        out.values[t] = Some(if vol == 0.0 { 0.0 } else { (flow / vol).clamp(-1.0, 1.0) });
    }
    out
}

/// Tillson coefficients `(c1, c2, c3, c4)` for volume factor `a`.
pub fn t3_coefficients(a: f64) -> (f64, f64, f64, f64) {
    let a2 = a * a;
    let a3 = a2 * a;
    (-a3, 3.0 * a2 + 3.0 * a3, -6.0 * a2 - 3.0 * a - 3.0 * a3, 1.0 + 3.0 * a + a3 + 3.0 * a2)
}

/// Tillson T3: six cascaded EMAs blended as `c1*e6 + c2*e5 + c3*e4 + c4*e3`.
pub fn t3(close: &[f64], period: usize, volume_factor: f64) -> Indicator {
    let e1 = ema_with(&lift(close), period, EmaSeed::Sma);
    let e2 = ema_with(&e1.values, period, EmaSeed::Sma);
    let e3 = ema_with(&e2.values, period, EmaSeed::Sma);
    let e4 = ema_with(&e3.values, period, EmaSeed::Sma);
    let e5 = ema_with(&e4.values, period, EmaSeed::Sma);
    let e6 = ema_with(&e5.values, period, EmaSeed::Sma);
    let (c1, c2, c3, c4) = t3_coefficients(volume_factor);
    (0..close.len())
        .map(|t| Some(c1 * e6.get(t)? + c2 * e5.get(t)? + c3 * e4.get(t)? + c4 * e3.get(t)?))
        .collect::<Vec<_>>()
        .into()
}

/// Elliott wave oscillator in percent of price: `(MA_fast - MA_slow) / close * 100`.
pub fn ewo(close: &[f64], fast: usize, slow: usize, kind: MaKind) -> Indicator {
    assert!(fast < slow, "fast period must be below slow period");
    let ma = |p| match kind {
        MaKind::Simple => sma(&lift(close), p),
        MaKind::Exponential => ema(close, p),
    };
    let (f, s) = (ma(fast), ma(slow));
    let mut out = Indicator::undefined(close.len());
    for t in 0..close.len() {
        if let (Some(f), Some(s)) = (f.get(t), s.get(t)) {
            if close[t] == 0.0 {
                out.flagged.push(t);
            } else {
                out.values[t] = Some((f - s) / close[t] * 100.0);
            }
        }
    }
    out
}

/// Largest fractional change of `close_t` against each of the previous
/// `window` closes.
pub fn rolling_pct_change_max(close: &[f64], window: usize) -> Indicator {
    assert!(window >= 1, "window must be >= 1");
    let mut out = Indicator::undefined(close.len());
    for t in window..close.len() {
        let mut best = f64::NEG_INFINITY;
        let mut ok = true;
        for k in 1..=window {
            let prev = close[t - k];
            if prev == 0.0 {
                ok = false;
                break;
            }
            best = best.max((close[t] - prev) / prev);
        }
        if ok {
            out.values[t] = Some(best);
        } else {
            out.flagged.push(t);
        }
    }
    out
}

pub const HOUR_MS: i64 = 3_600_000;

/// [`rolling_pct_change_max`] on hourly closes, carried back to minute rows.
/// An hour's value becomes visible on the last minute row of that hour and is
/// forward-filled until the next hour completes, so no row sees a later close.
pub fn hourly_pct_change_max(timestamps: &[i64], close: &[f64], window: usize) -> Indicator {
    let mut hour_close = Vec::new();
    let mut hour_last_row = Vec::new();
    for t in 0..close.len() {
        let bucket = timestamps[t].div_euclid(HOUR_MS);
        let next_bucket = timestamps.get(t + 1).map(|ts| ts.div_euclid(HOUR_MS));
        if next_bucket != Some(bucket) {
            hour_close.push(close[t]);
            hour_last_row.push(t);
        }
    }
    let hourly = rolling_pct_change_max(&hour_close, window);
    let mut out = Indicator::undefined(close.len());
    let mut h = 0;
    let mut current = None;
    for t in 0..close.len() {
        while h < hour_last_row.len() && hour_last_row[h] <= t {
            current = hourly.get(h);
            h += 1;
        }
        out.values[t] = current;
    }
    out
}

/// Trailing minimum of `low` over `window` bars, read `shift` bars back.
pub fn rolling_low(low: &[f64], window: usize, shift: usize) -> Indicator {
    assert!(window >= 1, "window must be >= 1");
    let mut out = Indicator::undefined(low.len());
    for t in window - 1 + shift..low.len() {
        let end = t - shift;
        out.values[t] = Some(low[end + 1 - window..=end].iter().copied().fold(f64::INFINITY, f64::min));
    }
    out
}

/// 1 where the recent percentage change is at most `threshold` (no dump), else 0.
pub fn safe_dump(pct_change: &[Option<f64>], threshold: f64) -> Indicator {
    pct_change.iter().map(|v| v.map(|v| if v <= threshold { 1.0 } else { 0.0 })).collect::<Vec<_>>().into()
}

/// Rolling volume-weighted typical price `(h + l + c) / 3`.
pub fn vwap(high: &[f64], low: &[f64], close: &[f64], volume: &[f64], window: usize) -> Indicator {
    assert!(window >= 1, "window must be >= 1");
    let mut out = Indicator::undefined(close.len());
    for t in window.saturating_sub(1)..close.len() {
        let lo = t + 1 - window;
        let (mut pv, mut v) = (0.0, 0.0);
        for k in lo..=t {
            pv += (high[k] + low[k] + close[k]) / 3.0 * volume[k];
            v += volume[k];
        }
        if v == 0.0 {
            out.flagged.push(t);
        } else {
            out.values[t] = Some(pv / v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defined(ind: &Indicator) -> Vec<f64> {
        ind.defined().collect()
    }

    #[test]
    fn ema_fixed_point_and_identity() {
        let c = vec![3.5; 20];
        assert!(defined(&ema(&c, 8)).iter().all(|&v| v == 3.5));
        let ramp: Vec<f64> = (0..10).map(|v| v as f64 * 1.5).collect();
        assert_eq!(ema(&ramp, 1).values, lift(&ramp));
        assert!(ema(&ramp, 11).values.iter().all(Option::is_none));
    }

    #[test]
    fn ema_period_three_by_hand() {
        let c: Vec<f64> = (1..=10).map(f64::from).collect();
        let e = ema(&c, 3);
        assert_eq!(e.values[..2], [None, None]);
        // Seed 2, alpha 0.5: each step moves halfway to the new close.
        let mut expect = vec![2.0];
        for v in 4..=10 {
            let prev = *expect.last().unwrap();
            expect.push(0.5 * v as f64 + 0.5 * prev);
        }
        assert_eq!(defined(&e), expect);
        assert_eq!(defined(&e)[1], 3.0);
    }

    #[test]
    fn ema_first_value_seeding() {
        let e = ema_with(&lift(&[4.0, 8.0]), 3, EmaSeed::FirstValue);
        assert_eq!(e.values, vec![Some(4.0), Some(6.0)]);
    }

    #[test]
    fn roc_examples() {
        assert!((roc(&[100.0, 110.0], 1).values[1].unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(roc(&[100.0, 50.0], 1).values[1], Some(-50.0));
        assert!(defined(&roc(&[7.0; 6], 2)).iter().all(|&v| v == 0.0));
        let z = roc(&[0.0, 1.0], 1);
        assert_eq!(z.values[1], None);
        assert_eq!(z.flagged, vec![1]);
    }

    #[test]
    fn rsi_saturates_on_monotone_series() {
        let up: Vec<f64> = (0..40).map(f64::from).collect();
        let down: Vec<f64> = up.iter().rev().copied().collect();
        assert!(defined(&rsi(&up, 14)).iter().all(|&v| v == 100.0));
        assert!(defined(&rsi(&down, 14)).iter().all(|&v| v == 0.0));
        assert_eq!(rsi(&up, 14).first_defined(), Some(14));
    }

    #[test]
    fn williams_r_extremes() {
        let high = [10.0, 12.0, 11.0];
        let low = [8.0, 9.0, 7.0];
        assert_eq!(williams_r(&high, &low, &[9.0, 10.0, 12.0], 3).values[2], Some(0.0));
        assert_eq!(williams_r(&high, &low, &[9.0, 10.0, 7.0], 3).values[2], Some(-100.0));
        let flat = williams_r(&[5.0; 3], &[5.0; 3], &[5.0; 3], 2);
        assert_eq!(flat.values[1], Some(0.0));
        assert_eq!(flat.flagged, vec![1, 2]);
    }

    #[test]
    fn cti_linear_trends() {
        let up: Vec<f64> = (0..50).map(|v| 2.0 * v as f64 + 1.0).collect();
        let down: Vec<f64> = up.iter().rev().copied().collect();
        assert!(defined(&cti(&up, 40)).iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!(defined(&cti(&down, 40)).iter().all(|&v| (v + 1.0).abs() < 1e-12));
        assert_eq!(cti(&[1.0; 5], 3).flagged, vec![2, 3, 4]);
    }

    #[test]
    fn streak_lengths() {
        assert_eq!(streak(&[1.0, 2.0, 3.0, 3.0, 2.0, 1.0, 4.0]), vec![0.0, 1.0, 2.0, 0.0, -1.0, -2.0, 1.0]);
    }

    #[test]
    fn cmf_extremes() {
        let h = [10.0; 30];
        let l = [8.0; 30];
        let v = [3.0; 30];
        assert!(defined(&cmf(&h, &l, &h, &v, 20)).iter().all(|&x| x == 1.0));
        assert!(defined(&cmf(&h, &l, &l, &v, 20)).iter().all(|&x| x == -1.0));
        let zero = cmf(&h, &l, &h, &[0.0; 30], 5);
        assert_eq!(zero.values[4], Some(0.0));
        assert_eq!(zero.flagged.len(), 26);
    }

    #[test]
    fn t3_coefficients_sum_to_one() {
        for a in [0.1, 0.5, 0.7, 1.0] {
            let (c1, c2, c3, c4) = t3_coefficients(a);
            assert!((c1 + c2 + c3 + c4 - 1.0).abs() < 1e-12);
        }
        let c = vec![42.0; 60];
        assert!(defined(&t3(&c, 5, 0.7)).iter().all(|&v| (v - 42.0).abs() < 1e-9));
        assert_eq!(t3(&c, 5, 0.7).first_defined(), Some(24));
    }

    #[test]
    fn ewo_constant_and_ramp() {
        assert!(defined(&ewo(&[9.0; 50], 5, 35, MaKind::Simple)).iter().all(|&v| v == 0.0));
        let ramp: Vec<f64> = (1..=60).map(f64::from).collect();
        assert!(defined(&ewo(&ramp, 5, 35, MaKind::Simple)).iter().all(|&v| v > 0.0));
        assert_eq!(ewo(&ramp, 5, 35, MaKind::Simple).first_defined(), Some(34));
    }

    #[test]
    fn pct_change_max_examples() {
        let up = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(rolling_pct_change_max(&up, 5).values[5], Some(5.0));
        assert!(defined(&rolling_pct_change_max(&[3.0; 9], 5)).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hourly_values_appear_at_hour_close() {
        let ts: Vec<i64> = (0..(4 * 60)).map(|k| k as i64 * 60_000).collect();
        let close: Vec<f64> = (0..ts.len()).map(|k| 100.0 + (k / 60) as f64).collect();
        let h = hourly_pct_change_max(&ts, &close, 1);
        assert_eq!(h.values[119], Some(0.01));
        assert_eq!(h.values[118], None);
        assert_eq!(h.values[120], Some(0.01));
        assert_eq!(h.values[179], Some(1.0 / 101.0));
    }

    #[test]
    fn rolling_low_shift() {
        let lows = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert_eq!(rolling_low(&lows, 5, 0).values[4], Some(1.0));
        let shifted = rolling_low(&[5.0, 4.0, 3.0, 2.0, 1.0, 9.0], 5, 1);
        assert_eq!(shifted.values[5], Some(1.0));
        assert_eq!(shifted.values[4], None);
        assert_eq!(rolling_low(&lows, 2, 1).values[2], Some(4.0));
    }

    #[test]
    fn safe_dump_boundary() {
        assert!(defined(&safe_dump(&[Some(0.0); 4], 0.05)).iter().all(|&v| v == 1.0));
        assert_eq!(safe_dump(&[Some(0.2)], 0.05).values, vec![Some(0.0)]);
        assert_eq!(safe_dump(&[Some(0.05)], 0.05).values, vec![Some(1.0)]);
        assert_eq!(safe_dump(&[None], 0.05).values, vec![None]);
    }

    #[test]
    fn vwap_examples() {
        let h = [11.0, 13.0, 12.0];
        let l = [9.0, 10.0, 9.0];
        let c = [10.0, 13.0, 9.0];
        let tp = [10.0, 12.0, 10.0];
        assert_eq!(vwap(&h, &l, &c, &[2.0; 3], 1).values, tp.iter().map(|&x| Some(x)).collect::<Vec<_>>());
        assert_eq!(vwap(&h, &l, &c, &[2.0; 3], 3).values[2], Some(32.0 / 3.0));
        let z = vwap(&h, &l, &c, &[0.0; 3], 2);
        assert_eq!(z.values[1], None);
        assert_eq!(z.flagged, vec![1, 2]);
    }
}
