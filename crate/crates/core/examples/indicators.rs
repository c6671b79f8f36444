//! The indicator set on a synthetic minute series.
//!
//!     cargo run --release --example indicators

use sepindex::features::indicators as ind;
use sepindex::features::indicators::MaKind;
use sepindex::synth::persistent_trend;

fn main() -> sepindex::Result<()> {
    let bars = persistent_trend(2_000, 0.7, 5)?;
    let (high, low, close, volume) = (bars.high(), bars.low(), bars.close(), bars.volume());
    let ts = bars.timestamps();
    let h1 = ind::hourly_pct_change_max(&ts, &close, 5);
    let rows = [
        ("ema_8", ind::ema(&close, 8)),
        ("ema_200", ind::ema(&close, 200)),
        ("cti_40", ind::cti(&close, 40)),
        ("crsi", ind::connors_rsi(&close, 3, 2, 100)),
        ("r_96", ind::williams_r(&high, &low, &close, 96)),
        ("roc", ind::roc(&close, 1)),
        ("rsi", ind::rsi(&close, 14)),
        ("cmf", ind::cmf(&high, &low, &close, &volume, 20)),
        ("t3", ind::t3(&close, 5, 0.7)),
        ("ewo", ind::ewo(&close, 5, 35, MaKind::Simple)),
        ("low_5", ind::rolling_low(&low, 5, 1)),
        ("safe_dump", ind::safe_dump(&h1.values, 0.01)),
        ("h1_prc_change_5", h1),
        ("weighted_price", ind::vwap(&high, &low, &close, &volume, 14)),
    ];
    println!("{:<16}{:>14}{:>14}{:>10}", "indicator", "first bar", "last value", "flagged");
    for (name, values) in &rows {
        let first = values.first_defined().map_or("-".into(), |i| i.to_string());
        let last = values.get(values.len() - 1).map_or("-".into(), |v| format!("{v:.4}"));
        println!("{name:<16}{first:>14}{last:>14}{:>10}", values.flagged.len());
    }
    Ok(())
}
