//! Lightning strikes: one to three isolated sub-cycle disturbances.
//! Only consulted when capacitor switching and melted fuse both came
//! back negative; more than five isolated disturbances rejects the
//! event, and four or five leaves it unidentified but flagged.

use super::{cluster_indices, Detection, Event, PhaseSet, RecordContext};
use crate::dsp::{self, Phase};

pub fn detect_lightning(ctx: &RecordContext<'_>) -> Vec<Detection> {
    let cfg = ctx.cfg;
    let nc = ctx.nc;
    let hc = ((nc / 2.0).round() as usize).max(1);
    let mut out = Vec::new();

    for phase in Phase::ALL {
        let v = ctx.record.voltage(phase);
        let vq = ctx.nominal(phase).v_peak_nom;
        if vq <= 0.0 {
            continue;
        }
        let Ok(res) = dsp::first_cycle_residual(v, nc) else { continue };
        let exceed: Vec<usize> = res
            .iter()
            .enumerate()
            .filter(|(_, r)| r.abs() / vq > cfg.tau_delta)
            .map(|(k, _)| k)
            .collect();
        if exceed.is_empty() {
            continue;
        }
        let strikes = cluster_indices(&exceed, hc);
        let count = strikes.len();
        if count as f64 > cfg.lightning_max_strikes {
            continue;
        }
        let longest = strikes.iter().map(|(s, e)| e - s + 1).max().unwrap_or(0) as f64;
        if longest > cfg.lightning_max_dur * nc {
            continue;
        }
        if count as f64 <= cfg.lightning_id_strikes {
            out.push(
                Detection::new(Event::Lightning, PhaseSet::single(phase))
                    .with("strike_count", count as f64)
                    .with("longest_duration_s", longest / ctx.fs),
            );
        } else {
            // Four or five isolated strikes: behavior is unspecified, so
            // report no identification but surface the ambiguity.
            out.push(
                Detection::new(Event::None, PhaseSet::single(phase))
                    .with("ambiguous_strike_count", count as f64),
            );
        }
    }
    out
}
