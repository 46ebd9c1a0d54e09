//! Capacitor bank switching: a sub-two-cycle voltage transient with a
//! quick depression toward zero followed by an overvoltage peak. The
//! three characteristic points are validated in order and the remaining
//! phases must show some disturbance at the same bank operation.

use super::{cluster_indices, half_cycle_peaks, Detection, Event, PhaseSet, RecordContext};
use crate::dsp::{self, Phase};

pub fn detect_capacitor_switching(ctx: &RecordContext<'_>) -> Option<Detection> {
    let cfg = ctx.cfg;
    let nc = ctx.nc;
    let hc = ((nc / 2.0).round() as usize).max(1);

    let mut fired = PhaseSet::EMPTY;
    let mut evidence: Option<(usize, usize, usize, f64)> = None;

    for trigger in Phase::ALL {
        let v = ctx.record.voltage(trigger);
        let vq = ctx.nominal(trigger).v_peak_nom;
        if vq <= 0.0 {
            continue;
        }
        let Ok(res) = dsp::first_cycle_residual(v, nc) else { continue };

        // Isolate the disturbance via the first-cycle comparison.
        let exceed: Vec<usize> = res
            .iter()
            .enumerate()
            .filter(|(_, r)| r.abs() / vq > cfg.tau_delta)
            .map(|(k, _)| k)
            .collect();
        if exceed.is_empty() {
            continue;
        }
        let clusters = cluster_indices(&exceed, hc);
        let (c_start, c_end) = *clusters
            .iter()
            .max_by(|a, b| (a.1 - a.0).cmp(&(b.1 - b.0)))
            .expect("nonempty clusters");
        let duration = (c_end - c_start + 1) as f64;
        if duration > cfg.cap_max_dur * nc {
            continue;
        }

        // Peak pattern: one small overvoltage with at most one large, or
        // exactly two large overvoltages in neighboring cycles.
        let peaks = half_cycle_peaks(v, nc);
        let over_lo =
            peaks.iter().filter(|(_, p)| p.abs() > cfg.cap_peak_lo * vq).count();
        let hi_peaks: Vec<usize> = peaks
            .iter()
            .filter(|(_, p)| p.abs() > cfg.cap_peak_hi * vq)
            .map(|(k, _)| *k)
            .collect();
        let pattern_a = over_lo >= 1 && hi_peaks.len() <= 1;
        let pattern_b = hi_peaks.len() == 2 && {
            let c0 = hi_peaks[0] / ctx.nominals[0].nc_samples().max(1);
            let c1 = hi_peaks[1] / ctx.nominals[0].nc_samples().max(1);
            c1.abs_diff(c0) <= 1
        };
        if !(pattern_a || pattern_b) {
            continue;
        }

        // t3: the overvoltage peak; the analysis window spans half a
        // cycle on either side of it.
        let (t3, _) = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("non-empty record");
        let w_lo = t3.saturating_sub(hc);
        let w_hi = (t3 + hc + 1).min(v.len());

        // t1: onset of the transient, from the residual derivative
        // inside the overvoltage window.
        let Ok(dres) = dsp::derivative(&res, 1) else { continue };
        let t1 = match (w_lo..w_hi.min(dres.len()))
            .find(|&k| dres[k].abs() > cfg.tau_o * vq)
        {
            Some(k) => k,
            None => continue,
        };
        if t1 >= t3 {
            continue;
        }

        // t2: lowest point after the voltage magnitude drops below the
        // depression floor, between t1 and t3.
        let t2 = match ((t1 + 1)..t3)
            .filter(|&k| v[k].abs() < cfg.cap_sag_floor * vq)
            .min_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
        {
            Some(k) => k,
            None => continue,
        };

        // Check (i): |V(t2)| < |V(t1)| < |V(t3)|.
        if !(v[t2].abs() < v[t1].abs() && v[t1].abs() < v[t3].abs()) {
            continue;
        }

        // Check (ii): the peak before the overvoltage sits roughly half a
        // cycle earlier.
        let prev_peak = peaks.iter().rev().find(|(k, _)| *k < t3).map(|(k, _)| *k);
        let Some(prev_peak) = prev_peak else { continue };
        let n_pb = (t3 - prev_peak) as f64;
        if (n_pb - nc / 2.0).abs() / nc >= cfg.tau_p {
            continue;
        }

        // Check (iii): the slope reverses at t1.
        let before = v[t1] - v[t1.saturating_sub(2)];
        let after_idx = (t1 + 2).min(t2);
        let after = v[after_idx] - v[t1];
        if before * after >= 0.0 {
            continue;
        }

        // The other two phases must show some disturbance as well.
        let others_disturbed = Phase::ALL.iter().filter(|&&p| p != trigger).all(|&p| {
            let vq_p = ctx.nominal(p).v_peak_nom;
            if vq_p <= 0.0 {
                return false;
            }
            match dsp::first_cycle_residual(ctx.record.voltage(p), nc) {
                Ok(r) => r.iter().any(|x| x.abs() / vq_p > cfg.tau_delta),
                Err(_) => false,
            }
        });
        if !others_disturbed {
            continue;
        }

        fired.insert(trigger);
        if evidence.is_none() {
            evidence = Some((t1, t2, t3, duration / nc));
        }
    }

    let (t1, t2, t3, duration) = evidence?;
    Some(
        Detection::new(Event::CapacitorSwitching, fired)
            .with("t1", t1 as f64)
            .with("t2", t2 as f64)
            .with("t3", t3 as f64)
            .with("duration_cycles", duration),
    )
}
