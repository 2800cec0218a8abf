//! Stream and voting invariants checked against independent batch implementations.

mod common;

use gazeprompt_core::behavior::{identify_line, landing_vote, tally_votes, BehaviorEngine, BehaviorKind};
use gazeprompt_core::config::EngineConfig;
use gazeprompt_core::geometry::ScreenGeometry;
use gazeprompt_core::layout::{Background, LineBox, PageLayout, WordBox};
use gazeprompt_core::signal::detect_fixations;
use gazeprompt_core::{Fixation, GazeSample, Micros};
use proptest::prelude::*;

/// Batch I-DT over the whole stream: segment on validity gaps, median per segment,
/// drop velocity outliers, then grow dispersion windows.
fn offline_fixations(samples: &[GazeSample], cfg: &EngineConfig, g: &ScreenGeometry) -> (Vec<Fixation>, u64) {
    let valid: Vec<GazeSample> = samples
        .iter()
        .filter(|s| s.valid && s.x.is_finite() && s.y.is_finite())
        .map(|s| GazeSample { x: s.x.clamp(0.0, g.width_px as f64), y: s.y.clamp(0.0, g.height_px as f64), ..*s })
        .collect();
    let mut segments: Vec<Vec<GazeSample>> = Vec::new();
    for s in valid {
        match segments.last_mut() {
            Some(seg) if s.t - seg.last().unwrap().t <= cfg.blink_merge_us => seg.push(s),
            _ => segments.push(vec![s]),
        }
    }
    let w = cfg.median_window;
    let half = w / 2;
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[half]
    };
    let mut fixations = Vec::new();
    let mut last: Option<GazeSample> = None;
    let mut outliers = 0;
    for seg in segments {
        let n = seg.len() as isize;
        let mut window: Vec<GazeSample> = Vec::new();
        let close = |window: &mut Vec<GazeSample>, out: &mut Vec<Fixation>| {
            if window.len() >= 2 && window.last().unwrap().t - window[0].t >= cfg.min_fixation_duration_us {
                let k = window.len() as f64;
                out.push(Fixation {
                    cx: window.iter().map(|s| s.x).sum::<f64>() / k,
                    cy: window.iter().map(|s| s.y).sum::<f64>() / k,
                    onset: window[0].t,
                    duration: window.last().unwrap().t - window[0].t,
                    sample_count: window.len() as u32,
                });
            }
            window.clear();
        };
        for i in 0..n {
            let pick = |axis: fn(&GazeSample) -> f64| {
                let mut v: Vec<f64> =
                    (i - half as isize..=i + half as isize).map(|j| axis(&seg[j.clamp(0, n - 1) as usize])).collect();
                median(&mut v)
            };
            let s = GazeSample { x: pick(|s| s.x), y: pick(|s| s.y), ..seg[i as usize] };
            if let Some(p) = last {
                let deg = g.offset_to_degrees(s.x - p.x, s.y - p.y);
                if deg / ((s.t - p.t) as f64 / 1e6) > cfg.max_angular_velocity_deg_s {
                    outliers += 1;
                    continue;
                }
            }
            last = Some(s);
            let mut xs: Vec<f64> = window.iter().map(|w| w.x).chain([s.x]).collect();
            let mut ys: Vec<f64> = window.iter().map(|w| w.y).chain([s.y]).collect();
            xs.sort_by(f64::total_cmp);
            ys.sort_by(f64::total_cmp);
            let dispersion = (xs[xs.len() - 1] - xs[0]) + (ys[ys.len() - 1] - ys[0]);
            if dispersion > cfg.fixation_dispersion_px {
                close(&mut window, &mut fixations);
            }
            window.push(s);
        }
        close(&mut window, &mut fixations);
    }
    (fixations, outliers)
}

/// Clusters of samples with jitter, lost samples, spikes and tracking gaps.
fn stream() -> impl Strategy<Value = Vec<GazeSample>> {
    let cluster = (
        0.0f64..1920.0,
        0.0f64..1200.0,
        1usize..40,
        0.0f64..25.0,
        prop::collection::vec((any::<u8>(), -1.0f64..1.0, -1.0f64..1.0), 40),
    );
    prop::collection::vec((cluster, 0u64..4), 1..25).prop_map(|clusters| {
        let mut t: Micros = 1_000;
        let mut out = Vec::new();
        for ((x, y, len, spread, noise), gap) in clusters {
            for &(roll, nx, ny) in noise.iter().take(len) {
                let s = match roll {
                    0..=9 => GazeSample::invalid(t),
                    10..=13 => GazeSample::new(t, x + 700.0 * nx.signum(), y + 500.0 * ny.signum()),
                    _ => GazeSample::new(t, x + spread * nx, y + spread * ny),
                };
                out.push(s);
                t += 8_333;
            }
            t += [0, 8_333 * 4, 90_000, 400_000][gap as usize];
        }
        out
    })
}

fn lines_layout(tops: &[f64], h: f64) -> PageLayout {
    let lines: Vec<LineBox> = tops
        .iter()
        .enumerate()
        .map(|(i, &top)| LineBox { line_id: i, top, bottom: top + h, left: 100.0, right: 1700.0 })
        .collect();
    PageLayout::new(0, lines, Vec::new(), Background::Light)
}

fn quantized(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    ((lo * 4.0) as i64..(hi * 4.0) as i64).prop_map(|q| q as f64 / 4.0)
}

fn layout_strategy() -> impl Strategy<Value = PageLayout> {
    (1usize..9, prop::collection::vec(0u32..40, 8), 20u32..60).prop_map(|(n, gaps, h)| {
        let h = f64::from(h);
        let mut top = 50.0;
        let tops: Vec<f64> = (0..n)
            .map(|i| {
                let t = top;
                top += h + f64::from(gaps[i]);
                t
            })
            .collect();
        lines_layout(&tops, h)
    })
}

fn fix(cx: f64, cy: f64, onset: Micros, duration: Micros) -> Fixation {
    Fixation { cx, cy, onset, duration, sample_count: 2 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn streaming_equals_batch_and_conserves_samples(samples in stream()) {
        let cfg = EngineConfig::default();
        let g = ScreenGeometry::study_display();
        let (online, counters) = detect_fixations(&samples, &cfg, g).unwrap();
        let (offline, outliers) = offline_fixations(&samples, &cfg, &g);
        prop_assert_eq!(&online, &offline);
        prop_assert_eq!(counters.outliers, outliers);
        prop_assert_eq!(counters.total, samples.len() as u64);
        prop_assert_eq!(counters.total, counters.invalid + counters.outliers + counters.in_fixations + counters.discarded);
        for f in &online {
            prop_assert!(f.duration >= cfg.min_fixation_duration_us && f.sample_count >= 2);
        }
        for pair in online.windows(2) {
            prop_assert!(pair[0].end() < pair[1].onset);
        }
    }

    #[test]
    fn weight_law_and_nearest_line(layout in layout_strategy(), y in 0.0f64..800.0) {
        let v = landing_vote(&fix(500.0, y, 0, 200_000), &layout).unwrap();
        prop_assert!((v.weight * (1.0 + v.normalized_distance.abs()) - 1.0).abs() <= 1e-12);
        prop_assert!(v.weight > 0.0 && v.weight <= 1.0);
        let chosen = (y - layout.lines[v.landing_line].mid()).abs();
        prop_assert!(layout.lines.iter().all(|l| chosen <= (y - l.mid()).abs()));
    }

    #[test]
    fn identify_line_is_translation_invariant(
        layout in layout_strategy(),
        ys in prop::collection::vec(quantized(0.0, 800.0), 1..5),
        dx in quantized(-300.0, 300.0),
        dy in quantized(-300.0, 300.0),
    ) {
        let fixations: Vec<Fixation> = ys.iter().enumerate().map(|(i, &y)| fix(400.0, y, i as u64 * 300_000, 200_000)).collect();
        let mut moved = layout.scrolled(dy);
        for l in &mut moved.lines {
            l.left += dx;
            l.right += dx;
        }
        let shifted: Vec<Fixation> = fixations.iter().map(|f| f.translated(dx, dy)).collect();
        prop_assert_eq!(identify_line(&fixations, &layout).unwrap(), identify_line(&shifted, &moved).unwrap());
    }

    #[test]
    fn moving_toward_a_line_never_lowers_its_total(
        layout in layout_strategy(),
        ys in prop::collection::vec(0.0f64..800.0, 1..4),
        which in any::<prop::sample::Index>(),
        target in any::<prop::sample::Index>(),
        step in 0.01f64..1.0,
    ) {
        let fixations: Vec<Fixation> = ys.iter().enumerate().map(|(i, &y)| fix(400.0, y, i as u64 * 300_000, 200_000)).collect();
        let line = target.get(&layout.lines).line_id;
        let i = which.index(fixations.len());
        let mut moved = fixations.clone();
        let mid = layout.lines[line].mid();
        moved[i].cy += step * (mid - moved[i].cy);
        let before = tally_votes(&fixations, &layout).unwrap().total(line);
        let after = tally_votes(&moved, &layout).unwrap().total(line);
        prop_assert!(after >= before - 1e-12, "{} -> {}", before, after);
    }

    #[test]
    fn difficult_word_fires_at_most_once_per_pass(
        script in prop::collection::vec((0usize..3, 50u64..700), 1..40),
    ) {
        let cfg = EngineConfig::default();
        let mut e = BehaviorEngine::new(cfg.clone(), word_layout());
        let mut t = 0;
        let mut passes: Vec<(usize, Vec<Micros>, usize)> = Vec::new();
        for (word, ms) in script {
            let d = ms * 1000;
            let centre = 200.0 + 300.0 * word as f64 + if passes.last().is_some_and(|p| p.0 == word) { 20.0 } else { 0.0 };
            let out = e.assess(&fix(centre, 120.0, t, d), 0).unwrap();
            t += d + 40_000;
            let fired = out.events.iter().filter(|ev| ev.kind == BehaviorKind::DifficultWord).count();
            match passes.last_mut() {
                Some(p) if p.0 == word => {
                    p.1.push(d);
                    p.2 += fired;
                }
                _ => passes.push((word, vec![d], fired)),
            }
        }
        for (_, durations, fired) in &passes {
            prop_assert!(*fired <= 1);
            let quiet = durations[0] <= cfg.dw_first_fixation_us
                && durations.len() - 1 <= cfg.dw_refixations as usize
                && durations.iter().sum::<u64>() <= cfg.dw_total_us;
            if quiet {
                prop_assert_eq!(*fired, 0);
            }
        }
    }
}

/// One line, three wide content words centred at x = 200, 500, 800.
fn word_layout() -> PageLayout {
    let line = LineBox { line_id: 0, top: 100.0, bottom: 140.0, left: 50.0, right: 950.0 };
    let words = (0..3)
        .map(|i| WordBox {
            word_id: i,
            line_id: 0,
            left: 80.0 + 300.0 * i as f64,
            right: 320.0 + 300.0 * i as f64,
            text: format!("word{i}"),
            function_word: false,
        })
        .collect();
    PageLayout::new(0, vec![line], words, Background::Light)
}

#[test]
fn replayed_fixation_log_rederives_the_same_events() {
    use gazeprompt_core::simulator::{simulate, ReaderProfile};
    let layout = common::page(7, 9);
    let sim = simulate(&layout, &ReaderProfile { seed: 7, noise_sd_px: 4.0, ..ReaderProfile::default() });
    let live = common::run(&sim, &layout);
    let mut e = BehaviorEngine::new(EngineConfig::default(), layout.clone());
    let replayed: Vec<_> = live.records.iter().flat_map(|r| e.assess(&r.fixation, 0).unwrap().events).collect();
    assert_eq!(replayed, live.behavior);
}
