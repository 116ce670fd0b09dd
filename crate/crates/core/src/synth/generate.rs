use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, LogNormal, Normal};
use rayon::prelude::*;

use super::config::{gains, GeneratorConfig, SamplingMode};
use super::truth::{derive_truth, TruthRecord};
use crate::classify::{LabelSource, LabeledUtterance, NatureLabel, RecipientLabel, STUDENT_A, STUDENT_B};
use crate::corpus::{
    canonical_pair_id, ElStatus, Gender, Race, Roster, SessionRecord, StudentRecord, Utterance, AXES,
};
use crate::studies::corpus_digest;
use crate::{Error, Result};

const CONTENT: [&str; 12] = [
    "let's sound out this word",
    "what sound does this letter make",
    "read the next sentence for me",
    "can you find the word that rhymes",
    "point to the capital letter",
    "try the first word again",
    "what comes after that part",
    "say it slowly with me",
    "look at the picture up top",
    "spell the word out loud",
    "how many syllables do you hear",
    "what is the story mostly about",
];

const RELATIONSHIP: [&str; 7] = [
    "awesome job on that one",
    "what did you do this weekend",
    "did you have a fun birthday",
    "I am so proud of you today",
    "what is your favorite animal",
    "how are you doing this morning",
    "good morning, nice to see you",
];

const MANAGEMENT: [&str; 7] = [
    "please unmute your microphone now",
    "put your headphones back on",
    "can you hear me okay",
    "sit down in your chair please",
    "let's focus on the book again",
    "go to the next page now",
    "click the green arrow please",
];

const RECIPIENTS: [RecipientLabel; 4] = [
    RecipientLabel::StudentA,
    RecipientLabel::StudentB,
    RecipientLabel::Both,
    RecipientLabel::OneOfStudents,
];

/// Generated transcripts, roster, gold labels and planted truth.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub sessions: Vec<SessionRecord>,
    pub roster: Roster,
    /// One gold label per utterance, including those later trimmed.
    pub labels: Vec<LabeledUtterance>,
    pub truth: TruthRecord,
}

/// Per-key generator: the stream depends only on the seed and the key,
/// never on scheduling.
pub(crate) fn keyed_rng(seed: u64, key: &str) -> ChaCha8Rng {
    // FNV-1a, then one splitmix64 round with the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

fn uniform_pm(rng: &mut ChaCha8Rng, half_width: f64) -> f64 {
    if half_width > 0.0 {
        rng.random_range(-half_width..=half_width)
    } else {
        0.0
    }
}

struct Pair {
    students: [StudentRecord; 2],
    tilt_pp: f64,
}

fn draw_pair(config: &GeneratorConfig, index: usize) -> Result<Pair> {
    let mut rng = keyed_rng(config.seed, &format!("pair/{index}"));
    let weights = WeightedIndex::new(config.grades.iter().map(|g| g.weight))
        .map_err(|e| Error::InfeasibleConfig(format!("grade weights: {e}")))?;
    let grade = config.grades[weights.sample(&mut rng)];
    let score = Normal::new(grade.mean, grade.sd)
        .map_err(|e| Error::InfeasibleConfig(format!("grade {}: {e}", grade.grade.as_str())))?;
    let m = &config.marginals;
    let mut draw = |slot: usize, avoid: Option<f64>| {
        let gender = if rng.random_bool(m.p_female) { Gender::Female } else { Gender::Male };
        let race = if rng.random_bool(m.p_black) { Race::Black } else { Race::NonBlack };
        let el_status = if rng.random_bool(m.p_el) { ElStatus::El } else { ElStatus::NonEl };
        let raw = loop {
            let v = (score.sample(&mut rng) * 10.0).round() / 10.0;
            if Some(v) != avoid {
                break v;
            }
        };
        StudentRecord {
            student_id: format!("st{:06}", 2 * index + slot),
            gender,
            race,
            race_detail: None,
            el_status,
            grade: grade.grade,
            baseline_raw: raw,
            baseline_z: None,
        }
    };
    let a = draw(0, None);
    let b = draw(1, Some(a.baseline_raw));
    let tilt_pp = uniform_pm(&mut rng, config.noise.pair_tilt_pp);
    Ok(Pair {
        students: [a, b],
        tilt_pp,
    })
}

/// Target duration share of each (recipient, nature) cell, in
/// `RECIPIENTS` × `NatureLabel::ALL` order.
fn session_targets(config: &GeneratorConfig, pair: &Pair, rng: &mut ChaCha8Rng) -> [f64; 12] {
    let [a, b] = &pair.students;
    let flags = |s: &StudentRecord| AXES.map(|axis| axis.is_focal(s));
    let a_lower = a.baseline_raw < b.baseline_raw;
    let (base_a, base_b, lambda, one_of) = config.targets_pp(flags(a), flags(b), a_lower);
    let noise = &config.noise;
    let base_a = base_a + pair.tilt_pp + uniform_pm(rng, noise.session_pp);
    let base_b = base_b - pair.tilt_pp + uniform_pm(rng, noise.session_pp);
    let one_of = one_of + uniform_pm(rng, noise.one_of_pp);
    let (gain_a, gain_b) = gains(lambda, a_lower);
    let both = 100.0 - base_a - base_b - gain_a - gain_b - one_of;
    let e = &config.effects;
    let mut t = [0.0; 12];
    for (j, nature) in NatureLabel::ALL.into_iter().enumerate() {
        let pi = e.nature_base.get(nature);
        let rho = e.nature_bonus.get(nature);
        t[j] = pi * base_a + rho * gain_a;
        t[3 + j] = pi * base_b + rho * gain_b;
        t[6 + j] = pi * both;
        t[9 + j] = pi * one_of;
    }
    for v in &mut t {
        // Feasibility is checked up front; this only absorbs rounding.
        *v = if *v < 1e-9 { 0.0 } else { *v / 100.0 };
    }
    let total: f64 = t.iter().sum();
    t.map(|v| v / total)
}

/// Largest-remainder counts, at least one per positive cell.
fn exact_counts(targets: &[f64; 12], n: usize) -> Vec<usize> {
    let positive = targets.iter().filter(|t| **t > 0.0).count();
    let spare = n.saturating_sub(positive) as f64;
    let mut counts: Vec<usize> = targets
        .iter()
        .map(|&t| if t > 0.0 { 1 + (spare * t).floor() as usize } else { 0 })
        .collect();
    let mut order: Vec<usize> = (0..targets.len()).filter(|&c| targets[c] > 0.0).collect();
    order.sort_by(|&i, &j| {
        let fi = spare * targets[i] - (spare * targets[i]).floor();
        let fj = spare * targets[j] - (spare * targets[j]).floor();
        fj.total_cmp(&fi).then(i.cmp(&j))
    });
    let assigned: usize = counts.iter().sum();
    for &c in order.iter().take(n.max(positive) - assigned) {
        counts[c] += 1;
    }
    counts
}

fn utterance_text(rng: &mut ChaCha8Rng, name_rate: f64, recipient: RecipientLabel, nature: NatureLabel) -> String {
    let pool: &[&str] = match nature {
        NatureLabel::Content => &CONTENT,
        NatureLabel::Relationship => &RELATIONSHIP,
        NatureLabel::Management => &MANAGEMENT,
    };
    let phrase = pool[rng.random_range(0..pool.len())];
    let named = rng.random_bool(name_rate);
    match recipient {
        RecipientLabel::StudentA if named => format!("{STUDENT_A}, {phrase}."),
        RecipientLabel::StudentB if named => format!("{STUDENT_B}, {phrase}."),
        RecipientLabel::Both if named => format!("{STUDENT_A} and {STUDENT_B}, {phrase}."),
        RecipientLabel::Both => format!("Both of you, {phrase}."),
        RecipientLabel::OneOfStudents => format!("Who knows, {phrase}?"),
        _ => format!("Okay, {phrase}."),
    }
}

fn draw_session(
    config: &GeneratorConfig,
    pair_index: usize,
    k: usize,
    pair: &Pair,
) -> Result<(SessionRecord, Vec<LabeledUtterance>)> {
    let session_id = format!("s{pair_index:05}-{k}");
    let mut rng = keyed_rng(config.seed, &session_id);
    let [a, b] = &pair.students;
    let targets = session_targets(config, pair, &mut rng);

    let planned = config.planned_duration_s;
    let duration = if rng.random_bool(config.short_session_rate) {
        planned * rng.random_range(0.2..0.49)
    } else {
        let d = Normal::new(config.session_duration_s.mean, config.session_duration_s.sd)
            .map_err(|e| Error::InfeasibleConfig(format!("session duration: {e}")))?;
        d.sample(&mut rng).max(planned / 2.0 + 1.0)
    };
    let u = &config.utterances_per_session;
    let mut n = Normal::new(u.mean, u.sd)
        .map_err(|e| Error::InfeasibleConfig(format!("utterances per session: {e}")))?
        .sample(&mut rng)
        .round()
        .max(config.min_utterances as f64) as usize;

    let cells: Vec<usize> = match config.sampling {
        SamplingMode::Iid => {
            let w = WeightedIndex::new(targets)
                .map_err(|e| Error::InfeasibleConfig(format!("session targets: {e}")))?;
            (0..n).map(|_| w.sample(&mut rng)).collect()
        }
        SamplingMode::Exact => {
            let counts = exact_counts(&targets, n);
            let mut cells: Vec<usize> =
                counts.iter().enumerate().flat_map(|(c, &m)| std::iter::repeat_n(c, m)).collect();
            cells.shuffle(&mut rng);
            n = cells.len();
            cells
        }
    };

    let length = LogNormal::new(config.utterance_median_s.ln(), config.utterance_log_sd)
        .map_err(|e| Error::InfeasibleConfig(format!("utterance duration: {e}")))?;
    let mut lengths: Vec<f64> = (0..n).map(|_| length.sample(&mut rng).clamp(1.0, 60.0)).collect();
    if config.sampling == SamplingMode::Exact {
        let total: f64 = lengths.iter().sum();
        let mut per_cell = [0.0; 12];
        for (c, l) in cells.iter().zip(&lengths) {
            per_cell[*c] += l;
        }
        for (c, l) in cells.iter().zip(lengths.iter_mut()) {
            *l *= targets[*c] * total / per_cell[*c];
        }
    }
    let talk: f64 = lengths.iter().sum();
    if talk > 0.9 * duration {
        let f = 0.9 * duration / talk;
        lengths.iter_mut().for_each(|l| *l *= f);
    }
    let talk: f64 = lengths.iter().sum();
    let mut gaps: Vec<f64> = (0..n.saturating_sub(1)).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let gap_total: f64 = gaps.iter().sum();
    let silence = duration - talk;
    gaps.iter_mut().for_each(|g| *g *= silence / gap_total);

    let delay = if config.max_entry_delay_s > 0.0 {
        rng.random_range(0.0..config.max_entry_delay_s)
    } else {
        0.0
    };
    let (entry_a_s, entry_b_s) = if rng.random_bool(0.5) { (0.0, delay) } else { (delay, 0.0) };
    let first_present = if entry_a_s == 0.0 { RecipientLabel::StudentA } else { RecipientLabel::StudentB };

    let mut utterances = Vec::with_capacity(n + 3);
    let mut labels = Vec::with_capacity(n + 3);
    let push = |utterances: &mut Vec<Utterance>,
                    labels: &mut Vec<LabeledUtterance>,
                    start_s: f64,
                    end_s: f64,
                    text: String,
                    recipient: RecipientLabel,
                    nature: NatureLabel| {
        let index = utterances.len();
        utterances.push(Utterance { index, start_s, end_s, text });
        labels.push(LabeledUtterance::new(session_id.clone(), index, recipient, nature, LabelSource::Gold));
    };

    // Greetings to the first student before the second one joins.
    let warmup = ((delay / 15.0).floor() as usize).min(3);
    for w in 0..warmup {
        let start = delay * w as f64 / warmup as f64;
        let end = start + (delay / warmup as f64) * 0.5;
        let text = utterance_text(&mut rng, config.name_rate, first_present, NatureLabel::Relationship);
        push(&mut utterances, &mut labels, start, end, text, first_present, NatureLabel::Relationship);
    }
    let mut t = delay;
    for (i, (&cell, &len)) in cells.iter().zip(&lengths).enumerate() {
        let recipient = RECIPIENTS[cell / 3];
        let nature = NatureLabel::ALL[cell % 3];
        let text = utterance_text(&mut rng, config.name_rate, recipient, nature);
        push(&mut utterances, &mut labels, t, t + len, text, recipient, nature);
        t += len + gaps.get(i).copied().unwrap_or(0.0);
    }

    let student_b_id = if rng.random_bool(config.unmatched_rate) {
        format!("{}-unlinked", b.student_id)
    } else {
        b.student_id.clone()
    };
    let session = SessionRecord {
        session_id: session_id.clone(),
        pair_id: canonical_pair_id(&a.student_id, &b.student_id),
        student_a_id: a.student_id.clone(),
        student_b_id,
        student_a: None,
        student_b: None,
        planned_duration_s: planned,
        entry_a_s,
        entry_b_s,
        utterances,
        exclusion: None,
    };
    Ok((session, labels))
}

type PairDraw = (Vec<StudentRecord>, Vec<(SessionRecord, Vec<LabeledUtterance>)>);

/// Draws a corpus. Output depends only on the configuration; generation is
/// parallel over pairs.
pub fn generate(config: &GeneratorConfig) -> Result<SyntheticCorpus> {
    config.validate()?;
    let per_pair: Vec<PairDraw> = (0..config.n_pairs)
        .into_par_iter()
        .map(|p| {
            let pair = draw_pair(config, p)?;
            let sessions = (0..config.sessions_per_pair)
                .map(|k| draw_session(config, p, k, &pair))
                .collect::<Result<Vec<_>>>()?;
            Ok((pair.students.to_vec(), sessions))
        })
        .collect::<Result<_>>()?;
    let mut students = Vec::with_capacity(2 * config.n_pairs);
    let mut sessions = Vec::with_capacity(config.n_pairs * config.sessions_per_pair);
    let mut labels = Vec::new();
    for (st, ss) in per_pair {
        students.extend(st);
        for (s, l) in ss {
            sessions.push(s);
            labels.extend(l);
        }
    }
    let roster = Roster::new(students)?;
    let truth = derive_truth(config, &corpus_digest(&sessions));
    Ok(SyntheticCorpus {
        sessions,
        roster,
        labels,
        truth,
    })
}
