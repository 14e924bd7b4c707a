//! Generator for chest X-ray style reports.
//!
//! Reports are shuffled findings sentences plus an optional comparison line
//! and impression. Several sentence shapes put a subject several words before
//! a word that depends on it, separated by freely varying modifiers, so short
//! n-gram contexts miss the dependency and long ones are rarely seen twice.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HEART: &[&str] = &[
    "normal in size",
    "within normal limits",
    "mildly enlarged",
    "upper limits of normal in size",
    "stable in size",
    "normal",
];
const LUNGS: &[&str] = &[
    "clear",
    "clear bilaterally",
    "hyperexpanded",
    "well aerated",
    "clear without focal consolidation",
    "hypoinflated",
];
const FINDINGS: &[&str] = &[
    "pneumothorax",
    "pleural effusion",
    "focal consolidation",
    "focal airspace disease",
    "pulmonary edema",
    "large pleural effusion",
    "acute bony abnormality",
    "suspicious pulmonary opacity",
    "pneumonia",
    "effusion",
    "free air under the diaphragm",
    "displaced rib fracture",
    "mediastinal widening",
    "lobar consolidation",
];
const DEGREE: &[&str] = &[
    "mild",
    "minimal",
    "subtle",
    "patchy",
    "streaky",
    "small",
    "moderate",
    "faint",
    "ill defined",
    "scattered",
];
const OPACITY: &[&str] = &[
    "opacity",
    "atelectasis",
    "scarring",
    "airspace disease",
    "infiltrate",
    "density",
];
const SIDE: &[&str] = &["right", "left", "bilateral"];
const ZONE: &[&str] = &[
    "lung base",
    "upper lobe",
    "lower lobe",
    "midlung",
    "perihilar region",
    "lung apex",
];
const ADVERB: &[&str] = &[
    "again",
    "otherwise",
    "grossly",
    "overall",
    "currently",
    "stably",
    "still",
    "generally",
    "largely",
    "mostly",
    "essentially",
    "now",
    "once",
    "likely",
    "probably",
    "overtly",
    "clearly",
    "visibly",
    "relatively",
    "entirely",
    "fully",
    "broadly",
    "chiefly",
    "mainly",
    "roughly",
    "somewhat",
    "fairly",
    "quite",
    "rather",
    "slightly",
    "notably",
    "similarly",
    "radiographically",
    "structurally",
    "focally",
    "diffusely",
    "partially",
    "apparently",
    "reportedly",
    "technically",
];
const VERB: &[&str] = &["are", "appear", "remain", "look", "seem"];
const SINGULAR_VERB: &[&str] = &["is", "appears", "remains", "looks", "seems"];
const HEDGE: &[&str] = &[
    "today",
    "again",
    "overall",
    "grossly",
    "here",
    "now",
    "still",
    "as before",
    "on this study",
    "at this time",
    "on frontal view",
    "on lateral view",
    "radiographically",
    "once more",
    "in general",
    "as expected",
];

/// A subject whose completion is fixed once the subject is known.
struct Dependent {
    subject: &'static str,
    plural: bool,
    completion: &'static [&'static str],
}

const DEPENDENTS: &[Dependent] = &[
    Dependent {
        subject: "the osseous structures",
        plural: true,
        completion: &["intact", "without acute fracture"],
    },
    Dependent {
        subject: "the visualized bony structures",
        plural: true,
        completion: &["unremarkable", "without acute abnormality"],
    },
    Dependent {
        subject: "the soft tissues",
        plural: true,
        completion: &["normal", "within normal limits"],
    },
    Dependent {
        subject: "the pulmonary vasculature",
        plural: false,
        completion: &["prominent", "mildly prominent"],
    },
    Dependent {
        subject: "the trachea",
        plural: false,
        completion: &["midline"],
    },
    Dependent {
        subject: "the thoracic aorta",
        plural: false,
        completion: &["tortuous", "calcified and tortuous"],
    },
    Dependent {
        subject: "the mediastinal contours",
        plural: true,
        completion: &["stable", "stable in appearance"],
    },
    Dependent {
        subject: "the hilar contours",
        plural: true,
        completion: &["symmetric", "symmetric and unremarkable"],
    },
    Dependent {
        subject: "the costophrenic angles",
        plural: true,
        completion: &["sharp", "sharp bilaterally"],
    },
    Dependent {
        subject: "the right hemidiaphragm",
        plural: false,
        completion: &["elevated", "mildly elevated"],
    },
];

/// Rare words that fall under any realistic minimum-count threshold.
fn rare_word(rng: &mut ChaCha8Rng) -> String {
    const ONSET: &[&str] = &["br", "cl", "pr", "st", "tr", "sp", "gl", "fl", "cr", "pl", "sk", "dr"];
    const VOWEL: &[&str] = &["a", "e", "i", "o", "u", "ei", "ou", "ia"];
    const CODA: &[&str] = &["nt", "sis", "tic", "lar", "mal", "oid", "ine", "ous", "al", "ic"];
    let mut w = String::new();
    for _ in 0..rng.random_range(2..4) {
        w.push_str(ONSET.choose(rng).unwrap());
        w.push_str(VOWEL.choose(rng).unwrap());
    }
    w.push_str(CODA.choose(rng).unwrap());
    w
}

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).unwrap()
}

fn dependent(rng: &mut ChaCha8Rng) -> String {
    let d = DEPENDENTS.choose(rng).unwrap();
    let verb = pick(rng, if d.plural { VERB } else { SINGULAR_VERB });
    // Two free modifiers sit between the subject and its completion.
    format!(
        "{} {} {} {} {}",
        d.subject,
        verb,
        pick(rng, ADVERB),
        pick(rng, ADVERB),
        pick(rng, d.completion)
    )
}

fn sentence(rng: &mut ChaCha8Rng, kind: usize) -> String {
    match kind {
        0 => format!("the heart is {}", pick(rng, HEART)),
        1 => format!("heart size is {}", pick(rng, HEART)),
        2 => format!("the lungs are {}", pick(rng, LUNGS)),
        3 => format!("there is no {}", pick(rng, FINDINGS)),
        4 => format!("no {} or {}", pick(rng, FINDINGS), pick(rng, FINDINGS)),
        5 => format!(
            "{} {} in the {} {}",
            pick(rng, DEGREE),
            pick(rng, OPACITY),
            pick(rng, SIDE),
            pick(rng, ZONE)
        ),
        6 => format!("the cardiomediastinal silhouette is {}", pick(rng, HEART)),
        7 => format!("no evidence of {}", pick(rng, FINDINGS)),
        8 => format!("{} {}", dependent(rng), pick(rng, HEDGE)),
        9 => format!(
            "degenerative changes of the {} spine",
            pick(rng, &["thoracic", "lumbar", "cervical"])
        ),
        10 => format!(
            "stable {} of the {} {}",
            pick(rng, OPACITY),
            pick(rng, SIDE),
            pick(rng, ZONE)
        ),
        11 => format!("there are {} {}", pick(rng, DEGREE), rare_word(rng)),
        _ => dependent(rng),
    }
}

fn comparison(rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..4) {
        0 => "comparison xxxx xxxx".into(),
        1 => format!(
            "comparison {}/{}/{}",
            rng.random_range(1..13),
            rng.random_range(1..29),
            rng.random_range(2005..2015)
        ),
        2 => "comparison none.".into(),
        _ => format!(
            "indication {} xxxx",
            pick(rng, &["chest pain", "shortness of breath", "cough", "fever"])
        ),
    }
}

fn impression(rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..5) {
        0 => "impression no acute cardiopulmonary abnormality.".into(),
        1 => "impression no acute cardiopulmonary disease.".into(),
        2 => format!(
            "impression {} {} in the {} {}, {}.",
            pick(rng, DEGREE),
            pick(rng, OPACITY),
            pick(rng, SIDE),
            pick(rng, ZONE),
            pick(rng, &["likely atelectasis", "possibly pneumonia", "likely scarring"])
        ),
        3 => "impression 1. no acute findings. 2. stable exam.".into(),
        _ => format!("impression {}.", dependent(rng)),
    }
}

/// `n` reports, one per string, reproducible for a seed.
pub fn reports(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut parts = Vec::new();
            if rng.random_bool(0.5) {
                parts.push(comparison(&mut rng));
            }
            let mut kinds: Vec<usize> = (0..13).collect();
            kinds.shuffle(&mut rng);
            let count = rng.random_range(3..7);
            for &k in &kinds[..count] {
                let mut s = sentence(&mut rng, k);
                s.push('.');
                parts.push(s);
            }
            if rng.random_bool(0.8) {
                parts.push(impression(&mut rng));
            }
            let mut text = parts.join(" ");
            if let Some(first) = text.get_mut(0..1) {
                first.make_ascii_uppercase();
            }
            text
        })
        .collect()
}
