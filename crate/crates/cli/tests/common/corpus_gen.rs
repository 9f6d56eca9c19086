//! Seeded synthetic pages with a known count of every rule's violations.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wcagfix::RuleId;

pub const SEED: u64 = 20_240_601;
pub const PAGES: usize = 50;

const NOUNS: &[&str] = &[
    "bicycle", "harbor", "garden", "lantern", "meadow", "violin", "tractor", "orchard", "glacier",
    "market",
];
const ADJECTIVES: &[&str] = &[
    "red", "quiet", "golden", "old", "misty", "busy", "small", "bright",
];
const WORDS: &[&str] = &[
    "the",
    "visitors",
    "walked",
    "along",
    "river",
    "while",
    "guides",
    "explained",
    "history",
    "of",
    "each",
    "building",
    "and",
    "pointed",
    "out",
    "details",
    "that",
    "most",
    "people",
    "miss",
    "on",
    "first",
    "visit",
    "to",
    "town",
    "center",
];

pub struct SyntheticPage {
    pub doc_id: String,
    pub html: String,
    pub expected: BTreeMap<RuleId, usize>,
}

fn sentence(rng: &mut ChaCha8Rng, words: usize) -> String {
    let mut out: Vec<&str> = (0..words).map(|_| *WORDS.choose(rng).unwrap()).collect();
    out[0] = "Visitors";
    out.join(" ") + "."
}

fn long_text(rng: &mut ChaCha8Rng) -> String {
    let total = rng.gen_range(70..=90);
    let first = 6;
    format!("{} {}", sentence(rng, first), sentence(rng, total - first))
}

fn generate_page(i: usize, rng: &mut ChaCha8Rng) -> SyntheticPage {
    let mut expected: BTreeMap<RuleId, usize> = RuleId::ALL.iter().map(|r| (*r, 0)).collect();
    let mut bump = |r: RuleId, n: usize| *expected.get_mut(&r).unwrap() += n;
    // every rule is forced on some pages; the rest is random
    let force = RuleId::ALL[i % 10];
    let on = |rng: &mut ChaCha8Rng, r: RuleId| r == force || rng.gen_bool(0.4);

    let lang = !on(rng, RuleId::HtmlLangExists);
    let title = !on(rng, RuleId::PageTitleExists);
    let main = !on(rng, RuleId::SkipMainExists);
    let stray = on(rng, RuleId::AriaContentInLandmark);
    let low_contrast = if on(rng, RuleId::TextContrastSufficient) {
        rng.gen_range(1..=3)
    } else {
        0
    };
    let images = if on(rng, RuleId::ImgAltValid) {
        rng.gen_range(1..=2)
    } else {
        0
    };
    let required = on(rng, RuleId::StyleColorMisuse);
    let videos = if on(rng, RuleId::CaptionTrackExists) {
        rng.gen_range(1..=2)
    } else {
        0
    };
    let svg = on(rng, RuleId::SvgGraphicsLabelled);
    let long_block = on(rng, RuleId::TextBlockHeading);

    bump(RuleId::HtmlLangExists, usize::from(!lang));
    bump(RuleId::PageTitleExists, usize::from(!title));
    bump(RuleId::SkipMainExists, usize::from(!main));
    // an unlandmarked container is itself a stray region
    bump(
        RuleId::AriaContentInLandmark,
        usize::from(stray) + usize::from(!main),
    );
    bump(RuleId::TextContrastSufficient, low_contrast);
    bump(RuleId::ImgAltValid, images);
    bump(RuleId::StyleColorMisuse, usize::from(required));
    bump(RuleId::CaptionTrackExists, videos);
    bump(RuleId::SvgGraphicsLabelled, usize::from(svg));
    bump(RuleId::TextBlockHeading, usize::from(long_block));

    let noun = NOUNS[i % NOUNS.len()];
    let mut body = Vec::new();
    body.push(format!("<h2>About the {noun}</h2>"));
    body.push(format!("<p>{}</p>", sentence(rng, 8)));
    let faint = [
        "<p style=\"color:#999999\">{}</p>",
        "<h2 style=\"color:#aaaaaa\">{}</h2>",
        "<p style=\"color:#555555;background-color:#222222\">{}</p>",
        "<p style=\"color:#6fa8dc\">{}</p>",
    ];
    for k in 0..low_contrast {
        let text = sentence(rng, 5);
        body.push(faint[(i + k) % faint.len()].replace("{}", &text));
    }
    for k in 0..images {
        let adj = ADJECTIVES.choose(rng).unwrap();
        let n = NOUNS.choose(rng).unwrap();
        body.push(format!(
            "<img src=\"images/{adj}-{n}-{k}.png\" width=\"320\">"
        ));
    }
    body.push("<img src=\"images/logo.png\" alt=\"Site logo\">".to_string());
    if required {
        body.push(format!(
            "<form><label for=\"email-{i}\" style=\"color:#cc0000\">Email</label><input id=\"email-{i}\" type=\"email\" required></form>"
        ));
    }
    for k in 0..videos {
        body.push(format!(
            "<video src=\"media/tour-{i}-{k}.mp4\" controls></video>"
        ));
    }
    if svg {
        body.push(format!(
            "<h3>Visitors per {noun}</h3><svg viewBox=\"0 0 40 20\"><rect width=\"12\" height=\"20\"/><rect x=\"16\" width=\"12\" height=\"9\"/></svg>"
        ));
    }
    if long_block {
        body.push(format!("<section><p>{}</p></section>", long_text(rng)));
    } else {
        body.push(format!(
            "<section><h3>Notes</h3><p>{}</p></section>",
            long_text(rng)
        ));
    }

    let container = if main {
        "main"
    } else {
        "div class=\"content\""
    };
    let close = if main { "main" } else { "div" };
    let mut html = String::from("<!DOCTYPE html>\n");
    html += if lang {
        "<html lang=\"en\">\n"
    } else {
        "<html>\n"
    };
    if title {
        html +=
            &format!("<head>\n<meta charset=\"utf-8\">\n<title>The {noun} page</title>\n</head>\n");
    } else {
        html += "<head>\n<meta charset=\"utf-8\">\n</head>\n";
    }
    html += "<body>\n";
    html += &format!("<header><h1>The {noun}</h1><nav><a href=\"/\">Home</a> <a href=\"/visit\">Visit</a></nav></header>\n");
    html += &format!("<{container}>\n{}\n</{close}>\n", body.join("\n"));
    if stray {
        html += &format!("<section><p>{}</p></section>\n", sentence(rng, 7));
    }
    html += "<footer><p>Open daily from nine to five.</p></footer>\n</body>\n</html>\n";

    SyntheticPage {
        doc_id: format!("page-{i:02}"),
        html,
        expected,
    }
}

pub fn generate() -> Vec<SyntheticPage> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..PAGES).map(|i| generate_page(i, &mut rng)).collect()
}

pub fn manifest(pages: &[SyntheticPage]) -> String {
    pages
        .iter()
        .map(|p| {
            format!(
                "{{\"doc_id\":\"{0}\",\"html_path\":\"{0}.html\"}}\n",
                p.doc_id
            )
        })
        .collect()
}

/// `doc_id rule count` lines for every non-zero expectation.
pub fn expected_table(pages: &[SyntheticPage]) -> String {
    let mut out = String::new();
    for p in pages {
        for (rule, n) in &p.expected {
            if *n > 0 {
                out += &format!("{} {} {}\n", p.doc_id, rule.slug(), n);
            }
        }
    }
    out
}
