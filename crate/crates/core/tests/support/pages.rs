//! Random pages mixing compliant markup with violations of every rule.

use proptest::prelude::*;

const BLOCKS: &[&str] = &[
    "<p>Short note.</p>",
    "<p style=\"color:#999\">Faint grey text on white.</p>",
    "<p style=\"color:#777;background-color:#333\">Grey on charcoal.</p>",
    "<h2 style=\"color:#aaa\">Pale heading</h2>",
    "<h2>Section title</h2><p>Plain paragraph under a heading.</p>",
    "<img src=\"images/red-bicycle.png\">",
    "<img src=\"x.png\" alt=\"\">",
    "<img src=\"cat.jpg\" alt=\"A cat\">",
    "<label style=\"color:#c00\" for=\"e\">Email</label><input id=\"e\" required>",
    "<label style=\"color:red\"><input name=\"q\" required> Query</label>",
    "<video src=\"media/tour.mp4\" controls></video>",
    "<video controls><track kind=\"captions\" src=\"a.vtt\"></video>",
    "<h3>Chart</h3><svg viewBox=\"0 0 10 10\"><rect width=\"5\" height=\"5\"/></svg>",
    "<svg aria-label=\"Logo\"><circle r=\"4\"/></svg>",
    "<section><p>one two three four five six seven eight nine ten eleven twelve thirteen fourteen fifteen sixteen seventeen eighteen nineteen twenty twentyone twentytwo twentythree twentyfour twentyfive twentysix twentyseven twentyeight twentynine thirty thirtyone thirtytwo thirtythree thirtyfour thirtyfive thirtysix thirtyseven thirtyeight thirtynine forty fortyone fortytwo fortythree fortyfour fortyfive fortysix fortyseven fortyeight fortynine fifty fiftyone fiftytwo fiftythree. Then more.</p></section>",
    "<div><span>Loose span</span> and text</div>",
    "<nav><a href=\"/\">Home</a></nav>",
    "<ul><li>one<li>two</ul>",
];

fn head(lang: bool, title: bool) -> String {
    let html = if lang { "<html lang=\"en\">" } else { "<html>" };
    let title = if title {
        "<head><title>Page</title></head>"
    } else {
        ""
    };
    format!("<!DOCTYPE html>{html}{title}")
}

pub fn page() -> impl Strategy<Value = String> {
    (
        any::<bool>(),
        any::<bool>(),
        any::<bool>(),
        prop::collection::vec(prop::sample::select(BLOCKS), 0..8),
        prop::collection::vec(prop::sample::select(BLOCKS), 0..3),
    )
        .prop_map(|(lang, title, main, inner, outer)| {
            let inner = inner.concat();
            let body = if main {
                format!("<header><h1>Site</h1></header><main>{inner}</main>")
            } else {
                format!("<div id=\"content\">{inner}</div>")
            };
            format!(
                "{}<body>{body}{}<footer>f</footer></body></html>",
                head(lang, title),
                outer.concat()
            )
        })
}
