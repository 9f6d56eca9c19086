//! Detect, repair and evaluate WCAG2 accessibility violations in HTML, plus a
//! violation-conditioned negative-guidance decoder over pluggable models.

pub mod color;
pub mod corpus;
pub mod dom;
pub mod fix;
pub mod guidance;
pub mod metrics;
pub mod rules;
pub mod stats;
pub mod style;

pub use color::{contrast_ratio, parse_color, relative_luminance, repair_contrast, Rgb};
pub use dom::{DomTree, Element, Node, NodePath, XPath};
pub use fix::{fix_to_fixed_point, fix_violation, FixAction, FixConfig, FixOutcome};
pub use guidance::{
    assemble_prompt, decode, extract_html_segment, guided_distribution, guided_logits, Condition,
    ConditionalModel, GuidanceConfig, LogitVector, ToyModel,
};
pub use metrics::{
    evaluate, ssim, structural_accuracy, tree_edit_distance, violation_improvement, MetricsRecord,
    RasterImage,
};
pub use rules::{check_document, check_rule, RuleConfig, RuleId, Violation, ViolationReport};
pub use stats::{bonferroni, chi2_goodness, chi2_pairwise, cramers_v};
