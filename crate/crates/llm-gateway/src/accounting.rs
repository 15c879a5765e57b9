use genomagent_core::{Pricing, TokenUsage, Usd};
use num_rational::Ratio;

/// USD cost of `usage` under `pricing`, rounded half-to-even to six places.
///
/// Rates are per million tokens, so the exact cost in micro-dollars is
/// simply `tokens * rate`; only the final sum is rounded.
pub fn cost(usage: TokenUsage, pricing: &Pricing) -> Usd {
    let prompt = Ratio::from_integer(i128::from(usage.prompt_tokens)) * pricing.usd_per_million_prompt_tokens.ratio();
    let completion =
        Ratio::from_integer(i128::from(usage.completion_tokens)) * pricing.usd_per_million_completion_tokens.ratio();
    Usd::from_micros_ratio(prompt + completion)
}

/// Deterministic token estimate used by the scripted backend: one token
/// per four characters, rounded up.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}
