pub mod action;
pub mod logic;
pub mod translate;
pub mod diagnosis;
pub mod world;
pub mod transform;
pub mod scenario;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/answer-sets.md")]
    mod answer_sets {}
    #[doc = include_str!("../../../book/src/action-descriptions.md")]
    mod action_descriptions {}
    #[doc = include_str!("../../../book/src/translation.md")]
    mod translation {}
    #[doc = include_str!("../../../book/src/diagnosis.md")]
    mod diagnosis {}
    #[doc = include_str!("../../../book/src/worlds.md")]
    mod worlds {}
    #[doc = include_str!("../../../book/src/transformations.md")]
    mod transformations {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
}
